#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    depmeas::bootstrap::replicate_rng(seed, 0xfeed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut prev: f64 = StandardNormal.sample(rng);
    prev /= (1.0 - phi * phi).sqrt();
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            prev = phi * prev + e;
            prev
        })
        .collect()
}

pub fn lag1_autocorrelation(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let den: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    let num: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

/// Random bivariate dataset from one of four families: linear, nonlinear,
/// heavy-tailed, deterministic regressor.
pub fn battery_dataset(rng: &mut ChaCha8Rng, index: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(12..60);
    let noise = rng.random_range(0.05..2.0);
    let slope = rng.random_range(-3.0..3.0);
    match index % 4 {
        0 => {
            let x = normals(rng, n);
            let e = normals(rng, n);
            let y = x.iter().zip(&e).map(|(a, b)| slope * a + noise * b).collect();
            (x, y)
        }
        1 => {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let e = normals(rng, n);
            let y = x
                .iter()
                .zip(&e)
                .map(|(a, b)| (slope * a).sin() + a * a + noise * b)
                .collect();
            (x, y)
        }
        2 => {
            let t = StudentT::new(2.0).unwrap();
            let x: Vec<f64> = (0..n).map(|_| t.sample(rng)).collect();
            let y = x.iter().map(|a| slope * a + noise * t.sample(rng)).collect();
            (x, y)
        }
        _ => {
            let x: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let e = normals(rng, n);
            let y = x
                .iter()
                .zip(&e)
                .map(|(a, b)| slope * (a / n as f64).powi(2) + noise * b)
                .collect();
            (x, y)
        }
    }
}

/// Double-double number: value = hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    pub fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }

    pub fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }

    pub fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(DD::new(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(DD::new(-q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo }.add(DD::new(q3))
    }

    pub fn abs(self) -> f64 {
        self.hi.abs()
    }
}

/// ₂F₁(a, b; c; z) by direct summation in double-double arithmetic, every
/// term formed from the previous one, for up to `max_terms` terms.
pub fn hyp2f1_brute(a: f64, b: f64, c: f64, z: f64, max_terms: usize) -> f64 {
    let (a, b, c, z) = (DD::new(a), DD::new(b), DD::new(c), DD::new(z));
    let mut term = DD::new(1.0);
    let mut sum = DD::new(1.0);
    for k in 0..max_terms {
        let kd = DD::new(k as f64);
        let num = a.add(kd).mul(b.add(kd)).mul(z);
        let den = c.add(kd).mul(kd.add(DD::new(1.0)));
        term = term.mul(num.div(den));
        sum = sum.add(term);
        if term.abs() < 1e-30 * sum.abs() && k > 10 {
            break;
        }
    }
    sum.hi + sum.lo
}
