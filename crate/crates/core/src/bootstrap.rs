//! Maximum-entropy bootstrap for dependent series and order-statistic
//! confidence intervals for r*.
//!
//! A replicate is built from the sorted series: midpoints between successive
//! order statistics bound n intervals, the outer two extended by the trimmed
//! mean of absolute first differences. Uniform draws are pushed through the
//! piecewise-linear quantile function of that density (interior intervals
//! shifted so each keeps the mean-preserving target
//! ¼x₍ₖ₋₁₎ + ½x₍ₖ₎ + ¼x₍ₖ₊₁₎), sorted, and written back in the rank order
//! of the original series. Replicates therefore keep the original ranks
//! exactly.
//!
//! In `bootstrap_rstar` the two columns are resampled separately, each
//! through its own quantile function but from the same set of uniform
//! draws, so identical columns give identical replicates. Pairing survives
//! only through the preserved ranks.
//!
//! Replicate ℓ draws from ChaCha stream ℓ of the master seed, so the
//! ensemble does not depend on evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gencorr;
use crate::kernelreg::PairedSample;
use crate::scalar::Scalar;
use crate::taraldsen::Tail;

pub const DEFAULT_REPLICATES: usize = 999;
pub const MIN_REPLICATES: usize = 99;
/// Largest share of replicates that may be dropped as degenerate.
pub const MAX_EXCLUDED_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MebootConfig {
    /// Trimming proportion for the tail-extension mean.
    pub trim: f64,
}

impl Default for MebootConfig {
    fn default() -> Self {
        Self { trim: 0.10 }
    }
}

/// Random stream for replicate `stream` of master seed `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean after dropping `floor(n · trim)` values from each end.
fn trimmed_mean<T: Scalar>(values: &mut [T], trim: f64) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    let cut = ((n as f64) * trim).floor() as usize;
    let kept = &values[cut.min((n - 1) / 2)..n - cut.min((n - 1) / 2)];
    kept.iter().copied().fold(T::zero(), |a, b| a + b) / T::from_usize_lossy(kept.len())
}

/// Precomputed quantile function of the maximum-entropy density.
struct MeDensity<T> {
    /// Stable argsort of the series.
    order: Vec<usize>,
    /// Interval bounds z₀ < z₁ < ... < zₙ (length n + 1).
    bounds: Vec<T>,
    /// Shift applied inside each interval (zero in the two tails).
    shift: Vec<T>,
}

impl<T: Scalar> MeDensity<T> {
    fn new(series: &[T], config: &MebootConfig) -> Result<Self> {
        let n = series.len();
        if n < 4 {
            return Err(Error::Degenerate(format!(
                "meboot needs at least 4 observations, got {n}"
            )));
        }
        if let Some(bad) = series.iter().find(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite value {bad}")));
        }
        if series.iter().all(|&v| v == series[0]) {
            return Err(Error::Degenerate("meboot on a constant series".into()));
        }
        if !(0.0..0.5).contains(&config.trim) {
            return domain(format!("trim must lie in [0, 0.5), got {}", config.trim));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| series[a].partial_cmp(&series[b]).expect("finite"));
        let xs: Vec<T> = order.iter().map(|&i| series[i]).collect();

        let mut diffs: Vec<T> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let tail = trimmed_mean(&mut diffs, config.trim);

        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let mut bounds = Vec::with_capacity(n + 1);
        bounds.push(xs[0] - tail);
        bounds.extend(xs.windows(2).map(|w| (w[0] + w[1]) * half));
        bounds.push(xs[n - 1] + tail);

        let mut shift = vec![T::zero(); n];
        for k in 1..n - 1 {
            let target = quarter * xs[k - 1] + half * xs[k] + quarter * xs[k + 1];
            shift[k] = target - half * (bounds[k] + bounds[k + 1]);
        }
        Ok(Self { order, bounds, shift })
    }

    fn quantile(&self, p: T) -> T {
        let n = self.order.len();
        let nf = T::from_usize_lossy(n);
        // Interval k covers (k/n, (k+1)/n]; p = 0 falls in the first one.
        let scaled = p * nf;
        let k = if scaled <= T::one() {
            0
        } else {
            let c = scaled.ceil().to_usize().unwrap_or(n);
            (c - 1).min(n - 1)
        };
        let lo_p = T::from_usize_lossy(k);
        let frac = scaled - lo_p;
        let (a, b) = (self.bounds[k], self.bounds[k + 1]);
        a + (b - a) * frac + self.shift[k]
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<T> {
        self.draw_from(&uniforms(self.order.len(), rng))
    }

    fn draw_from(&self, u: &[f64]) -> Vec<T> {
        let n = self.order.len();
        let mut q: Vec<T> = u.iter().map(|&p| self.quantile(T::lit(p))).collect();
        q.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut out = vec![T::zero(); n];
        for (rank, &idx) in self.order.iter().enumerate() {
            out[idx] = q[rank];
        }
        out
    }
}

fn uniforms<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// One maximum-entropy bootstrap replicate drawn from `rng`.
pub fn meboot_replicate_with<T: Scalar, R: Rng>(
    series: &[T],
    config: &MebootConfig,
    rng: &mut R,
) -> Result<Vec<T>> {
    Ok(MeDensity::new(series, config)?.draw(rng))
}

/// One replicate with the default trim, seeded deterministically.
pub fn meboot_replicate<T: Scalar>(series: &[T], seed: u64) -> Result<Vec<T>> {
    meboot_replicate_with(series, &MebootConfig::default(), &mut replicate_rng(seed, 0))
}

/// `count` replicates of one series, replicate ℓ on stream ℓ.
pub fn meboot_ensemble<T: Scalar>(
    series: &[T],
    count: usize,
    seed: u64,
    config: &MebootConfig,
) -> Result<Vec<Vec<T>>> {
    let density = MeDensity::new(series, config)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|l| density.draw(&mut replicate_rng(seed, l)))
        .collect())
}

/// Bootstrap replicates of r*(y|x) and their order statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapEnsemble<T> {
    pub replicates: Vec<T>,
    pub sorted: Vec<T>,
    /// Replicates dropped because their kernel fit degenerated.
    pub excluded: usize,
}

impl<T: Scalar> BootstrapEnsemble<T> {
    pub fn from_replicates(replicates: Vec<T>) -> Result<Self> {
        if replicates.is_empty() {
            return Err(Error::InsufficientReplicates("empty ensemble".into()));
        }
        if let Some(bad) = replicates.iter().find(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite replicate {bad}")));
        }
        let mut sorted = replicates.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(Self {
            replicates,
            sorted,
            excluded: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Writes the replicates, in generation order, as one-column CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rstar"])?;
        for v in &self.replicates {
            w.write_record([format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Resamples both columns `replicates` times and records r*(y|x) for each.
pub fn bootstrap_rstar<T: Scalar>(
    x: &[T],
    y: &[T],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapEnsemble<T>> {
    bootstrap_rstar_with(x, y, replicates, seed, &MebootConfig::default())
}

pub fn bootstrap_rstar_with<T: Scalar>(
    x: &[T],
    y: &[T],
    replicates: usize,
    seed: u64,
    config: &MebootConfig,
) -> Result<BootstrapEnsemble<T>> {
    if replicates < MIN_REPLICATES {
        return domain(format!(
            "need at least {MIN_REPLICATES} replicates, got {replicates}"
        ));
    }
    PairedSample::new(x.to_vec(), y.to_vec())?;
    let dx = MeDensity::new(x, config)?;
    let dy = MeDensity::new(y, config)?;

    let draws: Vec<Option<T>> = (0..replicates as u64)
        .into_par_iter()
        .map(|l| {
            let u = uniforms(x.len(), &mut replicate_rng(seed, l));
            let xr = dx.draw_from(&u);
            let yr = dy.draw_from(&u);
            PairedSample::new(xr, yr)
                .and_then(|s| gencorr::rstar_one_way(&s))
                .ok()
        })
        .collect();

    let excluded = draws.iter().filter(|d| d.is_none()).count();
    if excluded as f64 > MAX_EXCLUDED_SHARE * replicates as f64 {
        return Err(Error::InsufficientReplicates(format!(
            "{excluded} of {replicates} replicates had degenerate fits"
        )));
    }
    let mut ens = BootstrapEnsemble::from_replicates(draws.into_iter().flatten().collect())?;
    ens.excluded = excluded;
    Ok(ens)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lo: T,
    pub up: T,
}

/// Order-statistic confidence interval.
///
/// With J replicates and tail mass m (1 − level for one-sided intervals,
/// half of it for two-sided ones) the lower limit is the k-th order
/// statistic, k = ⌈J·m⌉, and the upper limit the (J + 1 − k)-th. For
/// J = 999 at 95% that is the 50th for a left-tail interval [r₍₅₀₎, 1] and
/// the 25th/975th for a two-sided one. The mirrored index makes
/// [r₍ₖ₎, r₍ⱼ₊₁₋ₖ₎] cover a fresh draw from the same distribution with
/// probability exactly (J + 1 − 2k)/(J + 1).
///
/// `Tail::Left` leaves the mass in the left tail ([lo, 1]); `Tail::Right`
/// leaves it in the right tail ([−1, up]).
pub fn interval<T: Scalar>(ens: &BootstrapEnsemble<T>, level: T, tail: Tail) -> Result<Interval<T>> {
    if !(level > T::zero() && level < T::one()) {
        return domain(format!("level must lie in (0, 1), got {level}"));
    }
    let j = ens.len();
    let jf = T::from_usize_lossy(j);
    let mass = match tail {
        Tail::Two => (T::one() - level) / T::lit(2.0),
        Tail::Left | Tail::Right => T::one() - level,
    };
    let expected = jf * mass;
    if expected < T::one() - T::lit(1e-9) {
        return Err(Error::InsufficientReplicates(format!(
            "{j} replicates leave {expected} expected in the tail; need at least 1"
        )));
    }
    let k = (expected - T::lit(1e-9)).ceil().to_usize().expect("finite").max(1);
    let lower = ens.sorted[k - 1];
    let upper = ens.sorted[j - k];
    Ok(match tail {
        Tail::Left => Interval { lo: lower, up: T::one() },
        Tail::Right => Interval { lo: -T::one(), up: upper },
        Tail::Two => Interval { lo: lower, up: upper },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Reject => "reject",
            Decision::FailToReject => "fail_to_reject",
        })
    }
}

/// Fails to reject the hypothesized value iff it lies inside the interval
/// (bounds inclusive).
pub fn accept_reject<T: Scalar>(interval: &Interval<T>, rho0: T) -> Decision {
    if interval.lo <= rho0 && rho0 <= interval.up {
        Decision::FailToReject
    } else {
        Decision::Reject
    }
}
