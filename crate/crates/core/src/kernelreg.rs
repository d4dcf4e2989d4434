//! Bivariate Nadaraya–Watson regression with a Gaussian kernel.
//!
//! When no bandwidth is supplied it is chosen by leave-one-out least-squares
//! cross-validation: a log-spaced scan over
//! `[1e-3, 1e3] · σ_x · n^(-1/5)` (which also includes Silverman's
//! `1.06 · σ_x · n^(-1/5)`) brackets the minimum, and golden-section search
//! refines it inside the bracket. When the criterion keeps falling all the
//! way to the top of the scan, the regressor is treated as irrelevant: the
//! fit is the constant mean(y) and R² is zero, the h → ∞ limit.
//!
//! Observations are sorted by `(x, y)` before any arithmetic, so results do
//! not depend on the order in which pairs are supplied. Kernel weights at
//! each point are scaled by the largest weight, which keeps the denominator
//! at least one however small the bandwidth; points whose scaled weight is
//! below `exp(-WEIGHT_CUTOFF)` are skipped.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Scaled weights below `exp(-WEIGHT_CUTOFF)` (about 4e-18) are dropped.
const WEIGHT_CUTOFF: f64 = 40.0;
const SCAN_POINTS: usize = 49;
const SCAN_DECADES: f64 = 3.0;
const GOLDEN_TOL: f64 = 1e-6;
/// Fits whose spread is below this share of the response spread count as flat.
const FLAT_FIT_RATIO: f64 = 1e-9;

/// Two aligned columns: `x` is the regressor, `y` the response.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> PairedSample<T> {
    pub const MIN_LEN: usize = 5;

    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Degenerate(format!(
                "columns differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < Self::MIN_LEN {
            return Err(Error::Degenerate(format!(
                "need at least {} observations, got {}",
                Self::MIN_LEN,
                x.len()
            )));
        }
        if let Some(bad) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite value {bad}")));
        }
        if count_distinct(&x) < 3 {
            return Err(Error::Degenerate(
                "regressor needs at least 3 distinct values".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same pairs with the roles of regressor and response exchanged.
    pub fn flipped(&self) -> Result<Self> {
        Self::new(self.y.clone(), self.x.clone())
    }
}

fn count_distinct<T: Scalar>(v: &[T]) -> usize {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    s.dedup();
    s.len()
}

/// Fitted conditional means, the bandwidth used and the fit's R².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelFit<T> {
    pub fitted: Vec<T>,
    pub bandwidth: T,
    pub r_squared: T,
}

/// Sample data sorted by (x, y), plus the permutation back to input order.
struct Sorted<T> {
    x: Vec<T>,
    y: Vec<T>,
    order: Vec<usize>,
}

impl<T: Scalar> Sorted<T> {
    fn new(sample: &PairedSample<T>) -> Self {
        let mut order: Vec<usize> = (0..sample.len()).collect();
        order.sort_by(|&a, &b| {
            sample.x[a]
                .partial_cmp(&sample.x[b])
                .expect("finite")
                .then(sample.y[a].partial_cmp(&sample.y[b]).expect("finite"))
        });
        Self {
            x: order.iter().map(|&i| sample.x[i]).collect(),
            y: order.iter().map(|&i| sample.y[i]).collect(),
            order,
        }
    }

    fn nearest_other(&self, i: usize) -> T {
        let xi = self.x[i];
        let left = (i > 0).then(|| xi - self.x[i - 1]);
        let right = (i + 1 < self.x.len()).then(|| self.x[i + 1] - xi);
        match (left, right) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => T::zero(),
        }
    }

    /// Kernel-weighted mean of y at the i-th sorted point, optionally
    /// leaving that point out.
    fn smooth_at(&self, i: usize, h: T, leave_out: bool) -> T {
        let xi = self.x[i];
        let d_min = if leave_out { self.nearest_other(i) } else { T::zero() };
        let two = T::lit(2.0);
        let radius = (d_min * d_min + two * T::lit(WEIGHT_CUTOFF) * h * h).sqrt();
        let lo = self.x.partition_point(|&v| v < xi - radius);
        let hi = self.x.partition_point(|&v| v <= xi + radius);
        let shift = d_min / h;
        let shift = shift * shift / two;
        let mut num = T::zero();
        let mut den = T::zero();
        for j in lo..hi {
            if leave_out && j == i {
                continue;
            }
            let u = (xi - self.x[j]) / h;
            let w = (shift - u * u / two).exp();
            num = num + w * self.y[j];
            den = den + w;
        }
        num / den
    }

    fn cv(&self, h: T) -> T {
        (0..self.x.len())
            .map(|i| {
                let e = self.y[i] - self.smooth_at(i, h, true);
                e * e
            })
            .fold(T::zero(), |a, b| a + b)
    }

    fn fitted_in_input_order(&self, h: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.x.len()];
        for (k, &orig) in self.order.iter().enumerate() {
            out[orig] = self.smooth_at(k, h, false);
        }
        out
    }
}

/// Leave-one-out cross-validation sum of squares at bandwidth `h`.
pub fn cv_objective<T: Scalar>(sample: &PairedSample<T>, h: T) -> Result<T> {
    check_bandwidth(h)?;
    Ok(Sorted::new(sample).cv(h))
}

/// Nadaraya–Watson fitted values at every observation.
pub fn smooth<T: Scalar>(sample: &PairedSample<T>, h: T) -> Result<Vec<T>> {
    check_bandwidth(h)?;
    Ok(Sorted::new(sample).fitted_in_input_order(h))
}

fn check_bandwidth<T: Scalar>(h: T) -> Result<()> {
    if !(h > T::zero()) || !h.is_finite() {
        return domain(format!("bandwidth must be positive and finite, got {h}"));
    }
    Ok(())
}

fn sample_sd<T: Scalar>(v: &[T]) -> T {
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let ss = v
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .fold(T::zero(), |a, b| a + b);
    (ss / (n - T::one())).sqrt()
}

/// Silverman's rule-of-thumb bandwidth 1.06 · σ_x · n^(-1/5).
pub fn silverman_bandwidth<T: Scalar>(sample: &PairedSample<T>) -> T {
    T::lit(1.06) * scale_unit(sample)
}

fn scale_unit<T: Scalar>(sample: &PairedSample<T>) -> T {
    let n = T::from_usize_lossy(sample.len());
    sample_sd(&sample.x) * n.powf(T::lit(-0.2))
}

/// Bandwidth minimizing the leave-one-out cross-validation criterion.
pub fn select_bandwidth<T: Scalar>(sample: &PairedSample<T>) -> Result<T> {
    Ok(search_bandwidth(sample)?.0)
}

/// Cross-validated bandwidth and whether it sits at the top of the scan.
fn search_bandwidth<T: Scalar>(sample: &PairedSample<T>) -> Result<(T, bool)> {
    let sorted = Sorted::new(sample);
    let unit = scale_unit(sample);
    if !(unit > T::zero()) {
        return Err(Error::Degenerate("regressor has zero spread".into()));
    }
    let span = T::lit(SCAN_DECADES) * T::LN_10();
    let (lo, hi) = (unit.ln() - span, unit.ln() + span);
    let steps = T::from_usize_lossy(SCAN_POINTS - 1);
    let mut grid: Vec<T> = (0..SCAN_POINTS)
        .map(|k| lo + (hi - lo) * T::from_usize_lossy(k) / steps)
        .collect();
    grid.push(silverman_bandwidth(sample).ln());
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let objective = |log_h: T| sorted.cv(log_h.exp());
    let values: Vec<T> = grid.iter().map(|&g| objective(g)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v < values[best] { k } else { best });
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (log_h, value) = golden_section(objective, a, b, T::lit(GOLDEN_TOL));
    // Golden-section only explores the bracket interior; keep the scan
    // point if it is strictly better.
    let chosen = if values[best] < value { grid[best] } else { log_h };
    let at_upper = best == grid.len() - 1 && chosen >= hi - T::lit(GOLDEN_TOL);
    Ok((chosen.exp(), at_upper))
}

fn golden_section<T: Scalar>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / T::lit(2.0);
    (mid, f(mid))
}

/// Regresses `y` on `x`, selecting the bandwidth by cross-validation when
/// `bandwidth` is `None`.
pub fn fit<T: Scalar>(sample: &PairedSample<T>, bandwidth: Option<T>) -> Result<KernelFit<T>> {
    let h = match bandwidth {
        Some(h) => {
            check_bandwidth(h)?;
            h
        }
        None => match search_bandwidth(sample)? {
            (h, true) => {
                let mean = sample.y.iter().copied().fold(T::zero(), |a, b| a + b)
                    / T::from_usize_lossy(sample.len());
                return Ok(KernelFit {
                    fitted: vec![mean; sample.len()],
                    bandwidth: h,
                    r_squared: T::zero(),
                });
            }
            (h, false) => h,
        },
    };
    let fitted = Sorted::new(sample).fitted_in_input_order(h);
    if fitted.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!(
            "kernel fit produced non-finite values at bandwidth {h}"
        )));
    }
    let r_squared = if is_flat(&fitted, &sample.y) {
        T::zero()
    } else {
        r_squared_of_fit(&sample.y, &fitted)?
    };
    Ok(KernelFit {
        fitted,
        bandwidth: h,
        r_squared,
    })
}

fn is_flat<T: Scalar>(fitted: &[T], observed: &[T]) -> bool {
    let sd_y = sample_sd(observed);
    let sd_f = sample_sd(fitted);
    sd_y == T::zero() || sd_f <= T::lit(FLAT_FIT_RATIO) * sd_y
}

/// Pearson correlation of two equal-length, non-constant sequences.
pub fn pearson_slices<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Degenerate(format!(
            "sequences differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 observations, got {}",
            a.len()
        )));
    }
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().copied().fold(T::zero(), |s, v| s + v) / n;
    let mb = b.iter().copied().fold(T::zero(), |s, v| s + v) / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if is_constant(a) || is_constant(b) || saa == T::zero() || sbb == T::zero() {
        return Err(Error::Degenerate("constant sequence has no correlation".into()));
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

fn is_constant<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Squared Pearson correlation between observed and fitted values.
pub fn r_squared_of_fit<T: Scalar>(observed: &[T], fitted: &[T]) -> Result<T> {
    let r = pearson_slices(observed, fitted)?;
    Ok((r * r).min(T::one()))
}
