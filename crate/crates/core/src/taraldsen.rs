//! Exact sampling density of a correlation coefficient under a bivariate
//! normal parent, and the inference built on it.
//!
//! With the hypothesized population correlation ρ held fixed, the density is
//! evaluated over a uniform grid of observed r in [−1, 1]. Cumulative
//! probabilities are the plain rectangle sums of grid heights divided by the
//! sum over the whole grid, so the rectangle width cancels and the grid
//! always normalizes to exactly one. Quantiles invert that step function from
//! the left; p-values are tail sums of the same grid.
//!
//! All density arithmetic is done in log space and exponentiated last, so
//! large degrees of freedom do not overflow the gamma ratio.

use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::specfun::{hyp2f1, log_gamma, Hyp2F1Args};

/// Default grid spacing for cumulative probabilities and quantiles.
pub const DEFAULT_STEP: f64 = 0.001;

/// Sample sizes of the published critical-value table.
pub const TABLE_SAMPLE_SIZES: [usize; 11] = [5, 10, 15, 20, 25, 30, 40, 70, 90, 100, 150];
/// Cumulative probabilities of the published critical-value table.
pub const TABLE_PROBS: [f64; 8] = [0.01, 0.025, 0.05, 0.1, 0.9, 0.95, 0.975, 0.99];

/// Hypothesized correlation and degrees of freedom (`v = n − 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaraldsenParams<T> {
    pub rho: T,
    pub v: T,
}

impl<T: Scalar> TaraldsenParams<T> {
    pub fn new(rho: T, v: T) -> Result<Self> {
        if !(v > T::one()) || !v.is_finite() {
            return domain(format!("degrees of freedom must exceed 1, got {v}"));
        }
        if !(rho >= -T::one() && rho <= T::one()) {
            return domain(format!("rho must lie in [-1, 1], got {rho}"));
        }
        Ok(Self { rho, v })
    }

    /// Parameters for a sample of `n` observations (`v = n − 1`).
    pub fn from_sample_size(rho: T, n: usize) -> Result<Self> {
        if n < 3 {
            return domain(format!("sample size must be at least 3, got {n}"));
        }
        Self::new(rho, T::from_usize_lossy(n - 1))
    }

    /// ln of v(v−1)Γ(v−1) / (√(2π) Γ(v+½)) plus the ρ-only factor
    /// (v−2)/2 · ln(1−ρ²).
    fn log_prefactor(&self) -> Result<T> {
        let v = self.v;
        let one = T::one();
        let half = T::lit(0.5);
        let mut acc = v.ln() + (v - one).ln() + log_gamma(v - one)? - log_gamma(v + half)?
            - half * (T::lit(2.0) * T::PI()).ln();
        let rho_term = one_minus_sq_ln(self.rho);
        let rho_exp = (v - T::lit(2.0)) * half;
        if rho_exp != T::zero() {
            acc = acc + rho_exp * rho_term;
        }
        Ok(acc)
    }
}

/// ln(1 − x²) computed as ln(1 − x) + ln(1 + x).
fn one_minus_sq_ln<T: Scalar>(x: T) -> T {
    (-x).ln_1p() + x.ln_1p()
}

fn check_r<T: Scalar>(r: T) -> Result<()> {
    if !(r >= -T::one() && r <= T::one()) {
        return domain(format!("r must lie in [-1, 1], got {r}"));
    }
    Ok(())
}

fn log_density_with<T: Scalar>(params: &TaraldsenParams<T>, prefactor: T, r: T) -> Result<T> {
    let TaraldsenParams { rho, v } = *params;
    let one = T::one();
    let half = T::lit(0.5);
    let z = (one + r * rho) * half;
    let f = hyp2f1(Hyp2F1Args::new(T::lit(1.5), -half, v + half, z))?;
    if !(f > T::zero()) {
        return domain(format!("hypergeometric factor is not positive at r = {r}"));
    }
    let log = prefactor
        + (v - one) * half * one_minus_sq_ln(r)
        + (one - T::lit(2.0) * v) * half * (-(r * rho)).ln_1p()
        + f.ln();
    Ok(log)
}

fn density_with<T: Scalar>(params: &TaraldsenParams<T>, prefactor: T, r: T) -> Result<T> {
    check_r(r)?;
    if r.abs() == T::one() {
        return Ok(T::zero());
    }
    let log = log_density_with(params, prefactor, r)?;
    if log == T::infinity() || log.is_nan() {
        return domain(format!(
            "density diverges at r = {r} (rho = {}, v = {})",
            params.rho, params.v
        ));
    }
    Ok(log.exp())
}

/// Density height f(ρ | r, v) at observed correlation `r`.
///
/// Heights at `r = ±1` are exactly zero.
pub fn density<T: Scalar>(params: &TaraldsenParams<T>, r: T) -> Result<T> {
    density_with(params, params.log_prefactor()?, r)
}

/// Uniform grid of density heights over [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    params: TaraldsenParams<T>,
    step: T,
    r: Vec<T>,
    heights: Vec<T>,
    /// prefix[k] = heights[0] + ... + heights[k]
    prefix: Vec<T>,
}

impl<T: Scalar> DensityGrid<T> {
    pub fn params(&self) -> &TaraldsenParams<T> {
        &self.params
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_values(&self) -> &[T] {
        &self.r
    }

    pub fn heights(&self) -> &[T] {
        &self.heights
    }

    pub fn points(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.r.iter().copied().zip(self.heights.iter().copied())
    }

    /// Sum of all heights, the denominator of every cumulative probability.
    pub fn total(&self) -> T {
        *self.prefix.last().expect("grid has at least two points")
    }

    /// Index of the first grid point with r >= `x` (within rounding).
    fn lower_index(&self, x: T) -> usize {
        let slack = self.step * T::lit(1e-9);
        self.r.partition_point(|&r| r < x - slack)
    }

    /// Index one past the last grid point with r <= `x` (within rounding).
    fn upper_index(&self, x: T) -> usize {
        let slack = self.step * T::lit(1e-9);
        self.r.partition_point(|&r| r <= x + slack)
    }

    fn range_sum(&self, lo: usize, hi_exclusive: usize) -> T {
        if hi_exclusive <= lo {
            return T::zero();
        }
        let upper = self.prefix[hi_exclusive - 1];
        if lo == 0 {
            upper
        } else {
            upper - self.prefix[lo - 1]
        }
    }

    /// Writes the grid as `r,height` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "height"])?;
        for (r, h) in self.points() {
            w.write_record([format!("{r}"), format!("{h}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the density on r = −1, −1 + step, ..., 1.
///
/// `step` must divide 2 into a whole number of intervals and lie in
/// (0, 0.5]. Grid abscissae are formed as `(2k − m) / m` so that the grid is
/// exactly antisymmetric about zero.
pub fn build_grid<T: Scalar>(params: &TaraldsenParams<T>, step: T) -> Result<DensityGrid<T>> {
    if !(step > T::zero() && step <= T::lit(0.5)) {
        return domain(format!("grid step must lie in (0, 0.5], got {step}"));
    }
    let intervals = (T::lit(2.0) / step).round();
    if ((intervals * step) - T::lit(2.0)).abs() > T::lit(1e-9) {
        return domain(format!("grid step {step} does not divide [-1, 1] evenly"));
    }
    let m = intervals.to_usize().expect("finite interval count");
    let mf = T::from_usize_lossy(m);
    let prefactor = params.log_prefactor()?;

    let mut r = Vec::with_capacity(m + 1);
    let mut heights = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let rk = (T::from_usize_lossy(2 * k) - mf) / mf;
        heights.push(density_with(params, prefactor, rk)?);
        r.push(rk);
    }
    let mut prefix = Vec::with_capacity(heights.len());
    let mut acc = T::zero();
    for &h in &heights {
        acc = acc + h;
        prefix.push(acc);
    }
    if !(acc > T::zero()) || !acc.is_finite() {
        return domain(format!(
            "density grid has non-positive or non-finite total mass {acc}"
        ));
    }
    Ok(DensityGrid {
        params: *params,
        step: T::lit(2.0) / mf,
        r,
        heights,
        prefix,
    })
}

/// Share of grid mass on points with `r_lo <= r <= r_up`.
pub fn cumulative<T: Scalar>(grid: &DensityGrid<T>, r_lo: T, r_up: T) -> Result<T> {
    check_r(r_lo)?;
    check_r(r_up)?;
    if r_lo > r_up {
        return domain(format!("bounds out of order: {r_lo} > {r_up}"));
    }
    let lo = grid.lower_index(r_lo);
    let hi = grid.upper_index(r_up);
    Ok(grid.range_sum(lo, hi) / grid.total())
}

/// Smallest grid r whose cumulative probability from −1 reaches `c`.
pub fn quantile_on_grid<T: Scalar>(grid: &DensityGrid<T>, c: T) -> Result<T> {
    if !(c > T::zero() && c < T::one()) {
        return domain(format!("probability must lie in (0, 1), got {c}"));
    }
    let target = c * grid.total();
    let idx = grid.prefix.partition_point(|&p| p < target);
    Ok(grid.r[idx.min(grid.r.len() - 1)])
}

/// Quantile F⁻¹(c | ρ, v) at grid resolution `step`.
pub fn quantile<T: Scalar>(params: &TaraldsenParams<T>, c: T, step: T) -> Result<T> {
    if !(c > T::zero() && c < T::one()) {
        return domain(format!("probability must lie in (0, 1), got {c}"));
    }
    let grid = build_grid(params, step)?;
    quantile_on_grid(&grid, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Left,
    Right,
    Two,
}

impl std::str::FromStr for Tail {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Tail::Left),
            "right" => Ok(Tail::Right),
            "two" => Ok(Tail::Two),
            other => Err(format!("unknown tail {other:?}; expected left, right or two")),
        }
    }
}

impl std::fmt::Display for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tail::Left => "left",
            Tail::Right => "right",
            Tail::Two => "two",
        })
    }
}

/// Tail probability of the observed correlation on an existing grid.
///
/// Both one-sided tails include the grid point at `observed_r`. The
/// two-sided value is twice the smaller tail, capped at one.
pub fn p_value_on_grid<T: Scalar>(grid: &DensityGrid<T>, observed_r: T, tail: Tail) -> Result<T> {
    check_r(observed_r)?;
    let left = || cumulative(grid, -T::one(), observed_r);
    let right = || cumulative(grid, observed_r, T::one());
    match tail {
        Tail::Left => left(),
        Tail::Right => right(),
        Tail::Two => Ok((T::lit(2.0) * left()?.min(right()?)).min(T::one())),
    }
}

/// p-value of `observed_r` under the density with the given parameters,
/// computed on the default grid.
pub fn p_value<T: Scalar>(params: &TaraldsenParams<T>, observed_r: T, tail: Tail) -> Result<T> {
    check_r(observed_r)?;
    let grid = build_grid(params, T::lit(DEFAULT_STEP))?;
    p_value_on_grid(&grid, observed_r, tail)
}

/// Rounds half away from zero to two decimals.
pub fn round2<T: Scalar>(x: T) -> T {
    let hundred = T::lit(100.0);
    (x * hundred).round() / hundred
}

/// Table of ρ = 0 quantiles for each (sample size, probability) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalTable<T> {
    pub sample_sizes: Vec<usize>,
    pub probs: Vec<T>,
    /// Unrounded quantiles, `values[row][col]`.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> CriticalTable<T> {
    pub fn rounded(&self) -> Vec<Vec<T>> {
        self.values
            .iter()
            .map(|row| row.iter().map(|&v| round2(v)).collect())
            .collect()
    }
}

/// Quantiles at ρ = 0 for every (n, c) pair on a grid of spacing `step`.
pub fn table1<T: Scalar>(sample_sizes: &[usize], probs: &[T], step: T) -> Result<CriticalTable<T>> {
    for &c in probs {
        if !(c > T::zero() && c < T::one()) {
            return domain(format!("probability must lie in (0, 1), got {c}"));
        }
    }
    let mut values = Vec::with_capacity(sample_sizes.len());
    for &n in sample_sizes {
        let params = TaraldsenParams::from_sample_size(T::zero(), n)?;
        let grid = build_grid(&params, step)?;
        let row = probs
            .iter()
            .map(|&c| quantile_on_grid(&grid, c))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(CriticalTable {
        sample_sizes: sample_sizes.to_vec(),
        probs: probs.to_vec(),
        values,
    })
}

/// The published layout: 11 sample sizes by 8 probabilities at step 0.001.
pub fn default_table1() -> Result<CriticalTable<f64>> {
    table1(&TABLE_SAMPLE_SIZES, &TABLE_PROBS, DEFAULT_STEP)
}

/// Fisher z-transform of `r` and its approximate standard deviation 1/√n.
pub fn fisher_z<T: Scalar>(r: T, n: usize) -> Result<(T, T)> {
    if !(r.abs() < T::one()) {
        return domain(format!("Fisher z needs |r| < 1, got {r}"));
    }
    if n < 4 {
        return domain(format!("Fisher z needs n >= 4, got {n}"));
    }
    let z = T::lit(0.5) * ((T::one() + r) / (T::one() - r)).ln();
    let sd = T::one() / T::from_usize_lossy(n).sqrt();
    Ok((z, sd))
}
