//! Generalized correlation coefficients and the signed dependence measure.
//!
//! r*(y|x) is the square root of the R² of a kernel regression of y on x,
//! carrying the sign of Cov(x, y). Because the two regressions differ,
//! r*(y|x) and r*(x|y) generally differ too; the R* matrix collects them
//! with the response along the rows and the regressor along the columns.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernelreg::{self, PairedSample};
use crate::scalar::Scalar;

/// Default threshold for "small" dependence.
pub const DEFAULT_EPSILON: f64 = 0.01;
/// |Cov| below this multiple of σ_x·σ_y leaves the sign undetermined.
const ZERO_COV_RATIO: f64 = 1e-12;

/// The two conditional generalized correlations of a pair of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenCorrPair<T> {
    /// r*(y | x): y regressed on x.
    pub y_given_x: T,
    /// r*(x | y): x regressed on y.
    pub x_given_y: T,
    /// Sign of Cov(x, y): −1, 0 or +1.
    pub cov_sign: i8,
    /// Set when the covariance is numerically zero; the two values are then
    /// unsigned magnitudes.
    pub sign_indeterminate: bool,
}

impl<T: Scalar> GenCorrPair<T> {
    /// Signed larger magnitude of the two conditional correlations.
    pub fn max_dependence(&self) -> T {
        let m = self.y_given_x.abs().max(self.x_given_y.abs());
        if self.cov_sign < 0 {
            -m
        } else {
            m
        }
    }
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().fold(T::zero(), |a, b| a + b) / T::from_usize_lossy(v.len())
}

/// Sign of the sample covariance, 0 when it is negligible relative to the
/// product of standard deviations.
pub fn covariance_sign<T: Scalar>(x: &[T], y: &[T]) -> i8 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
        syy = syy + (b - my) * (b - my);
    }
    if sxy.abs() < T::lit(ZERO_COV_RATIO) * (sxx * syy).sqrt() || sxy == T::zero() {
        0
    } else if sxy > T::zero() {
        1
    } else {
        -1
    }
}

fn signed_root<T: Scalar>(r_squared: T, sign: i8) -> T {
    let m = r_squared.max(T::zero()).min(T::one()).sqrt();
    if sign < 0 {
        -m
    } else {
        m
    }
}

/// Product-moment correlation of the sample's two columns.
pub fn pearson<T: Scalar>(sample: &PairedSample<T>) -> Result<T> {
    kernelreg::pearson_slices(sample.x(), sample.y())
}

/// r*(y|x) alone: one kernel regression of y on x.
pub fn rstar_one_way<T: Scalar>(sample: &PairedSample<T>) -> Result<T> {
    let sign = covariance_sign(sample.x(), sample.y());
    let fit = kernelreg::fit(sample, None)?;
    Ok(signed_root(fit.r_squared, sign))
}

/// Both conditional generalized correlations of a pair.
pub fn rstar<T: Scalar>(sample: &PairedSample<T>) -> Result<GenCorrPair<T>> {
    let flipped = sample.flipped()?;
    let sign = covariance_sign(sample.x(), sample.y());
    let forward = kernelreg::fit(sample, None)?;
    let backward = kernelreg::fit(&flipped, None)?;
    Ok(GenCorrPair {
        y_given_x: signed_root(forward.r_squared, sign),
        x_given_y: signed_root(backward.r_squared, sign),
        cov_sign: sign,
        sign_indeterminate: sign == 0,
    })
}

/// Signed maximum dependence sgn(Cov) · max(|r*(y|x)|, |r*(x|y)|).
///
/// With an indeterminate covariance sign the unsigned magnitude is returned.
pub fn dep_meas<T: Scalar>(sample: &PairedSample<T>) -> Result<T> {
    Ok(rstar(sample)?.max_dependence())
}

/// p×p matrix of r*(row | column), diagonal fixed at one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenCorrMatrix<T> {
    pub labels: Vec<String>,
    pub values: Vec<Vec<T>>,
    /// Cells whose covariance sign was indeterminate (value is unsigned).
    pub sign_indeterminate: Vec<Vec<bool>>,
}

impl<T: Scalar> GenCorrMatrix<T> {
    pub fn get(&self, row: &str, col: &str) -> Option<T> {
        let i = self.labels.iter().position(|l| l == row)?;
        let j = self.labels.iter().position(|l| l == col)?;
        Some(self.values[i][j])
    }

    /// Writes the matrix as CSV with a header row and a label column.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the R* matrix for labeled columns. Any degenerate pair fails the
/// whole matrix, naming the offending labels.
pub fn gencorr_matrix<T: Scalar>(labels: &[String], columns: &[Vec<T>]) -> Result<GenCorrMatrix<T>> {
    let p = columns.len();
    if labels.len() != p {
        return Err(Error::Degenerate(format!(
            "{} labels for {} columns",
            labels.len(),
            p
        )));
    }
    if p < 2 {
        return Err(Error::Degenerate(format!("need at least 2 columns, got {p}")));
    }
    let cells: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<(T, bool)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let wrap = |e: Error| Error::Pair {
                row: labels[i].clone(),
                col: labels[j].clone(),
                source: Box::new(e),
            };
            let sample = PairedSample::new(columns[j].clone(), columns[i].clone()).map_err(wrap)?;
            kernelreg::pearson_slices(sample.x(), sample.y()).map_err(wrap)?;
            let sign = covariance_sign(sample.x(), sample.y());
            let fit = kernelreg::fit(&sample, None).map_err(wrap)?;
            Ok((signed_root(fit.r_squared, sign), sign == 0))
        })
        .collect();

    let mut values = vec![vec![T::one(); p]; p];
    let mut flags = vec![vec![false; p]; p];
    for (&(i, j), res) in cells.iter().zip(results) {
        let (v, flag) = res?;
        values[i][j] = v;
        flags[i][j] = flag;
    }
    Ok(GenCorrMatrix {
        labels: labels.to_vec(),
        values,
        sign_indeterminate: flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependence {
    Independent,
    Positive,
    Negative,
    Mixed,
}

impl std::fmt::Display for Dependence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dependence::Independent => "independent",
            Dependence::Positive => "positive",
            Dependence::Negative => "negative",
            Dependence::Mixed => "mixed",
        })
    }
}

/// Practical independence when both conditional values are below ε in
/// magnitude; positive (negative) when both exceed ε (fall below −ε) with a
/// determinate covariance sign; mixed otherwise.
pub fn classify_dependence<T: Scalar>(pair: &GenCorrPair<T>, epsilon: T) -> Result<Dependence> {
    if !(epsilon > T::zero()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let (a, b) = (pair.y_given_x, pair.x_given_y);
    if a.abs() < epsilon && b.abs() < epsilon {
        return Ok(Dependence::Independent);
    }
    if pair.sign_indeterminate {
        return Ok(Dependence::Mixed);
    }
    if a > epsilon && b > epsilon {
        Ok(Dependence::Positive)
    } else if a < -epsilon && b < -epsilon {
        Ok(Dependence::Negative)
    } else {
        Ok(Dependence::Mixed)
    }
}

/// R² of the least-squares line of `y` on `x`.
pub fn ols_r_squared<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    kernelreg::pearson_slices(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ssr, mut sst) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let e = b - (intercept + slope * a);
        ssr = ssr + e * e;
        sst = sst + (b - my) * (b - my);
    }
    Ok(T::one() - ssr / sst)
}
