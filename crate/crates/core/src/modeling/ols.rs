use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult<T> {
    pub n: usize,
    pub slope: T,
    pub intercept: T,
    pub r2: T,
    pub adj_r2: T,
    pub slope_t: T,
    /// Two-sided p-value of the slope's t statistic (n − 2 df).
    pub p_value: T,
    pub residuals: Vec<T>,
    /// `e_i / s` with `s = sqrt(SSE / (n − 2))`; all zero on an exact fit.
    pub standardized_residuals: Vec<T>,
}

/// Least-squares fit of `y = intercept + slope · x`.
///
/// `r2` is the squared Pearson correlation (0 when `y` is constant) and
/// `adj_r2 = 1 − (1 − r2)(n − 1)/(n − 2)`.
pub fn ols_bivariate<T: Scalar>(x: &[T], y: &[T]) -> Result<RegressionResult<T>> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Data(format!("x has {n} values, y has {}", y.len())));
    }
    if n < 3 {
        return Err(Error::Numeric(format!("regression needs at least 3 observations, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite regression input".into()));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ZeroVariance);
    }

    let nf = T::of_usize(n);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Residuals from centered data sum to zero up to rounding.
    let residuals: Vec<T> = x.iter().zip(y).map(|(&xi, &yi)| (yi - my) - slope * (xi - mx)).collect();
    let sse: T = residuals.iter().map(|&e| e * e).sum();

    let r2 = if syy > T::zero() { (sxy * sxy / (sxx * syy)).min(T::one()) } else { T::zero() };
    let df = T::of_usize(n - 2);
    let adj_r2 = T::one() - (T::one() - r2) * T::of_usize(n - 1) / df;

    // Residual mass at rounding level relative to var(y) is an exact fit.
    let s = if sse <= T::epsilon() * syy { T::zero() } else { (sse / df).sqrt() };
    let standardized_residuals = if s > T::zero() {
        residuals.iter().map(|&e| e / s).collect()
    } else {
        vec![T::zero(); n]
    };

    let se_slope = s / sxx.sqrt();
    let (slope_t, p_value) = if se_slope > T::zero() {
        let t = slope / se_slope;
        let dist = StudentsT::new(0.0, 1.0, (n - 2) as f64).expect("positive degrees of freedom");
        (t, T::of(2.0 * dist.sf(t.as_f64().abs())))
    } else if slope == T::zero() {
        (T::zero(), T::one())
    } else {
        (slope.signum() * T::infinity(), T::zero())
    };

    Ok(RegressionResult {
        n,
        slope,
        intercept,
        r2,
        adj_r2,
        slope_t,
        p_value,
        residuals,
        standardized_residuals,
    })
}
