use rand::seq::SliceRandom;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::SpatialWeights;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{mean_and_deviations, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranResult<T> {
    pub i: T,
    /// −1 / (n − 1).
    pub expected: T,
    /// Variance of I under the randomization assumption; needs n ≥ 4.
    pub variance: Option<T>,
    pub z_score: Option<T>,
    /// Two-sided normal p-value of `z_score`.
    pub p_value: Option<T>,
    /// Permutation pseudo p-value, one-sided in the direction of `i`
    /// relative to `expected`.
    pub perm_p: Option<T>,
    pub permutations: usize,
    pub seed: u64,
}

/// Deviations from the mean, rejecting constant vectors and bad weights.
pub(crate) fn checked_deviations<T: Scalar>(values: &[T], w: &SpatialWeights<T>) -> Result<Vec<T>> {
    if values.len() != w.n() {
        return Err(Error::Data(format!("{} values for {} weight rows", values.len(), w.n())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value".into()));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance);
    }
    if !(w.s0() > T::zero()) {
        return Err(Error::EmptyWeights);
    }
    Ok(mean_and_deviations(values).1)
}

/// `(n / S0) · Σ_ij w_ij z_i z_j / Σ_i z_i²` for precomputed deviations.
pub fn moran_statistic<T: Scalar>(z: &[T], w: &SpatialWeights<T>) -> T {
    let n = T::of_usize(z.len());
    let m2: T = z.iter().map(|&v| v * v).sum();
    let cross: T = (0..z.len())
        .map(|i| {
            let (cols, vals) = w.row(i);
            z[i] * cols.iter().zip(vals).map(|(&j, &wij)| wij * z[j]).sum::<T>()
        })
        .sum();
    n / w.s0() * cross / m2
}

fn randomization_variance<T: Scalar>(z: &[T], w: &SpatialWeights<T>) -> Option<T> {
    let nn = z.len();
    if nn < 4 {
        return None;
    }
    let n = nn as f64;
    let s0 = w.s0().as_f64();
    let s1 = w.s1().as_f64();
    let s2 = w.s2().as_f64();
    let m2: f64 = z.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / n;
    let m4: f64 = z.iter().map(|v| v.as_f64().powi(4)).sum::<f64>() / n;
    let b2 = m4 / (m2 * m2);
    let e = -1.0 / (n - 1.0);
    let num = n * ((n * n - 3.0 * n + 3.0) * s1 - n * s2 + 3.0 * s0 * s0)
        - b2 * ((n * n - n) * s1 - 2.0 * n * s2 + 6.0 * s0 * s0);
    let den = (n - 1.0) * (n - 2.0) * (n - 3.0) * s0 * s0;
    let var = num / den - e * e;
    (var > 0.0 && var.is_finite()).then(|| T::of(var))
}

/// Moran's I of `z` under `permutations` random reorderings drawn from
/// the global permutation stream of `seed`.
pub fn permutation_draws<T: Scalar>(values: &[T], w: &SpatialWeights<T>, permutations: usize, seed: u64) -> Result<Vec<T>> {
    let z = checked_deviations(values, w)?;
    let mut rng = rng::stream(seed, rng::GLOBAL_PERMUTATION_STREAM);
    let mut shuffled = z.clone();
    Ok((0..permutations)
        .map(|_| {
            shuffled.shuffle(&mut rng);
            moran_statistic(&shuffled, w)
        })
        .collect())
}

/// Global Moran's I with analytical (randomization) and permutation
/// inference.
pub fn global_moran<T: Scalar>(values: &[T], w: &SpatialWeights<T>, permutations: usize, seed: u64) -> Result<MoranResult<T>> {
    let z = checked_deviations(values, w)?;
    let n = values.len();
    let i = moran_statistic(&z, w);
    let expected = -T::one() / T::of_usize(n - 1);

    let variance = randomization_variance(&z, w);
    let z_score = variance.map(|v| (i - expected) / v.sqrt());
    let p_value = z_score.map(|zs| {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        T::of(2.0 * normal.sf(zs.as_f64().abs()))
    });

    let perm_p = (permutations > 0).then(|| {
        let draws = permutation_draws(values, w, permutations, seed).expect("inputs already validated");
        let extreme = if i >= expected {
            draws.iter().filter(|&&d| d >= i).count()
        } else {
            draws.iter().filter(|&&d| d <= i).count()
        };
        T::of_usize(extreme + 1) / T::of_usize(permutations + 1)
    });

    Ok(MoranResult {
        i,
        expected,
        variance,
        z_score,
        p_value,
        perm_p,
        permutations,
        seed,
    })
}
