use std::fmt;

use rayon::prelude::*;
use rand::Rng;
use serde::Serialize;

use super::moran::checked_deviations;
use super::SpatialWeights;
use crate::error::Result;
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Quadrant {
    HH,
    LL,
    HL,
    LH,
    Isolated,
}

impl Quadrant {
    /// Deviations and lags of zero count as high.
    pub fn from_signs<T: Scalar>(z: T, lag: T) -> Quadrant {
        match (z >= T::zero(), lag >= T::zero()) {
            (true, true) => Quadrant::HH,
            (false, false) => Quadrant::LL,
            (true, false) => Quadrant::HL,
            (false, true) => Quadrant::LH,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::HH => "HH",
            Quadrant::LL => "LL",
            Quadrant::HL => "HL",
            Quadrant::LH => "LH",
            Quadrant::Isolated => "isolated",
        }
    }

    pub fn parse(s: &str) -> Option<Quadrant> {
        [Quadrant::HH, Quadrant::LL, Quadrant::HL, Quadrant::LH, Quadrant::Isolated]
            .into_iter()
            .find(|q| q.as_str() == s)
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalMoran<T> {
    pub i: T,
    /// Σ_j w_ij z_j on mean deviations.
    pub lag: T,
    pub quadrant: Quadrant,
    /// `None` for isolated zones or when no permutations were run.
    pub pseudo_p: Option<T>,
    pub significant: bool,
}

impl<T> LocalMoran<T> {
    /// Map label: the quadrant when significant, `NS` otherwise,
    /// `isolated` for zones without neighbours.
    pub fn map_label(&self) -> &'static str {
        match self.quadrant {
            Quadrant::Isolated => "isolated",
            q if self.significant => q.as_str(),
            _ => "NS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LisaResult<T> {
    pub zones: Vec<LocalMoran<T>>,
    pub alpha: T,
    pub permutations: usize,
    pub seed: u64,
}

impl<T: Scalar> LisaResult<T> {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn sum_i(&self) -> T {
        self.zones.iter().map(|z| z.i).sum()
    }

    /// Re-evaluate significance at another level without rerunning
    /// permutations.
    pub fn with_alpha(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.alpha = alpha;
        for z in &mut out.zones {
            z.significant = z.quadrant != Quadrant::Isolated && z.pseudo_p.is_some_and(|p| p <= alpha);
        }
        out
    }
}

/// `I_i = (z_i / m2) · Σ_j w_ij z_j` with `m2 = Σ z² / n`, plus the lags.
pub fn local_statistics<T: Scalar>(values: &[T], w: &SpatialWeights<T>) -> Result<(Vec<T>, Vec<T>)> {
    let z = checked_deviations(values, w)?;
    let m2 = z.iter().map(|&v| v * v).sum::<T>() / T::of_usize(z.len());
    let lag = w.lag(&z);
    let local = z.iter().zip(&lag).map(|(&zi, &l)| zi / m2 * l).collect();
    Ok((local, lag))
}

/// Anselin's local Moran with conditional-permutation pseudo p-values.
///
/// For each zone, `z_i` stays in place while its neighbours' weights are
/// applied to `k_i` values drawn without replacement from the other
/// `n − 1` deviations. The pseudo p-value counts draws at least as extreme
/// as the observed `I_i` in its own direction, `(count + 1) / (perms + 1)`.
/// Zone `i` draws from its own random stream, so results do not depend on
/// the thread count.
pub fn local_moran<T: Scalar>(
    values: &[T],
    w: &SpatialWeights<T>,
    permutations: usize,
    alpha: T,
    seed: u64,
) -> Result<LisaResult<T>> {
    let z = checked_deviations(values, w)?;
    let n = z.len();
    let m2 = z.iter().map(|&v| v * v).sum::<T>() / T::of_usize(n);
    let lag = w.lag(&z);

    let zones = (0..n)
        .into_par_iter()
        .map(|i| {
            let (cols, vals) = w.row(i);
            let local = z[i] / m2 * lag[i];
            if cols.is_empty() {
                return LocalMoran {
                    i: local,
                    lag: lag[i],
                    quadrant: Quadrant::Isolated,
                    pseudo_p: None,
                    significant: false,
                };
            }
            let pseudo_p = (permutations > 0).then(|| {
                let extreme = conditional_extremes(&z, i, vals, local, m2, permutations, seed);
                T::of_usize(extreme + 1) / T::of_usize(permutations + 1)
            });
            LocalMoran {
                i: local,
                lag: lag[i],
                quadrant: Quadrant::from_signs(z[i], lag[i]),
                pseudo_p,
                significant: pseudo_p.is_some_and(|p| p <= alpha),
            }
        })
        .collect();

    Ok(LisaResult {
        zones,
        alpha,
        permutations,
        seed,
    })
}

fn conditional_extremes<T: Scalar>(z: &[T], i: usize, weights: &[T], observed: T, m2: T, permutations: usize, seed: u64) -> usize {
    let mut rng = rng::local_permutation_stream(seed, i);
    let others = z.len() - 1;
    let k = weights.len();
    let mut pool: Vec<u32> = (0..z.len() as u32).filter(|&j| j as usize != i).collect();
    let scale = z[i] / m2;
    let upper = observed >= T::zero();
    let mut extreme = 0;
    for _ in 0..permutations {
        let mut lag = T::zero();
        for (m, &wij) in weights.iter().enumerate() {
            let pick = rng.gen_range(m..others);
            pool.swap(m, pick);
            lag = lag + wij * z[pool[m] as usize];
        }
        let sim = scale * lag;
        if (upper && sim >= observed) || (!upper && sim <= observed) {
            extreme += 1;
        }
    }
    debug_assert!(k <= others);
    extreme
}
