use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the relative inertia decrease falls below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 6,
            restarts: 50,
            max_iter: 300,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterModel<T> {
    pub k: usize,
    /// `centers[g - 1]` is the center of group `g`.
    pub centers: Vec<Vec<T>>,
    /// Group id in `1..=k` per point.
    pub assignments: Vec<usize>,
    pub inertia: T,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<T>,
    pub seed: u64,
    pub restarts: usize,
    pub best_restart: usize,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &g in &self.assignments {
            sizes[g - 1] += 1;
        }
        sizes
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center (lowest index on ties) and its squared distance.
pub fn nearest<T: Scalar>(p: &[T], centers: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(p, &centers[0]));
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lexical<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn distinct_count<T: Scalar>(points: &[Vec<T>]) -> usize {
    let mut sorted: Vec<&Vec<T>> = points.iter().collect();
    sorted.sort_by(|a, b| lexical(a, b));
    sorted.dedup_by(|a, b| lexical(a, b).is_eq());
    sorted.len()
}

struct Run<T> {
    centers: Vec<Vec<T>>,
    labels: Vec<usize>,
    inertia: T,
    trace: Vec<T>,
}

fn plus_plus_init<T: Scalar, R: Rng>(points: &[Vec<T>], k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<T> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: T = d2.iter().copied().sum();
        let mut target = T::of(rng.gen::<f64>()) * total;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > T::zero() {
                pick = Some(i);
                if target < d {
                    break;
                }
                target = target - d;
            }
        }
        // At least one point has positive mass while fewer than k distinct
        // points are centers.
        let pick = pick.expect("distinct points remain");
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn assign<T: Scalar>(points: &[Vec<T>], centers: &[Vec<T>]) -> (Vec<usize>, T) {
    let mut inertia = T::zero();
    let labels = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centers);
            inertia = inertia + d;
            c
        })
        .collect();
    (labels, inertia)
}

fn means<T: Scalar>(points: &[Vec<T>], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<T>>, Vec<usize>) {
    let mut sums = vec![vec![T::zero(); dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(p) {
            *s = *s + v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            let cf = T::of_usize(c);
            s.iter_mut().for_each(|v| *v = *v / cf);
        }
    }
    (sums, counts)
}

/// Center update. An empty cluster takes over the point farthest from its
/// current center; the donor cluster's mean is recomputed without it.
fn update<T: Scalar>(points: &[Vec<T>], labels: &mut [usize], k: usize, dim: usize) -> Vec<Vec<T>> {
    let (mut centers, mut counts) = means(points, labels, k, dim);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let (far, _) = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| counts[labels[i]] > 1)
            .map(|(i, p)| (i, sq_dist(p, &centers[labels[i]])))
            .fold((usize::MAX, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if far == usize::MAX {
            break;
        }
        labels[far] = empty;
        (centers, counts) = means(points, labels, k, dim);
    }
    centers
}

fn lloyd<T: Scalar>(points: &[Vec<T>], cfg: &KMeansConfig, restart: usize) -> Run<T> {
    let dim = points[0].len();
    let mut rng = rng::stream(cfg.seed, restart as u64);
    let mut centers = plus_plus_init(points, cfg.k, &mut rng);
    let (mut labels, mut inertia) = assign(points, &centers);
    let mut trace = vec![inertia];
    let tol = T::of(cfg.tol);

    for _ in 0..cfg.max_iter {
        let mut next_labels = labels.clone();
        let next_centers = update(points, &mut next_labels, cfg.k, dim);
        let (next_labels, next_inertia) = assign(points, &next_centers);
        // A step that fails to decrease inertia (rounding) is convergence.
        if next_inertia > inertia {
            break;
        }
        let change = inertia - next_inertia;
        let had_empty = {
            let mut seen = vec![false; cfg.k];
            next_labels.iter().for_each(|&l| seen[l] = true);
            seen.contains(&false)
        };
        centers = next_centers;
        labels = next_labels;
        inertia = next_inertia;
        trace.push(inertia);
        if !had_empty && (inertia == T::zero() || change <= tol * (inertia + change)) {
            break;
        }
    }
    Run {
        centers,
        labels,
        inertia,
        trace,
    }
}

/// K-means with k-means++ seeding and `restarts` independent runs; the run
/// with the lowest inertia wins (ties go to the lower restart index).
/// Groups are renumbered 1..=k by descending sum of center coordinates.
pub fn kmeans<T: Scalar>(points: &[Vec<T>], cfg: &KMeansConfig) -> Result<ClusterModel<T>> {
    if cfg.k == 0 || cfg.restarts == 0 {
        return Err(Error::Config("k and restarts must be at least 1".into()));
    }
    let Some(dim) = points.first().map(Vec::len) else {
        return Err(Error::Numeric(format!("need at least {} distinct points, got 0", cfg.k)));
    };
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric("points must be finite and of equal dimension".into()));
    }
    let distinct = distinct_count(points);
    if distinct < cfg.k {
        return Err(Error::Numeric(format!("need at least {} distinct points, got {distinct}", cfg.k)));
    }

    let runs: Vec<Run<T>> = (0..cfg.restarts).into_par_iter().map(|r| lloyd(points, cfg, r)).collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("at least one restart");

    let mut order: Vec<usize> = (0..cfg.k).collect();
    let key = |c: usize| best.centers[c].iter().copied().sum::<T>();
    order.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut group_of = vec![0; cfg.k];
    for (g, &c) in order.iter().enumerate() {
        group_of[c] = g + 1;
    }

    Ok(ClusterModel {
        k: cfg.k,
        centers: order.iter().map(|&c| best.centers[c].clone()).collect(),
        assignments: best.labels.iter().map(|&l| group_of[l]).collect(),
        inertia: best.inertia,
        inertia_trace: best.trace,
        seed: cfg.seed,
        restarts: cfg.restarts,
        best_restart,
    })
}

/// Per-group size, mean and sample sd of each variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupProfile<T> {
    /// `None` for the Total row.
    pub group: Option<usize>,
    pub count: usize,
    pub means: Vec<T>,
    pub sds: Vec<T>,
}

/// One row per group plus a trailing Total row. `variables[v][zone]`.
/// Singleton groups report sd 0.
pub fn group_profiles<T: Scalar>(model: &ClusterModel<T>, variables: &[Vec<T>]) -> Result<Vec<GroupProfile<T>>> {
    let n = model.assignments.len();
    if let Some(v) = variables.iter().find(|v| v.len() != n) {
        return Err(Error::Data(format!("variable has {} values for {n} assignments", v.len())));
    }
    let profile = |group: Option<usize>| {
        let members: Vec<usize> = (0..n).filter(|&i| group.is_none_or(|g| model.assignments[i] == g)).collect();
        let count = members.len();
        let (means, sds) = variables
            .iter()
            .map(|v| {
                if count == 0 {
                    return (T::nan(), T::nan());
                }
                let mean = members.iter().map(|&i| v[i]).sum::<T>() / T::of_usize(count);
                let sd = if count > 1 {
                    (members.iter().map(|&i| (v[i] - mean) * (v[i] - mean)).sum::<T>() / T::of_usize(count - 1)).sqrt()
                } else {
                    T::zero()
                };
                (mean, sd)
            })
            .unzip();
        GroupProfile { group, count, means, sds }
    };
    Ok((1..=model.k).map(|g| profile(Some(g))).chain(std::iter::once(profile(None))).collect())
}
