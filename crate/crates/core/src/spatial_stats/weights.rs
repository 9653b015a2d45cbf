use crate::error::{Error, Result};
use crate::ingest::CrsMode;
use crate::scalar::Scalar;
use crate::zones::geometry::{Coord, EARTH_RADIUS_M};
use crate::zones::{distance_m, Zone};

/// Distances below this are clamped before inverting.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Sparse spatial weights in compressed-row form, `w_ii = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    s0: T,
    s1: T,
    s2: T,
    pub threshold_m: f64,
    pub row_standardized: bool,
}

impl<T: Scalar> SpatialWeights<T> {
    /// Build from per-row `(column, weight)` lists. Zero weights are
    /// dropped; negative, non-finite or diagonal entries are rejected.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Data(format!("duplicate weight ({i}, {})", w[0].0)));
                }
            }
            for (j, w) in row {
                if j >= n || j == i {
                    return Err(Error::Data(format!("invalid weight index ({i}, {j})")));
                }
                if !w.is_finite() || w < T::zero() {
                    return Err(Error::Data(format!("invalid weight w({i}, {j}) = {w}")));
                }
                if w > T::zero() {
                    cols.push(j);
                    vals.push(w);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut w = SpatialWeights {
            n,
            row_ptr,
            cols,
            vals,
            s0: T::zero(),
            s1: T::zero(),
            s2: T::zero(),
            threshold_m: f64::INFINITY,
            row_standardized: false,
        };
        w.compute_sums();
        Ok(w)
    }

    /// Dense constructor; the diagonal is ignored.
    pub fn from_dense(dense: &[Vec<T>]) -> Result<Self> {
        let rows = dense
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, &w)| (j, w)).collect())
            .collect();
        Self::from_rows(rows)
    }

    fn compute_sums(&mut self) {
        let n = self.n;
        let mut row_sum = vec![T::zero(); n];
        let mut col_sum = vec![T::zero(); n];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &w) in cols.iter().zip(vals) {
                row_sum[i] = row_sum[i] + w;
                col_sum[j] = col_sum[j] + w;
            }
        }
        self.s0 = row_sum.iter().copied().sum();
        // Each stored (i, j) covers ordered pair (i, j); when w_ji = 0 the
        // mirrored pair (j, i) is not stored and is added here as well.
        let mut s1 = T::zero();
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &w) in cols.iter().zip(vals) {
                let back = self.get(j, i);
                let sym = w + back;
                s1 = s1 + sym * sym;
                if back == T::zero() {
                    s1 = s1 + w * w;
                }
            }
        }
        self.s1 = s1 / T::of(2.0);
        self.s2 = (0..n).map(|i| (row_sum[i] + col_sum[i]) * (row_sum[i] + col_sum[i])).sum();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Σ_i Σ_j w_ij.
    pub fn s0(&self) -> T {
        self.s0
    }

    /// ½ Σ_i Σ_j (w_ij + w_ji)².
    pub fn s1(&self) -> T {
        self.s1
    }

    /// Σ_i (w_i. + w_.i)².
    pub fn s2(&self) -> T {
        self.s2
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices (ascending) and weights of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn neighbor_count(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |k| vals[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &w) in cols.iter().zip(vals) {
                row[j] = w;
            }
        }
        d
    }

    /// Spatial lag `Σ_j w_ij x_j` for every `i`.
    pub fn lag(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &w)| w * x[j]).sum()
            })
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &w)| self.get(j, i) == w)
        })
    }

    /// Divide each row by its sum; empty rows stay empty.
    pub fn row_standardize(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let total: T = self.vals[a..b].iter().copied().sum();
            if total > T::zero() {
                for v in &mut out.vals[a..b] {
                    *v = *v / total;
                }
            }
        }
        out.row_standardized = true;
        out.compute_sums();
        out
    }
}

/// Inverse-distance weights within a distance band.
///
/// `w_ij = 1 / max(d_ij, 1 m)` when `d_ij <= threshold_m`, else 0, where
/// `d` is the haversine (geographic) or Euclidean (projected) distance
/// between points.
pub fn build_weights_from_points<T: Scalar>(
    points: &[Coord],
    crs: CrsMode,
    threshold_m: f64,
    row_standardize: bool,
) -> Result<SpatialWeights<T>> {
    if !(threshold_m > 0.0) || !threshold_m.is_finite() {
        return Err(Error::Config(format!("distance threshold must be positive, got {threshold_m}")));
    }
    if points.len() < 2 {
        return Err(Error::Data(format!("need at least 2 zones for spatial weights, got {}", points.len())));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite centroid".into()));
    }

    // Sweep in order of the second coordinate. For haversine distances the
    // meridional separation R·|Δφ| is a lower bound, so the window is exact.
    let band = match crs {
        CrsMode::Projected => threshold_m,
        CrsMode::Geographic => (threshold_m / EARTH_RADIUS_M).to_degrees(),
    } * (1.0 + 1e-9);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][1].total_cmp(&points[b][1]).then(a.cmp(&b)));

    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); points.len()];
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j][1] - points[i][1] > band {
                break;
            }
            let d = distance_m(points[i], points[j], crs);
            if d <= threshold_m {
                let w = T::of(1.0 / d.max(MIN_DISTANCE_M));
                rows[i].push((j, w));
                rows[j].push((i, w));
            }
        }
    }
    let mut w = SpatialWeights::from_rows(rows)?;
    w.threshold_m = threshold_m;
    Ok(if row_standardize { w.row_standardize() } else { w })
}

/// Weights over zone centroids.
pub fn build_weights<T: Scalar>(zones: &[Zone], crs: CrsMode, threshold_m: f64, row_standardize: bool) -> Result<SpatialWeights<T>> {
    let centroids: Vec<Coord> = zones.iter().map(|z| z.centroid).collect();
    build_weights_from_points(&centroids, crs, threshold_m, row_standardize)
}
