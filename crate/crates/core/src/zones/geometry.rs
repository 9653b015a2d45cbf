//! Planar polygon primitives: shoelace area, ring centroids, even-odd
//! containment and boundary tests.

pub type Coord = [f64; 2];

/// Mean Earth radius used for haversine distances and local projections.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Absolute tolerance for the on-boundary test, in coordinate units.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Coord,
    pub max: Coord,
}

impl BBox {
    pub fn empty() -> Self {
        BBox {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        }
    }

    pub fn extend(&mut self, p: Coord) {
        for k in 0..2 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn union(&mut self, other: &BBox) {
        self.extend(other.min);
        self.extend(other.max);
    }

    pub fn contains(&self, p: Coord, eps: f64) -> bool {
        p[0] >= self.min[0] - eps && p[0] <= self.max[0] + eps && p[1] >= self.min[1] - eps && p[1] <= self.max[1] + eps
    }
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Coord]) -> f64 {
    let Some(&origin) = ring.first() else {
        return 0.0;
    };
    let mut acc = 0.0;
    for w in ring.windows(2) {
        let (ax, ay) = (w[0][0] - origin[0], w[0][1] - origin[1]);
        let (bx, by) = (w[1][0] - origin[0], w[1][1] - origin[1]);
        acc += ax * by - bx * ay;
    }
    acc / 2.0
}

/// Centroid of the region enclosed by a closed ring (orientation-independent).
pub fn ring_centroid(ring: &[Coord]) -> Option<Coord> {
    let origin = *ring.first()?;
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in ring.windows(2) {
        let (ax, ay) = (w[0][0] - origin[0], w[0][1] - origin[1]);
        let (bx, by) = (w[1][0] - origin[0], w[1][1] - origin[1]);
        let cross = ax * by - bx * ay;
        a += cross;
        cx += (ax + bx) * cross;
        cy += (ay + by) * cross;
    }
    if a == 0.0 {
        return None;
    }
    Some([origin[0] + cx / (3.0 * a), origin[1] + cy / (3.0 * a)])
}

/// True if `p` lies on segment `a`-`b` within `eps`.
pub fn on_segment(p: Coord, a: Coord, b: Coord, eps: f64) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return (p[0] - a[0]).hypot(p[1] - a[1]) <= eps;
    }
    let cross = dx * (p[1] - a[1]) - dy * (p[0] - a[0]);
    if cross.abs() > eps * len {
        return false;
    }
    let t = (p[0] - a[0]) * dx + (p[1] - a[1]) * dy;
    t >= -eps * len && t <= len * len + eps * len
}

pub fn on_ring_boundary(p: Coord, ring: &[Coord], eps: f64) -> bool {
    ring.windows(2).any(|w| on_segment(p, w[0], w[1], eps))
}

/// Even-odd ray casting over all rings of one polygon (holes included).
pub fn even_odd(p: Coord, rings: &[Vec<Coord>]) -> bool {
    let mut inside = false;
    for ring in rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn haversine_m(a: Coord, b: Coord) -> f64 {
    let (lat1, lat2) = (a[1].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b[0] - a[0]).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

pub fn euclidean(a: Coord, b: Coord) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Equirectangular projection about a reference latitude, meters.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection {
    cos_ref: f64,
}

impl LocalProjection {
    pub fn at_latitude(lat_deg: f64) -> Self {
        LocalProjection {
            cos_ref: lat_deg.to_radians().cos(),
        }
    }

    pub fn forward(&self, p: Coord) -> Coord {
        [
            EARTH_RADIUS_M * p[0].to_radians() * self.cos_ref,
            EARTH_RADIUS_M * p[1].to_radians(),
        ]
    }

    pub fn inverse(&self, q: Coord) -> Coord {
        [
            (q[0] / (EARTH_RADIUS_M * self.cos_ref)).to_degrees(),
            (q[1] / EARTH_RADIUS_M).to_degrees(),
        ]
    }
}
