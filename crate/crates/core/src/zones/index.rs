use super::geometry::{BBox, Coord, BOUNDARY_EPS};
use super::Zone;

/// Uniform grid over zone bounding boxes. Each cell lists, in ascending
/// `zone_id` order, every zone whose (slightly inflated) bbox touches it.
#[derive(Debug, Clone)]
pub struct ZoneGrid {
    bounds: BBox,
    nx: usize,
    ny: usize,
    cell: [f64; 2],
    cells: Vec<Vec<u32>>,
}

impl ZoneGrid {
    pub fn build(zones: &[Zone]) -> Self {
        let mut bounds = BBox::empty();
        for z in zones {
            bounds.union(&z.bbox);
        }
        let side = ((zones.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let (nx, ny) = (side, side);
        let span = [
            (bounds.max[0] - bounds.min[0]).max(f64::MIN_POSITIVE),
            (bounds.max[1] - bounds.min[1]).max(f64::MIN_POSITIVE),
        ];
        let cell = [span[0] / nx as f64, span[1] / ny as f64];
        let mut grid = ZoneGrid {
            bounds,
            nx,
            ny,
            cell,
            cells: vec![Vec::new(); nx * ny],
        };

        let mut order: Vec<usize> = (0..zones.len()).collect();
        order.sort_by(|&a, &b| zones[a].zone_id.cmp(&zones[b].zone_id));
        for zi in order {
            let bb = &zones[zi].bbox;
            let (x0, y0) = grid.cell_of_clamped([bb.min[0] - BOUNDARY_EPS, bb.min[1] - BOUNDARY_EPS]);
            let (x1, y1) = grid.cell_of_clamped([bb.max[0] + BOUNDARY_EPS, bb.max[1] + BOUNDARY_EPS]);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    grid.cells[cy * nx + cx].push(zi as u32);
                }
            }
        }
        grid
    }

    fn cell_of_clamped(&self, p: Coord) -> (usize, usize) {
        let fx = ((p[0] - self.bounds.min[0]) / self.cell[0]).floor();
        let fy = ((p[1] - self.bounds.min[1]) / self.cell[1]).floor();
        (
            (fx.max(0.0) as usize).min(self.nx - 1),
            (fy.max(0.0) as usize).min(self.ny - 1),
        )
    }

    /// Candidate zones for `p`, sorted by zone id.
    pub fn candidates(&self, p: Coord) -> &[u32] {
        if !self.bounds.contains(p, BOUNDARY_EPS) {
            return &[];
        }
        let (cx, cy) = self.cell_of_clamped(p);
        &self.cells[cy * self.nx + cx]
    }
}
