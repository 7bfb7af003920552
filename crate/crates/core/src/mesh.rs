//! Uniform Cartesian meshes in one and two dimensions with a ghost layer.
//!
//! Cells are addressed by signed per-axis indices; interior cells occupy
//! 0..n and ghost cells extend `ghost` layers beyond each boundary. The
//! affine map between a cell and the reference element [-1, 1]^d has the
//! constant Jacobian factor dx/2 per axis.

use crate::error::{Result, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub xmin: [f64; 2],
    pub xmax: [f64; 2],
    /// Interior cell counts per axis; the second entry is 1 in 1D.
    pub n: [usize; 2],
    pub dx: [f64; 2],
    pub ghost: usize,
}

impl Mesh {
    /// Build a uniform mesh. `bounds` and `counts` use only the first `dim`
    /// entries; ghost_width must be at least 1.
    pub fn new(
        dim: usize,
        bounds: [(f64, f64); 2],
        counts: [usize; 2],
        ghost_width: usize,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(SolverError::InvalidMesh(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if ghost_width == 0 {
            return Err(SolverError::InvalidMesh("ghost width must be >= 1".into()));
        }
        let mut xmin = [0.0; 2];
        let mut xmax = [1.0; 2];
        let mut n = [1usize; 2];
        let mut dx = [1.0; 2];
        for a in 0..dim {
            let (lo, hi) = bounds[a];
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(SolverError::InvalidMesh(format!(
                    "axis {a} bounds ({lo}, {hi}) are not an increasing finite interval"
                )));
            }
            if counts[a] == 0 {
                return Err(SolverError::InvalidMesh(format!(
                    "axis {a} needs at least one cell"
                )));
            }
            xmin[a] = lo;
            xmax[a] = hi;
            n[a] = counts[a];
            dx[a] = (hi - lo) / counts[a] as f64;
        }
        Ok(Mesh {
            dim,
            xmin,
            xmax,
            n,
            dx,
            ghost: ghost_width,
        })
    }

    pub fn new_1d(bounds: (f64, f64), count: usize) -> Result<Self> {
        Mesh::new(1, [bounds, (0.0, 1.0)], [count, 1], 1)
    }

    pub fn new_2d(bounds_x: (f64, f64), bounds_y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Mesh::new(2, [bounds_x, bounds_y], [nx, ny], 1)
    }

    /// Number of interior cells.
    pub fn cell_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Linear index of an interior cell.
    #[inline]
    pub fn cell_linear(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.n[0] && iy < self.n[1]);
        iy * self.n[0] + ix
    }

    /// True when the signed index addresses an interior or ghost cell.
    pub fn contains_index(&self, ix: i64, iy: i64) -> bool {
        let g = self.ghost as i64;
        let ok_x = ix >= -g && ix < self.n[0] as i64 + g;
        let ok_y = if self.dim == 2 {
            iy >= -g && iy < self.n[1] as i64 + g
        } else {
            iy == 0
        };
        ok_x && ok_y
    }

    /// Physical coordinates of a reference point (xi, eta) in cell (ix, iy).
    /// Ghost cells are valid targets; the reference point must lie in
    /// [-1, 1]^d.
    pub fn map_to_physical(&self, ix: i64, iy: i64, xi: f64, eta: f64) -> Result<[f64; 2]> {
        if !self.contains_index(ix, iy) {
            return Err(SolverError::InvalidMesh(format!(
                "cell ({ix}, {iy}) outside mesh (n = {:?}, ghost = {})",
                self.n, self.ghost
            )));
        }
        if !(-1.0..=1.0).contains(&xi) || (self.dim == 2 && !(-1.0..=1.0).contains(&eta)) {
            return Err(SolverError::InvalidMesh(format!(
                "reference point ({xi}, {eta}) outside [-1, 1]^{}",
                self.dim
            )));
        }
        Ok([
            self.center_x(ix) + 0.5 * self.dx[0] * xi,
            if self.dim == 2 {
                self.center_y(iy) + 0.5 * self.dx[1] * eta
            } else {
                0.0
            },
        ])
    }

    #[inline]
    pub fn center_x(&self, ix: i64) -> f64 {
        self.xmin[0] + (ix as f64 + 0.5) * self.dx[0]
    }

    #[inline]
    pub fn center_y(&self, iy: i64) -> f64 {
        self.xmin[1] + (iy as f64 + 0.5) * self.dx[1]
    }

    /// Coordinate of the x-face with index `ix` in 0..=n (left boundary 0).
    #[inline]
    pub fn face_x(&self, ix: usize) -> f64 {
        self.xmin[0] + ix as f64 * self.dx[0]
    }

    #[inline]
    pub fn face_y(&self, iy: usize) -> f64 {
        self.xmin[1] + iy as f64 * self.dx[1]
    }

    /// Product of per-axis Jacobian factors dx_a / 2.
    pub fn jacobian(&self) -> f64 {
        let mut j = 0.5 * self.dx[0];
        if self.dim == 2 {
            j *= 0.5 * self.dx[1];
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_dimensional_spacing_and_centers() {
        let m = Mesh::new_1d((0.0, 1.0), 8).unwrap();
        assert_abs_diff_eq!(m.dx[0], 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(m.center_x(0), 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn two_dimensional_square() {
        let m = Mesh::new_2d((0.0, 1.0), (0.0, 1.0), 16, 16).unwrap();
        assert_abs_diff_eq!(m.dx[0], 0.0625, epsilon = 1e-15);
        assert_abs_diff_eq!(m.dx[1], 0.0625, epsilon = 1e-15);
        assert_abs_diff_eq!(m.jacobian(), 0.0625 * 0.0625 / 4.0, epsilon = 1e-18);
    }

    #[test]
    fn disc_geometry() {
        let m = Mesh::new_2d((-6.0, 6.0), (-6.0, 6.0), 128, 128).unwrap();
        assert_abs_diff_eq!(m.dx[0], 12.0 / 128.0, epsilon = 1e-15);
        assert_eq!(m.cell_count(), 128 * 128);
    }

    #[test]
    fn map_endpoints_and_center() {
        let m = Mesh::new_1d((0.0, 1.0), 8).unwrap();
        let left = m.map_to_physical(0, 0, -1.0, 0.0).unwrap();
        let right = m.map_to_physical(0, 0, 1.0, 0.0).unwrap();
        let mid = m.map_to_physical(3, 0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(left[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(right[0], 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(mid[0], m.center_x(3), epsilon = 1e-15);
    }

    #[test]
    fn ghost_cells_map_outside_domain() {
        let m = Mesh::new_1d((0.0, 1.0), 8).unwrap();
        let p = m.map_to_physical(-1, 0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(p[0], -0.0625, epsilon = 1e-15);
        assert!(m.map_to_physical(-2, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn map_round_trip() {
        let m = Mesh::new_2d((-6.0, 6.0), (-6.0, 6.0), 37, 41).unwrap();
        for &(ix, iy, xi, eta) in &[(0i64, 0i64, -0.3, 0.9), (36, 40, 1.0, -1.0), (17, 5, 0.0, 0.2)]
        {
            let p = m.map_to_physical(ix, iy, xi, eta).unwrap();
            let back_xi = (p[0] - m.center_x(ix)) / (0.5 * m.dx[0]);
            let back_eta = (p[1] - m.center_y(iy)) / (0.5 * m.dx[1]);
            assert_abs_diff_eq!(back_xi, xi, epsilon = 1e-13);
            assert_abs_diff_eq!(back_eta, eta, epsilon = 1e-13);
        }
    }

    #[test]
    fn invalid_meshes_rejected() {
        assert!(Mesh::new(3, [(0.0, 1.0), (0.0, 1.0)], [4, 4], 1).is_err());
        assert!(Mesh::new(1, [(1.0, 0.0), (0.0, 1.0)], [4, 1], 1).is_err());
        assert!(Mesh::new(1, [(0.0, 1.0), (0.0, 1.0)], [0, 1], 1).is_err());
        assert!(Mesh::new(2, [(0.0, 1.0), (0.0, 1.0)], [4, 4], 0).is_err());
    }

    #[test]
    fn reference_point_outside_cell_rejected() {
        let m = Mesh::new_1d((0.0, 1.0), 4).unwrap();
        assert!(m.map_to_physical(0, 0, 1.5, 0.0).is_err());
    }
}
