//! Modal solution storage: per cell, per conserved variable, per tensor mode.
//!
//! Within a cell the solution is w_h(xi) = sum_m c_m psi_m(xi) on the
//! reference element. In 2D the modes are tensor products
//! psi_{mx}(xi) psi_{my}(eta) indexed m = my (deg + 1) + mx. Cell averages
//! are c_0 / sqrt(2)^dim because psi_0 = 1 / sqrt(2) per axis.

use crate::basis;
use crate::error::{Result, SolverError};
use crate::euler::Primitive;
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub dim: usize,
    /// Conserved variable count: 3 in 1D, 4 in 2D.
    pub nvars: usize,
    /// Polynomial degree per axis.
    pub deg: usize,
    /// Interior cell counts (second entry 1 in 1D).
    pub n: [usize; 2],
    /// Layout: ((cell * nvars) + var) * nmodes + mode.
    pub coeffs: Vec<f64>,
    pub time: f64,
}

/// Pack a 4-slot conserved array into the stored variable order.
#[inline]
pub fn pack_vars(dim: usize, w: [f64; 4]) -> [f64; 4] {
    if dim == 1 {
        [w[0], w[1], w[3], 0.0]
    } else {
        w
    }
}

impl Field {
    pub fn zeros(mesh: &Mesh, deg: usize) -> Self {
        let nvars = if mesh.dim == 1 { 3 } else { 4 };
        let nmodes = (deg + 1).pow(mesh.dim as u32);
        Field {
            dim: mesh.dim,
            nvars,
            deg,
            n: mesh.n,
            coeffs: vec![0.0; mesh.cell_count() * nvars * nmodes],
            time: 0.0,
        }
    }

    #[inline]
    pub fn nmodes(&self) -> usize {
        (self.deg + 1).pow(self.dim as u32)
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    #[inline]
    pub fn idx(&self, cell: usize, var: usize, mode: usize) -> usize {
        (cell * self.nvars + var) * self.nmodes() + mode
    }

    /// Coefficient block of one cell: nvars * nmodes values.
    #[inline]
    pub fn cell_block(&self, cell: usize) -> &[f64] {
        let s = self.nvars * self.nmodes();
        &self.coeffs[cell * s..(cell + 1) * s]
    }

    #[inline]
    pub fn cell_block_mut(&mut self, cell: usize) -> &mut [f64] {
        let s = self.nvars * self.nmodes();
        &mut self.coeffs[cell * s..(cell + 1) * s]
    }

    /// Cell average of a stored variable.
    pub fn cell_average(&self, cell: usize, var: usize) -> f64 {
        let scale = (0.5f64).sqrt().powi(self.dim as i32);
        self.coeffs[self.idx(cell, var, 0)] * scale
    }

    /// L2 projection of a conserved-state function, exact for polynomial
    /// data up to the basis degree. `f` maps physical coordinates to the
    /// 4-slot conserved array (slot 2 ignored in 1D).
    pub fn project_conserved(
        mesh: &Mesh,
        deg: usize,
        f: impl Fn([f64; 2]) -> [f64; 4],
    ) -> Result<Self> {
        let mut field = Field::zeros(mesh, deg);
        let q = gauss_legendre(deg + 1)?;
        let m = deg + 1;
        let mut psi = vec![0.0; m * m];
        for (k, &x) in q.nodes.iter().enumerate() {
            basis::eval(deg, x, &mut psi[k * m..(k + 1) * m])?;
        }
        let nvars = field.nvars;
        let nmodes = field.nmodes();
        if mesh.dim == 1 {
            for ix in 0..mesh.n[0] {
                let cell = ix;
                for (k, &x) in q.nodes.iter().enumerate() {
                    let p = mesh.map_to_physical(ix as i64, 0, x, 0.0)?;
                    let w = pack_vars(1, f(p));
                    let wq = q.weights[k];
                    for var in 0..nvars {
                        let base = (cell * nvars + var) * nmodes;
                        for mode in 0..nmodes {
                            field.coeffs[base + mode] += w[var] * psi[k * m + mode] * wq;
                        }
                    }
                }
            }
        } else {
            for iy in 0..mesh.n[1] {
                for ix in 0..mesh.n[0] {
                    let cell = mesh.cell_linear(ix, iy);
                    for (ky, &y) in q.nodes.iter().enumerate() {
                        for (kx, &x) in q.nodes.iter().enumerate() {
                            let p = mesh.map_to_physical(ix as i64, iy as i64, x, y)?;
                            let w = f(p);
                            let wq = q.weights[kx] * q.weights[ky];
                            for var in 0..nvars {
                                let base = (cell * nvars + var) * nmodes;
                                for my in 0..m {
                                    let py = psi[ky * m + my];
                                    for mx in 0..m {
                                        field.coeffs[base + my * m + mx] +=
                                            w[var] * psi[kx * m + mx] * py * wq;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(field)
    }

    /// Project pointwise primitive data, converting to conserved variables
    /// at the quadrature points.
    pub fn project_primitive(
        mesh: &Mesh,
        deg: usize,
        gamma: f64,
        f: impl Fn([f64; 2]) -> Primitive,
    ) -> Result<Self> {
        Field::project_conserved(mesh, deg, |p| f(p).to_conserved(gamma).as_array())
    }

    /// Evaluate all stored variables at a reference point of a cell.
    /// `out.len()` must equal `nvars`. This is the generic (table-free)
    /// path used by diagnostics; residual assembly uses precomputed tables.
    pub fn eval_cell(&self, cell: usize, xi: f64, eta: f64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.nvars {
            return Err(SolverError::InvalidBasis(format!(
                "output slice holds {} values, need {}",
                out.len(),
                self.nvars
            )));
        }
        let m = self.deg + 1;
        let nmodes = self.nmodes();
        let mut px = vec![0.0; m];
        basis::eval(self.deg, xi, &mut px)?;
        if self.dim == 1 {
            for var in 0..self.nvars {
                let base = (cell * self.nvars + var) * nmodes;
                let mut s = 0.0;
                for mode in 0..nmodes {
                    s += self.coeffs[base + mode] * px[mode];
                }
                out[var] = s;
            }
        } else {
            let mut py = vec![0.0; m];
            basis::eval(self.deg, eta, &mut py)?;
            for var in 0..self.nvars {
                let base = (cell * self.nvars + var) * nmodes;
                let mut s = 0.0;
                for my in 0..m {
                    let mut sx = 0.0;
                    for mx in 0..m {
                        sx += self.coeffs[base + my * m + mx] * px[mx];
                    }
                    s += sx * py[my];
                }
                out[var] = s;
            }
        }
        Ok(())
    }

    /// Evaluate at a physical point. The containing cell is found by index
    /// arithmetic and clamped to the domain, so points on a face resolve to
    /// the cell on the positive side except at the upper domain edge.
    pub fn eval_physical(&self, mesh: &Mesh, x: [f64; 2], out: &mut [f64]) -> Result<()> {
        let locate = |axis: usize| -> usize {
            let raw = ((x[axis] - mesh.xmin[axis]) / mesh.dx[axis]).floor() as i64;
            raw.clamp(0, mesh.n[axis] as i64 - 1) as usize
        };
        let ix = locate(0);
        let xi = 2.0 * (x[0] - mesh.center_x(ix as i64)) / mesh.dx[0];
        let (cell, eta) = if self.dim == 1 {
            (ix, 0.0)
        } else {
            let iy = locate(1);
            (mesh.cell_linear(ix, iy), 2.0 * (x[1] - mesh.center_y(iy as i64)) / mesh.dx[1])
        };
        self.eval_cell(cell, xi, eta, out)
    }
}
