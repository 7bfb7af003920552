//! Perturbation-form solver pieces: the evolved unknown is the deviation
//! dw_h from a projected reference equilibrium, and the assembly subtracts
//! equilibrium flux and source samples point by point (see `dg`).
//!
//! The equilibrium samples can either be recomputed analytically at every
//! evaluation or read from a cache filled once per (mesh, degree). Both
//! paths run the sampling helpers below on coordinates produced by the
//! same functions the assembly itself uses, so the two strategies are
//! bitwise interchangeable.

use crate::dg::{self, DgTables, EqTerms, Operator, VolTerms};
use crate::equilibria::Equilibrium;
use crate::error::{Result, SolverError};
use crate::euler::{d1, d2, Primitive};
use crate::field::{pack_vars, Field};
use crate::mesh::Mesh;

/// How equilibrium terms are produced during residual evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Evaluate the equilibrium closures at every quadrature point on
    /// every call.
    Recompute,
    /// Read precomputed states, fluxes and compact sources.
    Stored,
}

// Stored layout per point. Volume points keep the packed state, the
// normal fluxes and only the nonzero source slots (momentum and energy);
// face points keep the packed state and the normal flux.
const VOL_STRIDE_1D: usize = 8; // 3 state + 3 flux + 2 source
const VOL_STRIDE_2D: usize = 15; // 4 state + 4 + 4 flux + 3 source
const FACE_STRIDE_1D: usize = 6;
const FACE_STRIDE_2D: usize = 8;

/// Equilibrium samples for one (equilibrium, mesh, degree) triple.
pub struct EqCache {
    strategy: Strategy,
    eq: Equilibrium,
    dim: usize,
    nq: usize,
    vol: Vec<f64>,
    face_x: Vec<f64>,
    face_y: Vec<f64>,
}

/// Sample the equilibrium at one volume point through the same flux and
/// source kernels the assembly applies to the numerical state. The
/// all-zero reference short-circuits to literal zeros; running the
/// kernels on vacuum would divide by zero.
pub fn sample_volume(eq: &Equilibrium, dim: usize, x: [f64; 2]) -> Result<VolTerms> {
    if eq.is_zero_state() {
        return Ok(VolTerms::ZERO);
    }
    let packed = pack_vars(dim, eq.conserved_at(x));
    if dim == 1 {
        let u = [packed[0], packed[1], packed[2]];
        let p = d1::pressure(&u, eq.gamma);
        check_sample(u[0], p, eq, x)?;
        let f = d1::flux(&u, p);
        let g = eq.grad_phi_at(x)[0];
        let s = d1::source(&u, g);
        Ok(VolTerms {
            state: packed,
            flux_x: [f[0], f[1], f[2], 0.0],
            flux_y: [0.0; 4],
            source: [s[0], s[1], s[2], 0.0],
        })
    } else {
        let p = d2::pressure(&packed, eq.gamma);
        check_sample(packed[0], p, eq, x)?;
        Ok(VolTerms {
            state: packed,
            flux_x: d2::flux(&packed, p, 0),
            flux_y: d2::flux(&packed, p, 1),
            source: d2::source(&packed, eq.grad_phi_at(x)),
        })
    }
}

/// Equilibrium state and normal flux at one face point.
pub fn sample_face(
    eq: &Equilibrium,
    dim: usize,
    axis: usize,
    x: [f64; 2],
) -> Result<([f64; 4], [f64; 4])> {
    if eq.is_zero_state() {
        return Ok(([0.0; 4], [0.0; 4]));
    }
    let packed = pack_vars(dim, eq.conserved_at(x));
    if dim == 1 {
        let u = [packed[0], packed[1], packed[2]];
        let p = d1::pressure(&u, eq.gamma);
        check_sample(u[0], p, eq, x)?;
        let f = d1::flux(&u, p);
        Ok((packed, [f[0], f[1], f[2], 0.0]))
    } else {
        let p = d2::pressure(&packed, eq.gamma);
        check_sample(packed[0], p, eq, x)?;
        Ok((packed, d2::flux(&packed, p, axis)))
    }
}

fn check_sample(rho: f64, p: f64, eq: &Equilibrium, x: [f64; 2]) -> Result<()> {
    if rho > 0.0 && p > 0.0 {
        Ok(())
    } else {
        Err(SolverError::Inadmissible {
            context: format!("equilibrium '{}' sample at ({}, {})", eq.name, x[0], x[1]),
            rho,
            pressure: p,
        })
    }
}

impl EqCache {
    pub fn build(
        eq: &Equilibrium,
        mesh: &Mesh,
        tables: &DgTables,
        strategy: Strategy,
    ) -> Result<Self> {
        let dim = mesh.dim;
        assert_eq!(eq.dim, dim, "equilibrium dimension mismatch");
        let nq = tables.nq;
        let mut cache = EqCache {
            strategy,
            eq: eq.clone(),
            dim,
            nq,
            vol: Vec::new(),
            face_x: Vec::new(),
            face_y: Vec::new(),
        };
        if strategy == Strategy::Recompute {
            return Ok(cache);
        }
        let (nx, ny) = (mesh.n[0], mesh.n[1]);
        if dim == 1 {
            cache.vol.reserve(nx * nq * VOL_STRIDE_1D);
            for ix in 0..nx {
                for q in 0..nq {
                    let x = dg::volume_point(mesh, tables, ix, 0, q, 0);
                    let vt = sample_volume(eq, dim, x)?;
                    cache.vol.extend_from_slice(&vt.state[..3]);
                    cache.vol.extend_from_slice(&vt.flux_x[..3]);
                    cache.vol.push(vt.source[1]);
                    cache.vol.push(vt.source[2]);
                }
            }
            cache.face_x.reserve((nx + 1) * FACE_STRIDE_1D);
            for fx in 0..=nx {
                let x = dg::face_point_x(mesh, tables, fx, 0, 0);
                let (state, flux) = sample_face(eq, dim, 0, x)?;
                cache.face_x.extend_from_slice(&state[..3]);
                cache.face_x.extend_from_slice(&flux[..3]);
            }
        } else {
            cache.vol.reserve(nx * ny * nq * nq * VOL_STRIDE_2D);
            for iy in 0..ny {
                for ix in 0..nx {
                    for qy in 0..nq {
                        for qx in 0..nq {
                            let x = dg::volume_point(mesh, tables, ix, iy, qx, qy);
                            let vt = sample_volume(eq, dim, x)?;
                            cache.vol.extend_from_slice(&vt.state);
                            cache.vol.extend_from_slice(&vt.flux_x);
                            cache.vol.extend_from_slice(&vt.flux_y);
                            cache.vol.extend_from_slice(&vt.source[1..4]);
                        }
                    }
                }
            }
            cache.face_x.reserve(ny * (nx + 1) * nq * FACE_STRIDE_2D);
            for iy in 0..ny {
                for fx in 0..=nx {
                    for k in 0..nq {
                        let x = dg::face_point_x(mesh, tables, fx, iy, k);
                        let (state, flux) = sample_face(eq, dim, 0, x)?;
                        cache.face_x.extend_from_slice(&state);
                        cache.face_x.extend_from_slice(&flux);
                    }
                }
            }
            cache.face_y.reserve((ny + 1) * nx * nq * FACE_STRIDE_2D);
            for fy in 0..=ny {
                for ix in 0..nx {
                    for k in 0..nq {
                        let x = dg::face_point_y(mesh, tables, ix, fy, k);
                        let (state, flux) = sample_face(eq, dim, 1, x)?;
                        cache.face_y.extend_from_slice(&state);
                        cache.face_y.extend_from_slice(&flux);
                    }
                }
            }
        }
        Ok(cache)
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    /// Number of stored f64 samples (zero for the recompute strategy).
    pub fn value_count(&self) -> usize {
        self.vol.len() + self.face_x.len() + self.face_y.len()
    }

    pub fn bytes(&self) -> usize {
        self.value_count() * std::mem::size_of::<f64>()
    }

    #[inline]
    pub fn vol_terms(&self, cell: usize, q: usize, x: [f64; 2]) -> VolTerms {
        match self.strategy {
            Strategy::Recompute => {
                sample_volume(&self.eq, self.dim, x).expect("equilibrium admissible on build")
            }
            Strategy::Stored => {
                if self.dim == 1 {
                    let o = (cell * self.nq + q) * VOL_STRIDE_1D;
                    let v = &self.vol[o..o + VOL_STRIDE_1D];
                    VolTerms {
                        state: [v[0], v[1], v[2], 0.0],
                        flux_x: [v[3], v[4], v[5], 0.0],
                        flux_y: [0.0; 4],
                        source: [0.0, v[6], v[7], 0.0],
                    }
                } else {
                    let o = (cell * self.nq * self.nq + q) * VOL_STRIDE_2D;
                    let v = &self.vol[o..o + VOL_STRIDE_2D];
                    VolTerms {
                        state: [v[0], v[1], v[2], v[3]],
                        flux_x: [v[4], v[5], v[6], v[7]],
                        flux_y: [v[8], v[9], v[10], v[11]],
                        source: [0.0, v[12], v[13], v[14]],
                    }
                }
            }
        }
    }

    #[inline]
    pub fn face_terms(&self, axis: usize, face: usize, k: usize, x: [f64; 2]) -> ([f64; 4], [f64; 4]) {
        match self.strategy {
            Strategy::Recompute => {
                sample_face(&self.eq, self.dim, axis, x).expect("equilibrium admissible on build")
            }
            Strategy::Stored => {
                if self.dim == 1 {
                    let o = face * FACE_STRIDE_1D;
                    let v = &self.face_x[o..o + FACE_STRIDE_1D];
                    ([v[0], v[1], v[2], 0.0], [v[3], v[4], v[5], 0.0])
                } else {
                    let store = if axis == 0 { &self.face_x } else { &self.face_y };
                    let o = (face * self.nq + k) * FACE_STRIDE_2D;
                    let v = &store[o..o + FACE_STRIDE_2D];
                    (
                        [v[0], v[1], v[2], v[3]],
                        [v[4], v[5], v[6], v[7]],
                    )
                }
            }
        }
    }

    /// Packed equilibrium state at a volume quadrature point.
    #[inline]
    pub fn vol_state(&self, cell: usize, q: usize, x: [f64; 2]) -> [f64; 4] {
        self.vol_terms(cell, q, x).state
    }

    /// Packed equilibrium state at a face quadrature point.
    #[inline]
    pub fn face_state(&self, axis: usize, face: usize, k: usize, x: [f64; 2]) -> [f64; 4] {
        self.face_terms(axis, face, k, x).0
    }
}

/// View adapter feeding cache samples into the shared assembly.
pub struct DeltaTerms<'a> {
    pub cache: &'a EqCache,
}

impl EqTerms for DeltaTerms<'_> {
    const ACTIVE: bool = true;

    #[inline]
    fn face_state(&self, axis: usize, face: usize, k: usize, x: [f64; 2]) -> [f64; 4] {
        self.cache.face_terms(axis, face, k, x).0
    }

    #[inline]
    fn face_flux(&self, axis: usize, face: usize, k: usize, x: [f64; 2]) -> [f64; 4] {
        self.cache.face_terms(axis, face, k, x).1
    }

    #[inline]
    fn volume(&self, cell: usize, q: usize, x: [f64; 2]) -> VolTerms {
        self.cache.vol_terms(cell, q, x)
    }
}

/// Residual of the deviation field. The ghost deviation is zero, so under
/// the equilibrium boundary the outer trace of w_num is the equilibrium
/// face sample itself.
pub fn residual_wb(
    op: &Operator,
    cache: &EqCache,
    gravity: &crate::equilibria::Gravity,
    delta: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    dg::assemble(op, &DeltaTerms { cache }, gravity, delta, t, out)
}

/// Project the pointwise difference between an initial condition and the
/// reference equilibrium. When the two coincide the quadrature sees exact
/// zeros and every coefficient comes out as +0.0.
pub fn project_delta(
    mesh: &Mesh,
    deg: usize,
    gamma: f64,
    ic: impl Fn([f64; 2]) -> Primitive,
    eq: &Equilibrium,
) -> Result<Field> {
    Field::project_conserved(mesh, deg, |x| {
        let w = ic(x).to_conserved(gamma).as_array();
        let we = eq.conserved_at(x);
        [w[0] - we[0], w[1] - we[1], w[2] - we[2], w[3] - we[3]]
    })
}

/// Quadrature means of the equilibrium over every cell, in packed variable
/// order. Used for signal-speed estimates when stepping the deviation.
pub fn equilibrium_cell_means(
    eq: &Equilibrium,
    mesh: &Mesh,
    tables: &DgTables,
) -> Result<Vec<[f64; 4]>> {
    let nq = tables.nq;
    let mut out = Vec::with_capacity(mesh.cell_count());
    if eq.is_zero_state() {
        out.resize(mesh.cell_count(), [0.0; 4]);
        return Ok(out);
    }
    if mesh.dim == 1 {
        for ix in 0..mesh.n[0] {
            let mut mean = [0.0; 4];
            for q in 0..nq {
                let x = dg::volume_point(mesh, tables, ix, 0, q, 0);
                let w = pack_vars(1, eq.conserved_at(x));
                for v in 0..4 {
                    mean[v] += 0.5 * tables.weights[q] * w[v];
                }
            }
            out.push(mean);
        }
    } else {
        for iy in 0..mesh.n[1] {
            for ix in 0..mesh.n[0] {
                let mut mean = [0.0; 4];
                for qy in 0..nq {
                    for qx in 0..nq {
                        let x = dg::volume_point(mesh, tables, ix, iy, qx, qy);
                        let w = eq.conserved_at(x);
                        let ww = 0.25 * tables.weights[qx] * tables.weights[qy];
                        for v in 0..4 {
                            mean[v] += ww * w[v];
                        }
                    }
                }
                out.push(mean);
            }
        }
    }
    Ok(out)
}
