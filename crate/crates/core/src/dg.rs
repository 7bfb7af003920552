//! Semidiscrete residual assembly.
//!
//! One generic routine serves both formulations. The classical scheme
//! assembles surface (local Lax-Friedrichs), volume and gravity-source
//! quadrature terms of the conserved field. The perturbation scheme runs
//! the identical assembly on w_num = w_eq + dw_h and subtracts the
//! equilibrium flux and source samples point by point, so a zero dw gives
//! a residual that is exactly zero in floating point: every subtraction
//! cancels two bitwise-equal values.
//!
//! The mass matrix is the identity (orthonormal basis), so the assembled
//! output is directly d/dt of the modal coefficients: surface and volume
//! terms carry the 2/dx mapping factor per axis, the source term carries
//! none.

use crate::basis;
use crate::equilibria::{Equilibrium, Gravity};
use crate::error::{Result, SolverError};
use crate::euler::{d1, d2};
use crate::field::pack_vars;
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

/// Highest supported quadrature size per axis (degree 7).
pub const MAX_Q: usize = 8;

/// Precomputed basis tables on the reference element, mode-major:
/// `psi[mode * nq + q]` and friends.
#[derive(Debug, Clone)]
pub struct DgTables {
    pub deg: usize,
    pub nq: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// psi_mode(node_q).
    pub psi: Vec<f64>,
    /// psi_mode(node_q) * weight_q.
    pub psi_w: Vec<f64>,
    /// psi'_mode(node_q) * weight_q.
    pub dpsi_w: Vec<f64>,
    /// psi_mode(+1).
    pub psi_plus: Vec<f64>,
    /// psi_mode(-1).
    pub psi_minus: Vec<f64>,
}

impl DgTables {
    pub fn new(deg: usize) -> Result<Self> {
        if deg + 1 > MAX_Q {
            return Err(SolverError::InvalidBasis(format!(
                "degree {deg} exceeds the supported maximum {}",
                MAX_Q - 1
            )));
        }
        let rule = gauss_legendre(deg + 1)?;
        let nq = rule.len();
        let m = deg + 1;
        let mut psi = vec![0.0; m * nq];
        let mut psi_w = vec![0.0; m * nq];
        let mut dpsi_w = vec![0.0; m * nq];
        let mut vals = vec![0.0; m];
        let mut ders = vec![0.0; m];
        for (q, &x) in rule.nodes.iter().enumerate() {
            basis::eval_with_deriv(deg, x, &mut vals, &mut ders)?;
            for mode in 0..m {
                psi[mode * nq + q] = vals[mode];
                psi_w[mode * nq + q] = vals[mode] * rule.weights[q];
                dpsi_w[mode * nq + q] = ders[mode] * rule.weights[q];
            }
        }
        let psi_plus: Vec<f64> = (0..m).map(basis::endpoint_value).collect();
        let psi_minus: Vec<f64> = (0..m)
            .map(|n| if n % 2 == 0 { psi_plus[n] } else { -psi_plus[n] })
            .collect();
        Ok(DgTables {
            deg,
            nq,
            nodes: rule.nodes,
            weights: rule.weights,
            psi,
            psi_w,
            dpsi_w,
            psi_plus,
            psi_minus,
        })
    }
}

/// Treatment of the domain boundary, uniform over all faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Ghost traces are the analytic equilibrium at the face quadrature
    /// points (for the perturbation field the ghost deviation is zero).
    Equilibrium,
    Periodic,
}

/// Everything the assembly needs besides the coefficients themselves.
pub struct Operator<'a> {
    pub mesh: &'a Mesh,
    pub tables: &'a DgTables,
    pub boundary: Boundary,
    pub gamma: f64,
    pub nvars: usize,
}

impl<'a> Operator<'a> {
    pub fn new(mesh: &'a Mesh, tables: &'a DgTables, boundary: Boundary, gamma: f64) -> Self {
        let nvars = if mesh.dim == 1 { 3 } else { 4 };
        Operator {
            mesh,
            tables,
            boundary,
            gamma,
            nvars,
        }
    }

    #[inline]
    pub fn nmodes(&self) -> usize {
        (self.tables.deg + 1).pow(self.mesh.dim as u32)
    }

    pub fn coeff_len(&self) -> usize {
        self.mesh.cell_count() * self.nvars * self.nmodes()
    }
}

/// Physical coordinates of a volume quadrature point. Shared by the
/// residual assembly and the equilibrium cache build so that both sample
/// the equilibrium at bitwise-identical positions.
#[inline]
pub fn volume_point(mesh: &Mesh, tables: &DgTables, ix: usize, iy: usize, qx: usize, qy: usize) -> [f64; 2] {
    let x = mesh.center_x(ix as i64) + 0.5 * mesh.dx[0] * tables.nodes[qx];
    let y = if mesh.dim == 2 {
        mesh.center_y(iy as i64) + 0.5 * mesh.dx[1] * tables.nodes[qy]
    } else {
        0.0
    };
    [x, y]
}

/// Physical coordinates of a quadrature point on a face orthogonal to x.
#[inline]
pub fn face_point_x(mesh: &Mesh, tables: &DgTables, fx: usize, iy: usize, k: usize) -> [f64; 2] {
    let x = mesh.face_x(fx);
    let y = if mesh.dim == 2 {
        mesh.center_y(iy as i64) + 0.5 * mesh.dx[1] * tables.nodes[k]
    } else {
        0.0
    };
    [x, y]
}

/// Physical coordinates of a quadrature point on a face orthogonal to y.
#[inline]
pub fn face_point_y(mesh: &Mesh, tables: &DgTables, ix: usize, fy: usize, k: usize) -> [f64; 2] {
    [
        mesh.center_x(ix as i64) + 0.5 * mesh.dx[0] * tables.nodes[k],
        mesh.face_y(fy),
    ]
}

/// Equilibrium state, fluxes and source at one volume quadrature point,
/// in packed variable order.
#[derive(Debug, Clone, Copy)]
pub struct VolTerms {
    pub state: [f64; 4],
    pub flux_x: [f64; 4],
    pub flux_y: [f64; 4],
    pub source: [f64; 4],
}

impl VolTerms {
    pub const ZERO: VolTerms = VolTerms {
        state: [0.0; 4],
        flux_x: [0.0; 4],
        flux_y: [0.0; 4],
        source: [0.0; 4],
    };
}

/// Equilibrium terms consumed by the assembly. The classical scheme uses
/// an implementation with `ACTIVE = false` that only supplies ghost
/// states; the perturbation scheme supplies all terms from its cache.
pub trait EqTerms {
    const ACTIVE: bool;
    /// Packed equilibrium state at a face quadrature point.
    fn face_state(&self, axis: usize, face: usize, k: usize, x: [f64; 2]) -> [f64; 4];
    /// Packed equilibrium normal flux at a face quadrature point.
    fn face_flux(&self, axis: usize, face: usize, k: usize, x: [f64; 2]) -> [f64; 4];
    /// Equilibrium terms at a volume quadrature point.
    fn volume(&self, cell: usize, q: usize, x: [f64; 2]) -> VolTerms;
}

/// Classical assembly: no equilibrium subtraction; the optional
/// equilibrium serves only the ghost policy of `Boundary::Equilibrium`.
pub struct NoDelta<'a> {
    pub ghost: Option<&'a Equilibrium>,
}

impl EqTerms for NoDelta<'_> {
    const ACTIVE: bool = false;

    fn face_state(&self, _axis: usize, _face: usize, _k: usize, x: [f64; 2]) -> [f64; 4] {
        let eq = self
            .ghost
            .expect("equilibrium boundary requires an equilibrium for ghost data");
        pack_vars(eq.dim, eq.conserved_at(x))
    }

    fn face_flux(&self, _axis: usize, _face: usize, _k: usize, _x: [f64; 2]) -> [f64; 4] {
        unreachable!("inactive equilibrium terms")
    }

    fn volume(&self, _cell: usize, _q: usize, _x: [f64; 2]) -> VolTerms {
        unreachable!("inactive equilibrium terms")
    }
}

/// Classical residual. `ghost` is required when the boundary policy is
/// `Equilibrium`.
pub fn residual(
    op: &Operator,
    ghost: Option<&Equilibrium>,
    gravity: &Gravity,
    coeffs: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    assemble(op, &NoDelta { ghost }, gravity, coeffs, t, out)
}

#[inline]
fn check_point(rho: f64, p: f64, what: &str, where_: impl FnOnce() -> String) -> Result<()> {
    if rho > 0.0 && p > 0.0 {
        Ok(())
    } else {
        Err(SolverError::Inadmissible {
            context: format!("{what} at {}", where_()),
            rho,
            pressure: p,
        })
    }
}

/// Assemble d/dt of the modal coefficients into `out` (overwritten).
pub fn assemble<E: EqTerms>(
    op: &Operator,
    terms: &E,
    gravity: &Gravity,
    coeffs: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    assert_eq!(coeffs.len(), op.coeff_len(), "coefficient length mismatch");
    assert_eq!(out.len(), coeffs.len());
    out.fill(0.0);
    if op.mesh.dim == 1 {
        assemble_1d(op, terms, gravity, coeffs, t, out)
    } else {
        assemble_2d(op, terms, gravity, coeffs, t, out)
    }
}

fn assemble_1d<E: EqTerms>(
    op: &Operator,
    terms: &E,
    gravity: &Gravity,
    coeffs: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    let mesh = op.mesh;
    let tab = op.tables;
    let n = mesh.n[0];
    let m = tab.deg + 1;
    let nq = tab.nq;
    let nvars = 3usize;
    let gamma = op.gamma;
    let scale = 2.0 / mesh.dx[0];

    // Trace of w_num: the equilibrium face sample (zero for the classical
    // scheme) plus the modal sum of the evolved coefficients.
    let trace = |cell: usize, plus: bool, start: [f64; 3]| -> [f64; 3] {
        let base = cell * nvars * m;
        let endpoints = if plus { &tab.psi_plus } else { &tab.psi_minus };
        let mut w = start;
        for var in 0..nvars {
            let cb = base + var * m;
            let mut s = w[var];
            for i in 0..m {
                s += coeffs[cb + i] * endpoints[i];
            }
            w[var] = s;
        }
        w
    };

    // Face pass: compute each face flux once and scatter to both sides.
    for jf in 0..=n {
        let xf = face_point_x(mesh, tab, jf, 0, 0);
        let start: [f64; 3] = if E::ACTIVE {
            let s = terms.face_state(0, jf, 0, xf);
            [s[0], s[1], s[2]]
        } else {
            [0.0; 3]
        };
        // Ghost deviation is zero, so a ghost trace is the equilibrium
        // sample itself; the classical scheme evaluates it analytically.
        let ghost = || -> [f64; 3] {
            if E::ACTIVE {
                start
            } else {
                let s = terms.face_state(0, jf, 0, xf);
                [s[0], s[1], s[2]]
            }
        };
        let a: [f64; 3] = if jf >= 1 {
            trace(jf - 1, true, start)
        } else if op.boundary == Boundary::Periodic {
            trace(n - 1, true, start)
        } else {
            ghost()
        };
        let b: [f64; 3] = if jf < n {
            trace(jf, false, start)
        } else if op.boundary == Boundary::Periodic {
            trace(0, false, start)
        } else {
            ghost()
        };
        let pa = d1::pressure(&a, gamma);
        check_point(a[0], pa, "left trace", || format!("face {jf}"))?;
        let pb = d1::pressure(&b, gamma);
        check_point(b[0], pb, "right trace", || format!("face {jf}"))?;
        let alpha = d1::signal_speed(&a, pa, gamma).max(d1::signal_speed(&b, pb, gamma));
        let mut fh = d1::llf_with_alpha(&a, pa, &b, pb, alpha);
        if E::ACTIVE {
            let fe = terms.face_flux(0, jf, 0, xf);
            for v in 0..nvars {
                fh[v] -= fe[v];
            }
        }
        if jf >= 1 {
            let base = (jf - 1) * nvars * m;
            for var in 0..nvars {
                let p = scale * fh[var];
                let ob = base + var * m;
                for i in 0..m {
                    out[ob + i] -= p * tab.psi_plus[i];
                }
            }
        }
        if jf < n {
            let base = jf * nvars * m;
            for var in 0..nvars {
                let p = scale * fh[var];
                let ob = base + var * m;
                for i in 0..m {
                    out[ob + i] += p * tab.psi_minus[i];
                }
            }
        }
    }

    // Cell pass: volume flux and source quadrature.
    let mut fq = [[0.0f64; 3]; MAX_Q];
    let mut sq = [[0.0f64; 3]; MAX_Q];
    for cell in 0..n {
        let base = cell * nvars * m;
        for q in 0..nq {
            let x = volume_point(mesh, tab, cell, 0, q, 0);
            let vt = if E::ACTIVE {
                terms.volume(cell, q, x)
            } else {
                VolTerms::ZERO
            };
            let mut w = [vt.state[0], vt.state[1], vt.state[2]];
            for var in 0..nvars {
                let cb = base + var * m;
                let mut s = w[var];
                for i in 0..m {
                    s += coeffs[cb + i] * tab.psi[i * nq + q];
                }
                w[var] = s;
            }
            let p = d1::pressure(&w, gamma);
            check_point(w[0], p, "volume point", || format!("cell {cell} point {q}"))?;
            let mut f = d1::flux(&w, p);
            let g = gravity.grad_phi(x, t)[0];
            let mut s = d1::source(&w, g);
            if E::ACTIVE {
                for v in 0..nvars {
                    f[v] -= vt.flux_x[v];
                    s[v] -= vt.source[v];
                }
            }
            fq[q] = f;
            sq[q] = s;
        }
        for var in 0..nvars {
            let ob = base + var * m;
            for i in 0..m {
                let mut facc = 0.0;
                let mut sacc = 0.0;
                for q in 0..nq {
                    facc += fq[q][var] * tab.dpsi_w[i * nq + q];
                    sacc += sq[q][var] * tab.psi_w[i * nq + q];
                }
                out[ob + i] += scale * facc + sacc;
            }
        }
    }
    Ok(())
}

fn assemble_2d<E: EqTerms>(
    op: &Operator,
    terms: &E,
    gravity: &Gravity,
    coeffs: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    let mesh = op.mesh;
    let tab = op.tables;
    let (nx, ny) = (mesh.n[0], mesh.n[1]);
    let m = tab.deg + 1;
    let nq = tab.nq;
    let nvars = 4usize;
    let nmodes = m * m;
    let gamma = op.gamma;
    let scale_x = 2.0 / mesh.dx[0];
    let scale_y = 2.0 / mesh.dx[1];

    // Trace of w_num for one cell on an x-orthogonal side (xi = +-1) at
    // every face quadrature point, sum-factorized over modes. `starts`
    // carries the equilibrium face samples (zeros for the classical
    // scheme).
    let trace_x = |cell: usize,
                   plus: bool,
                   starts: &[[f64; 4]; MAX_Q],
                   vals: &mut [[f64; 4]; MAX_Q]| {
        let base = cell * nvars * nmodes;
        let endpoints = if plus { &tab.psi_plus } else { &tab.psi_minus };
        *vals = *starts;
        for var in 0..nvars {
            let cb = base + var * nmodes;
            for my in 0..m {
                let mut line = 0.0;
                for mx in 0..m {
                    line += coeffs[cb + my * m + mx] * endpoints[mx];
                }
                for k in 0..nq {
                    vals[k][var] += line * tab.psi[my * nq + k];
                }
            }
        }
    };
    let trace_y = |cell: usize,
                   plus: bool,
                   starts: &[[f64; 4]; MAX_Q],
                   vals: &mut [[f64; 4]; MAX_Q]| {
        let base = cell * nvars * nmodes;
        let endpoints = if plus { &tab.psi_plus } else { &tab.psi_minus };
        *vals = *starts;
        for var in 0..nvars {
            let cb = base + var * nmodes;
            for mx in 0..m {
                let mut line = 0.0;
                for my in 0..m {
                    line += coeffs[cb + my * m + mx] * endpoints[my];
                }
                for k in 0..nq {
                    vals[k][var] += line * tab.psi[mx * nq + k];
                }
            }
        }
    };

    let mut starts = [[0.0f64; 4]; MAX_Q];
    let mut ta = [[0.0f64; 4]; MAX_Q];
    let mut tb = [[0.0f64; 4]; MAX_Q];
    let mut fh = [[0.0f64; 4]; MAX_Q];

    // x-orthogonal faces.
    for iy in 0..ny {
        for fx in 0..=nx {
            let face = iy * (nx + 1) + fx;
            if E::ACTIVE {
                for k in 0..nq {
                    let x = face_point_x(mesh, tab, fx, iy, k);
                    starts[k] = terms.face_state(0, face, k, x);
                }
            }
            let left = if fx >= 1 {
                trace_x(mesh.cell_linear(fx - 1, iy), true, &starts, &mut ta);
                true
            } else if op.boundary == Boundary::Periodic {
                trace_x(mesh.cell_linear(nx - 1, iy), true, &starts, &mut ta);
                true
            } else {
                false
            };
            let right = if fx < nx {
                trace_x(mesh.cell_linear(fx, iy), false, &starts, &mut tb);
                true
            } else if op.boundary == Boundary::Periodic {
                trace_x(mesh.cell_linear(0, iy), false, &starts, &mut tb);
                true
            } else {
                false
            };
            for k in 0..nq {
                let x = face_point_x(mesh, tab, fx, iy, k);
                let a = if left {
                    ta[k]
                } else if E::ACTIVE {
                    starts[k]
                } else {
                    terms.face_state(0, face, k, x)
                };
                let b = if right {
                    tb[k]
                } else if E::ACTIVE {
                    starts[k]
                } else {
                    terms.face_state(0, face, k, x)
                };
                let pa = d2::pressure(&a, gamma);
                check_point(a[0], pa, "left trace", || format!("x-face ({fx}, {iy}) point {k}"))?;
                let pb = d2::pressure(&b, gamma);
                check_point(b[0], pb, "right trace", || format!("x-face ({fx}, {iy}) point {k}"))?;
                let alpha = d2::signal_speed(&a, pa, 0, gamma)
                    .max(d2::signal_speed(&b, pb, 0, gamma));
                let mut f = d2::llf_with_alpha(&a, pa, &b, pb, alpha, 0);
                if E::ACTIVE {
                    let fe = terms.face_flux(0, face, k, x);
                    for v in 0..nvars {
                        f[v] -= fe[v];
                    }
                }
                fh[k] = f;
            }
            // Scatter: contract the face flux against the face basis.
            for (side_cell, plus) in [
                (fx.checked_sub(1).map(|i| mesh.cell_linear(i, iy)), true),
                ((fx < nx).then(|| mesh.cell_linear(fx, iy)), false),
            ] {
                let Some(cell) = side_cell else { continue };
                let base = cell * nvars * nmodes;
                let endpoints = if plus { &tab.psi_plus } else { &tab.psi_minus };
                let sign = if plus { -1.0 } else { 1.0 };
                for var in 0..nvars {
                    let ob = base + var * nmodes;
                    for my in 0..m {
                        let mut acc = 0.0;
                        for k in 0..nq {
                            acc += fh[k][var] * tab.psi_w[my * nq + k];
                        }
                        let p = sign * scale_x * acc;
                        for mx in 0..m {
                            out[ob + my * m + mx] += p * endpoints[mx];
                        }
                    }
                }
            }
        }
    }

    // y-orthogonal faces.
    for fy in 0..=ny {
        for ix in 0..nx {
            let face = fy * nx + ix;
            if E::ACTIVE {
                for k in 0..nq {
                    let x = face_point_y(mesh, tab, ix, fy, k);
                    starts[k] = terms.face_state(1, face, k, x);
                }
            }
            let below = if fy >= 1 {
                trace_y(mesh.cell_linear(ix, fy - 1), true, &starts, &mut ta);
                true
            } else if op.boundary == Boundary::Periodic {
                trace_y(mesh.cell_linear(ix, ny - 1), true, &starts, &mut ta);
                true
            } else {
                false
            };
            let above = if fy < ny {
                trace_y(mesh.cell_linear(ix, fy), false, &starts, &mut tb);
                true
            } else if op.boundary == Boundary::Periodic {
                trace_y(mesh.cell_linear(ix, 0), false, &starts, &mut tb);
                true
            } else {
                false
            };
            for k in 0..nq {
                let x = face_point_y(mesh, tab, ix, fy, k);
                let a = if below {
                    ta[k]
                } else if E::ACTIVE {
                    starts[k]
                } else {
                    terms.face_state(1, face, k, x)
                };
                let b = if above {
                    tb[k]
                } else if E::ACTIVE {
                    starts[k]
                } else {
                    terms.face_state(1, face, k, x)
                };
                let pa = d2::pressure(&a, gamma);
                check_point(a[0], pa, "lower trace", || format!("y-face ({ix}, {fy}) point {k}"))?;
                let pb = d2::pressure(&b, gamma);
                check_point(b[0], pb, "upper trace", || format!("y-face ({ix}, {fy}) point {k}"))?;
                let alpha = d2::signal_speed(&a, pa, 1, gamma)
                    .max(d2::signal_speed(&b, pb, 1, gamma));
                let mut f = d2::llf_with_alpha(&a, pa, &b, pb, alpha, 1);
                if E::ACTIVE {
                    let fe = terms.face_flux(1, face, k, x);
                    for v in 0..nvars {
                        f[v] -= fe[v];
                    }
                }
                fh[k] = f;
            }
            for (side_cell, plus) in [
                (fy.checked_sub(1).map(|j| mesh.cell_linear(ix, j)), true),
                ((fy < ny).then(|| mesh.cell_linear(ix, fy)), false),
            ] {
                let Some(cell) = side_cell else { continue };
                let base = cell * nvars * nmodes;
                let endpoints = if plus { &tab.psi_plus } else { &tab.psi_minus };
                let sign = if plus { -1.0 } else { 1.0 };
                for var in 0..nvars {
                    let ob = base + var * nmodes;
                    for mx in 0..m {
                        let mut acc = 0.0;
                        for k in 0..nq {
                            acc += fh[k][var] * tab.psi_w[mx * nq + k];
                        }
                        let p = sign * scale_y * acc;
                        for my in 0..m {
                            out[ob + my * m + mx] += p * endpoints[my];
                        }
                    }
                }
            }
        }
    }

    // Cell pass: point values by sum factorization, then flux and source
    // quadrature contracted back to modes.
    let mut tmp = [[[0.0f64; MAX_Q]; MAX_Q]; 4]; // [var][my][qx]
    let mut fxq = [[[0.0f64; 4]; MAX_Q]; MAX_Q];
    let mut fyq = [[[0.0f64; 4]; MAX_Q]; MAX_Q];
    let mut srcq = [[[0.0f64; 4]; MAX_Q]; MAX_Q];
    let mut rowxq = [[0.0f64; MAX_Q]; MAX_Q]; // [mx][qy]
    let mut rowyq = [[0.0f64; MAX_Q]; MAX_Q];
    let mut rowsq = [[0.0f64; MAX_Q]; MAX_Q];
    for iy in 0..ny {
        for ix in 0..nx {
            let cell = mesh.cell_linear(ix, iy);
            let base = cell * nvars * nmodes;
            for var in 0..nvars {
                let cb = base + var * nmodes;
                for my in 0..m {
                    for qx in 0..nq {
                        let mut s = 0.0;
                        for mx in 0..m {
                            s += coeffs[cb + my * m + mx] * tab.psi[mx * nq + qx];
                        }
                        tmp[var][my][qx] = s;
                    }
                }
            }
            for qy in 0..nq {
                for qx in 0..nq {
                    let x = volume_point(mesh, tab, ix, iy, qx, qy);
                    let vt = if E::ACTIVE {
                        terms.volume(cell, qy * nq + qx, x)
                    } else {
                        VolTerms::ZERO
                    };
                    let mut w = vt.state;
                    for var in 0..nvars {
                        let mut s = w[var];
                        for my in 0..m {
                            s += tmp[var][my][qx] * tab.psi[my * nq + qy];
                        }
                        w[var] = s;
                    }
                    let p = d2::pressure(&w, gamma);
                    check_point(
                        w[0],
                        p,
                        "volume point",
                        || format!("cell ({ix}, {iy}) point ({qx}, {qy})"),
                    )?;
                    let mut fx = d2::flux(&w, p, 0);
                    let mut fy = d2::flux(&w, p, 1);
                    let g = gravity.grad_phi(x, t);
                    let mut s = d2::source(&w, g);
                    if E::ACTIVE {
                        for v in 0..nvars {
                            fx[v] -= vt.flux_x[v];
                            fy[v] -= vt.flux_y[v];
                            s[v] -= vt.source[v];
                        }
                    }
                    fxq[qy][qx] = fx;
                    fyq[qy][qx] = fy;
                    srcq[qy][qx] = s;
                }
            }
            for var in 0..nvars {
                let ob = base + var * nmodes;
                // Contract the x-flux against d/dxi, the y-flux against
                // d/deta, and the source against the plain basis, each
                // factorized one axis at a time. The qx rows depend only
                // on mx, so they are contracted once and reused across my.
                for qy in 0..nq {
                    for mx in 0..m {
                        let mut rowx = 0.0;
                        let mut rowy = 0.0;
                        let mut rows = 0.0;
                        for qx in 0..nq {
                            rowx += fxq[qy][qx][var] * tab.dpsi_w[mx * nq + qx];
                            rowy += fyq[qy][qx][var] * tab.psi_w[mx * nq + qx];
                            rows += srcq[qy][qx][var] * tab.psi_w[mx * nq + qx];
                        }
                        rowxq[mx][qy] = rowx;
                        rowyq[mx][qy] = rowy;
                        rowsq[mx][qy] = rows;
                    }
                }
                for my in 0..m {
                    for mx in 0..m {
                        let mut accx = 0.0;
                        let mut accy = 0.0;
                        let mut accs = 0.0;
                        for qy in 0..nq {
                            accx += rowxq[mx][qy] * tab.psi_w[my * nq + qy];
                            accy += rowyq[mx][qy] * tab.dpsi_w[my * nq + qy];
                            accs += rowsq[mx][qy] * tab.psi_w[my * nq + qy];
                        }
                        out[ob + my * m + mx] += scale_x * accx + scale_y * accy + accs;
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{hydrostatic_1d, uniform};
    use crate::euler::Primitive;
    use crate::field::Field;
    use crate::time::{Hooks, Integrator, Tableau};

    const GAMMA: f64 = 1.4;

    fn uniform_state() -> Primitive {
        Primitive {
            rho: 1.0,
            vel: [0.3, 0.0],
            pressure: 1.0,
        }
    }

    #[test]
    fn tables_match_basis_endpoints() {
        let tab = DgTables::new(3).unwrap();
        assert_eq!(tab.nq, 4);
        for n in 0..4 {
            assert_eq!(tab.psi_plus[n], basis::endpoint_value(n));
            assert_eq!(tab.psi_minus[n], if n % 2 == 0 { tab.psi_plus[n] } else { -tab.psi_plus[n] });
        }
        // psi table row 0 is the constant mode.
        for q in 0..4 {
            assert_eq!(tab.psi[q], (0.5f64).sqrt());
        }
        assert!(DgTables::new(MAX_Q).is_err());
    }

    #[test]
    fn free_stream_1d() {
        // A constant state on a periodic mesh with no gravity must be a
        // discrete steady state down to rounding. Two cells keep the 2/dx
        // amplification small; the floor is the cancellation noise of the
        // surface and volume quadratures.
        let mesh = Mesh::new_1d((0.0, 1.0), 2).unwrap();
        let bg = uniform(1, uniform_state());
        let gravity = bg.gravity();
        for deg in 1..=4usize {
            let tab = DgTables::new(deg).unwrap();
            let op = Operator::new(&mesh, &tab, Boundary::Periodic, GAMMA);
            let field = Field::project_primitive(&mesh, deg, GAMMA, |_| uniform_state()).unwrap();
            let mut out = vec![0.0; field.coeffs.len()];
            residual(&op, None, &gravity, &field.coeffs, 0.0, &mut out).unwrap();
            let worst = out.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            assert!(worst < 1e-13, "deg {deg}: free-stream residual {worst}");
        }
    }

    #[test]
    fn free_stream_2d() {
        let mesh = Mesh::new_2d((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let bg = uniform(2, Primitive {
            rho: 1.0,
            vel: [0.3, -0.2],
            pressure: 1.0,
        });
        let gravity = bg.gravity();
        for deg in 1..=2usize {
            let tab = DgTables::new(deg).unwrap();
            let op = Operator::new(&mesh, &tab, Boundary::Periodic, GAMMA);
            let field = Field::project_primitive(&mesh, deg, GAMMA, |_| Primitive {
                rho: 1.0,
                vel: [0.3, -0.2],
                pressure: 1.0,
            })
            .unwrap();
            let mut out = vec![0.0; field.coeffs.len()];
            residual(&op, None, &gravity, &field.coeffs, 0.0, &mut out).unwrap();
            let worst = out.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            assert!(worst < 1e-13, "deg {deg}: free-stream residual {worst}");
        }
    }

    #[test]
    fn continuous_static_column_residual_vanishes() {
        // Linear density, zero velocity, constant pressure, no gravity:
        // the flux divergence is zero and the traces are continuous, so
        // surface and volume terms cancel to rounding.
        let mesh = Mesh::new_1d((0.0, 1.0), 4).unwrap();
        let tab = DgTables::new(2).unwrap();
        let op = Operator::new(&mesh, &tab, Boundary::Periodic, GAMMA);
        let bg = uniform(1, uniform_state());
        let gravity = bg.gravity();
        // Periodic in form only; the data itself is continuous at the wrap
        // because we check interior cells alone.
        let field = Field::project_primitive(&mesh, 2, GAMMA, |p| Primitive {
            rho: 2.0 + p[0],
            vel: [0.0, 0.0],
            pressure: 1.0,
        })
        .unwrap();
        let mut out = vec![0.0; field.coeffs.len()];
        residual(&op, None, &gravity, &field.coeffs, 0.0, &mut out).unwrap();
        let nm = field.nmodes();
        for cell in 1..3 {
            for var in 0..3 {
                for mode in 0..nm {
                    let r = out[field.idx(cell, var, mode)];
                    assert!(
                        r.abs() < 1e-12,
                        "cell {cell} var {var} mode {mode}: residual {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn two_d_assembly_matches_one_d_embedding() {
        // Data constant in y with zero vertical velocity: the 2D residual
        // rows at my = 0 are sqrt(2) times the 1D residual and all other
        // rows vanish.
        let n = 6;
        let deg = 2;
        let f1 = |x: f64| Primitive {
            rho: 1.0 + 0.3 * (std::f64::consts::TAU * x).sin().powi(2),
            vel: [0.4, 0.0],
            pressure: 1.0 + 0.1 * (std::f64::consts::TAU * x).cos(),
        };
        let mesh1 = Mesh::new_1d((0.0, 1.0), n).unwrap();
        let mesh2 = Mesh::new_2d((0.0, 1.0), (0.0, 1.0), n, 3).unwrap();
        let tab = DgTables::new(deg).unwrap();
        let op1 = Operator::new(&mesh1, &tab, Boundary::Periodic, GAMMA);
        let op2 = Operator::new(&mesh2, &tab, Boundary::Periodic, GAMMA);
        let field1 = Field::project_primitive(&mesh1, deg, GAMMA, |p| f1(p[0])).unwrap();
        let field2 = Field::project_primitive(&mesh2, deg, GAMMA, |p| f1(p[0])).unwrap();
        let bg1 = uniform(1, uniform_state());
        let bg2 = uniform(2, uniform_state());
        let mut r1 = vec![0.0; field1.coeffs.len()];
        let mut r2 = vec![0.0; field2.coeffs.len()];
        residual(&op1, None, &bg1.gravity(), &field1.coeffs, 0.0, &mut r1).unwrap();
        residual(&op2, None, &bg2.gravity(), &field2.coeffs, 0.0, &mut r2).unwrap();
        let m = deg + 1;
        let sqrt2 = 2f64.sqrt();
        // 1D vars (rho, mom, E) sit at 2D vars (0, 1, 3).
        let var_map = [0usize, 1, 3];
        for ix in 0..n {
            let c2 = mesh2.cell_linear(ix, 1);
            for (v1, &v2) in var_map.iter().enumerate() {
                for mx in 0..m {
                    let a = r1[field1.idx(ix, v1, mx)];
                    let b = r2[field2.idx(c2, v2, mx)]; // my = 0 row
                    assert!(
                        (sqrt2 * a - b).abs() < 1e-11,
                        "ix {ix} var {v2} mx {mx}: 1d {a} vs 2d {b}"
                    );
                }
                for my in 1..m {
                    for mx in 0..m {
                        let b = r2[field2.idx(c2, v2, my * m + mx)];
                        assert!(b.abs() < 1e-11, "nonzero vertical mode {b}");
                    }
                }
            }
            // The vertical momentum rows stay zero.
            for mode in 0..m * m {
                let b = r2[field2.idx(c2, 2, mode)];
                assert!(b.abs() < 1e-11, "vertical momentum residual {b}");
            }
        }
    }

    #[test]
    fn mass_is_conserved_on_periodic_runs() {
        let n = 16;
        let deg = 2;
        let mesh = Mesh::new_1d((0.0, 1.0), n).unwrap();
        let tab = DgTables::new(deg).unwrap();
        let op = Operator::new(&mesh, &tab, Boundary::Periodic, GAMMA);
        let bg = uniform(1, uniform_state());
        let gravity = bg.gravity();
        let mut field = Field::project_primitive(&mesh, deg, GAMMA, |p| Primitive {
            rho: 1.0 + 0.3 * (std::f64::consts::TAU * p[0]).sin(),
            vel: [0.5, 0.0],
            pressure: 1.0,
        })
        .unwrap();
        let mass = |f: &Field| -> f64 {
            (0..n).map(|c| f.cell_average(c, 0) * mesh.dx[0]).sum()
        };
        let m0 = mass(&field);
        let mut integ = Integrator::new(Tableau::ssp33(), field.coeffs.len());
        let mut t = 0.0;
        for _ in 0..100 {
            integ
                .step(
                    &mut field.coeffs,
                    t,
                    1e-3,
                    |st, u, out| residual(&op, None, &gravity, u, st, out),
                    &mut Hooks::none(),
                )
                .unwrap();
            t += 1e-3;
        }
        let drift = ((mass(&field) - m0) / m0).abs();
        assert!(drift < 1e-12, "mass drift {drift}");
    }

    #[test]
    fn hydrostatic_jump_structure_in_density_residual() {
        // For the static column the density residual of an interior cell
        // is the pure dissipation term: alpha/2 times the trace jumps,
        // weighted by the basis endpoint values and the mapping factor.
        let n = 8;
        let deg = 1;
        let eq = hydrostatic_1d();
        let mesh = Mesh::new_1d((0.0, 1.0), n).unwrap();
        let tab = DgTables::new(deg).unwrap();
        let op = Operator::new(&mesh, &tab, Boundary::Equilibrium, GAMMA);
        let gravity = eq.gravity();
        let field = Field::project_conserved(&mesh, deg, |x| eq.conserved_at(x)).unwrap();
        let mut out = vec![0.0; field.coeffs.len()];
        residual(&op, Some(&eq), &gravity, &field.coeffs, 0.0, &mut out).unwrap();

        let cell = 3usize;
        let m = deg + 1;
        let mut wl = [0.0; 3];
        let mut wr = [0.0; 3];
        let mut wll = [0.0; 3];
        let mut wrr = [0.0; 3];
        let fb = |f: &Field, c: usize, xi: f64, out: &mut [f64; 3]| {
            f.eval_cell(c, xi, 0.0, out).unwrap();
        };
        fb(&field, cell - 1, 1.0, &mut wll); // left neighbour's right trace
        fb(&field, cell, -1.0, &mut wl); // own left trace
        fb(&field, cell, 1.0, &mut wr); // own right trace
        fb(&field, cell + 1, -1.0, &mut wrr); // right neighbour's left trace
        let alpha_l = {
            let pa = d1::pressure(&wll, GAMMA);
            let pb = d1::pressure(&wl, GAMMA);
            d1::signal_speed(&wll, pa, GAMMA).max(d1::signal_speed(&wl, pb, GAMMA))
        };
        let alpha_r = {
            let pa = d1::pressure(&wr, GAMMA);
            let pb = d1::pressure(&wrr, GAMMA);
            d1::signal_speed(&wr, pa, GAMMA).max(d1::signal_speed(&wrr, pb, GAMMA))
        };
        let jump_l = wl[0] - wll[0];
        let jump_r = wrr[0] - wr[0];
        let scale = 2.0 / mesh.dx[0];
        for i in 0..m {
            let expect = scale
                * (0.5 * alpha_r * jump_r * tab.psi_plus[i]
                    - 0.5 * alpha_l * jump_l * tab.psi_minus[i]);
            let got = out[field.idx(cell, 0, i)];
            assert!(
                (got - expect).abs() < 1e-13,
                "mode {i}: residual {got} vs jump formula {expect}"
            );
        }
    }

    #[test]
    fn inadmissible_trace_reports_context() {
        let mesh = Mesh::new_1d((0.0, 1.0), 4).unwrap();
        let tab = DgTables::new(1).unwrap();
        let op = Operator::new(&mesh, &tab, Boundary::Periodic, GAMMA);
        let bg = uniform(1, uniform_state());
        let mut field = Field::project_primitive(&mesh, 1, GAMMA, |_| uniform_state()).unwrap();
        // Drive the energy of one cell negative.
        let i = field.idx(2, 2, 0);
        field.coeffs[i] = -10.0;
        let mut out = vec![0.0; field.coeffs.len()];
        let err = residual(&op, None, &bg.gravity(), &field.coeffs, 0.0, &mut out);
        assert!(matches!(err, Err(SolverError::Inadmissible { .. })));
    }
}
