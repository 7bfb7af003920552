//! Scalar positivity limiter.
//!
//! Works cell by cell on the modal coefficients in two stages. Stage one
//! pulls the density at every check point (volume quadrature nodes plus
//! all face trace points) above a floor by scaling the non-mean density
//! modes with the closed-form factor, then verifies the scaled
//! coefficients and nudges the factor down a few ulps at a time if
//! rounding still leaves a point under the floor. Stage two restores
//! pressure positivity by bisecting a joint scale factor for the non-mean
//! modes of all variables; the bisection predicate scales a scratch copy
//! and re-evaluates every check point, so the factor it accepts is
//! verified on exactly the coefficients that get written back. Mode zero
//! is never touched: cell means, and with them conservation, are
//! preserved bit for bit.
//!
//! For the deviation field the admissible object is w_eq + dw, so the
//! check points add the equilibrium samples from the cache; scaling still
//! acts on the deviation modes, pulling dw toward its own cell mean.

use crate::dg::{self, DgTables, MAX_Q};
use crate::error::{Result, SolverError};
use crate::euler::{d1, d2};
use crate::mesh::Mesh;
use crate::wb::EqCache;

/// Default admissibility floor for density and pressure.
pub const DEFAULT_FLOOR: f64 = 1e-10;
const BISECT_TOL: f64 = 1e-12;
const VERIFY_RETRIES: usize = 50;
const MAX_POINTS: usize = MAX_Q * MAX_Q + 4 * MAX_Q;

/// What the evolved coefficients deviate from: nothing (classical scheme)
/// or a cached equilibrium (deviation scheme).
#[derive(Clone, Copy)]
pub enum Background<'a> {
    Free,
    Equilibrium(&'a EqCache),
}

#[derive(Debug, Clone, Copy)]
pub struct LimiterOutcome {
    /// Cells whose density modes were scaled.
    pub density_limited: usize,
    /// Cells that needed the joint pressure bisection.
    pub pressure_limited: usize,
    /// Smallest scale factor applied anywhere this call.
    pub min_theta: f64,
}

impl Default for LimiterOutcome {
    fn default() -> Self {
        LimiterOutcome {
            density_limited: 0,
            pressure_limited: 0,
            min_theta: 1.0,
        }
    }
}

/// Evaluate the modal block of one cell at all check points. Returns the
/// point count; layout: volume nodes first (row-major in 2D), then the
/// face trace points (1D: left, right; 2D: left, right, bottom, top sides
/// with `nq` points each).
fn eval_points(
    block: &[f64],
    tab: &DgTables,
    dim: usize,
    nvars: usize,
    vals: &mut [[f64; 4]; MAX_POINTS],
) -> usize {
    let m = tab.deg + 1;
    let nq = tab.nq;
    if dim == 1 {
        for q in 0..nq {
            let mut w = [0.0; 4];
            for (var, slot) in w.iter_mut().enumerate().take(nvars) {
                let cb = var * m;
                let mut s = 0.0;
                for i in 0..m {
                    s += block[cb + i] * tab.psi[i * nq + q];
                }
                *slot = s;
            }
            vals[q] = w;
        }
        for (p, endpoints) in [(nq, &tab.psi_minus), (nq + 1, &tab.psi_plus)] {
            let mut w = [0.0; 4];
            for (var, slot) in w.iter_mut().enumerate().take(nvars) {
                let cb = var * m;
                let mut s = 0.0;
                for i in 0..m {
                    s += block[cb + i] * endpoints[i];
                }
                *slot = s;
            }
            vals[p] = w;
        }
        nq + 2
    } else {
        let nmodes = m * m;
        let mut tmp = [[0.0f64; MAX_Q]; MAX_Q]; // [my][qx]
        for var in 0..nvars {
            let cb = var * nmodes;
            for my in 0..m {
                for qx in 0..nq {
                    let mut s = 0.0;
                    for mx in 0..m {
                        s += block[cb + my * m + mx] * tab.psi[mx * nq + qx];
                    }
                    tmp[my][qx] = s;
                }
            }
            for qy in 0..nq {
                for qx in 0..nq {
                    let mut s = 0.0;
                    for my in 0..m {
                        s += tmp[my][qx] * tab.psi[my * nq + qy];
                    }
                    vals[qy * nq + qx][var] = s;
                }
            }
            // Vertical lines contracted against the x-side endpoints, then
            // the horizontal ones against the y-side endpoints.
            for (side, endpoints) in [(0usize, &tab.psi_minus), (1, &tab.psi_plus)] {
                for k in 0..nq {
                    vals[nq * nq + side * nq + k][var] = 0.0;
                }
                for my in 0..m {
                    let mut line = 0.0;
                    for mx in 0..m {
                        line += block[cb + my * m + mx] * endpoints[mx];
                    }
                    for k in 0..nq {
                        vals[nq * nq + side * nq + k][var] += line * tab.psi[my * nq + k];
                    }
                }
            }
            for (side, endpoints) in [(2usize, &tab.psi_minus), (3, &tab.psi_plus)] {
                for k in 0..nq {
                    vals[nq * nq + side * nq + k][var] = 0.0;
                }
                for mx in 0..m {
                    let mut line = 0.0;
                    for my in 0..m {
                        line += block[cb + my * m + mx] * endpoints[my];
                    }
                    for k in 0..nq {
                        vals[nq * nq + side * nq + k][var] += line * tab.psi[mx * nq + k];
                    }
                }
            }
        }
        nq * nq + 4 * nq
    }
}

/// Equilibrium samples at the same check points, in the same order.
fn background_points(
    cache: &EqCache,
    mesh: &Mesh,
    tab: &DgTables,
    cell: usize,
    bgv: &mut [[f64; 4]; MAX_POINTS],
) {
    let nq = tab.nq;
    if mesh.dim == 1 {
        let ix = cell;
        for q in 0..nq {
            let x = dg::volume_point(mesh, tab, ix, 0, q, 0);
            bgv[q] = cache.vol_state(cell, q, x);
        }
        let xl = dg::face_point_x(mesh, tab, ix, 0, 0);
        bgv[nq] = cache.face_state(0, ix, 0, xl);
        let xr = dg::face_point_x(mesh, tab, ix + 1, 0, 0);
        bgv[nq + 1] = cache.face_state(0, ix + 1, 0, xr);
    } else {
        let nx = mesh.n[0];
        let (ix, iy) = (cell % nx, cell / nx);
        for qy in 0..nq {
            for qx in 0..nq {
                let x = dg::volume_point(mesh, tab, ix, iy, qx, qy);
                bgv[qy * nq + qx] = cache.vol_state(cell, qy * nq + qx, x);
            }
        }
        for k in 0..nq {
            let x = dg::face_point_x(mesh, tab, ix, iy, k);
            bgv[nq * nq + k] = cache.face_state(0, iy * (nx + 1) + ix, k, x);
            let x = dg::face_point_x(mesh, tab, ix + 1, iy, k);
            bgv[nq * nq + nq + k] = cache.face_state(0, iy * (nx + 1) + ix + 1, k, x);
            let x = dg::face_point_y(mesh, tab, ix, iy, k);
            bgv[nq * nq + 2 * nq + k] = cache.face_state(1, iy * nx + ix, k, x);
            let x = dg::face_point_y(mesh, tab, ix, iy + 1, k);
            bgv[nq * nq + 3 * nq + k] = cache.face_state(1, (iy + 1) * nx + ix, k, x);
        }
    }
}

#[inline]
fn point_pressure(w: &[f64; 4], dim: usize, gamma: f64) -> f64 {
    if dim == 1 {
        d1::pressure(&[w[0], w[1], w[2]], gamma)
    } else {
        d2::pressure(w, gamma)
    }
}

/// Enforce density and pressure floors on every cell. Returns statistics;
/// fails if a cell cannot be made admissible even with all non-mean modes
/// removed.
pub fn apply_positivity(
    mesh: &Mesh,
    tab: &DgTables,
    gamma: f64,
    floor: f64,
    bg: Background,
    coeffs: &mut [f64],
) -> Result<LimiterOutcome> {
    let dim = mesh.dim;
    let nvars = if dim == 1 { 3 } else { 4 };
    let m = tab.deg + 1;
    let nmodes = m.pow(dim as u32);
    let block_len = nvars * nmodes;
    assert_eq!(coeffs.len(), mesh.cell_count() * block_len);
    let mean_scale = (0.5f64).sqrt().powi(dim as i32);

    let mut outcome = LimiterOutcome::default();
    let mut vals = [[0.0f64; 4]; MAX_POINTS];
    let mut bgv = [[0.0f64; 4]; MAX_POINTS];
    let mut scratch = [0.0f64; 4 * MAX_Q * MAX_Q];

    for cell in 0..mesh.cell_count() {
        let block = &mut coeffs[cell * block_len..(cell + 1) * block_len];
        if let Background::Equilibrium(cache) = bg {
            background_points(cache, mesh, tab, cell, &mut bgv);
        }
        let npts = eval_points(block, tab, dim, nvars, &mut vals);

        // Stage one: density floor via the pointwise linear scaling.
        let dmean = block[0] * mean_scale;
        let mut theta: f64 = 1.0;
        let mut failing = false;
        for j in 0..npts {
            let v = bgv[j][0] + vals[j][0];
            if v >= floor {
                continue;
            }
            failing = true;
            // Value at scale zero: background plus the deviation mean.
            let base = bgv[j][0] + dmean;
            if !(base > floor) {
                return Err(SolverError::LimiterFailure {
                    cell,
                    reason: format!(
                        "cell-mean density {base} is at or below the floor {floor}"
                    ),
                });
            }
            theta = theta.min((base - floor) / (base - v));
        }
        if failing {
            let mut t = theta.clamp(0.0, 1.0);
            let mut ok = false;
            let orig: Vec<f64> = block[1..nmodes].to_vec();
            for _ in 0..=VERIFY_RETRIES {
                for (i, &c) in orig.iter().enumerate() {
                    block[1 + i] = c * t;
                }
                let n = eval_points(block, tab, dim, nvars, &mut vals);
                if (0..n).all(|j| bgv[j][0] + vals[j][0] >= floor) {
                    ok = true;
                    break;
                }
                t *= 0.999;
            }
            if !ok {
                return Err(SolverError::LimiterFailure {
                    cell,
                    reason: "density floor unreachable after scaling retries".into(),
                });
            }
            outcome.density_limited += 1;
            outcome.min_theta = outcome.min_theta.min(t);
        }

        // Stage two: joint pressure (and density) floor by bisection.
        let admissible = |vals: &[[f64; 4]; MAX_POINTS], n: usize| {
            (0..n).all(|j| {
                let w = [
                    bgv[j][0] + vals[j][0],
                    bgv[j][1] + vals[j][1],
                    bgv[j][2] + vals[j][2],
                    bgv[j][3] + vals[j][3],
                ];
                w[0] >= floor && point_pressure(&w, dim, gamma) >= floor
            })
        };
        let n = eval_points(block, tab, dim, nvars, &mut vals);
        if admissible(&vals, n) {
            continue;
        }
        outcome.pressure_limited += 1;
        let scratch = &mut scratch[..block_len];
        let mut eval_at = |t: f64, block: &[f64], vals: &mut [[f64; 4]; MAX_POINTS]| -> bool {
            scratch.copy_from_slice(block);
            for var in 0..nvars {
                for mode in 1..nmodes {
                    scratch[var * nmodes + mode] *= t;
                }
            }
            let n = eval_points(scratch, tab, dim, nvars, vals);
            admissible(vals, n)
        };
        if !eval_at(0.0, block, &mut vals) {
            return Err(SolverError::LimiterFailure {
                cell,
                reason: format!(
                    "cell mean violates the pressure floor {floor} with all modes removed"
                ),
            });
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if eval_at(mid, block, &mut vals) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Re-verify the accepted factor and keep exactly the coefficients
        // the verification saw.
        let ok = eval_at(lo, block, &mut vals);
        debug_assert!(ok, "bisection lower bound must stay admissible");
        if !ok {
            return Err(SolverError::LimiterFailure {
                cell,
                reason: "accepted pressure scale failed re-verification".into(),
            });
        }
        block.copy_from_slice(scratch);
        outcome.min_theta = outcome.min_theta.min(lo);
    }
    Ok(outcome)
}
