//! Error norms, convergence slopes, the closed-form residual oracle for 1D
//! equilibrium columns, pulse waveform distances, and CSV report emission.
//!
//! All quadrature-based sums here walk cells in index order so repeated runs
//! of the same configuration reproduce results bitwise.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::dg::{self, DgTables};
use crate::equilibria::Equilibrium;
use crate::error::{Result, SolverError};
use crate::euler::d1;
use crate::field::{pack_vars, Field};
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

/// Errors at or below this magnitude are reported as "exact": they sit at
/// the rounding floor and a log-slope through them is meaningless.
pub const EXACT_ERROR_FLOOR: f64 = 1e-13;

// ---------------------------------------------------------------------------
// L1 norms

/// Per-variable L1 norms of (numerical solution - reference), accumulated on
/// the volume quadrature points of `tables`. For a well-balanced run pass the
/// background equilibrium so the norm is taken on the full state, keeping
/// reports comparable across scheme families. Entries are in packed order;
/// unused slots stay zero in 1D.
pub fn l1_error<R>(
    field: &Field,
    mesh: &Mesh,
    tables: &DgTables,
    background: Option<&Equilibrium>,
    reference: R,
) -> Result<[f64; 4]>
where
    R: Fn([f64; 2]) -> [f64; 4],
{
    let nvars = field.nvars;
    let nq = tables.nq;
    let mut vals = [0.0f64; 4];
    let mut acc = [0.0f64; 4];
    let (nx, ny) = (mesh.n[0], if mesh.dim == 2 { mesh.n[1] } else { 1 });
    let jac = if mesh.dim == 1 {
        0.5 * mesh.dx[0]
    } else {
        0.25 * mesh.dx[0] * mesh.dx[1]
    };
    for iy in 0..ny {
        for ix in 0..nx {
            let cell = mesh.cell_linear(ix, iy);
            let qy_count = if mesh.dim == 2 { nq } else { 1 };
            for qy in 0..qy_count {
                for qx in 0..nq {
                    let x = dg::volume_point(mesh, tables, ix, iy, qx, qy);
                    field.eval_cell(cell, tables.nodes[qx], tables.nodes[qy], &mut vals[..nvars])?;
                    let base = match background {
                        Some(eq) => pack_vars(mesh.dim, eq.conserved_at(x)),
                        None => [0.0; 4],
                    };
                    let r = reference(x);
                    let w = tables.weights[qx] * if mesh.dim == 2 { tables.weights[qy] } else { 1.0 };
                    for v in 0..nvars {
                        acc[v] += (base[v] + vals[v] - r[v]).abs() * w * jac;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Pointwise conserved-state evaluator for a run result: the modal field plus
/// an optional equilibrium background, packed per the field layout.
pub fn state_evaluator<'a>(
    field: &'a Field,
    mesh: &'a Mesh,
    background: Option<&'a Equilibrium>,
) -> impl Fn([f64; 2]) -> [f64; 4] + 'a {
    move |x| {
        let mut vals = [0.0f64; 4];
        field
            .eval_physical(mesh, x, &mut vals[..field.nvars])
            .expect("evaluation inside the domain cannot fail");
        if let Some(eq) = background {
            let base = pack_vars(mesh.dim, eq.conserved_at(x));
            for v in 0..field.nvars {
                vals[v] += base[v];
            }
        }
        vals
    }
}

// ---------------------------------------------------------------------------
// Convergence slopes

/// Slope entry for one resolution row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    /// First row of a sweep: no coarser neighbour to compare with.
    Pending,
    /// Both errors of the pair sit at the rounding floor.
    Exact,
    /// Measured order from one refinement pair.
    Rate(f64),
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Pending => Ok(()),
            Slope::Exact => write!(f, "exact"),
            Slope::Rate(r) => write!(f, "{r}"),
        }
    }
}

/// Per-pair refinement slopes: entry i compares resolutions i-1 and i as
/// log(e_coarse/e_fine) / log(N_fine/N_coarse). Rows whose pair sits below
/// the rounding floor are marked exact.
pub fn pairwise_slopes(ns: &[usize], errors: &[f64]) -> Vec<Slope> {
    assert_eq!(ns.len(), errors.len());
    let mut out = Vec::with_capacity(ns.len());
    for i in 0..ns.len() {
        if i == 0 {
            out.push(Slope::Pending);
            continue;
        }
        let (ec, ef) = (errors[i - 1], errors[i]);
        if ec <= EXACT_ERROR_FLOOR && ef <= EXACT_ERROR_FLOOR {
            out.push(Slope::Exact);
        } else if ec > 0.0 && ef > 0.0 && ns[i] > ns[i - 1] {
            out.push(Slope::Rate((ec / ef).ln() / (ns[i] as f64 / ns[i - 1] as f64).ln()));
        } else {
            out.push(Slope::Pending);
        }
    }
    out
}

/// Least-squares order through all resolutions with errors above the
/// rounding floor; None when fewer than two usable points remain.
pub fn fit_order(ns: &[usize], errors: &[f64]) -> Option<f64> {
    assert_eq!(ns.len(), errors.len());
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > EXACT_ERROR_FLOOR)
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    Some(-sxy / sxx)
}

// ---------------------------------------------------------------------------
// Closed-form residual oracle for 1D columns

/// Which closed form applies to the projected column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnMotion {
    /// Zero velocity everywhere: the momentum of the projection vanishes
    /// identically, so mass and energy residuals reduce to pure flux jumps
    /// and the momentum residual to a pressure balance.
    Static,
    /// Constant mass flux: the mass residual reduces to pure jumps while
    /// momentum and energy keep their transport terms.
    Moving,
}

/// Closed-form evaluation of d/dt for a projected 1D equilibrium column,
/// assembled directly from face jumps, face averages, and volume quadrature
/// sums of the projected field. Independent of the production assembly; used
/// as an oracle against it. Layout of the result matches the field
/// coefficients.
pub fn update_oracle(
    eq: &Equilibrium,
    mesh: &Mesh,
    tables: &DgTables,
    field: &Field,
    motion: ColumnMotion,
) -> Result<Vec<f64>> {
    if mesh.dim != 1 || field.dim != 1 {
        return Err(SolverError::InvalidConfig(
            "the column oracle is defined for one-dimensional data".into(),
        ));
    }
    let n = mesh.n[0];
    let nm = field.nmodes();
    let nq = tables.nq;
    let gamma = eq.gamma;
    let gravity = eq.gravity();
    let scale = 2.0 / mesh.dx[0];

    let trace = |cell: usize, plus: bool| -> [f64; 3] {
        let block = field.cell_block(cell);
        let ends = if plus { &tables.psi_plus } else { &tables.psi_minus };
        let mut u = [0.0f64; 3];
        for (v, uv) in u.iter_mut().enumerate() {
            let mut s = 0.0;
            for m in 0..nm {
                s += block[v * nm + m] * ends[m];
            }
            *uv = s;
        }
        u
    };
    let ghost = |jf: usize| -> [f64; 3] {
        let w = pack_vars(1, eq.conserved_at([mesh.face_x(jf), 0.0]));
        [w[0], w[1], w[2]]
    };

    // Left/right traces and the local signal bound at every face.
    let mut left = vec![[0.0f64; 3]; n + 1];
    let mut right = vec![[0.0f64; 3]; n + 1];
    let mut alpha = vec![0.0f64; n + 1];
    for jf in 0..=n {
        let a = if jf == 0 { ghost(0) } else { trace(jf - 1, true) };
        let b = if jf == n { ghost(n) } else { trace(jf, false) };
        let pa = d1::pressure(&a, gamma);
        let pb = d1::pressure(&b, gamma);
        alpha[jf] = d1::signal_speed(&a, pa, gamma).max(d1::signal_speed(&b, pb, gamma));
        left[jf] = a;
        right[jf] = b;
    }

    let jump = |jf: usize, v: usize| right[jf][v] - left[jf][v];
    let mean_flux = |jf: usize, v: usize| -> f64 {
        let fa = d1::flux(&left[jf], d1::pressure(&left[jf], gamma));
        let fb = d1::flux(&right[jf], d1::pressure(&right[jf], gamma));
        0.5 * (fa[v] + fb[v])
    };

    let mut out = vec![0.0f64; field.coeffs.len()];
    let mut point = vec![[0.0f64; 3]; nq];
    for cell in 0..n {
        let (jl, jr) = (cell, cell + 1);
        for (q, pt) in point.iter_mut().enumerate() {
            let block = field.cell_block(cell);
            for (v, pv) in pt.iter_mut().enumerate() {
                let mut s = 0.0;
                for m in 0..nm {
                    s += block[v * nm + m] * tables.psi[m * nq + q];
                }
                *pv = s;
            }
        }
        for k in 0..nm {
            let (pp, pm) = (tables.psi_plus[k], tables.psi_minus[k]);
            let diss = |v: usize| {
                0.5 * alpha[jr] * jump(jr, v) * pp - 0.5 * alpha[jl] * jump(jl, v) * pm
            };
            let transport = |v: usize| -> f64 {
                let mut vol = 0.0;
                for (q, pt) in point.iter().enumerate() {
                    vol += d1::flux(pt, d1::pressure(pt, gamma))[v] * tables.dpsi_w[k * nq + q];
                }
                -mean_flux(jr, v) * pp + mean_flux(jl, v) * pm + vol
            };
            let weigh = |v: usize| -> f64 {
                let mut s = 0.0;
                for (q, pt) in point.iter().enumerate() {
                    let x = dg::volume_point(mesh, tables, cell, 0, q, 0);
                    let g = gravity.grad_phi(x, 0.0)[0];
                    s += pt[v] * g * tables.psi_w[k * nq + q];
                }
                s
            };
            let (h_rho, h_mom, h_en) = match motion {
                ColumnMotion::Static => (
                    scale * diss(0),
                    scale * transport(1) - weigh(0),
                    scale * diss(2),
                ),
                ColumnMotion::Moving => (
                    scale * diss(0),
                    scale * (transport(1) + diss(1)) - weigh(0),
                    scale * (transport(2) + diss(2)) - weigh(1),
                ),
            };
            out[field.idx(cell, 0, k)] = h_rho;
            out[field.idx(cell, 1, k)] = h_mom;
            out[field.idx(cell, 2, k)] = h_en;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pulse diagnostics

/// L1 distance between the pressure profiles of two runs, measured on the
/// volume quadrature points of `mesh` (normally the coarse run's mesh; the
/// reference evaluator interpolates its own finer polynomial to the same
/// physical coordinates).
pub fn pressure_waveform_distance<A, B>(
    mesh: &Mesh,
    tables: &DgTables,
    gamma: f64,
    solution: A,
    reference: B,
) -> f64
where
    A: Fn([f64; 2]) -> [f64; 4],
    B: Fn([f64; 2]) -> [f64; 4],
{
    let nq = tables.nq;
    let (nx, ny) = (mesh.n[0], if mesh.dim == 2 { mesh.n[1] } else { 1 });
    let jac = if mesh.dim == 1 {
        0.5 * mesh.dx[0]
    } else {
        0.25 * mesh.dx[0] * mesh.dx[1]
    };
    let pressure_of = |w: [f64; 4]| -> f64 {
        if mesh.dim == 1 {
            d1::pressure(&[w[0], w[1], w[2]], gamma)
        } else {
            crate::euler::d2::pressure(&w, gamma)
        }
    };
    let mut acc = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let qy_count = if mesh.dim == 2 { nq } else { 1 };
            for qy in 0..qy_count {
                for qx in 0..nq {
                    let x = dg::volume_point(mesh, tables, ix, iy, qx, qy);
                    let w = tables.weights[qx] * if mesh.dim == 2 { tables.weights[qy] } else { 1.0 };
                    acc += (pressure_of(solution(x)) - pressure_of(reference(x))).abs() * w * jac;
                }
            }
        }
    }
    acc
}

/// Integral of the initial pressure perturbation over the domain, by dense
/// composite quadrature independent of any solver resolution. This is the
/// natural magnitude against which pulse-capture errors are judged.
pub fn pulse_pressure_mass(eq: &Equilibrium, eta: f64) -> Result<f64> {
    if eq.pulse_center.is_none() {
        return Err(SolverError::InvalidConfig(format!(
            "case '{}' defines no pressure pulse",
            eq.name
        )));
    }
    let ic = eq.pulsed_initial_condition(eta)?;
    let rule = gauss_legendre(4)?;
    let nq = rule.len();
    let cells = 2048usize;
    let mut acc = 0.0;
    if eq.dim == 1 {
        let (a, b) = eq.bounds[0];
        let h = (b - a) / cells as f64;
        for c in 0..cells {
            let mid = a + (c as f64 + 0.5) * h;
            for q in 0..nq {
                let x = [mid + 0.5 * h * rule.nodes[q], 0.0];
                acc += (ic(x).pressure - eq.primitive_at(x).pressure) * rule.weights[q] * 0.5 * h;
            }
        }
    } else {
        let per_axis = 256usize;
        let (ax, bx) = eq.bounds[0];
        let (ay, by) = eq.bounds[1];
        let hx = (bx - ax) / per_axis as f64;
        let hy = (by - ay) / per_axis as f64;
        for cy in 0..per_axis {
            let my = ay + (cy as f64 + 0.5) * hy;
            for cx in 0..per_axis {
                let mx = ax + (cx as f64 + 0.5) * hx;
                for qy in 0..nq {
                    for qx in 0..nq {
                        let x = [mx + 0.5 * hx * rule.nodes[qx], my + 0.5 * hy * rule.nodes[qy]];
                        let dp = ic(x).pressure - eq.primitive_at(x).pressure;
                        acc += dp * rule.weights[qx] * rule.weights[qy] * 0.25 * hx * hy;
                    }
                }
            }
        }
    }
    Ok(acc.abs())
}

// ---------------------------------------------------------------------------
// Reports

/// One CSV row of a benchmark report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub case: String,
    pub scheme: String,
    pub order: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub variable: String,
    pub l1: f64,
    pub runtime_s: f64,
    pub wb_cache_bytes: u64,
    pub slope: String,
}

/// Write rows with the fixed report header. Everything except `runtime_s` is
/// deterministic for a given configuration.
pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> SolverError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SolverError::Io(io),
        other => SolverError::InvalidConfig(format!("csv serialization failed: {other:?}")),
    }
}

/// Sampled point values on a uniform plotting grid, one row per sample:
/// coordinates, conserved state, and pressure. Intended for external
/// plotting tools.
pub fn write_sampled_csv(
    path: &Path,
    field: &Field,
    mesh: &Mesh,
    background: Option<&Equilibrium>,
    gamma: f64,
    samples_per_axis: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["x", "y", "rho", "mom_x", "mom_y", "energy", "pressure"])
        .map_err(csv_error)?;
    let eval = state_evaluator(field, mesh, background);
    let ny = if mesh.dim == 2 { samples_per_axis } else { 1 };
    for sy in 0..ny {
        let y = if mesh.dim == 2 {
            mesh.xmin[1] + (sy as f64 + 0.5) * (mesh.xmax[1] - mesh.xmin[1]) / ny as f64
        } else {
            0.0
        };
        for sx in 0..samples_per_axis {
            let x = mesh.xmin[0]
                + (sx as f64 + 0.5) * (mesh.xmax[0] - mesh.xmin[0]) / samples_per_axis as f64;
            let v = eval([x, y]);
            let (full, p) = if mesh.dim == 1 {
                let p = d1::pressure(&[v[0], v[1], v[2]], gamma);
                ([v[0], v[1], 0.0, v[2]], p)
            } else {
                (v, crate::euler::d2::pressure(&v, gamma))
            };
            w.write_record([
                format!("{x}"),
                format!("{y}"),
                format!("{}", full[0]),
                format!("{}", full[1]),
                format!("{}", full[2]),
                format!("{}", full[3]),
                format!("{p}"),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{Boundary, Operator};
    use crate::equilibria;
    use crate::euler::Primitive;

    fn project(eq: &Equilibrium, mesh: &Mesh, deg: usize) -> Field {
        Field::project_conserved(mesh, deg, |x| eq.conserved_at(x)).unwrap()
    }

    #[test]
    fn l1_of_projection_error_shrinks_at_second_order() {
        let eq = equilibria::hydrostatic_1d();
        let mut errs = Vec::new();
        let ns = [8usize, 16, 32];
        for &n in &ns {
            let mesh = Mesh::new_1d(eq.bounds[0], n).unwrap();
            // Measure on a finer rule than the projection used: the discrete
            // projection interpolates f at its own quadrature nodes, so the
            // error there is rounding-level superconvergence, not the norm.
            let tables = DgTables::new(3).unwrap();
            let field = project(&eq, &mesh, 1);
            let e = l1_error(&field, &mesh, &tables, None, |x| {
                pack_vars(1, eq.conserved_at(x))
            })
            .unwrap();
            errs.push(e[0]);
        }
        let slopes = pairwise_slopes(&ns, &errs);
        for s in &slopes[1..] {
            match s {
                Slope::Rate(r) => assert!((r - 2.0).abs() < 0.2, "slope {r}"),
                other => panic!("expected a rate, got {other:?}"),
            }
        }
    }

    #[test]
    fn l1_against_background_is_zero_for_zero_deviation() {
        let eq = equilibria::hydrostatic_2d();
        let mesh = Mesh::new_2d(eq.bounds[0], eq.bounds[1], 6, 6).unwrap();
        let tables = DgTables::new(2).unwrap();
        let field = Field::zeros(&mesh, 2);
        let e = l1_error(&field, &mesh, &tables, Some(&eq), |x| eq.conserved_at(x)).unwrap();
        for v in e {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn synthetic_error_sequences_recover_their_order() {
        let ns = [8usize, 16, 32, 64];
        let errs: Vec<f64> = ns.iter().map(|n| 3.0 * (*n as f64).powi(-3)).collect();
        for s in &pairwise_slopes(&ns, &errs)[1..] {
            match s {
                Slope::Rate(r) => assert!((r - 3.0).abs() < 1e-12),
                other => panic!("unexpected {other:?}"),
            }
        }
        let fit = fit_order(&ns, &errs).unwrap();
        assert!((fit - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rounding_floor_rows_are_marked_exact() {
        let ns = [8usize, 16];
        let errs = [4.0e-14, 5.0e-15];
        assert_eq!(pairwise_slopes(&ns, &errs), vec![Slope::Pending, Slope::Exact]);
        assert!(fit_order(&ns, &errs).is_none());
    }

    fn oracle_matches_residual(eq: &Equilibrium, motion: ColumnMotion, deg: usize, n: usize, tol: f64) {
        let mesh = Mesh::new_1d(eq.bounds[0], n).unwrap();
        let tables = DgTables::new(deg).unwrap();
        let field = project(eq, &mesh, deg);
        let oracle = update_oracle(eq, &mesh, &tables, &field, motion).unwrap();
        let op = Operator::new(&mesh, &tables, Boundary::Equilibrium, eq.gamma);
        let gravity = eq.gravity();
        let mut res = vec![0.0; field.coeffs.len()];
        dg::residual(&op, Some(eq), &gravity, &field.coeffs, 0.0, &mut res).unwrap();
        let worst = oracle
            .iter()
            .zip(&res)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= tol, "N={n} deg={deg}: worst deviation {worst:.3e}");
    }

    #[test]
    fn static_column_oracle_matches_the_assembled_residual() {
        let eq = equilibria::hydrostatic_1d();
        oracle_matches_residual(&eq, ColumnMotion::Static, 1, 8, 1e-13);
        for &deg in &[1usize, 2] {
            for &n in &[8usize, 16] {
                oracle_matches_residual(&eq, ColumnMotion::Static, deg, n, 1e-12);
            }
        }
    }

    #[test]
    fn moving_column_oracle_matches_the_assembled_residual() {
        let eq = equilibria::moving_1d();
        for &deg in &[1usize, 2] {
            for &n in &[8usize, 16] {
                oracle_matches_residual(&eq, ColumnMotion::Moving, deg, n, 1e-12);
            }
        }
    }

    #[test]
    fn constant_state_oracle_vanishes() {
        let prim = Primitive {
            rho: 1.3,
            vel: [0.0, 0.0],
            pressure: 0.8,
        };
        let eq = equilibria::uniform(1, prim);
        let mesh = Mesh::new_1d(eq.bounds[0], 8).unwrap();
        let tables = DgTables::new(2).unwrap();
        let field = project(&eq, &mesh, 2);
        let h = update_oracle(&eq, &mesh, &tables, &field, ColumnMotion::Static).unwrap();
        let worst = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-13, "worst {worst:.3e}");
    }

    #[test]
    fn oracle_rejects_two_dimensional_input() {
        let eq = equilibria::hydrostatic_2d();
        let mesh = Mesh::new_2d(eq.bounds[0], eq.bounds[1], 4, 4).unwrap();
        let tables = DgTables::new(1).unwrap();
        let field = Field::zeros(&mesh, 1);
        assert!(update_oracle(&eq, &mesh, &tables, &field, ColumnMotion::Static).is_err());
    }

    #[test]
    fn waveform_distance_vanishes_on_identical_runs_and_sees_a_pulse() {
        let eq = equilibria::hydrostatic_1d();
        let eta = 1e-2;
        let mesh = Mesh::new_1d(eq.bounds[0], 16).unwrap();
        let tables = DgTables::new(2).unwrap();
        let ic = eq.pulsed_initial_condition(eta).unwrap();
        let field = Field::project_primitive(&mesh, 2, eq.gamma, |x| ic(x)).unwrap();
        let eval = state_evaluator(&field, &mesh, None);
        let zero = pressure_waveform_distance(&mesh, &tables, eq.gamma, &eval, &eval);
        assert_eq!(zero, 0.0);
        let background = |x: [f64; 2]| pack_vars(1, eq.conserved_at(x));
        let d = pressure_waveform_distance(&mesh, &tables, eq.gamma, &eval, background);
        let mass = pulse_pressure_mass(&eq, eta).unwrap();
        assert!(d > 0.2 * mass && d < 5.0 * mass, "distance {d:.3e} vs mass {mass:.3e}");
    }

    #[test]
    fn pulse_mass_scales_linearly_with_amplitude() {
        let eq = equilibria::hydrostatic_1d();
        let m1 = pulse_pressure_mass(&eq, 1e-2).unwrap();
        let m2 = pulse_pressure_mass(&eq, 1e-4).unwrap();
        // Gaussian of width^2 = 0.01 integrates to eta * sqrt(pi)/10 in 1D.
        let expected = 1e-2 * (std::f64::consts::PI).sqrt() / 10.0;
        assert!((m1 - expected).abs() < 1e-4 * expected, "{m1} vs {expected}");
        assert!((m1 / m2 - 100.0).abs() < 1e-4);
        assert!(pulse_pressure_mass(&equilibria::gresho_vortex(), 1e-2).is_err());
    }

    #[test]
    fn report_rows_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let rows = vec![ReportRow {
            case: "hydro1d".into(),
            scheme: "WBDG2".into(),
            order: 2,
            n: 8,
            variable: "rho".into(),
            l1: 3.25e-14,
            runtime_s: 0.5,
            wb_cache_bytes: 1536,
            slope: Slope::Exact.to_string(),
        }];
        write_report_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "case,scheme,order,N,variable,l1,runtime_s,wb_cache_bytes,slope"
        );
        assert!(lines.next().unwrap().starts_with("hydro1d,WBDG2,2,8,rho,3.25e-14,"));
    }

    #[test]
    fn sampled_csv_covers_the_grid() {
        let eq = equilibria::hydrostatic_1d();
        let mesh = Mesh::new_1d(eq.bounds[0], 8).unwrap();
        let field = project(&eq, &mesh, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        write_sampled_csv(&path, &field, &mesh, None, eq.gamma, 32).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 33);
        assert!(text.starts_with("x,y,rho,"));
    }
}
