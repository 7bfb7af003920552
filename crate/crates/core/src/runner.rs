//! Benchmark orchestration: run configuration, scheme labels, the single-run
//! driver with limiter and buffer hooks, and the sweep drivers used by the
//! command-line tool.
//!
//! A run is deterministic for a fixed configuration: wall-clock fields are
//! the only outputs that vary between repeats.

use std::path::PathBuf;
use std::time::Instant;

use serde::Deserialize;

use crate::dg::{self, Boundary, DgTables, Operator};
use crate::diagnostics::{self, pairwise_slopes, ReportRow, Slope};
use crate::equilibria::{self, Equilibrium};
use crate::error::{Result, SolverError};
use crate::field::{pack_vars, Field};
use crate::limiter::{self, Background};
use crate::mesh::Mesh;
use crate::snapshot::{config_hash, Snapshot};
use crate::time::{compute_dt, CellSignal, Hooks, Integrator, Tableau};
use crate::wb::{self, EqCache, Strategy};

/// Planet-to-star mass ratio above which disc runs enable the positivity
/// limiter by default.
pub const LIMITER_AUTO_ETA: f64 = 9.5e-4;

pub const OUT_DIR_ENV: &str = "DELTADG_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeFamily {
    Classical,
    WellBalanced,
}

/// A scheme label such as DG3 or WBDG2: the family plus the order tag. The
/// order tag doubles as the polynomial degree per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    pub family: SchemeFamily,
    pub order: usize,
}

impl Scheme {
    pub fn checked(family: SchemeFamily, order: usize) -> Result<Self> {
        let range = match family {
            SchemeFamily::Classical => 2..=5,
            SchemeFamily::WellBalanced => 2..=3,
        };
        if !range.contains(&order) {
            return Err(SolverError::InvalidConfig(format!(
                "order {order} is outside the supported range {range:?} for this scheme family"
            )));
        }
        Ok(Scheme { family, order })
    }

    /// Parse a combined label like "DG4" or "wbdg2".
    pub fn parse(label: &str) -> Result<Self> {
        let up = label.trim().to_ascii_uppercase();
        let (family, rest) = if let Some(r) = up.strip_prefix("WBDG") {
            (SchemeFamily::WellBalanced, r)
        } else if let Some(r) = up.strip_prefix("DG") {
            (SchemeFamily::Classical, r)
        } else {
            return Err(SolverError::InvalidConfig(format!(
                "unknown scheme label '{label}'"
            )));
        };
        let order: usize = rest.parse().map_err(|_| {
            SolverError::InvalidConfig(format!("scheme label '{label}' has no order digit"))
        })?;
        Scheme::checked(family, order)
    }

    pub fn label(&self) -> String {
        match self.family {
            SchemeFamily::Classical => format!("DG{}", self.order),
            SchemeFamily::WellBalanced => format!("WBDG{}", self.order),
        }
    }

    pub fn is_well_balanced(&self) -> bool {
        self.family == SchemeFamily::WellBalanced
    }

    /// Polynomial degree per axis. The label carries the formal order of
    /// accuracy, one above the degree: DG3 evolves quadratics.
    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn tableau(&self) -> Tableau {
        Tableau::for_order(self.order)
    }
}

fn default_scheme() -> String {
    "wbdg".to_string()
}

fn default_n() -> usize {
    32
}

fn default_cfl() -> f64 {
    crate::time::DEFAULT_CFL
}

fn default_strategy() -> String {
    "mem".to_string()
}

/// One benchmark run. `scheme` is either a family ("dg", "wbdg") paired with
/// `order`, or a combined label like "DG3" that fixes both.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: String,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub rotations: Option<f64>,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default)]
    pub limiter: Option<bool>,
    /// Number of evenly spaced snapshot times; 0 keeps only the final state.
    #[serde(default)]
    pub output_cadence: usize,
    #[serde(default)]
    pub outdir: Option<PathBuf>,
    /// Reserved for stochastic initial data; the solver itself never draws
    /// random numbers.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn for_case(case: &str) -> Self {
        RunConfig {
            case: case.to_string(),
            scheme: default_scheme(),
            order: None,
            n: default_n(),
            cfl: default_cfl(),
            eta: 0.0,
            t_final: None,
            rotations: None,
            strategy: default_strategy(),
            limiter: None,
            output_cadence: 0,
            outdir: None,
            seed: 0,
        }
    }

    pub fn set_scheme(&mut self, scheme: Scheme) {
        self.scheme = match scheme.family {
            SchemeFamily::Classical => "dg".to_string(),
            SchemeFamily::WellBalanced => "wbdg".to_string(),
        };
        self.order = Some(scheme.order);
    }

    pub fn resolve_scheme(&self) -> Result<Scheme> {
        let up = self.scheme.trim().to_ascii_uppercase();
        match up.as_str() {
            "DG" => Scheme::checked(SchemeFamily::Classical, self.order.unwrap_or(2)),
            "WBDG" => Scheme::checked(SchemeFamily::WellBalanced, self.order.unwrap_or(2)),
            _ => {
                let scheme = Scheme::parse(&up)?;
                if let Some(order) = self.order {
                    if order != scheme.order {
                        return Err(SolverError::InvalidConfig(format!(
                            "scheme label '{}' conflicts with order = {order}",
                            self.scheme
                        )));
                    }
                }
                Ok(scheme)
            }
        }
    }

    pub fn resolve_strategy(&self) -> Result<Strategy> {
        match self.strategy.trim().to_ascii_lowercase().as_str() {
            "rec" | "recompute" => Ok(Strategy::Recompute),
            "mem" | "stored" => Ok(Strategy::Stored),
            other => Err(SolverError::InvalidConfig(format!(
                "unknown cache strategy '{other}' (expected rec or mem)"
            ))),
        }
    }

    /// Case lookup plus cross-field checks shared by every entry point.
    pub fn validate(&self) -> Result<(Equilibrium, Scheme)> {
        let eq = equilibria::by_name(&self.case)?;
        let scheme = self.resolve_scheme()?;
        self.resolve_strategy()?;
        if self.eta < 0.0 {
            return Err(SolverError::InvalidConfig(format!(
                "perturbation amplitude must be non-negative, got {}",
                self.eta
            )));
        }
        if self.eta > 0.0 && eq.pulse_center.is_none() && self.case != "disc" {
            return Err(SolverError::InvalidConfig(format!(
                "case '{}' defines no perturbation parameter",
                self.case
            )));
        }
        if self.n == 0 {
            return Err(SolverError::InvalidConfig("N must be positive".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "CFL constant {} is outside (0, 1]",
                self.cfl
            )));
        }
        if self.rotations.is_some() && self.case != "disc" {
            return Err(SolverError::InvalidConfig(
                "rotation counts only apply to the disc case".into(),
            ));
        }
        Ok((eq, scheme))
    }

    /// Final time: explicit time, then rotations (disc), then the case
    /// default.
    pub fn resolve_t_final(&self, eq: &Equilibrium) -> f64 {
        if let Some(t) = self.t_final {
            return t;
        }
        if let Some(rot) = self.rotations {
            return rot * eq.t_final;
        }
        eq.t_final
    }

    /// Canonical physics identity of the run, hashed into snapshots.
    pub fn canonical_string(&self, eq: &Equilibrium, scheme: Scheme) -> String {
        format!(
            "case={} scheme={} n={} cfl={} eta={} t_final={} strategy={} limiter={:?}",
            self.case,
            scheme.label(),
            self.n,
            self.cfl,
            self.eta,
            self.resolve_t_final(eq),
            self.strategy.to_ascii_lowercase(),
            self.limiter,
        )
    }
}

pub fn resolve_outdir(config: &RunConfig) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .or_else(|| config.outdir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Conserved variable names in storage order.
pub fn variable_names(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        &["rho", "mom_x", "energy"]
    } else {
        &["rho", "mom_x", "mom_y", "energy"]
    }
}

pub struct RunOutcome {
    pub case: String,
    pub label: String,
    pub order: usize,
    pub n: usize,
    pub mesh: Mesh,
    /// Classical runs store the full state; well-balanced runs store the
    /// deviation from `equilibrium`.
    pub field: Field,
    pub equilibrium: Equilibrium,
    pub wb: bool,
    /// L1 distance to the analytic equilibrium per variable, measured on a
    /// quadrature one degree finer than the scheme's.
    pub errors: [f64; 4],
    pub runtime_s: f64,
    pub cache_build_s: f64,
    pub cache_bytes: u64,
    pub steps: u64,
    pub snapshots: Vec<Snapshot>,
    /// Set when the time loop stopped early (admissibility or limiter
    /// failure); the field then holds the last completed state.
    pub failure: Option<String>,
}

impl RunOutcome {
    /// The background the stored coefficients deviate from, if any.
    pub fn background(&self) -> Option<&Equilibrium> {
        if self.wb {
            Some(&self.equilibrium)
        } else {
            None
        }
    }

    /// Evaluate the full conserved state at a physical point.
    pub fn state_at(&self, x: [f64; 2]) -> [f64; 4] {
        diagnostics::state_evaluator(&self.field, &self.mesh, self.background())(x)
    }
}

struct BufferPlan {
    damp: Vec<f64>,
    reset: Vec<bool>,
    /// Reset target for classical runs: the projected equilibrium. The
    /// deviation form resets to zero instead.
    base: Option<Vec<f64>>,
}

fn buffer_plan(eq: &Equilibrium, mesh: &Mesh, wb: bool, init: &Field) -> Option<BufferPlan> {
    let spec = eq.buffers?;
    let ncells = mesh.cell_count();
    let mut damp = vec![1.0; ncells];
    let mut reset = vec![false; ncells];
    let ny = if mesh.dim == 2 { mesh.n[1] } else { 1 };
    for iy in 0..ny {
        for ix in 0..mesh.n[0] {
            let cell = mesh.cell_linear(ix, iy);
            let cx = mesh.center_x(ix as i64);
            let cy = if mesh.dim == 2 { mesh.center_y(iy as i64) } else { 0.0 };
            let r = (cx * cx + cy * cy).sqrt();
            damp[cell] = spec.damp(r);
            reset[cell] = r < spec.reset_radius;
        }
    }
    let base = if wb { None } else { Some(init.coeffs.clone()) };
    Some(BufferPlan { damp, reset, base })
}

fn cell_signals(
    signals: &mut Vec<CellSignal>,
    field: &Field,
    mesh: &Mesh,
    eq_means: Option<&[[f64; 4]]>,
    gravity: &equilibria::Gravity,
    gamma: f64,
    t: f64,
) -> Result<()> {
    use crate::euler::{d1, d2};
    signals.clear();
    let dim = mesh.dim;
    let ny = if dim == 2 { mesh.n[1] } else { 1 };
    for iy in 0..ny {
        for ix in 0..mesh.n[0] {
            let cell = mesh.cell_linear(ix, iy);
            let mut w = [0.0f64; 4];
            for v in 0..field.nvars {
                w[v] = field.cell_average(cell, v);
            }
            if let Some(means) = eq_means {
                for v in 0..field.nvars {
                    w[v] += means[cell][v];
                }
            }
            let (vel_abs, sound, rho, p) = if dim == 1 {
                let u = [w[0], w[1], w[2]];
                let p = d1::pressure(&u, gamma);
                ([(u[1] / u[0]).abs(), 0.0], (gamma * p / u[0]).sqrt(), u[0], p)
            } else {
                let p = d2::pressure(&w, gamma);
                (
                    [(w[1] / w[0]).abs(), (w[2] / w[0]).abs()],
                    (gamma * p / w[0]).sqrt(),
                    w[0],
                    p,
                )
            };
            if !(rho > 0.0 && p > 0.0) {
                return Err(SolverError::Inadmissible {
                    context: format!("cell mean in cell {cell} while estimating the timestep"),
                    rho,
                    pressure: p,
                });
            }
            let cx = mesh.center_x(ix as i64);
            let cy = if dim == 2 { mesh.center_y(iy as i64) } else { 0.0 };
            let g = gravity.grad_phi([cx, cy], t);
            signals.push(CellSignal {
                vel_abs,
                sound,
                grad_phi_abs: (g[0] * g[0] + g[1] * g[1]).sqrt(),
            });
        }
    }
    Ok(())
}

pub fn run_single(config: &RunConfig) -> Result<RunOutcome> {
    let (eq, scheme) = config.validate()?;
    let strategy = config.resolve_strategy()?;
    let deg = scheme.degree();
    let wb_run = scheme.is_well_balanced();
    let gamma = eq.gamma;
    let mesh = if eq.dim == 1 {
        Mesh::new_1d(eq.bounds[0], config.n)?
    } else {
        Mesh::new_2d(eq.bounds[0], eq.bounds[1], config.n, config.n)?
    };
    let tables = DgTables::new(deg)?;
    let op = Operator::new(&mesh, &tables, Boundary::Equilibrium, gamma);
    let t_final = config.resolve_t_final(&eq);

    let pulse = config.eta > 0.0 && eq.pulse_center.is_some();
    let mut gravity = eq.gravity();
    if config.case == "disc" && config.eta > 0.0 {
        gravity = gravity.with_planet(equilibria::disc_planet(config.eta));
    }

    let mut field = if wb_run {
        if pulse {
            wb::project_delta(&mesh, deg, gamma, eq.pulsed_initial_condition(config.eta)?, &eq)?
        } else {
            Field::zeros(&mesh, deg)
        }
    } else if pulse {
        let ic = eq.pulsed_initial_condition(config.eta)?;
        Field::project_primitive(&mesh, deg, gamma, ic)?
    } else {
        Field::project_conserved(&mesh, deg, |x| eq.conserved_at(x))?
    };

    let cache_t0 = Instant::now();
    let cache = if wb_run {
        Some(EqCache::build(&eq, &mesh, &tables, strategy)?)
    } else {
        None
    };
    let cache_build_s = cache_t0.elapsed().as_secs_f64();
    let cache_bytes = cache.as_ref().map(|c| c.bytes() as u64).unwrap_or(0);

    let eq_means = if wb_run {
        Some(wb::equilibrium_cell_means(&eq, &mesh, &tables)?)
    } else {
        None
    };

    let limit_on = config
        .limiter
        .unwrap_or(config.case == "disc" && config.eta >= LIMITER_AUTO_ETA);
    let plan = buffer_plan(&eq, &mesh, wb_run, &field);
    let block_len = field.nvars * field.nmodes();

    let mut post_state = |u: &mut [f64], _ts: f64| -> Result<()> {
        if limit_on {
            let bg = match &cache {
                Some(c) => Background::Equilibrium(c),
                None => Background::Free,
            };
            limiter::apply_positivity(&mesh, &tables, gamma, limiter::DEFAULT_FLOOR, bg, u)?;
        }
        if let Some(plan) = &plan {
            for (cell, is_reset) in plan.reset.iter().enumerate() {
                if !is_reset {
                    continue;
                }
                let block = &mut u[cell * block_len..(cell + 1) * block_len];
                match &plan.base {
                    Some(base) => {
                        block.copy_from_slice(&base[cell * block_len..(cell + 1) * block_len])
                    }
                    None => block.fill(0.0),
                }
            }
        }
        Ok(())
    };
    let mut post_residual = |r: &mut [f64]| -> Result<()> {
        if let Some(plan) = &plan {
            for (cell, factor) in plan.damp.iter().enumerate() {
                for v in r[cell * block_len..(cell + 1) * block_len].iter_mut() {
                    *v *= factor;
                }
            }
        }
        Ok(())
    };

    // The positivity floor and buffer policy also apply to the projection.
    post_state(&mut field.coeffs, 0.0)?;

    let hash = config_hash(&config.canonical_string(&eq, scheme));
    let label = scheme.label();
    let stops: Vec<f64> = if config.output_cadence > 0 {
        (1..=config.output_cadence)
            .map(|i| t_final * i as f64 / config.output_cadence as f64)
            .collect()
    } else {
        Vec::new()
    };

    let mut integ = Integrator::new(scheme.tableau(), field.coeffs.len());
    let mut signals: Vec<CellSignal> = Vec::with_capacity(mesh.cell_count());
    let mut snapshots = Vec::new();
    let mut failure = None;
    let mut steps = 0u64;
    let mut t = 0.0f64;
    let mut stop_idx = 0usize;
    let eps = 1e-12 * t_final.max(1.0);

    let loop_t0 = Instant::now();
    while t < t_final - eps {
        let target = stops.get(stop_idx).copied().unwrap_or(t_final);
        let raw_dt = match cell_signals(
            &mut signals,
            &field,
            &mesh,
            eq_means.as_deref(),
            &gravity,
            gamma,
            t,
        )
        .and_then(|()| {
            compute_dt(signals.drain(..), deg, mesh.dx, mesh.dim, config.cfl, gamma)
        }) {
            Ok(dt) => dt,
            Err(e) => {
                failure = Some(format!("t = {t:.6e}: {e}"));
                break;
            }
        };
        if raw_dt < eps {
            failure = Some(format!(
                "t = {t:.6e}: {}",
                SolverError::TimeStepUnderflow { t, dt: raw_dt }
            ));
            break;
        }
        let (dt, hit) = if t + raw_dt >= target - eps {
            (target - t, true)
        } else {
            (raw_dt, false)
        };
        let step_result = {
            let residual = |ts: f64, u: &[f64], out: &mut [f64]| -> Result<()> {
                match &cache {
                    Some(c) => wb::residual_wb(&op, c, &gravity, u, ts, out),
                    None => dg::residual(&op, Some(&eq), &gravity, u, ts, out),
                }
            };
            let mut hooks = Hooks {
                post_state: Some(&mut post_state),
                post_residual: Some(&mut post_residual),
            };
            integ.step(&mut field.coeffs, t, dt, residual, &mut hooks)
        };
        if let Err(e) = step_result {
            failure = Some(format!("t = {t:.6e}: {e}"));
            break;
        }
        t = if hit { target } else { t + dt };
        steps += 1;
        if hit && stop_idx < stops.len() {
            field.time = t;
            snapshots.push(Snapshot::from_field(
                &config.case,
                &label,
                scheme.order,
                hash,
                &mesh,
                &field,
            ));
            stop_idx += 1;
        }
    }
    let runtime_s = loop_t0.elapsed().as_secs_f64();
    field.time = t;

    let measure = DgTables::new(deg + 1)?;
    let errors = diagnostics::l1_error(
        &field,
        &mesh,
        &measure,
        if wb_run { Some(&eq) } else { None },
        |x| pack_vars(mesh.dim, eq.conserved_at(x)),
    )?;

    Ok(RunOutcome {
        case: config.case.clone(),
        label,
        order: scheme.order,
        n: config.n,
        mesh,
        field,
        equilibrium: eq,
        wb: wb_run,
        errors,
        runtime_s,
        cache_build_s,
        cache_bytes,
        steps,
        snapshots,
        failure,
    })
}

/// Error sweep over orders and resolutions; one row per (order, N,
/// variable). Failed runs keep their row with a NaN error and are skipped
/// when slopes are formed.
pub fn run_convergence(
    template: &RunConfig,
    orders: &[usize],
    ns: &[usize],
) -> Result<Vec<ReportRow>> {
    let (eq, base_scheme) = template.validate()?;
    let names = variable_names(eq.dim);
    let mut rows = Vec::new();
    for &order in orders {
        let scheme = Scheme::checked(base_scheme.family, order)?;
        let mut ok_ns: Vec<usize> = Vec::new();
        let mut ok_errors: Vec<[f64; 4]> = Vec::new();
        let mut meta: Vec<(usize, f64, u64, bool)> = Vec::new();
        for &n in ns {
            let mut cfg = template.clone();
            cfg.set_scheme(scheme);
            cfg.n = n;
            let out = run_single(&cfg)?;
            let clean = out.failure.is_none();
            if clean {
                ok_ns.push(n);
                ok_errors.push(out.errors);
            }
            meta.push((n, out.runtime_s, out.cache_bytes, clean));
        }
        for (v, name) in names.iter().enumerate() {
            let errs: Vec<f64> = ok_errors.iter().map(|e| e[v]).collect();
            let slopes = pairwise_slopes(&ok_ns, &errs);
            let mut ok_i = 0usize;
            for &(n, runtime_s, cache_bytes, clean) in &meta {
                let (l1, slope) = if clean {
                    let s = slopes[ok_i];
                    (errs[ok_i], s)
                } else {
                    (f64::NAN, Slope::Pending)
                };
                rows.push(ReportRow {
                    case: template.case.clone(),
                    scheme: scheme.label(),
                    order,
                    n,
                    variable: (*name).to_string(),
                    l1,
                    runtime_s,
                    wb_cache_bytes: cache_bytes,
                    slope: slope.to_string(),
                });
                if clean {
                    ok_i += 1;
                }
            }
        }
    }
    Ok(rows)
}

pub struct PulseRun {
    pub eta: f64,
    pub scheme: Scheme,
    /// L1 distance of the pressure waveform to the high-resolution
    /// reference, on this run's quadrature points.
    pub distance: f64,
    pub outcome: RunOutcome,
}

/// Amplitude sweep: each eta gets one high-resolution reference run and one
/// row per scheme measuring the waveform distance against it.
pub fn run_pulse_sweep(
    template: &RunConfig,
    etas: &[f64],
    schemes: &[Scheme],
    reference_n: usize,
) -> Result<(Vec<ReportRow>, Vec<PulseRun>)> {
    let (eq, _) = template.validate()?;
    if eq.pulse_center.is_none() {
        return Err(SolverError::InvalidConfig(format!(
            "case '{}' defines no pressure pulse",
            template.case
        )));
    }
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &eta in etas {
        let mut rcfg = template.clone();
        rcfg.set_scheme(Scheme::checked(SchemeFamily::WellBalanced, 3)?);
        rcfg.n = reference_n;
        rcfg.eta = eta;
        rcfg.output_cadence = 0;
        let reference = run_single(&rcfg)?;
        if let Some(f) = &reference.failure {
            return Err(SolverError::InvalidConfig(format!(
                "reference run for eta = {eta} failed: {f}"
            )));
        }
        for &scheme in schemes {
            let mut cfg = template.clone();
            cfg.set_scheme(scheme);
            cfg.eta = eta;
            let out = run_single(&cfg)?;
            // One degree finer than the scheme, like every other error
            // measurement: the scheme's own Gauss nodes are blind to the
            // leading projection error term, which is exactly the signal
            // that separates the two families here.
            let run_tables = DgTables::new(out.field.deg + 1)?;
            let distance = diagnostics::pressure_waveform_distance(
                &out.mesh,
                &run_tables,
                eq.gamma,
                |x| out.state_at(x),
                |x| reference.state_at(x),
            );
            rows.push(ReportRow {
                case: template.case.clone(),
                scheme: scheme.label(),
                order: scheme.order,
                n: out.n,
                variable: format!("pressure_waveform_eta{eta:e}"),
                l1: distance,
                runtime_s: out.runtime_s,
                wb_cache_bytes: out.cache_bytes,
                slope: Slope::Pending.to_string(),
            });
            runs.push(PulseRun {
                eta,
                scheme,
                distance,
                outcome: out,
            });
        }
    }
    Ok((rows, runs))
}

/// Disc protocol: rotations instead of times, per-rotation snapshots, and
/// the limiter auto-enable rule. Desk-scale defaults; long runs opt in via
/// the config.
pub fn run_disc(template: &RunConfig) -> Result<RunOutcome> {
    let mut cfg = template.clone();
    cfg.case = "disc".to_string();
    if cfg.rotations.is_none() && cfg.t_final.is_none() {
        cfg.rotations = Some(2.0);
    }
    if cfg.output_cadence == 0 {
        if let Some(rot) = cfg.rotations {
            cfg.output_cadence = rot.ceil().max(1.0) as usize;
        }
    }
    run_single(&cfg)
}

/// Largest absolute density deviation from the equilibrium and its L1 norm,
/// over quadrature points whose radius lies in [rmin, rmax]. Used to judge
/// disc backgrounds outside the buffer zones.
pub fn density_deviation_stats(
    outcome: &RunOutcome,
    rmin: f64,
    rmax: f64,
) -> Result<(f64, f64)> {
    let mesh = &outcome.mesh;
    let field = &outcome.field;
    let eq = &outcome.equilibrium;
    let tables = DgTables::new(field.deg + 1)?;
    let nq = tables.nq;
    let mut vals = [0.0f64; 4];
    let mut max_abs = 0.0f64;
    let mut l1 = 0.0f64;
    let ny = if mesh.dim == 2 { mesh.n[1] } else { 1 };
    let jac = if mesh.dim == 1 {
        0.5 * mesh.dx[0]
    } else {
        0.25 * mesh.dx[0] * mesh.dx[1]
    };
    for iy in 0..ny {
        for ix in 0..mesh.n[0] {
            let cell = mesh.cell_linear(ix, iy);
            let qy_count = if mesh.dim == 2 { nq } else { 1 };
            for qy in 0..qy_count {
                for qx in 0..nq {
                    let x = dg::volume_point(mesh, &tables, ix, iy, qx, qy);
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if r < rmin || r > rmax {
                        continue;
                    }
                    field.eval_cell(cell, tables.nodes[qx], tables.nodes[qy], &mut vals[..field.nvars])?;
                    let dev = if outcome.wb {
                        vals[0]
                    } else {
                        vals[0] - eq.conserved_at(x)[0]
                    };
                    max_abs = max_abs.max(dev.abs());
                    let w = tables.weights[qx] * if mesh.dim == 2 { tables.weights[qy] } else { 1.0 };
                    l1 += dev.abs() * w * jac;
                }
            }
        }
    }
    Ok((max_abs, l1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_labels_round_trip_and_validate() {
        for label in ["DG2", "DG3", "DG4", "DG5", "WBDG2", "WBDG3"] {
            let s = Scheme::parse(label).unwrap();
            assert_eq!(s.label(), label);
            assert_eq!(s.degree(), s.order - 1);
        }
        assert!(Scheme::parse("DG6").is_err());
        assert!(Scheme::parse("WBDG4").is_err());
        assert!(Scheme::parse("XDG2").is_err());
        assert!(Scheme::parse("DG").is_err());
    }

    #[test]
    fn config_resolution_rules() {
        let mut cfg = RunConfig::for_case("hydro1d");
        cfg.scheme = "wbdg".into();
        cfg.order = Some(3);
        assert_eq!(cfg.resolve_scheme().unwrap().label(), "WBDG3");
        cfg.scheme = "DG4".into();
        cfg.order = None;
        assert_eq!(cfg.resolve_scheme().unwrap().label(), "DG4");
        cfg.order = Some(3);
        assert!(cfg.resolve_scheme().is_err());
        cfg.order = Some(4);
        assert!(cfg.resolve_scheme().is_ok());
        cfg.strategy = "hoard".into();
        assert!(cfg.resolve_strategy().is_err());
    }

    #[test]
    fn gresho_rejects_a_pulse_amplitude() {
        let mut cfg = RunConfig::for_case("gresho");
        cfg.eta = 0.01;
        match cfg.validate() {
            Err(SolverError::InvalidConfig(msg)) => {
                assert!(msg.contains("no perturbation parameter"), "{msg}");
            }
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn toml_config_parses_with_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
case = "moving1d"
scheme = "dg"
order = 3
n = 24
"#,
        )
        .unwrap();
        assert_eq!(cfg.case, "moving1d");
        assert_eq!(cfg.n, 24);
        assert_eq!(cfg.cfl, crate::time::DEFAULT_CFL);
        assert_eq!(cfg.eta, 0.0);
        assert!(toml::from_str::<RunConfig>("case = \"hydro1d\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn well_balanced_run_preserves_the_column() {
        let mut cfg = RunConfig::for_case("hydro1d");
        cfg.set_scheme(Scheme::parse("WBDG2").unwrap());
        cfg.n = 8;
        cfg.t_final = Some(0.5);
        let out = run_single(&cfg).unwrap();
        assert!(out.failure.is_none());
        assert!(out.steps > 0);
        for v in 0..3 {
            assert!(
                out.errors[v] <= 1e-12,
                "variable {v} drifted to {:.3e}",
                out.errors[v]
            );
        }
        assert!(out.cache_bytes > 0, "stored strategy reports its footprint");
    }

    #[test]
    fn classical_run_drifts_but_stays_small() {
        let mut cfg = RunConfig::for_case("hydro1d");
        cfg.set_scheme(Scheme::parse("DG2").unwrap());
        cfg.n = 8;
        cfg.t_final = Some(0.5);
        let out = run_single(&cfg).unwrap();
        assert!(out.failure.is_none());
        assert!(out.errors[0] > 1e-12, "truncation drift is visible");
        assert!(out.errors[0] < 1e-3, "but bounded");
        assert_eq!(out.cache_bytes, 0);
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let mut cfg = RunConfig::for_case("hydro1d");
        cfg.set_scheme(Scheme::parse("WBDG2").unwrap());
        cfg.n = 8;
        cfg.eta = 1e-2;
        cfg.t_final = Some(0.2);
        let a = run_single(&cfg).unwrap();
        let b = run_single(&cfg).unwrap();
        assert_eq!(a.steps, b.steps);
        for (x, y) in a.field.coeffs.iter().zip(&b.field.coeffs) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for v in 0..3 {
            assert_eq!(a.errors[v].to_bits(), b.errors[v].to_bits());
        }
    }

    #[test]
    fn snapshot_cadence_hits_the_requested_times() {
        let mut cfg = RunConfig::for_case("moving1d");
        cfg.set_scheme(Scheme::parse("WBDG3").unwrap());
        cfg.n = 8;
        cfg.t_final = Some(0.4);
        cfg.output_cadence = 2;
        let out = run_single(&cfg).unwrap();
        assert!(out.failure.is_none());
        assert_eq!(out.snapshots.len(), 2);
        assert!((out.snapshots[0].time - 0.2).abs() < 1e-12);
        assert!((out.snapshots[1].time - 0.4).abs() < 1e-12);
        let (_, restored) = out.snapshots[1].restore().unwrap();
        assert_eq!(restored.coeffs, out.field.coeffs);
    }

    #[test]
    fn quiet_disc_run_is_a_fixed_point_of_the_buffered_loop() {
        let mut cfg = RunConfig::for_case("disc");
        cfg.set_scheme(Scheme::parse("WBDG2").unwrap());
        cfg.n = 16;
        cfg.t_final = Some(0.05);
        let out = run_single(&cfg).unwrap();
        assert!(out.failure.is_none(), "{:?}", out.failure);
        assert!(out.steps > 0);
        for c in &out.field.coeffs {
            assert_eq!(c.to_bits(), 0.0f64.to_bits());
        }
        let (max_dev, l1_dev) = density_deviation_stats(&out, 1.0, 4.0).unwrap();
        assert_eq!(max_dev, 0.0);
        assert_eq!(l1_dev, 0.0);
    }

    #[test]
    fn convergence_rows_cover_the_sweep() {
        let mut cfg = RunConfig::for_case("hydro1d");
        cfg.set_scheme(Scheme::parse("DG2").unwrap());
        cfg.t_final = Some(0.2);
        let rows = run_convergence(&cfg, &[2], &[8, 16]).unwrap();
        assert_eq!(rows.len(), 6);
        let fine_rho = rows
            .iter()
            .find(|r| r.n == 16 && r.variable == "rho")
            .unwrap();
        assert_eq!(fine_rho.scheme, "DG2");
        let slope: f64 = fine_rho.slope.parse().unwrap();
        assert!(slope > 1.0, "refinement reduces the error, slope {slope}");
    }

    #[test]
    fn pulse_sweep_measures_a_finite_waveform_distance() {
        let mut cfg = RunConfig::for_case("hydro1d");
        cfg.n = 16;
        cfg.t_final = Some(0.05);
        let schemes = [Scheme::parse("WBDG2").unwrap()];
        let (rows, runs) = run_pulse_sweep(&cfg, &[1e-2], &schemes, 64).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(runs.len(), 1);
        assert!(runs[0].distance.is_finite());
        assert!(runs[0].distance >= 0.0);
        let mass = diagnostics::pulse_pressure_mass(&runs[0].outcome.equilibrium, 1e-2).unwrap();
        assert!(
            runs[0].distance < mass,
            "a resolved short run stays below the pulse mass ({:.3e} vs {mass:.3e})",
            runs[0].distance
        );
    }
}
