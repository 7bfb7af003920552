//! Benchmark driver: single runs, convergence and pulse sweeps, the disc
//! protocol, and report pretty-printing. Configuration comes from a TOML
//! file, command-line flags (which override the file), and the output
//! directory environment variable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use deltadg::diagnostics::{self, ReportRow};
use deltadg::euler::{d1, d2};
use deltadg::runner::{self, RunConfig, RunOutcome, Scheme};

#[derive(Parser)]
#[command(
    name = "deltadg",
    version,
    about = "Euler solver benchmarks: classical and well-balanced DG schemes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration and report its equilibrium errors
    Run(RunArgs),
    /// Error sweep over resolutions (and optionally orders)
    SweepConvergence(SweepArgs),
    /// Pulse amplitude sweep against a high-resolution reference
    SweepPulse(PulseArgs),
    /// Disc protocol: rotations, buffers, per-rotation snapshots
    RunDisc(DiscArgs),
    /// Pretty-print a report CSV
    Report(ReportArgs),
}

/// Keys shared by every run-like subcommand. Flags override file values.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML file with run configuration keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Case name: hydro1d | hydro2d | moving1d | gresho | disc
    #[arg(long)]
    case: Option<String>,
    /// Scheme family (dg | wbdg) or combined label (DG3, WBDG2)
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    /// Cells per axis
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Perturbation amplitude (pressure pulse, or planet mass on the disc)
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Disc only: final time as a rotation count at the planet orbit
    #[arg(long)]
    rotations: Option<f64>,
    /// Equilibrium cache strategy: rec | mem
    #[arg(long)]
    strategy: Option<String>,
    /// Force the positivity limiter on or off
    #[arg(long)]
    limiter: Option<bool>,
    /// Evenly spaced snapshot count
    #[arg(long = "output-cadence")]
    output_cadence: Option<usize>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Reserved; the solver is deterministic
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str::<RunConfig>(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => {
                let case = self
                    .case
                    .clone()
                    .context("--case is required when no --config file is given")?;
                RunConfig::for_case(&case)
            }
        };
        if let Some(v) = &self.case {
            cfg.case = v.clone();
        }
        if let Some(v) = &self.scheme {
            cfg.scheme = v.clone();
        }
        if let Some(v) = self.order {
            cfg.order = Some(v);
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.cfl {
            cfg.cfl = v;
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.t_final {
            cfg.t_final = Some(v);
        }
        if let Some(v) = self.rotations {
            cfg.rotations = Some(v);
        }
        if let Some(v) = &self.strategy {
            cfg.strategy = v.clone();
        }
        if let Some(v) = self.limiter {
            cfg.limiter = Some(v);
        }
        if let Some(v) = self.output_cadence {
            cfg.output_cadence = v;
        }
        if let Some(v) = &self.outdir {
            cfg.outdir = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Also write a uniformly sampled point-value CSV
    #[arg(long, default_value_t = 256)]
    samples: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Resolutions, comma separated
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    ns: Vec<usize>,
    /// Orders, comma separated; defaults to every order of the scheme family
    #[arg(long, value_delimiter = ',')]
    orders: Vec<usize>,
}

#[derive(Args)]
struct PulseArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Pulse amplitudes, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-4,1e-6,1e-8")]
    etas: Vec<f64>,
    /// Scheme labels to compare, comma separated
    #[arg(long, value_delimiter = ',', default_value = "DG2,WBDG2")]
    schemes: Vec<String>,
    /// Resolution of the reference run
    #[arg(long, default_value_t = 512)]
    reference_n: usize,
}

#[derive(Args)]
struct DiscArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Report CSV to print
    path: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::SweepConvergence(args) => cmd_sweep_convergence(args),
        Cmd::SweepPulse(args) => cmd_sweep_pulse(args),
        Cmd::RunDisc(args) => cmd_run_disc(args),
        Cmd::Report(args) => cmd_report(args),
    }
}

fn ensure_outdir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = runner::resolve_outdir(cfg);
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn outcome_rows(out: &RunOutcome) -> Vec<ReportRow> {
    runner::variable_names(out.mesh.dim)
        .iter()
        .enumerate()
        .map(|(v, name)| ReportRow {
            case: out.case.clone(),
            scheme: out.label.clone(),
            order: out.order,
            n: out.n,
            variable: (*name).to_string(),
            l1: out.errors[v],
            runtime_s: out.runtime_s,
            wb_cache_bytes: out.cache_bytes,
            slope: String::new(),
        })
        .collect()
}

fn print_outcome(out: &RunOutcome) {
    println!(
        "{} {} N={}: {} steps, t = {:.6}, runtime {:.3} s, cache {} B (built in {:.3} s)",
        out.case, out.label, out.n, out.steps, out.field.time, out.runtime_s, out.cache_bytes,
        out.cache_build_s
    );
    for (v, name) in runner::variable_names(out.mesh.dim).iter().enumerate() {
        println!("  L1({name}) vs equilibrium = {:.6e}", out.errors[v]);
    }
    if let Some(f) = &out.failure {
        println!("  RUN STOPPED EARLY: {f}");
    }
}

fn write_snapshots(out: &RunOutcome, dir: &Path) -> Result<()> {
    for (i, snap) in out.snapshots.iter().enumerate() {
        let path = dir.join(format!(
            "{}_{}_N{}_s{}.snap",
            out.case,
            out.label.to_lowercase(),
            out.n,
            i + 1
        ));
        snap.write(&path)?;
        println!("  snapshot t = {:.6} -> {}", snap.time, path.display());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let dir = ensure_outdir(&cfg)?;
    let out = runner::run_single(&cfg)?;
    print_outcome(&out);
    write_snapshots(&out, &dir)?;

    let stem = format!("{}_{}_N{}", out.case, out.label.to_lowercase(), out.n);
    let report = dir.join(format!("{stem}_report.csv"));
    diagnostics::write_report_csv(&report, &outcome_rows(&out))?;
    println!("report -> {}", report.display());

    let samples = dir.join(format!("{stem}_samples.csv"));
    diagnostics::write_sampled_csv(
        &samples,
        &out.field,
        &out.mesh,
        out.background(),
        out.equilibrium.gamma,
        args.samples,
    )?;
    println!("samples -> {}", samples.display());

    if out.failure.is_some() {
        bail!("run stopped before t_final; partial outputs were written");
    }
    Ok(())
}

fn cmd_sweep_convergence(args: SweepArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let dir = ensure_outdir(&cfg)?;
    let scheme = cfg.resolve_scheme()?;
    let orders: Vec<usize> = if args.orders.is_empty() {
        match scheme.family {
            runner::SchemeFamily::Classical => vec![2, 3, 4, 5],
            runner::SchemeFamily::WellBalanced => vec![2, 3],
        }
    } else {
        args.orders.clone()
    };
    if args.ns.len() < 2 {
        bail!("a convergence sweep needs at least two resolutions");
    }
    let rows = runner::run_convergence(&cfg, &orders, &args.ns)?;
    let family = match scheme.family {
        runner::SchemeFamily::Classical => "dg",
        runner::SchemeFamily::WellBalanced => "wbdg",
    };
    let path = dir.join(format!("{}_{family}_convergence.csv", cfg.case));
    diagnostics::write_report_csv(&path, &rows)?;
    print_rows(&rows);
    println!("table -> {}", path.display());
    Ok(())
}

fn cmd_sweep_pulse(args: PulseArgs) -> Result<()> {
    let mut cfg = args.config.build()?;
    if cfg.t_final.is_none() {
        // Short horizon: the pulse must still be inside the domain.
        cfg.t_final = Some(0.25);
    }
    let dir = ensure_outdir(&cfg)?;
    let schemes = args
        .schemes
        .iter()
        .map(|s| Scheme::parse(s))
        .collect::<deltadg::error::Result<Vec<_>>>()?;
    let (rows, runs) = runner::run_pulse_sweep(&cfg, &args.etas, &schemes, args.reference_n)?;
    let path = dir.join(format!("{}_pulse.csv", cfg.case));
    diagnostics::write_report_csv(&path, &rows)?;
    print_rows(&rows);
    println!("table -> {}", path.display());
    for run in &runs {
        let wf = dir.join(format!(
            "{}_{}_eta{:e}_waveform.csv",
            cfg.case,
            run.scheme.label().to_lowercase(),
            run.eta
        ));
        write_waveform_csv(&wf, &run.outcome)?;
        println!("waveform -> {}", wf.display());
    }
    Ok(())
}

fn cmd_run_disc(args: DiscArgs) -> Result<()> {
    let mut cfg = args.config.build()?;
    cfg.case = "disc".to_string();
    let dir = ensure_outdir(&cfg)?;
    let out = runner::run_disc(&cfg)?;
    print_outcome(&out);
    write_snapshots(&out, &dir)?;
    let (dev_max, dev_l1) = runner::density_deviation_stats(&out, 1.0, 3.5)?;
    println!("  density deviation outside buffers (1.0 <= r <= 3.5): max {dev_max:.6e}, L1 {dev_l1:.6e}");
    let mut rows = outcome_rows(&out);
    rows.push(ReportRow {
        case: out.case.clone(),
        scheme: out.label.clone(),
        order: out.order,
        n: out.n,
        variable: "rho_deviation_max".to_string(),
        l1: dev_max,
        runtime_s: out.runtime_s,
        wb_cache_bytes: out.cache_bytes,
        slope: String::new(),
    });
    let path = dir.join(format!(
        "disc_{}_N{}_report.csv",
        out.label.to_lowercase(),
        out.n
    ));
    diagnostics::write_report_csv(&path, &rows)?;
    println!("report -> {}", path.display());
    if out.failure.is_some() {
        bail!("disc run stopped before the requested rotations; partial outputs were written");
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.path)
        .with_context(|| format!("reading {}", args.path.display()))?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect();
    if rows.is_empty() {
        bail!("{} is empty", args.path.display());
    }
    let cols = rows[0].len();
    let mut width = vec![0usize; cols];
    for row in &rows {
        for (c, cell) in row.iter().enumerate() {
            if c < cols {
                width[c] = width[c].max(cell.len());
            }
        }
    }
    for row in &rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:>w$}", w = width.get(c).copied().unwrap_or(0));
        }
        println!("{line}");
    }
    Ok(())
}

fn print_rows(rows: &[ReportRow]) {
    println!(
        "{:<10} {:<7} {:>5} {:>5} {:<28} {:>13} {:>10} {:>14} {:>8}",
        "case", "scheme", "order", "N", "variable", "l1", "runtime_s", "wb_cache_bytes", "slope"
    );
    for r in rows {
        println!(
            "{:<10} {:<7} {:>5} {:>5} {:<28} {:>13.6e} {:>10.3} {:>14} {:>8}",
            r.case, r.scheme, r.order, r.n, r.variable, r.l1, r.runtime_s, r.wb_cache_bytes, r.slope
        );
    }
}

/// Pressure deviation from the equilibrium along the sampling line through
/// the pulse centre (the x axis in 1D), on a uniform grid.
fn write_waveform_csv(path: &Path, out: &RunOutcome) -> Result<()> {
    let eq = &out.equilibrium;
    let mesh = &out.mesh;
    let gamma = eq.gamma;
    let y = if mesh.dim == 2 {
        eq.pulse_center.map(|c| c[1]).unwrap_or(0.0)
    } else {
        0.0
    };
    let pressure_of = |w: [f64; 4]| -> f64 {
        if mesh.dim == 1 {
            d1::pressure(&[w[0], w[1], w[2]], gamma)
        } else {
            d2::pressure(&w, gamma)
        }
    };
    let samples = 1024usize;
    let mut text = String::from("x,pressure_deviation\n");
    for i in 0..samples {
        let x = mesh.xmin[0]
            + (i as f64 + 0.5) * (mesh.xmax[0] - mesh.xmin[0]) / samples as f64;
        let p = pressure_of(out.state_at([x, y]));
        let p_eq = eq.primitive_at([x, y]).pressure;
        let _ = writeln!(text, "{x},{}", p - p_eq);
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
