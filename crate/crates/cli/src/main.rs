mod wr;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tightcr::bounds::bound_report;
use tightcr::designs::write_rows;
use tightcr::experiment::{run_experiment, summarize, write_summary_csv, write_trials_csv, ExperimentConfig, WrParams};
use tightcr::model::{make_qubit_model, make_random_model, QuantumModel};
use tightcr::sdp::{solve, SdpProblem, SolveOptions};
use tightcr::tight::{tight_bounds, KappaMode, KappaOptions, TightOptions};
use tightcr::Error;

use wr::WrSpec;

const THREADS_ENV: &str = "TIGHTCR_THREADS";

#[derive(Parser)]
#[command(name = "tightcr", version, about = "Cramér-Rao bound hierarchy and tight bounds for quantum models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// SLD, HN, NH and tight bounds for one model file.
    Bounds(BoundsArgs),
    /// Random-derivative sweep with gap statistics.
    Experiment(ExperimentArgs),
    /// Write a direction set as CSV.
    ExportWr(ExportArgs),
    /// Solve an SDP from its JSON dump.
    SolveSdp(SolveSdpArgs),
    /// Write a model file.
    MakeModel(MakeModelArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

impl SolverFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            gap_tol: self.gap_tol,
            feas_tol: self.feas_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Args)]
struct BoundsArgs {
    /// Model JSON file.
    model: PathBuf,
    /// makewr[:N,k,phi0], dnd:n,d, circle:N or csv:PATH. Defaults by d.
    #[arg(long)]
    wr: Option<WrSpec>,
    /// Smaller default direction set.
    #[arg(long)]
    fast: bool,
    /// κ grid points per axis (default depends on d).
    #[arg(long)]
    kappa_grid: Option<usize>,
    /// Use this many low-discrepancy samples for κ instead of a grid.
    #[arg(long, conflicts_with = "kappa_grid")]
    kappa_samples: Option<usize>,
    /// Write the full result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the estimator as a tab-separated table.
    #[arg(long)]
    estimator: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Hilbert dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8,9,10,11,12,13,14,15,16,17")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// makeWR parameters N,k,phi0.
    #[arg(long, conflicts_with = "fast")]
    wr_params: Option<String>,
    /// makeWR(30, 30, 1.2) instead of (70, 100, 1.2).
    #[arg(long)]
    fast: bool,
    #[arg(long, default_value_t = 1000)]
    kappa_grid: usize,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, default_value = "makewr")]
    wr: WrSpec,
    /// Keep duplicate rows exactly as constructed.
    #[arg(long)]
    raw: bool,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveSdpArgs {
    problem: PathBuf,
    /// Write the solution as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct MakeModelArgs {
    #[command(subcommand)]
    kind: ModelKind,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ModelKind {
    /// `ρ = I/n` with random traceless derivatives.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Qubit with unit SLD Fisher matrix and `G = diag(g)`.
    Qubit {
        #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
        g: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) | Error::Infeasible(_) | Error::NoConvergence | Error::DegenerateOutcome(_) => 3,
        _ => 2,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> tightcr::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn load_model(path: &Path) -> tightcr::Result<QuantumModel> {
    let text = fs::read_to_string(path)?;
    QuantumModel::from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn cmd_bounds(a: BoundsArgs) -> tightcr::Result<()> {
    let m = load_model(&a.model)?;
    let spec = match a.wr {
        Some(s) => s,
        None => WrSpec::default_for(m.d(), a.fast)?,
    };
    let wr = spec.build()?;
    let solve = a.solver.options();
    let kappa = KappaOptions {
        mode: match (a.kappa_grid, a.kappa_samples) {
            (Some(p), _) => Some(KappaMode::Grid(p)),
            (_, Some(s)) => Some(KappaMode::Sampling(s)),
            _ => None,
        },
        refine: None,
    };
    let t = Instant::now();
    let b = bound_report(&m, &solve)?;
    let r = tight_bounds(&m, &wr, &TightOptions { solve, kappa })?;
    let secs = t.elapsed().as_secs_f64();
    println!("model: n = {}, d = {}; directions: {} ({:?})", m.n(), m.d(), wr.len(), spec);
    println!("{:<14}{:>16}", "bound", "value");
    for (name, v) in [
        ("SLD (P4)", b.sld),
        ("SLD formula", b.sld_closed_form),
        ("HN (P5)", b.hn),
        ("NH (P2)", b.nh),
        ("tight lower", r.lower),
        ("tight upper", r.upper),
    ] {
        println!("{name:<14}{v:>16.10}");
    }
    if let Some(l) = r.lower_certified {
        println!("{:<14}{:>16.10}", "certified", l);
    }
    println!(
        "kappa = {:.3e} (raw {:.3e}), C2 = {:.4}, isgap = {}, ordered = {}, {:.2}s",
        r.kappa,
        r.kappa_raw,
        r.certificate.c2,
        u8::from(r.lower > b.nh),
        b.is_ordered(1e-6) && r.upper >= b.nh - 1e-6 * b.nh.abs().max(1.0),
        secs
    );
    if let Some(p) = &a.estimator {
        fs::write(p, r.estimator.to_table())?;
    }
    if let Some(p) = &a.out {
        write_json(p, &json!({ "bounds": b, "tight": r }))?;
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> tightcr::Result<()> {
    let wr = match (&a.wr_params, a.fast) {
        (Some(s), _) => match s.parse::<WrSpec>().or_else(|_| format!("makewr:{s}").parse::<WrSpec>())? {
            WrSpec::MakeWr { big_n, k, phi0 } => WrParams { big_n, k, phi0 },
            _ => return Err(Error::Parse(format!("--wr-params expects N,k,phi0, got {s:?}"))),
        },
        (None, true) => WrParams::FAST,
        (None, false) => WrParams::PAPER,
    };
    let cfg = ExperimentConfig {
        n_list: a.n,
        trials: a.trials,
        d: 2,
        wr,
        seed: a.seed,
        kappa_grid: a.kappa_grid,
        solve: a.solver.options(),
    };
    cfg.validate()?;
    let t = Instant::now();
    let records = run_experiment(&cfg)?;
    let summary = summarize(&records)?;
    fs::create_dir_all(&a.out_dir)?;
    write_trials_csv(BufWriter::new(File::create(a.out_dir.join("trials.csv"))?), &cfg, &records)?;
    write_summary_csv(BufWriter::new(File::create(a.out_dir.join("summary.csv"))?), &summary)?;
    write_json(
        &a.out_dir.join("summary.json"),
        &json!({ "config": cfg, "summary": summary, "trials": records }),
    )?;
    println!(
        "{:>4} {:>7} {:>6} {:>6} {:>8} {:>17} {:>12}",
        "n", "trials", "failed", "gaps", "g_n", "99% CI", "max low/NH"
    );
    for s in &summary {
        println!(
            "{:>4} {:>7} {:>6} {:>6} {:>8.3} [{:.3}, {:.3}] {:>12.6}",
            s.n, s.trials, s.failed, s.gaps, s.g_n, s.ci_low, s.ci_high, s.max_lower_over_nh
        );
    }
    for r in records.iter().filter(|r| !r.is_ok()) {
        eprintln!("n = {} trial {}: {}", r.n, r.trial_index, r.status);
    }
    println!("wrote {} in {:.1}s", a.out_dir.display(), t.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_export(a: ExportArgs) -> tightcr::Result<()> {
    let out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    if a.raw {
        let (d, c, rows) = a.wr.raw_rows()?;
        write_rows(out, d, c, &rows)
    } else {
        a.wr.build()?.write_csv(out)
    }
}

fn cmd_solve_sdp(a: SolveSdpArgs) -> tightcr::Result<()> {
    let text = fs::read_to_string(&a.problem)?;
    let p = SdpProblem::from_json(&text)?;
    let sol = solve(&p, &a.solver.options())?;
    println!(
        "status {:?}, value {:.12e}, primal {:.12e}, dual {:.12e}, gap {:.2e}, residuals {:.2e}/{:.2e}, {} iterations",
        sol.status,
        sol.value(),
        sol.primal_obj,
        sol.dual_obj,
        sol.gap,
        sol.primal_residual,
        sol.dual_residual,
        sol.iterations
    );
    if let Some(o) = &a.out {
        write_json(o, &serde_json::to_value(&sol)?)?;
    }
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(Error::Solver(format!("solve ended with {:?}", sol.status)))
    }
}

fn cmd_make_model(a: MakeModelArgs) -> tightcr::Result<()> {
    let m = match a.kind {
        ModelKind::Random { n, d, seed } => make_random_model(n, d, seed)?,
        ModelKind::Qubit { g, alpha } => {
            let g: [f64; 3] = g
                .try_into()
                .map_err(|_| Error::Parse("--g expects three comma-separated weights".into()))?;
            make_qubit_model(g, alpha)?
        }
    };
    let text = m.to_json()?;
    match a.out {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn configure_threads() -> tightcr::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Parse(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> tightcr::Result<()> {
        configure_threads()?;
        match cli.cmd {
            Cmd::Bounds(a) => cmd_bounds(a),
            Cmd::Experiment(a) => cmd_experiment(a),
            Cmd::ExportWr(a) => cmd_export(a),
            Cmd::SolveSdp(a) => cmd_solve_sdp(a),
            Cmd::MakeModel(a) => cmd_make_model(a),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
