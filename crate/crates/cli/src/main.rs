use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use switched_predictor::analysis::{check_assumption2, stability_constants, verify_decay, StabilityCertificate};
use switched_predictor::config::RunConfig;
use switched_predictor::io;
use switched_predictor::predictor::{
    detect_mode_sequence, implicit_trace_from_samples, semi_explicit_trace, PredictorMethod,
};
use switched_predictor::presets::PAPER_EXAMPLE_JSON;
use switched_predictor::simulator::simulate_closed_loop;
use switched_predictor::study::{convergence_study, prediction_error};
use switched_predictor::{InputHistory, Resolved, Vector};

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_GUARD: u8 = 3;

/// Predictor-feedback control of switched linear systems with input delay.
#[derive(Parser, Debug)]
#[command(name = "swpred", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (JSON); the bundled two-mode example when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV / JSON / .dat files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a configuration value, e.g. `simulation.horizon=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Predictor route: implicit | semiexplicit.
    #[arg(long, global = true)]
    method: Option<PredictorMethod>,
    /// Hysteresis band of the plant switching law.
    #[arg(long, global = true)]
    hysteresis: Option<f64>,
    /// Seed for sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the delayed closed loop.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Compute the predictor for one state and input window.
    Predict {
        #[command(flatten)]
        common: Common,
        /// State `x1,x2,...`; defaults to the configured x0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Option<Vec<f64>>,
        /// CSV with `theta,u` rows covering the delay window on the step grid.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Sample the regional Lyapunov inequalities over unit directions.
    CheckAssumptions {
        #[command(flatten)]
        common: Common,
        /// Number of unit directions.
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Print the stability-certificate constants.
    Constants {
        #[command(flatten)]
        common: Common,
    },
    /// Check Lyapunov decay, the exponential bound and V continuity.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Trace written by `simulate`; a fresh run is used when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Predictor-exactness error under step refinement.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Number of step levels h, h/2, ...
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Check(String),
    Guard(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<switched_predictor::Error> for Failure {
    fn from(e: switched_predictor::Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("run stopped: {msg}");
            ExitCode::from(EXIT_GUARD)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            RunConfig::from_path(path).with_context(|| format!("reading config {}", path.display()))?
        }
        None => RunConfig::from_json_str(PAPER_EXAMPLE_JSON)?,
    };
    cfg = cfg.with_overrides(&common.set)?;
    if let Some(m) = common.method {
        cfg.simulation.predictor_method = m;
    }
    if let Some(eps) = common.hysteresis {
        cfg.partition.hysteresis = eps;
    }
    if let Some(seed) = common.seed {
        cfg.analysis.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> Result<Option<&Path>> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

/// Print `value` and, with an output directory, also write it to `name`.
fn emit(dir: Option<&Path>, name: &str, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(d) = dir {
        let mut f = create(d, name)?;
        writeln!(f, "{text}")?;
        f.flush()?;
    }
    println!("{text}");
    Ok(())
}

fn q_note(r: &Resolved) -> serde_json::Value {
    match &r.q_selection {
        Some(sel) => json!({ "q": sel.q, "verified": sel.verified }),
        None => json!("given"),
    }
}

fn run(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Simulate { common } => simulate(&common),
        Command::Predict { common, state, history } => predict(&common, state, history),
        Command::CheckAssumptions { common, directions } => check(&common, directions),
        Command::Constants { common } => constants(&common),
        Command::Verify { common, trace } => verify(&common, trace),
        Command::Convergence { common, levels } => convergence(&common, levels),
    }
}

fn simulate(common: &Common) -> std::result::Result<(), Failure> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let sys = &resolved.system;
    let result = simulate_closed_loop(&resolved.sim)?;
    let dir = out_dir(common)?;
    let summary = io::RunSummary::new(&result);
    let mut value = serde_json::to_value(&summary).map_err(anyhow::Error::from)?;
    value["q_selection"] = q_note(&resolved);
    if let Ok(err) = prediction_error(&result) {
        value["prediction_error"] = json!(err);
    }
    if let Some(dir) = dir {
        let mut f = create(dir, "trace.csv")?;
        io::write_trace_csv(&mut f, sys, &result)?;
        io::write_switches_csv(create(dir, "switches.csv")?, &result)?;
        io::write_states_dat(create(dir, "states.dat")?, &result)?;
        io::write_mode_dat(create(dir, "modes.dat")?, &result)?;
        if sys.dim() == 2 {
            io::write_phase_dat(create(dir, "phase.dat")?, &result)?;
            io::write_regions_dat(
                create(dir, "regions.dat")?,
                sys,
                cfg.output.phase_extent,
                cfg.output.phase_resolution,
            )?;
        }
        if let Some(tr) = &result.initial_trace {
            io::write_predictor_trace_csv(create(dir, "initial_predictor.csv")?, tr)?;
        }
        f.flush().map_err(anyhow::Error::from)?;
        fs::write(dir.join("config.json"), cfg.to_json_pretty() + "\n").map_err(anyhow::Error::from)?;
    }
    emit(dir, "summary.json", &value)?;
    match &result.diagnostics.guard {
        Some(g) => Err(Failure::Guard(g.to_string())),
        None => Ok(()),
    }
}

fn predict(common: &Common, state: Option<Vec<f64>>, history: Option<PathBuf>) -> std::result::Result<(), Failure> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let sys = &resolved.system;
    let x = match state {
        Some(v) => Vector::from_vec(v),
        None => resolved.sim.x0.clone(),
    };
    if x.len() != sys.dim() {
        return Err(anyhow!("state needs {} components, got {}", sys.dim(), x.len()).into());
    }
    let n = sys.intervals();
    // window samples on theta = -D + j h, j = 0..=N
    let samples = match history {
        Some(path) => {
            let file = File::open(&path).with_context(|| format!("reading {}", path.display()))?;
            let (theta, u) = io::read_history_csv(file)?;
            if u.len() != n + 1 && u.len() != n {
                return Err(anyhow!("history needs {} or {} rows on the step grid, got {}", n, n + 1, u.len()).into());
            }
            let h = sys.step();
            for (j, t) in theta.iter().enumerate() {
                let want = theta[0] + j as f64 * h;
                if (t - want).abs() > 1e-9 * h.max(t.abs()) {
                    return Err(anyhow!("history row {} is off the step grid (theta = {t})", j + 1).into());
                }
            }
            let mut u = u;
            if u.len() == n {
                u.push(*u.last().unwrap());
            }
            u
        }
        None => {
            let mut u = resolved.sim.u0.clone();
            u.push(*u.last().unwrap_or(&0.0));
            u
        }
    };
    let hist = InputHistory::new(sys.step(), sys.delay(), 0.0, &samples)?;
    let method = cfg.simulation.predictor_method;
    let refine = cfg.simulation.refine_tol * sys.delay();
    let (trace, sequence) = match method {
        PredictorMethod::Implicit => {
            let trace = implicit_trace_from_samples(sys, &x, 0.0, hist.left_samples())?;
            let seq = detect_mode_sequence(
                sys,
                &trace,
                hist.left_samples(),
                refine,
                cfg.simulation.max_switches,
            )?;
            (trace, seq)
        }
        PredictorMethod::SemiExplicit => semi_explicit_trace(sys, &x, &hist, refine)?,
    };
    let p = trace.predictor();
    let value = json!({
        "method": method,
        "state": x.as_slice(),
        "predictor": p.as_slice(),
        "mode": sys.partition().sigma_of(p)?.number(),
        "switch_times": &sequence.times[1..sequence.times.len() - 1],
        "modes": sequence.modes.iter().map(|m| m.number()).collect::<Vec<_>>(),
    });
    let dir = out_dir(common)?;
    if let Some(dir) = dir {
        io::write_predictor_trace_csv(create(dir, "predictor.csv")?, &trace)?;
        io::write_mode_sequence_csv(create(dir, "mode_sequence.csv")?, &sequence)?;
    }
    emit(dir, "prediction.json", &value)?;
    Ok(())
}

fn check(common: &Common, directions: Option<usize>) -> std::result::Result<(), Failure> {
    let mut cfg = load(common)?;
    if let Some(d) = directions {
        cfg.analysis.directions = d;
    }
    let resolved = cfg.resolve()?;
    let report = check_assumption2(&resolved.system, cfg.analysis.directions, cfg.analysis.seed)?;
    let mut value = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
    value["q_selection"] = q_note(&resolved);
    emit(out_dir(common)?, "assumptions.json", &value)?;
    if report.passed {
        Ok(())
    } else {
        let worst = report.modes.iter().map(|m| m.worst_value).fold(f64::NEG_INFINITY, f64::max);
        Err(Failure::Check(format!("regional Lyapunov inequality violated (worst value {worst:e})")))
    }
}

fn certificate_json(cert: &StabilityCertificate) -> serde_json::Value {
    let mut value = serde_json::to_value(cert).expect("certificate serialises");
    value["formulas"] = StabilityCertificate::formulas()
        .iter()
        .map(|(k, f)| json!({ "name": k, "formula": f }))
        .collect();
    value
}

fn constants(common: &Common) -> std::result::Result<(), Failure> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let cert = stability_constants(&resolved.system, resolved.system.delay())?;
    println!("{cert}");
    if let Some(dir) = out_dir(common)? {
        let mut value = certificate_json(&cert);
        value["q_selection"] = q_note(&resolved);
        let text = serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)?;
        fs::write(dir.join("constants.json"), text + "\n").map_err(anyhow::Error::from)?;
    }
    Ok(())
}

fn verify(common: &Common, trace: Option<PathBuf>) -> std::result::Result<(), Failure> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let sys = &resolved.system;
    let result = match trace {
        Some(path) => {
            let file = File::open(&path).with_context(|| format!("reading {}", path.display()))?;
            io::read_trace_csv(file, &resolved.sim)?
        }
        None => simulate_closed_loop(&resolved.sim)?,
    };
    let cert = stability_constants(sys, sys.delay())?;
    let report = verify_decay(sys, &result, &cert, cfg.analysis.decay_tol);
    let mut value = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
    value["q_selection"] = q_note(&resolved);
    emit(out_dir(common)?, "verify.json", &value)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "decay ok: {}, bound ok: {}, continuity ok: {}",
            report.decay_ok, report.bound_ok, report.continuity_ok
        )))
    }
}

fn convergence(common: &Common, levels: usize) -> std::result::Result<(), Failure> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    if levels < 2 {
        return Err(anyhow!("--levels must be at least 2").into());
    }
    let report = convergence_study(&resolved.sim, levels)?;
    let value = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
    emit(out_dir(common)?, "convergence.json", &value)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("estimated orders {:?} outside {:?}", report.orders, report.order_range)))
    }
}

