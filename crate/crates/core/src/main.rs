use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use semiheat::config::{load_config, ExperimentKind, RunConfig};
use semiheat::constants::derive_constants;
use semiheat::dynamics::InitialDataSpec;
use semiheat::error::{Error, Result};
use semiheat::experiments::acceptance::run_acceptance;
use semiheat::experiments::scan::parse_range;
use semiheat::experiments::{
    run_cross_frame_check, run_decay_experiment, run_fujita_scan, run_negative_entropy_test, run_wang_audit,
};
use semiheat::grid::Frame;
use semiheat::output::{render_evolve, to_json_text, trajectory_csv, with_echo, write_run, write_text, RenderedRun};
use semiheat::parallel::Execution;

const ACCEPTANCE_FAILURE: u8 = 2;

/// Semilinear heat equation lab: u_t = Δu + u^p in original and self-similar variables.
#[derive(Parser)]
#[command(name = "semiheat", version)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived constants as JSON.
    Constants {
        #[command(flatten)]
        problem: ProblemFlags,
        /// Also write the JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Integrate one initial datum and write the diagnostics time series.
    Evolve(RunFlags),
    /// Tabulate outcomes over exponents and amplitudes.
    Scan {
        #[command(flatten)]
        run: RunFlags,
        /// Exponents as lo:hi:n.
        #[arg(long, conflicts_with = "p_list")]
        p_range: Option<String>,
        /// Exponents as a comma-separated list, e.g. 1.5,1.6666666666666667,5.
        #[arg(long, value_delimiter = ',')]
        p_list: Option<Vec<f64>>,
        /// Amplitudes as lo:hi:n.
        #[arg(long, conflicts_with = "amp_list")]
        amp_range: Option<String>,
        /// Amplitudes as a comma-separated list.
        #[arg(long, value_delimiter = ',')]
        amp_list: Option<Vec<f64>>,
        /// Run the cells one after another instead of in parallel.
        #[arg(long)]
        serial: bool,
    },
    /// Run the experiment named by `[experiment] kind` in the config.
    Run(RunFlags),
    /// Run the acceptance suite; exits 2 if any criterion fails.
    Check {
        /// Also write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct ProblemFlags {
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct RunFlags {
    #[command(flatten)]
    problem: ProblemFlags,
    /// Initial data as kind:a:b (gaussian:A:sigma, bump:A:R0, singular:fraction:cutoff).
    #[arg(long)]
    init: Option<InitialDataSpec>,
    /// u (original) or v (rescaled).
    #[arg(long, value_parser = parse_frame)]
    frame: Option<Frame>,
    #[arg(long)]
    dt: Option<f64>,
    /// s_max for the rescaled frame, t_max for the original frame.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    blowup_threshold: Option<f64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_frame(s: &str) -> std::result::Result<Frame, String> {
    match s {
        "u" | "U" => Ok(Frame::U),
        "v" | "V" => Ok(Frame::V),
        _ => Err(format!("frame must be u or v, got {s:?}")),
    }
}

fn base_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_problem(cfg: &mut RunConfig, f: &ProblemFlags) {
    if let Some(d) = f.dim {
        cfg.problem.dim = d;
    }
    if let Some(p) = f.p {
        cfg.problem.p = p;
    }
    if let Some(l) = f.lambda {
        cfg.problem.lambda = l;
    }
}

fn apply_run(cfg: &mut RunConfig, f: &RunFlags) {
    apply_problem(cfg, &f.problem);
    let s = &mut cfg.stepping;
    if let Some(i) = f.init {
        cfg.problem.init = i;
    }
    s.frame = f.frame.unwrap_or(s.frame);
    s.dt = f.dt.unwrap_or(s.dt);
    s.horizon = f.horizon.unwrap_or(s.horizon);
    s.sample_every = f.sample_every.unwrap_or(s.sample_every);
    s.blowup_threshold = f.blowup_threshold.unwrap_or(s.blowup_threshold);
    s.dt_min = s.dt_min.min(s.dt);
    cfg.grid.r_max = f.rmax.unwrap_or(cfg.grid.r_max);
    cfg.grid.nodes = f.nodes.unwrap_or(cfg.grid.nodes);
    if let Some(p) = &f.out {
        cfg.experiment.csv = p.to_string_lossy().into_owned();
    }
    if let Some(p) = &f.json {
        cfg.experiment.json = p.to_string_lossy().into_owned();
    }
}

/// Writes `text` to `path`, or prints it when no path is configured.
fn emit(path: Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(&p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn evolve(cfg: &RunConfig) -> Result<()> {
    let (trajectory, rendered) = render_evolve(cfg)?;
    write_run(cfg, &rendered)?;
    if cfg.csv_path().is_none() {
        print!("{}", rendered.csv);
    }
    eprintln!(
        "{}: {} ({} steps, {} samples)",
        trajectory.outcome.status.label(),
        trajectory.outcome.reason,
        trajectory.steps,
        trajectory.samples.len()
    );
    Ok(())
}

fn scan(cfg: &RunConfig, ps: Vec<f64>, amps: Vec<f64>, mode: Execution) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.experiment.p_list = ps;
    cfg.experiment.amplitudes = amps;
    cfg.validate()?;
    let table = run_fujita_scan(&cfg.experiment.p_list, &cfg.experiment.amplitudes, &cfg, mode);
    let summary = with_echo(
        &cfg,
        json!({
            "table": table,
            "fujita_violations": table.fujita_violations().len(),
            "monotonicity_violations": table.monotonicity_violations().len(),
            "note": "amplitude thresholds are empirical at the configured horizon; undetermined cells are not evidence either way",
        }),
    );
    write_run(&cfg, &RenderedRun { csv: table.to_csv(), json: to_json_text(&summary) })?;
    if cfg.csv_path().is_none() {
        print!("{}", table.to_csv());
    }
    eprint!("{}", table.render());
    Ok(())
}

fn run_experiment(cfg: &RunConfig) -> Result<bool> {
    let (summary, csv, pass) = match cfg.experiment.kind {
        ExperimentKind::Evolve => {
            evolve(cfg)?;
            return Ok(true);
        }
        ExperimentKind::Scan => {
            scan(cfg, cfg.experiment.p_list.clone(), cfg.experiment.amplitudes.clone(), Execution::Parallel)?;
            return Ok(true);
        }
        ExperimentKind::Decay => {
            let (report, tr) = run_decay_experiment(cfg)?;
            (value(&report), Some(trajectory_csv(&tr)), report.pass)
        }
        ExperimentKind::NegativeEntropy => {
            let r = run_negative_entropy_test(cfg)?;
            (value(&r), None, r.pass)
        }
        ExperimentKind::CrossFrame => {
            let t_max = cfg.stepping.horizon.min(1.0);
            let r = run_cross_frame_check(cfg, t_max, cfg.stepping.dt, cfg.stepping.dt)?;
            (value(&r), None, true)
        }
        ExperimentKind::WangAudit => {
            let r = run_wang_audit(cfg)?;
            (value(&r), None, r.pass)
        }
    };
    let text = to_json_text(&with_echo(cfg, summary));
    if let Some(csv) = csv {
        if let Some(p) = cfg.csv_path() {
            write_text(&p, &csv)?;
        }
    }
    emit(cfg.json_path(), &text)?;
    Ok(pass)
}

fn value<T: serde::Serialize>(report: &T) -> serde_json::Value {
    serde_json::to_value(report).expect("reports serialize")
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Constants { problem, json } => {
            let mut cfg = base_config(&cli.config)?;
            apply_problem(&mut cfg, &problem);
            let c = derive_constants(cfg.problem.dim, cfg.problem.p, cfg.problem.lambda)?;
            let text = to_json_text(&c.to_json());
            if let Some(path) = json {
                write_text(&path, &text)?;
            }
            print!("{text}");
            Ok(0)
        }
        Command::Evolve(flags) => {
            let mut cfg = base_config(&cli.config)?;
            apply_run(&mut cfg, &flags);
            cfg.validate()?;
            evolve(&cfg)?;
            Ok(0)
        }
        Command::Scan { run, p_range, p_list, amp_range, amp_list, serial } => {
            let mut cfg = base_config(&cli.config)?;
            apply_run(&mut cfg, &run);
            let range = |text: Option<String>, what: &str| -> Result<Option<Vec<f64>>> {
                text.map(|t| parse_range(&t).ok_or_else(|| Error::InvalidParams(format!("{what} must be lo:hi:n, got {t:?}"))))
                    .transpose()
            };
            let ps = range(p_range, "--p-range")?.or(p_list).unwrap_or_else(|| cfg.experiment.p_list.clone());
            let amps = range(amp_range, "--amp-range")?.or(amp_list).unwrap_or_else(|| cfg.experiment.amplitudes.clone());
            let mode = if serial { Execution::Serial } else { Execution::Parallel };
            scan(&cfg, ps, amps, mode)?;
            Ok(0)
        }
        Command::Run(flags) => {
            let mut cfg = base_config(&cli.config)?;
            apply_run(&mut cfg, &flags);
            cfg.validate()?;
            Ok(if run_experiment(&cfg)? { 0 } else { ACCEPTANCE_FAILURE })
        }
        Command::Check { json } => {
            let results = run_acceptance();
            for r in &results {
                println!("{}", r.line());
            }
            if let Some(path) = json {
                write_text(&path, &to_json_text(&serde_json::to_value(&results).expect("results serialize")))?;
            }
            Ok(if results.iter().all(|r| r.pass) { 0 } else { ACCEPTANCE_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
