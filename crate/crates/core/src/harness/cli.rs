use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{Baseline, ExperimentConfig};
use super::run::RunManifest;
use super::{cmd_report, cmd_run, HarnessError, Result};
use crate::analysis::Smoothing;
use crate::scenario_dsl::{self, Severity};

/// Search for high-risk intersection scenarios with a genetic algorithm.
#[derive(Debug, Parser)]
#[command(name = "ccsearch", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the GA and its random baseline over the configured scenarios.
    Run(RunArgs),
    /// Compare GA and baseline across one or more run directories.
    Report(ReportArgs),
    /// Parse and compile scenario scripts, printing diagnostics.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, env = "CCSEARCH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Replay the configuration and scripts recorded in a manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Scenario id (A-F) or script path; repeatable. Replaces the configured list.
    #[arg(long = "scenario", env = "CCSEARCH_SCENARIO", value_delimiter = ',')]
    pub scenarios: Vec<String>,
    #[arg(long, env = "CCSEARCH_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "CCSEARCH_GENERATIONS")]
    pub generations: Option<usize>,
    #[arg(long, env = "CCSEARCH_POPULATION")]
    pub population: Option<usize>,
    #[arg(long, env = "CCSEARCH_REPETITIONS")]
    pub repetitions: Option<usize>,
    /// Evaluation threads (0 = all cores).
    #[arg(long, env = "CCSEARCH_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, env = "CCSEARCH_OUT")]
    pub out: Option<PathBuf>,
    /// Skip the random baseline.
    #[arg(long)]
    pub no_baseline: bool,
    /// Record per-simulation wall times in the CSV.
    #[arg(long)]
    pub timings: bool,
    /// Dump the trace of each run's best simulation.
    #[arg(long)]
    pub trace_best: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directories (each containing a manifest).
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Output directory; defaults to the first run directory.
    #[arg(long, env = "CCSEARCH_REPORT_OUT")]
    pub out: Option<PathBuf>,
    /// Savitzky-Golay window (odd).
    #[arg(long)]
    pub window: Option<usize>,
    /// Savitzky-Golay polynomial order.
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Script files (`.ccs`).
    #[arg(required = true)]
    pub scripts: Vec<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<(ExperimentConfig, Vec<super::ScriptSource>)> {
    let (mut cfg, embedded) = match (&args.manifest, &args.config) {
        (Some(path), _) => {
            let m = RunManifest::load(path).map_err(|e| HarnessError::Config(e.to_string()))?;
            (m.config, m.scripts)
        }
        (None, Some(path)) => (ExperimentConfig::load(path)?, Vec::new()),
        (None, None) => (ExperimentConfig::default(), Vec::new()),
    };
    if !args.scenarios.is_empty() {
        cfg.scenarios = args.scenarios.clone();
    }
    if let Some(s) = args.seed {
        cfg.ga.seed = s;
    }
    if let Some(g) = args.generations {
        cfg.ga.generations = g;
    }
    if let Some(p) = args.population {
        cfg.ga.population_size = p;
    }
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    if args.no_baseline {
        cfg.baseline = Baseline::None;
    }
    cfg.timings |= args.timings;
    cfg.trace_best |= args.trace_best;
    Ok((cfg, embedded))
}

fn run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, embedded) = build_config(args)?;
    let m = cmd_run(&cfg, &embedded)?;
    let _ = writeln!(
        out,
        "run {}: {} simulations ({} ga, {} random), {} resample events, {:.0} ms -> {}",
        m.run_id,
        m.counts.simulations,
        m.counts.ga_simulations,
        m.counts.random_simulations,
        m.resample_events.len(),
        m.total_wall_ms,
        cfg.output_dir.display()
    );
    Ok(())
}

fn report(args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let smoothing = match (args.window, args.order) {
        (None, None) => None,
        (w, o) => {
            let d = Smoothing::default();
            Some(Smoothing {
                window: w.unwrap_or(d.window),
                order: o.unwrap_or(d.order),
            })
        }
    };
    if let Some(s) = smoothing {
        if s.window.is_multiple_of(2) || s.order == 0 || s.order >= s.window {
            return Err(HarnessError::Config(format!(
                "window must be odd and 1 <= order < window (window {}, order {})",
                s.window, s.order
            )));
        }
    }
    let dir = args.out.clone().unwrap_or_else(|| args.runs[0].clone());
    let files = cmd_report(&args.runs, &dir, smoothing)?;
    for c in files.report.scenarios.iter().chain(&files.report.aggregate) {
        let rl = c.metric(crate::analysis::Metric::Rl);
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        let _ = writeln!(
            out,
            "{:>4}  rl ga {} random {}  final third ga {} random {}  delta {}  {}",
            c.scenario,
            fmt(rl.ga.overall_mean),
            fmt(rl.random.overall_mean),
            fmt(rl.ga.final_third_mean),
            fmt(rl.random.final_third_mean),
            rl.overall_delta.map_or("-".into(), |d| format!("{:+.1}%", d * 100.0)),
            rl.significance.map_or("-", |s| s.stars.symbol()),
        );
    }
    let _ = writeln!(out, "wrote {}", files.comparison.display());
    Ok(())
}

fn validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let mut failed = 0;
    for path in &args.scripts {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let diags = match scenario_dsl::parse(&text) {
            Ok(ast) => scenario_dsl::compile(&ast).err().unwrap_or_default(),
            Err(d) => d,
        };
        for d in &diags {
            let _ = writeln!(out, "{}:{d}", path.display());
        }
        if diags.iter().any(|d| d.severity == Severity::Error) {
            failed += 1;
        } else {
            let _ = writeln!(out, "{}: ok", path.display());
        }
    }
    if failed > 0 {
        return Err(HarnessError::Config(format!("{failed} script(s) failed validation")));
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 for
/// usage, config or script errors, 2 for runtime failures.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a, out),
        Command::Report(a) => report(a, out),
        Command::Validate(a) => validate(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
