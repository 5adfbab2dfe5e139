use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use hvbta_core::adjudicator::{RemoteConfig, ScoreCache};
use hvbta_core::domain::{load_scenario, validate_scenario, Scenario};
use hvbta_core::pipeline::{emit_report, render_svg, run_with, Backend, Mode, OutputFormat, PipelineConfig, PipelineError, Report};

const EXIT_INVALID: u8 = 2;
const EXIT_UNSOLVABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "hvbta", version, about = "Suitability scoring, voting-based task allocation and multi-agent path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score, allocate and plan.
    Run(RunArgs),
    /// Score and allocate; no planning.
    Assign(RunArgs),
    /// Plan the assignment embedded in the scenario file.
    Plan(RunArgs),
    /// Check a scenario and list every violation.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Stub,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    approval_threshold: Option<f64>,
    #[arg(long)]
    ecbs_w: Option<f64>,
    #[arg(long)]
    multi_round: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write an SVG rendering of the grid and paths.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Adjudication cache file, read before and written after the run.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// JSON settings file (pipeline parameters and remote backend).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the remote API key.
    #[arg(long)]
    api_key_env: Option<String>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    approval_threshold: Option<f64>,
    ecbs_w: Option<f64>,
    seed: Option<u64>,
    horizon_factor: Option<usize>,
    multi_round: Option<bool>,
    retry_limit: Option<u32>,
    max_ct_nodes: Option<usize>,
    backend: Option<String>,
    remote: Option<RemoteConfig>,
}

fn read_config_file(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Defaults, then the scenario's config block, then the config file, then flags.
fn build_config(args: &RunArgs, scenario: &Scenario) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    cfg.apply(&scenario.config);
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => ConfigFile::default(),
    };
    let mut remote = file.remote.clone().unwrap_or_default();
    let mut use_remote = match file.backend.as_deref() {
        None | Some("stub") => false,
        Some("remote") => true,
        Some(other) => anyhow::bail!("unknown backend {other:?} in config file"),
    };
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = v;
            }
        };
    }
    set!(approval_threshold, file.approval_threshold);
    set!(ecbs_w, file.ecbs_w);
    set!(seed, file.seed);
    set!(horizon_factor, file.horizon_factor);
    set!(multi_round, file.multi_round);
    set!(retry_limit, file.retry_limit);
    set!(max_ct_nodes, file.max_ct_nodes);

    set!(approval_threshold, args.approval_threshold);
    set!(ecbs_w, args.ecbs_w);
    set!(seed, args.seed);
    if args.multi_round {
        cfg.multi_round = true;
    }
    if let Some(b) = args.backend {
        use_remote = matches!(b, BackendArg::Remote);
    }
    if let Some(v) = &args.base_url {
        remote.base_url = v.clone();
    }
    if let Some(v) = &args.model {
        remote.model = v.clone();
    }
    if let Some(v) = &args.api_key_env {
        remote.api_key_env = v.clone();
    }
    cfg.backend = if use_remote { Backend::Remote(remote) } else { Backend::Stub };
    cfg.format = match args.format {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Csv => OutputFormat::CsvSummary,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).context("writing report")
        }
    }
}

fn emit(args: &RunArgs, cfg: &PipelineConfig, scenario: &Scenario, report: &Report) -> Result<()> {
    write_output(args.out.as_deref(), &emit_report(report, cfg.format)?)?;
    if let Some(path) = &args.svg {
        let svg = render_svg(&scenario.map, &report.paths, &report.assignment);
        std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(args: &RunArgs, mode: Mode) -> Result<ExitCode> {
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_INVALID));
        }
    };
    let cfg = build_config(args, &scenario)?;
    let cache = match &args.cache {
        Some(p) => ScoreCache::load(p)?,
        None => ScoreCache::new(),
    };
    let adjudicator = cfg.adjudicator(&scenario, cache)?;
    let outcome = run_with(&scenario, &cfg, mode, &adjudicator);
    if let Some(p) = &args.cache {
        adjudicator.cache().save(p)?;
    }
    match outcome {
        Ok(report) => {
            emit(args, &cfg, &scenario, &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(PipelineError::Invalid(violations)) => {
            for v in violations {
                eprintln!("{v}");
            }
            Ok(ExitCode::from(EXIT_INVALID))
        }
        Err(PipelineError::Unsolvable { reason, report }) => {
            emit(args, &cfg, &scenario, &report)?;
            eprintln!("error: planning failed: {reason}");
            Ok(ExitCode::from(EXIT_UNSOLVABLE))
        }
        Err(e) => Err(e.into()),
    }
}

fn validate(path: &Path) -> ExitCode {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let violations = validate_scenario(&scenario);
    if violations.is_empty() {
        println!("ok");
        return ExitCode::SUCCESS;
    }
    for v in &violations {
        println!("{v}");
    }
    ExitCode::from(EXIT_INVALID)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a, Mode::Full),
        Command::Assign(a) => run(a, Mode::AssignOnly),
        Command::Plan(a) => run(a, Mode::PlanOnly),
        Command::Validate { scenario } => Ok(validate(scenario)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
