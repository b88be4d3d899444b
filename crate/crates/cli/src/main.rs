use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use reflect_core::config::Config;
use reflect_core::log_model::{load_log, SensoryLog};
use reflect_core::percepts::{EmbeddingProvider, FileProvider, HashingProvider, LabelSet};
use reflect_core::reason::{
    plan_correction, run_progressive, CorrectionPlan, ExplanationReport, FailureType, OracleContext,
};
use reflect_core::sim_eval::{evaluate, generate, scenarios, BackendSpec, EvalOptions, Scenario};
use reflect_core::summary::{summarize, Hierarchy};

#[derive(Parser)]
#[command(name = "reflect", version, about = "Summarize robot logs, explain failures and plan corrections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// `oracle`, `replay:FILE` or an http(s) chat-completions url.
    #[arg(long, default_value = "oracle")]
    backend: String,
    /// Embedding store directory; a hashing embedder is used otherwise.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in scenario as a log bundle.
    Simulate {
        #[arg(long, required_unless_present = "list")]
        scenario: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        /// Print the scenario names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Explain a log and plan a correction.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Skip correction planning.
        #[arg(long)]
        no_correct: bool,
    },
    /// Score a suite of scenarios.
    Eval {
        /// JSON array of scenario names or scenario objects; `all` for the built-in set.
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_correct: bool,
    },
    /// Plan a correction from a saved report.
    Correct {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the updated report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize, Deserialize)]
struct Report {
    report: ExplanationReport,
    correction: Option<CorrectionPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correction_error: Option<String>,
}

/// Bad input (exit 2) versus a failure inside the pipeline (exit 1).
enum Failure {
    Input(anyhow::Error),
    Pipeline(anyhow::Error),
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn pipeline<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Pipeline(e.into())
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    match path {
        Some(p) => Config::from_file(p).map_err(input),
        None => Ok(Config::default()),
    }
}

fn provider(path: Option<&Path>) -> Result<Box<dyn EmbeddingProvider>, Failure> {
    Ok(match path {
        Some(p) => Box::new(FileProvider::open(p).map_err(input)?),
        None => Box::new(HashingProvider::default()),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let body = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, body + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(input)
}

struct Loaded {
    log: SensoryLog,
    summaries: Hierarchy,
    provider: Box<dyn EmbeddingProvider>,
    backend: BackendSpec,
    cfg: Config,
}

fn load(log: &Path, common: &Common) -> Result<Loaded, Failure> {
    let backend: BackendSpec = common.backend.parse().map_err(input)?;
    let cfg = load_config(common.config.as_deref())?;
    let provider = provider(common.embeddings.as_deref())?;
    let log = load_log(log).map_err(input)?;
    let labels = if log.task.audio_label_set.is_empty() {
        None
    } else {
        Some(LabelSet::from_texts(&log.task.audio_label_set, provider.as_ref()).map_err(pipeline)?)
    };
    let summaries = summarize(&log, &cfg, labels.as_ref()).map_err(pipeline)?;
    Ok(Loaded {
        log,
        summaries,
        provider,
        backend,
        cfg,
    })
}

fn correct(l: &Loaded, report: &ExplanationReport) -> Result<(Option<CorrectionPlan>, Option<String>), Failure> {
    let backend = l.backend.build(context(l)).map_err(input)?;
    match plan_correction(
        &l.log.task,
        &l.log.objects,
        report,
        &l.summaries.final_state,
        backend.as_ref(),
        l.provider.as_ref(),
        l.cfg.grounding_threshold,
    ) {
        Ok(plan) => Ok((Some(plan), None)),
        Err(e) => Ok((None, Some(e.to_string()))),
    }
}

fn context(l: &Loaded) -> OracleContext {
    OracleContext {
        task: l.log.task.clone(),
        catalog: l.log.objects.clone(),
        summaries: l.summaries.clone(),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SuiteEntry {
    Name(String),
    Inline(Box<Scenario>),
}

fn load_suite(suite: &str) -> Result<Vec<Scenario>, Failure> {
    if suite == "all" {
        return Ok(scenarios::all());
    }
    let text = std::fs::read_to_string(suite)
        .with_context(|| format!("cannot read suite {suite}"))
        .map_err(input)?;
    let entries: Vec<SuiteEntry> = serde_json::from_str(&text)
        .with_context(|| format!("suite {suite} is not a JSON array of scenarios"))
        .map_err(input)?;
    entries
        .into_iter()
        .map(|e| match e {
            SuiteEntry::Name(n) => scenarios::by_name(&n).ok_or_else(|| input(anyhow::anyhow!("unknown scenario {n:?}"))),
            SuiteEntry::Inline(s) => Ok(*s),
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            scenario,
            seed,
            jitter,
            out,
            list,
        } => {
            if list {
                for s in scenarios::all() {
                    println!("{}", s.name);
                }
                return Ok(());
            }
            let name = scenario.expect("required by clap");
            let s = scenarios::by_name(&name).ok_or_else(|| input(anyhow::anyhow!("unknown scenario {name:?}")))?;
            let out = out.expect("required by clap");
            let sim = generate(&s, &out, seed, jitter).map_err(pipeline)?;
            eprintln!("wrote {} frames to {}", sim.log.frames.len(), out.display());
        }
        Command::Analyze {
            log,
            common,
            out,
            no_correct,
        } => {
            let l = load(&log, &common)?;
            let backend = l.backend.build(context(&l)).map_err(input)?;
            let report = run_progressive(&l.log.task, &l.summaries, backend.as_ref()).map_err(pipeline)?;
            let (correction, correction_error) = if no_correct || report.failure_type == FailureType::None {
                (None, None)
            } else {
                correct(&l, &report)?
            };
            write_json(
                &out,
                &Report {
                    report,
                    correction,
                    correction_error,
                },
            )?;
        }
        Command::Eval {
            suite,
            common,
            out,
            seed,
            no_correct,
        } => {
            let config = load_config(common.config.as_deref())?;
            let opts = EvalOptions {
                backend: common.backend.parse().map_err(input)?,
                threshold: config.grounding_threshold,
                config,
                seed,
                correct: !no_correct,
                ..EvalOptions::default()
            };
            let scenarios = load_suite(&suite)?;
            let provider = provider(common.embeddings.as_deref())?;
            let result = evaluate(&scenarios, &opts, provider.as_ref()).map_err(pipeline)?;
            let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.1}%"));
            eprintln!(
                "Loc {}  Co-plan {}  type {:.1}%",
                pct(result.loc),
                pct(result.coplan),
                result.type_accuracy
            );
            write_json(&out, &result)?;
        }
        Command::Correct {
            log,
            report,
            common,
            out,
        } => {
            let text = std::fs::read_to_string(&report)
                .with_context(|| format!("cannot read {}", report.display()))
                .map_err(input)?;
            let mut saved: Report = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a report", report.display()))
                .map_err(input)?;
            let l = load(&log, &common)?;
            let (correction, err) = correct(&l, &saved.report)?;
            saved.correction = correction;
            saved.correction_error = err.clone();
            match out {
                Some(p) => write_json(&p, &saved)?,
                None => println!("{}", serde_json::to_string_pretty(&saved).expect("serializable")),
            }
            if let Some(e) = err {
                return Err(pipeline(anyhow::anyhow!(e)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
