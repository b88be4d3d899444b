//! Scripted kitchen episodes with injected failures, and the evaluation
//! harness that scores explanations and corrections against annotations.

pub mod scenarios;
pub mod scene;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::log_model::{save_log, GoalPredicate, LogError, TaskSpec, Timestamp};
use crate::percepts::EmbeddingProvider;
use crate::reason::{
    plan_correction, run_progressive, BackendError, FailureType, HttpBackend, LlmBackend, OracleBackend,
    OracleContext, ReplayBackend, GROUNDING_THRESHOLD,
};
use crate::summary::{summarize, SummaryError};
use crate::world::{ExecutableAction, Outcome, WorldError, WorldState};

pub use scene::{run_script, Event, EventKind, Segment, SimObject, Simulation, Timeline, Trait};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad script: {0}")]
    Script(String),
    #[error("{object} is moved twice at {t}")]
    ScriptConflict { object: String, t: Timestamp },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("unknown backend {0:?}, expected oracle, replay:FILE or an http(s) url")]
    UnknownBackend(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    Drop,
    MissingObject,
    BlockedPrecondition,
    WrongPlanTarget,
    WrongPlanOrder,
    OccludedState,
    Spilled,
    UnmetGoal,
}

impl FailureCategory {
    pub fn failure_type(self) -> FailureType {
        use FailureCategory::*;
        match self {
            Drop | MissingObject | BlockedPrecondition | OccludedState | Spilled => FailureType::Execution,
            WrongPlanTarget | WrongPlanOrder | UnmetGoal => FailureType::Planning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureInjection {
    pub category: FailureCategory,
    pub at: Timestamp,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

/// Ground truth for one failed episode. `ranges` are inclusive and span from
/// the cause to where the failure shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub failure_type: FailureType,
    pub category: FailureCategory,
    pub ranges: Vec<(Timestamp, Timestamp)>,
}

impl Annotation {
    pub fn covers(&self, t: Timestamp) -> bool {
        self.ranges.iter().any(|(a, b)| *a <= t && t <= *b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub task: TaskSpec,
    pub objects: Vec<SimObject>,
    pub timeline: Vec<Segment>,
    pub events: Vec<Event>,
    pub injected_failure: Option<FailureInjection>,
    pub annotation: Option<Annotation>,
}

impl Scenario {
    pub fn simulate(&self, seed: u64, jitter: f64) -> Result<Simulation, SimError> {
        run_script(&self.task, &self.objects, &self.timeline, &self.events, seed, jitter)
    }
}

/// Simulates a scenario and writes its bundle to `dir`, with the
/// annotation alongside in `annotation.json`.
pub fn generate(scenario: &Scenario, dir: &Path, seed: u64, jitter: f64) -> Result<Simulation, SimError> {
    let sim = scenario.simulate(seed, jitter)?;
    save_log(&sim.log, dir)?;
    let path = dir.join("annotation.json");
    let body = serde_json::to_string_pretty(&scenario.annotation).expect("annotation serializes");
    std::fs::write(&path, body).map_err(|source| SimError::Io { path, source })?;
    Ok(sim)
}

/// Runs a plan from `world`. Blocked steps change nothing; an illegal step
/// is an error. Returns the end state and whether the goal holds there.
pub fn execute_plan(
    world: &WorldState,
    goal: &[GoalPredicate],
    plan: &[ExecutableAction],
) -> Result<(WorldState, bool), WorldError> {
    let mut w = world.clone();
    for a in plan {
        if let Outcome::Blocked(_) = w.apply(a)? {
            continue;
        }
    }
    let ok = w.goal_met(goal);
    Ok((w, ok))
}

/// Where completions come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Oracle,
    Replay(PathBuf),
    Http(String),
}

impl FromStr for BackendSpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        if s == "oracle" || s == "oracle:" {
            Ok(BackendSpec::Oracle)
        } else if let Some(path) = s.strip_prefix("replay:") {
            Ok(BackendSpec::Replay(PathBuf::from(path)))
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(BackendSpec::Http(s.to_string()))
        } else {
            Err(SimError::UnknownBackend(s.to_string()))
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Oracle => write!(f, "oracle"),
            BackendSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            BackendSpec::Http(u) => write!(f, "{u}"),
        }
    }
}

impl BackendSpec {
    /// The oracle needs the summaries it will be asked about; the other
    /// backends ignore `ctx`.
    pub fn build(&self, ctx: OracleContext) -> Result<Box<dyn LlmBackend>, SimError> {
        Ok(match self {
            BackendSpec::Oracle => Box::new(OracleBackend::new(ctx)),
            BackendSpec::Replay(p) => Box::new(ReplayBackend::from_file(p)?),
            BackendSpec::Http(u) => Box::new(HttpBackend::from_env(u)?),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub backend: BackendSpec,
    pub config: Config,
    pub seed: u64,
    pub jitter: f64,
    pub correct: bool,
    pub threshold: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            backend: BackendSpec::Oracle,
            config: Config::default(),
            seed: 0,
            jitter: 0.0,
            correct: true,
            threshold: GROUNDING_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub expected_type: FailureType,
    pub predicted_type: Option<FailureType>,
    pub explanation: String,
    pub predicted_times: Vec<Timestamp>,
    /// Some predicted time falls inside an annotated range.
    pub loc_correct: Option<bool>,
    /// Every predicted time falls inside an annotated range.
    pub loc_all: Option<bool>,
    pub correction: Option<Vec<String>>,
    pub coplan_success: Option<bool>,
    /// Why the pipeline stopped early, if it did.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub outcomes: Vec<ScenarioOutcome>,
    /// Percent of failed scenarios localized correctly.
    pub loc: Option<f64>,
    /// Percent of failed scenarios whose correction reaches the goal.
    pub coplan: Option<f64>,
    /// Percent of all scenarios whose failure type was predicted.
    pub type_accuracy: f64,
}

fn percent(hits: impl Iterator<Item = bool>) -> Option<f64> {
    let (n, k) = hits.fold((0usize, 0usize), |(n, k), h| (n + 1, k + h as usize));
    (n > 0).then(|| 100.0 * k as f64 / n as f64)
}

/// Explains, and optionally corrects, one scenario. Backend and grounding
/// failures are recorded in the outcome rather than aborting the run.
pub fn evaluate_one(
    scenario: &Scenario,
    opts: &EvalOptions,
    provider: &dyn EmbeddingProvider,
) -> Result<ScenarioOutcome, SimError> {
    let sim = scenario.simulate(opts.seed, opts.jitter)?;
    let summaries = summarize(&sim.log, &opts.config, None)?;
    let task = &sim.log.task;
    let backend = opts.backend.build(OracleContext {
        task: task.clone(),
        catalog: sim.log.objects.clone(),
        summaries: summaries.clone(),
    })?;
    let expected_type = scenario.annotation.as_ref().map_or(FailureType::None, |a| a.failure_type);
    let mut out = ScenarioOutcome {
        name: scenario.name.clone(),
        expected_type,
        predicted_type: None,
        explanation: String::new(),
        predicted_times: Vec::new(),
        loc_correct: scenario.annotation.as_ref().map(|_| false),
        loc_all: scenario.annotation.as_ref().map(|_| false),
        correction: None,
        coplan_success: (opts.correct && scenario.annotation.is_some()).then_some(false),
        error: None,
    };
    let report = match run_progressive(task, &summaries, backend.as_ref()) {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e.to_string());
            return Ok(out);
        }
    };
    out.predicted_type = Some(report.failure_type);
    out.explanation = report.explanation.clone();
    out.predicted_times = report.failure_times.clone();
    if let Some(a) = &scenario.annotation {
        let times = &report.failure_times;
        out.loc_correct = Some(times.iter().any(|t| a.covers(*t)));
        out.loc_all = Some(!times.is_empty() && times.iter().all(|t| a.covers(*t)));
    }
    if !opts.correct || report.failure_type == FailureType::None {
        return Ok(out);
    }
    match plan_correction(
        task,
        &sim.log.objects,
        &report,
        &summaries.final_state,
        backend.as_ref(),
        provider,
        opts.threshold,
    ) {
        Ok(plan) => {
            let actions = plan.actions();
            out.correction = Some(actions.iter().map(ExecutableAction::template).collect());
            let success = execute_plan(&sim.end_world, &task.goal, &actions).is_ok_and(|(_, ok)| ok);
            if scenario.annotation.is_some() {
                out.coplan_success = Some(success);
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    Ok(out)
}

pub fn evaluate(
    scenarios: &[Scenario],
    opts: &EvalOptions,
    provider: &dyn EmbeddingProvider,
) -> Result<EvalResult, SimError> {
    let outcomes = scenarios
        .iter()
        .map(|s| evaluate_one(s, opts, provider))
        .collect::<Result<Vec<_>, _>>()?;
    let failed = || outcomes.iter().filter(|o| o.expected_type != FailureType::None);
    Ok(EvalResult {
        loc: percent(failed().map(|o| o.loc_correct == Some(true))),
        coplan: if opts.correct {
            percent(failed().map(|o| o.coplan_success == Some(true)))
        } else {
            None
        },
        type_accuracy: percent(outcomes.iter().map(|o| o.predicted_type == Some(o.expected_type))).unwrap_or(0.0),
        outcomes,
    })
}
