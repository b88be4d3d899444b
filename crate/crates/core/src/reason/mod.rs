//! Progressive failure explanation and correction planning.
//!
//! Subgoals are verified one by one against their captions. The first
//! unsatisfied subgoal triggers execution analysis over the event summary;
//! if every subgoal holds but the goal does not, the plan itself is
//! analysed. A correction plan is then requested and grounded onto the
//! environment's executable actions.

mod backend;
mod oracle;
pub mod prompts;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    BackendError, Exchange, HttpBackend, LlmBackend, RecordingBackend, ReplayBackend, API_KEY_VAR, MODEL_VAR,
};
pub use oracle::{OracleBackend, OracleContext};

use crate::log_model::{Catalog, GoalPredicate, PlannedAction, PredicateKind, TaskSpec, Timestamp, Verb};
use crate::math;
use crate::percepts::{EmbeddingProvider, PerceptError};
use crate::relations::RelationName;
use crate::scene_graph::SceneGraph;
use crate::summary::{render_state, EventSummary, Hierarchy, SubgoalEntry, SubgoalSummary};
use crate::world::{ExecutableAction, Support, WorldState};

#[derive(Debug, Error)]
pub enum ReasonError {
    #[error("{stage}: {source}")]
    Backend {
        stage: String,
        #[source]
        source: BackendError,
    },
    #[error("answer is neither yes nor no: {0:?}")]
    UnparseableAnswer(String),
    #[error("no MM:SS time step in answer {0:?}")]
    NoTimestampInAnswer(String),
    #[error("unknown verb {0:?}")]
    UnknownVerb(String),
    #[error("no plan step could be grounded")]
    EmptyPlan,
    #[error("no executable actions to ground onto")]
    NoActions,
    #[error("invalid executable action {0:?}")]
    BadAction(String),
    #[error("nothing to correct: the task succeeded")]
    NothingToCorrect,
    #[error(transparent)]
    Percept(#[from] PerceptError),
}

fn ask(backend: &dyn LlmBackend, stage: &str, system: &str, user: &str) -> Result<String, ReasonError> {
    backend.complete(system, user).map_err(|source| ReasonError::Backend {
        stage: stage.to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub subgoal_index: usize,
    pub satisfied: bool,
    pub raw_answer: String,
}

/// Case-insensitive yes/no prefix of an answer.
pub fn parse_yes_no(answer: &str) -> Option<bool> {
    let a = answer.trim().to_lowercase();
    if a.starts_with("yes") {
        Some(true)
    } else if a.starts_with("no") {
        Some(false)
    } else {
        None
    }
}

pub fn verify_subgoal(entry: &SubgoalEntry, backend: &dyn LlmBackend) -> Result<VerificationResult, ReasonError> {
    let stage = format!("verifying subgoal {} ({})", entry.index + 1, entry.subgoal_text);
    let raw_answer = ask(backend, &stage, prompts::VERIFY_SYSTEM, &prompts::verification_user(entry))?;
    let satisfied = parse_yes_no(&raw_answer).ok_or_else(|| ReasonError::UnparseableAnswer(raw_answer.clone()))?;
    Ok(VerificationResult {
        subgoal_index: entry.index,
        satisfied,
        raw_answer,
    })
}

fn node_state_has(graph: &SceneGraph, id: &str, word: &str) -> bool {
    graph
        .node(id)
        .and_then(|n| n.state.as_deref())
        .is_some_and(|s| s.contains(word))
}

/// Deterministic subgoal check against a scene graph.
pub fn oracle_verify(subgoal: &PlannedAction, graph: &SceneGraph) -> Result<bool, ReasonError> {
    let verb = subgoal
        .verb()
        .ok_or_else(|| ReasonError::UnknownVerb(subgoal.action_verb.clone()))?;
    let arg = |i: usize| subgoal.arguments.get(i).map(String::as_str).unwrap_or("");
    let x = arg(0);
    Ok(match verb {
        Verb::PickUp => graph.held() == Some(x),
        Verb::PutIn => graph.has_edge(x, RelationName::Inside, arg(1)),
        Verb::PutOn => graph.has_edge(x, RelationName::OnTopOf, arg(1)),
        Verb::ToggleOn => node_state_has(graph, x, "turned on"),
        Verb::ToggleOff => node_state_has(graph, x, "turned off"),
        Verb::Open => node_state_has(graph, x, "open"),
        Verb::Close => node_state_has(graph, x, "closed"),
        Verb::MoveTo => graph.node(x).is_some_and(|n| n.visible_now),
        Verb::Slice => node_state_has(graph, x, "sliced"),
        Verb::Crack => node_state_has(graph, x, "cracked"),
        Verb::Pour => node_state_has(graph, arg(1), "filled"),
    })
}

/// Whether a goal predicate holds in a scene graph.
pub fn graph_satisfies(graph: &SceneGraph, p: &GoalPredicate) -> bool {
    match p.kind {
        PredicateKind::ObjectState => node_state_has(graph, &p.subject, &p.value),
        PredicateKind::Relation => match (p.relation_name(), p.object.as_deref()) {
            (Some(name), Some(object)) => graph.has_edge(&p.subject, name, object),
            _ => false,
        },
        PredicateKind::Holding => graph.held() == Some(p.subject.as_str()),
        PredicateKind::NotHolding => graph.held() != Some(p.subject.as_str()),
    }
}

pub fn first_unmet<'a>(goal: &'a [GoalPredicate], graph: &SceneGraph) -> Option<&'a GoalPredicate> {
    goal.iter().find(|p| !graph_satisfies(graph, p))
}

static TIME_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{2,}:\d{2}\b").expect("valid regex"));

/// Every valid MM:SS token in order of first appearance.
pub fn extract_times(text: &str) -> Vec<Timestamp> {
    let mut out = Vec::new();
    for m in TIME_TOKEN.find_iter(text) {
        if let Ok(t) = m.as_str().parse::<Timestamp>() {
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

pub fn explain_execution(
    task: &TaskSpec,
    events: &EventSummary,
    t_fail: Timestamp,
    backend: &dyn LlmBackend,
) -> Result<String, ReasonError> {
    let user = prompts::execution_user(task, events, t_fail);
    ask(backend, "explaining execution failure", prompts::EXECUTION_SYSTEM, &user)
}

/// Plan analysis followed by the time-step question. A reply without a
/// time step yields `NoTimestampInAnswer` carrying the explanation.
pub fn explain_planning(
    task: &TaskSpec,
    final_state: &SceneGraph,
    subgoals: &SubgoalSummary,
    backend: &dyn LlmBackend,
) -> Result<(String, Timestamp), ReasonError> {
    let user = prompts::planning_user(task, &render_state(final_state), subgoals);
    let explanation = ask(backend, "explaining planning failure", prompts::PLANNING_SYSTEM, &user)?;
    let follow = prompts::follow_up_user(&user, &explanation);
    let reply = ask(backend, "locating planning failure", prompts::PLANNING_SYSTEM, &follow)?;
    match extract_times(&reply).first() {
        Some(t) => Ok((explanation, *t)),
        None => Err(ReasonError::NoTimestampInAnswer(explanation)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureType {
    Execution,
    Planning,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub failure_type: FailureType,
    pub explanation: String,
    pub failure_times: Vec<Timestamp>,
    pub failed_subgoal: Option<usize>,
    pub verifications: Vec<VerificationResult>,
}

pub fn run_progressive(
    task: &TaskSpec,
    summaries: &Hierarchy,
    backend: &dyn LlmBackend,
) -> Result<ExplanationReport, ReasonError> {
    let mut verifications = Vec::new();
    for entry in &summaries.subgoals.entries {
        let v = verify_subgoal(entry, backend)?;
        let satisfied = v.satisfied;
        verifications.push(v);
        if !satisfied {
            let explanation = explain_execution(task, &summaries.events, entry.end, backend)?;
            let mut failure_times = extract_times(&explanation);
            if !failure_times.contains(&entry.end) {
                failure_times.push(entry.end);
            }
            return Ok(ExplanationReport {
                failure_type: FailureType::Execution,
                explanation,
                failure_times,
                failed_subgoal: Some(entry.index),
                verifications,
            });
        }
    }
    if first_unmet(&task.goal, &summaries.final_state).is_none() {
        return Ok(ExplanationReport {
            failure_type: FailureType::None,
            explanation: String::new(),
            failure_times: Vec::new(),
            failed_subgoal: None,
            verifications,
        });
    }
    let (explanation, failure_times) =
        match explain_planning(task, &summaries.final_state, &summaries.subgoals, backend) {
            Ok((e, t)) => (e, vec![t]),
            Err(ReasonError::NoTimestampInAnswer(e)) => (e, Vec::new()),
            Err(e) => return Err(e),
        };
    Ok(ExplanationReport {
        failure_type: FailureType::Planning,
        explanation,
        failure_times,
        failed_subgoal: None,
        verifications,
    })
}

/// Symbolic world read off a scene graph: node states, containment and
/// support edges, and the gripper.
pub fn world_from_graph(graph: &SceneGraph) -> WorldState {
    let mut world = WorldState::default();
    for node in &graph.nodes {
        let support = graph
            .edges
            .iter()
            .filter(|e| e.subject == node.object_id)
            .find_map(|e| match e.name {
                RelationName::Inside => Some(Support::Inside(e.object.clone())),
                _ => None,
            })
            .or_else(|| {
                graph
                    .edges
                    .iter()
                    .filter(|e| e.subject == node.object_id)
                    .find_map(|e| match e.name {
                        RelationName::OnTopOf => Some(Support::OnTop(e.object.clone())),
                        _ => None,
                    })
            });
        world.add(&node.object_id, &node.class_name, node.state.as_deref(), support);
    }
    world.holding = graph.held().map(str::to_string);
    if let Some(h) = &world.holding {
        world.support.remove(h);
    }
    world
}

pub fn parse_actions(task: &TaskSpec) -> Result<Vec<ExecutableAction>, ReasonError> {
    task.executable_actions
        .iter()
        .map(|a| a.parse().map_err(|_| ReasonError::BadAction(a.clone())))
        .collect()
}

/// Best match for a free-form step among executable actions. Exact template
/// matches score 1; ties keep the earliest action.
pub fn ground_action(
    raw: &str,
    actions: &[ExecutableAction],
    provider: &dyn EmbeddingProvider,
) -> Result<(ExecutableAction, f64), ReasonError> {
    if actions.is_empty() {
        return Err(ReasonError::NoActions);
    }
    let raw = raw.trim();
    if let Some(a) = actions.iter().find(|a| a.template() == raw) {
        return Ok((a.clone(), 1.0));
    }
    let query = provider.embed_text(raw)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, action) in actions.iter().enumerate() {
        let e = provider.embed_text(&action.template())?;
        if e.dim() != query.dim() {
            return Err(PerceptError::DimensionMismatch {
                expected: query.dim(),
                found: e.dim(),
            }
            .into());
        }
        let score = math::cosine(query.values(), e.values());
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    let (i, score) = best.expect("non-empty actions");
    Ok((actions[i].clone(), score))
}

/// Splits a completion into steps on newlines and on commas outside
/// parentheses, dropping list numbering and bullets.
pub fn split_steps(completion: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    for c in completion.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            '\n' => {
                parts.push(std::mem::take(&mut cur));
                depth = 0;
            }
            ',' if depth == 0 => parts.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    parts.push(cur);
    parts
        .iter()
        .map(|p| {
            let p = p.trim().trim_start_matches(['-', '*', '•']).trim();
            let digits = p.chars().take_while(char::is_ascii_digit).count();
            let p = if digits > 0 && p[digits..].starts_with(['.', ')']) {
                &p[digits + 1..]
            } else {
                p
            };
            p.trim().trim_end_matches('.').trim().to_string()
        })
        .filter(|p| !p.is_empty())
        .collect()
}

/// Minimum cosine score for a grounded step to be kept.
pub const GROUNDING_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionPlan {
    pub raw_steps: Vec<String>,
    pub grounded_steps: Vec<(ExecutableAction, f64)>,
    /// Steps whose best match fell below the threshold.
    pub dropped: Vec<(String, f64)>,
}

impl CorrectionPlan {
    pub fn actions(&self) -> Vec<ExecutableAction> {
        self.grounded_steps.iter().map(|(a, _)| a.clone()).collect()
    }
}

/// Grounds every step of a completion, keeping those scoring at least
/// `threshold`.
pub fn ground_completion(
    completion: &str,
    actions: &[ExecutableAction],
    provider: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<CorrectionPlan, ReasonError> {
    let mut plan = CorrectionPlan {
        raw_steps: Vec::new(),
        grounded_steps: Vec::new(),
        dropped: Vec::new(),
    };
    for step in split_steps(completion) {
        let (action, score) = ground_action(&step, actions, provider)?;
        if score >= threshold {
            plan.raw_steps.push(step);
            plan.grounded_steps.push((action, score));
        } else {
            plan.dropped.push((step, score));
        }
    }
    if plan.grounded_steps.is_empty() {
        return Err(ReasonError::EmptyPlan);
    }
    Ok(plan)
}

pub fn plan_correction(
    task: &TaskSpec,
    catalog: &Catalog,
    report: &ExplanationReport,
    final_state: &SceneGraph,
    backend: &dyn LlmBackend,
    provider: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<CorrectionPlan, ReasonError> {
    if report.failure_type == FailureType::None {
        return Err(ReasonError::NothingToCorrect);
    }
    let actions = parse_actions(task)?;
    let user = prompts::correction_user(task, catalog, &report.explanation, &render_state(final_state));
    let completion = ask(backend, "planning correction", prompts::CORRECTION_SYSTEM, &user)?;
    ground_completion(&completion, &actions, provider, threshold)
}
