//! Deterministic stand-in for the language model. It recognises each prompt
//! by rebuilding it from the structured summaries it was given and answers
//! from those summaries with fixed rules.

use super::backend::{BackendError, LlmBackend};
use super::{first_unmet, oracle_verify, parse_actions, prompts, world_from_graph};
use crate::log_model::{Catalog, GoalPredicate, PredicateKind, TaskSpec, Timestamp, Verb};
use crate::relations::RelationName;
use crate::summary::{render_state, Hierarchy, KeyFrame, SubgoalEntry};
use crate::world::{search_plan, ExecutableAction, WorldState, SINGLE_SLOT};

/// Depth bound for the oracle's corrective plan search.
const SEARCH_DEPTH: usize = 10;

#[derive(Debug, Clone)]
pub struct OracleContext {
    pub task: TaskSpec,
    pub catalog: Catalog,
    pub summaries: Hierarchy,
}

#[derive(Debug, Clone)]
pub struct OracleBackend {
    ctx: OracleContext,
}

impl OracleBackend {
    pub fn new(ctx: OracleContext) -> Self {
        OracleBackend { ctx }
    }

    fn name(&self, id: &str) -> String {
        self.ctx
            .summaries
            .final_state
            .node(id)
            .map(|n| n.display_name.clone())
            .unwrap_or_else(|| self.ctx.catalog.display_name(id).to_string())
    }

    fn entry_for_verification(&self, user: &str) -> Option<&SubgoalEntry> {
        self.ctx
            .summaries
            .subgoals
            .entries
            .iter()
            .find(|e| prompts::verification_user(e) == user)
    }

    fn entry_for_execution(&self, user: &str) -> Option<&SubgoalEntry> {
        let s = &self.ctx.summaries;
        s.subgoals
            .entries
            .iter()
            .find(|e| prompts::execution_user(&self.ctx.task, &s.events, e.end) == user)
    }

    fn planning_prompt(&self) -> String {
        let s = &self.ctx.summaries;
        prompts::planning_user(&self.ctx.task, &render_state(&s.final_state), &s.subgoals)
    }

    fn correction_prompt_matches(&self, user: &str) -> bool {
        let head = format!("Task: {}\nInitial plan:\n{}\nFailure reason: ", self.ctx.task.task_name,
            prompts::initial_plan(&self.ctx.task, &self.ctx.catalog));
        user.starts_with(&head) && user.ends_with("Correction plan:")
    }

    fn frames_until(&self, t: Timestamp) -> impl DoubleEndedIterator<Item = &KeyFrame> {
        self.ctx.summaries.key_frames.iter().filter(move |k| k.t <= t)
    }

    /// A gripper that empties outside the end of a put action.
    fn last_drop(&self, t: Timestamp) -> Option<(String, &KeyFrame)> {
        let frames: Vec<&KeyFrame> = self.frames_until(t).collect();
        frames.windows(2).rev().find_map(|w| {
            let (prev, cur) = (w[0], w[1]);
            let held = prev.robot.held_object.as_ref()?;
            if cur.robot.held_object.is_some() {
                return None;
            }
            let placing = cur.robot.motion.is_none()
                && self
                    .ctx
                    .task
                    .plan
                    .get(cur.robot.current_action_index)
                    .and_then(|a| a.verb())
                    .is_some_and(|v| matches!(v, Verb::PutIn | Verb::PutOn | Verb::Pour));
            (!placing).then(|| (held.clone(), cur))
        })
    }

    /// Closed container holding one of `args`, with the time it was last seen closing.
    fn closed_container(&self, args: &[String], t: Timestamp) -> Option<(String, Option<Timestamp>)> {
        let frames: Vec<&KeyFrame> = self.frames_until(t).collect();
        let last = frames.last()?;
        for arg in args {
            let container = frames.iter().rev().find_map(|k| {
                k.graph
                    .edges
                    .iter()
                    .find(|e| e.subject == *arg && e.name == RelationName::Inside)
                    .map(|e| e.object.clone())
            });
            let Some(c) = container else { continue };
            let closed = |k: &KeyFrame| {
                k.graph
                    .node(&c)
                    .and_then(|n| n.state.as_deref())
                    .is_some_and(|s| s.contains("closed"))
            };
            if !closed(last) {
                continue;
            }
            let since = frames
                .windows(2)
                .rev()
                .find(|w| !closed(w[0]) && w[0].graph.node(&c).is_some() && closed(w[1]))
                .map(|w| w[1].t);
            return Some((c, since));
        }
        None
    }

    /// Another object already inside a single-slot target.
    fn occupant(&self, target: &str, placed: &str, t: Timestamp) -> Option<String> {
        let entry_graph = &self.frames_until(t).last()?.graph;
        let class = entry_graph.node(target).map(|n| n.class_name.as_str())?;
        if !SINGLE_SLOT.contains(&class) {
            return None;
        }
        entry_graph
            .edges
            .iter()
            .find(|e| e.object == target && e.name == RelationName::Inside && e.subject != placed)
            .map(|e| e.subject.clone())
    }

    fn explain_execution(&self, entry: &SubgoalEntry) -> String {
        let t = entry.end;
        let goal = entry.subgoal_text.trim().trim_end_matches('.');
        let Some(action) = self.ctx.task.plan.get(entry.index) else {
            return format!("At {t}, the robot failed to {goal}.");
        };
        if let Some((obj, kf)) = self.last_drop(t) {
            let name = self.name(&obj);
            let state = self
                .frames_until(kf.t)
                .rev()
                .nth(1)
                .and_then(|k| k.graph.node(&obj))
                .and_then(|n| n.state.clone());
            let what = match state {
                Some(s) => format!("the {name} ({s})"),
                None => format!("the {name}"),
            };
            let sound = match kf.audio_labels.first() {
                Some(a) => format!(", and the robot heard \"{a}\""),
                None => String::new(),
            };
            let during = kf
                .robot
                .motion
                .as_deref()
                .map(|m| format!(" while it was trying to {}", m.to_lowercase()))
                .unwrap_or_default();
            return format!(
                "At {t}, the robot attempted to {goal}, but the {name} was not in its gripper. \
                 The failure was caused by the robot dropping {what} at {}{during}{sound}.",
                kf.t
            );
        }
        if let Some((c, since)) = self.closed_container(&action.arguments, t) {
            let name = self.name(&c);
            let when = since.map(|s| format!(" It had closed at {s}.")).unwrap_or_default();
            return format!("At {t}, the robot failed to {goal} because the {name} was closed.{when}");
        }
        if matches!(action.verb(), Some(Verb::PutIn | Verb::PutOn)) && action.arguments.len() == 2 {
            if let Some(other) = self.occupant(&action.arguments[1], &action.arguments[0], t) {
                return format!(
                    "At {t}, the robot failed to {goal} because the {} was already occupied by the {}.",
                    self.name(&action.arguments[1]),
                    self.name(&other)
                );
            }
        }
        let seen = |id: &str| self.frames_until(t).any(|k| k.graph.node(id).is_some());
        if let Some(missing) = action.arguments.iter().find(|a| !seen(a)) {
            return format!(
                "At {t}, the robot failed to {goal} because no {} was observed anywhere.",
                self.name(missing)
            );
        }
        format!("At {t}, the robot failed to {goal}.")
    }

    fn describe_unmet(&self, p: &GoalPredicate) -> String {
        let fin = &self.ctx.summaries.final_state;
        let subject = self.name(&p.subject);
        match p.kind {
            PredicateKind::ObjectState => {
                let now = fin
                    .node(&p.subject)
                    .and_then(|n| n.state.clone())
                    .unwrap_or_else(|| "not observed".to_string());
                let class = fin.node(&p.subject).map(|n| n.class_name.clone());
                let other = fin.nodes.iter().find(|n| {
                    n.object_id != p.subject
                        && Some(&n.class_name) == class.as_ref()
                        && n.state.as_deref().is_some_and(|s| s.contains(&p.value))
                });
                let instead = other
                    .map(|o| format!(", while the {} was {} instead", o.display_name, p.value))
                    .unwrap_or_default();
                format!(
                    "The plan left the {subject} {now}, but the task needs it {}{instead}.",
                    p.value
                )
            }
            PredicateKind::Relation => {
                let object = p.object.as_deref().map(|o| self.name(o)).unwrap_or_default();
                let phrase = p.relation_name().map(|r| r.phrase()).unwrap_or("related to");
                format!("The plan never made the {subject} {phrase} the {object}, which the task needs.")
            }
            PredicateKind::Holding => format!("The plan ends without the robot holding the {subject}."),
            PredicateKind::NotHolding => format!("The plan ends with the robot still holding the {subject}."),
        }
    }

    /// The step to blame: the last toggle of an object of the subject's
    /// class for on/off states, else the last step that mentions the subject.
    fn blamed_step(&self, p: &GoalPredicate) -> Option<&SubgoalEntry> {
        let entries = &self.ctx.summaries.subgoals.entries;
        let plan = &self.ctx.task.plan;
        let class = self.ctx.catalog.class_of(&p.subject);
        let toggles_class = |e: &&SubgoalEntry| {
            plan.get(e.index).is_some_and(|a| {
                matches!(a.verb(), Some(Verb::ToggleOn | Verb::ToggleOff))
                    && a.arguments.iter().any(|x| self.ctx.catalog.class_of(x) == class)
            })
        };
        let mentions = |e: &&SubgoalEntry| {
            plan.get(e.index)
                .is_some_and(|a| a.arguments.iter().any(|x| p.objects().any(|o| o == x)))
        };
        let toggle_state = p.kind == PredicateKind::ObjectState && p.value.starts_with("turned");
        toggle_state
            .then(|| entries.iter().rev().find(toggles_class))
            .flatten()
            .or_else(|| entries.iter().rev().find(mentions))
            .or(entries.last())
    }

    fn unmet(&self) -> Option<&GoalPredicate> {
        first_unmet(&self.ctx.task.goal, &self.ctx.summaries.final_state)
    }

    /// Switches off same-class objects that are on when a goal needs a
    /// different one on, then searches for the rest.
    fn correction(&self) -> String {
        let goal = &self.ctx.task.goal;
        let mut world: WorldState = world_from_graph(&self.ctx.summaries.final_state);
        let mut steps: Vec<ExecutableAction> = Vec::new();
        let unmet: Vec<&GoalPredicate> = goal.iter().filter(|p| !world.satisfies(p)).collect();
        for p in unmet {
            if p.kind != PredicateKind::ObjectState || p.value != "turned on" {
                continue;
            }
            let class = world.class(&p.subject).to_string();
            let distractors: Vec<String> = world
                .classes
                .iter()
                .filter(|(id, c)| **c == class && **id != p.subject && world.state(id).contains("turned on"))
                .filter(|(id, _)| !goal.iter().any(|g| g.subject == **id))
                .map(|(id, _)| id.clone())
                .collect();
            for d in distractors {
                let off = ExecutableAction::new(Verb::ToggleOff, &[&d]);
                if world.apply(&off).is_ok() {
                    steps.push(off);
                }
            }
        }
        let actions = parse_actions(&self.ctx.task).unwrap_or_default();
        if let Some(rest) = search_plan(&world, goal, &actions, SEARCH_DEPTH) {
            steps.extend(rest);
        }
        if steps.is_empty() {
            return "no corrective action is available".to_string();
        }
        steps.iter().map(ExecutableAction::template).collect::<Vec<_>>().join(", ")
    }
}

impl LlmBackend for OracleBackend {
    fn complete(&self, system: &str, user: &str) -> Result<String, BackendError> {
        match system {
            prompts::VERIFY_SYSTEM => {
                let entry = self.entry_for_verification(user).ok_or(BackendError::UnknownPrompt)?;
                let action = self.ctx.task.plan.get(entry.index).ok_or(BackendError::UnknownPrompt)?;
                let ok = oracle_verify(action, &entry.graph).map_err(|_| BackendError::UnknownPrompt)?;
                Ok(if ok { "Yes" } else { "No" }.to_string())
            }
            prompts::EXECUTION_SYSTEM => {
                let entry = self.entry_for_execution(user).ok_or(BackendError::UnknownPrompt)?;
                Ok(self.explain_execution(entry))
            }
            prompts::PLANNING_SYSTEM => {
                let base = self.planning_prompt();
                let p = self.unmet().ok_or(BackendError::UnknownPrompt)?;
                if user == base {
                    Ok(self.describe_unmet(p))
                } else if user.starts_with(&base) && user.ends_with(prompts::FOLLOW_UP_QUESTION) {
                    let entry = self.blamed_step(p).ok_or(BackendError::UnknownPrompt)?;
                    Ok(entry.end.to_string())
                } else {
                    Err(BackendError::UnknownPrompt)
                }
            }
            prompts::CORRECTION_SYSTEM if self.correction_prompt_matches(user) => Ok(self.correction()),
            _ => Err(BackendError::UnknownPrompt),
        }
    }
}
