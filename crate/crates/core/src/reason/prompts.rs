//! Prompt text for verification, explanation and correction queries.

use crate::log_model::{Catalog, TaskSpec, Timestamp};
use crate::summary::{capitalize, one_line, EventSummary, SubgoalEntry, SubgoalSummary};

pub const VERIFY_SYSTEM: &str = "You are a success verifier that outputs 'Yes' or 'No' to indicate whether \
the robot goal is satisfied given the robot observations.";

pub const EXECUTION_SYSTEM: &str = "You are expected to provide explanation for a robot failure. You are given \
the robot actions and observations so far. Briefly explain the failure in 1-2 sentence. Mention relevant time \
steps if possible.";

pub const PLANNING_SYSTEM: &str = "You are expected to provide explanation for a robot failure. You are given \
the current robot state, the goal condition, and the robot plan. Briefly explain what was wrong with the robot \
plan in 1-2 sentence.";

pub const CORRECTION_SYSTEM: &str = "Provide a plan with the available actions for the robot to correct its \
failure and finish the task.\nAvailable actions: pick up, put in some container, put on some receptacle, open \
(e.g. fridge), close, toggle on (e.g. faucet), toggle off, slice object, crack object (e.g. egg), pour (liquid) \
from A to B.\nThe robot can only hold one object in its gripper, in other words, if there's object in the robot \
gripper, it can no longer pick up another object.\nThe plan should 1) not contain any if statements 2) contain \
only the available actions 3) resemble the format of the initial plan.";

pub const VERIFY_QUESTION: &str = "Q: Is the goal satisfied?\nA:";
pub const PLANNING_QUESTION: &str = "Q: Known that all actions in the robot plan were executed successfully, \
what's wrong with the robot plan that caused the robot to fail?\nA:";
pub const FOLLOW_UP_QUESTION: &str = "Q: Which time step is most relevant to the above failure?\nA:";
pub const PLANNING_STATE_HEADER: &str = "Here's the robot observation at the end of the task execution:";

/// Goal text as it sits mid-sentence: first letter lowered, no final period.
pub fn goal_clause(goal_text: &str) -> String {
    let g = goal_text.trim().trim_end_matches('.');
    let mut chars = g.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn verification_user(entry: &SubgoalEntry) -> String {
    format!(
        "The robot goal is to {}. Here are the robot observations after execution:\n{}\n{VERIFY_QUESTION}",
        entry.subgoal_text.trim().trim_end_matches('.'),
        one_line(&entry.caption.observation)
    )
}

pub fn execution_user(task: &TaskSpec, events: &EventSummary, t_fail: Timestamp) -> String {
    let at = events
        .at(t_fail)
        .map(|c| one_line(&c.without_timestamp()))
        .unwrap_or_default();
    format!(
        "The robot task is to {task}.\nAt {t}, a failure was identified.\n\n\
         [Robot actions and observations before {t}]\n{history}\n\n\
         [Observation at the end of {t}]\n{at}\n\n\
         Q: Infer from [Robot actions and observations before {t}] or [Observation at the end of {t}], \
         briefly explain what happened at {t} and what caused the failure.\nA:",
        task = task.task_name,
        t = t_fail,
        history = events.history_before(t_fail),
    )
}

/// Plan lines "MM:SS. Goal: <Subgoal>." at each executed step's end time.
pub fn timed_plan(subgoals: &SubgoalSummary) -> String {
    subgoals
        .entries
        .iter()
        .map(|e| format!("{}. Goal: {}.", e.end, capitalize(&e.subgoal_text)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn planning_user(task: &TaskSpec, final_state: &str, subgoals: &SubgoalSummary) -> String {
    format!(
        "The robot task is to {}.\nThe task is considered successful if {}.\n{PLANNING_STATE_HEADER}\n{}\n\
         The robot plan is:\n{}\n\n{PLANNING_QUESTION}",
        task.task_name,
        goal_clause(&task.goal_text),
        one_line(final_state),
        timed_plan(subgoals),
    )
}

/// The follow-up keeps the first exchange in the user message since the
/// backend holds no conversation state.
pub fn follow_up_user(planning_user: &str, answer: &str) -> String {
    format!("{planning_user} {}\n{FOLLOW_UP_QUESTION}", answer.trim())
}

/// Numbered plan with arguments written as class names, e.g. "6. put_on (pot, stove burner)".
pub fn initial_plan(task: &TaskSpec, catalog: &Catalog) -> String {
    task.plan
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let args: Vec<&str> = a
                .arguments
                .iter()
                .map(|id| catalog.class_of(id))
                .collect();
            format!("{}. {} ({})", i + 1, a.action_verb, args.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn correction_user(task: &TaskSpec, catalog: &Catalog, explanation: &str, final_state: &str) -> String {
    format!(
        "Task: {}\nInitial plan:\n{}\nFailure reason: {}\nCurrent state: {}\nSuccess state: {}.\nCorrection plan:",
        task.task_name,
        initial_plan(task, catalog),
        explanation.trim(),
        one_line(final_state),
        goal_clause(&task.goal_text),
    )
}
