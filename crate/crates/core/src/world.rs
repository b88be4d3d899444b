//! Symbolic kitchen world: object states, containment and the gripper, with
//! one transition rule per verb. Shared by the simulator and the oracle
//! correction planner.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_model::{GoalPredicate, PredicateKind, Verb};
use crate::relations::RelationName;

/// A grounded action such as `toggle_on (stoveburner-4)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ExecutableAction {
    pub verb: Verb,
    pub arguments: Vec<String>,
}

impl ExecutableAction {
    pub fn new(verb: Verb, arguments: &[&str]) -> Self {
        ExecutableAction {
            verb,
            arguments: arguments.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn template(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ExecutableAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.verb, self.arguments.join(", "))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse action {0:?}")]
pub struct ActionParseError(pub String);

impl FromStr for ExecutableAction {
    type Err = ActionParseError;

    /// Accepts `verb (a, b)` with the verb in snake case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ActionParseError(s.to_string());
        let (head, rest) = s.trim().split_once('(').ok_or_else(err)?;
        let args = rest.trim().strip_suffix(')').ok_or_else(err)?;
        let verb = Verb::parse(head.trim()).ok_or_else(err)?;
        let arguments: Vec<String> = args
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        if arguments.len() != verb.arity() {
            return Err(err());
        }
        Ok(ExecutableAction { verb, arguments })
    }
}

impl TryFrom<String> for ExecutableAction {
    type Error = ActionParseError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ExecutableAction> for String {
    fn from(a: ExecutableAction) -> String {
        a.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Inside(String),
    OnTop(String),
}

impl Support {
    pub fn parent(&self) -> &str {
        match self {
            Support::Inside(p) | Support::OnTop(p) => p,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("illegal transition {action}: {reason}")]
    IllegalTransition { action: String, reason: String },
}

/// Result of a legal action: applied, or had no effect because a
/// precondition in the world did not hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Applied,
    Blocked(String),
}

/// Classes that hold at most one object.
pub const SINGLE_SLOT: [&str; 2] = ["coffee machine", "toaster"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WorldState {
    pub classes: BTreeMap<String, String>,
    pub states: BTreeMap<String, String>,
    pub support: BTreeMap<String, Support>,
    pub holding: Option<String>,
}

fn swap_word(state: &str, from: &str, to: &str) -> Option<String> {
    state.contains(from).then(|| state.replacen(from, to, 1))
}

impl WorldState {
    pub fn add(&mut self, id: &str, class: &str, state: Option<&str>, support: Option<Support>) {
        self.classes.insert(id.to_string(), class.to_string());
        if let Some(s) = state {
            self.states.insert(id.to_string(), s.to_string());
        }
        if let Some(s) = support {
            self.support.insert(id.to_string(), s);
        }
    }

    pub fn class(&self, id: &str) -> &str {
        self.classes.get(id).map(String::as_str).unwrap_or("")
    }

    pub fn state(&self, id: &str) -> &str {
        self.states.get(id).map(String::as_str).unwrap_or("")
    }

    fn is_closed(&self, id: &str) -> bool {
        self.state(id).contains("closed")
    }

    fn is_on(&self, id: &str) -> bool {
        self.state(id).contains("turned on")
    }

    /// True when `id` sits inside a closed container, directly or transitively.
    fn enclosed(&self, id: &str) -> bool {
        let mut cur = id;
        for _ in 0..self.support.len() {
            match self.support.get(cur) {
                Some(Support::Inside(p)) if self.is_closed(p) => return true,
                Some(s) => cur = s.parent(),
                None => return false,
            }
        }
        false
    }

    fn occupants<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> {
        self.support
            .iter()
            .filter(move |(_, s)| s.parent() == id)
            .map(|(k, _)| k.as_str())
    }

    fn set_state(&mut self, id: &str, state: String) {
        self.states.insert(id.to_string(), state);
    }

    /// Fill empty objects placed in a running sink or coffee machine.
    fn settle_liquids(&mut self) {
        let faucet_on = self
            .classes
            .iter()
            .any(|(id, c)| c == "faucet" && self.is_on(id));
        let mut fills = Vec::new();
        for (id, support) in &self.support {
            let Support::Inside(parent) = support else {
                continue;
            };
            let liquid = match self.class(parent) {
                "sink" if faucet_on => "water",
                "coffee machine" if self.is_on(parent) => "coffee",
                _ => continue,
            };
            if let Some(s) = swap_word(self.state(id), "empty", &format!("filled with {liquid}")) {
                fills.push((id.clone(), s));
            }
        }
        for (id, s) in fills {
            self.set_state(&id, s);
        }
    }

    /// Applies one action. Unknown objects and unmet world preconditions
    /// block the action; picking up while holding is illegal.
    pub fn apply(&mut self, action: &ExecutableAction) -> Result<Outcome, WorldError> {
        let args = &action.arguments;
        let blocked = |why: String| Ok(Outcome::Blocked(why));
        if args.len() != action.verb.arity() {
            return Err(WorldError::IllegalTransition {
                action: action.to_string(),
                reason: "wrong number of arguments".into(),
            });
        }
        if let Some(missing) = args.iter().find(|a| !self.classes.contains_key(*a)) {
            return blocked(format!("{missing} is not in the scene"));
        }
        let x = args[0].as_str();
        match action.verb {
            Verb::MoveTo => {}
            Verb::PickUp => {
                if let Some(h) = &self.holding {
                    return Err(WorldError::IllegalTransition {
                        action: action.to_string(),
                        reason: format!("already holding {h}"),
                    });
                }
                if self.enclosed(x) {
                    return blocked(format!("{x} is inside a closed container"));
                }
                self.support.remove(x);
                self.holding = Some(x.to_string());
            }
            Verb::PutIn | Verb::PutOn => {
                let y = args[1].as_str();
                if self.holding.as_deref() != Some(x) {
                    return blocked(format!("{x} is not in the gripper"));
                }
                if self.is_closed(y) || self.enclosed(y) {
                    return blocked(format!("{y} is closed"));
                }
                if SINGLE_SLOT.contains(&self.class(y)) && self.occupants(y).next().is_some() {
                    return blocked(format!("{y} is occupied"));
                }
                let support = if action.verb == Verb::PutIn {
                    Support::Inside(y.to_string())
                } else {
                    Support::OnTop(y.to_string())
                };
                self.support.insert(x.to_string(), support);
                self.holding = None;
                self.settle_liquids();
            }
            Verb::ToggleOn | Verb::ToggleOff => {
                if self.enclosed(x) {
                    return blocked(format!("{x} is inside a closed container"));
                }
                let (from, to) = if action.verb == Verb::ToggleOn {
                    ("turned off", "turned on")
                } else {
                    ("turned on", "turned off")
                };
                match swap_word(self.state(x), from, to) {
                    Some(s) => self.set_state(x, s),
                    None if self.state(x).contains(to) => {}
                    None => return blocked(format!("{x} cannot be toggled")),
                }
                self.settle_liquids();
            }
            Verb::Open | Verb::Close => {
                let (from, to) = if action.verb == Verb::Open {
                    ("closed", "open")
                } else {
                    ("open", "closed")
                };
                match swap_word(self.state(x), from, to) {
                    Some(s) => self.set_state(x, s),
                    None if self.state(x).contains(to) => {}
                    None => return blocked(format!("{x} cannot be opened or closed")),
                }
                // Opening a microwave door stops it.
                if action.verb == Verb::Open && self.class(x) == "microwave" {
                    if let Some(s) = swap_word(self.state(x), "turned on", "turned off") {
                        self.set_state(x, s);
                    }
                }
            }
            Verb::Slice | Verb::Crack => {
                let done = if action.verb == Verb::Slice { "sliced" } else { "cracked" };
                if self.enclosed(x) {
                    return blocked(format!("{x} is inside a closed container"));
                }
                let s = swap_word(self.state(x), "whole", done).unwrap_or_else(|| {
                    if self.state(x).is_empty() {
                        done.to_string()
                    } else {
                        format!("{} and {done}", self.state(x))
                    }
                });
                if !self.state(x).contains(done) {
                    self.set_state(x, s);
                }
            }
            Verb::Pour => {
                let y = args[1].as_str();
                if self.holding.as_deref() != Some(x) {
                    return blocked(format!("{x} is not in the gripper"));
                }
                let Some(liquid) = self
                    .state(x)
                    .split(" and ")
                    .find_map(|part| part.strip_prefix("filled with"))
                    .map(|l| l.trim().to_string())
                else {
                    return blocked(format!("{x} holds no liquid"));
                };
                let Some(target) = swap_word(self.state(y), "empty", &format!("filled with {liquid}")) else {
                    return blocked(format!("{y} is not empty"));
                };
                let source = self.state(x).replacen(&format!("filled with {liquid}"), "empty", 1);
                self.set_state(y, target);
                self.set_state(x, source);
            }
        }
        Ok(Outcome::Applied)
    }

    pub fn satisfies(&self, p: &GoalPredicate) -> bool {
        match p.kind {
            PredicateKind::ObjectState => self.state(&p.subject).contains(&p.value),
            PredicateKind::Holding => self.holding.as_deref() == Some(p.subject.as_str()),
            PredicateKind::NotHolding => self.holding.as_deref() != Some(p.subject.as_str()),
            PredicateKind::Relation => {
                let Some(object) = p.object.as_deref() else {
                    return false;
                };
                match (p.relation_name(), self.support.get(&p.subject)) {
                    (Some(RelationName::Inside), Some(Support::Inside(o))) => o == object,
                    (Some(RelationName::OnTopOf), Some(Support::OnTop(o))) => o == object,
                    (Some(RelationName::InsideRobotGripper), _) => {
                        self.holding.as_deref() == Some(p.subject.as_str())
                    }
                    _ => false,
                }
            }
        }
    }

    pub fn goal_met(&self, goal: &[GoalPredicate]) -> bool {
        goal.iter().all(|p| self.satisfies(p))
    }

    /// Runs a plan; illegal transitions stop execution with an error.
    pub fn execute(&mut self, plan: &[ExecutableAction]) -> Result<Vec<Outcome>, WorldError> {
        plan.iter().map(|a| self.apply(a)).collect()
    }
}

/// Shortest action sequence (breadth-first, at most `max_depth` steps) that
/// reaches the goal. Blocked and illegal actions are pruned.
pub fn search_plan(
    start: &WorldState,
    goal: &[GoalPredicate],
    actions: &[ExecutableAction],
    max_depth: usize,
) -> Option<Vec<ExecutableAction>> {
    if start.goal_met(goal) {
        return Some(Vec::new());
    }
    let mut seen: HashSet<WorldState> = HashSet::from([start.clone()]);
    let mut queue: VecDeque<(WorldState, Vec<usize>)> = VecDeque::from([(start.clone(), Vec::new())]);
    const MAX_STATES: usize = 200_000;
    while let Some((state, path)) = queue.pop_front() {
        if path.len() >= max_depth {
            continue;
        }
        for (i, action) in actions.iter().enumerate() {
            let mut next = state.clone();
            if !matches!(next.apply(action), Ok(Outcome::Applied)) || next == state {
                continue;
            }
            if !seen.insert(next.clone()) {
                continue;
            }
            let mut p = path.clone();
            p.push(i);
            if next.goal_met(goal) {
                return Some(p.into_iter().map(|i| actions[i].clone()).collect());
            }
            if seen.len() > MAX_STATES {
                return None;
            }
            queue.push_back((next, p));
        }
    }
    None
}
