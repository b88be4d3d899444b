use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Timestamp;
use crate::relations::RelationName;

/// Closed set of robot action verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    PickUp,
    PutIn,
    PutOn,
    ToggleOn,
    ToggleOff,
    Open,
    Close,
    Slice,
    Crack,
    Pour,
    MoveTo,
}

impl Verb {
    pub const ALL: [Verb; 11] = [
        Verb::PickUp,
        Verb::PutIn,
        Verb::PutOn,
        Verb::ToggleOn,
        Verb::ToggleOff,
        Verb::Open,
        Verb::Close,
        Verb::Slice,
        Verb::Crack,
        Verb::Pour,
        Verb::MoveTo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::PickUp => "pick_up",
            Verb::PutIn => "put_in",
            Verb::PutOn => "put_on",
            Verb::ToggleOn => "toggle_on",
            Verb::ToggleOff => "toggle_off",
            Verb::Open => "open",
            Verb::Close => "close",
            Verb::Slice => "slice",
            Verb::Crack => "crack",
            Verb::Pour => "pour",
            Verb::MoveTo => "move_to",
        }
    }

    pub fn parse(text: &str) -> Option<Verb> {
        Verb::ALL.into_iter().find(|v| v.as_str() == text)
    }

    /// Number of object arguments the verb takes.
    pub fn arity(self) -> usize {
        match self {
            Verb::PutIn | Verb::PutOn | Verb::Pour => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One step of the robot's original plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedAction {
    /// Free-text subgoal, e.g. "put pot on fourth stove burner".
    pub subgoal_text: String,
    /// Kept as text so that unknown verbs surface as validation warnings
    /// instead of load failures.
    pub action_verb: String,
    pub arguments: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planned_end: Option<Timestamp>,
}

impl PlannedAction {
    pub fn new(subgoal_text: &str, verb: Verb, arguments: &[&str]) -> Self {
        PlannedAction {
            subgoal_text: subgoal_text.to_string(),
            action_verb: verb.as_str().to_string(),
            arguments: arguments.iter().map(|a| a.to_string()).collect(),
            planned_end: None,
        }
    }

    pub fn verb(&self) -> Option<Verb> {
        Verb::parse(&self.action_verb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateKind {
    ObjectState,
    Relation,
    Holding,
    NotHolding,
}

/// Machine-checkable piece of a task's goal state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoalPredicate {
    pub kind: PredicateKind,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    /// State substring for `object_state`, relation name for `relation`.
    #[serde(default)]
    pub value: String,
}

impl GoalPredicate {
    pub fn state(subject: &str, value: &str) -> Self {
        GoalPredicate {
            kind: PredicateKind::ObjectState,
            subject: subject.to_string(),
            object: None,
            value: value.to_string(),
        }
    }

    pub fn relation(subject: &str, relation: RelationName, object: &str) -> Self {
        GoalPredicate {
            kind: PredicateKind::Relation,
            subject: subject.to_string(),
            object: Some(object.to_string()),
            value: relation.as_str().to_string(),
        }
    }

    pub fn holding(subject: &str) -> Self {
        GoalPredicate {
            kind: PredicateKind::Holding,
            subject: subject.to_string(),
            object: None,
            value: String::new(),
        }
    }

    pub fn not_holding(subject: &str) -> Self {
        GoalPredicate {
            kind: PredicateKind::NotHolding,
            ..GoalPredicate::holding(subject)
        }
    }

    pub fn relation_name(&self) -> Option<RelationName> {
        RelationName::parse(&self.value)
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.subject.as_str()).chain(self.object.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_name: String,
    /// Goal state as prose, e.g. "a pot is filled with water, ...".
    pub goal_text: String,
    pub goal: Vec<GoalPredicate>,
    pub plan: Vec<PlannedAction>,
    pub executable_actions: Vec<String>,
    #[serde(default)]
    pub audio_label_set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskWarning {
    EmptyPlan,
    NoExecutableActions,
    UnknownVerb { step: usize, verb: String },
    ArgumentCount { step: usize, expected: usize, found: usize },
    GoalObjectNotInPlan { predicate: usize, object: String },
    UnknownRelation { predicate: usize, relation: String },
    MissingPredicateObject { predicate: usize },
}

impl fmt::Display for TaskWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskWarning::EmptyPlan => write!(f, "plan is empty"),
            TaskWarning::NoExecutableActions => write!(f, "no executable actions declared"),
            TaskWarning::UnknownVerb { step, verb } => {
                write!(f, "plan step {step}: unknown verb {verb:?}")
            }
            TaskWarning::ArgumentCount {
                step,
                expected,
                found,
            } => write!(f, "plan step {step}: expected {expected} arguments, found {found}"),
            TaskWarning::GoalObjectNotInPlan { predicate, object } => {
                write!(f, "goal predicate {predicate}: {object:?} never appears in the plan")
            }
            TaskWarning::UnknownRelation {
                predicate,
                relation,
            } => write!(f, "goal predicate {predicate}: unknown relation {relation:?}"),
            TaskWarning::MissingPredicateObject { predicate } => {
                write!(f, "goal predicate {predicate}: relation without an object")
            }
        }
    }
}

/// Lints a task spec. An empty list means the spec is clean.
pub fn validate_task(spec: &TaskSpec) -> Vec<TaskWarning> {
    let mut warnings = Vec::new();
    if spec.plan.is_empty() {
        warnings.push(TaskWarning::EmptyPlan);
    }
    if spec.executable_actions.is_empty() {
        warnings.push(TaskWarning::NoExecutableActions);
    }
    for (step, action) in spec.plan.iter().enumerate() {
        match action.verb() {
            None => warnings.push(TaskWarning::UnknownVerb {
                step,
                verb: action.action_verb.clone(),
            }),
            Some(verb) if verb.arity() != action.arguments.len() => {
                warnings.push(TaskWarning::ArgumentCount {
                    step,
                    expected: verb.arity(),
                    found: action.arguments.len(),
                })
            }
            Some(_) => {}
        }
    }
    let mentioned: BTreeSet<&str> = spec
        .plan
        .iter()
        .flat_map(|a| a.arguments.iter().map(String::as_str))
        .collect();
    for (index, predicate) in spec.goal.iter().enumerate() {
        if predicate.kind == PredicateKind::Relation {
            if predicate.relation_name().is_none() {
                warnings.push(TaskWarning::UnknownRelation {
                    predicate: index,
                    relation: predicate.value.clone(),
                });
            }
            if predicate.object.is_none() {
                warnings.push(TaskWarning::MissingPredicateObject { predicate: index });
            }
        }
        for object in predicate.objects() {
            if !mentioned.contains(object) {
                warnings.push(TaskWarning::GoalObjectNotInPlan {
                    predicate: index,
                    object: object.to_string(),
                });
            }
        }
    }
    warnings
}

/// Declared object in a log: globally unique id plus class and display name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub id: String,
    pub class_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    /// Non-zero segmentation label; 0 is background.
    pub label: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Catalog {
    objects: Vec<ObjectDecl>,
}

impl Catalog {
    pub fn new(objects: Vec<ObjectDecl>) -> Self {
        Catalog { objects }
    }

    pub fn objects(&self) -> &[ObjectDecl] {
        &self.objects
    }

    pub fn get(&self, id: &str) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn by_label(&self, label: u32) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| o.label == label)
    }

    pub fn class_of<'a>(&'a self, id: &'a str) -> &'a str {
        self.get(id).map(|o| o.class_name.as_str()).unwrap_or(id)
    }

    /// Declared display name; otherwise the bare class name when no other
    /// object shares the class; otherwise the id.
    pub fn display_name<'a>(&'a self, id: &'a str) -> &'a str {
        let Some(decl) = self.get(id) else {
            return id;
        };
        if let Some(name) = &decl.display_name {
            return name;
        }
        let same_class = self
            .objects
            .iter()
            .filter(|o| o.class_name == decl.class_name)
            .count();
        if same_class == 1 {
            &decl.class_name
        } else {
            &decl.id
        }
    }

    /// Reverse lookup from a rendered name back to the object id.
    pub fn id_for_display(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| self.display_name(&o.id) == name)
            .map(|o| o.id.as_str())
    }
}
