//! Caption text in the fixed observation grammar.

use serde::{Deserialize, Serialize};

use crate::log_model::Timestamp;
use crate::relations::RelationName;
use crate::scene_graph::{Node, SceneGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub t: Timestamp,
    /// Action text with the first letter capitalized and no trailing period.
    pub action: String,
    /// Observation lines: visual list, relation sentences, gripper line and
    /// optional audio line.
    pub observation: String,
}

impl Caption {
    /// `MM:SS. Action: <action>.` followed by the observation lines.
    pub fn text(&self) -> String {
        format!("{}. {}", self.t, self.without_timestamp())
    }

    pub fn without_timestamp(&self) -> String {
        format!("Action: {}.\n{}", self.action, self.observation)
    }

    /// Whole caption on one line, single-spaced.
    pub fn one_line(&self) -> String {
        one_line(&self.text())
    }
}

pub fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn capitalize(text: &str) -> String {
    let text = text.trim().trim_end_matches('.');
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn label_of(graph: &SceneGraph, id: &str) -> String {
    graph
        .node(id)
        .map(Node::label)
        .unwrap_or_else(|| id.to_string())
}

fn display_of(graph: &SceneGraph, id: &str) -> String {
    graph
        .node(id)
        .map(|n| n.display_name.clone())
        .unwrap_or_else(|| id.to_string())
}

fn rank(graph: &SceneGraph, id: &str) -> usize {
    graph
        .nodes
        .iter()
        .position(|n| n.object_id == id)
        .unwrap_or(usize::MAX)
}

/// Relation sentences for edges whose subject passes `keep`, ordered by
/// subject (node order), object name, then relation.
fn relation_lines(graph: &SceneGraph, keep: impl Fn(&str) -> bool) -> Vec<String> {
    let mut edges: Vec<_> = graph
        .edges
        .iter()
        .filter(|e| e.name != RelationName::InsideRobotGripper && keep(&e.subject))
        .collect();
    edges.sort_by_key(|e| (rank(graph, &e.subject), display_of(graph, &e.object), e.name));
    edges
        .iter()
        .map(|e| {
            format!(
                "{} is {} {}.",
                label_of(graph, &e.subject),
                e.name.phrase(),
                label_of(graph, &e.object)
            )
        })
        .collect()
}

fn gripper_line(graph: &SceneGraph) -> String {
    match graph.held() {
        Some(id) => format!("{} is inside robot gripper.", display_of(graph, id)),
        None => "nothing is inside robot gripper.".to_string(),
    }
}

/// Observation lines for a key frame: only nodes visible in this frame are
/// listed, and only their outgoing relations are described.
pub fn render_observation(graph: &SceneGraph, audio_labels: &[String]) -> String {
    let visible: Vec<&Node> = graph.nodes.iter().filter(|n| n.visible_now).collect();
    let listed: Vec<String> = visible.iter().map(|n| n.label()).collect();
    let mut lines = vec![if listed.is_empty() {
        "Visual observation:".to_string()
    } else {
        format!("Visual observation: {}.", listed.join(", "))
    }];
    lines.extend(relation_lines(graph, |id| {
        graph.node(id).is_some_and(|n| n.visible_now)
    }));
    lines.push(gripper_line(graph));
    if !audio_labels.is_empty() {
        lines.push(format!("Auditory observation: {}.", audio_labels.join(", ")));
    }
    lines.join("\n")
}

pub fn render_caption(t: Timestamp, action: &str, graph: &SceneGraph, audio_labels: &[String]) -> Caption {
    Caption {
        t,
        action: capitalize(action),
        observation: render_observation(graph, audio_labels),
    }
}

/// Final environment state: every node and every edge, without the
/// "Visual observation:" prefix.
pub fn render_state(graph: &SceneGraph) -> String {
    let listed: Vec<String> = graph.nodes.iter().map(Node::label).collect();
    let mut lines = Vec::new();
    if !listed.is_empty() {
        lines.push(format!("{}.", listed.join(", ")));
    }
    lines.extend(relation_lines(graph, |_| true));
    lines.push(gripper_line(graph));
    lines.join("\n")
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::relations::{Relation, ROBOT_GRIPPER};

    fn node(id: &str, name: &str, state: Option<&str>, visible: bool) -> Node {
        Node {
            object_id: id.into(),
            class_name: name.into(),
            display_name: name.into(),
            state: state.map(str::to_string),
            visible_now: visible,
        }
    }

    pub(crate) fn pot_in_sink(pot_state: &str, faucet_state: &str) -> SceneGraph {
        SceneGraph {
            t: Timestamp::from_secs(28),
            nodes: vec![
                node("pot-1", "pot", Some(pot_state), true),
                node("faucet-1", "faucet", Some(faucet_state), true),
                node("sink-1", "sink", None, true),
                node("soap-1", "soap bottle", None, false),
            ],
            edges: vec![
                Relation::new("pot-1", RelationName::RightOf, "soap-1"),
                Relation::new("pot-1", RelationName::Inside, "sink-1"),
                Relation::new("soap-1", RelationName::LeftOf, "pot-1"),
            ],
        }
    }

    #[test]
    fn faucet_on_caption_matches_reference_text() {
        let g = pot_in_sink("filled with water and clean", "turned on");
        let c = render_caption(g.t, "toggle on faucet", &g, &["water runs in sink".to_string()]);
        assert_eq!(
            c.one_line(),
            "00:28. Action: Toggle on faucet. Visual observation: pot (filled with water and clean), \
             faucet (turned on), sink. pot (filled with water and clean) is inside sink. pot (filled \
             with water and clean) is on the right of soap bottle. nothing is inside robot gripper. \
             Auditory observation: water runs in sink."
        );
    }

    #[test]
    fn robot_only_graph() {
        let g = SceneGraph {
            t: Timestamp::from_secs(1),
            nodes: vec![],
            edges: vec![],
        };
        let c = render_caption(g.t, "move to pot", &g, &[]);
        assert_eq!(c.one_line(), "00:01. Action: Move to pot. Visual observation: nothing is inside robot gripper.");
    }

    #[test]
    fn held_object_named_without_state() {
        let mut g = pot_in_sink("filled with water and clean", "turned off");
        g.edges = vec![Relation::new("pot-1", RelationName::InsideRobotGripper, ROBOT_GRIPPER)];
        g.nodes.truncate(3);
        let c = render_caption(Timestamp::from_secs(34), "pick up pot", &g, &[]);
        assert_eq!(
            c.one_line(),
            "00:34. Action: Pick up pot. Visual observation: pot (filled with water and clean), \
             faucet (turned off), sink. pot is inside robot gripper."
        );
    }

    #[test]
    fn state_lists_hidden_nodes_too() {
        let g = pot_in_sink("filled with water and clean", "turned off");
        let s = one_line(&render_state(&g));
        assert!(s.starts_with("pot (filled with water and clean), faucet (turned off), sink, soap bottle."));
        assert!(s.contains("soap bottle is on the left of pot (filled with water and clean)."));
        assert!(!s.contains("Visual observation"));
    }

    /// Test-only parser: recovers (listed labels, relation triples, held) from
    /// caption observation text.
    fn parse_observation(text: &str) -> (Vec<String>, BTreeSet<(String, String, String)>, Option<String>) {
        let mut listed = Vec::new();
        let mut edges = BTreeSet::new();
        let mut held = None;
        let phrases = [
            "on the right of", "on the left of", "on top of", "inside", "above", "below", "occluding", "near",
        ];
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("Visual observation:") {
                let rest = rest.trim().trim_end_matches('.');
                if !rest.is_empty() {
                    listed = rest.split(", ").map(str::to_string).collect();
                }
            } else if line == "nothing is inside robot gripper." {
            } else if let Some(h) = line.strip_suffix(" is inside robot gripper.") {
                held = Some(h.to_string());
            } else if line.starts_with("Auditory observation:") {
            } else {
                let body = line.trim_end_matches('.');
                let phrase = phrases.iter().find(|p| body.contains(&format!(" is {p} "))).unwrap();
                let (s, o) = body.split_once(&format!(" is {phrase} ")).unwrap();
                edges.insert((s.to_string(), phrase.to_string(), o.to_string()));
            }
        }
        (listed, edges, held)
    }

    fn arb_graph() -> impl Strategy<Value = SceneGraph> {
        let names = ["pot", "sink", "faucet", "mug", "egg"];
        (
            prop::collection::vec((prop::option::of("(on|off|clean)"), any::<bool>()), 5),
            prop::collection::btree_set((0..5usize, 0..8usize, 0..5usize), 0..6),
            prop::option::of(0..5usize),
        )
            .prop_map(move |(attrs, edges, held)| {
                let nodes: Vec<Node> = attrs
                    .iter()
                    .enumerate()
                    .map(|(i, (s, v))| node(&format!("o{i}"), names[i], s.as_deref(), *v))
                    .collect();
                let mut edges: Vec<Relation> = edges
                    .into_iter()
                    .filter(|(s, _, o)| s != o)
                    .map(|(s, r, o)| Relation::new(&format!("o{s}"), RelationName::ALL[r], &format!("o{o}")))
                    .collect();
                edges.extend(held.map(|h| Relation::new(&format!("o{h}"), RelationName::InsideRobotGripper, ROBOT_GRIPPER)));
                SceneGraph {
                    t: Timestamp::ZERO,
                    nodes,
                    edges,
                }
            })
    }

    proptest! {
        #[test]
        fn caption_reparses_to_graph_content(g in arb_graph()) {
            let (listed, edges, held) = parse_observation(&render_observation(&g, &[]));
            let want_listed: Vec<String> = g.nodes.iter().filter(|n| n.visible_now).map(Node::label).collect();
            prop_assert_eq!(listed, want_listed);
            let want_edges: BTreeSet<(String, String, String)> = g
                .edges
                .iter()
                .filter(|e| e.name != RelationName::InsideRobotGripper)
                .filter(|e| g.node(&e.subject).unwrap().visible_now)
                .map(|e| (
                    g.node(&e.subject).unwrap().label(),
                    e.name.phrase().to_string(),
                    g.node(&e.object).unwrap().label(),
                ))
                .collect();
            prop_assert_eq!(edges, want_edges);
            prop_assert_eq!(held, g.held().map(|h| g.node(h).unwrap().display_name.clone()));
        }
    }
}
