//! Task-informed scene graphs built from the aggregated point cloud.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SemanticPointCloud;
use crate::log_model::{Camera, Catalog, Frame, Timestamp, TaskSpec};
use crate::relations::{self, Container, Relation, RelationConfig, RelationName};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub object_id: String,
    pub class_name: String,
    /// Name used in captions, e.g. "second stove burner".
    pub display_name: String,
    pub state: Option<String>,
    pub visible_now: bool,
}

impl Node {
    /// `name (state)`, or the bare name when no state is known.
    pub fn label(&self) -> String {
        match self.state.as_deref() {
            Some(s) if !s.is_empty() => format!("{} ({s})", self.display_name),
            _ => self.display_name.clone(),
        }
    }
}

/// Object nodes plus the implicit robot node. Nodes are kept in the order the
/// objects first appeared; robot-object relations use the object id
/// [`ROBOT_GRIPPER`](relations::ROBOT_GRIPPER).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneGraph {
    pub t: Timestamp,
    pub nodes: Vec<Node>,
    pub edges: Vec<Relation>,
}

impl SceneGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.object_id == id)
    }

    /// Object currently inside the robot gripper.
    pub fn held(&self) -> Option<&str> {
        self.edges
            .iter()
            .find(|e| e.name == RelationName::InsideRobotGripper)
            .map(|e| e.subject.as_str())
    }

    pub fn has_edge(&self, subject: &str, name: RelationName, object: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.subject == subject && e.name == name && e.object == object)
    }

    /// Line-oriented canonical text: nodes sorted by id, then edges sorted.
    pub fn to_text(&self) -> String {
        let mut out = format!("t\t{}\n", self.t);
        let mut nodes: Vec<&Node> = self.nodes.iter().collect();
        nodes.sort_by(|a, b| a.object_id.cmp(&b.object_id));
        for n in nodes {
            let _ = writeln!(
                out,
                "node\t{}\t{}\t{}\t{}\t{}",
                n.object_id,
                n.class_name,
                n.display_name,
                n.state.as_deref().unwrap_or("-"),
                if n.visible_now { "visible" } else { "hidden" }
            );
        }
        out.push_str("node\trobot\n");
        let mut edges = self.edges.clone();
        edges.sort();
        for e in edges {
            let _ = writeln!(out, "edge\t{}\t{}\t{}", e.subject, e.name, e.object);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SceneGraph, GraphParseError> {
        let mut graph = SceneGraph {
            t: Timestamp::ZERO,
            nodes: Vec::new(),
            edges: Vec::new(),
        };
        let mut robots = 0;
        for (index, line) in text.lines().enumerate() {
            let bad = || GraphParseError { line: index + 1 };
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["t", t] => graph.t = t.parse().map_err(|_| bad())?,
                ["node", "robot"] => robots += 1,
                ["node", id, class, display, state, vis] => graph.nodes.push(Node {
                    object_id: id.to_string(),
                    class_name: class.to_string(),
                    display_name: display.to_string(),
                    state: (*state != "-").then(|| state.to_string()),
                    visible_now: match *vis {
                        "visible" => true,
                        "hidden" => false,
                        _ => return Err(bad()),
                    },
                }),
                ["edge", s, r, o] => graph.edges.push(Relation::new(
                    s,
                    RelationName::parse(r).ok_or_else(bad)?,
                    o,
                )),
                [""] => {}
                _ => return Err(bad()),
            }
        }
        if robots != 1 {
            return Err(GraphParseError { line: 0 });
        }
        Ok(graph)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed scene graph text at line {line}")]
pub struct GraphParseError {
    pub line: usize,
}

/// Classes named by plan arguments and goal predicates.
fn task_classes<'a>(spec: &'a TaskSpec, catalog: &'a Catalog) -> BTreeSet<&'a str> {
    spec.plan
        .iter()
        .flat_map(|a| a.arguments.iter().map(String::as_str))
        .chain(spec.goal.iter().flat_map(|g| g.objects()))
        .map(|id| catalog.class_of(id))
        .collect()
}

/// Relations over ordered pairs drawn from `ids`, with hulls computed once per object.
fn pairwise(
    cloud: &SemanticPointCloud,
    pairs: impl Iterator<Item = (String, String)>,
    camera: &Camera,
    cfg: &RelationConfig,
) -> Vec<Relation> {
    let mut containers: BTreeMap<String, Container> = BTreeMap::new();
    let mut out = Vec::new();
    for (a, b) in pairs {
        let (Some(oa), Some(ob)) = (cloud.get(&a), cloud.get(&b)) else {
            continue;
        };
        let container = if oa.bbox().gap(ob.bbox()) < cfg.contact_max {
            Some(&*containers.entry(b.clone()).or_insert_with(|| Container::of(ob)))
        } else {
            None
        };
        if let Some(r) = relations::relate(oa, ob, camera, cfg, container) {
            out.push(r);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Seeds are every object whose class appears in the plan or goal; any object
/// bearing a relation to a seed is added (one hop).
pub fn relevant_objects(
    spec: &TaskSpec,
    cloud: &SemanticPointCloud,
    catalog: &Catalog,
    camera: &Camera,
    cfg: &RelationConfig,
) -> BTreeSet<String> {
    let classes = task_classes(spec, catalog);
    let seeds: BTreeSet<String> = cloud
        .objects
        .keys()
        .filter(|id| classes.contains(catalog.class_of(id)))
        .cloned()
        .collect();
    let others: Vec<String> = cloud
        .objects
        .keys()
        .filter(|id| !seeds.contains(*id))
        .cloned()
        .collect();
    let pairs = seeds.iter().flat_map(|s| {
        others
            .iter()
            .flat_map(move |o| [(s.clone(), o.clone()), (o.clone(), s.clone())])
    });
    let mut out = seeds.clone();
    for r in pairwise(cloud, pairs, camera, cfg) {
        out.insert(r.subject);
        out.insert(r.object);
    }
    out
}

/// Graph over the relevant objects present in `cloud`.
///
/// `states` holds the latest known state per object; `frame` decides which
/// nodes are visible now and who is held.
pub fn build_graph(
    cloud: &SemanticPointCloud,
    frame: &Frame,
    states: &BTreeMap<String, String>,
    relevant: &BTreeSet<String>,
    catalog: &Catalog,
    camera: &Camera,
    cfg: &RelationConfig,
) -> SceneGraph {
    let observed = frame.observed_objects(catalog);
    let mut present: Vec<&String> = relevant.iter().filter(|id| cloud.get(id).is_some()).collect();
    present.sort_by_key(|id| (cloud.appearance_rank(id), id.as_str()));
    let nodes: Vec<Node> = present
        .iter()
        .map(|id| Node {
            object_id: id.to_string(),
            class_name: catalog.class_of(id).to_string(),
            display_name: catalog.display_name(id).to_string(),
            state: states.get(*id).cloned(),
            visible_now: observed.contains(*id),
        })
        .collect();
    let pairs = present.iter().flat_map(|a| {
        present
            .iter()
            .filter(move |b| a != *b)
            .map(move |b| (a.to_string(), b.to_string()))
    });
    let mut edges = pairwise(cloud, pairs, camera, cfg);
    if let Some(held) = frame.robot.held_object.as_deref() {
        // The held object keeps its node even when its points were dropped.
        if catalog.contains(held) {
            edges.extend(relations::robot_relation(Some(held)));
        }
    }
    let mut graph = SceneGraph {
        t: frame.t,
        nodes,
        edges,
    };
    if let Some(held) = frame.robot.held_object.as_deref() {
        if graph.node(held).is_none() && catalog.contains(held) {
            graph.nodes.push(Node {
                object_id: held.to_string(),
                class_name: catalog.class_of(held).to_string(),
                display_name: catalog.display_name(held).to_string(),
                state: states.get(held).cloned(),
                visible_now: observed.contains(held),
            });
        }
    }
    graph
}

/// Canonical equality on (id, state) nodes and (subject, relation, object) edges.
pub fn graph_equal(a: &SceneGraph, b: &SceneGraph) -> bool {
    canonical(a) == canonical(b)
}

type Canonical<'a> = (
    BTreeSet<(&'a str, Option<&'a str>)>,
    BTreeSet<(&'a str, RelationName, &'a str)>,
);

fn canonical(g: &SceneGraph) -> Canonical<'_> {
    (
        g.nodes
            .iter()
            .map(|n| (n.object_id.as_str(), n.state.as_deref()))
            .collect(),
        g.edges
            .iter()
            .map(|e| (e.subject.as_str(), e.name, e.object.as_str()))
            .collect(),
    )
}

/// `build_graph` without viewpoint-dependent edges (left/right of, occluding).
pub fn final_state_graph(
    cloud: &SemanticPointCloud,
    last_frame: &Frame,
    states: &BTreeMap<String, String>,
    relevant: &BTreeSet<String>,
    catalog: &Catalog,
    camera: &Camera,
    cfg: &RelationConfig,
) -> SceneGraph {
    let mut g = build_graph(cloud, last_frame, states, relevant, catalog, camera, cfg);
    g.edges.retain(|e| !e.name.is_view_dependent());
    g
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::ObjectInstance;
    use crate::relations::ROBOT_GRIPPER;
    use crate::log_model::{ObjectDecl, ObjectPoints, PlannedAction, RobotState, Verb, Visual};
    use crate::math::Point3;

    fn decl(id: &str, class: &str, label: u32) -> ObjectDecl {
        ObjectDecl {
            id: id.into(),
            class_name: class.into(),
            display_name: None,
            label,
        }
    }

    fn block(lo: Point3, hi: Point3) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let f = |a: usize, s: usize| lo[a] + (hi[a] - lo[a]) * s as f64 / 4.0;
                    pts.push([f(0, i), f(1, j), f(2, k)]);
                }
            }
        }
        pts
    }

    struct Fixture {
        catalog: Catalog,
        spec: TaskSpec,
        cloud: SemanticPointCloud,
        frame: Frame,
    }

    /// Pot inside a sink, a soap bottle beside it, and a far-away chair.
    fn fixture() -> Fixture {
        let catalog = Catalog::new(vec![
            decl("pot-1", "pot", 1),
            decl("sink-1", "sink", 2),
            decl("soap-1", "soap bottle", 3),
            decl("chair-1", "chair", 4),
        ]);
        let spec = TaskSpec {
            task_name: "boil water".into(),
            goal_text: String::new(),
            goal: vec![],
            plan: vec![PlannedAction::new("put pot in sink", Verb::PutIn, &["pot-1", "sink-1"])],
            executable_actions: vec![],
            audio_label_set: vec![],
        };
        let objects = [
            ("pot-1", block([-0.15, -0.1, 0.05], [0.05, 0.1, 0.2])),
            ("sink-1", block([-0.2, -0.2, 0.0], [0.2, 0.2, 0.3])),
            ("soap-1", block([-0.4, -0.05, 0.1], [-0.32, 0.05, 0.25])),
            ("chair-1", block([3.0, 3.0, 0.0], [3.5, 3.5, 1.0])),
        ];
        let mut cloud = SemanticPointCloud::empty(Timestamp::from_secs(25));
        for (id, pts) in &objects {
            cloud.insert(ObjectInstance::new(*id, catalog.class_of(id), pts.clone(), cloud.t).unwrap());
        }
        let frame = Frame {
            t: Timestamp::from_secs(25),
            visual: Visual::LabeledPoints {
                objects: objects[..2]
                    .iter()
                    .map(|(id, pts)| ObjectPoints {
                        object: id.to_string(),
                        points: pts.clone(),
                    })
                    .collect(),
                camera: None,
            },
            object_states: BTreeMap::new(),
            robot: RobotState::default(),
            audio_events: vec![],
        };
        Fixture {
            catalog,
            spec,
            cloud,
            frame,
        }
    }

    /// Camera 3 m in front along -Y, looking +Y, world Z up.
    fn camera() -> Camera {
        let mut cam = Camera::default();
        cam.pose.0 = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -3.0],
            [0.0, -1.0, 0.0, 0.1],
            [0.0, 0.0, 0.0, 1.0],
        ];
        cam
    }

    fn states() -> BTreeMap<String, String> {
        BTreeMap::from([("pot-1".to_string(), "empty and clean".to_string())])
    }

    #[test]
    fn relevance_is_seeds_plus_one_hop() {
        let f = fixture();
        let rel = relevant_objects(&f.spec, &f.cloud, &f.catalog, &camera(), &RelationConfig::default());
        let want: BTreeSet<String> = ["pot-1", "sink-1", "soap-1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(rel, want);
    }

    #[test]
    fn graph_for_pot_in_sink() {
        let f = fixture();
        let cfg = RelationConfig::default();
        let rel = relevant_objects(&f.spec, &f.cloud, &f.catalog, &camera(), &cfg);
        let g = build_graph(&f.cloud, &f.frame, &states(), &rel, &f.catalog, &camera(), &cfg);
        assert!(g.has_edge("pot-1", RelationName::Inside, "sink-1"));
        assert!(g.has_edge("pot-1", RelationName::RightOf, "soap-1"));
        assert_eq!(g.node("pot-1").unwrap().label(), "pot (empty and clean)");
        assert!(g.node("pot-1").unwrap().visible_now);
        assert!(!g.node("soap-1").unwrap().visible_now);
        assert!(g.held().is_none());

        let fin = final_state_graph(&f.cloud, &f.frame, &states(), &rel, &f.catalog, &camera(), &cfg);
        assert!(fin.has_edge("pot-1", RelationName::Inside, "sink-1"));
        assert!(fin.edges.iter().all(|e| !e.name.is_view_dependent()));
    }

    #[test]
    fn held_object_gets_gripper_edge() {
        let mut f = fixture();
        f.frame.robot = RobotState {
            gripper_open: false,
            held_object: Some("pot-1".into()),
            ..RobotState::default()
        };
        let rel = BTreeSet::from(["pot-1".to_string()]);
        let g = build_graph(&f.cloud, &f.frame, &states(), &rel, &f.catalog, &camera(), &RelationConfig::default());
        assert!(g.has_edge("pot-1", RelationName::InsideRobotGripper, ROBOT_GRIPPER));
        assert_eq!(g.held(), Some("pot-1"));
    }

    #[test]
    fn empty_cloud_has_only_robot() {
        let f = fixture();
        let empty = SemanticPointCloud::empty(f.frame.t);
        let g = build_graph(&empty, &f.frame, &states(), &BTreeSet::new(), &f.catalog, &camera(), &RelationConfig::default());
        assert!(g.nodes.is_empty() && g.edges.is_empty());
        assert!(g.to_text().contains("node\trobot"));
    }

    #[test]
    fn state_change_breaks_equality() {
        let f = fixture();
        let cfg = RelationConfig::default();
        let rel = relevant_objects(&f.spec, &f.cloud, &f.catalog, &camera(), &cfg);
        let g = build_graph(&f.cloud, &f.frame, &states(), &rel, &f.catalog, &camera(), &cfg);
        assert!(graph_equal(&g, &g));
        let mut h = g.clone();
        h.nodes[0].state = Some("filled with water and clean".into());
        assert!(!graph_equal(&g, &h));
        let mut later = g.clone();
        later.t = Timestamp::from_secs(99);
        later.nodes[0].visible_now = !later.nodes[0].visible_now;
        assert!(graph_equal(&g, &later));
    }

    fn arb_graph() -> impl Strategy<Value = SceneGraph> {
        let node = ("[a-d]", prop::option::of("(on|off)"), any::<bool>()).prop_map(|(id, state, vis)| Node {
            object_id: id.clone(),
            class_name: "thing".into(),
            display_name: id,
            state,
            visible_now: vis,
        });
        let edge = ("[a-d]", 0..8usize, "[a-d]").prop_map(|(s, r, o)| Relation::new(&s, RelationName::ALL[r], &o));
        (prop::collection::vec(node, 0..4), prop::collection::vec(edge, 0..4)).prop_map(|(mut nodes, edges)| {
            nodes.sort_by(|a, b| a.object_id.cmp(&b.object_id));
            nodes.dedup_by(|a, b| a.object_id == b.object_id);
            SceneGraph {
                t: Timestamp::ZERO,
                nodes,
                edges,
            }
        })
    }

    /// Oracle: canonical text with timestamps and visibility stripped, edges deduplicated.
    fn sorted_serialization(g: &SceneGraph) -> String {
        let mut lines: Vec<String> = g
            .nodes
            .iter()
            .map(|n| format!("n {} {:?}", n.object_id, n.state))
            .collect();
        lines.sort();
        let mut edges: Vec<String> = g
            .edges
            .iter()
            .map(|e| format!("e {} {} {}", e.subject, e.name, e.object))
            .collect();
        edges.sort();
        edges.dedup();
        lines.extend(edges);
        lines.join("\n")
    }

    proptest! {
        #[test]
        fn equality_agrees_with_sorted_serialization(a in arb_graph(), b in arb_graph()) {
            prop_assert_eq!(graph_equal(&a, &b), sorted_serialization(&a) == sorted_serialization(&b));
            prop_assert!(graph_equal(&a, &a));
            prop_assert_eq!(graph_equal(&a, &b), graph_equal(&b, &a));
        }

        #[test]
        fn text_round_trip(g in arb_graph()) {
            let back = SceneGraph::from_text(&g.to_text()).unwrap();
            prop_assert!(graph_equal(&g, &back));
            prop_assert_eq!(back.to_text(), g.to_text());
        }
    }
}
