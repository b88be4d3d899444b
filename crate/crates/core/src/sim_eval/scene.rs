//! Box-shaped objects, their placement from the symbolic world, and the
//! scripted robot timeline that turns a scenario into a sensory log.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::log_model::{
    ActionPhase, AudioEvent, Camera, Catalog, Frame, Intrinsics, ObjectDecl, ObjectPoints, Pose, RobotState,
    SensoryLog, TaskSpec, Timestamp, Verb, Visual,
};
use crate::math::Point3;
use crate::world::{ExecutableAction, Support, WorldState};

/// Grid spacing of sampled surface points.
const SPACING: f64 = 0.04;
/// Clearance between a placed object and its parent's floor or top.
const CLEARANCE: [f64; 2] = [0.02, 0.01];
/// Where held objects float, well clear of every surface.
const GRIPPER_ANCHOR: Point3 = [0.0, -1.3, 1.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trait {
    Movable,
    Container,
    Receptacle,
    Toggleable,
    Openable,
    Crackable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub decl: ObjectDecl,
    pub size: Point3,
    /// Minimum corner when the object rests on nothing.
    pub home: Point3,
    pub state: Option<String>,
    pub support: Option<Support>,
    /// Minimum-corner XY per parent; otherwise centred on the parent.
    pub spots: Vec<(String, [f64; 2])>,
    pub traits: Vec<Trait>,
    /// False for objects the task names but the scene lacks.
    pub present: bool,
}

impl SimObject {
    pub fn new(id: &str, class: &str, size: Point3, home: Point3) -> Self {
        SimObject {
            decl: ObjectDecl {
                id: id.into(),
                class_name: class.into(),
                display_name: None,
                label: 0,
            },
            size,
            home,
            state: None,
            support: None,
            spots: Vec::new(),
            traits: Vec::new(),
            present: true,
        }
    }

    pub fn id(&self) -> &str {
        &self.decl.id
    }

    pub fn named(mut self, display: &str) -> Self {
        self.decl.display_name = Some(display.into());
        self
    }

    pub fn state(mut self, state: &str) -> Self {
        self.state = Some(state.into());
        self
    }

    pub fn on(mut self, parent: &str) -> Self {
        self.support = Some(Support::OnTop(parent.into()));
        self
    }

    pub fn inside(mut self, parent: &str) -> Self {
        self.support = Some(Support::Inside(parent.into()));
        self
    }

    pub fn spot(mut self, parent: &str, x: f64, y: f64) -> Self {
        self.spots.push((parent.into(), [x, y]));
        self
    }

    pub fn with(mut self, traits: &[Trait]) -> Self {
        self.traits.extend_from_slice(traits);
        self
    }

    pub fn absent(mut self) -> Self {
        self.present = false;
        self
    }

    pub fn has(&self, t: Trait) -> bool {
        self.traits.contains(&t)
    }
}

/// One contiguous stretch of the robot timeline, inclusive of both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Timestamp,
    pub end: Timestamp,
    pub index: usize,
    /// Navigation text; `None` while manipulating.
    pub motion: Option<String>,
    /// The plan step's action is applied at `end`.
    pub ends_action: bool,
    /// Objects the camera sees, in the order they are listed.
    pub view: Vec<String>,
}

/// Builds contiguous segments starting at 00:00.
#[derive(Debug, Clone, Default)]
pub struct Timeline {
    pub segments: Vec<Segment>,
}

impl Timeline {
    fn push(mut self, until: u32, index: usize, motion: Option<&str>, ends_action: bool, view: &[&str]) -> Self {
        let start = self.segments.last().map_or(0, |s| s.end.secs() + 1);
        self.segments.push(Segment {
            start: Timestamp::from_secs(start),
            end: Timestamp::from_secs(until),
            index,
            motion: motion.map(str::to_string),
            ends_action,
            view: view.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn go(self, until: u32, index: usize, motion: &str, view: &[&str]) -> Self {
        self.push(until, index, Some(motion), false, view)
    }

    /// Manipulation without finishing the step.
    pub fn work(self, until: u32, index: usize, view: &[&str]) -> Self {
        self.push(until, index, None, false, view)
    }

    pub fn act(self, until: u32, index: usize, view: &[&str]) -> Self {
        self.push(until, index, None, true, view)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// The gripper lets go of `object`, which lands on `onto`.
    Drop {
        object: String,
        onto: Support,
        /// Landing spot (minimum-corner XY) on the new parent.
        at: Option<[f64; 2]>,
        state: Option<String>,
    },
    SetState { object: String, state: String },
    Audio { label: String, end: Timestamp },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn drop(t: u32, object: &str, onto: Support, at: [f64; 2], state: Option<&str>) -> Self {
        Event {
            t: Timestamp::from_secs(t),
            kind: EventKind::Drop {
                object: object.into(),
                onto,
                at: Some(at),
                state: state.map(str::to_string),
            },
        }
    }

    pub fn set_state(t: u32, object: &str, state: &str) -> Self {
        Event {
            t: Timestamp::from_secs(t),
            kind: EventKind::SetState {
                object: object.into(),
                state: state.into(),
            },
        }
    }

    pub fn audio(start: u32, end: u32, label: &str) -> Self {
        Event {
            t: Timestamp::from_secs(start),
            kind: EventKind::Audio {
                label: label.into(),
                end: Timestamp::from_secs(end),
            },
        }
    }

    fn moved(&self) -> Option<&str> {
        match &self.kind {
            EventKind::Drop { object, .. } => Some(object),
            _ => None,
        }
    }
}

/// Fixed camera 3 m in front of the counter, 1.2 m up, looking along +Y.
pub fn scene_camera() -> Camera {
    Camera {
        intrinsics: Intrinsics::UNIT,
        pose: Pose([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -3.0],
            [0.0, -1.0, 0.0, 1.2],
            [0.0, 0.0, 0.0, 1.0],
        ]),
    }
}

pub fn initial_world(objects: &[SimObject]) -> WorldState {
    let mut world = WorldState::default();
    for o in objects.iter().filter(|o| o.present) {
        world.add(o.id(), &o.decl.class_name, o.state.as_deref(), o.support.clone());
    }
    world
}

/// Minimum corner of every present object under the given world state.
pub fn placements(objects: &[SimObject], world: &WorldState) -> BTreeMap<String, Point3> {
    let by_id: BTreeMap<&str, &SimObject> = objects.iter().map(|o| (o.id(), o)).collect();
    let mut out = BTreeMap::new();
    for o in objects.iter().filter(|o| o.present) {
        out.insert(o.id().to_string(), place(o.id(), &by_id, world, 0));
    }
    out
}

fn place(id: &str, by_id: &BTreeMap<&str, &SimObject>, world: &WorldState, depth: usize) -> Point3 {
    let o = by_id[id];
    if world.holding.as_deref() == Some(id) {
        return [GRIPPER_ANCHOR[0] - o.size[0] / 2.0, GRIPPER_ANCHOR[1], GRIPPER_ANCHOR[2]];
    }
    let Some(support) = world.support.get(id).filter(|_| depth < by_id.len()) else {
        return o.home;
    };
    let parent = support.parent();
    let Some(p) = by_id.get(parent) else {
        return o.home;
    };
    let pmin = place(parent, by_id, world, depth + 1);
    let [x, y] = o
        .spots
        .iter()
        .find(|(q, _)| q == parent)
        .map(|(_, xy)| *xy)
        .unwrap_or([
            pmin[0] + (p.size[0] - o.size[0]) / 2.0,
            pmin[1] + (p.size[1] - o.size[1]) / 2.0,
        ]);
    let z = match support {
        Support::Inside(_) => pmin[2] + CLEARANCE[0],
        Support::OnTop(_) => pmin[2] + p.size[2] + CLEARANCE[1],
    };
    [x, y, z]
}

/// Grid points on the six faces of a box.
pub fn surface_points(min: Point3, size: Point3) -> Vec<Point3> {
    let n = size.map(|s| (s / SPACING).ceil().max(1.0) as usize + 1);
    let mut pts = Vec::new();
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let edge = [i, j, k].iter().zip(n).any(|(&c, m)| c == 0 || c == m - 1);
                if edge {
                    let f = |a: usize, c: usize| min[a] + size[a] * c as f64 / (n[a] - 1) as f64;
                    pts.push([f(0, i), f(1, j), f(2, k)]);
                }
            }
        }
    }
    pts
}

/// What the simulator produces: the log plus the true final world.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub log: SensoryLog,
    pub end_world: WorldState,
}

fn planned_action(task: &TaskSpec, index: usize) -> Option<ExecutableAction> {
    let a = task.plan.get(index)?;
    let args: Vec<&str> = a.arguments.iter().map(String::as_str).collect();
    Some(ExecutableAction::new(a.verb()?, &args))
}

fn check_script(task: &TaskSpec, segments: &[Segment], events: &[Event]) -> Result<(), SimError> {
    let mut next = 0;
    for s in segments {
        if s.start.secs() != next || s.end < s.start {
            return Err(SimError::Script(format!("segment starting {} is not contiguous", s.start)));
        }
        if s.index >= task.plan.len() {
            return Err(SimError::Script(format!("segment at {} names plan step {}", s.start, s.index)));
        }
        next = s.end.secs() + 1;
    }
    if segments.is_empty() {
        return Err(SimError::Script("empty timeline".into()));
    }
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(SimError::Script("events are not in time order".into()));
    }
    let mut moves: BTreeSet<(Timestamp, String)> = BTreeSet::new();
    let action_moves = segments.iter().filter(|s| s.ends_action).filter_map(|s| {
        let a = planned_action(task, s.index)?;
        matches!(a.verb, Verb::PickUp | Verb::PutIn | Verb::PutOn).then(|| (s.end, a.arguments[0].clone()))
    });
    let event_moves = events.iter().filter_map(|e| e.moved().map(|o| (e.t, o.to_string())));
    for (t, object) in action_moves.chain(event_moves) {
        if !moves.insert((t, object.clone())) {
            return Err(SimError::ScriptConflict { object, t });
        }
    }
    Ok(())
}

fn apply_event(world: &mut WorldState, objects: &mut [SimObject], e: &Event) {
    match &e.kind {
        EventKind::Drop { object, onto, at, state } => {
            if let (Some(at), Some(o)) = (at, objects.iter_mut().find(|o| o.id() == object)) {
                o.spots.retain(|(p, _)| p != onto.parent());
                o.spots.push((onto.parent().to_string(), *at));
            }
            if world.holding.as_deref() == Some(object) {
                world.holding = None;
            }
            world.support.insert(object.clone(), onto.clone());
            if let Some(s) = state {
                world.states.insert(object.clone(), s.clone());
            }
        }
        EventKind::SetState { object, state } => {
            world.states.insert(object.clone(), state.clone());
        }
        EventKind::Audio { .. } => {}
    }
}

/// Runs a script: one frame per second from 00:00 to the last segment's end.
pub fn run_script(
    task: &TaskSpec,
    objects: &[SimObject],
    segments: &[Segment],
    events: &[Event],
    seed: u64,
    jitter: f64,
) -> Result<Simulation, SimError> {
    check_script(task, segments, events)?;
    let mut catalog_decls: Vec<ObjectDecl> = objects.iter().map(|o| o.decl.clone()).collect();
    for (i, d) in catalog_decls.iter_mut().enumerate() {
        d.label = i as u32 + 1;
    }
    let present: BTreeSet<&str> = objects.iter().filter(|o| o.present).map(SimObject::id).collect();
    let sizes: BTreeMap<&str, Point3> = objects.iter().map(|o| (o.id(), o.size)).collect();
    let mut objects = objects.to_vec();
    let mut world = initial_world(&objects);
    let mut frames = Vec::new();
    let end = segments.last().map_or(0, |s| s.end.secs());
    for (fi, secs) in (0..=end).enumerate() {
        let t = Timestamp::from_secs(secs);
        let seg = segments
            .iter()
            .find(|s| s.start <= t && t <= s.end)
            .expect("contiguous timeline");
        let mut audio = Vec::new();
        for e in events.iter().filter(|e| e.t == t) {
            apply_event(&mut world, &mut objects, e);
            if let EventKind::Audio { label, end } = &e.kind {
                audio.push(AudioEvent::labeled(e.t, *end, label));
            }
        }
        let ended = seg.ends_action && seg.end == t;
        if ended {
            if let Some(action) = planned_action(task, seg.index) {
                world.apply(&action)?;
            }
        }
        let place = placements(&objects, &world);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(fi as u64));
        let mut visible = Vec::new();
        let mut states = BTreeMap::new();
        for id in seg.view.iter().filter(|id| present.contains(id.as_str())) {
            let mut points = surface_points(place[id], sizes[id.as_str()]);
            if jitter > 0.0 {
                for p in &mut points {
                    for c in p.iter_mut() {
                        *c += rng.random_range(-jitter..=jitter);
                    }
                }
            }
            visible.push(ObjectPoints {
                object: id.clone(),
                points,
            });
            if let Some(s) = world.states.get(id) {
                states.insert(id.clone(), s.clone());
            }
        }
        frames.push(Frame {
            t,
            visual: Visual::LabeledPoints {
                objects: visible,
                camera: None,
            },
            object_states: states,
            robot: RobotState {
                gripper_open: world.holding.is_none(),
                held_object: world.holding.clone(),
                current_action_index: seg.index,
                action_phase: if ended { ActionPhase::Ended } else { ActionPhase::Executing },
                motion: seg.motion.clone(),
            },
            audio_events: audio,
        });
    }
    let mut task = task.clone();
    for s in segments.iter().filter(|s| s.ends_action) {
        if let Some(a) = task.plan.get_mut(s.index) {
            a.planned_end = Some(s.end);
        }
    }
    Ok(Simulation {
        log: SensoryLog {
            task,
            objects: Catalog::new(catalog_decls),
            camera: Some(scene_camera()),
            frames,
        },
        end_world: world,
    })
}

/// Every grounded action the scene affords, in object order.
pub fn executable_actions(objects: &[SimObject]) -> Vec<ExecutableAction> {
    let present: Vec<&SimObject> = objects.iter().filter(|o| o.present).collect();
    let mut out = Vec::new();
    for o in &present {
        let id = o.id();
        if o.has(Trait::Movable) {
            out.push(ExecutableAction::new(Verb::PickUp, &[id]));
            for p in present.iter().filter(|p| p.id() != id) {
                if p.has(Trait::Container) {
                    out.push(ExecutableAction::new(Verb::PutIn, &[id, p.id()]));
                }
                if p.has(Trait::Receptacle) {
                    out.push(ExecutableAction::new(Verb::PutOn, &[id, p.id()]));
                }
            }
        }
        if o.has(Trait::Toggleable) {
            out.push(ExecutableAction::new(Verb::ToggleOn, &[id]));
            out.push(ExecutableAction::new(Verb::ToggleOff, &[id]));
        }
        if o.has(Trait::Openable) {
            out.push(ExecutableAction::new(Verb::Open, &[id]));
            out.push(ExecutableAction::new(Verb::Close, &[id]));
        }
        if o.has(Trait::Crackable) {
            out.push(ExecutableAction::new(Verb::Crack, &[id]));
        }
    }
    out
}
