//! Hierarchical summary: per-frame scene graphs, key frames, event captions
//! and subgoal captions.

mod caption;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use caption::{capitalize, one_line, render_caption, render_observation, render_state, Caption};

use crate::config::Config;
use crate::geometry::{self, GeometryError, SemanticPointCloud};
use crate::log_model::{ActionPhase, RobotState, SensoryLog, Timestamp};
use crate::percepts::{self, AudioLabel, LabelSet, PerceptError};
use crate::scene_graph::{self, SceneGraph};

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Percept(#[from] PerceptError),
    #[error("plan index went from {from} back to {to} at {t}")]
    PlanIndexRegression { t: Timestamp, from: usize, to: usize },
}

/// Scene graph and robot state for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub t: Timestamp,
    pub graph: SceneGraph,
    pub robot: RobotState,
    /// Motion text when moving, otherwise the current subgoal.
    pub action_text: String,
}

/// Output of folding a log through projection, aggregation and graph building.
#[derive(Debug, Clone)]
pub struct SensoryTrace {
    pub steps: Vec<Step>,
    pub audio: Vec<AudioLabel>,
    /// Graph of the last frame without viewpoint-dependent relations.
    pub final_state: Option<SceneGraph>,
    pub final_cloud: SemanticPointCloud,
}

/// Runs every frame through the sensory pipeline.
pub fn run_pipeline(
    log: &SensoryLog,
    cfg: &Config,
    audio_labels: Option<&LabelSet>,
) -> Result<SensoryTrace, SummaryError> {
    let mut cloud = SemanticPointCloud::default();
    let mut states: BTreeMap<String, String> = BTreeMap::new();
    let mut steps = Vec::with_capacity(log.frames.len());
    let mut final_state = None;
    for (index, frame) in log.frames.iter().enumerate() {
        let current = geometry::project_frame(frame, &log.objects)?;
        cloud = geometry::aggregate(
            &cloud,
            &current,
            frame.robot.held_object.as_deref(),
            &cfg.aggregation,
        )?;
        states.extend(frame.object_states.iter().map(|(k, v)| (k.clone(), v.clone())));
        let camera = log.camera_for(frame);
        let relevant = scene_graph::relevant_objects(&log.task, &cloud, &log.objects, &camera, &cfg.relations);
        let graph = scene_graph::build_graph(&cloud, frame, &states, &relevant, &log.objects, &camera, &cfg.relations);
        if index + 1 == log.frames.len() {
            let mut fin = graph.clone();
            fin.edges.retain(|e| !e.name.is_view_dependent());
            final_state = Some(fin);
        }
        let action_text = match &frame.robot.motion {
            Some(m) => m.clone(),
            None => log
                .task
                .plan
                .get(frame.robot.current_action_index)
                .map(|a| a.subgoal_text.clone())
                .unwrap_or_default(),
        };
        steps.push(Step {
            t: frame.t,
            graph,
            robot: frame.robot.clone(),
            action_text,
        });
    }
    let audio = percepts::summarize_audio(log.audio_events(), audio_labels)?;
    Ok(SensoryTrace {
        steps,
        audio,
        final_state,
        final_cloud: cloud,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyReason {
    GraphChanged,
    ActionEnded,
    AudioBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyFrame {
    pub t: Timestamp,
    pub reasons: BTreeSet<KeyReason>,
    pub graph: SceneGraph,
    pub robot: RobotState,
    pub action_text: String,
    pub audio_labels: Vec<String>,
}

/// Labels of audio events active at `t` (start <= t <= end), in time order.
pub fn active_audio(audio: &[AudioLabel], t: Timestamp) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for a in audio.iter().filter(|a| a.start <= t && t <= a.end) {
        if !out.contains(&a.label) {
            out.push(a.label.clone());
        }
    }
    out
}

fn ended(prev: Option<&RobotState>, cur: &RobotState) -> bool {
    cur.action_phase == ActionPhase::Ended
        && prev.is_none_or(|p| {
            p.action_phase != ActionPhase::Ended || p.current_action_index != cur.current_action_index
        })
}

/// A frame is a key frame when its graph differs from the previous frame's
/// (the first frame always counts), when a robot action ends there, or when
/// an audio event starts or ends there.
pub fn select_key_frames(steps: &[Step], audio: &[AudioLabel]) -> Vec<KeyFrame> {
    let boundaries: BTreeSet<Timestamp> = audio.iter().flat_map(|a| [a.start, a.end]).collect();
    let mut out = Vec::new();
    for (i, step) in steps.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &steps[j]);
        let mut reasons = BTreeSet::new();
        if prev.is_none_or(|p| !scene_graph::graph_equal(&p.graph, &step.graph)) {
            reasons.insert(KeyReason::GraphChanged);
        }
        if ended(prev.map(|p| &p.robot), &step.robot) {
            reasons.insert(KeyReason::ActionEnded);
        }
        if boundaries.contains(&step.t) {
            reasons.insert(KeyReason::AudioBoundary);
        }
        if !reasons.is_empty() {
            out.push(KeyFrame {
                t: step.t,
                reasons,
                graph: step.graph.clone(),
                robot: step.robot.clone(),
                action_text: step.action_text.clone(),
                audio_labels: active_audio(audio, step.t),
            });
        }
    }
    out
}

pub fn caption_for(kf: &KeyFrame) -> Caption {
    render_caption(kf.t, &kf.action_text, &kf.graph, &kf.audio_labels)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventSummary {
    pub captions: Vec<Caption>,
}

impl EventSummary {
    pub fn at(&self, t: Timestamp) -> Option<&Caption> {
        self.captions.iter().find(|c| c.t == t)
    }

    /// Captions strictly before `t`, one per line.
    pub fn history_before(&self, t: Timestamp) -> String {
        self.captions
            .iter()
            .filter(|c| c.t < t)
            .map(Caption::one_line)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn build_event_summary(trace: &SensoryTrace) -> EventSummary {
    EventSummary {
        captions: select_key_frames(&trace.steps, &trace.audio)
            .iter()
            .map(caption_for)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgoalEntry {
    pub index: usize,
    pub subgoal_text: String,
    pub end: Timestamp,
    pub caption: Caption,
    pub graph: SceneGraph,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubgoalSummary {
    pub entries: Vec<SubgoalEntry>,
}

/// One entry per executed plan step, taken at the step's last frame.
pub fn build_subgoal_summary(log: &SensoryLog, trace: &SensoryTrace) -> Result<SubgoalSummary, SummaryError> {
    let mut last_frame: BTreeMap<usize, usize> = BTreeMap::new();
    let mut prev_index = 0;
    for (i, step) in trace.steps.iter().enumerate() {
        let index = step.robot.current_action_index;
        if index < prev_index {
            return Err(SummaryError::PlanIndexRegression {
                t: step.t,
                from: prev_index,
                to: index,
            });
        }
        prev_index = index;
        last_frame.insert(index, i);
    }
    let entries = last_frame
        .into_iter()
        .filter_map(|(index, i)| {
            let action = log.task.plan.get(index)?;
            let step = &trace.steps[i];
            let audio = active_audio(&trace.audio, step.t);
            Some(SubgoalEntry {
                index,
                subgoal_text: action.subgoal_text.clone(),
                end: step.t,
                caption: render_caption(step.t, &action.subgoal_text, &step.graph, &audio),
                graph: step.graph.clone(),
            })
        })
        .collect();
    Ok(SubgoalSummary { entries })
}

/// Everything the reasoning stage consumes.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub key_frames: Vec<KeyFrame>,
    pub events: EventSummary,
    pub subgoals: SubgoalSummary,
    /// Final environment state without viewpoint-dependent relations.
    pub final_state: SceneGraph,
}

pub fn summarize(log: &SensoryLog, cfg: &Config, audio_labels: Option<&LabelSet>) -> Result<Hierarchy, SummaryError> {
    let trace = run_pipeline(log, cfg, audio_labels)?;
    let key_frames = select_key_frames(&trace.steps, &trace.audio);
    let events = EventSummary {
        captions: key_frames.iter().map(caption_for).collect(),
    };
    let subgoals = build_subgoal_summary(log, &trace)?;
    let final_state = trace.final_state.clone().unwrap_or_default();
    Ok(Hierarchy {
        key_frames,
        events,
        subgoals,
        final_state,
    })
}
