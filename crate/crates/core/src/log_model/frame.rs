use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Catalog, TaskSpec, Timestamp};
use crate::math::{self, Point3};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub const UNIT: Intrinsics = Intrinsics {
        fx: 1.0,
        fy: 1.0,
        cx: 0.0,
        cy: 0.0,
    };
}

/// Row-major 4x4 world-from-camera transform. The camera frame follows the
/// pinhole convention: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose(pub [[f64; 4]; 4]);

impl Pose {
    pub const IDENTITY: Pose = Pose([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);

    pub fn translation(&self) -> Point3 {
        [self.0[0][3], self.0[1][3], self.0[2][3]]
    }

    pub fn transform_point(&self, p: Point3) -> Point3 {
        let m = &self.0;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + m[2][3],
        ]
    }

    /// Applies the inverse rotation only (world direction to camera direction).
    pub fn rotate_inverse(&self, v: Point3) -> Point3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Inverse of a rigid transform applied to a point (world to camera).
    pub fn inverse_transform_point(&self, p: Point3) -> Point3 {
        self.rotate_inverse(math::sub(p, self.translation()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    pub pose: Pose,
}

impl Default for Camera {
    fn default() -> Self {
        Camera {
            intrinsics: Intrinsics::UNIT,
            pose: Pose::IDENTITY,
        }
    }
}

impl Camera {
    pub fn to_camera(&self, world: Point3) -> Point3 {
        self.pose.inverse_transform_point(world)
    }

    /// Pixel coordinates and depth of a world point. Points at or behind the
    /// image plane yield `None`.
    pub fn project(&self, world: Point3) -> Option<(f64, f64, f64)> {
        let [x, y, z] = self.to_camera(world);
        if z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        Some((k.fx * x / z + k.cx, k.fy * y / z + k.cy, z))
    }

    /// Direction expressed in camera coordinates with the y axis pointing up.
    pub fn direction_y_up(&self, world_dir: Point3) -> Point3 {
        let [x, y, z] = self.pose.rotate_inverse(world_dir);
        [x, -y, -z]
    }
}

/// Points of one object in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPoints {
    pub object: String,
    pub points: Vec<Point3>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Visual {
    DepthSegmentation {
        width: usize,
        height: usize,
        /// Row-major meters.
        depth: Vec<f32>,
        /// Row-major segmentation labels; 0 is background.
        segmentation: Vec<u32>,
        intrinsics: Option<Intrinsics>,
        pose: Pose,
    },
    LabeledPoints {
        objects: Vec<ObjectPoints>,
        camera: Option<Camera>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionPhase {
    Executing,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotState {
    pub gripper_open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_object: Option<String>,
    pub current_action_index: usize,
    pub action_phase: ActionPhase,
    /// Low-level motion in progress within the current subgoal, e.g.
    /// "move to sink". Captions prefer it over the subgoal text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<String>,
}

impl Default for RobotState {
    fn default() -> Self {
        RobotState {
            gripper_open: true,
            held_object: None,
            current_action_index: 0,
            action_phase: ActionPhase::Executing,
            motion: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AudioPayload {
    Label { label: String },
    Embedding { embedding: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioEvent {
    pub start: Timestamp,
    pub end: Timestamp,
    #[serde(flatten)]
    pub payload: AudioPayload,
}

impl AudioEvent {
    pub fn labeled(start: Timestamp, end: Timestamp, label: &str) -> Self {
        AudioEvent {
            start,
            end,
            payload: AudioPayload::Label {
                label: label.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: Timestamp,
    pub visual: Visual,
    pub object_states: BTreeMap<String, String>,
    pub robot: RobotState,
    pub audio_events: Vec<AudioEvent>,
}

impl Frame {
    /// Objects with at least one observed point in this frame.
    pub fn observed_objects(&self, catalog: &Catalog) -> BTreeSet<String> {
        match &self.visual {
            Visual::LabeledPoints { objects, .. } => objects
                .iter()
                .filter(|o| !o.points.is_empty())
                .map(|o| o.object.clone())
                .collect(),
            Visual::DepthSegmentation {
                depth,
                segmentation,
                ..
            } => segmentation
                .iter()
                .zip(depth)
                .filter(|(label, d)| **label != 0 && **d > 0.0)
                .filter_map(|(label, _)| catalog.by_label(*label).map(|o| o.id.clone()))
                .collect(),
        }
    }

    /// Camera for this frame, falling back to the log-level default.
    pub fn camera(&self, fallback: Option<&Camera>) -> Camera {
        match &self.visual {
            Visual::DepthSegmentation {
                intrinsics, pose, ..
            } => Camera {
                intrinsics: intrinsics.unwrap_or(Intrinsics::UNIT),
                pose: *pose,
            },
            Visual::LabeledPoints { camera, .. } => camera
                .or_else(|| fallback.copied())
                .unwrap_or_default(),
        }
    }
}

/// A complete recorded execution: task, declared objects and frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SensoryLog {
    pub task: TaskSpec,
    pub objects: Catalog,
    pub camera: Option<Camera>,
    pub frames: Vec<Frame>,
}

impl SensoryLog {
    pub fn audio_events(&self) -> impl Iterator<Item = &AudioEvent> {
        self.frames.iter().flat_map(|f| f.audio_events.iter())
    }

    pub fn camera_for(&self, frame: &Frame) -> Camera {
        frame.camera(self.camera.as_ref())
    }
}
