//! Data model for recorded robot executions and task specifications.

mod bundle;
mod frame;
mod task;
mod time;

use std::path::PathBuf;

use thiserror::Error;

pub use bundle::{load_log, save_log, validate_log};
pub use frame::{
    ActionPhase, AudioEvent, AudioPayload, Camera, Frame, Intrinsics, ObjectPoints, Pose,
    RobotState, SensoryLog, Visual,
};
pub use task::{
    validate_task, Catalog, GoalPredicate, ObjectDecl, PlannedAction, PredicateKind, TaskSpec,
    TaskWarning, Verb,
};
pub use time::{ParseTimestampError, Timestamp};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("missing manifest at {0}")]
    MissingManifest(PathBuf),
    #[error("schema violation{} in {field}: {reason}", frame.map(|i| format!(" at frame {i}")).unwrap_or_default())]
    SchemaViolation {
        frame: Option<usize>,
        field: String,
        reason: String,
    },
    #[error("frame {index} is not later than its predecessor")]
    UnsortedFrames { index: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::relations::RelationName;

    fn decl(id: &str, class: &str, label: u32) -> ObjectDecl {
        ObjectDecl {
            id: id.into(),
            class_name: class.into(),
            display_name: None,
            label,
        }
    }

    fn small_log() -> SensoryLog {
        let task = TaskSpec {
            task_name: "heat pot".into(),
            goal_text: "a pot is on top of a stove burner that is turned on".into(),
            goal: vec![
                GoalPredicate::relation("pot-1", RelationName::OnTopOf, "stoveburner-1"),
                GoalPredicate::state("stoveburner-1", "turned on"),
            ],
            plan: vec![
                PlannedAction::new("pick up pot", Verb::PickUp, &["pot-1"]),
                PlannedAction::new("put pot on stove burner", Verb::PutOn, &["pot-1", "stoveburner-1"]),
            ],
            executable_actions: vec!["pick_up (pot-1)".into(), "put_on (pot-1, stoveburner-1)".into()],
            audio_label_set: vec!["something drops".into()],
        };
        let frame = |secs: u32, held: Option<&str>| Frame {
            t: Timestamp::from_secs(secs),
            visual: Visual::LabeledPoints {
                objects: vec![ObjectPoints {
                    object: "pot-1".into(),
                    points: vec![[0.1, 0.2, 0.3], [0.125, 0.2, 0.3]],
                }],
                camera: None,
            },
            object_states: BTreeMap::from([("pot-1".to_string(), "empty and clean".to_string())]),
            robot: RobotState {
                gripper_open: held.is_none(),
                held_object: held.map(str::to_string),
                ..RobotState::default()
            },
            audio_events: vec![],
        };
        let mut frames = vec![frame(0, None), frame(1, Some("pot-1")), frame(2, None)];
        frames[2].audio_events.push(AudioEvent::labeled(
            Timestamp::from_secs(2),
            Timestamp::from_secs(3),
            "something drops",
        ));
        let depth_frame = Frame {
            t: Timestamp::from_secs(3),
            visual: Visual::DepthSegmentation {
                width: 2,
                height: 1,
                depth: vec![1.5, 0.0],
                segmentation: vec![1, 0],
                intrinsics: Some(Intrinsics {
                    fx: 500.0,
                    fy: 500.0,
                    cx: 1.0,
                    cy: 0.5,
                }),
                pose: Pose::IDENTITY,
            },
            object_states: BTreeMap::new(),
            robot: RobotState {
                current_action_index: 1,
                action_phase: ActionPhase::Ended,
                ..RobotState::default()
            },
            audio_events: vec![],
        };
        frames.push(depth_frame);
        SensoryLog {
            task,
            objects: Catalog::new(vec![decl("pot-1", "pot", 1), decl("stoveburner-1", "stove burner", 2)]),
            camera: Some(Camera::default()),
            frames,
        }
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let log = small_log();
        save_log(&log, dir.path()).unwrap();
        let loaded = load_log(dir.path()).unwrap();
        assert_eq!(loaded, log);
    }

    #[test]
    fn frames_come_back_in_time_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = small_log();
        log.frames.truncate(3);
        save_log(&log, dir.path()).unwrap();
        let loaded = load_log(dir.path()).unwrap();
        let times: Vec<u32> = loaded.frames.iter().map(|f| f.t.secs()).collect();
        assert_eq!(times, vec![0, 1, 2]);
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_log(dir.path()), Err(LogError::MissingManifest(_))));
    }

    #[test]
    fn undeclared_object_is_a_schema_violation() {
        let mut log = small_log();
        if let Visual::LabeledPoints { objects, .. } = &mut log.frames[1].visual {
            objects[0].object = "kettle-9".into();
        }
        let err = validate_log(&log).unwrap_err();
        assert!(matches!(err, LogError::SchemaViolation { frame: Some(1), .. }), "{err}");
    }

    #[test]
    fn undeclared_segmentation_label_is_rejected() {
        let mut log = small_log();
        if let Visual::DepthSegmentation { segmentation, .. } = &mut log.frames[3].visual {
            segmentation[1] = 42;
        }
        assert!(matches!(
            validate_log(&log),
            Err(LogError::SchemaViolation { frame: Some(3), .. })
        ));
    }

    #[test]
    fn unsorted_frames_are_rejected() {
        let mut log = small_log();
        log.frames.swap(0, 1);
        assert!(matches!(validate_log(&log), Err(LogError::UnsortedFrames { index: 1 })));
    }

    #[test]
    fn negative_depth_is_rejected() {
        let mut log = small_log();
        if let Visual::DepthSegmentation { depth, .. } = &mut log.frames[3].visual {
            depth[0] = -1.0;
        }
        assert!(validate_log(&log).is_err());
    }

    #[test]
    fn holding_with_open_gripper_is_rejected() {
        let mut log = small_log();
        log.frames[1].robot.gripper_open = true;
        assert!(validate_log(&log).is_err());
    }

    #[test]
    fn audio_embedding_must_be_unit_norm() {
        let mut log = small_log();
        log.frames[0].audio_events.push(AudioEvent {
            start: Timestamp::ZERO,
            end: Timestamp::ZERO,
            payload: AudioPayload::Embedding {
                embedding: vec![0.5, 0.5],
            },
        });
        assert!(validate_log(&log).is_err());
        log.frames[0].audio_events[0].payload = AudioPayload::Embedding {
            embedding: vec![0.6, 0.8],
        };
        assert!(validate_log(&log).is_ok());
    }
}
