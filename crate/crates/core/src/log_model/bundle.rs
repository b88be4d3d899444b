//! On-disk log bundle: `manifest.json`, `frames/<n>.json`, optional
//! `depth/<n>.bin` + `seg/<n>.bin` (little-endian), and `audio/events.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AudioEvent, AudioPayload, Camera, Catalog, Frame, Intrinsics, LogError, ObjectPoints, Pose,
    RobotState, SensoryLog, TaskSpec, Timestamp, Visual,
};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    task: TaskSpec,
    objects: Catalog,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    camera: Option<Camera>,
    frames: Vec<FrameEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameEntry {
    t: Timestamp,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameFile {
    t: Timestamp,
    visual: VisualFile,
    #[serde(default)]
    object_states: BTreeMap<String, String>,
    robot: RobotState,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum VisualFile {
    LabeledPoints {
        objects: Vec<ObjectPoints>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        camera: Option<Camera>,
    },
    DepthSegmentation {
        width: usize,
        height: usize,
        depth: String,
        segmentation: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intrinsics: Option<Intrinsics>,
        pose: Pose,
    },
}

fn violation(frame: Option<usize>, field: impl Into<String>, reason: impl Into<String>) -> LogError {
    LogError::SchemaViolation {
        frame,
        field: field.into(),
        reason: reason.into(),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(
    path: &Path,
    frame: Option<usize>,
    field: &str,
) -> Result<T, LogError> {
    let text = fs::read_to_string(path).map_err(|e| LogError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| violation(frame, field, e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LogError> {
    let text = serde_json::to_string_pretty(value).expect("log model serializes");
    fs::write(path, text + "\n").map_err(|e| LogError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_bin(path: &Path) -> Result<Vec<[u8; 4]>, LogError> {
    let bytes = fs::read(path).map_err(|e| LogError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if bytes.len() % 4 != 0 {
        return Err(violation(
            None,
            path.display().to_string(),
            "length is not a multiple of 4 bytes",
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect())
}

fn write_bin(path: &Path, words: impl Iterator<Item = [u8; 4]>) -> Result<(), LogError> {
    let bytes: Vec<u8> = words.flatten().collect();
    fs::write(path, bytes).map_err(|e| LogError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<(), LogError> {
    fs::create_dir_all(path).map_err(|e| LogError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Loads and validates a log bundle directory.
pub fn load_log(dir: &Path) -> Result<SensoryLog, LogError> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(LogError::MissingManifest(manifest_path));
    }
    let manifest: Manifest = read_json(&manifest_path, None, "manifest")?;

    let mut frames = Vec::with_capacity(manifest.frames.len());
    for (index, entry) in manifest.frames.iter().enumerate() {
        let file: FrameFile = read_json(&dir.join(&entry.file), Some(index), "frame")?;
        if file.t != entry.t {
            return Err(violation(
                Some(index),
                "t",
                format!("frame file says {}, manifest says {}", file.t, entry.t),
            ));
        }
        let visual = match file.visual {
            VisualFile::LabeledPoints { objects, camera } => {
                Visual::LabeledPoints { objects, camera }
            }
            VisualFile::DepthSegmentation {
                width,
                height,
                depth,
                segmentation,
                intrinsics,
                pose,
            } => Visual::DepthSegmentation {
                width,
                height,
                depth: read_bin(&dir.join(depth))?
                    .into_iter()
                    .map(f32::from_le_bytes)
                    .collect(),
                segmentation: read_bin(&dir.join(segmentation))?
                    .into_iter()
                    .map(u32::from_le_bytes)
                    .collect(),
                intrinsics,
                pose,
            },
        };
        frames.push(Frame {
            t: file.t,
            visual,
            object_states: file.object_states,
            robot: file.robot,
            audio_events: Vec::new(),
        });
    }

    let audio_path = dir.join("audio").join("events.json");
    if audio_path.is_file() {
        let events: Vec<AudioEvent> = read_json(&audio_path, None, "audio")?;
        for event in events {
            // Attach to the latest frame at or before the event start.
            let slot = frames
                .iter()
                .rposition(|f| f.t <= event.start)
                .unwrap_or(0);
            match frames.get_mut(slot) {
                Some(frame) => frame.audio_events.push(event),
                None => return Err(violation(None, "audio", "audio events in a log without frames")),
            }
        }
    }

    let log = SensoryLog {
        task: manifest.task,
        objects: manifest.objects,
        camera: manifest.camera,
        frames,
    };
    validate_log(&log)?;
    Ok(log)
}

/// Writes a bundle that `load_log` reads back field-for-field.
pub fn save_log(log: &SensoryLog, dir: &Path) -> Result<(), LogError> {
    create_dir(&dir.join("frames"))?;
    create_dir(&dir.join("audio"))?;
    let mut entries = Vec::with_capacity(log.frames.len());
    for (index, frame) in log.frames.iter().enumerate() {
        let visual = match &frame.visual {
            Visual::LabeledPoints { objects, camera } => VisualFile::LabeledPoints {
                objects: objects.clone(),
                camera: *camera,
            },
            Visual::DepthSegmentation {
                width,
                height,
                depth,
                segmentation,
                intrinsics,
                pose,
            } => {
                create_dir(&dir.join("depth"))?;
                create_dir(&dir.join("seg"))?;
                let depth_rel = format!("depth/{index}.bin");
                let seg_rel = format!("seg/{index}.bin");
                write_bin(&dir.join(&depth_rel), depth.iter().map(|d| d.to_le_bytes()))?;
                write_bin(&dir.join(&seg_rel), segmentation.iter().map(|s| s.to_le_bytes()))?;
                VisualFile::DepthSegmentation {
                    width: *width,
                    height: *height,
                    depth: depth_rel,
                    segmentation: seg_rel,
                    intrinsics: *intrinsics,
                    pose: *pose,
                }
            }
        };
        let rel = format!("frames/{index}.json");
        write_json(
            &dir.join(&rel),
            &FrameFile {
                t: frame.t,
                visual,
                object_states: frame.object_states.clone(),
                robot: frame.robot.clone(),
            },
        )?;
        entries.push(FrameEntry {
            t: frame.t,
            file: rel,
        });
    }
    let events: Vec<&AudioEvent> = log.audio_events().collect();
    write_json(&dir.join("audio").join("events.json"), &events)?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            task: log.task.clone(),
            objects: log.objects.clone(),
            camera: log.camera,
            frames: entries,
        },
    )
}

/// Checks every structural invariant of an in-memory log.
pub fn validate_log(log: &SensoryLog) -> Result<(), LogError> {
    if log.task.plan.is_empty() {
        return Err(violation(None, "task.plan", "plan must not be empty"));
    }
    if log.task.executable_actions.is_empty() {
        return Err(violation(
            None,
            "task.executable_actions",
            "at least one executable action is required",
        ));
    }
    let mut ids = BTreeSet::new();
    let mut labels = BTreeSet::new();
    for decl in log.objects.objects() {
        if !ids.insert(decl.id.as_str()) {
            return Err(violation(None, "objects", format!("duplicate id {}", decl.id)));
        }
        if decl.label == 0 || !labels.insert(decl.label) {
            return Err(violation(
                None,
                "objects",
                format!("label {} of {} is zero or duplicated", decl.label, decl.id),
            ));
        }
    }
    let declared = |id: &str| log.objects.contains(id);

    for (index, pair) in log.frames.windows(2).enumerate() {
        if pair[1].t <= pair[0].t {
            return Err(LogError::UnsortedFrames { index: index + 1 });
        }
    }

    for (index, frame) in log.frames.iter().enumerate() {
        let at = Some(index);
        match &frame.visual {
            Visual::LabeledPoints { objects, .. } => {
                for group in objects {
                    if !declared(&group.object) {
                        return Err(violation(
                            at,
                            "visual.objects",
                            format!("undeclared object {}", group.object),
                        ));
                    }
                    if group.points.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(violation(at, "visual.objects", "non-finite point"));
                    }
                }
            }
            Visual::DepthSegmentation {
                width,
                height,
                depth,
                segmentation,
                pose,
                ..
            } => {
                let expected = width * height;
                if depth.len() != expected || segmentation.len() != expected {
                    return Err(violation(
                        at,
                        "visual.depth",
                        format!(
                            "expected {expected} values, found depth {} / segmentation {}",
                            depth.len(),
                            segmentation.len()
                        ),
                    ));
                }
                if depth.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(violation(at, "visual.depth", "depth must be finite and >= 0"));
                }
                if let Some(label) = segmentation
                    .iter()
                    .find(|l| **l != 0 && log.objects.by_label(**l).is_none())
                {
                    return Err(violation(
                        at,
                        "visual.segmentation",
                        format!("undeclared label {label}"),
                    ));
                }
                if !pose.is_finite() {
                    return Err(violation(at, "visual.pose", "non-finite pose"));
                }
            }
        }
        if let Some(id) = frame.object_states.keys().find(|id| !declared(id)) {
            return Err(violation(at, "object_states", format!("undeclared object {id}")));
        }
        let robot = &frame.robot;
        if let Some(held) = &robot.held_object {
            if !declared(held) {
                return Err(violation(at, "robot.held_object", format!("undeclared object {held}")));
            }
            if robot.gripper_open {
                return Err(violation(
                    at,
                    "robot.gripper_open",
                    "gripper must be closed while holding an object",
                ));
            }
        }
        if robot.current_action_index >= log.task.plan.len() {
            return Err(violation(
                at,
                "robot.current_action_index",
                format!(
                    "index {} out of range for a {}-step plan",
                    robot.current_action_index,
                    log.task.plan.len()
                ),
            ));
        }
        for event in &frame.audio_events {
            if event.start > event.end {
                return Err(violation(at, "audio", "event starts after it ends"));
            }
            if let AudioPayload::Embedding { embedding } = &event.payload {
                let norm = embedding.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(violation(at, "audio.embedding", format!("norm {norm} is not 1")));
                }
            }
        }
    }
    Ok(())
}
