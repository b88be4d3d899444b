//! Temporal aggregation of per-frame clouds into a running scene cloud.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeometryError, SemanticPointCloud};
use crate::config::AggregationConfig;
use crate::math::{self, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AggregationOp {
    Add,
    Update,
    Replace,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationDecision {
    pub object_id: String,
    pub op: AggregationOp,
}

/// Chooses an operation per object id.
///
/// Objects only in `curr` are added; objects in both are updated when the
/// centroid moved at most `d` and replaced otherwise; objects only in `prev`
/// are deleted when held by the robot (their points travel with the gripper)
/// and otherwise kept without a decision.
pub fn decide(
    prev: &SemanticPointCloud,
    curr: &SemanticPointCloud,
    held: Option<&str>,
    cfg: &AggregationConfig,
) -> Vec<AggregationDecision> {
    let mut out = Vec::new();
    for (id, now) in &curr.objects {
        let op = match prev.get(id) {
            None => AggregationOp::Add,
            Some(before) => {
                let moved = math::dist_sq(before.centroid(), now.centroid()).sqrt();
                if moved <= cfg.replace_threshold_d {
                    AggregationOp::Update
                } else {
                    AggregationOp::Replace
                }
            }
        };
        out.push(AggregationDecision {
            object_id: id.clone(),
            op,
        });
    }
    if let Some(held) = held {
        if prev.get(held).is_some() && curr.get(held).is_none() {
            out.push(AggregationDecision {
                object_id: held.to_string(),
                op: AggregationOp::Delete,
            });
        }
    }
    out
}

/// Applies decisions to `prev`. Objects without a decision are kept as is.
pub fn apply(
    prev: &SemanticPointCloud,
    curr: &SemanticPointCloud,
    decisions: &[AggregationDecision],
    cfg: &AggregationConfig,
) -> Result<SemanticPointCloud, GeometryError> {
    let mut out = prev.clone();
    out.t = curr.t;
    for id in curr.appearance_order() {
        out.note_appearance(id);
    }
    for decision in decisions {
        let id = decision.object_id.as_str();
        let unknown = || GeometryError::UnknownDecisionTarget(id.to_string());
        match decision.op {
            AggregationOp::Add | AggregationOp::Replace => {
                let now = curr.get(id).ok_or_else(unknown)?;
                out.insert(now.clone());
            }
            AggregationOp::Update => {
                let now = curr.get(id).ok_or_else(unknown)?;
                let existing = out.objects.get_mut(id).ok_or_else(unknown)?;
                let mut merged = existing.points().to_vec();
                merged.extend_from_slice(now.points());
                let merged = downsample(merged, cfg.downsample_cap, cfg.rng_seed);
                existing.set_points(merged, curr.t);
            }
            AggregationOp::Delete => {
                out.objects.remove(id).ok_or_else(unknown)?;
            }
        }
    }
    Ok(out)
}

pub fn aggregate(
    prev: &SemanticPointCloud,
    curr: &SemanticPointCloud,
    held: Option<&str>,
    cfg: &AggregationConfig,
) -> Result<SemanticPointCloud, GeometryError> {
    apply(prev, curr, &decide(prev, curr, held, cfg), cfg)
}

/// Keeps a seeded uniform subset of at most `cap` points, preserving order.
fn downsample(points: Vec<Point3>, cap: usize, seed: u64) -> Vec<Point3> {
    if points.len() <= cap {
        return points;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = index::sample(&mut rng, points.len(), cap).into_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| points[i]).collect()
}
