//! Semantic point clouds: per-frame projection and temporal aggregation.

mod aggregate;
mod hull;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggregate::{aggregate, apply, decide, AggregationDecision, AggregationOp};
pub use hull::ConvexHull;

use crate::log_model::{Catalog, Frame, Timestamp, Visual};
use crate::math::{self, Point3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("depth frame has no camera intrinsics")]
    MissingIntrinsics,
    #[error("depth is {depth} values but segmentation is {segmentation}")]
    ShapeMismatch { depth: usize, segmentation: usize },
    #[error("aggregation decision targets unknown object {0}")]
    UnknownDecisionTarget(String),
    #[error("fewer than four non-coplanar points")]
    DegenerateHull,
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn from_points(points: &[Point3]) -> Aabb {
        let (min, max) = bounds(points);
        Aabb { min, max }
    }

    pub fn center(&self) -> Point3 {
        math::scale(math::add(self.min, self.max), 0.5)
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_xy(&self, p: Point3) -> bool {
        (0..2).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Euclidean gap between two boxes; 0 when they touch or overlap. Never
    /// exceeds the true minimum distance between the enclosed points.
    pub fn gap(&self, other: &Aabb) -> f64 {
        let mut sq = 0.0;
        for i in 0..3 {
            let d = (other.min[i] - self.max[i]).max(self.min[i] - other.max[i]).max(0.0);
            sq += d * d;
        }
        sq.sqrt()
    }
}

pub(crate) fn bounds(points: &[Point3]) -> (Point3, Point3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

/// Points of one object instance plus derived bounding box and centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    object_id: String,
    class_name: String,
    points: Vec<Point3>,
    bbox: Aabb,
    centroid: Point3,
    last_seen: Timestamp,
}

impl ObjectInstance {
    /// Returns `None` for an empty point set.
    pub fn new(
        object_id: impl Into<String>,
        class_name: impl Into<String>,
        points: Vec<Point3>,
        last_seen: Timestamp,
    ) -> Option<ObjectInstance> {
        if points.is_empty() {
            return None;
        }
        Some(ObjectInstance {
            object_id: object_id.into(),
            class_name: class_name.into(),
            bbox: Aabb::from_points(&points),
            centroid: math::mean(&points),
            points,
            last_seen,
        })
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    /// Mean of the points.
    pub fn centroid(&self) -> Point3 {
        self.centroid
    }

    pub fn last_seen(&self) -> Timestamp {
        self.last_seen
    }

    pub(crate) fn set_points(&mut self, points: Vec<Point3>, seen: Timestamp) {
        debug_assert!(!points.is_empty());
        self.bbox = Aabb::from_points(&points);
        self.centroid = math::mean(&points);
        self.points = points;
        self.last_seen = seen;
    }
}

/// Object instances keyed by id, plus the order in which objects were first
/// ever observed (kept across REPLACE and DELETE).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemanticPointCloud {
    pub objects: BTreeMap<String, ObjectInstance>,
    pub t: Timestamp,
    appearance: Vec<String>,
}

impl SemanticPointCloud {
    pub fn empty(t: Timestamp) -> Self {
        SemanticPointCloud {
            objects: BTreeMap::new(),
            t,
            appearance: Vec::new(),
        }
    }

    /// Inserts or replaces an instance, recording first appearance.
    pub fn insert(&mut self, instance: ObjectInstance) {
        self.note_appearance(instance.object_id());
        self.objects.insert(instance.object_id.clone(), instance);
    }

    pub(crate) fn note_appearance(&mut self, id: &str) {
        if !self.appearance.iter().any(|a| a == id) {
            self.appearance.push(id.to_string());
        }
    }

    pub fn get(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.get(id)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Every object id ever observed, in first-appearance order.
    pub fn appearance_order(&self) -> &[String] {
        &self.appearance
    }

    /// Rank of an id in first-appearance order; unseen ids sort last.
    pub fn appearance_rank(&self, id: &str) -> usize {
        self.appearance
            .iter()
            .position(|a| a == id)
            .unwrap_or(usize::MAX)
    }
}

/// Lifts one frame into a per-frame semantic cloud.
///
/// Depth pixels back-project as `pose * ((u - cx) d / fx, (v - cy) d / fy, d)`;
/// zero depth and background label 0 are dropped. Labeled-point payloads pass
/// through grouped by object.
pub fn project_frame(frame: &Frame, catalog: &Catalog) -> Result<SemanticPointCloud, GeometryError> {
    let mut groups: Vec<(String, Vec<Point3>)> = Vec::new();
    let mut push = |id: &str, p: Point3| match groups.iter_mut().find(|(g, _)| g == id) {
        Some((_, pts)) => pts.push(p),
        None => groups.push((id.to_string(), vec![p])),
    };
    match &frame.visual {
        Visual::LabeledPoints { objects, .. } => {
            for group in objects {
                for p in &group.points {
                    push(&group.object, *p);
                }
            }
        }
        Visual::DepthSegmentation {
            width,
            depth,
            segmentation,
            intrinsics,
            pose,
            ..
        } => {
            if depth.len() != segmentation.len() {
                return Err(GeometryError::ShapeMismatch {
                    depth: depth.len(),
                    segmentation: segmentation.len(),
                });
            }
            let k = intrinsics.ok_or(GeometryError::MissingIntrinsics)?;
            for (index, (&d, &label)) in depth.iter().zip(segmentation).enumerate() {
                if label == 0 || d <= 0.0 {
                    continue;
                }
                let Some(decl) = catalog.by_label(label) else {
                    continue;
                };
                let d = d as f64;
                let u = (index % width) as f64;
                let v = (index / width) as f64;
                let cam = [(u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d];
                push(&decl.id, pose.transform_point(cam));
            }
        }
    }
    let mut cloud = SemanticPointCloud::empty(frame.t);
    for (id, points) in groups {
        let class = catalog.class_of(&id).to_string();
        if let Some(instance) = ObjectInstance::new(id, class, points, frame.t) {
            cloud.insert(instance);
        }
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::log_model::{Intrinsics, ObjectDecl, Pose, RobotState};

    fn catalog() -> Catalog {
        Catalog::new(vec![ObjectDecl {
            id: "box-7".into(),
            class_name: "box".into(),
            display_name: None,
            label: 7,
        }])
    }

    fn depth_frame(w: usize, h: usize, depth: Vec<f32>, seg: Vec<u32>, k: Option<Intrinsics>, pose: Pose) -> Frame {
        Frame {
            t: Timestamp::from_secs(3),
            visual: Visual::DepthSegmentation {
                width: w,
                height: h,
                depth,
                segmentation: seg,
                intrinsics: k,
                pose,
            },
            object_states: BTreeMap::new(),
            robot: RobotState::default(),
            audio_events: vec![],
        }
    }

    #[test]
    fn pinhole_identity_single_pixel() {
        let f = depth_frame(1, 1, vec![2.0], vec![7], Some(Intrinsics::UNIT), Pose::IDENTITY);
        let cloud = project_frame(&f, &catalog()).unwrap();
        assert_eq!(cloud.get("box-7").unwrap().points(), &[[0.0, 0.0, 2.0]]);
    }

    #[test]
    fn zero_depth_gives_empty_cloud() {
        let f = depth_frame(2, 2, vec![0.0; 4], vec![7; 4], Some(Intrinsics::UNIT), Pose::IDENTITY);
        assert!(project_frame(&f, &catalog()).unwrap().is_empty());
    }

    #[test]
    fn background_pixels_are_dropped() {
        let f = depth_frame(2, 1, vec![1.0, 1.0], vec![0, 7], Some(Intrinsics::UNIT), Pose::IDENTITY);
        assert_eq!(project_frame(&f, &catalog()).unwrap().get("box-7").unwrap().points().len(), 1);
    }

    #[test]
    fn missing_intrinsics_and_shape_mismatch() {
        let f = depth_frame(1, 1, vec![1.0], vec![7], None, Pose::IDENTITY);
        assert_eq!(project_frame(&f, &catalog()), Err(GeometryError::MissingIntrinsics));
        let f = depth_frame(2, 1, vec![1.0, 1.0], vec![7], Some(Intrinsics::UNIT), Pose::IDENTITY);
        assert!(matches!(
            project_frame(&f, &catalog()),
            Err(GeometryError::ShapeMismatch { .. })
        ));
    }

    /// An 8x8 view filled by the front face of a unit cube at 2 m depth,
    /// seen through a translated camera. The analytic centroid of the
    /// back-projected pixel grid is computed in closed form.
    #[test]
    fn unit_cube_face_centroid_matches_closed_form() {
        let k = Intrinsics {
            fx: 4.0,
            fy: 4.0,
            cx: 3.5,
            cy: 3.5,
        };
        let mut pose = Pose::IDENTITY;
        pose.0[0][3] = 0.25;
        pose.0[1][3] = -1.0;
        pose.0[2][3] = 0.5;
        let d = 2.0f64;
        let f = depth_frame(8, 8, vec![d as f32; 64], vec![7; 64], Some(k), pose);
        let cloud = project_frame(&f, &catalog()).unwrap();
        let obj = cloud.get("box-7").unwrap();
        assert_eq!(obj.points().len(), 64);
        // mean over u of (u - cx) is (7/2 - cx) = 0, same for v.
        let mean_u = (0..8).map(|u| u as f64).sum::<f64>() / 8.0;
        let expected = [
            (mean_u - k.cx) * d / k.fx + 0.25,
            (mean_u - k.cy) * d / k.fy - 1.0,
            d + 0.5,
        ];
        for i in 0..3 {
            assert!((obj.centroid()[i] - expected[i]).abs() < 1e-6);
        }
        // Face spans (0 - 3.5) * 2 / 4 .. (7 - 3.5) * 2 / 4 in camera x.
        assert!((obj.bbox().min[0] - (-1.75 + 0.25)).abs() < 1e-6);
        assert!((obj.bbox().max[0] - (1.75 + 0.25)).abs() < 1e-6);
    }

    #[test]
    fn aabb_gap_lower_bounds_distance() {
        let a = Aabb::from_points(&[[0.0; 3], [1.0, 1.0, 1.0]]);
        let b = Aabb::from_points(&[[2.0, 0.0, 0.0], [3.0, 1.0, 1.0]]);
        assert_eq!(a.gap(&b), 1.0);
        assert_eq!(a.gap(&a), 0.0);
    }
}
