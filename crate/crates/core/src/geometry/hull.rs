//! Incremental 3D convex hull used for point-in-hull membership tests.

use std::collections::HashSet;

use super::GeometryError;
use crate::math::{self, Point3};

#[derive(Debug, Clone)]
struct Face {
    vertices: [usize; 3],
    normal: Point3,
    offset: f64,
}

impl Face {
    fn new(points: &[Point3], a: usize, b: usize, c: usize) -> Option<Face> {
        let n = math::cross(
            math::sub(points[b], points[a]),
            math::sub(points[c], points[a]),
        );
        let normal = math::normalize(n)?;
        Some(Face {
            vertices: [a, b, c],
            normal,
            offset: math::dot(normal, points[a]),
        })
    }

    fn signed_distance(&self, p: Point3) -> f64 {
        math::dot(self.normal, p) - self.offset
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.vertices;
        [(a, b), (b, c), (c, a)]
    }
}

/// Convex hull as a set of outward-facing triangular facets.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    faces: Vec<Face>,
    eps: f64,
}

impl ConvexHull {
    pub fn new(input: &[Point3]) -> Result<ConvexHull, GeometryError> {
        let mut seen = HashSet::new();
        let points: Vec<Point3> = input
            .iter()
            .copied()
            .filter(|p| seen.insert(p.map(f64::to_bits)))
            .collect();
        if points.len() < 4 {
            return Err(GeometryError::DegenerateHull);
        }
        let (lo, hi) = super::bounds(&points);
        let diag = math::norm(math::sub(hi, lo));
        let eps = 1e-9 * diag.max(1e-12);

        // Initial tetrahedron from extreme points.
        let p0 = 0;
        let p1 = farthest(&points, |p| math::dist_sq(p, points[p0]));
        let dir = math::sub(points[p1], points[p0]);
        let p2 = farthest(&points, |p| {
            let d = math::cross(dir, math::sub(p, points[p0]));
            math::dot(d, d)
        });
        let plane = math::cross(dir, math::sub(points[p2], points[p0]));
        let p3 = farthest(&points, |p| math::dot(plane, math::sub(p, points[p0])).abs());
        let line_len = math::norm(dir);
        let area = math::norm(plane);
        if line_len <= eps || area <= eps * line_len {
            return Err(GeometryError::DegenerateHull);
        }
        let height = math::dot(plane, math::sub(points[p3], points[p0])).abs() / area;
        if height <= eps {
            return Err(GeometryError::DegenerateHull);
        }

        let inner = math::mean(&[points[p0], points[p1], points[p2], points[p3]]);
        let mut faces = Vec::new();
        for [a, b, c] in [[p0, p1, p2], [p0, p1, p3], [p0, p2, p3], [p1, p2, p3]] {
            let mut face = Face::new(&points, a, b, c).ok_or(GeometryError::DegenerateHull)?;
            if face.signed_distance(inner) > 0.0 {
                face = Face::new(&points, a, c, b).ok_or(GeometryError::DegenerateHull)?;
            }
            faces.push(face);
        }

        for (index, &p) in points.iter().enumerate() {
            if [p0, p1, p2, p3].contains(&index) {
                continue;
            }
            let visible: Vec<bool> = faces.iter().map(|f| f.signed_distance(p) > eps).collect();
            if !visible.iter().any(|v| *v) {
                continue;
            }
            let visible_edges: HashSet<(usize, usize)> = faces
                .iter()
                .zip(&visible)
                .filter(|(_, v)| **v)
                .flat_map(|(f, _)| f.edges())
                .collect();
            let horizon: Vec<(usize, usize)> = visible_edges
                .iter()
                .filter(|(u, v)| !visible_edges.contains(&(*v, *u)))
                .copied()
                .collect();
            let mut kept: Vec<Face> = faces
                .into_iter()
                .zip(&visible)
                .filter(|(_, v)| !**v)
                .map(|(f, _)| f)
                .collect();
            for (u, v) in horizon {
                if let Some(face) = Face::new(&points, u, v, index) {
                    kept.push(face);
                }
            }
            faces = kept;
        }
        Ok(ConvexHull { faces, eps })
    }

    /// Membership with a small tolerance so boundary points count as inside.
    pub fn contains(&self, p: Point3) -> bool {
        self.faces.iter().all(|f| f.signed_distance(p) <= self.eps * 10.0)
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
}

fn farthest(points: &[Point3], key: impl Fn(Point3) -> f64) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, p) in points.iter().enumerate() {
        let value = key(*p);
        if value > best_value {
            best = i;
            best_value = value;
        }
    }
    best
}
