use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::geometry::{PointCloud, RigidTransform};

/// Widest object the parallel gripper can close around.
pub const MAX_GRIPPER_WIDTH: f64 = 0.08;

const CENTROID_WEIGHT: f64 = 0.5;
const GRAVITY_WEIGHT: f64 = 0.5;

/// Candidate gripper placement. The gripper frame approaches along +z
/// (pointing down in the world) and closes along its x axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub pose: RigidTransform,
    pub width: f64,
    pub score: f64,
}

/// Deterministic top-down antipodal proposals: slices along the object's
/// longest horizontal axis, closing across it, scored by closeness to the
/// centroid and approach-gravity alignment, sorted best first.
pub fn propose_grasps(
    object_cloud: &PointCloud,
    max_k: usize,
) -> Result<Vec<GraspPose>, PolicyError> {
    if object_cloud.is_empty() {
        return Err(PolicyError::EmptyCloud);
    }
    let points = &object_cloud.points;
    let centroid = object_cloud.centroid().expect("non-empty");
    let up = Vector3::z();

    let long_axis = longest_horizontal_axis(points, &centroid, &up);
    let closing = up.cross(&long_axis).normalize();

    let closing_extent = extent_along(points, &closing);
    if closing_extent > MAX_GRIPPER_WIDTH {
        return Err(PolicyError::NoCandidates(format!(
            "object spans {closing_extent:.3} m across the closing axis, gripper max {MAX_GRIPPER_WIDTH} m"
        )));
    }

    // Gripper frame: x closes, z approaches straight down.
    let approach = -up;
    let rotation = Matrix3::from_columns(&[closing, approach.cross(&closing), approach]);

    let projections: Vec<f64> = points.iter().map(|p| p.dot(&long_axis)).collect();
    let lo = projections.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = projections.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cloud_radius = points
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0, f64::max);

    let slices = max_k.max(1);
    let span = (hi - lo).max(1e-12);
    let mut grasps = Vec::new();
    for s in 0..slices {
        let a = lo + span * s as f64 / slices as f64;
        let b = lo + span * (s + 1) as f64 / slices as f64;
        let members: Vec<&Vector3<f64>> = points
            .iter()
            .zip(&projections)
            .filter(|(_, &t)| t >= a && (t < b || (s == slices - 1 && t <= b)))
            .map(|(p, _)| p)
            .collect();
        if members.is_empty() {
            continue;
        }
        let center = members.iter().copied().sum::<Vector3<f64>>() / members.len() as f64;
        let normalized_dist = if cloud_radius > 0.0 {
            ((center - centroid).norm() / cloud_radius).min(1.0)
        } else {
            0.0
        };
        let alignment = approach.dot(&-up).clamp(0.0, 1.0);
        grasps.push(GraspPose {
            pose: RigidTransform::new(rotation, center).expect("orthonormal frame"),
            width: closing_extent.max(1e-3),
            score: CENTROID_WEIGHT * (1.0 - normalized_dist) + GRAVITY_WEIGHT * alignment,
        });
    }
    grasps.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    Ok(grasps)
}

/// Principal axis with the largest horizontal footprint; falls back to +x
/// for degenerate (vertical-line) clouds.
fn longest_horizontal_axis(
    points: &[Vector3<f64>],
    centroid: &Vector3<f64>,
    up: &Vector3<f64>,
) -> Vector3<f64> {
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    for idx in order {
        let axis = eig.eigenvectors.column(idx).into_owned();
        let horizontal = axis - up * axis.dot(up);
        if horizontal.norm() > 0.3 {
            return horizontal.normalize();
        }
    }
    Vector3::x()
}

fn extent_along(points: &[Vector3<f64>], axis: &Vector3<f64>) -> f64 {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = p.dot(axis);
        (lo.min(t), hi.max(t))
    });
    hi - lo
}

/// Keeps grasps whose center lies within `threshold` of the nearest
/// target point and returns the best-scored survivor; exact score ties go
/// to the lowest original index.
pub fn filter_grasps(
    grasps: &[GraspPose],
    target_points: &PointCloud,
    threshold: f64,
) -> Result<GraspPose, PolicyError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in grasps.iter().enumerate() {
        let dist = target_points
            .points
            .iter()
            .map(|p| (p - g.pose.translation()).norm())
            .fold(f64::INFINITY, f64::min);
        if dist <= threshold && best.is_none_or(|(_, s)| g.score > s) {
            best = Some((i, g.score));
        }
    }
    best.map(|(i, _)| grasps[i].clone())
        .ok_or(PolicyError::NoFeasibleGrasp)
}
