use std::io::Write;

use nalgebra::Vector3;

use super::{CameraModel, DepthMap, GeometryError, PixelMask};

/// A set of 3D points in meters, optionally tagged with object labels.
///
/// Label 0 is reserved for background when labels are present.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self {
            points,
            labels: None,
        }
    }

    pub fn with_labels(points: Vec<Vector3<f64>>, labels: Vec<u32>) -> Result<Self, GeometryError> {
        if labels.len() != points.len() {
            return Err(GeometryError::DimensionMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        Ok(Self {
            points,
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64)
    }

    /// Points carrying the given label, as a plain unlabeled cloud.
    pub fn filter_label(&self, label: u32) -> PointCloud {
        PointCloud::new(
            self.label_indices(label)
                .into_iter()
                .map(|i| self.points[i])
                .collect(),
        )
    }

    /// Indices of the points carrying the given label.
    pub fn label_indices(&self, label: u32) -> Vec<usize> {
        match &self.labels {
            None => Vec::new(),
            Some(labels) => labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == label)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// ASCII PLY export. Emits a `uchar label` property when labels are set.
    pub fn write_ply<W: Write>(&self, mut out: W) -> Result<(), GeometryError> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", self.points.len())?;
        writeln!(out, "property float x")?;
        writeln!(out, "property float y")?;
        writeln!(out, "property float z")?;
        if self.labels.is_some() {
            writeln!(out, "property uchar label")?;
        }
        writeln!(out, "end_header")?;
        for (i, p) in self.points.iter().enumerate() {
            match &self.labels {
                Some(labels) => {
                    let label = labels[i].min(u8::MAX as u32) as u8;
                    writeln!(out, "{} {} {} {}", p.x, p.y, p.z, label)?;
                }
                None => writeln!(out, "{} {} {}", p.x, p.y, p.z)?,
            }
        }
        Ok(())
    }

    pub fn to_ply_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_ply(&mut buf).expect("vec write cannot fail");
        String::from_utf8(buf).expect("ply output is ascii")
    }
}

/// Lifts a depth map into a world-frame point cloud through the inverse
/// pinhole model. Pixels are visited in row-major order; invalid or
/// masked-out pixels are omitted.
pub fn back_project(
    depth: &DepthMap,
    cam: &CameraModel,
    mask: Option<&PixelMask>,
) -> Result<PointCloud, GeometryError> {
    back_project_impl(depth, cam, mask, None)
}

/// Like [`back_project`], also attaching each point's label from a
/// row-major per-pixel label map.
pub fn back_project_labeled(
    depth: &DepthMap,
    cam: &CameraModel,
    mask: Option<&PixelMask>,
    labels: &[u32],
) -> Result<PointCloud, GeometryError> {
    back_project_impl(depth, cam, mask, Some(labels))
}

fn back_project_impl(
    depth: &DepthMap,
    cam: &CameraModel,
    mask: Option<&PixelMask>,
    labels: Option<&[u32]>,
) -> Result<PointCloud, GeometryError> {
    if depth.width() != cam.width || depth.height() != cam.height {
        return Err(GeometryError::DimensionMismatch(format!(
            "depth {}x{} vs camera {}x{}",
            depth.width(),
            depth.height(),
            cam.width,
            cam.height
        )));
    }
    if let Some(m) = mask {
        if m.width() != depth.width() || m.height() != depth.height() {
            return Err(GeometryError::DimensionMismatch(format!(
                "mask {}x{} vs depth {}x{}",
                m.width(),
                m.height(),
                depth.width(),
                depth.height()
            )));
        }
    }
    if let Some(l) = labels {
        if l.len() != (depth.width() * depth.height()) as usize {
            return Err(GeometryError::DimensionMismatch(format!(
                "label map has {} entries for {}x{} image",
                l.len(),
                depth.width(),
                depth.height()
            )));
        }
    }

    let mut points = Vec::new();
    let mut point_labels = labels.map(|_| Vec::new());
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            if let Some(m) = mask {
                if !m.get(u, v) {
                    continue;
                }
            }
            let Some(d) = depth.get(u, v) else { continue };
            let p_cam = cam.unproject(u as f64, v as f64, d);
            points.push(cam.pose.apply(&p_cam));
            if let (Some(out), Some(l)) = (&mut point_labels, labels) {
                out.push(l[(v * depth.width() + u) as usize]);
            }
        }
    }
    Ok(PointCloud {
        points,
        labels: point_labels,
    })
}
