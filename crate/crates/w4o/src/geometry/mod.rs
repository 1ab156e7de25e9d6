//! Camera models, depth maps, point clouds and rigid transforms.
//!
//! Conventions: pinhole camera with +z forward, +x right, +y down, pixel
//! `u` along the image width. Depth values are the camera-frame z
//! coordinate in meters, not the ray length. All operations here are pure
//! functions over immutable inputs.

mod camera;
mod cloud;
mod depth;
mod transform;
mod umeyama;

pub use camera::CameraModel;
pub use cloud::{back_project, back_project_labeled, PointCloud};
pub use depth::DepthMap;
pub use transform::RigidTransform;
pub use umeyama::{umeyama_align, umeyama_align_weighted, Alignment, CorrespondenceSet};

use thiserror::Error;

/// Tolerance for rotation orthonormality and determinant checks.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point has non-positive depth (z = {0})")]
    NonPositiveDepth(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("too few points for alignment: {0} < 3")]
    TooFewPoints(usize),
    #[error("degenerate point configuration (covariance rank < 2)")]
    DegenerateConfiguration,
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid depth map: {0}")]
    InvalidDepthMap(String),
    #[error("invalid correspondences: {0}")]
    InvalidCorrespondences(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boolean mask over the pixels of a `width` x `height` image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    pub fn filled(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![true; (width * height) as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut mask = Self::new(width, height);
        for v in 0..height {
            for u in 0..width {
                mask.bits[(v * width + u) as usize] = f(u, v);
            }
        }
        mask
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[(v * self.width + u) as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, value: bool) {
        self.bits[(v * self.width + u) as usize] = value;
    }

    /// Number of set pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn union(&self, other: &PixelMask) -> PixelMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        PixelMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &PixelMask) -> PixelMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        PixelMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }
}
