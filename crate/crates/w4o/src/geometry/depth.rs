use std::io::{Read, Write};

use super::GeometryError;

/// Per-pixel metric depth with an explicit validity bitmap.
///
/// Invalid pixels carry no depth value at all; valid values are finite and
/// strictly positive. Keeping validity out of band avoids NaN arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
    validity: Vec<bool>,
}

impl DepthMap {
    /// An all-invalid map.
    pub fn new(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self {
            width,
            height,
            values: vec![0.0; n],
            validity: vec![false; n],
        }
    }

    pub fn from_values(
        width: u32,
        height: u32,
        values: Vec<f64>,
        validity: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        let n = (width * height) as usize;
        if values.len() != n || validity.len() != n {
            return Err(GeometryError::InvalidDepthMap(format!(
                "expected {n} entries, got {} values / {} validity bits",
                values.len(),
                validity.len()
            )));
        }
        for (d, valid) in values.iter().zip(&validity) {
            if *valid && !(d.is_finite() && *d > 0.0) {
                return Err(GeometryError::InvalidDepthMap(format!(
                    "valid depth must be finite and positive, got {d}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            values,
            validity,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, u: u32, v: u32) -> Option<f64> {
        let i = (v * self.width + u) as usize;
        self.validity[i].then(|| self.values[i])
    }

    pub fn set(&mut self, u: u32, v: u32, depth: f64) {
        assert!(depth.is_finite() && depth > 0.0, "invalid depth {depth}");
        let i = (v * self.width + u) as usize;
        self.values[i] = depth;
        self.validity[i] = true;
    }

    pub fn invalidate(&mut self, u: u32, v: u32) {
        let i = (v * self.width + u) as usize;
        self.values[i] = 0.0;
        self.validity[i] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|b| **b).count()
    }

    /// Applies `f` to every valid depth value.
    pub fn scale(&mut self, factor: f64) {
        assert!(factor.is_finite() && factor > 0.0);
        for (d, valid) in self.values.iter_mut().zip(&self.validity) {
            if *valid {
                *d *= factor;
            }
        }
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        let w = self.width;
        self.validity
            .iter()
            .enumerate()
            .filter(|(_, valid)| **valid)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w, self.values[i]))
    }

    /// Binary layout: u32 LE width, u32 LE height, then width*height f32 LE
    /// values in row-major order. Invalid pixels are written as 0.0.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<(), GeometryError> {
        out.write_all(&self.width.to_le_bytes())?;
        out.write_all(&self.height.to_le_bytes())?;
        for (d, valid) in self.values.iter().zip(&self.validity) {
            let v = if *valid { *d as f32 } else { 0.0f32 };
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(8 + self.values.len() * 4);
        self.write_binary(&mut buf).expect("vec write cannot fail");
        buf
    }

    /// Inverse of [`DepthMap::write_binary`]; non-positive or non-finite
    /// values deserialize as invalid pixels.
    pub fn read_binary<R: Read>(mut input: R) -> Result<Self, GeometryError> {
        let mut header = [0u8; 8];
        input.read_exact(&mut header)?;
        let width = u32::from_le_bytes(header[0..4].try_into().unwrap());
        let height = u32::from_le_bytes(header[4..8].try_into().unwrap());
        let n = (width as usize) * (height as usize);
        let mut raw = vec![0u8; n * 4];
        input.read_exact(&mut raw)?;
        let mut values = Vec::with_capacity(n);
        let mut validity = Vec::with_capacity(n);
        for chunk in raw.chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
            let valid = v.is_finite() && v > 0.0;
            values.push(if valid { v } else { 0.0 });
            validity.push(valid);
        }
        Self::from_values(width, height, values, validity)
    }

    /// Raw row-major f32 buffer in the wire layout (no header).
    pub fn to_f32_le_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for (d, valid) in self.values.iter().zip(&self.validity) {
            let v = if *valid { *d as f32 } else { 0.0f32 };
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_f32_le_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self, GeometryError> {
        let n = (width as usize) * (height as usize);
        if bytes.len() != n * 4 {
            return Err(GeometryError::InvalidDepthMap(format!(
                "expected {} bytes for {width}x{height}, got {}",
                n * 4,
                bytes.len()
            )));
        }
        let mut header = Vec::with_capacity(8 + bytes.len());
        header.extend_from_slice(&width.to_le_bytes());
        header.extend_from_slice(&height.to_le_bytes());
        header.extend_from_slice(bytes);
        Self::read_binary(header.as_slice())
    }
}
