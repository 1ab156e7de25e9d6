use image::{ImageBuffer, ImageFormat, Rgb};
use std::io::Cursor;

/// 8-bit RGB raster, row-major. Equality is exact byte equality, which the
/// oracle backends rely on to recognize previously rendered scenes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0, 0, 0]; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        self.pixels[(v * self.width + u) as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, rgb: [u8; 3]) {
        self.pixels[(v * self.width + u) as usize] = rgb;
    }

    /// Flat RGB bytes, row-major; stable key for image identity.
    pub fn raw_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn to_png(&self) -> Vec<u8> {
        let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_raw(self.width, self.height, self.raw_bytes())
                .expect("pixel buffer matches dimensions");
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .expect("in-memory png encode cannot fail");
        out.into_inner()
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, String> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| format!("png decode: {e}"))?
            .into_rgb8();
        let (width, height) = img.dimensions();
        let pixels = img
            .into_raw()
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_lossless() {
        let mut img = RgbImage::new(17, 9);
        for v in 0..9 {
            for u in 0..17 {
                img.set(u, v, [u as u8 * 13, v as u8 * 27, 255 - u as u8]);
            }
        }
        let back = RgbImage::from_png(&img.to_png()).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn png_encoding_is_deterministic() {
        let mut img = RgbImage::new(8, 8);
        img.set(3, 4, [1, 2, 3]);
        assert_eq!(img.to_png(), img.to_png());
    }
}
