//! Hot-pixel detection from dark captures and neighbour-mean inpainting.

use crate::cube::{sum_image, PhotonCube};
use crate::error::{Error, Result};
use crate::image::IntensityImage;

/// Threshold applied when the caller has no better estimate.
pub const DEFAULT_HOT_PIXEL_THRESHOLD: f64 = 0.5;

/// Per-pixel flag, `true` where the pixel is hot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HotPixelMask {
    height: usize,
    width: usize,
    mask: Vec<bool>,
}

impl HotPixelMask {
    pub fn new(height: usize, width: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != height * width {
            return Err(Error::dims(format!(
                "mask has {} entries for a {height}x{width} frame",
                mask.len()
            )));
        }
        Ok(Self { height, width, mask })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            mask: vec![false; height * width],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn is_hot(&self, y: usize, x: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Marks pixels whose mean bit value over a dark capture exceeds `rate_threshold`.
pub fn detect_hot_pixels(dark_cube: &PhotonCube, rate_threshold: f64) -> Result<HotPixelMask> {
    if !(rate_threshold > 0.0 && rate_threshold < 1.0) {
        return Err(Error::param(format!(
            "hot-pixel threshold must lie in (0, 1), got {rate_threshold}"
        )));
    }
    let planes = dark_cube.planes() as f64;
    let sums = sum_image(dark_cube, 0, dark_cube.planes())?;
    let mask = sums.values().iter().map(|&s| s / planes > rate_threshold).collect();
    HotPixelMask::new(dark_cube.height(), dark_cube.width(), mask)
}

/// Replaces masked pixels with the mean of their known 8-neighbours.
///
/// Pixels with no known neighbour are filled in later sweeps, once a neighbour has been
/// filled. Each sweep only reads values known before it started, so the result does not
/// depend on scan order.
pub fn inpaint_mask(image: &IntensityImage, mask: &HotPixelMask) -> Result<IntensityImage> {
    let (h, w) = image.dims();
    if mask.dims() != (h, w) {
        return Err(Error::dims("hot-pixel mask and image differ in size"));
    }
    if mask.count() == h * w {
        return Err(Error::param("cannot inpaint a fully masked image"));
    }
    let mut out = image.clone();
    let mut known: Vec<bool> = mask.as_slice().iter().map(|&m| !m).collect();
    let mut pending: Vec<usize> = (0..h * w).filter(|&i| !known[i]).collect();
    while !pending.is_empty() {
        let mut filled = Vec::new();
        for &i in &pending {
            let (y, x) = (i / w, i % w);
            let mut total = 0.0;
            let mut n = 0u32;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                    if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if known[j] {
                        total += out.values()[j];
                        n += 1;
                    }
                }
            }
            if n > 0 {
                filled.push((i, total / n as f64));
            }
        }
        // an unmasked pixel exists, so every sweep fills at least one pixel
        debug_assert!(!filled.is_empty());
        for &(i, v) in &filled {
            out.values_mut()[i] = v;
            known[i] = true;
        }
        pending.retain(|&i| !known[i]);
    }
    Ok(out)
}
