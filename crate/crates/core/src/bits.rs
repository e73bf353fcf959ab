//! Bit-packed binary volumes.
//!
//! Storage layout: planes are stored back to back; each plane is `height` rows, each row
//! occupies `ceil(width / 8)` bytes, and pixel `x` of a row lives in bit `x % 8` of byte
//! `x / 8` (least-significant bit first). Padding bits at the end of a row are always zero.

use crate::error::{Error, Result};

#[inline]
pub fn row_bytes(width: usize) -> usize {
    width.div_ceil(8)
}

/// Borrowed view of one bit-plane.
#[derive(Debug, Clone, Copy)]
pub struct PlaneRef<'a> {
    data: &'a [u8],
    height: usize,
    width: usize,
}

impl<'a> PlaneRef<'a> {
    pub fn new(data: &'a [u8], height: usize, width: usize) -> Result<Self> {
        if data.len() != height * row_bytes(width) {
            return Err(Error::dims(format!(
                "plane of {}x{} needs {} bytes, got {}",
                height,
                width,
                height * row_bytes(width),
                data.len()
            )));
        }
        Ok(Self {
            data,
            height,
            width,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bytes(&self) -> &'a [u8] {
        self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &'a [u8] {
        let rb = row_bytes(self.width);
        &self.data[y * rb..(y + 1) * rb]
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        debug_assert!(y < self.height && x < self.width);
        let rb = row_bytes(self.width);
        (self.data[y * rb + x / 8] >> (x % 8)) & 1 == 1
    }

    /// Calls `f(y, x)` for every set pixel, in raster order.
    #[inline]
    pub fn for_each_one(&self, mut f: impl FnMut(usize, usize)) {
        let rb = row_bytes(self.width);
        for (y, row) in self.data.chunks_exact(rb).enumerate() {
            for (bi, &byte) in row.iter().enumerate() {
                let mut b = byte;
                while b != 0 {
                    let bit = b.trailing_zeros() as usize;
                    f(y, bi * 8 + bit);
                    b &= b - 1;
                }
            }
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.data.iter().map(|b| b.count_ones() as u64).sum()
    }
}

/// Owned `planes x height x width` packed binary volume.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVolume {
    planes: usize,
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BitVolume {
    pub fn zeros(planes: usize, height: usize, width: usize) -> Result<Self> {
        if planes == 0 || height == 0 || width == 0 {
            return Err(Error::param(format!(
                "volume dimensions must be nonzero, got {planes}x{height}x{width}"
            )));
        }
        Ok(Self {
            planes,
            height,
            width,
            data: vec![0; planes * height * row_bytes(width)],
        })
    }

    /// Builds a volume from a predicate evaluated at every `(t, y, x)`.
    pub fn from_fn(
        planes: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let mut v = Self::zeros(planes, height, width)?;
        for t in 0..planes {
            for y in 0..height {
                for x in 0..width {
                    if f(t, y, x) {
                        v.set(t, y, x, true);
                    }
                }
            }
        }
        Ok(v)
    }

    /// Wraps packed bytes, rejecting wrong lengths and nonzero padding.
    pub fn from_packed(planes: usize, height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        let expected = Self::zeros(planes, height, width)?.data.len();
        if data.len() != expected {
            return Err(Error::Format(format!(
                "packed volume needs {expected} bytes, got {}",
                data.len()
            )));
        }
        let v = Self {
            planes,
            height,
            width,
            data,
        };
        if !v.padding_is_zero() {
            return Err(Error::Format("nonzero row padding bits".into()));
        }
        Ok(v)
    }

    /// Packs an unpacked `t, y, x`-ordered array of 0/1 bytes.
    pub fn pack(planes: usize, height: usize, width: usize, unpacked: &[u8]) -> Result<Self> {
        if unpacked.len() != planes * height * width {
            return Err(Error::dims(format!(
                "expected {} unpacked values, got {}",
                planes * height * width,
                unpacked.len()
            )));
        }
        if let Some(bad) = unpacked.iter().find(|&&v| v > 1) {
            return Err(Error::param(format!("binary values must be 0 or 1, got {bad}")));
        }
        Self::from_fn(planes, height, width, |t, y, x| {
            unpacked[(t * height + y) * width + x] == 1
        })
    }

    /// One byte (0 or 1) per voxel in `t, y, x` order.
    pub fn unpack(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.planes * self.height * self.width);
        for t in 0..self.planes {
            for y in 0..self.height {
                for x in 0..self.width {
                    out.push(self.get(t, y, x) as u8);
                }
            }
        }
        out
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(planes, height, width)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.planes, self.height, self.width)
    }

    pub fn plane_bytes(&self) -> usize {
        self.height * row_bytes(self.width)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn plane(&self, t: usize) -> PlaneRef<'_> {
        let pb = self.plane_bytes();
        PlaneRef {
            data: &self.data[t * pb..(t + 1) * pb],
            height: self.height,
            width: self.width,
        }
    }

    pub fn planes_iter(&self) -> impl Iterator<Item = PlaneRef<'_>> {
        (0..self.planes).map(move |t| self.plane(t))
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> bool {
        let rb = row_bytes(self.width);
        let idx = (t * self.height + y) * rb + x / 8;
        (self.data[idx] >> (x % 8)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, t: usize, y: usize, x: usize, value: bool) {
        assert!(t < self.planes && y < self.height && x < self.width);
        let rb = row_bytes(self.width);
        let idx = (t * self.height + y) * rb + x / 8;
        if value {
            self.data[idx] |= 1 << (x % 8);
        } else {
            self.data[idx] &= !(1 << (x % 8));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.data.iter().map(|b| b.count_ones() as u64).sum()
    }

    /// Bitwise complement of every pixel, keeping padding bits at zero.
    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for b in out.data.iter_mut() {
            *b = !*b;
        }
        out.clear_padding();
        out
    }

    fn padding_mask(&self) -> Option<u8> {
        let used = self.width % 8;
        (used != 0).then(|| (1u8 << used) - 1)
    }

    pub(crate) fn clear_padding(&mut self) {
        if let Some(mask) = self.padding_mask() {
            let rb = row_bytes(self.width);
            for row in self.data.chunks_exact_mut(rb) {
                row[rb - 1] &= mask;
            }
        }
    }

    fn padding_is_zero(&self) -> bool {
        match self.padding_mask() {
            None => true,
            Some(mask) => {
                let rb = row_bytes(self.width);
                self.data.chunks_exact(rb).all(|row| row[rb - 1] & !mask == 0)
            }
        }
    }
}
