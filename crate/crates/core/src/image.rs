use crate::error::{Error, Result};

/// Default output quantization used for readout accounting.
pub const DEFAULT_BIT_DEPTH: u8 = 12;

/// Real-valued `height x width` image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    height: usize,
    width: usize,
    values: Vec<f64>,
    bit_depth: u8,
}

impl IntensityImage {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param("image dimensions must be nonzero"));
        }
        if values.len() != height * width {
            return Err(Error::dims(format!(
                "{}x{} image needs {} values, got {}",
                height,
                width,
                height * width,
                values.len()
            )));
        }
        Ok(Self {
            height,
            width,
            values,
            bit_depth: DEFAULT_BIT_DEPTH,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0.0; height * width])
    }

    pub fn from_counts(height: usize, width: usize, counts: &[u32]) -> Result<Self> {
        Self::new(height, width, counts.iter().map(|&c| c as f64).collect())
    }

    pub fn with_bit_depth(mut self, bit_depth: u8) -> Self {
        self.bit_depth = bit_depth;
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Element-wise sum of images of equal size.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::dims("cannot add images of different sizes"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self {
            values,
            ..self.clone()
        })
    }
}

/// Signed integer image, e.g. a frame of accumulated event polarities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedImage {
    pub height: usize,
    pub width: usize,
    pub values: Vec<i32>,
}

impl SignedImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> i32 {
        self.values[y * self.width + x]
    }

    pub fn to_intensity(&self) -> IntensityImage {
        IntensityImage {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| v as f64).collect(),
            bit_depth: DEFAULT_BIT_DEPTH,
        }
    }
}
