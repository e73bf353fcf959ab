//! Photon-cube data model, Bernoulli synthesis from flux, sum images and the flux MLE.

use rayon::prelude::*;

use crate::bits::{row_bytes, BitVolume, PlaneRef};
use crate::error::{Error, Result};
use crate::image::IntensityImage;
use crate::rng::{stream, CounterRng};
use crate::sensor::SensorParams;
use crate::stream::{check_plane, PlaneSink};

/// Anything that can report the mean incident flux (photons/s) at `(t, y, x)`.
pub trait FluxField: Sync {
    /// `(planes, height, width)`.
    fn dims(&self) -> (usize, usize, usize);
    fn flux(&self, t: usize, y: usize, x: usize) -> f64;
}

/// Dense `T x H x W` flux video.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxVideo {
    planes: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FluxVideo {
    pub fn new(planes: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if planes == 0 || height == 0 || width == 0 {
            return Err(Error::param(format!(
                "flux video dimensions must be nonzero, got {planes}x{height}x{width}"
            )));
        }
        if values.len() != planes * height * width {
            return Err(Error::dims(format!(
                "flux video needs {} values, got {}",
                planes * height * width,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::param(format!("flux must be finite and >= 0, got {v}")));
        }
        Ok(Self {
            planes,
            height,
            width,
            values,
        })
    }

    pub fn constant(planes: usize, height: usize, width: usize, flux: f64) -> Result<Self> {
        Self::new(planes, height, width, vec![flux; planes * height * width])
    }

    /// Stacks equally sized frames into a video.
    pub fn from_frames(frames: &[IntensityImage]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::param("flux video needs at least one frame"))?;
        let (h, w) = first.dims();
        let mut values = Vec::with_capacity(frames.len() * h * w);
        for f in frames {
            if f.dims() != (h, w) {
                return Err(Error::dims("flux frames differ in size"));
            }
            values.extend_from_slice(f.values());
        }
        Self::new(frames.len(), h, w, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl FluxField for FluxVideo {
    fn dims(&self) -> (usize, usize, usize) {
        (self.planes, self.height, self.width)
    }

    fn flux(&self, t: usize, y: usize, x: usize) -> f64 {
        self.values[(t * self.height + y) * self.width + x]
    }
}

/// A sequence of binary frames together with the sensor that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonCube {
    bits: BitVolume,
    sensor: SensorParams,
}

impl PhotonCube {
    pub fn new(bits: BitVolume, sensor: SensorParams) -> Result<Self> {
        sensor.validate()?;
        Ok(Self { bits, sensor })
    }

    pub fn bits(&self) -> &BitVolume {
        &self.bits
    }

    pub fn into_bits(self) -> BitVolume {
        self.bits
    }

    pub fn sensor(&self) -> &SensorParams {
        &self.sensor
    }

    /// `(planes, height, width)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.bits.dims()
    }

    pub fn planes(&self) -> usize {
        self.bits.planes()
    }

    pub fn height(&self) -> usize {
        self.bits.height()
    }

    pub fn width(&self) -> usize {
        self.bits.width()
    }

    pub fn plane(&self, t: usize) -> PlaneRef<'_> {
        self.bits.plane(t)
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> bool {
        self.bits.get(t, y, x)
    }
}

/// Draws a photon-cube: every bit is an independent Bernoulli trial with
/// `p = 1 - exp(-(eta * flux + r_q) * w_exp)`.
///
/// Draws are keyed by `(seed, t, y * W + x)`, so output is reproducible bit for bit.
pub fn sample_photon_cube(flux: &impl FluxField, sensor: SensorParams, seed: u64) -> Result<PhotonCube> {
    sample_photon_cube_with_dark_map(flux, sensor, None, seed)
}

/// Like [`sample_photon_cube`], with an optional per-pixel dark count rate map that
/// replaces `sensor.dark_count_rate`.
pub fn sample_photon_cube_with_dark_map(
    flux: &impl FluxField,
    sensor: SensorParams,
    dark_map: Option<&[f64]>,
    seed: u64,
) -> Result<PhotonCube> {
    sensor.validate()?;
    let (planes, height, width) = flux.dims();
    let mut bits = BitVolume::zeros(planes, height, width)?;
    if let Some(map) = dark_map {
        if map.len() != height * width {
            return Err(Error::dims(format!(
                "dark count map has {} entries for {} pixels",
                map.len(),
                height * width
            )));
        }
        if let Some(v) = map.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::param(format!("dark count rate must be finite and >= 0, got {v}")));
        }
    }
    let rng = CounterRng::new(seed, stream::PHOTONS);
    let rb = row_bytes(width);
    let plane_bytes = bits.plane_bytes();
    bits.bytes_mut()
        .par_chunks_mut(plane_bytes)
        .enumerate()
        .try_for_each(|(t, plane)| -> Result<()> {
            for y in 0..height {
                let row = &mut plane[y * rb..(y + 1) * rb];
                for x in 0..width {
                    let phi = flux.flux(t, y, x);
                    if !(phi.is_finite() && phi >= 0.0) {
                        return Err(Error::param(format!(
                            "flux at (t={t}, y={y}, x={x}) must be finite and >= 0, got {phi}"
                        )));
                    }
                    let idx = y * width + x;
                    let dark = dark_map.map_or(sensor.dark_count_rate, |m| m[idx]);
                    let p = sensor.detection_probability_with_dark(phi, dark);
                    if rng.uniform(t as u64, idx as u64) < p {
                        row[x / 8] |= 1 << (x % 8);
                    }
                }
            }
            Ok(())
        })?;
    PhotonCube::new(bits, sensor)
}

/// Streaming per-pixel photon counter over planes `[start, end)`.
#[derive(Debug, Clone)]
pub struct SumAccumulator {
    height: usize,
    width: usize,
    start: usize,
    end: usize,
    counts: Vec<u32>,
}

impl SumAccumulator {
    pub fn new(height: usize, width: usize, start: usize, end: usize) -> Self {
        Self {
            height,
            width,
            start,
            end,
            counts: vec![0; height * width],
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn finish(self) -> Result<IntensityImage> {
        IntensityImage::from_counts(self.height, self.width, &self.counts)
    }
}

impl PlaneSink for SumAccumulator {
    fn consume(&mut self, t: usize, plane: PlaneRef<'_>) -> Result<()> {
        check_plane(&plane, self.height, self.width)?;
        if t >= self.start && t < self.end {
            let w = self.width;
            let counts = &mut self.counts;
            plane.for_each_one(|y, x| counts[y * w + x] += 1);
        }
        Ok(())
    }
}

fn check_range(start: usize, end: usize, planes: usize) -> Result<()> {
    if start >= end || end > planes {
        return Err(Error::InvalidRange { start, end, planes });
    }
    Ok(())
}

/// Number of detections per pixel over planes `[t_start, t_end)`.
pub fn sum_image(cube: &PhotonCube, t_start: usize, t_end: usize) -> Result<IntensityImage> {
    sum_volume(cube.bits(), t_start, t_end)
}

pub(crate) fn sum_volume(bits: &BitVolume, t_start: usize, t_end: usize) -> Result<IntensityImage> {
    check_range(t_start, t_end, bits.planes())?;
    let mut acc = SumAccumulator::new(bits.height(), bits.width(), t_start, t_end);
    for t in t_start..t_end {
        acc.consume(t, bits.plane(t))?;
    }
    acc.finish()
}

/// Maximum-likelihood flux estimate from a sum image over `planes` bit-planes.
///
/// Inverts the detection model: `phi = -ln(1 - s/T) / (eta * w_exp) - r_q / eta`.
/// Saturated pixels (`s == T`) map to `f64::INFINITY`.
pub fn flux_mle(sum: &IntensityImage, planes: usize, sensor: &SensorParams) -> Result<IntensityImage> {
    sensor.validate()?;
    if planes == 0 {
        return Err(Error::param("plane count must be positive"));
    }
    let total = planes as f64;
    let mut values = Vec::with_capacity(sum.values().len());
    for &s in sum.values() {
        if !(s >= 0.0 && s <= total) {
            return Err(Error::Domain(format!("sum {s} outside [0, {planes}]")));
        }
        let v = if s == total {
            f64::INFINITY
        } else {
            -(-s / total).ln_1p() / (sensor.eta * sensor.exposure) - sensor.dark_count_rate / sensor.eta
        };
        values.push(v);
    }
    IntensityImage::new(sum.height(), sum.width(), values)
}
