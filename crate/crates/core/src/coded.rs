//! Coded exposures: flutter shutter, spatially varying masks, multi-bucket captures and
//! dynamic-region coding.

use crate::bits::{BitVolume, PlaneRef};
use crate::cube::PhotonCube;
use crate::error::{Error, Result};
use crate::image::IntensityImage;
use crate::rng::{stream, CounterRng};
use crate::stream::{check_plane, stream_volume, PlaneSink};

/// Default percentile for dynamic-region detection.
pub const DEFAULT_ROI_PERCENTILE: f64 = 0.75;

/// Global temporal code, one bit per plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalCode {
    code: Vec<bool>,
}

impl GlobalCode {
    pub fn new(code: Vec<bool>) -> Result<Self> {
        if code.is_empty() {
            return Err(Error::param("temporal code must not be empty"));
        }
        Ok(Self { code })
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::new(vec![true; len])
    }

    /// Pseudo-random code with each chop open with probability one half.
    pub fn random(len: usize, seed: u64) -> Result<Self> {
        let rng = CounterRng::new(seed, stream::CODES);
        Self::new((0..len).map(|t| rng.bits(t as u64, 0) >> 63 == 1).collect())
    }

    /// Repeats each chop of `chops` over `planes / chops.len()` consecutive planes.
    pub fn from_chops(chops: &[bool], planes: usize) -> Result<Self> {
        if chops.is_empty() || planes % chops.len() != 0 {
            return Err(Error::param(format!(
                "{planes} planes cannot be split evenly into {} chops",
                chops.len()
            )));
        }
        let per = planes / chops.len();
        Self::new((0..planes).map(|t| chops[t / per]).collect())
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.code
    }
}

/// Streaming globally-coded exposure.
#[derive(Debug, Clone)]
pub struct FlutterAccumulator {
    height: usize,
    width: usize,
    code: GlobalCode,
    counts: Vec<u32>,
}

impl FlutterAccumulator {
    pub fn new(height: usize, width: usize, code: GlobalCode) -> Self {
        Self {
            height,
            width,
            code,
            counts: vec![0; height * width],
        }
    }

    pub fn finish(self) -> Result<IntensityImage> {
        IntensityImage::from_counts(self.height, self.width, &self.counts)
    }
}

impl PlaneSink for FlutterAccumulator {
    fn consume(&mut self, t: usize, plane: PlaneRef<'_>) -> Result<()> {
        check_plane(&plane, self.height, self.width)?;
        if t >= self.code.len() {
            return Err(Error::dims(format!("code has no entry for plane {t}")));
        }
        if self.code.code[t] {
            let w = self.width;
            let counts = &mut self.counts;
            plane.for_each_one(|y, x| counts[y * w + x] += 1);
        }
        Ok(())
    }
}

/// `I(x) = sum_t C_t B_t(x)`.
pub fn flutter_shutter(cube: &PhotonCube, code: &GlobalCode) -> Result<IntensityImage> {
    if code.len() != cube.planes() {
        return Err(Error::dims(format!(
            "code length {} does not match {} planes",
            code.len(),
            cube.planes()
        )));
    }
    let mut acc = FlutterAccumulator::new(cube.height(), cube.width(), code.clone());
    stream_volume(cube.bits(), &mut [&mut acc])?;
    acc.finish()
}

/// Spatial 2x2 tile of exposure phases, each with its own exposure length.
///
/// Pixel `(y, x)` uses phase `tile[y % 2][x % 2]` and is exposed over the first
/// `ceil(fractions[phase] * T)` planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPattern {
    pub tile: [[u8; 2]; 2],
    pub fractions: [f64; 4],
}

impl Default for QuadPattern {
    fn default() -> Self {
        Self {
            tile: [[0, 1], [3, 2]],
            fractions: [1.0, 0.5, 0.25, 0.125],
        }
    }
}

impl QuadPattern {
    fn validate(&self) -> Result<()> {
        if self.tile.iter().flatten().any(|&p| p > 3) {
            return Err(Error::param("quad tile phases must be in 0..4"));
        }
        if self.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::param("quad exposure fractions must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn exposure_planes(&self, y: usize, x: usize, planes: usize) -> usize {
        let phase = self.tile[y % 2][x % 2] as usize;
        ((self.fractions[phase] * planes as f64).ceil() as usize).clamp(1, planes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskScheme {
    /// One bucket, each mask bit open with probability 0.5.
    SingleRandom,
    /// Two buckets, the second the complement of the first.
    TwoBucketComplement,
    /// `J >= 2` buckets; exactly one bucket, chosen uniformly, is active per `(t, x)`.
    MultiBucketOneHot,
    /// One bucket following a tiled 2x2 exposure pattern.
    Quad(QuadPattern),
    /// Caller-supplied masks.
    Custom,
}

/// `J` packed mask volumes with the same `T x H x W` shape as the cube they code.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    buckets: Vec<BitVolume>,
    scheme: MaskScheme,
}

impl MaskSequence {
    pub fn custom(buckets: Vec<BitVolume>) -> Result<Self> {
        let first = buckets.first().ok_or_else(|| Error::param("need at least one bucket"))?;
        if buckets.iter().any(|b| b.dims() != first.dims()) {
            return Err(Error::dims("mask buckets differ in shape"));
        }
        Ok(Self {
            buckets,
            scheme: MaskScheme::Custom,
        })
    }

    pub fn scheme(&self) -> MaskScheme {
        self.scheme
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn buckets(&self) -> &[BitVolume] {
        &self.buckets
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.buckets[0].dims()
    }

    /// True when every `(t, x)` has exactly one active bucket.
    pub fn is_partition(&self) -> bool {
        let (t, h, w) = self.dims();
        let bytes = self.buckets[0].as_bytes().len();
        let mut union = vec![0u8; bytes];
        for b in &self.buckets {
            for (u, m) in union.iter_mut().zip(b.as_bytes()) {
                if *u & m != 0 {
                    return false;
                }
                *u |= m;
            }
        }
        let full = BitVolume::zeros(t, h, w).map(|z| z.complement());
        full.map(|f| f.as_bytes() == union.as_slice()).unwrap_or(false)
    }
}

/// Generates the masks of `scheme` for `buckets` buckets over `(planes, height, width)`.
///
/// Output is a pure function of the arguments.
pub fn generate_masks(
    scheme: MaskScheme,
    buckets: usize,
    dims: (usize, usize, usize),
    seed: u64,
) -> Result<MaskSequence> {
    let (planes, height, width) = dims;
    let rng = CounterRng::new(seed, stream::MASKS);
    let coin = |t: usize, y: usize, x: usize| rng.bits(t as u64, (y * width + x) as u64) >> 63 == 1;
    let volumes = match scheme {
        MaskScheme::SingleRandom => {
            expect_buckets(buckets, 1, "single-random")?;
            vec![BitVolume::from_fn(planes, height, width, coin)?]
        }
        MaskScheme::TwoBucketComplement => {
            expect_buckets(buckets, 2, "two-bucket complement")?;
            let first = BitVolume::from_fn(planes, height, width, coin)?;
            let second = first.complement();
            vec![first, second]
        }
        MaskScheme::MultiBucketOneHot => {
            if buckets < 2 || buckets > u32::MAX as usize {
                return Err(Error::param(format!(
                    "one-hot masks need at least 2 buckets, got {buckets}"
                )));
            }
            let mut vols = vec![BitVolume::zeros(planes, height, width)?; buckets];
            for t in 0..planes {
                for y in 0..height {
                    for x in 0..width {
                        let j = rng.below(t as u64, (y * width + x) as u64, buckets as u32);
                        vols[j as usize].set(t, y, x, true);
                    }
                }
            }
            vols
        }
        MaskScheme::Quad(pattern) => {
            expect_buckets(buckets, 1, "quad")?;
            pattern.validate()?;
            vec![BitVolume::from_fn(planes, height, width, |t, y, x| {
                t < pattern.exposure_planes(y, x, planes)
            })?]
        }
        MaskScheme::Custom => {
            return Err(Error::param("custom masks are built with MaskSequence::custom"));
        }
    };
    Ok(MaskSequence {
        buckets: volumes,
        scheme,
    })
}

fn expect_buckets(got: usize, want: usize, name: &str) -> Result<()> {
    if got != want {
        return Err(Error::param(format!("{name} masks need J = {want}, got {got}")));
    }
    Ok(())
}

/// Per-bucket coded exposures.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketCaptures {
    pub images: Vec<IntensityImage>,
}

impl BucketCaptures {
    pub fn bucket_count(&self) -> usize {
        self.images.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.images[0].dims()
    }

    /// Sum over buckets (the long exposure).
    pub fn total(&self) -> Result<IntensityImage> {
        let mut acc = self.images[0].clone();
        for img in &self.images[1..] {
            acc = acc.add(img)?;
        }
        Ok(acc)
    }
}

/// Streaming multi-bucket capture; each plane is ANDed against each bucket's mask plane.
#[derive(Debug, Clone)]
pub struct BucketAccumulator<'m> {
    masks: &'m MaskSequence,
    counts: Vec<Vec<u32>>,
    scratch: Vec<u8>,
}

impl<'m> BucketAccumulator<'m> {
    pub fn new(masks: &'m MaskSequence) -> Self {
        let (_, h, w) = masks.dims();
        Self {
            masks,
            counts: vec![vec![0; h * w]; masks.bucket_count()],
            scratch: Vec::new(),
        }
    }

    pub fn finish(self) -> Result<BucketCaptures> {
        let (_, h, w) = self.masks.dims();
        let images = self
            .counts
            .iter()
            .map(|c| IntensityImage::from_counts(h, w, c))
            .collect::<Result<_>>()?;
        Ok(BucketCaptures { images })
    }
}

impl PlaneSink for BucketAccumulator<'_> {
    fn consume(&mut self, t: usize, plane: PlaneRef<'_>) -> Result<()> {
        let (planes, h, w) = self.masks.dims();
        check_plane(&plane, h, w)?;
        if t >= planes {
            return Err(Error::dims(format!("masks have no plane {t}")));
        }
        for (bucket, counts) in self.masks.buckets.iter().zip(self.counts.iter_mut()) {
            let mask = bucket.plane(t);
            self.scratch.clear();
            self.scratch
                .extend(plane.bytes().iter().zip(mask.bytes()).map(|(b, m)| b & m));
            let coded = PlaneRef::new(&self.scratch, h, w)?;
            coded.for_each_one(|y, x| counts[y * w + x] += 1);
        }
        Ok(())
    }
}

/// `I^j(x) = sum_t C^j_t(x) B_t(x)` for every bucket, in one pass over the cube.
pub fn multi_bucket_capture(cube: &PhotonCube, masks: &MaskSequence) -> Result<BucketCaptures> {
    if masks.dims() != cube.dims() {
        return Err(Error::dims(format!(
            "masks are {:?}, cube is {:?}",
            masks.dims(),
            cube.dims()
        )));
    }
    let mut acc = BucketAccumulator::new(masks);
    stream_volume(cube.bits(), &mut [&mut acc])?;
    acc.finish()
}

/// Pixels flagged as containing motion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicRoi {
    pub height: usize,
    pub width: usize,
    pub mask: Vec<bool>,
}

impl DynamicRoi {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.mask.len() as f64
    }
}

/// Population standard deviation of each pixel across buckets.
pub fn bucket_std(captures: &BucketCaptures) -> Vec<f64> {
    let j = captures.bucket_count() as f64;
    let n = captures.images[0].values().len();
    (0..n)
        .map(|i| {
            let mean = captures.images.iter().map(|im| im.values()[i]).sum::<f64>() / j;
            let var = captures
                .images
                .iter()
                .map(|im| (im.values()[i] - mean).powi(2))
                .sum::<f64>()
                / j;
            var.sqrt()
        })
        .collect()
}

/// Flags pixels whose across-bucket standard deviation lies strictly above the
/// nearest-rank `percentile` of that statistic.
pub fn detect_dynamic_roi(captures: &BucketCaptures, percentile: f64) -> Result<DynamicRoi> {
    if captures.bucket_count() < 2 {
        return Err(Error::param("dynamic-region detection needs at least 2 buckets"));
    }
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::param(format!("percentile must lie in (0, 1], got {percentile}")));
    }
    let (h, w) = captures.dims();
    if captures.images.iter().any(|im| im.dims() != (h, w)) {
        return Err(Error::dims("bucket images differ in size"));
    }
    let std = bucket_std(captures);
    let mut sorted = std.clone();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let threshold = sorted[rank - 1];
    Ok(DynamicRoi {
        height: h,
        width: w,
        mask: std.iter().map(|&s| s > threshold).collect(),
    })
}

/// Bucket values of one coded pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiSample {
    pub index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiCoding {
    /// All bucket values for pixels inside the region, raster order.
    pub coded: Vec<RoiSample>,
    /// Long exposure (sum over buckets) outside the region, zero inside.
    pub static_image: IntensityImage,
    /// Information bits read out: `bit_depth * (J * |roi| + (H * W - |roi|))`.
    pub bandwidth_bits: u64,
    /// Static pixels whose long exposure exceeds the `bit_depth` range.
    pub clipped_pixels: usize,
    bit_depth: u8,
    pixels: usize,
}

impl RoiCoding {
    /// Bandwidth relative to reading out one coded capture.
    pub fn bandwidth_multiple(&self) -> f64 {
        self.bandwidth_bits as f64 / (self.bit_depth as u64 * self.pixels as u64) as f64
    }
}

/// Reads out every bucket inside the dynamic region and only the long exposure outside.
pub fn apply_roi_coding(captures: &BucketCaptures, roi: &DynamicRoi) -> Result<RoiCoding> {
    let (h, w) = captures.dims();
    if (roi.height, roi.width) != (h, w) || roi.mask.len() != h * w {
        return Err(Error::dims("dynamic region and captures differ in size"));
    }
    let j = captures.bucket_count() as u64;
    let bit_depth = captures.images[0].bit_depth();
    let long = captures.total()?;
    let max_code = ((1u64 << bit_depth) - 1) as f64;
    let mut coded = Vec::new();
    let mut static_values = vec![0.0; h * w];
    let mut clipped = 0;
    for (i, &dynamic) in roi.mask.iter().enumerate() {
        if dynamic {
            coded.push(RoiSample {
                index: i,
                values: captures.images.iter().map(|im| im.values()[i]).collect(),
            });
        } else {
            let v = long.values()[i];
            if v > max_code {
                clipped += 1;
            }
            static_values[i] = v;
        }
    }
    let inside = coded.len() as u64;
    let pixels = (h * w) as u64;
    Ok(RoiCoding {
        coded,
        static_image: IntensityImage::new(h, w, static_values)?.with_bit_depth(bit_depth),
        bandwidth_bits: bit_depth as u64 * (j * inside + (pixels - inside)),
        clipped_pixels: clipped,
        bit_depth,
        pixels: h * w,
    })
}
