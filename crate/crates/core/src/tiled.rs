//! Behavioural simulation of projections computed on a grid of small processing cores, each
//! attached to a tile of pixels with its own RAM and links to neighbouring cores.
//!
//! The simulation is dataflow-equivalent rather than instruction-accurate: every core keeps
//! only the state of its own pixels, reads shifted pixels from other cores through explicit
//! (counted) exchanges, and advances one plane at a time. Stitched outputs are compared with
//! the global implementations in the tests.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bits::PlaneRef;
use crate::coded::{BucketCaptures, MaskSequence};
use crate::cube::PhotonCube;
use crate::error::{Error, Result};
use crate::events::{accumulate_frame, emulate_events, step_pixel, BrightnessEncoding, Event, EventParams, EventStream};
use crate::image::IntensityImage;
use crate::motion::{ShiftImage, Trajectory};

/// Grid of cores, each serving `core_height x core_width` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreGrid {
    pub core_rows: usize,
    pub core_cols: usize,
    pub core_height: usize,
    pub core_width: usize,
    pub ram_budget_bytes: usize,
    pub program_slots: usize,
    /// Largest per-axis shift a motion kernel may fetch through neighbour exchange.
    pub exchange_reach: usize,
}

impl Default for CoreGrid {
    /// 3 x 6 cores of 4 x 4 pixels (a 12 x 24 array), 4 kb of RAM per core.
    fn default() -> Self {
        Self {
            core_rows: 3,
            core_cols: 6,
            core_height: 4,
            core_width: 4,
            ram_budget_bytes: 512,
            program_slots: 256,
            exchange_reach: 8,
        }
    }
}

impl CoreGrid {
    /// Default cores tiled to cover an `height x width` array; both must be multiples of 4.
    pub fn covering(height: usize, width: usize) -> Result<Self> {
        let d = Self::default();
        if height == 0 || width == 0 || height % d.core_height != 0 || width % d.core_width != 0 {
            return Err(Error::dims(format!(
                "{height}x{width} is not a whole number of {}x{} cores",
                d.core_height, d.core_width
            )));
        }
        Ok(Self {
            core_rows: height / d.core_height,
            core_cols: width / d.core_width,
            ..d
        })
    }

    pub fn array_dims(&self) -> (usize, usize) {
        (self.core_rows * self.core_height, self.core_cols * self.core_width)
    }

    pub fn cores(&self) -> usize {
        self.core_rows * self.core_cols
    }

    pub fn pixels_per_core(&self) -> usize {
        self.core_height * self.core_width
    }

    pub fn validate(&self) -> Result<()> {
        if self.core_rows == 0
            || self.core_cols == 0
            || self.core_height == 0
            || self.core_width == 0
            || self.ram_budget_bytes == 0
            || self.program_slots == 0
        {
            return Err(Error::param("core grid sizes and budgets must be positive"));
        }
        Ok(())
    }
}

/// Numeric format of the event kernel's per-pixel state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventPrecision {
    /// 64-bit floats, identical to the global emulator.
    #[default]
    Full,
    /// 16-bit fixed point with 8 fractional bits.
    Fixed,
}

#[derive(Debug, Clone, Copy)]
pub enum Kernel<'a> {
    Sum,
    Vcs(&'a MaskSequence),
    Event {
        params: EventParams,
        precision: EventPrecision,
    },
    Motion(&'a Trajectory),
}

impl Kernel<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Sum => "sum",
            Kernel::Vcs(_) => "vcs",
            Kernel::Event { .. } => "event",
            Kernel::Motion(_) => "motion",
        }
    }
}

/// Bytes needed for a counter that reaches `planes`.
pub fn accumulator_bytes(planes: usize) -> usize {
    let bits = (usize::BITS - planes.leading_zeros()).max(1) as usize;
    bits.div_ceil(8)
}

/// RAM footprint of one core's state for `kernel` over `planes` planes.
pub fn kernel_memory(kernel: &Kernel<'_>, grid: &CoreGrid, planes: usize) -> usize {
    let px = grid.pixels_per_core();
    let acc = accumulator_bytes(planes);
    match kernel {
        Kernel::Sum => px * acc,
        // one accumulator per pixel and bucket, plus one mask word per bucket
        Kernel::Vcs(m) => m.bucket_count() * (px * acc + 2),
        // moving average and reference per pixel, plus beta, 1 - beta, tau, T0 and the
        // plane counter
        Kernel::Event { precision, .. } => match precision {
            EventPrecision::Full => px * 2 * 8 + 5 * 8,
            EventPrecision::Fixed => px * 2 * 2 + 5 * 2,
        },
        // sum and count per pixel, plus shift, timestep and a mask word
        Kernel::Motion(_) => 2 * px * acc + 6,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TiledOutput {
    Sum(IntensityImage),
    Vcs(BucketCaptures),
    Events(EventStream),
    Motion(ShiftImage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreStats {
    pub row: usize,
    pub col: usize,
    pub memory_bytes: usize,
    /// Pixels received from other cores.
    pub exchanges: u64,
    pub events: u64,
    /// Largest number of events this core emitted in one plane.
    pub max_multiplicity: u32,
}

/// Fixed-point event kernel compared with full-precision global emulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointReport {
    pub events_fixed: usize,
    pub events_full: usize,
    /// Pixels whose accumulated polarity differs.
    pub differing_pixels: usize,
    /// RMSE between the accumulated event frames.
    pub frame_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiledRun {
    pub kernel: &'static str,
    pub grid: CoreGrid,
    pub planes: usize,
    pub output: TiledOutput,
    pub cores: Vec<CoreStats>,
    pub exchanges: u64,
    /// Largest core distance (Chebyshev) crossed by an exchange.
    pub max_hops: usize,
    /// Per plane, the most events any single core emitted. Empty for other kernels.
    pub event_multiplicity: Vec<u32>,
    pub fixed_point: Option<FixedPointReport>,
}

impl TiledRun {
    pub fn memory_high_water(&self) -> usize {
        self.cores.iter().map(|c| c.memory_bytes).max().unwrap_or(0)
    }

    pub fn max_core_exchanges(&self) -> u64 {
        self.cores.iter().map(|c| c.exchanges).max().unwrap_or(0)
    }

    pub fn max_core_events(&self) -> u64 {
        self.cores.iter().map(|c| c.events).max().unwrap_or(0)
    }

    /// Per-core CSV; the duty cycle column is empty when not estimated.
    pub fn to_csv(&self, duty: Option<&DutyCycle>) -> String {
        let mut out = String::from(
            "kernel,core_row,core_col,memory_bytes,ram_budget_bytes,exchanges,events,max_multiplicity,duty_cycle\n",
        );
        let duty = duty.map(|d| d.duty.to_string()).unwrap_or_default();
        for c in &self.cores {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.kernel,
                c.row,
                c.col,
                c.memory_bytes,
                self.grid.ram_budget_bytes,
                c.exchanges,
                c.events,
                c.max_multiplicity,
                duty
            );
        }
        out
    }
}

#[inline]
fn bit(plane: &PlaneRef<'_>, y: usize, x: usize) -> bool {
    (plane.row(y)[x / 8] >> (x % 8)) & 1 == 1
}

/// Pixels `(y, x)` served by core `(r, c)`, in raster order.
fn core_pixels(grid: &CoreGrid, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (y0, x0) = (r * grid.core_height, c * grid.core_width);
    (y0..y0 + grid.core_height).flat_map(move |y| (x0..x0 + grid.core_width).map(move |x| (y, x)))
}

struct CoreResult {
    stats: CoreStats,
    /// Per local pixel: one value per output channel.
    counts: Vec<Vec<u32>>,
    events: Vec<Event>,
    multiplicity: Vec<u32>,
    max_hops: usize,
}

/// Runs `kernel` on every core. Cores see the same plane sequence and only exchange pixel
/// reads, so they are simulated independently and their results stitched in core order.
pub fn run_tiled(cube: &PhotonCube, kernel: &Kernel<'_>, grid: &CoreGrid) -> Result<TiledRun> {
    grid.validate()?;
    let (planes, h, w) = cube.dims();
    if grid.array_dims() != (h, w) {
        return Err(Error::dims(format!(
            "grid covers {:?}, cube is {h}x{w}",
            grid.array_dims()
        )));
    }
    match kernel {
        Kernel::Vcs(m) if m.dims() != cube.dims() => {
            return Err(Error::dims("masks do not match the cube"));
        }
        Kernel::Motion(t) if t.len() != planes => {
            return Err(Error::dims("trajectory length does not match the cube"));
        }
        Kernel::Motion(t) => {
            let shift = t.max_abs_shift() as usize;
            if shift > grid.exchange_reach {
                return Err(Error::ExchangeReach {
                    shift,
                    reach: grid.exchange_reach,
                });
            }
        }
        Kernel::Event { params, precision } => {
            params.validate(planes)?;
            if *precision == EventPrecision::Fixed
                && (params.encoding != BrightnessEncoding::Identity || params.adaptive.is_some())
            {
                return Err(Error::param(
                    "fixed-point event kernel supports the identity encoding with a constant threshold",
                ));
            }
        }
        _ => {}
    }
    let memory = kernel_memory(kernel, grid, planes);
    if memory > grid.ram_budget_bytes {
        return Err(Error::BudgetExceeded {
            kernel: kernel.name().into(),
            required: memory,
            budget: grid.ram_budget_bytes,
        });
    }

    let sensor = cube.sensor();
    let alpha = sensor.eta * sensor.exposure;
    let coords: Vec<(usize, usize)> = (0..grid.core_rows)
        .flat_map(|r| (0..grid.core_cols).map(move |c| (r, c)))
        .collect();
    let results: Vec<CoreResult> = coords
        .par_iter()
        .map(|&(r, c)| run_core(cube, kernel, grid, r, c, memory, alpha))
        .collect();

    let px_index = |y: usize, x: usize| y * w + x;
    let mut stats = Vec::with_capacity(results.len());
    let mut exchanges = 0;
    let mut max_hops = 0;
    let mut multiplicity = Vec::new();
    let channels = results[0].counts.first().map_or(0, Vec::len);
    let mut stitched = vec![vec![0u32; h * w]; channels];
    let mut events = Vec::new();
    for (res, &(r, c)) in results.into_iter().zip(&coords) {
        for ((y, x), vals) in core_pixels(grid, r, c).zip(&res.counts) {
            for (ch, v) in vals.iter().enumerate() {
                stitched[ch][px_index(y, x)] = *v;
            }
        }
        exchanges += res.stats.exchanges;
        max_hops = max_hops.max(res.max_hops);
        if multiplicity.len() < res.multiplicity.len() {
            multiplicity.resize(res.multiplicity.len(), 0);
        }
        for (m, v) in multiplicity.iter_mut().zip(&res.multiplicity) {
            *m = (*m).max(*v);
        }
        events.extend(res.events);
        stats.push(res.stats);
    }

    let mut fixed_point = None;
    let output = match kernel {
        Kernel::Sum => TiledOutput::Sum(IntensityImage::from_counts(h, w, &stitched[0])?),
        Kernel::Vcs(_) => TiledOutput::Vcs(BucketCaptures {
            images: stitched
                .iter()
                .map(|c| IntensityImage::from_counts(h, w, c))
                .collect::<Result<_>>()?,
        }),
        Kernel::Motion(_) => {
            let (sums, counts) = (stitched[0].clone(), stitched[1].clone());
            let values = sums
                .iter()
                .zip(&counts)
                .map(|(&s, &n)| if n > 0 { s as f64 / n as f64 } else { 0.0 })
                .collect();
            TiledOutput::Motion(ShiftImage {
                height: h,
                width: w,
                values,
                counts,
                sums,
            })
        }
        Kernel::Event { params, precision } => {
            events.sort_by_key(|e| (e.t, e.y, e.x));
            let stream = EventStream {
                height: h,
                width: w,
                planes,
                frame_rate: sensor.frame_rate,
                events,
            };
            if *precision == EventPrecision::Fixed {
                let (full, _) = emulate_events(cube, params)?;
                fixed_point = Some(compare_streams(&stream, &full)?);
            }
            TiledOutput::Events(stream)
        }
    };
    Ok(TiledRun {
        kernel: kernel.name(),
        grid: *grid,
        planes,
        output,
        cores: stats,
        exchanges,
        max_hops,
        event_multiplicity: if matches!(kernel, Kernel::Event { .. }) { multiplicity } else { Vec::new() },
        fixed_point,
    })
}

fn compare_streams(fixed: &EventStream, full: &EventStream) -> Result<FixedPointReport> {
    let a = accumulate_frame(fixed, 0, fixed.planes)?;
    let b = accumulate_frame(full, 0, full.planes)?;
    let mut differing = 0;
    let mut sq = 0.0;
    for (u, v) in a.values.iter().zip(&b.values) {
        let d = (*u - *v) as f64;
        if d != 0.0 {
            differing += 1;
        }
        sq += d * d;
    }
    Ok(FixedPointReport {
        events_fixed: fixed.len(),
        events_full: full.len(),
        differing_pixels: differing,
        frame_rmse: (sq / a.values.len() as f64).sqrt(),
    })
}

/// Q8.8 constant.
fn q8(v: f64) -> i32 {
    (v * 256.0).round() as i32
}

fn run_core(
    cube: &PhotonCube,
    kernel: &Kernel<'_>,
    grid: &CoreGrid,
    r: usize,
    c: usize,
    memory: usize,
    alpha: f64,
) -> CoreResult {
    let (planes, h, w) = cube.dims();
    let pixels: Vec<(usize, usize)> = core_pixels(grid, r, c).collect();
    let n = pixels.len();
    let mut stats = CoreStats {
        row: r,
        col: c,
        memory_bytes: memory,
        exchanges: 0,
        events: 0,
        max_multiplicity: 0,
    };
    let mut events = Vec::new();
    let mut multiplicity = Vec::new();
    let mut max_hops = 0;
    let counts = match kernel {
        Kernel::Sum => {
            let mut acc = vec![0u32; n];
            for t in 0..planes {
                let plane = cube.plane(t);
                for (a, &(y, x)) in acc.iter_mut().zip(&pixels) {
                    *a += bit(&plane, y, x) as u32;
                }
            }
            acc.into_iter().map(|a| vec![a]).collect()
        }
        Kernel::Vcs(masks) => {
            let j = masks.bucket_count();
            let mut acc = vec![vec![0u32; j]; n];
            for t in 0..planes {
                let plane = cube.plane(t);
                for (k, bucket) in masks.buckets().iter().enumerate() {
                    let mask = bucket.plane(t);
                    for (a, &(y, x)) in acc.iter_mut().zip(&pixels) {
                        a[k] += (bit(&plane, y, x) && bit(&mask, y, x)) as u32;
                    }
                }
            }
            acc
        }
        Kernel::Motion(traj) => {
            let (ch, cw) = (grid.core_height as i64, grid.core_width as i64);
            let mut acc = vec![vec![0u32; 2]; n];
            for (t, &[dx, dy]) in traj.shifts().iter().enumerate() {
                let plane = cube.plane(t);
                for (a, &(y, x)) in acc.iter_mut().zip(&pixels) {
                    let (sy, sx) = (y as i64 + dy as i64, x as i64 + dx as i64);
                    if sy < 0 || sx < 0 || sy >= h as i64 || sx >= w as i64 {
                        continue;
                    }
                    let hops = ((sy / ch - r as i64).abs()).max((sx / cw - c as i64).abs()) as usize;
                    if hops > 0 {
                        stats.exchanges += 1;
                        max_hops = max_hops.max(hops);
                    }
                    a[0] += bit(&plane, sy as usize, sx as usize) as u32;
                    a[1] += 1;
                }
            }
            acc
        }
        Kernel::Event { params, precision } => {
            multiplicity = vec![0u32; planes];
            match precision {
                EventPrecision::Full => {
                    let mut mu = vec![0.0; n];
                    let mut reference = vec![0.0; n];
                    for (t, m) in multiplicity.iter_mut().enumerate() {
                        let plane = cube.plane(t);
                        for (i, &(y, x)) in pixels.iter().enumerate() {
                            let b = bit(&plane, y, x);
                            if let Some(polarity) = step_pixel(&mut mu[i], &mut reference[i], b, t, params, alpha) {
                                events.push(Event {
                                    t: t as u32,
                                    x: x as u16,
                                    y: y as u16,
                                    polarity,
                                });
                                *m += 1;
                            }
                        }
                    }
                }
                EventPrecision::Fixed => {
                    let (keep, gain, tau) = (q8(params.beta), q8(1.0 - params.beta), q8(params.tau));
                    let mut mu = vec![0i32; n];
                    let mut reference = vec![0i32; n];
                    for (t, m) in multiplicity.iter_mut().enumerate() {
                        let plane = cube.plane(t);
                        for (i, &(y, x)) in pixels.iter().enumerate() {
                            mu[i] = ((keep * mu[i]) >> 8) + if bit(&plane, y, x) { gain } else { 0 };
                            if t < params.warmup {
                                if t + 1 == params.warmup {
                                    reference[i] = mu[i];
                                }
                                continue;
                            }
                            let diff = mu[i] - reference[i];
                            if diff.abs() > tau {
                                let polarity: i8 = if diff > 0 { 1 } else { -1 };
                                reference[i] = match params.reference_update {
                                    crate::events::ReferenceUpdate::Additive => reference[i] + tau * polarity as i32,
                                    crate::events::ReferenceUpdate::Resync => mu[i],
                                };
                                events.push(Event {
                                    t: t as u32,
                                    x: x as u16,
                                    y: y as u16,
                                    polarity,
                                });
                                *m += 1;
                            }
                        }
                    }
                }
            }
            stats.events = events.len() as u64;
            stats.max_multiplicity = multiplicity.iter().copied().max().unwrap_or(0);
            Vec::new()
        }
    };
    CoreResult {
        stats,
        counts,
        events,
        multiplicity,
        max_hops,
    }
}

/// Per-plane time costs of a core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub per_plane_s: f64,
    pub per_exchange_s: f64,
    pub per_event_s: f64,
}

impl CostModel {
    pub const ZERO: Self = Self {
        per_plane_s: 0.0,
        per_exchange_s: 0.0,
        per_event_s: 0.0,
    };

    /// A sum kernel costing 0.981 ms over 2500 planes.
    pub fn sum_calibrated() -> Self {
        Self {
            per_plane_s: 0.981e-3 / 2500.0,
            ..Self::ZERO
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycle {
    /// Processing time per plane of the slowest core.
    pub time_per_plane_s: f64,
    /// Processing time over all planes of the run.
    pub total_time_s: f64,
    /// `time_per_plane * frame_rate`; may exceed 1.
    pub duty: f64,
    pub over_budget: bool,
}

/// Ratio of the time needed to process one plane to the plane period. Cores run in parallel,
/// so the busiest core sets the time.
pub fn estimate_duty_cycle(run: &TiledRun, cost: &CostModel, frame_rate: f64) -> Result<DutyCycle> {
    if [cost.per_plane_s, cost.per_exchange_s, cost.per_event_s]
        .iter()
        .any(|c| !(*c >= 0.0 && c.is_finite()))
    {
        return Err(Error::param("costs must be non-negative"));
    }
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(Error::param("frame rate must be positive"));
    }
    let planes = run.planes as f64;
    let total = run
        .cores
        .iter()
        .map(|c| {
            cost.per_plane_s * planes + cost.per_exchange_s * c.exchanges as f64 + cost.per_event_s * c.events as f64
        })
        .fold(0.0, f64::max);
    let per_plane = total / planes;
    let duty = per_plane * frame_rate;
    Ok(DutyCycle {
        time_per_plane_s: per_plane,
        total_time_s: total,
        duty,
        over_budget: duty > 1.0,
    })
}
