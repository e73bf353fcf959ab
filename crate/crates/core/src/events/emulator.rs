use crate::bits::PlaneRef;
use crate::cube::PhotonCube;
use crate::error::{Error, Result};
use crate::sensor::SensorParams;
use crate::stream::{check_plane, stream_volume, PlaneSink};

use super::representation::{Event, EventCube, EventStream};

/// Function `h` applied to the moving average before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BrightnessEncoding {
    /// The SPAD response itself, `h(mu) = mu`.
    #[default]
    Identity,
    /// Log of the flux MLE, `h(mu) = ln(-ln(1 - mu) / (eta * w_exp))`.
    LogMle,
}

/// How the reference level moves when an event fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceUpdate {
    /// `ref <- ref + tau * p`.
    #[default]
    Additive,
    /// `ref <- h(mu_t)`.
    Resync,
}

/// Per-pixel threshold that grows linearly with the Bernoulli variance `mu (1 - mu)`,
/// from `tau_min` at zero variance to `tau_max` at the maximum of 1/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveThreshold {
    pub tau_min: f64,
    pub tau_max: f64,
}

impl AdaptiveThreshold {
    #[inline]
    pub fn threshold(&self, mu: f64) -> f64 {
        let var = (mu * (1.0 - mu)).clamp(0.0, 0.25);
        self.tau_min + (self.tau_max - self.tau_min) * (var / 0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventParams {
    /// Contrast threshold on the `h` scale.
    pub tau: f64,
    /// EMA smoothing factor in `(0, 1)`.
    pub beta: f64,
    /// Planes used to initialise the reference; no events are emitted before this plane.
    pub warmup: usize,
    pub encoding: BrightnessEncoding,
    pub adaptive: Option<AdaptiveThreshold>,
    pub reference_update: ReferenceUpdate,
}

impl EventParams {
    pub fn new(tau: f64, beta: f64, warmup: usize) -> Self {
        Self {
            tau,
            beta,
            warmup,
            encoding: BrightnessEncoding::Identity,
            adaptive: None,
            reference_update: ReferenceUpdate::Additive,
        }
    }

    pub fn with_encoding(mut self, encoding: BrightnessEncoding) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn with_adaptive(mut self, adaptive: AdaptiveThreshold) -> Self {
        self.adaptive = Some(adaptive);
        self
    }

    pub fn with_reference_update(mut self, update: ReferenceUpdate) -> Self {
        self.reference_update = update;
        self
    }

    pub fn validate(&self, planes: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param(format!("tau must be positive, got {}", self.tau)));
        }
        if self.warmup < 1 || self.warmup >= planes {
            return Err(Error::param(format!(
                "warmup must satisfy 1 <= T0 < T, got T0 = {} with T = {planes}",
                self.warmup
            )));
        }
        if let Some(a) = self.adaptive {
            if !(a.tau_min > 0.0 && a.tau_min <= a.tau_max && a.tau_max.is_finite()) {
                return Err(Error::param(format!(
                    "adaptive threshold needs 0 < tau_min <= tau_max, got [{}, {}]",
                    a.tau_min, a.tau_max
                )));
            }
        }
        Ok(())
    }
}

/// Applies the brightness encoding `h`. The log encoding returns `-inf` at `mu = 0` and
/// `+inf` at `mu = 1`.
pub fn brightness_encode(mu: f64, encoding: BrightnessEncoding, sensor: &SensorParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("moving average {mu} outside [0, 1]")));
    }
    Ok(encode(mu, encoding, sensor.eta * sensor.exposure))
}

#[inline]
fn encode(mu: f64, encoding: BrightnessEncoding, alpha: f64) -> f64 {
    match encoding {
        BrightnessEncoding::Identity => mu,
        BrightnessEncoding::LogMle => {
            if mu <= 0.0 {
                f64::NEG_INFINITY
            } else if mu >= 1.0 {
                f64::INFINITY
            } else {
                (-(-mu).ln_1p() / alpha).ln()
            }
        }
    }
}

/// Advances one pixel by one plane and returns the polarity of the event it fires, if any.
/// `alpha` is `eta * w_exp`.
#[inline]
pub(crate) fn step_pixel(
    mu: &mut f64,
    reference: &mut f64,
    bit: bool,
    t: usize,
    p: &EventParams,
    alpha: f64,
) -> Option<i8> {
    let m = p.beta * *mu + (1.0 - p.beta) * if bit { 1.0 } else { 0.0 };
    *mu = m;
    if t < p.warmup {
        if t + 1 == p.warmup {
            *reference = encode(m, p.encoding, alpha);
        }
        return None;
    }
    let level = encode(m, p.encoding, alpha);
    let diff = level - *reference;
    let tau = p.adaptive.map_or(p.tau, |a| a.threshold(m));
    // NaN (both levels infinite) never fires
    if !(diff.abs() > tau) {
        return None;
    }
    let polarity: i8 = if diff > 0.0 { 1 } else { -1 };
    let next = match p.reference_update {
        ReferenceUpdate::Additive => *reference + tau * polarity as f64,
        ReferenceUpdate::Resync => level,
    };
    // an infinite reference cannot move additively; snap it to the level
    *reference = if next.is_finite() { next } else { level };
    Some(polarity)
}

/// Streaming event emulator: one moving average and one reference level per pixel.
#[derive(Debug, Clone)]
pub struct EventEmulator {
    height: usize,
    width: usize,
    planes: usize,
    frame_rate: f64,
    alpha: f64,
    params: EventParams,
    mu: Vec<f64>,
    reference: Vec<f64>,
    events: Vec<Event>,
}

impl EventEmulator {
    pub fn new(
        height: usize,
        width: usize,
        planes: usize,
        sensor: &SensorParams,
        params: EventParams,
    ) -> Result<Self> {
        params.validate(planes)?;
        if height > u16::MAX as usize + 1 || width > u16::MAX as usize + 1 || planes > u32::MAX as usize {
            return Err(Error::param("frame too large for 16-bit event coordinates"));
        }
        Ok(Self {
            height,
            width,
            planes,
            frame_rate: sensor.frame_rate,
            alpha: sensor.eta * sensor.exposure,
            params,
            mu: vec![0.0; height * width],
            reference: vec![0.0; height * width],
            events: Vec::new(),
        })
    }

    pub fn params(&self) -> &EventParams {
        &self.params
    }

    /// Current moving averages, row-major.
    pub fn moving_average(&self) -> &[f64] {
        &self.mu
    }

    /// Current reference levels on the `h` scale, row-major.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn finish(self) -> EventStream {
        EventStream {
            height: self.height,
            width: self.width,
            planes: self.planes,
            frame_rate: self.frame_rate,
            events: self.events,
        }
    }
}

impl PlaneSink for EventEmulator {
    fn consume(&mut self, t: usize, plane: PlaneRef<'_>) -> Result<()> {
        check_plane(&plane, self.height, self.width)?;
        let alpha = self.alpha;
        for y in 0..self.height {
            let row = plane.row(y);
            for x in 0..self.width {
                let i = y * self.width + x;
                let bit = (row[x / 8] >> (x % 8)) & 1 == 1;
                let fired = step_pixel(&mut self.mu[i], &mut self.reference[i], bit, t, &self.params, alpha);
                if let Some(polarity) = fired {
                    self.events.push(Event {
                        t: t as u32,
                        x: x as u16,
                        y: y as u16,
                        polarity,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Emulates an event camera over the whole cube.
pub fn emulate_events(cube: &PhotonCube, params: &EventParams) -> Result<(EventStream, EventCube)> {
    let (planes, height, width) = cube.dims();
    let mut emu = EventEmulator::new(height, width, planes, cube.sensor(), *params)?;
    stream_volume(cube.bits(), &mut [&mut emu])?;
    let stream = emu.finish();
    let grid = EventCube::from_stream(&stream)?;
    Ok((stream, grid))
}

/// Runs one emulator per threshold in `taus` (strictly increasing) in a single pass.
pub fn event_stack(cube: &PhotonCube, taus: &[f64], params: &EventParams) -> Result<Vec<EventStream>> {
    if taus.is_empty() {
        return Err(Error::param("event stack needs at least one threshold"));
    }
    if taus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("event stack thresholds must be strictly increasing"));
    }
    let (planes, height, width) = cube.dims();
    let mut emulators = taus
        .iter()
        .map(|&tau| {
            EventEmulator::new(height, width, planes, cube.sensor(), EventParams { tau, ..*params })
        })
        .collect::<Result<Vec<_>>>()?;
    {
        let mut sinks: Vec<&mut dyn PlaneSink> =
            emulators.iter_mut().map(|e| e as &mut dyn PlaneSink).collect();
        stream_volume(cube.bits(), &mut sinks)?;
    }
    Ok(emulators.into_iter().map(EventEmulator::finish).collect())
}
