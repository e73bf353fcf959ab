use crate::error::{Error, Result};

/// Per-pixel detection model of a single-photon sensor.
///
/// A bit-plane pixel fires with probability `1 - exp(-(eta * flux + dark_count_rate) * exposure)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    /// Photon detection efficiency, in `(0, 1]`.
    pub eta: f64,
    /// Dark count rate in counts per second.
    pub dark_count_rate: f64,
    /// Exposure of one bit-plane in seconds.
    pub exposure: f64,
    /// Bit-planes per second.
    pub frame_rate: f64,
}

impl SensorParams {
    pub fn new(eta: f64, dark_count_rate: f64, exposure: f64, frame_rate: f64) -> Result<Self> {
        let params = Self {
            eta,
            dark_count_rate,
            exposure,
            frame_rate,
        };
        params.validate()?;
        Ok(params)
    }

    /// Ideal sensor at `frame_rate` with a full duty cycle (`exposure = 1 / frame_rate`).
    pub fn ideal(frame_rate: f64) -> Result<Self> {
        Self::new(1.0, 0.0, 1.0 / frame_rate, frame_rate)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.dark_count_rate >= 0.0 && self.dark_count_rate.is_finite()) {
            return Err(Error::param(format!(
                "dark count rate must be finite and >= 0, got {}",
                self.dark_count_rate
            )));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::param(format!("frame rate must be > 0, got {}", self.frame_rate)));
        }
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            return Err(Error::param(format!("exposure must be > 0, got {}", self.exposure)));
        }
        // Allow one ulp of slack so that exposure = 1/frame_rate round-trips.
        let period = 1.0 / self.frame_rate;
        if self.exposure > period * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::param(format!(
                "exposure {} s exceeds the bit-plane period {} s",
                self.exposure, period
            )));
        }
        Ok(())
    }

    /// Probability that a pixel records a detection given incident `flux` (photons/s).
    #[inline]
    pub fn detection_probability(&self, flux: f64) -> f64 {
        self.detection_probability_with_dark(flux, self.dark_count_rate)
    }

    #[inline]
    pub fn detection_probability_with_dark(&self, flux: f64, dark_count_rate: f64) -> f64 {
        -(-(self.eta * flux + dark_count_rate) * self.exposure).exp_m1()
    }

    /// Duration of one bit-plane slot in seconds.
    pub fn plane_period(&self) -> f64 {
        1.0 / self.frame_rate
    }
}
