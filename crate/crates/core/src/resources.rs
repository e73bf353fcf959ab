//! Readout bandwidth and power accounting for projections computed on a small
//! near-sensor processor.
//!
//! Bandwidth uses 1 kb = 1024 bits. Readout power is linear in bandwidth; processing power and
//! time are calibration inputs measured on hardware, not derived here.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Fixed-size readout parameters of the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutSpec {
    pub height: usize,
    pub width: usize,
    /// Projection readouts per second.
    pub readout_rate: f64,
    /// Bits per projection value.
    pub bit_depth: u32,
    pub timestamp_bits: u32,
    /// Bit-planes per second for raw photon-cube readout.
    pub photon_cube_rate: f64,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        Self {
            height: 12,
            width: 24,
            readout_rate: 40.0,
            bit_depth: 12,
            timestamp_bits: 8,
            photon_cube_rate: 100_000.0,
        }
    }
}

impl ReadoutSpec {
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Address bits + timestamp bits + 1 polarity bit.
    pub fn event_bits(&self) -> u32 {
        let px = self.pixels().max(1) as u64;
        let address = 64 - (px - 1).leading_zeros();
        address + self.timestamp_bits + 1
    }

    /// Planes per readout period.
    pub fn planes_per_readout(&self) -> f64 {
        self.photon_cube_rate / self.readout_rate
    }

    /// True when a readout window holds more planes than the timestamp can index. Timestamps
    /// restart at every readout window, so they alias inside it.
    pub fn timestamp_overflows(&self) -> bool {
        self.planes_per_readout() > 2f64.powi(self.timestamp_bits as i32)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.height == 0 || self.width == 0 {
            return Err(Error::param("readout array must be non-empty"));
        }
        if !positive(self.readout_rate) || !positive(self.photon_cube_rate) {
            return Err(Error::param("readout and photon-cube rates must be positive"));
        }
        if self.bit_depth == 0 || self.bit_depth > 32 || self.timestamp_bits > 32 {
            return Err(Error::param("bit depths must lie in 1..=32"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProjectionKind {
    SumImage,
    Vcs,
    Motion,
    Event,
    PhotonCube,
    /// Several projections read out together.
    Multi(Vec<ProjectionKind>),
}

impl ProjectionKind {
    /// The combination benchmarked on hardware: coded exposure, motion and events.
    pub fn three_projections() -> Self {
        Self::Multi(vec![Self::Vcs, Self::Motion, Self::Event])
    }

    pub fn label(&self) -> String {
        match self {
            Self::SumImage => "sum".into(),
            Self::Vcs => "vcs".into(),
            Self::Motion => "motion".into(),
            Self::Event => "event".into(),
            Self::PhotonCube => "photon-cube".into(),
            Self::Multi(parts) => parts.iter().map(Self::label).collect::<Vec<_>>().join("+"),
        }
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    /// Parses a label such as `sum`, `event` or `vcs+motion+event`.
    fn from_str(s: &str) -> Result<Self> {
        let single = |s: &str| match s.trim() {
            "sum" => Ok(Self::SumImage),
            "vcs" => Ok(Self::Vcs),
            "motion" => Ok(Self::Motion),
            "event" => Ok(Self::Event),
            "photon-cube" => Ok(Self::PhotonCube),
            other => Err(Error::param(format!("unknown projection kind {other:?}"))),
        };
        if s.contains('+') {
            s.split('+').map(single).collect::<Result<Vec<_>>>().map(Self::Multi)
        } else {
            single(s)
        }
    }
}

/// Readout bandwidth in kbps. Events need `event_rate` in events per second.
pub fn bandwidth(kind: &ProjectionKind, spec: &ReadoutSpec, event_rate: Option<f64>) -> Result<f64> {
    spec.validate()?;
    let px = spec.pixels() as f64;
    Ok(match kind {
        ProjectionKind::SumImage | ProjectionKind::Vcs | ProjectionKind::Motion => {
            px * spec.bit_depth as f64 * spec.readout_rate / 1024.0
        }
        ProjectionKind::PhotonCube => px * spec.photon_cube_rate / 1024.0,
        ProjectionKind::Event => {
            let rate = event_rate.ok_or_else(|| Error::param("event bandwidth needs an event rate"))?;
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::param(format!("event rate must be non-negative, got {rate}")));
            }
            rate * spec.event_bits() as f64 / 1024.0
        }
        ProjectionKind::Multi(parts) => {
            if parts.is_empty() {
                return Err(Error::param("empty multi-projection"));
            }
            parts
                .iter()
                .map(|p| bandwidth(p, spec, event_rate))
                .sum::<Result<f64>>()?
        }
    })
}

/// Processing calibration of one projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Average processing power, already scaled by the duty cycle.
    pub processing_uw: f64,
    /// Processing time per readout period.
    pub processing_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec {
    /// Readout energy in nW per kbps.
    pub readout_nw_per_kbps: f64,
    pub sum: Calibration,
    pub vcs: Calibration,
    pub motion: Calibration,
    pub event: Calibration,
    pub photon_cube: Calibration,
}

impl Default for PowerSpec {
    /// Hardware measurements on a 12 x 24 array at 40 Hz readout.
    fn default() -> Self {
        let cal = |processing_uw, processing_ms| Calibration {
            processing_uw,
            processing_ms,
        };
        Self {
            readout_nw_per_kbps: 54.0,
            sum: cal(0.3, 0.981),
            vcs: cal(3.0, 1.678),
            motion: cal(1.3, 1.096),
            event: cal(2.4, 9.817),
            photon_cube: cal(5.4e-3, 0.007),
        }
    }
}

impl PowerSpec {
    /// Calibration of a kind; multi-projections run sequentially, so both terms add up.
    pub fn calibration(&self, kind: &ProjectionKind) -> Calibration {
        match kind {
            ProjectionKind::SumImage => self.sum,
            ProjectionKind::Vcs => self.vcs,
            ProjectionKind::Motion => self.motion,
            ProjectionKind::Event => self.event,
            ProjectionKind::PhotonCube => self.photon_cube,
            ProjectionKind::Multi(parts) => parts.iter().fold(
                Calibration {
                    processing_uw: 0.0,
                    processing_ms: 0.0,
                },
                |acc, p| {
                    let c = self.calibration(p);
                    Calibration {
                        processing_uw: acc.processing_uw + c.processing_uw,
                        processing_ms: acc.processing_ms + c.processing_ms,
                    }
                },
            ),
        }
    }
}

/// Active power scaled by the duty cycle.
pub fn processing_power(active_uw: f64, duty: f64) -> Result<f64> {
    if !(active_uw >= 0.0 && duty >= 0.0) {
        return Err(Error::param("power and duty cycle must be non-negative"));
    }
    Ok(active_uw * duty)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceRow {
    pub name: String,
    pub processing_ms: f64,
    pub bandwidth_kbps: f64,
    pub processing_uw: f64,
    pub readout_uw: f64,
    /// Photon-detection power; zero unless the row was scaled to a full array.
    pub detection_uw: f64,
    pub total_uw: f64,
}

/// Builds a row from a bandwidth and a processing power.
pub fn power(
    name: impl Into<String>,
    bandwidth_kbps: f64,
    processing_uw: f64,
    processing_ms: f64,
    spec: &PowerSpec,
) -> Result<ResourceRow> {
    if !(bandwidth_kbps >= 0.0 && processing_uw >= 0.0 && processing_ms >= 0.0) {
        return Err(Error::param("bandwidth, power and time must be non-negative"));
    }
    let readout_uw = spec.readout_nw_per_kbps * bandwidth_kbps / 1000.0;
    Ok(ResourceRow {
        name: name.into(),
        processing_ms,
        bandwidth_kbps,
        processing_uw,
        readout_uw,
        detection_uw: 0.0,
        total_uw: processing_uw + readout_uw,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub rows: Vec<ResourceRow>,
}

/// One row per projection kind.
pub fn report(
    kinds: &[(String, ProjectionKind)],
    spec: &ReadoutSpec,
    power_spec: &PowerSpec,
    event_rate: Option<f64>,
) -> Result<ResourceReport> {
    let rows = kinds
        .iter()
        .map(|(name, kind)| {
            let kbps = bandwidth(kind, spec, event_rate)?;
            let cal = power_spec.calibration(kind);
            power(name.clone(), kbps, cal.processing_uw, cal.processing_ms, power_spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResourceReport { rows })
}

/// Event rate that reproduces the hardware benchmark (events per second).
pub const BENCHMARK_EVENT_RATE: f64 = 5760.0;

/// The six benchmark rows with default constants.
pub fn benchmark_report(config: &ResourceConfig) -> Result<ResourceReport> {
    let kinds = [
        ("12-bit sum image", ProjectionKind::SumImage),
        ("Snapshot compressive", ProjectionKind::Vcs),
        ("Motion projection", ProjectionKind::Motion),
        ("Event camera", ProjectionKind::Event),
        ("Three projections", ProjectionKind::three_projections()),
        ("Photon-cube readout", ProjectionKind::PhotonCube),
    ]
    .map(|(n, k)| (n.to_string(), k));
    report(&kinds, &config.readout, &config.power, Some(config.event_rate))
}

/// Linear scaling of processing and readout terms to another pixel count, plus a flat
/// photon-detection term.
pub fn scale_to_array(
    report: &ResourceReport,
    from_pixels: usize,
    to_pixels: usize,
    detection_uw: f64,
) -> Result<ResourceReport> {
    if from_pixels == 0 || to_pixels == 0 {
        return Err(Error::param("pixel counts must be positive"));
    }
    if !(detection_uw >= 0.0) {
        return Err(Error::param("detection power must be non-negative"));
    }
    let k = to_pixels as f64 / from_pixels as f64;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let processing_uw = r.processing_uw * k;
            let readout_uw = r.readout_uw * k;
            let detection = r.detection_uw + detection_uw;
            ResourceRow {
                name: r.name.clone(),
                processing_ms: r.processing_ms,
                bandwidth_kbps: r.bandwidth_kbps * k,
                processing_uw,
                readout_uw,
                detection_uw: detection,
                total_uw: processing_uw + readout_uw + detection,
            }
        })
        .collect();
    Ok(ResourceReport { rows })
}

impl ResourceReport {
    pub fn row(&self, name: &str) -> Option<&ResourceRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Aligned text table; power in µW rounded to 0.01, totals to 0.1.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(10);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>12}  {:>12}  {:>12}  {:>12}  {:>10}",
            "projection", "time_ms", "kbps", "proc_uW", "readout_uW", "detect_uW", "total_uW"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>10.3}  {:>12.2}  {:>12.4}  {:>12.2}  {:>12.2}  {:>10.1}",
                r.name, r.processing_ms, r.bandwidth_kbps, r.processing_uw, r.readout_uw, r.detection_uw, r.total_uw
            );
        }
        out
    }

    /// CSV with full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("projection,processing_ms,bandwidth_kbps,processing_uw,readout_uw,detection_uw,total_uw\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.name, r.processing_ms, r.bandwidth_kbps, r.processing_uw, r.readout_uw, r.detection_uw, r.total_uw
            );
        }
        out
    }
}

/// All overridable constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceConfig {
    pub readout: ReadoutSpec,
    pub power: PowerSpec,
    pub event_rate: f64,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            readout: ReadoutSpec::default(),
            power: PowerSpec::default(),
            event_rate: BENCHMARK_EVENT_RATE,
        }
    }
}

impl ResourceConfig {
    /// Recognised keys for [`ResourceConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "height",
        "width",
        "readout_rate",
        "bit_depth",
        "timestamp_bits",
        "photon_cube_rate",
        "event_rate",
        "readout_nw_per_kbps",
        "processing_uw.{sum,vcs,motion,event,photon_cube}",
        "processing_ms.{sum,vcs,motion,event,photon_cube}",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::param(format!("invalid value {value:?} for {key}"));
        let float = || value.trim().parse::<f64>().map_err(|_| bad());
        let int = || value.trim().parse::<usize>().map_err(|_| bad());
        match key {
            "height" => self.readout.height = int()?,
            "width" => self.readout.width = int()?,
            "readout_rate" => self.readout.readout_rate = float()?,
            "bit_depth" => self.readout.bit_depth = u32::try_from(int()?).map_err(|_| bad())?,
            "timestamp_bits" => self.readout.timestamp_bits = u32::try_from(int()?).map_err(|_| bad())?,
            "photon_cube_rate" => self.readout.photon_cube_rate = float()?,
            "event_rate" => self.event_rate = float()?,
            "readout_nw_per_kbps" => self.power.readout_nw_per_kbps = float()?,
            _ => {
                let (field, kind) = key
                    .split_once('.')
                    .ok_or_else(|| Error::param(format!("unknown resource key {key:?}")))?;
                let cal = match kind {
                    "sum" => &mut self.power.sum,
                    "vcs" => &mut self.power.vcs,
                    "motion" => &mut self.power.motion,
                    "event" => &mut self.power.event,
                    "photon_cube" => &mut self.power.photon_cube,
                    _ => return Err(Error::param(format!("unknown resource key {key:?}"))),
                };
                match field {
                    "processing_uw" => cal.processing_uw = float()?,
                    "processing_ms" => cal.processing_ms = float()?,
                    _ => return Err(Error::param(format!("unknown resource key {key:?}"))),
                }
            }
        }
        if !self.event_rate.is_finite() || self.event_rate < 0.0 {
            return Err(bad());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ReadoutSpec {
        ReadoutSpec::default()
    }

    #[test]
    fn event_bits_for_288_pixels() {
        assert_eq!(spec().event_bits(), 18);
        let one = ReadoutSpec { height: 1, width: 1, ..spec() };
        assert_eq!(one.event_bits(), 9);
        let pow2 = ReadoutSpec { height: 16, width: 16, ..spec() };
        assert_eq!(pow2.event_bits(), 17);
    }

    #[test]
    fn image_and_cube_bandwidth() {
        assert_eq!(bandwidth(&ProjectionKind::SumImage, &spec(), None).unwrap(), 135.0);
        assert_eq!(bandwidth(&ProjectionKind::PhotonCube, &spec(), None).unwrap(), 28125.0);
        assert_eq!(bandwidth(&ProjectionKind::Event, &spec(), Some(5760.0)).unwrap(), 101.25);
        assert!(bandwidth(&ProjectionKind::Event, &spec(), None).is_err());
        assert_eq!(
            bandwidth(&ProjectionKind::three_projections(), &spec(), Some(5760.0)).unwrap(),
            135.0 + 135.0 + 101.25
        );
    }

    #[test]
    fn readout_power_rows() {
        let p = PowerSpec::default();
        let r = power("sum", 135.0, 0.3, 0.981, &p).unwrap();
        assert!((r.readout_uw - 7.29).abs() < 1e-12);
        assert!((r.total_uw - 7.59).abs() < 1e-12);
        let zero = power("x", 0.0, 0.0, 0.0, &p).unwrap();
        assert_eq!(zero.total_uw, 0.0);
        assert!(power("x", -1.0, 0.0, 0.0, &p).is_err());
    }

    #[test]
    fn scaling_is_linear() {
        let base = benchmark_report(&ResourceConfig::default()).unwrap();
        assert_eq!(scale_to_array(&base, 288, 288, 0.0).unwrap(), base);
        let double = scale_to_array(&base, 288, 576, 0.0).unwrap();
        for (a, b) in base.rows.iter().zip(&double.rows) {
            assert!((b.readout_uw - 2.0 * a.readout_uw).abs() < 1e-9);
            assert!((b.processing_uw - 2.0 * a.processing_uw).abs() < 1e-12);
        }
        let lit = scale_to_array(&base, 288, 288, 1000.0).unwrap();
        assert!((lit.rows[0].total_uw - base.rows[0].total_uw - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("vcs+motion+event".parse::<ProjectionKind>().unwrap(), ProjectionKind::three_projections());
        assert!("bogus".parse::<ProjectionKind>().is_err());
        assert_eq!(ProjectionKind::three_projections().label(), "vcs+motion+event");
    }

    #[test]
    fn config_overrides() {
        let mut c = ResourceConfig::default();
        c.set("readout_rate", "80").unwrap();
        c.set("processing_uw.event", "1.5").unwrap();
        assert_eq!(c.readout.readout_rate, 80.0);
        assert_eq!(c.power.event.processing_uw, 1.5);
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("processing_uw.nope", "1").is_err());
        assert!(c.set("height", "x").is_err());
        assert!(c.set("event_rate", "-1").is_err());
    }

    #[test]
    fn timestamps_alias_at_default_rates() {
        assert_eq!(spec().planes_per_readout(), 2500.0);
        assert!(spec().timestamp_overflows());
    }

    #[test]
    fn table_and_csv_render_every_row() {
        let r = benchmark_report(&ResourceConfig::default()).unwrap();
        assert_eq!(r.to_table().lines().count(), 7);
        assert_eq!(r.to_csv().lines().count(), 7);
        assert!(r.to_table().contains("1518.8"));
    }
}
