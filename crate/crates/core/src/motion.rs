//! Shift-and-sum motion projections: emulated sensor motion along linear or parabolic
//! trajectories, motion stacks, PSF extraction and flow-guided stack blending.

use std::fmt::Write as _;

use crate::bits::{BitVolume, PlaneRef};
use crate::cube::PhotonCube;
use crate::error::{Error, Result};
use crate::hotpixel::HotPixelMask;
use crate::image::IntensityImage;
use crate::io::FlowField;
use crate::sensor::SensorParams;
use crate::stream::{check_plane, stream_volume, PlaneSink};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryKind {
    /// `r(t) = v (t - c) p`, `v` in pixels per plane.
    Linear { velocity: f64, direction: [f64; 2] },
    /// `r(t) = (v_max / T) (t - c)^2 p`; `v_max` is the slope at both ends.
    Parabolic { max_velocity: f64, direction: [f64; 2] },
    Custom,
}

/// Integer displacement `[dx, dy]` per plane.
///
/// Both parametric kinds are centred on `c = floor(T / 2)`, where the shift is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    shifts: Vec<[i32; 2]>,
    kind: TrajectoryKind,
}

fn unit(direction: [f64; 2]) -> Result<[f64; 2]> {
    let norm = direction[0].hypot(direction[1]);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::param(format!("direction {direction:?} cannot be normalised")));
    }
    Ok([direction[0] / norm, direction[1] / norm])
}

fn discretize(planes: usize, dir: [f64; 2], offset: impl Fn(f64) -> f64) -> Vec<[i32; 2]> {
    let centre = (planes / 2) as f64;
    (0..planes)
        .map(|t| {
            let s = offset(t as f64 - centre);
            [
                (s * dir[0]).round_ties_even() as i32,
                (s * dir[1]).round_ties_even() as i32,
            ]
        })
        .collect()
}

impl Trajectory {
    pub fn linear(velocity: f64, direction: [f64; 2], planes: usize) -> Result<Self> {
        if planes == 0 {
            return Err(Error::param("trajectory needs at least one plane"));
        }
        if !velocity.is_finite() {
            return Err(Error::param("velocity must be finite"));
        }
        let direction = unit(direction)?;
        Ok(Self {
            shifts: discretize(planes, direction, |s| velocity * s),
            kind: TrajectoryKind::Linear { velocity, direction },
        })
    }

    pub fn parabolic(max_velocity: f64, direction: [f64; 2], planes: usize) -> Result<Self> {
        if planes == 0 {
            return Err(Error::param("trajectory needs at least one plane"));
        }
        if !(max_velocity > 0.0 && max_velocity.is_finite()) {
            return Err(Error::param(format!(
                "parabolic trajectories need v_max > 0, got {max_velocity}"
            )));
        }
        let direction = unit(direction)?;
        let a = max_velocity / planes as f64;
        Ok(Self {
            shifts: discretize(planes, direction, |s| a * (s * s)),
            kind: TrajectoryKind::Parabolic {
                max_velocity,
                direction,
            },
        })
    }

    pub fn custom(shifts: Vec<[i32; 2]>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::param("trajectory needs at least one plane"));
        }
        Ok(Self {
            shifts,
            kind: TrajectoryKind::Custom,
        })
    }

    pub fn zero(planes: usize) -> Result<Self> {
        Self::custom(vec![[0, 0]; planes])
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn shifts(&self) -> &[[i32; 2]] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Largest `|dx|` or `|dy|` over the trajectory.
    pub fn max_abs_shift(&self) -> u32 {
        self.shifts
            .iter()
            .map(|s| s[0].unsigned_abs().max(s[1].unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    /// Plain-text `t dx dy` lines, preceded by a `#` comment naming the kind.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = match self.kind {
            TrajectoryKind::Linear { velocity, direction } => writeln!(
                out,
                "# linear v={velocity} dir={},{}",
                direction[0], direction[1]
            ),
            TrajectoryKind::Parabolic {
                max_velocity,
                direction,
            } => writeln!(
                out,
                "# parabolic vmax={max_velocity} dir={},{}",
                direction[0], direction[1]
            ),
            TrajectoryKind::Custom => writeln!(out, "# custom"),
        };
        for (t, [dx, dy]) in self.shifts.iter().enumerate() {
            let _ = writeln!(out, "{t} {dx} {dy}");
        }
        out
    }

    /// Parses `t dx dy` lines; `t` must run 0, 1, 2, ... The result is a custom trajectory.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut shifts = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed: Option<(usize, i32, i32)> = match fields.as_slice() {
                [t, dx, dy] => t.parse().ok().zip(dx.parse().ok()).zip(dy.parse().ok()).map(|((t, dx), dy)| (t, dx, dy)),
                _ => None,
            };
            let (t, dx, dy) = parsed.ok_or_else(|| Error::Format(format!("bad trajectory line {line:?}")))?;
            if t != shifts.len() {
                return Err(Error::Format(format!("expected t = {}, found {t}", shifts.len())));
            }
            shifts.push([dx, dy]);
        }
        Self::custom(shifts)
    }
}

/// Normalised shift-and-sum image.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftImage {
    pub height: usize,
    pub width: usize,
    /// `sums / counts`, or 0 where `counts == 0`.
    pub values: Vec<f64>,
    /// Number of accumulated planes `N(x)`.
    pub counts: Vec<u32>,
    /// Raw photon counts before normalisation.
    pub sums: Vec<u32>,
}

impl ShiftImage {
    pub fn to_image(&self) -> Result<IntensityImage> {
        IntensityImage::new(self.height, self.width, self.values.clone())
    }

    /// Pixels that received no accumulation.
    pub fn vacant(&self) -> Vec<bool> {
        self.counts.iter().map(|&c| c == 0).collect()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Streaming motion projection.
#[derive(Debug, Clone)]
pub struct MotionAccumulator<'a> {
    height: usize,
    width: usize,
    shifts: &'a [[i32; 2]],
    hot: Option<&'a HotPixelMask>,
    sums: Vec<u32>,
    counts: Vec<u32>,
}

impl<'a> MotionAccumulator<'a> {
    pub fn new(
        height: usize,
        width: usize,
        trajectory: &'a Trajectory,
        hot: Option<&'a HotPixelMask>,
    ) -> Result<Self> {
        if let Some(mask) = hot {
            if mask.dims() != (height, width) {
                return Err(Error::dims("hot-pixel mask does not match the frame"));
            }
        }
        Ok(Self {
            height,
            width,
            shifts: &trajectory.shifts,
            hot,
            sums: vec![0; height * width],
            counts: vec![0; height * width],
        })
    }

    pub fn finish(self) -> ShiftImage {
        let values = self
            .sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &n)| if n > 0 { s as f64 / n as f64 } else { 0.0 })
            .collect();
        ShiftImage {
            height: self.height,
            width: self.width,
            values,
            counts: self.counts,
            sums: self.sums,
        }
    }
}

/// Half-open range of output coordinates whose source `coord + shift` stays inside `0..len`.
#[inline]
pub(crate) fn valid_range(shift: i32, len: usize) -> std::ops::Range<usize> {
    let len = len as i64;
    let s = shift as i64;
    let lo = (-s).clamp(0, len);
    let hi = (len - s).clamp(0, len);
    lo as usize..hi.max(lo) as usize
}

impl PlaneSink for MotionAccumulator<'_> {
    fn consume(&mut self, t: usize, plane: PlaneRef<'_>) -> Result<()> {
        check_plane(&plane, self.height, self.width)?;
        let [dx, dy] = *self
            .shifts
            .get(t)
            .ok_or_else(|| Error::dims(format!("trajectory has no shift for plane {t}")))?;
        let w = self.width;
        let xs = valid_range(dx, w);
        for y in valid_range(dy, self.height) {
            let sy = (y as i64 + dy as i64) as usize;
            let row = plane.row(sy);
            for x in xs.clone() {
                let sx = (x as i64 + dx as i64) as usize;
                if self.hot.is_some_and(|m| m.is_hot(sy, sx)) {
                    continue;
                }
                let i = y * w + x;
                self.counts[i] += 1;
                self.sums[i] += ((row[sx / 8] >> (sx % 8)) & 1) as u32;
            }
        }
        Ok(())
    }
}

fn check_length(cube: &PhotonCube, traj: &Trajectory) -> Result<()> {
    if traj.len() != cube.planes() {
        return Err(Error::dims(format!(
            "trajectory has {} shifts for {} planes",
            traj.len(),
            cube.planes()
        )));
    }
    Ok(())
}

/// `I(x) = sum_t B_t(x + r(t)) / N(x)` over in-bounds, non-hot sources.
pub fn motion_project(
    cube: &PhotonCube,
    traj: &Trajectory,
    hot: Option<&HotPixelMask>,
) -> Result<ShiftImage> {
    check_length(cube, traj)?;
    let mut acc = MotionAccumulator::new(cube.height(), cube.width(), traj, hot)?;
    stream_volume(cube.bits(), &mut [&mut acc])?;
    Ok(acc.finish())
}

/// Blur kernel of a trajectory: the projection of a static point at the frame centre,
/// using raw counts normalised to unit sum.
pub fn extract_psf(traj: &Trajectory, dims: (usize, usize)) -> Result<IntensityImage> {
    let (h, w) = dims;
    if traj.is_empty() || h == 0 || w == 0 {
        return Err(Error::param("PSF needs a non-empty trajectory and frame"));
    }
    let (cy, cx) = ((h / 2) as i64, (w / 2) as i64);
    for [dx, dy] in traj.shifts() {
        let (ky, kx) = (cy - *dy as i64, cx - *dx as i64);
        if ky < 0 || kx < 0 || ky >= h as i64 || kx >= w as i64 {
            return Err(Error::dims(format!(
                "a {h}x{w} frame clips the kernel at shift ({dx}, {dy})"
            )));
        }
    }
    let delta = BitVolume::from_fn(traj.len(), h, w, |_, y, x| {
        y as i64 == cy && x as i64 == cx
    })?;
    let cube = PhotonCube::new(delta, SensorParams::ideal(1.0)?)?;
    let proj = motion_project(&cube, traj, None)?;
    let total: u64 = proj.sums.iter().map(|&s| s as u64).sum();
    let values = proj.sums.iter().map(|&s| s as f64 / total as f64).collect();
    IntensityImage::new(h, w, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionStack {
    pub layers: Vec<(Trajectory, ShiftImage)>,
}

/// Projects along every trajectory in a single pass over the cube.
pub fn motion_stack(cube: &PhotonCube, trajectories: &[Trajectory]) -> Result<MotionStack> {
    if trajectories.is_empty() {
        return Err(Error::param("motion stack needs at least one trajectory"));
    }
    for t in trajectories {
        check_length(cube, t)?;
    }
    let mut accs = trajectories
        .iter()
        .map(|t| MotionAccumulator::new(cube.height(), cube.width(), t, None))
        .collect::<Result<Vec<_>>>()?;
    {
        let mut sinks: Vec<&mut dyn PlaneSink> = accs.iter_mut().map(|a| a as &mut dyn PlaneSink).collect();
        stream_volume(cube.bits(), &mut sinks)?;
    }
    Ok(MotionStack {
        layers: trajectories
            .iter()
            .cloned()
            .zip(accs.into_iter().map(MotionAccumulator::finish))
            .collect(),
    })
}

/// Picks, per pixel, the linear layer whose velocity best matches the flow.
///
/// `flow` is the displacement over the whole cube (`T` planes); its component along the
/// layers' common direction divided by `T` is compared with each layer's velocity. Ties go
/// to the smaller velocity.
pub fn blend_stack(stack: &MotionStack, flow: &FlowField) -> Result<IntensityImage> {
    let (first_traj, first_img) = stack
        .layers
        .first()
        .ok_or_else(|| Error::param("cannot blend an empty stack"))?;
    let (h, w) = (first_img.height, first_img.width);
    if (flow.height, flow.width) != (h, w) {
        return Err(Error::dims("flow field does not match the stack"));
    }
    let planes = first_traj.len() as f64;
    let mut direction = None;
    let mut candidates = Vec::with_capacity(stack.layers.len());
    for (k, (traj, img)) in stack.layers.iter().enumerate() {
        let TrajectoryKind::Linear { velocity, direction: d } = traj.kind() else {
            return Err(Error::param("blending needs linear trajectories"));
        };
        if (img.height, img.width) != (h, w) {
            return Err(Error::dims("stack layers differ in size"));
        }
        match direction {
            None => direction = Some(d),
            Some(d0) => {
                let d0: [f64; 2] = d0;
                if (d0[0] - d[0]).abs() > 1e-9 || (d0[1] - d[1]).abs() > 1e-9 {
                    return Err(Error::param("stack layers do not share a direction"));
                }
            }
        }
        candidates.push((velocity, k));
    }
    let dir = direction.unwrap();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut values = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let [u, v] = flow.get(y, x);
            let target = (u as f64 * dir[0] + v as f64 * dir[1]) / planes;
            let mut best = candidates[0];
            let mut best_err = (best.0 - target).abs();
            for &c in &candidates[1..] {
                let err = (c.0 - target).abs();
                if err < best_err {
                    best = c;
                    best_err = err;
                }
            }
            values[y * w + x] = stack.layers[best.1].1.get(y, x);
        }
    }
    IntensityImage::new(h, w, values)
}
