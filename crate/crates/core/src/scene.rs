//! Synthetic flux scenes with known motion, for testing and for the command line.
//!
//! Objects move at a constant velocity (pixels per plane) and sit at their anchor on plane
//! `floor(T / 2)`. Their offset on plane `t` is `round_half_even(v * (t - floor(T / 2)))` per
//! axis, the same discretisation as linear trajectories, so a matching trajectory holds an
//! axis-aligned object exactly still.

use crate::cube::FluxField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Dot,
    Square { size: usize },
    /// Square face with a 3 x 3 grid of pip sites, five of them dark.
    Die { size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    /// Flux of the object (photons/s).
    pub flux: f64,
    /// `[vx, vy]` in pixels per plane.
    pub velocity: [f64; 2],
    /// `[x, y]` of the object's top-left corner on the centre plane.
    pub anchor: [i64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    Constant(f64),
    /// Linear in `x` from `left` at column 0 to `right` at the last column.
    RampX { left: f64, right: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub background: Background,
    pub objects: Vec<SceneObject>,
    /// From plane `.0` on, every pixel has flux `.1`.
    pub step: Option<(usize, f64)>,
}

impl Scene {
    pub fn new(planes: usize, height: usize, width: usize, background: Background) -> Result<Self> {
        if planes == 0 || height == 0 || width == 0 {
            return Err(Error::param("scene dimensions must be nonzero"));
        }
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        let valid = match background {
            Background::Constant(v) => ok(v),
            Background::RampX { left, right } => ok(left) && ok(right),
        };
        if !valid {
            return Err(Error::param("background flux must be finite and non-negative"));
        }
        Ok(Self {
            planes,
            height,
            width,
            background,
            objects: Vec::new(),
            step: None,
        })
    }

    pub fn constant(planes: usize, height: usize, width: usize, flux: f64) -> Result<Self> {
        Self::new(planes, height, width, Background::Constant(flux))
    }

    pub fn ramp(planes: usize, height: usize, width: usize, left: f64, right: f64) -> Result<Self> {
        Self::new(planes, height, width, Background::RampX { left, right })
    }

    /// Uniform `before`, switching to `after` at plane `at`.
    pub fn step(planes: usize, height: usize, width: usize, before: f64, after: f64, at: usize) -> Result<Self> {
        if !(after >= 0.0 && after.is_finite()) {
            return Err(Error::param("step flux must be finite and non-negative"));
        }
        let mut s = Self::constant(planes, height, width, before)?;
        s.step = Some((at, after));
        Ok(s)
    }

    pub fn with_object(mut self, object: SceneObject) -> Result<Self> {
        if !(object.flux >= 0.0 && object.flux.is_finite()) || !object.velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::param("object flux and velocity must be finite"));
        }
        if matches!(object.shape, Shape::Square { size: 0 } | Shape::Die { size: 0 }) {
            return Err(Error::param("object size must be nonzero"));
        }
        self.objects.push(object);
        Ok(self)
    }

    /// Object centred in the frame on the centre plane.
    pub fn centred(&self, shape: Shape, flux: f64, velocity: [f64; 2]) -> SceneObject {
        let size = match shape {
            Shape::Dot => 1,
            Shape::Square { size } | Shape::Die { size } => size,
        } as i64;
        SceneObject {
            shape,
            flux,
            velocity,
            anchor: [self.width as i64 / 2 - size / 2, self.height as i64 / 2 - size / 2],
        }
    }

    /// Integer offset of a moving object on plane `t`.
    pub fn offset(&self, velocity: [f64; 2], t: usize) -> [i64; 2] {
        let dt = t as f64 - (self.planes / 2) as f64;
        [
            (velocity[0] * dt).round_ties_even() as i64,
            (velocity[1] * dt).round_ties_even() as i64,
        ]
    }

    fn background_at(&self, x: usize) -> f64 {
        match self.background {
            Background::Constant(v) => v,
            Background::RampX { left, right } => {
                if self.width == 1 {
                    left
                } else {
                    left + (right - left) * x as f64 / (self.width - 1) as f64
                }
            }
        }
    }
}

fn object_flux(obj: &SceneObject, lx: i64, ly: i64) -> Option<f64> {
    match obj.shape {
        Shape::Dot => (lx == 0 && ly == 0).then_some(obj.flux),
        Shape::Square { size } => {
            let s = size as i64;
            (lx >= 0 && ly >= 0 && lx < s && ly < s).then_some(obj.flux)
        }
        Shape::Die { size } => {
            let s = size as i64;
            if !(lx >= 0 && ly >= 0 && lx < s && ly < s) {
                return None;
            }
            // pips at the corners and centre of a 3 x 3 grid
            let (cx, cy) = (lx * 3 / s, ly * 3 / s);
            let pip = (cx != 1 && cy != 1) || (cx == 1 && cy == 1);
            let (px, py) = (lx * 3 % s, ly * 3 % s);
            let inner = px * 4 >= s && px * 4 < 3 * s && py * 4 >= s && py * 4 < 3 * s;
            Some(if pip && inner { obj.flux * 0.1 } else { obj.flux })
        }
    }
}

impl FluxField for Scene {
    fn dims(&self) -> (usize, usize, usize) {
        (self.planes, self.height, self.width)
    }

    fn flux(&self, t: usize, y: usize, x: usize) -> f64 {
        if let Some((at, after)) = self.step {
            if t >= at {
                return after;
            }
        }
        // later objects are drawn on top
        for obj in self.objects.iter().rev() {
            let [ox, oy] = self.offset(obj.velocity, t);
            let lx = x as i64 - obj.anchor[0] - ox;
            let ly = y as i64 - obj.anchor[1] - oy;
            if let Some(f) = object_flux(obj, lx, ly) {
                return f;
            }
        }
        self.background_at(x)
    }
}
