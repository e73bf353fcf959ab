//! Photon-cube synthesis and post-capture processing for single-photon sensors.
//!
//! A photon cube is a stack of binary frames. This crate samples cubes from flux videos,
//! stores them bit-packed, and computes streaming projections over them: sums and flux
//! estimates, coded exposures, emulated events and motion compensation. It also models the
//! readout bandwidth and power of each projection and simulates execution on a tiled
//! near-sensor processor.

pub mod bits;
pub mod coded;
pub mod cube;
pub mod error;
pub mod events;
pub mod hotpixel;
pub mod image;
pub mod io;
pub mod motion;
pub mod resources;
pub mod rng;
pub mod scene;
pub mod sensor;
pub mod stream;
pub mod tiled;

pub use bits::{BitVolume, PlaneRef};
pub use cube::{flux_mle, sample_photon_cube, sum_image, FluxField, FluxVideo, PhotonCube};
pub use error::{Error, Result};
pub use image::IntensityImage;
pub use sensor::SensorParams;
pub use stream::{stream_volume, PlaneSink};
