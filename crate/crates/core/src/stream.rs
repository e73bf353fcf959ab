//! Single-pass plane streaming.
//!
//! Every projection is written as a [`PlaneSink`] that consumes bit-planes in order, so
//! several projections can share one pass over a cube (in memory or read from disk).

use crate::bits::{BitVolume, PlaneRef};
use crate::error::{Error, Result};

pub trait PlaneSink {
    /// Consumes plane `t`. Planes arrive in increasing `t`, starting at 0.
    fn consume(&mut self, t: usize, plane: PlaneRef<'_>) -> Result<()>;
}

/// Feeds every plane of `volume` to every sink, in plane order.
pub fn stream_volume(volume: &BitVolume, sinks: &mut [&mut dyn PlaneSink]) -> Result<()> {
    for t in 0..volume.planes() {
        let plane = volume.plane(t);
        for sink in sinks.iter_mut() {
            sink.consume(t, plane)?;
        }
    }
    Ok(())
}

pub(crate) fn check_plane(plane: &PlaneRef<'_>, height: usize, width: usize) -> Result<()> {
    if plane.height() != height || plane.width() != width {
        return Err(Error::dims(format!(
            "plane is {}x{}, sink expects {}x{}",
            plane.height(),
            plane.width(),
            height,
            width
        )));
    }
    Ok(())
}
