use crate::error::{Error, Result};
use crate::image::SignedImage;

/// A single event: pixel `(x, y)`, bit-plane index `t`, polarity `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u32,
    pub x: u16,
    pub y: u16,
    pub polarity: i8,
}

/// Events ordered by `(t, raster position)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub height: usize,
    pub width: usize,
    pub planes: usize,
    pub frame_rate: f64,
    pub events: Vec<Event>,
}

impl EventStream {
    /// Physical time of an event in seconds.
    pub fn timestamp(&self, event: &Event) -> f64 {
        event.t as f64 / self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Mean event rate in events per second over the stream's duration.
    pub fn event_rate(&self) -> f64 {
        self.events.len() as f64 * self.frame_rate / self.planes as f64
    }

    /// Sum of polarities.
    pub fn net_polarity(&self) -> i64 {
        self.events.iter().map(|e| e.polarity as i64).sum()
    }

    /// Sorts events into canonical `(t, y, x)` order.
    pub fn sort(&mut self) {
        self.events.sort_by_key(|e| (e.t, e.y, e.x));
    }
}

/// Sparse `T x H x W` grid of polarities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCube {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    /// `(t * H + y) * W + x` and polarity, sorted by index.
    entries: Vec<(u64, i8)>,
}

impl EventCube {
    pub fn from_stream(stream: &EventStream) -> Result<Self> {
        let (h, w) = (stream.height as u64, stream.width as u64);
        let mut entries = Vec::with_capacity(stream.events.len());
        for e in &stream.events {
            if e.polarity != 1 && e.polarity != -1 {
                return Err(Error::param(format!("invalid polarity {}", e.polarity)));
            }
            if e.t as usize >= stream.planes || e.x as u64 >= w || e.y as u64 >= h {
                return Err(Error::dims(format!("event {e:?} outside the stream bounds")));
            }
            entries.push(((e.t as u64 * h + e.y as u64) * w + e.x as u64, e.polarity));
        }
        entries.sort_by_key(|&(i, _)| i);
        if entries.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::param("two events share one (t, x) cell"));
        }
        Ok(Self {
            planes: stream.planes,
            height: stream.height,
            width: stream.width,
            entries,
        })
    }

    pub fn to_stream(&self, frame_rate: f64) -> EventStream {
        let (h, w) = (self.height as u64, self.width as u64);
        let events = self
            .entries
            .iter()
            .map(|&(i, p)| Event {
                t: (i / (h * w)) as u32,
                y: ((i / w) % h) as u16,
                x: (i % w) as u16,
                polarity: p,
            })
            .collect();
        EventStream {
            height: self.height,
            width: self.width,
            planes: self.planes,
            frame_rate,
            events,
        }
    }

    pub fn get(&self, t: usize, y: usize, x: usize) -> i8 {
        let idx = ((t * self.height + y) * self.width + x) as u64;
        self.entries
            .binary_search_by_key(&idx, |&(i, _)| i)
            .map_or(0, |k| self.entries[k].1)
    }

    pub fn nonzero(&self) -> usize {
        self.entries.len()
    }
}

/// Sum of polarities per pixel over events with `t_start <= t < t_end`.
pub fn accumulate_frame(events: &EventStream, t_start: usize, t_end: usize) -> Result<SignedImage> {
    if t_start > t_end {
        return Err(Error::InvalidRange {
            start: t_start,
            end: t_end,
            planes: events.planes,
        });
    }
    let mut frame = SignedImage::zeros(events.height, events.width);
    for e in &events.events {
        let t = e.t as usize;
        if t >= t_start && t < t_end {
            frame.values[e.y as usize * events.width + e.x as usize] += e.polarity as i32;
        }
    }
    Ok(frame)
}

/// `bins x H x W` grid of polarity mass.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub bins: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl VoxelGrid {
    pub fn get(&self, bin: usize, y: usize, x: usize) -> f64 {
        self.values[(bin * self.height + y) * self.width + x]
    }

    pub fn bin_total(&self, bin: usize) -> f64 {
        let n = self.height * self.width;
        self.values[bin * n..(bin + 1) * n].iter().sum()
    }
}

/// Temporal voxel grid: each event's polarity is split between the two nearest bins by
/// linear interpolation on `t* = (bins - 1) * t / (T - 1)`, so bin `k` is centred on plane
/// `k * (T - 1) / (bins - 1)`.
pub fn voxel_grid(events: &EventStream, bins: usize) -> Result<VoxelGrid> {
    if bins == 0 {
        return Err(Error::param("voxel grid needs at least one bin"));
    }
    let (h, w) = (events.height, events.width);
    let mut values = vec![0.0; bins * h * w];
    let span = events.planes.saturating_sub(1).max(1) as f64;
    for e in &events.events {
        let pos = (bins - 1) as f64 * e.t as f64 / span;
        let lower = (pos.floor() as usize).min(bins - 1);
        let frac = pos - lower as f64;
        let pixel = e.y as usize * w + e.x as usize;
        let p = e.polarity as f64;
        values[lower * h * w + pixel] += p * (1.0 - frac);
        if frac > 0.0 && lower + 1 < bins {
            values[(lower + 1) * h * w + pixel] += p * frac;
        }
    }
    Ok(VoxelGrid {
        bins,
        height: h,
        width: w,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(events: Vec<Event>) -> EventStream {
        EventStream {
            height: 3,
            width: 4,
            planes: 101,
            frame_rate: 96_800.0,
            events,
        }
    }

    fn ev(t: u32, y: u16, x: u16, polarity: i8) -> Event {
        Event { t, x, y, polarity }
    }

    #[test]
    fn empty_stream_accumulates_to_zero() {
        let f = accumulate_frame(&stream(vec![]), 0, 101).unwrap();
        assert!(f.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn opposite_polarities_cancel() {
        let s = stream(vec![ev(5, 1, 2, 1), ev(9, 1, 2, -1)]);
        assert_eq!(accumulate_frame(&s, 0, 101).unwrap().get(1, 2), 0);
        assert_eq!(accumulate_frame(&s, 0, 9).unwrap().get(1, 2), 1);
        assert!(accumulate_frame(&s, 9, 5).is_err());
    }

    #[test]
    fn single_bin_equals_full_accumulation() {
        let s = stream(vec![ev(0, 0, 0, 1), ev(50, 2, 3, -1), ev(100, 0, 0, 1)]);
        let g = voxel_grid(&s, 1).unwrap();
        let f = accumulate_frame(&s, 0, 101).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(g.get(0, y, x), f.get(y, x) as f64);
            }
        }
        assert!(voxel_grid(&s, 0).is_err());
    }

    #[test]
    fn event_at_bin_centre_lands_in_one_bin() {
        // bins=3 over 101 planes: centres at t = 0, 50, 100
        let s = stream(vec![ev(50, 1, 1, -1), ev(100, 0, 0, 1)]);
        let g = voxel_grid(&s, 3).unwrap();
        assert_eq!(g.get(1, 1, 1), -1.0);
        assert_eq!(g.get(0, 1, 1), 0.0);
        assert_eq!(g.get(2, 1, 1), 0.0);
        assert_eq!(g.get(2, 0, 0), 1.0);
    }

    #[test]
    fn event_cube_rejects_out_of_bounds() {
        assert!(EventCube::from_stream(&stream(vec![ev(101, 0, 0, 1)])).is_err());
        assert!(EventCube::from_stream(&stream(vec![ev(0, 3, 0, 1)])).is_err());
        assert!(EventCube::from_stream(&stream(vec![ev(0, 0, 0, 0)])).is_err());
        assert!(EventCube::from_stream(&stream(vec![ev(0, 0, 0, 1), ev(0, 0, 0, -1)])).is_err());
    }

    #[test]
    fn event_cube_lookup() {
        let s = stream(vec![ev(3, 2, 1, -1), ev(7, 0, 3, 1)]);
        let c = EventCube::from_stream(&s).unwrap();
        assert_eq!(c.get(3, 2, 1), -1);
        assert_eq!(c.get(7, 0, 3), 1);
        assert_eq!(c.get(7, 0, 2), 0);
        assert_eq!(c.to_stream(96_800.0), s);
    }

    #[test]
    fn timestamps_are_plane_multiples() {
        let s = stream(vec![ev(968, 0, 0, 1)]);
        assert_eq!(s.timestamp(&s.events[0]), 968.0 / 96_800.0);
    }
}
