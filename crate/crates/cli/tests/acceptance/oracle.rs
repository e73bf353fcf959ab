//! Plain reference implementations over unpacked bits.

use photoncube::events::{Event, EventParams, ReferenceUpdate};
use photoncube::rng::CounterRng;
use photoncube::{BitVolume, PhotonCube, SensorParams};

pub type Planes = Vec<Vec<Vec<bool>>>;

pub fn random_cube(seed: u64, planes: usize, height: usize, width: usize, density: f64) -> PhotonCube {
    let rng = CounterRng::new(seed, 0xACCE97);
    let bits = BitVolume::from_fn(planes, height, width, |t, y, x| {
        rng.uniform(t as u64, (y * width + x) as u64) < density
    })
    .unwrap();
    PhotonCube::new(bits, SensorParams::ideal(96_800.0).unwrap()).unwrap()
}

pub fn unpack(bits: &BitVolume) -> Planes {
    let (t, h, w) = bits.dims();
    (0..t)
        .map(|t| (0..h).map(|y| (0..w).map(|x| bits.get(t, y, x)).collect()).collect())
        .collect()
}

/// `sum_t gate[t][y][x] * B_t(y, x)`.
pub fn gated_sum(cube: &Planes, gate: impl Fn(usize, usize, usize) -> bool) -> Vec<f64> {
    let (h, w) = (cube[0].len(), cube[0][0].len());
    let mut out = vec![0.0; h * w];
    for (t, plane) in cube.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                if plane[y][x] && gate(t, y, x) {
                    out[y * w + x] += 1.0;
                }
            }
        }
    }
    out
}

/// Identity-encoded event emulation, one pixel at a time.
pub fn events(cube: &Planes, p: &EventParams) -> Vec<Event> {
    let (h, w) = (cube[0].len(), cube[0][0].len());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (mut mu, mut reference) = (0.0f64, 0.0f64);
            for (t, plane) in cube.iter().enumerate() {
                mu = p.beta * mu + (1.0 - p.beta) * if plane[y][x] { 1.0 } else { 0.0 };
                if t + 1 == p.warmup {
                    reference = mu;
                }
                if t < p.warmup || (mu - reference).abs() <= p.tau {
                    continue;
                }
                let pol: i8 = if mu > reference { 1 } else { -1 };
                reference = match p.reference_update {
                    ReferenceUpdate::Additive => reference + p.tau * pol as f64,
                    ReferenceUpdate::Resync => mu,
                };
                out.push(Event { t: t as u32, x: x as u16, y: y as u16, polarity: pol });
            }
        }
    }
    out.sort_by_key(|e| (e.t, e.y, e.x));
    out
}

/// Shift-and-sum: raw sums and counts.
pub fn shift_sum(cube: &Planes, shifts: &[[i32; 2]]) -> (Vec<u32>, Vec<u32>) {
    let (h, w) = (cube[0].len() as i32, cube[0][0].len() as i32);
    let mut sums = vec![0u32; (h * w) as usize];
    let mut counts = vec![0u32; (h * w) as usize];
    for (t, &[dx, dy]) in shifts.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                let (sy, sx) = (y + dy, x + dx);
                if (0..h).contains(&sy) && (0..w).contains(&sx) {
                    counts[(y * w + x) as usize] += 1;
                    sums[(y * w + x) as usize] += cube[t][sy as usize][sx as usize] as u32;
                }
            }
        }
    }
    (sums, counts)
}

pub fn within_3sigma(count: u64, n: u64, p: f64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= 3.0 * sigma
}

/// Smallest L1 distance between two unit-mass rows over integer translations.
pub fn translated_l1(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as i64;
    (-n..=n)
        .map(|d| {
            let inside: f64 = (0..n)
                .map(|x| {
                    let bx = x - d;
                    let bv = if (0..n).contains(&bx) { b[bx as usize] } else { 0.0 };
                    (a[x as usize] - bv).abs()
                })
                .sum();
            let outside: f64 = (0..n).filter(|&bx| !(0..n).contains(&(bx + d))).map(|bx| b[bx as usize]).sum();
            inside + outside
        })
        .fold(f64::INFINITY, f64::min)
}
