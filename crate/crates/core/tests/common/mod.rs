#![allow(dead_code)]

use photoncube::rng::CounterRng;
use photoncube::{BitVolume, PhotonCube, SensorParams};

/// Random volume with the given density of ones.
pub fn random_bits(seed: u64, planes: usize, height: usize, width: usize, density: f64) -> BitVolume {
    let rng = CounterRng::new(seed, 0xC0FFEE);
    BitVolume::from_fn(planes, height, width, |t, y, x| {
        rng.uniform(t as u64, (y * width + x) as u64) < density
    })
    .unwrap()
}

pub fn random_cube(seed: u64, planes: usize, height: usize, width: usize, density: f64) -> PhotonCube {
    PhotonCube::new(
        random_bits(seed, planes, height, width, density),
        SensorParams::ideal(96_800.0).unwrap(),
    )
    .unwrap()
}

/// `[t][y][x]` booleans.
pub fn unpack(bits: &BitVolume) -> Vec<Vec<Vec<bool>>> {
    let (t, h, w) = bits.dims();
    (0..t)
        .map(|t| (0..h).map(|y| (0..w).map(|x| bits.get(t, y, x)).collect()).collect())
        .collect()
}

/// Three-sigma binomial bound around `p` for `n` draws.
pub fn within_3sigma(count: u64, n: u64, p: f64) -> bool {
    let mean = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() <= 3.0 * sigma
}
