mod common;

use common::{random_cube, unpack, within_3sigma};
use photoncube::coded::{
    apply_roi_coding, detect_dynamic_roi, flutter_shutter, generate_masks, multi_bucket_capture,
    BucketCaptures, DynamicRoi, GlobalCode, MaskScheme, MaskSequence,
};
use photoncube::scene::{Scene, Shape};
use photoncube::{sample_photon_cube, FluxField, sum_image, BitVolume, IntensityImage, PhotonCube, SensorParams};
use proptest::prelude::*;

fn brute_coded(cube: &[Vec<Vec<bool>>], mask: &[Vec<Vec<bool>>]) -> Vec<f64> {
    let (h, w) = (cube[0].len(), cube[0][0].len());
    let mut out = vec![0.0; h * w];
    for t in 0..cube.len() {
        for y in 0..h {
            for x in 0..w {
                if cube[t][y][x] && mask[t][y][x] {
                    out[y * w + x] += 1.0;
                }
            }
        }
    }
    out
}

fn brute_flutter(cube: &[Vec<Vec<bool>>], code: &[bool]) -> Vec<f64> {
    let (h, w) = (cube[0].len(), cube[0][0].len());
    let mut out = vec![0.0; h * w];
    for (t, plane) in cube.iter().enumerate() {
        if !code[t] {
            continue;
        }
        for y in 0..h {
            for x in 0..w {
                out[y * w + x] += plane[y][x] as u8 as f64;
            }
        }
    }
    out
}

fn total(captures: &BucketCaptures) -> IntensityImage {
    captures.total().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_hot_buckets_partition_the_sum(seed in any::<u64>(), j in prop::sample::select(vec![2usize, 4, 8])) {
        let cube = random_cube(seed, 64, 7, 9, 0.4);
        let masks = generate_masks(MaskScheme::MultiBucketOneHot, j, cube.dims(), seed ^ 5).unwrap();
        prop_assert!(masks.is_partition());
        let caps = multi_bucket_capture(&cube, &masks).unwrap();
        prop_assert_eq!(caps.bucket_count(), j);
        prop_assert_eq!(total(&caps), sum_image(&cube, 0, 64).unwrap());
    }

    #[test]
    fn complement_buckets_sum_to_the_long_exposure(seed in any::<u64>()) {
        let cube = random_cube(seed, 48, 5, 11, 0.3);
        let masks = generate_masks(MaskScheme::TwoBucketComplement, 2, cube.dims(), seed).unwrap();
        let b = masks.buckets();
        let (t, h, w) = cube.dims();
        for tt in 0..t {
            for yy in 0..h {
                for xx in 0..w {
                    prop_assert!(b[0].get(tt, yy, xx) ^ b[1].get(tt, yy, xx));
                }
            }
        }
        let caps = multi_bucket_capture(&cube, &masks).unwrap();
        prop_assert_eq!(total(&caps), sum_image(&cube, 0, t).unwrap());
    }

    #[test]
    fn masks_are_a_pure_function_of_their_arguments(seed in any::<u64>(), j in 2usize..6) {
        let a = generate_masks(MaskScheme::MultiBucketOneHot, j, (16, 4, 5), seed).unwrap();
        let b = generate_masks(MaskScheme::MultiBucketOneHot, j, (16, 4, 5), seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn streaming_matches_unpacked_oracles_over_100_seeds() {
    for seed in 0..100u64 {
        let cube = random_cube(seed, 64, 8, 8, 0.35);
        let raw = unpack(cube.bits());

        let sum = sum_image(&cube, 0, 64).unwrap();
        assert_eq!(sum.values(), brute_flutter(&raw, &[true; 64]).as_slice(), "sum seed {seed}");

        let chops: Vec<bool> = GlobalCode::random(52, seed).unwrap().as_slice().to_vec();
        let code = GlobalCode::new((0..64).map(|t| chops[t * 52 / 64]).collect()).unwrap();
        let flutter = flutter_shutter(&cube, &code).unwrap();
        assert_eq!(flutter.values(), brute_flutter(&raw, code.as_slice()).as_slice(), "flutter seed {seed}");

        let masks = generate_masks(MaskScheme::MultiBucketOneHot, 4, cube.dims(), seed).unwrap();
        let caps = multi_bucket_capture(&cube, &masks).unwrap();
        for (j, img) in caps.images.iter().enumerate() {
            let oracle = brute_coded(&raw, &unpack(&masks.buckets()[j]));
            assert_eq!(img.values(), oracle.as_slice(), "bucket {j} seed {seed}");
        }
    }
}

#[test]
fn single_mask_of_ones_is_the_sum_image() {
    let cube = random_cube(3, 30, 6, 6, 0.5);
    let ones = BitVolume::zeros(30, 6, 6).unwrap().complement();
    let caps = multi_bucket_capture(&cube, &MaskSequence::custom(vec![ones]).unwrap()).unwrap();
    assert_eq!(caps.images[0], sum_image(&cube, 0, 30).unwrap());
}

#[test]
fn one_hot_activation_is_uniform() {
    let dims = (1000, 25, 40);
    let masks = generate_masks(MaskScheme::MultiBucketOneHot, 4, dims, 77).unwrap();
    let n = (dims.0 * dims.1 * dims.2) as u64;
    for bucket in masks.buckets() {
        assert!(within_3sigma(bucket.count_ones(), n, 0.25), "{}", bucket.count_ones());
    }
}

#[test]
fn single_random_mask_is_open_half_the_time() {
    let dims = (1000, 25, 40);
    let masks = generate_masks(MaskScheme::SingleRandom, 1, dims, 12).unwrap();
    let n = (dims.0 * dims.1 * dims.2) as u64;
    assert!(within_3sigma(masks.buckets()[0].count_ones(), n, 0.5));
}

#[test]
fn invalid_bucket_counts_are_rejected() {
    assert!(generate_masks(MaskScheme::SingleRandom, 2, (4, 2, 2), 0).is_err());
    assert!(generate_masks(MaskScheme::TwoBucketComplement, 3, (4, 2, 2), 0).is_err());
    assert!(generate_masks(MaskScheme::MultiBucketOneHot, 1, (4, 2, 2), 0).is_err());
    let cube = random_cube(0, 8, 4, 4, 0.5);
    let masks = generate_masks(MaskScheme::SingleRandom, 1, (8, 4, 5), 0).unwrap();
    assert!(multi_bucket_capture(&cube, &masks).is_err());
}

fn captures_from(values: &[Vec<f64>], h: usize, w: usize) -> BucketCaptures {
    BucketCaptures {
        images: values
            .iter()
            .map(|v| IntensityImage::new(h, w, v.clone()).unwrap().with_bit_depth(12))
            .collect(),
    }
}

#[test]
fn quarter_region_with_four_buckets_costs_one_and_three_quarters() {
    let (h, w) = (12, 24);
    let caps = captures_from(&vec![vec![10.0; h * w]; 4], h, w);
    let mask: Vec<bool> = (0..h * w).map(|i| i % 4 == 0).collect();
    let roi = DynamicRoi { height: h, width: w, mask };
    assert_eq!(roi.fraction(), 0.25);
    let coding = apply_roi_coding(&caps, &roi).unwrap();
    assert_eq!(coding.bandwidth_multiple(), 1.75);
    assert_eq!(coding.bandwidth_bits, 12 * (4 * 72 + 216));
}

#[test]
fn empty_and_full_regions() {
    let (h, w) = (4, 6);
    let vals: Vec<Vec<f64>> = (0..3).map(|j| (0..h * w).map(|i| (i * 3 + j) as f64).collect()).collect();
    let caps = captures_from(&vals, h, w);
    let empty = apply_roi_coding(&caps, &DynamicRoi { height: h, width: w, mask: vec![false; h * w] }).unwrap();
    assert_eq!(empty.bandwidth_multiple(), 1.0);
    assert_eq!(empty.static_image.values(), caps.total().unwrap().values());
    assert!(empty.coded.is_empty());
    let full = apply_roi_coding(&caps, &DynamicRoi { height: h, width: w, mask: vec![true; h * w] }).unwrap();
    assert_eq!(full.bandwidth_multiple(), 3.0);
    assert_eq!(full.coded.len(), h * w);
    assert_eq!(full.coded[5].values, vec![15.0, 16.0, 17.0]);
}

#[test]
fn single_outlier_is_the_whole_region() {
    let (h, w) = (4, 4);
    let mut a = vec![50.0; 16];
    let mut b = vec![50.0; 16];
    a[6] = 0.0;
    b[6] = 100.0;
    let roi = detect_dynamic_roi(&captures_from(&[a, b], h, w), 0.75).unwrap();
    assert_eq!(roi.count(), 1);
    assert!(roi.mask[6]);
}

#[test]
fn roi_needs_two_buckets() {
    let caps = captures_from(&[vec![1.0; 4]], 2, 2);
    assert!(detect_dynamic_roi(&caps, 0.75).is_err());
}

#[test]
fn moving_square_region_covers_its_swept_path() {
    // Bright square sliding right over a dark frame.
    let (t, h, w) = (2000, 32, 32);
    let v = 0.006;
    let base = Scene::constant(t, h, w, 0.0).unwrap();
    let square = base.centred(Shape::Square { size: 4 }, 4e4, [v, 0.0]);
    let scene = base.with_object(square).unwrap();
    let sensor = SensorParams::ideal(1e5).unwrap();
    let cube: PhotonCube = sample_photon_cube(&scene, sensor, 4).unwrap();
    let masks = generate_masks(MaskScheme::MultiBucketOneHot, 4, cube.dims(), 9).unwrap();
    let caps = multi_bucket_capture(&cube, &masks).unwrap();
    let roi = detect_dynamic_roi(&caps, 0.75).unwrap();

    // Swept footprint: every pixel the square covers at some plane.
    let mut swept = vec![false; h * w];
    for tt in 0..t {
        for (i, s) in swept.iter_mut().enumerate() {
            *s |= scene.flux(tt, i / w, i % w) > 0.0;
        }
    }
    let n = swept.iter().filter(|&&s| s).count();
    assert!(n > 0 && n < h * w / 4, "swept area {n}");
    for i in 0..h * w {
        if swept[i] {
            assert!(roi.mask[i], "swept pixel {i} outside the region");
        }
    }
}
