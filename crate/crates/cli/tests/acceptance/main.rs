//! One PASS/FAIL line per acceptance criterion. Exits nonzero when any criterion fails.

mod oracle;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use photoncube::coded::{
    apply_roi_coding, flutter_shutter, generate_masks, multi_bucket_capture, BucketCaptures, DynamicRoi,
    GlobalCode, MaskScheme,
};
use photoncube::cube::FluxVideo;
use photoncube::events::{emulate_events, EventParams};
use photoncube::motion::{extract_psf, motion_project, Trajectory};
use photoncube::resources::{benchmark_report, ResourceConfig};
use photoncube::rng::CounterRng;
use photoncube::scene::{Scene, Shape};
use photoncube::tiled::{kernel_memory, run_tiled, CoreGrid, EventPrecision, Kernel, TiledOutput};
use photoncube::{
    flux_mle, sample_photon_cube, sum_image, BitVolume, FluxField, IntensityImage, PhotonCube, SensorParams,
};
use sha2::{Digest, Sha256};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn resource_table() -> Check {
    let report = benchmark_report(&ResourceConfig::default()).map_err(|e| e.to_string())?;
    let expected = [
        ("12-bit sum image", 135.0, "7.29", 7.6),
        ("Snapshot compressive", 135.0, "7.29", 10.3),
        ("Motion projection", 135.0, "7.29", 8.6),
        ("Event camera", 101.25, "5.83", 8.2),
        ("Three projections", 405.0, "21.87", 28.6),
        ("Photon-cube readout", 28125.0, "1518.8", 1518.8),
    ];
    let mut misses = Vec::new();
    for (name, kbps, readout, total) in expected {
        let row = report.row(name).ok_or(format!("missing row {name}"))?;
        if row.bandwidth_kbps != kbps {
            misses.push(format!("{name} bandwidth {} != {kbps}", row.bandwidth_kbps));
        }
        let decimals = readout.split('.').nth(1).map_or(0, str::len);
        let got = format!("{:.*}", decimals, row.readout_uw);
        if got != readout {
            misses.push(format!("{name} readout {got} != {readout}"));
        }
        if (row.total_uw - total).abs() > 0.05 {
            misses.push(format!("{name} total {:.2} != {total}", row.total_uw));
        }
    }
    if misses.is_empty() {
        Ok("18 cells reproduced".into())
    } else {
        Err(format!("{} of 18 cells differ: {}", misses.len(), misses.join("; ")))
    }
}

fn roi_bandwidth() -> Check {
    let (h, w) = (12, 24);
    let caps = BucketCaptures {
        images: (0..4)
            .map(|j| IntensityImage::new(h, w, vec![j as f64; h * w]).unwrap().with_bit_depth(12))
            .collect(),
    };
    let roi = DynamicRoi { height: h, width: w, mask: (0..h * w).map(|i| i % 4 == 1).collect() };
    let m = apply_roi_coding(&caps, &roi).map_err(|e| e.to_string())?.bandwidth_multiple();
    ensure(m == 1.75, || format!("multiple {m}"))?;
    Ok(format!("J=4, RoI 25% -> {m}x"))
}

fn sampler_statistics() -> Check {
    let settings = [
        (1.0, 2f64.ln() / 1e-5, 0.0, 1e-5),
        (0.1, 1000.0, 10.0, 1e-5),
        (0.4, 5.0e4, 100.0, 1e-5),
        (0.8, 1.0e5, 0.0, 5e-6),
        (0.25, 2.0e3, 500.0, 2e-5),
    ];
    for (i, &(eta, phi, dark, w)) in settings.iter().enumerate() {
        let s = SensorParams::new(eta, dark, w, 1.0 / w).unwrap();
        let p = -(-(eta * phi + dark) * w).exp_m1();
        let c = sample_photon_cube(&FluxVideo::constant(1000, 25, 40, phi).unwrap(), s, 500 + i as u64).unwrap();
        let ones = c.bits().count_ones();
        ensure(oracle::within_3sigma(ones, 1_000_000, p), || format!("setting {i}: {ones} ones, p = {p}"))?;
    }
    let s = SensorParams::new(0.4, 100.0, 1e-5, 1e5).unwrap();
    let phi = 1.5e5;
    let c = sample_photon_cube(&FluxVideo::constant(100_000, 16, 16, phi).unwrap(), s, 9).unwrap();
    let est = flux_mle(&sum_image(&c, 0, 100_000).unwrap(), 100_000, &s).unwrap();
    let worst = est.values().iter().map(|v| (v - phi).abs() / phi).fold(0.0, f64::max);
    ensure(worst < 0.02, || format!("MLE worst pixel error {worst:.4}"))?;

    let s = SensorParams::new(0.4, 100.0, 1e-5, 1e5).unwrap();
    let c = sample_photon_cube(&FluxVideo::constant(100_000, 16, 16, 500.0).unwrap(), s, 10).unwrap();
    let est = flux_mle(&sum_image(&c, 0, 100_000).unwrap(), 100_000, &s).unwrap();
    let mean = est.values().iter().sum::<f64>() / est.values().len() as f64;
    let low = (mean - 500.0).abs() / 500.0;
    ensure(low < 0.02, || format!("MLE mean at flux 500 off by {low:.4}"))?;
    Ok(format!(
        "5 settings x 1e6 draws within 3 sigma; MLE at T=1e5: worst pixel {:.2}% (flux 1.5e5), 16x16 mean {:.2}% (flux 500)",
        worst * 100.0,
        low * 100.0
    ))
}

fn oracle_equivalence() -> Check {
    for seed in 0..100u64 {
        let (t, h, w) = (64 + (seed as usize * 7) % 449, 8 + seed as usize % 9, 8 + (seed as usize / 3) % 9);
        let cube = oracle::random_cube(seed, t, h, w, 0.05 + 0.008 * seed as f64);
        let raw = oracle::unpack(cube.bits());
        let fail = |what: &str| format!("{what} differs at seed {seed} ({t}x{h}x{w})");

        ensure(sum_image(&cube, 0, t).unwrap().values() == oracle::gated_sum(&raw, |_, _, _| true), || fail("sum"))?;

        let code = GlobalCode::random(t, seed).unwrap();
        let want = oracle::gated_sum(&raw, |tt, _, _| code.as_slice()[tt]);
        ensure(flutter_shutter(&cube, &code).unwrap().values() == want, || fail("flutter"))?;

        let masks = generate_masks(MaskScheme::MultiBucketOneHot, 4, cube.dims(), seed).unwrap();
        let caps = multi_bucket_capture(&cube, &masks).unwrap();
        for (j, img) in caps.images.iter().enumerate() {
            let m = &masks.buckets()[j];
            ensure(img.values() == oracle::gated_sum(&raw, |tt, y, x| m.get(tt, y, x)), || fail("bucket"))?;
        }

        let params = EventParams::new(0.2 + 0.002 * seed as f64, 0.9, 30);
        let (stream, _) = emulate_events(&cube, &params).unwrap();
        ensure(stream.events == oracle::events(&raw, &params), || fail("events"))?;

        let rng = CounterRng::new(seed, 0xA11);
        let traj = Trajectory::custom(
            (0..t).map(|k| [rng.below(k as u64, 0, 9) as i32 - 4, rng.below(k as u64, 1, 9) as i32 - 4]).collect(),
        )
        .unwrap();
        let img = motion_project(&cube, &traj, None).unwrap();
        let (sums, counts) = oracle::shift_sum(&raw, traj.shifts());
        ensure(img.sums == sums && img.counts == counts, || fail("motion"))?;
    }
    Ok("sum, flutter, 4 buckets, events, motion equal on 100 cubes up to 16x16x512".into())
}

fn partition_identities() -> Check {
    let mut cases = 0;
    for seed in 0..30u64 {
        let cube = oracle::random_cube(seed, 96, 9, 13, 0.4);
        let sum = sum_image(&cube, 0, 96).unwrap();
        for j in [2, 4, 8] {
            let masks = generate_masks(MaskScheme::MultiBucketOneHot, j, cube.dims(), seed * 31 + j as u64).unwrap();
            let total = multi_bucket_capture(&cube, &masks).unwrap().total().unwrap();
            ensure(total.values() == sum.values(), || format!("one-hot J={j} seed {seed}"))?;
            cases += 1;
        }
        let masks = generate_masks(MaskScheme::TwoBucketComplement, 2, cube.dims(), seed).unwrap();
        let total = multi_bucket_capture(&cube, &masks).unwrap().total().unwrap();
        ensure(total.values() == sum.values(), || format!("complement seed {seed}"))?;
        cases += 1;
    }
    Ok(format!("{cases} exact identities"))
}

fn step_response() -> Check {
    let ones_from = 201;
    let cube = PhotonCube::new(
        BitVolume::from_fn(500, 1, 1, |t, _, _| t >= ones_from).unwrap(),
        SensorParams::ideal(1e5).unwrap(),
    )
    .unwrap();
    let mut pairs = 0;
    for beta in [0.8, 0.85, 0.92, 0.95, 0.98] {
        for tau in [0.1, 0.25, 0.4, 0.6] {
            let k = ((1.0f64 - tau).ln() / (beta as f64).ln()).ceil() as u32;
            let (stream, _) = emulate_events(&cube, &EventParams::new(tau, beta, 80)).unwrap();
            let first = stream.events.first().ok_or(format!("no event for beta {beta} tau {tau}"))?;
            ensure(first.t == ones_from as u32 + k - 1 && first.polarity == 1, || {
                format!("beta {beta} tau {tau}: event at {} expected {}", first.t, ones_from as u32 + k - 1)
            })?;
            pairs += 1;
        }
    }
    for ones in [false, true] {
        for (beta, tau) in [(0.9, 0.4), (0.95, 0.2), (0.9, 0.1)] {
            let c = PhotonCube::new(
                BitVolume::from_fn(1000, 4, 4, |_, _, _| ones).unwrap(),
                SensorParams::ideal(1e5).unwrap(),
            )
            .unwrap();
            let (stream, _) = emulate_events(&c, &EventParams::new(tau, beta, 80)).unwrap();
            ensure(stream.is_empty(), || format!("constant {ones} scene fired {} events", stream.len()))?;
        }
    }
    Ok(format!("{pairs} (beta, tau) pairs match the closed form; constant scenes silent"))
}

fn motion_invariance() -> Check {
    let scene_v = 2.0;
    let v_max = 10.0 * scene_v;
    let mut worst: f64 = 0.0;
    for m in [1usize, 2, 3] {
        let planes = (4.0 * v_max) as usize * m;
        let traj = Trajectory::parabolic(v_max, [1.0, 0.0], planes).unwrap();
        let width = 2 * (traj.max_abs_shift() as usize + (scene_v * planes as f64) as usize) + 41;
        let psf = extract_psf(&traj, (1, width)).unwrap();
        for k in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let v = k * scene_v;
            let c = (planes / 2) as f64;
            let point = BitVolume::from_fn(planes, 1, width, |t, _, x| {
                x as i64 == (width / 2) as i64 + (v * (t as f64 - c)).round_ties_even() as i64
            })
            .unwrap();
            let img = motion_project(&PhotonCube::new(point, SensorParams::ideal(1e5).unwrap()).unwrap(), &traj, None)
                .unwrap();
            let total: u32 = img.sums.iter().sum();
            let kernel: Vec<f64> = img.sums.iter().map(|&s| s as f64 / total as f64).collect();
            worst = worst.max(oracle::translated_l1(&kernel, psf.values()));
        }
    }
    ensure(worst <= 0.15, || format!("worst normalised L1 {worst:.3}"))?;

    for v in [[1.0, 0.0], [0.25, 0.0], [0.0, -0.5], [-2.0, 0.0]] {
        let base = Scene::constant(64, 40, 40, 0.0).unwrap();
        let obj = base.centred(Shape::Square { size: 5 }, 1e9, v);
        let scene = base.with_object(obj).unwrap();
        let cube = sample_photon_cube(&scene, SensorParams::ideal(1e5).unwrap(), 0).unwrap();
        let traj = Trajectory::linear(v[0].hypot(v[1]), v, 64).unwrap();
        let img = motion_project(&cube, &traj, None).unwrap();
        for y in 0..40 {
            for x in 0..40 {
                let want = if scene.flux(32, y, x) > 0.0 { 1.0 } else { 0.0 };
                ensure(img.get(y, x) == want, || format!("object at v={v:?} not frozen at ({y}, {x})"))?;
            }
        }
    }
    Ok(format!("parabolic kernels within L1 {worst:.3} for v in {{0, +-0.5, +-1}} V, v_max = 10 V; linear frame of reference exact"))
}

fn tiled_equivalence() -> Check {
    let grid = CoreGrid::default();
    let params = EventParams::new(0.3, 0.9, 40);
    let event = Kernel::Event { params, precision: EventPrecision::Full };
    for seed in 0..50u64 {
        let cube = oracle::random_cube(seed, 256, 12, 24, 0.1 + 0.015 * seed as f64);
        let fail = |k: &str| format!("{k} kernel differs at seed {seed}");

        let TiledOutput::Sum(s) = run_tiled(&cube, &Kernel::Sum, &grid).unwrap().output else { unreachable!() };
        ensure(s == sum_image(&cube, 0, 256).unwrap(), || fail("sum"))?;

        let masks = generate_masks(MaskScheme::MultiBucketOneHot, 4, cube.dims(), seed).unwrap();
        let TiledOutput::Vcs(v) = run_tiled(&cube, &Kernel::Vcs(&masks), &grid).unwrap().output else { unreachable!() };
        ensure(v == multi_bucket_capture(&cube, &masks).unwrap(), || fail("vcs"))?;

        let run = run_tiled(&cube, &event, &grid).unwrap();
        ensure(run.memory_high_water() <= 512, || format!("event state {} B", run.memory_high_water()))?;
        let TiledOutput::Events(e) = run.output else { unreachable!() };
        ensure(e == emulate_events(&cube, &params).unwrap().0, || fail("event"))?;

        let rng = CounterRng::new(seed, 0x711E);
        let traj = Trajectory::custom(
            (0..256).map(|k| [rng.below(k, 0, 17) as i32 - 8, rng.below(k, 1, 17) as i32 - 8]).collect(),
        )
        .unwrap();
        let TiledOutput::Motion(m) = run_tiled(&cube, &Kernel::Motion(&traj), &grid).unwrap().output else { unreachable!() };
        ensure(m == motion_project(&cube, &traj, None).unwrap(), || fail("motion"))?;
    }

    // falling die in a 60 x 60 window tiled over 15 x 15 cores
    let base = Scene::constant(2500, 60, 60, 3e3).unwrap();
    let die = base.centred(Shape::Die { size: 24 }, 4e4, [0.0, 0.012]);
    let cube = sample_photon_cube(&base.with_object(die).unwrap(), SensorParams::ideal(96_800.0).unwrap(), 21).unwrap();
    let params = EventParams::new(0.45, 0.95, 80);
    let run = run_tiled(&cube, &Kernel::Event { params, precision: EventPrecision::Full }, &CoreGrid::covering(60, 60).unwrap())
        .unwrap();
    let TiledOutput::Events(e) = &run.output else { unreachable!() };
    let global = emulate_events(&cube, &params).unwrap().0;
    ensure(e == &global, || "60x60 die tiling differs from global emulation".into())?;
    let mem = kernel_memory(&Kernel::Event { params, precision: EventPrecision::Full }, &grid, 2500);
    Ok(format!("4 kernels x 50 seeds identical; 60x60 die: {} events, RMSE 0; event state {mem} of 512 B", global.len()))
}

fn hash_dir(dir: &Path) -> Vec<(String, String)> {
    let mut names: Vec<_> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_file()).collect();
    names.sort();
    names
        .iter()
        .map(|p| {
            let d = Sha256::digest(fs::read(p).unwrap());
            (p.file_name().unwrap().to_string_lossy().into_owned(), d.iter().map(|b| format!("{b:02x}")).collect())
        })
        .collect()
}

fn cli_determinism() -> Check {
    let run = |dir: &Path| -> std::result::Result<Vec<(String, String)>, String> {
        let bin = env!("CARGO_BIN_EXE_pcube");
        let cube = dir.join("cube.pcube");
        let out = dir.join("out");
        let tiled = dir.join("tiled");
        let steps: [Vec<&str>; 3] = [
            vec!["synthesize", "--out", cube.to_str().unwrap(), "--scene", "die", "--T", "600", "--height", "12",
                 "--width", "24", "--v", "0.01", "--size", "8", "--seed", "42"],
            vec!["project", cube.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--sum", "--vcs", "J=4",
                 "--event", "tau=0.4,beta=0.95", "--motion", "linear:v=0.01", "--motion", "parabolic:vmax=0.1",
                 "--flutter", "random", "--report", "--seed", "42"],
            vec!["tiled", cube.to_str().unwrap(), "--out-dir", tiled.to_str().unwrap(), "--kernel",
                 "event:tau=0.4", "--fixed"],
        ];
        for args in steps {
            let o = Command::new(bin).args(&args).env_remove("PCUBE_CONFIG").output().map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
        let mut hashes = hash_dir(&out);
        hashes.extend(hash_dir(&dir.join("tiled")));
        hashes.push(("cube.pcube".into(), hash_dir(dir).into_iter().find(|(n, _)| n == "cube.pcube").unwrap().1));
        Ok(hashes)
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ha, hb) = (run(a.path())?, run(b.path())?);
    ensure(ha == hb, || "output hashes differ between runs".into())?;
    Ok(format!("{} output files hash-identical across two runs", ha.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("resource table reproduction", resource_table),
        ("dynamic-RoI bandwidth", roi_bandwidth),
        ("sampler statistics", sampler_statistics),
        ("oracle equivalence suite", oracle_equivalence),
        ("partition/complement identities", partition_identities),
        ("event step-response", step_response),
        ("motion invariance", motion_invariance),
        ("tiled/global equivalence", tiled_equivalence),
        ("CLI determinism", cli_determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
