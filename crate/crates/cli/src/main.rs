use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use photoncube::coded::{
    generate_masks, BucketAccumulator, FlutterAccumulator, GlobalCode, MaskSequence,
};
use photoncube::cube::{sample_photon_cube, SumAccumulator};
use photoncube::events::{write_events, EventEmulator, EventParams};
use photoncube::hotpixel::{detect_hot_pixels, inpaint_mask, HotPixelMask, DEFAULT_HOT_PIXEL_THRESHOLD};
use photoncube::io::{
    load_cube, read_flow, read_pfm, save_cube, write_pbm, write_pfm, write_pgm16, PcubeReader,
};
use photoncube::motion::{blend_stack, MotionAccumulator, MotionStack, ShiftImage, Trajectory};
use photoncube::resources::{benchmark_report, scale_to_array, ResourceConfig};
use photoncube::scene::{Scene, Shape, SceneObject};
use photoncube::tiled::{
    estimate_duty_cycle, run_tiled, CoreGrid, CostModel, EventPrecision, Kernel, TiledOutput,
};
use photoncube::{flux_mle, FluxField, IntensityImage, PlaneRef, PlaneSink, SensorParams};

mod specs;

#[derive(Parser, Debug)]
#[command(name = "pcube", version, about = "Photon-cube synthesis, projections and readout accounting")]
struct Cli {
    /// key=value config file; command-line flags take precedence.
    #[arg(long, global = true, env = "PCUBE_CONFIG")]
    config: Option<PathBuf>,

    /// Global seed for photon sampling and masks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a photon cube from a synthetic scene or a directory of PFM flux frames.
    Synthesize(SynthArgs),
    /// Compute one or more projections in a single pass over a cube.
    Project(ProjectArgs),
    /// Run a projection kernel on the simulated core grid.
    Tiled(TiledArgs),
    /// Print the bandwidth and power table.
    Report(ReportArgs),
    /// Detect hot pixels in a dark cube and write them as a PBM mask.
    HotPixels(HotArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct SensorArgs {
    /// Bit-planes per second.
    #[arg(long)]
    frame_rate: Option<f64>,
    /// Quantum efficiency.
    #[arg(long)]
    eta: Option<f64>,
    /// Dark counts per second.
    #[arg(long)]
    dark_rate: Option<f64>,
    /// Exposure per plane in seconds (defaults to the plane period).
    #[arg(long)]
    exposure: Option<f64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// constant, moving-dot, moving-square, ramp, step or die.
    #[arg(long, default_value = "constant")]
    scene: String,
    /// Directory of PFM flux frames (photons/s); replaces --scene.
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long = "T", default_value_t = 1000)]
    planes: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    /// Object flux, or the right end of a ramp, or the flux after a step.
    #[arg(long, default_value_t = 20_000.0)]
    flux: f64,
    #[arg(long, default_value_t = 2_000.0)]
    background: f64,
    /// Object speed in pixels per plane.
    #[arg(long, default_value_t = 0.0)]
    v: f64,
    /// Direction of motion as `dx,dy`.
    #[arg(long, default_value = "1,0")]
    direction: String,
    /// Object side length.
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// Plane at which a step scene switches to --flux.
    #[arg(long)]
    step_at: Option<usize>,
    #[command(flatten)]
    sensor: SensorArgs,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    cube: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Sum image over --range (default: all planes).
    #[arg(long)]
    sum: bool,
    #[arg(long)]
    range: Option<String>,
    /// Also write the flux estimate of the sum image.
    #[arg(long)]
    flux_mle: bool,
    /// Global code: `ones`, `random` or a chop pattern of 0/1 characters.
    #[arg(long)]
    flutter: Option<String>,
    /// Multi-bucket capture, e.g. `J=4,scheme=onehot,seed=1`.
    #[arg(long)]
    vcs: Option<String>,
    /// Event emulation, e.g. `tau=0.4,beta=0.95,warmup=80`.
    #[arg(long)]
    event: Option<String>,
    /// Motion projection, e.g. `linear:v=1,dx=1,dy=0`; repeat for a stack.
    #[arg(long)]
    motion: Vec<String>,
    /// Flow field (`.flo`) for blending a stack of linear projections.
    #[arg(long)]
    blend: Option<PathBuf>,
    /// Dark cube used to find hot pixels, which motion projections skip.
    #[arg(long)]
    dark: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_HOT_PIXEL_THRESHOLD)]
    hot_threshold: f64,
    /// Write the bandwidth and power table.
    #[arg(long)]
    report: bool,
    #[arg(long)]
    readout_rate: Option<f64>,
    #[command(flatten)]
    sensor: SensorArgs,
}

#[derive(Args, Debug)]
struct TiledArgs {
    cube: PathBuf,
    /// `sum`, `vcs:J=4,...`, `event:tau=...` or `motion:linear:v=...`.
    #[arg(long)]
    kernel: String,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Core grid as `ROWSxCOLS`; by default it covers the cube.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 512)]
    ram: usize,
    #[arg(long, default_value_t = 8)]
    reach: usize,
    /// 16-bit fixed-point event state.
    #[arg(long)]
    fixed: bool,
    /// Seconds of compute per bit-plane.
    #[arg(long, default_value = "3.924e-7")]
    cost_plane: f64,
    #[arg(long, default_value_t = 0.0)]
    cost_exchange: f64,
    #[arg(long, default_value_t = 0.0)]
    cost_event: f64,
    #[command(flatten)]
    sensor: SensorArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    event_rate: Option<f64>,
    /// Scale the table linearly to this many pixels.
    #[arg(long)]
    scale_to: Option<usize>,
    /// Photon-detection power added to every scaled row (µW).
    #[arg(long, default_value_t = 0.0)]
    detection_uw: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HotArgs {
    dark: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HOT_PIXEL_THRESHOLD)]
    threshold: f64,
}

/// Settings from the config file.
#[derive(Debug, Default)]
struct Settings {
    seed: Option<u64>,
    sensor: SensorArgs,
    resources: ResourceConfig,
}

fn load_settings(path: Option<&Path>) -> Result<Settings> {
    let mut s = Settings::default();
    let Some(path) = path else { return Ok(s) };
    for (k, v) in specs::read_config(path)? {
        let float = || {
            v.parse::<f64>()
                .map_err(|_| anyhow!(photoncube::Error::param(format!("invalid value {v:?} for {k}"))))
        };
        match k.as_str() {
            "seed" => {
                s.seed = Some(
                    v.parse()
                        .map_err(|_| anyhow!(photoncube::Error::param(format!("invalid seed {v:?}"))))?,
                )
            }
            "frame_rate" => s.sensor.frame_rate = Some(float()?),
            "eta" => s.sensor.eta = Some(float()?),
            "dark_count_rate" => s.sensor.dark_rate = Some(float()?),
            "exposure" => s.sensor.exposure = Some(float()?),
            _ => s.resources.set(&k, &v)?,
        }
    }
    Ok(s)
}

/// Flags override config values; the frame rate falls back to `frame_rate`.
fn sensor_params(flags: &SensorArgs, config: &SensorArgs, frame_rate: f64) -> Result<SensorParams> {
    let fr = flags.frame_rate.or(config.frame_rate).unwrap_or(frame_rate);
    let eta = flags.eta.or(config.eta).unwrap_or(1.0);
    let dark = flags.dark_rate.or(config.dark_rate).unwrap_or(0.0);
    let exposure = flags.exposure.or(config.exposure).unwrap_or(1.0 / fr);
    Ok(SensorParams::new(eta, dark, exposure, fr)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for invalid input, 3 for budget or reach violations, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<photoncube::Error>()) {
        Some(err) if err.is_constraint_violation() => 3,
        Some(photoncube::Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let settings = load_settings(cli.config.as_deref())?;
    let seed = cli.seed.or(settings.seed).unwrap_or(0);
    match cli.command {
        Command::Synthesize(a) => synthesize(a, &settings, seed),
        Command::Project(a) => project(a, &settings, seed),
        Command::Tiled(a) => tiled(a, &settings, seed),
        Command::Report(a) => report(a, &settings),
        Command::HotPixels(a) => hot_pixels(a),
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!(photoncube::Error::param(format!("expected `x,y`, got {s:?}"))))?;
    let p = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| anyhow!(photoncube::Error::param(format!("bad number {v:?}"))))
    };
    Ok([p(a)?, p(b)?])
}

/// PFM frames held over equal runs of planes.
struct HeldFrames {
    frames: Vec<IntensityImage>,
    planes: usize,
}

impl FluxField for HeldFrames {
    fn dims(&self) -> (usize, usize, usize) {
        let (h, w) = self.frames[0].dims();
        (self.planes, h, w)
    }

    fn flux(&self, t: usize, y: usize, x: usize) -> f64 {
        self.frames[t * self.frames.len() / self.planes].get(y, x)
    }
}

fn read_frames(dir: &Path) -> Result<Vec<IntensityImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pfm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!(photoncube::Error::param(format!("no .pfm frames in {}", dir.display())));
    }
    let frames = paths
        .iter()
        .map(|p| Ok(read_pfm(BufReader::new(File::open(p)?))?))
        .collect::<Result<Vec<_>>>()?;
    if frames.iter().any(|f| f.dims() != frames[0].dims()) {
        bail!(photoncube::Error::dims("flux frames differ in size"));
    }
    Ok(frames)
}

fn synthesize(a: SynthArgs, settings: &Settings, seed: u64) -> Result<()> {
    let sensor = sensor_params(&a.sensor, &settings.sensor, 100_000.0)?;
    let cube = if let Some(dir) = &a.frames {
        let frames = read_frames(dir)?;
        if a.planes == 0 {
            bail!(photoncube::Error::param("T must be positive"));
        }
        sample_photon_cube(&HeldFrames { frames, planes: a.planes }, sensor, seed)?
    } else {
        let (t, h, w) = (a.planes, a.height, a.width);
        let dir = parse_pair(&a.direction)?;
        let norm = dir[0].hypot(dir[1]);
        if !(norm > 0.0) {
            bail!(photoncube::Error::param("direction must be nonzero"));
        }
        let velocity = [a.v * dir[0] / norm, a.v * dir[1] / norm];
        let scene = match a.scene.as_str() {
            "constant" => Scene::constant(t, h, w, a.flux)?,
            "ramp" => Scene::ramp(t, h, w, a.background, a.flux)?,
            "step" => Scene::step(t, h, w, a.background, a.flux, a.step_at.unwrap_or(t / 2))?,
            "moving-dot" | "moving-square" | "die" => {
                let base = Scene::constant(t, h, w, a.background)?;
                let shape = match a.scene.as_str() {
                    "moving-dot" => Shape::Dot,
                    "moving-square" => Shape::Square { size: a.size },
                    _ => Shape::Die { size: a.size },
                };
                let obj: SceneObject = base.centred(shape, a.flux, velocity);
                base.with_object(obj)?
            }
            other => bail!(photoncube::Error::param(format!("unknown scene {other:?}"))),
        };
        sample_photon_cube(&scene, sensor, seed)?
    };
    save_cube(&a.out, &cube)?;
    let (t, h, w) = cube.dims();
    println!("wrote {} ({t} planes of {h}x{w})", a.out.display());
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn save_pfm(path: &Path, img: &IntensityImage) -> Result<()> {
    let mut w = create(path)?;
    write_pfm(&mut w, img)?;
    w.flush()?;
    Ok(())
}

fn save_pgm(path: &Path, img: &IntensityImage) -> Result<()> {
    let mut w = create(path)?;
    write_pgm16(&mut w, img, 1.0)?;
    w.flush()?;
    Ok(())
}

fn save_motion(dir: &Path, k: usize, traj: &Trajectory, img: &ShiftImage) -> Result<()> {
    save_pfm(&dir.join(format!("motion_{k}.pfm")), &img.to_image()?)?;
    let mut w = create(&dir.join(format!("motion_{k}_vacant.pbm")))?;
    write_pbm(&mut w, img.height, img.width, &img.vacant())?;
    w.flush()?;
    fs::write(dir.join(format!("motion_{k}.txt")), traj.to_text())?;
    Ok(())
}

fn save_events(dir: &Path, stream: &photoncube::events::EventStream) -> Result<()> {
    let mut w = create(&dir.join("events.pevt"))?;
    write_events(&mut w, stream)?;
    w.flush()?;
    Ok(())
}

fn flutter_code(spec: &str, planes: usize, seed: u64) -> Result<GlobalCode> {
    Ok(match spec {
        "ones" => GlobalCode::ones(planes)?,
        "random" => GlobalCode::random(planes, seed)?,
        chops => {
            let bits = chops
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(anyhow!(photoncube::Error::param(format!("bad chop pattern {chops:?}")))),
                })
                .collect::<Result<Vec<_>>>()?;
            GlobalCode::from_chops(&bits, planes)?
        }
    })
}

fn hot_mask(path: &Path, threshold: f64) -> Result<HotPixelMask> {
    let dark = load_cube(path, None)?;
    Ok(detect_hot_pixels(&dark, threshold)?)
}

fn project(a: ProjectArgs, settings: &Settings, seed: u64) -> Result<()> {
    let mut reader = PcubeReader::new(BufReader::new(
        File::open(&a.cube).with_context(|| format!("opening {}", a.cube.display()))?,
    ))?;
    let header = *reader.header();
    let (planes, h, w) = (header.planes as usize, header.height as usize, header.width as usize);
    let sensor = sensor_params(&a.sensor, &settings.sensor, header.frame_rate)?;
    fs::create_dir_all(&a.out_dir)?;

    let range = match &a.range {
        Some(r) => {
            let (s, e) = specs::range(r)?;
            if s >= e || e > planes {
                bail!(photoncube::Error::InvalidRange { start: s, end: e, planes });
            }
            (s, e)
        }
        None => (0, planes),
    };
    let want_sum = a.sum || a.flux_mle || a.range.is_some();
    let mut sum = want_sum.then(|| SumAccumulator::new(h, w, range.0, range.1));
    let mut flutter = a
        .flutter
        .as_deref()
        .map(|s| flutter_code(s, planes, seed).map(|c| FlutterAccumulator::new(h, w, c)))
        .transpose()?;
    let masks: Option<MaskSequence> = a
        .vcs
        .as_deref()
        .map(|s| -> Result<MaskSequence> {
            let v = specs::vcs(s, seed)?;
            Ok(generate_masks(v.scheme, v.buckets, (planes, h, w), v.seed)?)
        })
        .transpose()?;
    let mut buckets = masks.as_ref().map(BucketAccumulator::new);
    let event_params: Option<EventParams> = a.event.as_deref().map(specs::event).transpose()?;
    let mut events = event_params
        .map(|p| EventEmulator::new(h, w, planes, &sensor, p))
        .transpose()?;
    let trajectories = a
        .motion
        .iter()
        .map(|s| specs::trajectory(s, planes))
        .collect::<Result<Vec<_>>>()?;
    if trajectories.iter().any(|t| t.len() != planes) {
        bail!(photoncube::Error::dims("trajectory length does not match the cube"));
    }
    let hot = a.dark.as_deref().map(|p| hot_mask(p, a.hot_threshold)).transpose()?;
    let mut motions = trajectories
        .iter()
        .map(|t| MotionAccumulator::new(h, w, t, hot.as_ref()))
        .collect::<photoncube::Result<Vec<_>>>()?;

    // one pass over the file, fanned out to every active projection
    {
        let mut sinks: Vec<&mut dyn PlaneSink> = Vec::new();
        if let Some(s) = sum.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = flutter.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = buckets.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = events.as_mut() {
            sinks.push(s);
        }
        for m in motions.iter_mut() {
            sinks.push(m);
        }
        let mut buf = Vec::new();
        while let Some(t) = reader.next_plane(&mut buf)? {
            let plane = PlaneRef::new(&buf, h, w)?;
            for s in sinks.iter_mut() {
                s.consume(t, plane)?;
            }
        }
    }

    let dir = &a.out_dir;
    if let Some(s) = sum {
        let img = s.finish()?;
        save_pgm(&dir.join("sum.pgm"), &img)?;
        if let Some(mask) = &hot {
            save_pfm(&dir.join("sum_inpainted.pfm"), &inpaint_mask(&img, mask)?)?;
        }
        if a.flux_mle {
            save_pfm(&dir.join("flux.pfm"), &flux_mle(&img, range.1 - range.0, &sensor)?)?;
        }
    }
    if let Some(f) = flutter {
        save_pfm(&dir.join("flutter.pfm"), &f.finish()?)?;
    }
    if let Some(b) = buckets {
        for (j, img) in b.finish()?.images.iter().enumerate() {
            save_pfm(&dir.join(format!("vcs_{j}.pfm")), img)?;
        }
    }
    let mut event_rate = None;
    if let Some(e) = events {
        let stream = e.finish();
        event_rate = Some(stream.event_rate());
        save_events(dir, &stream)?;
    }
    let images: Vec<ShiftImage> = motions.into_iter().map(MotionAccumulator::finish).collect();
    let layers: Vec<(Trajectory, ShiftImage)> = trajectories.into_iter().zip(images).collect();
    for (k, (traj, img)) in layers.iter().enumerate() {
        save_motion(dir, k, traj, img)?;
    }
    if let Some(flow_path) = &a.blend {
        let flow = read_flow(BufReader::new(File::open(flow_path)?))?;
        let blended = blend_stack(&MotionStack { layers }, &flow)?;
        save_pfm(&dir.join("blend.pfm"), &blended)?;
    }
    if a.report {
        let mut config = settings.resources.clone();
        config.readout.height = h;
        config.readout.width = w;
        config.readout.photon_cube_rate = sensor.frame_rate;
        if let Some(r) = a.readout_rate {
            config.readout.readout_rate = r;
        }
        if let Some(r) = event_rate {
            config.event_rate = r;
        }
        let table = benchmark_report(&config)?;
        fs::write(dir.join("report.txt"), table.to_table())?;
        fs::write(dir.join("report.csv"), table.to_csv())?;
        print!("{}", table.to_table());
    }
    Ok(())
}

fn parse_grid(spec: &str, base: CoreGrid) -> Result<CoreGrid> {
    let (r, c) = spec
        .split_once('x')
        .ok_or_else(|| anyhow!(photoncube::Error::param(format!("grid must look like 3x6, got {spec:?}"))))?;
    let p = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| anyhow!(photoncube::Error::param(format!("bad grid size {v:?}"))))
    };
    Ok(CoreGrid {
        core_rows: p(r)?,
        core_cols: p(c)?,
        ..base
    })
}

fn tiled(a: TiledArgs, settings: &Settings, seed: u64) -> Result<()> {
    let probe = PcubeReader::new(BufReader::new(File::open(&a.cube)?))?;
    let sensor = sensor_params(&a.sensor, &settings.sensor, probe.header().frame_rate)?;
    drop(probe);
    let cube = load_cube(&a.cube, Some(sensor))?;
    let (planes, h, w) = cube.dims();
    let mut grid = match &a.grid {
        Some(g) => parse_grid(g, CoreGrid::default())?,
        None => CoreGrid::covering(h, w)?,
    };
    grid.ram_budget_bytes = a.ram;
    grid.exchange_reach = a.reach;

    let (kind, rest) = a.kernel.split_once(':').unwrap_or((a.kernel.as_str(), ""));
    let masks;
    let traj;
    let kernel = match kind {
        "sum" => Kernel::Sum,
        "vcs" => {
            let v = specs::vcs(rest, seed)?;
            masks = generate_masks(v.scheme, v.buckets, (planes, h, w), v.seed)?;
            Kernel::Vcs(&masks)
        }
        "event" => Kernel::Event {
            params: specs::event(rest)?,
            precision: if a.fixed { EventPrecision::Fixed } else { EventPrecision::Full },
        },
        "motion" => {
            traj = specs::trajectory(rest, planes)?;
            Kernel::Motion(&traj)
        }
        other => bail!(photoncube::Error::param(format!("unknown kernel {other:?}"))),
    };
    let run = run_tiled(&cube, &kernel, &grid)?;
    let cost = CostModel {
        per_plane_s: a.cost_plane,
        per_exchange_s: a.cost_exchange,
        per_event_s: a.cost_event,
    };
    let duty = estimate_duty_cycle(&run, &cost, sensor.frame_rate)?;

    let dir = &a.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("tiled.csv"), run.to_csv(Some(&duty)))?;
    match &run.output {
        TiledOutput::Sum(img) => save_pgm(&dir.join("sum.pgm"), img)?,
        TiledOutput::Vcs(caps) => {
            for (j, img) in caps.images.iter().enumerate() {
                save_pfm(&dir.join(format!("vcs_{j}.pfm")), img)?;
            }
        }
        TiledOutput::Events(stream) => save_events(dir, stream)?,
        TiledOutput::Motion(img) => {
            if let Kernel::Motion(t) = kernel {
                save_motion(dir, 0, t, img)?;
            }
        }
    }
    println!(
        "kernel={} cores={} memory_high_water={}B exchanges={} max_hops={} duty={:.6}{}",
        run.kernel,
        grid.cores(),
        run.memory_high_water(),
        run.exchanges,
        run.max_hops,
        duty.duty,
        if duty.over_budget { " (over budget)" } else { "" }
    );
    if let Some(m) = run.event_multiplicity.iter().max() {
        println!("max events per core per plane={m}");
    }
    if let Some(fp) = run.fixed_point {
        println!(
            "fixed point: events={} full={} differing_pixels={} rmse={:.6}",
            fp.events_fixed, fp.events_full, fp.differing_pixels, fp.frame_rmse
        );
    }
    Ok(())
}

fn report(a: ReportArgs, settings: &Settings) -> Result<()> {
    let mut config = settings.resources.clone();
    if let Some(r) = a.event_rate {
        config.event_rate = r;
    }
    let mut table = benchmark_report(&config)?;
    if let Some(px) = a.scale_to {
        table = scale_to_array(&table, config.readout.pixels(), px, a.detection_uw)?;
    }
    print!("{}", table.to_table());
    if config.readout.timestamp_overflows() {
        println!(
            "note: {} planes per readout exceed the {}-bit event timestamp; timestamps restart each readout window",
            config.readout.planes_per_readout(),
            config.readout.timestamp_bits
        );
    }
    if let Some(path) = a.csv {
        fs::write(path, table.to_csv())?;
    }
    Ok(())
}

fn hot_pixels(a: HotArgs) -> Result<()> {
    let mask = hot_mask(&a.dark, a.threshold)?;
    let (h, w) = mask.dims();
    let mut out = create(&a.out)?;
    write_pbm(&mut out, h, w, mask.as_slice())?;
    out.flush()?;
    println!("{} hot pixels", mask.count());
    Ok(())
}
