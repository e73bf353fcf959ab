//! Parsers for `key=value` projection specs and config files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use photoncube::coded::MaskScheme;
use photoncube::events::{AdaptiveThreshold, BrightnessEncoding, EventParams, ReferenceUpdate};
use photoncube::motion::Trajectory;

/// Ordered `key=value` pairs separated by commas.
pub fn pairs(spec: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!(photoncube::Error::param(format!("expected key=value, got {item:?}"))))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            bail!(photoncube::Error::param(format!("duplicate key {k:?}")));
        }
    }
    Ok(out)
}

fn invalid(msg: String) -> anyhow::Error {
    anyhow!(photoncube::Error::param(msg))
}

fn take<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| invalid(format!("invalid value {v:?} for {key}"))),
    }
}

fn finish(map: BTreeMap<String, String>, what: &str) -> Result<()> {
    if let Some(k) = map.keys().next() {
        return Err(invalid(format!("unknown {what} key {k:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcsSpec {
    pub buckets: usize,
    pub scheme: MaskScheme,
    pub seed: u64,
}

/// `J=4[,scheme=onehot|single|two|quad][,seed=N]`.
pub fn vcs(spec: &str, default_seed: u64) -> Result<VcsSpec> {
    let mut map = pairs(spec)?;
    let buckets: usize = take(&mut map, "J")?.unwrap_or(1);
    let scheme = match map.remove("scheme").as_deref() {
        None if buckets == 1 => MaskScheme::SingleRandom,
        None if buckets == 2 => MaskScheme::TwoBucketComplement,
        None | Some("onehot") => MaskScheme::MultiBucketOneHot,
        Some("single") => MaskScheme::SingleRandom,
        Some("two") => MaskScheme::TwoBucketComplement,
        Some("quad") => MaskScheme::Quad(Default::default()),
        Some(other) => return Err(invalid(format!("unknown mask scheme {other:?}"))),
    };
    let seed = take(&mut map, "seed")?.unwrap_or(default_seed);
    finish(map, "vcs")?;
    Ok(VcsSpec { buckets, scheme, seed })
}

/// `tau=0.4,beta=0.95[,warmup=80][,encoding=identity|log][,update=additive|resync]`
/// `[,tau_min=..,tau_max=..]`.
pub fn event(spec: &str) -> Result<EventParams> {
    let mut map = pairs(spec)?;
    let tau: f64 = take(&mut map, "tau")?.ok_or_else(|| invalid("event spec needs tau".into()))?;
    let beta: f64 = take(&mut map, "beta")?.unwrap_or(0.95);
    let warmup: usize = take(&mut map, "warmup")?.unwrap_or(80);
    let mut params = EventParams::new(tau, beta, warmup);
    params.encoding = match map.remove("encoding").as_deref() {
        None | Some("identity") => BrightnessEncoding::Identity,
        Some("log") => BrightnessEncoding::LogMle,
        Some(other) => return Err(invalid(format!("unknown encoding {other:?}"))),
    };
    params.reference_update = match map.remove("update").as_deref() {
        None | Some("additive") => ReferenceUpdate::Additive,
        Some("resync") => ReferenceUpdate::Resync,
        Some(other) => return Err(invalid(format!("unknown reference update {other:?}"))),
    };
    let lo: Option<f64> = take(&mut map, "tau_min")?;
    let hi: Option<f64> = take(&mut map, "tau_max")?;
    match (lo, hi) {
        (Some(tau_min), Some(tau_max)) => params.adaptive = Some(AdaptiveThreshold { tau_min, tau_max }),
        (None, None) => {}
        _ => return Err(invalid("adaptive thresholds need both tau_min and tau_max".into())),
    }
    finish(map, "event")?;
    Ok(params)
}

/// `linear:v=1[,dx=1,dy=0]`, `parabolic:vmax=2[,dx=..,dy=..]` or `file:PATH`.
pub fn trajectory(spec: &str, planes: usize) -> Result<Trajectory> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    if kind == "file" {
        let text = std::fs::read_to_string(rest).with_context(|| format!("reading trajectory {rest}"))?;
        return Ok(Trajectory::from_text(&text)?);
    }
    let mut map = pairs(rest)?;
    let dx: f64 = take(&mut map, "dx")?.unwrap_or(1.0);
    let dy: f64 = take(&mut map, "dy")?.unwrap_or(0.0);
    let traj = match kind {
        "linear" => {
            let v: f64 = take(&mut map, "v")?.ok_or_else(|| invalid("linear trajectory needs v".into()))?;
            Trajectory::linear(v, [dx, dy], planes)?
        }
        "parabolic" => {
            let v: f64 =
                take(&mut map, "vmax")?.ok_or_else(|| invalid("parabolic trajectory needs vmax".into()))?;
            Trajectory::parabolic(v, [dx, dy], planes)?
        }
        other => return Err(invalid(format!("unknown trajectory kind {other:?}"))),
    };
    finish(map, "trajectory")?;
    Ok(traj)
}

/// Plain `key=value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// `a:b` half-open plane range.
pub fn range(spec: &str) -> Result<(usize, usize)> {
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| invalid(format!("range must look like start:end, got {spec:?}")))?;
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| invalid(format!("bad range bound {s:?}")));
    Ok((parse(a)?, parse(b)?))
}
