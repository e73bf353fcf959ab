//! File formats.
//!
//! * `.pcube`: 32-byte little-endian header (`"PCUB"`, version `u16`, `H u32`, `W u32`,
//!   `T u32`, frame rate `f64`, 6 reserved zero bytes) followed by `T` packed planes.
//! * 16-bit PGM (`P5`, big-endian samples as the format requires) for quantized images.
//!   Samples are `round(value * scale)` clamped to `[0, 65535]`; NaN maps to 0.
//! * PFM (`Pf`, scale `-1.0` so samples are little-endian `f32`, bottom row first).
//! * PBM (`P4`) for boolean masks, `1` = set.
//! * Flow fields in the Middlebury `.flo` layout: `"PIEH"`, `W i32`, `H i32`, then
//!   interleaved `(u, v)` little-endian `f32` per pixel, row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bits::BitVolume;
use crate::cube::PhotonCube;
use crate::error::{Error, Result};
use crate::image::IntensityImage;
use crate::sensor::SensorParams;

pub const PCUBE_MAGIC: &[u8; 4] = b"PCUB";
pub const PCUBE_VERSION: u16 = 1;
pub const PCUBE_HEADER_LEN: usize = 32;

/// Header of a `.pcube` file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcubeHeader {
    pub height: u32,
    pub width: u32,
    pub planes: u32,
    pub frame_rate: f64,
}

impl PcubeHeader {
    pub fn to_bytes(&self) -> [u8; PCUBE_HEADER_LEN] {
        let mut b = [0u8; PCUBE_HEADER_LEN];
        b[0..4].copy_from_slice(PCUBE_MAGIC);
        b[4..6].copy_from_slice(&PCUBE_VERSION.to_le_bytes());
        b[6..10].copy_from_slice(&self.height.to_le_bytes());
        b[10..14].copy_from_slice(&self.width.to_le_bytes());
        b[14..18].copy_from_slice(&self.planes.to_le_bytes());
        b[18..26].copy_from_slice(&self.frame_rate.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; PCUBE_HEADER_LEN]) -> Result<Self> {
        if &b[0..4] != PCUBE_MAGIC {
            return Err(Error::Format("not a .pcube file (bad magic)".into()));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != PCUBE_VERSION {
            return Err(Error::Format(format!("unsupported .pcube version {version}")));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let header = Self {
            height: u32_at(6),
            width: u32_at(10),
            planes: u32_at(14),
            frame_rate: f64::from_le_bytes(b[18..26].try_into().unwrap()),
        };
        if header.height == 0 || header.width == 0 || header.planes == 0 {
            return Err(Error::Format("zero dimension in .pcube header".into()));
        }
        if !(header.frame_rate > 0.0 && header.frame_rate.is_finite()) {
            return Err(Error::Format("invalid frame rate in .pcube header".into()));
        }
        Ok(header)
    }

    pub fn plane_bytes(&self) -> usize {
        self.height as usize * crate::bits::row_bytes(self.width as usize)
    }
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::param(format!("{what} {v} does not fit in 32 bits")))
}

pub fn write_pcube(mut w: impl Write, bits: &BitVolume, frame_rate: f64) -> Result<()> {
    let header = PcubeHeader {
        height: dim_u32(bits.height(), "height")?,
        width: dim_u32(bits.width(), "width")?,
        planes: dim_u32(bits.planes(), "plane count")?,
        frame_rate,
    };
    w.write_all(&header.to_bytes())?;
    w.write_all(bits.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_pcube(r: impl Read) -> Result<(BitVolume, f64)> {
    let mut reader = PcubeReader::new(r)?;
    let h = reader.header;
    let mut data = vec![0u8; h.plane_bytes() * h.planes as usize];
    reader.inner.read_exact(&mut data).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated .pcube payload".into())
        } else {
            Error::Io(e)
        }
    })?;
    let mut trailing = [0u8; 1];
    if reader.inner.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after .pcube payload".into()));
    }
    let bits = BitVolume::from_packed(h.planes as usize, h.height as usize, h.width as usize, data)?;
    Ok((bits, h.frame_rate))
}

pub fn save_cube(path: impl AsRef<Path>, cube: &PhotonCube) -> Result<()> {
    save_volume(path, cube.bits(), cube.sensor().frame_rate)
}

pub fn save_volume(path: impl AsRef<Path>, bits: &BitVolume, frame_rate: f64) -> Result<()> {
    write_pcube(BufWriter::new(File::create(path)?), bits, frame_rate)
}

/// Loads a cube; the file only records the frame rate, so the sensor defaults to an
/// ideal detector with a full duty cycle unless `sensor` is given.
pub fn load_cube(path: impl AsRef<Path>, sensor: Option<SensorParams>) -> Result<PhotonCube> {
    let (bits, frame_rate) = read_pcube(BufReader::new(File::open(path)?))?;
    let sensor = match sensor {
        Some(s) => s,
        None => SensorParams::ideal(frame_rate)?,
    };
    PhotonCube::new(bits, sensor)
}

/// Reads a `.pcube` one plane at a time.
pub struct PcubeReader<R: Read> {
    inner: R,
    header: PcubeHeader,
    next: u32,
}

impl<R: Read> PcubeReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut hb = [0u8; PCUBE_HEADER_LEN];
        inner
            .read_exact(&mut hb)
            .map_err(|_| Error::Format("truncated .pcube header".into()))?;
        let header = PcubeHeader::from_bytes(&hb)?;
        Ok(Self {
            inner,
            header,
            next: 0,
        })
    }

    pub fn header(&self) -> &PcubeHeader {
        &self.header
    }

    /// Fills `buf` with the next plane; returns `Ok(None)` after the last one.
    pub fn next_plane(&mut self, buf: &mut Vec<u8>) -> Result<Option<usize>> {
        if self.next == self.header.planes {
            return Ok(None);
        }
        buf.resize(self.header.plane_bytes(), 0);
        self.inner
            .read_exact(buf)
            .map_err(|_| Error::Format(format!("truncated .pcube at plane {}", self.next)))?;
        let t = self.next as usize;
        self.next += 1;
        Ok(Some(t))
    }
}

/// Quantizes to 16 bits and writes a binary PGM.
pub fn write_pgm16(mut w: impl Write, image: &IntensityImage, scale: f64) -> Result<()> {
    write!(w, "P5\n{} {}\n65535\n", image.width(), image.height())?;
    let mut buf = Vec::with_capacity(image.values().len() * 2);
    for &v in image.values() {
        buf.extend_from_slice(&quantize16(v * scale).to_be_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

#[inline]
pub fn quantize16(v: f64) -> u16 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 65535.0) as u16
    }
}

pub fn write_pfm(mut w: impl Write, image: &IntensityImage) -> Result<()> {
    write!(w, "Pf\n{} {}\n-1.0\n", image.width(), image.height())?;
    let mut buf = Vec::with_capacity(image.values().len() * 4);
    for y in (0..image.height()).rev() {
        for x in 0..image.width() {
            buf.extend_from_slice(&(image.get(y, x) as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_pfm(mut r: impl Read) -> Result<IntensityImage> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let (tokens, offset) = pnm_header(&data, 4)?;
    if tokens[0] != "Pf" {
        return Err(Error::Format(format!("expected grayscale PFM, found {}", tokens[0])));
    }
    let width: usize = parse_token(&tokens[1])?;
    let height: usize = parse_token(&tokens[2])?;
    let scale: f64 = parse_token(&tokens[3])?;
    let little = scale < 0.0;
    let payload = &data[offset..];
    if payload.len() != width * height * 4 {
        return Err(Error::Format("PFM payload size mismatch".into()));
    }
    let mut values = vec![0.0; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row_from_bottom, x) = (i / width, i % width);
        values[(height - 1 - row_from_bottom) * width + x] = v as f64;
    }
    IntensityImage::new(height, width, values)
}

pub fn read_pgm16(mut r: impl Read) -> Result<(usize, usize, Vec<u16>)> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let (tokens, offset) = pnm_header(&data, 4)?;
    if tokens[0] != "P5" {
        return Err(Error::Format("expected binary PGM".into()));
    }
    let width: usize = parse_token(&tokens[1])?;
    let height: usize = parse_token(&tokens[2])?;
    let maxval: u32 = parse_token(&tokens[3])?;
    if maxval < 256 {
        return Err(Error::Format("expected a 16-bit PGM".into()));
    }
    let payload = &data[offset..];
    if payload.len() != width * height * 2 {
        return Err(Error::Format("PGM payload size mismatch".into()));
    }
    let values = payload.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok((height, width, values))
}

pub fn write_pbm(mut w: impl Write, height: usize, width: usize, mask: &[bool]) -> Result<()> {
    if mask.len() != height * width {
        return Err(Error::dims("PBM mask size mismatch"));
    }
    write!(w, "P4\n{width} {height}\n")?;
    let rb = width.div_ceil(8);
    let mut buf = vec![0u8; rb * height];
    for y in 0..height {
        for x in 0..width {
            if mask[y * width + x] {
                buf[y * rb + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Dense 2-vector field, `(u, v)` = `(dx, dy)` per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub height: usize,
    pub width: usize,
    pub vectors: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn uniform(height: usize, width: usize, u: f32, v: f32) -> Self {
        Self {
            height,
            width,
            vectors: vec![[u, v]; height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [f32; 2] {
        self.vectors[y * self.width + x]
    }
}

const FLO_MAGIC: &[u8; 4] = b"PIEH";

pub fn write_flow(mut w: impl Write, flow: &FlowField) -> Result<()> {
    w.write_all(FLO_MAGIC)?;
    w.write_all(&(dim_u32(flow.width, "width")? as i32).to_le_bytes())?;
    w.write_all(&(dim_u32(flow.height, "height")? as i32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(flow.vectors.len() * 8);
    for [u, v] in &flow.vectors {
        buf.extend_from_slice(&u.to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_flow(mut r: impl Read) -> Result<FlowField> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head)
        .map_err(|_| Error::Format("truncated flow header".into()))?;
    if &head[0..4] != FLO_MAGIC {
        return Err(Error::Format("not a .flo file".into()));
    }
    let width = i32::from_le_bytes(head[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(head[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(Error::Format("invalid flow dimensions".into()));
    }
    let (width, height) = (width as usize, height as usize);
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != width * height * 8 {
        return Err(Error::Format("flow payload size mismatch".into()));
    }
    let vectors = payload
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes(c[0..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..8].try_into().unwrap()),
            ]
        })
        .collect();
    Ok(FlowField {
        height,
        width,
        vectors,
    })
}

fn parse_token<T: std::str::FromStr>(tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Format(format!("bad header token {tok:?}")))
}

/// Splits a PNM-style header into `count` tokens; returns them and the payload offset
/// (one whitespace byte after the last token).
fn pnm_header(data: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < data.len() && (data[i].is_ascii_whitespace() || data[i] == b'#') {
            if data[i] == b'#' {
                while i < data.len() && data[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Format("truncated image header".into()));
        }
        tokens.push(String::from_utf8_lossy(&data[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}
