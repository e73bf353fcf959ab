//! `.pevt` files: a 32-byte little-endian header (`"PEVT"`, version `u16`, `H u32`,
//! `W u32`, `T u32`, frame rate `f64`, 6 reserved zero bytes) followed by 10-byte
//! records `{t: u32, x: u16, y: u16, p: i8, pad: u8}`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::representation::{Event, EventStream};

pub const PEVT_MAGIC: &[u8; 4] = b"PEVT";
pub const PEVT_VERSION: u16 = 1;
const HEADER_LEN: usize = 32;
const RECORD_LEN: usize = 10;

pub fn write_events(mut w: impl Write, stream: &EventStream) -> Result<()> {
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| Error::param("dimension exceeds u32"));
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(PEVT_MAGIC);
    header[4..6].copy_from_slice(&PEVT_VERSION.to_le_bytes());
    header[6..10].copy_from_slice(&to_u32(stream.height)?.to_le_bytes());
    header[10..14].copy_from_slice(&to_u32(stream.width)?.to_le_bytes());
    header[14..18].copy_from_slice(&to_u32(stream.planes)?.to_le_bytes());
    header[18..26].copy_from_slice(&stream.frame_rate.to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(stream.events.len() * RECORD_LEN);
    for e in &stream.events {
        buf.extend_from_slice(&e.t.to_le_bytes());
        buf.extend_from_slice(&e.x.to_le_bytes());
        buf.extend_from_slice(&e.y.to_le_bytes());
        buf.push(e.polarity as u8);
        buf.push(0);
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_events(mut r: impl Read) -> Result<EventStream> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated .pevt header".into()))?;
    if &header[0..4] != PEVT_MAGIC {
        return Err(Error::Format("not a .pevt file".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != PEVT_VERSION {
        return Err(Error::Format(format!("unsupported .pevt version {version}")));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() % RECORD_LEN != 0 {
        return Err(Error::Format("truncated .pevt record".into()));
    }
    let events = payload
        .chunks_exact(RECORD_LEN)
        .map(|c| Event {
            t: u32::from_le_bytes(c[0..4].try_into().unwrap()),
            x: u16::from_le_bytes([c[4], c[5]]),
            y: u16::from_le_bytes([c[6], c[7]]),
            polarity: c[8] as i8,
        })
        .collect();
    Ok(EventStream {
        height: u32_at(6),
        width: u32_at(10),
        planes: u32_at(14),
        frame_rate: f64::from_le_bytes(header[18..26].try_into().unwrap()),
        events,
    })
}
