use super::grid::GridSpec;
use super::spectral::SpectralField;
use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Header line preceding the raw samples of a field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub grid: GridSpec,
    pub axis_order: String,
    pub endianness: String,
    pub seed: Option<u64>,
}

pub const AXIS_ORDER: &str = "row-major, last axis = time";

/// Writes one JSON header line followed by little-endian `(re, im)` f64 pairs.
pub fn write_field<W: Write>(mut out: W, u: &SpectralField, seed: Option<u64>) -> std::io::Result<()> {
    let header = DumpHeader {
        grid: u.grid().clone(),
        axis_order: AXIS_ORDER.into(),
        endianness: "little".into(),
        seed,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(u.values().len() * 16);
    for v in u.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Reads a dump written by [`write_field`].
pub fn read_field<R: BufRead>(mut input: R) -> Result<(DumpHeader, SpectralField)> {
    let mut line = String::new();
    input
        .read_line(&mut line)
        .map_err(|e| Error::Argument(format!("dump header: {e}")))?;
    let header: DumpHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Argument(format!("dump header: {e}")))?;
    if header.endianness != "little" {
        return Err(Error::Argument(format!("unsupported endianness {}", header.endianness)));
    }
    let mut raw = Vec::new();
    input
        .read_to_end(&mut raw)
        .map_err(|e| Error::Argument(format!("dump body: {e}")))?;
    if raw.len() != header.grid.len() * 16 {
        return Err(Error::Dimension(format!("dump body has {} bytes", raw.len())));
    }
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let field = SpectralField::from_values(header.grid.clone(), values)?;
    Ok((header, field))
}
