//! `.ivol` volume files: one line of JSON header terminated by `\n`, then the
//! samples as little-endian f64 in x-fastest order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Geometry;
use crate::optics::IntensityVolume;

pub const IVOL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IvolError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("payload holds {found} samples, header declares {expected}")]
    Length { expected: usize, found: usize },
    #[error("file stores '{found}', expected '{expected}'")]
    Quantity { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvolHeader {
    pub format: String,
    pub version: u32,
    pub quantity: String,
    pub units: String,
    pub dims: [usize; 3],
    pub pitches_m: [f64; 3],
    pub origin_m: [f64; 3],
    pub order: String,
}

impl IvolHeader {
    pub fn new(geometry: &Geometry, quantity: &str, units: &str) -> Self {
        Self {
            format: "ivol".into(),
            version: IVOL_VERSION,
            quantity: quantity.into(),
            units: units.into(),
            dims: geometry.dims,
            pitches_m: geometry.pitches,
            origin_m: geometry.origin,
            order: "x-fastest".into(),
        }
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            dims: self.dims,
            pitches: self.pitches_m,
            origin: self.origin_m,
        }
    }
}

pub fn write_ivol<W: Write>(mut w: W, header: &IvolHeader, values: &[f64]) -> Result<(), IvolError> {
    let json = serde_json::to_string(header).map_err(|e| IvolError::Header(e.to_string()))?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_ivol<R: BufRead>(mut r: R) -> Result<(IvolHeader, Vec<f64>), IvolError> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(IvolError::Header("missing header terminator".into()));
    }
    line.pop();
    let header: IvolHeader = serde_json::from_slice(&line).map_err(|e| IvolError::Header(e.to_string()))?;
    if header.format != "ivol" || header.version != IVOL_VERSION {
        return Err(IvolError::Header(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let expected = header.dims.iter().product::<usize>();
    if payload.len() != expected * 8 {
        return Err(IvolError::Length {
            expected,
            found: payload.len() / 8,
        });
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

impl IntensityVolume {
    pub fn write_ivol<W: Write>(&self, w: W) -> Result<(), IvolError> {
        write_ivol(w, &IvolHeader::new(&self.geometry, "intensity", "W/m^2"), &self.values)
    }

    pub fn read_ivol<R: BufRead>(r: R) -> Result<Self, IvolError> {
        let (h, values) = read_ivol(r)?;
        if h.quantity != "intensity" {
            return Err(IvolError::Quantity {
                expected: "intensity".into(),
                found: h.quantity,
            });
        }
        Ok(Self {
            geometry: h.geometry(),
            values,
        })
    }
}
