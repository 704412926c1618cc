use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"OMNISNAP";

/// One frame of complex per-element samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ArraySnapshot {
    /// Sensor whose geometry produced these samples, when known.
    pub geometry_id: Option<String>,
    samples: Vec<Complex64>,
    pub timestamp_ns: i64,
}

impl ArraySnapshot {
    pub fn new(samples: Vec<Complex64>, timestamp_ns: i64) -> Result<Self> {
        if let Some(k) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::input(format!("sample {k} is not finite")));
        }
        Ok(ArraySnapshot {
            geometry_id: None,
            samples,
            timestamp_ns,
        })
    }

    pub fn with_geometry_id(mut self, id: impl Into<String>) -> Self {
        self.geometry_id = Some(id.into());
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Little-endian: magic `OMNISNAP`, u32 K, K x (f64 re, f64 im), i64 timestamp.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(8 + 4 + 16 * self.samples.len() + 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.samples.len() as u32).to_le_bytes());
        for s in &self.samples {
            buf.extend_from_slice(&s.re.to_le_bytes());
            buf.extend_from_slice(&s.im.to_le_bytes());
        }
        buf.extend_from_slice(&self.timestamp_ns.to_le_bytes());
        w.write_all(&buf)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Format(format!("snapshot read: {e}")))?;
        Self::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(Error::Format("missing OMNISNAP header".into()));
        }
        let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = 12 + 16 * k + 8;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "snapshot with K={k} must be {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let samples = (0..k)
            .map(|i| Complex64::new(f64_at(12 + 16 * i), f64_at(20 + 16 * i)))
            .collect();
        let ts = i64::from_le_bytes(bytes[expected - 8..].try_into().unwrap());
        ArraySnapshot::new(samples, ts).map_err(|e| Error::Format(e.to_string()))
    }
}
