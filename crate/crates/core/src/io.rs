//! Versioned little-endian checkpoint files.
//!
//! Layout (all integers `u64`, all reals IEEE `f64`, little-endian):
//!
//! ```text
//! offset  field
//! 0       magic  b"VPLCKPT\0"
//! 8       format version (u32) then 4 zero bytes
//! 16      number of sites S
//! 24      values per site V  (= 2 * n^3)
//! 32      time t
//! 40      S * V complex values (re, im), site-major
//! ...     S complex potential values
//! ...     S * 3 complex field components
//! ```

use crate::error::{Error, Result};
use crate::evolution::SpectralState;
use crate::geometry::FieldState;
use crate::velocity::C64;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 8] = b"VPLCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

fn put_complex(out: &mut Vec<u8>, z: C64) {
    out.extend_from_slice(&z.re.to_le_bytes());
    out.extend_from_slice(&z.im.to_le_bytes());
}

/// Serializes `state` into the checkpoint layout.
pub fn encode_checkpoint(state: &SpectralState) -> Vec<u8> {
    let sites = state.sites.len();
    let per_site = state.sites.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(40 + 16 * (sites * per_site + 4 * sites));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    out.extend_from_slice(&(sites as u64).to_le_bytes());
    out.extend_from_slice(&(per_site as u64).to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for site in &state.sites {
        site.iter().for_each(|&z| put_complex(&mut out, z));
    }
    state.field.phi.iter().for_each(|&z| put_complex(&mut out, z));
    for e in &state.field.field {
        e.iter().for_each(|&z| put_complex(&mut out, z));
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn complex(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
}

/// Parses a checkpoint produced by [`encode_checkpoint`].
pub fn decode_checkpoint(bytes: &[u8]) -> Result<SpectralState> {
    let mut c = Cursor { bytes, pos: 0 };
    if &c.take::<8>()? != MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(c.take()?);
    c.take::<4>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let sites = c.u64()? as usize;
    let per_site = c.u64()? as usize;
    let expected = sites
        .checked_mul(per_site + 4)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(40))
        .ok_or_else(|| Error::Format("checkpoint header overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!("checkpoint has {} bytes, header implies {expected}", bytes.len())));
    }
    let t = c.f64()?;
    let mut values = Vec::with_capacity(sites);
    for _ in 0..sites {
        values.push((0..per_site).map(|_| c.complex()).collect::<Result<Vec<_>>>()?);
    }
    let phi = (0..sites).map(|_| c.complex()).collect::<Result<Vec<_>>>()?;
    let field = (0..sites)
        .map(|_| Ok([c.complex()?, c.complex()?, c.complex()?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralState { t, sites: values, field: FieldState { phi, field } })
}

pub fn write_checkpoint(state: &SpectralState, mut out: impl Write) -> std::io::Result<()> {
    out.write_all(&encode_checkpoint(state))
}

pub fn read_checkpoint(mut input: impl Read) -> Result<SpectralState> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| Error::Format(e.to_string()))?;
    decode_checkpoint(&bytes)
}
