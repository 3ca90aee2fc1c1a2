//! CVF1 field files.
//!
//! Layout, all little-endian: magic `CVF1`; u32 N; u32 n_components;
//! u32 dims[N]; f64 box[N]; then n_components blocks of row-major complex
//! samples stored as (re, im) f64 pairs.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MatrixField, ScalarField, VectorField};

pub const MAGIC: &[u8; 4] = b"CVF1";

/// Decoded contents of a CVF1 file.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub grid: GridSpec,
    pub components: Vec<ScalarField>,
}

impl FieldFile {
    pub fn from_scalar(f: &ScalarField) -> Self {
        Self { grid: f.grid().clone(), components: vec![f.clone()] }
    }

    pub fn from_vector(v: &VectorField) -> Self {
        Self { grid: v.grid().clone(), components: v.components().to_vec() }
    }

    pub fn from_matrix(m: &MatrixField) -> Self {
        Self { grid: m.grid().clone(), components: m.entries().to_vec() }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match <[ScalarField; 1]>::try_from(self.components) {
            Ok([f]) => Ok(f),
            Err(c) => Err(Error::Format(format!("expected one component, found {}", c.len()))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        VectorField::new(self.components)
    }

    pub fn encode(&self, out: &mut impl Write) -> Result<()> {
        let dim = self.grid.dim();
        out.write_all(MAGIC)?;
        out.write_all(&u32::try_from(dim).map_err(|_| Error::Format("dimension too large".into()))?.to_le_bytes())?;
        let count = u32::try_from(self.components.len()).map_err(|_| Error::Format("too many components".into()))?;
        out.write_all(&count.to_le_bytes())?;
        for &d in self.grid.dims() {
            out.write_all(&u32::try_from(d).map_err(|_| Error::Format("axis too long".into()))?.to_le_bytes())?;
        }
        for &l in self.grid.box_lengths() {
            out.write_all(&l.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * self.grid.len());
        for c in &self.components {
            self.grid.ensure_same(c.grid())?;
            buf.clear();
            for v in c.values() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.encode(&mut out)?;
        Ok(out)
    }

    pub fn decode(input: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(input, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let dim = read_u32(input, "dimension")? as usize;
        let count = read_u32(input, "component count")? as usize;
        if dim == 0 || dim > 16 {
            return Err(Error::Format(format!("unsupported dimension {dim}")));
        }
        let dims = (0..dim).map(|_| read_u32(input, "dims").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let lengths = (0..dim).map(|_| read_f64(input, "box")).collect::<Result<Vec<_>>>()?;
        let grid = GridSpec::new(dims, lengths).map_err(|e| Error::Format(e.to_string()))?;
        let mut raw = vec![0u8; 16 * grid.len()];
        let components = (0..count)
            .map(|_| {
                read_exact(input, &mut raw, "payload")?;
                let values = raw
                    .chunks_exact(16)
                    .map(|c| {
                        let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                        let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                        Complex64::new(re, im)
                    })
                    .collect();
                ScalarField::new(grid.clone(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::decode(&mut &bytes[..])
    }
}

fn read_exact(input: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::Io(e),
    })
}

fn read_u32(input: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(input: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(input, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}
