//! NSF2 field snapshots and CSV slices.
//!
//! Layout (little-endian): `b"NSF2"`, `u32 n_points`, `f64 half_width`,
//! `f64 time`, `u32 component_count`, then each component as
//! `n_points²` `f64` values in row-major order.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub const MAGIC: &[u8; 4] = b"NSF2";
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n_points: usize,
    pub half_width: f64,
    pub time: f64,
    pub components: Vec<Vec<f64>>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format {
                offset: self.bytes.len(),
                reason: format!(
                    "truncated while reading {what}: need {len} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ),
            }),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl Snapshot {
    pub fn from_fields(time: f64, fields: &[&ScalarField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::RejectedInput("snapshot needs at least one component".into()))?;
        let grid = *first.grid();
        for f in fields {
            grid.check_same(f.grid(), "snapshot components")?;
        }
        Ok(Snapshot {
            n_points: grid.n_points(),
            half_width: grid.half_width(),
            time,
            components: fields.iter().map(|f| f.values().to_vec()).collect(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n2 = self.n_points * self.n_points;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * n2 * self.components.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n_points as u32).to_le_bytes());
        out.extend_from_slice(&self.half_width.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        for c in &self.components {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                offset: 0,
                reason: format!("bad magic {magic:?}, expected \"NSF2\""),
            });
        }
        let n_points = r.u32("n_points")? as usize;
        if n_points == 0 {
            return Err(Error::Format { offset: 4, reason: "n_points is zero".into() });
        }
        let half_width = r.f64("half_width")?;
        let time = r.f64("time")?;
        let count = r.u32("component count")? as usize;
        if count == 0 {
            return Err(Error::Format { offset: 24, reason: "component count is zero".into() });
        }
        let n2 = n_points
            .checked_mul(n_points)
            .ok_or_else(|| Error::Format { offset: 4, reason: "n_points overflows".into() })?;
        let mut components = Vec::with_capacity(count);
        for c in 0..count {
            let raw = r.take(8 * n2, &format!("component {c}"))?;
            components.push(
                raw.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect(),
            );
        }
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos,
                reason: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        Ok(Snapshot { n_points, half_width, time, components })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Grid of the snapshot; the format does not store `R`, so the caller
    /// supplies it (or `L/4`).
    pub fn grid(&self, ball_radius: Option<f64>) -> Result<Grid> {
        Grid::new(
            self.n_points,
            self.half_width,
            ball_radius.unwrap_or(self.half_width / 4.0),
        )
    }

    pub fn fields(&self, grid: Grid) -> Result<Vec<ScalarField>> {
        if grid.n_points() != self.n_points || grid.half_width() != self.half_width {
            return Err(Error::GridMismatch(format!(
                "snapshot is {}² on half-width {}, grid is {}² on {}",
                self.n_points,
                self.half_width,
                grid.n_points(),
                grid.half_width()
            )));
        }
        self.components
            .iter()
            .map(|c| ScalarField::from_values(grid, c.clone()))
            .collect()
    }
}

/// `x1,value` rows along the line `x₂ = x₂[j]`.
pub fn write_slice_csv(mut w: impl Write, field: &ScalarField, j: usize) -> std::io::Result<()> {
    writeln!(w, "x1,value")?;
    for (x, v) in field.slice_x1(j) {
        writeln!(w, "{x:e},{v:e}")?;
    }
    Ok(())
}
