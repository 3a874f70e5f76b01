//! Deterministic text and binary output.
//!
//! CSV numbers use 17 significant digits (`{:.16e}`), enough to round-trip
//! any `f64`. Binary snapshots are a 16-byte header (`b"PFSC"`, then `u32`
//! dimension, `u32` node counts along x and y, all little-endian) followed by
//! the node values as little-endian `f64` in node order.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::discretization::Grid;

pub const MAGIC: &[u8; 4] = b"PFSC";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds a CSV table in memory.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Num(v) => self.text.push_str(&num(*v)),
                Cell::Opt(Some(v)) => self.text.push_str(&num(*v)),
                Cell::Opt(None) => {}
                Cell::Text(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum Cell<'a> {
    Int(usize),
    Num(f64),
    Opt(Option<f64>),
    Text(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: u32,
    pub nx: u32,
    pub ny: u32,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn of(grid: &Grid, values: &[f64]) -> Self {
        let c = grid.counts();
        Self { dim: grid.dim() as u32, nx: c[0] as u32, ny: c.get(1).copied().unwrap_or(1) as u32, data: values.to_vec() }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        for v in [self.dim, self.nx, self.ny] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("not a PFSC snapshot"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (dim, nx, ny) = (word(4), word(8), word(12));
        let body = &bytes[16..];
        if body.len() != 8 * nx as usize * ny as usize {
            return Err(bad("snapshot length does not match its header"));
        }
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { dim, nx, ny, data })
    }
}

pub fn read_snapshot(path: &Path) -> io::Result<Snapshot> {
    Snapshot::decode(&std::fs::read(path)?)
}
