//! Named-tensor weight files.
//!
//! Layout: a UTF-8 header followed by raw little-endian `f32` data.
//!
//! ```text
//! PNPWEIGHTS 1
//! tensors <n>
//! <name> <rows> <cols>      (n lines, in data order)
//! end
//! <rows*cols f32 values per tensor, row-major, concatenated>
//! ```

use std::path::Path;

use crate::tensor::Matrix;
use crate::{Error, Result};

const MAGIC: &str = "PNPWEIGHTS";
const VERSION: u32 = 1;

/// Ordered collection of named `f32` matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorFile {
    tensors: Vec<(String, Matrix<f32>)>,
}

impl TensorFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, m: Matrix<f32>) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!("tensor name {name:?}")));
        }
        if self.tensors.iter().any(|(n, _)| *n == name) {
            return Err(Error::Invalid(format!("duplicate tensor {name}")));
        }
        self.tensors.push((name, m));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Matrix<f32>> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::format("weights", format!("missing tensor {name}")))
    }

    /// Like [`get`](Self::get) but also checks the shape.
    pub fn get_shaped(&self, name: &str, rows: usize, cols: usize) -> Result<&Matrix<f32>> {
        let m = self.get(name)?;
        if m.shape() != (rows, cols) {
            return Err(Error::Shape(format!(
                "tensor {name} is {:?}, expected ({rows}, {cols})",
                m.shape()
            )));
        }
        Ok(m)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix<f32>)> {
        self.tensors.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = format!("{MAGIC} {VERSION}\ntensors {}\n", self.tensors.len());
        for (name, m) in &self.tensors {
            header.push_str(&format!("{name} {} {}\n", m.rows(), m.cols()));
        }
        header.push_str("end\n");
        let mut out = header.into_bytes();
        for (_, m) in &self.tensors {
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: &str| Error::format("weights", d.to_string());
        let mut pos = 0;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))?;
            pos += nl + 1;
            std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not UTF-8"))
        };
        let magic = next_line()?;
        let mut it = magic.split_whitespace();
        if it.next() != Some(MAGIC) {
            return Err(bad("bad magic"));
        }
        match it.next().and_then(|v| v.parse::<u32>().ok()) {
            Some(VERSION) => {}
            _ => return Err(bad("unsupported version")),
        }
        let count: usize = next_line()?
            .strip_prefix("tensors ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| bad("bad tensor count"))?;
        let mut shapes = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next_line()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [name, r, c] = parts[..] else {
                return Err(bad(&format!("bad tensor line {line:?}")));
            };
            let r: usize = r.parse().map_err(|_| bad("bad rows"))?;
            let c: usize = c.parse().map_err(|_| bad("bad cols"))?;
            shapes.push((name.to_string(), r, c));
        }
        if next_line()? != "end" {
            return Err(bad("missing end of header"));
        }
        let mut data = &bytes[pos..];
        let mut file = TensorFile::new();
        for (name, r, c) in shapes {
            let n = r * c * 4;
            if data.len() < n {
                return Err(bad(&format!("truncated data for {name}")));
            }
            let vals = data[..n]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            data = &data[n..];
            file.insert(name, Matrix::from_vec(r, c, vals)?)?;
        }
        if !data.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
