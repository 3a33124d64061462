//! Frame output files.
//!
//! Binary layout: a UTF-8 header followed by raw little-endian `f32` frames.
//!
//! ```text
//! PNPFRAMES 1
//! frame_dim <M>
//! frames <count>
//! frame_size <samples per frame>
//! sample_rate <Hz>
//! end
//! <count * M f32 values, frame-major>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::tensor::Matrix;
use crate::{Error, Result};

const MAGIC: &str = "PNPFRAMES";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameFile {
    pub frames: Matrix<f32>,
    pub frame_size: usize,
    pub sample_rate: usize,
}

impl FrameFile {
    pub fn duration_seconds(&self) -> f64 {
        (self.frames.rows() * self.frame_size) as f64 / self.sample_rate as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!(
            "{MAGIC} {VERSION}\nframe_dim {}\nframes {}\nframe_size {}\nsample_rate {}\nend\n",
            self.frames.cols(),
            self.frames.rows(),
            self.frame_size,
            self.sample_rate
        )
        .into_bytes();
        for v in self.frames.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: &str| Error::format("frames", d.to_string());
        let mut pos = 0;
        let mut fields = Vec::new();
        loop {
            let rest = &bytes[pos..];
            let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))?;
            let line = std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not UTF-8"))?;
            pos += nl + 1;
            if line == "end" {
                break;
            }
            fields.push(line.to_string());
        }
        if fields.first().map(String::as_str) != Some(&format!("{MAGIC} {VERSION}")) {
            return Err(bad("bad magic or version"));
        }
        let field = |key: &str| -> Result<usize> {
            fields
                .iter()
                .find_map(|l| l.strip_prefix(key).and_then(|v| v.strip_prefix(' ')))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let (dim, count) = (field("frame_dim")?, field("frames")?);
        let data = &bytes[pos..];
        if data.len() != dim * count * 4 {
            return Err(bad(&format!("expected {} data bytes, found {}", dim * count * 4, data.len())));
        }
        let vals = data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self {
            frames: Matrix::from_vec(count, dim, vals)?,
            frame_size: field("frame_size")?,
            sample_rate: field("sample_rate")?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Human-readable summary: one line per frame with its mean, min and max.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} frames x {} dims, {} samples/frame at {} Hz ({:.3} s)\n",
            self.frames.rows(),
            self.frames.cols(),
            self.frame_size,
            self.sample_rate,
            self.duration_seconds()
        );
        for (t, row) in self.frames.iter_rows().enumerate() {
            let mean = row.iter().sum::<f32>() / row.len().max(1) as f32;
            let lo = row.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let _ = writeln!(s, "{t:6} mean {mean:+.5} min {lo:+.5} max {hi:+.5}");
        }
        s
    }
}
