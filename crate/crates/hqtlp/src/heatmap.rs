//! Adjacency heatmaps as binary PPM (P6) images, one pixel per matrix
//! entry.
//!
//! Exact pixel mapping (documented so renders are comparable across
//! runs): a zero or negative entry is black `(0,0,0)`; a positive weight
//! `w` maps through `s = clamp(ln(w) / ln(w_max), 0, 1)` (or `s = w /
//! w_max` when `w_max <= 1`, where log scaling is meaningless) to the
//! color `(128 + round(127*s), round(255*s), round(255*s))`. That runs
//! from dark red at the smallest weights to pure white at `w_max`, so
//! zeros, small weights, and heavy edges are visually distinct even when
//! the weight range spans decades.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::tensor::Tensor;

/// RGB pixel for one weight given the global maximum.
pub fn weight_color(w: f64, w_max: f64) -> [u8; 3] {
    if w <= 0.0 {
        return [0, 0, 0];
    }
    let s = if w_max > 1.0 {
        (w.ln() / w_max.ln()).clamp(0.0, 1.0)
    } else {
        (w / w_max).clamp(0.0, 1.0)
    };
    let r = 128.0 + (127.0 * s).round();
    let gb = (255.0 * s).round();
    [r as u8, gb as u8, gb as u8]
}

/// Renders an adjacency into raw RGB rows (n*n*3 bytes, row-major).
pub fn render_rgb(adj: &Tensor, w_max: f64) -> Vec<u8> {
    let n = adj.rows();
    let mut pixels = Vec::with_capacity(n * n * 3);
    for i in 0..n {
        for j in 0..n {
            pixels.extend_from_slice(&weight_color(adj.at(i, j), w_max));
        }
    }
    pixels
}

/// Writes an `n x n` binary PPM for the adjacency.
pub fn write_ppm<W: Write>(out: &mut W, adj: &Tensor, w_max: f64) -> Result<()> {
    let n = adj.rows();
    write!(out, "P6\n{n} {n}\n255\n")?;
    out.write_all(&render_rgb(adj, w_max))?;
    Ok(())
}

pub fn save_ppm(path: &Path, adj: &Tensor, w_max: f64) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write_ppm(&mut out, adj, w_max)?;
    out.flush()?;
    Ok(())
}
