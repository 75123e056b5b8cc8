//! Feature-diversity analysis and filter images.
//!
//! A feature's activation vector is its response over every data point.
//! Comparing a target model's activation vectors against those of several
//! reference models by cosine similarity tells which reference each target
//! feature most resembles.

use std::io::Write;
use std::path::Path;

use crate::dae::DaeParams;
use crate::error::{shape_err, Error, Result};
use crate::eval::extract;
use crate::numerics::Matrix;

/// Activation vectors of one model, one row per feature.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationSet {
    /// `features × data points`.
    pub acts: Matrix,
    pub tag: String,
}

/// Activation of every feature of `p` over every row of `data`; the
/// transpose of the extracted representation.
pub fn activation_vectors(p: &DaeParams, data: &Matrix, tag: impl Into<String>) -> Result<ActivationSet> {
    Ok(ActivationSet {
        acts: extract(p, data)?.transpose(),
        tag: tag.into(),
    })
}

/// `a·b / (‖a‖‖b‖)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape_err("cosine", (1, a.len()), (1, b.len())));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Argument(
            "cosine similarity is undefined for a zero vector".into(),
        ));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

fn normalized_rows(m: &Matrix, tag: &str) -> Result<Matrix> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Argument(format!(
                "feature {i} of `{tag}` has an all-zero activation vector"
            )));
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

/// For every target feature, finds the reference whose most similar
/// feature is closest, and counts wins per reference. Ties go to the
/// earliest reference in the list. Counts always sum to the number of
/// target features.
pub fn match_counts(target: &ActivationSet, references: &[ActivationSet]) -> Result<Vec<usize>> {
    if references.is_empty() {
        return Err(Error::Argument("no reference activation sets".into()));
    }
    let n = target.acts.cols();
    for r in references {
        if r.acts.cols() != n {
            return Err(Error::Shape(format!(
                "reference `{}` covers {} data points, target `{}` covers {n}",
                r.tag,
                r.acts.cols(),
                target.tag
            )));
        }
    }
    let t = normalized_rows(&target.acts, &target.tag)?;
    let features = t.rows();
    let mut best = vec![(f64::NEG_INFINITY, 0usize); features];
    for (r_idx, r) in references.iter().enumerate() {
        if r.acts.rows() == 0 {
            continue;
        }
        let sims = t.matmul_t(&normalized_rows(&r.acts, &r.tag)?)?;
        for (i, row) in sims.iter_rows().enumerate() {
            let m = row.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            if m > best[i].0 {
                best[i] = (m, r_idx);
            }
        }
    }
    let mut counts = vec![0; references.len()];
    for (_, r) in best {
        counts[r] += 1;
    }
    Ok(counts)
}

/// `reference_tag,count` lines under a header.
pub fn match_counts_csv(references: &[ActivationSet], counts: &[usize]) -> String {
    let mut s = String::from("reference_tag,count\n");
    for (r, c) in references.iter().zip(counts) {
        s.push_str(&format!("{},{c}\n", r.tag));
    }
    s
}

/// How a filter's weights map onto a square tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channels {
    Gray,
    /// Three consecutive planes, red then green then blue.
    RgbPlanar,
}

impl std::str::FromStr for Channels {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray" | "grey" => Ok(Channels::Gray),
            "rgb" | "rgb-planar" => Ok(Channels::RgbPlanar),
            other => Err(Error::Argument(format!("unknown channel layout `{other}`"))),
        }
    }
}

impl Channels {
    fn planes(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::RgbPlanar => 3,
        }
    }

    /// Side length of the square tile for a filter of `dim` weights.
    pub fn tile_side(self, dim: usize) -> Result<usize> {
        let planes = self.planes();
        if dim == 0 || !dim.is_multiple_of(planes) {
            return Err(Error::Argument(format!(
                "filter width {dim} does not split into {planes} plane(s)"
            )));
        }
        let per_plane = dim / planes;
        let side = (per_plane as f64).sqrt().round() as usize;
        if side * side != per_plane {
            return Err(Error::Argument(format!(
                "filter width {dim} is not {planes} square plane(s)"
            )));
        }
        Ok(side)
    }
}

/// Tiles of `rows × cols` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

/// An RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major interleaved RGB.
    pub pixels: Vec<u8>,
}

impl Image {
    /// Binary PPM (`P6`, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let o = 3 * (y * self.width + x);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }
}

/// Min-max scales a filter to `0..=255`; a constant filter maps to 127.
fn normalize_filter(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let hi = values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    if hi <= lo {
        return vec![127; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

/// Tiles the first `count` rows of `w`, each normalized on its own,
/// separated by one-pixel black lines. Unused cells stay black.
pub fn render_filters(w: &Matrix, count: usize, grid: Grid, channels: Channels) -> Result<Image> {
    if count > grid.rows * grid.cols {
        return Err(Error::Argument(format!(
            "{count} filters do not fit a {}x{} grid",
            grid.rows, grid.cols
        )));
    }
    if count > w.rows() {
        return Err(Error::Argument(format!(
            "requested {count} filters but the matrix has {}",
            w.rows()
        )));
    }
    let side = channels.tile_side(w.cols())?;
    let width = (grid.cols * (side + 1)).saturating_sub(1);
    let height = (grid.rows * (side + 1)).saturating_sub(1);
    let mut pixels = vec![0u8; width * height * 3];
    let plane = side * side;
    for f in 0..count {
        let tile = normalize_filter(w.row(f));
        let (gy, gx) = (f / grid.cols, f % grid.cols);
        for ty in 0..side {
            for tx in 0..side {
                let px = gx * (side + 1) + tx;
                let py = gy * (side + 1) + ty;
                let o = 3 * (py * width + px);
                let k = ty * side + tx;
                let rgb = match channels {
                    Channels::Gray => [tile[k]; 3],
                    Channels::RgbPlanar => [tile[k], tile[plane + k], tile[2 * plane + k]],
                };
                pixels[o..o + 3].copy_from_slice(&rgb);
            }
        }
    }
    Ok(Image {
        width,
        height,
        pixels,
    })
}

/// Renders filters (rows of `w`) and writes them as a binary PPM.
pub fn export_filters(
    w: &Matrix,
    count: usize,
    grid: Grid,
    channels: Channels,
    path: impl AsRef<Path>,
) -> Result<Image> {
    let img = render_filters(w, count, grid, channels)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&img.to_ppm())?;
    f.flush()?;
    Ok(img)
}
