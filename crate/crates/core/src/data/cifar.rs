//! CIFAR-10 binary batches.
//!
//! Each record is 3073 bytes: one label byte in `0..10`, then 1024 red,
//! 1024 green and 1024 blue pixel bytes, each plane row-major over the
//! 32×32 image. Features keep that plane order and are scaled by 1/255.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::LabeledDataset;
use crate::numerics::Matrix;

pub const CIFAR_CLASSES: usize = 10;
pub const CIFAR_PIXELS: usize = 3 * 32 * 32;
pub const CIFAR_RECORD: usize = 1 + CIFAR_PIXELS;

/// Decodes records from one batch file's bytes.
pub fn parse_cifar10(bytes: &[u8], source: &str) -> Result<LabeledDataset> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        let offset = bytes.len() - bytes.len() % CIFAR_RECORD;
        return Err(Error::Format(format!(
            "{source}: truncated record at byte offset {offset} ({} of {CIFAR_RECORD} bytes present)",
            bytes.len() - offset
        )));
    }
    let n = bytes.len() / CIFAR_RECORD;
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * CIFAR_PIXELS);
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        let label = rec[0] as usize;
        if label >= CIFAR_CLASSES {
            return Err(Error::Format(format!(
                "{source}: label {label} at byte offset {} is not in 0..10",
                i * CIFAR_RECORD
            )));
        }
        labels.push(label);
        data.extend(rec[1..].iter().map(|&b| b as f64 / 255.0));
    }
    LabeledDataset::new(Matrix::new(n, CIFAR_PIXELS, data)?, labels, CIFAR_CLASSES)
}

/// Loads and concatenates batch files in order.
pub fn load_cifar10<P: AsRef<Path>>(paths: &[P]) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let part = parse_cifar10(&bytes, &path.display().to_string())?;
        labels.extend(part.labels);
        data.extend(part.features.into_vec());
    }
    let n = labels.len();
    LabeledDataset::new(Matrix::new(n, CIFAR_PIXELS, data)?, labels, CIFAR_CLASSES)
}

/// The five training batches and the test batch under a
/// `cifar-10-batches-bin` directory.
pub fn standard_batch_paths(dir: impl AsRef<Path>) -> (Vec<PathBuf>, PathBuf) {
    let dir = dir.as_ref();
    let train = (1..=5)
        .map(|i| dir.join(format!("data_batch_{i}.bin")))
        .collect();
    (train, dir.join("test_batch.bin"))
}

/// Re-quantizes features to bytes (×255, rounded) in the batch layout.
pub fn encode_cifar10(ds: &LabeledDataset) -> Result<Vec<u8>> {
    if ds.dim() != CIFAR_PIXELS {
        return Err(Error::Shape(format!(
            "CIFAR records need {CIFAR_PIXELS} features, got {}",
            ds.dim()
        )));
    }
    let mut out = Vec::with_capacity(ds.len() * CIFAR_RECORD);
    for (row, &label) in ds.features.iter_rows().zip(&ds.labels) {
        if label >= CIFAR_CLASSES {
            return Err(Error::Argument(format!("label {label} is not in 0..10")));
        }
        out.push(label as u8);
        out.extend(row.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: impl Fn(usize) -> u8) -> Vec<u8> {
        let mut r = vec![label];
        r.extend((0..CIFAR_PIXELS).map(fill));
        r
    }

    #[test]
    fn pixel_scaling_and_plane_order() {
        let bytes = record(3, |i| if i < 1024 { 255 } else { 0 });
        let ds = parse_cifar10(&bytes, "mem").unwrap();
        assert_eq!(ds.labels, vec![3]);
        assert_eq!(ds.features.get(0, 0), 1.0);
        assert_eq!(ds.features.get(0, 1023), 1.0);
        assert_eq!(ds.features.get(0, 1024), 0.0);
        assert_eq!(ds.features.get(0, 3071), 0.0);
    }

    #[test]
    fn truncation_reports_offset() {
        let mut bytes = record(1, |i| i as u8);
        bytes.extend(record(2, |_| 9));
        bytes.truncate(CIFAR_RECORD + 100);
        let msg = parse_cifar10(&bytes, "mem").unwrap_err().to_string();
        assert!(msg.contains("3073"), "{msg}");
    }

    #[test]
    fn bad_label_is_rejected() {
        let mut bytes = record(1, |_| 0);
        bytes.extend(record(10, |_| 0));
        let msg = parse_cifar10(&bytes, "mem").unwrap_err().to_string();
        assert!(msg.contains("label 10") && msg.contains("3073"), "{msg}");
    }

    #[test]
    fn byte_round_trip() {
        let mut bytes = Vec::new();
        for k in 0..3u8 {
            bytes.extend(record(k, |i| (i as u8).wrapping_mul(k + 7)));
        }
        let ds = parse_cifar10(&bytes, "mem").unwrap();
        assert_eq!(encode_cifar10(&ds).unwrap(), bytes);
    }
}
