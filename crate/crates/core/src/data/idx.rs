//! IDX files as used by MNIST: a big-endian magic number, big-endian u32
//! dimension sizes, then raw unsigned bytes.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use super::{Dataset, FeatureScaling};
use crate::nn::Matrix;
use crate::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(cur: &mut Cursor<&[u8]>, what: &str) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    cur.read_exact(&mut buf).map_err(|e| {
        std::io::Error::new(e.kind(), format!("truncated header while reading {what}"))
    })?;
    Ok(u32::from_be_bytes(buf))
}

/// Parses an image file: returns (count, rows, cols, pixel bytes).
pub fn read_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut cur = Cursor::new(bytes);
    let io = |e| Error::io(path, e);
    let magic = read_u32(&mut cur, "magic").map_err(io)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "{}: expected image magic {IDX_IMAGES_MAGIC:#010x}, found {magic:#010x}",
            path.display()
        )));
    }
    let count = read_u32(&mut cur, "item count").map_err(io)? as usize;
    let rows = read_u32(&mut cur, "row count").map_err(io)? as usize;
    let cols = read_u32(&mut cur, "column count").map_err(io)? as usize;
    let mut pixels = vec![0u8; count * rows * cols];
    cur.read_exact(&mut pixels).map_err(|e| {
        Error::io(
            path,
            std::io::Error::new(e.kind(), format!("expected {} pixel bytes", pixels.len())),
        )
    })?;
    Ok((count, rows, cols, pixels))
}

pub fn read_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    let io = |e| Error::io(path, e);
    let magic = read_u32(&mut cur, "magic").map_err(io)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "{}: expected label magic {IDX_LABELS_MAGIC:#010x}, found {magic:#010x}",
            path.display()
        )));
    }
    let count = read_u32(&mut cur, "item count").map_err(io)? as usize;
    let mut labels = vec![0u8; count];
    cur.read_exact(&mut labels).map_err(|e| {
        Error::io(
            path,
            std::io::Error::new(e.kind(), format!("expected {count} label bytes")),
        )
    })?;
    Ok(labels)
}

/// Loads an image/label file pair. Pixels are scaled by 1/255 and images
/// flattened row-major. The class count is `max(label) + 1`, at least 2.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let img_bytes = fs::read(images).map_err(|e| Error::io(images, e))?;
    let lbl_bytes = fs::read(labels).map_err(|e| Error::io(labels, e))?;
    let (count, rows, cols, pixels) = read_idx_images(&img_bytes, images)?;
    let raw_labels = read_idx_labels(&lbl_bytes, labels)?;
    if raw_labels.len() != count {
        return Err(Error::Consistency(format!(
            "{count} images but {} labels",
            raw_labels.len()
        )));
    }
    let features: Vec<f64> = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&l| usize::from(l)).collect();
    let class_count = labels.iter().max().map_or(2, |&m| (m + 1).max(2));
    Dataset::new(
        Matrix::from_vec(count, rows * cols, features)?,
        labels,
        class_count,
        FeatureScaling::UnitInterval,
    )
}

pub fn write_idx_images(path: &Path, rows: usize, cols: usize, images: &[Vec<u8>]) -> Result<()> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for d in [images.len(), rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for img in images {
        if img.len() != rows * cols {
            return Err(Error::Shape(format!(
                "image has {} bytes, expected {}",
                img.len(),
                rows * cols
            )));
        }
        out.extend_from_slice(img);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
