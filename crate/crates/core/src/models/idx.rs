//! MNIST IDX files: big-endian `u32` magic, item count and (for images) row
//! and column counts, followed by raw unsigned bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_error(path, "truncated header"))
}

fn read_images(path: &Path) -> Result<Vec<Vec<f64>>> {
    let bytes = fs::read(path)?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(format_error(path, format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let count = read_u32(&bytes, 4, path)? as usize;
    let rows = read_u32(&bytes, 8, path)? as usize;
    let cols = read_u32(&bytes, 12, path)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < count * size {
        return Err(format_error(
            path,
            format!("truncated: {count} images of {size} bytes need {}, found {}", count * size, body.len()),
        ));
    }
    Ok(body
        .chunks_exact(size.max(1))
        .take(count)
        .map(|img| img.iter().map(|&p| p as f64 / 255.0).collect())
        .collect())
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path)?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(format_error(path, format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let count = read_u32(&bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(format_error(path, format!("truncated: {count} labels, found {}", body.len())));
    }
    Ok(body[..count].iter().map(|&l| l as usize).collect())
}

/// Loads an IDX image/label pair with pixels scaled to `[0, 1]`.
pub fn load_mnist_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    let samples = read_images(images.as_ref())?;
    let labels = read_labels(labels.as_ref())?;
    if samples.len() != labels.len() {
        return Err(Error::CountMismatch { images: samples.len(), labels: labels.len() });
    }
    Ok(Dataset { samples, labels })
}

pub fn write_idx_images(path: impl AsRef<Path>, rows: u32, cols: u32, images: &[Vec<u8>]) -> Result<()> {
    let mut out = Vec::with_capacity(16 + images.len() * (rows * cols) as usize);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&rows.to_be_bytes());
    out.extend_from_slice(&cols.to_be_bytes());
    for img in images {
        if img.len() != (rows * cols) as usize {
            return Err(Error::DimensionMismatch { expected: (rows * cols) as usize, found: img.len() });
        }
        out.extend_from_slice(img);
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path, images: usize, labels: usize) -> (std::path::PathBuf, std::path::PathBuf) {
        let img_path = dir.join("images");
        let lbl_path = dir.join("labels");
        let imgs: Vec<Vec<u8>> = (0..images).map(|i| vec![(i * 51 % 256) as u8; 4]).collect();
        write_idx_images(&img_path, 2, 2, &imgs).unwrap();
        let lbls: Vec<u8> = (0..labels).map(|i| (i % 10) as u8).collect();
        write_idx_labels(&lbl_path, &lbls).unwrap();
        (img_path, lbl_path)
    }

    #[test]
    fn round_trip_scales_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = fixture(dir.path(), 6, 6);
        let d = load_mnist_idx(&i, &l).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.samples[1], vec![51.0 / 255.0; 4]);
        assert_eq!(d.labels[5], 5);
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = fixture(dir.path(), 3, 3);
        // label file where an image file is expected
        assert!(matches!(load_mnist_idx(&l, &l), Err(Error::Format { .. })));
        assert!(matches!(load_mnist_idx(&i, &i), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = fixture(dir.path(), 3, 3);
        let bytes = fs::read(&i).unwrap();
        fs::write(&i, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(load_mnist_idx(&i, &l), Err(Error::Format { .. })));
        fs::write(&i, &bytes[..10]).unwrap();
        assert!(matches!(load_mnist_idx(&i, &l), Err(Error::Format { .. })));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = fixture(dir.path(), 10, 9);
        assert!(matches!(
            load_mnist_idx(&i, &l),
            Err(Error::CountMismatch { images: 10, labels: 9 })
        ));
    }
}
