//! Binary PGM (P5, maxval 255) masks.

use std::fs;
use std::path::Path;

use super::{BinaryMask, Class, ClassMask};
use crate::error::{Error, Result};

struct Pgm {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let malformed = |what: &str| Error::Format(format!("malformed PGM: {what}"));
    let mut pos = 0;

    // Reads the next whitespace-delimited header token, skipping `#` comments.
    let mut token = || -> Option<&[u8]> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| &bytes[start..pos])
    };

    if token() != Some(b"P5") {
        return Err(malformed("missing P5 magic"));
    }
    let mut number = |name: &str| -> Result<usize> {
        let tok = token().ok_or_else(|| malformed(&format!("missing {name}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(&format!("bad {name}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "unsupported PGM maxval {maxval}, expected 255"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing raster"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    if raster.len() < width * height {
        return Err(malformed(&format!(
            "raster has {} bytes, expected {}",
            raster.len(),
            width * height
        )));
    }
    Ok(Pgm {
        width,
        height,
        pixels: raster[..width * height].to_vec(),
    })
}

fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Grey levels 0..=63 decode to background, 64..=191 to vein, 192..=255 to artery.
pub fn load_mask(path: impl AsRef<Path>) -> Result<ClassMask> {
    let pgm = read_pgm(path.as_ref())?;
    let labels = pgm.pixels.iter().map(|&v| Class::from_code(v)).collect();
    ClassMask::new(pgm.height, pgm.width, labels)
}

/// Writes the canonical encoding 0 / 128 / 255.
pub fn save_mask(mask: &ClassMask, path: impl AsRef<Path>) -> Result<()> {
    let pixels: Vec<u8> = mask.labels().iter().map(|c| c.code()).collect();
    write_pgm(path.as_ref(), mask.width(), mask.height(), &pixels)
}

/// Any non-background label is foreground.
pub fn load_binary_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(load_mask(path)?.vessel_mask())
}

pub fn save_binary_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    save_mask(&ClassMask::from(mask), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_is_background() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 6]);
        let pgm = parse_pgm(&bytes).unwrap();
        assert_eq!((pgm.width, pgm.height), (3, 2));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        fs::write(&path, &bytes).unwrap();
        let mask = load_mask(&path).unwrap();
        assert!(mask.labels().iter().all(|&c| c == Class::Background));
    }

    #[test]
    fn banded_pixels() {
        let mut bytes = b"P5\n# a comment\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 130, 17]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        fs::write(&path, &bytes).unwrap();
        let mask = load_mask(&path).unwrap();
        assert_eq!(
            mask.labels(),
            &[Class::Artery, Class::Vein, Class::Background]
        );
    }

    #[test]
    fn rejects_other_maxval() {
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0]);
        let err = parse_pgm(&bytes).err().unwrap();
        assert!(err.to_string().contains("maxval"));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse_pgm(b"P5\nx 2\n255\n").is_err());
        assert!(parse_pgm(b"").is_err());
    }

    #[test]
    fn save_restores_canonical_codes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mut bytes = b"P5\n4 1\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 100, 200, 128]);
        fs::write(&path, &bytes).unwrap();
        let mask = load_mask(&path).unwrap();
        save_mask(&mask, &path).unwrap();
        let written = fs::read(&path).unwrap();
        assert_eq!(&written[written.len() - 4..], &[0, 128, 255, 128]);
    }
}
