use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Image2D, TemporalStack};
use crate::error::{Error, Result};

pub const DTYPE_F32LE: &str = "f32le";

/// JSON sidecar describing a raw `f32` payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
}

impl ContainerHeader {
    fn payload_bytes(&self) -> u64 {
        (self.height * self.width * self.frames * 4) as u64
    }
}

/// `<name>.json` pairs with `<name>.raw` in the same directory.
pub fn raw_path_for(header_path: &Path) -> PathBuf {
    header_path.with_extension("raw")
}

pub fn read_header(header_path: &Path) -> Result<ContainerHeader> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: ContainerHeader = serde_json::from_str(&text).map_err(|source| Error::Header {
        path: header_path.to_path_buf(),
        source,
    })?;
    if header.dtype != DTYPE_F32LE {
        return Err(Error::Format(format!(
            "{}: unsupported dtype {:?}, expected {DTYPE_F32LE:?}",
            header_path.display(),
            header.dtype
        )));
    }
    Ok(header)
}

fn read_payload(header_path: &Path, header: &ContainerHeader) -> Result<Vec<f32>> {
    let raw_path = raw_path_for(header_path);
    let bytes = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let expected = header.payload_bytes();
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len() as u64,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn write_container(header_path: &Path, header: &ContainerHeader, data: &[f32]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(header).expect("header serializes");
    text.push('\n');
    fs::write(header_path, text).map_err(|e| Error::io(header_path, e))?;

    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let raw_path = raw_path_for(header_path);
    fs::write(&raw_path, bytes).map_err(|e| Error::io(&raw_path, e))
}

pub fn load_stack(header_path: impl AsRef<Path>) -> Result<TemporalStack> {
    let header_path = header_path.as_ref();
    let header = read_header(header_path)?;
    if header.frames < 2 {
        return Err(Error::TooFewFrames(header.frames));
    }
    let data = read_payload(header_path, &header)?;
    TemporalStack::new(header.height, header.width, header.frames, data)?
        .with_frame_rate(header.frame_rate)
}

pub fn save_stack(stack: &TemporalStack, header_path: impl AsRef<Path>) -> Result<()> {
    let header = ContainerHeader {
        height: stack.height(),
        width: stack.width(),
        frames: stack.frames(),
        dtype: DTYPE_F32LE.to_string(),
        frame_rate: stack.frame_rate(),
    };
    write_container(header_path.as_ref(), &header, stack.data())
}

/// Maps use the stack container with `frames = 1`.
pub fn load_map(header_path: impl AsRef<Path>) -> Result<Image2D> {
    let header_path = header_path.as_ref();
    let header = read_header(header_path)?;
    if header.frames != 1 {
        return Err(Error::Format(format!(
            "{}: expected a single-frame map, header declares {} frames",
            header_path.display(),
            header.frames
        )));
    }
    let data = read_payload(header_path, &header)?;
    Image2D::new(header.height, header.width, data)
}

pub fn save_map(img: &Image2D, header_path: impl AsRef<Path>) -> Result<()> {
    let header = ContainerHeader {
        height: img.height(),
        width: img.width(),
        frames: 1,
        dtype: DTYPE_F32LE.to_string(),
        frame_rate: None,
    };
    write_container(header_path.as_ref(), &header, img.data())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stack_payload_is_32_zero_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.json");
        let stack = TemporalStack::new(2, 2, 2, vec![0.0; 8]).unwrap();
        save_stack(&stack, &path).unwrap();
        let raw = fs::read(dir.path().join("zero.raw")).unwrap();
        assert_eq!(raw, vec![0u8; 32]);
        let back = load_stack(&path).unwrap();
        assert_eq!(back.data(), &[0.0; 8]);
        assert_eq!(back.dims(), (2, 2));
        assert_eq!(back.frames(), 2);
    }

    #[test]
    fn single_frame_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"height":2,"width":2,"frames":1,"dtype":"f32le"}"#,
        )
        .unwrap();
        fs::write(dir.path().join("s.raw"), [0u8; 16]).unwrap();
        let err = load_stack(&path).unwrap_err();
        assert!(err.to_string().contains("frames < 2"), "{err}");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"height":2,"width":2,"frames":2,"dtype":"f32le"}"#,
        )
        .unwrap();
        fs::write(dir.path().join("s.raw"), [0u8; 31]).unwrap();
        assert!(matches!(
            load_stack(&path),
            Err(Error::SizeMismatch {
                expected: 32,
                found: 31
            })
        ));
    }

    #[test]
    fn missing_raw_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"height":2,"width":2,"frames":2,"dtype":"f32le"}"#,
        )
        .unwrap();
        assert!(matches!(load_stack(&path), Err(Error::Io { .. })));
        assert!(matches!(
            load_stack(dir.path().join("nope.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn nan_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"height":1,"width":1,"frames":2,"dtype":"f32le"}"#,
        )
        .unwrap();
        let mut raw = 0f32.to_le_bytes().to_vec();
        raw.extend_from_slice(&f32::INFINITY.to_le_bytes());
        fs::write(dir.path().join("s.raw"), raw).unwrap();
        assert!(matches!(load_stack(&path), Err(Error::NonFinite(1))));
    }

    #[test]
    fn unwritable_destination_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing-dir").join("s.json");
        let stack = TemporalStack::new(1, 1, 2, vec![0.0; 2]).unwrap();
        assert!(matches!(save_stack(&stack, &path), Err(Error::Io { .. })));
    }

    #[test]
    fn constant_map_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_map(&Image2D::filled(3, 4, 1.5), &path).unwrap();
        let raw = fs::read(dir.path().join("m.raw")).unwrap();
        assert_eq!(raw.len(), 48);
        for c in raw.chunks_exact(4) {
            assert_eq!(f32::from_le_bytes(c.try_into().unwrap()), 1.5);
        }
        let header = read_header(&path).unwrap();
        assert_eq!(header.frames, 1);
        assert_eq!(header.frame_rate, None);
        assert!(!fs::read_to_string(&path).unwrap().contains("frame_rate"));
    }

    #[test]
    fn frame_rate_survives() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let stack = TemporalStack::new(1, 1, 2, vec![1.0, 2.0])
            .unwrap()
            .with_frame_rate(Some(72.5))
            .unwrap();
        save_stack(&stack, &path).unwrap();
        assert_eq!(load_stack(&path).unwrap().frame_rate(), Some(72.5));

        let awkward = 32715.762325275602;
        let stack = stack.with_frame_rate(Some(awkward)).unwrap();
        save_stack(&stack, &path).unwrap();
        let back = load_stack(&path).unwrap().frame_rate().unwrap();
        assert_eq!(back.to_bits(), awkward.to_bits());
    }

    #[test]
    fn load_map_refuses_stacks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_stack(&TemporalStack::new(1, 1, 2, vec![1.0, 2.0]).unwrap(), &path).unwrap();
        assert!(matches!(load_map(&path), Err(Error::Format(_))));
    }
}
