//! Core raster types and their on-disk formats.
//!
//! Float data (stacks and single maps) is stored as a JSON header next to a
//! raw little-endian `f32` payload, frame-major and row-major within a frame.
//! Masks are binary PGM (P5) files and time series are two-column CSV.

mod container;
mod pgm;
mod signals;

pub use container::{
    load_map, load_stack, raw_path_for, read_header, save_map, save_stack, ContainerHeader,
    DTYPE_F32LE,
};
pub use pgm::{load_binary_mask, load_mask, save_binary_mask, save_mask};
pub use signals::{load_signal_csv, save_signal_csv, save_signals_csv};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(data: &[f32]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn check_len(height: usize, width: usize, frames: usize, len: usize) -> Result<()> {
    let expected = height * width * frames;
    if expected != len {
        return Err(Error::Format(format!(
            "data length {len} does not match {frames}x{height}x{width} = {expected}"
        )));
    }
    Ok(())
}

/// The power Doppler (M0) video: `frames` scalar fields of `height x width`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalStack {
    height: usize,
    width: usize,
    frames: usize,
    frame_rate: Option<f64>,
    data: Vec<f32>,
}

impl TemporalStack {
    /// `data` is frame-major, row-major within each frame.
    pub fn new(height: usize, width: usize, frames: usize, data: Vec<f32>) -> Result<Self> {
        if frames < 2 {
            return Err(Error::TooFewFrames(frames));
        }
        check_len(height, width, frames, data.len())?;
        check_finite(&data)?;
        Ok(Self {
            height,
            width,
            frames,
            frame_rate: None,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * frames);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(t, y, x));
                }
            }
        }
        Self::new(height, width, frames, data)
    }

    pub fn with_frame_rate(mut self, frame_rate: Option<f64>) -> Result<Self> {
        if let Some(r) = frame_rate {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "frame_rate must be > 0, got {r}"
                )));
            }
        }
        self.frame_rate = frame_rate;
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn frame_rate(&self) -> Option<f64> {
        self.frame_rate
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.pixels();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn get(&self, t: usize, y: usize, x: usize) -> f32 {
        self.data[t * self.pixels() + y * self.width + x]
    }

    /// Time series of the pixel at flat index `idx = y * width + x`.
    pub fn series(&self, idx: usize) -> Vec<f32> {
        let n = self.pixels();
        (0..self.frames).map(|t| self.data[t * n + idx]).collect()
    }
}

/// A single scalar map (M0 image, correlation map, diasys image, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image2D {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_len(height, width, 1, data.len())?;
        check_finite(&data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        assert!(value.is_finite());
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Two-label mask: background / foreground.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        check_len(height, width, 1, data.len())?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    pub fn get_signed(&self, y: isize, x: isize) -> bool {
        if y < 0 || x < 0 || y as usize >= self.height || x as usize >= self.width {
            return false;
        }
        self.data[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, y: usize, x: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Flat indices of foreground pixels, row-major.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a && b)
            .collect();
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            data,
        })
    }
}

/// Per-pixel label of an artery/vein segmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    #[default]
    Background,
    Artery,
    Vein,
}

impl Class {
    /// Canonical PGM grey level.
    pub fn code(self) -> u8 {
        match self {
            Class::Background => 0,
            Class::Vein => 128,
            Class::Artery => 255,
        }
    }

    /// Banded decoding so that masks survive lossy edits.
    pub fn from_code(v: u8) -> Self {
        match v {
            0..=63 => Class::Background,
            64..=191 => Class::Vein,
            _ => Class::Artery,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMask {
    height: usize,
    width: usize,
    labels: Vec<Class>,
}

impl ClassMask {
    pub fn new(height: usize, width: usize, labels: Vec<Class>) -> Result<Self> {
        check_len(height, width, 1, labels.len())?;
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    pub fn background(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            labels: vec![Class::Background; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> Class {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, class: Class) {
        self.labels[y * self.width + x] = class;
    }

    pub fn class_mask(&self, class: Class) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.labels.iter().map(|&c| c == class).collect(),
        }
    }

    /// Artery or vein.
    pub fn vessel_mask(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self
                .labels
                .iter()
                .map(|&c| c != Class::Background)
                .collect(),
        }
    }

    pub fn swap_artery_vein(&self) -> ClassMask {
        let labels = self
            .labels
            .iter()
            .map(|&c| match c {
                Class::Artery => Class::Vein,
                Class::Vein => Class::Artery,
                Class::Background => Class::Background,
            })
            .collect();
        ClassMask {
            height: self.height,
            width: self.width,
            labels,
        }
    }
}

impl From<&BinaryMask> for ClassMask {
    /// Foreground becomes artery, matching the PGM encoding of binary masks (255).
    fn from(mask: &BinaryMask) -> Self {
        ClassMask {
            height: mask.height,
            width: mask.width,
            labels: mask
                .data
                .iter()
                .map(|&v| if v { Class::Artery } else { Class::Background })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_rejects_single_frame() {
        let err = TemporalStack::new(2, 2, 1, vec![0.0; 4]).unwrap_err();
        assert!(err.to_string().contains("frames < 2"));
    }

    #[test]
    fn stack_rejects_nan() {
        let mut data = vec![0.0; 8];
        data[5] = f32::NAN;
        assert!(matches!(
            TemporalStack::new(2, 2, 2, data),
            Err(Error::NonFinite(5))
        ));
    }

    #[test]
    fn stack_layout_is_frame_major() {
        let s = TemporalStack::from_fn(2, 3, 2, |t, y, x| (t * 100 + y * 10 + x) as f32).unwrap();
        assert_eq!(s.get(1, 1, 2), 112.0);
        assert_eq!(s.data()[6 + 5], 112.0);
        assert_eq!(s.series(5), vec![12.0, 112.0]);
        assert_eq!(s.frame(1)[0], 100.0);
    }

    #[test]
    fn class_bands() {
        assert_eq!(Class::from_code(0), Class::Background);
        assert_eq!(Class::from_code(63), Class::Background);
        assert_eq!(Class::from_code(64), Class::Vein);
        assert_eq!(Class::from_code(130), Class::Vein);
        assert_eq!(Class::from_code(191), Class::Vein);
        assert_eq!(Class::from_code(192), Class::Artery);
        assert_eq!(Class::from_code(255), Class::Artery);
        for c in [Class::Background, Class::Artery, Class::Vein] {
            assert_eq!(Class::from_code(c.code()), c);
        }
    }
}
