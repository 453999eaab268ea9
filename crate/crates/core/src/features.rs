//! The three-channel model input: M0 image, correlation map and diasys image.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{load_map, save_map, Image2D, TemporalStack};
use crate::stats::{is_constant, mean_std, percentile_sorted};

/// Channel names in their fixed order.
pub const CHANNEL_ORDER: [&str; 3] = ["m0", "corr", "diasys"];

pub const MANIFEST_FILE: &str = "manifest.json";

/// Per-pixel mean over all frames (the M0 image).
pub fn temporal_mean(stack: &TemporalStack) -> Image2D {
    let (h, w) = stack.dims();
    let frames = stack.frames();
    let mut out = vec![0f32; h * w];
    out.par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(y, row)| {
            let offset = y * w;
            let mut acc = vec![0f64; w];
            for t in 0..frames {
                for (a, &v) in acc.iter_mut().zip(&stack.frame(t)[offset..offset + w]) {
                    *a += v as f64;
                }
            }
            for (o, a) in row.iter_mut().zip(acc) {
                *o = (a / frames as f64) as f32;
            }
        });
    Image2D::new(h, w, out).expect("mean of finite values is finite")
}

/// Requested normalization of one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum NormMethod {
    /// Clip to the `[p_lo, p_hi]` percentiles, then map linearly onto `[0, 1]`.
    PercentileMinmax {
        p_lo: f64,
        p_hi: f64,
    },
    Zscore,
    None,
}

/// What a normalization actually did, with enough detail to invert it
/// (outside the clipped range for percentile_minmax).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ChannelNorm {
    PercentileMinmax {
        p_lo: f64,
        p_hi: f64,
        lo: f64,
        hi: f64,
    },
    Zscore {
        mean: f64,
        std: f64,
    },
    None,
}

impl ChannelNorm {
    /// Maps a normalized value back to the original intensity scale.
    pub fn invert(&self, v: f64) -> f64 {
        match *self {
            ChannelNorm::PercentileMinmax { lo, hi, .. } => lo + v * (hi - lo),
            ChannelNorm::Zscore { mean, std } => mean + v * std,
            ChannelNorm::None => v,
        }
    }
}

pub fn normalize_channel(img: &Image2D, method: NormMethod) -> Result<(Image2D, ChannelNorm)> {
    let (h, w) = img.dims();
    let values: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    match method {
        NormMethod::None => Ok((img.clone(), ChannelNorm::None)),
        NormMethod::Zscore => {
            if values.is_empty() || is_constant(&values) {
                return Err(Error::ConstantImage);
            }
            let (mean, std) = mean_std(&values);
            let data = values.iter().map(|v| ((v - mean) / std) as f32).collect();
            Ok((Image2D::new(h, w, data)?, ChannelNorm::Zscore { mean, std }))
        }
        NormMethod::PercentileMinmax { p_lo, p_hi } => {
            if !(0.0..=100.0).contains(&p_lo) || !(0.0..=100.0).contains(&p_hi) || p_lo > p_hi {
                return Err(Error::InvalidParameter(format!(
                    "percentile bounds must satisfy 0 <= p_lo <= p_hi <= 100, got {p_lo}, {p_hi}"
                )));
            }
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = percentile_sorted(&sorted, p_lo).unwrap_or(0.0);
            let hi = percentile_sorted(&sorted, p_hi).unwrap_or(0.0);
            let span = hi - lo;
            let data = values
                .iter()
                .map(|&v| {
                    if span > 0.0 {
                        ((v.clamp(lo, hi) - lo) / span) as f32
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok((
                Image2D::new(h, w, data)?,
                ChannelNorm::PercentileMinmax { p_lo, p_hi, lo, hi },
            ))
        }
    }
}

/// Normalization to apply to each channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub m0: NormMethod,
    pub corr: NormMethod,
    pub diasys: NormMethod,
}

impl Default for NormSpec {
    fn default() -> Self {
        let clip = NormMethod::PercentileMinmax {
            p_lo: 1.0,
            p_hi: 99.0,
        };
        Self {
            m0: clip,
            corr: NormMethod::None,
            diasys: clip,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub image: Image2D,
    pub norm: ChannelNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    height: usize,
    width: usize,
    channels: Vec<Channel>,
}

impl FeatureStack {
    /// Accepts the three channels in any order and stores them as
    /// `m0, corr, diasys`. Missing, duplicate or unknown names are errors.
    pub fn from_channels(mut channels: Vec<Channel>) -> Result<Self> {
        for c in &channels {
            if !CHANNEL_ORDER.contains(&c.name.as_str()) {
                return Err(Error::Channels(format!("unknown channel {:?}", c.name)));
            }
        }
        for name in CHANNEL_ORDER {
            match channels.iter().filter(|c| c.name == name).count() {
                0 => return Err(Error::Channels(format!("missing channel {name:?}"))),
                1 => {}
                _ => return Err(Error::Channels(format!("duplicate channel {name:?}"))),
            }
        }
        channels.sort_by_key(|c| CHANNEL_ORDER.iter().position(|&n| n == c.name));
        let dims = channels[0].image.dims();
        if let Some(bad) = channels.iter().find(|c| c.image.dims() != dims) {
            return Err(Error::DimMismatch {
                left: dims,
                right: bad.image.dims(),
            });
        }
        Ok(Self {
            height: dims.0,
            width: dims.1,
            channels,
        })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Writes `<name>.json`/`<name>.raw` per channel plus `manifest.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let mut entries = Vec::new();
        for c in &self.channels {
            let file = format!("{}.json", c.name);
            save_map(&c.image, dir.join(&file))?;
            entries.push(ManifestChannel {
                name: c.name.clone(),
                file,
                norm: c.norm,
            });
        }
        let manifest = Manifest {
            channels: entries,
            height: self.height,
            width: self.width,
        };
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Reads a manifest written by [`FeatureStack::export`]; channel files
    /// resolve relative to the manifest's directory.
    pub fn import(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let path = manifest_path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Header {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut channels = Vec::new();
        for entry in manifest.channels {
            channels.push(Channel {
                image: load_map(base.join(&entry.file))?,
                name: entry.name,
                norm: entry.norm,
            });
        }
        let stack = Self::from_channels(channels)?;
        if stack.dims() != (manifest.height, manifest.width) {
            return Err(Error::DimMismatch {
                left: (manifest.height, manifest.width),
                right: stack.dims(),
            });
        }
        Ok(stack)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestChannel {
    pub name: String,
    pub file: String,
    pub norm: ChannelNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub channels: Vec<ManifestChannel>,
    pub height: usize,
    pub width: usize,
}

pub fn build_feature_stack(
    m0: &Image2D,
    corr: &Image2D,
    diasys: &Image2D,
    spec: &NormSpec,
) -> Result<FeatureStack> {
    let mut channels = Vec::with_capacity(3);
    for (name, img, method) in [
        ("m0", m0, spec.m0),
        ("corr", corr, spec.corr),
        ("diasys", diasys, spec.diasys),
    ] {
        if img.dims() != m0.dims() {
            return Err(Error::DimMismatch {
                left: m0.dims(),
                right: img.dims(),
            });
        }
        let (image, norm) = normalize_channel(img, method)?;
        channels.push(Channel {
            name: name.to_string(),
            image,
            norm,
        });
    }
    FeatureStack::from_channels(channels)
}
