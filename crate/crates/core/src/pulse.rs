//! Temporal analysis of the power Doppler stack: per-segment signals, the
//! derivative-peak artery rule, the global pulse, the zero-lag correlation
//! map, systolic/diastolic peak picking and the diasys image.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{BinaryMask, Image2D, TemporalStack};
use crate::skeleton::LabeledSegments;
use crate::stats::{is_constant, mean_std};

/// A length-T time series, either raw or normalized to zero mean and unit
/// population variance.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSignal {
    values: Vec<f64>,
    normalized: bool,
}

impl PulseSignal {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            normalized: false,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn normalized(&self) -> Result<PulseSignal> {
        if self.values.is_empty() || is_constant(&self.values) {
            return Err(Error::ConstantSignal);
        }
        let (mean, std) = mean_std(&self.values);
        if std == 0.0 {
            return Err(Error::ConstantSignal);
        }
        Ok(PulseSignal {
            values: self.values.iter().map(|v| (v - mean) / std).collect(),
            normalized: true,
        })
    }
}

fn check_dims(stack: &TemporalStack, other: (usize, usize)) -> Result<()> {
    if stack.dims() != other {
        return Err(Error::DimMismatch {
            left: stack.dims(),
            right: other,
        });
    }
    Ok(())
}

/// Per-frame mean of the stack over a fixed set of flat pixel indices.
fn mean_series(stack: &TemporalStack, pixels: &[usize]) -> Vec<f64> {
    let n = pixels.len() as f64;
    (0..stack.frames())
        .map(|t| {
            let frame = stack.frame(t);
            pixels.iter().map(|&i| frame[i] as f64).sum::<f64>() / n
        })
        .collect()
}

/// Raw mean signal of each segment, averaged over the segment's pixels
/// dilated by a `(2r+1) x (2r+1)` square clipped to the image. Entry `k` is
/// segment `k + 1`.
pub fn segment_signals(
    stack: &TemporalStack,
    segs: &LabeledSegments,
    dilation_radius: usize,
) -> Result<Vec<PulseSignal>> {
    check_dims(stack, segs.dims())?;
    if segs.segment_count() == 0 {
        return Err(Error::NoSegments);
    }
    let (h, w) = segs.dims();
    let r = dilation_radius;
    let footprints: Vec<Vec<usize>> = segs
        .pixel_lists()
        .into_iter()
        .map(|pixels| {
            let mut covered = BinaryMask::empty(h, w);
            for i in pixels {
                let (y, x) = (i / w, i % w);
                for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                    for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                        covered.set(yy, xx, true);
                    }
                }
            }
            covered.indices().collect()
        })
        .collect();
    Ok(footprints
        .par_iter()
        .map(|fp| PulseSignal::raw(mean_series(stack, fp)))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentClass {
    ArterySeed,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentVerdict {
    pub label: u32,
    pub class: SegmentClass,
    /// Maximum forward difference of the normalized signal, per frame.
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArteryClassification {
    pub verdicts: Vec<SegmentVerdict>,
    pub warnings: Vec<String>,
}

impl ArteryClassification {
    pub fn seed_labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.verdicts
            .iter()
            .filter(|v| v.class == SegmentClass::ArterySeed)
            .map(|v| v.label)
    }

    pub fn seed_count(&self) -> usize {
        self.seed_labels().count()
    }
}

/// Parameters of the derivative-peak artery rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArteryRule {
    /// A segment is an artery seed when its score exceeds this.
    pub threshold: f64,
    /// Centered moving-average width applied after normalization; 1 disables it.
    pub smoothing_width: usize,
}

impl Default for ArteryRule {
    fn default() -> Self {
        Self {
            threshold: 0.3,
            smoothing_width: 1,
        }
    }
}

/// Centered moving average; the window shrinks at the edges.
fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return values.to_vec();
    }
    let half_lo = (width - 1) / 2;
    let half_hi = width / 2;
    (0..values.len())
        .map(|t| {
            let lo = t.saturating_sub(half_lo);
            let hi = (t + half_hi).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Steepest rise of the normalized (and optionally smoothed) signal.
pub fn upstroke_score(signal: &PulseSignal, smoothing_width: usize) -> Result<f64> {
    let normalized = signal.normalized()?;
    let smoothed = moving_average(normalized.values(), smoothing_width);
    Ok(smoothed
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Labels segment `k + 1` an artery seed when the steepest rise of
/// `signals[k]` after normalization exceeds the rule's threshold. Constant
/// signals are left undecided with score 0 and a warning.
pub fn classify_artery_segments(
    signals: &[PulseSignal],
    rule: &ArteryRule,
) -> Result<ArteryClassification> {
    if signals.is_empty() {
        return Err(Error::NoSegments);
    }
    let mut out = ArteryClassification::default();
    for (k, signal) in signals.iter().enumerate() {
        let label = k as u32 + 1;
        let (class, score) = match upstroke_score(signal, rule.smoothing_width) {
            Ok(score) if score > rule.threshold => (SegmentClass::ArterySeed, score),
            Ok(score) => (SegmentClass::Undecided, score),
            Err(Error::ConstantSignal) => {
                out.warnings
                    .push(format!("segment {label}: constant signal, left undecided"));
                (SegmentClass::Undecided, 0.0)
            }
            Err(e) => return Err(e),
        };
        out.verdicts.push(SegmentVerdict {
            label,
            class,
            score,
        });
    }
    Ok(out)
}

/// Pixels of every artery-seed segment.
pub fn artery_seed_mask(segs: &LabeledSegments, cls: &ArteryClassification) -> Result<BinaryMask> {
    if cls.verdicts.len() != segs.segment_count() {
        return Err(Error::InvalidParameter(format!(
            "classification covers {} segments, label field has {}",
            cls.verdicts.len(),
            segs.segment_count()
        )));
    }
    let mut is_seed = vec![false; segs.segment_count() + 1];
    for label in cls.seed_labels() {
        is_seed[label as usize] = true;
    }
    let (h, w) = segs.dims();
    BinaryMask::new(
        h,
        w,
        segs.labels().iter().map(|&l| is_seed[l as usize]).collect(),
    )
}

/// Normalized per-frame mean over the seed pixels.
pub fn global_pulse(stack: &TemporalStack, seed_mask: &BinaryMask) -> Result<PulseSignal> {
    check_dims(stack, seed_mask.dims())?;
    let pixels: Vec<usize> = seed_mask.indices().collect();
    if pixels.is_empty() {
        return Err(Error::EmptySeedMask);
    }
    PulseSignal::raw(mean_series(stack, &pixels)).normalized()
}

/// Zero-lag Pearson correlation of every pixel's time series with `pulse`.
///
/// Rows are processed in parallel; each pixel's sums run sequentially over
/// frames, so the result does not depend on the thread partition. Pixels
/// whose series is constant map to 0.
pub fn correlation_map(stack: &TemporalStack, pulse: &PulseSignal) -> Result<Image2D> {
    let frames = stack.frames();
    if pulse.len() != frames {
        return Err(Error::LengthMismatch {
            expected: frames,
            found: pulse.len(),
        });
    }
    let p_mean = pulse.values().iter().sum::<f64>() / frames as f64;
    let centered: Vec<f64> = pulse.values().iter().map(|v| v - p_mean).collect();
    let p_norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    if p_norm == 0.0 {
        return Err(Error::ConstantSignal);
    }

    let (h, w) = stack.dims();
    let mut out = vec![0f32; h * w];
    out.par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(y, row)| {
            let offset = y * w;
            let mut mean = vec![0f64; w];
            let mut lo = vec![f32::INFINITY; w];
            let mut hi = vec![f32::NEG_INFINITY; w];
            for t in 0..frames {
                let src = &stack.frame(t)[offset..offset + w];
                for x in 0..w {
                    let v = src[x];
                    mean[x] += v as f64;
                    lo[x] = lo[x].min(v);
                    hi[x] = hi[x].max(v);
                }
            }
            for m in &mut mean {
                *m /= frames as f64;
            }
            let mut sxy = vec![0f64; w];
            let mut sxx = vec![0f64; w];
            for (t, &p) in centered.iter().enumerate() {
                let src = &stack.frame(t)[offset..offset + w];
                for x in 0..w {
                    let d = src[x] as f64 - mean[x];
                    sxy[x] += d * p;
                    sxx[x] += d * d;
                }
            }
            for x in 0..w {
                row[x] = if lo[x] == hi[x] || sxx[x] == 0.0 {
                    0.0
                } else {
                    (sxy[x] / (sxx[x].sqrt() * p_norm)).clamp(-1.0, 1.0) as f32
                };
            }
        });
    Image2D::new(h, w, out)
}

/// Frame indices of systolic peaks and diastolic valleys, each ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakSet {
    pub systolic_peaks: Vec<usize>,
    pub diastolic_valleys: Vec<usize>,
}

/// Strict local maxima above zero; a plateau counts once, at its leftmost index.
fn local_maxima(v: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] && v[i] > 0.0 {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Greedy non-maximum suppression: tallest first, ties to the earlier index.
fn suppress(v: &[f64], mut candidates: Vec<usize>, min_separation: usize) -> Vec<usize> {
    candidates.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| k.abs_diff(c) >= min_separation) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Systolic peaks and diastolic valleys of a zero-mean pulse.
///
/// Fails only when neither a peak nor a valley exists (flat or monotone input).
pub fn detect_peaks(pulse: &PulseSignal, min_separation: usize) -> Result<PeakSet> {
    if min_separation < 1 {
        return Err(Error::InvalidParameter(
            "min_separation must be >= 1".into(),
        ));
    }
    let v = pulse.values();
    let negated: Vec<f64> = v.iter().map(|x| -x).collect();
    let peaks = PeakSet {
        systolic_peaks: suppress(v, local_maxima(v), min_separation),
        diastolic_valleys: suppress(&negated, local_maxima(&negated), min_separation),
    };
    if peaks.systolic_peaks.is_empty() && peaks.diastolic_valleys.is_empty() {
        return Err(Error::NoPeaks);
    }
    Ok(peaks)
}

/// Mean of all frames within `half_window` of any index (each frame counted once).
pub fn average_frames_around(
    stack: &TemporalStack,
    indices: &[usize],
    half_window: usize,
) -> Result<Image2D> {
    let frames = stack.frames();
    if indices.is_empty() {
        return Err(Error::NoFrames("indexed"));
    }
    let mut selected = vec![false; frames];
    for &i in indices {
        if i >= frames {
            return Err(Error::InvalidParameter(format!(
                "frame index {i} out of range for {frames} frames"
            )));
        }
        let lo = i.saturating_sub(half_window);
        let hi = i.saturating_add(half_window).min(frames - 1);
        selected[lo..=hi].iter_mut().for_each(|s| *s = true);
    }
    let chosen: Vec<usize> = (0..frames).filter(|&t| selected[t]).collect();
    let n = chosen.len() as f64;

    let (h, w) = stack.dims();
    let mut out = vec![0f32; h * w];
    out.par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(y, row)| {
            let offset = y * w;
            let mut acc = vec![0f64; w];
            for &t in &chosen {
                let src = &stack.frame(t)[offset..offset + w];
                for (a, &v) in acc.iter_mut().zip(src) {
                    *a += v as f64;
                }
            }
            for (o, a) in row.iter_mut().zip(acc) {
                *o = (a / n) as f32;
            }
        });
    Image2D::new(h, w, out)
}

/// Systolic image minus diastolic image.
pub fn diasys(systole: &Image2D, diastole: &Image2D) -> Result<Image2D> {
    if systole.dims() != diastole.dims() {
        return Err(Error::DimMismatch {
            left: systole.dims(),
            right: diastole.dims(),
        });
    }
    let (h, w) = systole.dims();
    Image2D::new(
        h,
        w,
        systole
            .data()
            .iter()
            .zip(diastole.data())
            .map(|(s, d)| s - d)
            .collect(),
    )
}
