//! End-to-end feature extraction: vessel mask + stack in, feature stack out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{build_feature_stack, temporal_mean, FeatureStack, NormSpec};
use crate::io::{BinaryMask, Image2D, TemporalStack};
use crate::pulse::{
    artery_seed_mask, average_frames_around, classify_artery_segments, correlation_map,
    detect_peaks, diasys, global_pulse, segment_signals, ArteryClassification, ArteryRule, PeakSet,
    PulseSignal,
};
use crate::skeleton::{label_segments, prune_short_segments, skeletonize, LabeledSegments};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub rule: ArteryRule,
    pub dilation_radius: usize,
    pub min_len: usize,
    pub half_window: usize,
    /// `None` picks `max(1, frames / 8)`.
    pub min_separation: Option<usize>,
    pub norm: NormSpec,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            rule: ArteryRule::default(),
            dilation_radius: 2,
            min_len: 5,
            half_window: 2,
            min_separation: None,
            norm: NormSpec::default(),
        }
    }
}

impl PipelineParams {
    pub fn effective_min_separation(&self, frames: usize) -> usize {
        self.min_separation.unwrap_or((frames / 8).max(1))
    }
}

/// Every intermediate product of a run.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub skeleton: BinaryMask,
    pub segments: LabeledSegments,
    pub segment_signals: Vec<PulseSignal>,
    pub classification: ArteryClassification,
    pub seed_mask: BinaryMask,
    pub pulse: PulseSignal,
    pub min_separation: usize,
    pub peaks: PeakSet,
    pub m0: Image2D,
    pub corr: Image2D,
    pub systole: Image2D,
    pub diastole: Image2D,
    pub diasys: Image2D,
    pub features: FeatureStack,
}

pub fn run(
    stack: &TemporalStack,
    vessel_mask: &BinaryMask,
    params: &PipelineParams,
) -> Result<PipelineOutput> {
    if stack.dims() != vessel_mask.dims() {
        return Err(Error::DimMismatch {
            left: stack.dims(),
            right: vessel_mask.dims(),
        });
    }
    let skeleton = skeletonize(vessel_mask);
    let segments = prune_short_segments(&label_segments(&skeleton), params.min_len)?;
    let signals = segment_signals(stack, &segments, params.dilation_radius)?;
    let classification = classify_artery_segments(&signals, &params.rule)?;
    let seed_mask = artery_seed_mask(&segments, &classification)?;
    let pulse = global_pulse(stack, &seed_mask)?;

    let corr = correlation_map(stack, &pulse)?;
    let min_separation = params.effective_min_separation(stack.frames());
    let peaks = detect_peaks(&pulse, min_separation)?;
    if peaks.systolic_peaks.is_empty() {
        return Err(Error::NoFrames("systolic"));
    }
    if peaks.diastolic_valleys.is_empty() {
        return Err(Error::NoFrames("diastolic"));
    }
    let systole = average_frames_around(stack, &peaks.systolic_peaks, params.half_window)?;
    let diastole = average_frames_around(stack, &peaks.diastolic_valleys, params.half_window)?;
    let diasys = diasys(&systole, &diastole)?;
    let m0 = temporal_mean(stack);
    let features = build_feature_stack(&m0, &corr, &diasys, &params.norm)?;

    Ok(PipelineOutput {
        skeleton,
        segments,
        segment_signals: signals,
        classification,
        seed_mask,
        pulse,
        min_separation,
        peaks,
        m0,
        corr,
        systole,
        diastole,
        diasys,
        features,
    })
}
