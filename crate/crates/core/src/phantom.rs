//! Synthetic pulsatile stacks with known artery/vein geometry.
//!
//! Arteries carry a periodic raised-cosine pulse whose rising part is
//! compressed into a short fraction of the period. Veins carry the same
//! pulse delayed, attenuated and smoothed by a moving average. Geometry is a
//! set of non-touching random-walk polylines rasterized at a fixed width.
//! The generator is ChaCha8 seeded with `rng_seed`, so output is a pure
//! function of the spec.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{BinaryMask, Class, ClassMask, TemporalStack};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArterialParams {
    /// >= 1. The pulse rises over `period / (2 * upstroke_sharpness)` frames.
    pub upstroke_sharpness: f64,
    pub pulse_amplitude: f64,
    /// Frames.
    pub period: f64,
    /// Frames.
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VenousParams {
    /// In [0, 1).
    pub amplitude_ratio: f64,
    /// Frames.
    pub delay: f64,
    /// Moving-average width in frames; 1 leaves the pulse shape unchanged.
    pub smoothing_width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomSpec {
    /// `[height, width, frames]`.
    pub dims: [usize; 3],
    pub rng_seed: u64,
    pub n_arteries: usize,
    pub n_veins: usize,
    pub vessel_width: usize,
    pub artery_waveform: ArterialParams,
    pub vein_waveform: VenousParams,
    pub noise_std: f64,
    pub baseline: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        let period = 64.0;
        Self {
            dims: [256, 256, 128],
            rng_seed: 1,
            n_arteries: 3,
            n_veins: 3,
            vessel_width: 5,
            artery_waveform: ArterialParams {
                upstroke_sharpness: 5.0,
                pulse_amplitude: 1.0,
                period,
                phase: 0.0,
            },
            vein_waveform: VenousParams {
                amplitude_ratio: 0.4,
                delay: period / 4.0,
                smoothing_width: 25,
            },
            noise_std: 0.05,
            baseline: 1.0,
        }
    }
}

impl PhantomSpec {
    pub fn height(&self) -> usize {
        self.dims[0]
    }

    pub fn width(&self) -> usize {
        self.dims[1]
    }

    pub fn frames(&self) -> usize {
        self.dims[2]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let a = &self.artery_waveform;
        let v = &self.vein_waveform;
        if self.height() == 0 || self.width() == 0 {
            return bad(format!("image dims must be positive, got {:?}", self.dims));
        }
        if !(a.period.is_finite() && a.period >= 8.0) {
            return bad(format!("period must be >= 8 frames, got {}", a.period));
        }
        if (self.frames() as f64) < 2.0 * a.period {
            return bad(format!(
                "frames ({}) must be >= 2 * period ({})",
                self.frames(),
                a.period
            ));
        }
        if !(a.upstroke_sharpness.is_finite() && a.upstroke_sharpness >= 1.0) {
            return bad(format!(
                "upstroke_sharpness must be >= 1, got {}",
                a.upstroke_sharpness
            ));
        }
        if !(0.0..1.0).contains(&v.amplitude_ratio) {
            return bad(format!(
                "amplitude_ratio must be in [0, 1), got {}",
                v.amplitude_ratio
            ));
        }
        if v.smoothing_width < 1 {
            return bad("smoothing_width must be >= 1".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if self.vessel_width < 1 {
            return bad("vessel_width must be >= 1".into());
        }
        for (name, x) in [
            ("pulse_amplitude", a.pulse_amplitude),
            ("phase", a.phase),
            ("delay", v.delay),
            ("baseline", self.baseline),
        ] {
            if !x.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        Ok(())
    }
}

/// Unit pulse shape over one period, `u` in `[0, 1)`: rises 0 -> 1 over the
/// first `0.5 / sharpness` of the period, then decays back to 0.
fn pulse_shape(u: f64, sharpness: f64) -> f64 {
    let rise = 0.5 / sharpness;
    if u < rise {
        (FRAC_PI_2 * u / rise).sin().powi(2)
    } else {
        (FRAC_PI_2 * (u - rise) / (1.0 - rise)).cos().powi(2)
    }
}

/// Arterial value at (possibly fractional) frame `t`.
pub fn arterial_waveform(t: f64, params: &ArterialParams, baseline: f64) -> f64 {
    let u = ((t - params.phase) / params.period).rem_euclid(1.0);
    baseline + params.pulse_amplitude * pulse_shape(u, params.upstroke_sharpness)
}

/// Venous value at frame `t`: the arterial pulse delayed by `delay`, scaled
/// by `amplitude_ratio` and averaged over `smoothing_width` centered offsets.
pub fn venous_waveform(t: f64, artery: &ArterialParams, vein: &VenousParams, baseline: f64) -> f64 {
    let w = vein.smoothing_width.max(1);
    let center = (w as f64 - 1.0) / 2.0;
    let mean_pulse = (0..w)
        .map(|j| arterial_waveform(t - vein.delay - (j as f64 - center), artery, 0.0))
        .sum::<f64>()
        / w as f64;
    baseline + vein.amplitude_ratio * mean_pulse
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VesselRecord {
    pub class: Class,
    /// Polyline vertices as `(y, x)`.
    pub path: Vec<(f64, f64)>,
    pub pixel_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomTruth {
    pub stack: TemporalStack,
    pub gt_mask: ClassMask,
    pub vessels: Vec<VesselRecord>,
}

const MAX_ATTEMPTS: usize = 2000;
/// Minimum background gap between vessels, in pixels.
const CLEARANCE: usize = 6;
const STEP: f64 = 4.0;
const TURN_STD: f64 = 0.06;

fn point_segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dy, dx) = (b.0 - a.0, b.1 - a.1);
    let len2 = dy * dy + dx * dx;
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dy + (p.1 - a.1) * dx) / len2).clamp(0.0, 1.0)
    };
    let (ey, ex) = (a.0 + s * dy - p.0, a.1 + s * dx - p.1);
    ey * ey + ex * ex
}

fn rasterize(path: &[(f64, f64)], width: usize, h: usize, w: usize) -> BinaryMask {
    let r = width as f64 / 2.0;
    let mut mask = BinaryMask::empty(h, w);
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let y0 = (a.0.min(b.0) - r).floor().max(0.0) as usize;
        let y1 = ((a.0.max(b.0) + r).ceil() as usize).min(h - 1);
        let x0 = (a.1.min(b.1) - r).floor().max(0.0) as usize;
        let x1 = ((a.1.max(b.1) + r).ceil() as usize).min(w - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if point_segment_dist2((y as f64, x as f64), a, b) < r * r {
                    mask.set(y, x, true);
                }
            }
        }
    }
    mask
}

fn random_path(rng: &mut ChaCha8Rng, h: usize, w: usize, margin: f64) -> Option<Vec<(f64, f64)>> {
    let turn = Normal::new(0.0, TURN_STD).expect("valid std");
    let length = 0.6 * h.min(w) as f64;
    let steps = (length / STEP).ceil() as usize;
    let (hf, wf) = (h as f64, w as f64);
    if hf <= 2.0 * margin || wf <= 2.0 * margin {
        return None;
    }
    let mut p = (
        rng.gen_range(margin..hf - margin),
        rng.gen_range(margin..wf - margin),
    );
    let mut heading: f64 = rng.gen_range(0.0..2.0 * PI);
    let mut path = vec![p];
    for _ in 0..steps {
        heading += turn.sample(rng);
        p = (p.0 + STEP * heading.sin(), p.1 + STEP * heading.cos());
        if p.0 < margin || p.0 > hf - margin || p.1 < margin || p.1 > wf - margin {
            return None;
        }
        path.push(p);
    }
    Some(path)
}

/// Draws vessels, then fills every frame: vessel pixels carry their class
/// waveform, background the baseline, all plus i.i.d. Gaussian noise drawn
/// in frame-major order.
pub fn generate(spec: &PhantomSpec) -> Result<PhantomTruth> {
    spec.validate()?;
    let (h, w, frames) = (spec.height(), spec.width(), spec.frames());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let margin = spec.vessel_width as f64 / 2.0 + 1.0;

    let mut gt_mask = ClassMask::background(h, w);
    let mut occupied = BinaryMask::empty(h, w);
    let mut vessels = Vec::new();
    let classes = std::iter::repeat(Class::Artery)
        .take(spec.n_arteries)
        .chain(std::iter::repeat(Class::Vein).take(spec.n_veins));

    for (index, class) in classes.enumerate() {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let Some(path) = random_path(&mut rng, h, w, margin) else {
                continue;
            };
            let raster = rasterize(&path, spec.vessel_width, h, w);
            let clash = raster.indices().any(|i| {
                let (y, x) = (i / w, i % w);
                (y.saturating_sub(CLEARANCE)..=(y + CLEARANCE).min(h - 1)).any(|yy| {
                    (x.saturating_sub(CLEARANCE)..=(x + CLEARANCE).min(w - 1))
                        .any(|xx| occupied.get(yy, xx))
                })
            });
            if clash {
                continue;
            }
            for i in raster.indices() {
                occupied.set(i / w, i % w, true);
                gt_mask.set(i / w, i % w, class);
            }
            vessels.push(VesselRecord {
                class,
                path,
                pixel_count: raster.count(),
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Placement {
                index,
                attempts: MAX_ATTEMPTS,
            });
        }
    }

    let artery: Vec<f64> = (0..frames)
        .map(|t| arterial_waveform(t as f64, &spec.artery_waveform, spec.baseline))
        .collect();
    let vein: Vec<f64> = (0..frames)
        .map(|t| {
            venous_waveform(
                t as f64,
                &spec.artery_waveform,
                &spec.vein_waveform,
                spec.baseline,
            )
        })
        .collect();
    let noise =
        Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let labels = gt_mask.labels();
    let mut data = Vec::with_capacity(frames * h * w);
    for t in 0..frames {
        for &class in labels {
            let clean = match class {
                Class::Artery => artery[t],
                Class::Vein => vein[t],
                Class::Background => spec.baseline,
            };
            let v = if spec.noise_std > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            };
            data.push(v as f32);
        }
    }
    let stack = TemporalStack::new(h, w, frames, data)?;
    Ok(PhantomTruth {
        stack,
        gt_mask,
        vessels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{count_components, Connectivity};

    fn small_spec() -> PhantomSpec {
        PhantomSpec {
            dims: [96, 96, 64],
            n_arteries: 1,
            n_veins: 1,
            artery_waveform: ArterialParams {
                period: 16.0,
                ..PhantomSpec::default().artery_waveform
            },
            vein_waveform: VenousParams {
                delay: 4.0,
                smoothing_width: 5,
                ..PhantomSpec::default().vein_waveform
            },
            ..PhantomSpec::default()
        }
    }

    fn max_rise(f: impl Fn(f64) -> f64, period: f64) -> f64 {
        // sample two full periods densely at integer frames
        let n = (2.0 * period) as usize;
        (0..n)
            .map(|t| f(t as f64 + 1.0) - f(t as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let a = ArterialParams {
            pulse_amplitude: 0.0,
            ..PhantomSpec::default().artery_waveform
        };
        for t in 0..100 {
            assert_eq!(arterial_waveform(t as f64, &a, 2.0), 2.0);
        }
    }

    #[test]
    fn arterial_is_periodic() {
        let a = PhantomSpec::default().artery_waveform;
        for t in 0..200 {
            let t = t as f64 * 0.37;
            let d = arterial_waveform(t + a.period, &a, 1.0) - arterial_waveform(t, &a, 1.0);
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn upstroke_ratio_at_defaults() {
        let s = PhantomSpec::default();
        let (a, v, b) = (s.artery_waveform, s.vein_waveform, s.baseline);
        let art = max_rise(|t| arterial_waveform(t, &a, b), a.period);
        let ven = max_rise(|t| venous_waveform(t, &a, &v, b), a.period);
        assert!(art / ven >= 3.0, "{art} / {ven}");
    }

    #[test]
    fn venous_identity_and_flat_settings() {
        let a = PhantomSpec::default().artery_waveform;
        let ident = VenousParams {
            amplitude_ratio: 1.0,
            delay: 0.0,
            smoothing_width: 1,
        };
        let flat = VenousParams {
            amplitude_ratio: 0.0,
            ..PhantomSpec::default().vein_waveform
        };
        for t in 0..130 {
            let t = t as f64;
            assert_eq!(
                venous_waveform(t, &a, &ident, 1.0),
                arterial_waveform(t, &a, 1.0)
            );
            assert_eq!(venous_waveform(t, &a, &flat, 1.0), 1.0);
        }
    }

    #[test]
    fn validation() {
        let mut s = PhantomSpec::default();
        s.artery_waveform.period = 4.0;
        assert!(generate(&s).is_err());
        let mut s = PhantomSpec::default();
        s.dims[2] = 100;
        assert!(s.validate().is_err());
        let mut s = PhantomSpec::default();
        s.vein_waveform.amplitude_ratio = 1.0;
        assert!(s.validate().is_err());
        let s = PhantomSpec {
            noise_std: -0.1,
            ..PhantomSpec::default()
        };
        assert!(s.validate().is_err());
        assert!(PhantomSpec::default().validate().is_ok());
    }

    #[test]
    fn same_seed_same_phantom() {
        let s = small_spec();
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = PhantomSpec {
            rng_seed: 99,
            ..s.clone()
        };
        assert_ne!(generate(&s).unwrap().stack, generate(&other).unwrap().stack);
    }

    #[test]
    fn noiseless_artery_pixels_follow_waveform() {
        let s = PhantomSpec {
            noise_std: 0.0,
            n_veins: 0,
            ..small_spec()
        };
        let truth = generate(&s).unwrap();
        let art = truth.gt_mask.class_mask(Class::Artery);
        assert!(art.count() > 0);
        for i in art.indices() {
            for (t, v) in truth.stack.series(i).into_iter().enumerate() {
                assert_eq!(
                    v,
                    arterial_waveform(t as f64, &s.artery_waveform, s.baseline) as f32
                );
            }
        }
        let bg = truth.gt_mask.class_mask(Class::Background);
        for i in bg.indices().take(50) {
            assert!(truth
                .stack
                .series(i)
                .iter()
                .all(|&v| v == s.baseline as f32));
        }
    }

    #[test]
    fn vessels_are_separate_components() {
        let s = PhantomSpec {
            n_arteries: 2,
            n_veins: 2,
            ..PhantomSpec::default()
        };
        let truth = generate(&s).unwrap();
        assert_eq!(
            count_components(&truth.gt_mask.vessel_mask(), Connectivity::Eight),
            4
        );
        assert_eq!(truth.vessels.len(), 4);
        let total: usize = truth.vessels.iter().map(|v| v.pixel_count).sum();
        assert_eq!(total, truth.gt_mask.vessel_mask().count());
    }

    #[test]
    fn impossible_placement_fails() {
        let s = PhantomSpec {
            dims: [24, 24, 16],
            n_arteries: 40,
            artery_waveform: ArterialParams {
                period: 8.0,
                ..PhantomSpec::default().artery_waveform
            },
            ..PhantomSpec::default()
        };
        assert!(matches!(generate(&s), Err(Error::Placement { .. })));
    }

    #[test]
    fn spec_json_keys() {
        let json = serde_json::to_value(PhantomSpec::default()).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "artery_waveform",
                "baseline",
                "dims",
                "n_arteries",
                "n_veins",
                "noise_std",
                "rng_seed",
                "vein_waveform",
                "vessel_width"
            ]
        );
        assert!(serde_json::from_str::<PhantomSpec>(r#"{"bogus": 1}"#).is_err());
        let partial: PhantomSpec = serde_json::from_str(r#"{"rng_seed": 5}"#).unwrap();
        assert_eq!(partial.rng_seed, 5);
        assert_eq!(partial.dims, [256, 256, 128]);
    }
}
