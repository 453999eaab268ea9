//! Segmentation metrics: sensitivity, Dice, clDice and HD95, per class and
//! for the vessel union.

mod distance;
pub mod oracle;

pub use distance::{directed_distances, squared_distance_transform};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::{BinaryMask, Class, ClassMask};
use crate::skeleton::skeletonize;
use crate::stats::percentile_sorted;

/// One-vs-rest pixel counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimMismatch { left: a, right: b });
    }
    Ok(())
}

pub fn confusion_counts(pred: &ClassMask, gt: &ClassMask, class: Class) -> Result<Confusion> {
    check_dims(pred.dims(), gt.dims())?;
    Ok(binary_confusion(
        &pred.class_mask(class),
        &gt.class_mask(class),
    ))
}

fn binary_confusion(pred: &BinaryMask, gt: &BinaryMask) -> Confusion {
    let mut c = Confusion::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// `TP / (TP + FN)`; `None` when the ground truth has no pixels of the class.
pub fn sensitivity(c: &Confusion) -> Option<f64> {
    let denom = c.tp + c.fn_;
    (denom > 0).then(|| c.tp as f64 / denom as f64)
}

/// `2TP / (2TP + FP + FN)`; `None` when both masks are empty for the class.
pub fn dice(c: &Confusion) -> Option<f64> {
    let denom = 2 * c.tp + c.fp + c.fn_;
    (denom > 0).then(|| 2.0 * c.tp as f64 / denom as f64)
}

fn overlap_ratio(skel: &BinaryMask, other: &BinaryMask) -> f64 {
    let n = skel.count();
    if n == 0 {
        return 0.0;
    }
    let hit = skel.indices().filter(|&i| other.data()[i]).count();
    hit as f64 / n as f64
}

/// Centerline Dice: harmonic mean of topology precision
/// `|S(pred) ∩ gt| / |S(pred)|` and topology sensitivity
/// `|S(gt) ∩ pred| / |S(gt)|`. 0 when either mask is blank.
pub fn cl_dice(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    if pred.is_blank() || gt.is_blank() {
        return Ok(0.0);
    }
    let tprec = overlap_ratio(&skeletonize(pred), gt);
    let tsens = overlap_ratio(&skeletonize(gt), pred);
    if tprec + tsens == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * tprec * tsens / (tprec + tsens))
}

fn p95(mut d: Vec<f64>) -> f64 {
    d.sort_by(f64::total_cmp);
    percentile_sorted(&d, 95.0).unwrap_or(f64::INFINITY)
}

/// Symmetric 95th-percentile Hausdorff distance in pixels; `+inf` when
/// either mask is blank.
pub fn hd95(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    if pred.is_blank() || gt.is_blank() {
        return Ok(f64::INFINITY);
    }
    let forward = p95(directed_distances(pred, gt));
    let backward = p95(directed_distances(gt, pred));
    Ok(forward.max(backward))
}

/// Plain Hausdorff distance (the 100th percentile).
pub fn hausdorff(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    if pred.is_blank() || gt.is_blank() {
        return Ok(f64::INFINITY);
    }
    let max = |d: Vec<f64>| d.into_iter().fold(0.0, f64::max);
    Ok(max(directed_distances(pred, gt)).max(max(directed_distances(gt, pred))))
}

fn ser_distance<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn de_distance<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Metrics for one class. `defined` is true when both prediction and ground
/// truth contain the class; otherwise some cells are undefined (`None`, or
/// `+inf` for hd95, serialized as `null`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub sensitivity: Option<f64>,
    pub dice: Option<f64>,
    pub cl_dice: f64,
    #[serde(serialize_with = "ser_distance", deserialize_with = "de_distance")]
    pub hd95: f64,
    pub defined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub vessel: ClassMetrics,
    pub artery: ClassMetrics,
    pub vein: ClassMetrics,
    /// Average over artery and vein of every cell that is defined for both
    /// or either class; undefined cells are left out.
    pub macro_av: ClassMetrics,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

fn class_metrics(
    name: &str,
    pred: &BinaryMask,
    gt: &BinaryMask,
    warnings: &mut Vec<String>,
) -> ClassMetrics {
    let c = binary_confusion(pred, gt);
    let pred_blank = pred.is_blank();
    let gt_blank = gt.is_blank();
    if gt_blank {
        warnings.push(format!(
            "{name}: ground truth is empty; sensitivity undefined"
        ));
    }
    if pred_blank {
        warnings.push(format!("{name}: prediction is empty"));
    }
    if pred_blank || gt_blank {
        warnings.push(format!("{name}: cl_dice set to 0 and hd95 to +inf"));
    }
    ClassMetrics {
        sensitivity: sensitivity(&c),
        dice: dice(&c),
        cl_dice: cl_dice(pred, gt).expect("same dims"),
        hd95: hd95(pred, gt).expect("same dims"),
        defined: !pred_blank && !gt_blank,
    }
}

fn average(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let kept: Vec<f64> = values.flatten().filter(|v| v.is_finite()).collect();
    (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
}

fn macro_average(a: &ClassMetrics, v: &ClassMetrics) -> ClassMetrics {
    let both = [a, v];
    // cl_dice is only meaningful where the class is present on both sides
    let cl = average(both.iter().map(|m| m.defined.then_some(m.cl_dice)));
    ClassMetrics {
        sensitivity: average(both.iter().map(|m| m.sensitivity)),
        dice: average(both.iter().map(|m| m.dice)),
        cl_dice: cl.unwrap_or(0.0),
        hd95: average(both.iter().map(|m| Some(m.hd95))).unwrap_or(f64::INFINITY),
        defined: a.defined && v.defined,
    }
}

/// All metrics for artery, vein and the artery-or-vein union.
pub fn evaluate(pred: &ClassMask, gt: &ClassMask) -> Result<MetricsReport> {
    check_dims(pred.dims(), gt.dims())?;
    let mut warnings = Vec::new();
    let vessel = class_metrics(
        "vessel",
        &pred.vessel_mask(),
        &gt.vessel_mask(),
        &mut warnings,
    );
    let artery = class_metrics(
        "artery",
        &pred.class_mask(Class::Artery),
        &gt.class_mask(Class::Artery),
        &mut warnings,
    );
    let vein = class_metrics(
        "vein",
        &pred.class_mask(Class::Vein),
        &gt.class_mask(Class::Vein),
        &mut warnings,
    );
    Ok(MetricsReport {
        macro_av: macro_average(&artery, &vein),
        vessel,
        artery,
        vein,
        warnings,
    })
}

impl MetricsReport {
    pub fn rows(&self) -> [(&'static str, &ClassMetrics); 4] {
        [
            ("vessel", &self.vessel),
            ("artery", &self.artery),
            ("vein", &self.vein),
            ("macro_av", &self.macro_av),
        ]
    }

    /// Fixed-width table with columns Sens. / Dice / clDice / HD95.
    pub fn table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "    n/a".to_string(), |v| format!("{v:7.3}"));
        let dist = |v: f64| {
            if v.is_finite() {
                format!("{v:7.2}")
            } else {
                "    inf".to_string()
            }
        };
        let mut out = format!(
            "{:<9} {:>7} {:>7} {:>7} {:>7}\n",
            "class", "Sens.", "Dice", "clDice", "HD95"
        );
        for (name, m) in self.rows() {
            out.push_str(&format!(
                "{:<9} {} {} {} {}\n",
                name,
                cell(m.sensitivity),
                cell(m.dice),
                cell(Some(m.cl_dice)),
                dist(m.hd95)
            ));
        }
        out
    }
}
