use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use holopulse::features::NormSpec;
use holopulse::io::{
    load_binary_mask, load_mask, load_stack, read_header, save_binary_mask, save_map, save_mask,
    save_signal_csv, save_signals_csv, save_stack,
};
use holopulse::metrics::evaluate as evaluate_masks;
use holopulse::phantom::generate;
use holopulse::pipeline::{run, PipelineParams};
use holopulse::{ArteryRule, Class, PhantomSpec};
use log::{info, warn};
use serde::Serialize;

use crate::{EvaluateArgs, ExtractArgs, InfoArgs, PhantomArgs};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    version: &'static str,
    stack: String,
    mask: String,
    height: usize,
    width: usize,
    frames: usize,
    params: &'a PipelineParams,
    min_separation: usize,
    segment_count: usize,
    seed_count: usize,
}

pub fn extract(args: &ExtractArgs) -> Result<()> {
    let stack = load_stack(&args.stack)
        .with_context(|| format!("loading stack {}", args.stack.display()))?;
    let mask = load_binary_mask(&args.mask)
        .with_context(|| format!("loading mask {}", args.mask.display()))?;
    if stack.dims() != mask.dims() {
        bail!(
            "mask is {}x{} but stack frames are {}x{}",
            mask.height(),
            mask.width(),
            stack.height(),
            stack.width()
        );
    }
    let params = PipelineParams {
        rule: ArteryRule {
            threshold: args.theta,
            smoothing_width: args.smoothing as usize,
        },
        dilation_radius: args.dilation,
        min_len: args.min_len as usize,
        half_window: args.half_window,
        min_separation: args.min_separation.frames(),
        norm: NormSpec {
            m0: args.m0_norm,
            corr: args.corr_norm,
            diasys: args.diasys_norm,
        },
    };
    let out = run(&stack, &mask, &params).context("pipeline failed")?;
    for w in &out.classification.warnings {
        warn!("{w}");
    }
    info!(
        "{} segments, {} artery seeds, peaks {:?}, valleys {:?}",
        out.segments.segment_count(),
        out.classification.seed_count(),
        out.peaks.systolic_peaks,
        out.peaks.diastolic_valleys
    );

    let dir = &args.out;
    create_dir(dir)?;
    out.features.export(dir)?;
    save_map(&out.m0, dir.join("m0_raw.json"))?;
    save_map(&out.diasys, dir.join("diasys_raw.json"))?;
    save_map(&out.systole, dir.join("systole.json"))?;
    save_map(&out.diastole, dir.join("diastole.json"))?;
    save_binary_mask(&out.seed_mask, dir.join("artery_seeds.pgm"))?;
    save_binary_mask(&out.skeleton, dir.join("skeleton.pgm"))?;
    save_signal_csv(&out.pulse, dir.join("global_pulse.csv"))?;
    let names: Vec<String> = (1..=out.segment_signals.len())
        .map(|k| format!("segment_{k}"))
        .collect();
    save_signals_csv(
        &names,
        &out.segment_signals,
        dir.join("segment_signals.csv"),
    )?;
    write_json(&dir.join("peaks.json"), &out.peaks)?;
    write_json(&dir.join("classification.json"), &out.classification)?;
    write_json(
        &dir.join("run-manifest.json"),
        &RunManifest {
            command: "extract",
            version: env!("CARGO_PKG_VERSION"),
            stack: args.stack.display().to_string(),
            mask: args.mask.display().to_string(),
            height: stack.height(),
            width: stack.width(),
            frames: stack.frames(),
            params: &params,
            min_separation: out.min_separation,
            segment_count: out.segments.segment_count(),
            seed_count: out.classification.seed_count(),
        },
    )?;
    println!(
        "wrote features to {} ({} segments, {} artery seeds)",
        dir.display(),
        out.segments.segment_count(),
        out.classification.seed_count()
    );
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let pred = load_mask(&args.pred).with_context(|| format!("loading {}", args.pred.display()))?;
    let gt = load_mask(&args.gt).with_context(|| format!("loading {}", args.gt.display()))?;
    let report = evaluate_masks(&pred, &gt)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(&args.out, &report)?;
    print!("{}", report.table());
    Ok(())
}

pub fn phantom(args: &PhantomArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<PhantomSpec>(&text)
                .with_context(|| format!("parsing phantom spec {}", path.display()))?
        }
        None => PhantomSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.rng_seed = seed;
    }
    let truth = generate(&spec).context("invalid phantom spec")?;

    let dir = &args.out;
    create_dir(dir)?;
    save_stack(&truth.stack, dir.join("stack.json"))?;
    save_mask(&truth.gt_mask, dir.join("gt_mask.pgm"))?;
    save_binary_mask(&truth.gt_mask.vessel_mask(), dir.join("vessel_mask.pgm"))?;
    write_json(&dir.join("spec.json"), &spec)?;
    write_json(&dir.join("vessels.json"), &truth.vessels)?;
    let arteries = truth
        .vessels
        .iter()
        .filter(|v| v.class == Class::Artery)
        .count();
    println!(
        "wrote {}x{}x{} phantom with {} arteries and {} veins to {}",
        spec.height(),
        spec.width(),
        spec.frames(),
        arteries,
        truth.vessels.len() - arteries,
        dir.display()
    );
    Ok(())
}

pub fn info(args: &InfoArgs) -> Result<()> {
    let path = &args.path;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("pgm") {
        let mask = load_mask(path)?;
        let count = |c: Class| mask.labels().iter().filter(|&&l| l == c).count();
        println!(
            "h={} w={} background={} artery={} vein={}",
            mask.height(),
            mask.width(),
            count(Class::Background),
            count(Class::Artery),
            count(Class::Vein)
        );
        return Ok(());
    }
    let header = read_header(path).with_context(|| format!("reading header {}", path.display()))?;
    let mut line = format!(
        "h={} w={} frames={} dtype={}",
        header.height, header.width, header.frames, header.dtype
    );
    if let Some(rate) = header.frame_rate {
        line.push_str(&format!(" frame_rate={rate}"));
    }
    println!("{line}");
    Ok(())
}
