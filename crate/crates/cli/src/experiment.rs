//! Experiment runner. Output layout under the output directory:
//!
//! ```text
//! manifest.json                 config echo, seed, versions, every cell
//! report.csv, report.json       one evaluation row per cell
//! <image>/input.png             the scene as simulated (cropped, resized)
//! <image>/input.boxes
//! <image>/original/final.png
//! <image>/defocus/final.png
//! <image>/k<K>_r<rate>/<method>/final.png         device reconstruction
//!                               attack.png        reconstruction from bundle.spb alone
//!                               bundle.spb
//!                               snapshots/provisional_<i>.png, weight_<i>.png
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use privspi_core::capture::{capture, replay_attack};
use privspi_core::domain::{format_boxes, parse_boxes};
use privspi_core::metrics::{defocus_baseline, evaluate, region_mse, EvalRow, Psnr};
use privspi_core::{BoundingBox, CaptureConfig, Image, MaskKind};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, Failure};
use crate::imageio::{boxes_path_for, fit_scene, load_raster, save_image};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Original,
    Defocus,
    OursPassthrough,
    OursOracle,
    OursSilhouette,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::Defocus => "defocus",
            Method::OursPassthrough => "ours-passthrough",
            Method::OursOracle => "ours-oracle",
            Method::OursSilhouette => "ours-silhouette",
        }
    }

    fn mask(self) -> Option<MaskKind> {
        match self {
            Method::OursPassthrough => Some(MaskKind::Passthrough),
            Method::OursOracle => Some(MaskKind::Oracle),
            Method::OursSilhouette => Some(MaskKind::Silhouette),
            Method::Original | Method::Defocus => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    /// Image files or directories of images.
    pub inputs: Vec<PathBuf>,
    /// Overrides the `<image>.boxes` convention; single image only.
    pub boxes: Option<PathBuf>,
    pub config: CaptureConfig,
    pub methods: Vec<Method>,
    pub out: PathBuf,
    pub sweep_k: Vec<f64>,
    pub sweep_rate: Vec<f64>,
    pub strict: bool,
    pub alpha: f64,
    /// Free-form provenance recorded in the manifest (scale, argv).
    pub invocation: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub feedback_base: f64,
    pub rate: f64,
}

impl SweepPoint {
    fn label(self) -> String {
        format!("k{}_r{}", self.feedback_base, self.rate)
    }
}

struct Scene {
    name: String,
    source: PathBuf,
    source_sha256: String,
    boxes_source: PathBuf,
    image: Image,
    boxes: Vec<BoundingBox>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellRecord {
    pub image: String,
    pub point: Option<SweepPoint>,
    pub method: Method,
    pub dir: String,
    pub eval: EvalRow,
    pub capture: Option<CaptureRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaptureRecord {
    pub acquisitions: usize,
    pub schedule: Vec<usize>,
    pub n_f: usize,
    pub converged: bool,
    pub iterations: usize,
    pub provisional_converged: usize,
    pub attack_converged: bool,
    pub attack_psnr_outside: Psnr,
    pub attack_mse_inside: f64,
    pub bundle_sha256: String,
    pub seconds: Timings,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Timings {
    pub acquisition: f64,
    pub provisional: f64,
    pub mask: f64,
    pub final_reconstruction: f64,
    pub attack: f64,
}

#[derive(Clone, Debug, Serialize)]
struct ReportRow<'a> {
    image: &'a str,
    feedback_base: Option<f64>,
    rate: Option<f64>,
    method: &'a str,
    psnr_outside_db: String,
    mse_inside: f64,
    mse_overall: f64,
    combined: f64,
    n_f: Option<usize>,
    converged: Option<bool>,
}

pub struct Outcome {
    pub cells: Vec<CellRecord>,
    /// Cells whose final or attack reconstruction hit the iteration cap.
    pub non_converged: Vec<String>,
}

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "pnm", "pbm"];

fn expand_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).map_err(|e| CliError::io(input, e))?;
        if meta.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::config("no input images"));
    }
    Ok(files)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn load_scenes(spec: &ExperimentSpec) -> CliResult<Vec<Scene>> {
    let files = expand_inputs(&spec.inputs)?;
    if spec.boxes.is_some() && files.len() > 1 {
        return Err(CliError::config("--boxes applies to a single image; use <image>.boxes files instead"));
    }
    let mut scenes: Vec<Scene> = Vec::new();
    for file in files {
        let bytes = fs::read(&file).map_err(|e| CliError::io(&file, e))?;
        let raster = load_raster(&file)?;
        let boxes_source = spec.boxes.clone().unwrap_or_else(|| boxes_path_for(&file));
        let text = fs::read_to_string(&boxes_source).map_err(|e| CliError::io(&boxes_source, e))?;
        let raw_boxes = parse_boxes(&text).map_err(|e| CliError::from(e).context(boxes_source.display()))?;
        let (image, boxes) = fit_scene(&raster, spec.config.side, spec.config.channels(), &raw_boxes)?;
        if boxes.is_empty() {
            return Err(CliError::config(format!(
                "{}: no target box inside the image; evaluation needs at least one",
                boxes_source.display()
            )));
        }
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
        let mut name = stem.clone();
        let mut k = 2;
        while scenes.iter().any(|s| s.name == name) {
            name = format!("{stem}-{k}");
            k += 1;
        }
        scenes.push(Scene {
            name,
            source: file,
            source_sha256: sha256_hex(&bytes),
            boxes_source,
            image,
            boxes,
        });
    }
    Ok(scenes)
}

fn sweep_points(spec: &ExperimentSpec) -> Vec<SweepPoint> {
    let ks = if spec.sweep_k.is_empty() {
        vec![spec.config.feedback_base]
    } else {
        spec.sweep_k.clone()
    };
    let rates = if spec.sweep_rate.is_empty() {
        vec![spec.config.rate]
    } else {
        spec.sweep_rate.clone()
    };
    ks.iter()
        .flat_map(|&k| rates.iter().map(move |&r| SweepPoint { feedback_base: k, rate: r }))
        .collect()
}

fn point_config(base: &CaptureConfig, point: SweepPoint, mask: MaskKind) -> CaptureConfig {
    CaptureConfig {
        feedback_base: point.feedback_base,
        rate: point.rate,
        mask,
        ..base.clone()
    }
}

fn run_baseline(spec: &ExperimentSpec, scene: &Scene, method: Method) -> CliResult<CellRecord> {
    let rel = format!("{}/{}", scene.name, method.name());
    let dir = spec.out.join(&rel);
    create_dir(&dir)?;
    let output = match method {
        Method::Original => scene.image.clone(),
        Method::Defocus => defocus_baseline(&scene.image)?,
        _ => unreachable!("not a baseline"),
    };
    save_image(&output, &dir.join("final.png"))?;
    let report = evaluate(&scene.image, &[(method.name().to_string(), output)], &scene.boxes, spec.alpha)?;
    Ok(CellRecord {
        image: scene.name.clone(),
        point: None,
        method,
        dir: rel,
        eval: report.rows.into_iter().next().expect("one row"),
        capture: None,
    })
}

fn run_capture(spec: &ExperimentSpec, scene: &Scene, point: SweepPoint, method: Method) -> CliResult<CellRecord> {
    let mask = method.mask().expect("capture method");
    let config = point_config(&spec.config, point, mask);
    let rel = format!("{}/{}/{}", scene.name, point.label(), method.name());
    let dir = spec.out.join(&rel);
    let snapshots = dir.join("snapshots");
    create_dir(&snapshots)?;

    let trace = capture(&scene.image, &scene.boxes, &config)?;
    let started = std::time::Instant::now();
    let attack = replay_attack(&trace.bundle, &config.admm_params())?;
    let attack_secs = started.elapsed().as_secs_f64();

    let bundle = trace.bundle.to_bytes();
    write_file(&dir.join("bundle.spb"), &bundle)?;
    save_image(trace.final_image(), &dir.join("final.png"))?;
    save_image(&attack.image, &dir.join("attack.png"))?;
    let side = config.side;
    for snap in &trace.snapshots {
        let i = snap.acquisition;
        save_image(&snap.provisional, &snapshots.join(format!("provisional_{i:04}.png")))?;
        let weight = Image::new(side, 1, snap.weight.values().to_vec())?;
        save_image(&weight, &snapshots.join(format!("weight_{i:04}.png")))?;
    }

    let report = evaluate(
        &scene.image,
        &[
            (method.name().to_string(), trace.final_image().clone()),
            ("attack".to_string(), attack.image.clone()),
        ],
        &scene.boxes,
        spec.alpha,
    )?;
    let mut rows = report.rows.into_iter();
    let eval = rows.next().expect("final row");
    let attack_row = rows.next().expect("attack row");
    debug_assert_eq!(attack_row.mse_inside, region_mse(&scene.image, &attack.image, &scene.boxes)?);

    let t = trace.timings;
    Ok(CellRecord {
        image: scene.name.clone(),
        point: Some(point),
        method,
        dir: rel,
        eval,
        capture: Some(CaptureRecord {
            acquisitions: trace.bundle.acquisitions(),
            schedule: trace.schedule.indices().to_vec(),
            n_f: trace.schedule.rounds(),
            converged: trace.final_result.converged,
            iterations: trace.final_result.iterations,
            provisional_converged: trace.snapshots.iter().filter(|s| s.converged).count(),
            attack_converged: attack.converged,
            attack_psnr_outside: attack_row.psnr_outside,
            attack_mse_inside: attack_row.mse_inside,
            bundle_sha256: sha256_hex(&bundle),
            seconds: Timings {
                acquisition: t.acquisition.as_secs_f64(),
                provisional: t.provisional.as_secs_f64(),
                mask: t.mask.as_secs_f64(),
                final_reconstruction: t.final_reconstruction.as_secs_f64(),
                attack: attack_secs,
            },
        }),
    })
}

enum Cell<'a> {
    Baseline(&'a Scene, Method),
    Capture(&'a Scene, SweepPoint, Method),
}

/// Runs every (image, sweep point, method) cell and writes the reports and
/// manifest. Cells are independent and run on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> CliResult<Outcome> {
    if spec.methods.is_empty() {
        return Err(CliError::config("select at least one method"));
    }
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(CliError::config(format!("alpha must lie in [0, 1], got {}", spec.alpha)));
    }
    let points = sweep_points(spec);
    for point in &points {
        point_config(&spec.config, *point, MaskKind::Passthrough)
            .validate()
            .map_err(|e| CliError::from(e).context(format!("sweep point {}", point.label())))?;
    }
    let scenes = load_scenes(spec)?;
    create_dir(&spec.out)?;
    for scene in &scenes {
        let dir = spec.out.join(&scene.name);
        create_dir(&dir)?;
        save_image(&scene.image, &dir.join("input.png"))?;
        write_file(&dir.join("input.boxes"), format_boxes(&scene.boxes).as_bytes())?;
    }

    let mut methods = spec.methods.clone();
    let mut seen = std::collections::HashSet::new();
    methods.retain(|m| seen.insert(*m));
    let mut cells = Vec::new();
    for scene in &scenes {
        for &method in &methods {
            if method.mask().is_none() {
                cells.push(Cell::Baseline(scene, method));
            } else {
                cells.extend(points.iter().map(|&p| Cell::Capture(scene, p, method)));
            }
        }
    }
    let records: Vec<CellRecord> = cells
        .par_iter()
        .map(|cell| match *cell {
            Cell::Baseline(scene, method) => run_baseline(spec, scene, method),
            Cell::Capture(scene, point, method) => run_capture(spec, scene, point, method),
        })
        .collect::<CliResult<_>>()?;

    write_reports(spec, &records)?;
    write_manifest(spec, &scenes, &points, &records)?;

    let non_converged = records
        .iter()
        .filter(|r| r.capture.as_ref().is_some_and(|c| !(c.converged && c.attack_converged)))
        .map(|r| r.dir.clone())
        .collect();
    Ok(Outcome {
        cells: records,
        non_converged,
    })
}

fn write_reports(spec: &ExperimentSpec, records: &[CellRecord]) -> CliResult<()> {
    let rows: Vec<ReportRow> = records
        .iter()
        .map(|r| ReportRow {
            image: &r.image,
            feedback_base: r.point.map(|p| p.feedback_base),
            rate: r.point.map(|p| p.rate),
            method: r.method.name(),
            psnr_outside_db: r.eval.psnr_outside.to_string(),
            mse_inside: r.eval.mse_inside,
            mse_overall: r.eval.mse_overall,
            combined: r.eval.combined,
            n_f: r.capture.as_ref().map(|c| c.n_f),
            converged: r.capture.as_ref().map(|c| c.converged),
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)
            .map_err(|e| CliError::new(Failure::Other, format!("report: {e}")))?;
    }
    let csv = w
        .into_inner()
        .map_err(|e| CliError::new(Failure::Other, format!("report: {e}")))?;
    write_file(&spec.out.join("report.csv"), &csv)?;
    let json = serde_json::json!({ "alpha": spec.alpha, "rows": rows });
    write_file(
        &spec.out.join("report.json"),
        serde_json::to_string_pretty(&json).expect("report serializes").as_bytes(),
    )
}

fn write_manifest(
    spec: &ExperimentSpec,
    scenes: &[Scene],
    points: &[SweepPoint],
    records: &[CellRecord],
) -> CliResult<()> {
    let images: Vec<serde_json::Value> = scenes
        .iter()
        .map(|s| {
            serde_json::json!({
                "name": s.name,
                "source": s.source.display().to_string(),
                "source_sha256": s.source_sha256,
                "boxes_source": s.boxes_source.display().to_string(),
                "boxes": s.boxes.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let manifest = serde_json::json!({
        "tool": "privspi",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": privspi_core::VERSION,
        "bundle_version": privspi_core::measurement::BUNDLE_VERSION,
        "invocation": spec.invocation,
        "seed": spec.config.seed,
        "config": spec.config,
        "config_toml": spec.config.to_toml_string(),
        "alpha": spec.alpha,
        "methods": spec.methods,
        "sweep": points,
        "images": images,
        "cells": records,
    });
    write_file(
        &spec.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes").as_bytes(),
    )
}
