use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use msicorr::arith::{Numeric, OpKind, Scope};
use msicorr::costmodel::{
    adaptability_rank, computed_adaptability_rank, estimate_latency, measured_profile, paper_profile,
    profile_cycles, stage_cycles, ClockModel, CostReport, OpStage, ScoreWeights, UnitLatency,
    PAPER_REFERENCE,
};
use msicorr::fixedpoint::{fx_de_rgb, fx_rms, fx_to_real};
use msicorr::metrics::{self, image_metric, MetricConfig, MetricKind, SpectrumPair, WeightVector};
use msicorr::pipeline::{default_schedule, validate_schedule, AuthConfig, Decision, ReferenceStore};
use msicorr::projection::{project_lab, project_rgb, project_xyz, TriImage};
use msicorr::reduce::with_workers;
use msicorr::spectral_data::load_cube;
use msicorr::{Error, ReferenceWhite, SensitivityKind, SensitivitySet, SpectralImage, WavelengthAxis};

use crate::inputs::{self, ConfigArgs};
use crate::report::RunReport;
use crate::{exit, Source, Space, UsageError};

fn load(role: &str, path: &Path, report: &mut RunReport) -> Result<SpectralImage> {
    report.input(role, path)?;
    Ok(load_cube(path)?)
}

fn write_tri_csv(img: &TriImage, path: &Path) -> Result<()> {
    let mut text = String::from("x,y,c1,c2,c3\n");
    for y in 0..img.height {
        for x in 0..img.width {
            let [a, b, c] = img.pixel(x, y);
            writeln!(text, "{x},{y},{a},{b},{c}")?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
pub fn project(
    input: &Path,
    space: Space,
    sens: &Path,
    white: Option<&Path>,
    flat_white: bool,
    out: &Path,
    report_path: Option<&Path>,
    workers: Option<usize>,
) -> Result<u8> {
    let mut report = RunReport::new("project");
    let img = load("in", input, &mut report)?;
    let axis = img.axis().clone();
    let kind = match space {
        Space::Rgb => SensitivityKind::CameraRgb,
        Space::Xyz | Space::Lab => SensitivityKind::CmfXyz,
    };
    let table = inputs::sensitivities(sens, &axis, kind, &mut report)?;
    let white_spectrum = white
        .map(|p| inputs::white_spectrum(p, &axis, &mut report))
        .transpose()?;
    let (tri, params) = with_workers(workers, || -> Result<_> {
        Ok(match space {
            Space::Rgb => (project_rgb(&img, &table)?, json!({ "space": "rgb" })),
            Space::Xyz => {
                let (tri, norm) = project_xyz(&img, &table, white_spectrum.as_deref())?;
                (tri, json!({ "space": "xyz", "k": norm.k, "white": white_label(white, true) }))
            }
            Space::Lab => {
                let w = match (&white_spectrum, flat_white) {
                    (Some(s), _) => ReferenceWhite::from_spectrum(&table, s)?,
                    (None, true) => ReferenceWhite::flat(&table)?,
                    (None, false) => return Err(Error::MissingConfig("--white (or --flat-white)".into()).into()),
                };
                let tri = project_lab(&img, &table, &w)?;
                (
                    tri,
                    json!({ "space": "lab", "white": white_label(white, flat_white), "white_xyz": [w.xn, w.yn, w.zn] }),
                )
            }
        })
    })?;
    write_tri_csv(&tri, out)?;
    println!(
        "projected {}x{} pixels ({} bands) to {:?} -> {}",
        tri.width,
        tri.height,
        axis.count(),
        tri.space,
        out.display()
    );
    report.parameters = params;
    report.results = json!({ "width": tri.width, "height": tri.height, "csv": out.display().to_string() });
    report.write(report_path)?;
    Ok(exit::OK)
}

fn white_label(path: Option<&Path>, flat: bool) -> &'static str {
    match (path, flat) {
        (Some(_), _) => "spectrum",
        (None, true) => "flat",
        (None, false) => "none",
    }
}

fn parse_metric(name: &str) -> Result<MetricKind> {
    Ok(name.parse::<MetricKind>()?)
}

pub fn distance(
    reference: &Path,
    candidate: &Path,
    metric: &str,
    config: &ConfigArgs,
    pixels: Option<&Path>,
    out: Option<&Path>,
    workers: Option<usize>,
) -> Result<u8> {
    let mut report = RunReport::new("distance");
    let kind = parse_metric(metric)?;
    let a = load("ref", reference, &mut report)?;
    let b = load("cand", candidate, &mut report)?;
    a.ensure_compatible(&b)?;
    let cfg = inputs::metric_config(kind, config, a.axis(), true, &mut report)?;
    let result = with_workers(workers, || image_metric(kind, &a, &b, &cfg))?;
    if let Some(path) = pixels {
        let mut text = String::from("x,y,value\n");
        for (p, v) in result.per_pixel.iter().enumerate() {
            writeln!(text, "{},{},{v}", p % result.width, p / result.width)?;
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{} aggregate {}", kind, result.aggregate);
    report.parameters = json!({
        "metric": kind,
        "white": white_label(config.white.as_deref(), config.flat_white),
        "mv_epsilon": metrics::MV_EPSILON,
    });
    report.results = json!({
        "metric": kind,
        "polarity": result.polarity,
        "width": result.width,
        "height": result.height,
        "aggregate": result.aggregate,
    });
    report.write(out)?;
    Ok(exit::OK)
}

pub struct AuthArgs<'a> {
    pub store: &'a Path,
    pub ref_id: &'a str,
    pub candidate: &'a Path,
    pub metric: &'a str,
    pub precision: f64,
    pub margin: f64,
    pub schedule: Option<Vec<usize>>,
    pub config: &'a ConfigArgs,
    pub out: Option<&'a Path>,
    pub workers: Option<usize>,
}

pub fn authenticate(args: AuthArgs<'_>) -> Result<u8> {
    let mut report = RunReport::new("authenticate");
    let kind = parse_metric(args.metric)?;
    if !args.store.join(msicorr::pipeline::INDEX_FILE).exists() {
        return Err(Error::UnknownReference(format!("{} (store {} has no index)", args.ref_id, args.store.display())).into());
    }
    let store = ReferenceStore::open(args.store)?;
    let (reference, _) = store.load(args.ref_id)?;
    let schedule = args
        .schedule
        .clone()
        .unwrap_or_else(|| default_schedule(kind, reference.bands()));
    validate_schedule(kind, &schedule, reference.bands())?;
    let candidate = load("cand", args.candidate, &mut report)?;
    let metric_config = inputs::metric_config(kind, args.config, reference.axis(), false, &mut report)?;
    let cfg = AuthConfig {
        metric: kind,
        precision: args.precision,
        margin: args.margin,
        schedule: args.schedule,
        metric_config,
    };
    let verdict = with_workers(args.workers, || {
        msicorr::pipeline::authenticate(&store, args.ref_id, &candidate, &cfg)
    })?;
    for it in &verdict.iterations {
        println!("bands {:>3}  R = {}", it.bands, it.r);
    }
    println!("{}", verdict.decision.as_str());
    report.parameters = json!({
        "metric": kind,
        "ref_id": args.ref_id,
        "precision": args.precision,
        "margin": args.margin,
        "schedule": schedule,
    });
    report.results = serde_json::to_value(&verdict)?;
    report.write(args.out)?;
    Ok(match verdict.decision {
        Decision::Authentic => exit::OK,
        Decision::Rejected => exit::REJECTED,
        Decision::Undecided => exit::UNDECIDED,
    })
}

fn parse_custom(spec: &str) -> Result<OpStage> {
    let bad = || UsageError(format!("--custom expects OP:COUNT:par|serial, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [op, count, par] = parts[..] else {
        return Err(bad().into());
    };
    let op = OpKind::ALL
        .into_iter()
        .find(|k| format!("{k:?}").eq_ignore_ascii_case(&op.replace('_', "")))
        .ok_or_else(bad)?;
    let count: u64 = count.parse().map_err(|_| bad())?;
    let parallel = match par.to_ascii_lowercase().as_str() {
        "par" | "parallel" | "yes" => true,
        "serial" | "no" => false,
        _ => return Err(bad().into()),
    };
    Ok(OpStage {
        label: spec.to_string(),
        op,
        count,
        result_numeric: Numeric::Integer,
        parallel,
        scope: Scope::Fixed,
    })
}

fn synthetic_config(bands: usize) -> Result<MetricConfig> {
    let axis = WavelengthAxis::new(380, 1, bands)?;
    let ones = || vec![1.0; bands];
    let cmf = SensitivitySet::new(axis.clone(), [ones(), ones(), ones()], SensitivityKind::CmfXyz)?;
    Ok(MetricConfig {
        weights: Some(WeightVector::uniform(bands)),
        rgb_sensitivities: Some(SensitivitySet::new(axis, [ones(), ones(), ones()], SensitivityKind::CameraRgb)?),
        white: Some(ReferenceWhite::flat(&cmf)?),
        cmf: Some(cmf),
    })
}

fn random_cube(rng: &mut ChaCha8Rng, bands: usize) -> Result<SpectralImage> {
    let axis = WavelengthAxis::new(380, 1, bands)?;
    // never zero, so GFC is defined on every pixel
    Ok(SpectralImage::from_fn(2, 2, axis, |_, _, _| rng.gen_range(1..=255))?)
}

fn op_name(op: OpKind) -> String {
    serde_json::to_value(op)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn stage_rows(phase: &str, stages: &[OpStage], unit: &UnitLatency, out: &mut String) {
    for s in stages {
        let _ = writeln!(
            out,
            "{phase:<10} {:<24} {:<9} {:>6} {:<8} {:<8} {:>6}",
            s.label,
            op_name(s.op),
            s.count,
            format!("{:?}", s.result_numeric).to_lowercase(),
            if s.parallel { "parallel" } else { "serial" },
            stage_cycles(s, unit)
        );
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cost(
    metric: Option<&str>,
    bands: usize,
    source: Source,
    sqrt_cycles: u64,
    cbrt_cycles: u64,
    custom: &[String],
    seed: u64,
    out: Option<&Path>,
) -> Result<u8> {
    let mut report = RunReport::new("cost");
    let clocks = ClockModel::default();
    let unit = UnitLatency {
        sqrt_cycles,
        cbrt_cycles,
    };
    let reference: serde_json::Map<String, serde_json::Value> = PAPER_REFERENCE
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let mut table = String::new();
    let results = if !custom.is_empty() {
        let stages = custom.iter().map(|s| parse_custom(s)).collect::<Result<Vec<_>>>()?;
        let cycles = profile_cycles(&stages, &unit);
        let latency_us = cycles as f64 / clocks.processing_mhz;
        stage_rows("custom", &stages, &unit, &mut table);
        let _ = writeln!(table, "cycles {cycles}, latency {latency_us} us at {} MHz", clocks.processing_mhz);
        json!({ "custom_stages": stages, "cycles": cycles, "latency_us": latency_us })
    } else {
        let kind = parse_metric(metric.expect("clap enforces --metric without --custom"))?;
        let profile: CostReport = match source {
            Source::Paper => paper_profile(kind, bands)?,
            Source::Measured => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_cube(&mut rng, bands)?;
                let b = random_cube(&mut rng, bands)?;
                measured_profile(kind, &a, &b, &synthetic_config(bands)?)?
            }
        };
        let est = estimate_latency(&profile, &clocks, &unit)?;
        stage_rows("projection", &est.projection_ops.stages, &unit, &mut table);
        stage_rows("distance", &est.distance_ops.stages, &unit, &mut table);
        for (op, n) in &est.totals {
            let _ = writeln!(table, "total {:<9} {n}", op_name(*op));
        }
        let _ = writeln!(
            table,
            "cycles {}, latency {} us at {} MHz",
            est.cycles.unwrap_or(0),
            est.latency_us.unwrap_or(0.0),
            clocks.processing_mhz
        );
        let computed = computed_adaptability_rank(bands, &ScoreWeights::default())?;
        json!({
            "profile": est,
            "adaptability": {
                "published": adaptability_rank(),
                "computed": computed.iter().map(|(k, s)| json!({ "metric": k, "score": s })).collect::<Vec<_>>(),
                "score_weights": ScoreWeights::default(),
            },
        })
    };
    print!("{table}");
    report.parameters = json!({
        "metric": metric,
        "bands": bands,
        "source": format!("{source:?}").to_lowercase(),
        "seed": seed,
        "unit_latency": unit,
        "clocks_mhz": clocks,
    });
    report.results = json!({ "cost": results, "paper_reference": reference });
    report.write(out)?;
    Ok(exit::OK)
}

const FXP_TOLERANCE: f64 = 1.0 / 256.0;
/// Channel range for random RGB triples; keeps every ΔE inside Q16.16.
const FXP_RGB_MAX: i32 = 1 << 14;

fn relative_error(fixed: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        fixed.abs()
    } else {
        (fixed - exact).abs() / exact
    }
}

pub fn fxp_compare(metric: &str, trials: usize, seed: u64, bands: usize, identical: bool, out: Option<&Path>) -> Result<u8> {
    let mut report = RunReport::new("fxp-compare");
    let kind = parse_metric(metric)?;
    if !matches!(kind, MetricKind::Rms | MetricKind::DeRgb) {
        return Err(UsageError(format!("no fixed-point variant for {kind}")).into());
    }
    if trials == 0 {
        return Err(UsageError("--trials must be at least 1".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for _ in 0..trials {
        let err = match kind {
            MetricKind::Rms => {
                let a: Vec<u8> = (0..bands).map(|_| rng.gen()).collect();
                let b: Vec<u8> = if identical { a.clone() } else { (0..bands).map(|_| rng.gen()).collect() };
                let fixed = fx_to_real(fx_rms(&a, &b)?);
                let exact = metrics::rms(&SpectrumPair::from_u8(&a, &b)?);
                relative_error(fixed, exact)
            }
            _ => {
                let mut triple = || -> [i32; 3] { std::array::from_fn(|_| rng.gen_range(0..FXP_RGB_MAX)) };
                let a = triple();
                let b = if identical { a } else { triple() };
                let fixed = fx_to_real(fx_de_rgb(a, b)?);
                let exact = (0..3).map(|c| ((a[c] - b[c]) as f64).powi(2)).sum::<f64>().sqrt();
                relative_error(fixed, exact)
            }
        };
        max = max.max(err);
        sum += err;
    }
    let mean = sum / trials as f64;
    let pass = max <= FXP_TOLERANCE;
    println!(
        "{kind}: {trials} trials, max relative error {max:e}, mean {mean:e}, tolerance {FXP_TOLERANCE} -> {}",
        if pass { "pass" } else { "FAIL" }
    );
    report.parameters = json!({
        "metric": kind,
        "trials": trials,
        "seed": seed,
        "bands": if kind == MetricKind::Rms { Some(bands) } else { None },
        "rgb_channel_max": if kind == MetricKind::DeRgb { Some(FXP_RGB_MAX) } else { None },
        "identical": identical,
        "tolerance": FXP_TOLERANCE,
    });
    report.results = json!({ "max_relative_error": max, "mean_relative_error": mean, "pass": pass });
    report.write(out)?;
    Ok(if pass { exit::OK } else { exit::TOLERANCE })
}

fn absolute(p: &Path) -> Result<std::path::PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

pub fn add_reference(store: &Path, id: &str, cube: &Path, white: Option<&Path>, metadata: &str) -> Result<u8> {
    let store = ReferenceStore::open(store)?;
    let cube = absolute(cube)?;
    let white = white.map(absolute).transpose()?;
    store.add_reference(id, &cube, white.as_deref(), metadata)?;
    println!("added {id}");
    Ok(exit::OK)
}

pub fn list_references(store: &Path, out: Option<&Path>) -> Result<u8> {
    let mut report = RunReport::new("list-references");
    let store = ReferenceStore::open(store)?;
    let refs = store.list_references()?;
    for r in &refs {
        println!("{}\t{}x{}x{}\t{}", r.id, r.width, r.height, r.bands, r.metadata);
    }
    report.results = json!({ "references": refs });
    report.write(out)?;
    Ok(exit::OK)
}
