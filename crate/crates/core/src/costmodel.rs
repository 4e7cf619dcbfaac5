//! Operation-count profiles, latency estimates and adaptability ranking.
//!
//! Two kinds of profile exist for every metric:
//!
//! * the published per-pixel operation table ([`paper_profile`]), with the
//!   literal band count 400 replaced by `N`;
//! * the counts observed when the metric actually runs through the counting
//!   scalar ([`measured_profile`]).
//!
//! They disagree in places (the published RMS row has no squaring or root,
//! ΔE rows are listed per band). Reports show both; nothing reconciles them.
//!
//! The latency model treats each stage as one pipelined unit: a stage marked
//! parallel issues all its operations in one cycle, a serial stage issues one
//! per cycle, and square/cube roots add their unit latency on top.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{with_counting, Counted, Numeric, OpKind, Phase, Scope, Tally};
use crate::error::{Error, Result};
use crate::metrics::{prepare, MetricConfig, MetricKind};
use crate::spectral_data::{SpectralImage, MAX_BANDS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpStage {
    pub label: String,
    pub op: OpKind,
    pub count: u64,
    pub result_numeric: Numeric,
    pub parallel: bool,
    pub scope: Scope,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OpProfile {
    pub stages: Vec<OpStage>,
}

impl OpProfile {
    pub fn total(&self, op: OpKind) -> u64 {
        self.stages.iter().filter(|s| s.op == op).map(|s| s.count).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProfileSource {
    PaperTable3,
    DerivedCounter,
}

/// Per-module clock frequencies in MHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    pub control_mhz: f64,
    pub acquisition_mhz: f64,
    pub storage_mhz: f64,
    pub processing_mhz: f64,
}

impl Default for ClockModel {
    fn default() -> Self {
        Self {
            control_mhz: 150.0,
            acquisition_mhz: 77.0,
            storage_mhz: 100.0,
            processing_mhz: 50.0,
        }
    }
}

impl ClockModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.control_mhz,
            self.acquisition_mhz,
            self.storage_mhz,
            self.processing_mhz,
        ];
        if all.iter().all(|f| f.is_finite() && *f > 0.0) {
            Ok(())
        } else {
            Err(Error::InvariantViolation(format!(
                "clock frequencies must be positive: {all:?}"
            )))
        }
    }
}

/// Extra cycles a root unit needs beyond issue. Model parameters, not
/// measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitLatency {
    pub sqrt_cycles: u64,
    pub cbrt_cycles: u64,
}

impl Default for UnitLatency {
    fn default() -> Self {
        Self {
            sqrt_cycles: 16,
            cbrt_cycles: 32,
        }
    }
}

impl UnitLatency {
    pub fn of(&self, op: OpKind) -> u64 {
        match op {
            OpKind::Sqrt => self.sqrt_cycles,
            OpKind::Cbrt => self.cbrt_cycles,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub algorithm: MetricKind,
    pub bands: usize,
    pub source: ProfileSource,
    pub projection_ops: OpProfile,
    pub distance_ops: OpProfile,
    pub totals: BTreeMap<OpKind, u64>,
    pub cycles: Option<u64>,
    pub latency_us: Option<f64>,
    pub unit_latency: Option<UnitLatency>,
    pub clocks: Option<ClockModel>,
}

impl CostReport {
    fn new(
        algorithm: MetricKind,
        bands: usize,
        source: ProfileSource,
        projection_ops: OpProfile,
        distance_ops: OpProfile,
    ) -> Self {
        let mut totals = BTreeMap::new();
        for s in projection_ops.stages.iter().chain(&distance_ops.stages) {
            *totals.entry(s.op).or_insert(0) += s.count;
        }
        Self {
            algorithm,
            bands,
            source,
            projection_ops,
            distance_ops,
            totals,
            cycles: None,
            latency_us: None,
            unit_latency: None,
            clocks: None,
        }
    }

    pub fn total(&self, op: OpKind) -> u64 {
        self.totals.get(&op).copied().unwrap_or(0)
    }

    pub fn stages(&self) -> impl Iterator<Item = &OpStage> {
        self.projection_ops.stages.iter().chain(&self.distance_ops.stages)
    }
}

/// One row of the published table: `count = per_band * N + fixed`.
struct PaperStage {
    per_band: u64,
    fixed: u64,
    op: OpKind,
    numeric: Numeric,
    parallel: bool,
}

const fn ps(per_band: u64, fixed: u64, op: OpKind, numeric: Numeric, parallel: bool) -> PaperStage {
    PaperStage {
        per_band,
        fixed,
        op,
        numeric,
        parallel,
    }
}

use Numeric::{Float as F, Integer as I};
use OpKind::{Add, Cbrt, Div, Mul, Sqrt, Sub};

/// Projection stages carry no parallelism flag in the table. Weighting is
/// marked parallel, the accumulation over bands serial, and the three-value
/// steps parallel.
fn paper_rows(kind: MetricKind) -> (&'static [PaperStage], &'static [PaperStage]) {
    const NONE: &[PaperStage] = &[];
    const RMS: &[PaperStage] = &[
        ps(1, 0, Sub, I, true),
        ps(1, 0, Add, I, false),
        ps(0, 1, Mul, F, false),
    ];
    const WRMS: &[PaperStage] = &[
        ps(1, 0, Sub, I, true),
        ps(1, 0, Mul, F, true),
        ps(1, 0, Mul, F, true),
        ps(1, 0, Add, F, false),
        ps(0, 1, Mul, F, false),
        ps(0, 1, Sqrt, F, false),
    ];
    const GFC: &[PaperStage] = &[
        ps(1, 0, Mul, I, true),
        ps(1, 0, Add, I, false),
        ps(2, 0, Mul, I, true),
        ps(2, 0, Add, I, true),
        ps(0, 2, Sqrt, F, true),
        ps(0, 1, Mul, F, false),
    ];
    const RGB_PROJ: &[PaperStage] = &[ps(3, 0, Mul, I, true), ps(3, 0, Add, I, false)];
    const RGB_DIST: &[PaperStage] = &[
        ps(3, 0, Sub, I, true),
        ps(3, 0, Mul, I, true),
        ps(2, 0, Add, I, true),
        ps(1, 0, Sqrt, F, true),
    ];
    const LAB_PROJ: &[PaperStage] = &[
        ps(3, 0, Mul, F, true),
        ps(3, 0, Add, F, false),
        ps(0, 3, Mul, F, true),
        ps(0, 3, Cbrt, F, true),
    ];
    const LAB_DIST: &[PaperStage] = &[
        ps(3, 0, Sub, F, true),
        ps(3, 0, Mul, F, true),
        ps(2, 0, Add, F, true),
        ps(1, 0, Sqrt, F, true),
    ];
    const MV_PROJ: &[PaperStage] = &[
        ps(3, 0, Mul, F, true),
        ps(3, 0, Add, F, false),
        ps(0, 3, Div, F, true),
        ps(0, 3, Cbrt, F, true),
    ];
    const MV_DIST: &[PaperStage] = &[
        ps(1, 0, Sub, I, true),
        ps(3, 0, Div, F, true),
        ps(3, 0, Mul, F, true),
        ps(2, 0, Add, F, true),
        ps(1, 0, Sqrt, F, true),
        ps(1, 0, Mul, F, true),
        ps(1, 0, Add, F, false),
    ];
    match kind {
        MetricKind::Rms => (NONE, RMS),
        MetricKind::Wrms => (NONE, WRMS),
        MetricKind::Gfc => (NONE, GFC),
        MetricKind::DeRgb => (RGB_PROJ, RGB_DIST),
        MetricKind::DeLab => (LAB_PROJ, LAB_DIST),
        MetricKind::Mv => (MV_PROJ, MV_DIST),
    }
}

fn paper_label(row: &PaperStage) -> String {
    let sym = row.op.symbol();
    match (row.per_band, row.fixed) {
        (0, f) => format!("{f} {sym}"),
        (1, 0) => format!("N {sym}"),
        (k, 0) => format!("N x {k} {sym}"),
        (k, f) => format!("N x {k} + {f} {sym}"),
    }
}

fn expand(rows: &[PaperStage], n: u64) -> OpProfile {
    OpProfile {
        stages: rows
            .iter()
            .map(|r| OpStage {
                label: paper_label(r),
                op: r.op,
                count: r.per_band * n + r.fixed,
                result_numeric: r.numeric,
                parallel: r.parallel,
                scope: if r.per_band > 0 { Scope::PerBand } else { Scope::Fixed },
            })
            .collect(),
    }
}

/// Published per-pixel operation counts with 400 replaced by `bands`.
pub fn paper_profile(kind: MetricKind, bands: usize) -> Result<CostReport> {
    if bands == 0 || bands > MAX_BANDS {
        return Err(Error::InvariantViolation(format!(
            "band count {bands} outside 1..={MAX_BANDS}"
        )));
    }
    let (proj, dist) = paper_rows(kind);
    let n = bands as u64;
    Ok(CostReport::new(
        kind,
        bands,
        ProfileSource::PaperTable3,
        expand(proj, n),
        expand(dist, n),
    ))
}

/// Looks a metric up by name, for callers holding a string.
pub fn paper_profile_named(name: &str, bands: usize) -> Result<CostReport> {
    paper_profile(name.parse()?, bands)
}

fn tally_profile(tally: &Tally, phase: Phase) -> OpProfile {
    OpProfile {
        stages: tally
            .entries
            .iter()
            .filter(|e| e.stage.phase == phase)
            .map(|e| OpStage {
                label: e.stage.label.to_string(),
                op: e.op,
                count: e.count,
                result_numeric: e.stage.numeric,
                parallel: e.stage.parallel,
                scope: e.stage.scope,
            })
            .collect(),
    }
}

/// Per-pixel counts observed by running the metric through the counting
/// scalar. Every pixel must produce the same counts.
pub fn measured_profile(
    kind: MetricKind,
    img1: &SpectralImage,
    img2: &SpectralImage,
    cfg: &MetricConfig,
) -> Result<CostReport> {
    img1.ensure_compatible(img2)?;
    let prepared = prepare(kind, img1.axis(), cfg)?;
    let mut reference: Option<Tally> = None;
    for p in 0..img1.pixel_count() {
        let a: Vec<Counted> = img1.spectrum_at(p).iter().map(|&v| Counted(v as f64)).collect();
        let b: Vec<Counted> = img2.spectrum_at(p).iter().map(|&v| Counted(v as f64)).collect();
        let (out, tally) = with_counting(|| prepared.pixel(&a, &b));
        if out.is_none() {
            return Err(Error::ZeroSpectrum(format!("pixel {p} has a zero spectrum")));
        }
        match &reference {
            None => reference = Some(tally),
            Some(r) if *r != tally => {
                return Err(Error::InvariantViolation(format!(
                    "operation count of {kind} depends on pixel data (pixel {p})"
                )))
            }
            Some(_) => {}
        }
    }
    let tally = reference.expect("image has at least one pixel");
    Ok(CostReport::new(
        kind,
        img1.bands(),
        ProfileSource::DerivedCounter,
        tally_profile(&tally, Phase::Projection),
        tally_profile(&tally, Phase::Distance),
    ))
}

/// Cycles for one stage: one issue cycle if parallel, `count` otherwise,
/// plus the unit latency of roots.
pub fn stage_cycles(stage: &OpStage, unit: &UnitLatency) -> u64 {
    if stage.count == 0 {
        return 0;
    }
    let issue = if stage.parallel { 1 } else { stage.count };
    issue + unit.of(stage.op)
}

pub fn profile_cycles<'a>(stages: impl IntoIterator<Item = &'a OpStage>, unit: &UnitLatency) -> u64 {
    stages.into_iter().map(|s| stage_cycles(s, unit)).sum()
}

/// Fills in `cycles` and `latency_us` (at the processing clock).
pub fn estimate_latency(report: &CostReport, clocks: &ClockModel, unit: &UnitLatency) -> Result<CostReport> {
    clocks.validate()?;
    let cycles = profile_cycles(report.stages(), unit);
    let mut out = report.clone();
    out.cycles = Some(cycles);
    out.latency_us = Some(cycles as f64 / clocks.processing_mhz);
    out.unit_latency = Some(*unit);
    out.clocks = Some(*clocks);
    Ok(out)
}

/// Published ordering, easiest to hardest to map onto digital logic.
pub const PAPER_ADAPTABILITY: [MetricKind; 6] = [
    MetricKind::Rms,
    MetricKind::DeRgb,
    MetricKind::Wrms,
    MetricKind::Gfc,
    MetricKind::DeLab,
    MetricKind::Mv,
];

pub fn adaptability_rank() -> [MetricKind; 6] {
    PAPER_ADAPTABILITY
}

/// Relative hardware cost of one operation. Divisions and cube roots dominate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub add_sub: f64,
    pub shift: f64,
    pub mul: f64,
    pub sqrt: f64,
    pub div: f64,
    pub cbrt: f64,
    /// Multiplier for stages whose result is floating point.
    pub float_factor: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            add_sub: 1.0,
            shift: 1.0,
            mul: 4.0,
            sqrt: 32.0,
            div: 64.0,
            cbrt: 128.0,
            float_factor: 2.0,
        }
    }
}

impl ScoreWeights {
    fn op(&self, op: OpKind) -> f64 {
        match op {
            OpKind::Add | OpKind::Sub => self.add_sub,
            OpKind::ShiftDiv => self.shift,
            OpKind::Mul => self.mul,
            OpKind::Sqrt => self.sqrt,
            OpKind::Div => self.div,
            OpKind::Cbrt => self.cbrt,
        }
    }
}

/// `sum(count * weight(op) * (float_factor if float))` over all stages.
pub fn adaptability_score(report: &CostReport, w: &ScoreWeights) -> f64 {
    report
        .stages()
        .map(|s| {
            let numeric = if s.result_numeric == Numeric::Float {
                w.float_factor
            } else {
                1.0
            };
            s.count as f64 * w.op(s.op) * numeric
        })
        .sum()
}

/// Metrics ordered by ascending [`adaptability_score`] of their published
/// profile at `bands`.
pub fn computed_adaptability_rank(bands: usize, w: &ScoreWeights) -> Result<Vec<(MetricKind, f64)>> {
    let mut scored = MetricKind::ALL
        .into_iter()
        .map(|k| Ok((k, adaptability_score(&paper_profile(k, bands)?, w))))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(scored)
}

/// Synthesis and utilisation figures of the reference hardware build,
/// reproduced for context only.
pub const PAPER_REFERENCE: &[(&str, &str)] = &[
    ("rgb_projection.slices", "63 of 6144 (1%)"),
    ("rgb_projection.flip_flops", "87 of 12288 (0%)"),
    ("rgb_projection.luts", "84 of 12288 (0%)"),
    ("rgb_projection.dsp48", "4 of 32 (12%)"),
    ("square_root.slices", "161 of 6144 (2%)"),
    ("square_root.flip_flops", "77 of 12288 (0%)"),
    ("square_root.luts", "292 of 12288 (2%)"),
    ("square_root.gclks", "1 of 32 (3%)"),
    ("reusable_unit.communication", "33 LUTs, 34 flip-flops"),
    ("reusable_unit.decode", "12 LUTs, 24 flip-flops"),
    ("reusable_unit.control", "42 LUTs, 49 flip-flops"),
    ("reusable_unit.storage", "48 LUTs, 63 flip-flops"),
    ("reusable_unit.interface", "5 LUTs, 4 flip-flops"),
    ("processing_unit.synthesis_frequency", "186MHz"),
    ("processing_module.logic_cells", "364 logic cells"),
    ("processing_module.global_frequency", "50MHz"),
    ("module.control", "278 LUTs, 297 flip-flops"),
    ("module.acquisition", "315 LUTs, 228 flip-flops"),
    ("module.storage", "280 LUTs, 524710 flip-flops"),
    ("frequency.control", "150MHz"),
    ("frequency.acquisition", "77MHz"),
    ("frequency.storage", "100MHz"),
    ("frequency.processing", "50MHz"),
    ("system.logic_cells", "1237 of 6144 (20%)"),
];
