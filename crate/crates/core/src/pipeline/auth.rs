use serde::{Deserialize, Serialize};

use super::store::ReferenceStore;
use crate::error::{Error, Result};
use crate::metrics::{image_metric, MetricConfig, MetricKind, Polarity};
use crate::spectral_data::{subsample_indices, ReferenceWhite, SpectralImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Authentic,
    Rejected,
    Undecided,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Authentic => "AUTHENTIC",
            Decision::Rejected => "REJECTED",
            Decision::Undecided => "UNDECIDED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub bands: usize,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthVerdict {
    pub decision: Decision,
    pub metric: MetricKind,
    pub polarity: Polarity,
    pub iterations: Vec<Iteration>,
    pub final_r: f64,
    pub bands_final: usize,
}

#[derive(Clone, Debug)]
pub struct AuthConfig {
    pub metric: MetricKind,
    pub precision: f64,
    pub margin: f64,
    /// `None` selects [`default_schedule`].
    pub schedule: Option<Vec<usize>>,
    pub metric_config: MetricConfig,
}

impl AuthConfig {
    pub fn new(metric: MetricKind, precision: f64, margin: f64) -> Self {
        Self {
            metric,
            precision,
            margin,
            schedule: None,
            metric_config: MetricConfig::default(),
        }
    }

    /// The schedule to run against a reference with `bands` bands, validated.
    pub fn resolved_schedule(&self, bands: usize) -> Result<Vec<usize>> {
        if !self.precision.is_finite() {
            return Err(Error::InvariantViolation(format!(
                "precision must be finite, got {}",
                self.precision
            )));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::InvariantViolation(format!(
                "margin must be finite and nonnegative, got {}",
                self.margin
            )));
        }
        let schedule = match &self.schedule {
            Some(s) => s.clone(),
            None => default_schedule(self.metric, bands),
        };
        validate_schedule(self.metric, &schedule, bands)?;
        Ok(schedule)
    }
}

fn largest_power_of_two_at_most(n: usize) -> usize {
    1 << (usize::BITS - 1 - n.leading_zeros())
}

/// `[16, 64, 256, bands]`, dropping entries not below `bands`. For metrics
/// that divide by the band count as a shift, the last entry is the largest
/// power of two not above `bands`.
pub fn default_schedule(metric: MetricKind, bands: usize) -> Vec<usize> {
    let top = if metric.needs_power_of_two_bands() {
        largest_power_of_two_at_most(bands.max(1))
    } else {
        bands
    };
    let mut s: Vec<usize> = [16, 64, 256].into_iter().filter(|&k| k < top).collect();
    s.push(top);
    s
}

/// Non-empty, strictly ascending, within `1..=bands`, and powers of two for
/// RMS and WRMS.
pub fn validate_schedule(metric: MetricKind, schedule: &[usize], bands: usize) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::ScheduleInvalid("empty schedule".into()));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ScheduleInvalid(format!(
            "{schedule:?} is not strictly ascending"
        )));
    }
    if let Some(&k) = schedule.iter().find(|&&k| k == 0 || k > bands) {
        return Err(Error::ScheduleInvalid(format!(
            "entry {k} outside 1..={bands}"
        )));
    }
    if metric.needs_power_of_two_bands() {
        if let Some(&k) = schedule.iter().find(|k| !k.is_power_of_two()) {
            return Err(Error::ScheduleInvalid(format!(
                "{metric} needs power-of-two band counts, got {k}"
            )));
        }
    }
    Ok(())
}

/// Verdict for one result, or `None` inside the margin band.
pub fn decide(polarity: Polarity, r: f64, precision: f64, margin: f64) -> Option<Decision> {
    let (low, high) = (precision - margin, precision + margin);
    match polarity {
        Polarity::Distance if r <= low => Some(Decision::Authentic),
        Polarity::Distance if r >= high => Some(Decision::Rejected),
        Polarity::Similarity if r >= high => Some(Decision::Authentic),
        Polarity::Similarity if r <= low => Some(Decision::Rejected),
        _ => None,
    }
}

/// Aggregate of `metric` after subsampling both images to `bands` bands.
pub fn evaluate_at(
    reference: &SpectralImage,
    candidate: &SpectralImage,
    metric: MetricKind,
    cfg: &MetricConfig,
    bands: usize,
) -> Result<f64> {
    reference.ensure_compatible(candidate)?;
    let indices = subsample_indices(reference.bands(), bands)?;
    let a = reference.subsample_bands(bands)?;
    let b = candidate.subsample_bands(bands)?;
    let sub_cfg = cfg.select(&indices)?;
    Ok(image_metric(metric, &a, &b, &sub_cfg)?.aggregate)
}

/// Runs the schedule until a result leaves the margin band.
pub fn authenticate_images(
    reference: &SpectralImage,
    candidate: &SpectralImage,
    cfg: &AuthConfig,
) -> Result<AuthVerdict> {
    reference.ensure_compatible(candidate)?;
    let schedule = cfg.resolved_schedule(reference.bands())?;
    let polarity = cfg.metric.polarity();
    let mut iterations = Vec::with_capacity(schedule.len());
    let mut decision = Decision::Undecided;
    for &bands in &schedule {
        let r = evaluate_at(reference, candidate, cfg.metric, &cfg.metric_config, bands)?;
        iterations.push(Iteration { bands, r });
        if let Some(d) = decide(polarity, r, cfg.precision, cfg.margin) {
            decision = d;
            break;
        }
    }
    let last = *iterations.last().expect("schedule is non-empty");
    Ok(AuthVerdict {
        decision,
        metric: cfg.metric,
        polarity,
        iterations,
        final_r: last.r,
        bands_final: last.bands,
    })
}

/// Authenticates `candidate` against the stored reference `ref_id`. A white
/// spectrum registered with the reference is used when the config supplies
/// colour matching functions but no white.
pub fn authenticate(
    store: &ReferenceStore,
    ref_id: &str,
    candidate: &SpectralImage,
    cfg: &AuthConfig,
) -> Result<AuthVerdict> {
    let (reference, white) = store.load(ref_id)?;
    let mut cfg = cfg.clone();
    if let (None, Some(cmf), Some(w)) = (&cfg.metric_config.white, &cfg.metric_config.cmf, white) {
        cfg.metric_config.white = Some(ReferenceWhite::from_spectrum(cmf, &w)?);
    }
    authenticate_images(&reference, candidate, &cfg)
}
