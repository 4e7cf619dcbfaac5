//! Loading of sensitivities, whites and weights from command-line paths.

use std::path::{Path, PathBuf};

use msicorr::metrics::{MetricConfig, MetricKind, WeightVector};
use msicorr::pipeline::WHITE_COLUMN;
use msicorr::spectral_data::{load_sensitivities, load_spectrum_csv};
use msicorr::{Error, ReferenceWhite, SensitivityKind, SensitivitySet, WavelengthAxis};

use crate::report::RunReport;

pub const WEIGHT_COLUMN: &str = "weight";

#[derive(Debug, Default, Clone, clap::Args)]
pub struct ConfigArgs {
    /// Sensitivity table: camera RGB for de-rgb, colour matching functions for de-lab and mv
    #[arg(long, value_name = "CSV")]
    pub sens: Option<PathBuf>,
    /// White spectrum CSV (columns wavelength,white)
    #[arg(long, value_name = "CSV")]
    pub white: Option<PathBuf>,
    /// Use a flat 255 white when no white spectrum is given
    #[arg(long)]
    pub flat_white: bool,
    /// WRMS weights CSV (columns wavelength,weight); normalised to unit sum
    #[arg(long, value_name = "CSV")]
    pub weights: Option<PathBuf>,
}

pub fn sensitivities(
    path: &Path,
    axis: &WavelengthAxis,
    kind: SensitivityKind,
    report: &mut RunReport,
) -> anyhow::Result<SensitivitySet> {
    report.input("sens", path)?;
    Ok(load_sensitivities(path, axis, kind)?)
}

pub fn white_spectrum(path: &Path, axis: &WavelengthAxis, report: &mut RunReport) -> anyhow::Result<Vec<f64>> {
    report.input("white", path)?;
    Ok(load_spectrum_csv(path, WHITE_COLUMN, axis)?)
}

/// White for Lab-based metrics: the given spectrum, the flat white when
/// allowed, or `None` so the store's white (if any) can apply.
pub fn reference_white(
    args: &ConfigArgs,
    cmf: &SensitivitySet,
    report: &mut RunReport,
) -> anyhow::Result<Option<ReferenceWhite>> {
    if let Some(path) = &args.white {
        let w = white_spectrum(path, cmf.axis(), report)?;
        return Ok(Some(ReferenceWhite::from_spectrum(cmf, &w)?));
    }
    if args.flat_white {
        return Ok(Some(ReferenceWhite::flat(cmf)?));
    }
    Ok(None)
}

/// Builds the metric configuration the chosen metric needs. Missing
/// sensitivities or weights are reported by flag name.
pub fn metric_config(
    metric: MetricKind,
    args: &ConfigArgs,
    axis: &WavelengthAxis,
    white_required: bool,
    report: &mut RunReport,
) -> anyhow::Result<MetricConfig> {
    let mut cfg = MetricConfig::default();
    let need_sens = |what: &str| -> anyhow::Result<&PathBuf> {
        args.sens
            .as_ref()
            .ok_or_else(|| Error::MissingConfig(what.to_string()).into())
    };
    match metric {
        MetricKind::Rms | MetricKind::Gfc => {}
        MetricKind::Wrms => {
            let path = args
                .weights
                .as_ref()
                .ok_or_else(|| Error::MissingConfig("--weights".into()))?;
            report.input("weights", path)?;
            let raw = load_spectrum_csv(path, WEIGHT_COLUMN, axis)?;
            cfg.weights = Some(WeightVector::normalized(&raw)?);
        }
        MetricKind::DeRgb => {
            let path = need_sens("--sens")?;
            cfg.rgb_sensitivities = Some(sensitivities(path, axis, SensitivityKind::CameraRgb, report)?);
        }
        MetricKind::DeLab | MetricKind::Mv => {
            let path = need_sens("--sens")?;
            let cmf = sensitivities(path, axis, SensitivityKind::CmfXyz, report)?;
            cfg.white = reference_white(args, &cmf, report)?;
            if cfg.white.is_none() && white_required {
                return Err(Error::MissingConfig("--white (or --flat-white)".into()).into());
            }
            cfg.cmf = Some(cmf);
        }
    }
    Ok(cfg)
}
