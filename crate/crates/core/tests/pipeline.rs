use msicorr::metrics::MetricKind;
use msicorr::pipeline::{authenticate, evaluate_at, AuthConfig, Decision, ReferenceStore};
use msicorr::reduce::with_workers;
use msicorr::spectral_data::save_cube;
use msicorr::{SpectralImage, WavelengthAxis};

fn base(bands: usize) -> SpectralImage {
    let axis = WavelengthAxis::new(400, 1, bands).unwrap();
    SpectralImage::from_fn(5, 4, axis, |x, y, b| (30 + x * 20 + y * 9 + b) as u8).unwrap()
}

/// Same as `base(64)` plus 1 on every band whose index is a multiple of 4.
/// At 16 bands every kept band differs (R = 1); at 64 a quarter do (R = 0.5).
fn straddling_candidate() -> SpectralImage {
    let axis = WavelengthAxis::new(400, 1, 64).unwrap();
    SpectralImage::from_fn(5, 4, axis, |x, y, b| {
        (30 + x * 20 + y * 9 + b + usize::from(b % 4 == 0)) as u8
    })
    .unwrap()
}

fn store_with(img: &SpectralImage) -> (tempfile::TempDir, ReferenceStore) {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("ref.msc");
    save_cube(img, &cube).unwrap();
    let store = ReferenceStore::open(dir.path().join("store")).unwrap();
    store.add_reference("ref", &cube, None, "fixture").unwrap();
    (dir, store)
}

#[test]
fn margin_straddling_pair_escalates_once() {
    let reference = base(64);
    let candidate = straddling_candidate();
    let (_dir, store) = store_with(&reference);
    let mut cfg = AuthConfig::new(MetricKind::Rms, 1.0, 0.2);
    cfg.schedule = Some(vec![16, 64]);
    let v = authenticate(&store, "ref", &candidate, &cfg).unwrap();
    assert_eq!(v.decision, Decision::Authentic);
    let trace: Vec<(usize, f64)> = v.iterations.iter().map(|i| (i.bands, i.r)).collect();
    assert_eq!(trace, [(16, 1.0), (64, 0.5)]);
    assert_eq!((v.bands_final, v.final_r), (64, 0.5));
}

#[test]
fn final_result_replays_exactly() {
    let reference = base(64);
    let candidate = straddling_candidate();
    let (_dir, store) = store_with(&reference);
    let cfg = AuthConfig::new(MetricKind::Gfc, 0.9999, 0.00001);
    let v = authenticate(&store, "ref", &candidate, &cfg).unwrap();
    let replay = evaluate_at(&reference, &candidate, cfg.metric, &cfg.metric_config, v.bands_final).unwrap();
    assert_eq!(replay.to_bits(), v.final_r.to_bits());
    assert!(v.iterations.len() <= 2);
    assert!(v.iterations.windows(2).all(|w| w[0].bands < w[1].bands));
}

#[test]
fn verdicts_do_not_depend_on_worker_count() {
    let reference = base(64);
    let candidate = straddling_candidate();
    let (_dir, store) = store_with(&reference);
    let cfg = AuthConfig::new(MetricKind::Rms, 0.75, 0.3);
    let runs: Vec<_> = [1, 2, 8]
        .iter()
        .map(|&n| with_workers(Some(n), || authenticate(&store, "ref", &candidate, &cfg).unwrap()))
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    assert_eq!(runs[0].decision, Decision::Undecided);
}

#[test]
fn mismatched_candidate_and_unknown_id() {
    let reference = base(64);
    let (_dir, store) = store_with(&reference);
    let cfg = AuthConfig::new(MetricKind::Rms, 1.0, 0.1);
    let err = authenticate(&store, "ref", &base(32), &cfg).unwrap_err();
    assert_eq!(err.name(), "AxisMismatch");
    let err = authenticate(&store, "other", &reference, &cfg).unwrap_err();
    assert_eq!(err.name(), "UnknownReference");
}

#[test]
fn non_power_of_two_schedule_rejected_for_rms() {
    let reference = base(64);
    let (_dir, store) = store_with(&reference);
    let mut cfg = AuthConfig::new(MetricKind::Rms, 1.0, 0.1);
    cfg.schedule = Some(vec![16, 40, 64]);
    assert_eq!(
        authenticate(&store, "ref", &reference, &cfg).unwrap_err().name(),
        "ScheduleInvalid"
    );
}
