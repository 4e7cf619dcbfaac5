use std::path::{Path, PathBuf};
use std::process::Command;

use msicorr::spectral_data::save_cube;
use msicorr::{SpectralImage, WavelengthAxis};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_msicorr");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run<I, S>(args: I) -> Run
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_cube(dir: &Path, name: &str, img: &SpectralImage) -> PathBuf {
    let p = dir.join(name);
    save_cube(img, &p).unwrap();
    p
}

fn cube_from(width: usize, height: usize, start: u32, step: u32, spectra: &[&[u8]]) -> SpectralImage {
    let axis = WavelengthAxis::new(start, step, spectra[0].len()).unwrap();
    SpectralImage::new(width, height, axis, spectra.concat()).unwrap()
}

#[test]
fn help_lists_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("project", &["--in", "--space", "--sens", "--white", "--flat-white", "--out", "--report", "--workers"]),
        (
            "distance",
            &["--ref", "--cand", "--metric", "--sens", "--white", "--flat-white", "--weights", "--pixels", "--out", "--workers"],
        ),
        (
            "authenticate",
            &["--store", "--ref-id", "--cand", "--metric", "--precision", "--margin", "--schedule", "--weights", "--sens", "--white", "--out", "--workers"],
        ),
        ("cost", &["--metric", "--bands", "--source", "--sqrt-cycles", "--cbrt-cycles", "--custom", "--seed", "--out"]),
        ("fxp-compare", &["--metric", "--trials", "--seed", "--bands", "--identical", "--out"]),
        ("add-reference", &["--store", "--ref-id", "--cube", "--white", "--metadata"]),
        ("list-references", &["--store", "--out"]),
    ];
    for (cmd, flags) in cases {
        let r = run([cmd, &"--help"]);
        assert_eq!(r.code, 0, "{cmd}");
        for flag in *flags {
            assert!(r.stdout.contains(flag), "{cmd} --help lacks {flag}:\n{}", r.stdout);
        }
    }
    let top = run(["--help"]);
    for cmd in ["project", "distance", "authenticate", "cost", "fxp-compare", "add-reference", "list-references"] {
        assert!(top.stdout.contains(cmd), "{cmd}");
    }
}

#[test]
fn project_zero_cube_gives_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let axis = WavelengthAxis::new(380, 10, 41).unwrap();
    let zero = SpectralImage::from_fn(3, 2, axis, |_, _, _| 0).unwrap();
    let cube = write_cube(dir.path(), "zero.msc", &zero);
    let out = dir.path().join("rgb.csv");
    let r = run([
        "project".as_ref(),
        "--in".as_ref(),
        cube.as_os_str(),
        "--space".as_ref(),
        "rgb".as_ref(),
        "--sens".as_ref(),
        core_fixture("camera_rgb_10nm.csv").as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,c1,c2,c3"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|l| l.ends_with(",0,0,0")), "{text}");
}

#[test]
fn project_white_pixel_has_y_100() {
    let dir = tempfile::tempdir().unwrap();
    let white: Vec<u8> = (0..41).map(|b| 200 + (b % 5) as u8 * 10).collect();
    let cube = write_cube(dir.path(), "w.msc", &cube_from(1, 1, 380, 10, &[&white]));
    let out = dir.path().join("xyz.csv");
    let r = run([
        "project".as_ref(),
        "--in".as_ref(),
        cube.as_os_str(),
        "--space".as_ref(),
        "xyz".as_ref(),
        "--sens".as_ref(),
        core_fixture("cie1931_2deg_10nm.csv").as_os_str(),
        "--white".as_ref(),
        fixture("white.csv").as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    let y: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((y - 100.0).abs() < 1e-12, "{y}");
}

fn parse_csv(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn project_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for (space, sens, golden) in [
        ("rgb", "camera_rgb_10nm.csv", "scene_rgb.csv"),
        ("xyz", "cie1931_2deg_10nm.csv", "scene_xyz.csv"),
        ("lab", "cie1931_2deg_10nm.csv", "scene_lab.csv"),
    ] {
        let out = dir.path().join(golden);
        let mut args: Vec<std::ffi::OsString> = vec![
            "project".into(),
            "--in".into(),
            fixture("scene.msc").into(),
            "--space".into(),
            space.into(),
            "--sens".into(),
            core_fixture(sens).into(),
            "--out".into(),
            out.clone().into(),
        ];
        if space != "rgb" {
            args.push("--white".into());
            args.push(fixture("white.csv").into());
        }
        let r = run(&args);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let got = parse_csv(&std::fs::read_to_string(&out).unwrap());
        let want_text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(golden)).unwrap();
        let want = parse_csv(&want_text);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.iter().zip(w) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{space}: {a} vs {b}");
            }
        }
    }
}

/// 2x2 cubes where every pixel pair is the RMS hand example (result 4).
fn rms_pair(dir: &Path) -> (PathBuf, PathBuf) {
    let a: &[u8] = &[10, 20, 30, 40];
    let b: &[u8] = &[14, 16, 34, 36];
    (
        write_cube(dir, "a.msc", &cube_from(2, 2, 400, 100, &[a, a, a, a])),
        write_cube(dir, "b.msc", &cube_from(2, 2, 400, 100, &[b, b, b, b])),
    )
}

#[test]
fn distance_hand_example_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = rms_pair(dir.path());
    let report = dir.path().join("r.json");
    let pixels = dir.path().join("p.csv");
    let r = run([
        "distance".as_ref(),
        "--ref".as_ref(),
        a.as_os_str(),
        "--cand".as_ref(),
        b.as_os_str(),
        "--metric".as_ref(),
        "rms".as_ref(),
        "--pixels".as_ref(),
        pixels.as_os_str(),
        "--out".as_ref(),
        report.as_os_str(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = read_json(&report);
    assert_eq!(v["results"]["aggregate"], 4.0);
    assert_eq!(v["results"]["polarity"], "DISTANCE");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(&pixels).unwrap();
    assert_eq!(csv, "x,y,value\n0,0,4\n1,0,4\n0,1,4\n1,1,4\n");

    let same = run(["distance".as_ref(), "--ref".as_ref(), a.as_os_str(), "--cand".as_ref(), a.as_os_str(), "--metric".as_ref(), "rms".as_ref()]);
    assert_eq!(same.code, 0);
    assert_eq!(same.stdout.trim(), "rms aggregate 0");
}

#[test]
fn distance_missing_weights() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = rms_pair(dir.path());
    let r = run(["distance".as_ref(), "--ref".as_ref(), a.as_os_str(), "--cand".as_ref(), b.as_os_str(), "--metric".as_ref(), "wrms".as_ref()]);
    assert_eq!(r.code, 2);
    assert_eq!(r.stderr.trim(), "MissingConfig: --weights");
    assert!(r.stdout.is_empty());
}

#[test]
fn distance_bad_metric_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = rms_pair(dir.path());
    let r = run(["distance".as_ref(), "--ref".as_ref(), a.as_os_str(), "--cand".as_ref(), a.as_os_str(), "--metric".as_ref(), "sam".as_ref()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.starts_with("UnknownAlgorithm: "), "{}", r.stderr);
    let other = write_cube(dir.path(), "c.msc", &cube_from(1, 1, 400, 100, &[&[1, 2, 3, 4]]));
    let r = run(["distance".as_ref(), "--ref".as_ref(), a.as_os_str(), "--cand".as_ref(), other.as_os_str(), "--metric".as_ref(), "rms".as_ref()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.starts_with("DimensionMismatch: "), "{}", r.stderr);
}

#[test]
fn distance_with_weights_and_colour_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let spectra: Vec<Vec<u8>> = (0..4).map(|p| (0..41).map(|b| (20 + p * 30 + b * 3) as u8).collect()).collect();
    let refs: Vec<&[u8]> = spectra.iter().map(Vec::as_slice).collect();
    let a = write_cube(dir.path(), "a.msc", &cube_from(2, 2, 380, 10, &refs));
    let shifted: Vec<Vec<u8>> = spectra.iter().map(|s| s.iter().map(|v| v + 5).collect()).collect();
    let refs: Vec<&[u8]> = shifted.iter().map(Vec::as_slice).collect();
    let b = write_cube(dir.path(), "b.msc", &cube_from(2, 2, 380, 10, &refs));
    let weights = dir.path().join("w.csv");
    let mut text = String::from("wavelength,weight\n");
    for i in 0..41 {
        text.push_str(&format!("{},{}\n", 380 + 10 * i, 1 + i % 3));
    }
    std::fs::write(&weights, text).unwrap();
    let base = |metric: &str| -> Vec<std::ffi::OsString> {
        vec!["distance".into(), "--ref".into(), a.clone().into(), "--cand".into(), b.clone().into(), "--metric".into(), metric.into()]
    };
    let mut args = base("wrms");
    args.extend(["--weights".into(), weights.into()]);
    let r = run(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    // every band differs by exactly 5 and weights sum to one
    let v: f64 = r.stdout.trim().strip_prefix("wrms aggregate ").unwrap().parse().unwrap();
    assert!((v - 5.0).abs() < 1e-12, "{v}");

    let mut args = base("de-rgb");
    args.extend(["--sens".into(), core_fixture("camera_rgb_10nm.csv").into()]);
    assert_eq!(run(&args).code, 0);

    for metric in ["de-lab", "mv"] {
        let mut args = base(metric);
        args.extend(["--sens".into(), core_fixture("cie1931_2deg_10nm.csv").into()]);
        let r = run(&args);
        assert_eq!(r.code, 2);
        assert!(r.stderr.starts_with("MissingConfig: --white"), "{}", r.stderr);
        args.push("--flat-white".into());
        let r = run(&args);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
}

fn base_spectra(bands: usize) -> SpectralImage {
    let axis = WavelengthAxis::new(400, 1, bands).unwrap();
    SpectralImage::from_fn(5, 4, axis, |x, y, b| (30 + x * 20 + y * 9 + b) as u8).unwrap()
}

struct AuthFixture {
    dir: tempfile::TempDir,
    store: PathBuf,
}

impl AuthFixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let cube = write_cube(dir.path(), "ref.msc", &base_spectra(64));
        let store = dir.path().join("store");
        let r = run(["add-reference".as_ref(), "--store".as_ref(), store.as_os_str(), "--ref-id".as_ref(), "ref".as_ref(), "--cube".as_ref(), cube.as_os_str()]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        Self { dir, store }
    }

    fn candidate(&self, name: &str, f: impl Fn(usize, u8) -> u8) -> PathBuf {
        let base = base_spectra(64);
        let samples = base.samples().iter().enumerate().map(|(i, &v)| f(i % 64, v)).collect();
        let img = SpectralImage::new(5, 4, base.axis().clone(), samples).unwrap();
        write_cube(self.dir.path(), name, &img)
    }

    fn authenticate(&self, cand: &Path, extra: &[&str]) -> (Run, Value) {
        let out = self.dir.path().join("verdict.json");
        let mut args: Vec<std::ffi::OsString> = vec![
            "authenticate".into(),
            "--store".into(),
            self.store.clone().into(),
            "--ref-id".into(),
            "ref".into(),
            "--cand".into(),
            cand.into(),
            "--out".into(),
            out.clone().into(),
        ];
        args.extend(extra.iter().map(Into::into));
        let r = run(&args);
        let v = if r.code == 2 { Value::Null } else { read_json(&out) };
        (r, v)
    }
}

#[test]
fn authenticate_exit_codes() {
    let fx = AuthFixture::new();
    let same = fx.candidate("same.msc", |_, v| v);
    let (r, v) = fx.authenticate(&same, &["--metric", "rms", "--precision", "1.0", "--margin", "0.1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(v["results"]["decision"], "AUTHENTIC");
    assert_eq!(v["results"]["iterations"].as_array().unwrap().len(), 1);

    let inverted = fx.candidate("inv.msc", |_, v| 255 - v);
    let (r, v) = fx.authenticate(&inverted, &["--metric", "rms", "--precision", "5", "--margin", "1"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert_eq!(v["results"]["decision"], "REJECTED");

    let straddle = fx.candidate("straddle.msc", |b, v| v + u8::from(b % 4 == 0));
    let (r, v) = fx.authenticate(&straddle, &["--metric", "rms", "--precision", "1", "--margin", "0.2", "--schedule", "16,64"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let iters = v["results"]["iterations"].as_array().unwrap();
    assert_eq!(iters.len(), 2);
    assert_eq!(iters[0]["r"], 1.0);
    assert_eq!(iters[1]["r"], 0.5);

    let (r, v) = fx.authenticate(&straddle, &["--metric", "rms", "--precision", "0.75", "--margin", "0.3"]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert_eq!(v["results"]["decision"], "UNDECIDED");
    assert_eq!(v["parameters"]["schedule"], serde_json::json!([16, 64]));

    let (r, _) = fx.authenticate(&same, &["--metric", "rms", "--precision", "1", "--schedule", "16,48"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.starts_with("ScheduleInvalid: "), "{}", r.stderr);

    let (r, _) = fx.authenticate(&same, &["--metric", "wrms", "--precision", "1", "--schedule", "24"]);
    assert!(r.stderr.starts_with("ScheduleInvalid: "), "{}", r.stderr);
}

#[test]
fn references_are_listed_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let empty = run(["list-references".as_ref(), "--store".as_ref(), store.as_os_str()]);
    assert_eq!((empty.code, empty.stdout.as_str()), (0, ""));
    let cube = write_cube(dir.path(), "c.msc", &base_spectra(8));
    for id in ["beta", "alpha"] {
        let r = run(["add-reference".as_ref(), "--store".as_ref(), store.as_os_str(), "--ref-id".as_ref(), id.as_ref(), "--cube".as_ref(), cube.as_os_str(), "--metadata".as_ref(), "lab sample".as_ref()]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    let dup = run(["add-reference".as_ref(), "--store".as_ref(), store.as_os_str(), "--ref-id".as_ref(), "beta".as_ref(), "--cube".as_ref(), cube.as_os_str()]);
    assert_eq!(dup.code, 2);
    assert!(dup.stderr.starts_with("DuplicateId: "));
    let out = dir.path().join("list.json");
    let r = run(["list-references".as_ref(), "--store".as_ref(), store.as_os_str(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(r.stdout, "alpha\t5x4x8\tlab sample\nbeta\t5x4x8\tlab sample\n");
    assert_eq!(read_json(&out)["results"]["references"][1]["id"], "beta");
}

#[test]
fn cost_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cost.json");
    let r = run(["cost".as_ref(), "--metric".as_ref(), "de-rgb".as_ref(), "--bands".as_ref(), "400".as_ref(), "--source".as_ref(), "paper".as_ref(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = read_json(&out);
    let proj = &v["results"]["cost"]["profile"]["projection_ops"]["stages"];
    assert_eq!(proj[0]["op"], "MUL");
    assert_eq!(proj[0]["count"], 1200);
    assert_eq!(proj[1]["op"], "ADD");
    assert_eq!(proj[1]["count"], 1200);
    assert_eq!(v["results"]["cost"]["profile"]["source"], "PAPER_TABLE3");
    assert_eq!(v["results"]["paper_reference"]["processing_module.logic_cells"], "364 logic cells");
    assert_eq!(v["results"]["paper_reference"]["system.logic_cells"], "1237 of 6144 (20%)");
    assert_eq!(v["results"]["cost"]["adaptability"]["published"][0], "RMS");

    let r = run(["cost".as_ref(), "--metric".as_ref(), "rms".as_ref(), "--bands".as_ref(), "4".as_ref(), "--source".as_ref(), "measured".as_ref(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let totals = &read_json(&out)["results"]["cost"]["profile"]["totals"];
    assert_eq!(totals, &serde_json::json!({"ADD": 3, "SUB": 4, "MUL": 4, "SHIFT_DIV": 1, "SQRT": 1}));

    let r = run(["cost".as_ref(), "--custom".as_ref(), "ADD:400:serial".as_ref(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = read_json(&out);
    assert_eq!(v["results"]["cost"]["cycles"], 400);
    assert_eq!(v["results"]["cost"]["latency_us"], 8.0);

    let r = run(["cost", "--metric", "rms", "--bands", "401"]);
    assert_eq!(r.code, 2);
    let r = run(["cost", "--custom", "ADD:four:serial"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.starts_with("UsageError: "));
}

#[test]
fn fxp_compare_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fxp.json");
    let r = run(["fxp-compare".as_ref(), "--metric".as_ref(), "rms".as_ref(), "--trials".as_ref(), "1".as_ref(), "--identical".as_ref(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = read_json(&out);
    assert_eq!(v["results"]["max_relative_error"], 0.0);
    assert_eq!(v["results"]["mean_relative_error"], 0.0);

    for metric in ["rms", "de-rgb"] {
        let r = run(["fxp-compare", "--metric", metric, "--trials", "10000", "--seed", "42"]);
        assert_eq!(r.code, 0, "{metric}: {}{}", r.stdout, r.stderr);
    }
    let r = run(["fxp-compare", "--metric", "gfc"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("no fixed-point variant"), "{}", r.stderr);
    let r = run(["fxp-compare", "--metric", "rms", "--bands", "48"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.starts_with("NotPowerOfTwo: "), "{}", r.stderr);
}

fn strip_volatile(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("argv");
    for input in v["inputs"].as_array_mut().unwrap() {
        input.as_object_mut().unwrap().remove("path");
    }
    v
}

#[test]
fn distance_report_schema_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = rms_pair(dir.path());
    let out = dir.path().join("r.json");
    let r = run(["distance".as_ref(), "--ref".as_ref(), a.as_os_str(), "--cand".as_ref(), b.as_os_str(), "--metric".as_ref(), "gfc".as_ref(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let got = strip_volatile(read_json(&out));
    let golden: Value = serde_json::from_str(include_str!("golden/distance_report.json")).unwrap();
    assert_eq!(got, golden, "{}", serde_json::to_string_pretty(&got).unwrap());
}

#[test]
fn reports_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let axis = WavelengthAxis::new(400, 2, 32).unwrap();
    let mut state = 99u32;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 17;
        state ^= state << 5;
        state as u8
    };
    let a = write_cube(dir.path(), "a.msc", &SpectralImage::from_fn(23, 17, axis.clone(), |_, _, _| next()).unwrap());
    let b = write_cube(dir.path(), "b.msc", &SpectralImage::from_fn(23, 17, axis, |_, _, _| next()).unwrap());
    let reports: Vec<Value> = ["1", "2", "8"]
        .iter()
        .map(|w| {
            let out = dir.path().join(format!("r{w}.json"));
            let r = run(["distance".as_ref(), "--ref".as_ref(), a.as_os_str(), "--cand".as_ref(), b.as_os_str(), "--metric".as_ref(), "gfc".as_ref(), "--workers".as_ref(), w.as_ref(), "--out".as_ref(), out.as_os_str()]);
            assert_eq!(r.code, 0, "{}", r.stderr);
            strip_volatile(read_json(&out))
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}
