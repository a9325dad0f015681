use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fractal(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fractal"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn synth_prints_theoretical_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let o = fractal(
        &[
            "synth",
            "weierstrass",
            "--a",
            "0.5",
            "--b",
            "3",
            "-o",
            "w.wav",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert!((field(&stdout(&o), "theoretical_dimension") - 1.3691).abs() < 1e-4);
    assert!(dir.path().join("w.wav").exists());

    let bad = fractal(
        &["synth", "weierstrass", "--a", "0.2", "--b", "3"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
}

#[test]
fn synth_sine_default_is_two_seconds() {
    let dir = tempfile::tempdir().unwrap();
    let o = fractal(
        &["synth", "sine", "--freq", "440", "-o", "s.wav"],
        dir.path(),
    );
    assert!(o.status.success());
    let bytes = fs::read(dir.path().join("s.wav")).unwrap();
    assert_eq!(bytes.len(), 44 + 2 * 88200);
}

#[test]
fn analyze_sine_and_noise() {
    let dir = tempfile::tempdir().unwrap();
    fractal(&["synth", "sine", "-o", "sine.wav"], dir.path());
    fractal(&["synth", "noise", "-o", "noise.wav"], dir.path());

    let sine = fractal(&["analyze", "sine.wav"], dir.path());
    assert!(sine.status.success());
    let out = stdout(&sine);
    assert!(out.contains("classification=LeastFractal"), "{out}");
    assert!(field(&out, "summary_max") <= 1.03);

    let noise = fractal(&["analyze", "noise.wav", "--plotdata", "n.txt"], dir.path());
    assert!(stdout(&noise).contains("classification=HighlyFractal"));
    let plot = fs::read_to_string(dir.path().join("n.txt")).unwrap();
    assert!(plot.starts_with("# noise\n"));

    let again = fractal(&["analyze", "sine.wav"], dir.path());
    assert_eq!(again.stdout, sine.stdout);
}

#[test]
fn analyze_error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let missing = fractal(&["analyze", "missing.wav"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.wav"));

    fractal(
        &["synth", "sine", "--amp", "0", "-o", "quiet.wav"],
        dir.path(),
    );
    let silent = fractal(&["analyze", "quiet.wav"], dir.path());
    assert_eq!(silent.status.code(), Some(1));

    fractal(&["synth", "sine", "-o", "s.wav"], dir.path());
    let bad_hop = fractal(
        &["analyze", "s.wav", "--window", "1", "--hop", "2"],
        dir.path(),
    );
    assert_eq!(bad_hop.status.code(), Some(2));
}

#[test]
fn boxdim_generators() {
    let dir = tempfile::tempdir().unwrap();
    let rabbit = stdout(&fractal(&["boxdim", "rabbit"], dir.path()));
    assert!(
        (field(&rabbit, "dimension") - 1.39).abs() <= 0.04,
        "{rabbit}"
    );
    let koch = stdout(&fractal(&["boxdim", "koch", "--level", "6"], dir.path()));
    assert!((field(&koch, "dimension") - 1.2619).abs() <= 0.05);
    let circle = stdout(&fractal(&["boxdim", "circle"], dir.path()));
    assert!((field(&circle, "dimension") - 1.0).abs() <= 0.05);

    let unknown = fractal(&["boxdim", "pentagon"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn boxdim_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let pts: String = (0..=1000)
        .map(|i| format!("{},{}\n", i as f64 / 1000.0, i as f64 / 1000.0))
        .collect();
    fs::write(dir.path().join("diag.txt"), format!("# diagonal\n{pts}")).unwrap();
    let o = fractal(
        &["boxdim", "--points", "diag.txt", "--plotdata", "p.txt"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!((field(&stdout(&o), "dimension") - 1.0).abs() < 0.05);
    let plot = fs::read_to_string(dir.path().join("p.txt")).unwrap();
    assert_eq!(plot.lines().filter(|l| !l.starts_with('#')).count(), 12);

    fs::write(dir.path().join("bad.txt"), "1,2\nthree,4\n").unwrap();
    let bad = fractal(&["boxdim", "--points", "bad.txt"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn validate_passes_and_lists_signal_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = fractal(&["validate"], dir.path());
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    for name in [
        "sine",
        "square",
        "triangle",
        "weierstrass",
        "noise",
        "ramp",
        "koch",
        "rabbit",
    ] {
        assert!(
            out.lines()
                .any(|l| l.starts_with("PASS") && l.contains(name)),
            "{name}: {out}"
        );
    }
    assert!(!out.contains("FAIL "));

    let reduced = fractal(&["validate", "--k-max", "4"], dir.path());
    let text = stdout(&reduced);
    assert!(text.starts_with("# k_max=4\n"));
    assert!(!text.lines().any(|l| l.starts_with("FAIL ")), "{text}");
    assert!(reduced.status.success());
}

fn corpus_fixture(dir: &Path) {
    fractal(&["synth", "sine", "--duration", "4", "-o", "sine.wav"], dir);
    fractal(
        &["synth", "noise", "--duration", "4", "-o", "noise.wav"],
        dir,
    );
    fractal(
        &["synth", "weierstrass", "--duration", "4", "-o", "w.wav"],
        dir,
    );
    fs::write(
        dir.join("manifest.tsv"),
        "sine.wav\ttitle=Sine\torigin=lab\nnoise.wav\ttitle=Noise\torigin=lab\nw.wav\ttitle=Weier\torigin=math\n",
    )
    .unwrap();
}

#[test]
fn corpus_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    corpus_fixture(dir.path());
    let one = fractal(
        &[
            "corpus",
            "manifest.tsv",
            "-o",
            "r1",
            "--jobs",
            "1",
            "--aggregate",
            "origin",
        ],
        dir.path(),
    );
    let eight = fractal(
        &[
            "corpus",
            "manifest.tsv",
            "-o",
            "r8",
            "--jobs",
            "8",
            "--aggregate",
            "origin",
        ],
        dir.path(),
    );
    assert!(one.status.success() && eight.status.success());
    assert_eq!(one.stdout, eight.stdout);
    for name in ["report.csv", "report.json", "aggregate_origin.csv"] {
        let a = fs::read(dir.path().join("r1").join(name)).unwrap();
        let b = fs::read(dir.path().join("r8").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let csv = fs::read_to_string(dir.path().join("r1/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().contains("LeastFractal"));
    let agg = fs::read_to_string(dir.path().join("r1/aggregate_origin.csv")).unwrap();
    assert!(agg.contains("lab,") && agg.contains(",Noise,2"));
}

#[test]
fn corpus_isolates_track_failures() {
    let dir = tempfile::tempdir().unwrap();
    corpus_fixture(dir.path());
    fs::write(
        dir.path().join("m2.tsv"),
        "sine.wav\nabsent.wav\nnoise.wav\n",
    )
    .unwrap();
    let o = fractal(&["corpus", "m2.tsv", "-o", "r", "--jobs", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent"));
    let csv = fs::read_to_string(dir.path().join("r/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let missing = fractal(&["corpus", "nope.tsv"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}
