use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forward-ec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(&o));
    o
}

/// Header and data rows of a CSV file, skipping `#` lines.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn meta(path: &Path, key: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    let prefix = format!("# {key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in {}", path.display()))
        .to_string()
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn out_arg(dir: &TempDir, sub: &str) -> (PathBuf, String) {
    let p = dir.path().join(sub);
    let s = p.display().to_string();
    (p, s)
}

fn sample_args<'a>(out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "sample",
        "--seed",
        seed,
        "--out",
        out,
        "--set",
        "target.dim=2",
        "--set",
        "sampler.preset=forward-ref",
        "--set",
        "run.events=1000",
        "--set",
        "run.delta=0.5",
    ]
}

#[test]
fn sample_writes_segments_and_floor_time_over_delta_samples() {
    let dir = TempDir::new().unwrap();
    let (out, s) = out_arg(&dir, "a");
    let o = ok(run(&sample_args(&s, "4")));
    let listed: Vec<&str> = std::str::from_utf8(&o.stdout).unwrap().lines().collect();
    assert_eq!(listed.len(), 2);

    let (seg_h, segs) = table(&out.join("segments.csv"));
    assert_eq!(seg_h[..4], ["s", "duration", "x_1", "x_2"]);
    // started from the origin
    assert_eq!(segs[0][2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(segs[0][3].parse::<f64>().unwrap(), 0.0);

    let samples = out.join("samples.csv");
    let total_time: f64 = meta(&samples, "total_time").parse().unwrap();
    let (_, rows) = table(&samples);
    assert_eq!(rows.len(), (total_time / 0.5).floor() as usize);
    assert_eq!(meta(&samples, "events"), "1000");
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let (a, sa) = out_arg(&dir, "a");
    let (b, sb) = out_arg(&dir, "b");
    let (c, sc) = out_arg(&dir, "c");
    ok(run(&sample_args(&sa, "11")));
    ok(run(&sample_args(&sb, "11")));
    ok(run(&sample_args(&sc, "12")));
    for f in ["samples.csv", "segments.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert_ne!(fs::read(a.join("samples.csv")).unwrap(), fs::read(c.join("samples.csv")).unwrap());
}

#[test]
fn replicated_runs_do_not_depend_on_the_worker_count() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "3"] {
        let (out, s) = out_arg(&dir, workers);
        ok(run(&[
            "bench", "--seed", "5", "--replicas", "4", "--workers", workers, "--out", &s, "--set", "target.dim=3",
            "--set", "run.events=5000", "--set", "run.delta=1",
        ]));
        files.push(out);
    }
    for f in ["summary.csv", "replicas.csv", "acf_forward-ref_U.csv"] {
        assert_eq!(fs::read(files[0].join(f)).unwrap(), fs::read(files[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_preset_lists_the_valid_ones() {
    let dir = TempDir::new().unwrap();
    let (_, s) = out_arg(&dir, "a");
    let o = run(&["sample", "--out", &s, "--set", "sampler.preset=forward"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("sampler.preset"), "{e}");
    for p in ["forward-no-ref", "forward-all-ref", "forward-ref", "bps-full-ref", "zigzag"] {
        assert!(e.contains(p), "{e}");
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let (_, s) = out_arg(&dir, "a");
    let cases: &[(&[&str], &str)] = &[
        (&["bench", "--replicas", "0"], "run.replicas"),
        (&["sample", "--set", "run.delta=0"], "run.delta"),
        (&["sample", "--set", "run.colour=red"], "run.colour"),
        (&["scaling", "--set", "run.dims=10,20"], "run.dims"),
        (&["scaling", "--set", "run.schemes=forward-ref,bps"], "run.schemes"),
        (&["mixture", "--set", "target.kind=gaussian"], "target.kind"),
        (&["bench", "--set", "run.observables=nll"], "run.observables"),
        (&["sample", "--set", "target.kind=logistic", "--set", "target.path=/nonexistent"], "target.path"),
    ];
    for (args, field) in cases {
        let mut a = args.to_vec();
        a.extend(["--out", &s]);
        let o = run(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
    let o = run(&["scaling", "--out", &s, "--set", "run.schemes=bps"]);
    assert!(stderr(&o).contains("bps-full-ref"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["sample", "--out", blocker.to_str().unwrap(), "--set", "run.events=10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(
        &cfg,
        "# small run\ntarget.kind = anisotropic\ntarget.dim = 4\nsampler.preset = bps-full-ref\nsampler.period = 2\n\
         run.events = 500\nrun.delta = 0.25\nrun.seed = 1\n",
    )
    .unwrap();
    let (out, s) = out_arg(&dir, "a");
    let o = ok(run(&["sample", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", &s, "--print-config"]));
    let printed = stderr(&o);
    assert!(printed.contains("run.seed = 8"), "{printed}");
    assert!(printed.contains("sampler.preset = bps-full-ref"));
    let samples = out.join("samples.csv");
    assert_eq!(meta(&samples, "seed"), "8");
    assert_eq!(meta(&samples, "scheme"), "bps-full-ref");
    let (h, _) = table(&samples);
    assert_eq!(h.len(), 2 + 4);

    // the printed configuration reproduces the run
    let again = dir.path().join("again.cfg");
    fs::write(&again, &printed).unwrap();
    let (out2, s2) = out_arg(&dir, "b");
    ok(run(&["sample", "--config", again.to_str().unwrap(), "--out", &s2]));
    assert_eq!(fs::read(&samples).unwrap(), fs::read(out2.join("samples.csv")).unwrap());
}

#[test]
fn bench_reports_about_55_events_per_sample_at_d400() {
    let dir = TempDir::new().unwrap();
    let (out, s) = out_arg(&dir, "a");
    ok(run(&[
        "bench", "--replicas", "2", "--out", &s, "--set", "target.kind=anisotropic", "--set", "target.dim=400",
        "--set", "run.schemes=forward-ref,bps-full-ref", "--set", "run.events=30000", "--set",
        "run.observables=U",
    ]));
    let (h, rows) = table(&out.join("summary.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let nd: f64 = r[col(&h, "n_delta")].parse().unwrap();
        assert!((45.0..=65.0).contains(&nd), "{}: n_delta {nd}", r[0]);
    }
    let (_, reps) = table(&out.join("replicas.csv"));
    assert_eq!(reps.len(), 2 * 2);
}

#[test]
fn bench_on_the_credit_data_reports_nll_ess_per_event() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/german_credit_numeric.txt");
    let dir = TempDir::new().unwrap();
    let (out, s) = out_arg(&dir, "a");
    ok(run(&[
        "bench",
        "--replicas",
        "2",
        "--out",
        &s,
        "--set",
        "target.kind=logistic",
        "--set",
        &format!("target.path={}", data.display()),
        "--set",
        "sampler.preset=forward-no-ref",
        "--set",
        "run.events=20000",
        "--set",
        "run.observables=nll,x",
    ]));
    let (h, rows) = table(&out.join("summary.csv"));
    let nll = rows.iter().find(|r| r[col(&h, "observable")] == "nll").expect("nll row");
    let e: f64 = nll[col(&h, "ess_per_event")].parse().unwrap();
    assert!(e > 0.0 && e < 1.0, "{e}");
    assert_eq!(meta(&out.join("summary.csv"), "delta"), "1.0000000000000001e-1");
}

#[test]
fn synthetic_scaling_recovers_the_planted_exponent() {
    let dir = TempDir::new().unwrap();
    let (out, s) = out_arg(&dir, "a");
    ok(run(&[
        "scaling", "--out", &s, "--set", "run.dims=16,64,256", "--set", "run.synthetic_amplitude=3.5", "--set",
        "run.synthetic_z=0.37", "--set", "run.schemes=forward-ref,bps-full-ref",
    ]));
    let (h, rows) = table(&out.join("scaling_summary.csv"));
    assert_eq!(rows.len(), 2 * 2);
    for r in &rows {
        let z: f64 = r[col(&h, "z")].parse().unwrap();
        let a: f64 = r[col(&h, "A")].parse().unwrap();
        assert!((z - 0.37).abs() < 1e-12, "z = {z}");
        assert!((a / 3.5 - 1.0).abs() < 1e-12, "A = {a}");
    }
    let f = out.join("scaling_forward-ref_x.csv");
    assert!((meta(&f, "z").parse::<f64>().unwrap() - 0.37).abs() < 1e-12);
    let (_, pts) = table(&out.join("scaling_points.csv"));
    assert_eq!(pts.len(), 2 * 3 * 2);
}

#[test]
fn scaling_runs_report_a_fitted_exponent_with_an_error() {
    let dir = TempDir::new().unwrap();
    let (out, s) = out_arg(&dir, "a");
    ok(run(&[
        "scaling", "--replicas", "3", "--out", &s, "--set", "target.kind=anisotropic", "--set", "run.dims=4,8,16",
        "--set", "sampler.preset=forward-all-ref", "--set", "run.delta=5", "--set", "run.events=40000", "--set",
        "run.observables=x",
    ]));
    let (h, rows) = table(&out.join("scaling_summary.csv"));
    assert_eq!(rows.len(), 1);
    let z: f64 = rows[0][col(&h, "z")].parse().unwrap();
    let zerr: f64 = rows[0][col(&h, "z_err")].parse().unwrap();
    assert!(z.is_finite() && zerr.is_finite() && zerr >= 0.0);
}

#[test]
fn mixture_occupancy_rows_lie_on_the_simplex() {
    let dir = TempDir::new().unwrap();
    let (out, s) = out_arg(&dir, "a");
    ok(run(&[
        "mixture", "--replicas", "3", "--out", &s, "--set", "target.kind=mixture", "--set", "target.dim=8",
        "--set", "sampler.preset=forward-all-ref", "--set", "run.events=20000", "--set", "run.bins=30",
    ]));
    let occ = out.join("occupancy_forward-all-ref.csv");
    let (h, rows) = table(&occ);
    assert_eq!(h, ["replica", "p_1", "p_2", "p_3", "p_4", "p_5"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let sum: f64 = r[1..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12, "{sum}");
    }
    let hist = out.join("histogram_forward-all-ref.csv");
    let (_, bins) = table(&hist);
    assert_eq!(bins.len(), 30);
    let counts: u64 = bins.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    let samples: u64 = meta(&hist, "samples").parse().unwrap();
    assert!(samples > 0);
    assert_eq!(counts, samples);
}
