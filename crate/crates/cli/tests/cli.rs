//! End-to-end tests of the `posetrack` binary: exit codes, output files,
//! determinism, and the error surface of every subcommand.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posetrack"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn help_screens_exit_zero_and_document_flags() {
    let top = run(&["--help"]);
    assert_eq!(code(&top), 0);
    for sub in ["gen", "gradcheck", "fit", "track"] {
        assert!(stdout(&top).contains(sub), "top help should list `{sub}`");
        let help = run(&[sub, "--help"]);
        assert_eq!(code(&help), 0, "`{sub} --help` should exit 0");
        let text = stdout(&help);
        assert!(text.contains("--seed"), "`{sub}` help should show --seed");
        assert!(text.contains("--out"), "`{sub}` help should show --out");
    }
    assert!(stdout(&run(&["track", "--help"])).contains("--fail-budget"));
    assert!(stdout(&run(&["gen", "--help"])).contains("--mesh"));
}

#[test]
fn gen_is_deterministic_in_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&["gen", "--n", "3", "--seed", "11", "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "gen failed: {}", stderr(&out));
        let printed = stdout(&out);
        assert!(
            printed.contains("manifest.json"),
            "gen should print the manifest path, got: {printed}"
        );
    }
    for name in ["manifest.json", "rgb_0.ppm", "depth_2.pgm", "meta_1.json"] {
        assert_eq!(
            read(&a.join(name)),
            read(&b.join(name)),
            "{name} should be byte-identical across identically seeded runs"
        );
    }
}

#[test]
fn gen_missing_mesh_is_a_config_error_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--n",
        "1",
        "--mesh",
        "/nonexistent/shape.obj",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("/nonexistent/shape.obj"),
        "error should name the missing file, got: {}",
        stderr(&out)
    );
}

#[test]
fn gen_rejects_unknown_config_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"bogus_field": 1.0}"#).unwrap();
    let out = run(&[
        "gen",
        "--n",
        "1",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus_field"));
}

#[test]
fn gen_config_overrides_reach_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"p_occluder": 0.0, "axial_a0": 0.009}"#).unwrap();
    let dir = tmp.path().join("d");
    let out = run(&[
        "gen",
        "--n",
        "2",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "gen failed: {}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["n_samples"], 2);
    assert_eq!(manifest["config"]["augment"]["p_occluder"], 0.0);
    assert_eq!(manifest["config"]["noise"]["axial_a0"], 0.009);
}

#[test]
fn gen_requires_at_least_one_sample() {
    let out = run(&["gen", "--n", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gradcheck_prints_one_line_per_family() {
    let out = run(&["gradcheck", "--trials", "5", "--seed", "3"]);
    assert_eq!(code(&out), 0, "gradcheck failed: {}", stderr(&out));
    let text = stdout(&out);
    for family in [
        "geodesic-rot6d",
        "track-weighted",
        "multitask-weighted",
        "symmetric-uniformity",
        "logcosh",
        "softmax-bce",
    ] {
        assert!(text.contains(family), "missing family line for {family}");
    }
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.contains("max_rel_err") && l.ends_with("ok")));
}

#[test]
fn gradcheck_rejects_zero_trials() {
    let out = run(&["gradcheck", "--trials", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn fit_writes_reproducible_checkpoint_and_history() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let gen = run(&["gen", "--n", "4", "--seed", "5", "--out", data.to_str().unwrap()]);
    assert_eq!(code(&gen), 0, "gen failed: {}", stderr(&gen));

    let fit_args = |dir: &Path| {
        vec![
            "fit".to_string(),
            "--data".into(),
            data.to_str().unwrap().into(),
            "--epochs".into(),
            "2".into(),
            "--warmup".into(),
            "1".into(),
            "--b2".into(),
            "4".into(),
            "--symmetry-axis".into(),
            "z".into(),
            "--seed".into(),
            "9".into(),
            "--out".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let (a, b) = (tmp.path().join("fit_a"), tmp.path().join("fit_b"));
    for dir in [&a, &b] {
        let args: Vec<String> = fit_args(dir);
        let argrefs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&argrefs);
        assert_eq!(code(&out), 0, "fit failed: {}", stderr(&out));
        assert!(stdout(&out).contains("trained 2 epochs"));
    }

    let history = String::from_utf8(read(&a.join("history.csv"))).unwrap();
    let mut lines = history.lines();
    assert_eq!(
        lines.next(),
        Some("epoch,lr,loss,trans_err_mm,rot_err_deg,v1,v2,s1,s2,s3,s4")
    );
    assert_eq!(lines.count(), 2, "one history row per epoch");

    let checkpoint: serde_json::Value =
        serde_json::from_slice(&read(&a.join("checkpoint.json"))).unwrap();
    assert_eq!(checkpoint["f_dim"], 11);
    assert_eq!(checkpoint["epoch"], 2);
    let bank = &checkpoint["bank"];
    assert_eq!(bank["axis_mask"], serde_json::json!([false, false, true]));
    // The bank stores three raw parameters per entry, serialized flat.
    assert_eq!(bank["params"].as_array().unwrap().len(), 3 * 4);

    assert_eq!(read(&a.join("history.csv")), read(&b.join("history.csv")));
    assert_eq!(read(&a.join("checkpoint.json")), read(&b.join("checkpoint.json")));
}

#[test]
fn track_oracle_is_clean_and_writes_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "track",
        "--scenario",
        "rotation",
        "--estimator",
        "oracle",
        "--frames",
        "45",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "track failed: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&read(&tmp.path().join("track_rotation_oracle.json"))).unwrap();
    assert_eq!(report["scenario"], "rotation");
    assert_eq!(report["estimator"], "oracle");
    assert_eq!(report["summary"]["failures"], 0);
    assert_eq!(report["summary"]["resets"], 2);
    assert_eq!(report["rows"].as_array().unwrap().len(), 45);
}

#[test]
fn track_all_runs_every_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "track",
        "--scenario",
        "all",
        "--estimator",
        "oracle",
        "--frames",
        "30",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "track failed: {}", stderr(&out));
    for name in ["translation", "rotation", "occlusion", "hard", "flip"] {
        let path = tmp.path().join(format!("track_{name}_oracle.json"));
        assert!(path.exists(), "missing report {}", path.display());
        assert!(stdout(&out).contains(name));
    }
}

#[test]
fn reflective_filter_decides_the_flip_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let base = [
        "track",
        "--scenario",
        "flip",
        "--estimator",
        "bias",
        "--bias-mm",
        "0",
        "--frames",
        "60",
        "--out",
    ];

    let mut unfiltered: Vec<&str> = base.to_vec();
    let dir_a = tmp.path().join("raw");
    unfiltered.push(dir_a.to_str().unwrap());
    unfiltered.extend(["--reflective", "off"]);
    let out = run(&unfiltered);
    assert_eq!(code(&out), 1, "unfiltered flips should blow the failure budget");
    assert!(stderr(&out).contains("failure budget exceeded"));

    let mut filtered: Vec<&str> = base.to_vec();
    let dir_b = tmp.path().join("filtered");
    filtered.push(dir_b.to_str().unwrap());
    filtered.extend(["--reflective", "on"]);
    let out = run(&filtered);
    assert_eq!(code(&out), 0, "filtering should absorb the flips: {}", stderr(&out));

    let report: serde_json::Value =
        serde_json::from_slice(&read(&dir_b.join("track_flip_bias.json"))).unwrap();
    assert_eq!(report["summary"]["failures"], 0);
    assert!(report["estimator"].as_str().unwrap().contains("flip"));
}

#[test]
fn track_model_requires_a_checkpoint_flag() {
    let out = run(&["track", "--scenario", "translation", "--estimator", "model"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--model"));
}

#[test]
fn track_model_rejects_a_garbage_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"not\": \"a checkpoint\"}").unwrap();
    let out = run(&[
        "track",
        "--scenario",
        "translation",
        "--estimator",
        "model",
        "--model",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("checkpoint"));
}

#[test]
fn track_csv_reports_have_the_row_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "track",
        "--scenario",
        "translation",
        "--estimator",
        "noise",
        "--frames",
        "30",
        "--fail-budget",
        "30",
        "--format",
        "csv",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "track failed: {}", stderr(&out));
    let csv = String::from_utf8(read(&tmp.path().join("track_translation_noise.csv"))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("frame,trans_err_mm,rot_err_deg,reset,failure"));
    assert_eq!(lines.count(), 30);
}

#[test]
fn track_rejects_a_zero_reset_interval() {
    let out = run(&[
        "track",
        "--scenario",
        "translation",
        "--estimator",
        "oracle",
        "--reset",
        "0",
    ]);
    assert_eq!(code(&out), 2);
}
