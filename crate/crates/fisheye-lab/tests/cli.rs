//! Black-box checks of the command-line binary: exit codes, output files,
//! stdout contracts, and seeded reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use fisheye_lab::testimage::test_scene_indexed;
use fisheye_lab::warp::save_image;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fisheye-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fisheye-lab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

const PARAMS_JSON: &str =
    r#"{"fx": 140.0, "fy": 140.0, "cx": 127.5, "cy": 127.5, "k": [0.8, 0.05, 0.02, 0.008, 0.004]}"#;

fn write_scene(dir: &Path, name: &str, variant: u32) {
    save_image(&test_scene_indexed(256, 256, variant), &dir.join(name)).unwrap();
}

#[test]
fn help_everywhere_exits_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    for sub in [
        "synthesize",
        "rectify",
        "sweep",
        "presets",
        "dataset",
        "evaluate",
        "ci",
        "train-toy",
        "calibrate-toy",
        "rf",
    ] {
        let out = run(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub} --help");
        assert!(stdout(&out).contains("Usage"), "{sub} --help prints usage");
    }
}

#[test]
fn rf_prints_exact_columns_and_note() {
    let out = run(&["rf", "--layers", "4x4s2,4x4s2,4x4s2,4x4s1,4x4s1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "4 10 22 46 70\n");
    assert!(stderr(&out).is_empty(), "no note for the mixed-stride stack");

    let out = run(&["rf", "--layers", "4x4s2,4x4s2,4x4s2,4x4s2,4x4s2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "4 10 22 46 94\n");
    assert!(stderr(&out).contains("note:"), "discrepancy note on stderr");
}

#[test]
fn usage_errors_exit_one() {
    let bad_grammar = run(&["rf", "--layers", "fish"]);
    assert_eq!(code(&bad_grammar), 1);
    assert!(!stderr(&bad_grammar).is_empty());

    let unknown_flag = run(&["rf", "--layers", "4x4s2", "--bogus"]);
    assert_eq!(code(&unknown_flag), 1);

    let missing_subcommand = run(&[]);
    assert_eq!(code(&missing_subcommand), 1);

    let conflicting = run(&["evaluate", "--manifest", "x.jsonl", "--predictions", "p"]);
    assert_eq!(code(&conflicting), 1);
    assert!(stderr(&conflicting).contains("full-pipeline"));
}

#[test]
fn synthesize_and_rectify_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cam.json"), PARAMS_JSON).unwrap();
    write_scene(dir, "scene.png", 0);

    let out = run_in(
        dir,
        &[
            "synthesize",
            "--params",
            "cam.json",
            "--in",
            "scene.png",
            "--out",
            "fish.png",
            "--mask",
            "mask.png",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dir.join("fish.png").is_file());
    assert!(dir.join("mask.png").is_file());
    assert!(stdout(&out).contains("fish.png"));

    let out = run_in(
        dir,
        &[
            "rectify",
            "--params",
            "cam.json",
            "--in",
            "fish.png",
            "--out",
            "rect.png",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dir.join("rect.png").is_file());
}

#[test]
fn invalid_params_exit_one_naming_field() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("bad.json"),
        r#"{"fx": -1.0, "fy": 140.0, "cx": 10.0, "cy": 10.0, "k": [1.0, 0.0, 0.0, 0.0, 0.0]}"#,
    )
    .unwrap();
    write_scene(dir, "scene.png", 0);
    let out = run_in(
        dir,
        &[
            "synthesize",
            "--params",
            "bad.json",
            "--in",
            "scene.png",
            "--out",
            "o.png",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("fx"), "names the field: {}", stderr(&out));
}

#[test]
fn missing_input_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cam.json"), PARAMS_JSON).unwrap();
    let out = run_in(
        dir,
        &[
            "synthesize",
            "--params",
            "cam.json",
            "--in",
            "nosuch.png",
            "--out",
            "o.png",
        ],
    );
    assert_eq!(code(&out), 2);

    let out = run_in(dir, &["evaluate", "--manifest", "nosuch.jsonl"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_negative_lo_writes_montage_and_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_scene(dir, "img.png", 1);
    let out = run_in(
        dir,
        &[
            "sweep", "--coeff", "k1", "--lo", "-0.9", "--hi", "1.0", "--steps", "8", "--in",
            "img.png", "--out", "montage.png",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dir.join("montage.png").is_file());
    let cells: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("montage.params.json")).unwrap())
            .unwrap();
    assert_eq!(cells["lo"], serde_json::json!(-0.9));
    assert_eq!(cells["hi"], serde_json::json!(1.0));
    assert_eq!(cells["cells"].as_array().unwrap().len(), 8);
}

#[test]
fn dataset_generation_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let corpus = dir.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    for i in 0..2u32 {
        save_image(&test_scene_indexed(96, 96, i), &corpus.join(format!("s{i}.png"))).unwrap();
    }
    for out_dir in ["a", "b"] {
        let out = run_in(
            dir,
            &[
                "dataset", "--corpus", "corpus", "--out", out_dir, "--per-image", "2", "--seed",
                "17",
            ],
        );
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    let a = std::fs::read(dir.join("a/manifest.jsonl")).unwrap();
    let b = std::fs::read(dir.join("b/manifest.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let out = run_in(dir, &["evaluate", "--manifest", "a/manifest.jsonl"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("full dataset"));
}

#[test]
fn thread_count_does_not_change_bits() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cam.json"), PARAMS_JSON).unwrap();
    write_scene(dir, "scene.png", 2);
    for (threads, name) in [("1", "one.png"), ("4", "four.png")] {
        let out = run_in(
            dir,
            &[
                "--threads",
                threads,
                "synthesize",
                "--params",
                "cam.json",
                "--in",
                "scene.png",
                "--out",
                name,
            ],
        );
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    assert_eq!(
        std::fs::read(dir.join("one.png")).unwrap(),
        std::fs::read(dir.join("four.png")).unwrap()
    );
}

#[test]
fn ci_reads_scores_and_reports_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("d.txt"), "0.5\n0.8\n# comment\n0.3\n\n0.6\n").unwrap();
    let out = run_in(dir, &["--json", "ci", "--diffs", "d.txt"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["n"], serde_json::json!(4));
    assert_eq!(v["contains_zero"], serde_json::json!(false));

    std::fs::write(dir.join("a.txt"), "1.0\n2.0\n").unwrap();
    std::fs::write(dir.join("b.txt"), "1.0\n2.0\n3.0\n").unwrap();
    let out = run_in(dir, &["ci", "--a", "a.txt", "--b", "b.txt"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("length"));

    std::fs::write(dir.join("junk.txt"), "1.0\nnope\n").unwrap();
    let out = run_in(dir, &["ci", "--diffs", "junk.txt"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn presets_listing_is_deterministic() {
    let first = run(&["presets", "--sample", "3", "--seed", "9"]);
    let second = run(&["presets", "--sample", "3", "--seed", "9"]);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), stdout(&second));

    let json = run(&["--json", "presets"]);
    assert_eq!(code(&json), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12);
}

#[test]
fn toy_training_commands_run_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "train-toy", "--seed", "1", "--steps", "3", "--trace", "t.csv",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let trace = std::fs::read_to_string(dir.join("t.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4, "header plus three steps");
    assert!(trace.starts_with("step,L_D,L_G,L1"));

    let out = run_in(
        dir,
        &[
            "calibrate-toy",
            "--samples",
            "40",
            "--epochs",
            "2",
            "--seed",
            "1",
            "--net-out",
            "net.json",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dir.join("net.json").is_file());
}
