//! Smoke tests for the `camsense` binary: both eval subcommands over a
//! generated corpus, exercising flags, reports, and exit codes.

use camsense::raster::{encode_pgm, GrayImage};
use std::path::Path;
use std::process::Command;

const BAND_MODEL: &str = "window 8 8\nstage 0.5\nstump 0 0 8 8 -1 0 0 8 4 2 0.5 -1 1\n";

fn planted() -> GrayImage {
    let mut img = GrayImage::filled(16, 16, 0).unwrap();
    for y in 4..8 {
        for x in 0..16 {
            img.set(x, y, 255);
        }
    }
    img
}

fn blank() -> GrayImage {
    GrayImage::filled(16, 16, 0).unwrap()
}

fn write_frames(dir: &Path, frames: &[(&str, &GrayImage)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, img) in frames {
        std::fs::write(dir.join(name), encode_pgm(img)).unwrap();
    }
}

fn camsense() -> Command {
    Command::new(env!("CARGO_BIN_EXE_camsense"))
}

#[test]
fn eval_phase1_prints_matrix_and_writes_report() {
    let temp = tempfile::tempdir().unwrap();
    let model_path = temp.path().join("band.cascade");
    std::fs::write(&model_path, BAND_MODEL).unwrap();

    let planted = planted();
    let blank = blank();
    write_frames(
        &temp.path().join("pos"),
        &[("a.pgm", &planted), ("b.pgm", &planted), ("c.pgm", &blank)],
    );
    write_frames(
        &temp.path().join("neg"),
        &[("d.pgm", &blank), ("e.pgm", &blank)],
    );

    let out = temp.path().join("report");
    let output = camsense()
        .args(["eval", "phase1"])
        .arg("--pos")
        .arg(temp.path().join("pos"))
        .arg("--neg")
        .arg(temp.path().join("neg"))
        .arg("--model")
        .arg(&model_path)
        .arg("--out")
        .arg(&out)
        .args([
            "--scale-factor",
            "1.5",
            "--min-neighbors",
            "1",
            "--min-size",
            "8x8",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("3 positive / 2 negative pictures"),
        "{stdout}"
    );
    assert!(stdout.contains("TP     2 (66.67%)"), "{stdout}");
    assert!(stdout.contains("TN     2 (100.00%)"), "{stdout}");

    let matrix_csv = std::fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert!(matrix_csv.starts_with("model,tp,fp,tn,fn,"));
    assert!(
        matrix_csv.contains("synthetic,2,0,2,1,66.67%,0.00%,100.00%,33.33%"),
        "{matrix_csv}"
    );
    // annotated copies of the two detected pictures
    let annotated = std::fs::read_dir(out.join("annotated")).unwrap().count();
    assert_eq!(annotated, 2);
}

#[test]
fn eval_phase1_respects_overrides() {
    let temp = tempfile::tempdir().unwrap();
    let model_path = temp.path().join("band.cascade");
    std::fs::write(&model_path, BAND_MODEL).unwrap();
    let planted = planted();
    let blank = blank();
    write_frames(&temp.path().join("pos"), &[("a.pgm", &planted)]);
    write_frames(&temp.path().join("neg"), &[("d.pgm", &blank)]);
    let overrides = temp.path().join("overrides.csv");
    std::fs::write(&overrides, "a.pgm, rectangle on the wrong object\n").unwrap();

    let output = camsense()
        .args(["eval", "phase1"])
        .arg("--pos")
        .arg(temp.path().join("pos"))
        .arg("--neg")
        .arg(temp.path().join("neg"))
        .arg("--model")
        .arg(&model_path)
        .arg("--overrides")
        .arg(&overrides)
        .args([
            "--scale-factor",
            "1.5",
            "--min-neighbors",
            "1",
            "--min-size",
            "8x8",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    // the only positive picture was overridden to negative
    assert!(stdout.contains("TP     0 (0.00%)"), "{stdout}");
    assert!(stdout.contains("FN     1 (100.00%)"), "{stdout}");
}

#[test]
fn eval_phase2_prints_rows_and_writes_reports() {
    let temp = tempfile::tempdir().unwrap();
    let model_path = temp.path().join("band.cascade");
    std::fs::write(&model_path, BAND_MODEL).unwrap();
    let planted = planted();
    let blank = blank();

    let sequences = temp.path().join("sequences");
    write_frames(
        &sequences.join("C1"),
        &[
            ("00000.pgm", &blank),
            ("00001.pgm", &planted),
            ("00002.pgm", &blank),
        ],
    );
    write_frames(
        &sequences.join("Q"),
        &[("00000.pgm", &blank), ("00001.pgm", &blank)],
    );
    std::fs::write(temp.path().join("labels.csv"), "C1,yes\nQ,no\n").unwrap();

    let out = temp.path().join("report");
    let output = camsense()
        .args(["eval", "phase2"])
        .arg("--sequences")
        .arg(&sequences)
        .arg("--labels")
        .arg(temp.path().join("labels.csv"))
        .arg("--model")
        .arg(&model_path)
        .arg("--out")
        .arg(&out)
        .args([
            "--k",
            "1",
            "--scale-factor",
            "1.5",
            "--min-neighbors",
            "1",
            "--min-size",
            "8x8",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("1 positive / 1 negative sequences"),
        "{stdout}"
    );
    assert!(stdout.contains("TP") && stdout.contains("TN"), "{stdout}");

    let rows = std::fs::read_to_string(out.join("sequences.csv")).unwrap();
    assert!(rows.contains("C1,yes,3,1,33.33%,TP"), "{rows}");
    assert!(rows.contains("Q,no,2,0,0.00%,TN"), "{rows}");
}

#[test]
fn missing_model_file_fails_cleanly() {
    let output = camsense()
        .args([
            "eval",
            "phase1",
            "--pos",
            "x",
            "--neg",
            "y",
            "--model",
            "missing.xml",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"), "{stderr}");
}

#[test]
fn help_lists_subcommands() {
    let output = camsense().arg("--help").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("serve"));
    assert!(stdout.contains("eval"));
}
