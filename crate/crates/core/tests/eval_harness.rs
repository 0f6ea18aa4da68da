//! End-to-end evaluation runs over generated corpora, using a synthetic
//! cascade that fires on a bright horizontal band and stays quiet on blank
//! frames.

use camsense::cascade::{load_synthetic_cascade, CascadeModel};
use camsense::detector::DetectionConfig;
use camsense::eval::{
    run_phase1, run_phase2, write_phase2_report, EvalError, Labels, Outcome, OverrideList,
};
use camsense::raster::{decode_ppm, encode_pgm, GrayImage};
use camsense::sequence::AggregationPolicy;
use std::path::Path;

/// Fires iff the window's upper half clearly outshines the lower half.
fn band_model() -> CascadeModel {
    load_synthetic_cascade(
        "window 8 8\n\
         stage 0.5\n\
         stump 0 0 8 8 -1 0 0 8 4 2 0.5 -1 1\n",
    )
    .unwrap()
}

fn fixture_config() -> DetectionConfig {
    DetectionConfig {
        scale_factor: 1.5,
        min_neighbors: 1,
        min_size: (8, 8),
        max_size: None,
        group_eps: 0.2,
    }
}

/// 16x16 with a bright band in rows 4..8: windows straddling the band edge
/// pass the stump.
fn planted_frame() -> GrayImage {
    let mut img = GrayImage::filled(16, 16, 0).unwrap();
    for y in 4..8 {
        for x in 0..16 {
            img.set(x, y, 255);
        }
    }
    img
}

fn blank_frame() -> GrayImage {
    GrayImage::filled(16, 16, 0).unwrap()
}

fn write_frame(dir: &Path, name: &str, img: &GrayImage) {
    std::fs::write(dir.join(name), encode_pgm(img)).unwrap();
}

#[test]
fn phase1_counts_and_override_shift() {
    let temp = tempfile::tempdir().unwrap();
    let pos = temp.path().join("pos");
    let neg = temp.path().join("neg");
    std::fs::create_dir_all(&pos).unwrap();
    std::fs::create_dir_all(&neg).unwrap();

    for i in 0..4 {
        write_frame(&pos, &format!("person_{i}.pgm"), &planted_frame());
    }
    write_frame(&pos, "person_missed.pgm", &blank_frame());
    for i in 0..3 {
        write_frame(&neg, &format!("empty_{i}.pgm"), &blank_frame());
    }
    write_frame(&neg, "empty_trap.pgm", &planted_frame());

    let model = band_model();
    let cfg = fixture_config();

    let outcome = run_phase1(&pos, &neg, &model, &cfg, &OverrideList::empty(), None).unwrap();
    let m = outcome.matrix;
    assert_eq!(
        (
            m.true_positives,
            m.false_negatives,
            m.true_negatives,
            m.false_positives
        ),
        (4, 1, 3, 1)
    );
    assert!(m.is_conserved());

    // override on the wrongly detected negative: FP becomes TN
    let mut overrides = OverrideList::empty();
    overrides.push("empty_trap.pgm", "box drawn on the band, not a person");
    let shifted = run_phase1(&pos, &neg, &model, &cfg, &overrides, None).unwrap();
    let s = shifted.matrix;
    assert_eq!(
        (
            s.true_positives,
            s.false_negatives,
            s.true_negatives,
            s.false_positives
        ),
        (4, 1, 4, 0)
    );

    // override on a detected positive: TP becomes FN
    let mut overrides = OverrideList::empty();
    overrides.push("person_0.pgm", "rectangle was on the wardrobe");
    let shifted = run_phase1(&pos, &neg, &model, &cfg, &overrides, None).unwrap();
    let s = shifted.matrix;
    assert_eq!((s.true_positives, s.false_negatives), (3, 2));
    assert_eq!((s.true_negatives, s.false_positives), (3, 1));
}

#[test]
fn phase1_overrides_only_move_toward_negative() {
    let temp = tempfile::tempdir().unwrap();
    let pos = temp.path().join("pos");
    let neg = temp.path().join("neg");
    std::fs::create_dir_all(&pos).unwrap();
    std::fs::create_dir_all(&neg).unwrap();
    for i in 0..3 {
        write_frame(&pos, &format!("p{i}.pgm"), &planted_frame());
        write_frame(&neg, &format!("n{i}.pgm"), &blank_frame());
    }
    let model = band_model();
    let cfg = fixture_config();
    let base = run_phase1(&pos, &neg, &model, &cfg, &OverrideList::empty(), None)
        .unwrap()
        .matrix;

    for name in ["p0.pgm", "p1.pgm"] {
        let mut overrides = OverrideList::empty();
        overrides.push(name, "manual review");
        let shifted = run_phase1(&pos, &neg, &model, &cfg, &overrides, None)
            .unwrap()
            .matrix;
        assert!(shifted.true_positives <= base.true_positives);
        assert!(shifted.false_positives <= base.false_positives);
        assert!(shifted.false_negatives >= base.false_negatives);
        assert!(shifted.true_negatives >= base.true_negatives);
        assert!(shifted.is_conserved());
        assert_eq!(shifted.positives_total, base.positives_total);
        assert_eq!(shifted.negatives_total, base.negatives_total);
    }
}

#[test]
fn phase1_empty_positive_dir_is_an_error() {
    let temp = tempfile::tempdir().unwrap();
    let pos = temp.path().join("pos");
    let neg = temp.path().join("neg");
    std::fs::create_dir_all(&pos).unwrap();
    std::fs::create_dir_all(&neg).unwrap();
    write_frame(&neg, "n.pgm", &blank_frame());
    let err = run_phase1(
        &pos,
        &neg,
        &band_model(),
        &fixture_config(),
        &OverrideList::empty(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, EvalError::EmptyCorpus(_)));
}

#[test]
fn phase1_skips_corrupt_pictures_and_annotates_hits() {
    let temp = tempfile::tempdir().unwrap();
    let pos = temp.path().join("pos");
    let neg = temp.path().join("neg");
    let out = temp.path().join("annotated");
    std::fs::create_dir_all(&pos).unwrap();
    std::fs::create_dir_all(&neg).unwrap();
    write_frame(&pos, "p0.pgm", &planted_frame());
    std::fs::write(pos.join("broken.pgm"), b"P5\n9 9\n255\nshort").unwrap();
    write_frame(&neg, "n0.pgm", &blank_frame());

    let outcome = run_phase1(
        &pos,
        &neg,
        &band_model(),
        &fixture_config(),
        &OverrideList::empty(),
        Some(&out),
    )
    .unwrap();
    assert_eq!(outcome.skipped.len(), 1);
    assert_eq!(
        outcome.matrix.positives_total, 1,
        "corrupt file not counted"
    );
    assert_eq!(outcome.annotated.len(), 1);
    // the annotated copy decodes and contains pure green somewhere
    let bytes = std::fs::read(&outcome.annotated[0]).unwrap();
    let img = decode_ppm(&bytes).unwrap();
    let mut greens = 0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) == (0, 255, 0) {
                greens += 1;
            }
        }
    }
    assert!(greens > 0, "annotated copy has a green border");
}

#[test]
fn phase1_unknown_override_is_an_error() {
    let temp = tempfile::tempdir().unwrap();
    let pos = temp.path().join("pos");
    let neg = temp.path().join("neg");
    std::fs::create_dir_all(&pos).unwrap();
    std::fs::create_dir_all(&neg).unwrap();
    write_frame(&pos, "p.pgm", &planted_frame());
    write_frame(&neg, "n.pgm", &blank_frame());
    let mut overrides = OverrideList::empty();
    overrides.push("nonexistent.pgm", "typo");
    let err = run_phase1(
        &pos,
        &neg,
        &band_model(),
        &fixture_config(),
        &overrides,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, EvalError::UnknownOverride(_)));
}

fn build_sequence(dir: &Path, name: &str, planted: usize, blank: usize) {
    let seq = dir.join(name);
    std::fs::create_dir_all(&seq).unwrap();
    for i in 0..planted {
        write_frame(&seq, &format!("{i:05}.pgm"), &planted_frame());
    }
    for i in planted..planted + blank {
        write_frame(&seq, &format!("{i:05}.pgm"), &blank_frame());
    }
}

#[test]
fn phase2_scores_sequences_as_units() {
    let temp = tempfile::tempdir().unwrap();
    let root = temp.path().join("sequences");
    build_sequence(&root, "A", 3, 2); // positive, detected
    build_sequence(&root, "B", 0, 4); // positive, missed entirely
    build_sequence(&root, "C", 0, 3); // negative, quiet
    build_sequence(&root, "D", 1, 2); // negative, false alarm

    let mut labels = Labels::default();
    labels.insert("A", true);
    labels.insert("B", true);
    labels.insert("C", false);
    labels.insert("D", false);

    let outcome = run_phase2(
        &root,
        &labels,
        &band_model(),
        &fixture_config(),
        &AggregationPolicy::default(),
    )
    .unwrap();

    let m = outcome.matrix;
    assert_eq!(
        (
            m.true_positives,
            m.false_negatives,
            m.true_negatives,
            m.false_positives
        ),
        (1, 1, 1, 1)
    );
    let names: Vec<&str> = outcome.rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, vec!["A", "B", "C", "D"]);
    let a = &outcome.rows[0];
    assert_eq!(a.total_pictures, 5);
    assert_eq!(a.identified_pictures, 3);
    assert_eq!(a.detection_percent, "60.00%");
    assert_eq!(a.result, Outcome::TruePositive);
    let b = &outcome.rows[1];
    assert_eq!(b.identified_pictures, 0);
    assert_eq!(b.result, Outcome::FalseNegative);

    // report round-trip: rows land in the CSV in name order
    let out = temp.path().join("report");
    let (rows_path, matrix_path) = write_phase2_report(&m, &outcome.rows, "band", &out).unwrap();
    let text = std::fs::read_to_string(rows_path).unwrap();
    assert!(text.contains("A,yes,5,3,60.00%,TP\n"));
    assert!(text.contains("D,no,3,1,33.33%,FP\n"));
    let matrix_text = std::fs::read_to_string(matrix_path).unwrap();
    assert!(matrix_text.contains("band,1,1,1,1,"));
}

#[test]
fn phase2_missing_label_is_an_error() {
    let temp = tempfile::tempdir().unwrap();
    let root = temp.path().join("sequences");
    build_sequence(&root, "A", 1, 1);
    let err = run_phase2(
        &root,
        &Labels::default(),
        &band_model(),
        &fixture_config(),
        &AggregationPolicy::default(),
    )
    .unwrap_err();
    assert!(matches!(err, EvalError::MissingLabel(_)));
}

#[test]
fn sequence_aggregation_dominates_frame_accuracy() {
    // 10 positive sequences, 10 frames each, 2 of 10 frames blank: a 20%
    // frame-level miss rate. With k = 1 every sequence still goes positive.
    let temp = tempfile::tempdir().unwrap();
    let root = temp.path().join("sequences");
    let mut labels = Labels::default();
    for i in 0..10 {
        build_sequence(&root, &format!("pos_{i:02}"), 8, 2);
        labels.insert(format!("pos_{i:02}"), true);
    }
    for i in 0..5 {
        build_sequence(&root, &format!("neg_{i:02}"), 0, 6);
        labels.insert(format!("neg_{i:02}"), false);
    }

    let outcome = run_phase2(
        &root,
        &labels,
        &band_model(),
        &fixture_config(),
        &AggregationPolicy::default(),
    )
    .unwrap();

    let mut positive_frames = 0u32;
    let mut identified_frames = 0u32;
    for row in outcome.rows.iter().filter(|r| r.has_people) {
        positive_frames += row.total_pictures;
        identified_frames += row.identified_pictures;
    }
    let frame_rate = f64::from(identified_frames) / f64::from(positive_frames);
    let seq_rate =
        f64::from(outcome.matrix.true_positives) / f64::from(outcome.matrix.positives_total);
    assert!((frame_rate - 0.8).abs() < 1e-9, "frame rate {frame_rate}");
    assert!(
        seq_rate >= frame_rate,
        "sequence TP rate {seq_rate} < frame TP rate {frame_rate}"
    );
    assert_eq!(outcome.matrix.false_positives, 0);
}
