//! Generate a small labeled corpus on disk and run both evaluation phases
//! over it, printing the confusion matrices and the per-sequence report.

use camsense::cascade::load_synthetic_cascade;
use camsense::detector::DetectionConfig;
use camsense::eval::{run_phase1, run_phase2, Labels, OverrideList};
use camsense::raster::{encode_pgm, GrayImage};
use camsense::sequence::AggregationPolicy;
use std::path::Path;

fn banded_frame() -> GrayImage {
    let mut img = GrayImage::filled(16, 16, 0).unwrap();
    for y in 4..8 {
        for x in 0..16 {
            img.set(x, y, 255);
        }
    }
    img
}

fn write(dir: &Path, name: &str, img: &GrayImage) {
    std::fs::write(dir.join(name), encode_pgm(img)).unwrap();
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("camsense-eval-demo");
    let _ = std::fs::remove_dir_all(&root);
    let pos = root.join("pictures/with-people");
    let neg = root.join("pictures/without-people");
    std::fs::create_dir_all(&pos)?;
    std::fs::create_dir_all(&neg)?;

    let planted = banded_frame();
    let blank = GrayImage::filled(16, 16, 0)?;
    for i in 0..6 {
        write(
            &pos,
            &format!("p{i}.pgm"),
            if i < 4 { &planted } else { &blank },
        );
        write(&neg, &format!("n{i}.pgm"), &blank);
    }

    let model =
        load_synthetic_cascade("window 8 8\nstage 0.5\nstump 0 0 8 8 -1 0 0 8 4 2 0.5 -1 1\n")?;
    let config = DetectionConfig {
        scale_factor: 1.5,
        min_neighbors: 1,
        min_size: (8, 8),
        max_size: None,
        group_eps: 0.2,
    };

    let phase1 = run_phase1(&pos, &neg, &model, &config, &OverrideList::empty(), None)?;
    let m = phase1.matrix;
    let [tp, fp, tn, fn_rate] = m.rates()?;
    println!("phase 1 (isolated pictures):");
    println!(
        "  TP {} ({tp})   FP {} ({fp})",
        m.true_positives, m.false_positives
    );
    println!(
        "  TN {} ({tn})   FN {} ({fn_rate})",
        m.true_negatives, m.false_negatives
    );

    // phase 2: the same pictures arranged as motion sequences
    let sequences = root.join("sequences");
    let mut labels = Labels::default();
    for (name, frames, has_people) in [
        ("walk-in", vec![&blank, &planted, &planted], true),
        ("walk-out", vec![&planted, &blank, &blank, &blank], true),
        ("curtain", vec![&blank, &blank], false),
    ] {
        let dir = sequences.join(name);
        std::fs::create_dir_all(&dir)?;
        for (i, frame) in frames.iter().enumerate() {
            write(&dir, &format!("{i:05}.pgm"), frame);
        }
        labels.insert(name, has_people);
    }

    let phase2 = run_phase2(
        &sequences,
        &labels,
        &model,
        &config,
        &AggregationPolicy::default(),
    )?;
    println!("\nphase 2 (whole sequences):");
    for row in &phase2.rows {
        println!(
            "  {:<10} {:>2} frames, {} identified, {} -> {}",
            row.name,
            row.total_pictures,
            row.identified_pictures,
            row.detection_percent,
            row.result
        );
    }
    Ok(())
}
