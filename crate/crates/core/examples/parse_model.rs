//! Parse a cascade model file and print its shape plus any validation
//! findings.
//!
//! Usage: cargo run -p camsense --example parse_model [MODEL.xml]
//!
//! Defaults to the bundled upper-body sample model.

use camsense::cascade::{parse_cascade, validate_cascade};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/models/upperbody-22x18.xml")
        });

    let bytes = std::fs::read(&path)?;
    let model = parse_cascade(&bytes)?;

    println!("model:  {}", model.name);
    println!("window: {}x{}", model.window_w, model.window_h);
    println!("stages: {}", model.stages.len());
    let trees: usize = model.stages.iter().map(|s| s.trees.len()).sum();
    let tilted: usize = model
        .stages
        .iter()
        .flat_map(|s| &s.trees)
        .flat_map(|t| &t.nodes)
        .filter(|n| n.feature.tilted)
        .count();
    println!("trees:  {trees} ({tilted} tilted features)");

    let report = validate_cascade(&model);
    if report.is_empty() {
        println!("validation: clean");
    } else {
        println!("validation: {} finding(s)", report.entries().len());
        for entry in report.entries() {
            println!("  - {entry}");
        }
    }
    Ok(())
}
