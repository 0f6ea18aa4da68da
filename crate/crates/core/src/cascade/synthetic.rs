//! Line-oriented synthetic cascade format.
//!
//! Built for tests, fixtures, and examples: small hand-written cascades with
//! exactly known behaviour. The grammar, bit for bit:
//!
//! ```text
//! file    = { line "\n" }                 ; writer ends every line with \n
//! line    = window | stage | stump | blank | comment
//! window  = "window" SP W SP H            ; exactly once, first directive
//! stage   = "stage" SP T                  ; opens a stage with threshold T
//! stump   = "stump" [SP "tilted"] SP X1 SP Y1 SP W1 SP H1 SP WT1
//!                    SP X2 SP Y2 SP W2 SP H2 SP WT2 SP SPLIT SP LEFT SP RIGHT
//! comment = "#" anything
//! ```
//!
//! A `stump` line adds a one-node tree with two weighted rects to the most
//! recently opened stage. W, H and the rect coordinates are decimal
//! integers; weights, thresholds and leaf values are decimal reals printed
//! by the writer in Rust's shortest round-trip form, so
//! `write(parse(text))` is byte-identical for writer-produced text. A model
//! with zero stages is legal here (unlike in model files) and accepts every
//! window.

use super::{
    Branch, CascadeError, CascadeModel, HaarFeature, Stage, TreeNode, WeakTree, WeightedRect,
};

/// Parses the synthetic text format.
pub fn load_synthetic_cascade(text: &str) -> Result<CascadeModel, CascadeError> {
    let mut window: Option<(u32, u32)> = None;
    let mut stages: Vec<Stage> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| CascadeError::MalformedModel(format!("line {}: {msg}", lineno + 1));
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("window") => {
                if window.is_some() {
                    return Err(bad("duplicate window directive"));
                }
                let w = next_u32(&mut tokens).ok_or_else(|| bad("window needs W H"))?;
                let h = next_u32(&mut tokens).ok_or_else(|| bad("window needs W H"))?;
                expect_end(&mut tokens).map_err(|t| bad(&format!("trailing token \"{t}\"")))?;
                window = Some((w, h));
            }
            Some("stage") => {
                if window.is_none() {
                    return Err(bad("stage before window"));
                }
                let threshold =
                    next_f64(&mut tokens).ok_or_else(|| bad("stage needs a threshold"))?;
                expect_end(&mut tokens).map_err(|t| bad(&format!("trailing token \"{t}\"")))?;
                stages.push(Stage {
                    threshold,
                    trees: Vec::new(),
                });
            }
            Some("stump") => {
                let stage = stages.last_mut().ok_or_else(|| bad("stump before stage"))?;
                let mut rest: Vec<&str> = tokens.collect();
                let tilted = rest.first() == Some(&"tilted");
                if tilted {
                    rest.remove(0);
                }
                if rest.len() != 13 {
                    return Err(bad(&format!(
                        "stump needs 13 numbers (two rects, split, two leaves), got {}",
                        rest.len()
                    )));
                }
                let rect = |chunk: &[&str]| -> Result<WeightedRect, CascadeError> {
                    Ok(WeightedRect {
                        x: chunk[0].parse().map_err(|_| bad("bad rect x"))?,
                        y: chunk[1].parse().map_err(|_| bad("bad rect y"))?,
                        w: chunk[2].parse().map_err(|_| bad("bad rect w"))?,
                        h: chunk[3].parse().map_err(|_| bad("bad rect h"))?,
                        weight: chunk[4].parse().map_err(|_| bad("bad rect weight"))?,
                    })
                };
                let r1 = rect(&rest[0..5])?;
                let r2 = rect(&rest[5..10])?;
                let split_threshold: f64 = rest[10].parse().map_err(|_| bad("bad split"))?;
                let left: f64 = rest[11].parse().map_err(|_| bad("bad left leaf"))?;
                let right: f64 = rest[12].parse().map_err(|_| bad("bad right leaf"))?;
                stage.trees.push(WeakTree::stump(TreeNode {
                    feature: HaarFeature {
                        rects: vec![r1, r2],
                        tilted,
                    },
                    split_threshold,
                    left: Branch::Value(left),
                    right: Branch::Value(right),
                }));
            }
            Some(other) => return Err(bad(&format!("unknown directive \"{other}\""))),
            None => unreachable!("blank lines are skipped"),
        }
    }

    let (window_w, window_h) =
        window.ok_or_else(|| CascadeError::MalformedModel("missing window directive".into()))?;
    Ok(CascadeModel {
        name: "synthetic".into(),
        window_w,
        window_h,
        stages,
    })
}

/// Writes a model in canonical synthetic form. Only stump-only models with
/// two-rect features fit the format; anything else is refused.
pub fn write_synthetic_cascade(model: &CascadeModel) -> Result<String, CascadeError> {
    let mut out = format!("window {} {}\n", model.window_w, model.window_h);
    for stage in &model.stages {
        out.push_str(&format!("stage {}\n", stage.threshold));
        for tree in &stage.trees {
            if tree.nodes.len() != 1 {
                return Err(CascadeError::UnsupportedFeature(
                    "synthetic format holds stumps only".into(),
                ));
            }
            let node = &tree.nodes[0];
            let (left, right) = match (node.left, node.right) {
                (Branch::Value(l), Branch::Value(r)) => (l, r),
                _ => {
                    return Err(CascadeError::UnsupportedFeature(
                        "synthetic format holds stumps only".into(),
                    ))
                }
            };
            if node.feature.rects.len() != 2 {
                return Err(CascadeError::UnsupportedFeature(
                    "synthetic stumps use exactly two rects".into(),
                ));
            }
            let mut line = String::from("stump");
            if node.feature.tilted {
                line.push_str(" tilted");
            }
            for r in &node.feature.rects {
                line.push_str(&format!(" {} {} {} {} {}", r.x, r.y, r.w, r.h, r.weight));
            }
            line.push_str(&format!(" {} {} {}", node.split_threshold, left, right));
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out)
}

fn next_u32<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Option<u32> {
    tokens.next().and_then(|t| t.parse().ok())
}

fn next_f64<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Option<f64> {
    tokens.next().and_then(|t| t.parse().ok())
}

fn expect_end<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<(), &'a str> {
    match tokens.next() {
        Some(t) => Err(t),
        None => Ok(()),
    }
}
