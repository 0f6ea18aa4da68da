//! Cascade classifier models.
//!
//! A model is an ordered list of stages over a fixed base window. Each stage
//! holds weak classifiers (small decision trees over Haar-like rectangle
//! features); a window passes a stage iff the sum of the trees' leaf values
//! reaches the stage threshold, and passes the cascade iff it passes every
//! stage. Models load from the classic XML format ([`parse_cascade`]) or
//! from a line-oriented synthetic format used by tests and examples
//! ([`load_synthetic_cascade`]).

mod legacy_xml;
mod synthetic;

pub use legacy_xml::parse_cascade;
pub use synthetic::{load_synthetic_cascade, write_synthetic_cascade};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error("unsupported construct: {0}")]
    UnsupportedFeature(String),
}

/// A weighted rectangle of a Haar-like feature, relative to the base window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub weight: f64,
}

/// A Haar-like feature: two or three weighted rectangles, optionally
/// evaluated over the 45-degree tilted integral.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
    pub tilted: bool,
}

/// Where a decision-tree comparison goes: a leaf value or another node of
/// the same tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Value(f64),
    Node(usize),
}

/// One internal node of a weak tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub feature: HaarFeature,
    pub split_threshold: f64,
    pub left: Branch,
    pub right: Branch,
}

/// A weak classifier: a decision tree rooted at node 0. A single node with
/// two leaf branches is a stump, the degenerate and most common case.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakTree {
    pub nodes: Vec<TreeNode>,
}

impl WeakTree {
    pub fn stump(node: TreeNode) -> WeakTree {
        WeakTree { nodes: vec![node] }
    }
}

/// One cascade stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub threshold: f64,
    pub trees: Vec<WeakTree>,
}

/// A parsed cascade classifier model.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub name: String,
    pub window_w: u32,
    pub window_h: u32,
    pub stages: Vec<Stage>,
}

/// Invariant violations found by [`validate_cascade`]. Violations are
/// report entries, never errors: a report is produced for any input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    entries: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    fn push(&mut self, entry: String) {
        self.entries.push(entry);
    }
}

/// Checks every model invariant and reports each violation: degenerate
/// window, empty stages, malformed trees, out-of-window rects, and
/// single-signed feature weights. An empty report means the model is valid.
pub fn validate_cascade(model: &CascadeModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    if model.window_w == 0 || model.window_h == 0 {
        report.push(format!(
            "window degenerate: {}x{}",
            model.window_w, model.window_h
        ));
    }
    for (si, stage) in model.stages.iter().enumerate() {
        if stage.trees.is_empty() {
            report.push(format!("stage {si}: no weak classifiers"));
        }
        for (ti, tree) in stage.trees.iter().enumerate() {
            let at = |rest: &str| format!("stage {si} tree {ti}: {rest}");
            if tree.nodes.is_empty() {
                report.push(at("tree has no nodes"));
                continue;
            }
            for (ni, node) in tree.nodes.iter().enumerate() {
                for branch in [node.left, node.right] {
                    if let Branch::Node(target) = branch {
                        if target >= tree.nodes.len() {
                            report.push(at(&format!(
                                "node {ni} branch target {target} out of range"
                            )));
                        } else if target <= ni {
                            report.push(at(&format!(
                                "node {ni} branch target {target} is not a forward reference"
                            )));
                        }
                    }
                }
                validate_feature(&node.feature, model, &mut report, &at, ni);
            }
        }
    }
    report
}

fn validate_feature(
    feature: &HaarFeature,
    model: &CascadeModel,
    report: &mut ValidationReport,
    at: &dyn Fn(&str) -> String,
    node_index: usize,
) {
    if feature.rects.len() < 2 || feature.rects.len() > 3 {
        report.push(at(&format!(
            "node {node_index} feature has {} rects, expected 2 or 3",
            feature.rects.len()
        )));
    }
    for (ri, r) in feature.rects.iter().enumerate() {
        let fits = if feature.tilted {
            r.x >= r.h
                && r.x.checked_add(r.w).is_some_and(|v| v <= model.window_w)
                && r.y
                    .checked_add(r.w)
                    .and_then(|v| v.checked_add(r.h))
                    .is_some_and(|v| v <= model.window_h)
        } else {
            r.x.checked_add(r.w).is_some_and(|v| v <= model.window_w)
                && r.y.checked_add(r.h).is_some_and(|v| v <= model.window_h)
        };
        if !fits {
            report.push(at(&format!(
                "node {node_index} rect {ri} exceeds window ({},{},{},{} in {}x{}{})",
                r.x,
                r.y,
                r.w,
                r.h,
                model.window_w,
                model.window_h,
                if feature.tilted { ", tilted" } else { "" }
            )));
        }
    }
    let any_pos = feature.rects.iter().any(|r| r.weight > 0.0);
    let any_neg = feature.rects.iter().any(|r| r.weight < 0.0);
    if !(any_pos && any_neg) {
        report.push(at(&format!(
            "node {node_index} feature weights all of one sign"
        )));
    }
}
