//! Parser for the classic tree-list cascade XML schema.
//!
//! The supported shape is the one used by the widely distributed body and
//! face cascades: a root `<opencv_storage>` wrapping one cascade element
//! with `type_id="opencv-haar-classifier"`, a `<size>w h</size>` base
//! window, and a `<stages>` list where every stage holds `<trees>` (each
//! tree a node list of `<feature>`/`<threshold>`/`<left_*>`/`<right_*>`)
//! and a `<stage_threshold>`. The newer stump-only schema with a flat
//! feature table (`type_id="opencv-cascade-classifier"`) is rejected as
//! unsupported rather than misread.

use super::{
    Branch, CascadeError, CascadeModel, HaarFeature, Stage, TreeNode, WeakTree, WeightedRect,
};

/// Parses model-file bytes in the classic cascade schema.
pub fn parse_cascade(bytes: &[u8]) -> Result<CascadeModel, CascadeError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| CascadeError::MalformedModel("model file is not valid UTF-8".into()))?;
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| CascadeError::MalformedModel(format!("invalid XML: {e}")))?;

    let root = doc.root_element();
    let cascade = if root.has_tag_name("opencv_storage") {
        root.children()
            .find(|n| n.is_element())
            .ok_or_else(|| CascadeError::MalformedModel("empty <opencv_storage>".into()))?
    } else {
        root
    };

    match cascade.attribute("type_id") {
        Some("opencv-haar-classifier") | None => {}
        Some(other) => {
            return Err(CascadeError::UnsupportedFeature(format!(
                "cascade type_id \"{other}\" (only the tree-list haar schema is supported)"
            )))
        }
    }
    if child(cascade, "stageType").is_some() || child(cascade, "featureType").is_some() {
        return Err(CascadeError::UnsupportedFeature(
            "stump-table cascade schema (stageType/featureType)".into(),
        ));
    }

    let size_text = text_of(cascade, "size")?;
    let mut size_it = size_text.split_whitespace();
    let window_w = parse_u32(size_it.next(), "size width")?;
    let window_h = parse_u32(size_it.next(), "size height")?;

    let stages_node = child(cascade, "stages")
        .ok_or_else(|| CascadeError::MalformedModel("missing <stages>".into()))?;
    let mut stages = Vec::new();
    for stage_node in stages_node.children().filter(|n| n.is_element()) {
        stages.push(parse_stage(stage_node)?);
    }
    if stages.is_empty() {
        return Err(CascadeError::MalformedModel(
            "<stages> holds no stage elements".into(),
        ));
    }

    Ok(CascadeModel {
        name: cascade.tag_name().name().to_string(),
        window_w,
        window_h,
        stages,
    })
}

fn parse_stage(node: roxmltree::Node) -> Result<Stage, CascadeError> {
    let trees_node = child(node, "trees")
        .ok_or_else(|| CascadeError::MalformedModel("stage missing <trees>".into()))?;
    let mut trees = Vec::new();
    for tree_node in trees_node.children().filter(|n| n.is_element()) {
        trees.push(parse_tree(tree_node)?);
    }
    if trees.is_empty() {
        return Err(CascadeError::MalformedModel("stage holds no trees".into()));
    }
    let threshold = parse_f64(&text_of(node, "stage_threshold")?, "stage_threshold")?;
    Ok(Stage { threshold, trees })
}

fn parse_tree(node: roxmltree::Node) -> Result<WeakTree, CascadeError> {
    let mut nodes = Vec::new();
    for tree_child in node.children().filter(|n| n.is_element()) {
        nodes.push(parse_node(tree_child)?);
    }
    if nodes.is_empty() {
        return Err(CascadeError::MalformedModel("tree holds no nodes".into()));
    }
    Ok(WeakTree { nodes })
}

fn parse_node(node: roxmltree::Node) -> Result<TreeNode, CascadeError> {
    let feature_node = child(node, "feature")
        .ok_or_else(|| CascadeError::MalformedModel("tree node missing <feature>".into()))?;
    let rects_node = child(feature_node, "rects")
        .ok_or_else(|| CascadeError::MalformedModel("feature missing <rects>".into()))?;
    let mut rects = Vec::new();
    for rect_node in rects_node.children().filter(|n| n.is_element()) {
        rects.push(parse_rect(rect_node)?);
    }
    let tilted = match child(feature_node, "tilted") {
        None => false,
        Some(t) => match t.text().map(str::trim) {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(CascadeError::MalformedModel(format!(
                    "bad <tilted> value {other:?}"
                )))
            }
        },
    };

    let split_threshold = parse_f64(&text_of(node, "threshold")?, "threshold")?;
    let left = parse_branch(node, "left_val", "left_node")?;
    let right = parse_branch(node, "right_val", "right_node")?;

    Ok(TreeNode {
        feature: HaarFeature { rects, tilted },
        split_threshold,
        left,
        right,
    })
}

fn parse_branch(
    node: roxmltree::Node,
    val_tag: &str,
    node_tag: &str,
) -> Result<Branch, CascadeError> {
    match (child(node, val_tag), child(node, node_tag)) {
        (Some(v), None) => Ok(Branch::Value(parse_f64(&node_text(v)?, val_tag)?)),
        (None, Some(n)) => {
            let index = parse_f64(&node_text(n)?, node_tag)?;
            if index < 0.0 || index.fract() != 0.0 {
                return Err(CascadeError::MalformedModel(format!(
                    "<{node_tag}> must be a non-negative integer"
                )));
            }
            Ok(Branch::Node(index as usize))
        }
        (Some(_), Some(_)) => Err(CascadeError::MalformedModel(format!(
            "tree node has both <{val_tag}> and <{node_tag}>"
        ))),
        (None, None) => Err(CascadeError::MalformedModel(format!(
            "tree node missing <{val_tag}> or <{node_tag}>"
        ))),
    }
}

fn parse_rect(node: roxmltree::Node) -> Result<WeightedRect, CascadeError> {
    let text = node_text(node)?;
    let mut it = text.split_whitespace();
    let x = parse_u32(it.next(), "rect x")?;
    let y = parse_u32(it.next(), "rect y")?;
    let w = parse_u32(it.next(), "rect w")?;
    let h = parse_u32(it.next(), "rect h")?;
    let weight = parse_f64(
        it.next()
            .ok_or_else(|| CascadeError::MalformedModel("rect missing weight".into()))?,
        "rect weight",
    )?;
    if let Some(extra) = it.next() {
        return Err(CascadeError::MalformedModel(format!(
            "rect has trailing token \"{extra}\""
        )));
    }
    Ok(WeightedRect { x, y, w, h, weight })
}

fn child<'a>(node: roxmltree::Node<'a, 'a>, tag: &str) -> Option<roxmltree::Node<'a, 'a>> {
    node.children()
        .find(|n| n.is_element() && n.tag_name().name() == tag)
}

fn node_text(node: roxmltree::Node) -> Result<String, CascadeError> {
    node.text()
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .ok_or_else(|| {
            CascadeError::MalformedModel(format!("<{}> is empty", node.tag_name().name()))
        })
}

fn text_of(node: roxmltree::Node, tag: &str) -> Result<String, CascadeError> {
    let found =
        child(node, tag).ok_or_else(|| CascadeError::MalformedModel(format!("missing <{tag}>")))?;
    node_text(found)
}

fn parse_u32(token: Option<&str>, what: &str) -> Result<u32, CascadeError> {
    token
        .and_then(|t| t.parse::<u32>().ok())
        .ok_or_else(|| CascadeError::MalformedModel(format!("bad {what}")))
}

fn parse_f64(token: &str, what: &str) -> Result<f64, CascadeError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| CascadeError::MalformedModel(format!("bad {what}: \"{token}\"")))
}
