//! Multi-scale sliding-window cascade evaluation.
//!
//! The detector scales the model's features rather than resampling the
//! image, so one set of integral tables serves every scale. The exact
//! conventions below are normative: the brute-force oracle in the test
//! suite re-implements them from this text and must agree bit for bit.
//!
//! # Scan convention
//!
//! - Scales form the ladder `s = 1, f, f^2, ...` (`f` = `scale_factor`,
//!   iterated by repeated multiplication). A ladder rung becomes a scan
//!   level when its window `(round(base_w * s), round(base_h * s))` meets
//!   `min_size` in both dimensions; rungs repeating the previous level's
//!   window dimensions are skipped, so levels strictly grow in area and
//!   each level carries the first scale that produced its dimensions. The
//!   ladder stops at the first rung whose window exceeds the image or
//!   `max_size`. All rounding is round-half-up: `floor(x + 0.5)`.
//! - The step at a level is `max(1, round(s))`.
//! - Feature rects scale as `round(coord * s)` per coordinate. Because
//!   each coordinate rounds separately, a scaled rect may poke up to a
//!   pixel past the nominal window; windows are therefore placed so that
//!   every scaled rect lookup stays inside the image: `x` runs from the
//!   level's left margin (tilted rects may reach `rx - rh` left of the
//!   origin) through `image_w - ext_w` in step increments, `y` from `0`
//!   through `image_h - ext_h`, where `ext_w`/`ext_h` cover the
//!   right/bottom-most lookup of any scaled rect, never less than the
//!   window itself. Positions iterate row-major (`y` outer, `x` inner),
//!   levels in ascending scale order.
//!
//! # Evaluation convention
//!
//! Per placed window with nominal dimensions `w x h`:
//!
//! - `area = (w * h) as f64`; `norm` is [`window_norm_factor`] over the
//!   nominal window: `sqrt(var)` of the pixel intensities, or `1` when the
//!   variance is not positive (flat window).
//! - A feature's raw value is `sum over rects of weight * rect_sum`, where
//!   `rect_sum` is the integer pixel sum of the scaled rect offset by the
//!   window origin (tilted rects via the tilted table), accumulated in
//!   rect order as `f64`.
//! - Tree descent goes left iff `raw < split_threshold * area * norm`,
//!   else right, until a leaf; the leaf values of a stage's trees are
//!   summed and the stage passes iff that sum reaches the stage threshold.
//!   A window passes the cascade iff every stage passes; a zero-stage
//!   model passes everything.
//! - [`eval_feature`] reports the normalized value `raw / (area * norm)`;
//!   descent compares on the raw side, which is the same predicate with
//!   `norm > 0` but avoids the division.

mod group;

pub use group::group_rects;

use crate::cascade::{Branch, CascadeModel, HaarFeature};
use crate::raster::{GrayImage, IntegralSet, RasterError, Rect};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("image {width}x{height} smaller than min size {min_w}x{min_h}")]
    ImageTooSmall {
        width: u32,
        height: u32,
        min_w: u32,
        min_h: u32,
    },
    #[error("bad detection config: {0}")]
    BadConfig(String),
    #[error("model base window {0}x{1} is degenerate")]
    DegenerateWindow(u32, u32),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Scan parameters. Defaults follow the deployment configuration this
/// detector was tuned for: a dense scale ladder with heavy grouping and a
/// large minimum window.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    /// Ladder ratio between scan scales, > 1.
    pub scale_factor: f64,
    /// Minimum cluster size that survives grouping; 0 keeps every cluster.
    pub min_neighbors: u32,
    /// Smallest window scanned, (w, h).
    pub min_size: (u32, u32),
    /// Optional largest window scanned, (w, h).
    pub max_size: Option<(u32, u32)>,
    /// Relative tolerance of the grouping similarity predicate.
    pub group_eps: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            scale_factor: 1.01,
            min_neighbors: 10,
            min_size: (200, 200),
            max_size: None,
            group_eps: 0.2,
        }
    }
}

impl DetectionConfig {
    fn check(&self) -> Result<(), DetectorError> {
        if !self.scale_factor.is_finite() || self.scale_factor <= 1.0 {
            return Err(DetectorError::BadConfig(format!(
                "scale_factor {} must be a finite number > 1",
                self.scale_factor
            )));
        }
        if self.group_eps.is_nan() || self.group_eps < 0.0 {
            return Err(DetectorError::BadConfig(format!(
                "group_eps {} must be >= 0",
                self.group_eps
            )));
        }
        Ok(())
    }
}

/// One grouped detection: the class-mean rectangle and how many raw
/// windows voted for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Detection {
    pub rect: Rect,
    pub neighbors: u32,
}

/// What [`detect`] returns: grouped detections plus the boolean verdict.
/// `person_found` is true exactly when `detections` is non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub detections: Vec<Detection>,
    pub person_found: bool,
}

/// One scan level of the scale ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanLevel {
    pub scale: f64,
    pub window_w: u32,
    pub window_h: u32,
    pub step: u32,
}

#[inline]
fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

/// Enumerates the scan levels for an image, per the module convention.
pub fn scan_scales(
    model: &CascadeModel,
    img_w: u32,
    img_h: u32,
    cfg: &DetectionConfig,
) -> Result<Vec<ScanLevel>, DetectorError> {
    cfg.check()?;
    if model.window_w == 0 || model.window_h == 0 {
        return Err(DetectorError::DegenerateWindow(
            model.window_w,
            model.window_h,
        ));
    }
    let (min_w, min_h) = cfg.min_size;
    if img_w < min_w || img_h < min_h {
        return Err(DetectorError::ImageTooSmall {
            width: img_w,
            height: img_h,
            min_w,
            min_h,
        });
    }

    let mut levels = Vec::new();
    let mut scale = 1.0f64;
    loop {
        let wf = f64::from(model.window_w) * scale + 0.5;
        let hf = f64::from(model.window_h) * scale + 0.5;
        if wf.floor() > f64::from(img_w) || hf.floor() > f64::from(img_h) {
            break;
        }
        let w = wf.floor() as u32;
        let h = hf.floor() as u32;
        if let Some((max_w, max_h)) = cfg.max_size {
            if w > max_w || h > max_h {
                break;
            }
        }
        if w >= min_w && h >= min_h {
            let repeat = levels
                .last()
                .is_some_and(|l: &ScanLevel| (l.window_w, l.window_h) == (w, h));
            if !repeat {
                levels.push(ScanLevel {
                    scale,
                    window_w: w,
                    window_h: h,
                    step: round_half_up(scale).max(1),
                });
            }
        }
        scale *= cfg.scale_factor;
    }
    Ok(levels)
}

/// Lighting normalization factor over a window: the standard deviation of
/// its pixels, or 1 when the variance is not positive.
pub fn window_norm_factor(integrals: &IntegralSet, window: Rect) -> Result<f64, RasterError> {
    let area = f64::from(window.w) * f64::from(window.h);
    let s1 = integrals.rect_sum(window)?;
    let s2 = integrals.sq_rect_sum(window)?;
    let mean = s1 as f64 / area;
    let var = s2 as f64 / area - mean * mean;
    Ok(if var > 0.0 { var.sqrt() } else { 1.0 })
}

/// A feature rect pre-scaled to one scan level, still window-relative.
#[derive(Debug, Clone)]
struct ScaledRect {
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    weight: f64,
}

fn scale_rects(feature: &HaarFeature, scale: f64) -> Vec<ScaledRect> {
    feature
        .rects
        .iter()
        .map(|r| ScaledRect {
            x: round_half_up(f64::from(r.x) * scale),
            y: round_half_up(f64::from(r.y) * scale),
            w: round_half_up(f64::from(r.w) * scale),
            h: round_half_up(f64::from(r.h) * scale),
            weight: r.weight,
        })
        .collect()
}

fn raw_feature_value(
    integrals: &IntegralSet,
    rects: &[ScaledRect],
    tilted: bool,
    origin_x: u32,
    origin_y: u32,
) -> Result<f64, RasterError> {
    let mut raw = 0.0f64;
    for r in rects {
        let abs = Rect::new(origin_x + r.x, origin_y + r.y, r.w, r.h);
        let sum = if tilted {
            integrals.tilted_rect_sum(abs)?
        } else {
            integrals.rect_sum(abs)?
        };
        raw += r.weight * sum as f64;
    }
    Ok(raw)
}

/// Normalized feature value at a window: `raw / (area * norm)` per the
/// module convention. `scale` scales the feature's rects; the window
/// carries the placement origin and nominal dimensions.
pub fn eval_feature(
    integrals: &IntegralSet,
    feature: &HaarFeature,
    window: Rect,
    scale: f64,
) -> Result<f64, DetectorError> {
    let area = f64::from(window.w) * f64::from(window.h);
    let norm = window_norm_factor(integrals, window)?;
    let rects = scale_rects(feature, scale);
    let raw = raw_feature_value(integrals, &rects, feature.tilted, window.x, window.y)?;
    Ok(raw / (area * norm))
}

/// Runs the full cascade at one window. Stages are evaluated in order and
/// the first failing stage rejects; a zero-stage model accepts.
pub fn eval_window(
    integrals: &IntegralSet,
    model: &CascadeModel,
    window: Rect,
    scale: f64,
) -> Result<bool, DetectorError> {
    let area = f64::from(window.w) * f64::from(window.h);
    let norm = window_norm_factor(integrals, window)?;
    for stage in &model.stages {
        let mut sum = 0.0f64;
        for tree in &stage.trees {
            let mut index = 0usize;
            let mut hops = 0usize;
            loop {
                let node = &tree.nodes[index];
                let rects = scale_rects(&node.feature, scale);
                let raw =
                    raw_feature_value(integrals, &rects, node.feature.tilted, window.x, window.y)?;
                let branch = if raw < node.split_threshold * area * norm {
                    node.left
                } else {
                    node.right
                };
                match branch {
                    Branch::Value(v) => {
                        sum += v;
                        break;
                    }
                    Branch::Node(next) => {
                        index = next;
                        hops += 1;
                        // malformed trees are a validation concern; never hang on them
                        if hops > tree.nodes.len() {
                            return Err(DetectorError::BadConfig(
                                "tree descent did not terminate; validate the model".into(),
                            ));
                        }
                    }
                }
            }
        }
        if sum < stage.threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One scan level with every feature pre-scaled and placement margins
/// resolved.
struct PreparedLevel {
    window_w: u32,
    window_h: u32,
    step: u32,
    left_margin: u32,
    ext_w: u32,
    ext_h: u32,
    stages: Vec<PreparedStage>,
}

struct PreparedStage {
    threshold: f64,
    trees: Vec<Vec<PreparedNode>>,
}

struct PreparedNode {
    rects: Vec<ScaledRect>,
    tilted: bool,
    split_threshold: f64,
    left: Branch,
    right: Branch,
}

fn prepare_level(model: &CascadeModel, level: &ScanLevel) -> PreparedLevel {
    let mut left_margin = 0u32;
    let mut ext_w = level.window_w;
    let mut ext_h = level.window_h;
    let mut stages = Vec::with_capacity(model.stages.len());
    for stage in &model.stages {
        let mut trees = Vec::with_capacity(stage.trees.len());
        for tree in &stage.trees {
            let mut nodes = Vec::with_capacity(tree.nodes.len());
            for node in &tree.nodes {
                let rects = scale_rects(&node.feature, level.scale);
                for r in &rects {
                    if node.feature.tilted {
                        left_margin = left_margin.max(r.h.saturating_sub(r.x));
                        ext_w = ext_w.max(r.x + r.w);
                        ext_h = ext_h.max(r.y + r.w + r.h);
                    } else {
                        ext_w = ext_w.max(r.x + r.w);
                        ext_h = ext_h.max(r.y + r.h);
                    }
                }
                nodes.push(PreparedNode {
                    rects,
                    tilted: node.feature.tilted,
                    split_threshold: node.split_threshold,
                    left: node.left,
                    right: node.right,
                });
            }
            trees.push(nodes);
        }
        stages.push(PreparedStage {
            threshold: stage.threshold,
            trees,
        });
    }
    PreparedLevel {
        window_w: level.window_w,
        window_h: level.window_h,
        step: level.step,
        left_margin,
        ext_w,
        ext_h,
        stages,
    }
}

fn eval_prepared(
    integrals: &IntegralSet,
    level: &PreparedLevel,
    x: u32,
    y: u32,
) -> Result<bool, DetectorError> {
    let area = f64::from(level.window_w) * f64::from(level.window_h);
    let norm = window_norm_factor(integrals, Rect::new(x, y, level.window_w, level.window_h))?;
    for stage in &level.stages {
        let mut sum = 0.0f64;
        for tree in &stage.trees {
            let mut index = 0usize;
            loop {
                let node = &tree[index];
                let raw = raw_feature_value(integrals, &node.rects, node.tilted, x, y)?;
                let branch = if raw < node.split_threshold * area * norm {
                    node.left
                } else {
                    node.right
                };
                match branch {
                    Branch::Value(v) => {
                        sum += v;
                        break;
                    }
                    Branch::Node(next) => index = next,
                }
            }
        }
        if sum < stage.threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every window the cascade accepts, ungrouped, in deterministic
/// row-major, scale-ascending order.
pub fn detect_raw(
    img: &GrayImage,
    model: &CascadeModel,
    cfg: &DetectionConfig,
) -> Result<Vec<Rect>, DetectorError> {
    let levels = scan_scales(model, img.width(), img.height(), cfg)?;
    let integrals = IntegralSet::build(img);
    let mut hits = Vec::new();
    for level in &levels {
        let prepared = prepare_level(model, level);
        if prepared.ext_w > img.width()
            || prepared.ext_h > img.height()
            || prepared.left_margin + prepared.ext_w > img.width()
        {
            continue;
        }
        let max_x = img.width() - prepared.ext_w;
        let max_y = img.height() - prepared.ext_h;
        let mut y = 0u32;
        while y <= max_y {
            let mut x = prepared.left_margin;
            while x <= max_x {
                if eval_prepared(&integrals, &prepared, x, y)? {
                    hits.push(Rect::new(x, y, prepared.window_w, prepared.window_h));
                }
                x += prepared.step;
            }
            y += prepared.step;
        }
    }
    Ok(hits)
}

/// Full detection: raw scan, grouping, boolean verdict.
pub fn detect(
    img: &GrayImage,
    model: &CascadeModel,
    cfg: &DetectionConfig,
) -> Result<DetectionResult, DetectorError> {
    let raw = detect_raw(img, model, cfg)?;
    let detections = group_rects(&raw, cfg.min_neighbors, cfg.group_eps);
    Ok(DetectionResult {
        person_found: !detections.is_empty(),
        detections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::load_synthetic_cascade;

    fn always_pass(window: u32) -> CascadeModel {
        let text = format!(
            "window {window} {window}\nstage -1e9\nstump 0 0 {window} {window} -1 0 0 {window} {half} 2 0 1 1\n",
            half = window / 2
        );
        load_synthetic_cascade(&text).unwrap()
    }

    fn always_reject(window: u32) -> CascadeModel {
        let text = format!(
            "window {window} {window}\nstage 1e9\nstump 0 0 {window} {window} -1 0 0 {window} {half} 2 0 1 1\n",
            half = window / 2
        );
        load_synthetic_cascade(&text).unwrap()
    }

    fn cfg(min: u32) -> DetectionConfig {
        DetectionConfig {
            scale_factor: 2.0,
            min_neighbors: 0,
            min_size: (min, min),
            max_size: None,
            group_eps: 0.2,
        }
    }

    #[test]
    fn ladder_doubles_until_image_edge() {
        let model = always_pass(10);
        let levels = scan_scales(&model, 45, 45, &cfg(10)).unwrap();
        let dims: Vec<u32> = levels.iter().map(|l| l.window_w).collect();
        assert_eq!(dims, vec![10, 20, 40]);
        assert_eq!(levels[2].step, 4);
    }

    #[test]
    fn image_below_min_size_is_an_error() {
        let model = always_pass(10);
        let err = scan_scales(&model, 100, 100, &DetectionConfig::default()).unwrap_err();
        assert!(matches!(err, DetectorError::ImageTooSmall { .. }));
    }

    #[test]
    fn ladder_skips_repeated_dimensions() {
        let model = always_pass(22);
        let slow = DetectionConfig {
            scale_factor: 1.01,
            min_size: (22, 22),
            ..DetectionConfig::default()
        };
        let levels = scan_scales(&model, 100, 100, &slow).unwrap();
        for pair in levels.windows(2) {
            assert!(
                pair[1].window_w * pair[1].window_h > pair[0].window_w * pair[0].window_h,
                "areas must strictly increase"
            );
        }
    }

    #[test]
    fn max_size_caps_the_ladder() {
        let model = always_pass(10);
        let capped = DetectionConfig {
            max_size: Some((25, 25)),
            ..cfg(10)
        };
        let levels = scan_scales(&model, 200, 200, &capped).unwrap();
        let dims: Vec<u32> = levels.iter().map(|l| l.window_w).collect();
        assert_eq!(dims, vec![10, 20]);
    }

    #[test]
    fn norm_factor_flat_window_falls_back_to_one() {
        let img = GrayImage::filled(8, 8, 77).unwrap();
        let set = IntegralSet::build(&img);
        let norm = window_norm_factor(&set, Rect::new(1, 1, 4, 4)).unwrap();
        assert_eq!(norm, 1.0);
    }

    #[test]
    fn norm_factor_two_pixel_window() {
        let img = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        let set = IntegralSet::build(&img);
        let norm = window_norm_factor(&set, Rect::new(0, 0, 2, 1)).unwrap();
        assert_eq!(norm, 127.5);
    }

    #[test]
    fn norm_factor_checkerboard() {
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let set = IntegralSet::build(&img);
        let norm = window_norm_factor(&set, Rect::new(0, 0, 2, 2)).unwrap();
        assert_eq!(norm, 127.5);
    }

    #[test]
    fn eval_feature_zero_on_zero_image() {
        let img = GrayImage::filled(8, 8, 0).unwrap();
        let set = IntegralSet::build(&img);
        let model = always_pass(8);
        let feature = &model.stages[0].trees[0].nodes[0].feature;
        let v = eval_feature(&set, feature, Rect::new(0, 0, 8, 8), 1.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn eval_feature_balances_on_constant_image() {
        // weights (-1, +2), rect2 covers half of rect1
        let img = GrayImage::filled(8, 8, 123).unwrap();
        let set = IntegralSet::build(&img);
        let model = always_pass(8);
        let feature = &model.stages[0].trees[0].nodes[0].feature;
        let v = eval_feature(&set, feature, Rect::new(0, 0, 8, 8), 1.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn eval_window_synthetic_extremes() {
        let img = GrayImage::filled(16, 16, 40).unwrap();
        let set = IntegralSet::build(&img);
        let pass = always_pass(8);
        let reject = always_reject(8);
        let window = Rect::new(2, 3, 8, 8);
        assert!(eval_window(&set, &pass, window, 1.0).unwrap());
        assert!(!eval_window(&set, &reject, window, 1.0).unwrap());
    }

    #[test]
    fn zero_stage_model_accepts() {
        let model = load_synthetic_cascade("window 4 4\n").unwrap();
        let img = GrayImage::filled(8, 8, 9).unwrap();
        let set = IntegralSet::build(&img);
        assert!(eval_window(&set, &model, Rect::new(0, 0, 4, 4), 1.0).unwrap());
    }

    #[test]
    fn two_stage_hand_computed_sums() {
        // 4x4 window: top half 200, bottom half 40.
        // s1 = 1920, s2 = 332800, mean = 120, var = 6400, norm = 80.
        let mut pixels = vec![200u8; 8];
        pixels.extend_from_slice(&[40; 8]);
        let img = GrayImage::new(4, 4, pixels).unwrap();
        let set = IntegralSet::build(&img);

        // stage 1: stump A raw = -1920 + 2*1600 = 1280, split 0.5*16*80 = 640
        //   -> right leaf +1
        //          stump B raw = -1920 + 2*960 = 0, split 0.25*16*80 = 320
        //   -> left leaf -0.5; stage sum 0.5 >= 0.3 passes
        // stage 2: stump C raw = -1920 + 2*320 = -1280 < 0 -> left leaf 0.2,
        //   stage sum 0.2 < 0.5 fails
        let text = "window 4 4\n\
                    stage 0.3\n\
                    stump 0 0 4 4 -1 0 0 4 2 2 0.5 -1 1\n\
                    stump 0 0 4 4 -1 0 0 2 4 2 0.25 -0.5 0.5\n\
                    stage 0.5\n\
                    stump 0 0 4 4 -1 0 2 4 2 2 0 0.2 1\n";
        let model = load_synthetic_cascade(text).unwrap();
        let window = Rect::new(0, 0, 4, 4);
        assert!(!eval_window(&set, &model, window, 1.0).unwrap());

        // identical cascade with a reachable stage-2 threshold passes
        let relaxed = text.replace("stage 0.5", "stage 0.1");
        let model = load_synthetic_cascade(&relaxed).unwrap();
        assert!(eval_window(&set, &model, window, 1.0).unwrap());

        // the normalized feature values behind those sums
        let f_a = &model.stages[0].trees[0].nodes[0].feature;
        let f_c = &model.stages[1].trees[0].nodes[0].feature;
        assert_eq!(eval_feature(&set, f_a, window, 1.0).unwrap(), 1.0);
        assert_eq!(eval_feature(&set, f_c, window, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn detect_raw_counts_every_position() {
        // 10x10 image, 4x4 always-pass window, single scale, step 1
        let img = GrayImage::filled(10, 10, 0).unwrap();
        let model = always_pass(4);
        let single = DetectionConfig {
            scale_factor: 10.0,
            min_neighbors: 0,
            min_size: (4, 4),
            max_size: None,
            group_eps: 0.2,
        };
        let hits = detect_raw(&img, &model, &single).unwrap();
        assert_eq!(hits.len(), 49);
        assert_eq!(hits[0], Rect::new(0, 0, 4, 4));
        assert_eq!(hits[48], Rect::new(6, 6, 4, 4));
    }

    #[test]
    fn detect_boolean_contract() {
        let img = GrayImage::filled(12, 12, 0).unwrap();
        let pass = always_pass(4);
        let reject = always_reject(4);
        let result = detect(&img, &pass, &cfg(4)).unwrap();
        assert!(result.person_found);
        assert!(!result.detections.is_empty());
        let result = detect(&img, &reject, &cfg(4)).unwrap();
        assert!(!result.person_found);
        assert!(result.detections.is_empty());
    }

    #[test]
    fn bad_configs_rejected_up_front() {
        let model = always_pass(4);
        for scale_factor in [1.0, 0.5, f64::NAN, f64::INFINITY] {
            let bad = DetectionConfig {
                scale_factor,
                ..cfg(4)
            };
            assert!(
                matches!(
                    scan_scales(&model, 64, 64, &bad),
                    Err(DetectorError::BadConfig(_))
                ),
                "scale_factor {scale_factor} accepted"
            );
        }
        let bad = DetectionConfig {
            group_eps: -0.1,
            ..cfg(4)
        };
        assert!(matches!(
            scan_scales(&model, 64, 64, &bad),
            Err(DetectorError::BadConfig(_))
        ));
        let degenerate = load_synthetic_cascade("window 0 4\n").unwrap();
        assert!(matches!(
            scan_scales(&degenerate, 64, 64, &cfg(4)),
            Err(DetectorError::DegenerateWindow(0, 4))
        ));
    }
}
