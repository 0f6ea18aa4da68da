//! Two-phase batch evaluation of a detector over labeled corpora.
//!
//! Phase 1 classifies isolated pictures: a positive directory (pictures
//! with people) and a negative directory (pictures without), producing a
//! confusion matrix. An override list forces named pictures to count as
//! negative regardless of detector output, for the manual-review case
//! where the detector drew its box around the wrong thing; an override can
//! only move a picture toward the negative row (TP to FN, FP to TN).
//!
//! Phase 2 treats each directory as one motion sequence: every frame is
//! classified, the sequence collapses under the k-of-n rule, and the
//! sequence-level verdict is scored against a labels file. Per-sequence
//! report rows carry frame counts and detection percentages.
//!
//! Percentages everywhere are rendered by [`format_percent`]: value times
//! 100, rounded half up to exactly two decimals, dot separator, trailing
//! `%`, computed in integer arithmetic so the strings are reproducible.

mod report;

pub use report::{write_phase1_report, write_phase2_report};

use crate::cascade::CascadeModel;
use crate::detector::{detect, DetectionConfig, DetectorError};
use crate::raster::{annotate_gray, decode_image, encode_ppm, RasterError};
use crate::sequence::{classify_sequence, AggregationPolicy};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),
    #[error("sequence {0} has no entry in the labels file")]
    MissingLabel(String),
    #[error("labels file: {0}")]
    BadLabels(String),
    #[error("override list: {0}")]
    BadOverrides(String),
    #[error("override names picture {0}, which is not in the evaluated set")]
    UnknownOverride(String),
    #[error("division by zero in percentage")]
    DivisionByZero,
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
}

/// `numerator/denominator` as a percentage string with two half-up
/// decimals, e.g. `57/64` renders as `"89.06%"`.
pub fn format_percent(numerator: u64, denominator: u64) -> Result<String, EvalError> {
    if denominator == 0 {
        return Err(EvalError::DivisionByZero);
    }
    let scaled = (20_000 * numerator + denominator) / (2 * denominator);
    Ok(format!("{}.{:02}%", scaled / 100, scaled % 100))
}

/// Outcome of scoring one labeled item against the detector verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    TrueNegative,
    FalseNegative,
}

impl Outcome {
    pub fn of(labeled_positive: bool, predicted_positive: bool) -> Outcome {
        match (labeled_positive, predicted_positive) {
            (true, true) => Outcome::TruePositive,
            (true, false) => Outcome::FalseNegative,
            (false, true) => Outcome::FalsePositive,
            (false, false) => Outcome::TrueNegative,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::TruePositive => "TP",
            Outcome::FalsePositive => "FP",
            Outcome::TrueNegative => "TN",
            Outcome::FalseNegative => "FN",
        })
    }
}

/// Counts of the four outcomes plus the labeled totals they must add up
/// to: `tp + fn = positives_total`, `tn + fp = negatives_total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_positives: u32,
    pub false_positives: u32,
    pub true_negatives: u32,
    pub false_negatives: u32,
    pub positives_total: u32,
    pub negatives_total: u32,
}

impl ConfusionMatrix {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TruePositive => {
                self.true_positives += 1;
                self.positives_total += 1;
            }
            Outcome::FalseNegative => {
                self.false_negatives += 1;
                self.positives_total += 1;
            }
            Outcome::FalsePositive => {
                self.false_positives += 1;
                self.negatives_total += 1;
            }
            Outcome::TrueNegative => {
                self.true_negatives += 1;
                self.negatives_total += 1;
            }
        }
    }

    /// Builds a matrix from raw counts, deriving the totals.
    pub fn from_counts(tp: u32, fp: u32, tn: u32, fn_count: u32) -> ConfusionMatrix {
        ConfusionMatrix {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_count,
            positives_total: tp + fn_count,
            negatives_total: tn + fp,
        }
    }

    /// Percentage strings in (tp, fp, tn, fn) order: outcome over its
    /// labeled total.
    pub fn rates(&self) -> Result<[String; 4], EvalError> {
        Ok([
            format_percent(self.true_positives.into(), self.positives_total.into())?,
            format_percent(self.false_positives.into(), self.negatives_total.into())?,
            format_percent(self.true_negatives.into(), self.negatives_total.into())?,
            format_percent(self.false_negatives.into(), self.positives_total.into())?,
        ])
    }

    pub fn is_conserved(&self) -> bool {
        self.true_positives + self.false_negatives == self.positives_total
            && self.true_negatives + self.false_positives == self.negatives_total
    }
}

/// Pictures forced to count negative after manual review, with reasons.
#[derive(Debug, Clone, Default)]
pub struct OverrideList {
    entries: Vec<(String, String)>,
}

impl OverrideList {
    pub fn empty() -> OverrideList {
        OverrideList::default()
    }

    /// Parses `path,reason` lines; blank lines and `#` comments skipped.
    /// Entries match pictures by file name.
    pub fn parse(text: &str) -> Result<OverrideList, EvalError> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (path, reason) = line.split_once(',').ok_or_else(|| {
                EvalError::BadOverrides(format!("line {}: expected \"path,reason\"", lineno + 1))
            })?;
            let name = Path::new(path.trim())
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| {
                    EvalError::BadOverrides(format!("line {}: empty path", lineno + 1))
                })?;
            entries.push((name, reason.trim().to_string()));
        }
        Ok(OverrideList { entries })
    }

    pub fn push(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.entries.push((name.into(), reason.into()));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn contains(&self, file_name: &str) -> bool {
        self.entries.iter().any(|(name, _)| name == file_name)
    }

    fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(name, _)| name.as_str())
    }
}

/// Per-picture record from phase 1.
#[derive(Debug, Clone)]
pub struct PictureResult {
    pub name: String,
    pub labeled_positive: bool,
    pub detector_positive: bool,
    pub overridden: bool,
    pub outcome: Outcome,
}

/// Everything phase 1 produces.
#[derive(Debug)]
pub struct Phase1Outcome {
    pub matrix: ConfusionMatrix,
    pub pictures: Vec<PictureResult>,
    /// Undecodable files, with the reason each was skipped.
    pub skipped: Vec<(PathBuf, String)>,
    /// Annotated copies written (positive detections only).
    pub annotated: Vec<PathBuf>,
}

/// Per-picture classification over a positive and a negative directory.
/// Pictures named by `overrides` count as negative regardless of the
/// detector; when `annotate_dir` is given, every picture with detections
/// gets an annotated PPM copy there.
pub fn run_phase1(
    pos_dir: &Path,
    neg_dir: &Path,
    model: &CascadeModel,
    config: &DetectionConfig,
    overrides: &OverrideList,
    annotate_dir: Option<&Path>,
) -> Result<Phase1Outcome, EvalError> {
    let mut matrix = ConfusionMatrix::default();
    let mut pictures = Vec::new();
    let mut skipped = Vec::new();
    let mut annotated = Vec::new();

    if let Some(dir) = annotate_dir {
        std::fs::create_dir_all(dir)?;
    }

    for (dir, labeled_positive) in [(pos_dir, true), (neg_dir, false)] {
        let mut evaluated = 0u32;
        for path in image_files(dir)? {
            let name = file_name(&path);
            let bytes = std::fs::read(&path)?;
            let img = match decode_image(&bytes, None) {
                Ok(img) => img,
                Err(e @ (RasterError::CorruptImage(_) | RasterError::UnsupportedMedia(_))) => {
                    skipped.push((path.clone(), e.to_string()));
                    continue;
                }
                Err(other) => {
                    skipped.push((path.clone(), other.to_string()));
                    continue;
                }
            };
            let result = detect(&img, model, config)?;
            evaluated += 1;

            if result.person_found {
                if let Some(dir) = annotate_dir {
                    let rects: Vec<_> = result.detections.iter().map(|d| d.rect).collect();
                    let out = annotate_gray(&img, &rects).map_err(DetectorError::Raster)?;
                    let target = dir.join(format!("{name}.ppm"));
                    std::fs::write(&target, encode_ppm(&out))?;
                    annotated.push(target);
                }
            }

            let overridden = result.person_found && overrides.contains(&name);
            let predicted = result.person_found && !overridden;
            let outcome = Outcome::of(labeled_positive, predicted);
            matrix.record(outcome);
            pictures.push(PictureResult {
                name,
                labeled_positive,
                detector_positive: result.person_found,
                overridden,
                outcome,
            });
        }
        if evaluated == 0 {
            return Err(EvalError::EmptyCorpus(format!(
                "no decodable pictures in {}",
                dir.display()
            )));
        }
    }

    for name in overrides.names() {
        if !pictures.iter().any(|p| p.name == name) {
            return Err(EvalError::UnknownOverride(name.to_string()));
        }
    }

    Ok(Phase1Outcome {
        matrix,
        pictures,
        skipped,
        annotated,
    })
}

/// One sequence's line in the phase-2 report.
#[derive(Debug, Clone)]
pub struct SequenceReportRow {
    pub name: String,
    pub has_people: bool,
    pub total_pictures: u32,
    pub identified_pictures: u32,
    /// identified/total, formatted by [`format_percent`].
    pub detection_percent: String,
    pub result: Outcome,
}

/// Everything phase 2 produces. Rows are sorted by sequence name.
#[derive(Debug)]
pub struct Phase2Outcome {
    pub matrix: ConfusionMatrix,
    pub rows: Vec<SequenceReportRow>,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Labels for phase 2: sequence directory name to has-people.
#[derive(Debug, Clone, Default)]
pub struct Labels {
    map: BTreeMap<String, bool>,
}

impl Labels {
    /// Parses `name,yes|no` lines; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<Labels, EvalError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once(',').ok_or_else(|| {
                EvalError::BadLabels(format!("line {}: expected \"name,yes|no\"", lineno + 1))
            })?;
            let has_people = match value.trim() {
                "yes" => true,
                "no" => false,
                other => {
                    return Err(EvalError::BadLabels(format!(
                        "line {}: expected yes or no, got \"{other}\"",
                        lineno + 1
                    )))
                }
            };
            map.insert(name.trim().to_string(), has_people);
        }
        Ok(Labels { map })
    }

    pub fn insert(&mut self, name: impl Into<String>, has_people: bool) {
        self.map.insert(name.into(), has_people);
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.map.get(name).copied()
    }
}

/// Sequence-level classification: every subdirectory of `sequences_dir` is
/// one motion sequence, scored as a unit under the aggregation policy.
pub fn run_phase2(
    sequences_dir: &Path,
    labels: &Labels,
    model: &CascadeModel,
    config: &DetectionConfig,
    policy: &AggregationPolicy,
) -> Result<Phase2Outcome, EvalError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(sequences_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();

    let mut matrix = ConfusionMatrix::default();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for dir in dirs {
        let name = file_name(&dir);
        let has_people = labels
            .get(&name)
            .ok_or_else(|| EvalError::MissingLabel(name.clone()))?;

        let mut frame_results = Vec::new();
        for path in image_files(&dir)? {
            let bytes = std::fs::read(&path)?;
            let img = match decode_image(&bytes, None) {
                Ok(img) => img,
                Err(e) => {
                    skipped.push((path.clone(), e.to_string()));
                    continue;
                }
            };
            frame_results.push(detect(&img, model, config)?.person_found);
        }
        if frame_results.is_empty() {
            skipped.push((dir.clone(), "no decodable frames".into()));
            continue;
        }

        let identified = frame_results.iter().filter(|&&p| p).count() as u32;
        let total = frame_results.len() as u32;
        let predicted = classify_sequence(&frame_results, policy).expect("non-empty frame results");
        let outcome = Outcome::of(has_people, predicted);
        matrix.record(outcome);
        rows.push(SequenceReportRow {
            name,
            has_people,
            total_pictures: total,
            identified_pictures: identified,
            detection_percent: format_percent(identified.into(), total.into())?,
            result: outcome,
        });
    }

    if rows.is_empty() {
        return Err(EvalError::EmptyCorpus(format!(
            "no sequences under {}",
            sequences_dir.display()
        )));
    }
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Phase2Outcome {
        matrix,
        rows,
        skipped,
    })
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
