//! Deterministic CSV reports. Identical inputs produce identical bytes:
//! rows arrive pre-sorted, there are no timestamps, and all percentages
//! come from the integer formatter.

use super::{ConfusionMatrix, EvalError, SequenceReportRow};
use std::path::{Path, PathBuf};

fn matrix_csv(model_name: &str, matrix: &ConfusionMatrix) -> Result<String, EvalError> {
    let [tp_pct, fp_pct, tn_pct, fn_pct] = matrix.rates()?;
    Ok(format!(
        "model,tp,fp,tn,fn,tp_pct,fp_pct,tn_pct,fn_pct\n{},{},{},{},{},{},{},{},{}\n",
        model_name,
        matrix.true_positives,
        matrix.false_positives,
        matrix.true_negatives,
        matrix.false_negatives,
        tp_pct,
        fp_pct,
        tn_pct,
        fn_pct
    ))
}

/// Writes `matrix.csv` under `out_dir` and returns its path.
pub fn write_phase1_report(
    matrix: &ConfusionMatrix,
    model_name: &str,
    out_dir: &Path,
) -> Result<PathBuf, EvalError> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("matrix.csv");
    std::fs::write(&path, matrix_csv(model_name, matrix)?)?;
    Ok(path)
}

/// Writes `sequences.csv` and `matrix.csv` under `out_dir` and returns
/// their paths.
pub fn write_phase2_report(
    matrix: &ConfusionMatrix,
    rows: &[SequenceReportRow],
    model_name: &str,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), EvalError> {
    std::fs::create_dir_all(out_dir)?;

    let mut csv = String::from("name,has_people,total_pictures,identified,detection_pct,result\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.name,
            if row.has_people { "yes" } else { "no" },
            row.total_pictures,
            row.identified_pictures,
            row.detection_percent,
            row.result
        ));
    }
    let rows_path = out_dir.join("sequences.csv");
    std::fs::write(&rows_path, csv)?;

    let matrix_path = out_dir.join("matrix.csv");
    std::fs::write(&matrix_path, matrix_csv(model_name, matrix)?)?;
    Ok((rows_path, matrix_path))
}
