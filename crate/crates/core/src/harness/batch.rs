//! Batch runs over a corpus directory and the evaluation metric.
//!
//! Corpus layout: `<dir>/meshes/*.{obj,off,stl}` plus
//! `<dir>/annotations/<id>.json`. Objects run in parallel; the summary is a
//! serial fold in object order, so results do not depend on worker count.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::PipelineConfig;
use crate::harness::corpus::Annotation;
use crate::harness::pipeline::{run_pipeline, RunOptions};
use crate::harness::report::Report;
use crate::parallel::map_ordered;

/// §V-B style functional-pose check: the predicted up axis must align with
/// the annotated one (1 - dot <= 0.01) and the center-of-mass height must
/// match within a centimeter. Both clauses inclusive.
pub fn evaluate_prediction(
    up_pred: &[f64; 3],
    com_height_pred: f64,
    ann: &Annotation,
) -> Result<bool> {
    if !ann.sittable {
        return Err(Error::invalid(
            "functional-pose evaluation needs a sittable annotation",
        ));
    }
    let v = nalgebra::Vector3::new(up_pred[0], up_pred[1], up_pred[2]);
    let dot_deficit = 1.0 - v.dot(&ann.up());
    let height_err = (com_height_pred - ann.com_height).abs();
    Ok(dot_deficit <= 0.01 && height_err <= 0.01)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TruePositive,
    TrueNegative,
    FalsePositive,
    FalseNegative,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectOutcome {
    pub object_id: String,
    pub sittable: bool,
    pub classified_chair: bool,
    pub pose_correct: Option<bool>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub objects: Vec<ObjectOutcome>,
}

/// Mesh files of a corpus, sorted by object id for determinism.
pub fn corpus_meshes(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let meshes = dir.join("meshes");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&meshes)
        .map_err(|e| Error::Load(format!("{}: {e}", meshes.display())))?
    {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        if ["obj", "off", "stl"].contains(&ext.as_str()) {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("object")
                .to_string();
            out.push((id, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_annotation(dir: &Path, object_id: &str) -> Result<Annotation> {
    let path = dir.join("annotations").join(format!("{object_id}.json"));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
    let ann: Annotation = serde_json::from_str(&text)?;
    ann.validate()?;
    Ok(ann)
}

/// Runs the pipeline over every mesh in the corpus; reports are returned in
/// object-id order and optionally written to `out_dir/<id>.report.json`.
pub fn batch_run(
    corpus: &Path,
    cfg: &PipelineConfig,
    options: &RunOptions,
    out_dir: Option<&Path>,
) -> Result<Vec<Report>> {
    let jobs = corpus_meshes(corpus)?;
    if jobs.is_empty() {
        return Err(Error::Load(format!(
            "no meshes found under {}",
            corpus.join("meshes").display()
        )));
    }
    let reports = map_ordered(options.execution, jobs, |(id, path)| {
        run_pipeline(&path, &id, cfg, options)
    });
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for r in &reports {
            std::fs::write(
                dir.join(format!("{}.report.json", r.object_id)),
                r.to_json()?,
            )?;
        }
    }
    Ok(reports)
}

/// Batch run plus the evaluation metric against annotations. Objects with
/// missing annotations are skipped with a warning on stderr.
pub fn batch_evaluate(
    corpus: &Path,
    cfg: &PipelineConfig,
    options: &RunOptions,
    out_dir: Option<&Path>,
) -> Result<(Vec<Report>, BatchSummary)> {
    let reports = batch_run(corpus, cfg, options, out_dir)?;
    let mut annotated = Vec::with_capacity(reports.len());
    for r in &reports {
        match load_annotation(corpus, &r.object_id) {
            Ok(ann) => annotated.push((r.clone(), ann)),
            Err(e) => eprintln!("warning: skipping {}: {e}", r.object_id),
        }
    }
    let summary = summarize(&annotated)?;
    if let Some(dir) = out_dir {
        std::fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary)?,
        )?;
    }
    Ok((reports, summary))
}

/// The counting rule: a non-chair classified as a chair is a false
/// positive; a chair classified as a non-chair, or with an incorrect
/// functional-pose prediction, is a false negative.
pub fn summarize(pairs: &[(Report, Annotation)]) -> Result<BatchSummary> {
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let mut objects = Vec::with_capacity(pairs.len());
    for (report, ann) in pairs {
        let classified_chair = report.is_chair.unwrap_or(false);
        let mut pose_correct = None;
        let outcome = if ann.sittable {
            if classified_chair {
                let ok = match (&report.functional_up_file, report.functional_com_height) {
                    (Some(up), Some(h)) => evaluate_prediction(up, h, ann)?,
                    _ => false,
                };
                pose_correct = Some(ok);
                if ok {
                    tp += 1;
                    Outcome::TruePositive
                } else {
                    fn_ += 1;
                    Outcome::FalseNegative
                }
            } else {
                fn_ += 1;
                Outcome::FalseNegative
            }
        } else if classified_chair {
            fp += 1;
            Outcome::FalsePositive
        } else {
            tn += 1;
            Outcome::TrueNegative
        };
        objects.push(ObjectOutcome {
            object_id: report.object_id.clone(),
            sittable: ann.sittable,
            classified_chair,
            pose_correct,
            outcome,
        });
    }
    let total = pairs.len();
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Ok(BatchSummary {
        total,
        true_positives: tp,
        true_negatives: tn,
        false_positives: fp,
        false_negatives: fn_,
        accuracy: ratio(tp + tn, total),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        objects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::ANNOTATION_SCHEMA;
    use crate::harness::report::{Report, ReportFlags};

    fn annotation(id: &str, sittable: bool) -> Annotation {
        Annotation {
            schema: ANNOTATION_SCHEMA.into(),
            object_id: id.into(),
            kind: "test".into(),
            sittable,
            up_axis: [0.0, 0.0, 1.0],
            com_height: 0.3,
        }
    }

    fn report(id: &str, chair: bool, up: Option<[f64; 3]>, h: Option<f64>) -> Report {
        let cfg = PipelineConfig::default();
        Report {
            schema: "report/v1".into(),
            object_id: id.into(),
            status: "ok".into(),
            is_chair: Some(chair),
            quality: Some(1.0),
            correct_count: Some(5),
            functional_pose: None,
            functional_up_file: up,
            functional_com_height: h,
            applied_orientation: None,
            agent_scale: Some(1.0),
            stable_poses: Vec::new(),
            trials: None,
            flags: ReportFlags::default(),
            timings: None,
            config_hash: cfg.hash(),
            config: cfg,
        }
    }

    #[test]
    fn prediction_tolerances() {
        let ann = annotation("a", true);
        // Exact match.
        assert!(evaluate_prediction(&[0.0, 0.0, 1.0], 0.3, &ann).unwrap());
        // 10 degrees off: 1 - cos(10deg) ~ 0.0152 > 0.01.
        let t = 10f64.to_radians();
        assert!(!evaluate_prediction(&[t.sin(), 0.0, t.cos()], 0.3, &ann).unwrap());
        // Height off by 2 cm.
        assert!(!evaluate_prediction(&[0.0, 0.0, 1.0], 0.32, &ann).unwrap());
        // Just inside / outside the height tolerance.
        assert!(evaluate_prediction(&[0.0, 0.0, 1.0], 0.3 + 0.0099, &ann).unwrap());
        assert!(!evaluate_prediction(&[0.0, 0.0, 1.0], 0.3 + 0.0101, &ann).unwrap());
        // Non-sittable annotation is an error.
        assert!(evaluate_prediction(&[0.0, 0.0, 1.0], 0.3, &annotation("b", false)).is_err());
    }

    #[test]
    fn counting_rule_arithmetic() {
        // 10 chairs: 9 classified with correct pose, 1 with a wrong pose.
        // 10 non-chairs: 9 rejected, 1 accepted.
        let mut pairs = Vec::new();
        for i in 0..9 {
            pairs.push((
                report(&format!("c{i}"), true, Some([0.0, 0.0, 1.0]), Some(0.3)),
                annotation(&format!("c{i}"), true),
            ));
        }
        pairs.push((
            report("c9", true, Some([1.0, 0.0, 0.0]), Some(0.3)),
            annotation("c9", true),
        ));
        for i in 0..9 {
            pairs.push((
                report(&format!("n{i}"), false, None, None),
                annotation(&format!("n{i}"), false),
            ));
        }
        pairs.push((report("n9", true, None, None), annotation("n9", false)));

        let s = summarize(&pairs).unwrap();
        assert_eq!(
            (s.true_positives, s.false_negatives, s.false_positives, s.true_negatives),
            (9, 1, 1, 9)
        );
        assert!((s.precision - 0.9).abs() < 1e-12);
        assert!((s.recall - 0.9).abs() < 1e-12);
        assert!((s.accuracy - 0.9).abs() < 1e-12);
    }

    #[test]
    fn perfect_corpus_has_unit_metrics() {
        let pairs = vec![
            (
                report("c0", true, Some([0.0, 0.0, 1.0]), Some(0.3)),
                annotation("c0", true),
            ),
            (report("n0", false, None, None), annotation("n0", false)),
        ];
        let s = summarize(&pairs).unwrap();
        assert_eq!((s.precision, s.recall, s.accuracy), (1.0, 1.0, 1.0));
    }

    #[test]
    fn chair_with_wrong_pose_is_a_false_negative() {
        let pairs = vec![(
            report("c", true, Some([1.0, 0.0, 0.0]), Some(0.3)),
            annotation("c", true),
        )];
        let s = summarize(&pairs).unwrap();
        assert_eq!(s.false_negatives, 1);
        assert_eq!(s.objects[0].outcome, Outcome::FalseNegative);
        assert_eq!(s.objects[0].pose_correct, Some(false));
    }
}
