//! Per-stable-pose aggregation over the trial sweep, candidate selection,
//! sitting quality, and the chair decision.

use crate::agent::AgentModel;
use crate::error::Result;
use crate::imagination::{
    sitting_trial, DetectionThresholds, ImaginationConfig, PreparedObject, StablePose, TrialResult,
};
use crate::parallel::map_ordered;
use crate::se3::Pose;

/// Aggregate of the full trial sweep for one stable pose.
#[derive(Clone, Debug)]
pub struct PoseScore {
    pub stable_index: usize,
    /// Number of correct sittings (N).
    pub correct_count: usize,
    /// Means over the correct trials only; zero when there are none.
    pub mean_height: f64,
    pub mean_joint_score: f64,
    pub mean_link_score: f64,
    pub trials: Vec<TrialResult>,
}

impl PoseScore {
    /// Candidate selection key: N * mean height.
    pub fn selection_key(&self) -> f64 {
        self.correct_count as f64 * self.mean_height
    }
}

/// Runs the full sweep (`yaw_steps` yaws times `slot_count` slots) for one
/// stable pose. Failed trials count as incorrect; the sweep never errors.
pub fn evaluate_stable_pose(
    object: &PreparedObject,
    stable: &StablePose,
    stable_index: usize,
    agent: &AgentModel,
    cfg: &ImaginationConfig,
) -> PoseScore {
    let yaw_delta = 2.0 * std::f64::consts::PI / cfg.yaw_steps.max(1) as f64;
    let mut jobs = Vec::with_capacity(cfg.yaw_steps * cfg.slot_count);
    for yi in 0..cfg.yaw_steps {
        for slot in 0..cfg.slot_count {
            jobs.push((yi as f64 * yaw_delta, slot));
        }
    }

    let trials: Vec<TrialResult> = map_ordered(cfg.execution, jobs, |(yaw, slot)| {
        sitting_trial(object, stable, yaw, slot, agent, cfg).unwrap_or(TrialResult {
            joint_score: f64::INFINITY,
            link_score: f64::INFINITY,
            sitting_height: 0.0,
            contacts: Default::default(),
            yaw,
            slot,
            l_sit: 0.0,
            correct: false,
            failed: true,
            steps: 0,
            band_scale: agent.scale,
        })
    });

    aggregate(stable_index, trials)
}

fn aggregate(stable_index: usize, trials: Vec<TrialResult>) -> PoseScore {
    let correct: Vec<&TrialResult> = trials.iter().filter(|t| t.correct).collect();
    let n = correct.len();
    let mean = |f: fn(&TrialResult) -> f64| -> f64 {
        if n == 0 {
            0.0
        } else {
            correct.iter().map(|t| f(t)).sum::<f64>() / n as f64
        }
    };
    PoseScore {
        stable_index,
        correct_count: n,
        mean_height: mean(|t| t.sitting_height),
        mean_joint_score: mean(|t| t.joint_score),
        mean_link_score: mean(|t| t.link_score),
        trials,
    }
}

/// Index of the candidate functional pose: the largest N * mean height,
/// ties broken by larger N, then first in input order. `None` on empty
/// input (no stable poses: classified non-chair with zero quality).
pub fn select_candidate(scores: &[PoseScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                let kb = scores[b].selection_key();
                let ki = s.selection_key();
                if ki > kb || (ki == kb && s.correct_count > scores[b].correct_count) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Sitting quality S = N * H^2 / (J * L); zero when no trial was correct,
/// infinite when a perfect match drives J * L to zero.
pub fn sitting_quality(score: &PoseScore) -> f64 {
    if score.correct_count == 0 {
        return 0.0;
    }
    let denom = score.mean_joint_score * score.mean_link_score;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    score.correct_count as f64 * score.mean_height * score.mean_height / denom
}

/// The decision predicate: `(S > quality OR N >= min_correct) AND
/// S > quality_per_correct * N`.
pub fn chair_predicate(s: f64, n: usize, thr: &DetectionThresholds) -> bool {
    (s > thr.quality || n >= thr.min_correct) && s > thr.quality_per_correct * n as f64
}

#[derive(Clone, Debug)]
pub struct ChairDecision {
    pub is_chair: bool,
    /// The candidate functional pose (body frame) when classified a chair.
    pub functional_pose: Option<Pose>,
    pub quality: f64,
    pub correct_count: usize,
    /// Quality hit the perfect-match degeneracy (J * L = 0 with N > 0).
    pub degenerate_quality: bool,
}

pub fn classify(
    scores: &[PoseScore],
    stable_poses: &[StablePose],
    thr: &DetectionThresholds,
) -> Result<ChairDecision> {
    thr.validate()?;
    let Some(best) = select_candidate(scores) else {
        return Ok(ChairDecision {
            is_chair: false,
            functional_pose: None,
            quality: 0.0,
            correct_count: 0,
            degenerate_quality: false,
        });
    };
    let s = sitting_quality(&scores[best]);
    let n = scores[best].correct_count;
    let is_chair = chair_predicate(s, n, thr);
    Ok(ChairDecision {
        is_chair,
        functional_pose: if is_chair {
            Some(stable_poses[scores[best].stable_index].pose)
        } else {
            None
        },
        quality: s,
        correct_count: n,
        degenerate_quality: s.is_infinite(),
    })
}
