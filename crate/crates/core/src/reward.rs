//! Shaped rewards for verifier completions and the rollout-group
//! advantage pipeline.
//!
//! A rating `v` in [0, 10] is rescaled to a probability-like value
//! `p̂ = 0.1 + 0.08·v`, clamping it to [0.1, 0.9] so the log terms stay
//! bounded. The per-response reward is binary cross-entropy against the
//! ground-truth label; an unparseable or out-of-range rating earns a
//! flat penalty of −4.5, which is strictly worse than the most
//! confidently wrong valid rating (ln 0.1 ≈ −2.3026). The reward for a
//! completion is the sum over both judged responses.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::types::{PairInstance, ParseStatus, VerifierJudgment};

/// Penalty for a rating that is missing, NaN, or outside [0, 10].
pub const INVALID_RATING_PENALTY: f64 = -4.5;

/// Default epsilon added to the group standard deviation when
/// normalizing advantages.
pub const DEFAULT_ADVANTAGE_EPSILON: f64 = 1e-6;

/// Default number of completions sampled per prompt during training.
pub const DEFAULT_ROLLOUTS_PER_PROMPT: usize = 16;

/// A shaped scalar reward.
///
/// For a single valid rating the value lies in [ln 0.1, ln 0.9]; an
/// invalid rating yields exactly −4.5. Pair rewards are sums of two
/// such terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardValue(pub f64);

impl RewardValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<RewardValue> for f64 {
    fn from(r: RewardValue) -> f64 {
        r.0
    }
}

/// Rescales a valid rating to the clamped probability `0.1 + 0.08·v`.
///
/// Callers must route invalid ratings to the penalty path instead of
/// calling this; the result is only meaningful for `v` in [0, 10].
pub fn clamp_rating(v: f64) -> f64 {
    debug_assert!((0.0..=10.0).contains(&v), "rating {v} outside [0, 10]");
    0.1 + 0.08 * v
}

/// Reward for one judged response: BCE of the clamped rating against
/// the label, or the −4.5 penalty when the rating is missing, NaN, or
/// outside [0, 10].
pub fn response_reward(v: f64, correct: bool) -> RewardValue {
    if v.is_nan() || !(0.0..=10.0).contains(&v) {
        return RewardValue(INVALID_RATING_PENALTY);
    }
    let p = clamp_rating(v);
    let value = if correct {
        math::ln(p)
    } else {
        math::ln(1.0 - p)
    };
    RewardValue(value)
}

fn rating_or_nan(r: Option<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

/// Reward for a full completion: the sum of both per-response rewards.
///
/// A completion that did not parse cleanly routes both ratings through
/// the penalty branch, for a total of −9.0.
pub fn pair_reward(judgment: &VerifierJudgment, labels: (bool, bool)) -> RewardValue {
    if judgment.parse_status != ParseStatus::Ok {
        return RewardValue(2.0 * INVALID_RATING_PENALTY);
    }
    let a = response_reward(rating_or_nan(judgment.rating_a), labels.0);
    let b = response_reward(rating_or_nan(judgment.rating_b), labels.1);
    RewardValue(a.0 + b.0)
}

/// Group-relative advantages: `(r_i − mean) / (pop_std + epsilon)`.
///
/// Uses the population standard deviation. The output always has mean
/// zero (up to rounding); with `epsilon = 0` and nonzero variance it
/// also has unit population standard deviation.
pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::GroupTooSmall {
            len: rewards.len(),
        });
    }
    let mean = math::mean(rewards);
    let std = math::population_std(rewards);
    let denom = std + epsilon;
    if denom == 0.0 {
        // zero variance with epsilon 0: no signal, all advantages zero
        return Ok(rewards.iter().map(|_| 0.0).collect());
    }
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

/// Population standard deviation of a reward list.
pub fn population_std(rewards: &[f64]) -> f64 {
    math::population_std(rewards)
}

/// The completions sampled for one prompt during training, with their
/// rewards and (once computed) group-relative advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub instance: PairInstance,
    pub completions: Vec<String>,
    pub rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advantages: Option<Vec<f64>>,
}

impl RolloutGroup {
    pub fn new(
        instance: PairInstance,
        completions: Vec<String>,
        rewards: Vec<f64>,
    ) -> Result<Self, RewardError> {
        if completions.len() != rewards.len() {
            return Err(RewardError::LengthMismatch {
                completions: completions.len(),
                rewards: rewards.len(),
            });
        }
        Ok(Self {
            instance,
            completions,
            rewards,
            advantages: None,
        })
    }

    /// Scores every completion against the instance labels and builds
    /// the group in one step.
    pub fn from_completions(
        instance: PairInstance,
        completions: Vec<String>,
    ) -> Result<Self, RewardError> {
        let labels = instance.labels;
        let rewards = completions
            .iter()
            .map(|c| pair_reward(&crate::verdict::judge_completion(c), labels).0)
            .collect();
        Self::new(instance, completions, rewards)
    }

    pub fn compute_advantages(&mut self, epsilon: f64) -> Result<(), RewardError> {
        self.advantages = Some(group_advantages(&self.rewards, epsilon)?);
        Ok(())
    }

    pub fn reward_std(&self) -> f64 {
        math::population_std(&self.rewards)
    }
}

/// Drops rollout groups whose rewards have (population) standard
/// deviation at most `tol` — they carry no gradient signal. Keeps the
/// original order of surviving groups and reports how many were
/// discarded.
pub fn filter_zero_variance(
    groups: Vec<RolloutGroup>,
    tol: f64,
) -> (Vec<RolloutGroup>, usize) {
    let before = groups.len();
    let kept: Vec<RolloutGroup> = groups
        .into_iter()
        .filter(|g| g.reward_std() > tol)
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("cannot normalize a group of {len} reward(s); need at least 2")]
    GroupTooSmall { len: usize },
    #[error("group has {completions} completions but {rewards} rewards")]
    LengthMismatch { completions: usize, rewards: usize },
}
