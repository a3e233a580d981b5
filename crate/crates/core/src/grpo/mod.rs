//! Group-relative policy optimization over a discrete softmax policy.
//!
//! The update rule is the clipped surrogate objective
//!
//! ```text
//! J = (1/G) * sum_i [ min(rho_i * A_i, clip(rho_i, 1-eps, 1+eps) * A_i)
//!                     - beta * KL_i ]
//! ```
//!
//! with `rho_i` the new/old probability ratio of the sampled action and
//! `A_i` the group-standardized advantage. The KL term uses the
//! per-sample estimator `r - log r - 1` with `r = pi_ref / pi_theta`,
//! which is non-negative and zero iff the policies agree on the sample.
//! Gradients with respect to the current logits are analytic, so the
//! whole loop runs without any autodiff machinery.

mod toy;

pub use toy::{
    steps_to_reach, PolicyInit, ToyRollout, ToyScenario, ToyTrainer, TraceStep,
    DEFAULT_GROUP_SIZE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("sequence lengths differ: {0}")]
    LengthMismatch(String),
    #[error("invalid policy state: {0}")]
    InvalidPolicy(String),
    #[error("action table must cover the policy's action set")]
    ActionTableMismatch,
    #[error("scenario has no strictly best action")]
    NoStrictlyBestAction,
}

/// Rewards of the `G` responses to one question, with standardized
/// advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseGroup {
    pub question_id: String,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl ResponseGroup {
    pub fn new(question_id: impl Into<String>, rewards: Vec<f64>) -> Result<Self, GrpoError> {
        let advantages = group_advantages(&rewards)?;
        Ok(Self {
            question_id: question_id.into(),
            rewards,
            advantages,
        })
    }
}

/// Discrete softmax policy with its sampling-time and reference logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub logits_current: Vec<f64>,
    pub logits_old: Vec<f64>,
    pub logits_ref: Vec<f64>,
    pub step_size: f64,
    pub clip_epsilon: f64,
    pub kl_beta: f64,
}

impl PolicyState {
    /// Fresh state: current, old, and reference all equal.
    pub fn new(logits: Vec<f64>) -> Self {
        Self {
            logits_current: logits.clone(),
            logits_old: logits.clone(),
            logits_ref: logits,
            step_size: 0.05,
            clip_epsilon: 0.2,
            kl_beta: 0.04,
        }
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        let n = self.logits_current.len();
        if n < 2 {
            return Err(GrpoError::InvalidPolicy(format!(
                "need at least 2 actions, got {n}"
            )));
        }
        if self.logits_old.len() != n || self.logits_ref.len() != n {
            return Err(GrpoError::InvalidPolicy(
                "logit sequences must have equal length".into(),
            ));
        }
        for logits in [&self.logits_current, &self.logits_old, &self.logits_ref] {
            if !logits.iter().all(|x| x.is_finite()) {
                return Err(GrpoError::InvalidPolicy("non-finite logits".into()));
            }
        }
        if !(self.step_size > 0.0) {
            return Err(GrpoError::InvalidPolicy("step_size must be positive".into()));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(GrpoError::InvalidPolicy("clip_epsilon must lie in (0, 1)".into()));
        }
        if !(self.kl_beta >= 0.0) {
            return Err(GrpoError::InvalidPolicy("kl_beta must be non-negative".into()));
        }
        Ok(())
    }
}

/// Standardizes rewards to zero mean and unit population std. Groups
/// with std below 1e-12 are degenerate and yield all-zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    let g = rewards.len();
    if g < 2 {
        return Err(GrpoError::GroupTooSmall(g));
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let std = var.sqrt();
    if std < 1e-12 {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Per-sample KL estimator `r - log r - 1` with
/// `r = exp(logp_ref - logp_current)`; non-negative, zero iff equal.
pub fn kl_estimate(logp_current: f64, logp_ref: f64) -> f64 {
    let log_r = logp_ref - logp_current;
    let r = log_r.exp();
    r - log_r - 1.0
}

/// The clipped surrogate objective averaged over a group.
pub fn clipped_objective(
    logp_new: &[f64],
    logp_old: &[f64],
    advantages: &[f64],
    kl_terms: &[f64],
    eps: f64,
    beta: f64,
) -> Result<f64, GrpoError> {
    let g = logp_new.len();
    if logp_old.len() != g || advantages.len() != g || kl_terms.len() != g {
        return Err(GrpoError::LengthMismatch(format!(
            "logp_new {g}, logp_old {}, advantages {}, kl {}",
            logp_old.len(),
            advantages.len(),
            kl_terms.len()
        )));
    }
    if g == 0 {
        return Err(GrpoError::GroupTooSmall(0));
    }
    let mut sum = 0.0;
    for i in 0..g {
        let rho = (logp_new[i] - logp_old[i]).exp();
        let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
        sum += (rho * advantages[i]).min(clipped * advantages[i]) - beta * kl_terms[i];
    }
    Ok(sum / g as f64)
}

/// Numerically stable softmax; sums to 1 within 1e-12.
pub fn policy_probs(logits: &[f64]) -> Vec<f64> {
    assert!(logits.len() >= 2, "need at least 2 actions");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits
        .iter()
        .map(|&x| (x - max).exp())
        .sum::<f64>()
        .ln()
        + max;
    logits.iter().map(|&x| x - log_sum).collect()
}

/// The surrogate objective as a function of the policy's current
/// logits, for the sampled actions and their advantages.
pub fn surrogate_objective(
    policy: &PolicyState,
    advantages: &[f64],
    actions: &[usize],
) -> Result<f64, GrpoError> {
    if advantages.len() != actions.len() {
        return Err(GrpoError::LengthMismatch(format!(
            "advantages {}, actions {}",
            advantages.len(),
            actions.len()
        )));
    }
    let lp_new = log_softmax(&policy.logits_current);
    let lp_old = log_softmax(&policy.logits_old);
    let lp_ref = log_softmax(&policy.logits_ref);
    let mut new = Vec::with_capacity(actions.len());
    let mut old = Vec::with_capacity(actions.len());
    let mut kl = Vec::with_capacity(actions.len());
    for &a in actions {
        if a >= lp_new.len() {
            return Err(GrpoError::ActionTableMismatch);
        }
        new.push(lp_new[a]);
        old.push(lp_old[a]);
        kl.push(kl_estimate(lp_new[a], lp_ref[a]));
    }
    clipped_objective(&new, &old, advantages, &kl, policy.clip_epsilon, policy.kl_beta)
}

/// Analytic gradient of [`surrogate_objective`] with respect to
/// `logits_current`.
///
/// For each sample the surrogate term contributes
/// `A_i * rho_i * (e_a - p)` when the unclipped branch is active and
/// zero otherwise; the KL penalty contributes
/// `-beta * (1 - r_i) * (e_a - p)`.
pub fn surrogate_gradient(
    policy: &PolicyState,
    advantages: &[f64],
    actions: &[usize],
) -> Result<Vec<f64>, GrpoError> {
    if advantages.len() != actions.len() {
        return Err(GrpoError::LengthMismatch(format!(
            "advantages {}, actions {}",
            advantages.len(),
            actions.len()
        )));
    }
    let n = policy.logits_current.len();
    let p = policy_probs(&policy.logits_current);
    let lp_new = log_softmax(&policy.logits_current);
    let lp_old = log_softmax(&policy.logits_old);
    let lp_ref = log_softmax(&policy.logits_ref);
    let g = actions.len() as f64;
    let eps = policy.clip_epsilon;

    let mut grad = vec![0.0; n];
    for (i, &a) in actions.iter().enumerate() {
        if a >= n {
            return Err(GrpoError::ActionTableMismatch);
        }
        let rho = (lp_new[a] - lp_old[a]).exp();
        let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
        let adv = advantages[i];
        // tie goes to the unclipped branch, matching `min` evaluation
        let surrogate_coef = if rho * adv <= clipped * adv { adv * rho } else { 0.0 };
        let r = (lp_ref[a] - lp_new[a]).exp();
        let kl_coef = -policy.kl_beta * (1.0 - r);
        let coef = (surrogate_coef + kl_coef) / g;
        for (k, slot) in grad.iter_mut().enumerate() {
            let indicator = if k == a { 1.0 } else { 0.0 };
            *slot += coef * (indicator - p[k]);
        }
    }
    Ok(grad)
}

/// One ascent step on the surrogate objective. Returns the updated
/// state with `logits_old` refreshed to the pre-step current logits.
pub fn train_step(
    policy: &PolicyState,
    group: &ResponseGroup,
    sampled_actions: &[usize],
) -> Result<PolicyState, GrpoError> {
    policy.validate()?;
    if group.advantages.len() != sampled_actions.len() {
        return Err(GrpoError::LengthMismatch(format!(
            "advantages {}, actions {}",
            group.advantages.len(),
            sampled_actions.len()
        )));
    }
    let grad = surrogate_gradient(policy, &group.advantages, sampled_actions)?;
    let mut next = policy.clone();
    next.logits_old = policy.logits_current.clone();
    for (z, g) in next.logits_current.iter_mut().zip(&grad) {
        *z += policy.step_size * g;
    }
    Ok(next)
}
