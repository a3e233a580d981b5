//! Desk-scale end-to-end training loop: a bandit over canned response
//! texts, scored by the full reward stack and optimized with the
//! group-relative clipped objective.
//!
//! Every action in the table is a complete tagged response; its reward
//! is deterministic, so the scenario is a bandit whose optimum is the
//! action with the highest combined reward. Training traces report the
//! exact expected reward and KL under the current policy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qa::QAPair;
use crate::response::parse_response_sized;
use crate::reward::{score_response, RewardBreakdown, RewardConfig};
use crate::util::derive_seed;

use super::{
    kl_estimate, log_softmax, policy_probs, surrogate_objective, train_step, GrpoError,
    PolicyState, ResponseGroup,
};

/// Rollout width used throughout: eight response candidates per group.
pub const DEFAULT_GROUP_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyInit {
    /// Initial logits; defaults to zeros over the action set.
    pub logits: Option<Vec<f64>>,
    pub step_size: f64,
    pub clip_epsilon: f64,
    pub kl_beta: f64,
}

impl Default for PolicyInit {
    fn default() -> Self {
        Self {
            logits: None,
            step_size: 0.05,
            clip_epsilon: 0.2,
            kl_beta: 0.04,
        }
    }
}

/// A toy training scenario: one question, a table of canned responses,
/// and the reward/policy configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyScenario {
    pub actions: Vec<String>,
    /// When false, the map component is subtracted from every total —
    /// the ablation arm of the shaping comparison.
    #[serde(default = "default_true")]
    pub map_reward_enabled: bool,
    #[serde(default)]
    pub policy: PolicyInit,
    pub qa: QAPair,
    #[serde(default)]
    pub reward: RewardConfig,
}

fn default_true() -> bool {
    true
}

impl ToyScenario {
    /// The documented 4-action spatial bandit: one action answers
    /// correctly with a perfect map and an in-range think segment, one
    /// answers correctly but tersely, one is well-formed yet wrong, and
    /// one is untagged noise.
    pub fn spatial_bandit() -> Self {
        let gt_map: std::collections::BTreeMap<String, Vec<(u32, u32)>> = [
            ("chair".to_string(), vec![(2, 3)]),
            ("table".to_string(), vec![(7, 1)]),
        ]
        .into_iter()
        .collect();
        let qa = QAPair {
            answer_choice: Some(0),
            answer_text: None,
            answer_value: None,
            gt_map: Some(crate::scene::GridMap::new(10, gt_map).expect("valid map")),
            id: "toy-q0".to_string(),
            meta: Default::default(),
            options: Some(vec![
                "the chair".to_string(),
                "the table".to_string(),
                "the sofa".to_string(),
                "the lamp".to_string(),
            ]),
            question: "Which object is closest to the door?".to_string(),
            scene_id: "toy-scene".to_string(),
            schema_version: crate::qa::QA_SCHEMA_VERSION,
            task: crate::qa::TaskType::GeneralMultiChoice,
        };
        let reward = RewardConfig {
            l_min: 3,
            l_max: 60,
            ..RewardConfig::default()
        };
        let actions = vec![
            "<think>the map places the chair right beside the door</think>\
             <map>{\"chair\": [[2, 3]], \"table\": [[7, 1]]}</map>\
             <answer>A. the chair</answer>"
                .to_string(),
            "<think>chair</think><answer>A. the chair</answer>".to_string(),
            "<think>looking at the table area on the map</think>\
             <map>{\"chair\": [[2, 3]], \"table\": [[7, 1]]}</map>\
             <answer>B. the table</answer>"
                .to_string(),
            "definitely one of them".to_string(),
        ];
        Self {
            actions,
            map_reward_enabled: true,
            policy: PolicyInit::default(),
            qa,
            reward,
        }
    }
}

/// One sampled group plus the actions that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyRollout {
    pub group: ResponseGroup,
    pub actions: Vec<usize>,
}

/// One line of the training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub best_action_prob: f64,
    pub expected_reward: f64,
    pub mean_kl: f64,
    pub objective: f64,
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct ToyTrainer {
    scenario: ToyScenario,
    breakdowns: Vec<RewardBreakdown>,
    action_rewards: Vec<f64>,
}

impl ToyTrainer {
    pub fn new(scenario: ToyScenario) -> Result<Self, GrpoError> {
        if scenario.actions.len() < 2 {
            return Err(GrpoError::InvalidPolicy(format!(
                "action table needs at least 2 entries, got {}",
                scenario.actions.len()
            )));
        }
        scenario
            .reward
            .validate()
            .map_err(GrpoError::InvalidPolicy)?;
        let breakdowns: Vec<RewardBreakdown> = scenario
            .actions
            .iter()
            .map(|text| {
                let resp = parse_response_sized(text, scenario.reward.map_size);
                score_response(&resp, &scenario.qa, &scenario.reward)
            })
            .collect();
        let action_rewards: Vec<f64> = breakdowns
            .iter()
            .map(|b| {
                if scenario.map_reward_enabled {
                    b.total
                } else {
                    b.total - b.r_map.unwrap_or(0.0)
                }
            })
            .collect();
        Ok(Self {
            scenario,
            breakdowns,
            action_rewards,
        })
    }

    pub fn scenario(&self) -> &ToyScenario {
        &self.scenario
    }

    /// Deterministic per-action reward totals.
    pub fn action_rewards(&self) -> &[f64] {
        &self.action_rewards
    }

    pub fn breakdowns(&self) -> &[RewardBreakdown] {
        &self.breakdowns
    }

    /// Index of the highest-reward action, and whether it is strict.
    fn argmax(&self) -> (usize, bool) {
        let mut best = 0;
        for (i, r) in self.action_rewards.iter().enumerate() {
            if *r > self.action_rewards[best] {
                best = i;
            }
        }
        let strict = self
            .action_rewards
            .iter()
            .enumerate()
            .all(|(i, r)| i == best || *r < self.action_rewards[best]);
        (best, strict)
    }

    pub fn best_action(&self) -> usize {
        self.argmax().0
    }

    pub fn initial_policy(&self) -> PolicyState {
        let logits = self
            .scenario
            .policy
            .logits
            .clone()
            .unwrap_or_else(|| vec![0.0; self.scenario.actions.len()]);
        let mut policy = PolicyState::new(logits);
        policy.step_size = self.scenario.policy.step_size;
        policy.clip_epsilon = self.scenario.policy.clip_epsilon;
        policy.kl_beta = self.scenario.policy.kl_beta;
        policy
    }

    /// Samples `g` actions from the current policy and scores them.
    pub fn rollout(
        &self,
        policy: &PolicyState,
        g: usize,
        seed: u64,
    ) -> Result<ToyRollout, GrpoError> {
        if g < 2 {
            return Err(GrpoError::GroupTooSmall(g));
        }
        if policy.logits_current.len() != self.scenario.actions.len() {
            return Err(GrpoError::ActionTableMismatch);
        }
        let probs = policy_probs(&policy.logits_current);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actions: Vec<usize> = (0..g).map(|_| sample_index(&probs, &mut rng)).collect();
        let rewards: Vec<f64> = actions.iter().map(|&a| self.action_rewards[a]).collect();
        let group = ResponseGroup::new(self.scenario.qa.id.clone(), rewards)?;
        Ok(ToyRollout { group, actions })
    }

    /// Runs the full loop for `steps` steps with group size `g`,
    /// emitting one trace line per step.
    pub fn run(&self, steps: usize, g: usize, seed: u64) -> Result<Vec<TraceStep>, GrpoError> {
        let (best, strict) = self.argmax();
        if !strict {
            return Err(GrpoError::NoStrictlyBestAction);
        }
        let mut policy = self.initial_policy();
        policy.validate()?;
        let mut trace = Vec::with_capacity(steps);
        for step in 0..steps {
            let rollout = self.rollout(&policy, g, derive_seed(seed, "toy_step", step as u64))?;
            policy = train_step(&policy, &rollout.group, &rollout.actions)?;

            let probs = policy_probs(&policy.logits_current);
            let lp = log_softmax(&policy.logits_current);
            let lref = log_softmax(&policy.logits_ref);
            let expected_reward = probs
                .iter()
                .zip(&self.action_rewards)
                .map(|(p, r)| p * r)
                .sum();
            let mean_kl = probs
                .iter()
                .enumerate()
                .map(|(a, p)| p * kl_estimate(lp[a], lref[a]))
                .sum();
            let objective =
                surrogate_objective(&policy, &rollout.group.advantages, &rollout.actions)?;
            trace.push(TraceStep {
                best_action_prob: probs[best],
                expected_reward,
                mean_kl,
                objective,
                step,
            });
        }
        Ok(trace)
    }
}

/// First step index at which the best-action probability exceeds
/// `threshold`.
pub fn steps_to_reach(trace: &[TraceStep], threshold: f64) -> Option<usize> {
    trace
        .iter()
        .find(|t| t.best_action_prob > threshold)
        .map(|t| t.step)
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}
