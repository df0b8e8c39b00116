//! Batch evaluation with mean ± standard-error summaries.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::PlanarPose;
use crate::math::{mean, sample_std, sqrt};
use crate::par;
use crate::rng;
use crate::sim::{rollout, EnvConfig, Policy, SimError, Task, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    pub fn of(xs: &[f64]) -> Self {
        let stderr = if xs.len() < 2 { 0.0 } else { sample_std(xs) / sqrt(xs.len() as f64) };
        MeanStderr { mean: mean(xs), stderr }
    }
}

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub reward: f64,
    pub success: bool,
    pub steps: usize,
    pub collisions: usize,
}

impl EpisodeStats {
    pub fn of(t: &Trajectory) -> Self {
        EpisodeStats {
            reward: t.total_reward(),
            success: t.success,
            steps: t.len(),
            collisions: t.collisions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub reward: MeanStderr,
    pub success_rate: MeanStderr,
    pub steps: MeanStderr,
    pub collisions: MeanStderr,
    pub n_episodes: usize,
    pub policy_tag: String,
    pub train_env: String,
    pub eval_env: String,
}

impl EvalReport {
    pub fn from_episodes(episodes: &[EpisodeStats]) -> Self {
        let col = |f: &dyn Fn(&EpisodeStats) -> f64| -> Vec<f64> { episodes.iter().map(f).collect() };
        EvalReport {
            reward: MeanStderr::of(&col(&|e| e.reward)),
            success_rate: MeanStderr::of(&col(&|e| if e.success { 1.0 } else { 0.0 })),
            steps: MeanStderr::of(&col(&|e| e.steps as f64)),
            collisions: MeanStderr::of(&col(&|e| e.collisions as f64)),
            n_episodes: episodes.len(),
            policy_tag: String::new(),
            train_env: String::new(),
            eval_env: String::new(),
        }
    }

    pub fn tagged(mut self, policy: &str, train_env: &str, eval_env: &str) -> Self {
        self.policy_tag = policy.into();
        self.train_env = train_env.into();
        self.eval_env = eval_env.into();
        self
    }
}

/// Seed of evaluation episode `i`; shared by every policy evaluated with the same base seed.
pub fn episode_seed(seed: u64, i: usize) -> u64 {
    rng::derive(seed, &[0xe7a1, i as u64])
}

/// Runs `n` seeded episodes; episode `i` uses task `i % tasks.len()`.
pub fn evaluate_episodes<P: Policy + Sync + ?Sized>(
    config: &EnvConfig,
    tasks: &[Task],
    policy: &P,
    target: PlanarPose,
    n: usize,
    seed: u64,
) -> Result<Vec<EpisodeStats>, SimError> {
    if tasks.is_empty() {
        return Err(SimError::Config("no evaluation tasks"));
    }
    par::map_indexed(n, |i| {
        let task = &tasks[i % tasks.len()];
        rollout(config, task, policy, target, episode_seed(seed, i)).map(|t| EpisodeStats::of(&t))
    })
    .into_iter()
    .collect()
}

pub fn evaluate<P: Policy + Sync + ?Sized>(
    config: &EnvConfig,
    tasks: &[Task],
    policy: &P,
    n: usize,
    seed: u64,
) -> Result<EvalReport, SimError> {
    let eps = evaluate_episodes(config, tasks, policy, PlanarPose::ORIGIN, n, seed)?;
    Ok(EvalReport::from_episodes(&eps))
}

/// One-sided paired test statistic for `mean(a - b) > 0`.
pub fn paired_z(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = sample_std(&d);
    let m = mean(&d);
    if s == 0.0 {
        return if m > 0.0 { f64::INFINITY } else if m < 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    m / (s / sqrt(d.len() as f64))
}

/// One-sided pooled two-proportion z statistic for `p_a > p_b`.
pub fn two_proportion_z(success_a: usize, n_a: usize, success_b: usize, n_b: usize) -> f64 {
    let pa = success_a as f64 / n_a as f64;
    let pb = success_b as f64 / n_b as f64;
    let p = (success_a + success_b) as f64 / (n_a + n_b) as f64;
    let se = sqrt(p * (1.0 - p) * (1.0 / n_a as f64 + 1.0 / n_b as f64));
    if se == 0.0 {
        return 0.0;
    }
    (pa - pb) / se
}
