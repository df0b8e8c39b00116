//! Particle posterior over pin defects from insertion outcomes, goal
//! re-optimisation, and the attempt loops built on them.
//!
//! A particle is one candidate realisation of the per-pin offsets. Its
//! weight is the probability of the recorded outcomes under that realisation,
//! marginalising measurement noise on the recorded poses by Monte Carlo.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::cmaes::{Cmaes, CmaesConfig};
use crate::geometry::{contains, DefectParams, GeometryError, PlanarPose, WorkpieceSpec};
use crate::math::{exp, ln, sqrt};
use crate::par;
use crate::rng;
use crate::sim::{rollout, run_controller, Action, Controller, EnvConfig, Observation, Policy, SimError, Task, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("prior covariance is not positive semidefinite")]
    NotPsd,
    #[error("prior covariance has dimension {got}, expected {expected}")]
    PriorDimension { expected: usize, got: usize },
    #[error("every particle has zero weight: history inconsistent with the prior")]
    Degenerate,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
}

/// Outcome of one insertion attempt at a (measured or commanded) pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionRecord {
    pub pose: PlanarPose,
    pub success: bool,
}

/// Zero-mean Gaussian prior over the stacked per-pin `(dx, dy)` offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectPrior {
    pub dim: usize,
    /// Row-major `dim × dim` covariance (mm²).
    pub cov: Vec<f64>,
}

impl DefectPrior {
    pub fn isotropic(spec: &WorkpieceSpec, sigma: f64) -> Self {
        let dim = 2 * spec.pin_count();
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = sigma * sigma;
        }
        DefectPrior { dim, cov }
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ`, tolerating singular `Σ`.
    pub fn cholesky(&self) -> Result<Vec<f64>, InferenceError> {
        let n = self.dim;
        if self.cov.len() != n * n {
            return Err(InferenceError::PriorDimension { expected: n * n, got: self.cov.len() });
        }
        let scale = (0..n).map(|i| self.cov[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
        let tol = 1e-12 * scale;
        for i in 0..n {
            for j in 0..i {
                if (self.cov[i * n + j] - self.cov[j * n + i]).abs() > tol {
                    return Err(InferenceError::NotPsd);
                }
            }
        }
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let d = self.cov[j * n + j] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
            if d < -tol {
                return Err(InferenceError::NotPsd);
            }
            if d <= tol {
                for i in j + 1..n {
                    let r = self.cov[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                    if r.abs() > sqrt(tol) * sqrt(scale) {
                        return Err(InferenceError::NotPsd);
                    }
                }
                continue;
            }
            let djj = sqrt(d);
            l[j * n + j] = djj;
            for i in j + 1..n {
                let r = self.cov[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                l[i * n + j] = r / djj;
            }
        }
        Ok(l)
    }
}

fn draw_defects(spec: &WorkpieceSpec, l: &[f64], r: &mut rng::Rng) -> DefectParams {
    let n = 2 * spec.pin_count();
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(r)).collect();
    let d: Vec<f64> = (0..n).map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum()).collect();
    DefectParams { offsets: d.chunks(2).map(|c| [c[0], c[1]]).collect() }
}

/// `n` seeded draws of realised defects.
pub fn sample_defects(spec: &WorkpieceSpec, prior: &DefectPrior, n: usize, seed: u64) -> Result<Vec<DefectParams>, InferenceError> {
    if prior.dim != 2 * spec.pin_count() {
        return Err(InferenceError::PriorDimension { expected: 2 * spec.pin_count(), got: prior.dim });
    }
    let l = prior.cholesky()?;
    Ok((0..n).map(|i| draw_defects(spec, &l, &mut rng::derived(seed, &[0xdef, i as u64]))).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<DefectParams>,
    pub log_weights: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weights summing to one, or `None` if every weight is zero.
    pub fn normalized_weights(&self) -> Option<Vec<f64>> {
        let m = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY || m.is_nan() {
            return None;
        }
        let w: Vec<f64> = self.log_weights.iter().map(|l| exp(l - m)).collect();
        let s: f64 = w.iter().sum();
        Some(w.into_iter().map(|v| v / s).collect())
    }

    pub fn effective_size(&self) -> f64 {
        match self.normalized_weights() {
            Some(w) => 1.0 / w.iter().map(|v| v * v).sum::<f64>(),
            None => 0.0,
        }
    }
}

pub fn sample_prior(spec: &WorkpieceSpec, prior: &DefectPrior, n: usize, seed: u64) -> Result<ParticleSet, InferenceError> {
    if n == 0 {
        return Err(InferenceError::Config("need at least one particle"));
    }
    let particles = sample_defects(spec, prior, n, rng::derive(seed, &[0x9a7]))?;
    Ok(ParticleSet { log_weights: vec![0.0; n], particles })
}

/// Indicator that `particle` explains `record` exactly at the recorded pose.
pub fn likelihood(spec: &WorkpieceSpec, record: &InsertionRecord, particle: &DefectParams) -> f64 {
    if contains(spec, particle, record.pose) == record.success {
        1.0
    } else {
        0.0
    }
}

/// Standard deviations of the recorded `(x, y, θ)` around the true pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseNoise {
    pub std: [f64; 3],
}

impl PoseNoise {
    pub const NONE: PoseNoise = PoseNoise { std: [0.0; 3] };

    pub fn is_zero(&self) -> bool {
        self.std.iter().all(|s| *s == 0.0)
    }
}

/// Reweights `prior_set` by the history. Noise on each record is
/// marginalised with `n_noise_samples` draws shared across particles; the
/// draws of different records are independent, so each record's likelihood
/// is averaged separately and the averages multiplied.
pub fn posterior(
    spec: &WorkpieceSpec,
    records: &[InsertionRecord],
    prior_set: &ParticleSet,
    noise: PoseNoise,
    n_noise_samples: usize,
    seed: u64,
) -> Result<ParticleSet, InferenceError> {
    if records.is_empty() {
        return Ok(prior_set.clone());
    }
    let draws = if noise.is_zero() { 1 } else { n_noise_samples.max(1) };
    let poses: Vec<Vec<PlanarPose>> = records
        .iter()
        .enumerate()
        .map(|(j, rec)| {
            let mut r = rng::derived(seed, &[0x90e, j as u64]);
            (0..draws)
                .map(|_| {
                    if noise.is_zero() {
                        return rec.pose;
                    }
                    let e: [f64; 3] = core::array::from_fn(|i| {
                        let z: f64 = StandardNormal.sample(&mut r);
                        noise.std[i] * z
                    });
                    PlanarPose { x: rec.pose.x + e[0], y: rec.pose.y + e[1], theta: rec.pose.theta + e[2] }
                })
                .collect()
        })
        .collect();
    let log_lik = par::map_indexed(prior_set.len(), |i| {
        let p = &prior_set.particles[i];
        let mut acc = 0.0;
        for (rec, ps) in records.iter().zip(&poses) {
            let hits = ps.iter().filter(|pose| contains(spec, p, **pose) == rec.success).count();
            if hits == 0 {
                return f64::NEG_INFINITY;
            }
            acc += ln(hits as f64 / draws as f64);
        }
        acc
    });
    let log_weights: Vec<f64> = prior_set.log_weights.iter().zip(&log_lik).map(|(a, b)| a + b).collect();
    let out = ParticleSet { particles: prior_set.particles.clone(), log_weights };
    if out.normalized_weights().is_none() {
        return Err(InferenceError::Degenerate);
    }
    Ok(out)
}

/// Posterior probability that an attempt exactly at `goal` inserts.
pub fn expected_success(spec: &WorkpieceSpec, goal: PlanarPose, particles: &ParticleSet) -> Result<f64, InferenceError> {
    let w = particles.normalized_weights().ok_or(InferenceError::Degenerate)?;
    Ok(expected_success_weighted(spec, goal, &particles.particles, &w))
}

fn expected_success_weighted(spec: &WorkpieceSpec, goal: PlanarPose, particles: &[DefectParams], w: &[f64]) -> f64 {
    let (mut hit, mut miss) = (0.0, 0.0);
    for (p, w) in particles.iter().zip(w).filter(|(_, w)| **w > 0.0) {
        if contains(spec, p, goal) {
            hit += w;
        } else {
            miss += w;
        }
    }
    if hit == 0.0 {
        0.0
    } else {
        hit / (hit + miss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub n_particles: usize,
    pub n_noise_samples: usize,
    /// Half-widths of the goal search box in `(x, y, θ)`.
    pub goal_box: [f64; 3],
    /// Coarse grid points per axis used to seed the search and by the random baseline.
    pub grid: [usize; 3],
    pub cma_generations: usize,
    pub cma_sigma0: f64,
    pub discard_threshold: f64,
    pub max_attempts: usize,
    /// Box the random baseline's grid spans.
    pub baseline_box: [f64; 3],
    /// Whether the random baseline tries the nominal goal before drawing.
    pub baseline_nominal_first: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            n_particles: 500,
            n_noise_samples: 20,
            goal_box: [0.5, 0.5, 0.1],
            grid: [5, 5, 3],
            cma_generations: 40,
            cma_sigma0: 0.1,
            discard_threshold: 0.05,
            max_attempts: 10,
            baseline_box: [0.5, 0.5, 0.1],
            baseline_nominal_first: false,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.n_particles == 0 || self.n_noise_samples == 0 || self.max_attempts == 0 {
            return Err(InferenceError::Config("counts must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.discard_threshold) {
            return Err(InferenceError::Config("discard threshold must lie in [0, 1]"));
        }
        if self.goal_box.iter().chain(&self.baseline_box).any(|b| !(*b >= 0.0)) || self.grid.contains(&0) {
            return Err(InferenceError::Config("goal box and grid must be non-negative / positive"));
        }
        if !(self.cma_sigma0 > 0.0) {
            return Err(InferenceError::Config("cma sigma0 must be positive"));
        }
        Ok(())
    }

    /// Grid over the goal box, ordered from the centre outwards.
    pub fn goal_grid(&self) -> Vec<PlanarPose> {
        self.grid_over(self.goal_box)
    }

    pub fn baseline_grid(&self) -> Vec<PlanarPose> {
        self.grid_over(self.baseline_box)
    }

    fn grid_over(&self, half: [f64; 3]) -> Vec<PlanarPose> {
        let axis = |k: usize| -> Vec<f64> {
            let n = self.grid[k];
            if n == 1 {
                return vec![0.0];
            }
            (0..n).map(|i| -half[k] + 2.0 * half[k] * i as f64 / (n - 1) as f64).collect()
        };
        let (xs, ys, ts) = (axis(0), axis(1), axis(2));
        let mut g: Vec<PlanarPose> = Vec::with_capacity(xs.len() * ys.len() * ts.len());
        for &x in &xs {
            for &y in &ys {
                for &t in &ts {
                    g.push(PlanarPose { x, y, theta: t });
                }
            }
        }
        let norm = |p: &PlanarPose| self.scaled_norm2(p);
        g.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
        g
    }

    fn scaled_norm2(&self, p: &PlanarPose) -> f64 {
        let s = self.search_scale();
        let (a, b, c) = (p.x / s[0], p.y / s[1], p.theta / s[2]);
        a * a + b * b + c * c
    }

    /// Per-axis factor mapping search coordinates (all on the x half-width's scale) to poses.
    fn search_scale(&self) -> [f64; 3] {
        let r = self.goal_box[0].max(1e-12);
        [1.0, self.goal_box[1].max(1e-12) / r, self.goal_box[2].max(1e-12) / r]
    }
}

pub fn should_discard(g_star: f64, config: &InferenceConfig) -> bool {
    g_star < config.discard_threshold
}

/// Goal maximising [`expected_success`] over the box: the best coarse grid
/// point (ties to the most central) refined by CMA-ES on the fixed particle set.
pub fn optimal_goal_for(
    spec: &WorkpieceSpec,
    particles: &ParticleSet,
    config: &InferenceConfig,
    seed: u64,
) -> Result<(PlanarPose, f64), InferenceError> {
    config.validate()?;
    let w = particles.normalized_weights().ok_or(InferenceError::Degenerate)?;
    // Only particles with mass matter.
    let (ps, ws): (Vec<DefectParams>, Vec<f64>) =
        particles.particles.iter().cloned().zip(w).filter(|(_, w)| *w > 0.0).unzip();
    let g = |pose: PlanarPose| expected_success_weighted(spec, pose, &ps, &ws);
    let grid = config.goal_grid();
    let scores = par::map_indexed(grid.len(), |i| g(grid[i]));
    let mut best = (grid[0], scores[0]);
    for (p, s) in grid.iter().zip(&scores) {
        if *s > best.1 {
            best = (*p, *s);
        }
    }
    if best.1 >= 1.0 || config.cma_generations == 0 {
        return Ok(best);
    }
    let scale = config.search_scale();
    let to_pose = |u: &[f64]| PlanarPose { x: u[0] * scale[0], y: u[1] * scale[1], theta: u[2] * scale[2] };
    let half = config.goal_box[0];
    let cfg = CmaesConfig {
        bounds: Some((vec![-half; 3], vec![half; 3])),
        ..CmaesConfig::new(config.cma_sigma0, rng::derive(seed, &[0x60a1]))
    };
    let start = [best.0.x / scale[0], best.0.y / scale[1], best.0.theta / scale[2]];
    let mut es = Cmaes::new(start.to_vec(), &cfg).map_err(|_| InferenceError::Config("goal search"))?;
    // Mildly prefer central goals among equal scores so plateaus resolve consistently.
    let objective = |u: &[f64]| {
        let p = to_pose(u);
        g(p) - 1e-6 * config.scaled_norm2(&p)
    };
    es.optimize(config.cma_generations, objective).map_err(|_| InferenceError::Config("goal search"))?;
    if let Some((u, _)) = es.best() {
        let p = to_pose(u);
        let s = g(p);
        if s > best.1 {
            best = (p, s);
        }
    }
    Ok(best)
}

/// Posterior from `records`, then [`optimal_goal_for`].
pub fn optimal_goal(
    records: &[InsertionRecord],
    spec: &WorkpieceSpec,
    prior_set: &ParticleSet,
    noise: PoseNoise,
    config: &InferenceConfig,
    seed: u64,
) -> Result<(PlanarPose, f64), InferenceError> {
    let post = posterior(spec, records, prior_set, noise, config.n_noise_samples, rng::derive(seed, &[0x905]))?;
    optimal_goal_for(spec, &post, config, rng::derive(seed, &[0x60]))
}

/// Fraction of draws from `prior` insertable at the nominal goal.
pub fn nominal_insertability(spec: &WorkpieceSpec, prior: &DefectPrior, n: usize, seed: u64) -> Result<f64, InferenceError> {
    let ds = sample_defects(spec, prior, n, seed)?;
    let ok = par::map_indexed(ds.len(), |i| contains(spec, &ds[i], PlanarPose::ORIGIN));
    Ok(ok.iter().filter(|b| **b).count() as f64 / n.max(1) as f64)
}

/// Isotropic σ for which `target` of sampled workpieces insert at the nominal
/// goal, by bisection on a fixed sample of standard normal draws.
pub fn calibrate_sigma(spec: &WorkpieceSpec, target: f64, n: usize, seed: u64) -> Result<f64, InferenceError> {
    if !(0.0..1.0).contains(&target) || target <= 0.0 {
        return Err(InferenceError::Config("calibration target must lie in (0, 1)"));
    }
    let unit = sample_defects(spec, &DefectPrior::isotropic(spec, 1.0), n, seed)?;
    let rate = |s: f64| {
        let ok = par::map_indexed(unit.len(), |i| {
            let d = DefectParams { offsets: unit[i].offsets.iter().map(|o| [o[0] * s, o[1] * s]).collect() };
            contains(spec, &d, PlanarPose::ORIGIN)
        });
        ok.iter().filter(|b| **b).count() as f64 / n as f64
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while rate(hi) > target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(InferenceError::Config("calibration did not bracket"));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptOutcome {
    pub success: bool,
    pub attempts: usize,
    pub discarded: bool,
    pub final_goal: PlanarPose,
    pub g_star: f64,
    pub history: Vec<InsertionRecord>,
}

/// Attempt loop under perfect control and measurement: an attempt at `goal`
/// succeeds iff the realised workpiece contains it. Failures are recorded at
/// the commanded goal.
pub fn attempt_loop_ideal(
    spec: &WorkpieceSpec,
    truth: &DefectParams,
    prior: &DefectPrior,
    config: &InferenceConfig,
    seed: u64,
) -> Result<AttemptOutcome, InferenceError> {
    config.validate()?;
    let particles = sample_prior(spec, prior, config.n_particles, rng::derive(seed, &[0x1d]))?;
    let mut goal = PlanarPose::ORIGIN;
    let mut g_star = expected_success(spec, goal, &particles)?;
    let mut history = Vec::new();
    for attempt in 1..=config.max_attempts {
        if contains(spec, truth, goal) {
            history.push(InsertionRecord { pose: goal, success: true });
            return Ok(AttemptOutcome { success: true, attempts: attempt, discarded: false, final_goal: goal, g_star, history });
        }
        history.push(InsertionRecord { pose: goal, success: false });
        if attempt == config.max_attempts {
            break;
        }
        match optimal_goal(&history, spec, &particles, PoseNoise::NONE, config, rng::derive(seed, &[attempt as u64])) {
            Ok((g, s)) => {
                goal = g;
                g_star = s;
            }
            Err(InferenceError::Degenerate) => {
                return Ok(AttemptOutcome { success: false, attempts: attempt, discarded: true, final_goal: goal, g_star: 0.0, history });
            }
            Err(e) => return Err(e),
        }
        if should_discard(g_star, config) {
            return Ok(AttemptOutcome { success: false, attempts: attempt, discarded: true, final_goal: goal, g_star, history });
        }
    }
    Ok(AttemptOutcome { success: false, attempts: config.max_attempts, discarded: false, final_goal: goal, g_star, history })
}

/// Baseline: goals drawn uniformly from the baseline grid without
/// replacement, optionally after one attempt at the nominal goal.
pub fn random_goal_baseline(
    spec: &WorkpieceSpec,
    truth: &DefectParams,
    config: &InferenceConfig,
    seed: u64,
) -> Result<AttemptOutcome, InferenceError> {
    config.validate()?;
    let first = config.baseline_nominal_first;
    let mut pool: Vec<PlanarPose> = config.baseline_grid().into_iter().filter(|p| !first || *p != PlanarPose::ORIGIN).collect();
    pool.shuffle(&mut rng::derived(seed, &[0x7a4d]));
    let goals = first.then_some(PlanarPose::ORIGIN).into_iter().chain(pool);
    let mut history = Vec::new();
    let mut last = PlanarPose::ORIGIN;
    for (k, goal) in goals.take(config.max_attempts).enumerate() {
        last = goal;
        let ok = contains(spec, truth, goal);
        history.push(InsertionRecord { pose: goal, success: ok });
        if ok {
            return Ok(AttemptOutcome { success: true, attempts: k + 1, discarded: false, final_goal: goal, g_star: f64::NAN, history });
        }
    }
    let attempts = history.len();
    Ok(AttemptOutcome { success: false, attempts, discarded: false, final_goal: last, g_star: f64::NAN, history })
}

/// The synthesised policy: every measurement reporting board contact adds a
/// failure record at the measured pose, and the target moves to the
/// re-optimised goal before acting.
pub struct SynthesizedController<'a, P: ?Sized> {
    policy: &'a P,
    spec: &'a WorkpieceSpec,
    particles: &'a ParticleSet,
    noise: PoseNoise,
    config: &'a InferenceConfig,
    seed: u64,
    target: PlanarPose,
    pub history: Vec<InsertionRecord>,
    pub g_star: f64,
}

impl<'a, P: Policy + ?Sized> SynthesizedController<'a, P> {
    pub fn new(
        policy: &'a P,
        spec: &'a WorkpieceSpec,
        particles: &'a ParticleSet,
        noise: PoseNoise,
        config: &'a InferenceConfig,
        seed: u64,
    ) -> Self {
        SynthesizedController {
            policy,
            spec,
            particles,
            noise,
            config,
            seed,
            target: PlanarPose::ORIGIN,
            history: Vec::new(),
            g_star: f64::NAN,
        }
    }
}

impl<P: Policy + ?Sized> Controller for SynthesizedController<'_, P> {
    fn target(&self) -> PlanarPose {
        self.target
    }

    fn act(&mut self, obs: &Observation) -> Action {
        let mut obs = *obs;
        if obs.0[7] != 0.0 {
            let measured = obs.measured_pose(self.target);
            self.history.push(InsertionRecord { pose: measured, success: false });
            let seed = rng::derive(self.seed, &[self.history.len() as u64]);
            if let Ok((g, s)) = optimal_goal(&self.history, self.spec, self.particles, self.noise, self.config, seed) {
                obs.0[0] += self.target.x - g.x;
                obs.0[1] += self.target.y - g.y;
                obs.0[2] += self.target.theta - g.theta;
                self.target = g;
                self.g_star = s;
            }
        }
        self.policy.act(&obs)
    }
}

/// Episode of the synthesised policy; the particle set is drawn from `prior`
/// per episode.
pub fn run_synthesized_episode<P: Policy + ?Sized>(
    env: &EnvConfig,
    task: &Task,
    policy: &P,
    prior: &DefectPrior,
    config: &InferenceConfig,
    seed: u64,
) -> Result<(Trajectory, Vec<InsertionRecord>), InferenceError> {
    let particles = sample_prior(&task.spec, prior, config.n_particles, rng::derive(seed, &[0x1d]))?;
    let noise = PoseNoise { std: [env.noise_std[0], env.noise_std[1], env.noise_std[2]] };
    let mut c = SynthesizedController::new(policy, &task.spec, &particles, noise, config, seed);
    let t = run_controller(env, task, &mut c, seed)?;
    Ok((t, c.history))
}

/// Attempt loop with the full noisy policy: each attempt is an episode aimed
/// at the current goal; a failed episode is recorded at its final measured pose.
pub fn attempt_loop_policy<P: Policy + ?Sized>(
    env: &EnvConfig,
    task: &Task,
    policy: &P,
    prior: &DefectPrior,
    config: &InferenceConfig,
    seed: u64,
) -> Result<AttemptOutcome, InferenceError> {
    config.validate()?;
    let spec = &task.spec;
    let particles = sample_prior(spec, prior, config.n_particles, rng::derive(seed, &[0x1d]))?;
    let noise = PoseNoise { std: [env.noise_std[0], env.noise_std[1], env.noise_std[2]] };
    let mut goal = PlanarPose::ORIGIN;
    let mut g_star = expected_success(spec, goal, &particles)?;
    let mut history = Vec::new();
    for attempt in 1..=config.max_attempts {
        let t = rollout(env, task, policy, goal, rng::derive(seed, &[0xa7, attempt as u64]))?;
        if t.success {
            return Ok(AttemptOutcome { success: true, attempts: attempt, discarded: false, final_goal: goal, g_star, history });
        }
        let last = t.steps.last().map(|s| s.state).unwrap_or(t.initial);
        let obs_pose = t.steps.last().map(|s| s.observation.measured_pose(goal)).unwrap_or(last.pose());
        history.push(InsertionRecord { pose: obs_pose, success: false });
        if attempt == config.max_attempts {
            break;
        }
        match optimal_goal(&history, spec, &particles, noise, config, rng::derive(seed, &[attempt as u64])) {
            Ok((g, s)) => {
                goal = g;
                g_star = s;
            }
            Err(InferenceError::Degenerate) => {
                return Ok(AttemptOutcome { success: false, attempts: attempt, discarded: true, final_goal: goal, g_star: 0.0, history });
            }
            Err(e) => return Err(e),
        }
        if should_discard(g_star, config) {
            return Ok(AttemptOutcome { success: false, attempts: attempt, discarded: true, final_goal: goal, g_star, history });
        }
    }
    Ok(AttemptOutcome { success: false, attempts: config.max_attempts, discarded: false, final_goal: goal, g_star, history })
}
