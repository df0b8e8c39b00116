//! Behaviour cloning, RS-GAIL and the two-phase curriculum.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::cmaes::{Cmaes, CmaesConfig, CmaesError};
use crate::geometry::PlanarPose;
use crate::math::{mean, sample_std};
use crate::nn::{
    discriminator_input, discriminator_spec, nominal_spec, scaled_obs, Adam, NetPolicy, NnError, PolicyParams,
    ACT_DIM, EMBED_DIM, OBS_DIM,
};
use crate::par;
use crate::rng;
use crate::sim::{rollout, Action, EnvConfig, Observation, Policy, SimError, Task, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearningError {
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("network: {0}")]
    Nn(#[from] NnError),
    #[error("cma-es: {0}")]
    Cmaes(#[from] CmaesError),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("empty demonstration set")]
    EmptyDemos,
    #[error("empty task set")]
    EmptyTasks,
    #[error("loss diverged")]
    Diverged,
    #[error("non-finite fitness")]
    NonFiniteFitness,
}

/// A task together with the embedding the policy sees for it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEntry {
    pub task: Task,
    pub embedding: Option<[f64; EMBED_DIM]>,
}

impl TaskEntry {
    pub fn nominal(task: Task) -> Self {
        TaskEntry { task, embedding: None }
    }
}

/// Environment configuration plus the task set rollouts sample from uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSetup {
    pub config: EnvConfig,
    pub tasks: Vec<TaskEntry>,
    pub target: PlanarPose,
}

impl EnvSetup {
    pub fn new(config: EnvConfig, tasks: Vec<TaskEntry>) -> Self {
        EnvSetup { config, tasks, target: PlanarPose::ORIGIN }
    }

    /// Task used by the episode with this seed.
    pub fn task_for(&self, seed: u64) -> &TaskEntry {
        &self.tasks[(rng::derive(seed, &[0x7a5]) % self.tasks.len() as u64) as usize]
    }

    fn check(&self) -> Result<(), LearningError> {
        if self.tasks.is_empty() {
            return Err(LearningError::EmptyTasks);
        }
        self.config.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoEpisode {
    pub pairs: Vec<(Observation, Action)>,
    pub reward: f64,
    pub success: bool,
    pub collisions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub expert: String,
    pub episodes: Vec<DemoEpisode>,
}

impl DemoSet {
    pub fn pairs(&self) -> impl Iterator<Item = &(Observation, Action)> {
        self.episodes.iter().flat_map(|e| e.pairs.iter())
    }

    pub fn pair_count(&self) -> usize {
        self.episodes.iter().map(|e| e.pairs.len()).sum()
    }

    pub fn success_rate(&self) -> f64 {
        self.episodes.iter().filter(|e| e.success).count() as f64 / self.episodes.len().max(1) as f64
    }

    pub fn mean_steps(&self) -> f64 {
        mean(&self.episodes.iter().map(|e| e.pairs.len() as f64).collect::<Vec<_>>())
    }
}

fn run_episode<P: Policy + ?Sized>(setup: &EnvSetup, entry: &TaskEntry, policy: &P, seed: u64) -> Result<Trajectory, SimError> {
    rollout(&setup.config, &entry.task, policy, setup.target, seed)
}

/// Expert episodes behind [`collect_demos`], with full state.
pub fn demo_rollouts<P: Policy + Sync + ?Sized>(
    expert: &P,
    setup: &EnvSetup,
    n_episodes: usize,
    seed: u64,
) -> Result<Vec<Trajectory>, LearningError> {
    setup.check()?;
    if n_episodes == 0 {
        return Err(LearningError::Config("n_episodes must be at least 1"));
    }
    let episodes = par::map_indexed(n_episodes, |i| {
        let s = rng::derive(seed, &[0xde, i as u64]);
        run_episode(setup, setup.task_for(s), expert, s)
    });
    Ok(episodes.into_iter().collect::<Result<Vec<_>, _>>()?)
}

impl DemoSet {
    pub fn from_trajectories(tag: &str, trajectories: &[Trajectory]) -> Self {
        let episodes = trajectories
            .iter()
            .map(|t| DemoEpisode {
                pairs: t.steps.iter().map(|st| (st.observation, st.action)).collect(),
                reward: t.total_reward(),
                success: t.success,
                collisions: t.collisions(),
            })
            .collect();
        DemoSet { expert: tag.into(), episodes }
    }
}

pub fn collect_demos<P: Policy + Sync + ?Sized>(
    expert: &P,
    tag: &str,
    setup: &EnvSetup,
    n_episodes: usize,
    seed: u64,
) -> Result<DemoSet, LearningError> {
    Ok(DemoSet::from_trajectories(tag, &demo_rollouts(expert, setup, n_episodes, seed)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig { epochs: 200, batch_size: 64, lr: 1e-3, validation_fraction: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcOutcome {
    pub phi1: Vec<f64>,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub best_epoch: usize,
}

fn bc_sample(obs: &Observation, action: &Action, a_max: &[f64; 4]) -> ([f64; OBS_DIM], [f64; ACT_DIM]) {
    let a = action.to_array();
    (scaled_obs(obs), core::array::from_fn(|i| a[i] / a_max[i]))
}

/// Mean over samples and action axes of `(tanh(raw) - a/a_max)²`, with gradient.
fn bc_loss(phi1: &[f64], samples: &[([f64; OBS_DIM], [f64; ACT_DIM])]) -> Result<(f64, Vec<f64>), NnError> {
    let spec = nominal_spec();
    let inputs: Vec<&[f64]> = samples.iter().map(|s| &s.0[..]).collect();
    spec.gradient(phi1, &inputs, |k, raw| {
        let target = &samples[k].1;
        let mut l = 0.0;
        let g = (0..ACT_DIM)
            .map(|i| {
                let y = crate::math::tanh(raw[i]);
                let r = y - target[i];
                l += r * r / ACT_DIM as f64;
                2.0 * r * (1.0 - y * y) / ACT_DIM as f64
            })
            .collect();
        (l, g)
    })
}

/// Fits `φ1` to the demonstrations by minibatch Adam on normalised action
/// error, keeping the parameters with the lowest validation loss.
pub fn behavior_cloning(
    demos: &DemoSet,
    init_phi1: &[f64],
    a_max: &[f64; 4],
    config: &BcConfig,
) -> Result<BcOutcome, LearningError> {
    let mut samples: Vec<_> = demos.pairs().map(|(o, a)| bc_sample(o, a, a_max)).collect();
    if samples.is_empty() {
        return Err(LearningError::EmptyDemos);
    }
    let mut r = rng::derived(config.seed, &[0xbc]);
    samples.shuffle(&mut r);
    let n_val = ((samples.len() as f64 * config.validation_fraction) as usize).clamp(1, samples.len());
    let (val, train) = samples.split_at(n_val);
    let train: Vec<_> = if train.is_empty() { val.to_vec() } else { train.to_vec() };
    let mut phi1 = init_phi1.to_vec();
    let mut opt = Adam::new(phi1.len(), config.lr);
    let mut best = (bc_loss(&phi1, val)?.0, phi1.clone(), 0usize);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut r);
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<_> = chunk.iter().map(|&i| train[i]).collect();
            let (l, g) = bc_loss(&phi1, &batch)?;
            if !l.is_finite() {
                return Err(LearningError::Diverged);
            }
            opt.step(&mut phi1, &g).map_err(|_| LearningError::Diverged)?;
        }
        let v = bc_loss(&phi1, val)?.0;
        if !v.is_finite() {
            return Err(LearningError::Diverged);
        }
        if v < best.0 {
            best = (v, phi1.clone(), epoch);
        }
    }
    let (validation_loss, phi1, best_epoch) = best;
    let train_loss = bc_loss(&phi1, &train)?.0;
    Ok(BcOutcome { phi1, train_loss, validation_loss, best_epoch })
}

pub type DiscInput = [f64; OBS_DIM + ACT_DIM];

pub fn discriminator_mean(d: &[f64], batch: &[DiscInput]) -> f64 {
    let spec = discriminator_spec();
    mean(&batch.iter().map(|x| spec.forward(d, x).expect("discriminator length")[0]).collect::<Vec<_>>())
}

/// Gradient of `-(E_e[D] - E_s[D])` with respect to the discriminator parameters.
pub fn discriminator_objective_grad(d: &[f64], expert: &[DiscInput], student: &[DiscInput]) -> Result<(f64, Vec<f64>), NnError> {
    let spec = discriminator_spec();
    let mut grad = vec![0.0; d.len()];
    let mut gap = 0.0;
    for (batch, sign) in [(expert, -1.0), (student, 1.0)] {
        let w = sign / batch.len() as f64;
        for x in batch {
            let tape = spec.forward_tape(d, x)?;
            gap -= w * tape.output()[0];
            spec.backward(d, &tape, &[w], &mut grad);
        }
    }
    Ok((-gap, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorStats {
    pub mean_expert: f64,
    pub mean_student: f64,
}

/// Ascends `E_e[D] − E_s[D]` for `steps` Adam steps and reports the mean
/// scores after the update.
pub fn discriminator_update(
    d: &mut [f64],
    opt: &mut Adam,
    expert: &[DiscInput],
    student: &[DiscInput],
    steps: usize,
) -> Result<DiscriminatorStats, LearningError> {
    if expert.is_empty() || student.is_empty() {
        return Err(LearningError::EmptyDemos);
    }
    for _ in 0..steps {
        let (_, g) = discriminator_objective_grad(d, expert, student)?;
        opt.step(d, &g).map_err(|_| LearningError::Diverged)?;
    }
    Ok(DiscriminatorStats { mean_expert: discriminator_mean(d, expert), mean_student: discriminator_mean(d, student) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamBlock {
    Phi1,
    Phi2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GailConfig {
    pub alpha: f64,
    /// If set, α ramps linearly from this value to `alpha` over the run.
    pub alpha_start: Option<f64>,
    pub max_iterations: usize,
    pub discriminator_update_period: usize,
    pub discriminator_steps: usize,
    pub discriminator_lr: f64,
    /// Student episodes rolled out for each discriminator refresh.
    pub discriminator_rollouts: usize,
    pub rollouts_per_fitness: usize,
    pub sigma0: f64,
    pub lambda: Option<usize>,
    /// Fixed-seed episodes scoring the search mean each iteration.
    pub validation_episodes: usize,
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub confusion_band: (f64, f64),
    pub seed: u64,
}

impl Default for GailConfig {
    fn default() -> Self {
        GailConfig {
            alpha: 0.8,
            alpha_start: None,
            max_iterations: 100,
            discriminator_update_period: 5,
            discriminator_steps: 50,
            discriminator_lr: 1e-3,
            discriminator_rollouts: 20,
            rollouts_per_fitness: 5,
            sigma0: 0.05,
            lambda: None,
            validation_episodes: 50,
            plateau_window: 10,
            plateau_tolerance: 0.5,
            confusion_band: (0.4, 0.6),
            seed: 0,
        }
    }
}

impl GailConfig {
    pub fn validate(&self) -> Result<(), LearningError> {
        let ok_alpha = |a: f64| (0.0..=1.0).contains(&a);
        if !ok_alpha(self.alpha) || !self.alpha_start.is_none_or(ok_alpha) {
            return Err(LearningError::Config("alpha must lie in [0, 1]"));
        }
        if self.discriminator_update_period == 0 {
            return Err(LearningError::Config("discriminator update period must be at least 1"));
        }
        if self.rollouts_per_fitness == 0 || self.discriminator_rollouts == 0 {
            return Err(LearningError::Config("rollout counts must be positive"));
        }
        if !(self.sigma0 > 0.0) {
            return Err(LearningError::Config("sigma0 must be positive"));
        }
        if self.confusion_band.0 > self.confusion_band.1 {
            return Err(LearningError::Config("confusion band is reversed"));
        }
        Ok(())
    }

    pub fn alpha_at(&self, iteration: usize) -> f64 {
        match self.alpha_start {
            None => self.alpha,
            Some(a0) => {
                let t = if self.max_iterations <= 1 { 1.0 } else { iteration as f64 / (self.max_iterations - 1) as f64 };
                a0 + (self.alpha - a0) * t.min(1.0)
            }
        }
    }
}

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub reward_std: f64,
    pub mean_d_student: f64,
    pub mean_d_expert: f64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GailOutcome {
    pub params: PolicyParams,
    pub curve: Vec<CurveRow>,
    pub discriminator: Vec<f64>,
    pub stopped_early: bool,
}

struct EpisodeScore {
    reward: f64,
    fitness: f64,
    mean_d: f64,
}

fn score_episode(t: &Trajectory, d: &[f64], alpha: f64, a_max: &[f64; 4]) -> EpisodeScore {
    let spec = discriminator_spec();
    let n = t.steps.len().max(1) as f64;
    let mean_d = t
        .steps
        .iter()
        .map(|s| spec.forward(d, &discriminator_input(&s.observation, &s.action, a_max)).expect("disc")[0])
        .sum::<f64>()
        / n;
    let mean_r = t.steps.iter().map(|s| s.reward).sum::<f64>() / n;
    EpisodeScore { reward: t.total_reward(), fitness: (1.0 - alpha) * mean_d + alpha * mean_r, mean_d }
}

fn compose(base: &PolicyParams, block: ParamBlock, x: &[f64]) -> PolicyParams {
    let mut p = base.clone();
    match block {
        ParamBlock::Phi1 => p.phi1.copy_from_slice(x),
        ParamBlock::Phi2 => p.phi2.copy_from_slice(x),
    }
    p
}

fn episodes(
    setup: &EnvSetup,
    params: &PolicyParams,
    seeds: &[u64],
) -> Result<Vec<Trajectory>, SimError> {
    let a_max = setup.config.a_max;
    par::map_indexed(seeds.len(), |j| {
        let entry = setup.task_for(seeds[j]);
        let policy = NetPolicy { params: params.clone(), embedding: entry.embedding, a_max };
        run_episode(setup, entry, &policy, seeds[j])
    })
    .into_iter()
    .collect()
}

/// RS-GAIL: CMA-ES over one parameter block with fitness
/// `(1−α)·mean_t D + α·mean_t r`, refreshing the discriminator periodically.
/// Each iteration also scores the search mean on fixed validation seeds; the
/// best of these (including the initial parameters) is returned.
pub fn rs_gail(
    setup: &EnvSetup,
    init: &PolicyParams,
    demos: &DemoSet,
    block: ParamBlock,
    config: &GailConfig,
) -> Result<GailOutcome, LearningError> {
    config.validate()?;
    setup.check()?;
    if block == ParamBlock::Phi2 && setup.tasks.iter().any(|t| t.embedding.is_none()) {
        return Err(LearningError::Config("adaptation training needs an embedding for every task"));
    }
    let a_max = setup.config.a_max;
    let expert: Vec<DiscInput> = demos.pairs().map(|(o, a)| discriminator_input(o, a, &a_max)).collect();
    if expert.is_empty() {
        return Err(LearningError::EmptyDemos);
    }
    let seed = config.seed;
    let dspec = discriminator_spec();
    let mut d = dspec.init(&mut rng::derived(seed, &[0xd15c]));
    let mut dopt = Adam::new(d.len(), config.discriminator_lr);

    let x0 = match block {
        ParamBlock::Phi1 => init.phi1.clone(),
        ParamBlock::Phi2 => init.phi2.clone(),
    };
    let cfg = CmaesConfig { lambda: config.lambda, ..CmaesConfig::new(config.sigma0, rng::derive(seed, &[0xc7a])) };
    let mut es = Cmaes::new(x0, &cfg)?;

    let val_seeds: Vec<u64> = (0..config.validation_episodes).map(|i| rng::derive(seed, &[0x7a1, i as u64])).collect();
    let validate = |params: &PolicyParams, d: &[f64], alpha: f64| -> Result<f64, LearningError> {
        if val_seeds.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        let ts = episodes(setup, params, &val_seeds)?;
        Ok(mean(&ts.iter().map(|t| score_episode(t, d, alpha, &a_max).fitness).collect::<Vec<_>>()))
    };

    let mut best_params = init.clone();
    let mut best_fitness = f64::NEG_INFINITY;
    let mut curve = Vec::new();
    let mut stats = DiscriminatorStats { mean_expert: f64::NAN, mean_student: f64::NAN };
    let mut stopped_early = false;

    for it in 0..config.max_iterations {
        let alpha = config.alpha_at(it);
        if it % config.discriminator_update_period == 0 {
            let mean_params = compose(init, block, es.mean());
            let seeds: Vec<u64> =
                (0..config.discriminator_rollouts).map(|j| rng::derive(seed, &[0xd5, it as u64, j as u64])).collect();
            let student: Vec<DiscInput> = episodes(setup, &mean_params, &seeds)?
                .iter()
                .flat_map(|t| t.steps.iter().map(|s| discriminator_input(&s.observation, &s.action, &a_max)))
                .collect();
            stats = discriminator_update(&mut d, &mut dopt, &expert, &student, config.discriminator_steps)?;
            // Scores from before the refresh are not comparable with later ones.
            if it == 0 {
                best_fitness = validate(init, &d, alpha)?;
            }
        }

        let xs = es.ask();
        let seeds: Vec<u64> =
            (0..config.rollouts_per_fitness).map(|j| rng::derive(seed, &[0xf17, it as u64, j as u64])).collect();
        let lam = xs.len();
        let r = config.rollouts_per_fitness;
        let scored = par::map_indexed(lam * r, |k| {
            let (c, j) = (k / r, k % r);
            let params = compose(init, block, &xs[c]);
            let entry = setup.task_for(seeds[j]);
            let policy = NetPolicy { params, embedding: entry.embedding, a_max };
            run_episode(setup, entry, &policy, seeds[j]).map(|t| score_episode(&t, &d, alpha, &a_max))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let fitness: Vec<f64> = (0..lam).map(|c| mean(&scored[c * r..(c + 1) * r].iter().map(|s| s.fitness).collect::<Vec<_>>())).collect();
        if fitness.iter().any(|f| !f.is_finite()) {
            return Err(LearningError::NonFiniteFitness);
        }
        es.tell(&xs, &fitness)?;

        let mean_params = compose(init, block, es.mean());
        let v = validate(&mean_params, &d, alpha)?;
        if v > best_fitness {
            best_fitness = v;
            best_params = mean_params;
        }
        let rewards: Vec<f64> = scored.iter().map(|s| s.reward).collect();
        curve.push(CurveRow {
            iteration: it,
            mean_reward: mean(&rewards),
            reward_std: sample_std(&rewards),
            mean_d_student: mean(&scored.iter().map(|s| s.mean_d).collect::<Vec<_>>()),
            mean_d_expert: stats.mean_expert,
            best_fitness,
        });
        if should_stop(&curve, config) {
            stopped_early = true;
            break;
        }
    }
    Ok(GailOutcome { params: best_params, curve, discriminator: d, stopped_early })
}

/// Reward plateau over two consecutive windows, with the student's mean
/// discriminator score inside the confusion band throughout the last window.
pub fn should_stop(curve: &[CurveRow], config: &GailConfig) -> bool {
    let w = config.plateau_window;
    if w == 0 || curve.len() < 2 * w {
        return false;
    }
    let n = curve.len();
    let recent: Vec<f64> = curve[n - w..].iter().map(|c| c.mean_reward).collect();
    let before: Vec<f64> = curve[n - 2 * w..n - w].iter().map(|c| c.mean_reward).collect();
    let plateau = (mean(&recent) - mean(&before)).abs() < config.plateau_tolerance;
    let (lo, hi) = config.confusion_band;
    let confused = curve[n - w..].iter().all(|c| (lo..=hi).contains(&c.mean_d_student));
    plateau && confused
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumConfig {
    pub demo_episodes: usize,
    pub bc: BcConfig,
    pub phase1: GailConfig,
    pub phase2: GailConfig,
    pub seed: u64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            demo_episodes: 50,
            bc: BcConfig::default(),
            phase1: GailConfig::default(),
            phase2: GailConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumOutcome {
    pub bc: PolicyParams,
    pub nominal: PolicyParams,
    pub diversified: PolicyParams,
    pub phase1_curve: Vec<CurveRow>,
    pub phase2_curve: Vec<CurveRow>,
}

fn init_rng(seed: u64) -> (PolicyParams, rng::Rng) {
    let mut r = rng::derived(seed, &[0x1a17]);
    let init = PolicyParams::init(&mut r);
    (init, r)
}

/// Phase-1 expert episodes; every phase-1 stage of a curriculum with this
/// seed sees the same set.
pub fn phase1_demo_rollouts<P: Policy + Sync + ?Sized>(
    expert: &P,
    phase1: &EnvSetup,
    config: &CurriculumConfig,
) -> Result<Vec<Trajectory>, LearningError> {
    demo_rollouts(expert, phase1, config.demo_episodes, rng::derive(config.seed, &[1]))
}

pub fn phase1_demos<P: Policy + Sync + ?Sized>(
    expert: &P,
    expert_tag: &str,
    phase1: &EnvSetup,
    config: &CurriculumConfig,
) -> Result<DemoSet, LearningError> {
    Ok(DemoSet::from_trajectories(expert_tag, &phase1_demo_rollouts(expert, phase1, config)?))
}

/// Behaviour cloning stage of the curriculum. The returned parameters carry
/// the cloned `φ1`.
pub fn clone_stage(demos: &DemoSet, a_max: &[f64; 4], config: &CurriculumConfig) -> Result<(PolicyParams, BcOutcome), LearningError> {
    let (mut init, _) = init_rng(config.seed);
    let bc = behavior_cloning(demos, &init.phi1, a_max, &BcConfig { seed: rng::derive(config.seed, &[2]), ..config.bc.clone() })?;
    init.phi1 = bc.phi1.clone();
    Ok((init, bc))
}

/// RS-GAIL refinement of `φ1` from the cloned policy. The result's `φ2` is
/// freshly initialised for phase 2.
pub fn nominal_stage(
    phase1: &EnvSetup,
    bc_params: &PolicyParams,
    demos: &DemoSet,
    config: &CurriculumConfig,
) -> Result<GailOutcome, LearningError> {
    let mut g1 = rs_gail(phase1, bc_params, demos, ParamBlock::Phi1, &GailConfig { seed: rng::derive(config.seed, &[3]), ..config.phase1.clone() })?;
    let (_, mut r) = init_rng(config.seed);
    g1.params.phi2 = PolicyParams::init_phi2(&mut r);
    Ok(g1)
}

/// Phase 2: freezes `φ1` and trains `φ2` over the embedded `phase2` tasks.
pub fn diversify_stage<P: Policy + Sync + ?Sized>(
    expert: &P,
    expert_tag: &str,
    nominal: &PolicyParams,
    phase2: &EnvSetup,
    config: &CurriculumConfig,
) -> Result<(DemoSet, GailOutcome), LearningError> {
    phase2.check()?;
    let demos = collect_demos(expert, expert_tag, phase2, config.demo_episodes, rng::derive(config.seed, &[4]))?;
    let g2 = rs_gail(phase2, nominal, &demos, ParamBlock::Phi2, &GailConfig { seed: rng::derive(config.seed, &[5]), ..config.phase2.clone() })?;
    Ok((demos, g2))
}

/// Phase 1 clones the expert on `phase1` and refines `φ1` with RS-GAIL;
/// phase 2 freezes `φ1`, zero-initialises the adaptation output layer and
/// trains `φ2` over the embedded `phase2` tasks.
pub fn curriculum<P: Policy + Sync + ?Sized>(
    expert: &P,
    expert_tag: &str,
    phase1: &EnvSetup,
    phase2: &EnvSetup,
    config: &CurriculumConfig,
) -> Result<CurriculumOutcome, LearningError> {
    phase2.check()?;
    let demos1 = phase1_demos(expert, expert_tag, phase1, config)?;
    let (bc_params, _) = clone_stage(&demos1, &phase1.config.a_max, config)?;
    let g1 = nominal_stage(phase1, &bc_params, &demos1, config)?;
    let (_, g2) = diversify_stage(expert, expert_tag, &g1.params, phase2, config)?;
    Ok(CurriculumOutcome {
        bc: bc_params,
        nominal: g1.params,
        diversified: g2.params,
        phase1_curve: g1.curve,
        phase2_curve: g2.curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::{Expert, ExpertConfig};
    use crate::geometry::WorkpieceSpec;

    fn setup() -> EnvSetup {
        EnvSetup::new(EnvConfig::default(), vec![TaskEntry::nominal(Task::nominal(WorkpieceSpec::socket_2xn(2)))])
    }

    #[test]
    fn demos_are_deterministic() {
        let e = Expert::safe(ExpertConfig::default());
        let a = collect_demos(&e, "safe", &setup(), 1, 5).unwrap();
        let b = collect_demos(&e, "safe", &setup(), 1, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.episodes.len(), 1);
        assert!(collect_demos(&e, "safe", &setup(), 0, 5).is_err());
    }

    #[test]
    fn constant_action_is_cloned() {
        let obs: Vec<Observation> =
            (0..40).map(|k| Observation([k as f64 * 0.05 - 1.0, 0.3, 0.01, 1.0, 0.0, 0.0, 0.0, 0.0])).collect();
        let act = Action { ux: 1.0, uy: -0.5, utheta: 0.02, uz: -1.5 };
        let demos = DemoSet {
            expert: "const".into(),
            episodes: vec![DemoEpisode { pairs: obs.iter().map(|o| (*o, act)).collect(), reward: 0.0, success: false, collisions: 0 }],
        };
        let a_max = [2.5, 2.5, 0.1, 2.5];
        let init = nominal_spec().init(&mut rng::from_seed(1));
        let out = behavior_cloning(&demos, &init, &a_max, &BcConfig { epochs: 1500, lr: 3e-3, ..BcConfig::default() }).unwrap();
        let p = PolicyParams { phi1: out.phi1, phi2: PolicyParams::zeros().phi2 };
        for o in &obs {
            let a = crate::nn::policy_act(&p, o, None, &a_max).to_array();
            for (x, y) in a.iter().zip(act.to_array()) {
                assert!((x - y).abs() < 1e-2, "{a:?}");
            }
        }
    }

    #[test]
    fn discriminator_symmetric_batches_have_zero_gradient() {
        let d = discriminator_spec().init(&mut rng::from_seed(2));
        let batch: Vec<DiscInput> = (0..10).map(|k| core::array::from_fn(|i| ((k + i) % 5) as f64 * 0.3 - 0.6)).collect();
        let (gap, g) = discriminator_objective_grad(&d, &batch, &batch).unwrap();
        assert!(gap.abs() < 1e-12);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn discriminator_separates_clusters() {
        let mut d = discriminator_spec().init(&mut rng::from_seed(3));
        let mut opt = Adam::new(d.len(), 1e-2);
        let expert: Vec<DiscInput> = (0..20).map(|k| core::array::from_fn(|i| 1.0 + 0.01 * ((k * i) % 7) as f64)).collect();
        let student: Vec<DiscInput> = (0..20).map(|k| core::array::from_fn(|i| -1.0 - 0.01 * ((k + i) % 7) as f64)).collect();
        let mut last = f64::NEG_INFINITY;
        for _ in 0..10 {
            let s = discriminator_update(&mut d, &mut opt, &expert, &student, 1).unwrap();
            let gap = s.mean_expert - s.mean_student;
            assert!(gap > last);
            last = gap;
        }
        let s = discriminator_update(&mut d, &mut opt, &expert, &student, 100).unwrap();
        assert!(s.mean_expert > s.mean_student + 0.5);
    }

    #[test]
    fn alpha_schedule() {
        let c = GailConfig { alpha_start: Some(0.2), max_iterations: 11, ..GailConfig::default() };
        assert!((c.alpha_at(0) - 0.2).abs() < 1e-12);
        assert!((c.alpha_at(10) - 0.8).abs() < 1e-12);
        assert!(GailConfig { alpha: 1.5, ..GailConfig::default() }.validate().is_err());
        assert!(GailConfig { discriminator_update_period: 0, ..GailConfig::default() }.validate().is_err());
    }
}
