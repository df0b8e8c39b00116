//! TOML experiment configuration.
//!
//! A file holds top-level sections that apply to every experiment plus
//! optional per-experiment overrides:
//!
//! ```toml
//! seed = 3
//! [gail]
//! max_iterations = 60
//! [experiments."C3.2".gail]
//! max_iterations = 120
//! ```
//!
//! Unknown keys are rejected. Every default is the value the core library uses.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tgi_core::embedding::AeConfig;
use tgi_core::experts::ExpertConfig;
use tgi_core::inference::{InferenceConfig, PoseNoise};
use tgi_core::learning::{BcConfig, CurriculumConfig, GailConfig};
use tgi_core::sim::{EnvConfig, InitRange};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub dt: f64,
    pub a_max: [f64; 4],
    pub k_max: usize,
    pub reward_weight: f64,
    pub noise_std: [f64; 4],
    pub init_lo: [f64; 4],
    pub init_hi: [f64; 4],
    pub z_insert: f64,
    pub collision_tol: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let e = EnvConfig::default();
        EnvSection {
            dt: e.dt,
            a_max: e.a_max,
            k_max: e.k_max,
            reward_weight: e.reward_weight,
            noise_std: e.noise_std,
            init_lo: e.init_range.lo,
            init_hi: e.init_range.hi,
            z_insert: e.z_insert,
            collision_tol: e.collision_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpertSection {
    pub deadband_xy: f64,
    pub deadband_theta: f64,
    pub gain: f64,
}

impl Default for ExpertSection {
    fn default() -> Self {
        let e = ExpertConfig::default();
        ExpertSection { deadband_xy: e.deadband_xy, deadband_theta: e.deadband_theta, gain: e.gain }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BcSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub validation_fraction: f64,
}

impl Default for BcSection {
    fn default() -> Self {
        let b = BcConfig::default();
        BcSection { epochs: b.epochs, batch_size: b.batch_size, lr: b.lr, validation_fraction: b.validation_fraction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GailSection {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_start: Option<f64>,
    pub max_iterations: usize,
    pub discriminator_update_period: usize,
    pub discriminator_steps: usize,
    pub discriminator_lr: f64,
    pub discriminator_rollouts: usize,
    pub rollouts_per_fitness: usize,
    pub sigma0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<usize>,
    pub validation_episodes: usize,
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub confusion_band: [f64; 2],
}

impl Default for GailSection {
    fn default() -> Self {
        let g = GailConfig::default();
        GailSection {
            alpha: g.alpha,
            alpha_start: g.alpha_start,
            max_iterations: g.max_iterations,
            discriminator_update_period: g.discriminator_update_period,
            discriminator_steps: g.discriminator_steps,
            discriminator_lr: g.discriminator_lr,
            discriminator_rollouts: g.discriminator_rollouts,
            rollouts_per_fitness: g.rollouts_per_fitness,
            sigma0: g.sigma0,
            lambda: g.lambda,
            validation_episodes: g.validation_episodes,
            plateau_window: g.plateau_window,
            plateau_tolerance: g.plateau_tolerance,
            confusion_band: [g.confusion_band.0, g.confusion_band.1],
        }
    }
}

impl GailSection {
    fn to_core(&self) -> GailConfig {
        GailConfig {
            alpha: self.alpha,
            alpha_start: self.alpha_start,
            max_iterations: self.max_iterations,
            discriminator_update_period: self.discriminator_update_period,
            discriminator_steps: self.discriminator_steps,
            discriminator_lr: self.discriminator_lr,
            discriminator_rollouts: self.discriminator_rollouts,
            rollouts_per_fitness: self.rollouts_per_fitness,
            sigma0: self.sigma0,
            lambda: self.lambda,
            validation_episodes: self.validation_episodes,
            plateau_window: self.plateau_window,
            plateau_tolerance: self.plateau_tolerance,
            confusion_band: (self.confusion_band[0], self.confusion_band[1]),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumSection {
    pub demo_episodes: usize,
    /// Phase-2 iteration budget; the phase-1 budget is `gail.max_iterations`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase2_max_iterations: Option<usize>,
}

impl Default for CurriculumSection {
    fn default() -> Self {
        CurriculumSection { demo_episodes: CurriculumConfig::default().demo_episodes, phase2_max_iterations: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub n_specs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub holdout_fraction: f64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let a = AeConfig::default();
        EmbeddingSection { n_specs: 500, epochs: a.epochs, batch_size: a.batch_size, lr: a.lr, holdout_fraction: a.holdout_fraction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    pub n_particles: usize,
    pub n_noise_samples: usize,
    pub goal_box: [f64; 3],
    pub grid: [usize; 3],
    pub cma_generations: usize,
    pub cma_sigma0: f64,
    pub discard_threshold: f64,
    pub max_attempts: usize,
    pub baseline_box: [f64; 3],
    pub baseline_nominal_first: bool,
    /// Share of sampled parts insertable at the nominal goal that the defect
    /// prior is calibrated to.
    pub nominal_insertability: f64,
    pub calibration_samples: usize,
    /// Fixed defect std (mm); skips calibration when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_sigma: Option<f64>,
    pub study_samples: usize,
}

impl Default for InferenceSection {
    fn default() -> Self {
        let i = InferenceConfig::default();
        InferenceSection {
            n_particles: i.n_particles,
            n_noise_samples: i.n_noise_samples,
            goal_box: i.goal_box,
            grid: i.grid,
            cma_generations: i.cma_generations,
            cma_sigma0: i.cma_sigma0,
            discard_threshold: i.discard_threshold,
            max_attempts: i.max_attempts,
            baseline_box: i.baseline_box,
            baseline_nominal_first: i.baseline_nominal_first,
            nominal_insertability: 0.6,
            calibration_samples: 20_000,
            prior_sigma: None,
            study_samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub episodes: usize,
    /// Trajectory snapshots written per evaluation.
    pub snapshots: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { episodes: 200, snapshots: 3 }
    }
}

/// Effective configuration of one experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub env: EnvSection,
    pub expert: ExpertSection,
    pub bc: BcSection,
    pub gail: GailSection,
    pub curriculum: CurriculumSection,
    pub embedding: EmbeddingSection,
    pub inference: InferenceSection,
    pub eval: EvalSection,
}

impl Config {
    pub fn env(&self) -> EnvConfig {
        let e = &self.env;
        EnvConfig {
            dt: e.dt,
            a_max: e.a_max,
            k_max: e.k_max,
            reward_weight: e.reward_weight,
            noise_std: e.noise_std,
            init_range: InitRange { lo: e.init_lo, hi: e.init_hi },
            z_insert: e.z_insert,
            collision_tol: e.collision_tol,
        }
    }

    pub fn expert(&self) -> ExpertConfig {
        ExpertConfig {
            deadband_xy: self.expert.deadband_xy,
            deadband_theta: self.expert.deadband_theta,
            gain: self.expert.gain,
            a_max: self.env.a_max,
            dt: self.env.dt,
        }
    }

    pub fn curriculum(&self) -> CurriculumConfig {
        let b = &self.bc;
        let phase1 = self.gail.to_core();
        let phase2 = GailConfig { max_iterations: self.curriculum.phase2_max_iterations.unwrap_or(phase1.max_iterations), ..phase1.clone() };
        CurriculumConfig {
            demo_episodes: self.curriculum.demo_episodes,
            bc: BcConfig { epochs: b.epochs, batch_size: b.batch_size, lr: b.lr, validation_fraction: b.validation_fraction, seed: 0 },
            phase1,
            phase2,
            seed: self.seed,
        }
    }

    pub fn autoencoder(&self) -> AeConfig {
        let e = &self.embedding;
        AeConfig { epochs: e.epochs, batch_size: e.batch_size, lr: e.lr, holdout_fraction: e.holdout_fraction, seed: self.seed }
    }

    pub fn inference(&self) -> InferenceConfig {
        let i = &self.inference;
        InferenceConfig {
            n_particles: i.n_particles,
            n_noise_samples: i.n_noise_samples,
            goal_box: i.goal_box,
            grid: i.grid,
            cma_generations: i.cma_generations,
            cma_sigma0: i.cma_sigma0,
            discard_threshold: i.discard_threshold,
            max_attempts: i.max_attempts,
            baseline_box: i.baseline_box,
            baseline_nominal_first: i.baseline_nominal_first,
        }
    }

    /// Measurement noise on the planar pose, as seen by the inference.
    pub fn pose_noise(&self) -> PoseNoise {
        PoseNoise { std: [self.env.noise_std[0], self.env.noise_std[1], self.env.noise_std[2]] }
    }

    /// Checks every section against the core library's own validation.
    pub fn validate(&self) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
        self.env().validate().map_err(|e| bad(&e))?;
        self.expert().validate().map_err(|e| bad(&e))?;
        let c = self.curriculum();
        c.phase1.validate().map_err(|e| bad(&e))?;
        c.phase2.validate().map_err(|e| bad(&e))?;
        self.inference().validate().map_err(|e| bad(&e))?;
        let b = &self.bc;
        if b.epochs == 0 || b.batch_size == 0 || !(0.0..1.0).contains(&b.validation_fraction) || !(b.lr > 0.0) {
            return Err(Error::Config("bc: epochs and batch_size ≥ 1, lr > 0, validation_fraction in [0, 1)".into()));
        }
        let e = &self.embedding;
        if e.n_specs < 2 || e.epochs == 0 || e.batch_size == 0 || !(0.0..1.0).contains(&e.holdout_fraction) || !(e.lr > 0.0) {
            return Err(Error::Config("embedding: n_specs ≥ 2, epochs and batch_size ≥ 1, lr > 0, holdout_fraction in [0, 1)".into()));
        }
        if self.curriculum.demo_episodes == 0 {
            return Err(Error::Config("curriculum.demo_episodes must be at least 1".into()));
        }
        let i = &self.inference;
        if !(i.nominal_insertability > 0.0 && i.nominal_insertability < 1.0) || i.calibration_samples == 0 || i.study_samples == 0 {
            return Err(Error::Config("inference: nominal_insertability in (0, 1), sample counts ≥ 1".into()));
        }
        if i.prior_sigma.is_some_and(|s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("inference.prior_sigma must be finite and non-negative".into()));
        }
        if self.eval.episodes < 2 {
            return Err(Error::Config("eval.episodes must be at least 2".into()));
        }
        Ok(())
    }

    /// Serialised subset of sections, used to fingerprint experiment stages.
    pub fn canonical(&self, sections: &[&str]) -> String {
        let table = toml::Table::try_from(self).expect("config serialises");
        let mut out = String::new();
        for s in sections {
            let v = table.get(*s).unwrap_or_else(|| panic!("unknown config section {s}"));
            match v {
                toml::Value::Table(_) => out.push_str(&format!("[{s}]\n{v}\n")),
                _ => out.push_str(&format!("{s} = {v}\n")),
            }
        }
        out
    }
}

/// A parsed configuration file: shared sections plus per-experiment overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    base: toml::Table,
    overrides: BTreeMap<String, toml::Table>,
    seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut base: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut overrides = BTreeMap::new();
        if let Some(v) = base.remove("experiments") {
            let toml::Value::Table(t) = v else {
                return Err(Error::Config("`experiments` must be a table keyed by experiment id".into()));
            };
            for (id, v) in t {
                if crate::experiments::preset(&id).is_none() {
                    return Err(Error::Config(format!("unknown experiment id `{id}` in [experiments]")));
                }
                let toml::Value::Table(o) = v else {
                    return Err(Error::Config(format!("experiments.\"{id}\" must be a table")));
                };
                overrides.insert(id, o);
            }
        }
        let file = ConfigFile { base, overrides, seed: None };
        file.resolve(None)?;
        for id in file.overrides.keys() {
            file.resolve(Some(id))?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Replaces the seed of every experiment.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed.or(self.seed);
        self
    }

    /// Effective configuration for `experiment` (or the shared sections).
    pub fn resolve(&self, experiment: Option<&str>) -> Result<Config> {
        let mut table = self.base.clone();
        if let Some(o) = experiment.and_then(|id| self.overrides.get(id)) {
            merge(&mut table, o);
        }
        let mut config: Config = table.try_into().map_err(|e: toml::de::Error| {
            let at = experiment.map(|id| format!(" (experiment {id})")).unwrap_or_default();
            Error::Config(format!("{}{at}", e.to_string().trim_end()))
        })?;
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.validate()?;
        Ok(config)
    }
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
