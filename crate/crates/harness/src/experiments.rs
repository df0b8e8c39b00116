//! Experiment presets and the stage pipeline.
//!
//! Each preset writes into `<out>/<id>/` and finishes by writing a manifest.
//! Presets that consume another preset's checkpoint refuse to run when the
//! upstream manifest is missing, was produced under a different config, or
//! its files no longer match their hashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tgi_core::embedding::{self, autoencoder_stack, encode, generate_dataset, train_autoencoder, Autoencoder};
use tgi_core::eval::{episode_seed, evaluate_episodes, EpisodeStats, EvalReport};
use tgi_core::experts::{Expert, ExpertKind};
use tgi_core::geometry::{contains, DefectParams, Family, PlanarPose, WorkpieceSpec};
use tgi_core::inference::{self, calibrate_sigma, sample_defects, AttemptOutcome, DefectPrior};
use tgi_core::learning::{self, DemoSet, EnvSetup, TaskEntry};
use tgi_core::nn::{NetPolicy, PolicyParams, EMBED_DIM};
use tgi_core::sim::{rollout, Policy, Task, Trajectory};
use tgi_core::{par, rng};

use crate::config::{Config, ConfigFile};
use crate::error::{Error, Result};
use crate::formats;
use crate::manifest::{sha256_hex, Manifest};
use crate::plot::{self, Series};
use crate::workpieces;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    /// Train the tolerance autoencoder of a family.
    Autoencoder(Family),
    /// Evaluate a scripted expert.
    Expert { kind: ExpertKind, env: &'static str },
    /// Collect demonstrations and clone them.
    Clone { kind: ExpertKind, env: &'static str },
    /// RS-GAIL on the cloned policy (upstream: the clone stage).
    Nominal { kind: ExpertKind, env: &'static str },
    /// Evaluate a nominal policy elsewhere (upstream: the nominal stage).
    Transfer { eval: &'static str },
    /// Phase 2 on embedded tasks (upstream: nominal stage, autoencoder).
    Diversify { kind: ExpertKind, train: &'static [&'static str], eval: &'static str },
    /// Defected 2*1 parts with or without goal inference (upstream: diversified policy, autoencoder).
    Defect { synthesized: bool },
    /// Idealised-control defect study against the random-goal baseline.
    Study,
}

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub id: &'static str,
    pub stage: Stage,
    pub upstream: &'static [&'static str],
    pub description: &'static str,
}

use ExpertKind::{Efficient, Safe};

/// All presets, upstream before downstream.
pub const PRESETS: &[Preset] = &[
    Preset { id: "ae-circle", stage: Stage::Autoencoder(Family::Circle), upstream: &[], description: "tolerance autoencoder, circular pins" },
    Preset { id: "ae-polygon", stage: Stage::Autoencoder(Family::Polygon), upstream: &[], description: "tolerance autoencoder, polygon pins" },
    Preset { id: "C1.1", stage: Stage::Expert { kind: Efficient, env: "2*2" }, upstream: &[], description: "efficient expert on 2*2" },
    Preset { id: "C1.2", stage: Stage::Clone { kind: Efficient, env: "2*2" }, upstream: &[], description: "BC from efficient expert on 2*2" },
    Preset { id: "C1.3", stage: Stage::Nominal { kind: Efficient, env: "2*2" }, upstream: &["C1.2"], description: "RS-GAIL from C1.2" },
    Preset { id: "C2.1", stage: Stage::Expert { kind: Safe, env: "2*2" }, upstream: &[], description: "safe expert on 2*2" },
    Preset { id: "C2.2", stage: Stage::Clone { kind: Safe, env: "2*2" }, upstream: &[], description: "BC from safe expert on 2*2" },
    Preset { id: "C2.3", stage: Stage::Nominal { kind: Safe, env: "2*2" }, upstream: &["C2.2"], description: "RS-GAIL from C2.2 (nominal policy)" },
    Preset { id: "C3.1", stage: Stage::Transfer { eval: "2*4" }, upstream: &["C2.3"], description: "C2.3 policy on unseen 2*4" },
    Preset {
        id: "C3.2",
        stage: Stage::Diversify { kind: Safe, train: &["2*2", "2*8"], eval: "2*4" },
        upstream: &["C2.3", "ae-circle"],
        description: "embedding-guided policy trained on 2*2 and 2*8, evaluated on 2*4",
    },
    Preset { id: "C4.1", stage: Stage::Defect { synthesized: false }, upstream: &["C3.2", "ae-circle"], description: "C3.2 policy on defected 2*1" },
    Preset {
        id: "C4.2",
        stage: Stage::Defect { synthesized: true },
        upstream: &["C3.2", "ae-circle"],
        description: "C3.2 policy with goal inference on defected 2*1",
    },
    Preset { id: "P1.1", stage: Stage::Expert { kind: Safe, env: "square" }, upstream: &[], description: "safe expert on square pin" },
    Preset { id: "P1.2", stage: Stage::Clone { kind: Safe, env: "square" }, upstream: &[], description: "BC from safe expert on square pin" },
    Preset { id: "P1.3", stage: Stage::Nominal { kind: Safe, env: "square" }, upstream: &["P1.2"], description: "RS-GAIL from P1.2" },
    Preset { id: "P2.1", stage: Stage::Transfer { eval: "pentagon" }, upstream: &["P1.3"], description: "P1.3 policy on unseen pentagon" },
    Preset {
        id: "P2.2",
        stage: Stage::Diversify { kind: Safe, train: &["square", "hexagon"], eval: "pentagon" },
        upstream: &["P1.3", "ae-polygon"],
        description: "embedding-guided policy trained on square and hexagon, evaluated on pentagon",
    },
    Preset { id: "study-2x1", stage: Stage::Study, upstream: &[], description: "defect study: inference vs random goals" },
];

pub fn preset(id: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.id == id)
}

fn known(id: &str) -> Result<&'static Preset> {
    preset(id).ok_or_else(|| Error::Config(format!("unknown experiment `{id}`; known: {}", PRESETS.iter().map(|p| p.id).collect::<Vec<_>>().join(", "))))
}

fn sections(stage: Stage) -> &'static [&'static str] {
    match stage {
        Stage::Autoencoder(_) => &["seed", "embedding"],
        Stage::Expert { .. } => &["seed", "env", "expert", "eval"],
        Stage::Clone { .. } => &["seed", "env", "expert", "bc", "curriculum", "eval"],
        Stage::Nominal { .. } | Stage::Diversify { .. } => &["seed", "env", "expert", "bc", "curriculum", "gail", "eval"],
        Stage::Transfer { .. } => &["seed", "env", "eval"],
        Stage::Defect { .. } => &["seed", "env", "eval", "inference"],
        Stage::Study => &["seed", "inference"],
    }
}

/// Fingerprint of a preset under `file`: its id, the config sections it reads
/// and its upstream fingerprints.
pub fn fingerprint(id: &str, file: &ConfigFile) -> Result<String> {
    let p = known(id)?;
    let cfg = file.resolve(Some(id))?;
    let mut text = format!("{}\n{}", p.id, cfg.canonical(sections(p.stage)));
    for u in p.upstream {
        text.push_str(&format!("upstream {u} {}\n", fingerprint(u, file)?));
    }
    Ok(sha256_hex(text.as_bytes()))
}

/// What a finished stage reports on stdout.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub lines: Vec<String>,
}

impl Summary {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

pub struct Runner<'a> {
    pub file: &'a ConfigFile,
    pub out: PathBuf,
}

impl<'a> Runner<'a> {
    pub fn new(file: &'a ConfigFile, out: impl Into<PathBuf>) -> Self {
        Runner { file, out: out.into() }
    }

    pub fn dir(&self, id: &str) -> PathBuf {
        self.out.join(id)
    }

    /// Whether `id`'s directory holds intact output for the current config.
    pub fn is_current(&self, id: &str) -> Result<bool> {
        Ok(self.check(id).is_ok())
    }

    /// Upstream check: present, same fingerprint, files unchanged.
    pub fn check(&self, id: &str) -> Result<PathBuf> {
        let dir = self.dir(id);
        let m = Manifest::read(&dir)?
            .ok_or_else(|| Error::Upstream(format!("{id} has not been run (no manifest in {}); run `tgi run {id}` first", dir.display())))?;
        let want = fingerprint(id, self.file)?;
        if m.id != id || m.fingerprint != want {
            return Err(Error::Upstream(format!("{id} in {} is stale: it was produced under a different config; rerun it", dir.display())));
        }
        m.verify_files(&dir)?;
        Ok(dir)
    }

    /// Runs one preset; every upstream preset must already be current.
    pub fn run(&self, id: &str) -> Result<Summary> {
        let p = known(id)?;
        let cfg = self.file.resolve(Some(id))?;
        let mut ups = BTreeMap::new();
        let mut up_dirs = Vec::new();
        for u in p.upstream {
            up_dirs.push(self.check(u)?);
            ups.insert(u.to_string(), fingerprint(u, self.file)?);
        }
        let dir = self.dir(id);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(Error::io(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let ctx = Ctx { cfg: &cfg, dir: &dir, preset: p, upstream: &up_dirs };
        let mut summary = ctx.execute()?;
        Manifest::build(&dir, id, &fingerprint(id, self.file)?, ups)?.write(&dir)?;
        summary.lines.insert(0, format!("{id}: {} -> {}", p.description, dir.display()));
        Ok(summary)
    }

    /// Runs `id` after bringing every upstream preset up to date; current
    /// presets are not rerun.
    pub fn run_with_deps(&self, id: &str) -> Result<Vec<Summary>> {
        let mut done = Vec::new();
        self.ensure(id, true, &mut done)?;
        Ok(done)
    }

    fn ensure(&self, id: &str, force: bool, done: &mut Vec<Summary>) -> Result<()> {
        for u in known(id)?.upstream {
            self.ensure(u, false, done)?;
        }
        if force || !self.is_current(id)? {
            done.push(self.run(id)?);
        }
        Ok(())
    }
}

struct Ctx<'c> {
    cfg: &'c Config,
    dir: &'c Path,
    preset: &'static Preset,
    upstream: &'c [PathBuf],
}

fn expert_tag(kind: ExpertKind) -> &'static str {
    match kind {
        Safe => "safe expert",
        Efficient => "eff expert",
    }
}

/// Environments a preset's policy was trained on, for report tags.
fn train_envs(id: &str) -> String {
    match preset(id).map(|p| p.stage) {
        Some(Stage::Expert { env, .. } | Stage::Clone { env, .. } | Stage::Nominal { env, .. }) => env.into(),
        Some(Stage::Diversify { train, .. }) => train.join(", "),
        _ => "-".into(),
    }
}

fn err<E: std::fmt::Display>(e: E) -> Error {
    Error::run(e)
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn expert(&self, kind: ExpertKind) -> Expert {
        Expert { kind, config: self.cfg.expert() }
    }

    fn nominal_setup(&self, envs: &[&str]) -> Result<EnvSetup> {
        let tasks = envs.iter().map(|e| Ok(TaskEntry::nominal(Task::nominal(workpieces::parse(e)?)))).collect::<Result<Vec<_>>>()?;
        Ok(EnvSetup::new(self.cfg.env(), tasks))
    }

    fn load_autoencoder(&self, dir: &Path, family: Family) -> Result<Autoencoder> {
        let stack = autoencoder_stack();
        let params = formats::read_net(&dir.join("autoencoder.net"), &stack_sizes(), stack.param_count())?;
        Autoencoder::new(family, params).map_err(err)
    }

    fn embed(&self, ae: &Autoencoder, env: &str) -> Result<(WorkpieceSpec, [f64; EMBED_DIM])> {
        let spec = workpieces::parse(env)?;
        let psi = encode(ae, &spec).map_err(err)?;
        Ok((spec, psi))
    }

    /// Evaluates on `tasks`, writes report, per-episode CSV and trajectory snapshots.
    fn evaluate<P: Policy + Sync + ?Sized>(&self, tasks: &[Task], policy: &P, tags: (&str, &str, &str)) -> Result<EvalReport> {
        let cfg = self.cfg;
        let env = cfg.env();
        let eps = evaluate_episodes(&env, tasks, policy, PlanarPose::ORIGIN, cfg.eval.episodes, cfg.seed).map_err(err)?;
        let report = EvalReport::from_episodes(&eps).tagged(tags.0, tags.1, tags.2);
        formats::write_report(&self.path("report.csv"), &report)?;
        formats::write_episodes(&self.path("episodes.csv"), &eps)?;
        let snaps: Vec<Trajectory> = (0..cfg.eval.snapshots.min(cfg.eval.episodes))
            .map(|i| rollout(&env, &tasks[i % tasks.len()], policy, PlanarPose::ORIGIN, episode_seed(cfg.seed, i)).map_err(err))
            .collect::<Result<_>>()?;
        self.snapshots("eval", &snaps, tags.0)?;
        Ok(report)
    }

    fn snapshots(&self, prefix: &str, trajs: &[Trajectory], title: &str) -> Result<()> {
        let mut series = Vec::new();
        for (i, t) in trajs.iter().enumerate() {
            formats::write_trajectory(&self.path(&format!("{prefix}_traj_{i:03}.csv")), t)?;
            series.push(Series::new(format!("episode {i}"), xy(t)));
        }
        if !series.is_empty() {
            formats::write_text(&self.path(&format!("{prefix}_trajectories.svg")), &plot::trajectory_chart(title, &series))?;
        }
        Ok(())
    }

    fn curve(&self, curve: &[learning::CurveRow], title: &str) -> Result<()> {
        formats::write_curve(&self.path("curve.csv"), curve)?;
        let pts = |f: fn(&learning::CurveRow) -> f64| curve.iter().map(|c| (c.iteration as f64, f(c))).collect();
        let svg = plot::line_chart(title, "iteration", "mean reward", &[Series::new("mean reward", pts(|c| c.mean_reward)), Series::new("best fitness", pts(|c| c.best_fitness))]);
        formats::write_text(&self.path("curve.svg"), &svg)?;
        let d = plot::line_chart(title, "iteration", "mean D", &[Series::new("D(student)", pts(|c| c.mean_d_student)), Series::new("D(expert)", pts(|c| c.mean_d_expert))]);
        formats::write_text(&self.path("discriminator.svg"), &d)
    }

    fn execute(&self) -> Result<Summary> {
        match self.preset.stage {
            Stage::Autoencoder(family) => self.autoencoder(family),
            Stage::Expert { kind, env } => self.expert_eval(kind, env),
            Stage::Clone { kind, env } => self.clone_stage(kind, env),
            Stage::Nominal { kind, env } => self.nominal(kind, env),
            Stage::Transfer { eval } => self.transfer(eval),
            Stage::Diversify { kind, train, eval } => self.diversify(kind, train, eval),
            Stage::Defect { synthesized } => self.defect(synthesized),
            Stage::Study => self.study(),
        }
    }

    fn autoencoder(&self, family: Family) -> Result<Summary> {
        let cfg = self.cfg;
        let ds = generate_dataset(family, cfg.embedding.n_specs, rng::derive(cfg.seed, &[0xae])).map_err(err)?;
        let out = train_autoencoder(&ds, &cfg.autoencoder()).map_err(err)?;
        formats::write_net(&self.path("autoencoder.net"), &stack_sizes(), &out.model.params)?;
        let rel = |e: &embedding::ReconstructionError| if e.mean_abs > 0.0 { e.mae / e.mean_abs } else { f64::NAN };
        formats::write_table(
            &self.path("ae_report.csv"),
            &["family", "n_specs", "heldout_mae", "heldout_rms", "heldout_mean_abs", "heldout_relative_mae", "train_mae", "train_rms", "train_relative_mae"],
            &[vec![
                family.name().into(),
                ds.items.len().to_string(),
                out.heldout.mae.to_string(),
                out.heldout.rms.to_string(),
                out.heldout.mean_abs.to_string(),
                rel(&out.heldout).to_string(),
                out.train.mae.to_string(),
                out.train.rms.to_string(),
                rel(&out.train).to_string(),
            ]],
        )?;
        let loss: Vec<Vec<String>> = out.loss_curve.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]).collect();
        formats::write_table(&self.path("loss.csv"), &["epoch", "loss"], &loss)?;
        let pts = out.loss_curve.iter().enumerate().map(|(i, l)| (i as f64, l.max(1e-300).log10())).collect();
        formats::write_text(&self.path("loss.svg"), &plot::line_chart(&format!("{} autoencoder", family.name()), "epoch", "log10 loss", &[Series::new("train", pts)]))?;
        let rows: Vec<(WorkpieceSpec, [f64; EMBED_DIM])> =
            ds.items.iter().map(|(s, m)| Ok((s.clone(), out.model.encode_map(m).map_err(err)?))).collect::<Result<_>>()?;
        formats::write_embeddings(&self.path("embeddings.csv"), &rows)?;
        let named: &[&str] = match family {
            Family::Circle => &["2*1", "2*2", "2*4", "2*8", "study"],
            Family::Polygon => &["square", "pentagon", "hexagon"],
        };
        let refs: Vec<(WorkpieceSpec, [f64; EMBED_DIM])> = named.iter().map(|n| self.embed(&out.model, n)).collect::<Result<_>>()?;
        formats::write_embeddings(&self.path("reference_embeddings.csv"), &refs)?;
        let mut s = Summary::default();
        s.line(format!(
            "held-out MAE {:.3e} (relative to mean |map| {:.3}), RMS {:.3e}; train MAE {:.3e}",
            out.heldout.mae,
            rel(&out.heldout),
            out.heldout.rms,
            out.train.mae
        ));
        Ok(s)
    }

    fn expert_eval(&self, kind: ExpertKind, env: &str) -> Result<Summary> {
        let setup = self.nominal_setup(&[env])?;
        let tasks: Vec<Task> = setup.tasks.iter().map(|t| t.task.clone()).collect();
        let r = self.evaluate(&tasks, &self.expert(kind), (expert_tag(kind), env, env))?;
        Ok(report_summary(&r))
    }

    fn clone_stage(&self, kind: ExpertKind, env: &str) -> Result<Summary> {
        let cur = self.cfg.curriculum();
        let setup = self.nominal_setup(&[env])?;
        let trajs = learning::phase1_demo_rollouts(&self.expert(kind), &setup, &cur).map_err(err)?;
        let demos_dir = self.path("demos");
        fs::create_dir_all(&demos_dir).map_err(Error::io(&demos_dir))?;
        for (i, t) in trajs.iter().enumerate() {
            formats::write_trajectory(&demos_dir.join(format!("ep_{i:03}.csv")), t)?;
        }
        formats::write_episodes(&self.path("demos.csv"), &trajs.iter().map(EpisodeStats::of).collect::<Vec<_>>())?;
        let demos = DemoSet::from_trajectories(kind.name(), &trajs);
        let (params, bc) = learning::clone_stage(&demos, &self.cfg.env.a_max, &cur).map_err(err)?;
        formats::write_policy(self.dir, &params)?;
        formats::write_table(
            &self.path("bc.csv"),
            &["train_loss", "validation_loss", "best_epoch", "pairs"],
            &[vec![bc.train_loss.to_string(), bc.validation_loss.to_string(), bc.best_epoch.to_string(), demos.pair_count().to_string()]],
        )?;
        let policy = NetPolicy { params, embedding: None, a_max: self.cfg.env.a_max };
        let r = self.evaluate(&tasks_of(&setup), &policy, ("bc", env, env))?;
        let mut s = report_summary(&r);
        s.line(format!("demos: {} episodes, success {:.2}; BC validation loss {:.4}", trajs.len(), demos.success_rate(), bc.validation_loss));
        Ok(s)
    }

    fn nominal(&self, kind: ExpertKind, env: &str) -> Result<Summary> {
        let cur = self.cfg.curriculum();
        let setup = self.nominal_setup(&[env])?;
        let bc = formats::read_policy(&self.upstream[0])?;
        let demos = learning::phase1_demos(&self.expert(kind), kind.name(), &setup, &cur).map_err(err)?;
        let g = learning::nominal_stage(&setup, &bc, &demos, &cur).map_err(err)?;
        formats::write_policy(self.dir, &g.params)?;
        self.curve(&g.curve, &format!("{} RS-GAIL", self.preset.id))?;
        let a_max = self.cfg.env.a_max;
        let before = NetPolicy { params: bc, embedding: None, a_max };
        let after = NetPolicy { params: g.params, embedding: None, a_max };
        let env_cfg = self.cfg.env();
        let seed = episode_seed(self.cfg.seed, 0);
        let task = &setup.tasks[0].task;
        let tb = rollout(&env_cfg, task, &before, PlanarPose::ORIGIN, seed).map_err(err)?;
        let ta = rollout(&env_cfg, task, &after, PlanarPose::ORIGIN, seed).map_err(err)?;
        formats::write_trajectory(&self.path("traj_before.csv"), &tb)?;
        formats::write_trajectory(&self.path("traj_after.csv"), &ta)?;
        let svg = plot::trajectory_chart("before and after RS-GAIL", &[Series::new("bc", xy(&tb)), Series::new("π_n", xy(&ta))]);
        formats::write_text(&self.path("before_after.svg"), &svg)?;
        let r = self.evaluate(&tasks_of(&setup), &after, ("π_n", env, env))?;
        let mut s = report_summary(&r);
        s.line(format!("{} iterations{}", g.curve.len(), if g.stopped_early { ", stopped early" } else { "" }));
        Ok(s)
    }

    fn transfer(&self, eval: &str) -> Result<Summary> {
        let params = formats::read_policy(&self.upstream[0])?;
        let policy = NetPolicy { params, embedding: None, a_max: self.cfg.env.a_max };
        let setup = self.nominal_setup(&[eval])?;
        let r = self.evaluate(&tasks_of(&setup), &policy, ("π_n", &train_envs(self.preset.upstream[0]), eval))?;
        Ok(report_summary(&r))
    }

    fn diversify(&self, kind: ExpertKind, train: &[&str], eval: &str) -> Result<Summary> {
        let cur = self.cfg.curriculum();
        let nominal = formats::read_policy(&self.upstream[0])?;
        let family = workpieces::parse(eval)?.family();
        let ae = self.load_autoencoder(&self.upstream[1], family)?;
        let embedded: Vec<(WorkpieceSpec, [f64; EMBED_DIM])> = train.iter().chain([&eval]).map(|e| self.embed(&ae, e)).collect::<Result<_>>()?;
        formats::write_embeddings(&self.path("embeddings.csv"), &embedded)?;
        let tasks = embedded[..train.len()].iter().map(|(s, psi)| TaskEntry { task: Task::nominal(s.clone()), embedding: Some(*psi) }).collect();
        let setup = EnvSetup::new(self.cfg.env(), tasks);
        let (_, g) = learning::diversify_stage(&self.expert(kind), kind.name(), &nominal, &setup, &cur).map_err(err)?;
        formats::write_policy(self.dir, &g.params)?;
        self.curve(&g.curve, &format!("{} RS-GAIL (phase 2)", self.preset.id))?;
        let (eval_spec, psi) = embedded.last().unwrap().clone();
        let policy = NetPolicy { params: g.params, embedding: Some(psi), a_max: self.cfg.env.a_max };
        let r = self.evaluate(&[Task::nominal(eval_spec)], &policy, ("π_φ", &train.join(", "), eval))?;
        let mut s = report_summary(&r);
        s.line(format!("{} iterations{}", g.curve.len(), if g.stopped_early { ", stopped early" } else { "" }));
        Ok(s)
    }

    fn prior(&self, spec: &WorkpieceSpec) -> Result<DefectPrior> {
        let i = &self.cfg.inference;
        let sigma = match i.prior_sigma {
            Some(s) => s,
            None => calibrate_sigma(spec, i.nominal_insertability, i.calibration_samples, rng::derive(self.cfg.seed, &[0xca1])).map_err(err)?,
        };
        formats::write_table(
            &self.path("prior.csv"),
            &["sigma", "calibrated", "target_nominal_insertability"],
            &[vec![sigma.to_string(), (i.prior_sigma.is_none() as u8).to_string(), i.nominal_insertability.to_string()]],
        )?;
        Ok(DefectPrior::isotropic(spec, sigma))
    }

    fn defect(&self, synthesized: bool) -> Result<Summary> {
        let cfg = self.cfg;
        let spec = WorkpieceSpec::defect_study_2x1();
        let params = formats::read_policy(&self.upstream[0])?;
        let ae = self.load_autoencoder(&self.upstream[1], Family::Circle)?;
        let psi = encode(&ae, &spec).map_err(err)?;
        let policy = NetPolicy { params, embedding: Some(psi), a_max: cfg.env.a_max };
        let prior = self.prior(&spec)?;
        let n = cfg.eval.episodes;
        let truths = sample_defects(&spec, &prior, n, rng::derive(cfg.seed, &[0xc4])).map_err(err)?;
        let env = cfg.env();
        let icfg = cfg.inference();
        let runs: Vec<(Trajectory, usize)> = par::map_indexed(n, |i| {
            let task = Task::new(spec.clone(), truths[i].clone()).map_err(err)?;
            let seed = episode_seed(cfg.seed, i);
            if synthesized {
                inference::run_synthesized_episode(&env, &task, &policy, &prior, &icfg, seed).map(|(t, h)| (t, h.len())).map_err(err)
            } else {
                rollout(&env, &task, &policy, PlanarPose::ORIGIN, seed).map(|t| (t, 0)).map_err(err)
            }
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let eps: Vec<EpisodeStats> = runs.iter().map(|(t, _)| EpisodeStats::of(t)).collect();
        let tag = if synthesized { "π_φ*" } else { "π_φ" };
        let report = EvalReport::from_episodes(&eps).tagged(tag, &train_envs(self.preset.upstream[0]), "2*1 defected");
        formats::write_report(&self.path("report.csv"), &report)?;
        formats::write_episodes(&self.path("episodes.csv"), &eps)?;
        let rows: Vec<Vec<String>> = runs
            .iter()
            .zip(&truths)
            .enumerate()
            .map(|(i, ((_, k), d))| {
                let mut r = vec![i.to_string()];
                r.extend(d.offsets.iter().flat_map(|o| [o[0].to_string(), o[1].to_string()]));
                r.push((contains(&spec, d, PlanarPose::ORIGIN) as u8).to_string());
                r.push(k.to_string());
                r
            })
            .collect();
        formats::write_table(&self.path("defects.csv"), &["episode", "dx0", "dy0", "dx1", "dy1", "nominal_insertable", "retargets"], &rows)?;
        let k = cfg.eval.snapshots.min(n);
        let snaps: Vec<Trajectory> = runs[..k].iter().map(|(t, _)| t.clone()).collect();
        self.snapshots("eval", &snaps, tag)?;
        Ok(report_summary(&report))
    }

    fn study(&self) -> Result<Summary> {
        let cfg = self.cfg;
        let spec = WorkpieceSpec::defect_study_2x1();
        let prior = self.prior(&spec)?;
        let n = cfg.inference.study_samples;
        let truths = sample_defects(&spec, &prior, n, rng::derive(cfg.seed, &[0x57d])).map_err(err)?;
        let icfg = cfg.inference();
        let run = |baseline: bool| -> Result<Vec<AttemptOutcome>> {
            par::map_indexed(n, |i| {
                if baseline {
                    inference::random_goal_baseline(&spec, &truths[i], &icfg, rng::derive(cfg.seed, &[0x7a, i as u64]))
                } else {
                    inference::attempt_loop_ideal(&spec, &truths[i], &prior, &icfg, rng::derive(cfg.seed, &[0x1de, i as u64]))
                }
            })
            .into_iter()
            .map(|r| r.map_err(err))
            .collect()
        };
        let (inf, base) = (run(false)?, run(true)?);
        let pair = |o: &[AttemptOutcome]| -> Vec<(DefectParams, AttemptOutcome)> { truths.iter().cloned().zip(o.iter().cloned()).collect() };
        formats::write_study(&self.path("study_inference.csv"), &pair(&inf))?;
        formats::write_study(&self.path("study_random.csv"), &pair(&base))?;
        let (si, sb) = (StudyStats::of(&inf), StudyStats::of(&base));
        let z = tgi_core::eval::two_proportion_z(si.successes, n, sb.successes, n);
        let nominal_ok = truths.iter().filter(|d| contains(&spec, d, PlanarPose::ORIGIN)).count() as f64 / n as f64;
        let row = |name: &str, s: &StudyStats| {
            vec![
                name.to_string(),
                n.to_string(),
                s.success_rate(n).to_string(),
                s.mean_attempts_success.to_string(),
                s.mean_attempts_all.to_string(),
                s.discarded.to_string(),
                nominal_ok.to_string(),
                z.to_string(),
            ]
        };
        formats::write_table(
            &self.path("study_summary.csv"),
            &["method", "n", "success_rate", "mean_attempts_success", "mean_attempts_all", "discarded", "nominal_insertable", "z_inference_vs_random"],
            &[row("inference", &si), row("random", &sb)],
        )?;
        let mut s = Summary::default();
        s.line(format!("nominal-goal insertable: {:.1}%", 100.0 * nominal_ok));
        for (name, st) in [("inference", &si), ("random", &sb)] {
            s.line(format!(
                "{name:>9}: success {:.1}%, mean attempts {:.3} (successes) / {:.3} (all), discarded {}",
                100.0 * st.success_rate(n),
                st.mean_attempts_success,
                st.mean_attempts_all,
                st.discarded
            ));
        }
        s.line(format!("z (inference > random) = {z:.2}"));
        Ok(s)
    }
}

/// Aggregates of one arm of the defect study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyStats {
    pub successes: usize,
    pub discarded: usize,
    /// Mean attempts over successful samples.
    pub mean_attempts_success: f64,
    pub mean_attempts_all: f64,
}

impl StudyStats {
    pub fn of(outcomes: &[AttemptOutcome]) -> Self {
        let ok: Vec<f64> = outcomes.iter().filter(|o| o.success).map(|o| o.attempts as f64).collect();
        let all: Vec<f64> = outcomes.iter().map(|o| o.attempts as f64).collect();
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        StudyStats {
            successes: ok.len(),
            discarded: outcomes.iter().filter(|o| o.discarded).count(),
            mean_attempts_success: mean(&ok),
            mean_attempts_all: mean(&all),
        }
    }

    pub fn success_rate(&self, n: usize) -> f64 {
        self.successes as f64 / n as f64
    }
}

/// Layer sizes recorded in the autoencoder's NET header.
pub fn stack_sizes() -> Vec<usize> {
    let s = autoencoder_stack();
    std::iter::once(s.layers[0].0.inputs()).chain(s.layers.iter().map(|(l, _)| l.outputs())).collect()
}

fn tasks_of(setup: &EnvSetup) -> Vec<Task> {
    setup.tasks.iter().map(|t| t.task.clone()).collect()
}

fn xy(t: &Trajectory) -> Vec<(f64, f64)> {
    std::iter::once(&t.initial).chain(t.steps.iter().map(|s| &s.state)).map(|s| (s.x, s.y)).collect()
}

fn report_summary(r: &EvalReport) -> Summary {
    let mut s = Summary::default();
    s.line(format!(
        "{} [{} -> {}] reward {:.2}±{:.2}  success {:.2}±{:.2}  steps {:.2}±{:.2}  collisions {:.2}±{:.2}  (n={})",
        r.policy_tag,
        r.train_env,
        r.eval_env,
        r.reward.mean,
        r.reward.stderr,
        r.success_rate.mean,
        r.success_rate.stderr,
        r.steps.mean,
        r.steps.stderr,
        r.collisions.mean,
        r.collisions.stderr,
        r.n_episodes
    ));
    s
}

/// Loads a stage's policy checkpoint for external use.
pub fn load_policy(dir: &Path) -> Result<PolicyParams> {
    formats::read_policy(dir)
}
