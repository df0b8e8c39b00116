use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tgi::error::{Error, Result};
use tgi::experiments::{self, stack_sizes, Runner};
use tgi::{formats, workpieces, Config, ConfigFile};
use tgi_core::embedding::{autoencoder_stack, encode, Autoencoder};
use tgi_core::eval::{evaluate_episodes, EpisodeStats, EvalReport};
use tgi_core::experts::{Expert, ExpertKind};
use tgi_core::geometry::{render_tolerance, DefectParams, PlanarPose, WorkpieceSpec};
use tgi_core::inference::{optimal_goal, sample_prior, DefectPrior, InsertionRecord};
use tgi_core::learning::{self, EnvSetup, TaskEntry};
use tgi_core::nn::NetPolicy;
use tgi_core::sim::{Policy, Task};

#[derive(Parser)]
#[command(name = "tgi", version, about = "Tolerance-guided pin-in-hole insertion: training, inference and experiment presets")]
struct Cli {
    /// TOML configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tolerance maps.
    #[command(subcommand)]
    Tolerance(ToleranceCmd),
    /// Tolerance autoencoder.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Expert demonstrations.
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Policy training.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Defect inference.
    #[command(subcommand)]
    Infer(InferCmd),
    /// Evaluate a policy checkpoint or an expert.
    Eval(EvalArgs),
    /// Run an experiment preset (or `all`).
    Run {
        id: String,
        /// Also run upstream presets that are missing or stale.
        #[arg(long)]
        deps: bool,
    },
    /// List experiment presets and whether their output is current.
    List,
}

#[derive(Subcommand)]
enum ToleranceCmd {
    /// Render the θ-surface of a workpiece to a TOLMAP file.
    Render {
        #[arg(long)]
        spec: String,
        /// Per-pin offsets `dx,dy;dx,dy;…` (mm).
        #[arg(long)]
        defects: Option<String>,
        /// Raster half-width (mm); defaults to the family's window.
        #[arg(long)]
        window: Option<f64>,
        /// Output file name inside `--out`.
        #[arg(long, default_value = "tolerance.tolmap")]
        name: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Circle,
    Polygon,
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Train the autoencoder of a family (the `ae-<family>` preset).
    Train {
        #[arg(long, value_enum)]
        family: FamilyArg,
    },
    /// Print embeddings of workpieces as CSV.
    Encode {
        /// `autoencoder.net` checkpoint.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        spec: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpertArg {
    Safe,
    Efficient,
}

impl ExpertArg {
    fn kind(self) -> ExpertKind {
        match self {
            ExpertArg::Safe => ExpertKind::Safe,
            ExpertArg::Efficient => ExpertKind::Efficient,
        }
    }
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Roll out an expert and write one trajectory CSV per episode.
    Collect {
        #[arg(long, value_enum, default_value = "safe")]
        expert: ExpertArg,
        #[arg(long, default_value = "2*2")]
        spec: String,
        /// Defaults to `curriculum.demo_episodes`.
        #[arg(long)]
        episodes: Option<usize>,
    },
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Behaviour cloning from expert demonstrations.
    Bc {
        #[arg(long, value_enum, default_value = "safe")]
        expert: ExpertArg,
        #[arg(long, default_value = "2*2")]
        spec: String,
    },
    /// RS-GAIL refinement of a cloned policy (phase 1).
    Gail {
        #[arg(long, value_enum, default_value = "safe")]
        expert: ExpertArg,
        #[arg(long, default_value = "2*2")]
        spec: String,
        /// Directory holding the cloned `phi1.net`/`phi2.net`.
        #[arg(long)]
        init: PathBuf,
    },
    /// Both curriculum phases in one go.
    Curriculum {
        #[arg(long, value_enum, default_value = "safe")]
        expert: ExpertArg,
        #[arg(long, default_value = "2*2")]
        phase1: String,
        #[arg(long, num_args = 1.., default_values = ["2*2", "2*8"])]
        phase2: Vec<String>,
        /// `autoencoder.net` of the phase-2 family.
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Subcommand)]
enum InferCmd {
    /// The defect study (the `study-2x1` preset).
    Study,
    /// Optimal next goal on the study part given an insertion history.
    Goal {
        /// CSV with columns `x,y,theta,success`; omit for an empty history.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Defect std (mm); calibrated when omitted.
        #[arg(long)]
        sigma: Option<f64>,
    },
}

#[derive(Args)]
struct EvalArgs {
    /// Directory holding `phi1.net`/`phi2.net`.
    #[arg(long, conflicts_with = "expert")]
    policy: Option<PathBuf>,
    #[arg(long, value_enum)]
    expert: Option<ExpertArg>,
    #[arg(long, default_value = "2*2")]
    spec: String,
    /// Autoencoder giving the policy its task embedding.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Defaults to `eval.episodes`.
    #[arg(long)]
    episodes: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Error::run)?;
    }
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    }
    .with_seed(cli.seed);
    let out = cli.out.as_path();
    match cli.command {
        Command::Tolerance(ToleranceCmd::Render { spec, defects, window, name }) => render(out, &spec, defects.as_deref(), window, &name),
        Command::Embed(EmbedCmd::Train { family }) => {
            let id = match family {
                FamilyArg::Circle => "ae-circle",
                FamilyArg::Polygon => "ae-polygon",
            };
            run_preset(&file, out, id, false)
        }
        Command::Embed(EmbedCmd::Encode { model, spec }) => encode_specs(&model, &spec),
        Command::Demo(DemoCmd::Collect { expert, spec, episodes }) => collect(&file.resolve(None)?, out, expert.kind(), &spec, episodes),
        Command::Train(t) => train(&file.resolve(None)?, out, t),
        Command::Infer(InferCmd::Study) => run_preset(&file, out, "study-2x1", false),
        Command::Infer(InferCmd::Goal { history, sigma }) => goal(&file.resolve(None)?, history.as_deref(), sigma),
        Command::Eval(a) => eval(&file.resolve(None)?, out, a),
        Command::Run { id, deps } if id == "all" => {
            for p in experiments::PRESETS {
                run_preset(&file, out, p.id, deps)?;
            }
            Ok(())
        }
        Command::Run { id, deps } => run_preset(&file, out, &id, deps),
        Command::List => {
            let runner = Runner::new(&file, out);
            for p in experiments::PRESETS {
                let state = if runner.is_current(p.id)? { "current" } else { "-" };
                println!("{:<10} {:<8} {:<20} {}", p.id, state, p.upstream.join(","), p.description);
            }
            Ok(())
        }
    }
}

fn run_preset(file: &ConfigFile, out: &Path, id: &str, deps: bool) -> Result<()> {
    let runner = Runner::new(file, out);
    let summaries = if deps { runner.run_with_deps(id)? } else { vec![runner.run(id)?] };
    for s in summaries {
        for l in s.lines {
            println!("{l}");
        }
    }
    Ok(())
}

fn create(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn parse_defects(spec: &WorkpieceSpec, text: Option<&str>) -> Result<DefectParams> {
    let Some(text) = text else { return Ok(DefectParams::nominal(spec)) };
    let offsets = text
        .split(';')
        .map(|pair| {
            let v: Vec<f64> = pair.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| Error::Config(format!("--defects: {e}")))?;
            match v[..] {
                [dx, dy] => Ok([dx, dy]),
                _ => Err(Error::Config(format!("--defects: `{pair}` is not `dx,dy`"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let d = DefectParams { offsets };
    d.check(spec).map_err(|e| Error::Config(format!("--defects: {e}")))?;
    Ok(d)
}

fn render(out: &Path, spec: &str, defects: Option<&str>, window: Option<f64>, name: &str) -> Result<()> {
    let s = workpieces::parse(spec)?;
    let d = parse_defects(&s, defects)?;
    let map = render_tolerance(&s, &d, window.unwrap_or(s.family().default_window())).map_err(|e| Error::Config(e.to_string()))?;
    create(out)?;
    let path = out.join(name);
    formats::write_tolmap(&path, &map)?;
    println!("{} (max θ {:.6} rad)", path.display(), map.max_value());
    Ok(())
}

fn load_ae(model: &Path, spec: &WorkpieceSpec) -> Result<Autoencoder> {
    let params = formats::read_net(model, &stack_sizes(), autoencoder_stack().param_count()).map_err(upstream)?;
    Autoencoder::new(spec.family(), params).map_err(Error::run)
}

/// Problems with a checkpoint the command was pointed at are upstream-artifact errors.
fn upstream(e: Error) -> Error {
    match e {
        Error::Io { .. } | Error::Format { .. } => Error::Upstream(e.to_string()),
        e => e,
    }
}

fn encode_specs(model: &Path, specs: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let mut header: Vec<String> = formats::SPEC_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..5).map(|k| format!("psi{k}")));
    w.write_record(&header).map_err(Error::run)?;
    for s in specs {
        let spec = workpieces::parse(s)?;
        let psi = encode(&load_ae(model, &spec)?, &spec).map_err(Error::run)?;
        let mut rec: Vec<String> = formats::spec_fields(&spec).into();
        rec.extend(psi.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(Error::run)?;
    }
    w.flush().map_err(Error::run)
}

fn setup(cfg: &Config, specs: &[String]) -> Result<EnvSetup> {
    let tasks = specs.iter().map(|s| Ok(TaskEntry::nominal(Task::nominal(workpieces::parse(s)?)))).collect::<Result<_>>()?;
    Ok(EnvSetup::new(cfg.env(), tasks))
}

fn collect(cfg: &Config, out: &Path, kind: ExpertKind, spec: &str, episodes: Option<usize>) -> Result<()> {
    let mut cur = cfg.curriculum();
    cur.demo_episodes = episodes.unwrap_or(cur.demo_episodes);
    let s = setup(cfg, &[spec.to_string()])?;
    let trajs = learning::phase1_demo_rollouts(&Expert { kind, config: cfg.expert() }, &s, &cur).map_err(|e| Error::Config(e.to_string()))?;
    let dir = out.join("demos");
    create(&dir)?;
    for (i, t) in trajs.iter().enumerate() {
        formats::write_trajectory(&dir.join(format!("ep_{i:03}.csv")), t)?;
    }
    let stats: Vec<EpisodeStats> = trajs.iter().map(EpisodeStats::of).collect();
    formats::write_episodes(&out.join("demos.csv"), &stats)?;
    let r = EvalReport::from_episodes(&stats);
    println!("{} episodes in {}: success {:.2}, reward {:.2}, steps {:.2}", trajs.len(), dir.display(), r.success_rate.mean, r.reward.mean, r.steps.mean);
    Ok(())
}

fn print_report(r: &EvalReport) {
    println!(
        "{} [{} -> {}] reward {:.2}±{:.2} success {:.2}±{:.2} steps {:.2}±{:.2} collisions {:.2}±{:.2} (n={})",
        r.policy_tag, r.train_env, r.eval_env, r.reward.mean, r.reward.stderr, r.success_rate.mean, r.success_rate.stderr, r.steps.mean, r.steps.stderr, r.collisions.mean, r.collisions.stderr, r.n_episodes
    );
}

fn train(cfg: &Config, out: &Path, cmd: TrainCmd) -> Result<()> {
    let cur = cfg.curriculum();
    let run = |e: tgi_core::learning::LearningError| Error::run(e);
    create(out)?;
    match cmd {
        TrainCmd::Bc { expert, spec } => {
            let s = setup(cfg, &[spec])?;
            let demos = learning::phase1_demos(&Expert { kind: expert.kind(), config: cfg.expert() }, expert.kind().name(), &s, &cur).map_err(run)?;
            let (params, bc) = learning::clone_stage(&demos, &cfg.env.a_max, &cur).map_err(run)?;
            formats::write_policy(out, &params)?;
            println!("bc: {} pairs, train loss {:.5}, validation loss {:.5}, best epoch {}", demos.pair_count(), bc.train_loss, bc.validation_loss, bc.best_epoch);
        }
        TrainCmd::Gail { expert, spec, init } => {
            let s = setup(cfg, &[spec])?;
            let bc = formats::read_policy(&init).map_err(upstream)?;
            let demos = learning::phase1_demos(&Expert { kind: expert.kind(), config: cfg.expert() }, expert.kind().name(), &s, &cur).map_err(run)?;
            let g = learning::nominal_stage(&s, &bc, &demos, &cur).map_err(run)?;
            formats::write_policy(out, &g.params)?;
            formats::write_curve(&out.join("curve.csv"), &g.curve)?;
            println!("gail: {} iterations, final mean reward {:.2}", g.curve.len(), g.curve.last().map_or(f64::NAN, |c| c.mean_reward));
        }
        TrainCmd::Curriculum { expert, phase1, phase2, model } => {
            let p1 = setup(cfg, &[phase1])?;
            let specs: Vec<WorkpieceSpec> = phase2.iter().map(|s| workpieces::parse(s)).collect::<Result<_>>()?;
            let ae = load_ae(&model, &specs[0])?;
            let tasks = specs
                .into_iter()
                .map(|s| Ok(TaskEntry { embedding: Some(encode(&ae, &s).map_err(|e| Error::Config(e.to_string()))?), task: Task::nominal(s) }))
                .collect::<Result<_>>()?;
            let p2 = EnvSetup::new(cfg.env(), tasks);
            let e = Expert { kind: expert.kind(), config: cfg.expert() };
            let c = learning::curriculum(&e, expert.kind().name(), &p1, &p2, &cur).map_err(run)?;
            for (name, params) in [("bc", &c.bc), ("nominal", &c.nominal), ("diversified", &c.diversified)] {
                let d = out.join(name);
                create(&d)?;
                formats::write_policy(&d, params)?;
            }
            formats::write_curve(&out.join("nominal/curve.csv"), &c.phase1_curve)?;
            formats::write_curve(&out.join("diversified/curve.csv"), &c.phase2_curve)?;
            println!("curriculum: checkpoints in {}/{{bc,nominal,diversified}}", out.display());
        }
    }
    Ok(())
}

fn goal(cfg: &Config, history: Option<&Path>, sigma: Option<f64>) -> Result<()> {
    let spec = WorkpieceSpec::defect_study_2x1();
    let records = match history {
        None => Vec::new(),
        Some(p) => formats::read_table(p)?
            .iter()
            .map(|row| {
                let f = |k: &str| -> Result<f64> {
                    row.get(k).ok_or_else(|| Error::format(p, format!("missing column `{k}`")))?.trim().parse::<f64>().map_err(|e| Error::format(p, e))
                };
                Ok(InsertionRecord { pose: PlanarPose::new(f("x")?, f("y")?, f("theta")?), success: f("success")? != 0.0 })
            })
            .collect::<Result<_>>()?,
    };
    let i = &cfg.inference;
    let sigma = match sigma.or(i.prior_sigma) {
        Some(s) => s,
        None => tgi_core::inference::calibrate_sigma(&spec, i.nominal_insertability, i.calibration_samples, tgi_core::rng::derive(cfg.seed, &[0xca1])).map_err(Error::run)?,
    };
    let icfg = cfg.inference();
    let prior = DefectPrior::isotropic(&spec, sigma);
    let set = sample_prior(&spec, &prior, icfg.n_particles, tgi_core::rng::derive(cfg.seed, &[0x1d])).map_err(Error::run)?;
    let (g, g_star) = optimal_goal(&records, &spec, &set, cfg.pose_noise(), &icfg, cfg.seed).map_err(Error::run)?;
    println!("goal_x,goal_y,goal_theta,g_star,discard");
    println!("{},{},{},{},{}", g.x, g.y, g.theta, g_star, tgi_core::inference::should_discard(g_star, &icfg) as u8);
    Ok(())
}

fn eval(cfg: &Config, out: &Path, a: EvalArgs) -> Result<()> {
    let spec = workpieces::parse(&a.spec)?;
    let n = a.episodes.unwrap_or(cfg.eval.episodes);
    if n < 2 {
        return Err(Error::Config("--episodes must be at least 2".into()));
    }
    let (policy, tag): (Box<dyn Policy + Sync>, String) = match (&a.policy, a.expert) {
        (Some(dir), _) => {
            let params = formats::read_policy(dir).map_err(upstream)?;
            let embedding = match &a.model {
                Some(m) => Some(encode(&load_ae(m, &spec)?, &spec).map_err(Error::run)?),
                None => None,
            };
            (Box::new(NetPolicy { params, embedding, a_max: cfg.env.a_max }), dir.display().to_string())
        }
        (None, Some(k)) => (Box::new(Expert { kind: k.kind(), config: cfg.expert() }), format!("{} expert", k.kind().name())),
        (None, None) => return Err(Error::Config("give --policy or --expert".into())),
    };
    let eps = evaluate_episodes(&cfg.env(), &[Task::nominal(spec)], policy.as_ref(), PlanarPose::ORIGIN, n, cfg.seed).map_err(Error::run)?;
    let r = EvalReport::from_episodes(&eps).tagged(&tag, "-", &a.spec);
    create(out)?;
    formats::write_report(&out.join("report.csv"), &r)?;
    formats::write_episodes(&out.join("episodes.csv"), &eps)?;
    print_report(&r);
    Ok(())
}
