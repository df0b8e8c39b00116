use std::fs;
use std::path::{Path, PathBuf};

use tgi::experiments::stack_sizes;
use tgi::manifest::Manifest;
use tgi::{formats, workpieces, ConfigFile, Error, Runner};
use tgi_core::embedding::{autoencoder_stack, encode, Autoencoder};
use tgi_core::geometry::Family;
use tgi_core::experts::Expert;
use tgi_core::learning::{curriculum, EnvSetup, TaskEntry};
use tgi_core::sim::Task;

const TINY: &str = "
seed = 3
[embedding]
n_specs = 24
epochs = 2
[bc]
epochs = 3
[gail]
max_iterations = 2
validation_episodes = 4
discriminator_rollouts = 4
rollouts_per_fitness = 2
[curriculum]
demo_episodes = 4
[eval]
episodes = 6
[inference]
n_particles = 40
calibration_samples = 1000
study_samples = 10
cma_generations = 4
";

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("pipeline-{name}"));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn tiny() -> ConfigFile {
    ConfigFile::parse(TINY).unwrap()
}

#[test]
fn staged_presets_match_one_curriculum_call() {
    let file = tiny();
    let out = scratch("staged");
    let runner = Runner::new(&file, &out);
    runner.run_with_deps("C3.2").unwrap();

    let cfg = file.resolve(Some("C3.2")).unwrap();
    let stack = autoencoder_stack();
    let ae_params = formats::read_net(&out.join("ae-circle/autoencoder.net"), &stack_sizes(), stack.param_count()).unwrap();
    let ae = Autoencoder::new(Family::Circle, ae_params).unwrap();
    let entry = |name: &str| {
        let spec = workpieces::parse(name).unwrap();
        let psi = encode(&ae, &spec).unwrap();
        TaskEntry { task: Task::nominal(spec), embedding: Some(psi) }
    };
    let phase1 = EnvSetup::new(cfg.env(), vec![TaskEntry::nominal(Task::nominal(workpieces::parse("2*2").unwrap()))]);
    let phase2 = EnvSetup::new(cfg.env(), vec![entry("2*2"), entry("2*8")]);
    let expert = Expert::safe(cfg.expert());
    let whole = curriculum(&expert, "safe", &phase1, &phase2, &cfg.curriculum()).unwrap();

    assert_eq!(formats::read_policy(&out.join("C2.2")).unwrap(), whole.bc);
    assert_eq!(formats::read_policy(&out.join("C2.3")).unwrap(), whole.nominal);
    assert_eq!(formats::read_policy(&out.join("C3.2")).unwrap(), whole.diversified);
}

#[test]
fn reruns_reproduce_every_file() {
    let file = tiny();
    let (a, b) = (scratch("rerun-a"), scratch("rerun-b"));
    for id in ["C2.2", "C2.3", "C3.1", "study-2x1"] {
        Runner::new(&file, &a).run(id).unwrap();
        Runner::new(&file, &b).run(id).unwrap();
        let ma = Manifest::read(&a.join(id)).unwrap().unwrap();
        let mb = Manifest::read(&b.join(id)).unwrap().unwrap();
        assert_eq!(ma, mb, "{id}");
        assert!(ma.files.contains_key("report.csv") || id == "study-2x1");
    }
    // A different seed must change the outputs.
    let c = scratch("rerun-c");
    let other = tiny().with_seed(Some(4));
    Runner::new(&other, &c).run("C2.2").unwrap();
    let ma = Manifest::read(&a.join("C2.2")).unwrap().unwrap();
    let mc = Manifest::read(&c.join("C2.2")).unwrap().unwrap();
    assert_ne!(ma.files, mc.files);
}

#[test]
fn downstream_refuses_missing_stale_or_altered_upstream() {
    let file = tiny();
    let out = scratch("dag");
    let runner = Runner::new(&file, &out);
    assert!(matches!(runner.run("C2.3"), Err(Error::Upstream(_))));
    runner.run("C2.2").unwrap();
    assert!(runner.is_current("C2.2").unwrap());
    runner.run("C2.3").unwrap();

    // Config change upstream makes the old checkpoint stale.
    let changed = ConfigFile::parse(&format!("{TINY}\n[experiments.\"C2.2\"]\nbc = {{ epochs = 4 }}\n")).unwrap();
    let r2 = Runner::new(&changed, &out);
    assert!(!r2.is_current("C2.2").unwrap());
    assert!(matches!(r2.run("C2.3"), Err(Error::Upstream(_))));
    // The unchanged config still accepts it.
    assert!(runner.is_current("C2.2").unwrap());

    let net = out.join("C2.2/phi1.net");
    let mut bytes = fs::read(&net).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&net, bytes).unwrap();
    assert!(matches!(runner.check("C2.2"), Err(Error::Upstream(_))));
    assert!(matches!(runner.run("C2.3"), Err(Error::Upstream(_))));

    // Rebuilding with dependencies restores a consistent chain.
    runner.run_with_deps("C2.3").unwrap();
    assert!(runner.is_current("C2.2").unwrap() && runner.is_current("C2.3").unwrap());
}

#[test]
fn defect_arms_share_truths_and_write_reports() {
    let file = tiny();
    let out = scratch("defect");
    let runner = Runner::new(&file, &out);
    runner.run_with_deps("C4.1").unwrap();
    runner.run("C4.2").unwrap();
    let d1 = formats::read_table(&out.join("C4.1/defects.csv")).unwrap();
    let d2 = formats::read_table(&out.join("C4.2/defects.csv")).unwrap();
    let truth = |rows: &[std::collections::BTreeMap<String, String>]| -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().filter(|(k, _)| k.starts_with("d")).map(|(_, v)| v.clone()).collect()).collect()
    };
    assert_eq!(truth(&d1), truth(&d2));
    assert_eq!(d1.len(), 6);
    for id in ["C4.1", "C4.2"] {
        let r = formats::read_report(&out.join(id).join("report.csv")).unwrap();
        assert_eq!(r.n_episodes, 6);
        assert!((0.0..=1.0).contains(&r.success_rate.mean));
        assert_eq!(formats::read_episodes(&out.join(id).join("episodes.csv")).unwrap().len(), 6);
    }
}
