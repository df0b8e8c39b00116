use std::fs;
use std::path::{Path, PathBuf};

use tgi::{formats, Error};
use tgi_core::eval::{EpisodeStats, EvalReport};
use tgi_core::experts::{Expert, ExpertConfig};
use tgi_core::geometry::{PlanarPose, WorkpieceSpec};
use tgi_core::learning::CurveRow;
use tgi_core::nn::{nominal_spec, PolicyParams};
use tgi_core::rng;
use tgi_core::sim::{rollout, EnvConfig, Task};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("formats-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn trajectory_csv_keeps_every_state_exactly() {
    let dir = scratch("traj");
    let task = Task::nominal(WorkpieceSpec::socket_2xn(2));
    let t = rollout(&EnvConfig::default(), &task, &Expert::safe(ExpertConfig::default()), PlanarPose::ORIGIN, 17).unwrap();
    let path = dir.join("t.csv");
    formats::write_trajectory(&path, &t).unwrap();
    let rows = formats::read_trajectory_positions(&path).unwrap();
    assert_eq!(rows.len(), t.len() + 1);
    assert_eq!(rows[0], [t.initial.x, t.initial.y, t.initial.z]);
    for (r, s) in rows[1..].iter().zip(&t.steps) {
        assert_eq!(*r, [s.state.x, s.state.y, s.state.z]);
    }
    let table = formats::read_table(&path).unwrap();
    let reward: f64 = table.iter().map(|r| r["reward"].parse::<f64>().unwrap()).sum();
    assert_eq!(reward, t.total_reward());
    assert_eq!(table[0]["ux"], "0");

    fs::write(&path, "a,b\n1,2\n").unwrap();
    assert!(matches!(formats::read_trajectory_positions(&path), Err(Error::Format { .. })));
}

#[test]
fn reports_episodes_and_curves_roundtrip() {
    let dir = scratch("tables");
    let eps: Vec<EpisodeStats> = (0..7)
        .map(|i| EpisodeStats { reward: 0.1 * i as f64 - 0.25, success: i % 2 == 0, steps: 10 + i, collisions: i / 3 })
        .collect();
    let report = EvalReport::from_episodes(&eps).tagged("π_φ", "2*2, 2*8", "2*4");
    formats::write_report(&dir.join("r.csv"), &report).unwrap();
    assert_eq!(formats::read_report(&dir.join("r.csv")).unwrap(), report);
    formats::write_episodes(&dir.join("e.csv"), &eps).unwrap();
    assert_eq!(formats::read_episodes(&dir.join("e.csv")).unwrap(), eps);

    let curve: Vec<CurveRow> = (0..3)
        .map(|i| CurveRow { iteration: i, mean_reward: i as f64, reward_std: 0.5, mean_d_student: 0.4, mean_d_expert: 0.6, best_fitness: -1.0 / 3.0 })
        .collect();
    formats::write_curve(&dir.join("c.csv"), &curve).unwrap();
    let text = fs::read_to_string(dir.join("c.csv")).unwrap();
    assert!(text.starts_with("iteration,mean_reward,reward_std,mean_D_student,mean_D_expert,best_fitness\n"));
    let back = formats::read_curve(&dir.join("c.csv")).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back[2].best_fitness, -1.0 / 3.0);
}

#[test]
fn policy_checkpoints_roundtrip_and_reject_wrong_shapes() {
    let dir = scratch("policy");
    let params = PolicyParams::init(&mut rng::from_seed(9));
    formats::write_policy(&dir, &params).unwrap();
    assert_eq!(formats::read_policy(&dir).unwrap(), params);

    let spec = nominal_spec();
    let wrong = formats::read_net(&dir.join("phi2.net"), &spec.sizes, spec.param_count());
    assert!(matches!(wrong, Err(Error::Format { .. })));
    let mut bytes = fs::read(dir.join("phi1.net")).unwrap();
    bytes.pop();
    fs::write(dir.join("phi1.net"), &bytes).unwrap();
    assert!(matches!(formats::read_policy(&dir), Err(Error::Format { .. })));
    fs::remove_file(dir.join("phi1.net")).unwrap();
    assert!(matches!(formats::read_policy(&dir), Err(Error::Io { .. })));
}
