use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use tgi_core::experts::{Expert, ExpertConfig};
use tgi_core::geometry::{contains, DefectParams, PlanarPose, WorkpieceSpec};
use tgi_core::par;
use tgi_core::rng;
use tgi_core::sim::*;

fn write_csv(t: &Trajectory) -> String {
    let mut out = String::new();
    for (k, s) in t.steps.iter().enumerate() {
        let row: Vec<String> = s
            .state
            .to_array()
            .iter()
            .chain(&s.action.to_array())
            .chain(&s.observation.0)
            .chain([s.reward].iter())
            .map(|v| format!("{:016x}", v.to_bits()))
            .collect();
        out.push_str(&format!("{k},{},{}\n", row.join(","), s.collided));
    }
    out
}

/// Mixes exact homing on the true tolerance centre with random commands, so
/// sweeps reach the board, the walls and the inserted region.
fn driver_action(state: &EnvState, r: &mut rng::Rng, a_max: &[f64; 4]) -> Action {
    let mode = r.random_range(0..10);
    let random = |r: &mut rng::Rng| Action::from_array(core::array::from_fn(|i| r.random_range(-1.5 * a_max[i]..1.5 * a_max[i])));
    match mode {
        0..=3 => random(r),
        4..=8 => {
            let e = [state.x, state.y, state.theta];
            let jitter = r.random_range(0.0..0.4);
            Action::from_array([
                -e[0] / 0.25 + r.random_range(-jitter..jitter),
                -e[1] / 0.25 + r.random_range(-jitter..jitter),
                -e[2] / 0.25,
                -a_max[3],
            ])
        }
        _ => Action::from_array([0.0, 0.0, 0.0, a_max[3] * r.random_range(-1.0..1.0)]),
    }
}

fn task_for(cols: usize, defect_std: f64, seed: u64) -> Task {
    let spec = WorkpieceSpec::socket_2xn(cols);
    let mut r = rng::derived(seed, &[7]);
    let n = Normal::new(0.0, defect_std.max(1e-12)).unwrap();
    let offsets = (0..spec.pin_count()).map(|_| if defect_std == 0.0 { [0.0, 0.0] } else { [n.sample(&mut r), n.sample(&mut r)] }).collect();
    Task::new(spec, DefectParams { offsets }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// 100 cases × at least 100 steps each covers 10^4 steps.
    #[test]
    fn step_invariants(seed in any::<u64>(), cols in 1usize..=8, defect_std in prop_oneof![Just(0.0), 0.0f64..0.05]) {
        let config = EnvConfig { init_range: InitRange { lo: [-0.6, -0.6, -0.05, 0.1], hi: [0.6, 0.6, 0.05, 1.0] }, ..EnvConfig::default() };
        let task = task_for(cols, defect_std, seed);
        let mut r = rng::derived(seed, &[1]);
        let mut steps = 0;
        let mut episode = 0u64;
        while steps < 100 {
            let mut env = InsertionEnv::reset(&config, &task, rng::derive(seed, &[2, episode])).unwrap();
            episode += 1;
            let mut ret = 0.0;
            while !env.is_done() {
                let before = *env.state();
                let action = driver_action(&before, &mut r, &config.a_max);
                let res = env.step(action).unwrap();
                steps += 1;
                let s = res.next_state;
                let d = [s.x - before.x, s.y - before.y, s.theta - before.theta, s.z - before.z];
                for (i, (moved, a)) in d.iter().zip(&config.a_max).enumerate() {
                    prop_assert!(moved.abs() <= a * config.dt + 1e-12, "axis {i} moved {moved}");
                }
                if s.z < 0.0 {
                    prop_assert!(contains(&task.spec, &task.defects, s.pose()), "below board outside tolerance: {s:?}");
                }
                prop_assert_eq!(res.collided, s.in_contact());
                prop_assert!(!res.success || res.done);
                prop_assert!(res.step_index <= config.k_max);
                let k = res.step_index as f64;
                let bonus = config.reward_weight * (1.0 - k / config.k_max as f64);
                if res.success {
                    prop_assert!(res.reward == bonus || res.reward == bonus - 1.0);
                } else if res.collided {
                    prop_assert_eq!(res.reward, -1.0);
                } else {
                    prop_assert_eq!(res.reward, 0.0);
                }
                ret += res.reward;
            }
            prop_assert!(ret >= -(config.k_max as f64) && ret <= config.reward_weight);
        }
    }

    #[test]
    fn rollouts_repeat_byte_for_byte(seed in any::<u64>(), cols in 1usize..=8) {
        let config = EnvConfig::default();
        let task = task_for(cols, 0.03, seed);
        let expert = Expert::efficient(ExpertConfig::default());
        let a = rollout(&config, &task, &expert, PlanarPose::ORIGIN, seed).unwrap();
        let b = rollout(&config, &task, &expert, PlanarPose::ORIGIN, seed).unwrap();
        prop_assert_eq!(write_csv(&a), write_csv(&b));
    }
}

#[test]
fn parallel_and_serial_rollouts_agree() {
    let config = EnvConfig::default();
    let task = task_for(4, 0.03, 9);
    let expert = Expert::safe(ExpertConfig::default());
    let parallel = par::map_indexed(64, |i| write_csv(&rollout(&config, &task, &expert, PlanarPose::ORIGIN, i as u64).unwrap()));
    for (i, p) in parallel.iter().enumerate() {
        assert_eq!(*p, write_csv(&rollout(&config, &task, &expert, PlanarPose::ORIGIN, i as u64).unwrap()));
    }
}

#[test]
fn reset_mean_is_range_centre() {
    let config = EnvConfig { init_range: InitRange { lo: [-2.0, -1.0, -0.05, 1.0], hi: [2.0, 3.0, 0.05, 3.0] }, ..EnvConfig::default() };
    let n = 10_000;
    let states: Vec<[f64; 4]> = (0..n).map(|i| {
        let s = reset(&config, i as u64).unwrap();
        [s.x, s.y, s.theta, s.z]
    }).collect();
    for a in 0..4 {
        let (lo, hi) = (config.init_range.lo[a], config.init_range.hi[a]);
        let mean = states.iter().map(|s| s[a]).sum::<f64>() / n as f64;
        let se = (hi - lo) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5 * (lo + hi)).abs() < 3.0 * se, "axis {a}: mean {mean}");
        assert!(states.iter().all(|s| s[a] >= lo && s[a] <= hi));
    }
}

#[test]
fn measurement_noise_has_configured_std() {
    let config = EnvConfig::default();
    let state = reset(&config, 1).unwrap();
    let mut r = rng::from_seed(3);
    let n = 100_000;
    let draws: Vec<Observation> = (0..n).map(|_| observe(&state, PlanarPose::ORIGIN, &config.noise_std, &mut r)).collect();
    let truth = [state.x, state.y, state.theta, state.z];
    for (a, t) in truth.iter().enumerate() {
        let e: Vec<f64> = draws.iter().map(|o| o.0[a] - t).collect();
        let m = e.iter().sum::<f64>() / n as f64;
        let sd = (e.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt();
        let want = config.noise_std[a];
        if want == 0.0 {
            assert_eq!(sd, 0.0);
        } else {
            assert!((sd - want).abs() < 0.02 * want, "axis {a}: std {sd}");
        }
    }
    for o in &draws {
        assert_eq!(&o.0[4..], &[0.0; 4]);
    }
}

#[test]
fn zero_policy_runs_full_horizon_with_zero_return() {
    let config = EnvConfig::default();
    let task = Task::nominal(WorkpieceSpec::socket_2xn(2));
    let t = rollout(&config, &task, &|_: &Observation| Action::ZERO, PlanarPose::ORIGIN, 5).unwrap();
    assert_eq!(t.len(), config.k_max);
    assert_eq!(t.total_reward(), 0.0);
    assert!(!t.success);
}

#[test]
fn safe_expert_inserts_single_pin_from_aligned_start() {
    let config = EnvConfig { init_range: InitRange::point([0.0, 0.0, 0.0, 2.0]), ..EnvConfig::default().noiseless() };
    let task = Task::nominal(WorkpieceSpec::circle_grid(1, 1, 0.3, 0.5, 1.0, 1.0));
    let t = rollout(&config, &task, &Expert::safe(ExpertConfig::default()), PlanarPose::ORIGIN, 0).unwrap();
    assert!(t.success);
    assert_eq!(t.collisions(), 0);
}

#[test]
fn driver_reaches_every_contact_regime() {
    let config = EnvConfig { init_range: InitRange { lo: [-0.6, -0.6, -0.05, 0.1], hi: [0.6, 0.6, 0.05, 1.0] }, ..EnvConfig::default() };
    let (mut below, mut board, mut wall, mut success, mut steps) = (0, 0, 0, 0, 0);
    for seed in 0..200u64 {
        let task = task_for(1 + (seed % 8) as usize, 0.03, seed);
        let mut r = rng::derived(seed, &[1]);
        let mut env = InsertionEnv::reset(&config, &task, seed).unwrap();
        while !env.is_done() {
            let a = driver_action(env.state(), &mut r, &config.a_max);
            let res = env.step(a).unwrap();
            steps += 1;
            let s = res.next_state;
            below += (s.z < 0.0) as usize;
            board += (s.fz != 0) as usize;
            wall += (s.fx != 0 || s.fy != 0 || s.q_theta != 0) as usize;
            success += res.success as usize;
        }
    }
    println!("steps {steps} below {below} board {board} wall {wall} success {success}");
    assert!(steps >= 2000 && below > 100 && board > 100 && wall > 100 && success > 10);
}
