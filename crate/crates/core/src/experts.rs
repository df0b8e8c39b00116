//! Scripted demonstrators.
//!
//! The safe expert aligns first and only descends once the measured pose
//! error is inside its deadband, giving the "L"-shaped approach. The
//! efficient expert drives every axis toward the target at full speed,
//! shortening only the final step so it lands on the measured target.

use crate::math::clamp;
use crate::sim::{Action, Observation, Policy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertConfig {
    /// Deadband on `|x̂*|` and `|ŷ*|` (mm).
    pub deadband_xy: f64,
    /// Deadband on `|θ̂*|` (rad).
    pub deadband_theta: f64,
    /// Proportional gain on the pose error (1/s).
    pub gain: f64,
    pub a_max: [f64; 4],
    /// Control period (s), used by the efficient expert to avoid overshoot.
    pub dt: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        ExpertConfig {
            deadband_xy: 0.075,
            deadband_theta: 0.01,
            gain: 1.0,
            a_max: [2.5, 2.5, 0.1, 2.5],
            dt: 0.25,
        }
    }
}

impl ExpertConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.deadband_xy > 0.0 && self.deadband_theta > 0.0) {
            return Err("expert deadbands must be positive");
        }
        if !(self.gain > 0.0 && self.dt > 0.0) {
            return Err("expert gain and dt must be positive");
        }
        if self.a_max.iter().any(|a| !(*a > 0.0)) {
            return Err("expert a_max must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpertKind {
    Safe,
    Efficient,
}

impl ExpertKind {
    pub fn name(self) -> &'static str {
        match self {
            ExpertKind::Safe => "safe",
            ExpertKind::Efficient => "efficient",
        }
    }
}

fn proportional(obs: &Observation, cfg: &ExpertConfig) -> [f64; 3] {
    core::array::from_fn(|i| clamp(-cfg.gain * obs.0[i], -cfg.a_max[i], cfg.a_max[i]))
}

pub fn safe_expert(obs: &Observation, cfg: &ExpertConfig) -> Action {
    let [ux, uy, ut] = proportional(obs, cfg);
    let aligned = obs.0[0].abs() <= cfg.deadband_xy
        && obs.0[1].abs() <= cfg.deadband_xy
        && obs.0[2].abs() <= cfg.deadband_theta;
    let uz = if aligned { -cfg.a_max[3] } else { 0.0 };
    Action { ux, uy, utheta: ut, uz }
}

/// Full speed toward zero error on every axis, descending throughout. An
/// axis whose error is closable within one period commands exactly `-e/dt`.
pub fn efficient_expert(obs: &Observation, cfg: &ExpertConfig) -> Action {
    let lateral: [f64; 3] = core::array::from_fn(|i| clamp(-obs.0[i] / cfg.dt, -cfg.a_max[i], cfg.a_max[i]));
    Action { ux: lateral[0], uy: lateral[1], utheta: lateral[2], uz: -cfg.a_max[3] }
}

/// A scripted expert bound to its configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expert {
    pub kind: ExpertKind,
    pub config: ExpertConfig,
}

impl Expert {
    pub fn safe(config: ExpertConfig) -> Self {
        Expert { kind: ExpertKind::Safe, config }
    }

    pub fn efficient(config: ExpertConfig) -> Self {
        Expert { kind: ExpertKind::Efficient, config }
    }
}

impl Policy for Expert {
    fn act(&self, obs: &Observation) -> Action {
        match self.kind {
            ExpertKind::Safe => safe_expert(obs, &self.config),
            ExpertKind::Efficient => efficient_expert(obs, &self.config),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(x: f64, y: f64, t: f64, z: f64) -> Observation {
        Observation([x, y, t, z, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn safe_expert_saturates_while_aligning() {
        let cfg = ExpertConfig { gain: 5.0, ..ExpertConfig::default() };
        let a = safe_expert(&obs(1.0, 0.0, 0.0, 2.0), &cfg);
        assert_eq!(a, Action { ux: -2.5, uy: 0.0, utheta: 0.0, uz: 0.0 });
    }

    #[test]
    fn safe_expert_descends_inside_deadband() {
        let cfg = ExpertConfig::default();
        let a = safe_expert(&obs(0.01, -0.01, 0.001, 2.0), &cfg);
        assert_eq!(a.uz, -2.5);
        assert!(a.ux.abs() < 0.1 && a.uy.abs() < 0.1 && a.utheta.abs() < 0.01);
    }

    #[test]
    fn efficient_expert_sign_rule() {
        let cfg = ExpertConfig::default();
        let a = efficient_expert(&obs(1.0, -1.0, 0.03, 2.0), &cfg);
        assert_eq!(a, Action { ux: -2.5, uy: 2.5, utheta: -0.1, uz: -2.5 });
    }

    #[test]
    fn efficient_expert_does_not_overshoot() {
        let cfg = ExpertConfig::default();
        let a = efficient_expert(&obs(0.25, 0.0, -0.02, 2.0), &cfg);
        assert_eq!(a, Action { ux: -1.0, uy: 0.0, utheta: 0.08, uz: -2.5 });
    }
}
