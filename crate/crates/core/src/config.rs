//! Environment, reward, and domain-randomization configuration.
//!
//! The `[domain_randomization]` section of the config file mirrors the
//! training randomization table field for field; everything else is the
//! fixed task setup.

use serde::{Deserialize, Serialize};

use crate::brake::BrakeModel;
use crate::contact::ContactParams;
use crate::hand::{FingerConfig, HandConfig};
use crate::{SimError, SimResult};

/// Which bottle population episodes draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectSet {
    /// The fixed medium bottle: body 84 mm diameter x 60 mm, cap 67 x 26.
    Single,
    /// Uniformly sampled bodies 82-86 mm diameter, 55-67 mm height; caps
    /// 62-70 mm diameter, 20-33 mm height.
    Multi,
}

/// Reward term weights. Work and action are penalties, so their weights are
/// non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub w_contact: f64,
    pub w_twist: f64,
    pub w_pose: f64,
    pub w_work: f64,
    pub w_action: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_contact: 2.5,
            w_twist: 500.0,
            w_pose: 20.0,
            w_work: -0.001,
            w_action: -1.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> SimResult<()> {
        if self.w_work > 0.0 || self.w_action > 0.0 {
            return Err(SimError::Config(
                "w_work and w_action are penalty weights and must be <= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-episode randomization ranges and observation/action noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainRandomizationConfig {
    /// Object mass range, kg.
    pub mass_kg: [f64; 2],
    /// Object surface friction coefficient range.
    pub friction: [f64; 2],
    /// Multiplicative object shape scale range.
    pub shape_scale: [f64; 2],
    /// Additive initial-position jitter per axis, m.
    pub init_position: [f64; 2],
    /// Additive initial rotation about the world z axis, rad.
    pub init_z_orientation: [f64; 2],
    /// Hand (fingertip and palm) friction coefficient range.
    pub hand_friction: [f64; 2],
    /// Multiplicative P gain range.
    pub p_gain_scale: [f64; 2],
    /// Multiplicative D gain range.
    pub d_gain_scale: [f64; 2],
    /// Random force magnitude as a multiple of object mass.
    pub random_force_scale: f64,
    /// Per-control-step probability of resampling the random force.
    pub random_force_probability: f64,
    /// Multiplicative decay applied each interval when not resampled.
    pub random_force_decay: f64,
    /// Decay interval, seconds (one control step).
    pub random_force_interval: f64,
    /// Std of additive noise on observed bottle keypoints, m.
    pub keypoint_obs_noise: f64,
    /// Std of additive noise on observed joint positions, rad.
    pub joint_obs_noise: f64,
    /// Std of additive noise on actions.
    pub action_noise: f64,
    /// Probability of repeating the previous observation verbatim.
    pub frame_lag_probability: f64,
    /// Probability of executing the previous commanded action.
    pub action_lag_probability: f64,
    /// Brake breakaway torque range, N·m (collapsed to a point by default).
    pub brake_torque: [f64; 2],
}

impl Default for DomainRandomizationConfig {
    fn default() -> Self {
        Self {
            mass_kg: [0.03, 0.1],
            friction: [0.5, 1.5],
            shape_scale: [0.95, 1.05],
            init_position: [-0.02, 0.02],
            init_z_orientation: [-0.75, 0.75],
            hand_friction: [0.5, 1.5],
            p_gain_scale: [0.8, 1.1],
            d_gain_scale: [0.7, 1.2],
            random_force_scale: 2.0,
            random_force_probability: 0.2,
            random_force_decay: 0.99,
            random_force_interval: 0.1,
            keypoint_obs_noise: 0.02,
            joint_obs_noise: 0.04,
            action_noise: 0.1,
            frame_lag_probability: 0.1,
            action_lag_probability: 0.1,
            brake_torque: [0.05, 0.05],
        }
    }
}

impl DomainRandomizationConfig {
    /// All ranges collapsed and all noise off; episodes with equal seeds are
    /// then bit-identical even across config tweaks.
    pub fn deterministic() -> Self {
        Self {
            mass_kg: [0.065, 0.065],
            friction: [1.0, 1.0],
            shape_scale: [1.0, 1.0],
            init_position: [0.0, 0.0],
            init_z_orientation: [0.0, 0.0],
            hand_friction: [1.0, 1.0],
            p_gain_scale: [1.0, 1.0],
            d_gain_scale: [1.0, 1.0],
            random_force_scale: 0.0,
            random_force_probability: 0.0,
            random_force_decay: 0.99,
            random_force_interval: 0.1,
            keypoint_obs_noise: 0.0,
            joint_obs_noise: 0.0,
            action_noise: 0.0,
            frame_lag_probability: 0.0,
            action_lag_probability: 0.0,
            brake_torque: [0.05, 0.05],
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let ranges = [
            ("mass_kg", self.mass_kg),
            ("friction", self.friction),
            ("shape_scale", self.shape_scale),
            ("init_position", self.init_position),
            ("init_z_orientation", self.init_z_orientation),
            ("hand_friction", self.hand_friction),
            ("p_gain_scale", self.p_gain_scale),
            ("d_gain_scale", self.d_gain_scale),
            ("brake_torque", self.brake_torque),
        ];
        for (name, [lo, hi]) in ranges {
            if lo > hi || !lo.is_finite() || !hi.is_finite() {
                return Err(SimError::Config(format!("{name}: empty or non-finite range")));
            }
        }
        for (name, p) in [
            ("random_force_probability", self.random_force_probability),
            ("frame_lag_probability", self.frame_lag_probability),
            ("action_lag_probability", self.action_lag_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::Config(format!("{name}: must be in [0, 1]")));
            }
        }
        if self.mass_kg[0] <= 0.0 {
            return Err(SimError::Config("mass_kg: must be positive".into()));
        }
        Ok(())
    }
}

/// Brake friction setup (kinetic torque as a fraction of breakaway).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrakeConfig {
    pub kinetic_ratio: f64,
    pub viscous_coeff: f64,
}

impl Default for BrakeConfig {
    fn default() -> Self {
        Self {
            kinetic_ratio: 0.8,
            viscous_coeff: 1e-4,
        }
    }
}

impl BrakeConfig {
    pub fn model(&self, breakaway: f64) -> BrakeModel {
        BrakeModel {
            breakaway_torque: breakaway,
            kinetic_torque: self.kinetic_ratio * breakaway,
            viscous_coeff: self.viscous_coeff,
        }
    }
}

/// Full task environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// Control rate, Hz.
    pub control_hz: f64,
    /// Physics substeps per control step.
    pub substeps: usize,
    /// Episode horizon in control steps.
    pub horizon: usize,
    /// Settling time simulated before control begins, s.
    pub settle_time: f64,
    pub gravity: f64,
    pub object_set: ObjectSet,
    /// Zero the bottle keypoint channels in the policy observation.
    pub use_vision: bool,
    /// Contact reward sharpness alpha, 1/m.
    pub contact_sharpness: f64,
    /// Number of reference contact keypoints per ring (n = m).
    pub keypoints_per_ring: usize,
    /// Direction the bottle axis is rewarded for aligning with.
    pub align_axis: [f64; 3],
    /// Episode ends when the bottle root drops this far below the palm plane.
    pub low_z_threshold: f64,
    /// Alignment-failure angle, rad.
    pub align_fail_angle: f64,
    /// Time by which alignment must have been reached at least once, s.
    pub align_fail_time: f64,
    /// Action scale eta.
    pub action_scale: f64,
    /// EMA smoothing coefficient beta.
    pub action_ema: f64,
    /// Nominal PD gains before per-episode randomization.
    pub pd_kp: f64,
    pub pd_kd: f64,
    /// Std of Gaussian joint-position noise about the canonical start pose.
    pub init_joint_noise: f64,
    /// Drop height above the resting pose at reset, m.
    pub drop_clearance: f64,
    /// Default horizontal offset of the bottle axis from the palm-center
    /// line, m (the cradle line the fingers curl over).
    pub rest_offset_y: f64,
    pub contact: ContactParams,
    pub brake: BrakeConfig,
    pub rewards: RewardWeights,
    pub domain_randomization: DomainRandomizationConfig,
    pub hand: HandConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            control_hz: 10.0,
            substeps: 20,
            horizon: 300,
            settle_time: 0.3,
            gravity: 9.81,
            object_set: ObjectSet::Single,
            use_vision: true,
            contact_sharpness: 25.0,
            keypoints_per_ring: 8,
            align_axis: [1.0, 0.0, 0.0],
            low_z_threshold: 0.05,
            align_fail_angle: 0.4,
            align_fail_time: 3.0,
            action_scale: 0.1,
            action_ema: 0.75,
            pd_kp: 20.0,
            pd_kd: 2.0 * 20.0_f64.sqrt(),
            init_joint_noise: 0.03,
            drop_clearance: 0.004,
            rest_offset_y: 0.01,
            contact: ContactParams {
                stiffness: 1000.0,
                damping: 10.0,
                friction_coeff: 1.0,
                slip_scale: 1e-3,
                max_force: 5.0,
            },
            brake: BrakeConfig::default(),
            rewards: RewardWeights::default(),
            domain_randomization: DomainRandomizationConfig::default(),
            hand: default_hand_config(),
        }
    }
}

impl EnvConfig {
    pub fn dt_control(&self) -> f64 {
        1.0 / self.control_hz
    }

    pub fn dt_substep(&self) -> f64 {
        self.dt_control() / self.substeps as f64
    }

    pub fn validate(&self) -> SimResult<()> {
        if self.control_hz <= 0.0 || self.substeps == 0 || self.horizon == 0 {
            return Err(SimError::Config(
                "control_hz, substeps, horizon must be positive".into(),
            ));
        }
        if self.keypoints_per_ring == 0 {
            return Err(SimError::Config("keypoints_per_ring must be >= 1".into()));
        }
        if self.contact_sharpness <= 0.0 {
            return Err(SimError::Config("contact_sharpness must be > 0".into()));
        }
        let axis = nalgebra::Vector3::from(self.align_axis);
        if axis.norm() < 1e-9 {
            return Err(SimError::ZeroLength("align_axis"));
        }
        if self.pd_kp <= 0.0 || self.pd_kd < 0.0 {
            return Err(SimError::Config("pd gains must be positive".into()));
        }
        self.rewards.validate()?;
        self.domain_randomization.validate()?;
        self.hand.build().map(|_| ())
    }
}

/// The built-in Allegro-like rig: index/middle/ring knuckles spread along
/// the bottle axis with the chain running toward +y and curling upward; the
/// thumb approaches from the near side. The left hand mirrors the right.
pub fn default_hand_config() -> HandConfig {
    let finger = |name: &str, dx: f64, init: [f64; 4]| FingerConfig {
        name: name.into(),
        base_offset: [dx, -0.016, -0.002],
        base_rpy: [0.0, 0.0, std::f64::consts::FRAC_PI_2],
        joint_axes: [[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [0.0, -1.0, 0.0], [0.0, -1.0, 0.0]],
        link_lengths: [0.054, 0.038, 0.030, 0.027],
        lower_limits: [-0.47, -0.30, -0.30, -0.30],
        upper_limits: [0.47, 1.80, 1.80, 1.80],
        initial_positions: init,
        tip_radius: 0.012,
    };
    // The thumb's base yaw cancels its canonical abduction so the chain runs
    // toward +y at the start pose, reaching over the bottle's near side.
    let thumb_yaw = std::f64::consts::FRAC_PI_2 - 1.0670;
    HandConfig {
        mirror_left: true,
        right_palm_center: [0.030, 0.0, 0.0],
        palm_half_extents: [0.055, 0.065],
        fingers: vec![
            finger("index", -0.018, [-0.0080, 0.9478, 0.6420, -0.0330]),
            finger("middle", 0.0, [0.0530, 0.7163, 0.9609, 0.0000]),
            finger("ring", 0.018, [0.0000, 0.7811, 0.7868, 0.3454]),
            FingerConfig {
                name: "thumb".into(),
                base_offset: [0.005, -0.050, 0.0135],
                base_rpy: [0.0, 0.0, thumb_yaw],
                joint_axes: [
                    [0.0, 0.0, 1.0],
                    [0.0, -1.0, 0.0],
                    [0.0, -1.0, 0.0],
                    [0.0, -1.0, 0.0],
                ],
                link_lengths: [0.050, 0.040, 0.032, 0.028],
                lower_limits: [0.20, -0.30, -0.30, -0.30],
                upper_limits: [1.50, 1.80, 1.80, 1.80],
                initial_positions: [1.0670, 1.1670, 0.7500, 0.4500],
                tip_radius: 0.012,
            },
        ],
    }
}
