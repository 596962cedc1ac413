//! The lid-twisting task environment, stepped at the control rate.
//!
//! Each control step: random-force refresh, action lag/noise, EMA target
//! update, a fixed number of physics substeps (PD joints, fingertip and palm
//! contacts, bottle integration, brake joint), reward terms, termination,
//! and observation construction.

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::body::RigidBodyState;
use crate::bottle::{step_assembly, AppliedContact, BottleAssembly, ObjectSpec};
use crate::config::{EnvConfig, ObjectSet};
use crate::contact::penalty_force;
use crate::hand::{
    apply_action, HandModel, HandState, PdParams, PdStepper, NUM_FINGERS, NUM_JOINTS,
};
use crate::log::{DoneReason, Transition};
use crate::obs::{Observation, PrivilegedObservation, OBS_DIM};
use crate::reward::{
    alignment_angle, reward_contact, reward_regularizers, reward_twist, total_reward, RewardTerms,
};
use crate::shape::{collide_sphere_cylinder, Link};
use crate::{SimError, SimResult};

/// Parameters drawn once per episode by domain randomization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDraw {
    pub mass: f64,
    pub object_friction: f64,
    pub hand_friction: f64,
    pub shape_scale: f64,
    pub p_gain_scale: f64,
    pub d_gain_scale: f64,
    pub brake_torque: f64,
    pub object: ObjectSpec,
}

/// Full per-instance environment state; everything needed to continue an
/// episode bit-exactly lives here, including the RNG stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub bottle: BottleAssembly,
    pub hand: HandState,
    pub pd: PdParams,
    pub stepper: PdStepper,
    pub ema: [f64; NUM_JOINTS],
    pub prev_action: [f64; NUM_JOINTS],
    pub random_force: Vector3<f64>,
    pub draw: EpisodeDraw,
    /// Control step index within the episode.
    pub t: usize,
    pub theta_start: f64,
    pub aligned_once: bool,
    pub obs: Observation,
    pub priv_obs: PrivilegedObservation,
    pub rng: ChaCha8Rng,
    pub done: bool,
}

/// Immutable task context shared by all environment instances.
#[derive(Debug, Clone)]
pub struct TwistEnv {
    config: EnvConfig,
    model: HandModel,
    lower: Vec<f64>,
    upper: Vec<f64>,
    canonical: [f64; NUM_JOINTS],
    align_axis: Vector3<f64>,
}

impl TwistEnv {
    pub fn new(config: EnvConfig) -> SimResult<Self> {
        config.validate()?;
        let model = config.hand.build()?;
        let lower = model.joint_lower();
        let upper = model.joint_upper();
        let canonical: [f64; NUM_JOINTS] = model
            .initial_positions()
            .try_into()
            .map_err(|_| SimError::Config("hand model must have 32 joints".into()))?;
        let align_axis = Vector3::from(config.align_axis).normalize();
        Ok(Self {
            config,
            model,
            lower,
            upper,
            canonical,
            align_axis,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn model(&self) -> &HandModel {
        &self.model
    }

    /// Privileged observation length for this configuration.
    pub fn priv_dim(&self) -> usize {
        143 + 6 * self.config.keypoints_per_ring
    }

    /// Steps before which alignment must have been achieved at least once.
    fn align_deadline(&self) -> usize {
        (self.config.align_fail_time * self.config.control_hz).round() as usize
    }

    // -----------------------------------------------------------------
    // Reset
    // -----------------------------------------------------------------

    /// Create a fresh episode drawing from `rng`. Retries placement up to 10
    /// times before reporting failure.
    pub fn spawn(&self, mut rng: ChaCha8Rng) -> SimResult<EnvState> {
        for _ in 0..10 {
            let mut state = self.sample_episode(&mut rng)?;
            self.settle(&mut state)?;
            if self.placement_ok(&state) {
                state.theta_start = state.bottle.lid_angle;
                self.build_observation(&mut state, true);
                return Ok(state);
            }
        }
        Err(SimError::ResetFailed { attempts: 10 })
    }

    /// A usable start state: the bottle came to rest on the palms instead of
    /// dropping or getting flung out of the workspace.
    fn placement_ok(&self, state: &EnvState) -> bool {
        let p = state.bottle.root.position;
        p.z > -self.config.low_z_threshold
            && p.z < 0.2
            && p.x.abs() < 0.15
            && p.y.abs() < 0.15
            && state.bottle.root.linear_velocity.norm() < 0.5
            && state.bottle.root.angular_velocity.norm() < 20.0
    }

    /// Re-roll an episode in place, continuing the state's own RNG stream
    /// (the auto-reset path).
    pub fn respawn(&self, state: &mut EnvState) -> SimResult<()> {
        let rng = state.rng.clone();
        *state = self.spawn(rng)?;
        Ok(())
    }

    fn sample_episode(&self, rng: &mut ChaCha8Rng) -> SimResult<EnvState> {
        let dr = &self.config.domain_randomization;
        let uniform = |rng: &mut ChaCha8Rng, range: [f64; 2]| {
            if range[0] == range[1] {
                range[0]
            } else {
                rng.gen_range(range[0]..range[1])
            }
        };

        let mass = uniform(rng, dr.mass_kg);
        let object_friction = uniform(rng, dr.friction);
        let hand_friction = uniform(rng, dr.hand_friction);
        let shape_scale = uniform(rng, dr.shape_scale);
        let p_gain_scale = uniform(rng, dr.p_gain_scale);
        let d_gain_scale = uniform(rng, dr.d_gain_scale);
        let brake_torque = uniform(rng, dr.brake_torque);

        let dims = match self.config.object_set {
            ObjectSet::Single => ObjectSpec {
                base_radius: 0.084 / 2.0,
                base_height: 0.060,
                lid_radius: 0.067 / 2.0,
                lid_height: 0.026,
                total_mass: mass,
            },
            ObjectSet::Multi => ObjectSpec {
                base_radius: uniform(rng, [0.082, 0.086]) / 2.0,
                base_height: uniform(rng, [0.055, 0.067]),
                lid_radius: uniform(rng, [0.062, 0.070]) / 2.0,
                lid_height: uniform(rng, [0.020, 0.033]),
                total_mass: mass,
            },
        };
        let object = dims.scaled(shape_scale);

        // Horizontal pose: bottle axis along +x (lid toward the right hand),
        // then jitter about the world z axis and in position.
        let yaw = uniform(rng, dr.init_z_orientation);
        let orientation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
            * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::FRAC_PI_2);
        let jitter = Vector3::new(
            uniform(rng, dr.init_position),
            uniform(rng, dr.init_position),
            uniform(rng, dr.init_position),
        );
        let rest = Vector3::new(
            0.0,
            self.config.rest_offset_y,
            object.base_radius + self.config.drop_clearance,
        );
        let root = RigidBodyState::at_rest(rest + jitter, orientation);

        let bottle = BottleAssembly::new(
            &object,
            self.config.brake.model(brake_torque),
            self.config.keypoints_per_ring,
            root,
        )?;

        // Hands at the canonical pose plus Gaussian joint noise, holding
        // station there.
        let mut q = self.canonical;
        if self.config.init_joint_noise > 0.0 {
            let noise = Normal::new(0.0, self.config.init_joint_noise).unwrap();
            for (j, qj) in q.iter_mut().enumerate() {
                *qj = (*qj + noise.sample(rng)).clamp(self.lower[j], self.upper[j]);
            }
        }
        let hand = HandState::at_pose(&self.model, &q);

        let pd = PdParams {
            kp: vec![self.config.pd_kp * p_gain_scale; NUM_JOINTS],
            kd: vec![self.config.pd_kd * d_gain_scale; NUM_JOINTS],
        };
        let stepper = PdStepper::new(&pd, self.config.dt_substep());

        Ok(EnvState {
            bottle,
            hand,
            pd,
            stepper,
            ema: [0.0; NUM_JOINTS],
            prev_action: [0.0; NUM_JOINTS],
            random_force: Vector3::zeros(),
            draw: EpisodeDraw {
                mass,
                object_friction,
                hand_friction,
                shape_scale,
                p_gain_scale,
                d_gain_scale,
                brake_torque,
                object,
            },
            t: 0,
            theta_start: 0.0,
            aligned_once: false,
            obs: Observation::zeros(),
            priv_obs: PrivilegedObservation(vec![0.0; self.priv_dim()]),
            rng: rng.clone(),
            done: false,
        })
    }

    /// Let the bottle drop onto the palms and come to rest before control
    /// begins.
    fn settle(&self, state: &mut EnvState) -> SimResult<()> {
        let dt = self.config.dt_substep();
        let n = (self.config.settle_time / dt).round() as usize;
        for _ in 0..n {
            self.substep(state, dt)?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // Stepping
    // -----------------------------------------------------------------

    /// Refresh the per-step random disturbance force: resample with the
    /// configured probability, otherwise decay.
    fn apply_random_force(&self, state: &mut EnvState) {
        let dr = &self.config.domain_randomization;
        if dr.random_force_probability > 0.0
            && state.rng.gen::<f64>() < dr.random_force_probability
        {
            let dir: [f64; 3] = UnitSphere.sample(&mut state.rng);
            state.random_force =
                Vector3::from(dir) * (dr.random_force_scale * state.draw.mass);
        } else {
            state.random_force *= dr.random_force_decay;
        }
    }

    /// One control step. The returned transition carries the post-step
    /// (terminal, when `done`) observation; the caller owns auto-reset.
    pub fn env_step(&self, state: &mut EnvState, action: &[f64; NUM_JOINTS]) -> SimResult<Transition> {
        debug_assert!(!state.done, "stepping a finished episode");
        if action.iter().any(|a| !a.is_finite()) {
            return Err(SimError::NonFinite("action"));
        }
        let dr = &self.config.domain_randomization;

        self.apply_random_force(state);

        // Action lag, then noise, then clipping inside apply_action.
        let mut executed = if dr.action_lag_probability > 0.0
            && state.rng.gen::<f64>() < dr.action_lag_probability
        {
            state.prev_action
        } else {
            *action
        };
        state.prev_action = *action;
        if dr.action_noise > 0.0 {
            let noise = Normal::new(0.0, dr.action_noise).unwrap();
            for a in executed.iter_mut() {
                *a += noise.sample(&mut state.rng);
            }
        }
        for a in executed.iter_mut() {
            *a = a.clamp(-1.0, 1.0);
        }

        let theta_before = state.bottle.lid_angle;
        apply_action(
            &mut state.hand,
            &executed,
            &mut state.ema,
            self.config.action_scale,
            self.config.action_ema,
            &self.lower,
            &self.upper,
        );

        let dt = self.config.dt_substep();
        for _ in 0..self.config.substeps {
            self.substep(state, dt)?;
        }

        // Reward terms.
        let twist = reward_twist(theta_before, state.bottle.lid_angle);
        let kp_base = state.bottle.world_keypoints_base();
        let kp_lid = state.bottle.world_keypoints_lid();
        let contact = reward_contact(
            &kp_base,
            &kp_lid,
            &state.hand.fingertips[0..4],
            &state.hand.fingertips[4..8],
            self.config.contact_sharpness,
        )?;
        let axis = state.bottle.axis_world();
        let angle = alignment_angle(&axis, &self.align_axis)?;
        let pose = -angle;
        let torque_proxy: Vec<f64> = (0..NUM_JOINTS)
            .map(|j| {
                state.pd.kp[j] * (state.hand.targets[j] - state.hand.q[j])
                    - state.pd.kd[j] * state.hand.qd[j]
            })
            .collect();
        let (work, action_sq) = reward_regularizers(&torque_proxy, &state.hand.qd, &executed);
        let terms = RewardTerms {
            twist,
            contact,
            pose,
            work,
            action: action_sq,
        };
        let reward = total_reward(&terms, &self.config.rewards);

        // Termination.
        state.t += 1;
        if angle <= self.config.align_fail_angle {
            state.aligned_once = true;
        }
        let done_reason = if state.bottle.root.position.z < -self.config.low_z_threshold {
            DoneReason::LowZ
        } else if state.t == self.align_deadline() && !state.aligned_once {
            DoneReason::AlignFail
        } else if state.t >= self.config.horizon {
            DoneReason::Timeout
        } else {
            DoneReason::None
        };
        state.done = done_reason != DoneReason::None;

        self.build_observation(state, false);

        Ok(Transition {
            obs: state.obs.clone(),
            priv_obs: state.priv_obs.clone(),
            action: action.to_vec(),
            reward_total: reward,
            reward_terms: terms,
            done: state.done,
            done_reason,
        })
    }

    /// One physics substep: PD joints, fingertip FK, contacts, bottle
    /// integration.
    fn substep(&self, state: &mut EnvState, dt: f64) -> SimResult<()> {
        let prev_tips = state.hand.fingertips;
        state.stepper.step(&mut state.hand, &self.lower, &self.upper);
        state.hand.fingertips = self.model.fingertips(&state.hand.q);

        let mut contacts: SmallVec<[AppliedContact; 24]> = SmallVec::new();
        let friction = 0.5 * (state.draw.object_friction + state.draw.hand_friction);
        let params = self.config.contact.with_friction(friction);

        // Fingertips against both cylinders.
        let rot = state.bottle.root.orientation.to_rotation_matrix();
        let inv_rot = rot.transpose();
        for i in 0..NUM_FINGERS {
            let tip = state.hand.fingertips[i];
            let tip_vel = (tip - prev_tips[i]) / dt;
            let local = inv_rot * (tip - state.bottle.root.position);
            for (cyl, link) in [
                (&state.bottle.base_geom, Link::Base),
                (&state.bottle.lid_geom, Link::Lid),
            ] {
                if let Some(c) =
                    collide_sphere_cylinder(&local, self.model.tip_radius(i), cyl)?
                {
                    let point = state.bottle.root.position + rot * c.position;
                    let normal = rot * c.normal;
                    let rel_vel = tip_vel - state.bottle.point_velocity(&point, link);
                    let force = penalty_force(&normal, c.penetration_depth, &rel_vel, &params);
                    contacts.push(AppliedContact { point, force, link });
                }
            }
        }

        // Palm support: sample the lowest boundary points of the base
        // cylinder and test them against the union of the palm patches. Only
        // the base rests on the palms; the narrower lid hovers clear (its
        // center of mass always sits over the base's support span), which
        // keeps palm friction off the lid joint.
        let axis = state.bottle.axis_world();
        {
            let (cyl, link) = (&state.bottle.base_geom, Link::Base);
            let center = state.bottle.root.position
                + state.bottle.root.orientation * Vector3::new(0.0, 0.0, cyl.center_z);
            let mut down = Vector3::new(0.0, 0.0, -1.0) - axis * (-axis.z);
            let n = down.norm();
            let samples: SmallVec<[Vector3<f64>; 4]> = if n > 1e-6 {
                down /= n;
                let half = axis * (0.5 * cyl.height);
                let radial = down * cyl.radius;
                smallvec::smallvec![center + half + radial, center - half + radial]
            } else {
                // Near-vertical: rest on the lower cap rim.
                let zdir = if axis.z > 0.0 { -1.0 } else { 1.0 };
                let cap = center + axis * (0.5 * cyl.height * zdir);
                smallvec::smallvec![
                    cap + Vector3::new(cyl.radius, 0.0, 0.0),
                    cap + Vector3::new(-cyl.radius, 0.0, 0.0),
                    cap + Vector3::new(0.0, cyl.radius, 0.0),
                    cap + Vector3::new(0.0, -cyl.radius, 0.0)
                ]
            };
            for p in samples {
                let depth = -p.z;
                if depth <= 0.0 {
                    continue;
                }
                if !self.model.palms.iter().any(|patch| patch.contains(p.x, p.y)) {
                    continue;
                }
                // Contact normal runs from the bottle surface toward the
                // palm, i.e. straight down; the resulting force on the
                // bottle points up.
                let normal = Vector3::new(0.0, 0.0, -1.0);
                let rel_vel = -state.bottle.point_velocity(&p, link);
                let force = penalty_force(&normal, depth, &rel_vel, &params);
                contacts.push(AppliedContact {
                    point: p,
                    force,
                    link,
                });
            }
        }

        step_assembly(
            &mut state.bottle,
            &contacts,
            self.config.gravity,
            state.random_force,
            dt,
        )
    }

    // -----------------------------------------------------------------
    // Observations
    // -----------------------------------------------------------------

    /// Build policy and privileged observations for the current state.
    /// Policy noise and frame lag draw from the episode RNG; the privileged
    /// vector is always noise-free and never lagged.
    fn build_observation(&self, state: &mut EnvState, fresh_episode: bool) {
        let dr = &self.config.domain_randomization;
        let base_center = state.bottle.base_center_world();
        let lid_center = state.bottle.lid_center_world();

        // Privileged: noise-free policy prefix plus critic-only fields.
        let mut p = Vec::with_capacity(self.priv_dim());
        p.extend_from_slice(&state.hand.q);
        p.extend_from_slice(base_center.as_slice());
        p.extend_from_slice(lid_center.as_slice());
        p.extend_from_slice(&state.hand.targets);
        p.extend_from_slice(&state.hand.qd);
        for tip in &state.hand.fingertips {
            p.extend_from_slice(tip.as_slice());
        }
        for kp in state.bottle.world_keypoints_base() {
            p.extend_from_slice(kp.as_slice());
        }
        for kp in state.bottle.world_keypoints_lid() {
            p.extend_from_slice(kp.as_slice());
        }
        let q = state.bottle.root.orientation.quaternion();
        p.extend_from_slice(&[q.w, q.i, q.j, q.k]);
        p.extend_from_slice(state.bottle.root.linear_velocity.as_slice());
        p.extend_from_slice(state.bottle.root.angular_velocity.as_slice());
        p.extend_from_slice(state.random_force.as_slice());
        p.push(state.draw.brake_torque);
        p.extend_from_slice(&[
            state.draw.mass,
            state.draw.object_friction,
            state.draw.shape_scale,
        ]);
        debug_assert_eq!(p.len(), self.priv_dim());

        // Policy: noisy, possibly lagged, possibly blind.
        let lagged = !fresh_episode
            && dr.frame_lag_probability > 0.0
            && state.rng.gen::<f64>() < dr.frame_lag_probability;
        if !lagged {
            let mut o = Vec::with_capacity(OBS_DIM);
            o.extend_from_slice(&state.hand.q);
            o.extend_from_slice(base_center.as_slice());
            o.extend_from_slice(lid_center.as_slice());
            o.extend_from_slice(&state.hand.targets);
            if dr.joint_obs_noise > 0.0 {
                let noise = Normal::new(0.0, dr.joint_obs_noise).unwrap();
                for v in o[0..NUM_JOINTS].iter_mut() {
                    *v += noise.sample(&mut state.rng);
                }
            }
            if dr.keypoint_obs_noise > 0.0 {
                let noise = Normal::new(0.0, dr.keypoint_obs_noise).unwrap();
                for v in o[NUM_JOINTS..NUM_JOINTS + 6].iter_mut() {
                    *v += noise.sample(&mut state.rng);
                }
            }
            if !self.config.use_vision {
                for v in o[NUM_JOINTS..NUM_JOINTS + 6].iter_mut() {
                    *v = 0.0;
                }
            }
            state.obs = Observation(o);
        }
        state.priv_obs = PrivilegedObservation(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DomainRandomizationConfig;
    use crate::rng::stream_rng;

    fn quiet_config() -> EnvConfig {
        EnvConfig {
            domain_randomization: DomainRandomizationConfig::deterministic(),
            init_joint_noise: 0.0,
            ..EnvConfig::default()
        }
    }

    #[test]
    fn spawn_settles_bottle_on_palms() {
        let env = TwistEnv::new(quiet_config()).unwrap();
        let state = env.spawn(stream_rng(1, 0)).unwrap();
        let z = state.bottle.root.position.z;
        // Resting near one base radius above the palm plane.
        assert!(z > 0.02 && z < 0.08, "settled z = {z}");
        assert!(state.obs.is_finite());
        assert!(state.priv_obs.is_finite());
    }

    #[test]
    fn zero_action_static_equilibrium() {
        let env = TwistEnv::new(quiet_config()).unwrap();
        let mut state = env.spawn(stream_rng(2, 0)).unwrap();
        let action = [0.0; NUM_JOINTS];
        for _ in 0..10 {
            let tr = env.env_step(&mut state, &action).unwrap();
            assert_eq!(tr.reward_terms.twist, 0.0);
            assert!(!tr.done);
        }
    }

    #[test]
    fn identical_seeds_produce_identical_episodes() {
        let env = TwistEnv::new(quiet_config()).unwrap();
        let mut a = env.spawn(stream_rng(3, 7)).unwrap();
        let mut b = env.spawn(stream_rng(3, 7)).unwrap();
        assert_eq!(a, b);
        let action = [0.1; NUM_JOINTS];
        for _ in 0..20 {
            let ta = env.env_step(&mut a, &action).unwrap();
            let tb = env.env_step(&mut b, &action).unwrap();
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn forced_action_lag_executes_previous_action() {
        let mut cfg = quiet_config();
        cfg.domain_randomization.action_lag_probability = 1.0;
        let env = TwistEnv::new(cfg).unwrap();
        let mut state = env.spawn(stream_rng(4, 0)).unwrap();

        // With lag always on and zero noise, step t executes the action
        // commanded at t-1; the first step executes the zero prev_action,
        // so targets stay put.
        let before = state.hand.targets;
        let a1 = [1.0; NUM_JOINTS];
        env.env_step(&mut state, &a1).unwrap();
        assert_eq!(state.hand.targets, before);
        // Second step executes a1: EMA moves targets by 0.025 on free joints.
        let before2 = state.hand.targets;
        env.env_step(&mut state, &[-1.0; NUM_JOINTS]).unwrap();
        let j = 1;
        approx::assert_relative_eq!(
            state.hand.targets[j] - before2[j],
            0.025,
            epsilon = 1e-12
        );
    }

    #[test]
    fn forced_frame_lag_repeats_observation() {
        let mut cfg = quiet_config();
        cfg.domain_randomization.frame_lag_probability = 1.0;
        let env = TwistEnv::new(cfg).unwrap();
        let mut state = env.spawn(stream_rng(5, 0)).unwrap();
        let first = state.obs.clone();
        for _ in 0..5 {
            let tr = env.env_step(&mut state, &[0.2; NUM_JOINTS]).unwrap();
            // Frame lag repeats the previous observation verbatim forever.
            assert_eq!(tr.obs, first);
            // The privileged observation keeps tracking the true state.
            assert_eq!(tr.priv_obs.policy_prefix()[0..32], state.hand.q);
        }
    }

    #[test]
    fn random_force_decays_when_not_resampled() {
        let mut cfg = quiet_config();
        cfg.domain_randomization.random_force_probability = 0.0;
        let env = TwistEnv::new(cfg).unwrap();
        let mut state = env.spawn(stream_rng(6, 0)).unwrap();
        state.random_force = Vector3::new(0.1, 0.0, 0.0);
        env.apply_random_force(&mut state);
        approx::assert_relative_eq!(state.random_force.x, 0.099, epsilon = 1e-15);

        state.random_force = Vector3::zeros();
        env.apply_random_force(&mut state);
        assert_eq!(state.random_force, Vector3::zeros());
    }

    #[test]
    fn random_force_magnitude_scales_with_mass() {
        let mut cfg = quiet_config();
        cfg.domain_randomization.random_force_probability = 1.0;
        cfg.domain_randomization.random_force_scale = 2.0;
        let env = TwistEnv::new(cfg).unwrap();
        let mut state = env.spawn(stream_rng(7, 0)).unwrap();
        state.draw.mass = 0.05;
        env.apply_random_force(&mut state);
        approx::assert_relative_eq!(state.random_force.norm(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn timeout_terminates_episode() {
        let mut cfg = quiet_config();
        cfg.horizon = 5;
        let env = TwistEnv::new(cfg).unwrap();
        let mut state = env.spawn(stream_rng(8, 0)).unwrap();
        let mut last = None;
        for _ in 0..5 {
            last = Some(env.env_step(&mut state, &[0.0; NUM_JOINTS]).unwrap());
        }
        let tr = last.unwrap();
        assert!(tr.done);
        assert_eq!(tr.done_reason, DoneReason::Timeout);
    }

    #[test]
    fn low_z_terminates_episode() {
        let env = TwistEnv::new(quiet_config()).unwrap();
        let mut state = env.spawn(stream_rng(9, 0)).unwrap();
        // Teleport the bottle below the kill plane.
        state.bottle.root.position.z = -env.config.low_z_threshold - 0.01;
        state.bottle.root.linear_velocity = Vector3::zeros();
        let tr = env.env_step(&mut state, &[0.0; NUM_JOINTS]).unwrap();
        assert_eq!(tr.done_reason, DoneReason::LowZ);
    }

    #[test]
    fn misaligned_bottle_fails_at_deadline() {
        let mut cfg = quiet_config();
        cfg.align_fail_angle = 0.01; // impossible to satisfy
        let env = TwistEnv::new(cfg).unwrap();
        let mut state = env.spawn(stream_rng(10, 0)).unwrap();
        // Give the bottle a yaw well past the tolerance.
        state.bottle.root.orientation =
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.5) * state.bottle.root.orientation;
        let mut reason = DoneReason::None;
        for _ in 0..40 {
            let tr = env.env_step(&mut state, &[0.0; NUM_JOINTS]).unwrap();
            if tr.done {
                reason = tr.done_reason;
                break;
            }
        }
        assert_eq!(reason, DoneReason::AlignFail);
        assert_eq!(state.t, env.align_deadline());
    }

    #[test]
    fn transition_total_matches_weighted_terms() {
        let env = TwistEnv::new(EnvConfig::default()).unwrap();
        let mut state = env.spawn(stream_rng(11, 0)).unwrap();
        for _ in 0..10 {
            let tr = env.env_step(&mut state, &[0.3; NUM_JOINTS]).unwrap();
            let w = &env.config.rewards;
            let expect = total_reward(&tr.reward_terms, w);
            assert!((tr.reward_total - expect).abs() < 1e-9);
            if tr.done {
                env.respawn(&mut state).unwrap();
            }
        }
    }

    #[test]
    fn no_vision_blanks_keypoint_channels() {
        let mut cfg = quiet_config();
        cfg.use_vision = false;
        let env = TwistEnv::new(cfg).unwrap();
        let state = env.spawn(stream_rng(12, 0)).unwrap();
        assert!(state.obs.keypoint_base().iter().all(|v| *v == 0.0));
        assert!(state.obs.keypoint_lid().iter().all(|v| *v == 0.0));
        // Privileged prefix keeps the true keypoints.
        assert!(state.priv_obs.policy_prefix()[32..38]
            .iter()
            .any(|v| *v != 0.0));
    }

    #[test]
    fn priv_obs_is_prefix_aligned_superset() {
        let env = TwistEnv::new(quiet_config()).unwrap();
        let state = env.spawn(stream_rng(13, 0)).unwrap();
        // With noise off, the policy obs equals the privileged prefix.
        assert_eq!(state.obs.0.as_slice(), state.priv_obs.policy_prefix());
        assert_eq!(state.priv_obs.0.len(), env.priv_dim());
    }
}

#[cfg(test)]
mod debug_probe {
    use super::*;
    use crate::config::DomainRandomizationConfig;
    use crate::rng::stream_rng;

    #[test]
    #[ignore]
    fn trace_settle() {
        let cfg = EnvConfig {
            domain_randomization: DomainRandomizationConfig::deterministic(),
            init_joint_noise: 0.0,
            ..EnvConfig::default()
        };
        let env = TwistEnv::new(cfg).unwrap();
        let mut rng = stream_rng(1, 0);
        let mut state = env.sample_episode(&mut rng).unwrap();
        println!("spawn pos {:?}", state.bottle.root.position);
        let dt = env.config.dt_substep();
        for i in 0..60 {
            env.substep(&mut state, dt).unwrap();
            // Report fingertip penetrations.
            let rot = state.bottle.root.orientation.to_rotation_matrix();
            let inv_rot = rot.transpose();
            for ti in 0..NUM_FINGERS {
                let tip = state.hand.fingertips[ti];
                let local = inv_rot * (tip - state.bottle.root.position);
                for (cyl, name) in [(&state.bottle.base_geom, "base"), (&state.bottle.lid_geom, "lid")] {
                    if let Some(c) = crate::shape::collide_sphere_cylinder(&local, env.model.tip_radius(ti), cyl).unwrap() {
                        println!("  substep {i}: tip {ti} vs {name}: depth {:.4}", c.penetration_depth);
                    }
                }
            }
            if i % 5 == 0 {
                println!(
                    "substep {i}: z={:+.4} y={:+.4} x={:+.4} |v|={:.3} |w|={:.3} theta={:+.4}",
                    state.bottle.root.position.z,
                    state.bottle.root.position.y,
                    state.bottle.root.position.x,
                    state.bottle.root.linear_velocity.norm(),
                    state.bottle.root.angular_velocity.norm(),
                    state.bottle.lid_angle
                );
            }
        }
    }
}
