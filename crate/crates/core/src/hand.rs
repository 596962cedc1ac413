//! Two kinematic 16-DoF hands.
//!
//! Each finger is a four-joint revolute chain; fingertips are spheres. The
//! hands are kinematic: fingertips push on the bottle through the contact
//! model, but the bottle does not back-drive the joints. Joints track
//! PD-filtered targets with the exact closed-form response of the linear
//! second-order system, so a critically damped joint approaches its target
//! monotonically at any substep size.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::math::sin_cos;
use crate::{SimError, SimResult};

pub const NUM_HANDS: usize = 2;
pub const FINGERS_PER_HAND: usize = 4;
pub const JOINTS_PER_FINGER: usize = 4;
pub const NUM_FINGERS: usize = NUM_HANDS * FINGERS_PER_HAND;
pub const NUM_JOINTS: usize = NUM_HANDS * FINGERS_PER_HAND * JOINTS_PER_FINGER;

/// Joint rotation axis, with canonical axes special-cased: the default hand
/// uses only ±y / ±z, and those rotations mix two frame columns instead of
/// paying for a full 3x3 multiply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    NegX,
    NegY,
    NegZ,
    Other(Vector3<f64>),
}

impl Axis {
    fn from_vector(v: &Vector3<f64>) -> SimResult<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(SimError::ZeroLength("joint axis"));
        }
        let u = v / n;
        let canon = |target: Vector3<f64>| (u - target).norm() < 1e-9;
        Ok(if canon(Vector3::x()) {
            Axis::X
        } else if canon(Vector3::y()) {
            Axis::Y
        } else if canon(Vector3::z()) {
            Axis::Z
        } else if canon(-Vector3::x()) {
            Axis::NegX
        } else if canon(-Vector3::y()) {
            Axis::NegY
        } else if canon(-Vector3::z()) {
            Axis::NegZ
        } else {
            Axis::Other(u)
        })
    }

    fn as_vector(&self) -> Vector3<f64> {
        match self {
            Axis::X => Vector3::x(),
            Axis::Y => Vector3::y(),
            Axis::Z => Vector3::z(),
            Axis::NegX => -Vector3::x(),
            Axis::NegY => -Vector3::y(),
            Axis::NegZ => -Vector3::z(),
            Axis::Other(v) => *v,
        }
    }

    /// Mirror across the x = 0 plane (conjugation by diag(-1,1,1) keeping
    /// joint values unchanged): axis -> -reflect_x(axis).
    fn mirrored(&self) -> Self {
        let v = self.as_vector();
        Axis::from_vector(&Vector3::new(v.x, -v.y, -v.z)).expect("unit axis stays unit")
    }
}

/// Rotation + translation, kept as a plain matrix pair for the FK hot loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub rot: Matrix3<f64>,
    pub pos: Vector3<f64>,
}

impl Frame {
    pub fn identity() -> Self {
        Self {
            rot: Matrix3::identity(),
            pos: Vector3::zeros(),
        }
    }

    #[inline]
    fn rotate_in_place(&mut self, axis: Axis, angle: f64) {
        let (s, c) = sin_cos(angle);
        match axis {
            Axis::Z | Axis::NegZ => {
                let s = if matches!(axis, Axis::NegZ) { -s } else { s };
                let c0 = self.rot.column(0).into_owned();
                let c1 = self.rot.column(1).into_owned();
                self.rot.set_column(0, &(c0 * c + c1 * s));
                self.rot.set_column(1, &(c1 * c - c0 * s));
            }
            Axis::Y | Axis::NegY => {
                let s = if matches!(axis, Axis::NegY) { -s } else { s };
                let c0 = self.rot.column(0).into_owned();
                let c2 = self.rot.column(2).into_owned();
                self.rot.set_column(0, &(c0 * c - c2 * s));
                self.rot.set_column(2, &(c2 * c + c0 * s));
            }
            Axis::X | Axis::NegX => {
                let s = if matches!(axis, Axis::NegX) { -s } else { s };
                let c1 = self.rot.column(1).into_owned();
                let c2 = self.rot.column(2).into_owned();
                self.rot.set_column(1, &(c1 * c + c2 * s));
                self.rot.set_column(2, &(c2 * c - c1 * s));
            }
            Axis::Other(u) => {
                // Rodrigues, for non-canonical axes out of the fast path.
                let k = u;
                let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
                let r = Matrix3::identity() + kx * s + kx * kx * (1.0 - c);
                self.rot *= r;
            }
        }
    }

    #[inline]
    fn translate_local(&mut self, t: &Vector3<f64>) {
        self.pos += self.rot * t;
    }
}

/// One four-joint finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerChain {
    /// Knuckle frame relative to the world (hand base already folded in).
    pub base: Frame,
    pub axes: [Axis; JOINTS_PER_FINGER],
    /// Translation after each joint, chain-local.
    pub links: [Vector3<f64>; JOINTS_PER_FINGER],
    pub lower: [f64; JOINTS_PER_FINGER],
    pub upper: [f64; JOINTS_PER_FINGER],
    pub initial_positions: [f64; JOINTS_PER_FINGER],
    pub tip_radius: f64,
}

/// Fingertip position for one chain: rotate about each joint axis, then
/// translate along the following link.
pub fn forward_kinematics(chain: &FingerChain, joint_angles: &[f64; 4]) -> Vector3<f64> {
    let mut frame = chain.base;
    for j in 0..JOINTS_PER_FINGER {
        frame.rotate_in_place(chain.axes[j], joint_angles[j]);
        frame.translate_local(&chain.links[j]);
    }
    frame.pos
}

/// Upward-facing support rectangle at palm height (top surface z = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalmPatch {
    pub center: Vector2<f64>,
    pub half_extents: Vector2<f64>,
    pub surface_z: f64,
}

impl PalmPatch {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center.x).abs() <= self.half_extents.x
            && (y - self.center.y).abs() <= self.half_extents.y
    }
}

/// The full bimanual kinematic description, flattened for stepping:
/// fingers 0..4 left hand, 4..8 right hand; joints in finger-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub fingers: Vec<FingerChain>,
    pub palms: [PalmPatch; NUM_HANDS],
}

impl HandModel {
    pub fn from_config(cfg: &HandConfig) -> SimResult<Self> {
        cfg.build()
    }

    pub fn joint_lower(&self) -> Vec<f64> {
        self.fingers.iter().flat_map(|f| f.lower).collect()
    }

    pub fn joint_upper(&self) -> Vec<f64> {
        self.fingers.iter().flat_map(|f| f.upper).collect()
    }

    /// Canonical joint pose, both hands.
    pub fn initial_positions(&self) -> Vec<f64> {
        self.fingers.iter().flat_map(|f| f.initial_positions).collect()
    }

    pub fn tip_radius(&self, finger: usize) -> f64 {
        self.fingers[finger].tip_radius
    }

    pub fn fingertips(&self, q: &[f64; NUM_JOINTS]) -> [Vector3<f64>; NUM_FINGERS] {
        let mut tips = [Vector3::zeros(); NUM_FINGERS];
        for (i, chain) in self.fingers.iter().enumerate() {
            let angles: [f64; 4] = q[i * 4..i * 4 + 4].try_into().unwrap();
            tips[i] = forward_kinematics(chain, &angles);
        }
        tips
    }
}

/// Joint-space state of both hands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub q: [f64; NUM_JOINTS],
    pub qd: [f64; NUM_JOINTS],
    pub targets: [f64; NUM_JOINTS],
    #[serde(with = "serde_arrays_v3")]
    pub fingertips: [Vector3<f64>; NUM_FINGERS],
}

mod serde_arrays_v3 {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[Vector3<f64>; super::NUM_FINGERS],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<[Vector3<f64>; super::NUM_FINGERS], D::Error> {
        let v: Vec<Vector3<f64>> = Vec::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("expected 8 fingertips"))
    }
}

impl HandState {
    pub fn at_pose(model: &HandModel, q: &[f64; NUM_JOINTS]) -> Self {
        Self {
            q: *q,
            qd: [0.0; NUM_JOINTS],
            targets: *q,
            fingertips: model.fingertips(q),
        }
    }
}

/// Per-joint PD gains (after any episode randomization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdParams {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
}

impl PdParams {
    pub fn uniform(kp: f64, kd: f64) -> Self {
        Self {
            kp: vec![kp; NUM_JOINTS],
            kd: vec![kd; NUM_JOINTS],
        }
    }
}

/// Precomputed per-joint propagation of (q - target, qdot) over one substep:
/// the exact solution of q̈ = kp (target - q) - kd q̇ with unit joint inertia.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdStepper {
    a11: Vec<f64>,
    a12: Vec<f64>,
    a21: Vec<f64>,
    a22: Vec<f64>,
}

impl PdStepper {
    pub fn new(pd: &PdParams, dt: f64) -> Self {
        let n = pd.kp.len();
        let mut s = Self {
            a11: vec![0.0; n],
            a12: vec![0.0; n],
            a21: vec![0.0; n],
            a22: vec![0.0; n],
        };
        for j in 0..n {
            let kp = pd.kp[j];
            let kd = pd.kd[j];
            debug_assert!(kp > 0.0 && kd >= 0.0);
            let sigma = 0.5 * kd;
            let disc = kd * kd - 4.0 * kp;
            let decay = (-sigma * dt).exp();
            let (m11, m12, m21, m22) = if disc.abs() < 1e-9 * (4.0 * kp).max(1.0) {
                // Critically damped.
                (
                    1.0 + sigma * dt,
                    dt,
                    -sigma * sigma * dt,
                    1.0 - sigma * dt,
                )
            } else if disc < 0.0 {
                let wd = 0.5 * (-disc).sqrt();
                let (sn, cs) = (wd * dt).sin_cos();
                (
                    cs + sigma * sn / wd,
                    sn / wd,
                    -kp * sn / wd,
                    cs - sigma * sn / wd,
                )
            } else {
                let we = 0.5 * disc.sqrt();
                let sh = (we * dt).sinh();
                let ch = (we * dt).cosh();
                (
                    ch + sigma * sh / we,
                    sh / we,
                    -kp * sh / we,
                    ch - sigma * sh / we,
                )
            };
            s.a11[j] = decay * m11;
            s.a12[j] = decay * m12;
            s.a21[j] = decay * m21;
            s.a22[j] = decay * m22;
        }
        s
    }

    /// Advance joints one substep toward their targets and clamp to limits.
    pub fn step(&self, state: &mut HandState, lower: &[f64], upper: &[f64]) {
        for j in 0..NUM_JOINTS {
            let e = state.q[j] - state.targets[j];
            let v = state.qd[j];
            let e_next = self.a11[j] * e + self.a12[j] * v;
            let v_next = self.a21[j] * e + self.a22[j] * v;
            let mut q = state.targets[j] + e_next;
            let mut qd = v_next;
            if q < lower[j] {
                q = lower[j];
                qd = qd.max(0.0);
            } else if q > upper[j] {
                q = upper[j];
                qd = qd.min(0.0);
            }
            state.q[j] = q;
            state.qd[j] = qd;
        }
    }
}

/// One-shot PD step used by tests; the environment uses a cached [`PdStepper`].
pub fn step_pd_targets(state: &mut HandState, pd: &PdParams, dt: f64, model: &HandModel) {
    let stepper = PdStepper::new(pd, dt);
    stepper.step(state, &model.joint_lower(), &model.joint_upper());
    state.fingertips = model.fingertips(&state.q);
}

/// Smooth the clipped action with its exponential moving average and move
/// the PD targets: ema' = beta * ema + (1 - beta) * clip(a); target += eta * ema'.
pub fn apply_action(
    state: &mut HandState,
    action: &[f64; NUM_JOINTS],
    ema: &mut [f64; NUM_JOINTS],
    eta: f64,
    beta: f64,
    lower: &[f64],
    upper: &[f64],
) {
    for j in 0..NUM_JOINTS {
        let a = action[j].clamp(-1.0, 1.0);
        ema[j] = beta * ema[j] + (1.0 - beta) * a;
        state.targets[j] = (state.targets[j] + eta * ema[j]).clamp(lower[j], upper[j]);
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Per-finger kinematic description as it appears in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerConfig {
    pub name: String,
    /// Knuckle position in the palm frame, meters.
    pub base_offset: [f64; 3],
    /// Knuckle orientation as XYZ Euler angles in the palm frame.
    pub base_rpy: [f64; 3],
    pub joint_axes: [[f64; 3]; JOINTS_PER_FINGER],
    pub link_lengths: [f64; JOINTS_PER_FINGER],
    pub lower_limits: [f64; JOINTS_PER_FINGER],
    pub upper_limits: [f64; JOINTS_PER_FINGER],
    /// Canonical start pose for this finger (applied to both hands).
    pub initial_positions: [f64; JOINTS_PER_FINGER],
    pub tip_radius: f64,
}

/// Kinematic description of the bimanual rig. The right hand is given
/// explicitly; the left hand is its mirror image across the x = 0 plane
/// (`mirror_left`), or a plain translated copy when mirroring is off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandConfig {
    pub mirror_left: bool,
    /// Right palm center in world coordinates; the palm support surface is
    /// the z = 0 plane.
    pub right_palm_center: [f64; 3],
    pub palm_half_extents: [f64; 2],
    pub fingers: Vec<FingerConfig>,
}

impl HandConfig {
    pub fn from_toml_str(s: &str) -> SimResult<Self> {
        toml::from_str(s).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn build(&self) -> SimResult<HandModel> {
        if self.fingers.len() != FINGERS_PER_HAND {
            return Err(SimError::Config(format!(
                "expected {} fingers, got {}",
                FINGERS_PER_HAND,
                self.fingers.len()
            )));
        }
        for f in &self.fingers {
            for j in 0..JOINTS_PER_FINGER {
                if f.lower_limits[j] >= f.upper_limits[j] {
                    return Err(SimError::Config(format!(
                        "finger {}: joint {} limits inverted",
                        f.name, j
                    )));
                }
                if f.link_lengths[j] < 0.0 {
                    return Err(SimError::Config(format!(
                        "finger {}: negative link length",
                        f.name
                    )));
                }
                if f.initial_positions[j] < f.lower_limits[j]
                    || f.initial_positions[j] > f.upper_limits[j]
                {
                    return Err(SimError::Config(format!(
                        "finger {}: initial position outside limits",
                        f.name
                    )));
                }
            }
            if f.tip_radius <= 0.0 {
                return Err(SimError::Config(format!(
                    "finger {}: tip radius must be positive",
                    f.name
                )));
            }
        }

        let palm_r = Vector3::from(self.right_palm_center);
        let right = self
            .fingers
            .iter()
            .map(|f| self.build_chain(f, &palm_r))
            .collect::<SimResult<Vec<_>>>()?;

        let left: Vec<FingerChain> = if self.mirror_left {
            right.iter().map(mirror_chain).collect()
        } else {
            right
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.base.pos.x -= 2.0 * palm_r.x;
                    c
                })
                .collect()
        };

        let half = Vector2::from(self.palm_half_extents);
        let right_patch = PalmPatch {
            center: Vector2::new(palm_r.x, palm_r.y),
            half_extents: half,
            surface_z: 0.0,
        };
        let left_patch = PalmPatch {
            center: Vector2::new(
                if self.mirror_left { -palm_r.x } else { -palm_r.x },
                palm_r.y,
            ),
            half_extents: half,
            surface_z: 0.0,
        };

        let mut fingers = left;
        fingers.extend(right);
        Ok(HandModel {
            fingers,
            palms: [left_patch, right_patch],
        })
    }

    fn build_chain(&self, f: &FingerConfig, palm: &Vector3<f64>) -> SimResult<FingerChain> {
        let (roll, pitch, yaw) = (f.base_rpy[0], f.base_rpy[1], f.base_rpy[2]);
        let rot = nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw);
        let mut axes = [Axis::Z; JOINTS_PER_FINGER];
        let mut links = [Vector3::zeros(); JOINTS_PER_FINGER];
        for j in 0..JOINTS_PER_FINGER {
            axes[j] = Axis::from_vector(&Vector3::from(f.joint_axes[j]))?;
            links[j] = Vector3::new(f.link_lengths[j], 0.0, 0.0);
        }
        Ok(FingerChain {
            base: Frame {
                rot: rot.into_inner(),
                pos: palm + Vector3::from(f.base_offset),
            },
            axes,
            links,
            lower: f.lower_limits,
            upper: f.upper_limits,
            initial_positions: f.initial_positions,
            tip_radius: f.tip_radius,
        })
    }
}

/// Conjugate a chain by the x = 0 reflection so that identical joint values
/// produce mirror-image fingertip motion.
fn mirror_chain(c: &FingerChain) -> FingerChain {
    let m = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
    FingerChain {
        base: Frame {
            rot: m * c.base.rot * m,
            pos: Vector3::new(-c.base.pos.x, c.base.pos.y, c.base.pos.z),
        },
        axes: [
            c.axes[0].mirrored(),
            c.axes[1].mirrored(),
            c.axes[2].mirrored(),
            c.axes[3].mirrored(),
        ],
        links: [
            m * c.links[0],
            m * c.links[1],
            m * c.links[2],
            m * c.links[3],
        ],
        lower: c.lower,
        upper: c.upper,
        initial_positions: c.initial_positions,
        tip_radius: c.tip_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn straight_chain() -> FingerChain {
        FingerChain {
            base: Frame::identity(),
            axes: [Axis::Z, Axis::NegY, Axis::NegY, Axis::NegY],
            links: [Vector3::new(1.0, 0.0, 0.0); 4],
            lower: [-3.0; 4],
            upper: [3.0; 4],
            initial_positions: [0.0; 4],
            tip_radius: 0.01,
        }
    }

    #[test]
    fn zero_angles_straight_line() {
        let tip = forward_kinematics(&straight_chain(), &[0.0; 4]);
        assert_relative_eq!(tip, Vector3::new(4.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn first_joint_rotates_whole_chain() {
        let tip = forward_kinematics(&straight_chain(), &[std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0]);
        assert_relative_eq!(tip, Vector3::new(0.0, 4.0, 0.0), epsilon = 1e-12);
    }

    /// Independent oracle: compose per-joint homogeneous transforms with
    /// nalgebra's general axis-angle rotations.
    #[test]
    fn fk_matches_matrix_product_oracle() {
        use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let chain = straight_chain();
        for _ in 0..200 {
            let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let tip = forward_kinematics(&chain, &q);

            let mut iso = Isometry3::identity();
            for j in 0..4 {
                let axis = Unit::new_normalize(chain.axes[j].as_vector());
                iso *= Isometry3::from_parts(
                    Translation3::identity(),
                    UnitQuaternion::from_axis_angle(&axis, q[j]),
                );
                iso *= Isometry3::from_parts(Translation3::from(chain.links[j]), UnitQuaternion::identity());
            }
            let oracle = iso.transform_point(&nalgebra::Point3::origin()).coords;
            assert!((tip - oracle).norm() < 1e-9, "tip {tip:?} oracle {oracle:?}");
        }
    }

    /// Perturbing one joint by eps moves the tip by at most the total distal
    /// length times eps.
    #[test]
    fn fk_is_lipschitz() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let chain = straight_chain();
        for _ in 0..100 {
            let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let j = rng.gen_range(0..4);
            let eps = 1e-4;
            let mut q2 = q;
            q2[j] += eps;
            let d = (forward_kinematics(&chain, &q2) - forward_kinematics(&chain, &q)).norm();
            let distal = (4 - j) as f64; // unit links
            assert!(d <= distal * eps * (1.0 + 1e-6));
        }
    }

    fn model() -> HandModel {
        crate::config::default_hand_config().build().unwrap()
    }

    #[test]
    fn mirrored_tips_are_symmetric() {
        let m = model();
        let q0 = m.initial_positions();
        let q: [f64; NUM_JOINTS] = q0.try_into().unwrap();
        let tips = m.fingertips(&q);
        for f in 0..FINGERS_PER_HAND {
            let l = tips[f];
            let r = tips[f + FINGERS_PER_HAND];
            assert_relative_eq!(l.x, -r.x, epsilon = 1e-12);
            assert_relative_eq!(l.y, r.y, epsilon = 1e-12);
            assert_relative_eq!(l.z, r.z, epsilon = 1e-12);
        }
    }

    #[test]
    fn pd_at_setpoint_is_identity() {
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let before = s.clone();
        step_pd_targets(&mut s, &PdParams::uniform(20.0, 2.0 * 20.0f64.sqrt()), 0.005, &m);
        assert_eq!(s.q, before.q);
        assert_eq!(s.qd, before.qd);
    }

    #[test]
    fn critically_damped_step_has_no_overshoot() {
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let kp = 20.0;
        let pd = PdParams::uniform(kp, 2.0 * kp.sqrt());
        let delta = 0.2;
        let j = 5;
        s.targets[j] = s.q[j] + delta;
        let target = s.targets[j];
        let mut prev_err = (s.q[j] - target).abs();
        for _ in 0..4000 {
            step_pd_targets(&mut s, &pd, 0.005, &m);
            let err = s.q[j] - target;
            // Approaches from below: never crosses the target.
            assert!(err <= 1e-6, "overshoot {err}");
            assert!(err.abs() <= prev_err + 1e-12);
            prev_err = err.abs();
        }
        assert!(prev_err < 1e-6);
    }

    /// Closed-form oracle for the critically damped step response:
    /// e(t) = Δ (1 + ω t) exp(-ω t).
    #[test]
    fn pd_matches_closed_form_response() {
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let kp: f64 = 20.0;
        let w = kp.sqrt();
        let pd = PdParams::uniform(kp, 2.0 * w);
        let delta = 0.1;
        let j = 20;
        s.targets[j] = s.q[j] + delta;
        let q0 = s.q[j];
        let dt = 0.005;
        for step in 1..=400 {
            step_pd_targets(&mut s, &pd, dt, &m);
            let t = dt * step as f64;
            let expected = s.targets[j] - delta * (1.0 + w * t) * (-w * t).exp();
            assert_relative_eq!(s.q[j], expected, epsilon = 1e-9);
        }
        assert!(s.q[j] > q0);
    }

    #[test]
    fn targets_beyond_limits_saturate() {
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let pd = PdParams::uniform(20.0, 2.0 * 20.0f64.sqrt());
        let upper = m.joint_upper();
        let mut ema = [0.0; NUM_JOINTS];
        // Push targets far past the limit; they clamp at the limit, and the
        // joint settles there.
        for _ in 0..500 {
            apply_action(&mut s, &[1.0; NUM_JOINTS], &mut ema, 0.5, 0.0, &m.joint_lower(), &upper);
            step_pd_targets(&mut s, &pd, 0.01, &m);
        }
        for j in 0..NUM_JOINTS {
            assert!(s.targets[j] <= upper[j]);
            assert!(s.q[j] <= upper[j] + 1e-12);
        }
    }

    #[test]
    fn zero_action_zero_ema_is_identity() {
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let before = s.targets;
        let mut ema = [0.0; NUM_JOINTS];
        apply_action(&mut s, &[0.0; NUM_JOINTS], &mut ema, 0.1, 0.75, &m.joint_lower(), &m.joint_upper());
        assert_eq!(s.targets, before);
        assert_eq!(ema, [0.0; NUM_JOINTS]);
    }

    #[test]
    fn ema_step_increment_matches_arithmetic() {
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let before = s.targets;
        let mut ema = [0.0; NUM_JOINTS];
        apply_action(&mut s, &[1.0; NUM_JOINTS], &mut ema, 0.1, 0.75, &m.joint_lower(), &m.joint_upper());
        // (1 - 0.75) * 1.0 * 0.1 = 0.025 per joint (away from limits).
        let j = 1; // index finger flexion, far from its limit
        assert_relative_eq!(s.targets[j] - before[j], 0.025, epsilon = 1e-12);
    }

    /// Geometric series: holding a = 1 pushes the per-step increment toward
    /// eta as the EMA approaches 1.
    #[test]
    fn ema_saturates_to_action_scale() {
        let mut ema = [0.0; NUM_JOINTS];
        let beta: f64 = 0.75;
        let mut expected = 0.0;
        for k in 0..60 {
            expected = beta * expected + (1.0 - beta) * 1.0;
            // reference: 1 - beta^(k+1)
            let closed = 1.0 - beta.powi(k + 1);
            assert_relative_eq!(expected, closed, epsilon = 1e-12);
        }
        // Run through apply_action on a wide-limit synthetic state.
        let m = model();
        let q: [f64; NUM_JOINTS] = m.initial_positions().try_into().unwrap();
        let mut s = HandState::at_pose(&m, &q);
        let lower = vec![-1e6; NUM_JOINTS];
        let upper = vec![1e6; NUM_JOINTS];
        let mut prev = s.targets[0];
        let mut increment = 0.0;
        for _ in 0..100 {
            apply_action(&mut s, &[1.0; NUM_JOINTS], &mut ema, 0.1, beta, &lower, &upper);
            increment = s.targets[0] - prev;
            prev = s.targets[0];
        }
        assert_relative_eq!(increment, 0.1, epsilon = 1e-6);
    }

    /// EMA output stays within the min/max envelope of its inputs.
    #[test]
    fn ema_is_convex_combination() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut ema = 0.3f64;
        for _ in 0..1000 {
            let a = rng.gen_range(-1.0..1.0);
            let next = 0.75 * ema + 0.25 * a;
            assert!(next >= ema.min(a) - 1e-15 && next <= ema.max(a) + 1e-15);
            ema = next;
        }
    }
}
