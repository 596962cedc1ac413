//! Free rigid-body state and integration.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{SimError, SimResult};

/// Pose and twist of a free 6-DoF body. Velocities are expressed in the
/// world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl RigidBodyState {
    pub fn at_rest(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.linear_velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
    }
}

/// Mass and principal moments of inertia, diagonal in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassProperties {
    pub mass: f64,
    /// Principal inertia about the body-frame axes, kg·m².
    pub inertia: Vector3<f64>,
}

impl MassProperties {
    /// World-frame inverse inertia tensor for the given orientation.
    pub fn inv_inertia_world(&self, orientation: &UnitQuaternion<f64>) -> Matrix3<f64> {
        let r = orientation.to_rotation_matrix();
        let inv_diag = Matrix3::from_diagonal(&self.inertia.map(|i| 1.0 / i));
        r * inv_diag * r.transpose()
    }
}

/// A force plus torque pair, world frame, acting about the body origin.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn is_finite(&self) -> bool {
        self.force.iter().all(|v| v.is_finite()) && self.torque.iter().all(|v| v.is_finite())
    }

    /// Accumulate a force applied at a world point, taking torque about `origin`.
    pub fn add_force_at(&mut self, force: Vector3<f64>, point: Vector3<f64>, origin: Vector3<f64>) {
        self.force += force;
        self.torque += (point - origin).cross(&force);
    }
}

/// Advance a free body by one substep under the given wrench plus a constant
/// gravitational acceleration.
///
/// Semi-implicit Euler: momentum update first, then position from the
/// updated velocity. The position additionally carries the exact second-order
/// term for the constant gravity part (`- g dt²/2`), so ballistic arcs hold
/// to machine precision at any substep size, while state-dependent forces
/// (contact springs) keep the symplectic one-step map that makes penalty
/// contacts neutrally stable.
pub fn integrate_free_body(
    state: &RigidBodyState,
    wrench: &Wrench,
    gravity_accel: &Vector3<f64>,
    props: &MassProperties,
    dt: f64,
) -> SimResult<RigidBodyState> {
    debug_assert!(dt > 0.0);
    if !wrench.is_finite() {
        return Err(SimError::NonFinite("wrench"));
    }

    let lin_acc = wrench.force / props.mass + gravity_accel;
    let ang_acc = props.inv_inertia_world(&state.orientation) * wrench.torque;

    let linear_velocity = state.linear_velocity + lin_acc * dt;
    let angular_velocity = state.angular_velocity + ang_acc * dt;

    let position =
        state.position + linear_velocity * dt - gravity_accel * (0.5 * dt * dt);
    let orientation = integrate_orientation(&state.orientation, &angular_velocity, dt);

    let next = RigidBodyState {
        position,
        orientation,
        linear_velocity,
        angular_velocity,
    };
    if !next.is_finite() {
        return Err(SimError::NonFinite("integrated state"));
    }
    Ok(next)
}

/// q' = normalize(q + dt/2 * omega ⊗ q), the standard quaternion rate update.
pub fn integrate_orientation(
    orientation: &UnitQuaternion<f64>,
    angular_velocity: &Vector3<f64>,
    dt: f64,
) -> UnitQuaternion<f64> {
    let q = orientation.quaternion();
    let omega = nalgebra::Quaternion::new(
        0.0,
        angular_velocity.x,
        angular_velocity.y,
        angular_velocity.z,
    );
    UnitQuaternion::from_quaternion(q + omega * q * (0.5 * dt))
}
