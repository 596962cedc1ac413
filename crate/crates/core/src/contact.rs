//! Penalty contact force: spring-damper normal force plus regularized
//! Coulomb friction.
//!
//! The tangential force saturates at mu times the normal force through a
//! tanh profile over a millimetre-per-second slip scale, which keeps the
//! model smooth near sticking without an LCP solve. Bottle-lid stiction
//! does not rely on this regularization; that is handled exactly by the
//! brake joint.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::math::sat_tanh;
use crate::shape::ContactPoint;

/// Penalty model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal spring stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping, N·s/m.
    pub damping: f64,
    /// Coulomb friction coefficient.
    pub friction_coeff: f64,
    /// Slip speed over which friction saturates, m/s.
    pub slip_scale: f64,
    /// Normal force ceiling, N. Keeps deep overlaps (a randomized spawn can
    /// intersect a fingertip) from launching a 100 g object.
    pub max_force: f64,
}

impl ContactParams {
    pub fn with_friction(self, mu: f64) -> Self {
        Self {
            friction_coeff: mu,
            ..self
        }
    }
}

/// Force exerted on the bottle by one contact.
///
/// `relative_velocity` is the toucher's velocity minus the bottle surface
/// velocity at the contact point. The normal force pushes the bottle away
/// from the toucher (along `-normal`); friction drags the bottle along with
/// the toucher's slip direction, capped at mu times the normal force.
pub fn contact_force(
    cp: &ContactPoint,
    relative_velocity: &Vector3<f64>,
    params: &ContactParams,
) -> Vector3<f64> {
    penalty_force(
        &cp.normal,
        cp.penetration_depth,
        relative_velocity,
        params,
    )
}

/// The model itself, usable for contacts that are not fingertip contacts
/// (palm support patches).
pub fn penalty_force(
    normal: &Vector3<f64>,
    penetration_depth: f64,
    relative_velocity: &Vector3<f64>,
    params: &ContactParams,
) -> Vector3<f64> {
    debug_assert!(penetration_depth >= 0.0);
    if penetration_depth == 0.0 {
        return Vector3::zeros();
    }

    let v_n = relative_velocity.dot(normal);
    let normal_mag = (params.stiffness * penetration_depth - params.damping * v_n)
        .clamp(0.0, params.max_force);
    if normal_mag == 0.0 {
        return Vector3::zeros();
    }

    let slip = relative_velocity - normal * v_n;
    let slip_speed = slip.norm();
    let mut force = normal * (-normal_mag);
    if slip_speed > 1e-12 {
        let tangential_mag =
            params.friction_coeff * normal_mag * sat_tanh(slip_speed / params.slip_scale);
        force += slip * (tangential_mag / slip_speed);
    }
    force
}
