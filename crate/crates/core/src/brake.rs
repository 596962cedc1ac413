//! Brake-joint stiction for the lid's continuous revolute joint.
//!
//! A real threaded lid resists twisting until the applied torque exceeds a
//! breakaway threshold, then slides against kinetic friction. The joint-space
//! form used here keeps the stiction branch *exact*: while the joint is at
//! rest and the applied torque stays at or below breakaway, the angle does
//! not move by even one ulp.

use serde::{Deserialize, Serialize};

/// Dry + viscous friction parameters for the lid joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakeModel {
    /// Minimum torque magnitude that starts relative rotation from rest, N·m.
    pub breakaway_torque: f64,
    /// Friction torque opposing motion while slipping, N·m (<= breakaway).
    pub kinetic_torque: f64,
    /// Viscous drag coefficient, N·m·s/rad.
    pub viscous_coeff: f64,
}

impl BrakeModel {
    /// Zero breakaway (a free-spinning lid) is allowed; kinetic friction can
    /// never exceed breakaway.
    pub fn validate(&self) -> bool {
        self.breakaway_torque >= 0.0
            && self.kinetic_torque >= 0.0
            && self.kinetic_torque <= self.breakaway_torque
            && self.viscous_coeff >= 0.0
    }

    /// A brake that never holds; handy for tests that need a free-spinning lid.
    pub fn frictionless() -> Self {
        Self {
            breakaway_torque: 0.0,
            kinetic_torque: 0.0,
            viscous_coeff: 0.0,
        }
    }
}

/// Advance the lid joint by one substep.
///
/// Rest branch: with `omega == 0` and `|torque| <= breakaway`, the state is
/// returned untouched. Slipping branch: semi-implicit update with kinetic and
/// viscous friction, clamped at zero so friction never carries the velocity
/// through a sign change inside one substep (a joint that is driven through
/// zero by a large applied torque re-breaks away on the next substep).
pub fn step_brake_joint(
    theta: f64,
    omega: f64,
    applied_torque: f64,
    brake: &BrakeModel,
    lid_inertia: f64,
    dt: f64,
) -> (f64, f64) {
    debug_assert!(lid_inertia > 0.0 && dt > 0.0);

    if omega == 0.0 {
        if applied_torque.abs() <= brake.breakaway_torque {
            return (theta, 0.0);
        }
        // Breakaway: kinetic friction opposes the incipient motion.
        let sign = applied_torque.signum();
        let omega_next =
            (applied_torque - sign * brake.kinetic_torque) / lid_inertia * dt;
        return (theta + omega_next * dt, omega_next);
    }

    let sign = omega.signum();
    let net = applied_torque - sign * brake.kinetic_torque - brake.viscous_coeff * omega;
    let omega_next = omega + net / lid_inertia * dt;
    if omega_next * omega < 0.0 {
        // Crossed zero within the substep: stop there.
        return (theta, 0.0);
    }
    (theta + omega_next * dt, omega_next)
}
