//! Task reward terms.
//!
//! Five terms, combined by [`total_reward`]: keypoint contact shaping,
//! per-step lid rotation, bottle-axis pose alignment, and work/action
//! penalties.

use nalgebra::Vector3;

use crate::config::RewardWeights;
use crate::{SimError, SimResult};

/// Per-step unweighted reward terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RewardTerms {
    pub twist: f64,
    pub contact: f64,
    pub pose: f64,
    pub work: f64,
    pub action: f64,
}

/// Lid rotation over one control step: θ_{t+1} - θ_t.
#[inline]
pub fn reward_twist(theta_before: f64, theta_after: f64) -> f64 {
    theta_after - theta_before
}

/// Keypoint contact reward:
/// Σ_i [ 1/(1 + α d(X_base, F_left_i)) + 1/(1 + α d(X_lid, F_right_i)) ],
/// where d is the distance to the nearest keypoint. Each of the eight terms
/// peaks at 1 when its fingertip touches a keypoint, so the sum lives in
/// (0, 8].
pub fn reward_contact(
    keypoints_base: &[Vector3<f64>],
    keypoints_lid: &[Vector3<f64>],
    fingertips_left: &[Vector3<f64>],
    fingertips_right: &[Vector3<f64>],
    sharpness: f64,
) -> SimResult<f64> {
    if keypoints_base.is_empty() {
        return Err(SimError::EmptyKeypoints("keypoints_base"));
    }
    if keypoints_lid.is_empty() {
        return Err(SimError::EmptyKeypoints("keypoints_lid"));
    }
    let nearest = |points: &[Vector3<f64>], x: &Vector3<f64>| -> f64 {
        points
            .iter()
            .map(|p| (p - x).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    let mut total = 0.0;
    for tip in fingertips_left {
        total += 1.0 / (1.0 + sharpness * nearest(keypoints_base, tip));
    }
    for tip in fingertips_right {
        total += 1.0 / (1.0 + sharpness * nearest(keypoints_lid, tip));
    }
    Ok(total)
}

/// Pose alignment reward: -arccos⟨x_axis, v⟩, in [-π, 0].
pub fn reward_pose(bottle_axis: &Vector3<f64>, target: &Vector3<f64>) -> SimResult<f64> {
    Ok(-alignment_angle(bottle_axis, target)?)
}

/// Angle between the bottle axis and the target direction, [0, π].
pub fn alignment_angle(bottle_axis: &Vector3<f64>, target: &Vector3<f64>) -> SimResult<f64> {
    let na = bottle_axis.norm();
    let nt = target.norm();
    if na < 1e-12 || nt < 1e-12 {
        return Err(SimError::ZeroLength("pose reward input"));
    }
    let cos = (bottle_axis.dot(target) / (na * nt)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// Work and action regularizers, both returned non-negative; the weights
/// carry the penalty sign.
pub fn reward_regularizers(
    joint_torque_proxy: &[f64],
    joint_velocities: &[f64],
    action: &[f64],
) -> (f64, f64) {
    let work: f64 = joint_torque_proxy
        .iter()
        .zip(joint_velocities)
        .map(|(tau, qd)| (tau * qd).abs())
        .sum();
    let action_sq: f64 = action.iter().map(|a| a * a).sum();
    (work, action_sq)
}

/// Weighted sum of the five terms.
#[inline]
pub fn total_reward(terms: &RewardTerms, w: &RewardWeights) -> f64 {
    w.w_contact * terms.contact
        + w.w_twist * terms.twist
        + w.w_pose * terms.pose
        + w.w_work * terms.work
        + w.w_action * terms.action
}
