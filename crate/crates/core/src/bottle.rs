//! The two-link articulated bottle: a base and a lid joined by a continuous
//! revolute joint under brake friction.
//!
//! The root frame sits at the assembly center of mass with the joint axis
//! along local +z. The lid is a one-DoF rotor rigidly carried by the root:
//! external forces on either link move the whole body, while the component
//! of lid-contact torque about the joint axis additionally drives the brake
//! joint.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::body::{integrate_free_body, MassProperties, RigidBodyState, Wrench};
use crate::brake::{step_brake_joint, BrakeModel};
use crate::shape::{Cylinder, Link};
use crate::{SimError, SimResult};

/// Sampled geometry and mass split for one bottle instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub base_radius: f64,
    pub base_height: f64,
    pub lid_radius: f64,
    pub lid_height: f64,
    pub total_mass: f64,
}

impl ObjectSpec {
    /// Scale every linear dimension (the shape randomization multiplier).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base_radius: self.base_radius * s,
            base_height: self.base_height * s,
            lid_radius: self.lid_radius * s,
            lid_height: self.lid_height * s,
            total_mass: self.total_mass,
        }
    }

    /// Mass split proportional to link volume.
    pub fn link_masses(&self) -> (f64, f64) {
        let v_base = self.base_radius * self.base_radius * self.base_height;
        let v_lid = self.lid_radius * self.lid_radius * self.lid_height;
        let base = self.total_mass * v_base / (v_base + v_lid);
        (base, self.total_mass - base)
    }
}

/// A world-frame force applied to one link at a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedContact {
    pub point: Vector3<f64>,
    pub force: Vector3<f64>,
    pub link: Link,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleAssembly {
    /// Root body frame, origin at the assembly center of mass.
    pub root: RigidBodyState,
    /// Lid joint angle, unbounded (the lid twists infinitely).
    pub lid_angle: f64,
    pub lid_angular_velocity: f64,
    /// Joint axis in the root frame (always +z by construction).
    pub joint_axis: Vector3<f64>,
    pub base_geom: Cylinder,
    pub lid_geom: Cylinder,
    pub base_mass: f64,
    pub lid_mass: f64,
    pub brake: BrakeModel,
    /// Reference contact keypoints on the base lateral surface, root frame.
    pub keypoints_base: Vec<Vector3<f64>>,
    /// Reference contact keypoints on the lid lateral surface, lid frame
    /// (rotates with the lid about the joint axis).
    pub keypoints_lid: Vec<Vector3<f64>>,
    pub mass_props: MassProperties,
    /// Lid moment of inertia about the joint axis.
    pub lid_axial_inertia: f64,
}

impl BottleAssembly {
    /// Build an assembly from sampled geometry. Keypoints are evenly spaced
    /// rings at the axial mid-height of each link's lateral surface.
    pub fn new(
        spec: &ObjectSpec,
        brake: BrakeModel,
        keypoints_per_ring: usize,
        root: RigidBodyState,
    ) -> SimResult<Self> {
        if keypoints_per_ring == 0 {
            return Err(SimError::EmptyKeypoints("keypoints_per_ring"));
        }
        let (base_mass, lid_mass) = spec.link_masses();
        let total = spec.total_mass;

        // Axial link centers placing the assembly COM at the origin.
        let gap = 0.5 * (spec.base_height + spec.lid_height);
        let base_center = -lid_mass * gap / total;
        let lid_center = base_center + gap;

        let base_geom = Cylinder {
            radius: spec.base_radius,
            height: spec.base_height,
            center_z: base_center,
        };
        let lid_geom = Cylinder {
            radius: spec.lid_radius,
            height: spec.lid_height,
            center_z: lid_center,
        };
        base_geom.validate()?;
        lid_geom.validate()?;

        // Solid cylinders: axial I = m r²/2, transverse I = m(3r² + h²)/12 + m d².
        let axial = 0.5 * base_mass * spec.base_radius.powi(2)
            + 0.5 * lid_mass * spec.lid_radius.powi(2);
        let trans = |m: f64, r: f64, h: f64, d: f64| m * (3.0 * r * r + h * h) / 12.0 + m * d * d;
        let transverse = trans(base_mass, spec.base_radius, spec.base_height, base_center)
            + trans(lid_mass, spec.lid_radius, spec.lid_height, lid_center);

        let ring = |radius: f64, z: f64| -> Vec<Vector3<f64>> {
            (0..keypoints_per_ring)
                .map(|k| {
                    let phi = std::f64::consts::TAU * k as f64 / keypoints_per_ring as f64;
                    Vector3::new(radius * phi.cos(), radius * phi.sin(), z)
                })
                .collect()
        };

        Ok(Self {
            root,
            lid_angle: 0.0,
            lid_angular_velocity: 0.0,
            joint_axis: Vector3::new(0.0, 0.0, 1.0),
            keypoints_base: ring(spec.base_radius, base_center),
            keypoints_lid: ring(spec.lid_radius, lid_center),
            base_geom,
            lid_geom,
            base_mass,
            lid_mass,
            brake,
            mass_props: MassProperties {
                mass: total,
                inertia: Vector3::new(transverse, transverse, axial),
            },
            lid_axial_inertia: 0.5 * lid_mass * spec.lid_radius.powi(2),
        })
    }

    /// Joint axis in world coordinates.
    pub fn axis_world(&self) -> Vector3<f64> {
        self.root.orientation * self.joint_axis
    }

    /// World position of the base link center.
    pub fn base_center_world(&self) -> Vector3<f64> {
        self.root.position + self.root.orientation * Vector3::new(0.0, 0.0, self.base_geom.center_z)
    }

    /// World position of the lid link center (on the axis, so the lid angle
    /// does not move it).
    pub fn lid_center_world(&self) -> Vector3<f64> {
        self.root.position + self.root.orientation * Vector3::new(0.0, 0.0, self.lid_geom.center_z)
    }

    /// Transform a world point into the root frame.
    pub fn to_root_frame(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.root
            .orientation
            .inverse_transform_vector(&(p_world - self.root.position))
    }

    /// Lift a root-frame point to world coordinates.
    pub fn to_world(&self, p_local: &Vector3<f64>) -> Vector3<f64> {
        self.root.position + self.root.orientation * p_local
    }

    /// Velocity of a surface point on the given link, including lid spin.
    pub fn point_velocity(&self, p_world: &Vector3<f64>, link: Link) -> Vector3<f64> {
        let r = p_world - self.root.position;
        let mut v = self.root.linear_velocity + self.root.angular_velocity.cross(&r);
        if link == Link::Lid {
            let axis = self.axis_world();
            // Spin about the joint axis line through the root origin.
            let radial = r - axis * r.dot(&axis);
            v += (axis * self.lid_angular_velocity).cross(&radial);
        }
        v
    }

    /// World positions of the base keypoints.
    pub fn world_keypoints_base(&self) -> Vec<Vector3<f64>> {
        self.keypoints_base.iter().map(|p| self.to_world(p)).collect()
    }

    /// World positions of the lid keypoints (rotated by the lid angle).
    pub fn world_keypoints_lid(&self) -> Vec<Vector3<f64>> {
        let spin = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.lid_angle);
        self.keypoints_lid
            .iter()
            .map(|p| self.to_world(&(spin * p)))
            .collect()
    }
}

/// Advance the assembly by one physics substep.
///
/// All contact forces act on the 6-DoF root; the axis component of torque
/// from lid contacts additionally drives the brake joint.
pub fn step_assembly(
    bottle: &mut BottleAssembly,
    contacts: &[AppliedContact],
    gravity: f64,
    com_force: Vector3<f64>,
    dt: f64,
) -> SimResult<()> {
    let com = bottle.root.position;
    let axis = bottle.axis_world();

    let mut wrench = Wrench {
        force: com_force,
        torque: Vector3::zeros(),
    };
    let mut lid_torque = 0.0;
    for c in contacts {
        wrench.add_force_at(c.force, c.point, com);
        if c.link == Link::Lid {
            lid_torque += (c.point - com).cross(&c.force).dot(&axis);
        }
    }

    let gravity_accel = Vector3::new(0.0, 0.0, -gravity);
    bottle.root = integrate_free_body(&bottle.root, &wrench, &gravity_accel, &bottle.mass_props, dt)?;
    let (theta, omega) = step_brake_joint(
        bottle.lid_angle,
        bottle.lid_angular_velocity,
        lid_torque,
        &bottle.brake,
        bottle.lid_axial_inertia,
        dt,
    );
    bottle.lid_angle = theta;
    bottle.lid_angular_velocity = omega;
    Ok(())
}
