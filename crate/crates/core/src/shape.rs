//! Sphere-versus-cylinder collision with nearest-feature normals.
//!
//! Cylinders live in the bottle root frame with their symmetry axis along
//! local +z, so the narrow phase runs on axial/radial coordinates after a
//! single point transform.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{SimError, SimResult};

/// Which bottle link a contact belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    Base,
    Lid,
}

/// A finite closed cylinder, axis along local +z, centered on `center_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub radius: f64,
    pub height: f64,
    /// Axial position of the cylinder center in the bottle root frame.
    pub center_z: f64,
}

impl Cylinder {
    pub fn validate(&self) -> SimResult<()> {
        if self.radius <= 0.0 || self.height <= 0.0 {
            return Err(SimError::DegenerateCylinder {
                radius: self.radius,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// One fingertip-bottle contact, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    /// Nearest point on the cylinder surface.
    pub position: Vector3<f64>,
    /// Unit normal from the bottle surface toward the fingertip center.
    pub normal: Vector3<f64>,
    /// How far the fingertip sphere overlaps the cylinder, >= 0.
    pub penetration_depth: f64,
    pub link: Link,
    /// 0..3 left hand, 4..7 right hand.
    pub fingertip_id: u8,
}

/// Contact data in the bottle root frame, before being lifted to world space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalContact {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub penetration_depth: f64,
}

/// Sphere-cylinder narrow phase in the cylinder's own frame.
///
/// `center` is the sphere center expressed in the bottle root frame. Returns
/// the nearest surface point, the outward surface normal at it, and the
/// penetration depth `radius - signed_distance(center)`; `None` when
/// separated. Centers inside the solid resolve against the nearest feature
/// (lateral wall or cap).
pub fn collide_sphere_cylinder(
    center: &Vector3<f64>,
    sphere_radius: f64,
    cyl: &Cylinder,
) -> SimResult<Option<LocalContact>> {
    cyl.validate()?;
    debug_assert!(sphere_radius > 0.0);

    let half_h = 0.5 * cyl.height;
    let axial = center.z - cyl.center_z;
    let radial_sq = center.x * center.x + center.y * center.y;
    let radial = radial_sq.sqrt();

    // Cheap reject: outside the bounding cylinder grown by the sphere radius.
    if axial.abs() >= half_h + sphere_radius
        || radial >= cyl.radius + sphere_radius
    {
        return Ok(None);
    }

    let radial_dir = if radial > 1e-12 {
        Vector3::new(center.x / radial, center.y / radial, 0.0)
    } else {
        // On the axis; any radial direction works, pick +x deterministically.
        Vector3::new(1.0, 0.0, 0.0)
    };

    let inside_band = axial.abs() <= half_h;
    let inside_wall = radial <= cyl.radius;

    let (surface_local, normal, dist) = if inside_band && inside_wall {
        // Center inside the solid: nearest feature wins.
        let to_wall = cyl.radius - radial;
        let to_cap = half_h - axial.abs();
        if to_wall <= to_cap {
            let p = radial_dir * cyl.radius + Vector3::new(0.0, 0.0, center.z);
            (p, radial_dir, -to_wall)
        } else {
            let zcap = cyl.center_z + half_h.copysign(axial);
            let n = Vector3::new(0.0, 0.0, 1.0_f64.copysign(axial));
            (Vector3::new(center.x, center.y, zcap), n, -to_cap)
        }
    } else if inside_band {
        // Lateral region.
        let p = radial_dir * cyl.radius + Vector3::new(0.0, 0.0, center.z);
        (p, radial_dir, radial - cyl.radius)
    } else if inside_wall {
        // Cap face region.
        let zcap = cyl.center_z + half_h.copysign(axial);
        let n = Vector3::new(0.0, 0.0, 1.0_f64.copysign(axial));
        (
            Vector3::new(center.x, center.y, zcap),
            n,
            axial.abs() - half_h,
        )
    } else {
        // Rim region: nearest point is on the cap edge circle.
        let zcap = cyl.center_z + half_h.copysign(axial);
        let rim = radial_dir * cyl.radius + Vector3::new(0.0, 0.0, zcap);
        let delta = center - rim;
        let dist = delta.norm();
        let n = if dist > 1e-12 {
            delta / dist
        } else {
            radial_dir
        };
        (rim, n, dist)
    };

    let penetration = sphere_radius - dist;
    if penetration <= 0.0 {
        return Ok(None);
    }
    Ok(Some(LocalContact {
        position: surface_local,
        normal,
        penetration_depth: penetration,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cyl() -> Cylinder {
        Cylinder {
            radius: 0.042,
            height: 0.06,
            center_z: 0.0,
        }
    }

    #[test]
    fn separated_sphere_no_contact() {
        let c = cyl();
        let tip_r = 0.01;
        let center = Vector3::new(c.radius + tip_r + 0.01, 0.0, 0.0);
        assert!(collide_sphere_cylinder(&center, tip_r, &c)
            .unwrap()
            .is_none());
    }

    #[test]
    fn center_on_lateral_surface() {
        let c = cyl();
        let tip_r = 0.008;
        let center = Vector3::new(0.0, c.radius, 0.01);
        let cp = collide_sphere_cylinder(&center, tip_r, &c).unwrap().unwrap();
        assert_relative_eq!(cp.penetration_depth, tip_r, epsilon = 1e-12);
        assert_relative_eq!(cp.normal.dot(&Vector3::new(0.0, 1.0, 0.0)), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cp.position.y, c.radius, epsilon = 1e-12);
    }

    #[test]
    fn cap_contact_on_axis() {
        // Sphere center on the axis, half a tip radius above the top cap.
        let c = cyl();
        let tip_r = 0.008;
        let center = Vector3::new(0.0, 0.0, 0.03 + tip_r / 2.0);
        let cp = collide_sphere_cylinder(&center, tip_r, &c).unwrap().unwrap();
        assert_relative_eq!(cp.penetration_depth, tip_r / 2.0, epsilon = 1e-12);
        assert_relative_eq!(cp.normal.z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_cylinder_is_error() {
        let bad = Cylinder {
            radius: 0.0,
            height: 0.06,
            center_z: 0.0,
        };
        assert!(collide_sphere_cylinder(&Vector3::zeros(), 0.01, &bad).is_err());
    }

    /// Brute-force oracle: sample the cylinder surface densely and take the
    /// minimum distance to the sphere center; the analytic distance must
    /// match from every region (lateral, cap, rim, interior).
    #[test]
    fn analytic_distance_matches_sampled_surface() {
        let c = cyl();
        let tip_r = 0.02;
        let probes = [
            Vector3::new(0.05, 0.01, 0.01),     // lateral
            Vector3::new(0.01, 0.0, 0.041),     // cap
            Vector3::new(0.045, 0.0, 0.033),    // rim
            Vector3::new(0.02, 0.01, 0.01),     // interior
            Vector3::new(0.0, 0.0, 0.034 + 0.01), // axis above cap
        ];
        for center in probes {
            let analytic = collide_sphere_cylinder(&center, tip_r, &c).unwrap();
            let mut best = f64::INFINITY;
            let n_ang = 400;
            let n_len = 200;
            for i in 0..n_ang {
                let phi = i as f64 / n_ang as f64 * std::f64::consts::TAU;
                let (s, co) = phi.sin_cos();
                for j in 0..=n_len {
                    let z = -0.03 + 0.06 * j as f64 / n_len as f64;
                    let p = Vector3::new(c.radius * co, c.radius * s, z);
                    best = best.min((center - p).norm());
                }
                // caps
                for j in 0..=n_len {
                    let r = c.radius * j as f64 / n_len as f64;
                    for &z in &[-0.03, 0.03] {
                        let p = Vector3::new(r * co, r * s, z);
                        best = best.min((center - p).norm());
                    }
                }
            }
            match analytic {
                Some(cp) => {
                    // Interior centers report depth > tip radius; surface distance
                    // from the sampled oracle is unsigned, so compare |depth - r|.
                    let analytic_dist = (tip_r - cp.penetration_depth).abs();
                    assert!(
                        (analytic_dist - best).abs() < 5e-4,
                        "analytic {analytic_dist} vs sampled {best} at {center:?}"
                    );
                }
                None => assert!(best >= tip_r - 5e-4),
            }
        }
    }
}
