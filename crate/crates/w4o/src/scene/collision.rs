use nalgebra::Vector3;

use super::{SceneError, SceneState, Shape, DEFAULT_COLLISION_TOL};
use crate::geometry::RigidTransform;

/// A shape placed in the world, ready for support-function queries.
pub struct Collider<'a> {
    pub shape: &'a Shape,
    pub pose: &'a RigidTransform,
}

impl Collider<'_> {
    fn support(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        let local = self.pose.rotation().transpose() * dir;
        self.pose.apply(&self.shape.support_local(&local))
    }
}

/// Euclidean distance between two convex bodies; 0 when they touch or
/// overlap. GJK on the Minkowski difference, accurate to ~1e-9 m.
pub fn gjk_distance(a: &Collider, b: &Collider) -> f64 {
    let support = |dir: &Vector3<f64>| a.support(dir) - b.support(&-dir);

    let mut dir = b.pose.translation() - a.pose.translation();
    if dir.norm_squared() < 1e-24 {
        dir = Vector3::x();
    }
    let mut simplex = vec![support(&dir)];
    let mut v = simplex[0];

    for _ in 0..128 {
        let dist = v.norm();
        if dist < 1e-9 {
            return 0.0;
        }
        let w = support(&-v);
        // v·w/|v| lower-bounds the true distance; stop when the bound meets
        // the current estimate.
        if dist - v.dot(&w) / dist < 1e-10 {
            return dist;
        }
        simplex.push(w);
        match closest_on_simplex(&mut simplex) {
            Some(closest) => v = closest,
            None => return 0.0, // origin enclosed by a tetrahedron
        }
    }
    v.norm()
}

/// Closest point to the origin on the simplex; reduces the simplex to the
/// supporting vertices. None means the origin is inside a tetrahedron.
fn closest_on_simplex(simplex: &mut Vec<Vector3<f64>>) -> Option<Vector3<f64>> {
    match simplex.len() {
        1 => Some(simplex[0]),
        2 => {
            let (p, keep) = closest_segment(simplex[0], simplex[1]);
            *simplex = keep;
            Some(p)
        }
        3 => {
            let (p, keep) = closest_triangle(simplex[0], simplex[1], simplex[2]);
            *simplex = keep;
            Some(p)
        }
        4 => closest_tetrahedron(simplex),
        _ => unreachable!("simplex size bounded by 4"),
    }
}

fn closest_segment(a: Vector3<f64>, b: Vector3<f64>) -> (Vector3<f64>, Vec<Vector3<f64>>) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom < 1e-30 {
        return (a, vec![a]);
    }
    let t = -a.dot(&ab) / denom;
    if t <= 0.0 {
        (a, vec![a])
    } else if t >= 1.0 {
        (b, vec![b])
    } else {
        (a + t * ab, vec![a, b])
    }
}

fn closest_triangle(
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
) -> (Vector3<f64>, Vec<Vector3<f64>>) {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, vec![a]);
    }

    let bp = -b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, vec![b]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (a + t * ab, vec![a, b]);
    }

    let cp = -c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, vec![c]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (a + t * ac, vec![a, c]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + t * (c - b), vec![b, c]);
    }

    let denom = va + vb + vc;
    if denom.abs() < 1e-30 {
        // Degenerate triangle; fall back to the best edge.
        let (p1, k1) = closest_segment(a, b);
        let (p2, k2) = closest_segment(a, c);
        return if p1.norm_squared() <= p2.norm_squared() {
            (p1, k1)
        } else {
            (p2, k2)
        };
    }
    let v = vb / denom;
    let w = vc / denom;
    (a + v * ab + w * ac, vec![a, b, c])
}

fn closest_tetrahedron(simplex: &mut Vec<Vector3<f64>>) -> Option<Vector3<f64>> {
    let (a, b, c, d) = (simplex[0], simplex[1], simplex[2], simplex[3]);
    let faces = [(a, b, c, d), (a, b, d, c), (a, c, d, b), (b, c, d, a)];

    let mut best: Option<(f64, Vector3<f64>, Vec<Vector3<f64>>)> = None;
    let mut outside_any = false;
    for (p, q, r, other) in faces {
        let n = (q - p).cross(&(r - p));
        let plane = n.dot(&-p); // origin side
        let opp = n.dot(&(other - p)); // fourth vertex side
        let outside = if opp.abs() < 1e-30 {
            true // flat tetrahedron: resolve via faces
        } else {
            plane * opp < 0.0
        };
        if outside {
            outside_any = true;
            let (point, keep) = closest_triangle(p, q, r);
            let d2 = point.norm_squared();
            if best.as_ref().is_none_or(|(bd, _, _)| d2 < *bd) {
                best = Some((d2, point, keep));
            }
        }
    }

    if !outside_any {
        return None;
    }
    let (_, point, keep) = best.expect("at least one outside face");
    *simplex = keep;
    Some(point)
}

/// True when the object, placed at `candidate_pose`, penetrates any other
/// object or the table by more than `tol`. Implemented by eroding both
/// bodies by tol/2 and testing contact.
pub fn check_collision_with_tol(
    scene: &SceneState,
    object_id: &str,
    candidate_pose: &RigidTransform,
    tol: f64,
) -> Result<bool, SceneError> {
    let idx = scene.object_index(object_id)?;
    let moved = scene.objects[idx].shape.shrunk(tol / 2.0);
    let moved_collider = Collider {
        shape: &moved,
        pose: candidate_pose,
    };

    for (i, other) in scene.objects.iter().enumerate() {
        if i == idx {
            continue;
        }
        let shrunk = other.shape.shrunk(tol / 2.0);
        let other_collider = Collider {
            shape: &shrunk,
            pose: &other.pose,
        };
        if gjk_distance(&moved_collider, &other_collider) <= 0.0 {
            return Ok(true);
        }
    }
    if let Some(table) = &scene.table {
        let (shape, pose) = table.as_body();
        let shrunk = shape.shrunk(tol / 2.0);
        let table_collider = Collider {
            shape: &shrunk,
            pose: &pose,
        };
        if gjk_distance(&moved_collider, &table_collider) <= 0.0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// [`check_collision_with_tol`] at the default 1 mm tolerance.
pub fn check_collision(
    scene: &SceneState,
    object_id: &str,
    candidate_pose: &RigidTransform,
) -> Result<bool, SceneError> {
    check_collision_with_tol(scene, object_id, candidate_pose, DEFAULT_COLLISION_TOL)
}

/// Minimum distance from the object at the given pose to every other body
/// (objects and table); 0 when touching or penetrating.
pub fn clearance(
    scene: &SceneState,
    object_id: &str,
    pose: &RigidTransform,
) -> Result<f64, SceneError> {
    let idx = scene.object_index(object_id)?;
    let collider = Collider {
        shape: &scene.objects[idx].shape,
        pose,
    };
    let mut min = f64::INFINITY;
    for (i, other) in scene.objects.iter().enumerate() {
        if i == idx {
            continue;
        }
        let other_collider = Collider {
            shape: &other.shape,
            pose: &other.pose,
        };
        min = min.min(gjk_distance(&collider, &other_collider));
    }
    if let Some(table) = &scene.table {
        let (shape, pose) = table.as_body();
        let table_collider = Collider {
            shape: &shape,
            pose: &pose,
        };
        min = min.min(gjk_distance(&collider, &table_collider));
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneObject, Table};
    use approx::assert_abs_diff_eq;

    fn at(x: f64, y: f64, z: f64) -> RigidTransform {
        RigidTransform::from_translation(Vector3::new(x, y, z))
    }

    #[test]
    fn sphere_sphere_distance_is_exact() {
        let s1 = Shape::Sphere { radius: 0.3 };
        let s2 = Shape::Sphere { radius: 0.2 };
        let p1 = at(0.0, 0.0, 0.0);
        let p2 = at(1.0, 0.0, 0.0);
        let d = gjk_distance(
            &Collider {
                shape: &s1,
                pose: &p1,
            },
            &Collider {
                shape: &s2,
                pose: &p2,
            },
        );
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn sphere_box_distance_face_and_corner() {
        let b = Shape::Box {
            size: Vector3::new(0.2, 0.2, 0.2),
        };
        let s = Shape::Sphere { radius: 0.05 };
        let pb = at(0.0, 0.0, 0.0);

        let face = at(0.5, 0.0, 0.0);
        let d = gjk_distance(
            &Collider {
                shape: &s,
                pose: &face,
            },
            &Collider {
                shape: &b,
                pose: &pb,
            },
        );
        assert_abs_diff_eq!(d, 0.5 - 0.1 - 0.05, epsilon = 1e-9);

        // Corner: center at (0.3,0.3,0.3), nearest corner (0.1,0.1,0.1).
        let corner = at(0.3, 0.3, 0.3);
        let d = gjk_distance(
            &Collider {
                shape: &s,
                pose: &corner,
            },
            &Collider {
                shape: &b,
                pose: &pb,
            },
        );
        assert_abs_diff_eq!(d, (3.0f64 * 0.04).sqrt() - 0.05, epsilon = 1e-9);
    }

    #[test]
    fn overlapping_bodies_have_zero_distance() {
        let b = Shape::Box {
            size: Vector3::new(0.4, 0.4, 0.4),
        };
        let s = Shape::Sphere { radius: 0.05 };
        let pb = at(0.0, 0.0, 0.0);
        let inside = at(0.05, -0.02, 0.1);
        let d = gjk_distance(
            &Collider {
                shape: &s,
                pose: &inside,
            },
            &Collider {
                shape: &b,
                pose: &pb,
            },
        );
        assert_eq!(d, 0.0);
    }

    #[test]
    fn rotated_boxes_gap() {
        // Two unit boxes, one yawed 45°, corner facing a flat face, with a
        // known corner-to-face gap of 0.1.
        let b = Shape::Box {
            size: Vector3::new(1.0, 1.0, 1.0),
        };
        let p1 = at(0.0, 0.0, 0.0);
        let yaw = RigidTransform::from_axis_angle(
            Vector3::z(),
            std::f64::consts::FRAC_PI_4,
            Vector3::new(0.5 + 0.1 + std::f64::consts::SQRT_2 / 2.0, 0.0, 0.0),
        );
        let d = gjk_distance(
            &Collider {
                shape: &b,
                pose: &p1,
            },
            &Collider {
                shape: &b,
                pose: &yaw,
            },
        );
        assert_abs_diff_eq!(d, 0.1, epsilon = 1e-9);
    }

    fn box_and_sphere_scene(sphere_pose: RigidTransform) -> SceneState {
        SceneState::new(
            vec![
                SceneObject {
                    id: "block".into(),
                    shape: Shape::Box {
                        size: Vector3::new(0.1, 0.1, 0.1),
                    },
                    pose: at(0.0, 0.0, 0.05),
                    color: [0, 0, 0],
                },
                SceneObject {
                    id: "ball".into(),
                    shape: Shape::Sphere { radius: 0.03 },
                    pose: sphere_pose,
                    color: [0, 0, 0],
                },
            ],
            Some(Table {
                size: [0.9, 0.9],
                height: 0.0,
            }),
        )
        .unwrap()
    }

    #[test]
    fn resting_contact_is_not_a_collision() {
        let scene = box_and_sphere_scene(at(0.3, 0.0, 0.03));
        assert!(!check_collision(&scene, "block", &at(0.0, 0.0, 0.05)).unwrap());
        assert!(!check_collision(&scene, "ball", &at(0.3, 0.0, 0.03)).unwrap());
    }

    #[test]
    fn sphere_inside_box_collides() {
        let scene = box_and_sphere_scene(at(0.3, 0.0, 0.03));
        assert!(check_collision(&scene, "ball", &at(0.0, 0.0, 0.05)).unwrap());
    }

    #[test]
    fn table_penetration_collides() {
        let scene = box_and_sphere_scene(at(0.3, 0.0, 0.03));
        assert!(check_collision(&scene, "ball", &at(0.3, 0.0, 0.02)).unwrap());
    }

    #[test]
    fn sweep_flips_at_analytic_entry_and_exit() {
        // Sphere (r = 0.03) swept along x through a 0.1 cube at the same
        // height. Penetration exceeds 1 mm for |x| < 0.05 + 0.03 - 0.001.
        let scene = box_and_sphere_scene(at(0.3, 0.0, 0.05));
        let expected = 0.079;
        let step = 0.00025;
        let mut flips = Vec::new();
        let mut prev = None;
        let mut x = -0.2;
        while x <= 0.2 {
            let hit = check_collision(&scene, "ball", &at(x, 0.0, 0.05)).unwrap();
            if let Some(p) = prev {
                if p != hit {
                    flips.push(x);
                }
            }
            prev = Some(hit);
            x += step;
        }
        assert_eq!(flips.len(), 2, "exactly one entry and one exit");
        assert!((flips[0] - -expected).abs() <= 0.001);
        assert!((flips[1] - expected).abs() <= 0.001);
    }

    #[test]
    fn clearance_matches_pairwise_distance() {
        let scene = box_and_sphere_scene(at(0.3, 0.0, 0.03));
        // Ball 0.3 m from the block center; nearest block face at x=0.05;
        // table contact dominates: resting on the table → clearance 0.
        let c = clearance(&scene, "ball", &at(0.3, 0.0, 0.03)).unwrap();
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-9);
        // Lifted ball: clearance to the table is bottom height.
        let c = clearance(&scene, "ball", &at(0.3, 0.0, 0.13)).unwrap();
        assert_abs_diff_eq!(c, 0.1, epsilon = 1e-9);
    }
}
