use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::{check_collision, SceneError, SceneObject, SceneState, Shape, Table};
use crate::geometry::{CameraModel, RigidTransform};

const MAX_PLACEMENT_ATTEMPTS: u32 = 1000;

pub fn template_names() -> &'static [&'static str] {
    &["pick-place", "take-off-rack"]
}

/// The fixed overhead camera used by the built-in templates: 320×240,
/// looking straight down at the table center from 1.2 m.
pub fn default_camera(template: &str) -> Result<CameraModel, SceneError> {
    if !template_names().contains(&template) {
        return Err(SceneError::UnknownTemplate(template.to_string()));
    }
    // Camera x = world x, camera y = world -y, camera z (forward) = world -z.
    let rot = Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, -1.0, 0.0, //
        0.0, 0.0, -1.0,
    );
    Ok(CameraModel::new(
        280.0,
        280.0,
        160.0,
        120.0,
        320,
        240,
        RigidTransform::new(rot, Vector3::new(0.0, 0.0, 1.2)).expect("proper rotation"),
    )
    .expect("valid intrinsics"))
}

/// Deterministic seeded layout for a registered template. Objects rest on
/// the table, stay within its extents, and do not interpenetrate.
pub fn sample_layout(template: &str, seed: u64) -> Result<SceneState, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match template {
        "pick-place" => pick_place(&mut rng),
        "take-off-rack" => take_off_rack(&mut rng),
        other => Err(SceneError::UnknownTemplate(other.to_string())),
    }
}

fn table() -> Table {
    Table {
        size: [0.9, 0.9],
        height: 0.0,
    }
}

fn resting_pose(shape: &Shape, table: &Table, x: f64, y: f64) -> RigidTransform {
    let half_height = -shape.support_local(&Vector3::new(0.0, 0.0, -1.0)).z;
    RigidTransform::from_translation(Vector3::new(x, y, table.height + half_height))
}

/// A tomato (sphere) and a pan (cylinder), separated enough to pick and
/// place between them.
fn pick_place(rng: &mut ChaCha8Rng) -> Result<SceneState, SceneError> {
    let table = table();
    let tomato = Shape::Sphere { radius: 0.03 };
    let pan = Shape::Cylinder {
        radius: 0.075,
        height: 0.03,
    };

    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let (px, py): (f64, f64) =
            (rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25));
        let (tx, ty): (f64, f64) =
            (rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25));
        let separation = ((px - tx).powi(2) + (py - ty).powi(2)).sqrt();
        if separation < 0.075 + 0.03 + 0.05 {
            continue;
        }
        let scene = SceneState::new(
            vec![
                SceneObject {
                    id: "tomato".into(),
                    shape: tomato.clone(),
                    pose: resting_pose(&tomato, &table, tx, ty),
                    color: [204, 41, 36],
                },
                SceneObject {
                    id: "pan".into(),
                    shape: pan.clone(),
                    pose: resting_pose(&pan, &table, px, py),
                    color: [92, 92, 102],
                },
            ],
            Some(table),
        )?;
        if layout_is_clear(&scene)? {
            return Ok(scene);
        }
    }
    Err(SceneError::PlacementFailure {
        template: "pick-place".into(),
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// A plate (thin upright box) resting on a rack (box), with room to move
/// the plate off and set it on the table.
fn take_off_rack(rng: &mut ChaCha8Rng) -> Result<SceneState, SceneError> {
    let table = table();
    let rack = Shape::Box {
        size: Vector3::new(0.2, 0.12, 0.08),
    };
    let plate = Shape::Box {
        size: Vector3::new(0.02, 0.16, 0.16),
    };

    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let (rx, ry) = (rng.random_range(-0.18..0.18), rng.random_range(-0.18..0.18));
        // Plate stands on the rack top, offset along x so "away from the
        // rack" has a well-defined horizontal direction.
        let (pxo, pyo) = (0.03, 0.0);
        let rack_top = table.height + 0.08;
        let plate_pose =
            RigidTransform::from_translation(Vector3::new(rx + pxo, ry + pyo, rack_top + 0.08));
        let scene = SceneState::new(
            vec![
                SceneObject {
                    id: "plate".into(),
                    shape: plate.clone(),
                    pose: plate_pose,
                    color: [233, 233, 238],
                },
                SceneObject {
                    id: "rack".into(),
                    shape: rack.clone(),
                    pose: resting_pose(&rack, &table, rx, ry),
                    color: [146, 108, 70],
                },
            ],
            Some(table),
        )?;
        if layout_is_clear(&scene)? {
            return Ok(scene);
        }
    }
    Err(SceneError::PlacementFailure {
        template: "take-off-rack".into(),
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Freshly sampled layouts must be penetration-free and inside the table.
fn layout_is_clear(scene: &SceneState) -> Result<bool, SceneError> {
    let table = scene.table.as_ref().expect("templates always set a table");
    for obj in &scene.objects {
        let r = obj.shape.bounding_radius();
        let t = obj.pose.translation();
        if t.x.abs() + r > table.size[0] / 2.0 || t.y.abs() + r > table.size[1] / 2.0 {
            return Ok(false);
        }
        if check_collision(scene, &obj.id, &obj.pose)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        for template in template_names() {
            let a = sample_layout(template, 3).unwrap();
            let b = sample_layout(template, 3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn seeds_one_to_five_give_distinct_placements() {
        let scenes: Vec<SceneState> = (1..=5)
            .map(|s| sample_layout("pick-place", s).unwrap())
            .collect();
        for i in 0..scenes.len() {
            for j in i + 1..scenes.len() {
                let same = scenes[i]
                    .objects
                    .iter()
                    .zip(&scenes[j].objects)
                    .all(|(a, b)| {
                        let (t, r) = a.pose.pose_error(&b.pose);
                        t < 1e-12 && r < 1e-9
                    });
                assert!(!same, "seeds {} and {} produced identical layouts", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn unknown_template_is_rejected() {
        assert!(matches!(
            sample_layout("juggling", 1),
            Err(SceneError::UnknownTemplate(_))
        ));
        assert!(default_camera("juggling").is_err());
    }

    #[test]
    fn objects_rest_on_their_support() {
        for seed in 1..=5 {
            let scene = sample_layout("pick-place", seed).unwrap();
            for obj in &scene.objects {
                approx::assert_abs_diff_eq!(obj.bottom_z(), 0.0, epsilon = 1e-12);
            }
            let scene = sample_layout("take-off-rack", seed).unwrap();
            let rack = scene.object("rack").unwrap();
            let plate = scene.object("plate").unwrap();
            approx::assert_abs_diff_eq!(rack.bottom_z(), 0.0, epsilon = 1e-12);
            approx::assert_abs_diff_eq!(plate.bottom_z(), 0.08, epsilon = 1e-12);
        }
    }

    #[test]
    fn layouts_are_collision_free() {
        for template in template_names() {
            for seed in 1..=5 {
                let scene = sample_layout(template, seed).unwrap();
                for obj in &scene.objects {
                    assert!(!check_collision(&scene, &obj.id, &obj.pose).unwrap());
                }
            }
        }
    }
}
