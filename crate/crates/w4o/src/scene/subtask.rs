use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{SceneError, SceneState};
use crate::geometry::RigidTransform;

/// Displacement magnitudes for subtask semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Vertical travel for "upward"/"downward".
    pub lift_height: f64,
    /// Horizontal travel for bare left/right/forward/backward moves.
    pub horizontal_step: f64,
    /// Horizontal travel for "away from <object>".
    pub away_clearance: f64,
    /// Allowed horizontal slack when judging "over the <object>".
    pub over_tolerance: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            lift_height: 0.15,
            horizontal_step: 0.15,
            away_clearance: 0.18,
            over_tolerance: 0.01,
        }
    }
}

/// Where a parsed subtask sends its object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubtaskMotion {
    Up,
    Down,
    Left,
    Right,
    Forward,
    Backward,
    /// Horizontal alignment with the target's centroid.
    Over(String),
    /// Align horizontally with the target and rest on top of it.
    Into(String),
    /// Rest on top of the named target; "table" keeps the horizontal
    /// position and drops to the table surface.
    Onto(String),
    /// Horizontal retreat along the target→object direction.
    AwayFrom(String),
}

/// Parses a subtask sentence against the scene's object vocabulary.
/// Returns the moved object's id and the motion. The grammar is a fixed
/// verb set; anything else is rejected rather than guessed.
pub fn parse_subtask(
    scene: &SceneState,
    subtask: &str,
) -> Result<(String, SubtaskMotion), SceneError> {
    let lowered = subtask.to_lowercase();
    let tokens: Vec<&str> = lowered
        .split(|c: char| c.is_whitespace() || c == ',' || c == '.')
        .filter(|t| !t.is_empty())
        .collect();

    let verb_ok = matches!(tokens.first(), Some(&"move") | Some(&"place") | Some(&"put"));
    if !verb_ok {
        return Err(SceneError::UnparsableSubtask(subtask.to_string()));
    }

    // Object noun: first token after the verb that is not an article.
    let mut idx = 1;
    while idx < tokens.len() && matches!(tokens[idx], "the" | "a" | "an") {
        idx += 1;
    }
    let Some(&noun) = tokens.get(idx) else {
        return Err(SceneError::UnparsableSubtask(subtask.to_string()));
    };
    let object_id = scene
        .objects
        .iter()
        .find(|o| o.id == noun)
        .map(|o| o.id.clone())
        .ok_or_else(|| SceneError::UnknownObject(noun.to_string()))?;

    // The noun following a preposition ("into the pan"), if any.
    let rest = &tokens[idx + 1..];
    let target_after = |prep: &str| -> Option<String> {
        let at = rest.iter().position(|t| *t == prep)?;
        rest[at + 1..]
            .iter()
            .find(|t| !matches!(**t, "the" | "a" | "an"))
            .map(|t| t.to_string())
    };
    let resolve = |name: String| -> Result<String, SceneError> {
        if name == "table" {
            return Ok(name);
        }
        scene
            .objects
            .iter()
            .find(|o| o.id == name)
            .map(|o| o.id.clone())
            .ok_or(SceneError::UnknownObject(name))
    };

    let has = |word: &str| rest.iter().any(|t| *t == word);

    let motion = if let Some(t) = target_after("into") {
        SubtaskMotion::Into(resolve(t)?)
    } else if let Some(t) = target_after("onto") {
        SubtaskMotion::Onto(resolve(t)?)
    } else if let Some(t) = target_after("above").or_else(|| target_after("over")) {
        SubtaskMotion::Over(resolve(t)?)
    } else if has("away") {
        let t = target_after("from").ok_or_else(|| {
            SceneError::UnparsableSubtask(subtask.to_string())
        })?;
        SubtaskMotion::AwayFrom(resolve(t)?)
    } else if has("upward") || has("upwards") || has("up") {
        SubtaskMotion::Up
    } else if has("downward") || has("downwards") || has("down") {
        SubtaskMotion::Down
    } else if has("left") {
        SubtaskMotion::Left
    } else if has("right") {
        SubtaskMotion::Right
    } else if has("forward") {
        SubtaskMotion::Forward
    } else if has("backward") || has("back") {
        SubtaskMotion::Backward
    } else {
        return Err(SceneError::UnparsableSubtask(subtask.to_string()));
    };

    Ok((object_id, motion))
}

/// Ground-truth scene after completing one subtask: exactly the named
/// object is displaced, rotation unchanged, everything else fixed.
pub fn oracle_future_scene(scene: &SceneState, subtask: &str) -> Result<SceneState, SceneError> {
    oracle_future_scene_with(scene, subtask, &MotionParams::default())
}

pub fn oracle_future_scene_with(
    scene: &SceneState,
    subtask: &str,
    params: &MotionParams,
) -> Result<SceneState, SceneError> {
    let (object_id, motion) = parse_subtask(scene, subtask)?;
    let obj = scene.object(&object_id)?;
    let up = scene.gravity_axis;
    let pos = *obj.pose.translation();

    let horizontal = |v: Vector3<f64>| v - up * v.dot(&up);

    let new_pos = match &motion {
        SubtaskMotion::Up => pos + up * params.lift_height,
        SubtaskMotion::Down => {
            let mut drop = params.lift_height;
            if let Some(table) = &scene.table {
                // Never sink below the table surface.
                drop = drop.min(obj.bottom_z() - table.height);
            }
            pos - up * drop
        }
        SubtaskMotion::Left => pos - Vector3::x() * params.horizontal_step,
        SubtaskMotion::Right => pos + Vector3::x() * params.horizontal_step,
        SubtaskMotion::Forward => pos + Vector3::y() * params.horizontal_step,
        SubtaskMotion::Backward => pos - Vector3::y() * params.horizontal_step,
        SubtaskMotion::Over(target) => {
            let t = scene.object(target)?.pose.translation();
            horizontal(*t) + up * pos.dot(&up)
        }
        SubtaskMotion::Into(target) | SubtaskMotion::Onto(target) if target != "table" => {
            let target_obj = scene.object(target)?;
            let top = target_obj
                .pose
                .apply(&target_obj.shape.support_local(
                    &(target_obj.pose.rotation().transpose() * up),
                ))
                .dot(&up);
            let keep_horizontal = matches!(&motion, SubtaskMotion::Onto(_));
            let base = if keep_horizontal {
                horizontal(pos)
            } else {
                horizontal(*target_obj.pose.translation())
            };
            base + up * (pos.dot(&up) + top - obj.bottom_z())
        }
        SubtaskMotion::Into(_) | SubtaskMotion::Onto(_) => {
            let table = scene
                .table
                .as_ref()
                .ok_or_else(|| SceneError::InvalidScene("no table to place onto".into()))?;
            pos + up * (table.height - obj.bottom_z())
        }
        SubtaskMotion::AwayFrom(target) => {
            let t = scene.object(target)?.pose.translation();
            let dir = horizontal(pos - t);
            let dir = if dir.norm() < 1e-9 {
                Vector3::x()
            } else {
                dir.normalize()
            };
            pos + dir * params.away_clearance
        }
    };

    let new_pose = RigidTransform::from_quaternion(obj.pose.quaternion(), new_pos);
    scene.with_object_pose(&object_id, new_pose)
}
