use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

const RAY_EPS: f64 = 1e-9;

/// Convex primitive in its local frame, centered on the origin.
/// Cylinder axis is local z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box { size: Vector3<f64> },
    Sphere { radius: f64 },
    Cylinder { radius: f64, height: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<(), String> {
        let ok = match self {
            Shape::Box { size } => size.iter().all(|d| *d > 0.0 && d.is_finite()),
            Shape::Sphere { radius } => *radius > 0.0 && radius.is_finite(),
            Shape::Cylinder { radius, height } => {
                *radius > 0.0 && *height > 0.0 && radius.is_finite() && height.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("non-positive shape dimensions: {self:?}"))
        }
    }

    /// Farthest surface point in the given local direction.
    pub fn support_local(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Shape::Box { size } => Vector3::new(
                0.5 * size.x * sign(dir.x),
                0.5 * size.y * sign(dir.y),
                0.5 * size.z * sign(dir.z),
            ),
            Shape::Sphere { radius } => {
                let n = dir.norm();
                if n < 1e-300 {
                    Vector3::new(*radius, 0.0, 0.0)
                } else {
                    dir * (radius / n)
                }
            }
            Shape::Cylinder { radius, height } => {
                let radial = dir.xy().norm();
                let (x, y) = if radial < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (dir.x * radius / radial, dir.y * radius / radial)
                };
                Vector3::new(x, y, 0.5 * height * sign(dir.z))
            }
        }
    }

    /// Exact signed distance to the surface at a local point.
    pub fn signed_distance_local(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Shape::Box { size } => {
                let q = Vector3::new(
                    p.x.abs() - 0.5 * size.x,
                    p.y.abs() - 0.5 * size.y,
                    p.z.abs() - 0.5 * size.z,
                );
                let outside = Vector3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                outside + inside
            }
            Shape::Sphere { radius } => p.norm() - radius,
            Shape::Cylinder { radius, height } => {
                let dr = p.xy().norm() - radius;
                let dz = p.z.abs() - 0.5 * height;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                let inside = dr.max(dz).min(0.0);
                outside + inside
            }
        }
    }

    /// Nearest ray-surface hit parameter, local frame. The direction need
    /// not be normalized; the returned t is in direction units.
    pub fn ray_local(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match self {
            Shape::Box { size } => ray_box(o, d, &(0.5 * size)),
            Shape::Sphere { radius } => ray_sphere(o, d, *radius),
            Shape::Cylinder { radius, height } => ray_cylinder(o, d, *radius, 0.5 * height),
        }
    }

    /// The shape eroded by `delta` on every side, floored at 1 µm.
    pub fn shrunk(&self, delta: f64) -> Shape {
        let floor = 1e-6;
        match self {
            Shape::Box { size } => Shape::Box {
                size: size.map(|d| (d - 2.0 * delta).max(floor)),
            },
            Shape::Sphere { radius } => Shape::Sphere {
                radius: (radius - delta).max(floor),
            },
            Shape::Cylinder { radius, height } => Shape::Cylinder {
                radius: (radius - delta).max(floor),
                height: (height - 2.0 * delta).max(floor),
            },
        }
    }

    /// Radius of the bounding sphere around the local origin.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Box { size } => 0.5 * size.norm(),
            Shape::Sphere { radius } => *radius,
            Shape::Cylinder { radius, height } => radius.hypot(0.5 * height),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn ray_box(o: &Vector3<f64>, d: &Vector3<f64>, half: &Vector3<f64>) -> Option<f64> {
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for i in 0..3 {
        if d[i].abs() < 1e-14 {
            if o[i].abs() > half[i] {
                return None;
            }
            continue;
        }
        let ta = (-half[i] - o[i]) / d[i];
        let tb = (half[i] - o[i]) / d[i];
        t_min = t_min.max(ta.min(tb));
        t_max = t_max.min(ta.max(tb));
    }
    if t_max < t_min {
        return None;
    }
    if t_min > RAY_EPS {
        Some(t_min)
    } else if t_max > RAY_EPS {
        Some(t_max)
    } else {
        None
    }
}

fn ray_sphere(o: &Vector3<f64>, d: &Vector3<f64>, r: f64) -> Option<f64> {
    let a = d.norm_squared();
    let b = 2.0 * o.dot(d);
    let c = o.norm_squared() - r * r;
    pick_root(a, b, c, |_| true)
}

fn ray_cylinder(o: &Vector3<f64>, d: &Vector3<f64>, r: f64, half_h: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > RAY_EPS && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    // Lateral surface, restricted to the finite height.
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-28 {
        let b = 2.0 * (o.x * d.x + o.y * d.y);
        let c = o.x * o.x + o.y * o.y - r * r;
        if let Some(t) = pick_root(a, b, c, |t| (o.z + t * d.z).abs() <= half_h) {
            consider(t);
        }
    }

    // Caps.
    if d.z.abs() > 1e-14 {
        for cap_z in [-half_h, half_h] {
            let t = (cap_z - o.z) / d.z;
            let x = o.x + t * d.x;
            let y = o.y + t * d.y;
            if x * x + y * y <= r * r {
                consider(t);
            }
        }
    }
    best
}

/// Smallest root of at² + bt + c = 0 exceeding RAY_EPS and satisfying the
/// extra predicate.
fn pick_root(a: f64, b: f64, c: f64, valid: impl Fn(f64) -> bool) -> Option<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
        if t > RAY_EPS && valid(t) {
            return Some(t);
        }
    }
    None
}
