use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::agents::{
    chain_subgoals, oracle_suite, plan_subtasks, reflective_generate, BackendError, BackendSuite,
    CriticBackend, DepthBackend, DreamerBackend, PlanResponse, PlannerBackend, ReflectionVerdict,
    SegmenterBackend, SubgoalPrediction, SubtaskPlan, DEFAULT_MAX_ITERS,
};
use crate::gateway::{remote_suite, GatewayConfig};
use crate::geometry::{CameraModel, DepthMap, PixelMask, RigidTransform};
use crate::policy::{execute_subtask, ActionRecord, ExecuteConfig, Matcher, Outcome};
use crate::scene::{
    default_camera, observe, oracle_future_scene, sample_layout, RgbImage, SceneError,
    SceneRegistry, SceneState, Shape,
};

/// How subgoal images are produced across a plan. Open loop chains each
/// generated image into the next generation; closed loop regenerates from
/// a fresh render after every executed subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OpenLoop,
    ClosedLoop,
}

/// Success window for final object poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub position: f64,
    pub rotation_deg: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            position: 0.02,
            rotation_deg: 10.0,
        }
    }
}

/// Which implementations fill the five model slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    /// Ground-truth backends over the simulator. The only choice that can
    /// actually solve tasks.
    Oracle,
    /// Self-contained heuristic stand-ins (echo dreamer, always-accept
    /// critic, flat depth). Exercises every stage without ground truth;
    /// episodes run deterministically but do not succeed.
    Mock,
    /// The HTTP wire protocol against a configured base URL.
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub template: String,
    pub seed: u64,
    pub task: String,
    pub backend: BackendChoice,
    /// Base URL for [`BackendChoice::Remote`]; `W4O_BACKEND_URL` wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_url: Option<String>,
    pub mode: Mode,
    pub max_iters: usize,
    pub grasp_threshold: f64,
    /// Motion-planner seed. Benchmarks perturb this per trial while the
    /// layout stays pinned to `seed`.
    pub planner_seed: u64,
    pub plan_candidates: usize,
    pub tolerances: Tolerances,
}

impl EpisodeConfig {
    pub fn new(template: impl Into<String>, seed: u64, task: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            seed,
            task: task.into(),
            backend: BackendChoice::Oracle,
            backend_url: None,
            mode: Mode::OpenLoop,
            max_iters: DEFAULT_MAX_ITERS,
            grasp_threshold: 0.05,
            planner_seed: 0,
            plan_candidates: 1,
            tolerances: Tolerances::default(),
        }
    }
}

/// The per-episode bundle an episode runner works against.
pub struct EpisodeBackends {
    pub suite: BackendSuite,
    pub matcher: Matcher,
    /// When present, episode observations are recorded here so oracle
    /// backends recognize the rendered images.
    pub registry: Option<SceneRegistry>,
}

/// Builds the backend bundle an [`EpisodeConfig`] asks for.
pub fn build_backends(config: &EpisodeConfig, camera: &CameraModel) -> EpisodeBackends {
    match config.backend {
        BackendChoice::Oracle => {
            let registry = SceneRegistry::new();
            EpisodeBackends {
                suite: oracle_suite(registry.clone(), *camera),
                matcher: Matcher::Oracle(registry.clone()),
                registry: Some(registry),
            }
        }
        BackendChoice::Mock => EpisodeBackends {
            suite: mock_suite(camera),
            matcher: Matcher::Fallback,
            registry: None,
        },
        BackendChoice::Remote => {
            let base = config.backend_url.as_deref().unwrap_or("http://127.0.0.1:8700");
            EpisodeBackends {
                suite: remote_suite(GatewayConfig::from_env_or(base)),
                matcher: Matcher::Fallback,
                registry: None,
            }
        }
    }
}

/// Planner that wraps the whole task as one subtask, targeting the word
/// after the first article. No scene knowledge.
struct KeywordPlanner;

impl PlannerBackend for KeywordPlanner {
    fn plan(&self, task: &str, _image: &RgbImage) -> Result<PlanResponse, BackendError> {
        let lowered = task.to_lowercase();
        let mut tokens = lowered
            .split(|c: char| c.is_whitespace() || c == ',' || c == '.')
            .filter(|t| !t.is_empty());
        let target = tokens
            .by_ref()
            .skip_while(|t| !matches!(*t, "the" | "a" | "an"))
            .nth(1)
            .unwrap_or("object")
            .to_string();
        Ok(PlanResponse {
            subtasks: vec![task.trim().to_string()],
            targets: vec![target],
        })
    }
}

/// Dreamer that predicts no change at all.
struct EchoDreamer;

impl DreamerBackend for EchoDreamer {
    fn dream(&self, image: &RgbImage, _prompt: &str) -> Result<RgbImage, BackendError> {
        Ok(image.clone())
    }
}

/// Critic that accepts everything.
struct YesCritic;

impl CriticBackend for YesCritic {
    fn critique(
        &self,
        _image: &RgbImage,
        _candidate: &RgbImage,
        _subtask: &str,
    ) -> Result<ReflectionVerdict, BackendError> {
        Ok(ReflectionVerdict::Accept {
            rationale: "mock critic accepts everything".to_string(),
        })
    }
}

/// Depth that claims a flat plane one meter out.
struct FlatDepth {
    width: u32,
    height: u32,
}

impl DepthBackend for FlatDepth {
    fn estimate_depth(&self, _image: &RgbImage) -> Result<DepthMap, BackendError> {
        let mut d = DepthMap::new(self.width, self.height);
        for v in 0..self.height {
            for u in 0..self.width {
                d.set(u, v, 1.0);
            }
        }
        Ok(d)
    }
}

/// Segmenter that claims every pixel for every label.
struct FullSegmenter {
    width: u32,
    height: u32,
}

impl SegmenterBackend for FullSegmenter {
    fn segment(&self, _image: &RgbImage, _label: &str) -> Result<PixelMask, BackendError> {
        Ok(PixelMask::filled(self.width, self.height))
    }
}

/// Deterministic no-ground-truth suite for plumbing smoke runs.
pub fn mock_suite(camera: &CameraModel) -> BackendSuite {
    BackendSuite {
        planner: Arc::new(KeywordPlanner),
        dreamer: Arc::new(EchoDreamer),
        critic: Arc::new(YesCritic),
        depth: Arc::new(FlatDepth {
            width: camera.width,
            height: camera.height,
        }),
        segmenter: Arc::new(FullSegmenter {
            width: camera.width,
            height: camera.height,
        }),
    }
}

fn rotation_angle_deg(a: &RigidTransform, b: &RigidTransform) -> f64 {
    let rel = a.rotation().transpose() * b.rotation();
    let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Orientation error honoring each shape's symmetry class: spheres have
/// none, cylinders only their axis direction (up to flips), boxes are
/// invariant under 180-degree turns about their own axes.
fn symmetry_rotation_error_deg(shape: &Shape, a: &RigidTransform, b: &RigidTransform) -> f64 {
    match shape {
        Shape::Sphere { .. } => 0.0,
        Shape::Cylinder { .. } => {
            let az = a.rotation() * Vector3::z();
            let bz = b.rotation() * Vector3::z();
            az.dot(&bz).abs().min(1.0).acos().to_degrees()
        }
        Shape::Box { .. } => {
            let mut best = rotation_angle_deg(a, b);
            for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
                let flipped = b.compose(&RigidTransform::from_axis_angle(
                    axis,
                    std::f64::consts::PI,
                    Vector3::zeros(),
                ));
                best = best.min(rotation_angle_deg(a, &flipped));
            }
            best
        }
    }
}

/// Whether `object_id` ended up within tolerance of its goal pose.
pub fn evaluate_success(
    final_scene: &SceneState,
    goal_scene: &SceneState,
    object_id: &str,
    tol: &Tolerances,
) -> Result<bool, SceneError> {
    let actual = final_scene.object(object_id)?;
    let goal = goal_scene.object(object_id)?;
    let t_err = (actual.pose.translation() - goal.pose.translation()).norm();
    let r_err = symmetry_rotation_error_deg(&actual.shape, &actual.pose, &goal.pose);
    Ok(t_err <= tol.position && r_err <= tol.rotation_deg)
}

/// Wall-clock accounting, the only nondeterministic report content.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub observe_s: f64,
    pub plan_s: f64,
    pub subgoals_s: f64,
    pub execute_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub config: EpisodeConfig,
    pub plan: Option<SubtaskPlan>,
    /// Reflection iterations spent per generated subgoal.
    pub subgoal_iterations: Vec<usize>,
    pub records: Vec<ActionRecord>,
    pub goal_scene: Option<SceneState>,
    pub final_scene: Option<SceneState>,
    pub success: bool,
    /// Stage error that aborted the episode, when one did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub timings: StageTimings,
}

/// Runs one episode with backends built from the config.
pub fn run_episode(config: &EpisodeConfig) -> EpisodeReport {
    match default_camera(&config.template) {
        Ok(camera) => run_episode_with(config, &build_backends(config, &camera)),
        Err(e) => {
            let mut report = empty_report(config);
            report.failure = Some(format!("layout: {e}"));
            report
        }
    }
}

fn empty_report(config: &EpisodeConfig) -> EpisodeReport {
    EpisodeReport {
        config: config.clone(),
        plan: None,
        subgoal_iterations: Vec::new(),
        records: Vec::new(),
        goal_scene: None,
        final_scene: None,
        success: false,
        failure: None,
        timings: StageTimings::default(),
    }
}

/// Runs one episode against an existing backend bundle. Stage errors are
/// recorded in the report; this never panics on them.
pub fn run_episode_with(config: &EpisodeConfig, backends: &EpisodeBackends) -> EpisodeReport {
    let t_total = Instant::now();
    let mut report = empty_report(config);
    if let Err(reason) = run_stages(config, backends, &mut report) {
        report.success = false;
        report.failure = Some(reason);
    }
    report.timings.total_s = t_total.elapsed().as_secs_f64();
    report
}

fn run_stages(
    config: &EpisodeConfig,
    backends: &EpisodeBackends,
    report: &mut EpisodeReport,
) -> Result<(), String> {
    if !(config.tolerances.position > 0.0 && config.tolerances.rotation_deg > 0.0) {
        return Err("config: tolerances must be positive".to_string());
    }
    if config.max_iters == 0 {
        return Err("config: max_iters must be at least 1".to_string());
    }

    let t = Instant::now();
    let scene0 = sample_layout(&config.template, config.seed).map_err(|e| format!("layout: {e}"))?;
    let camera = default_camera(&config.template).map_err(|e| format!("layout: {e}"))?;
    let obs0 = observe(&scene0, &camera).map_err(|e| format!("observe: {e}"))?;
    if let Some(registry) = &backends.registry {
        registry.record(&obs0.image, &scene0);
    }
    report.timings.observe_s += t.elapsed().as_secs_f64();

    let t = Instant::now();
    let plan = plan_subtasks(&backends.suite, &config.task, &obs0.image)
        .map_err(|e| format!("plan: {e}"))?;
    report.plan = Some(plan.clone());
    report.timings.plan_s = t.elapsed().as_secs_f64();

    // The analytic goal the episode is judged against at the end.
    let mut goal = scene0.clone();
    for subtask in &plan.subtasks {
        goal = oracle_future_scene(&goal, subtask).map_err(|e| format!("goal grounding: {e}"))?;
    }
    report.goal_scene = Some(goal.clone());

    let t = Instant::now();
    let mut pregenerated: Vec<Option<SubgoalPrediction>> = match config.mode {
        Mode::OpenLoop => chain_subgoals(&backends.suite, &obs0, &plan, config.max_iters)
            .map_err(|e| format!("subgoals: {e}"))?
            .into_iter()
            .map(Some)
            .collect(),
        Mode::ClosedLoop => (0..plan.len()).map(|_| None).collect(),
    };
    report.timings.subgoals_s += t.elapsed().as_secs_f64();

    let mut scene = scene0;
    for index in 0..plan.len() {
        let subtask = &plan.subtasks[index];
        let target = &plan.targets[index];

        let t = Instant::now();
        let obs = if index == 0 {
            obs0.clone()
        } else {
            let obs = observe(&scene, &camera).map_err(|e| format!("observe: {e}"))?;
            if let Some(registry) = &backends.registry {
                registry.record(&obs.image, &scene);
            }
            obs
        };
        report.timings.observe_s += t.elapsed().as_secs_f64();

        let prediction = match pregenerated[index].take() {
            Some(p) => p,
            None => {
                let t = Instant::now();
                let p = reflective_generate(
                    &backends.suite,
                    &obs,
                    &obs.image,
                    subtask,
                    target,
                    config.max_iters,
                )
                .map_err(|e| format!("subgoals: subtask {index}: {e}"))?;
                report.timings.subgoals_s += t.elapsed().as_secs_f64();
                p
            }
        };
        report.subgoal_iterations.push(prediction.iterations_used);

        let mut exec = ExecuteConfig::new(target.clone(), index, backends.matcher.clone());
        exec.grasp_threshold = config.grasp_threshold;
        exec.planner_seed = config.planner_seed;
        exec.plan_candidates = config.plan_candidates;

        let t = Instant::now();
        let (next, record) = execute_subtask(&scene, &obs, &prediction, &exec);
        report.timings.execute_s += t.elapsed().as_secs_f64();

        let failed = match &record.outcome {
            Outcome::Succeeded => None,
            Outcome::Failed(reason) => Some(reason.clone()),
        };
        report.records.push(record);
        scene = next;
        if let Some(reason) = failed {
            report.final_scene = Some(scene);
            return Err(format!("execute: subtask {index}: {reason}"));
        }
    }
    report.final_scene = Some(scene.clone());

    let targets: BTreeSet<&String> = plan.targets.iter().collect();
    for target in targets {
        let ok = evaluate_success(&scene, &goal, target, &config.tolerances)
            .map_err(|e| format!("evaluate: {e}"))?;
        if !ok {
            report.success = false;
            return Ok(());
        }
    }
    report.success = true;
    Ok(())
}
