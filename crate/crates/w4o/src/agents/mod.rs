//! Hierarchical agent layer: task decomposition, the reflective
//! dreamer/critic loop, and lifting accepted subgoal images into metric
//! depth and point clouds. Every model slot hides behind a backend trait
//! with oracle, scripted-mock, and remote implementations.

mod backends;
mod ops;
mod oracle;
mod scripted;
mod types;

pub use backends::{
    BackendSuite, CriticBackend, DepthBackend, DreamerBackend, PlanResponse, PlannerBackend,
    SegmenterBackend, BACKGROUND_LABEL,
};
pub use ops::{
    chain_subgoals, lift_subgoal, plan_subtasks, reflective_generate, segment_object,
    DEFAULT_MAX_ITERS,
};
pub use oracle::{
    oracle_suite, OracleCritic, OracleDepth, OracleDreamer, OraclePlanner, OracleSegmenter,
};
pub use scripted::{
    Scripted, ScriptedCritic, ScriptedDepth, ScriptedDreamer, ScriptedPlanner, ScriptedSegmenter,
};
pub use types::{
    AgentError, BackendError, ReflectionVerdict, SubgoalPrediction, SubtaskPlan,
    SUBGOAL_OBJECT_LABEL,
};
