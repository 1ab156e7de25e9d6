//! Episode and benchmark harness. Composes layout sampling, observation,
//! planning, subgoal generation, and execution into reproducible runs,
//! then scores and reports them.

mod bench;
mod episode;

pub use bench::{
    format_report, run_benchmark, BenchmarkConfig, BenchmarkReport, BenchmarkTask, TaskResult,
};
pub use episode::{
    build_backends, evaluate_success, mock_suite, run_episode, run_episode_with, BackendChoice,
    EpisodeBackends, EpisodeConfig, EpisodeReport, Mode, StageTimings, Tolerances,
};
