//! Sweeps a two-task suite over seeds and trials and prints the
//! success-rate table.

use w4o::orchestrator::{format_report, run_benchmark, BenchmarkConfig, BenchmarkTask};

fn main() {
    let suite = vec![
        BenchmarkTask {
            name: "put tomato in pan".into(),
            template: "pick-place".into(),
            task: "Put the tomato in the pan".into(),
        },
        BenchmarkTask {
            name: "take plate off rack".into(),
            template: "take-off-rack".into(),
            task: "Take the plate off the rack".into(),
        },
    ];
    let config = BenchmarkConfig {
        seeds: (1..=5).collect(),
        trials_per_seed: 2,
        workers: Some(4),
        ..BenchmarkConfig::default()
    };

    let report = run_benchmark(&suite, &config);
    print!("{}", format_report(&report));
    println!(
        "\n{} episodes in {:.2} s wall",
        report.tasks.iter().map(|t| t.trials).sum::<usize>(),
        report.timings.total_s
    );
}
