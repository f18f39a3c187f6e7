//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::PathBuf;
use std::process::ExitCode;

use byzsgd::verify::{self, BoundRunSetup, Check, TrendSetup};

const SEED: u64 = 20240611;
const TREND_SEEDS: [u64; 5] = [11, 12, 13, 14, 15];

fn within(mut c: Check, limit_s: Option<f64>) -> Check {
    if let Some(limit) = limit_s {
        if c.seconds >= limit {
            c.passed = false;
            c.detail = format!("{} (over {limit}s limit)", c.detail);
        }
    }
    c
}

fn main() -> ExitCode {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("table1.csv");
    let trend = TrendSetup::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>, Option<f64>)> = vec![
        ("closed-form optimum", Box::new(|| verify::check_closed_form(25, SEED)), Some(1.0)),
        ("monotone in delta", Box::new(|| verify::check_monotonicity(10, SEED)), Some(1.0)),
        ("convexity", Box::new(|| verify::check_convexity(10, SEED)), Some(1.0)),
        ("aggregator oracles", Box::new(|| verify::check_aggregator_oracles(SEED)), Some(30.0)),
        ("robustness", Box::new(|| verify::check_robustness(SEED)), Some(60.0)),
        ("iid deviation bound", Box::new(|| verify::check_deviation_bound(SEED)), Some(60.0)),
        (
            "runtime bound",
            Box::new(|| verify::check_bound_at_runtime(&BoundRunSetup::default(), &[1, 2, 3, 4, 5])),
            Some(120.0),
        ),
        ("batch trend", Box::new(|| verify::check_batch_trend(&trend, &TREND_SEEDS)), Some(600.0)),
        ("normalized advantage", Box::new(|| verify::check_normalized_advantage(&trend, &TREND_SEEDS)), Some(600.0)),
        ("fixture analysis", Box::new(|| verify::check_fixture(&fixture)), Some(1.0)),
        ("determinism", Box::new(|| verify::check_determinism(&verify::determinism_grid())), None),
        ("gradient checks", Box::new(|| verify::check_gradients(10, SEED)), Some(5.0)),
    ];
    let mut failed = 0;
    for (i, (label, run, limit)) in criteria.iter().enumerate() {
        let c = within(run(), *limit);
        failed += usize::from(!c.passed);
        println!("[{:>2}] {label:<22} {}", i + 1, c.line());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
