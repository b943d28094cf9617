//! Runs a seeded batch and puts the summary statistics to work: escort
//! time spread, the Anderson-Darling normality check, and a CSV round
//! trip through the same format the CLI writes.

use swarm_escort::engine::ScenarioConfig;
use swarm_escort::harness::{self, anderson_darling_normality};

fn main() {
    let mut cfg = ScenarioConfig::default();
    cfg.seed = 1000;
    let runs = 20;
    println!("running {runs} seeded missions...");
    let records = harness::batch(&cfg, runs);

    let summary = harness::summarize(0.0, &records);
    println!("{summary}");
    if let (Some(lo), Some(hi)) = (summary.min_ticks, summary.max_ticks) {
        println!("escort ticks span [{lo}, {hi}]");
    }

    let ticks: Vec<f64> = records
        .iter()
        .filter(|r| r.outcome == swarm_escort::Outcome::Escorted)
        .map(|r| r.escort_ticks as f64)
        .collect();
    match anderson_darling_normality(&ticks) {
        Ok((a2, p)) => println!(
            "normality of escort times: A2* = {a2:.3}, p = {p:.3} ({} at alpha = 0.01)",
            if p >= 0.01 { "not rejected" } else { "rejected" }
        ),
        Err(e) => println!("normality test undefined: {e}"),
    }

    let mut csv = Vec::new();
    harness::write_run_csv(&mut csv, &records).unwrap();
    println!("\nper-run CSV, first lines:");
    for line in String::from_utf8(csv.clone()).unwrap().lines().take(3) {
        println!("  {line}");
    }
    let parsed = harness::parse_run_csv(&csv[..]).unwrap();
    println!("round trip preserved all {} records: {}", runs, parsed == records);
}
