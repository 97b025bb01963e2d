//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod criteria;

use std::time::Instant;

use criteria::Outcome;
use privsense::engine::experiments::Experiment;
use privsense::SimConfig;

fn report(id: usize, name: &str, start: Instant, o: Outcome) -> bool {
    let verdict = if o.passed { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {name}: {verdict} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
    o.passed
}

fn main() {
    let base = SimConfig::default();
    let mut results = Vec::new();

    let t = Instant::now();
    results.push(report(1, "metrics oracle", t, criteria::metrics_oracle(&base)));
    let t = Instant::now();
    results.push(report(2, "q-learning oracle", t, criteria::qlearning_oracle(&base)));

    let t = Instant::now();
    let cal = criteria::run_experiment(Experiment::Calibration, &base);
    results.push(report(3, "calibration", t, criteria::calibration(&cal)));

    let t = Instant::now();
    let params = criteria::run_experiment(Experiment::Parameters, &base);
    results.push(report(4, "frequency structure", t, criteria::frequency_structure(&params)));
    let t = Instant::now();
    results.push(report(5, "privacy crossover", t, criteria::privacy_crossover(&params)));
    let t = Instant::now();
    results.push(report(6, "performance parity", t, criteria::performance_parity(&params)));

    let t = Instant::now();
    let crit = criteria::run_experiment(Experiment::Criteria, &base);
    results.push(report(7, "criteria trade-off", t, criteria::criteria_tradeoff(&crit)));

    let t = Instant::now();
    let prof = criteria::run_experiment(Experiment::Profiles, &base);
    results.push(report(8, "profile comparison", t, criteria::profile_comparison(&prof)));

    let t = Instant::now();
    results.push(report(9, "conservation", t, criteria::conservation(&base)));
    let t = Instant::now();
    results.push(report(10, "classifier gate", t, criteria::classifier_gate(&base)));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
