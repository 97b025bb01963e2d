//! The ten acceptance checks. Each returns a verdict plus the numbers it
//! was decided on.

use std::collections::HashSet;

use privsense::engine::experiments::{Experiment, BASELINE_CRITERIA};
use privsense::engine::stats::{mean, ols_slope, paired_t_test};
use privsense::engine::{simulate, RunOptions, RunRow, SweepCell, SweepTable};
use privsense::network::LedgerChannel;
use privsense::transmitter::{reward, Channel};
use privsense::{
    metrics, Charge, ConfusionCounts, CostVector, Field, FieldMask, NeighborCriterion, Organization, QLearnParams,
    SimConfig, SupervisorCriterion, TransmitterState,
};
use privsense::config::FeedbackMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEEDS: usize = 50;

/// Per-iteration F column; steady-state comparisons average it over a window.
const WINDOW_F: &str = "iter_f_measure";
/// Length of the trailing steady-state window, in iterations.
const STEADY: usize = 50;

/// Per-replication steady-state F: mean per-iteration F over the trailing window.
fn steady_f(cell: &SweepCell) -> Vec<f64> {
    let n = cell.iterations();
    cell.window_means(WINDOW_F, n - STEADY..n)
}

pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome { passed, detail }
    }
}

fn count(xs: impl IntoIterator<Item = bool>) -> usize {
    xs.into_iter().filter(|&b| b).count()
}

/// Configurations exercised by the exact checks (1 and 9).
pub fn audit_configs(base: &SimConfig) -> Vec<SimConfig> {
    let mut out = Vec::new();
    let orgs = [Organization::Centralized, Organization::Decentralized, Organization::Distributed];
    let gates = [
        (NeighborCriterion::Outlier, SupervisorCriterion::Outlier),
        (NeighborCriterion::All, SupervisorCriterion::All),
        (NeighborCriterion::Confidence, SupervisorCriterion::Outlier),
        (NeighborCriterion::None, SupervisorCriterion::All),
    ];
    let feedback = [FeedbackMode::Full, FeedbackMode::AlarmOnly, FeedbackMode::None];
    let mut i = 0u64;
    for org in orgs {
        for (n, s) in gates {
            for learning in [true, false] {
                out.push(SimConfig {
                    organization: org,
                    neighbor_criterion: n,
                    supervisor_criterion: s,
                    learning_enabled: learning,
                    feedback_mode: feedback[i as usize % 3],
                    num_sensors: if i.is_multiple_of(4) { 25 } else { 10 },
                    seed: 1000 + i,
                    ..base.clone()
                });
                i += 1;
            }
        }
    }
    out
}

/// 1. Incremental metrics equal a brute-force recount from the alarm log.
pub fn metrics_oracle(base: &SimConfig) -> Outcome {
    let configs = audit_configs(base);
    let mut mismatches = 0;
    for cfg in &configs {
        let out = simulate(cfg, RunOptions::default()).expect("valid config");
        // the oracle re-derives acceptance from the raw entries
        let required = [Field::Location, Field::Timestep, Field::EventType];
        let triggered: HashSet<(usize, u64)> = out
            .alarm_log
            .entries()
            .iter()
            .filter(|e| required.iter().all(|&f| e.mask.contains(f)))
            .filter_map(|e| Some((e.location?, e.timestep?)))
            .collect();
        let mut c = ConfusionCounts::default();
        for (t, row) in out.record.rows.iter().enumerate() {
            for l in 0..cfg.num_sensors {
                let event = out.ground_truth.is_event(l, t as u64);
                let hit = triggered.contains(&(l, t as u64));
                match (event, hit) {
                    (true, true) => c.tp += 1,
                    (false, true) => c.fp += 1,
                    (false, false) => c.tn += 1,
                    (true, false) => c.fn_ += 1,
                }
            }
            let p = if c.tp + c.fp == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
            let r = if c.tp + c.fn_ == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            let m = metrics(&row.counts());
            if row.counts() != c || m.precision != p || m.recall != r || m.f_measure != f || row.f_measure != f {
                mismatches += 1;
            }
        }
    }
    Outcome::new(mismatches == 0, format!("{} runs audited row by row, {mismatches} mismatching rows", configs.len()))
}

/// 2. Greedy masks after 2000 updates match the brute-force minimizers.
pub fn qlearning_oracle(_base: &SimConfig) -> Outcome {
    let params = QLearnParams {
        alpha: 0.1,
        epsilon_start: 0.3,
        epsilon_min: 0.01,
        epsilon_decay: 0.995,
        privacy_weight: 1.0,
        failure_penalty: 10.0,
        initial_q: 0.0,
    };
    let cv = CostVector::default();
    let cost = |m: FieldMask, ch: Channel| {
        let valid = m.is_superset_of(ch.required_fields());
        cv.mask_comm_cost(m) + params.privacy_weight * cv.mask_privacy_cost(m) + if valid { 0.0 } else { params.failure_penalty }
    };
    let mut detail = Vec::new();
    let mut all = true;
    for ch in [Channel::Neighbor, Channel::Supervisor] {
        let best = (0..64u8)
            .map(|b| FieldMask::from_bits(b).unwrap())
            .min_by(|&a, &b| cost(a, ch).total_cmp(&cost(b, ch)))
            .unwrap();
        let hits = count((0..SEEDS as u64).map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut tx = TransmitterState::new(ch, &params);
            for _ in 0..2000 {
                let m = tx.select_mask(true, &mut rng);
                let charge = Charge { comm: cv.mask_comm_cost(m), privacy: cv.mask_privacy_cost(m) };
                let r = reward(charge, m.is_superset_of(ch.required_fields()), &params);
                tx.update(m, r, &params);
            }
            tx.greedy_mask() == best
        }));
        all &= hits >= 48;
        detail.push(format!("{ch:?} optimum {best}: {hits}/{SEEDS}"));
    }
    Outcome::new(all, detail.join(", "))
}

/// 3. Learning costs accuracy early on and recovers it later, saving privacy from the start.
pub fn calibration(cal: &SweepTable) -> Outcome {
    let on = cal.find(&[("learning_enabled", "true")]).unwrap();
    let off = cal.find(&[("learning_enabled", "false")]).unwrap();
    let n = on.iterations();
    let early = paired_t_test(&on.window_means(WINDOW_F, 0..20), &off.window_means(WINDOW_F, 0..20));
    let late_on = mean(&on.window_means(WINDOW_F, n - STEADY..n));
    let late_off = mean(&off.window_means(WINDOW_F, n - STEADY..n));
    let p_on = on.samples_at("cum_privacy_cost", 19);
    let p_off = off.samples_at("cum_privacy_cost", 19);
    let cheaper = count(p_on.iter().zip(&p_off).map(|(a, b)| a < b));
    let (a, b, c) = (early.mean_diff < 0.0 && early.p_less < 0.05, (late_on - late_off).abs() < 0.05, cheaper >= 45);
    Outcome::new(
        a && b && c,
        format!(
            "(a) early F diff {:+.4} p={:.2e} [{}] (b) late F {late_on:.4} vs {late_off:.4} [{}] (c) cheaper by it 20 in {cheaper}/{SEEDS} [{}]; cumulative F at end {:.4} vs {:.4}",
            early.mean_diff,
            early.p_less,
            ok(a),
            ok(b),
            ok(c),
            mean(&on.final_samples("f_measure")),
            mean(&off.final_samples("f_measure")),
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn per_iteration_mean(cell: &SweepCell, metric: &str) -> Vec<f64> {
    let n = cell.iterations();
    cell.window_means(metric, 0..n)
}

fn param_cell<'a>(t: &'a SweepTable, n: &str, fraction: &str, org: &str) -> &'a SweepCell {
    t.find(&[("num_sensors", n), ("neighborhood_fraction", fraction), ("organization", org)])
        .unwrap_or_else(|| panic!("missing cell {n}/{fraction}/{org}"))
}

const FRACTIONS: [&str; 3] = ["0", "0.2", "0.5"];

/// 4. Alarm traffic depends on population but not on neighborhood size, while neighbor traffic grows with both.
pub fn frequency_structure(params: &SweepTable) -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;
    let mut sup_mean = Vec::new();
    for n in ["10", "50"] {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for f in FRACTIONS {
            let s = per_iteration_mean(param_cell(params, n, f, "distributed"), "supervisor_msgs");
            x.extend(std::iter::repeat_n(f.parse::<f64>().unwrap(), s.len()));
            y.extend(s);
        }
        let fit = ols_slope(&x, &y);
        let flat = fit.p_two_sided >= 0.05;
        passed &= flat;
        notes.push(format!("N={n} supervisor slope {:+.3} p={:.3} [{}]", fit.slope, fit.p_two_sided, ok(flat)));
        sup_mean.push(mean(&y));
    }
    let ratio = sup_mean[1] / sup_mean[0];
    let scaled = (3.0..=7.0).contains(&ratio);
    passed &= scaled;
    notes.push(format!("supervisor 50/10 ratio {ratio:.2} [{}]", ok(scaled)));

    let nb = |n: &str, f: &str| mean(&per_iteration_mean(param_cell(params, n, f, "distributed"), "neighbor_msgs"));
    let zero = nb("10", "0") == 0.0 && nb("50", "0") == 0.0;
    let grid: Vec<Vec<f64>> = ["10", "50"].iter().map(|n| FRACTIONS.iter().map(|f| nb(n, f)).collect()).collect();
    let in_fraction = grid.iter().all(|row| row.windows(2).all(|w| w[1] > w[0]));
    let in_population = (1..3).all(|j| grid[1][j] > grid[0][j]);
    passed &= zero && in_fraction && in_population;
    notes.push(format!(
        "neighbor msgs/iter {grid:.1?}: zero at 0 [{}], increasing in fraction [{}], in population [{}]",
        ok(zero),
        ok(in_fraction),
        ok(in_population)
    ));
    Outcome::new(passed, notes.join("; "))
}

/// 5. With learning, distributed privacy stays under the centralized level.
pub fn privacy_crossover(params: &SweepTable) -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;
    for n in ["10", "50"] {
        for f in ["0.2", "0.5"] {
            let central = param_cell(params, n, f, "centralized").final_samples("cum_privacy_cost");
            let dist = param_cell(params, n, f, "distributed").final_samples("cum_privacy_cost");
            let below = count(dist.iter().zip(&central).map(|(d, c)| d < c));
            let cell_ok = below >= 45;
            passed &= cell_ok;
            notes.push(format!(
                "N={n} f={f}: distributed {:.0} vs centralized {:.0}, below in {below}/{SEEDS} [{}]",
                mean(&dist),
                mean(&central),
                ok(cell_ok)
            ));
        }
    }
    Outcome::new(passed, notes.join("; "))
}

/// 6. Distributed matches centralized accuracy; decentralized falls short.
pub fn performance_parity(params: &SweepTable) -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;
    for n in ["10", "50"] {
        // centralized behaviour does not depend on the fraction axis
        let central = steady_f(param_cell(params, n, "0", "centralized"));
        for f in ["0.2", "0.5"] {
            let t = paired_t_test(&steady_f(param_cell(params, n, f, "distributed")), &central);
            let cell_ok = t.mean_diff.abs() < 0.05 && t.ci_contains_zero();
            passed &= cell_ok;
            notes.push(format!("N={n} f={f}: diff {:+.4} +/- {:.4} [{}]", t.mean_diff, t.ci_half_width, ok(cell_ok)));
        }
        let t = paired_t_test(&steady_f(param_cell(params, n, "0", "distributed")), &central);
        let worse = t.mean_diff < 0.0 && t.p_less < 0.05;
        passed &= worse;
        notes.push(format!("N={n} decentralized diff {:+.4} p={:.2e} [{}]", t.mean_diff, t.p_less, ok(worse)));
    }
    Outcome::new(passed, notes.join("; "))
}

/// 7. Criteria trade-off: privacy (c,o) <= (o,o) <= baseline; F best at (o,o).
pub fn criteria_tradeoff(crit: &SweepTable) -> Outcome {
    let cell = |c: &str| crit.find(&[("criteria", c)]).unwrap();
    let (co, oo, ao, base) =
        (cell("confidence/outlier"), cell("outlier/outlier"), cell("all/outlier"), cell(BASELINE_CRITERIA));
    let priv_ = |c: &SweepCell| c.final_samples("cum_privacy_cost");
    let t1 = paired_t_test(&priv_(co), &priv_(oo));
    let t2 = paired_t_test(&priv_(oo), &priv_(base));
    let p1 = t1.mean_diff < 0.0 && t1.p_less < 0.05;
    let p2 = t2.mean_diff < 0.0 && t2.p_less < 0.05;
    let f_oo = mean(&steady_f(oo));
    let (f_co, f_ao) = (mean(&steady_f(co)), mean(&steady_f(ao)));
    let f1 = f_oo >= f_co;
    let f2 = f_oo >= f_ao;
    Outcome::new(
        p1 && p2 && f1 && f2,
        format!(
            "privacy (c,o) {:.0} < (o,o) {:.0} p={:.2e} [{}], (o,o) < baseline {:.0} p={:.2e} [{}]; F (o,o) {f_oo:.4} vs (c,o) {f_co:.4} [{}] vs (a,o) {f_ao:.4} [{}]",
            mean(&priv_(co)),
            mean(&priv_(oo)),
            t1.p_less,
            ok(p1),
            mean(&priv_(base)),
            t2.p_less,
            ok(p2),
            ok(f1),
            ok(f2)
        ),
    )
}

/// 8. Learning cuts privacy for non-private neighbor traffic only.
pub fn profile_comparison(prof: &SweepTable) -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;
    let neighbor_privacy = |c: &SweepCell| -> Vec<f64> {
        c.runs.iter().map(|r| r.rows.iter().map(|row| row.neighbor_privacy_cost).sum()).collect()
    };
    for name in ["NP-OO", "NP-OA", "NP-AO", "NP-AA"] {
        let on = prof.find(&[("profile", name), ("learning_enabled", "true")]).unwrap();
        let off = prof.find(&[("profile", name), ("learning_enabled", "false")]).unwrap();
        let t = paired_t_test(&on.final_samples("cum_privacy_cost"), &off.final_samples("cum_privacy_cost"));
        let reduced = t.mean_diff < 0.0 && t.p_less < 0.05;
        passed &= reduced;
        notes.push(format!("{name} {:+.1} p={:.1e} [{}]", t.mean_diff, t.p_less, ok(reduced)));
    }
    for name in ["PP-OO", "NP-NO", "NP-NA"] {
        let on = prof.find(&[("profile", name), ("learning_enabled", "true")]).unwrap();
        let off = prof.find(&[("profile", name), ("learning_enabled", "false")]).unwrap();
        let diff: Vec<f64> = neighbor_privacy(on).iter().zip(neighbor_privacy(off)).map(|(a, b)| b - a).collect();
        let zero = diff.iter().all(|&d| d == 0.0);
        passed &= zero;
        notes.push(format!("{name} neighbor reduction {:.1} [{}]", mean(&diff), ok(zero)));
    }
    Outcome::new(passed, notes.join("; "))
}

/// 9. Bookkeeping is exact and reruns are byte-identical.
pub fn conservation(base: &SimConfig) -> Outcome {
    let configs = audit_configs(base);
    let mut failures = Vec::new();
    for cfg in &configs {
        let out = simulate(cfg, RunOptions { keep_receipts: true }).expect("valid config");
        let receipts = out.receipts.as_ref().unwrap();
        let mut by_channel = [(0u64, 0.0f64, 0.0f64); 4];
        for r in receipts {
            let i = match r.channel.unwrap() {
                LedgerChannel::Uplink => 0,
                LedgerChannel::Neighbor => 1,
                LedgerChannel::Supervisor => 2,
                LedgerChannel::Response => 3,
            };
            by_channel[i].0 += 1;
            by_channel[i].1 += r.charge.comm;
            by_channel[i].2 += r.charge.privacy;
        }
        let rows = &out.record.rows;
        let sum = |f: fn(&RunRow) -> f64| rows.iter().map(f).sum::<f64>();
        let ledger = [
            (rows.iter().map(|r| r.uplink_msgs).sum::<u64>(), sum(|r| r.uplink_comm_cost), sum(|r| r.uplink_privacy_cost)),
            (rows.iter().map(|r| r.neighbor_msgs).sum(), sum(|r| r.neighbor_comm_cost), sum(|r| r.neighbor_privacy_cost)),
            (rows.iter().map(|r| r.supervisor_msgs).sum(), sum(|r| r.supervisor_comm_cost), sum(|r| r.supervisor_privacy_cost)),
            (0, 0.0, 0.0),
        ];
        // responses are ledger-only (no receipts are logged for them)
        if by_channel[..3] != ledger[..3] {
            failures.push(format!("seed {} ledger {:?} receipts {:?}", cfg.seed, &ledger[..3], &by_channel[..3]));
        }
        let total = rows.last().map_or(0, |r| r.counts().total());
        if total != (cfg.num_sensors * cfg.iterations) as u64 {
            failures.push(format!("seed {} confusion total {total}", cfg.seed));
        }
        let bytes = |c: &SimConfig| {
            let mut buf = Vec::new();
            privsense::run_simulation(c).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        if bytes(cfg) != bytes(cfg) {
            failures.push(format!("seed {} not reproducible", cfg.seed));
        }
    }
    Outcome::new(failures.is_empty(), format!("{} runs; {}", configs.len(), if failures.is_empty() { "all exact".into() } else { failures.join("; ") }))
}

/// 10. One agent over all sensors with full feedback reaches F > 0.9 by iteration 50.
pub fn classifier_gate(base: &SimConfig) -> Outcome {
    let hits = count((0..SEEDS as u64).map(|seed| {
        let cfg = SimConfig {
            organization: Organization::Centralized,
            neighbor_criterion: NeighborCriterion::None,
            supervisor_criterion: SupervisorCriterion::Outlier,
            feedback_mode: FeedbackMode::Full,
            learning_enabled: false,
            iterations: 50,
            seed,
            ..base.clone()
        };
        let r = privsense::run_simulation(&cfg).unwrap();
        r.last().unwrap().f_measure > 0.9
    }));
    Outcome::new(hits >= 45, format!("F > 0.9 at iteration 50 in {hits}/{SEEDS} seeds"))
}

pub fn run_experiment(e: Experiment, base: &SimConfig) -> SweepTable {
    e.run(base, SEEDS).expect("experiment runs")
}
