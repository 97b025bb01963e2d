//! Replicated parameter sweeps.
//!
//! A sweep file uses the configuration syntax with three kinds of keys:
//!
//! ```text
//! replications = 50
//! base.num_sensors = 10          # any configuration key, prefixed with `base.`
//! axis.neighborhood_fraction = 0, 0.2, 0.5
//! axis.criteria = outlier/outlier; confidence/outlier
//! axis.profile = PP-OO, NP-AA
//! ```
//!
//! Axis values are separated by `;` when the line contains one, otherwise by
//! `,`. Besides configuration keys, `criteria` (`neighbor/supervisor`) and
//! `profile` (a catalog name) are accepted. Cells are the cartesian product
//! of the axes in file order; replication `i` of every cell uses seed
//! `base.seed + i`, so cells are paired by replication index.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::agent::{apply_profile, find_profile};
use crate::config::{kv_lines, parse_num, SimConfig};
use crate::engine::stats::{estimate, Estimate};
use crate::engine::{run_simulation, RunRecord, RunRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn new<S: ToString>(key: &str, values: impl IntoIterator<Item = S>) -> Self {
        Axis { key: key.to_string(), values: values.into_iter().map(|v| v.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub axes: Vec<Axis>,
    pub replications: usize,
}

/// Applies one axis assignment to a configuration.
pub fn apply_axis(config: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "criteria" => {
            let (n, s) = value
                .split_once('/')
                .ok_or_else(|| Error::config(format!("criteria must be `neighbor/supervisor`, got `{value}`")))?;
            config.neighbor_criterion = n.trim().parse()?;
            config.supervisor_criterion = s.trim().parse()?;
        }
        "profile" => {
            let p = find_profile(value.trim()).ok_or_else(|| Error::config(format!("unknown profile `{value}`")))?;
            *config = apply_profile(&p, config);
        }
        _ => config.set(key, value)?,
    }
    Ok(())
}

impl SweepSpec {
    pub fn new(base: SimConfig, axes: Vec<Axis>, replications: usize) -> Self {
        SweepSpec { base, axes, replications }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut spec = SweepSpec { base: SimConfig::default(), axes: Vec::new(), replications: 50 };
        for (line, key, value) in kv_lines(text, origin)? {
            let at = |e: Error| Error::Parse { path: origin.to_string(), line, msg: e.to_string() };
            if key == "replications" {
                spec.replications = parse_num(value).map_err(at)?;
            } else if let Some(k) = key.strip_prefix("base.") {
                spec.base.set(k, value).map_err(at)?;
            } else if let Some(k) = key.strip_prefix("axis.") {
                let sep = if value.contains(';') { ';' } else { ',' };
                let values: Vec<String> =
                    value.split(sep).map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
                // reject bad values now rather than mid-sweep
                for v in &values {
                    apply_axis(&mut spec.base.clone(), k, v).map_err(at)?;
                }
                spec.axes.push(Axis { key: k.to_string(), values });
            } else {
                return Err(at(Error::config(format!("unknown sweep key `{key}`"))));
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return Err(Error::config(format!("axis `{}` has no values", a.key)));
        }
        for cell in self.cells() {
            self.cell_config(&cell)?.validate()?;
        }
        Ok(())
    }

    /// Every combination of axis values, first axis slowest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for axis in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((axis.key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }

    pub fn cell_config(&self, cell: &[(String, String)]) -> Result<SimConfig> {
        let mut c = self.base.clone();
        for (k, v) in cell {
            apply_axis(&mut c, k, v)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub assignment: Vec<(String, String)>,
    pub config: SimConfig,
    /// One record per replication, in replication order.
    pub runs: Vec<RunRecord>,
}

impl SweepCell {
    pub fn value(&self, key: &str) -> Option<&str> {
        self.assignment.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `metric` at `iteration` across replications.
    pub fn samples_at(&self, metric: &str, iteration: usize) -> Vec<f64> {
        let i = RunRow::metric_index(metric).unwrap_or_else(|| panic!("unknown metric `{metric}`"));
        self.runs.iter().map(|r| r.rows[iteration].values()[i]).collect()
    }

    /// `metric` at the last iteration across replications.
    pub fn final_samples(&self, metric: &str) -> Vec<f64> {
        self.samples_at(metric, self.iterations() - 1)
    }

    /// Per-replication mean of `metric` over iterations `range`.
    pub fn window_means(&self, metric: &str, range: std::ops::Range<usize>) -> Vec<f64> {
        let i = RunRow::metric_index(metric).unwrap_or_else(|| panic!("unknown metric `{metric}`"));
        self.runs
            .iter()
            .map(|r| {
                let rows = &r.rows[range.clone()];
                rows.iter().map(|row| row.values()[i]).sum::<f64>() / rows.len() as f64
            })
            .collect()
    }

    pub fn iterations(&self) -> usize {
        self.runs.first().map_or(0, RunRecord::len)
    }

    /// Mean and CI of every metric at `iteration`.
    pub fn summary_at(&self, iteration: usize) -> Vec<Estimate> {
        RunRow::METRICS.iter().map(|m| estimate(&self.samples_at(m, iteration))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis_keys: Vec<String>,
    pub replications: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    /// First cell whose assignment includes every `(key, value)` given.
    pub fn find(&self, wanted: &[(&str, &str)]) -> Option<&SweepCell> {
        self.cells.iter().find(|c| wanted.iter().all(|(k, v)| c.value(k) == Some(v)))
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axis_keys.clone();
        h.push("iteration".into());
        h.push("replications".into());
        h.push("ci_degenerate".into());
        for m in RunRow::METRICS {
            h.push(format!("{m}_mean"));
            h.push(format!("{m}_ci"));
        }
        h
    }

    fn write_rows<W: Write>(&self, out: W, final_only: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for cell in &self.cells {
            let n = cell.iterations();
            let iters = if final_only { n.saturating_sub(1)..n } else { 0..n };
            for it in iters {
                let mut rec: Vec<String> = cell.assignment.iter().map(|(_, v)| v.clone()).collect();
                rec.push(it.to_string());
                rec.push(self.replications.to_string());
                rec.push((self.replications < 2).to_string());
                for e in cell.summary_at(it) {
                    rec.push(e.mean.to_string());
                    rec.push(e.ci_half_width.to_string());
                }
                w.write_record(rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per cell per iteration.
    pub fn write_sweep_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_rows(out, false)
    }

    /// One row per cell, last iteration only.
    pub fn write_final_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_rows(out, true)
    }
}

/// Runs every (cell, replication) pair in parallel and merges the results
/// in cell-then-replication order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let cells = spec.cells();
    let configs: Vec<SimConfig> = cells.iter().map(|c| spec.cell_config(c)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..spec.replications).map(move |r| (c, r))).collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cfg = SimConfig { seed: configs[c].seed.wrapping_add(r as u64), ..configs[c].clone() };
            run_simulation(&cfg)
        })
        .collect::<Result<_>>()?;
    let mut records = records.into_iter();
    let cells = cells
        .into_iter()
        .zip(configs)
        .map(|(assignment, config)| SweepCell {
            assignment,
            config,
            runs: records.by_ref().take(spec.replications).collect(),
        })
        .collect();
    Ok(SweepTable {
        axis_keys: spec.axes.iter().map(|a| a.key.clone()).collect(),
        replications: spec.replications,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{NeighborCriterion, Organization, SupervisorCriterion};
    use crate::engine::stats::mean;

    fn small_base() -> SimConfig {
        SimConfig { iterations: 20, ..SimConfig::default() }
    }

    #[test]
    fn parses_axes_and_base() {
        let spec = SweepSpec::parse(
            "replications = 3\nbase.iterations = 5\naxis.num_sensors = 10, 50\naxis.criteria = all/outlier; outlier/all\naxis.profile = PP-OO\n",
            "t",
        )
        .unwrap();
        assert_eq!(spec.replications, 3);
        assert_eq!(spec.base.iterations, 5);
        assert_eq!(spec.cells().len(), 4);
        let c = spec.cell_config(&spec.cells()[1]).unwrap();
        // profile applied last overrides the criteria axis
        assert_eq!(c.neighbor_criterion, NeighborCriterion::Outlier);
        assert!(c.privacy_preserving_neighbors);
    }

    #[test]
    fn bad_sweep_lines_name_the_line() {
        let err = SweepSpec::parse("replications = 2\naxis.organization = centralized, star\n", "s.txt").unwrap_err();
        assert!(err.to_string().starts_with("s.txt:2:"), "{err}");
        assert!(SweepSpec::parse("replications = 0\n", "s").unwrap_err().is_config());
    }

    #[test]
    fn criteria_axis_sets_both_gates() {
        let mut c = SimConfig::default();
        apply_axis(&mut c, "criteria", "confidence/all").unwrap();
        assert_eq!((c.neighbor_criterion, c.supervisor_criterion), (NeighborCriterion::Confidence, SupervisorCriterion::All));
    }

    #[test]
    fn single_replication_has_degenerate_ci() {
        let spec = SweepSpec::new(small_base(), vec![], 1);
        let t = run_sweep(&spec).unwrap();
        let e = t.cells[0].summary_at(19);
        assert!(e.iter().all(|e| e.degenerate && e.ci_half_width == 0.0));
        let mut buf = Vec::new();
        t.write_final_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("19,1,true,"));
    }

    #[test]
    fn deterministic_outcomes_have_zero_width() {
        // no events, constant readings and learning off: every replication is identical
        let mut base = small_base();
        base.event_model = crate::model::EventModel::bernoulli(0.0);
        base.event_model.normal_dist = crate::model::Gaussian::new(0.0, 0.0);
        base.learning_enabled = false;
        let t = run_sweep(&SweepSpec::new(base, vec![], 5)).unwrap();
        for e in t.cells[0].summary_at(19) {
            assert_eq!(e.ci_half_width, 0.0);
        }
    }

    #[test]
    fn replications_match_individual_runs() {
        let spec = SweepSpec::new(small_base(), vec![Axis::new("organization", ["centralized", "distributed"])], 3);
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.cells.len(), 2);
        for cell in &t.cells {
            for (r, run) in cell.runs.iter().enumerate() {
                let cfg = SimConfig { seed: r as u64, ..cell.config.clone() };
                assert_eq!(run, &run_simulation(&cfg).unwrap());
            }
        }
        assert_eq!(t.find(&[("organization", "centralized")]).unwrap().config.organization, Organization::Centralized);
    }

    #[test]
    fn event_count_mean_sits_inside_its_ci() {
        // Binomial(10, 0.2) per iteration: mean 2, sd 1.265; tp + fn counts events
        let mut base = small_base();
        base.iterations = 200;
        base.event_model = crate::model::EventModel::bernoulli(0.2);
        base.learning_enabled = false;
        let t = run_sweep(&SweepSpec::new(base, vec![], 50)).unwrap();
        let cell = &t.cells[0];
        let mut covered = 0;
        for it in 0..200 {
            let events: Vec<f64> = cell
                .runs
                .iter()
                .map(|r| {
                    let now = r.rows[it].tp + r.rows[it].fn_;
                    let before = if it == 0 { 0 } else { r.rows[it - 1].tp + r.rows[it - 1].fn_ };
                    (now - before) as f64
                })
                .collect();
            let e = estimate(&events);
            if (e.mean - 2.0).abs() <= e.ci_half_width {
                covered += 1;
            }
        }
        assert!(covered >= 180, "{covered}");
        assert!((mean(&cell.final_samples("tp")) + mean(&cell.final_samples("fn")) - 400.0).abs() < 20.0);
    }
}
