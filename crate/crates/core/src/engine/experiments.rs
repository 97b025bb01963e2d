//! The four canned experiments, each a sweep over a fixed set of axes.

use std::fmt;
use std::str::FromStr;

use crate::agent::profile_catalog;
use crate::config::{Organization, SimConfig};
use crate::engine::sweep::{run_sweep, Axis, SweepSpec, SweepTable};
use crate::error::{Error, Result};

pub const DEFAULT_REPLICATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Learning on vs off in the distributed organization.
    Calibration,
    /// Population size x neighborhood fraction x organization.
    Parameters,
    /// Transmission criteria pairs plus the all/all baseline.
    Criteria,
    /// Catalog profiles x learning toggle.
    Profiles,
}

impl Experiment {
    pub const ALL: [Experiment; 4] =
        [Experiment::Calibration, Experiment::Parameters, Experiment::Criteria, Experiment::Profiles];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Calibration => "calibration",
            Experiment::Parameters => "parameters",
            Experiment::Criteria => "criteria",
            Experiment::Profiles => "profiles",
        }
    }

    pub fn spec(self, base: &SimConfig, replications: usize) -> SweepSpec {
        match self {
            Experiment::Calibration => calibration_spec(base, replications),
            Experiment::Parameters => parameters_spec(base, replications),
            Experiment::Criteria => criteria_spec(base, replications),
            Experiment::Profiles => profiles_spec(base, replications),
        }
    }

    pub fn run(self, base: &SimConfig, replications: usize) -> Result<SweepTable> {
        run_sweep(&self.spec(base, replications))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown experiment `{s}`")))
    }
}

/// Baseline "no classification" gate pair: everything goes everywhere.
pub const BASELINE_CRITERIA: &str = "all/all";
pub const CRITERIA_PAIRS: [&str; 3] = ["all/outlier", "outlier/outlier", "confidence/outlier"];

pub fn calibration_spec(base: &SimConfig, replications: usize) -> SweepSpec {
    let base = SimConfig { organization: Organization::Distributed, ..base.clone() };
    SweepSpec::new(base, vec![Axis::new("learning_enabled", ["true", "false"])], replications)
}

pub fn parameters_spec(base: &SimConfig, replications: usize) -> SweepSpec {
    let base = SimConfig { learning_enabled: true, ..base.clone() };
    SweepSpec::new(
        base,
        vec![
            Axis::new("num_sensors", [10, 50]),
            Axis::new("neighborhood_fraction", ["0", "0.2", "0.5"]),
            Axis::new("organization", ["centralized", "distributed"]),
        ],
        replications,
    )
}

pub fn criteria_spec(base: &SimConfig, replications: usize) -> SweepSpec {
    let base = SimConfig { organization: Organization::Distributed, ..base.clone() };
    let mut pairs: Vec<&str> = CRITERIA_PAIRS.to_vec();
    pairs.push(BASELINE_CRITERIA);
    SweepSpec::new(base, vec![Axis::new("criteria", pairs)], replications)
}

pub fn profiles_spec(base: &SimConfig, replications: usize) -> SweepSpec {
    let base = SimConfig {
        organization: Organization::Distributed,
        num_sensors: 10,
        neighborhood_fraction: 0.2,
        ..base.clone()
    };
    let names: Vec<&str> = profile_catalog().iter().map(|p| p.name).collect();
    SweepSpec::new(
        base,
        vec![Axis::new("profile", names), Axis::new("learning_enabled", ["true", "false"])],
        replications,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("heatmap".parse::<Experiment>().is_err());
    }

    #[test]
    fn grids_have_expected_sizes() {
        let b = SimConfig::default();
        assert_eq!(Experiment::Calibration.spec(&b, 2).cells().len(), 2);
        assert_eq!(Experiment::Parameters.spec(&b, 2).cells().len(), 12);
        assert_eq!(Experiment::Criteria.spec(&b, 2).cells().len(), 4);
        assert_eq!(Experiment::Profiles.spec(&b, 2).cells().len(), 20);
        for e in Experiment::ALL {
            e.spec(&b, 2).validate().unwrap();
        }
    }

    #[test]
    fn parameters_neighbor_traffic_vanishes_without_edges() {
        let b = SimConfig { iterations: 15, ..SimConfig::default() };
        let t = Experiment::Parameters.run(&b, 2).unwrap();
        for cell in t.cells.iter().filter(|c| c.value("neighborhood_fraction") == Some("0")) {
            assert!(cell.runs.iter().all(|r| r.rows.iter().all(|row| row.neighbor_msgs == 0)));
        }
    }
}
