//! Simulation configuration and its flat `key = value` file format.
//!
//! Keys mirror the field names of [`SimConfig`]; nested parameter groups use
//! dotted keys (`qlearn_params.alpha`, `cost_vector.privacy_cost.l`).
//! Distributions are written as `mean, stddev`. Lines starting with `#` and
//! trailing `# ...` comments are ignored.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classification::ClassifierParams;
use crate::error::{Error, Result};
use crate::model::{CostVector, EventKind, EventModel, Field, Gaussian};
use crate::transmitter::QLearnParams;

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn keyword(self) -> &'static str {
                match self { $($name::$variant => $kw),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($kw => Ok($name::$variant),)+
                    other => Err(Error::config(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(
    /// Wiring between sensors and agents.
    Organization {
        Centralized => "centralized",
        Decentralized => "decentralized",
        Distributed => "distributed",
    }
);

keyword_enum!(
    /// When an agent asks its neighbors for an opinion.
    NeighborCriterion {
        All => "all",
        Outlier => "outlier",
        Confidence => "confidence",
        None => "none",
    }
);

keyword_enum!(
    /// When an agent raises an alarm.
    SupervisorCriterion {
        All => "all",
        Outlier => "outlier",
    }
);

keyword_enum!(
    /// Which ground-truth labels the supervisor returns to agents.
    FeedbackMode {
        Full => "full",
        AlarmOnly => "alarm_only",
        None => "none",
    }
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_sensors: usize,
    pub neighborhood_fraction: f64,
    pub organization: Organization,
    pub event_model: EventModel,
    pub iterations: usize,
    pub learning_enabled: bool,
    pub neighbor_criterion: NeighborCriterion,
    pub supervisor_criterion: SupervisorCriterion,
    pub privacy_preserving_neighbors: bool,
    pub feedback_mode: FeedbackMode,
    pub cost_vector: CostVector,
    pub classifier_params: ClassifierParams,
    pub qlearn_params: QLearnParams,
    pub seed: u64,
    /// Make every neighbor relation mutual after sampling.
    pub symmetric_neighbors: bool,
    /// Opinions below this confidence are answered as unknown.
    pub unknown_threshold: f64,
    /// Threshold of the `confidence` neighbor criterion.
    pub confidence_threshold: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_sensors: 10,
            neighborhood_fraction: 0.2,
            organization: Organization::Distributed,
            event_model: EventModel::default(),
            iterations: 200,
            learning_enabled: true,
            neighbor_criterion: NeighborCriterion::Outlier,
            supervisor_criterion: SupervisorCriterion::Outlier,
            privacy_preserving_neighbors: false,
            feedback_mode: FeedbackMode::Full,
            cost_vector: CostVector::default(),
            classifier_params: ClassifierParams::default(),
            qlearn_params: QLearnParams::default(),
            seed: 0,
            symmetric_neighbors: false,
            unknown_threshold: 0.2,
            confidence_threshold: 0.6,
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be in [0,1], got {v}")))
    }
}

impl SimConfig {
    pub fn num_agents(&self) -> usize {
        match self.organization {
            Organization::Centralized => 1,
            Organization::Decentralized | Organization::Distributed => self.num_sensors,
        }
    }

    /// Neighbor-list length implied by the organization and fraction.
    pub fn neighbors_per_agent(&self) -> usize {
        match self.organization {
            Organization::Distributed => (self.neighborhood_fraction * self.num_agents() as f64).round() as usize,
            _ => 0,
        }
    }

    /// Cost vector seen by the neighbor channel.
    pub fn neighbor_cost_vector(&self) -> CostVector {
        if self.privacy_preserving_neighbors {
            self.cost_vector.privacy_neutral()
        } else {
            self.cost_vector
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sensors == 0 {
            return Err(Error::config("num_sensors must be positive"));
        }
        unit_interval("neighborhood_fraction", self.neighborhood_fraction)?;
        let k = self.neighbors_per_agent();
        if k > 0 && k >= self.num_agents() {
            return Err(Error::config(format!(
                "neighborhood of {k} agents needs more than {} agents",
                self.num_agents()
            )));
        }
        self.event_model.validate()?;
        if let EventKind::FixedCount { total_events } = self.event_model.kind {
            if total_events > self.num_sensors * self.iterations {
                return Err(Error::config(format!(
                    "total_events {total_events} exceeds the {} cells of the grid",
                    self.num_sensors * self.iterations
                )));
            }
        }
        self.cost_vector.validate()?;
        self.classifier_params.validate()?;
        self.qlearn_params.validate()?;
        unit_interval("unknown_threshold", self.unknown_threshold)?;
        unit_interval("confidence_threshold", self.confidence_threshold)?;
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_kv(&text, &path.display().to_string())
    }

    /// Parses a configuration starting from the defaults; `origin` names the
    /// source in error messages.
    pub fn parse_kv(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for (line, key, value) in kv_lines(text, origin)? {
            cfg.set(key, value).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line,
                msg: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(rest) = key.strip_prefix("cost_vector.") {
            let (table, field) = rest
                .split_once('.')
                .ok_or_else(|| Error::config(format!("expected cost_vector.<table>.<field>, got `{key}`")))?;
            let field: Field = field.parse()?;
            let v = parse_num(value)?;
            match table {
                "comm_cost" => self.cost_vector.comm_cost[field.index()] = v,
                "privacy_cost" => self.cost_vector.privacy_cost[field.index()] = v,
                _ => return Err(Error::config(format!("unknown key `{key}`"))),
            }
            return Ok(());
        }
        let cp = &mut self.classifier_params;
        let qp = &mut self.qlearn_params;
        match key {
            "num_sensors" => self.num_sensors = parse_num(value)?,
            "neighborhood_fraction" => self.neighborhood_fraction = parse_num(value)?,
            "organization" => self.organization = value.parse()?,
            "iterations" => self.iterations = parse_num(value)?,
            "learning_enabled" => self.learning_enabled = parse_bool(value)?,
            "neighbor_criterion" => self.neighbor_criterion = value.parse()?,
            "supervisor_criterion" => self.supervisor_criterion = value.parse()?,
            "privacy_preserving_neighbors" => self.privacy_preserving_neighbors = parse_bool(value)?,
            "feedback_mode" => self.feedback_mode = value.parse()?,
            "seed" => self.seed = parse_num(value)?,
            "symmetric_neighbors" => self.symmetric_neighbors = parse_bool(value)?,
            "unknown_threshold" => self.unknown_threshold = parse_num(value)?,
            "confidence_threshold" => self.confidence_threshold = parse_num(value)?,
            "event_model.kind" => {
                self.event_model.kind = match value.trim() {
                    "bernoulli" => EventKind::Bernoulli { p_event: EventModel::default_p_event() },
                    "fixed_count" => EventKind::FixedCount { total_events: 300 },
                    other => return Err(Error::config(format!("unknown event model `{other}`"))),
                }
            }
            "event_model.p_event" => self.event_model.kind = EventKind::Bernoulli { p_event: parse_num(value)? },
            "event_model.total_events" => {
                self.event_model.kind = EventKind::FixedCount { total_events: parse_num(value)? }
            }
            "event_model.normal_dist" => self.event_model.normal_dist = parse_gaussian(value)?,
            "event_model.event_dist" => self.event_model.event_dist = parse_gaussian(value)?,
            "classifier_params.window_size" => cp.window_size = parse_num(value)?,
            "classifier_params.boundary_quantile" => cp.boundary_quantile = parse_num(value)?,
            "classifier_params.confidence_slope" => cp.confidence_slope = parse_num(value)?,
            "classifier_params.min_training_points" => cp.min_training_points = parse_num(value)?,
            "qlearn_params.alpha" => qp.alpha = parse_num(value)?,
            "qlearn_params.epsilon_start" => qp.epsilon_start = parse_num(value)?,
            "qlearn_params.epsilon_min" => qp.epsilon_min = parse_num(value)?,
            "qlearn_params.epsilon_decay" => qp.epsilon_decay = parse_num(value)?,
            "qlearn_params.privacy_weight" => qp.privacy_weight = parse_num(value)?,
            "qlearn_params.failure_penalty" => qp.failure_penalty = parse_num(value)?,
            "qlearn_params.initial_q" => qp.initial_q = parse_num(value)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Serializes every key, in a stable order, such that
    /// `parse_kv(to_kv_string())` reproduces the configuration.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("num_sensors", &self.num_sensors);
        put("neighborhood_fraction", &self.neighborhood_fraction);
        put("organization", &self.organization);
        put("iterations", &self.iterations);
        put("learning_enabled", &self.learning_enabled);
        put("neighbor_criterion", &self.neighbor_criterion);
        put("supervisor_criterion", &self.supervisor_criterion);
        put("privacy_preserving_neighbors", &self.privacy_preserving_neighbors);
        put("feedback_mode", &self.feedback_mode);
        put("seed", &self.seed);
        put("symmetric_neighbors", &self.symmetric_neighbors);
        put("unknown_threshold", &self.unknown_threshold);
        put("confidence_threshold", &self.confidence_threshold);
        match self.event_model.kind {
            EventKind::Bernoulli { p_event } => {
                put("event_model.kind", &"bernoulli");
                put("event_model.p_event", &p_event);
            }
            EventKind::FixedCount { total_events } => {
                put("event_model.kind", &"fixed_count");
                put("event_model.total_events", &total_events);
            }
        }
        let g = |d: Gaussian| format!("{}, {}", d.mean, d.stddev);
        put("event_model.normal_dist", &g(self.event_model.normal_dist));
        put("event_model.event_dist", &g(self.event_model.event_dist));
        for f in Field::ALL {
            put(&format!("cost_vector.comm_cost.{f}"), &self.cost_vector.comm_cost[f.index()]);
        }
        for f in Field::ALL {
            put(&format!("cost_vector.privacy_cost.{f}"), &self.cost_vector.privacy_cost[f.index()]);
        }
        let cp = &self.classifier_params;
        put("classifier_params.window_size", &cp.window_size);
        put("classifier_params.boundary_quantile", &cp.boundary_quantile);
        put("classifier_params.confidence_slope", &cp.confidence_slope);
        put("classifier_params.min_training_points", &cp.min_training_points);
        let qp = &self.qlearn_params;
        put("qlearn_params.alpha", &qp.alpha);
        put("qlearn_params.epsilon_start", &qp.epsilon_start);
        put("qlearn_params.epsilon_min", &qp.epsilon_min);
        put("qlearn_params.epsilon_decay", &qp.epsilon_decay);
        put("qlearn_params.privacy_weight", &qp.privacy_weight);
        put("qlearn_params.failure_penalty", &qp.failure_penalty);
        put("qlearn_params.initial_q", &qp.initial_q);
        out
    }
}

/// Splits a key-value text into `(line number, key, value)` triples.
pub(crate) fn kv_lines<'a>(text: &'a str, origin: &str) -> Result<Vec<(usize, &'a str, &'a str)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push((i + 1, k.trim(), v.trim()));
    }
    Ok(out)
}

pub(crate) fn parse_num<T: FromStr>(s: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| Error::config(format!("invalid number `{}`: {e}", s.trim())))
}

pub(crate) fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(Error::config(format!("invalid boolean `{other}`"))),
    }
}

fn parse_gaussian(s: &str) -> Result<Gaussian> {
    let (m, sd) = s
        .split_once(',')
        .ok_or_else(|| Error::config(format!("expected `mean, stddev`, got `{s}`")))?;
    Ok(Gaussian::new(parse_num(m)?, parse_num(sd)?))
}
