//! Domain types: message fields and masks, cost vectors, event models,
//! ground truth and measurements.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};

/// Event-type id carried by every measurement of a run.
pub const EVENT_TYPE: u32 = 0;
/// Sensor-type id carried by every measurement of a run.
pub const SENSOR_TYPE: u32 = 0;

/// One of the six protocol fields. The discriminant is the bit index used
/// in [`FieldMask`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    AgentId = 0,
    Location = 1,
    Value = 2,
    Timestep = 3,
    EventType = 4,
    SensorType = 5,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::AgentId,
        Field::Location,
        Field::Value,
        Field::Timestep,
        Field::EventType,
        Field::SensorType,
    ];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::AgentId => "a_ID",
            Field::Location => "l",
            Field::Value => "x",
            Field::Timestep => "t",
            Field::EventType => "e_TYPE",
            Field::SensorType => "s_TYPE",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .iter()
            .copied()
            .find(|field| field.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown message field `{s}`")))
    }
}

/// A subset of the six message fields, encoded in the low six bits
/// (a_ID = bit 0, l = 1, x = 2, t = 3, e_TYPE = 4, s_TYPE = 5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FieldMask(u8);

impl FieldMask {
    pub const EMPTY: FieldMask = FieldMask(0);
    pub const FULL: FieldMask = FieldMask(0b11_1111);
    /// Number of distinct masks.
    pub const COUNT: usize = 64;

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits <= Self::FULL.0).then_some(FieldMask(bits))
    }

    pub fn from_fields(fields: &[Field]) -> Self {
        fields.iter().fold(Self::EMPTY, |m, &f| m.with(f))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, field: Field) -> bool {
        self.0 & field.bit() != 0
    }

    #[must_use]
    pub fn with(self, field: Field) -> Self {
        FieldMask(self.0 | field.bit())
    }

    #[must_use]
    pub fn without(self, field: Field) -> Self {
        FieldMask(self.0 & !field.bit())
    }

    pub fn is_superset_of(self, other: FieldMask) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn fields(self) -> impl Iterator<Item = Field> {
        Field::ALL.into_iter().filter(move |f| self.contains(*f))
    }

    /// All 64 masks in integer order.
    pub fn all() -> impl Iterator<Item = FieldMask> {
        (0..Self::COUNT as u8).map(FieldMask)
    }
}

impl fmt::Display for FieldMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, field) in self.fields().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(field.name())?;
        }
        f.write_str("}")
    }
}

impl FromStr for FieldMask {
    type Err = Error;

    /// Accepts either the integer encoding or a `{l,x,t}` style field list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(bits) = s.parse::<u8>() {
            return FieldMask::from_bits(bits)
                .ok_or_else(|| Error::config(format!("mask {bits} out of range 0..=63")));
        }
        let inner = s.trim_start_matches('{').trim_end_matches('}');
        inner
            .split([',', '|'])
            .filter(|p| !p.trim().is_empty())
            .try_fold(FieldMask::EMPTY, |m, p| Ok(m.with(p.parse()?)))
    }
}

/// Why a message is sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Raw sensor reading forwarded to the owning agent.
    Report,
    OpinionRequest,
    Alarm,
}

/// Subsettable protocol message. A field is `Some` iff its bit is set in
/// `present`; [`Message::from_measurement`] is the only constructor that
/// fills values, so the two cannot drift apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    present: FieldMask,
    a_id: Option<usize>,
    l: Option<usize>,
    x: Option<f64>,
    t: Option<u64>,
    e_type: Option<u32>,
    s_type: Option<u32>,
    purpose: Purpose,
}

impl Message {
    /// Builds a message carrying exactly the fields of `mask`, taken from `m`.
    pub fn from_measurement(m: &Measurement, agent: usize, mask: FieldMask, purpose: Purpose) -> Self {
        let pick = |f: Field| mask.contains(f);
        Message {
            present: mask,
            a_id: pick(Field::AgentId).then_some(agent),
            l: pick(Field::Location).then_some(m.location),
            x: pick(Field::Value).then_some(m.value),
            t: pick(Field::Timestep).then_some(m.timestep),
            e_type: pick(Field::EventType).then_some(m.event_type),
            s_type: pick(Field::SensorType).then_some(m.sensor_type),
            purpose,
        }
    }

    pub fn present(&self) -> FieldMask {
        self.present
    }
    pub fn purpose(&self) -> Purpose {
        self.purpose
    }
    pub fn agent_id(&self) -> Option<usize> {
        self.a_id
    }
    pub fn location(&self) -> Option<usize> {
        self.l
    }
    pub fn value(&self) -> Option<f64> {
        self.x
    }
    pub fn timestep(&self) -> Option<u64> {
        self.t
    }
    pub fn event_type(&self) -> Option<u32> {
        self.e_type
    }
    pub fn sensor_type(&self) -> Option<u32> {
        self.s_type
    }
}

/// Per-field communication and privacy cost, indexed by [`Field::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub comm_cost: [f64; 6],
    pub privacy_cost: [f64; 6],
}

impl Default for CostVector {
    /// Unit communication cost everywhere; only the location is privacy sensitive.
    fn default() -> Self {
        let mut privacy_cost = [0.0; 6];
        privacy_cost[Field::Location.index()] = 1.0;
        CostVector { comm_cost: [1.0; 6], privacy_cost }
    }
}

impl CostVector {
    pub fn validate(&self) -> Result<()> {
        for f in Field::ALL {
            let (c, p) = (self.comm_cost[f.index()], self.privacy_cost[f.index()]);
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::config(format!("comm_cost[{f}] must be > 0, got {c}")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::config(format!("privacy_cost[{f}] must be >= 0, got {p}")));
            }
        }
        Ok(())
    }

    pub fn mask_comm_cost(&self, mask: FieldMask) -> f64 {
        mask.fields().map(|f| self.comm_cost[f.index()]).sum()
    }

    pub fn mask_privacy_cost(&self, mask: FieldMask) -> f64 {
        mask.fields().map(|f| self.privacy_cost[f.index()]).sum()
    }

    /// Same cost vector with every privacy cost set to zero.
    #[must_use]
    pub fn privacy_neutral(&self) -> Self {
        CostVector { comm_cost: self.comm_cost, privacy_cost: [0.0; 6] }
    }
}

pub fn message_comm_cost(m: &Message, cv: &CostVector) -> f64 {
    cv.mask_comm_cost(m.present)
}

pub fn message_privacy_cost(m: &Message, cv: &CostVector) -> f64 {
    cv.mask_privacy_cost(m.present)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub stddev: f64,
}

impl Gaussian {
    pub const fn new(mean: f64, stddev: f64) -> Self {
        Gaussian { mean, stddev }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.stddev == 0.0 {
            return self.mean;
        }
        // validated at config time
        Normal::new(self.mean, self.stddev)
            .expect("finite stddev")
            .sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    /// Every (location, timestep) cell is an event independently with `p_event`.
    Bernoulli { p_event: f64 },
    /// Exactly `total_events` cells, drawn uniformly without replacement.
    FixedCount { total_events: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventModel {
    pub kind: EventKind,
    pub normal_dist: Gaussian,
    pub event_dist: Gaussian,
}

impl Default for EventModel {
    fn default() -> Self {
        EventModel {
            kind: EventKind::Bernoulli { p_event: Self::default_p_event() },
            normal_dist: Gaussian::new(0.0, 1.0),
            event_dist: Gaussian::new(5.0, 1.0),
        }
    }
}

impl EventModel {
    pub const fn default_p_event() -> f64 {
        0.5
    }

    pub fn bernoulli(p_event: f64) -> Self {
        EventModel { kind: EventKind::Bernoulli { p_event }, ..Self::default() }
    }

    pub fn fixed_count(total_events: usize) -> Self {
        EventModel { kind: EventKind::FixedCount { total_events }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            // p = 0 and p = 1 are degenerate but well defined
            EventKind::Bernoulli { p_event } if !(0.0..=1.0).contains(&p_event) => {
                return Err(Error::config(format!("p_event must be in [0,1], got {p_event}")));
            }
            EventKind::FixedCount { total_events: 0 } => {
                return Err(Error::config("total_events must be positive"));
            }
            _ => {}
        }
        for (name, d) in [("normal_dist", self.normal_dist), ("event_dist", self.event_dist)] {
            if !d.mean.is_finite() || !d.stddev.is_finite() || d.stddev < 0.0 {
                return Err(Error::config(format!("{name} must have finite mean and stddev >= 0")));
            }
        }
        Ok(())
    }
}

/// Event flag per (location, timestep), stored location-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    locations: usize,
    timesteps: usize,
    cells: Vec<bool>,
}

impl GroundTruth {
    pub fn from_cells(locations: usize, timesteps: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), locations * timesteps, "grid shape mismatch");
        GroundTruth { locations, timesteps, cells }
    }

    pub fn locations(&self) -> usize {
        self.locations
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn is_event(&self, l: usize, t: u64) -> bool {
        self.cells[l * self.timesteps + t as usize]
    }

    pub fn event_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn events_at(&self, t: u64) -> usize {
        (0..self.locations).filter(|&l| self.is_event(l, t)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub location: usize,
    pub value: f64,
    pub timestep: u64,
    pub event_type: u32,
    pub sensor_type: u32,
}

/// A neighbor's answer to an opinion request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opinion {
    pub verdict: Vote,
    pub confidence: f64,
}

impl Opinion {
    /// Voting weight; unknown opinions carry none.
    pub fn weight(&self) -> f64 {
        match self.verdict {
            Vote::Unknown => 0.0,
            _ => self.confidence,
        }
    }
}

pub fn generate_ground_truth<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<GroundTruth> {
    let (n, iters) = (config.num_sensors, config.iterations);
    let cells = match config.event_model.kind {
        EventKind::Bernoulli { p_event } => (0..n * iters).map(|_| rng.random_bool(p_event)).collect(),
        EventKind::FixedCount { total_events } => {
            if total_events > n * iters {
                return Err(Error::config(format!(
                    "total_events {total_events} exceeds grid size {}",
                    n * iters
                )));
            }
            let mut cells = vec![false; n * iters];
            for i in index::sample(rng, n * iters, total_events) {
                cells[i] = true;
            }
            cells
        }
    };
    Ok(GroundTruth::from_cells(n, iters, cells))
}

pub fn sample_measurement<R: Rng + ?Sized>(
    gt: &GroundTruth,
    l: usize,
    t: u64,
    model: &EventModel,
    rng: &mut R,
) -> Measurement {
    let dist = if gt.is_event(l, t) { model.event_dist } else { model.normal_dist };
    Measurement {
        location: l,
        value: dist.sample(rng),
        timestep: t,
        event_type: EVENT_TYPE,
        sensor_type: SENSOR_TYPE,
    }
}
