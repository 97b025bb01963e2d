//! Alarm logging, ground-truth feedback and accuracy bookkeeping.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::classification::Label;
use crate::config::FeedbackMode;
use crate::error::Result;
use crate::model::{FieldMask, GroundTruth, Message, Purpose};
use crate::network::Charge;
use crate::transmitter::is_valid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmEntry {
    pub mask: FieldMask,
    pub location: Option<usize>,
    pub timestep: Option<u64>,
    pub event_type: Option<u32>,
    pub value: Option<f64>,
    pub charge: Charge,
    pub accepted: bool,
}

/// Every alarm received, accepted or not, in arrival order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlarmLog {
    entries: Vec<AlarmEntry>,
}

impl AlarmLog {
    pub fn entries(&self) -> &[AlarmEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `t,l,mask,comm_cost,privacy_cost,accepted`; absent fields are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "l", "mask", "comm_cost", "privacy_cost", "accepted"])?;
        for e in &self.entries {
            w.write_record([
                opt(e.timestep.map(|t| t.to_string())),
                opt(e.location.map(|l| l.to_string())),
                e.mask.bits().to_string(),
                e.charge.comm.to_string(),
                e.charge.privacy.to_string(),
                e.accepted.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and F-measure; any 0/0 is 0.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let precision = ratio(c.tp as f64, (c.tp + c.fp) as f64);
    let recall = ratio(c.tp as f64, (c.tp + c.fn_) as f64);
    let f_measure = ratio(2.0 * precision * recall, precision + recall);
    Metrics { precision, recall, f_measure }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Supervisor {
    num_locations: usize,
    log: AlarmLog,
    triggered: HashSet<(usize, u64)>,
    counts: ConfusionCounts,
}

impl Supervisor {
    pub fn new(num_locations: usize) -> Self {
        Supervisor { num_locations, log: AlarmLog::default(), triggered: HashSet::new(), counts: ConfusionCounts::default() }
    }

    /// Records an alarm. Returns whether it was accepted, i.e. carries
    /// enough fields to be attributed to a cell.
    pub fn log_alarm(&mut self, m: &Message, charge: Charge) -> bool {
        debug_assert_eq!(m.purpose(), Purpose::Alarm);
        let cell = match (m.location(), m.timestep()) {
            (Some(l), Some(t)) if l < self.num_locations => Some((l, t)),
            _ => None,
        };
        let accepted = is_valid(m.present(), Purpose::Alarm) && cell.is_some();
        if accepted {
            self.triggered.insert(cell.expect("checked"));
        }
        self.log.entries.push(AlarmEntry {
            mask: m.present(),
            location: m.location(),
            timestep: m.timestep(),
            event_type: m.event_type(),
            value: m.value(),
            charge,
            accepted,
        });
        accepted
    }

    pub fn is_triggered(&self, l: usize, t: u64) -> bool {
        self.triggered.contains(&(l, t))
    }

    /// Scores every location at `t` and folds the result into the running counts.
    pub fn close_iteration(&mut self, gt: &GroundTruth, t: u64) -> ConfusionCounts {
        let mut delta = ConfusionCounts::default();
        for l in 0..self.num_locations {
            match (gt.is_event(l, t), self.is_triggered(l, t)) {
                (true, true) => delta.tp += 1,
                (false, true) => delta.fp += 1,
                (false, false) => delta.tn += 1,
                (true, false) => delta.fn_ += 1,
            }
        }
        self.counts += delta;
        delta
    }

    /// Ground-truth label released to the agent owning `l`, if any.
    pub fn feedback(&self, l: usize, t: u64, mode: FeedbackMode, gt: &GroundTruth) -> Option<Label> {
        let label = || if gt.is_event(l, t) { Label::Event } else { Label::Normal };
        match mode {
            FeedbackMode::Full => Some(label()),
            FeedbackMode::AlarmOnly if self.is_triggered(l, t) => Some(label()),
            FeedbackMode::AlarmOnly | FeedbackMode::None => None,
        }
    }

    pub fn counts(&self) -> ConfusionCounts {
        self.counts
    }

    pub fn log(&self) -> &AlarmLog {
        &self.log
    }

    pub fn into_log(self) -> AlarmLog {
        self.log
    }
}
