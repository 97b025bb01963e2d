//! Simulation loop, replicated sweeps and the canned experiments.

pub mod experiments;
pub mod stats;
pub mod sweep;

use std::io::Write;

use serde::Serialize;

use crate::agent::{AgentState, OtherAgents, StepEnv};
use crate::classification::{Label, OneClassClassifier};
use crate::config::SimConfig;
use crate::error::Result;
use crate::model::{generate_ground_truth, sample_measurement, Field, FieldMask, GroundTruth, Message, Purpose};
use crate::network::{build_topology, transmit, ChannelLedger, Endpoint, Receipt, Topology};
use crate::seeding::{stream_rng, Stream};
use crate::supervisor::{metrics, AlarmLog, ConfusionCounts, Supervisor};

pub use sweep::{run_sweep, SweepCell, SweepSpec, SweepTable};

/// Fields a sensor puts on the wire when reporting to its agent.
pub fn report_mask() -> FieldMask {
    FieldMask::FULL.without(Field::AgentId)
}

/// One row of a run: cumulative accuracy plus per-iteration traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRow {
    pub iteration: u64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Accuracy of this iteration alone.
    pub iter_precision: f64,
    pub iter_recall: f64,
    pub iter_f_measure: f64,
    pub neighbor_msgs: u64,
    pub supervisor_msgs: u64,
    pub uplink_msgs: u64,
    pub opinion_responses: u64,
    pub neighbor_comm_cost: f64,
    pub neighbor_privacy_cost: f64,
    pub supervisor_comm_cost: f64,
    pub supervisor_privacy_cost: f64,
    pub uplink_comm_cost: f64,
    pub uplink_privacy_cost: f64,
    pub response_comm_cost: f64,
    pub privacy_cost: f64,
    pub comm_cost: f64,
    pub cum_privacy_cost: f64,
    pub cum_comm_cost: f64,
}

impl RunRow {
    /// Numeric column names in CSV order, `iteration` excluded.
    pub const METRICS: [&'static str; 25] = [
        "tp",
        "fp",
        "tn",
        "fn",
        "precision",
        "recall",
        "f_measure",
        "iter_precision",
        "iter_recall",
        "iter_f_measure",
        "neighbor_msgs",
        "supervisor_msgs",
        "uplink_msgs",
        "opinion_responses",
        "neighbor_comm_cost",
        "neighbor_privacy_cost",
        "supervisor_comm_cost",
        "supervisor_privacy_cost",
        "uplink_comm_cost",
        "uplink_privacy_cost",
        "response_comm_cost",
        "privacy_cost",
        "comm_cost",
        "cum_privacy_cost",
        "cum_comm_cost",
    ];

    pub fn values(&self) -> [f64; 25] {
        [
            self.tp as f64,
            self.fp as f64,
            self.tn as f64,
            self.fn_ as f64,
            self.precision,
            self.recall,
            self.f_measure,
            self.iter_precision,
            self.iter_recall,
            self.iter_f_measure,
            self.neighbor_msgs as f64,
            self.supervisor_msgs as f64,
            self.uplink_msgs as f64,
            self.opinion_responses as f64,
            self.neighbor_comm_cost,
            self.neighbor_privacy_cost,
            self.supervisor_comm_cost,
            self.supervisor_privacy_cost,
            self.uplink_comm_cost,
            self.uplink_privacy_cost,
            self.response_comm_cost,
            self.privacy_cost,
            self.comm_cost,
            self.cum_privacy_cost,
            self.cum_comm_cost,
        ]
    }

    pub fn metric_index(name: &str) -> Option<usize> {
        Self::METRICS.iter().position(|&m| m == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        Self::metric_index(name).map(|i| self.values()[i])
    }

    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts { tp: self.tp, fp: self.fp, tn: self.tn, fn_: self.fn_ }
    }

    pub fn ledger(&self) -> ChannelLedger {
        ChannelLedger {
            uplink_msgs: self.uplink_msgs,
            neighbor_msgs: self.neighbor_msgs,
            supervisor_msgs: self.supervisor_msgs,
            opinion_responses: self.opinion_responses,
            uplink_comm_cost: self.uplink_comm_cost,
            uplink_privacy_cost: self.uplink_privacy_cost,
            neighbor_comm_cost: self.neighbor_comm_cost,
            neighbor_privacy_cost: self.neighbor_privacy_cost,
            supervisor_comm_cost: self.supervisor_comm_cost,
            supervisor_privacy_cost: self.supervisor_privacy_cost,
            response_comm_cost: self.response_comm_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&RunRow> {
        self.rows.last()
    }

    /// Values of one metric column, in iteration order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = RunRow::metric_index(name)?;
        Some(self.rows.iter().map(|r| r.values()[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            let mut header = vec!["iteration"];
            header.extend(RunRow::METRICS);
            w.write_record(header)?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep every charged receipt (large).
    pub keep_receipts: bool,
}

/// A run plus the artifacts needed to audit it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub ground_truth: GroundTruth,
    pub topology: Topology,
    pub alarm_log: AlarmLog,
    pub receipts: Option<Vec<Receipt>>,
    pub agents: Vec<AgentState>,
}

pub fn run_simulation(config: &SimConfig) -> Result<RunRecord> {
    Ok(simulate(config, RunOptions::default())?.record)
}

/// Runs the full loop: ground truth and topology up front, then per
/// timestep sensor reports, agent steps in id order, and the supervisor's
/// scoring and feedback.
pub fn simulate(config: &SimConfig, opts: RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let seed = config.seed;
    let gt = generate_ground_truth(config, &mut stream_rng(seed, Stream::GroundTruth))?;
    let topology = build_topology(config, &mut stream_rng(seed, Stream::Topology))?;
    let mut meas_rng = stream_rng(seed, Stream::Measurements);
    let mut agents: Vec<AgentState> =
        (0..topology.num_agents()).map(|a| AgentState::from_config(a, config, &topology)).collect();
    let mut supervisor = Supervisor::new(config.num_sensors);
    let neighbor_costs = config.neighbor_cost_vector();
    let mut receipts = opts.keep_receipts.then(Vec::new);
    let mut rows = Vec::with_capacity(config.iterations);
    let (mut cum_privacy, mut cum_comm) = (0.0, 0.0);

    for t in 0..config.iterations as u64 {
        let mut ledger = ChannelLedger::default();
        let readings: Vec<_> = (0..config.num_sensors)
            .map(|l| sample_measurement(&gt, l, t, &config.event_model, &mut meas_rng))
            .collect();

        for (s, m) in readings.iter().enumerate() {
            let owner = topology.owner(s);
            let report = Message::from_measurement(m, owner, report_mask(), Purpose::Report);
            let r = transmit(&report, Endpoint::Sensor(s), Endpoint::Agent(owner), &topology, &config.cost_vector, &mut ledger)?;
            if let (Some(log), Some(_)) = (receipts.as_mut(), r.channel) {
                log.push(r);
            }
        }

        for i in 0..agents.len() {
            let (before, rest) = agents.split_at_mut(i);
            let (me, after) = rest.split_first_mut().expect("index in range");
            let peers = OtherAgents { before: &*before, after: &*after };
            let owned: Vec<_> = me.owned_sensors().iter().map(|&s| readings[s]).collect();
            let mut env = StepEnv {
                topology: &topology,
                neighbor_costs: &neighbor_costs,
                supervisor_costs: &config.cost_vector,
                learning_enabled: config.learning_enabled,
                qlearn: &config.qlearn_params,
                peers: &peers,
                supervisor: &mut supervisor,
                ledger: &mut ledger,
                receipts: receipts.as_mut(),
            };
            me.step(&owned, &mut env)?;
        }

        let delta = supervisor.close_iteration(&gt, t);
        for agent in agents.iter_mut() {
            for s in agent.owned_sensors().to_vec() {
                match supervisor.feedback(s, t, config.feedback_mode, &gt) {
                    Some(label) => agent.train(readings[s].value, label),
                    // without labels, an untrained classifier bootstraps on raw readings
                    None if !agent.classifier().is_trained() => agent.train(readings[s].value, Label::Normal),
                    None => {}
                }
            }
        }

        let counts = supervisor.counts();
        let cum = metrics(&counts);
        let iter = metrics(&delta);
        let (privacy, comm) = (ledger.total_privacy(), ledger.total_comm());
        cum_privacy += privacy;
        cum_comm += comm;
        rows.push(RunRow {
            iteration: t,
            tp: counts.tp,
            fp: counts.fp,
            tn: counts.tn,
            fn_: counts.fn_,
            precision: cum.precision,
            recall: cum.recall,
            f_measure: cum.f_measure,
            iter_precision: iter.precision,
            iter_recall: iter.recall,
            iter_f_measure: iter.f_measure,
            neighbor_msgs: ledger.neighbor_msgs,
            supervisor_msgs: ledger.supervisor_msgs,
            uplink_msgs: ledger.uplink_msgs,
            opinion_responses: ledger.opinion_responses,
            neighbor_comm_cost: ledger.neighbor_comm_cost,
            neighbor_privacy_cost: ledger.neighbor_privacy_cost,
            supervisor_comm_cost: ledger.supervisor_comm_cost,
            supervisor_privacy_cost: ledger.supervisor_privacy_cost,
            uplink_comm_cost: ledger.uplink_comm_cost,
            uplink_privacy_cost: ledger.uplink_privacy_cost,
            response_comm_cost: ledger.response_comm_cost,
            privacy_cost: privacy,
            comm_cost: comm,
            cum_privacy_cost: cum_privacy,
            cum_comm_cost: cum_comm,
        });
    }

    Ok(RunOutput {
        record: RunRecord { rows },
        ground_truth: gt,
        topology,
        alarm_log: supervisor.into_log(),
        receipts,
        agents,
    })
}
