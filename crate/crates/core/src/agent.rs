//! Per-agent decision loop and the catalog of literature communication
//! profiles.

use std::fmt;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classification::{aggregate_votes, form_opinion, ClassifierVerdict, Label, OneClassClassifier, OneClassState};
use crate::config::{NeighborCriterion, SimConfig, SupervisorCriterion};
use crate::error::Result;
use crate::model::{CostVector, Measurement, Message, Opinion};
use crate::network::{opinion_response_cost, transmit, ChannelLedger, Charge, Endpoint, Receipt, Topology};
use crate::seeding::{stream_rng, Stream};
use crate::supervisor::Supervisor;
use crate::transmitter::{is_valid, reward, Channel, QLearnParams, TransmitterState};

pub fn should_consult_neighbors(verdict: ClassifierVerdict, criterion: NeighborCriterion, confidence_threshold: f64) -> bool {
    match criterion {
        NeighborCriterion::All => true,
        NeighborCriterion::Outlier => verdict.is_event(),
        NeighborCriterion::Confidence => verdict.confidence < confidence_threshold,
        NeighborCriterion::None => false,
    }
}

pub fn should_alarm(verdict: ClassifierVerdict, criterion: SupervisorCriterion) -> bool {
    match criterion {
        SupervisorCriterion::All => true,
        SupervisorCriterion::Outlier => verdict.is_event(),
    }
}

/// Answers opinion requests on behalf of other agents.
pub trait Peers {
    fn opinion(&self, peer: usize, request: &Message) -> Opinion;
}

/// Everything outside the agent that a step touches.
pub struct StepEnv<'a, P: Peers + ?Sized> {
    pub topology: &'a Topology,
    pub neighbor_costs: &'a CostVector,
    pub supervisor_costs: &'a CostVector,
    pub learning_enabled: bool,
    pub qlearn: &'a QLearnParams,
    pub peers: &'a P,
    pub supervisor: &'a mut Supervisor,
    pub ledger: &'a mut ChannelLedger,
    /// Raw receipts, only collected when requested.
    pub receipts: Option<&'a mut Vec<Receipt>>,
}

impl<P: Peers + ?Sized> StepEnv<'_, P> {
    fn send(&mut self, m: &Message, from: Endpoint, to: Endpoint) -> Result<Receipt> {
        let cv = if to == Endpoint::Supervisor { self.supervisor_costs } else { self.neighbor_costs };
        let receipt = transmit(m, from, to, self.topology, cv, self.ledger)?;
        if let Some(log) = self.receipts.as_deref_mut() {
            log.push(receipt);
        }
        Ok(receipt)
    }
}

/// What one agent did with one measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementOutcome {
    pub location: usize,
    pub value: f64,
    /// Final verdict, after voting when neighbors were consulted.
    pub verdict: ClassifierVerdict,
    pub consulted: bool,
    pub alarmed: bool,
    pub alarm_accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AgentReport {
    pub outcomes: Vec<MeasurementOutcome>,
    pub neighbor_msgs: u64,
    pub supervisor_msgs: u64,
    pub neighbor_charge: Charge,
    pub supervisor_charge: Charge,
}

#[derive(Debug, Clone)]
pub struct AgentState<C = OneClassState> {
    id: usize,
    owned_sensors: Vec<usize>,
    classifier: C,
    neighbor_tx: TransmitterState,
    supervisor_tx: TransmitterState,
    neighbors: Vec<usize>,
    neighbor_criterion: NeighborCriterion,
    supervisor_criterion: SupervisorCriterion,
    confidence_threshold: f64,
    unknown_threshold: f64,
    neighbor_rng: ChaCha8Rng,
    supervisor_rng: ChaCha8Rng,
}

impl AgentState<OneClassState> {
    /// Agent `id` of `topology`, with its transmitter streams split off `config.seed`.
    pub fn from_config(id: usize, config: &SimConfig, topology: &Topology) -> Self {
        AgentState::with_classifier(id, config, topology, OneClassState::new(config.classifier_params))
    }
}

impl<C: OneClassClassifier> AgentState<C> {
    pub fn with_classifier(id: usize, config: &SimConfig, topology: &Topology, classifier: C) -> Self {
        AgentState {
            id,
            owned_sensors: topology.owned_sensors(id),
            classifier,
            neighbor_tx: TransmitterState::new(Channel::Neighbor, &config.qlearn_params),
            supervisor_tx: TransmitterState::new(Channel::Supervisor, &config.qlearn_params),
            neighbors: topology.neighbors(id).to_vec(),
            neighbor_criterion: config.neighbor_criterion,
            supervisor_criterion: config.supervisor_criterion,
            confidence_threshold: config.confidence_threshold,
            unknown_threshold: config.unknown_threshold,
            neighbor_rng: stream_rng(config.seed, Stream::NeighborTransmitter(id)),
            supervisor_rng: stream_rng(config.seed, Stream::SupervisorTransmitter(id)),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn owned_sensors(&self) -> &[usize] {
        &self.owned_sensors
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    pub fn classifier(&self) -> &C {
        &self.classifier
    }

    pub fn neighbor_tx(&self) -> &TransmitterState {
        &self.neighbor_tx
    }

    pub fn supervisor_tx(&self) -> &TransmitterState {
        &self.supervisor_tx
    }

    pub fn criteria(&self) -> (NeighborCriterion, SupervisorCriterion) {
        (self.neighbor_criterion, self.supervisor_criterion)
    }

    /// Feeds a labeled value to the classifier.
    pub fn train(&mut self, value: f64, label: Label) {
        self.classifier.train(value, label);
    }

    /// This agent's answer to a neighbor's request.
    pub fn opinion(&self, request: &Message) -> Opinion {
        form_opinion(&self.classifier, request, self.unknown_threshold)
    }

    /// Classify, consult, alarm and learn for each measurement in order.
    pub fn step<P: Peers + ?Sized>(&mut self, measurements: &[Measurement], env: &mut StepEnv<'_, P>) -> Result<AgentReport> {
        let mut report = AgentReport::default();
        let me = Endpoint::Agent(self.id);
        for m in measurements {
            let mut verdict = self.classifier.classify(m.value);

            let consulted = !self.neighbors.is_empty()
                && should_consult_neighbors(verdict, self.neighbor_criterion, self.confidence_threshold);
            if consulted {
                let mask = self.neighbor_tx.select_mask(env.learning_enabled, &mut self.neighbor_rng);
                let request = Message::from_measurement(m, self.id, mask, Channel::Neighbor.purpose());
                let mut opinions = Vec::with_capacity(self.neighbors.len());
                let mut charge = Charge::ZERO;
                for &n in &self.neighbors {
                    let r = env.send(&request, me, Endpoint::Agent(n))?;
                    charge = r.charge;
                    report.neighbor_msgs += 1;
                    report.neighbor_charge.comm += r.charge.comm;
                    report.neighbor_charge.privacy += r.charge.privacy;
                    let o = env.peers.opinion(n, &request);
                    opinion_response_cost(&o, env.ledger);
                    opinions.push(o);
                }
                verdict = aggregate_votes(verdict, &opinions);
                if env.learning_enabled {
                    // every neighbor gets the same payload, so one message's charge is the action's cost
                    let r = reward(charge, is_valid(mask, request.purpose()), env.qlearn);
                    self.neighbor_tx.update(mask, r, env.qlearn);
                }
            }

            let alarmed = should_alarm(verdict, self.supervisor_criterion);
            let mut alarm_accepted = false;
            if alarmed {
                let mask = self.supervisor_tx.select_mask(env.learning_enabled, &mut self.supervisor_rng);
                let alarm = Message::from_measurement(m, self.id, mask, Channel::Supervisor.purpose());
                let r = env.send(&alarm, me, Endpoint::Supervisor)?;
                alarm_accepted = env.supervisor.log_alarm(&alarm, r.charge);
                report.supervisor_msgs += 1;
                report.supervisor_charge.comm += r.charge.comm;
                report.supervisor_charge.privacy += r.charge.privacy;
                if env.learning_enabled {
                    let rw = reward(r.charge, is_valid(mask, alarm.purpose()), env.qlearn);
                    self.supervisor_tx.update(mask, rw, env.qlearn);
                }
            }

            report.outcomes.push(MeasurementOutcome {
                location: m.location,
                value: m.value,
                verdict,
                consulted,
                alarmed,
                alarm_accepted,
            });
        }
        Ok(report)
    }
}

/// The agents other than the one being stepped.
pub struct OtherAgents<'a, C> {
    pub before: &'a [AgentState<C>],
    pub after: &'a [AgentState<C>],
}

impl<C: OneClassClassifier> OtherAgents<'_, C> {
    fn get(&self, peer: usize) -> &AgentState<C> {
        if peer < self.before.len() {
            &self.before[peer]
        } else {
            &self.after[peer - self.before.len() - 1]
        }
    }
}

impl<C: OneClassClassifier> Peers for OtherAgents<'_, C> {
    fn opinion(&self, peer: usize, request: &Message) -> Opinion {
        self.get(peer).opinion(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NeighborRule {
    Outlier,
    Always,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SupervisorRule {
    Outlier,
    Always,
}

impl fmt::Display for NeighborRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighborRule::Outlier => "outlier",
            NeighborRule::Always => "always",
            NeighborRule::None => "N/A",
        })
    }
}

impl fmt::Display for SupervisorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SupervisorRule::Outlier => "outlier",
            SupervisorRule::Always => "always",
        })
    }
}

/// Communication footprint of a published detection algorithm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommProfile {
    pub name: &'static str,
    pub privacy_preserving: bool,
    pub neighbor_rule: NeighborRule,
    pub supervisor_rule: SupervisorRule,
    /// Citation tags, `;`-separated; empty when no published example exists.
    pub exemplar: &'static str,
}

pub fn profile_catalog() -> Vec<CommProfile> {
    use NeighborRule as N;
    use SupervisorRule as S;
    let row = |name, privacy_preserving, neighbor_rule, supervisor_rule, exemplar| CommProfile {
        name,
        privacy_preserving,
        neighbor_rule,
        supervisor_rule,
        exemplar,
    };
    vec![
        row("PP-OO", true, N::Outlier, S::Outlier, "ZMH09"),
        row("PP-OA", true, N::Outlier, S::Always, ""),
        row("PP-AO", true, N::Always, S::Outlier, "Ruan08"),
        row("PP-AA", true, N::Always, S::Always, ""),
        row("NP-OO", false, N::Outlier, S::Outlier, "Zhang12"),
        row("NP-OA", false, N::Outlier, S::Always, ""),
        row("NP-AO", false, N::Always, S::Outlier, "MarinPerianu07;Wittenburg10"),
        row("NP-AA", false, N::Always, S::Always, "Bahrepour10"),
        row("NP-NO", false, N::None, S::Outlier, "Zoumboulakis07;Faulkner11;Faulkner13"),
        row("NP-NA", false, N::None, S::Always, "Bahrepour09"),
    ]
}

pub fn find_profile(name: &str) -> Option<CommProfile> {
    profile_catalog().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Copies `base` with the profile's gates and neighbor payload privacy.
/// The learning toggle is left alone.
pub fn apply_profile(p: &CommProfile, base: &SimConfig) -> SimConfig {
    let mut c = base.clone();
    c.neighbor_criterion = match p.neighbor_rule {
        NeighborRule::Outlier => NeighborCriterion::Outlier,
        NeighborRule::Always => NeighborCriterion::All,
        NeighborRule::None => NeighborCriterion::None,
    };
    c.supervisor_criterion = match p.supervisor_rule {
        SupervisorRule::Outlier => SupervisorCriterion::Outlier,
        SupervisorRule::Always => SupervisorCriterion::All,
    };
    c.privacy_preserving_neighbors = p.privacy_preserving;
    c
}

/// Catalog as CSV: `name,privacy_preserving,neighbors,supervisor,example`.
pub fn write_catalog_csv<W: Write>(out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "privacy_preserving", "neighbors", "supervisor", "example"])?;
    for p in profile_catalog() {
        w.write_record([
            p.name.to_string(),
            p.privacy_preserving.to_string(),
            p.neighbor_rule.to_string(),
            p.supervisor_rule.to_string(),
            p.exemplar.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
