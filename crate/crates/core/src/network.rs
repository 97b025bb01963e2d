//! Sensor/agent/supervisor wiring and per-channel cost accounting.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::config::{Organization, SimConfig};
use crate::error::{Error, Result};
use crate::model::{message_comm_cost, message_privacy_cost, CostVector, Message, Opinion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Sensor(usize),
    Agent(usize),
    Supervisor,
}

/// Ledger bucket a networked transmission is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LedgerChannel {
    /// Sensor to agent over the network (centralized organization only).
    Uplink,
    Neighbor,
    Supervisor,
    /// Opinion responses travelling back to the requester.
    Response,
}

/// Communication and privacy cost charged for one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Charge {
    pub comm: f64,
    pub privacy: f64,
}

impl Charge {
    pub const ZERO: Charge = Charge { comm: 0.0, privacy: 0.0 };
}

/// Proof of delivery; transmissions never fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Receipt {
    /// `None` for local (distance 0) links, which are not charged.
    pub channel: Option<LedgerChannel>,
    pub charge: Charge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    sensor_owner: Vec<usize>,
    neighbor_lists: Vec<Vec<usize>>,
    uplink_networked: bool,
}

impl Topology {
    pub fn from_parts(sensor_owner: Vec<usize>, neighbor_lists: Vec<Vec<usize>>, uplink_networked: bool) -> Self {
        Topology { sensor_owner, neighbor_lists, uplink_networked }
    }

    pub fn num_sensors(&self) -> usize {
        self.sensor_owner.len()
    }

    pub fn num_agents(&self) -> usize {
        self.neighbor_lists.len()
    }

    pub fn owner(&self, sensor: usize) -> usize {
        self.sensor_owner[sensor]
    }

    pub fn owned_sensors(&self, agent: usize) -> Vec<usize> {
        (0..self.num_sensors()).filter(|&s| self.sensor_owner[s] == agent).collect()
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbor_lists[agent]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbor_lists.iter().map(Vec::len).sum()
    }

    /// Sensor-to-owner links travel over the network.
    pub fn uplink_networked(&self) -> bool {
        self.uplink_networked
    }

    /// Binary distance: 0 for a physical sensor-owner link, 1 otherwise.
    pub fn distance(&self, a: Endpoint, b: Endpoint) -> u8 {
        match (a, b) {
            (Endpoint::Sensor(s), Endpoint::Agent(g)) | (Endpoint::Agent(g), Endpoint::Sensor(s))
                if self.sensor_owner.get(s) == Some(&g) && !self.uplink_networked =>
            {
                0
            }
            _ => 1,
        }
    }

    fn channel(&self, from: Endpoint, to: Endpoint) -> Result<LedgerChannel> {
        let agent_ok = |a: usize| a < self.num_agents();
        match (from, to) {
            (Endpoint::Sensor(s), Endpoint::Agent(a)) if self.sensor_owner.get(s) == Some(&a) => Ok(LedgerChannel::Uplink),
            (Endpoint::Agent(a), Endpoint::Agent(b)) if agent_ok(a) && self.neighbor_lists[a].contains(&b) => {
                Ok(LedgerChannel::Neighbor)
            }
            (Endpoint::Agent(a), Endpoint::Supervisor) if agent_ok(a) => Ok(LedgerChannel::Supervisor),
            _ => Err(Error::Protocol(format!("no channel from {from:?} to {to:?}"))),
        }
    }

    /// One line per agent: `agent_id: n1,n2,...`.
    pub fn adjacency_listing(&self) -> String {
        let mut out = String::new();
        for (a, ns) in self.neighbor_lists.iter().enumerate() {
            let list: Vec<String> = ns.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{a}: {}", list.join(","));
        }
        out
    }
}

pub fn build_topology<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Topology> {
    let n = config.num_sensors;
    let agents = config.num_agents();
    let k = config.neighbors_per_agent();
    if k > 0 && k >= agents {
        return Err(Error::config(format!("neighborhood of {k} needs more than {agents} agents")));
    }
    let sensor_owner = match config.organization {
        Organization::Centralized => vec![0; n],
        _ => (0..n).collect(),
    };
    let mut neighbor_lists: Vec<Vec<usize>> = (0..agents)
        .map(|a| {
            if k == 0 {
                return Vec::new();
            }
            // sample among the other agents, then shift past `a`
            index::sample(rng, agents - 1, k)
                .into_iter()
                .map(|i| if i >= a { i + 1 } else { i })
                .collect()
        })
        .collect();
    if config.symmetric_neighbors {
        let directed = neighbor_lists.clone();
        for (a, ns) in directed.iter().enumerate() {
            for &b in ns {
                if !neighbor_lists[b].contains(&a) {
                    neighbor_lists[b].push(a);
                }
            }
        }
    }
    Ok(Topology {
        sensor_owner,
        neighbor_lists,
        uplink_networked: config.organization == Organization::Centralized,
    })
}

/// Per-iteration accumulators for every ledger channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ChannelLedger {
    pub uplink_msgs: u64,
    pub neighbor_msgs: u64,
    pub supervisor_msgs: u64,
    pub opinion_responses: u64,
    pub uplink_comm_cost: f64,
    pub uplink_privacy_cost: f64,
    pub neighbor_comm_cost: f64,
    pub neighbor_privacy_cost: f64,
    pub supervisor_comm_cost: f64,
    pub supervisor_privacy_cost: f64,
    pub response_comm_cost: f64,
}

impl ChannelLedger {
    pub fn record(&mut self, channel: LedgerChannel, charge: Charge) {
        let (msgs, comm, privacy) = match channel {
            LedgerChannel::Uplink => (&mut self.uplink_msgs, &mut self.uplink_comm_cost, &mut self.uplink_privacy_cost),
            LedgerChannel::Neighbor => {
                (&mut self.neighbor_msgs, &mut self.neighbor_comm_cost, &mut self.neighbor_privacy_cost)
            }
            LedgerChannel::Supervisor => {
                (&mut self.supervisor_msgs, &mut self.supervisor_comm_cost, &mut self.supervisor_privacy_cost)
            }
            LedgerChannel::Response => {
                self.opinion_responses += 1;
                self.response_comm_cost += charge.comm;
                return;
            }
        };
        *msgs += 1;
        *comm += charge.comm;
        *privacy += charge.privacy;
    }

    pub fn total_privacy(&self) -> f64 {
        self.uplink_privacy_cost + self.neighbor_privacy_cost + self.supervisor_privacy_cost
    }

    pub fn total_comm(&self) -> f64 {
        self.uplink_comm_cost + self.neighbor_comm_cost + self.supervisor_comm_cost + self.response_comm_cost
    }

    /// Returns the current totals and resets the ledger.
    pub fn take(&mut self) -> ChannelLedger {
        std::mem::take(self)
    }
}

/// Delivers `m` and charges its cost to the matching ledger channel.
/// Local sensor-owner links are free.
pub fn transmit(
    m: &Message,
    from: Endpoint,
    to: Endpoint,
    topo: &Topology,
    cv: &CostVector,
    ledger: &mut ChannelLedger,
) -> Result<Receipt> {
    let channel = topo.channel(from, to)?;
    if topo.distance(from, to) == 0 {
        return Ok(Receipt { channel: None, charge: Charge::ZERO });
    }
    let charge = Charge { comm: message_comm_cost(m, cv), privacy: message_privacy_cost(m, cv) };
    ledger.record(channel, charge);
    Ok(Receipt { channel: Some(channel), charge })
}

/// Opinion responses carry no protocol fields: a fixed unit of
/// communication, no privacy, tallied apart from request traffic.
pub fn opinion_response_cost(_opinion: &Opinion, ledger: &mut ChannelLedger) -> Receipt {
    let charge = Charge { comm: 1.0, privacy: 0.0 };
    ledger.record(LedgerChannel::Response, charge);
    Receipt { channel: Some(LedgerChannel::Response), charge }
}
