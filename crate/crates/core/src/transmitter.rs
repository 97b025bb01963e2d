//! Learning transmitter: a single-state Q-learning policy over the 64 field
//! masks of a channel. The reward is the negated, privacy-weighted cost of
//! the transmitted mask, minus a penalty when the receiver could not use it.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Field, FieldMask, Purpose};
use crate::network::Charge;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QLearnParams {
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Multiplicative decay applied after every selection.
    pub epsilon_decay: f64,
    pub privacy_weight: f64,
    pub failure_penalty: f64,
    /// Value every Q-table entry starts from. Anything above the best valid
    /// reward makes the greedy policy try all 64 masks before settling; the
    /// default sits between a cheap valid mask and a failed one, so untried
    /// masks are visited in tie-break order only until the first valid one.
    pub initial_q: f64,
}

impl Default for QLearnParams {
    fn default() -> Self {
        QLearnParams {
            alpha: 0.1,
            epsilon_start: 0.3,
            epsilon_min: 0.01,
            epsilon_decay: 0.95,
            privacy_weight: 1.0,
            failure_penalty: 10.0,
            initial_q: -5.0,
        }
    }
}

impl QLearnParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        if !(p.alpha > 0.0 && p.alpha <= 1.0) {
            return Err(Error::config(format!("alpha must be in (0,1], got {}", p.alpha)));
        }
        if !(0.0..=1.0).contains(&p.epsilon_start) || !(0.0..=1.0).contains(&p.epsilon_min) {
            return Err(Error::config("epsilon_start and epsilon_min must be in [0,1]"));
        }
        if p.epsilon_min > p.epsilon_start {
            return Err(Error::config("epsilon_min must not exceed epsilon_start"));
        }
        if !(p.epsilon_decay > 0.0 && p.epsilon_decay <= 1.0) {
            return Err(Error::config(format!("epsilon_decay must be in (0,1], got {}", p.epsilon_decay)));
        }
        if !(p.privacy_weight >= 0.0 && p.privacy_weight.is_finite()) {
            return Err(Error::config("privacy_weight must be non-negative"));
        }
        if !(p.failure_penalty > 0.0 && p.failure_penalty.is_finite()) {
            return Err(Error::config("failure_penalty must be positive"));
        }
        if !(p.initial_q <= 0.0 && p.initial_q.is_finite()) {
            return Err(Error::config("initial_q must be finite and <= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Neighbor,
    Supervisor,
}

impl Channel {
    /// Fields the receiver needs for the message to be usable.
    pub fn required_fields(self) -> FieldMask {
        match self {
            Channel::Neighbor => FieldMask::from_fields(&[Field::Value, Field::EventType]),
            Channel::Supervisor => FieldMask::from_fields(&[Field::Location, Field::Timestep, Field::EventType]),
        }
    }

    /// Mask sent when learning is disabled: every field except the agent id.
    pub fn default_mask(self) -> FieldMask {
        FieldMask::FULL.without(Field::AgentId)
    }

    pub fn purpose(self) -> Purpose {
        match self {
            Channel::Neighbor => Purpose::OpinionRequest,
            Channel::Supervisor => Purpose::Alarm,
        }
    }
}

/// Whether a receiver can act on a message with these fields.
pub fn is_valid(mask: FieldMask, purpose: Purpose) -> bool {
    let required = match purpose {
        Purpose::Report => FieldMask::EMPTY,
        Purpose::OpinionRequest => Channel::Neighbor.required_fields(),
        Purpose::Alarm => Channel::Supervisor.required_fields(),
    };
    mask.is_superset_of(required)
}

/// `-(comm + privacy_weight * privacy) - [invalid] * failure_penalty`
pub fn reward(charged: Charge, valid: bool, params: &QLearnParams) -> f64 {
    let penalty = if valid { 0.0 } else { params.failure_penalty };
    -(charged.comm + params.privacy_weight * charged.privacy) - penalty
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterState {
    q: [f64; FieldMask::COUNT],
    epsilon: f64,
    channel: Channel,
    required_fields: FieldMask,
}

impl TransmitterState {
    pub fn new(channel: Channel, params: &QLearnParams) -> Self {
        TransmitterState {
            q: [params.initial_q; FieldMask::COUNT],
            epsilon: params.epsilon_start,
            channel,
            required_fields: channel.required_fields(),
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn required_fields(&self) -> FieldMask {
        self.required_fields
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn q(&self, mask: FieldMask) -> f64 {
        self.q[mask.bits() as usize]
    }

    pub fn q_table(&self) -> &[f64; FieldMask::COUNT] {
        &self.q
    }

    /// Highest-valued mask; ties go to the fewest fields, then the smallest encoding.
    pub fn greedy_mask(&self) -> FieldMask {
        FieldMask::all()
            .max_by(|&a, &b| {
                self.q(a)
                    .total_cmp(&self.q(b))
                    .then_with(|| b.len().cmp(&a.len()))
                    .then_with(|| b.bits().cmp(&a.bits()))
            })
            .expect("64 masks")
    }

    pub fn select_mask<R: Rng + ?Sized>(&self, learning_enabled: bool, rng: &mut R) -> FieldMask {
        if !learning_enabled {
            return self.channel.default_mask();
        }
        if self.epsilon > 0.0 && rng.random_bool(self.epsilon) {
            FieldMask::from_bits(rng.random_range(0..FieldMask::COUNT as u8)).expect("in range")
        } else {
            self.greedy_mask()
        }
    }

    /// One Q-learning step with zero discount, followed by epsilon decay.
    pub fn update(&mut self, mask: FieldMask, r: f64, params: &QLearnParams) {
        let q = &mut self.q[mask.bits() as usize];
        *q = (1.0 - params.alpha) * *q + params.alpha * r;
        self.epsilon = (self.epsilon * params.epsilon_decay).max(params.epsilon_min);
    }

    /// Dumps the table as `mask,q_value` rows, mask in integer encoding.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mask", "q_value"])?;
        for m in FieldMask::all() {
            w.write_record([m.bits().to_string(), self.q(m).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
