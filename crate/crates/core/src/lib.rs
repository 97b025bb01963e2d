//! Simulation library for privacy-aware message-field selection in
//! sensor-network event detection.
//!
//! Agents classify sensor readings with a one-class detector, optionally ask
//! neighbors for opinions, and raise alarms to a supervisor. Two tabular
//! Q-learning transmitters per agent pick which message fields to send so
//! that communication and privacy costs stay low while messages remain
//! usable.

pub mod agent;
pub mod classification;
pub mod config;
pub mod engine;
pub mod error;
pub mod model;
pub mod network;
pub mod seeding;
pub mod supervisor;
pub mod transmitter;

pub use agent::{apply_profile, profile_catalog, AgentState, CommProfile, NeighborRule, SupervisorRule};
pub use classification::{aggregate_votes, form_opinion, ClassifierParams, ClassifierVerdict, Label, OneClassClassifier, OneClassState};
pub use config::{FeedbackMode, NeighborCriterion, Organization, SimConfig, SupervisorCriterion};
pub use engine::{run_simulation, run_sweep, RunRecord, SweepSpec, SweepTable};
pub use error::{Error, Result};
pub use model::{CostVector, EventModel, Field, FieldMask, GroundTruth, Measurement, Message, Opinion, Purpose, Vote};
pub use network::{build_topology, transmit, ChannelLedger, Charge, Endpoint, LedgerChannel, Receipt, Topology};
pub use supervisor::{metrics, AlarmLog, ConfusionCounts, Supervisor};
pub use transmitter::{Channel, QLearnParams, TransmitterState};
