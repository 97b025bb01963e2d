//! Seed splitting.
//!
//! Every random consumer gets its own ChaCha8 stream keyed by the run seed:
//! the key is `seed` expanded by `seed_from_u64`, the stream number picks the
//! consumer. Streams never overlap, so turning learning on or off (which
//! changes how many draws the transmitters make) leaves ground truth,
//! measurements and topology untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    GroundTruth,
    Measurements,
    Topology,
    NeighborTransmitter(usize),
    SupervisorTransmitter(usize),
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::GroundTruth => 0,
            Stream::Measurements => 1,
            Stream::Topology => 2,
            Stream::NeighborTransmitter(a) => 16 + 2 * a as u64,
            Stream::SupervisorTransmitter(a) => 17 + 2 * a as u64,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
