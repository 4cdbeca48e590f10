//! Seed splitting.
//!
//! A run is driven by one 64-bit master seed. Every independent randomness
//! consumer gets its own ChaCha8 stream keyed by the master seed:
//!
//! | stream id      | consumer                                     |
//! |----------------|----------------------------------------------|
//! | 0              | broadcast sequencer (announcement order)     |
//! | 1              | public coin (round types)                    |
//! | 2              | nature (quantum measurement outcomes)        |
//! | 3              | entanglement source (ensemble sampling)      |
//! | 16 + p         | private randomness of party `p`              |
//!
//! Trial batches derive per-trial master seeds with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Sequencer,
    PublicCoin,
    Nature,
    Source,
    Party(usize),
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::Sequencer => 0,
            Stream::PublicCoin => 1,
            Stream::Nature => 2,
            Stream::Source => 3,
            Stream::Party(p) => 16 + p as u64,
        }
    }
}

pub fn stream_rng(master: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream.id());
    rng
}

/// One splitmix64 output step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `label` under `master`; distinct labels give unrelated seeds.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
