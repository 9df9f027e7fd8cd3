//! Named random substreams.
//!
//! Each (channel, purpose) pair draws from its own ChaCha stream whose seed
//! is a SplitMix64 hash of the master seed, the channel index, the channel
//! salt and the purpose tag. Changing how many numbers one stream consumes
//! never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::trace::ChannelId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Backoff,
    Error,
    Interferer(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Backoff => 1,
            Purpose::Error => 2,
            Purpose::Interferer(k) => 0x100 + k as u64,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream_seed(master: u64, channel: ChannelId, salt: u64, purpose: Purpose) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ channel.0 as u64);
    h = splitmix64(h ^ salt);
    splitmix64(h ^ purpose.tag())
}

pub fn substream(master: u64, channel: ChannelId, salt: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, channel, salt, purpose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_stable() {
        let a = substream_seed(1, ChannelId::A, 0, Purpose::Backoff);
        assert_eq!(a, substream_seed(1, ChannelId::A, 0, Purpose::Backoff));
        assert_ne!(a, substream_seed(1, ChannelId::B, 0, Purpose::Backoff));
        assert_ne!(a, substream_seed(1, ChannelId::A, 0, Purpose::Error));
        assert_ne!(a, substream_seed(1, ChannelId::A, 1, Purpose::Backoff));
        assert_ne!(a, substream_seed(2, ChannelId::A, 0, Purpose::Backoff));
        let mut r1 = substream(9, ChannelId::B, 0, Purpose::Interferer(3));
        let mut r2 = substream(9, ChannelId::B, 0, Purpose::Interferer(3));
        assert_eq!(r1.random::<u64>(), r2.random::<u64>());
    }
}
