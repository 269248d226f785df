//! Random streams.
//!
//! Every stochastic step draws from a ChaCha20 generator. A stream is fully
//! determined by a 64-bit seed plus a 64-bit stream id, so per-asset and
//! per-resample streams can be created independently of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type SimRng = ChaCha20Rng;

pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Mixes a label into a master seed (FNV-1a over the label, then splitmix64).
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = stream(7, 0).random_iter().take(4).collect();
        let b: Vec<u64> = stream(7, 0).random_iter().take(4).collect();
        let c: Vec<u64> = stream(7, 1).random_iter().take(4).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(1, "BTC"), derive_seed(1, "ETH"));
        assert_eq!(derive_seed(1, "BTC"), derive_seed(1, "BTC"));
    }
}
