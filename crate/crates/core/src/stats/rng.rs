//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit root seed and
//! selected by the ChaCha stream word, so `(root_seed, stream_id)` fixes the
//! whole output sequence regardless of which thread consumes it or in which
//! order streams are created.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

/// Derives the stream `stream_id` of root seed `root_seed`.
pub fn derive_stream(root_seed: u64, stream_id: u64) -> RngStream {
    let mut inner = ChaCha8Rng::seed_from_u64(root_seed);
    inner.set_stream(stream_id);
    RngStream {
        root_seed,
        stream_id,
        inner,
    }
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Stream ids are partitioned per suite so replicas of different suites never
/// share a stream: the high 24 bits carry the suite tag.
pub fn stream_id(suite_tag: u64, index: u64) -> u64 {
    debug_assert!(index < 1 << 40);
    (suite_tag << 40) | index
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_id_repeat() {
        let mut a = derive_stream(7, 3);
        let mut b = derive_stream(7, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.position(), 2000);
    }

    #[test]
    fn distinct_ids_differ() {
        let mut a = derive_stream(7, 0);
        let mut b = derive_stream(7, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn golden_outputs_seed_42_stream_0() {
        let mut s = derive_stream(42, 0);
        let got: Vec<u64> = (0..10).map(|_| s.next_u64()).collect();
        assert_eq!(got, GOLDEN_42_0);
    }

    // Frozen from the first build; any change here breaks report reproducibility.
    const GOLDEN_42_0: [u64; 10] = [
        12578764544318200737,
        17529487244874322312,
        7886285670807131020,
        11572758976476374866,
        5323617429756461744,
        2766252901828231838,
        5682345367224914708,
        14828835203913492612,
        14227028876630821888,
        4401121311800897944,
    ];
}
