//! Reproducible random streams.
//!
//! A [`RngStream`] names a ChaCha12 keystream by `(seed, stream_id)`. Identical
//! pairs replay identical draws bit-for-bit; different stream ids select disjoint
//! keystreams of the same key, so replicas that own distinct ids are independent.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A child stream keyed by this stream and `index`. Children of distinct
    /// parents or with distinct indices never share a keystream.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_id: index,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha12Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        StreamRng { inner }
    }
}

/// Generator handed out by [`RngStream::rng`].
#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha12Rng,
}

impl StreamRng {
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(&mut self.inner);
        }
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Gamma(shape, 1) draw.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        Gamma::new(shape, 1.0)
            .expect("gamma shape must be positive and finite")
            .sample(&mut self.inner)
    }
}

impl RngCore for StreamRng {
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

/// Runs `f` once per replica on its own child stream of `stream` and returns
/// the results in replica order. The output does not depend on the number of
/// worker threads.
pub fn replicate<T, F>(stream: RngStream, replicas: usize, f: F) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> crate::Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = stream.child(i).rng();
            f(i, &mut r)
        })
        .collect()
}
