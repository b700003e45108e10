//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! 64-bit seed is derived from a single master seed and a key path, e.g.
//! `[PATHS, k.to_bits(), replication]`. The derivation folds each key word into
//! the state with the SplitMix64 finalizer:
//!
//! ```text
//! state = mix(master ^ 0x243f6a8885a308d3)
//! for w in key: state = mix(state ^ mix(w + 0x9e3779b97f4a7c15))
//! ```
//!
//! so runs are reproducible on any machine and independent of how work is
//! scheduled across threads.
//!
//! Gaussian variates use the Marsaglia polar method on top of the uniform
//! stream. The logarithm comes from the `libm` crate (a port of musl) instead
//! of the platform math library, so the same stream yields the same normals
//! on every target.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Key tags separating the independent uses of a master seed.
pub mod tag {
    pub const PATHS: u64 = 0x5041_5448;
    pub const MC_BATCH: u64 = 0x4d43_4254;
    pub const SIGMA: u64 = 0x5349_474d;
    pub const ORACLE: u64 = 0x4f52_4143;
    pub const FOUR_POINT: u64 = 0x4650_4e54;
    pub const CONTRACTION: u64 = 0x434f_4e54;
    pub const TIGHTNESS: u64 = 0x5449_4748;
    pub const WINDING: u64 = 0x5749_4e44;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of the stream addressed by `key` under `master`.
pub fn derive_seed(master: u64, key: &[u64]) -> u64 {
    let mut state = splitmix64(master ^ 0x243f_6a88_85a3_08d3);
    for &w in key {
        state = splitmix64(state ^ splitmix64(w.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    state
}

/// Uniform and Gaussian draws from one ChaCha8 stream.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub fn keyed(master: u64, key: &[u64]) -> Self {
        Self::from_seed(derive_seed(master, key))
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Fair coin.
    #[inline]
    pub fn coin(&mut self) -> bool {
        self.rng.next_u64() >> 63 == 1
    }

    /// Standard normal variate (Marsaglia polar method).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * libm::log(s) / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }
}
