//! Seeded random streams.
//!
//! Every random decision flows from one user seed. Components derive their own
//! named substream (`"init"`, `"sampling"`, `"split"`, ...) so that changing
//! how much randomness one component consumes never perturbs another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

pub type StreamRng = ChaCha8Rng;

/// Derives the substream `name` of `seed`.
pub fn substream(seed: u64, name: &str) -> StreamRng {
    // FNV-1a over the name, then mixed with the seed through splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    StreamRng::seed_from_u64(splitmix64(seed ^ h))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fills `out` with a direction drawn uniformly from the unit sphere.
pub fn fill_unit_vector<T: Scalar, R: Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    loop {
        let mut norm2 = 0.0f64;
        let draws: Vec<f64> = (0..out.len())
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                norm2 += z * z;
                z
            })
            .collect();
        if norm2 > 1e-24 {
            let norm = norm2.sqrt();
            for (o, z) in out.iter_mut().zip(draws) {
                *o = T::of(z / norm);
            }
            return;
        }
    }
}

pub fn fill_uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, out: &mut [T], lo: f64, hi: f64) {
    for o in out {
        *o = T::of(rng.random_range(lo..hi));
    }
}
