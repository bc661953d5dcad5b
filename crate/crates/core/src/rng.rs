//! Counter-based random substreams.
//!
//! Every random draw in the simulator comes from a ChaCha8 generator whose
//! 256-bit key is the tuple `(master seed, purpose tag, index a, index b)`,
//! each packed as a little-endian u64. Topology `i` uses
//! `(seed, TOPOLOGY, i, 0)`, its shadowing `(seed, SHADOWING, i, 0)`, and
//! oracle trial `j` on topology `i` uses `(seed, TRIAL, i, j)`. Growing a
//! trial or topology count never perturbs the draws of earlier indices, and
//! results do not depend on which thread consumed which stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Topology = 0x746f_706f,
    Shadowing = 0x7368_6164,
    Trial = 0x7472_6961,
    Test = 0x7465_7374,
}

pub fn substream(seed: u64, purpose: Purpose, a: u64, b: u64) -> Stream {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// One draw from CN(0, variance).
#[inline]
pub fn cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// `len` i.i.d. CN(0, variance) draws.
pub fn cn_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> Vec<Complex64> {
    (0..len).map(|_| cn(rng, variance)).collect()
}
