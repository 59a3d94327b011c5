//! Seeded random streams.
//!
//! Every randomized step derives its own ChaCha stream from the user seed and
//! a fixed tag so results do not depend on the order in which independent
//! computations run.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Mat, C64};

pub type Stream = ChaCha8Rng;

/// Splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, tags: &[u64]) -> Stream {
    let mut s = mix(seed);
    for &t in tags {
        s = mix(s ^ mix(t.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    ChaCha8Rng::seed_from_u64(s)
}

pub fn gauss(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform integer in `0..n`.
pub fn below(rng: &mut Stream, n: usize) -> usize {
    rng.random_range(0..n)
}

pub fn gauss_vec(rng: &mut Stream, len: usize) -> Vec<f64> {
    (0..len).map(|_| gauss(rng)).collect()
}

pub fn gauss_complex(rng: &mut Stream) -> C64 {
    C64::new(gauss(rng), gauss(rng))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gauss_mat(rng: &mut Stream, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| gauss_complex(rng))
}

/// Random Hermitian matrix (GUE-like scaling is irrelevant here).
pub fn gauss_herm(rng: &mut Stream, n: usize) -> Mat {
    let g = gauss_mat(rng, n, n);
    (&g + &g.adjoint()).scale_re(0.5)
}
