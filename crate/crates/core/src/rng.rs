//! Seeded, counter-based random number generation.
//!
//! Every randomized routine in the crate draws from a ChaCha8 generator
//! produced by [`substream`]. The construction is fixed so that results are
//! reproducible bit-for-bit across platforms and across thread counts:
//!
//! 1. the 32-byte ChaCha key is the concatenation of four successive
//!    SplitMix64 outputs seeded with the `u64` master seed, little-endian;
//! 2. the independent unit of work (episode index, restart index, sample
//!    index) selects the ChaCha *stream id*, so distinct units use
//!    non-overlapping streams of the same keyed generator.
//!
//! Identical `(seed, stream)` pairs therefore yield identical draw sequences
//! no matter how work is scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the SplitMix64 sequence (Steele–Lea–Flood generator).
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic ChaCha8 generator for the given `(seed, stream)` pair.
///
/// Draw sequences for different `stream` values never overlap, which makes
/// it safe to hand consecutive stream ids to concurrent workers.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Sample an index from a probability row (entries `>= 0` summing to `~1`).
///
/// Uses a single uniform draw and a cumulative walk; any rounding deficit in
/// the row is absorbed by the final index.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    debug_assert!(!probs.is_empty(), "cannot sample from an empty row");
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Uniform draw from the probability simplex on `k` coordinates.
///
/// Implements the Dirichlet(1, …, 1) distribution by normalizing independent
/// unit exponentials; degenerate draws fall back to the uniform row.
pub fn simplex_row<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    assert!(k > 0, "simplex draw needs at least one coordinate");
    let mut row: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = row.iter().sum();
    if total <= f64::MIN_POSITIVE {
        return vec![1.0 / k as f64; k];
    }
    for v in &mut row {
        *v /= total;
    }
    row
}
