//! Deterministic random-number substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream derived
//! from a single user-facing seed plus a `(role, index)` pair. Distinct roles
//! can never collide, and indexed substreams within a role are independent,
//! so row-level generation can fan out across threads while producing output
//! that is bit-identical to the sequential order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag for a random substream. The numeric value is part of the
/// determinism contract: changing it changes every downstream sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Role {
    /// Latent Gaussian draws feeding the generator.
    Latent = 1,
    /// Draws for the moment-matched Gaussian sampler.
    GaussEquiv = 2,
    /// Standard-Gaussian rows for the negative class.
    ClassNeg = 3,
    /// Dataset shuffling.
    Shuffle = 4,
    /// Network weight initialization.
    NetInit = 5,
    /// Label coin flips during online training.
    TrainLabel = 6,
    /// Fresh training samples drawn at each SGD step.
    TrainSample = 7,
    /// Perturbations for solver restarts.
    SolverRestart = 8,
    /// Random parameter-file generation.
    Template = 9,
}

const INDEX_BITS: u32 = 48;

/// A ChaCha8 generator for `(seed, role, index)`, independent of all other
/// `(role, index)` substreams under the same seed.
///
/// # Panics
/// If `index` needs more than 48 bits (no practical caller comes close).
pub fn substream(seed: u64, role: Role, index: u64) -> ChaCha8Rng {
    assert!(
        index < (1 << INDEX_BITS),
        "substream index {index} exceeds the 48-bit budget"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((role as u64) << INDEX_BITS) | index);
    rng
}
