//! Counter-based random streams.
//!
//! Every run owns one root seed. Each `(client, purpose)` pair maps to its own
//! ChaCha stream id, so the draws a client sees never depend on how many
//! threads execute the round or on the order in which clients are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream families derived from one root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    /// Minibatch draws of a client (initial batch and every local step).
    Sampling = 0,
    /// Server-side choices such as the uniformly random output round.
    Server = 1,
    /// Probes and Monte-Carlo diagnostics.
    Diagnostics = 2,
    /// Dataset generation and partitioning.
    Data = 3,
}

pub type Stream = ChaCha8Rng;

/// Root seed from which all per-client streams are split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    root: u64,
}

impl StreamFactory {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Stream for one client and purpose. Server streams use `client = 0`.
    pub fn stream(&self, client: usize, purpose: Purpose) -> Stream {
        let mut rng = ChaCha8Rng::from_seed(expand_seed(self.root));
        rng.set_stream(((client as u64) << 8) | purpose as u64);
        rng
    }
}

fn expand_seed(root: u64) -> [u8; 32] {
    // splitmix64 keeps nearby roots (0, 1, 2, ...) far apart in key space
    let mut state = root;
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    out
}
