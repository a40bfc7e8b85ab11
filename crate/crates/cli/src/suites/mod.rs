//! One module per subcommand. Each suite writes its own outputs and returns the report.

pub mod aggregate;
pub mod identity_fuzz;
pub mod lemma_scan;
pub mod ode_run;
pub mod soliton_verify;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `index` of family `tag` under the run seed.
pub(crate) fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Stream tags, fixed so that adding a suite never shifts another suite's draws.
pub(crate) mod tags {
    pub const SCAN: u64 = 1;
    pub const AVERAGING: u64 = 2;
    pub const CLAIMS: u64 = 3;
    pub const FUZZ: u64 = 4;
    pub const ORACLE: u64 = 5;
    pub const ORTHANT: u64 = 6;
    pub const HI: u64 = 7;
    pub const COMPARISON: u64 = 8;
    pub const SOLITON: u64 = 9;
}
