//! Greedy beta-expansions for `1 < beta <= 2`, the Parry invariant measure and
//! the generalized Takagi function, computed with certified enclosures.
//!
//! Orbits of exact inputs are computed exactly in `Q(beta)`; every digit is
//! decided by a certified sign test and every reported real carries a rigorous
//! radius.

pub mod base;
pub mod cli;
pub mod dynamics;
pub mod enclosure;
pub mod error;
pub mod field;
pub mod measure;
pub mod regularity;
pub mod rng;
pub mod stats;
pub mod takagi;

pub use base::BetaParam;
pub use enclosure::Enclosure;
pub use error::{Error, Result};
pub use field::Point;

/// Seed used by the reference statistical runs.
pub const REFERENCE_SEED: u64 = 271_828;
