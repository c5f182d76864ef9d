//! Security investment games under epidemic risk.
//!
//! Agents on a network decide whether to buy self-protection against an
//! epidemic that spreads by bond percolation: each agent suffers a direct
//! loss with probability `p+` (unprotected) or `p-` (protected), and an
//! infected neighbor passes the infection on with probability `q+` or `q-`
//! depending on the receiver's protection state. Protection costs `c`, a
//! realized loss costs `l`.
//!
//! The crate has two halves that check each other:
//!
//! * an analytic half (`dist`, `econ`, `lmf`, `game`) that solves the
//!   branching-process fixed point for infection probabilities on sparse
//!   random graphs and derives best responses, Nash equilibria, social
//!   optima, prices of anarchy, adoption curves and tipping thresholds;
//! * a simulation half (`netgen`, `sim`) that generates finite random
//!   graphs and Galton-Watson trees, percolates the epidemic by Monte
//!   Carlo, and provides exact oracles (full enumeration on tiny graphs,
//!   bottom-up dynamic programming on trees) the analytic half must match.
//!
//! All stochastic operations take explicit seeds and are bit-reproducible.

pub mod dist;
pub mod econ;
pub mod error;
pub mod game;
pub mod lmf;
pub mod netgen;
pub mod numeric;
pub mod rng;
pub mod sim;

pub use dist::DegreeDist;
pub use econ::{AgentEconomy, Utility};
pub use error::Error;
pub use game::{CostModel, Equilibrium, EquilibriumReport, Stability};
pub use lmf::{EpidemicParams, LmfSolution};
pub use netgen::{Graph, GwTree};
pub use sim::{Investment, SimConfig, SimOutcome};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
