//! Couplings of lattice distributions, exact combinatorial inequality
//! verification, and KMT-type strong-embedding simulators.
//!
//! The crate is organized around one theme: a symmetric Bernoulli walk
//! `S_n` can be compared with `S_4n` (and, by iterating, with a Gaussian)
//! through three independent routes, each of which is checkable:
//!
//! * [`lemma_verify`]: exact big-rational verification of the binomial
//!   mass/tail comparisons between `2S_2m` and `S_8m`, plus the entropy
//!   and Ash-type estimates they rest on.
//! * [`monotone_coupling`]: quantile (comonotone) couplings realizing
//!   those tail comparisons at atom level, with deterministic margin
//!   checks and a seeded chain sampler.
//! * [`stein_markov`]: Stein coefficients, Ehrenfest-like birth-death
//!   chains and the joint chain on the product grid whose stationary
//!   law couples two given lattice distributions; moment bounds on the
//!   difference are verified from exact stationary solves.
//!
//! The two simulators [`kmt_embed`] (dyadic empirical-process embedding)
//! and [`rw_embed`] (recursive random-walk bridge embedding) drive the
//! verified univariate couplings to path level and measure the resulting
//! sup-deviations under seeded, reproducible Monte Carlo.
//!
//! Everything small-scale is exact: probability mass functions are
//! big-rational ([`exact_dist`]), inequality suites compare integers, and
//! floating point enters only for transcendental functionals, stationary
//! solves and Monte Carlo statistics.

pub mod error;
pub mod exact_dist;
pub mod kmt_embed;
pub mod lemma_verify;
pub mod monotone_coupling;
pub mod numeric;
pub mod report;
pub mod rng;
pub mod rw_embed;
pub mod stein_markov;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
