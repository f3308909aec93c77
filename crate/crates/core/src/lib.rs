//! Solver library for constrained discounted stochastic games.
//!
//! `n` players share a finite state space; each player independently commits
//! to a randomized stationary strategy, the joint profile drives a Markov
//! chain, and player `i` accumulates a discounted objective cost together
//! with constraint costs that must stay below the bounds `kappa`. The crate
//! provides:
//!
//! - [`model`] — game specifications, validation, strategies, and the
//!   per-player reduction to a marginalized decision process;
//! - [`evaluation`] — exact policy evaluation of the discounted
//!   functionals, a seeded Monte Carlo oracle, and feasibility tests;
//! - [`occupation`] — occupation measures: construction, flow balance,
//!   cost pairing, disaggregation, convex mixing, and projection;
//! - [`simplex`] — an embedded, certificate-checked two-phase simplex;
//! - [`cop`] — each player's constrained best response as a linear program
//!   over occupation measures, plus the Slater-condition check;
//! - [`nash`] — stationary ε-equilibria by damped best-response iteration
//!   with exact, LP-certified gaps;
//! - [`truncation`] — finite approximations of countable-state models with
//!   cost clipping, initial-law perturbation, and bound relaxation;
//! - [`assumptions`] — checkable certificates: weighted drift conditions,
//!   second-moment bounds, and strict-feasibility probes;
//! - [`format`] — versioned JSON documents for games and strategies, plus a
//!   canonical (byte-stable) JSON renderer;
//! - [`sampling`] — seeded random instances for tests and probes;
//! - [`rng`] — the deterministic substream construction every randomized
//!   routine shares.
//!
//! All randomness is seeded and counter-based, all tolerances are fixed
//! constants documented where they are enforced, and every solver output is
//! certified before it is returned.

#![forbid(unsafe_code)]

pub mod assumptions;
pub mod cop;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod model;
pub mod nash;
pub mod occupation;
pub mod rng;
pub mod sampling;
pub mod simplex;
pub mod truncation;

pub use error::CsgError;
