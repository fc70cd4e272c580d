//! Verification toolkit for quantum-classical imperative programs.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`syntax`] — concrete grammar, ASTs, parsing, substitution and
//!   pretty-printing for programs, deterministic assertions, real
//!   expressions and probabilistic formulas;
//! * [`cqstate`] — pure and mixed classical-quantum states plus the dense
//!   complex linear algebra the semantics needs (gate application,
//!   projection, Born probabilities, projector expectations);
//! * [`semantics`] — the denotational interpreter over subdistributions of
//!   cq-states, with bounded while-iteration and residual-mass accounting;
//! * [`assertions`] — satisfaction of deterministic assertions over pure and
//!   mixed states, evaluation of real expressions and probabilistic formulas;
//! * [`wpcalc`] — syntactic transformers: weakest preconditions for
//!   deterministic assertions, conditional terms, weakest preterms for real
//!   expressions, and weakest preconditions for probabilistic formulas;
//! * [`checker`] — Hoare-triple verdicts by semantic execution and by
//!   wp-entailment over a test-state suite, and structural checking of proof
//!   scripts;
//! * [`gen`] — seeded random generators for programs, assertions and terms,
//!   used by the oracle-style test harnesses.

pub mod assertions;
pub mod checker;
pub mod cqstate;
pub mod error;
pub mod gen;
pub mod semantics;
pub mod syntax;
pub mod wpcalc;

pub use error::QhlError;
pub use syntax::SpecFile;
