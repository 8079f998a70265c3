//! Local-unitary invariants, deterministic two-outcome POVMs and explicit
//! LOCC protocols for three-qubit pure states.
//!
//! The crate is organised bottom-up:
//!
//! - [`mat2`] and [`state`]: 2×2 complex matrices, three-qubit pure states,
//!   party-relative `T` matrices, local unitaries and Kraus operators.
//! - [`random`]: seeded state and unitary ensembles.
//! - [`invariants`]: the `I1..I6` orbit fingerprint, with a literal
//!   index-sum oracle.
//! - [`canonical`]: two-product-term decomposition of GHZ-class states and
//!   the `Ω` invariant whose real part is conserved by deterministic LOCC.
//! - [`gate`]: search for a local unitary that turns a state into a gate
//!   state (one admitting a deterministic two-outcome POVM).
//! - [`povm`]: construction and application of deterministic POVMs, the
//!   closed-form outcome invariants and orbit curves.
//! - [`protocols`]: the three-step GHZ protocols with every branch simulated
//!   and corrected.
//! - [`campaign`]: seeded Monte Carlo verification campaigns.

// `!(x <= eps)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod canonical;
pub mod error;
pub mod gate;
pub mod invariants;
pub mod json;
pub mod mat2;
pub mod poly;
pub mod povm;
pub mod protocols;
pub mod random;
pub mod state;
pub mod tolerance;

pub use canonical::{classify, decompose_ghz, omega, GhzCanonicalForm, StateClass};
pub use error::{Error, Result};
pub use invariants::{compute_invariants, InvariantVector, OrbitRelation};
pub use mat2::Mat2;
pub use num_complex::Complex64;
pub use state::{Party, PureState3Q, TMatrixPair};
pub use tolerance::Tolerances;
