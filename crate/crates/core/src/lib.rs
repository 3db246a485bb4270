//! Multi-Hamiltonian structure toolkit for even-order linear oscillators.
//!
//! A `2n`-th order oscillator `prod_i (d^2/dt^2 + w_i^2) x = 0` is equivalent to a
//! first-order companion system `dx/dt = A x` on a `2n`-dimensional phase space.
//! This crate constructs the objects that make that system multi-Hamiltonian and
//! verifies every structural identity numerically:
//!
//! * [`symfun`] — elementary symmetric polynomials in the squared frequencies,
//!   their one-variable-omitted reductions, and odd power sums;
//! * [`classical`] — companion vector field, per-mode oscillator variables and
//!   quadratic integrals, constant Poisson tensors (the two-parameter family
//!   for `n = 2` and the power-sum tensor for any order), bracket and
//!   Lie-derivative residuals, and Hamiltonian weight solving;
//! * [`dynamics`] — exact modal time evolution (including secular terms at
//!   repeated frequencies), a fixed-step RK4 reference integrator, and
//!   conservation-drift reporting;
//! * [`quantum`] — mode bases, commutator solving from a Poisson tensor,
//!   normalization of the creation/annihilation pairs, quadratic normal forms,
//!   anisotropic spectra, and the repeated-frequency analysis;
//! * [`verify`] — the batteries-included residual check suite behind
//!   `puosc verify`.
//!
//! All arithmetic is in `f64`; verification is tolerance-based with max-abs
//! residuals throughout.

pub mod classical;
pub mod dynamics;
pub mod error;
pub mod quantum;
pub mod symfun;
pub mod verify;

pub use classical::{
    LinearFormSet, LinearVectorField, NamedCombinations, PoissonTensor, QuadraticObservable,
    TensorKind,
};
pub use dynamics::{ModalDecomposition, Trajectory};
pub use error::Error;
pub use quantum::{ModeBasis, ModeCommutators, NormalForm, QuantumConfig};
pub use symfun::FrequencySet;

/// Relative gap below which two frequencies are considered equal.
///
/// Shared by every module that needs to distinguish the simple-spectrum path
/// from the secular one, so all of them agree on what "repeated" means.
pub const DEGENERACY_TOL_REL: f64 = 1e-9;

pub type Result<T> = std::result::Result<T, Error>;
