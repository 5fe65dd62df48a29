//! Quantum cross entropy, its companion quantities, and the statistical
//! machinery around them — with a verification surface for every claim.
//!
//! The central object is `S(ρ, σ) = -tr(ρ log σ)`, the cross entropy of a
//! model state `σ` relative to a data state `ρ`. It decomposes as relative
//! entropy plus von Neumann entropy, is bounded below by state overlap and
//! fidelity, and connects to maximum-likelihood estimation in two regimes:
//! minimized directly it recovers the data state exactly, while evaluated on
//! empirical density matrices built from measurement outcomes it dominates
//! the negative average log-likelihood — with explicitly characterized
//! equality conditions, and an explicit POVM fixture where the naive
//! generalization fails.
//!
//! | Module | Role |
//! |--------|------|
//! | [`matfun`] | Hermitian eigendecomposition and matrix functions (`log`, `√`, the log's Fréchet derivative) |
//! | [`states`] | validated density matrices, pure states, seeded random ensembles |
//! | [`entropy`] | classical and quantum information quantities, the lower-bound chain |
//! | [`measurement`] | observables, projective measurements, POVMs, Born-rule sampling |
//! | [`empirical`] | outcome datasets, empirical density matrices, log-likelihoods, dataset files |
//! | [`mle`] | linear inversion and first-order estimators over a Cholesky-style parameterization |
//! | [`verify`] | named check suites with worst-case margins and replayable witnesses |
//! | [`cli`] | the `qxent` binary: `check`, `tomography`, `bounds`, `counterexample` |
//!
//! ```
//! use qxent::entropy::{quantum_cross_entropy, quantum_relative_entropy, von_neumann};
//! use qxent::states::{random_density, stream_rng};
//!
//! let mut rng = stream_rng(7, 0);
//! let rho = random_density(2, 2, &mut rng);
//! let sigma = random_density(2, 2, &mut rng);
//!
//! let s = quantum_cross_entropy(&rho, &sigma)?.value().unwrap();
//! let rel = quantum_relative_entropy(&rho, &sigma)?.value().unwrap();
//! assert!((s - rel - von_neumann(&rho)).abs() < 1e-10);
//! # Ok::<(), qxent::Error>(())
//! ```
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! blocks are compiled and executed as part of `cargo test` (see the bottom
//! of this file), so the guide and the library cannot drift apart.

pub mod cli;
pub mod config;
pub mod empirical;
pub mod entropy;
pub mod error;
pub mod matfun;
pub mod measurement;
pub mod mle;
mod numeric;
pub mod report;
pub mod states;
pub mod verify;

pub use entropy::ExtendedReal;
pub use error::{Error, Result};
pub use matfun::{CMatrix, CVector};
pub use states::{DensityMatrix, PureState};

// Keep the book's code blocks honest: each chapter is attached here as a
// doctest target, so `cargo test` runs every snippet in the guide.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/states.md")]
    pub struct States;
    #[doc = include_str!("../../../book/src/matrix-functions.md")]
    pub struct MatrixFunctions;
    #[doc = include_str!("../../../book/src/entropies.md")]
    pub struct Entropies;
    #[doc = include_str!("../../../book/src/measurements.md")]
    pub struct Measurements;
    #[doc = include_str!("../../../book/src/empirical-data.md")]
    pub struct EmpiricalData;
    #[doc = include_str!("../../../book/src/estimation.md")]
    pub struct Estimation;
    #[doc = include_str!("../../../book/src/verification.md")]
    pub struct Verification;
}
