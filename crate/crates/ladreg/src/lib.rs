//! Least-absolute-deviations regression under adversarial label corruption.
//!
//! The observation model is `y = X w* + zeta + d`: a dense Gaussian design
//! `X`, an unknown (possibly sparse) signal `w*`, a sparse corruption vector
//! `zeta` that an adversary may place on any `eta` fraction of the responses,
//! and dense noise `d`. The central estimator is L1 regression,
//! `argmin ||y - Xw||_1`, optionally constrained to the L1 ball
//! `||w||_1 <= lambda`. On Gaussian designs it tolerates any corruption
//! fraction below the critical value `eta0 = 2(1 - Phi(sqrt(2 ln 2)))`, about
//! 0.239, and that threshold is sharp for the estimator.
//!
//! The crate provides:
//!
//! - [`analytics`]: the Gaussian tail quantities `B`, `G`, the critical
//!   fraction [`analytics::eta0`], their `p`-th-moment generalizations, and
//!   the breakdown-versus-`p` curve.
//! - [`numerics`]: minimal dense linear algebra (row-major matrices,
//!   Cholesky solves, sorted absolute partial sums) shared by everything else.
//! - [`solvers`]: the splitting-method L1 solvers, `lp` regression via IRLS,
//!   baselines (least squares, iterative trimming, a 1-D filtering
//!   estimator), and small-instance verification oracles.
//! - [`problems`]: deterministic generation of Gaussian designs, sparse
//!   signals, corruption vectors (including the two worst-case adversaries),
//!   and assembled problem instances.
//! - [`certificates`]: computable robustness witnesses — empirical tail
//!   masses, the recovery-gap functional, Monte-Carlo robustness constants,
//!   the sparse-to-cone sandwich bounds, and DKW confidence bands.
//! - [`harness`]: configuration-driven experiment sweeps with deterministic
//!   seeding and CSV output, plus [`cli`] for the command-line front end.
//!
//! The accompanying book under `book/` walks through the model and each
//! subsystem; its code samples are compiled and run as doc-tests.

pub mod analytics;
pub mod certificates;
pub mod cli;
pub mod harness;
pub mod numerics;
pub mod problems;
pub mod solvers;

pub use numerics::{DenseMatrix, Vector};

// Compile and run the book's code samples as doc-tests so the guide cannot
// drift out of sync with the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(analytics, "../../../book/src/gaussian-analytics.md");
    chapter!(solvers, "../../../book/src/solvers.md");
    chapter!(adversaries, "../../../book/src/adversaries.md");
    chapter!(certificates, "../../../book/src/certificates.md");
    chapter!(experiments, "../../../book/src/experiments.md");
}
