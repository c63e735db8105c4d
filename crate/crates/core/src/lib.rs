//! Empirical copula processes, kernel-smoothed empirical copulas and the
//! Gaussian fields they converge to.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; randomness enters only through explicit seeds.
//!
//! Module map:
//!
//! * [`copula`] parametric copula families (cdf, partials, sampling).
//! * [`empirical`] rank-based empirical copula and the processes `A_n`,
//!   `alpha_n`, `beta_jn`.
//! * [`kernel`] and [`smoothing`] order-`s` product kernels and the smoothed
//!   empirical copula with its four-term error decomposition.
//! * [`fields`] copula Brownian bridge, Kiefer field and the corrected
//!   process `K*` on a [`grid::Grid`].
//! * [`rank`] Spearman/Kendall type functionals, rank-order statistics and
//!   the iterated-logarithm constant.
//! * [`stats`] small statistical helpers (KS, Anderson-Darling, medians).

#![no_std]
// `num_traits::Float` supplies f64 math without std. When std is anywhere in
// the build graph (tests, or a std dependent enabling std features) the
// inherent methods take over and the import goes unused.
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod copula;
pub mod empirical;
mod error;
pub mod fields;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod rank;
pub mod rng;
pub mod smoothing;
pub mod special;
pub mod stats;

pub use copula::{Copula, CopulaModel, Family};
pub use empirical::{Sample, SampleKind, TiePolicy};
pub use error::{Error, Result};
pub use grid::Grid;
