//! Optimal council weights for two-tier voting systems.
//!
//! A population is split into `M` groups whose voters interact through a
//! mean-field coupling matrix. Each group sends one delegate to a council
//! and casts its vote by in-group majority. This crate computes the
//! council weights that minimise the expected squared gap between the
//! weighted council outcome and the popular vote (the democracy deficit),
//! in the large-population limit, and provides exact enumeration plus
//! Monte Carlo simulation to validate the asymptotics at finite sizes.

// `!(x > 0.0)` is used throughout as a NaN-rejecting positivity guard
// (`x <= 0.0` silently accepts NaN), and index-based loops are kept in
// the dense matrix code where row/column indices mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod strong;
pub mod weak;

pub use error::{Error, Result};
pub use linalg::{Definiteness, DefinitenessReport, SymmetricMatrix};
pub use model::{
    build_coupling, classify_regime, load_model, CouplingFamily, CouplingMatrix, GroupSizes,
    ModelSpec, Regime, RegimeClass,
};
pub use strong::{
    f_gradient, f_value, minimize_f, mixed_cluster_weights, solve_curie_weiss,
    strong_weight_solution, CWRoot, SigmaScale, StrongMinima, WeightSolution,
};
pub use weak::{
    check_feasibility, closed_form_weights, council_correlation_matrix, covariance_matrix,
    orthant_probability, solve_weak_weights, weak_system, CovarianceMatrix, FeasibilityReport,
    WeakSystem,
};

// Compile and run the guide's code snippets as doctests so the book in
// `book/` cannot drift from the library.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/models.md")]
pub struct BookModels;
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/weak-regime.md")]
pub struct BookWeakRegime;
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/strong-regime.md")]
pub struct BookStrongRegime;
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulation.md")]
pub struct BookSimulation;
