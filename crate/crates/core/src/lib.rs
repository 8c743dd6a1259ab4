//! Copula-based tail risk measures for bivariate dependent losses.
//!
//! The central quantity is the copula conditional tail expectation (CCTE):
//! the expected value of a target loss given that both the target and an
//! associated loss exceed their respective value-at-risk thresholds. The
//! crate provides
//!
//! * bivariate copula families (product, FGM, Gumbel, Clayton, and
//!   generator-defined Archimedean) with partial derivatives, survival
//!   values, Kendall's tau, and tail-dependence coefficients ([`copula`]),
//! * univariate loss margins (Pareto and empirical) with quantiles and
//!   conditional tail expectations ([`margins`]),
//! * adaptive quadrature that is robust to the integrable endpoint
//!   singularity of heavy-tailed quantile functions ([`quad`]),
//! * the CCTE itself by three independent routes, plus VaR/CTE baselines
//!   and analytic upper bounds ([`risk`]),
//! * Kendall-tau estimation and tau-inversion copula fitting for return
//!   panels ([`fit`]),
//! * a Monte Carlo oracle based on conditional-inversion sampling that
//!   validates the analytic routes ([`montecarlo`]).
//!
//! Data-parallel loops (Monte Carlo chunks, table grids, pairwise fits) run
//! on rayon when the default `parallel` feature is enabled and fall back to
//! sequential iteration without it. Results are bit-identical either way.

pub mod copula;
pub mod error;
pub mod exec;
pub mod fit;
pub mod margins;
pub mod montecarlo;
pub mod quad;
pub mod risk;

pub use copula::{ArchimedeanGenerator, CopulaFamily, CopulaModel};
pub use error::{Error, Result};
pub use margins::{EmpiricalMargin, Margin, ParetoMargin};
pub use montecarlo::McEstimate;
pub use risk::{CcteMethod, CcteResult, RiskQuery};
