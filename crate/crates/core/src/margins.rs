//! Univariate loss margins: quantiles, conditional tail expectations, means.
//!
//! The Pareto margin carries two quantile variants. `quantile` is the exact
//! inverse of the survival function `(1+x)^{-alpha}`; `quantile_paper` drops
//! the `-1` shift, which is the scale used by the published reference tables
//! and by every closed-form risk expression in [`crate::risk`]. Both are
//! exposed; table-reproduction paths use the latter.

use crate::error::{Error, Result};
use crate::quad;

/// Pareto loss margin with survival function `(1+x)^{-alpha}` on `x >= 0`.
///
/// `alpha > 1` is required so the margin has a finite mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoMargin {
    alpha: f64,
}

impl ParetoMargin {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::parameter(format!(
                "Pareto index alpha = {alpha} must be finite and > 1 for a finite mean"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exact inverse of the survival function: `(1-u)^{-1/alpha} - 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        Ok((1.0 - u).powf(-1.0 / self.alpha) - 1.0)
    }

    /// Table-scale quantile `(1-u)^{-1/alpha}` (no shift).
    pub fn quantile_paper(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        Ok((1.0 - u).powf(-1.0 / self.alpha))
    }

    /// Closed-form tail expectation `alpha (1-s)^{-1/alpha} / (alpha - 1)`,
    /// consistent with `quantile_paper`.
    pub fn cte(&self, s: f64) -> Result<f64> {
        check_open_unit(s)?;
        Ok(self.alpha * (1.0 - s).powf(-1.0 / self.alpha) / (self.alpha - 1.0))
    }

    /// Mean on the table scale: integral of `quantile_paper` over `(0,1)`,
    /// which is `alpha / (alpha - 1)`.
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha - 1.0)
    }
}

/// Empirical margin over a sorted sample; the quantile is the
/// right-continuous inverse of the empirical CDF (type-1).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMargin {
    samples: Vec<f64>,
}

impl EmpiricalMargin {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::parameter(format!(
                "empirical margin needs at least 2 observations, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::parameter(
                "empirical margin contains non-finite observations",
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `inf { x_(i) : i/n >= u }` for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("quantile level {u} outside [0, 1]")));
        }
        let n = self.samples.len();
        let i = (u * n as f64).ceil() as usize;
        Ok(self.samples[i.clamp(1, n) - 1])
    }

    /// Number of observations strictly above the `s`-quantile.
    pub fn tail_count(&self, s: f64) -> Result<usize> {
        let threshold = self.quantile(s)?;
        Ok(self.samples.iter().filter(|&&x| x > threshold).count())
    }

    /// Tail expectation as the mean of the quantile function over `(s, 1)`.
    ///
    /// Errors when no observation lies strictly above the threshold; a tail
    /// carried by a single order statistic is a point-mass estimate, not a
    /// tail mean.
    pub fn cte(&self, s: f64) -> Result<f64> {
        check_open_unit(s)?;
        if self.tail_count(s)? == 0 {
            return Err(Error::DegenerateTail(format!(
                "no observations above the {s}-quantile of the empirical margin"
            )));
        }
        let r = quad::integrate(|u| self.quantile_unchecked(u), s, 1.0, quad::DEFAULT_TOL)?;
        Ok(r.value / (1.0 - s))
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        let n = self.samples.len();
        let i = (u * n as f64).ceil() as usize;
        self.samples[i.clamp(1, n) - 1]
    }
}

/// A univariate loss distribution usable as the target margin of a risk
/// query.
#[derive(Debug, Clone, PartialEq)]
pub enum Margin {
    Pareto(ParetoMargin),
    Empirical(EmpiricalMargin),
}

impl Margin {
    pub fn pareto(alpha: f64) -> Result<Self> {
        Ok(Margin::Pareto(ParetoMargin::new(alpha)?))
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Ok(Margin::Empirical(EmpiricalMargin::new(samples)?))
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            Margin::Pareto(m) => m.quantile(u),
            Margin::Empirical(m) => m.quantile(u),
        }
    }

    /// Quantile on the scale used by the risk-measure tables.
    ///
    /// For Pareto margins this is the unshifted `(1-u)^{-1/alpha}`; for
    /// empirical margins it coincides with [`Margin::quantile`].
    pub fn quantile_paper(&self, u: f64) -> Result<f64> {
        match self {
            Margin::Pareto(m) => m.quantile_paper(u),
            Margin::Empirical(m) => m.quantile(u),
        }
    }

    /// Conditional tail expectation at level `s`.
    pub fn cte(&self, s: f64) -> Result<f64> {
        match self {
            Margin::Pareto(m) => m.cte(s),
            Margin::Empirical(m) => m.cte(s),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Margin::Pareto(m) => m.mean(),
            Margin::Empirical(m) => m.mean(),
        }
    }

    /// Exponent `p` of the `(1-u)^{-p}` factor in the quantile, when the
    /// margin has one. Drives the choice of integrator in [`crate::risk`].
    pub fn upper_singularity(&self) -> Option<f64> {
        match self {
            Margin::Pareto(m) => Some(1.0 / m.alpha),
            Margin::Empirical(_) => None,
        }
    }

    /// Observations strictly above the `s`-quantile, for empirical margins.
    pub fn tail_sample_count(&self, s: f64) -> Option<usize> {
        match self {
            Margin::Pareto(_) => None,
            Margin::Empirical(m) => m.tail_count(s).ok(),
        }
    }
}

fn check_open_unit(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "level {u} outside the open interval (0, 1)"
        )));
    }
    Ok(())
}
