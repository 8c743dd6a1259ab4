//! Bivariate copula families, partial derivatives, survival values, and
//! tail-dependence quantities.
//!
//! Four parametric families are built in (product, FGM, Gumbel, Clayton)
//! together with a generator-defined Archimedean construction
//! `C(u,v) = psi^{[-1]}(psi(u) + psi(v))`. Gumbel and Clayton evaluate both
//! through their closed forms and, on request, through their generators;
//! the two routes agree to machine precision and exercise independent
//! algebra.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

/// Boundary tolerance: analytic partial derivatives may exit `[0, 1]` by a
/// few ulps from rounding; anything beyond this is a bug, not noise.
const BOUNDARY_EPS: f64 = 1e-12;

/// Copula family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Product,
    Fgm,
    Gumbel,
    Clayton,
    GeneratorDefined,
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CopulaFamily::Product => "product",
            CopulaFamily::Fgm => "fgm",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::GeneratorDefined => "generator",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "product" | "independence" => Ok(CopulaFamily::Product),
            "fgm" => Ok(CopulaFamily::Fgm),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            "clayton" => Ok(CopulaFamily::Clayton),
            other => Err(Error::parameter(format!("unknown copula family '{other}'"))),
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Archimedean generator triple `(psi, psi', psi^{-1})`.
///
/// `psi` maps `(0, 1]` onto `[0, inf)` with `psi(1) = 0`, strictly
/// decreasing and convex; `psi_inverse` inverts it on `[0, psi(0))`. A
/// strict generator has `psi(0) = inf`, making the pseudo-inverse a true
/// inverse. Construction validates all of this on a grid.
#[derive(Clone)]
pub struct ArchimedeanGenerator {
    psi: RealFn,
    psi_prime: RealFn,
    psi_inverse: RealFn,
    strict: bool,
}

impl fmt::Debug for ArchimedeanGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArchimedeanGenerator")
            .field("strict", &self.strict)
            .finish_non_exhaustive()
    }
}

impl ArchimedeanGenerator {
    pub fn new(
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
        strict: bool,
    ) -> Result<Self> {
        let g = Self {
            psi: Arc::new(psi),
            psi_prime: Arc::new(psi_prime),
            psi_inverse: Arc::new(psi_inverse),
            strict,
        };
        g.validate()?;
        Ok(g)
    }

    /// Gumbel generator `psi(t) = (-ln t)^theta`, strict for `theta >= 1`.
    pub fn gumbel(theta: f64) -> Result<Self> {
        check_theta(CopulaFamily::Gumbel, theta)?;
        Self::new(
            move |t: f64| (-t.ln()).powf(theta),
            move |t: f64| -theta * (-t.ln()).powf(theta - 1.0) / t,
            move |x: f64| (-x.powf(1.0 / theta)).exp(),
            true,
        )
    }

    /// Clayton generator `psi(t) = (t^{-theta} - 1)/theta`, strict for
    /// `theta > 0`.
    pub fn clayton(theta: f64) -> Result<Self> {
        check_theta(CopulaFamily::Clayton, theta)?;
        Self::new(
            move |t: f64| (t.powf(-theta) - 1.0) / theta,
            move |t: f64| -t.powf(-theta - 1.0),
            move |x: f64| (1.0 + theta * x).powf(-1.0 / theta),
            true,
        )
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn psi(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        (self.psi_prime)(t)
    }

    pub fn psi_inverse(&self, x: f64) -> f64 {
        (self.psi_inverse)(x)
    }

    /// Pseudo-inverse: the true inverse below `psi(0)`, zero beyond it.
    pub fn pseudo_inverse(&self, x: f64) -> f64 {
        if !self.strict {
            let cap = (self.psi)(0.0);
            if x >= cap {
                return 0.0;
            }
        }
        (self.psi_inverse)(x)
    }

    // the negated comparison also rejects NaN generator values
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        let psi1 = (self.psi)(1.0);
        if psi1.abs() > 1e-9 {
            return Err(Error::parameter(format!(
                "generator has psi(1) = {psi1}, expected 0"
            )));
        }
        let grid: Vec<f64> = (1..50).map(|k| k as f64 / 50.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| (self.psi)(t)).collect();
        for w in vals.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::parameter("generator is not strictly decreasing"));
            }
        }
        for w in vals.windows(3) {
            // convexity: midpoint below the chord
            if w[1] > 0.5 * (w[0] + w[2]) + 1e-9 * (1.0 + w[0].abs()) {
                return Err(Error::parameter("generator is not convex"));
            }
        }
        for &t in &grid {
            let roundtrip = (self.psi_inverse)((self.psi)(t));
            if (roundtrip - t).abs() > 1e-12 {
                return Err(Error::parameter(format!(
                    "generator inverse round-trip off by {} at t = {t}",
                    (roundtrip - t).abs()
                )));
            }
        }
        Ok(())
    }
}

/// A parametric bivariate copula.
#[derive(Debug, Clone)]
pub enum CopulaModel {
    Product,
    Fgm { theta: f64 },
    Gumbel { theta: f64 },
    Clayton { theta: f64 },
    GeneratorDefined { generator: ArchimedeanGenerator },
}

fn check_theta(family: CopulaFamily, theta: f64) -> Result<()> {
    let ok = theta.is_finite()
        && match family {
            CopulaFamily::Fgm => (-1.0..=1.0).contains(&theta),
            CopulaFamily::Gumbel => theta >= 1.0,
            CopulaFamily::Clayton => theta > 0.0,
            _ => true,
        };
    if ok {
        Ok(())
    } else {
        let range = match family {
            CopulaFamily::Fgm => "[-1, 1]",
            CopulaFamily::Gumbel => "[1, inf)",
            CopulaFamily::Clayton => "(0, inf)",
            _ => "",
        };
        Err(Error::parameter(format!(
            "{family} parameter theta = {theta} outside {range}"
        )))
    }
}

impl CopulaModel {
    pub fn product() -> Self {
        CopulaModel::Product
    }

    pub fn fgm(theta: f64) -> Result<Self> {
        check_theta(CopulaFamily::Fgm, theta)?;
        Ok(CopulaModel::Fgm { theta })
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        check_theta(CopulaFamily::Gumbel, theta)?;
        Ok(CopulaModel::Gumbel { theta })
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        check_theta(CopulaFamily::Clayton, theta)?;
        Ok(CopulaModel::Clayton { theta })
    }

    pub fn from_generator(generator: ArchimedeanGenerator) -> Self {
        CopulaModel::GeneratorDefined { generator }
    }

    /// Builds the family from a (family, theta) pair; theta is ignored for
    /// the product copula.
    pub fn from_family(family: CopulaFamily, theta: f64) -> Result<Self> {
        match family {
            CopulaFamily::Product => Ok(CopulaModel::Product),
            CopulaFamily::Fgm => CopulaModel::fgm(theta),
            CopulaFamily::Gumbel => CopulaModel::gumbel(theta),
            CopulaFamily::Clayton => CopulaModel::clayton(theta),
            CopulaFamily::GeneratorDefined => Err(Error::parameter(
                "generator-defined copulas need an explicit generator",
            )),
        }
    }

    pub fn family(&self) -> CopulaFamily {
        match self {
            CopulaModel::Product => CopulaFamily::Product,
            CopulaModel::Fgm { .. } => CopulaFamily::Fgm,
            CopulaModel::Gumbel { .. } => CopulaFamily::Gumbel,
            CopulaModel::Clayton { .. } => CopulaFamily::Clayton,
            CopulaModel::GeneratorDefined { .. } => CopulaFamily::GeneratorDefined,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            CopulaModel::Product | CopulaModel::GeneratorDefined { .. } => None,
            CopulaModel::Fgm { theta }
            | CopulaModel::Gumbel { theta }
            | CopulaModel::Clayton { theta } => Some(*theta),
        }
    }

    pub fn is_archimedean(&self) -> bool {
        matches!(
            self,
            CopulaModel::Gumbel { .. }
                | CopulaModel::Clayton { .. }
                | CopulaModel::GeneratorDefined { .. }
        )
    }

    /// C(u, v). Boundary axioms are applied first, so every family is exact
    /// on the edges of the unit square.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        match self {
            CopulaModel::Product => u * v,
            CopulaModel::Fgm { theta } => u * v * (1.0 + theta * (1.0 - u) * (1.0 - v)),
            CopulaModel::Gumbel { theta } => gumbel_cdf(*theta, u, v),
            CopulaModel::Clayton { theta } => clayton_cdf(*theta, u, v),
            CopulaModel::GeneratorDefined { generator } => {
                generator.pseudo_inverse(generator.psi(u) + generator.psi(v))
            }
        }
    }

    /// Partial derivative `C_u(u, v) = dC/du`, the conditional distribution
    /// of `V` given `U = u`. Lies in `[0, 1]`; values within 1e-12 of the
    /// boundary are clamped onto it.
    ///
    /// Families whose derivative is singular at the edge (Gumbel, Clayton,
    /// generator-defined) reject `u` in `{0, 1}`.
    pub fn du(&self, u: f64, v: f64) -> Result<f64> {
        let raw = match self {
            CopulaModel::Product => v,
            CopulaModel::Fgm { theta } => v + theta * v * (1.0 - v) * (1.0 - 2.0 * u),
            CopulaModel::Gumbel { theta } => {
                check_interior(u)?;
                if v == 0.0 {
                    0.0
                } else if v == 1.0 {
                    1.0
                } else {
                    let c = gumbel_cdf(*theta, u, v);
                    // C_u = (C/u) * ((-ln u) / (-ln C))^(theta - 1)
                    (c / u) * ((-u.ln()) / (-c.ln())).powf(theta - 1.0)
                }
            }
            CopulaModel::Clayton { theta } => {
                check_interior(u)?;
                if v == 0.0 {
                    0.0
                } else if v == 1.0 {
                    1.0
                } else {
                    let c = clayton_cdf(*theta, u, v);
                    (c / u).powf(theta + 1.0)
                }
            }
            CopulaModel::GeneratorDefined { .. } => {
                check_interior(u)?;
                if v == 0.0 {
                    0.0
                } else if v == 1.0 {
                    1.0
                } else {
                    return self.du_via_generator(u, v);
                }
            }
        };
        Ok(clamp_unit(raw))
    }

    /// Conditional derivative through the generator identity
    /// `C_u = psi'(u) / psi'(C(u, v))`, available for the Archimedean
    /// families. For Gumbel and Clayton this is an algebraically distinct
    /// route from [`CopulaModel::du`] and is the one used by the
    /// generator-form risk expressions.
    pub fn du_via_generator(&self, u: f64, v: f64) -> Result<f64> {
        check_interior(u)?;
        let raw = match self {
            CopulaModel::Gumbel { theta } => {
                if v == 0.0 {
                    0.0
                } else if v == 1.0 {
                    1.0
                } else {
                    let c = gumbel_cdf(*theta, u, v);
                    // psi'(t) = -theta (-ln t)^(theta-1) / t
                    (c / u) * ((-u.ln()).powf(theta - 1.0) / (-c.ln()).powf(theta - 1.0))
                }
            }
            CopulaModel::Clayton { theta } => {
                if v == 0.0 {
                    0.0
                } else if v == 1.0 {
                    1.0
                } else {
                    let c = clayton_cdf(*theta, u, v);
                    // psi'(t) = -t^(-theta-1)
                    u.powf(-theta - 1.0) / c.powf(-theta - 1.0)
                }
            }
            CopulaModel::GeneratorDefined { generator } => {
                if v == 0.0 {
                    0.0
                } else if v == 1.0 {
                    1.0
                } else {
                    let c = self.cdf(u, v);
                    if c == 0.0 {
                        0.0
                    } else {
                        generator.psi_prime(u) / generator.psi_prime(c)
                    }
                }
            }
            _ => {
                return Err(Error::domain(format!(
                    "{} copula has no generator representation",
                    self.family()
                )))
            }
        };
        Ok(clamp_unit(raw))
    }

    /// Survival value `a + b - 1 + C(1-a, 1-b)` for survival-scale
    /// arguments `a, b`. Equals the probability that both uniforms exceed
    /// `1-a` and `1-b`.
    pub fn survival_value(&self, a: f64, b: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        (a + b - 1.0 + self.cdf(1.0 - a, 1.0 - b)).max(0.0)
    }

    /// Upper tail-dependence coefficient.
    pub fn tail_dep_upper(&self) -> f64 {
        match self {
            CopulaModel::Product | CopulaModel::Fgm { .. } | CopulaModel::Clayton { .. } => 0.0,
            CopulaModel::Gumbel { theta } => 2.0 - 2.0f64.powf(1.0 / theta),
            CopulaModel::GeneratorDefined { generator } => numeric_tail_upper(generator),
        }
    }

    /// Lower tail-dependence coefficient.
    pub fn tail_dep_lower(&self) -> f64 {
        match self {
            CopulaModel::Product | CopulaModel::Fgm { .. } | CopulaModel::Gumbel { .. } => 0.0,
            CopulaModel::Clayton { theta } => 2.0f64.powf(-1.0 / theta),
            CopulaModel::GeneratorDefined { generator } => numeric_tail_lower(generator),
        }
    }

    /// Finite-level upper tail ratio `(1 - u - v + C(u, v)) / (1 - v)`.
    pub fn finite_tail_ratio_upper(&self, u: f64, v: f64) -> Result<f64> {
        if v >= 1.0 {
            return Err(Error::domain("upper tail ratio needs v < 1"));
        }
        Ok((1.0 - u - v + self.cdf(u, v)).max(0.0) / (1.0 - v))
    }

    /// Finite-level lower tail ratio `C(u, v) / v`.
    pub fn finite_tail_ratio_lower(&self, u: f64, v: f64) -> Result<f64> {
        if v <= 0.0 {
            return Err(Error::domain("lower tail ratio needs v > 0"));
        }
        Ok(self.cdf(u, v) / v)
    }

    /// Kendall's tau of the model: closed forms where known, the generator
    /// integral `4 \int_0^1 psi/psi' du + 1` otherwise.
    pub fn kendall_tau(&self) -> Result<f64> {
        Ok(match self {
            CopulaModel::Product => 0.0,
            CopulaModel::Fgm { theta } => 2.0 * theta / 9.0,
            CopulaModel::Gumbel { theta } => (theta - 1.0) / theta,
            CopulaModel::Clayton { theta } => theta / (theta + 2.0),
            CopulaModel::GeneratorDefined { generator } => {
                let g = generator.clone();
                let r = quad::integrate(move |t| g.psi(t) / g.psi_prime(t), 0.0, 1.0, 1e-10)?;
                4.0 * r.value + 1.0
            }
        })
    }

    /// Whether the model is positively quadrant dependent (`C >= uv`).
    pub fn is_pqd(&self) -> bool {
        match self {
            CopulaModel::Product | CopulaModel::Gumbel { .. } | CopulaModel::Clayton { .. } => true,
            CopulaModel::Fgm { theta } => *theta >= 0.0,
            CopulaModel::GeneratorDefined { .. } => {
                // probe on an interior grid
                (1..20).all(|i| {
                    (1..20).all(|j| {
                        let u = i as f64 / 20.0;
                        let v = j as f64 / 20.0;
                        self.cdf(u, v) >= u * v - BOUNDARY_EPS
                    })
                })
            }
        }
    }
}

fn check_interior(u: f64) -> Result<()> {
    if u <= 0.0 || u >= 1.0 {
        return Err(Error::domain(format!(
            "partial derivative undefined at u = {u}; needs u in (0, 1)"
        )));
    }
    Ok(())
}

fn clamp_unit(x: f64) -> f64 {
    if (-BOUNDARY_EPS..0.0).contains(&x) {
        return 0.0;
    }
    if x > 1.0 && x <= 1.0 + BOUNDARY_EPS {
        return 1.0;
    }
    debug_assert!(
        (0.0..=1.0).contains(&x),
        "conditional derivative {x} escaped [0,1] by more than {BOUNDARY_EPS}"
    );
    x
}

/// Gumbel CDF evaluated in a scale-invariant form so large theta cannot
/// overflow the intermediate powers.
fn gumbel_cdf(theta: f64, u: f64, v: f64) -> f64 {
    let x = -u.ln();
    let y = -v.ln();
    let m = x.max(y);
    let r = x.min(y) / m;
    // (x^t + y^t)^(1/t) = m * (1 + r^t)^(1/t)
    let a = m * (1.0 + r.powf(theta)).powf(1.0 / theta);
    (-a).exp()
}

/// Clayton CDF in log space: exp(-logsumexp(-theta ln u, -theta ln v)/theta)
/// with the -1 folded in, stable for large theta.
fn clayton_cdf(theta: f64, u: f64, v: f64) -> f64 {
    let a = -theta * u.ln();
    let b = -theta * v.ln();
    let m = a.max(b);
    let ln_s = m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln();
    (-ln_s / theta).exp()
}

/// Ratio `psi^{-1}'(2s) / psi^{-1}'(s)` evaluated through the generator;
/// drives the numeric tail-dependence limits. None when the evaluation
/// leaves the representable range.
fn inverse_derivative_ratio(g: &ArchimedeanGenerator, s: f64) -> Option<f64> {
    let t1 = g.psi_inverse(s);
    let t2 = g.psi_inverse(2.0 * s);
    if !(t1 > 0.0 && t1 < 1.0 && t2 > 0.0 && t2 < 1.0) {
        return None;
    }
    // psi^{-1}'(x) = 1 / psi'(psi^{-1}(x))
    let d1 = g.psi_prime(t1);
    let d2 = g.psi_prime(t2);
    if !(d1.is_finite() && d2.is_finite()) || d2 == 0.0 {
        return None;
    }
    let r = d1 / d2;
    r.is_finite().then_some(r)
}

/// Limit of the inverse-derivative ratio along a geometric walk of `s`
/// toward 0 (upper tail) or infinity (lower tail).
///
/// The walk stops on one of three signals: consecutive ratios agree to
/// 1e-9 (converged); small differences start growing again, which marks
/// the rounding-noise floor of generators evaluated near `t = 1`, in which
/// case the pre-rebound value is the best available; or the generator
/// leaves the representable range, which for fast-decaying inverses is
/// itself the zero-limit signature.
fn limit_ratio(g: &ArchimedeanGenerator, toward_zero: bool) -> f64 {
    let mut vals: Vec<f64> = Vec::new();
    let mut prev_diff = f64::INFINITY;
    for k in 1..=72i32 {
        let s = if toward_zero {
            10f64.powi(-4 * k)
        } else {
            10f64.powi(4 * k)
        };
        let Some(r) = inverse_derivative_ratio(g, s) else {
            break;
        };
        if let Some(&p) = vals.last() {
            let diff = (r - p).abs();
            if diff <= 1e-9 * (1.0 + r.abs()) {
                return r;
            }
            if diff >= prev_diff && prev_diff <= 1e-6 * (1.0 + r.abs()) {
                return p;
            }
            prev_diff = diff;
        }
        vals.push(r);
    }
    match vals[..] {
        [] => f64::NAN,
        [r] => r,
        [.., r1, r2, r3] => {
            // Aitken delta-squared polish; discard it when the sequence is
            // not geometric enough for the extrapolation to stay bracketed
            let denom = (r3 - r2) - (r2 - r1);
            if denom.abs() < 1e-14 * (1.0 + r3.abs()) {
                return r3;
            }
            let a = r3 - (r3 - r2) * (r3 - r2) / denom;
            let lo = r2.min(r3) - (r2 - r3).abs();
            let hi = r2.max(r3) + (r2 - r3).abs();
            if a.is_finite() && a >= lo && a <= hi {
                a
            } else {
                r3
            }
        }
        [_, r] => r,
    }
}

fn numeric_tail_upper(g: &ArchimedeanGenerator) -> f64 {
    let r = limit_ratio(g, true);
    if !r.is_finite() {
        return 0.0;
    }
    (2.0 - 2.0 * r).clamp(0.0, 1.0)
}

fn numeric_tail_lower(g: &ArchimedeanGenerator) -> f64 {
    let r = limit_ratio(g, false);
    // inverses decaying faster than any power leave the walk early with a
    // vanishing ratio: no lower tail dependence
    if !r.is_finite() {
        return 0.0;
    }
    (2.0 * r).clamp(0.0, 1.0)
}
