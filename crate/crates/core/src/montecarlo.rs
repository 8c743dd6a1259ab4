//! Stochastic oracle: conditional-inversion sampling of copula pairs and a
//! rejection estimator for the CCTE.
//!
//! Samples are drawn in fixed-size chunks, each driven by its own ChaCha
//! stream derived from the base seed. Chunk partials are merged in chunk
//! order, so an estimate is bit-identical for a given seed regardless of
//! the thread count or the `parallel` feature.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::exec;
use crate::margins::Margin;
use crate::risk::RiskQuery;

/// Samples per RNG stream.
const CHUNK: usize = 1 << 16;

/// Minimum accepted tail samples for a usable estimate.
const MIN_ACCEPTED: usize = 100;

/// Bisection tolerance for conditional quantiles without a closed form.
const BISECT_TOL: f64 = 1e-12;

/// A Monte Carlo estimate with its sampling diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_accepted: usize,
    pub n_total: usize,
}

/// Inverse of the conditional distribution `C_u(u, .)`: the `v` solving
/// `C_u(u, v) = p`. Closed forms for product, FGM, and Clayton; monotone
/// Newton for Gumbel; bracketed bisection for generator-defined models.
pub fn conditional_quantile(c: &CopulaModel, u: f64, p: f64) -> Result<f64> {
    debug_assert!(u > 0.0 && u < 1.0 && p > 0.0 && p < 1.0);
    match c {
        CopulaModel::Product => Ok(p),
        CopulaModel::Fgm { theta } => {
            let a = theta * (1.0 - 2.0 * u);
            if a.abs() < 1e-12 {
                return Ok(p);
            }
            // root of a v^2 - (1+a) v + p = 0 inside [0, 1], in the form
            // that stays stable as a -> 0
            let disc = (1.0 + a) * (1.0 + a) - 4.0 * a * p;
            Ok(2.0 * p / ((1.0 + a) + disc.sqrt()))
        }
        CopulaModel::Clayton { theta } => {
            let w = u.powf(-theta) * (p.powf(-theta / (theta + 1.0)) - 1.0);
            Ok((1.0 + w).powf(-1.0 / theta))
        }
        CopulaModel::Gumbel { theta } => gumbel_conditional_quantile(*theta, u, p)
            .map(Ok)
            .unwrap_or_else(|| bisect_conditional(c, u, p)),
        CopulaModel::GeneratorDefined { .. } => bisect_conditional(c, u, p),
    }
}

/// Gumbel conditional quantile by Newton iteration in a transformed
/// coordinate.
///
/// With `x = -ln u` and `w = ((-ln u)^theta + (-ln v)^theta)^{1/theta} / x`
/// the conditional CDF becomes `C_u = exp(-x (w - 1)) w^{1-theta}`, so the
/// root of `g(w) = -x (w-1) + (1-theta) ln w - ln p` gives `v`. `g` is
/// strictly decreasing and convex on `w >= 1` with `g(1) = -ln p > 0`, so
/// Newton steps clamped to `w >= 1` converge monotonically from the left.
/// Returns None in the (unreached) event the iteration stalls; the caller
/// falls back to bisection.
fn gumbel_conditional_quantile(theta: f64, u: f64, p: f64) -> Option<f64> {
    if theta == 1.0 {
        return Some(p);
    }
    let x = -u.ln();
    let ln_p = p.ln();
    let g = |w: f64| -x * (w - 1.0) + (1.0 - theta) * (w - 1.0).ln_1p() - ln_p;
    let g_prime = |w: f64| -x + (1.0 - theta) / w;

    let mut w = (1.0 - ln_p / x).max(1.0);
    if g(w) < 0.0 {
        // jump from the right of the root back to its left, then walk up
        w = (w - g(w) / g_prime(w)).max(1.0);
    }
    let mut converged = false;
    for _ in 0..64 {
        let step = g(w) / g_prime(w);
        let next = (w - step).max(1.0);
        if (next - w).abs() <= 1e-14 * next {
            w = next;
            converged = true;
            break;
        }
        w = next;
    }
    if !converged && g(w).abs() > 1e-9 * (1.0 + ln_p.abs()) {
        return None;
    }
    // map back: (-ln v) = x z with z^theta = w^theta - 1
    let z = (theta * (w - 1.0).ln_1p()).exp_m1().powf(1.0 / theta);
    let v = (-x * z).exp();
    Some(v.clamp(1e-300, 1.0 - f64::EPSILON / 2.0))
}

/// Bisection on `v` in `[1e-15, 1 - 1e-15]`; `C_u(u, .)` is a distribution
/// function in `v`, so the bracket is guaranteed.
fn bisect_conditional(c: &CopulaModel, u: f64, p: f64) -> Result<f64> {
    let mut lo = 1e-15;
    let mut hi = 1.0 - 1e-15;
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if c.du(u, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECT_TOL {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::RootFind(format!(
        "conditional quantile bracket [{lo}, {hi}] did not shrink to {BISECT_TOL:e}"
    )))
}

/// Draws one pair `(u, v)` from the copula by conditional inversion.
pub fn sample_pair<R: Rng + ?Sized>(c: &CopulaModel, rng: &mut R) -> Result<(f64, f64)> {
    let u: f64 = rng.sample(rand::distributions::Open01);
    let p: f64 = rng.sample(rand::distributions::Open01);
    let v = conditional_quantile(c, u, p)?;
    Ok((u, v))
}

/// Draws `n` pairs with the same chunked stream layout as the estimators.
pub fn sample_pairs(c: &CopulaModel, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let n_chunks = n.div_ceil(CHUNK);
    let chunks = exec::map_indexed(n_chunks, |i| {
        let mut rng = chunk_rng(seed, i);
        let take = CHUNK.min(n - i * CHUNK);
        (0..take)
            .map(|_| sample_pair(c, &mut rng))
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(n);
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64 + 1);
    rng
}

#[derive(Clone, Copy, Default)]
struct TailAccumulator {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

fn run_chunk(
    c: &CopulaModel,
    m: &Margin,
    queries: &[RiskQuery],
    seed: u64,
    chunk: usize,
    take: usize,
) -> Result<Vec<TailAccumulator>> {
    let mut rng = chunk_rng(seed, chunk);
    let mut accs = vec![TailAccumulator::default(); queries.len()];
    for _ in 0..take {
        let (u, v) = sample_pair(c, &mut rng)?;
        let mut value = f64::NAN;
        for (acc, q) in accs.iter_mut().zip(queries) {
            if u > q.s() && v > q.t() {
                if value.is_nan() {
                    value = m.quantile_paper(u)?;
                }
                acc.count += 1;
                acc.sum += value;
                acc.sum_sq += value * value;
            }
        }
    }
    Ok(accs)
}

fn estimate_impl(
    c: &CopulaModel,
    m: &Margin,
    queries: &[RiskQuery],
    n: usize,
    seed: u64,
    sequential: bool,
) -> Result<Vec<McEstimate>> {
    if n < 10_000 {
        return Err(Error::parameter(format!(
            "Monte Carlo estimator needs n >= 10000 samples, got {n}"
        )));
    }
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    let n_chunks = n.div_ceil(CHUNK);
    let worker = |i: usize| {
        let take = CHUNK.min(n - i * CHUNK);
        run_chunk(c, m, queries, seed, i, take)
    };
    let chunks = if sequential {
        exec::map_indexed_seq(n_chunks, worker)
    } else {
        exec::map_indexed(n_chunks, worker)
    };

    let mut totals = vec![TailAccumulator::default(); queries.len()];
    for chunk in chunks {
        for (total, part) in totals.iter_mut().zip(chunk?) {
            total.count += part.count;
            total.sum += part.sum;
            total.sum_sq += part.sum_sq;
        }
    }
    totals
        .iter()
        .map(|acc| {
            if acc.count < MIN_ACCEPTED {
                return Err(Error::InsufficientTailMass {
                    accepted: acc.count,
                    required: MIN_ACCEPTED,
                    total: n,
                });
            }
            let k = acc.count as f64;
            let mean = acc.sum / k;
            let var = ((acc.sum_sq - acc.sum * acc.sum / k) / (k - 1.0)).max(0.0);
            Ok(McEstimate {
                value: mean,
                std_error: (var / k).sqrt(),
                n_accepted: acc.count,
                n_total: n,
            })
        })
        .collect()
}

/// Rejection estimate of the CCTE: keep pairs with `u > s` and `v > t`,
/// average the target quantile over the kept draws.
pub fn ccte_empirical(
    c: &CopulaModel,
    m: &Margin,
    q: &RiskQuery,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(ccte_empirical_multi(c, m, std::slice::from_ref(q), n, seed)?.remove(0))
}

/// Estimates several level pairs from one shared sample stream; each
/// estimate is identical to the single-query call with the same seed.
pub fn ccte_empirical_multi(
    c: &CopulaModel,
    m: &Margin,
    queries: &[RiskQuery],
    n: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    estimate_impl(c, m, queries, n, seed, false)
}

/// Always-sequential reference path; bit-identical to [`ccte_empirical`]
/// for the same seed.
pub fn ccte_empirical_seq(
    c: &CopulaModel,
    m: &Margin,
    q: &RiskQuery,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let mut v = estimate_impl(c, m, std::slice::from_ref(q), n, seed, true)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::ArchimedeanGenerator;
    use crate::fit::kendall_tau_sample;
    use crate::risk;
    use approx::assert_abs_diff_eq;

    fn q(s: f64, t: f64) -> RiskQuery {
        RiskQuery::new(s, t).unwrap()
    }

    #[test]
    fn product_conditional_is_identity() {
        let c = CopulaModel::product();
        assert_eq!(conditional_quantile(&c, 0.3, 0.8).unwrap(), 0.8);
    }

    #[test]
    fn conditional_quantile_round_trips() {
        let models = [
            CopulaModel::fgm(0.7).unwrap(),
            CopulaModel::fgm(-1.0).unwrap(),
            CopulaModel::clayton(2.0).unwrap(),
            CopulaModel::clayton(12.0).unwrap(),
            CopulaModel::gumbel(2.0).unwrap(),
            CopulaModel::gumbel(10.0).unwrap(),
            CopulaModel::from_generator(ArchimedeanGenerator::clayton(2.0).unwrap()),
        ];
        for c in &models {
            for i in 1..8 {
                for j in 1..8 {
                    let u = i as f64 / 8.0;
                    let p = j as f64 / 8.0;
                    let v = conditional_quantile(c, u, p).unwrap();
                    assert!(v > 0.0 && v < 1.0);
                    assert_abs_diff_eq!(c.du(u, v).unwrap(), p, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn gumbel_newton_matches_bisection() {
        // the generator-defined model takes the bracketed-bisection path,
        // the closed-form model the Newton path; same copula, same inverse
        for theta in [1.01, 2.0, 10.0] {
            let newton = CopulaModel::gumbel(theta).unwrap();
            let bisect = CopulaModel::from_generator(ArchimedeanGenerator::gumbel(theta).unwrap());
            for i in 1..12 {
                for j in 1..12 {
                    let u = i as f64 / 12.0;
                    let p = j as f64 / 12.0;
                    let vn = conditional_quantile(&newton, u, p).unwrap();
                    let vb = conditional_quantile(&bisect, u, p).unwrap();
                    assert!(
                        (vn - vb).abs() <= 5e-12,
                        "theta={theta} u={u} p={p}: newton {vn} vs bisection {vb}"
                    );
                }
            }
        }
    }

    #[test]
    fn sampler_marginals_are_uniform() {
        // Kolmogorov-Smirnov at the 1% level: sqrt(n) D_n <= 1.628
        let c = CopulaModel::gumbel(2.0).unwrap();
        let n = 100_000;
        let pairs = sample_pairs(&c, n, 7).unwrap();
        for extract in [|p: &(f64, f64)| p.0, |p: &(f64, f64)| p.1] {
            let mut xs: Vec<f64> = pairs.iter().map(extract).collect();
            xs.sort_by(f64::total_cmp);
            let d = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let hi = (i + 1) as f64 / n as f64 - x;
                    let lo = x - i as f64 / n as f64;
                    hi.max(lo)
                })
                .fold(0.0, f64::max);
            assert!(d * (n as f64).sqrt() < 1.628, "KS statistic {d} too large");
        }
    }

    #[test]
    fn sampler_joint_matches_cdf() {
        let c = CopulaModel::clayton(2.0).unwrap();
        let n = 100_000;
        let pairs = sample_pairs(&c, n, 11).unwrap();
        for i in 1..=10 {
            for j in 1..=10 {
                let (gu, gv) = (i as f64 / 10.0, j as f64 / 10.0);
                let emp =
                    pairs.iter().filter(|(u, v)| *u <= gu && *v <= gv).count() as f64 / n as f64;
                assert!(
                    (emp - c.cdf(gu, gv)).abs() < 0.01,
                    "empirical copula off at ({gu}, {gv})"
                );
            }
        }
    }

    #[test]
    fn sampler_recovers_kendall_tau() {
        let n = 100_000;
        let cases = [
            (CopulaModel::gumbel(2.0).unwrap(), 0.5),
            (CopulaModel::clayton(0.5).unwrap(), 0.2),
        ];
        for (c, expected) in cases {
            let pairs = sample_pairs(&c, n, 3).unwrap();
            let us: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let tau = kendall_tau_sample(&us, &vs).unwrap();
            assert_abs_diff_eq!(tau, expected, epsilon = 0.01);
        }
    }

    #[test]
    fn acceptance_rate_tracks_survival_mass() {
        let c = CopulaModel::product();
        let m = Margin::pareto(1.5).unwrap();
        let n = 1_000_000;
        let est = ccte_empirical(&c, &m, &q(0.9, 0.9), n, 5).unwrap();
        let expected = c.survival_value(0.1, 0.1);
        let rate = est.n_accepted as f64 / n as f64;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (rate - expected).abs() < 5.0 * se,
            "acceptance {rate} vs {expected}"
        );
    }

    #[test]
    fn estimator_brackets_analytic_values() {
        let m = Margin::pareto(1.5).unwrap();
        let n = 500_000;
        let cases = [
            (CopulaModel::product(), 13.9247),
            (CopulaModel::fgm(1.0).unwrap(), 14.2709),
            (CopulaModel::clayton(2.0).unwrap(), 14.500),
        ];
        for (c, reference) in cases {
            let est = ccte_empirical(&c, &m, &q(0.9, 0.9), n, 17).unwrap();
            assert!(
                (est.value - reference).abs() <= 3.0 * est.std_error,
                "{:?}: {} vs {reference} (se {})",
                c.family(),
                est.value,
                est.std_error
            );
        }
    }

    #[test]
    fn estimator_agrees_with_quadrature_for_gumbel() {
        let m = Margin::pareto(1.5).unwrap();
        let c = CopulaModel::gumbel(2.0).unwrap();
        let analytic = risk::ccte_archimedean(&c, &m, &q(0.9, 0.9)).unwrap().value;
        let est = ccte_empirical(&c, &m, &q(0.9, 0.9), 200_000, 23).unwrap();
        assert!((est.value - analytic).abs() <= 3.0 * est.std_error);
    }

    #[test]
    fn reproducible_and_thread_invariant() {
        let c = CopulaModel::clayton(2.0).unwrap();
        let m = Margin::pareto(1.5).unwrap();
        let a = ccte_empirical(&c, &m, &q(0.9, 0.9), 150_000, 99).unwrap();
        let b = ccte_empirical(&c, &m, &q(0.9, 0.9), 150_000, 99).unwrap();
        let s = ccte_empirical_seq(&c, &m, &q(0.9, 0.9), 150_000, 99).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_eq!(a.value.to_bits(), s.value.to_bits());
        assert_eq!(a.n_accepted, s.n_accepted);
    }

    #[test]
    fn multi_query_matches_single_runs() {
        let c = CopulaModel::fgm(0.5).unwrap();
        let m = Margin::pareto(1.5).unwrap();
        let queries = [q(0.9, 0.9), q(0.9, 0.95), q(0.95, 0.9)];
        let multi = ccte_empirical_multi(&c, &m, &queries, 120_000, 31).unwrap();
        for (qq, est) in queries.iter().zip(&multi) {
            let single = ccte_empirical(&c, &m, qq, 120_000, 31).unwrap();
            assert_eq!(est.value.to_bits(), single.value.to_bits());
        }
    }

    #[test]
    fn insufficient_tail_mass_error() {
        let c = CopulaModel::product();
        let m = Margin::pareto(1.5).unwrap();
        let err = ccte_empirical(&c, &m, &q(0.999, 0.999), 10_000, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientTailMass { .. }));
    }

    #[test]
    fn small_n_rejected() {
        let c = CopulaModel::product();
        let m = Margin::pareto(1.5).unwrap();
        assert!(ccte_empirical(&c, &m, &q(0.9, 0.9), 9_999, 1).is_err());
    }
}
