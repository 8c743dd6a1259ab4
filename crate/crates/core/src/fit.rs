//! Kendall-tau estimation and tau-inversion copula fitting for return
//! panels.
//!
//! The sample statistic is tau-a: tied pairs drop out of the numerator
//! while the denominator stays `n(n-1)/2`. Financial returns at double
//! precision have essentially no ties, so this matches tau-b in practice;
//! the distinction is documented here so tau-b can swap in if a tied data
//! source ever shows up.

use crate::copula::{CopulaFamily, CopulaModel};
use crate::error::{Error, Result};
use crate::exec;
use crate::margins::Margin;
use crate::risk::{self, RiskQuery};

/// A named panel of log-return series, observations by rows.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReturnsPanel {
    names: Vec<String>,
    /// Row-major `n_obs x n_series`.
    returns: Vec<Vec<f64>>,
}

impl ReturnsPanel {
    pub fn new(names: Vec<String>, returns: Vec<Vec<f64>>) -> Result<Self> {
        let k = names.len();
        if k < 2 {
            return Err(Error::parameter("a panel needs at least two series"));
        }
        if returns.len() < 10 {
            return Err(Error::parameter(format!(
                "a panel needs at least 10 observations, got {}",
                returns.len()
            )));
        }
        for (i, row) in returns.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Ingestion {
                    row: i + 1,
                    what: format!("expected {k} values, found {}", row.len()),
                });
            }
            if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::Ingestion {
                    row: i + 1,
                    what: format!("non-finite value in series {}", names[j]),
                });
            }
        }
        Ok(Self { names, returns })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_obs(&self) -> usize {
        self.returns.len()
    }

    pub fn n_series(&self) -> usize {
        self.names.len()
    }

    /// Column `j` as an owned series.
    pub fn series(&self, j: usize) -> Vec<f64> {
        self.returns.iter().map(|row| row[j]).collect()
    }

    /// Empirical margin built from column `j`.
    pub fn margin(&self, j: usize) -> Result<Margin> {
        Margin::empirical(self.series(j))
    }
}

/// Builds a panel of log returns `ln(p_{t+1} / p_t)` from positive prices.
pub fn log_returns(names: Vec<String>, prices: &[Vec<f64>]) -> Result<ReturnsPanel> {
    if prices.len() < 11 {
        return Err(Error::parameter(format!(
            "need at least 11 price rows to form 10 returns, got {}",
            prices.len()
        )));
    }
    let k = names.len();
    for (i, row) in prices.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Ingestion {
                row: i + 1,
                what: format!("expected {k} prices, found {}", row.len()),
            });
        }
        if let Some(j) = row.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Ingestion {
                row: i + 1,
                what: format!("nonpositive price in series {}", names[j]),
            });
        }
    }
    let rows = prices
        .windows(2)
        .map(|w| (0..k).map(|j| (w[1][j] / w[0][j]).ln()).collect())
        .collect();
    ReturnsPanel::new(names, rows)
}

/// Sample Kendall tau (tau-a variant) in O(n log n) via inversion counting.
pub fn kendall_tau_sample(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "series length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::domain("need at least two observations for tau"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite observation in tau input"));
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let tied_x = run_tie_pairs(idx.iter().map(|&i| x[i]));
    let tied_xy = run_tie_pairs_2d(idx.iter().map(|&i| (x[i], y[i])));
    let tied_y = {
        let mut sorted_y = y.to_vec();
        sorted_y.sort_by(f64::total_cmp);
        run_tie_pairs(sorted_y.into_iter())
    };

    let discordant = count_inversions(ys);
    let total = (n as u64 * (n as u64 - 1)) / 2;
    // pairs distinct in both coordinates split into concordant + discordant
    let untied = total - tied_x - tied_y + tied_xy;
    let numerator = untied as f64 - 2.0 * discordant as f64;
    Ok(numerator / total as f64)
}

fn run_tie_pairs(values: impl Iterator<Item = f64>) -> u64 {
    let mut pairs = 0u64;
    let mut run = 0u64;
    let mut prev: Option<f64> = None;
    for v in values {
        if prev == Some(v) {
            run += 1;
        } else {
            pairs += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(v);
    }
    pairs + run * (run + 1) / 2
}

fn run_tie_pairs_2d(values: impl Iterator<Item = (f64, f64)>) -> u64 {
    let mut pairs = 0u64;
    let mut run = 0u64;
    let mut prev: Option<(f64, f64)> = None;
    for v in values {
        if prev == Some(v) {
            run += 1;
        } else {
            pairs += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(v);
    }
    pairs + run * (run + 1) / 2
}

/// Strict inversions (`i < j` with `a[i] > a[j]`) by merge sort.
fn count_inversions(mut a: Vec<f64>) -> u64 {
    let n = a.len();
    let mut buf = vec![0.0; n];
    merge_count(&mut a, &mut buf)
}

fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = a.split_at_mut(mid);
    let mut inv = merge_count(left, &mut buf[..mid]) + merge_count(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            j += 1;
            inv += (left.len() - i) as u64;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    buf[k + left.len() - i..n].copy_from_slice(&right[j..]);
    a.copy_from_slice(&buf[..n]);
    inv
}

/// Inverts Kendall's tau to the family's dependence parameter.
pub fn tau_to_theta(family: CopulaFamily, tau: f64) -> Result<f64> {
    let range_err = || Error::TauRange {
        family: family.to_string(),
        tau,
    };
    match family {
        CopulaFamily::Gumbel => {
            if !(0.0..1.0).contains(&tau) {
                return Err(range_err());
            }
            Ok(1.0 / (1.0 - tau))
        }
        CopulaFamily::Clayton => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(range_err());
            }
            Ok(2.0 * tau / (1.0 - tau))
        }
        CopulaFamily::Fgm => {
            if !(-2.0 / 9.0..=2.0 / 9.0).contains(&tau) {
                return Err(range_err());
            }
            Ok(9.0 * tau / 2.0)
        }
        _ => Err(Error::domain(format!(
            "{family} family has no dependence parameter to fit"
        ))),
    }
}

/// Model tau for the family's parameter; exact inverse of [`tau_to_theta`].
pub fn theta_to_tau(family: CopulaFamily, theta: f64) -> Result<f64> {
    CopulaModel::from_family(family, theta)?.kendall_tau()
}

/// Symmetric Kendall-tau matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TauMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Symmetric fitted-parameter matrix; the diagonal carries `+inf` (a series
/// is comonotone with itself).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThetaMatrix {
    pub family: CopulaFamily,
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Pairwise CCTE matrix; the diagonal is undefined.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CcteMatrix {
    pub names: Vec<String>,
    pub s: f64,
    pub t: f64,
    /// Entry `(i, j)` is the CCTE of target `i` with associate `j`;
    /// asymmetric in general, `None` on the diagonal.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CcteMatrix {
    /// Index of the associate with the smallest CCTE in each row; the
    /// "least risky" pairing per target.
    pub fn row_minima(&self) -> Vec<usize> {
        self.values
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(j, v)| v.map(|x| (j, x)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(j, _)| j)
                    .expect("off-diagonal entries exist")
            })
            .collect()
    }
}

/// Sample tau for every unordered pair in the panel.
#[allow(clippy::needless_range_loop)]
pub fn tau_matrix(panel: &ReturnsPanel) -> Result<TauMatrix> {
    let k = panel.n_series();
    let mut values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let tau = kendall_tau_sample(&panel.series(i), &panel.series(j))?;
            values[i][j] = tau;
            values[j][i] = tau;
        }
    }
    Ok(TauMatrix {
        names: panel.names().to_vec(),
        values,
    })
}

/// Fits a dependence parameter to every pair by tau inversion. Fails with
/// the full list of offending pairs when any tau leaves the family's range.
#[allow(clippy::needless_range_loop)]
pub fn fit_pairwise(panel: &ReturnsPanel, family: CopulaFamily) -> Result<ThetaMatrix> {
    let taus = tau_matrix(panel)?;
    let k = panel.n_series();
    let mut values = vec![vec![f64::INFINITY; k]; k];
    let mut offending = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            match tau_to_theta(family, taus.values[i][j]) {
                Ok(theta) => {
                    values[i][j] = theta;
                    values[j][i] = theta;
                }
                Err(Error::TauRange { .. }) => {
                    offending.push((panel.names()[i].clone(), panel.names()[j].clone()));
                }
                Err(e) => return Err(e),
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::PairwiseFit {
            family: family.to_string(),
            pairs: offending,
        });
    }
    Ok(ThetaMatrix {
        family,
        names: panel.names().to_vec(),
        values,
    })
}

/// Pairwise CCTE matrix under the fitted copulas: entry `(i, j)` treats
/// series `i` as the target (with `margins[i]`) and series `j` as the
/// associate. Cells are independent and evaluated through [`exec`].
pub fn ccte_matrix(
    panel: &ReturnsPanel,
    family: CopulaFamily,
    margins: &[Margin],
    q: &RiskQuery,
) -> Result<CcteMatrix> {
    let k = panel.n_series();
    if margins.len() != k {
        return Err(Error::parameter(format!(
            "need one margin per series: {} margins for {k} series",
            margins.len()
        )));
    }
    let thetas = fit_pairwise(panel, family)?;
    let cells: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let computed = exec::map_indexed(cells.len(), |idx| {
        let (i, j) = cells[idx];
        let copula = CopulaModel::from_family(family, thetas.values[i][j])?;
        Ok::<f64, Error>(risk::ccte(&copula, &margins[i], q)?.value)
    });
    let mut values = vec![vec![None; k]; k];
    for (cell, result) in cells.iter().zip(computed) {
        values[cell.0][cell.1] = Some(result?);
    }
    Ok(CcteMatrix {
        names: panel.names().to_vec(),
        s: q.s(),
        t: q.t(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn brute_force_tau_a(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut num = 0i64;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = (x[i] - x[j]).signum();
                let dy = (y[i] - y[j]).signum();
                if x[i] != x[j] && y[i] != y[j] {
                    num += (dx * dy) as i64;
                }
            }
        }
        num as f64 / (n as f64 * (n as f64 - 1.0) / 2.0)
    }

    #[test]
    fn tau_monotone_extremes() {
        assert_eq!(
            kendall_tau_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        assert_eq!(
            kendall_tau_sample(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn tau_matches_brute_force() {
        // deterministic pseudo-random series, including ties
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut state = 88172645463325252u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..300 {
            x.push((next() * 20.0).floor() / 20.0);
            y.push((next() * 20.0).floor() / 20.0);
        }
        let fast = kendall_tau_sample(&x, &y).unwrap();
        let slow = brute_force_tau_a(&x, &y);
        assert_abs_diff_eq!(fast, slow, epsilon = 1e-12);
    }

    #[test]
    fn tau_input_validation() {
        assert!(kendall_tau_sample(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau_sample(&[1.0, 2.0], &[1.0]).is_err());
        assert!(kendall_tau_sample(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn tau_invariant_under_monotone_transforms() {
        let x: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64).collect();
        let y: Vec<f64> = (0..100).map(|i| ((i * 61) % 100) as f64).collect();
        let base = kendall_tau_sample(&x, &y).unwrap();
        let xt: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let yt: Vec<f64> = y.iter().map(|v| v.atan()).collect();
        assert_eq!(base, kendall_tau_sample(&xt, &yt).unwrap());
    }

    #[test]
    fn log_return_telescoping() {
        let e = std::f64::consts::E;
        let prices: Vec<Vec<f64>> = (0..12).map(|i| vec![e.powi(i), 5.0]).collect();
        let panel = log_returns(vec!["a".into(), "b".into()], &prices).unwrap();
        assert_eq!(panel.n_obs(), 11);
        for row in 0..panel.n_obs() {
            assert_abs_diff_eq!(panel.series(0)[row], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(panel.series(1)[row], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn log_return_row_count() {
        let prices: Vec<Vec<f64>> = (0..501)
            .map(|i| vec![100.0 + i as f64, 50.0 + i as f64])
            .collect();
        let panel = log_returns(vec!["a".into(), "b".into()], &prices).unwrap();
        assert_eq!(panel.n_obs(), 500);
    }

    #[test]
    fn log_return_rejects_nonpositive_prices() {
        let mut prices: Vec<Vec<f64>> = (0..12).map(|i| vec![100.0 + i as f64]).collect();
        prices[7][0] = -1.0;
        let err = log_returns(vec!["a".into()], &prices).unwrap_err();
        match err {
            Error::Ingestion { row, .. } => assert_eq!(row, 8),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn tau_inversion_reference_values() {
        let theta = tau_to_theta(CopulaFamily::Gumbel, 0.4052).unwrap();
        assert_abs_diff_eq!(theta, 1.6815, epsilon = 2e-3);
        assert_abs_diff_eq!(
            tau_to_theta(CopulaFamily::Clayton, 0.5).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            tau_to_theta(CopulaFamily::Fgm, 2.0 / 9.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn tau_theta_round_trips() {
        for tau in [0.0, 0.1, 0.5, 0.9, 0.99] {
            let theta = tau_to_theta(CopulaFamily::Gumbel, tau).unwrap();
            assert_abs_diff_eq!(
                theta_to_tau(CopulaFamily::Gumbel, theta).unwrap(),
                tau,
                epsilon = 1e-12
            );
        }
        for tau in [0.05, 0.2, 0.5, 0.857] {
            let theta = tau_to_theta(CopulaFamily::Clayton, tau).unwrap();
            assert_abs_diff_eq!(
                theta_to_tau(CopulaFamily::Clayton, theta).unwrap(),
                tau,
                epsilon = 1e-12
            );
        }
        for tau in [-2.0 / 9.0, -0.1, 0.0, 0.15, 2.0 / 9.0] {
            let theta = tau_to_theta(CopulaFamily::Fgm, tau).unwrap();
            assert_abs_diff_eq!(
                theta_to_tau(CopulaFamily::Fgm, theta).unwrap(),
                tau,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn tau_range_errors_name_the_family() {
        let err = tau_to_theta(CopulaFamily::Gumbel, -0.2).unwrap_err();
        assert!(err.to_string().contains("gumbel"));
        assert!(tau_to_theta(CopulaFamily::Clayton, 0.0).is_err());
        assert!(tau_to_theta(CopulaFamily::Fgm, 0.3).is_err());
        assert!(tau_to_theta(CopulaFamily::Product, 0.1).is_err());
    }

    #[test]
    fn independent_series_fit_close_to_independence() {
        // two independent uniform series: sampling noise on tau is about
        // 2/sqrt(n), so the fitted Gumbel parameter stays near 1. The seed
        // draws a nonnegative tau; half of all seeds land below zero and
        // would (correctly) fail the range check instead.
        let pairs =
            crate::montecarlo::sample_pairs(&crate::copula::CopulaModel::product(), 10_000, 1)
                .unwrap();
        let rows: Vec<Vec<f64>> = pairs.iter().map(|&(u, v)| vec![u, v]).collect();
        let panel = ReturnsPanel::new(vec!["a".into(), "b".into()], rows).unwrap();
        let thetas = fit_pairwise(&panel, CopulaFamily::Gumbel).unwrap();
        let theta = thetas.values[0][1];
        assert!((1.0..=1.05).contains(&theta), "fitted theta {theta}");
    }

    #[test]
    fn simulated_gumbel_pairs_recover_theta() {
        // tau of n = 1e4 draws has standard error ~0.007, so the inverted
        // parameter lands within a tenth of the true theta = 2
        let pairs = crate::montecarlo::sample_pairs(
            &crate::copula::CopulaModel::gumbel(2.0).unwrap(),
            10_000,
            5,
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = pairs.iter().map(|&(u, v)| vec![u, v]).collect();
        let panel = ReturnsPanel::new(vec!["a".into(), "b".into()], rows).unwrap();
        let thetas = fit_pairwise(&panel, CopulaFamily::Gumbel).unwrap();
        let theta = thetas.values[0][1];
        assert!((1.9..=2.1).contains(&theta), "recovered theta {theta}");
    }

    #[test]
    fn ccte_matrix_collapses_for_independent_series() {
        let pairs =
            crate::montecarlo::sample_pairs(&crate::copula::CopulaModel::product(), 10_000, 61)
                .unwrap();
        let rows: Vec<Vec<f64>> = pairs.iter().map(|&(u, v)| vec![u, v]).collect();
        let panel = ReturnsPanel::new(vec!["a".into(), "b".into()], rows).unwrap();
        let margins = vec![Margin::pareto(1.5).unwrap(); 2];
        let q = crate::risk::RiskQuery::new(0.95, 0.95).unwrap();
        let matrix = ccte_matrix(&panel, CopulaFamily::Fgm, &margins, &q).unwrap();
        let cte = margins[0].cte(0.95).unwrap();
        for (i, j) in [(0, 1), (1, 0)] {
            let value = matrix.values[i][j].unwrap();
            assert!(
                (value - cte).abs() / cte <= 0.01,
                "ccte[{i}][{j}] = {value} vs cte {cte}"
            );
        }
        assert!(matrix.values[0][0].is_none());
        assert_eq!(matrix.row_minima().len(), 2);
    }

    #[test]
    fn comonotone_pair_fails_gumbel_fit() {
        let col: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v, v]).collect();
        let panel = ReturnsPanel::new(vec!["x".into(), "y".into()], rows).unwrap();
        let err = fit_pairwise(&panel, CopulaFamily::Gumbel).unwrap_err();
        match err {
            Error::PairwiseFit { pairs, .. } => {
                assert_eq!(pairs, vec![("x".to_string(), "y".to_string())])
            }
            other => panic!("expected pairwise fit error, got {other:?}"),
        }
    }

    #[test]
    fn matrices_are_symmetric_with_marked_diagonals() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let a = (i as f64 * 0.61).sin();
                let b = (i as f64 * 0.23).cos() + 0.4 * a;
                let c = (i as f64 * 0.47).sin() - 0.2 * a;
                vec![a, b, c]
            })
            .collect();
        let panel = ReturnsPanel::new(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let taus = tau_matrix(&panel).unwrap();
        let thetas = fit_pairwise(&panel, CopulaFamily::Fgm);
        for i in 0..3 {
            assert_eq!(taus.values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(taus.values[i][j], taus.values[j][i]);
                assert!(taus.values[i][j].abs() <= 1.0);
            }
        }
        if let Ok(thetas) = thetas {
            for i in 0..3 {
                assert!(thetas.values[i][i].is_infinite());
                for j in 0..3 {
                    assert_eq!(thetas.values[i][j], thetas.values[j][i]);
                }
            }
        }
    }
}
