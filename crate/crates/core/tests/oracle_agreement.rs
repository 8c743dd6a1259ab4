//! Analytic-vs-oracle consistency over the full family/theta lattice: each
//! CCTE at (s, t) = (0.9, 0.9) must sit within three standard errors of
//! the rejection estimator at n = 2e6.

use ccte::copula::CopulaModel;
use ccte::margins::Margin;
use ccte::montecarlo;
use ccte::risk::{self, RiskQuery};

#[test]
fn analytic_values_within_three_standard_errors() {
    let m = Margin::pareto(1.5).unwrap();
    let q = RiskQuery::new(0.9, 0.9).unwrap();
    let n = 2_000_000;
    let seed = 61;

    let mut models = vec![CopulaModel::product()];
    models.extend(
        [0.01, 0.5, 1.0]
            .iter()
            .map(|&t| CopulaModel::fgm(t).unwrap()),
    );
    models.extend(
        [1.01, 2.0, 10.0]
            .iter()
            .map(|&t| CopulaModel::gumbel(t).unwrap()),
    );
    models.extend(
        [0.5, 2.0, 12.0]
            .iter()
            .map(|&t| CopulaModel::clayton(t).unwrap()),
    );

    for c in &models {
        let analytic = risk::ccte(c, &m, &q).unwrap().value;
        let est = montecarlo::ccte_empirical(c, &m, &q, n, seed).unwrap();
        let dev = (analytic - est.value).abs() / est.std_error;
        println!(
            "{:?} theta {:?}: analytic {analytic:.4}, oracle {:.4} +/- {:.4} ({dev:.2} SE)",
            c.family(),
            c.theta(),
            est.value,
            est.std_error
        );
        assert!(
            dev <= 3.0,
            "{:?} theta {:?}: analytic {analytic} vs oracle {} +/- {}",
            c.family(),
            c.theta(),
            est.value,
            est.std_error
        );
    }
}
