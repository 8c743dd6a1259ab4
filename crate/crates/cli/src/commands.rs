//! Subcommand implementations.

use anyhow::{bail, Context, Result};
use ccte::copula::{CopulaFamily, CopulaModel};
use ccte::margins::Margin;
use ccte::risk::{self, RiskQuery};
use ccte::{exec, fit, montecarlo};

use crate::io;
use crate::output::{
    render_plot_csv, CcteReport, FitReport, OracleReport, PlotRow, TableBlock, TableReport,
};
use crate::{CcteArgs, FitArgs, Format, PlotArgs, TableArgs};

fn parse_family(name: &str) -> Result<CopulaFamily> {
    Ok(name.parse::<CopulaFamily>()?)
}

/// Reference theta sweep per family, used when `--theta` is omitted.
fn default_thetas(family: CopulaFamily) -> Vec<f64> {
    match family {
        CopulaFamily::Fgm => vec![0.01, 0.5, 1.0],
        CopulaFamily::Gumbel => vec![1.01, 2.0, 10.0],
        CopulaFamily::Clayton => vec![0.5, 2.0, 12.0],
        _ => vec![0.0],
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        bail!("{name} grid is empty");
    }
    for &x in grid {
        // surfaces as a domain error (exit code 3)
        RiskQuery::new(x, 0.5).with_context(|| format!("invalid {name} grid entry"))?;
    }
    Ok(())
}

pub fn table(args: TableArgs) -> Result<()> {
    let family = parse_family(&args.family)?;
    let thetas = if args.theta.is_empty() {
        default_thetas(family)
    } else {
        args.theta.clone()
    };
    check_grid("s", &args.s_grid)?;
    check_grid("t", &args.t_grid)?;
    let margin = Margin::pareto(args.alpha)?;

    let report = build_table(family, &thetas, &margin, &args.s_grid, &args.t_grid)?;
    let body = match args.output.format {
        Format::Text => report.render_text(),
        Format::Csv => report.render_csv()?,
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    io::emit(&args.output.out, &body)
}

pub fn build_table(
    family: CopulaFamily,
    thetas: &[f64],
    margin: &Margin,
    s_grid: &[f64],
    t_grid: &[f64],
) -> Result<TableReport> {
    let var: Vec<f64> = s_grid
        .iter()
        .map(|&s| risk::var_risk(margin, s))
        .collect::<ccte::Result<_>>()?;
    let cte: Vec<f64> = s_grid
        .iter()
        .map(|&s| margin.cte(s))
        .collect::<ccte::Result<_>>()?;

    let mut blocks = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let copula = CopulaModel::from_family(family, theta)?;
        let cells: Vec<(f64, f64)> = s_grid
            .iter()
            .flat_map(|&s| t_grid.iter().map(move |&t| (s, t)))
            .collect();
        let computed = exec::map_indexed(cells.len(), |idx| {
            let (s, t) = cells[idx];
            let q = RiskQuery::new(s, t)?;
            Ok::<f64, ccte::Error>(risk::ccte(&copula, margin, &q)?.value)
        });
        let mut values = Vec::with_capacity(s_grid.len());
        let mut it = computed.into_iter();
        for _ in s_grid {
            let row: Vec<f64> = (0..t_grid.len())
                .map(|_| it.next().unwrap())
                .collect::<ccte::Result<_>>()?;
            values.push(row);
        }
        blocks.push(TableBlock { theta, values });
    }
    let alpha = match margin {
        Margin::Pareto(p) => p.alpha(),
        Margin::Empirical(_) => f64::NAN,
    };
    Ok(TableReport {
        family: family.to_string(),
        alpha,
        s_grid: s_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        var,
        cte,
        blocks,
    })
}

pub fn ccte_query(args: CcteArgs) -> Result<()> {
    let family = parse_family(&args.family)?;
    let copula = CopulaModel::from_family(family, args.theta)?;
    let margin = match (&args.alpha, &args.margin_file) {
        (Some(alpha), None) => Margin::pareto(*alpha)?,
        (None, Some(path)) => Margin::empirical(io::read_margin_file(path)?)?,
        _ => unreachable!("clap enforces exactly one margin source"),
    };
    let q = RiskQuery::new(args.s, args.t)?;
    if let Some(count) = margin.tail_sample_count(q.s()) {
        if count < 5 {
            eprintln!(
                "warning: only {count} observations above the {}-quantile; the empirical tail \
                 mean is noisy",
                q.s()
            );
        }
    }
    let result = risk::ccte(&copula, &margin, &q)?;

    let oracle = match &args.oracle {
        Some(spec) => {
            let n = spec[0] as usize;
            let seed = spec[1];
            let est = montecarlo::ccte_empirical(&copula, &margin, &q, n, seed)?;
            Some(OracleReport {
                value: est.value,
                std_error: est.std_error,
                n_accepted: est.n_accepted,
                n_total: est.n_total,
                agrees: (est.value - result.value).abs() <= 3.0 * est.std_error,
            })
        }
        None => None,
    };

    let report = CcteReport {
        family: family.to_string(),
        theta: args.theta,
        alpha: args.alpha,
        margin_file: args.margin_file.as_ref().map(|p| p.display().to_string()),
        s: args.s,
        t: args.t,
        value: result.value,
        method: result.method.to_string(),
        denominator: result.denominator,
        integral_error: result.integral_error,
        oracle,
    };
    let body = match args.output.format {
        Format::Text => report.render_text(),
        Format::Csv => report.render_csv()?,
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    io::emit(&args.output.out, &body)
}

pub fn fit(args: FitArgs) -> Result<()> {
    let family = parse_family(&args.family)?;
    if args.levels.len() != 2 {
        bail!("--levels takes exactly two values: s t");
    }
    let q = RiskQuery::new(args.levels[0], args.levels[1])?;
    let panel = io::read_panel_csv(&args.input, args.kind)?;

    let mut warnings = Vec::new();
    let margins: Vec<Margin> = match args.margin.as_str() {
        "empirical" => (0..panel.n_series())
            .map(|j| panel.margin(j))
            .collect::<ccte::Result<_>>()?,
        spec => match spec.strip_prefix("pareto:") {
            Some(alpha) => {
                let alpha: f64 = alpha
                    .parse()
                    .context("cannot parse --margin pareto:<alpha>")?;
                vec![Margin::pareto(alpha)?; panel.n_series()]
            }
            None => bail!("--margin must be 'empirical' or 'pareto:<alpha>'"),
        },
    };
    for (j, m) in margins.iter().enumerate() {
        if let Some(count) = m.tail_sample_count(q.s()) {
            if count < 5 {
                warnings.push(format!(
                    "series {}: only {count} observations above the {}-quantile; \
                     the empirical tail mean is noisy",
                    panel.names()[j],
                    q.s()
                ));
            }
        }
    }

    let taus = fit::tau_matrix(&panel)?;
    let thetas = fit::fit_pairwise(&panel, family)?;
    let cctes = fit::ccte_matrix(&panel, family, &margins, &q)?;

    let k = panel.n_series();
    let theta_cells: Vec<Vec<Option<f64>>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let v = thetas.values[i][j];
                    v.is_finite().then_some(v)
                })
                .collect()
        })
        .collect();

    let report = FitReport {
        family: family.to_string(),
        kind: match args.kind {
            crate::InputKind::Prices => "prices (log returns applied)".into(),
            crate::InputKind::Returns => "returns (used directly)".into(),
        },
        margin: args.margin.clone(),
        s: q.s(),
        t: q.t(),
        names: panel.names().to_vec(),
        tau: taus.values,
        theta: theta_cells,
        ccte: cctes.values,
        warnings,
    };
    let body = match args.output.format {
        Format::Text => report.render_text(),
        Format::Csv => report.render_csv()?,
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    io::emit(&args.output.out, &body)
}

pub fn plotdata(args: PlotArgs) -> Result<()> {
    let family = parse_family(&args.family)?;
    let thetas = if args.theta.is_empty() {
        default_thetas(family)
    } else {
        args.theta.clone()
    };
    let margin = Margin::pareto(args.alpha)?;

    // diagonal sweep s = t over [0.9, 0.99] in steps of 0.0025
    let levels: Vec<f64> = (0..=36).map(|k| 0.9 + 0.0025 * k as f64).collect();
    let mut rows = Vec::new();
    for &s in &levels {
        rows.push(PlotRow {
            s,
            t: s,
            family: family.to_string(),
            theta: None,
            measure: "VaR".into(),
            value: risk::var_risk(&margin, s)?,
        });
        rows.push(PlotRow {
            s,
            t: s,
            family: family.to_string(),
            theta: None,
            measure: "CTE".into(),
            value: margin.cte(s)?,
        });
    }
    for &theta in &thetas {
        let copula = CopulaModel::from_family(family, theta)?;
        let values = exec::map_indexed(levels.len(), |i| {
            let q = RiskQuery::new(levels[i], levels[i])?;
            Ok::<f64, ccte::Error>(risk::ccte(&copula, &margin, &q)?.value)
        });
        for (&s, value) in levels.iter().zip(values) {
            rows.push(PlotRow {
                s,
                t: s,
                family: family.to_string(),
                theta: Some(theta),
                measure: "CCTE".into(),
                value: value?,
            });
        }
    }

    let body = match args.output.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        // the sweep is tabular by nature; text falls back to CSV
        Format::Text | Format::Csv => render_plot_csv(&rows)?,
    };
    io::emit(&args.output.out, &body)
}
