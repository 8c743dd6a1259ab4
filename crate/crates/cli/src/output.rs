//! Serializable result records and their text/CSV renderings.
//!
//! Text mode prints 4 decimals to match the reference tables; CSV and JSON
//! carry full precision (the shortest representation that round-trips).

use std::fmt::Write as _;

use anyhow::Result;
use serde::{Deserialize, Serialize};

/// Full table output: VaR and CTE rows over the `s` grid plus one CCTE
/// block per theta (rows `s`, columns `t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub family: String,
    pub alpha: f64,
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub var: Vec<f64>,
    pub cte: Vec<f64>,
    pub blocks: Vec<TableBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableBlock {
    pub theta: f64,
    /// `values[i][j]` is the CCTE at `(s_grid[i], t_grid[j])`.
    pub values: Vec<Vec<f64>>,
}

impl TableReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "family: {}   alpha: {}", self.family, self.alpha);
        let _ = write!(out, "{:<12}", "s");
        for s in &self.s_grid {
            let _ = write!(out, "{s:>10.4}");
        }
        out.push('\n');
        let _ = write!(out, "{:<12}", "VaR");
        for v in &self.var {
            let _ = write!(out, "{v:>10.4}");
        }
        out.push('\n');
        let _ = write!(out, "{:<12}", "CTE");
        for v in &self.cte {
            let _ = write!(out, "{v:>10.4}");
        }
        out.push('\n');
        for block in &self.blocks {
            let _ = writeln!(out, "\nCCTE  theta = {}   (rows s, columns t)", block.theta);
            let _ = write!(out, "{:<12}", "s \\ t");
            for t in &self.t_grid {
                let _ = write!(out, "{t:>10.4}");
            }
            out.push('\n');
            for (i, s) in self.s_grid.iter().enumerate() {
                let _ = write!(out, "{s:<12.4}");
                for v in &block.values[i] {
                    let _ = write!(out, "{v:>10.4}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["measure", "family", "theta", "s", "t", "value"])?;
        for (i, s) in self.s_grid.iter().enumerate() {
            w.write_record([
                "VaR",
                &self.family,
                "",
                &s.to_string(),
                "",
                &self.var[i].to_string(),
            ])?;
        }
        for (i, s) in self.s_grid.iter().enumerate() {
            w.write_record([
                "CTE",
                &self.family,
                "",
                &s.to_string(),
                "",
                &self.cte[i].to_string(),
            ])?;
        }
        for block in &self.blocks {
            for (i, s) in self.s_grid.iter().enumerate() {
                for (j, t) in self.t_grid.iter().enumerate() {
                    w.write_record([
                        "CCTE",
                        &self.family,
                        &block.theta.to_string(),
                        &s.to_string(),
                        &t.to_string(),
                        &block.values[i][j].to_string(),
                    ])?;
                }
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Single CCTE query result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcteReport {
    pub family: String,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_file: Option<String>,
    pub s: f64,
    pub t: f64,
    pub value: f64,
    pub method: String,
    pub denominator: f64,
    pub integral_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub value: f64,
    pub std_error: f64,
    pub n_accepted: usize,
    pub n_total: usize,
    /// Whether the analytic value sits within three standard errors of the
    /// Monte Carlo estimate.
    pub agrees: bool,
}

impl CcteReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "CCTE({}, {}) = {:.4}   [{} route, family {} theta {}]",
            self.s, self.t, self.value, self.method, self.family, self.theta
        );
        let _ = writeln!(out, "joint survival mass: {:.6e}", self.denominator);
        let _ = writeln!(out, "integral error:      {:.3e}", self.integral_error);
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                out,
                "oracle: {:.4} +/- {:.4} ({} of {} accepted) -> {}",
                o.value,
                o.std_error,
                o.n_accepted,
                o.n_total,
                if o.agrees {
                    "agrees within 3 SE"
                } else {
                    "DISAGREES beyond 3 SE"
                }
            );
        }
        out
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "family",
            "theta",
            "s",
            "t",
            "value",
            "method",
            "denominator",
            "integral_error",
            "oracle_value",
            "oracle_se",
            "oracle_agrees",
        ])?;
        let (ov, ose, oa) = match &self.oracle {
            Some(o) => (
                o.value.to_string(),
                o.std_error.to_string(),
                o.agrees.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            &self.family,
            &self.theta.to_string(),
            &self.s.to_string(),
            &self.t.to_string(),
            &self.value.to_string(),
            &self.method,
            &self.denominator.to_string(),
            &self.integral_error.to_string(),
            &ov,
            &ose,
            &oa,
        ])?;
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Fit pipeline output: tau, fitted theta, and pairwise CCTE matrices.
/// Theta diagonals are `null` (a series is comonotone with itself), CCTE
/// diagonals are undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: String,
    pub kind: String,
    pub margin: String,
    pub s: f64,
    pub t: f64,
    pub names: Vec<String>,
    pub tau: Vec<Vec<f64>>,
    pub theta: Vec<Vec<Option<f64>>>,
    pub ccte: Vec<Vec<Option<f64>>>,
    pub warnings: Vec<String>,
}

impl FitReport {
    fn render_matrix<F: Fn(usize, usize) -> Option<f64>>(
        out: &mut String,
        title: &str,
        names: &[String],
        get: F,
    ) {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:<10}", "");
        for n in names {
            let _ = write!(out, "{n:>10}");
        }
        out.push('\n');
        for (i, n) in names.iter().enumerate() {
            let _ = write!(out, "{n:<10}");
            for j in 0..names.len() {
                match get(i, j) {
                    Some(v) => {
                        let _ = write!(out, "{v:>10.4}");
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "family: {}   input: {}   margin: {}   levels: s = {}, t = {}\n",
            self.family, self.kind, self.margin, self.s, self.t
        );
        Self::render_matrix(&mut out, "Kendall tau", &self.names, |i, j| {
            Some(self.tau[i][j])
        });
        out.push('\n');
        Self::render_matrix(&mut out, "fitted theta", &self.names, |i, j| {
            self.theta[i][j]
        });
        out.push('\n');
        Self::render_matrix(
            &mut out,
            "CCTE (rows: target, columns: associate)",
            &self.names,
            |i, j| self.ccte[i][j],
        );
        if !self.warnings.is_empty() {
            out.push('\n');
            for w in &self.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
        }
        out
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["matrix", "target", "associate", "value"])?;
        let k = self.names.len();
        let mut cell = |m: &str, i: usize, j: usize, v: Option<f64>| -> Result<()> {
            w.write_record([
                m,
                &self.names[i],
                &self.names[j],
                &v.map(|x| x.to_string()).unwrap_or_default(),
            ])?;
            Ok(())
        };
        for i in 0..k {
            for j in 0..k {
                cell("tau", i, j, Some(self.tau[i][j]))?;
            }
        }
        for i in 0..k {
            for j in 0..k {
                cell("theta", i, j, self.theta[i][j])?;
            }
        }
        for i in 0..k {
            for j in 0..k {
                cell("ccte", i, j, self.ccte[i][j])?;
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// One record of the diagonal plot sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub s: f64,
    pub t: f64,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub measure: String,
    pub value: f64,
}

pub fn render_plot_csv(rows: &[PlotRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "t", "family", "theta", "measure", "value"])?;
    for r in rows {
        w.write_record([
            &r.s.to_string(),
            &r.t.to_string(),
            &r.family,
            &r.theta.map(|t| t.to_string()).unwrap_or_default(),
            &r.measure,
            &r.value.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
