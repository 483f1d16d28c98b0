//! Text, CSV and JSON renderings of estimates, convergence studies and
//! verification results. Probabilities are printed with five decimals in
//! the text and CSV forms; JSON keeps full precision.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checks::CheckOutcome;
use crate::constraints::{build_constraints, exact_probabilities};
use crate::error::{Error, Result};
use crate::models::IndexMethod;
use crate::montecarlo::{
    frequencies, run_estimation, ConvergenceStudy, EstimationConfig, HistogramRecord,
    ProbabilityVector,
};
use crate::refine::{nonneg_repair, DEFAULT_MAX_ROUNDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format '{s}'"))),
        }
    }
}

/// Everything one `estimate` run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub histogram: HistogramRecord,
    pub shards: usize,
    pub method: IndexMethod,
    pub observed: ProbabilityVector,
    /// Present for refinable families.
    pub refined: Option<ProbabilityVector>,
    pub exact: Vec<Option<f64>>,
    /// Each entry's relation to the free probabilities, e.g. `1/2 - p0`.
    pub relations: Vec<String>,
}

/// Runs the estimation and, where it applies, the refinement.
pub fn estimate_report(cfg: &EstimationConfig) -> Result<EstimateReport> {
    let hist = run_estimation(cfg)?;
    let observed = frequencies(&hist)?;
    let cs = build_constraints(cfg.family);
    let refined = if cs.is_refinable() {
        Some(nonneg_repair(&cs, &observed, DEFAULT_MAX_ROUNDS)?)
    } else {
        None
    };
    Ok(EstimateReport {
        histogram: HistogramRecord::new(cfg, &hist),
        shards: cfg.shards,
        method: cfg.method,
        observed,
        refined,
        exact: exact_probabilities(cfg.family),
        relations: (0..=cfg.family.n()).map(|i| cs.relation_label(i)).collect(),
    })
}

fn prob(x: f64) -> String {
    format!("{x:.5}")
}

fn csv_string<F>(write: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

impl EstimateReport {
    fn exact_cell(&self, k: usize) -> String {
        match self.exact[k] {
            Some(v) => prob(v),
            None => self.relations[k].clone(),
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Table => Ok(self.table()),
            OutputFormat::Csv => self.csv(),
            OutputFormat::Json => Ok(json_string(self)),
        }
    }

    fn table(&self) -> String {
        let h = &self.histogram;
        let mut s = format!(
            "{} n={}  M={}  seed={}  shards={}  method={}  indeterminate={}\n",
            h.family,
            h.n,
            h.samples,
            h.seed,
            self.shards,
            self.method.tag(),
            h.indeterminate
        );
        match &self.refined {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "{:<4}{:<12}{:<15}exact/relation",
                    "k", "observed", "least squares"
                );
                for k in 0..=h.n {
                    let _ = writeln!(
                        s,
                        "{:<4}{:<12}{:<15}{}",
                        k,
                        prob(self.observed.values[k]),
                        prob(r.values[k]),
                        self.exact_cell(k)
                    );
                }
            }
            None => {
                let _ = writeln!(s, "{:<4}observed", "k");
                for k in 0..=h.n {
                    let _ = writeln!(s, "{:<4}{}", k, prob(self.observed.values[k]));
                }
            }
        }
        s
    }

    fn csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record([
                "k",
                "observed",
                "observed_stderr",
                "least_squares",
                "least_squares_stderr",
                "exact",
                "relation",
            ])?;
            for k in 0..=self.histogram.n {
                let (ls, ls_se) = match &self.refined {
                    Some(r) => (prob(r.values[k]), prob(r.stderr[k])),
                    None => (String::new(), String::new()),
                };
                w.write_record([
                    k.to_string(),
                    prob(self.observed.values[k]),
                    prob(self.observed.stderr[k]),
                    ls,
                    ls_se,
                    self.exact[k].map(prob).unwrap_or_default(),
                    self.relations[k].clone(),
                ])?;
            }
            Ok(())
        })
    }
}

pub fn render_convergence(study: &ConvergenceStudy, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(json_string(study)),
        OutputFormat::Csv => csv_string(|w| {
            w.write_record(["M", "observed", "abs_error"])?;
            for r in &study.rows {
                w.write_record([
                    r.samples.to_string(),
                    prob(r.observed),
                    format!("{:.3e}", r.abs_error),
                ])?;
            }
            Ok(())
        }),
        OutputFormat::Table => {
            let mut s = format!(
                "{} n={}  index {}  exact {}\n{:<12}{:<12}abs error\n",
                study.family,
                study.n,
                study.index,
                prob(study.exact),
                "M",
                "observed"
            );
            for r in &study.rows {
                let _ = writeln!(
                    s,
                    "{:<12}{:<12}{:.3e}",
                    r.samples,
                    prob(r.observed),
                    r.abs_error
                );
            }
            match study.fit {
                Some(fit) => {
                    let _ = writeln!(s, "slope {:.3}  R^2 {:.3}", fit.slope, fit.r_squared);
                }
                None => s.push_str("slope n/a (need at least two grid points)\n"),
            }
            Ok(s)
        }
    }
}

pub fn render_checks(checks: &[CheckOutcome], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(json_string(&checks)),
        OutputFormat::Csv => csv_string(|w| {
            w.write_record(["check", "passed", "detail"])?;
            for c in checks {
                w.write_record([
                    c.name.as_str(),
                    if c.passed { "true" } else { "false" },
                    c.detail.as_str(),
                ])?;
            }
            Ok(())
        }),
        OutputFormat::Table => {
            let mut s = String::new();
            for c in checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(s, "{} checks, {} failed", checks.len(), failed);
            Ok(s)
        }
    }
}
