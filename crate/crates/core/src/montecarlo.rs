//! Sharded, reproducible Monte Carlo estimation of index frequencies.
//!
//! Each shard owns a ChaCha8 stream keyed by `(seed, shard id)`; the shard
//! histograms are merged in shard order, so the result depends only on the
//! configuration and never on how many worker threads ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{sample_index, FamilyKind, IndexMethod, ModelFamily};
use crate::polyroot::{RootCount, Tolerance};

/// Runs abort when more than this fraction of samples is indeterminate.
pub const MAX_INDETERMINATE_FRACTION: f64 = 1e-3;

pub const DEFAULT_SEED: u64 = 20_210_607;
pub const DEFAULT_SHARDS: usize = 64;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub family: ModelFamily,
    pub method: IndexMethod,
    pub samples: u64,
    pub seed: u64,
    pub shards: usize,
    pub tol: Tolerance,
}

impl EstimationConfig {
    pub fn new(family: ModelFamily, samples: u64, seed: u64) -> Self {
        EstimationConfig {
            family,
            method: IndexMethod::Auto,
            samples,
            seed,
            shards: DEFAULT_SHARDS.min(samples.max(1) as usize),
            tol: Tolerance::DEFAULT,
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn with_method(mut self, method: IndexMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tol(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::InvalidConfig("shards must be at least 1".into()));
        }
        if (self.shards as u64) > self.samples {
            return Err(Error::InvalidConfig(format!(
                "shards ({}) cannot exceed samples ({})",
                self.shards, self.samples
            )));
        }
        Ok(())
    }

    /// Samples assigned to `shard`; the first `samples % shards` shards take one extra.
    pub fn shard_size(&self, shard: usize) -> u64 {
        let shards = self.shards as u64;
        let base = self.samples / shards;
        base + u64::from((shard as u64) < self.samples % shards)
    }
}

/// Independent random stream for one shard.
pub fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// Mixes a label into a seed (splitmix64 finaliser).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counts of observed indices `0..=n` plus indeterminate draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexHistogram {
    pub counts: Vec<u64>,
    pub indeterminate: u64,
    pub total: u64,
}

impl IndexHistogram {
    pub fn zero(n: usize) -> Self {
        IndexHistogram {
            counts: vec![0; n + 1],
            indeterminate: 0,
            total: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn record(&mut self, outcome: RootCount) {
        match outcome {
            RootCount::Count(k) => self.counts[k] += 1,
            RootCount::Indeterminate(_) => self.indeterminate += 1,
        }
        self.total += 1;
    }

    pub fn determinate(&self) -> u64 {
        self.total - self.indeterminate
    }

    pub fn indeterminate_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.indeterminate as f64 / self.total as f64
        }
    }

    /// Mean index over determinate samples.
    pub fn mean_index(&self) -> Option<f64> {
        let d = self.determinate();
        (d > 0).then(|| {
            self.counts
                .iter()
                .enumerate()
                .map(|(k, &c)| k as f64 * c as f64)
                .sum::<f64>()
                / d as f64
        })
    }
}

/// Componentwise sum of two histograms over the same `n`.
pub fn merge(a: &IndexHistogram, b: &IndexHistogram) -> Result<IndexHistogram> {
    if a.counts.len() != b.counts.len() {
        return Err(Error::DimensionMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(IndexHistogram {
        counts: a.counts.iter().zip(&b.counts).map(|(x, y)| x + y).collect(),
        indeterminate: a.indeterminate + b.indeterminate,
        total: a.total + b.total,
    })
}

fn run_shard(cfg: &EstimationConfig, shard: usize) -> Result<IndexHistogram> {
    let mut rng = shard_rng(cfg.seed, shard);
    let mut hist = IndexHistogram::zero(cfg.family.n());
    for _ in 0..cfg.shard_size(shard) {
        let outcome = sample_index(cfg.family, cfg.method, &mut rng, cfg.tol)?;
        hist.record(outcome.index);
    }
    Ok(hist)
}

/// Draws `cfg.samples` samples and tallies their indices.
pub fn run_estimation(cfg: &EstimationConfig) -> Result<IndexHistogram> {
    cfg.validate()?;
    let shards: Vec<IndexHistogram> = (0..cfg.shards)
        .into_par_iter()
        .map(|shard| run_shard(cfg, shard))
        .collect::<Result<_>>()?;
    let mut total = IndexHistogram::zero(cfg.family.n());
    for h in &shards {
        total = merge(&total, h)?;
    }
    let fraction = total.indeterminate_fraction();
    if fraction > MAX_INDETERMINATE_FRACTION {
        return Err(Error::TooManyIndeterminate {
            fraction,
            threshold: MAX_INDETERMINATE_FRACTION,
            histogram: Box::new(total),
        });
    }
    Ok(total)
}

/// On-disk form of a histogram: `{family, n, M, seed, counts, indeterminate}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRecord {
    pub family: FamilyKind,
    pub n: usize,
    #[serde(rename = "M")]
    pub samples: u64,
    pub seed: u64,
    pub counts: Vec<u64>,
    pub indeterminate: u64,
}

impl HistogramRecord {
    pub fn new(cfg: &EstimationConfig, hist: &IndexHistogram) -> Self {
        HistogramRecord {
            family: cfg.family.kind(),
            n: cfg.family.n(),
            samples: hist.total,
            seed: cfg.seed,
            counts: hist.counts.clone(),
            indeterminate: hist.indeterminate,
        }
    }

    pub fn to_histogram(&self) -> Result<IndexHistogram> {
        if self.counts.len() != self.n + 1 {
            return Err(Error::DimensionMismatch {
                left: self.n + 1,
                right: self.counts.len(),
            });
        }
        let sum: u64 = self.counts.iter().sum::<u64>() + self.indeterminate;
        if sum != self.samples {
            return Err(Error::InvalidConfig(format!(
                "counts and indeterminate add to {sum}, expected M = {}",
                self.samples
            )));
        }
        Ok(IndexHistogram {
            counts: self.counts.clone(),
            indeterminate: self.indeterminate,
            total: self.samples,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilitySource {
    Raw,
    Refined,
    Exact,
}

/// Probabilities `p_0 … p_n` with one standard error per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub source: ProbabilitySource,
    /// Determinate sample count behind the estimate (0 for exact values).
    pub samples: u64,
}

impl ProbabilityVector {
    /// Raw frequencies given directly, with binomial standard errors for `samples` draws.
    pub fn raw(values: Vec<f64>, samples: u64) -> Self {
        let stderr = values
            .iter()
            .map(|&p| binomial_stderr(p, samples))
            .collect();
        ProbabilityVector {
            values,
            stderr,
            source: ProbabilitySource::Raw,
            samples,
        }
    }

    pub fn exact(values: Vec<f64>) -> Self {
        let stderr = vec![0.0; values.len()];
        ProbabilityVector {
            values,
            stderr,
            source: ProbabilitySource::Exact,
            samples: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean_index(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

fn binomial_stderr(p: f64, samples: u64) -> f64 {
    if samples == 0 {
        0.0
    } else {
        (p * (1.0 - p) / samples as f64).max(0.0).sqrt()
    }
}

/// Relative frequencies over determinate samples.
pub fn frequencies(h: &IndexHistogram) -> Result<ProbabilityVector> {
    let d = h.determinate();
    if d == 0 {
        return Err(Error::AllIndeterminate);
    }
    let values = h.counts.iter().map(|&c| c as f64 / d as f64).collect();
    Ok(ProbabilityVector::raw(values, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "M")]
    pub samples: u64,
    pub observed: f64,
    pub abs_error: f64,
}

/// Least-squares line through `(ln M, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub family: FamilyKind,
    pub n: usize,
    pub index: usize,
    pub exact: f64,
    pub rows: Vec<ConvergenceRow>,
    pub fit: Option<LogLogFit>,
}

/// Sample sizes `10^min_exp … 10^max_exp` with `per_decade` points per decade.
pub fn log_grid(min_exp: u32, max_exp: u32, per_decade: u32) -> Vec<u64> {
    let per_decade = per_decade.max(1);
    let steps = (max_exp.saturating_sub(min_exp)) * per_decade;
    let mut grid: Vec<u64> = (0..=steps)
        .map(|i| {
            let e = min_exp as f64 + i as f64 / per_decade as f64;
            10f64.powf(e).round() as u64
        })
        .collect();
    grid.dedup();
    grid
}

/// Fits `ln y = slope · ln x + intercept`; `None` with fewer than two usable points.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Error of the observed frequency of index `k` against `exact` along a
/// grid of sample sizes. Every grid point is an independent run.
pub fn convergence_study(
    family: ModelFamily,
    k: usize,
    exact: f64,
    grid: &[u64],
    seed: u64,
) -> Result<ConvergenceStudy> {
    if k > family.n() {
        return Err(Error::DimensionMismatch {
            left: k,
            right: family.n(),
        });
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &samples) in grid.iter().enumerate() {
        let cfg = EstimationConfig::new(family, samples, derive_seed(seed, i as u64));
        let p = frequencies(&run_estimation(&cfg)?)?;
        rows.push(ConvergenceRow {
            samples,
            observed: p.values[k],
            abs_error: (p.values[k] - exact).abs(),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.samples as f64, r.abs_error))
        .collect();
    Ok(ConvergenceStudy {
        family: family.kind(),
        n: family.n(),
        index: k,
        exact,
        fit: log_log_fit(&points),
        rows,
    })
}
