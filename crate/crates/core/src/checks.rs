//! Invariant checks behind `stabindex verify`.
//!
//! Each check is a plain function so the test suites can call it directly;
//! [`run_verify`] strings them together and reports one line per property.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::constraints::{build_constraints, exact_probabilities};
use crate::error::{Error, Result};
use crate::models::{FamilyKind, ModelFamily};
use crate::montecarlo::{derive_seed, run_estimation, EstimationConfig, DEFAULT_SEED};
use crate::polyroot::{
    companion_matrix, eigen_region_count, jury_count, routh_hurwitz_count, Polynomial, Region,
    RootCount, Tolerance,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    /// Monte Carlo size for the mean-index and quadrant checks.
    pub samples: u64,
    pub seed: u64,
    /// Tolerance for the indeterminate-fraction check.
    pub tol: Tolerance,
    /// Random polynomials per degree for the oracle comparison.
    pub oracle_draws: usize,
    pub oracle_max_degree: usize,
    /// Largest order swept by the closure, catalog and indeterminate checks.
    pub max_order: usize,
    pub indeterminate_samples: u64,
    pub determinism_samples: u64,
    /// Multiplier on the closed form of the erf integral; 1 in normal use.
    pub arctan_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 1_000_000,
            seed: DEFAULT_SEED,
            tol: Tolerance::DEFAULT,
            oracle_draws: 10_000,
            oracle_max_degree: 6,
            max_order: 10,
            indeterminate_samples: 100_000,
            determinism_samples: 100_000,
            arctan_scale: 1.0,
        }
    }
}

/// Agreement between the algebraic counter and eigenvalue counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleTally {
    pub compared: usize,
    pub agreed: usize,
    pub skipped: usize,
}

impl OracleTally {
    pub fn all_agree(&self) -> bool {
        self.compared > 0 && self.agreed == self.compared
    }
}

/// Draws `draws` Gaussian polynomials of `degree` and compares the
/// Routh–Hurwitz (or Jury) count with the companion-eigenvalue count.
/// Draws that either method calls indeterminate are skipped.
pub fn oracle_tally(region: Region, degree: usize, draws: usize, seed: u64) -> Result<OracleTally> {
    let tol = Tolerance::DEFAULT;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, degree as u64));
    let mut tally = OracleTally::default();
    for _ in 0..draws {
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.sample(StandardNormal)).collect();
        let p = Polynomial::new(coeffs)?;
        let algebraic = match region {
            Region::LeftHalfPlane => routh_hurwitz_count(&p, tol),
            Region::Disk { .. } => jury_count(&p, tol),
        };
        let c = companion_matrix(&p, tol)?;
        let numeric = eigen_region_count(&c, region, tol)?;
        match (algebraic, numeric) {
            (RootCount::Count(a), RootCount::Count(b)) => {
                tally.compared += 1;
                tally.agreed += usize::from(a == b);
            }
            _ => tally.skipped += 1,
        }
    }
    Ok(tally)
}

/// Worst `closure_residual` over every family and `n = 1..=max_order`.
pub fn closure_residual(max_order: usize) -> f64 {
    let mut worst = 0.0f64;
    for kind in FamilyKind::ALL {
        for n in 1..=max_order {
            let cs = build_constraints(ModelFamily::new(kind, n).expect("n >= 1"));
            worst = worst.max(cs.closure_residual());
        }
    }
    worst
}

/// Worst violation of a family's relations by its exact catalog entries.
pub fn catalog_residual(max_order: usize) -> f64 {
    let mut worst = 0.0f64;
    for kind in FamilyKind::ALL {
        for n in 1..=max_order {
            let family = ModelFamily::new(kind, n).expect("n >= 1");
            let exact = exact_probabilities(family);
            worst = worst.max(build_constraints(family).partial_residual(&exact));
            if exact.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return f64::INFINITY;
            }
        }
    }
    worst
}

/// Composite Simpson approximation of `∫₀^∞ exp(-α²x²) erf(βx) dx`.
pub fn erf_integral_quadrature(alpha: f64, beta: f64) -> f64 {
    let upper = 8.0 / alpha.abs();
    let intervals = 20_000;
    let h = upper / intervals as f64;
    let f = |x: f64| (-(alpha * x).powi(2)).exp() * erf(beta * x);
    let mut sum = f(0.0) + f(upper);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0
}

/// `scale · atan(β/α) / (α√π)`.
pub fn erf_integral_closed_form(alpha: f64, beta: f64, scale: f64) -> f64 {
    scale * (beta / alpha).atan() / (alpha * PI.sqrt())
}

/// Largest quadrature error over `α ∈ {1, 2}`, `β ∈ {-1, 1, 3}`.
pub fn erf_integral_error(scale: f64) -> f64 {
    let mut worst = 0.0f64;
    for alpha in [1.0, 2.0] {
        for beta in [-1.0, 1.0, 3.0] {
            let d =
                erf_integral_quadrature(alpha, beta) - erf_integral_closed_form(alpha, beta, scale);
            worst = worst.max(d.abs());
        }
    }
    worst
}

/// Monte Carlo estimate and standard error of
/// `P(U > 0, V > 0, S > 0, T > 0, UT - SV > 0)` for i.i.d. standard normals.
pub fn quadrant_probability(samples: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let s: f64 = rng.sample(StandardNormal);
        let t: f64 = rng.sample(StandardNormal);
        if u > 0.0 && v > 0.0 && s > 0.0 && t > 0.0 && u * t - s * v > 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

/// Observed mean index of `family` with `samples` draws.
pub fn mean_index(family: ModelFamily, samples: u64, seed: u64) -> Result<f64> {
    let h = run_estimation(&EstimationConfig::new(family, samples, seed))?;
    h.mean_index().ok_or(Error::AllIndeterminate)
}

/// Indeterminate fraction of a run, including runs that abort on it.
pub fn indeterminate_fraction(
    family: ModelFamily,
    samples: u64,
    seed: u64,
    tol: Tolerance,
) -> Result<f64> {
    let cfg = EstimationConfig::new(family, samples, seed).with_tol(tol);
    match run_estimation(&cfg) {
        Ok(h) => Ok(h.indeterminate_fraction()),
        Err(Error::TooManyIndeterminate { fraction, .. }) => Ok(fraction),
        Err(e) => Err(e),
    }
}

/// Whether two runs with the same configuration give the same histogram.
pub fn is_deterministic(family: ModelFamily, samples: u64, seed: u64) -> Result<bool> {
    let cfg = EstimationConfig::new(family, samples, seed);
    Ok(run_estimation(&cfg)? == run_estimation(&cfg)?)
}

fn failed(name: &str, e: Error) -> CheckOutcome {
    CheckOutcome::new(name, false, format!("error: {e}"))
}

fn check_oracle(cfg: &VerifyConfig, region: Region, name: &str) -> CheckOutcome {
    let mut total = OracleTally::default();
    for degree in 1..=cfg.oracle_max_degree {
        match oracle_tally(region, degree, cfg.oracle_draws, cfg.seed) {
            Ok(t) => {
                total.compared += t.compared;
                total.agreed += t.agreed;
                total.skipped += t.skipped;
            }
            Err(e) => return failed(name, e),
        }
    }
    CheckOutcome::new(
        name,
        total.all_agree(),
        format!(
            "{}/{} agree, {} skipped (degrees 1..={})",
            total.agreed, total.compared, total.skipped, cfg.oracle_max_degree
        ),
    )
}

/// Runs every check and returns one outcome per property.
pub fn run_verify(cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    let mut out = vec![
        check_oracle(
            cfg,
            Region::LeftHalfPlane,
            "oracle: routh-hurwitz vs eigenvalues",
        ),
        check_oracle(
            cfg,
            Region::Disk { radius: 1.0 },
            "oracle: jury vs eigenvalues",
        ),
    ];

    let r = closure_residual(cfg.max_order);
    out.push(CheckOutcome::new(
        "constraint closure",
        r < 1e-12,
        format!("max residual {r:.3e} (n <= {})", cfg.max_order),
    ));
    let r = catalog_residual(cfg.max_order);
    out.push(CheckOutcome::new(
        "exact catalog consistency",
        r < 1e-12,
        format!("max residual {r:.3e}"),
    ));

    let e = erf_integral_error(cfg.arctan_scale);
    out.push(CheckOutcome::new(
        "erf integral quadrature",
        e < 1e-8,
        format!("max |quadrature - closed form| {e:.3e}"),
    ));

    let (p, se) = quadrant_probability(cfg.samples, derive_seed(cfg.seed, 0x5153));
    let z = (p - 1.0 / 32.0) / se;
    out.push(CheckOutcome::new(
        "positive quadrant probability 1/32",
        z.abs() <= 4.0,
        format!("estimate {p:.6}, z = {z:.2}"),
    ));

    for kind in FamilyKind::ALL.into_iter().filter(|k| k.is_symmetric()) {
        for n in 1..=6 {
            let name = format!("mean index {kind} n={n}");
            let family = ModelFamily::new(kind, n).expect("n >= 1");
            let seed = derive_seed(cfg.seed, (n as u64) << 8 | kind as u64);
            match mean_index(family, cfg.samples, seed) {
                Ok(mean) => {
                    let bound = 4.0 * (n as f64 / cfg.samples as f64).sqrt();
                    let dev = (mean - n as f64 / 2.0).abs();
                    out.push(CheckOutcome::new(
                        name,
                        dev <= bound,
                        format!("mean {mean:.5}, |mean - n/2| {dev:.2e} <= {bound:.2e}"),
                    ));
                }
                Err(e) => out.push(failed(&name, e)),
            }
        }
    }

    for kind in FamilyKind::ALL {
        let name = format!("indeterminate fraction {kind}");
        let mut worst = (0.0f64, 0);
        let mut error = None;
        for n in 1..=cfg.max_order {
            let family = ModelFamily::new(kind, n).expect("n >= 1");
            match indeterminate_fraction(family, cfg.indeterminate_samples, cfg.seed, cfg.tol) {
                Ok(f) if f > worst.0 => worst = (f, n),
                Ok(_) => {}
                Err(e) => {
                    error = Some(e);
                    break;
                }
            }
        }
        out.push(match error {
            Some(e) => failed(&name, e),
            None => CheckOutcome::new(
                name,
                worst.0 < 1e-3,
                format!(
                    "max fraction {:.2e} at n={} (tol {:e})",
                    worst.0,
                    worst.1,
                    cfg.tol.value()
                ),
            ),
        });
    }

    for kind in FamilyKind::ALL {
        let name = format!("determinism {kind} n=3");
        let family = ModelFamily::new(kind, 3).expect("n >= 1");
        out.push(
            match is_deterministic(family, cfg.determinism_samples, cfg.seed) {
                Ok(same) => CheckOutcome::new(name, same, "two runs with one seed"),
                Err(e) => failed(&name, e),
            },
        );
    }
    out
}
