//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Monte Carlo criteria run at M = 10^6 with the default seed (each
//! criterion derives its own stream), so the output is reproducible.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use stabindex::checks::{
    catalog_residual, closure_residual, erf_integral_error, is_deterministic, mean_index,
    oracle_tally, quadrant_probability,
};
use stabindex::montecarlo::{convergence_study, derive_seed, log_grid, DEFAULT_SEED};
use stabindex::polyroot::Region;
use stabindex::{
    build_constraints, frequencies, least_squares_refine, nonneg_repair, run_estimation,
    EstimationConfig, FamilyKind, ModelFamily, ProbabilityVector,
};

const M: u64 = 1_000_000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn seed(label: u64) -> u64 {
    derive_seed(DEFAULT_SEED, label)
}

fn observed(family: ModelFamily, label: u64) -> ProbabilityVector {
    let h = run_estimation(&EstimationConfig::new(family, M, seed(label))).expect("estimation");
    frequencies(&h).expect("frequencies")
}

/// Collects sub-checks; the criterion passes only if all of them do.
#[derive(Default)]
struct Tally {
    ok: bool,
    notes: Vec<String>,
    started: bool,
}

impl Tally {
    fn check(&mut self, pass: bool, note: String) {
        if !self.started {
            self.ok = true;
            self.started = true;
        }
        self.ok &= pass;
        self.notes
            .push(if pass { note } else { format!("[fail] {note}") });
    }

    fn within(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let d = (got - want).abs();
        self.check(
            d <= tol,
            format!("{label} {got:.6} vs {want:.6} (|d| {d:.1e} <= {tol:.1e})"),
        );
    }

    fn finish(self) -> Outcome {
        let text = self.notes.join("; ");
        if self.ok && self.started {
            Ok(text)
        } else {
            Err(text)
        }
    }
}

fn ac1() -> Outcome {
    let mut t = Tally::default();
    let start = Instant::now();
    let p1 = observed(ModelFamily::continuous_system(1).unwrap(), 11);
    t.within("n=1 p0", p1.values[0], 0.5, 2e-3);
    let p2 = observed(ModelFamily::continuous_system(2).unwrap(), 12);
    for (k, want) in [0.25, 0.5, 0.25].into_iter().enumerate() {
        t.within(&format!("n=2 p{k}"), p2.values[k], want, 2.5e-3);
    }
    let secs = start.elapsed().as_secs_f64();
    t.check(secs < 60.0, format!("runtime {secs:.1}s < 60s"));
    t.finish()
}

fn ac2() -> Outcome {
    let mut t = Tally::default();
    let p3 = observed(ModelFamily::continuous_equation(3).unwrap(), 21);
    t.within("n=3 p0", p3.values[0], 1.0 / 16.0, 2e-3);
    t.within("n=3 p1", p3.values[1], 7.0 / 16.0, 2.5e-3);
    let f4 = ModelFamily::continuous_equation(4).unwrap();
    let refined =
        nonneg_repair(&build_constraints(f4), &observed(f4, 22), 5).map_err(|e| e.to_string())?;
    t.within("n=4 refined p0", refined.values[0], 0.00925, 2e-3);
    t.check(
        refined.values[0] < 1.0 / 32.0,
        format!("n=4 refined p0 {:.6} < 1/32", refined.values[0]),
    );
    t.finish()
}

fn ac3() -> Outcome {
    let mut t = Tally::default();
    let edge = 2f64.sqrt().atan() / PI;
    let p2 = observed(ModelFamily::discrete_equation(2).unwrap(), 31);
    t.within("n=2 p0", p2.values[0], edge, 2e-3);
    t.within("n=2 p2", p2.values[2], edge, 2e-3);
    let p4 = observed(ModelFamily::discrete_equation(4).unwrap(), 32);
    let even = p4.values[0] + p4.values[2] + p4.values[4];
    t.within("n=4 even sum", even, 2.0 / PI * 1.5f64.sqrt().atan(), 2e-3);
    t.finish()
}

fn ac4() -> Outcome {
    let mut t = Tally::default();
    let p = observed(ModelFamily::discrete_system(2).unwrap(), 41);
    for (k, want) in [0.46348, 0.27705, 0.25947].into_iter().enumerate() {
        t.within(&format!("p{k}"), p.values[k], want, 3e-3);
    }
    t.finish()
}

fn ac5() -> Outcome {
    let mut t = Tally::default();
    for (name, region) in [
        ("half-plane", Region::LeftHalfPlane),
        ("disk", Region::Disk { radius: 1.0 }),
    ] {
        let (mut agreed, mut compared, mut skipped) = (0, 0, 0);
        for degree in 1..=6 {
            let tally =
                oracle_tally(region, degree, 10_000, seed(50)).map_err(|e| e.to_string())?;
            agreed += tally.agreed;
            compared += tally.compared;
            skipped += tally.skipped;
        }
        t.check(
            compared > 0 && agreed == compared,
            format!("{name} {agreed}/{compared} agree ({skipped} indeterminate)"),
        );
    }
    t.finish()
}

fn rationals(v: &[(f64, f64)]) -> Vec<f64> {
    v.iter().map(|(a, b)| a / b).collect()
}

fn ac6() -> Outcome {
    let mut t = Tally::default();

    let cs7 = build_constraints(ModelFamily::continuous_system(7).unwrap());
    let pt7 = rationals(&[
        (31643.0, 50000000.0),
        (261137.0, 12500000.0),
        (7124967.0, 50000000.0),
        (1344047.0, 4000000.0),
        (33597117.0, 100000000.0),
        (14248187.0, 100000000.0),
        (1043913.0, 50000000.0),
        (63379.0, 100000000.0),
    ]);
    let r7 = least_squares_refine(&cs7, &ProbabilityVector::raw(pt7, 100_000_000))
        .map_err(|e| e.to_string())?;
    t.within("cont-sys n=7 p0", r7.values[0], 25333.0 / 40000000.0, 1e-12);

    let cs8 = build_constraints(ModelFamily::continuous_equation(8).unwrap());
    let pt8 = rationals(&[
        (1.0, 50000000.0),
        (6599.0, 50000000.0),
        (1159359.0, 50000000.0),
        (4996163.0, 20000000.0),
        (45377377.0, 100000000.0),
        (4995607.0, 20000000.0),
        (2318357.0, 100000000.0),
        (13497.0, 100000000.0),
        (1.0, 100000000.0),
    ]);
    let want8 = rationals(&[
        (0.0, 1.0),
        (13569.0, 80000000.0),
        (13882321.0, 600000000.0),
        (19986431.0, 80000000.0),
        (136117679.0, 300000000.0),
        (19986431.0, 80000000.0),
        (13882321.0, 600000000.0),
        (13569.0, 80000000.0),
        (0.0, 1.0),
    ]);
    let r8 = nonneg_repair(&cs8, &ProbabilityVector::raw(pt8, 100_000_000), 5)
        .map_err(|e| e.to_string())?;
    let worst = r8
        .values
        .iter()
        .zip(&want8)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    t.check(
        worst <= 1e-12,
        format!("cont-eq n=8 repaired, max |d| {worst:.1e} <= 1e-12"),
    );

    let f4 = ModelFamily::discrete_equation(4).unwrap();
    let pt = observed(f4, 61);
    let r4 = least_squares_refine(&build_constraints(f4), &pt).map_err(|e| e.to_string())?;
    let v = &pt.values;
    let closed = (v[0] - 2.0 * v[2] + v[4]) / 6.0 + 2.0 / (3.0 * PI) * 1.5f64.sqrt().atan();
    t.within("disc-eq n=4 p0 closed form", r4.values[0], closed, 1e-12);
    t.finish()
}

fn ac7() -> Outcome {
    let mut t = Tally::default();
    let family = ModelFamily::discrete_equation(2).unwrap();
    let exact = 2f64.sqrt().atan() / PI;
    let grid = log_grid(2, 6, 4);
    let study = convergence_study(family, 2, exact, &grid, seed(70)).map_err(|e| e.to_string())?;
    let fit = study.fit.ok_or("no fit")?;
    t.check(
        (-0.75..=-0.25).contains(&fit.slope),
        format!(
            "slope {:.3} in [-0.75, -0.25] over {} grid points (R^2 {:.2})",
            fit.slope,
            grid.len(),
            fit.r_squared
        ),
    );
    let last = study.rows.last().ok_or("empty study")?;
    t.check(
        last.abs_error < 1e-2,
        format!("error at M=10^6 {:.1e} < 1e-2", last.abs_error),
    );
    t.finish()
}

fn ac8() -> Outcome {
    let mut t = Tally::default();
    let mut worst_mean: (f64, String) = (0.0, String::new());
    let mut mean_ok = true;
    for kind in [
        FamilyKind::ContinuousSystem,
        FamilyKind::ContinuousEquation,
        FamilyKind::DiscreteEquation,
    ] {
        for n in 1..=6 {
            let family = ModelFamily::new(kind, n).unwrap();
            let mean = mean_index(family, M, seed(800 + 10 * kind as u64 + n as u64))
                .map_err(|e| e.to_string())?;
            let ratio = (mean - n as f64 / 2.0).abs() / (4.0 * (n as f64 / M as f64).sqrt());
            mean_ok &= ratio <= 1.0;
            if ratio > worst_mean.0 {
                worst_mean = (ratio, format!("{kind} n={n}"));
            }
        }
    }
    t.check(
        mean_ok,
        format!(
            "E(X)=n/2 worst at {} ({:.2} of bound)",
            worst_mean.1, worst_mean.0
        ),
    );

    let (p, se) = quadrant_probability(M, seed(81));
    let z = (p - 1.0 / 32.0) / se;
    t.check(z.abs() <= 4.0, format!("quadrant {p:.6}, z {z:.2}"));

    let e = erf_integral_error(1.0);
    t.check(e <= 1e-8, format!("erf quadrature {e:.1e} <= 1e-8"));

    let c = closure_residual(10);
    t.check(c < 1e-12, format!("closure {c:.1e}"));
    let c = catalog_residual(10);
    t.check(c < 1e-12, format!("catalog {c:.1e}"));

    let mut same = true;
    for kind in FamilyKind::ALL {
        same &= is_deterministic(ModelFamily::new(kind, 3).unwrap(), M, seed(82))
            .map_err(|e| e.to_string())?;
    }
    t.check(same, "determinism n=3 all families".to_string());
    t.finish()
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1", "continuous system n=1,2", ac1),
        ("AC2", "continuous equation n=3,4", ac2),
        ("AC3", "difference equation n=2,4", ac3),
        ("AC4", "discrete system n=2", ac4),
        ("AC5", "oracle equivalence", ac5),
        ("AC6", "refinement exactness", ac6),
        ("AC7", "convergence slope", ac7),
        ("AC8", "property suite", ac8),
    ];
    let mut failures = 0;
    for (id, title, run) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id} {title} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id} {title} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
