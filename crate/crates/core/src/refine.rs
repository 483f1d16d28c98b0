//! Least-squares projection of observed frequencies onto a constraint system.

use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::montecarlo::{ProbabilitySource, ProbabilityVector};

pub const DEFAULT_MAX_ROUNDS: usize = 5;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = a.len();
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|m| l[i][m] * l[j][m]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= scale * 1e-12 {
                    return Err(Error::RankDeficient);
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut y = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|m| l[i][m] * y[m]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|m| l[m][i] * x[m]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}

/// Least-squares `q̂` for `design · q ≈ target` via the normal equations.
pub fn solve_normal_equations(design: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let k = design.first().map_or(0, Vec::len);
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut gram = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (row, t) in design.iter().zip(target) {
        for a in 0..k {
            rhs[a] += row[a] * t;
            for b in 0..k {
                gram[a][b] += row[a] * row[b];
            }
        }
    }
    let l = cholesky(&gram)?;
    Ok(cholesky_solve(&l, &rhs))
}

/// Hat matrix `D (DᵀD)⁻¹ Dᵀ`.
fn hat_matrix(design: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let len = design.len();
    let columns = (0..len)
        .map(|j| {
            let e: Vec<f64> = (0..len).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            let q = solve_normal_equations(design, &e)?;
            Ok(design
                .iter()
                .map(|row| row.iter().zip(&q).map(|(d, x)| d * x).sum())
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..len)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

/// Standard errors of `H p̃` under the multinomial covariance of `p̃`.
fn propagated_stderr(design: &[Vec<f64>], p: &[f64], samples: u64) -> Result<Vec<f64>> {
    let len = p.len();
    if samples == 0 || design.first().is_none_or(Vec::is_empty) {
        return Ok(vec![0.0; len]);
    }
    let h = hat_matrix(design)?;
    let m = samples as f64;
    let mut out = Vec::with_capacity(len);
    for row in &h {
        let hp: f64 = row.iter().zip(p).map(|(a, b)| a * b).sum();
        let quad: f64 = row.iter().zip(p).map(|(a, b)| a * a * b).sum();
        out.push(((quad - hp * hp) / m).max(0.0).sqrt());
    }
    Ok(out)
}

/// `p̂ = design · q̂ + offset` with `q̂` the least-squares fit to `p̃ - offset`.
pub fn least_squares_refine(
    cs: &ConstraintSystem,
    ptilde: &ProbabilityVector,
) -> Result<ProbabilityVector> {
    let len = cs.n() + 1;
    if ptilde.values.len() != len {
        return Err(Error::DimensionMismatch {
            left: len,
            right: ptilde.values.len(),
        });
    }
    let target: Vec<f64> = ptilde
        .values
        .iter()
        .zip(cs.offset())
        .map(|(p, b)| p - b)
        .collect();
    let q = solve_normal_equations(cs.design(), &target)?;
    let values = cs.apply(&q);
    let stderr = propagated_stderr(cs.design(), &ptilde.values, ptilde.samples)?;
    Ok(ProbabilityVector {
        values,
        stderr,
        source: ProbabilitySource::Refined,
        samples: ptilde.samples,
    })
}

/// Refines, then pins negative entries (and their mirrors) to zero and
/// refits until the estimate is non-negative.
pub fn nonneg_repair(
    cs: &ConstraintSystem,
    ptilde: &ProbabilityVector,
    max_rounds: usize,
) -> Result<ProbabilityVector> {
    if max_rounds == 0 {
        return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
    }
    let mut current = cs.clone();
    let mut pins: Vec<usize> = Vec::new();
    let mut estimate = least_squares_refine(&current, ptilde)?;
    for _ in 0..max_rounds {
        let negative: Vec<usize> = (0..estimate.values.len())
            .filter(|&i| estimate.values[i] < 0.0)
            .collect();
        if negative.is_empty() {
            return Ok(estimate);
        }
        for j in negative {
            pins.extend(cs.mirrors(j));
        }
        pins.sort_unstable();
        pins.dedup();
        current = cs.pinned(&pins)?;
        estimate = least_squares_refine(&current, ptilde)?;
    }
    if estimate.values.iter().all(|&v| v >= 0.0) {
        return Ok(estimate);
    }
    Err(Error::RepairExhausted {
        rounds: max_rounds,
        last: Box::new(estimate),
    })
}
