//! Counting polynomial roots by region.
//!
//! Two independent routes are provided. The algebraic route runs the Routh
//! array on the coefficients (left half-plane) or on the Möbius-transformed
//! polynomial (open unit disk). The numerical route builds a matrix and
//! counts its eigenvalues directly. Degenerate situations, where a root sits
//! on the region boundary or the Routh array meets a zero pivot, are reported
//! as [`RootCount::Indeterminate`] instead of being perturbed away.

pub mod eigen;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide that a pivot, a coefficient or an
/// eigenvalue distance is numerically zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(1e-12);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Tolerance(value))
        } else {
            Err(Error::InvalidTolerance(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for Tolerance {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Tolerance::new(value)
    }
}

impl From<Tolerance> for f64 {
    fn from(t: Tolerance) -> f64 {
        t.0
    }
}

/// Real polynomial stored by ascending powers: `coeffs[j]` multiplies `λ^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        Ok(Polynomial { coeffs })
    }

    /// Builds from coefficients listed highest power first.
    pub fn from_descending(coeffs: &[f64]) -> Result<Self> {
        Polynomial::new(coeffs.iter().rev().copied().collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Index of the highest stored coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Leading coefficient is nonzero relative to the largest coefficient.
    pub fn is_admissible(&self, tol: Tolerance) -> bool {
        let scale = self.max_abs_coeff();
        scale > 0.0 && self.leading().abs() > tol.value() * scale
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn scaled(&self, c: f64) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// `p(-λ)`.
    pub fn reflected(&self) -> Polynomial {
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, &a)| if j % 2 == 1 { -a } else { a })
                .collect(),
        }
    }

    /// `λ^n p(1/λ)`: coefficients in reverse order.
    pub fn reversed(&self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().rev().copied().collect(),
        }
    }

    /// `p(c λ)`.
    pub fn rescaled_argument(&self, c: f64) -> Polynomial {
        let mut pow = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| {
                let v = a * pow;
                pow *= c;
                v
            })
            .collect();
        Polynomial { coeffs }
    }

    /// Drops exactly-zero leading coefficients, keeping at least the constant term.
    fn trim_exact_zeros(mut self) -> Polynomial {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndeterminateReason {
    ZeroPivot,
    BoundaryRoot,
    ZeroLeadingCoefficient,
}

impl fmt::Display for IndeterminateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndeterminateReason::ZeroPivot => "zero pivot",
            IndeterminateReason::BoundaryRoot => "root on region boundary",
            IndeterminateReason::ZeroLeadingCoefficient => "zero leading coefficient",
        })
    }
}

/// Number of roots (or eigenvalues) inside a region, or the reason no count
/// could be certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootCount {
    Count(usize),
    Indeterminate(IndeterminateReason),
}

impl RootCount {
    pub fn count(self) -> Option<usize> {
        match self {
            RootCount::Count(k) => Some(k),
            RootCount::Indeterminate(_) => None,
        }
    }

    pub fn is_determinate(self) -> bool {
        matches!(self, RootCount::Count(_))
    }
}

/// Region of the complex plane for eigenvalue counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    LeftHalfPlane,
    Disk { radius: f64 },
}

/// Number of roots with negative real part, from the Routh array.
///
/// A row that vanishes entirely (roots placed symmetrically about the
/// origin) is replaced by the derivative of its auxiliary polynomial, and
/// any imaginary-axis roots hidden in that factor make the result
/// `BoundaryRoot`. A single such row is handled; a second one, or a zero
/// first-column entry in an otherwise nonzero row, gives `ZeroPivot`.
pub fn routh_hurwitz_count(p: &Polynomial, tol: Tolerance) -> RootCount {
    let n = p.degree();
    let scale = p.max_abs_coeff();
    let eps = tol.value() * scale;
    if scale == 0.0 || p.leading().abs() <= eps {
        return RootCount::Indeterminate(IndeterminateReason::ZeroLeadingCoefficient);
    }
    if n == 0 {
        return RootCount::Count(0);
    }

    let width = n / 2 + 2;
    let desc: Vec<f64> = p.coeffs.iter().rev().copied().collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for start in 0..2 {
        let mut row = vec![0.0; width];
        for (slot, idx) in (start..=n).step_by(2).enumerate() {
            row[slot] = desc[idx];
        }
        rows.push(row);
    }

    // (row index of the auxiliary polynomial, its degree)
    let mut auxiliary: Option<(usize, usize)> = None;

    let mut i = 1;
    loop {
        if rows[i].iter().all(|v| v.abs() <= eps) {
            if auxiliary.is_some() {
                return RootCount::Indeterminate(IndeterminateReason::ZeroPivot);
            }
            let prev = i - 1;
            let aux_degree = n - prev;
            let mut replaced = vec![0.0; width];
            for (j, slot) in replaced.iter_mut().enumerate() {
                let power = aux_degree as isize - 2 * j as isize;
                if power <= 0 {
                    break;
                }
                *slot = rows[prev][j] * power as f64;
            }
            rows[i] = replaced;
            auxiliary = Some((prev, aux_degree));
        }
        if rows[i][0].abs() <= eps {
            return RootCount::Indeterminate(IndeterminateReason::ZeroPivot);
        }
        if i == n {
            break;
        }
        let (upper, lower) = (&rows[i - 1], &rows[i]);
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (lower[0] * upper[j + 1] - upper[0] * lower[j + 1]) / lower[0];
        }
        rows.push(next);
        i += 1;
    }

    let sign_changes = |from: usize| {
        rows[from..]
            .windows(2)
            .filter(|w| (w[0][0] < 0.0) != (w[1][0] < 0.0))
            .count()
    };
    let right = sign_changes(0);
    if let Some((row, aux_degree)) = auxiliary {
        // Roots of the auxiliary factor come in ± pairs; whatever is not
        // accounted for by right/left pairs lies on the imaginary axis.
        let aux_right = sign_changes(row);
        if aux_degree > 2 * aux_right {
            return RootCount::Indeterminate(IndeterminateReason::BoundaryRoot);
        }
    }
    RootCount::Count(n - right)
}

fn binomial_row(n: usize) -> Vec<u128> {
    let mut row = vec![1u128; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as u128 / k as u128;
    }
    row
}

/// `Σ_j coeffs[j] (z+1)^j (z-1)^(n-j)`, with exactly-zero leading terms removed.
///
/// Roots of `p` inside the unit disk correspond one-to-one to roots of the
/// result in the open left half-plane via `z = (λ+1)/(λ-1)`.
pub fn mobius_star(p: &Polynomial) -> Polynomial {
    let n = p.degree();
    let binomials: Vec<Vec<u128>> = (0..=n).map(binomial_row).collect();
    let mut out = vec![0.0; n + 1];
    for (j, &q) in p.coeffs.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let m = n - j;
        // (z+1)^j = Σ_a C(j,a) z^a ; (z-1)^m = Σ_b C(m,b) z^b (-1)^(m-b)
        for a in 0..=j {
            for b in 0..=m {
                let sign = if (m - b).is_multiple_of(2) { 1.0 } else { -1.0 };
                let weight = (binomials[j][a] * binomials[m][b]) as f64;
                out[a + b] += sign * weight * q;
            }
        }
    }
    Polynomial { coeffs: out }.trim_exact_zeros()
}

/// Number of roots strictly inside the unit circle.
pub fn jury_count(p: &Polynomial, tol: Tolerance) -> RootCount {
    if !p.is_admissible(tol) {
        return RootCount::Indeterminate(IndeterminateReason::ZeroLeadingCoefficient);
    }
    let star = mobius_star(p);
    // A root at λ = 1 is sent to infinity and lowers the degree.
    if star.degree() < p.degree() || !star.is_admissible(tol) {
        return RootCount::Indeterminate(IndeterminateReason::BoundaryRoot);
    }
    routh_hurwitz_count(&star, tol)
}

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::NotSquare {
                rows: n,
                cols: data.len().checked_div(n).unwrap_or(data.len()),
            });
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Ok(SquareMatrix {
            n,
            data: rows.concat(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SquareMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        eigen::eigenvalues(&self.data, self.n)
    }
}

/// Companion matrix with ones on the superdiagonal and the negated monic
/// coefficients `-c_0 … -c_{n-1}` on the last row.
pub fn companion_matrix(p: &Polynomial, tol: Tolerance) -> Result<SquareMatrix> {
    let n = p.degree();
    if n == 0 {
        return Err(Error::DegreeTooLow);
    }
    if !p.is_admissible(tol) {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let lead = p.leading();
    let mut data = vec![0.0; n * n];
    for i in 0..n - 1 {
        data[i * n + i + 1] = 1.0;
    }
    for j in 0..n {
        data[(n - 1) * n + j] = -p.coeffs[j] / lead;
    }
    Ok(SquareMatrix { n, data })
}

/// Counts eigenvalues strictly inside `region`.
///
/// The boundary band has half-width `tol` times a scale: the Frobenius norm
/// for the half-plane, and the larger of the radius and the norm for a disk.
pub fn eigen_region_count(m: &SquareMatrix, region: Region, tol: Tolerance) -> Result<RootCount> {
    if let Region::Disk { radius } = region {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
    }
    let eigenvalues = m.eigenvalues()?;
    Ok(count_in_region(
        &eigenvalues,
        m.frobenius_norm(),
        region,
        tol,
    ))
}

pub(crate) fn count_in_region(
    eigenvalues: &[Complex64],
    norm: f64,
    region: Region,
    tol: Tolerance,
) -> RootCount {
    let mut inside = 0;
    match region {
        Region::LeftHalfPlane => {
            let band = tol.value() * if norm > 0.0 { norm } else { 1.0 };
            for ev in eigenvalues {
                if ev.re.abs() <= band {
                    return RootCount::Indeterminate(IndeterminateReason::BoundaryRoot);
                }
                if ev.re < 0.0 {
                    inside += 1;
                }
            }
        }
        Region::Disk { radius } => {
            let band = tol.value() * radius.max(norm);
            for ev in eigenvalues {
                let modulus = ev.norm();
                if (modulus - radius).abs() <= band {
                    return RootCount::Indeterminate(IndeterminateReason::BoundaryRoot);
                }
                if modulus < radius {
                    inside += 1;
                }
            }
        }
    }
    RootCount::Count(inside)
}
