//! Affine parametrisation `p = design · q + offset` of the index law.
//!
//! The relations are generated, not tabulated: total mass one, the mirror
//! symmetry `p_k = p_{n-k}` and the parity split of the mass. Gauss–Jordan
//! elimination over the columns `n, n-1, …, 0` puts the pivots on the highest
//! indices, so the free variables are the lowest undetermined probabilities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{FamilyKind, ModelFamily};

/// Entries below this magnitude are exact zeros of the elimination.
const ELIM_EPS: f64 = 1e-12;

/// One linear relation `coeffs · p = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Relation {
    fn unit(len: usize, i: usize, rhs: f64) -> Self {
        let mut coeffs = vec![0.0; len];
        coeffs[i] = 1.0;
        Relation { coeffs, rhs }
    }
}

/// Mass of the even indices.
pub fn even_index_mass(family: ModelFamily) -> Option<f64> {
    let n = family.n();
    match family.kind() {
        FamilyKind::DiscreteSystem => None,
        FamilyKind::DiscreteEquation if n.is_multiple_of(2) => {
            let m = (n / 2) as f64;
            Some(2.0 / PI * ((m + 1.0) / m).sqrt().atan())
        }
        _ => Some(0.5),
    }
}

/// The linear relations satisfied by `p_0 … p_n` for `family`.
pub fn family_relations(family: ModelFamily) -> Vec<Relation> {
    let n = family.n();
    let len = n + 1;
    let mut out = vec![Relation {
        coeffs: vec![1.0; len],
        rhs: 1.0,
    }];
    if family.kind().is_symmetric() {
        for k in 0..len {
            if k < n - k {
                let mut coeffs = vec![0.0; len];
                coeffs[k] = 1.0;
                coeffs[n - k] = -1.0;
                out.push(Relation { coeffs, rhs: 0.0 });
            }
        }
    }
    if let Some(even) = even_index_mass(family) {
        let coeffs = (0..len)
            .map(|k| if k % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        out.push(Relation { coeffs, rhs: even });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConstraintRecord", into = "ConstraintRecord")]
pub struct ConstraintSystem {
    family: ModelFamily,
    free: Vec<usize>,
    design: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl ConstraintSystem {
    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    /// Indices of `p` that make up `q`, ascending.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// `(n+1) x k` design matrix, one row per probability.
    pub fn design(&self) -> &[Vec<f64>] {
        &self.design
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// Whether least-squares refinement applies to this family.
    pub fn is_refinable(&self) -> bool {
        self.family.kind() != FamilyKind::DiscreteSystem
    }

    /// `design · q + offset`.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.free.len(), "q has the wrong length");
        self.design
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(q).map(|(d, x)| d * x).sum::<f64>() + b)
            .collect()
    }

    /// Largest violation of `p_i = design_i · p_free + offset_i`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.n() + 1, "p has the wrong length");
        let q: Vec<f64> = self.free.iter().map(|&f| p[f]).collect();
        self.apply(&q)
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation over the rows whose inputs are all known.
    pub fn partial_residual(&self, p: &[Option<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.design.iter().enumerate() {
            let Some(pi) = p[i] else { continue };
            let mut value = self.offset[i];
            let mut known = true;
            for (c, &f) in self.free.iter().enumerate() {
                if row[c] != 0.0 {
                    match p[f] {
                        Some(pf) => value += row[c] * pf,
                        None => known = false,
                    }
                }
            }
            if known {
                worst = worst.max((value - pi).abs());
            }
        }
        worst
    }

    /// How far `1ᵀ(design · q + offset) = 1` is from holding for every `q`.
    pub fn closure_residual(&self) -> f64 {
        let k = self.free.len();
        let column_sums = (0..k).map(|c| self.design.iter().map(|r| r[c]).sum::<f64>().abs());
        let mass = (self.offset.iter().sum::<f64>() - 1.0).abs();
        column_sums.fold(mass, f64::max)
    }

    /// Entries fixed by the relations alone (zero design row).
    pub fn determined(&self) -> Vec<Option<f64>> {
        self.design
            .iter()
            .zip(&self.offset)
            .map(|(row, &b)| row.iter().all(|&d| d == 0.0).then_some(b))
            .collect()
    }

    /// Indices tied to `j` by the relations: same design row and offset.
    pub fn mirrors(&self, j: usize) -> Vec<usize> {
        let same = |i: usize| {
            (self.offset[i] - self.offset[j]).abs() <= ELIM_EPS
                && self.design[i]
                    .iter()
                    .zip(&self.design[j])
                    .all(|(a, b)| (a - b).abs() <= ELIM_EPS)
        };
        (0..=self.n()).filter(|&i| same(i)).collect()
    }

    /// Relations encoded by this system, one per non-free index.
    pub fn relations(&self) -> Vec<Relation> {
        let len = self.n() + 1;
        let mut out = Vec::new();
        for i in 0..len {
            if self.free.contains(&i) {
                continue;
            }
            let mut coeffs = vec![0.0; len];
            coeffs[i] = 1.0;
            for (c, &f) in self.free.iter().enumerate() {
                coeffs[f] -= self.design[i][c];
            }
            out.push(Relation {
                coeffs,
                rhs: self.offset[i],
            });
        }
        out
    }

    /// The system with `p_j = 0` added for every `j` in `pins`.
    pub fn pinned(&self, pins: &[usize]) -> Result<ConstraintSystem> {
        let len = self.n() + 1;
        let mut pins = pins.to_vec();
        pins.sort_unstable();
        pins.dedup();
        if let Some(&bad) = pins.iter().find(|&&j| j >= len) {
            return Err(Error::DimensionMismatch {
                left: bad,
                right: self.n(),
            });
        }
        let mut relations = self.relations();
        relations.extend(pins.iter().map(|&j| Relation::unit(len, j, 0.0)));
        let (free, design, offset) =
            eliminate(len, relations).map_err(|_| Error::InconsistentPinning(pins.clone()))?;
        Ok(ConstraintSystem {
            family: self.family,
            free,
            design,
            offset,
        })
    }

    /// Readable form of row `i`, e.g. `1/2 - p0 - p1`.
    pub fn relation_label(&self, i: usize) -> String {
        if self.free.contains(&i) {
            return format!("p{i}");
        }
        let mut out = String::new();
        if self.offset[i] != 0.0 {
            out.push_str(&format_constant(self.offset[i]));
        }
        for (c, &f) in self.free.iter().enumerate() {
            let d = self.design[i][c];
            if d == 0.0 {
                continue;
            }
            let sign = if d < 0.0 { "-" } else { "+" };
            if out.is_empty() {
                if d < 0.0 {
                    out.push('-');
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            let mag = d.abs();
            if (mag - 1.0).abs() > ELIM_EPS {
                out.push_str(&format_constant(mag));
            }
            out.push_str(&format!("p{f}"));
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Small rationals print as `a/b`, anything else with five decimals.
fn format_constant(x: f64) -> String {
    for den in 1..=64u32 {
        let num = x * den as f64;
        if (num - num.round()).abs() < 1e-9 {
            let num = num.round() as i64;
            return if den == 1 {
                num.to_string()
            } else {
                format!("{num}/{den}")
            };
        }
    }
    format!("{x:.5}")
}

#[derive(Debug)]
struct Inconsistent;

type Parametrisation = (Vec<usize>, Vec<Vec<f64>>, Vec<f64>);

/// Reduced row echelon form over columns `len-1 … 0`, then read off the
/// pivots as functions of the remaining (free) columns.
fn eliminate(
    len: usize,
    relations: Vec<Relation>,
) -> std::result::Result<Parametrisation, Inconsistent> {
    let mut rows: Vec<(Vec<f64>, f64)> = relations.into_iter().map(|r| (r.coeffs, r.rhs)).collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; len];
    let mut next = 0;
    for col in (0..len).rev() {
        let Some(best) = (next..rows.len())
            .filter(|&i| rows[i].0[col].abs() > ELIM_EPS)
            .max_by(|&a, &b| rows[a].0[col].abs().total_cmp(&rows[b].0[col].abs()))
        else {
            continue;
        };
        rows.swap(next, best);
        let scale = rows[next].0[col];
        for v in rows[next].0.iter_mut() {
            *v /= scale;
        }
        rows[next].1 /= scale;
        let (pivot_coeffs, pivot_rhs) = rows[next].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == next || row.0[col] == 0.0 {
                continue;
            }
            let factor = row.0[col];
            for (v, p) in row.0.iter_mut().zip(&pivot_coeffs) {
                *v -= factor * p;
                if v.abs() <= ELIM_EPS {
                    *v = 0.0;
                }
            }
            row.1 -= factor * pivot_rhs;
            if row.1.abs() <= ELIM_EPS {
                row.1 = 0.0;
            }
        }
        pivot_of_col[col] = Some(next);
        next += 1;
    }
    if rows[next..].iter().any(|(_, rhs)| rhs.abs() > ELIM_EPS) {
        return Err(Inconsistent);
    }
    let free: Vec<usize> = (0..len).filter(|&c| pivot_of_col[c].is_none()).collect();
    let mut design = vec![vec![0.0; free.len()]; len];
    let mut offset = vec![0.0; len];
    for i in 0..len {
        match pivot_of_col[i] {
            None => {
                let c = free.iter().position(|&f| f == i).expect("free column");
                design[i][c] = 1.0;
            }
            Some(r) => {
                for (c, &f) in free.iter().enumerate() {
                    let v = -rows[r].0[f];
                    design[i][c] = if v == 0.0 { 0.0 } else { v };
                }
                offset[i] = rows[r].1;
            }
        }
    }
    Ok((free, design, offset))
}

/// The constraint system of `family`.
///
/// The discrete system only knows `Σp = 1`: its free variables are
/// `p_0 … p_{n-1}` and it is not refinable.
pub fn build_constraints(family: ModelFamily) -> ConstraintSystem {
    let len = family.n() + 1;
    let (free, design, offset) =
        eliminate(len, family_relations(family)).expect("family relations are consistent");
    ConstraintSystem {
        family,
        free,
        design,
        offset,
    }
}

/// Wire form: `{family, n, free, design, offset}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConstraintRecord {
    family: FamilyKind,
    n: usize,
    free: Vec<usize>,
    design: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl From<ConstraintSystem> for ConstraintRecord {
    fn from(cs: ConstraintSystem) -> Self {
        ConstraintRecord {
            family: cs.family.kind(),
            n: cs.family.n(),
            free: cs.free,
            design: cs.design,
            offset: cs.offset,
        }
    }
}

impl TryFrom<ConstraintRecord> for ConstraintSystem {
    type Error = Error;

    fn try_from(r: ConstraintRecord) -> Result<Self> {
        let family = ModelFamily::new(r.family, r.n)?;
        let len = r.n + 1;
        if r.offset.len() != len {
            return Err(Error::DimensionMismatch {
                left: len,
                right: r.offset.len(),
            });
        }
        if r.design.len() != len {
            return Err(Error::DimensionMismatch {
                left: len,
                right: r.design.len(),
            });
        }
        if let Some(row) = r.design.iter().find(|row| row.len() != r.free.len()) {
            return Err(Error::DimensionMismatch {
                left: r.free.len(),
                right: row.len(),
            });
        }
        if r.free.iter().any(|&f| f >= len) {
            return Err(Error::InvalidConfig("free index out of range".into()));
        }
        Ok(ConstraintSystem {
            family,
            free: r.free,
            design: r.design,
            offset: r.offset,
        })
    }
}

/// Known exact probabilities; `None` where no closed form is available.
///
/// Closed forms are listed for the small orders where they exist; every
/// entry the relations pin down on their own is filled in as well.
pub fn exact_probabilities(family: ModelFamily) -> Vec<Option<f64>> {
    let n = family.n();
    let closed: Option<Vec<f64>> = match (family.kind(), n) {
        (_, 1) => Some(vec![0.5, 0.5]),
        (FamilyKind::ContinuousSystem | FamilyKind::ContinuousEquation, 2) => {
            Some(vec![0.25, 0.5, 0.25])
        }
        (FamilyKind::ContinuousEquation, 3) => {
            Some(vec![1.0 / 16.0, 7.0 / 16.0, 7.0 / 16.0, 1.0 / 16.0])
        }
        (FamilyKind::DiscreteEquation, 2) => {
            let edge = 2f64.sqrt().atan() / PI;
            Some(vec![edge, 2.0 * (0.5f64).sqrt().atan() / PI, edge])
        }
        _ => None,
    };
    if let Some(values) = closed {
        return values.into_iter().map(Some).collect();
    }
    if family.kind() == FamilyKind::DiscreteSystem {
        return vec![None; n + 1];
    }
    build_constraints(family).determined()
}

/// `P(σ²U² - ρ²V² > 0)`-type sign probability, `(2/π) atan(σ/ρ)`.
pub fn half_plane_sign_prob(sigma: f64, rho: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveArgument("sigma", sigma));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveArgument("rho", rho));
    }
    Ok(2.0 / PI * (sigma / rho).atan())
}

/// Upper bound `2^-n` on the probability that an order-`n` ODE is asymptotically stable.
pub fn hurwitz_upper_bound(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidOrder(n));
    }
    Ok(0.5f64.powi(n as i32))
}
