//! The four random model families and the stability index of one draw.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyroot::{
    companion_matrix, count_in_region, jury_count, routh_hurwitz_count, IndeterminateReason,
    Polynomial, Region, RootCount, SquareMatrix, Tolerance,
};

/// Which kind of linear system is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `x' = A x` with an `n x n` Gaussian matrix.
    #[serde(rename = "cont-sys")]
    ContinuousSystem,
    /// `A_n x^(n) + … + A_0 x = 0`.
    #[serde(rename = "cont-eq")]
    ContinuousEquation,
    /// `B x_{k+1} = A x_k` with a Gaussian scalar `B`.
    #[serde(rename = "disc-sys")]
    DiscreteSystem,
    /// `A_n x_{k+n} + … + A_0 x_k = 0`.
    #[serde(rename = "disc-eq")]
    DiscreteEquation,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::ContinuousSystem,
        FamilyKind::ContinuousEquation,
        FamilyKind::DiscreteSystem,
        FamilyKind::DiscreteEquation,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FamilyKind::ContinuousSystem => "cont-sys",
            FamilyKind::ContinuousEquation => "cont-eq",
            FamilyKind::DiscreteSystem => "disc-sys",
            FamilyKind::DiscreteEquation => "disc-eq",
        }
    }

    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            FamilyKind::ContinuousSystem | FamilyKind::ContinuousEquation
        )
    }

    /// `p_k = p_{n-k}` holds for every family except the discrete system.
    pub fn is_symmetric(self) -> bool {
        self != FamilyKind::DiscreteSystem
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// A model family together with its order `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelFamily {
    kind: FamilyKind,
    n: usize,
}

impl ModelFamily {
    pub fn new(kind: FamilyKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidOrder(n));
        }
        Ok(ModelFamily { kind, n })
    }

    pub fn continuous_system(n: usize) -> Result<Self> {
        Self::new(FamilyKind::ContinuousSystem, n)
    }

    pub fn continuous_equation(n: usize) -> Result<Self> {
        Self::new(FamilyKind::ContinuousEquation, n)
    }

    pub fn discrete_system(n: usize) -> Result<Self> {
        Self::new(FamilyKind::DiscreteSystem, n)
    }

    pub fn discrete_equation(n: usize) -> Result<Self> {
        Self::new(FamilyKind::DiscreteEquation, n)
    }

    pub fn kind(self) -> FamilyKind {
        self.kind
    }

    pub fn n(self) -> usize {
        self.n
    }

    /// Number of standard normal variates drawn per sample.
    pub fn parameter_count(self) -> usize {
        let n = self.n;
        match self.kind {
            FamilyKind::ContinuousSystem => n * n,
            FamilyKind::ContinuousEquation | FamilyKind::DiscreteEquation => n + 1,
            FamilyKind::DiscreteSystem => n * n + 1,
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={})", self.kind, self.n)
    }
}

/// How the index of a matrix family is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexMethod {
    /// Characteristic polynomial, then Routh–Hurwitz (or Jury).
    #[serde(rename = "rh")]
    CharPolyRouthHurwitz,
    /// Numerical eigenvalues.
    #[serde(rename = "eigen")]
    DirectEigen,
    /// Polynomial route up to n = 4, eigenvalues from n = 5 on.
    #[default]
    Auto,
}

impl IndexMethod {
    pub const AUTO_EIGEN_FROM: usize = 5;

    /// Concrete method for a matrix of order `n`.
    pub fn resolve(self, n: usize) -> IndexMethod {
        match self {
            IndexMethod::Auto if n >= Self::AUTO_EIGEN_FROM => IndexMethod::DirectEigen,
            IndexMethod::Auto => IndexMethod::CharPolyRouthHurwitz,
            other => other,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            IndexMethod::CharPolyRouthHurwitz => "rh",
            IndexMethod::DirectEigen => "eigen",
            IndexMethod::Auto => "auto",
        }
    }
}

impl FromStr for IndexMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rh" => Ok(IndexMethod::CharPolyRouthHurwitz),
            "eigen" => Ok(IndexMethod::DirectEigen),
            "auto" => Ok(IndexMethod::Auto),
            _ => Err(Error::InvalidConfig(format!("unknown method '{s}'"))),
        }
    }
}

/// Stability index of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOutcome {
    pub index: RootCount,
}

/// `det(λI - m)` as a monic polynomial, by the Faddeev–LeVerrier recurrence.
pub fn char_poly(m: &SquareMatrix) -> Polynomial {
    let n = m.dim();
    let a = m.as_slice();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    // M_k = A M_{k-1} + c_{n-k+1} I,  c_{n-k} = -tr(A M_k) / k
    let mut mk = vec![0.0; n * n];
    let mut am = vec![0.0; n * n];
    for k in 1..=n {
        for i in 0..n {
            mk[i * n + i] += coeffs[n - k + 1];
        }
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += a[i * n + l] * mk[l * n + j];
                }
                am[i * n + j] = s;
            }
        }
        let trace: f64 = (0..n).map(|i| am[i * n + i]).sum();
        coeffs[n - k] = -trace / k as f64;
        std::mem::swap(&mut mk, &mut am);
    }
    Polynomial::new(coeffs).expect("n + 1 >= 1 coefficients")
}

/// Index of a sample whose parameters have already been drawn.
///
/// Layout of `params`: matrix families store `A` row-major; the discrete
/// system stores `B` first and then `A`; equation families store
/// `A_n, A_{n-1}, …, A_0` (highest power first).
pub fn index_from_parameters(
    family: ModelFamily,
    method: IndexMethod,
    params: &[f64],
    tol: Tolerance,
) -> Result<SampleOutcome> {
    assert_eq!(
        params.len(),
        family.parameter_count(),
        "parameter count mismatch"
    );
    let n = family.n();
    let index = match family.kind() {
        FamilyKind::ContinuousSystem => {
            let a = SquareMatrix::from_row_major(n, params.to_vec())?;
            match method.resolve(n) {
                IndexMethod::DirectEigen => count_in_region(
                    &a.eigenvalues()?,
                    a.frobenius_norm(),
                    Region::LeftHalfPlane,
                    tol,
                ),
                _ => routh_hurwitz_count(&char_poly(&a), tol),
            }
        }
        FamilyKind::DiscreteSystem => {
            let radius = params[0].abs();
            let a = SquareMatrix::from_row_major(n, params[1..].to_vec())?;
            if radius == 0.0 {
                RootCount::Indeterminate(IndeterminateReason::ZeroLeadingCoefficient)
            } else {
                match method.resolve(n) {
                    IndexMethod::DirectEigen => count_in_region(
                        &a.eigenvalues()?,
                        a.frobenius_norm(),
                        Region::Disk { radius },
                        tol,
                    ),
                    // Roots of det(λI - A) inside |λ| < |B| are the roots of
                    // det(|B|μI - A) inside the unit disk.
                    _ => disk_count(&char_poly(&a).rescaled_argument(radius), tol),
                }
            }
        }
        FamilyKind::ContinuousEquation | FamilyKind::DiscreteEquation => {
            let q = Polynomial::from_descending(params)?;
            let continuous = family.kind() == FamilyKind::ContinuousEquation;
            match method {
                IndexMethod::DirectEigen => equation_index_by_eigen(&q, continuous, tol)?,
                _ if continuous => routh_hurwitz_count(&q, tol),
                _ => jury_count(&q, tol),
            }
        }
    };
    Ok(SampleOutcome { index })
}

/// Roots inside the unit disk. When the leading coefficient is negligible
/// (roots near infinity, as for a tiny `|B|`) the reversed polynomial is
/// counted instead: roots outside the disk map to roots inside.
fn disk_count(q: &Polynomial, tol: Tolerance) -> RootCount {
    if q.is_admissible(tol) {
        return jury_count(q, tol);
    }
    let reversed = q.reversed();
    if !reversed.is_admissible(tol) {
        return RootCount::Indeterminate(IndeterminateReason::ZeroLeadingCoefficient);
    }
    match jury_count(&reversed, tol) {
        RootCount::Count(k) => RootCount::Count(q.degree() - k),
        other => other,
    }
}

fn equation_index_by_eigen(q: &Polynomial, continuous: bool, tol: Tolerance) -> Result<RootCount> {
    if !q.is_admissible(tol) {
        return Ok(RootCount::Indeterminate(
            IndeterminateReason::ZeroLeadingCoefficient,
        ));
    }
    let c = companion_matrix(q, tol)?;
    let region = if continuous {
        Region::LeftHalfPlane
    } else {
        Region::Disk { radius: 1.0 }
    };
    Ok(count_in_region(
        &c.eigenvalues()?,
        c.frobenius_norm(),
        region,
        tol,
    ))
}

/// Draws one sample of `family` from `rng` and returns its stability index.
///
/// Exactly `family.parameter_count()` standard normal variates are consumed,
/// whatever the outcome.
pub fn sample_index<R: Rng + ?Sized>(
    family: ModelFamily,
    method: IndexMethod,
    rng: &mut R,
    tol: Tolerance,
) -> Result<SampleOutcome> {
    let params: Vec<f64> = (0..family.parameter_count())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    index_from_parameters(family, method, &params, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance {
        Tolerance::DEFAULT
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(
            ModelFamily::continuous_system(3).unwrap().parameter_count(),
            9
        );
        assert_eq!(
            ModelFamily::continuous_equation(3)
                .unwrap()
                .parameter_count(),
            4
        );
        assert_eq!(
            ModelFamily::discrete_system(3).unwrap().parameter_count(),
            10
        );
        assert_eq!(
            ModelFamily::discrete_equation(3).unwrap().parameter_count(),
            4
        );
        assert!(ModelFamily::discrete_equation(0).is_err());
    }

    #[test]
    fn auto_resolution() {
        assert_eq!(
            IndexMethod::Auto.resolve(4),
            IndexMethod::CharPolyRouthHurwitz
        );
        assert_eq!(IndexMethod::Auto.resolve(5), IndexMethod::DirectEigen);
        assert_eq!(
            IndexMethod::DirectEigen.resolve(1),
            IndexMethod::DirectEigen
        );
    }

    #[test]
    fn family_tags_round_trip() {
        for kind in FamilyKind::ALL {
            assert_eq!(kind.tag().parse::<FamilyKind>().unwrap(), kind);
        }
        assert!("cont".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn char_poly_examples() {
        let m = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(char_poly(&m).coeffs(), &[-1.0, 0.0, 1.0]);
        let p = char_poly(&SquareMatrix::identity(3));
        assert_eq!(p.coeffs(), &[-1.0, 3.0, -3.0, 1.0]);
    }

    #[test]
    fn forced_parameter_examples() {
        let ce = ModelFamily::continuous_equation(1).unwrap();
        let out = index_from_parameters(ce, IndexMethod::Auto, &[1.0, 1.0], tol()).unwrap();
        assert_eq!(out.index, RootCount::Count(1));

        let ds = ModelFamily::discrete_system(1).unwrap();
        for method in [IndexMethod::CharPolyRouthHurwitz, IndexMethod::DirectEigen] {
            let out = index_from_parameters(ds, method, &[2.0, 1.0], tol()).unwrap();
            assert_eq!(out.index, RootCount::Count(1));
        }

        let de = ModelFamily::discrete_equation(2).unwrap();
        for method in [IndexMethod::Auto, IndexMethod::DirectEigen] {
            let out = index_from_parameters(de, method, &[1.0, 0.0, -0.25], tol()).unwrap();
            assert_eq!(out.index, RootCount::Count(2));
        }
    }

    #[test]
    fn discrete_system_uses_modulus_of_b() {
        let ds = ModelFamily::discrete_system(2).unwrap();
        // A = diag(0.5, 3), B = -1 -> one eigenvalue inside |λ| < 1
        let params = [-1.0, 0.5, 0.0, 0.0, 3.0];
        for method in [IndexMethod::CharPolyRouthHurwitz, IndexMethod::DirectEigen] {
            assert_eq!(
                index_from_parameters(ds, method, &params, tol())
                    .unwrap()
                    .index,
                RootCount::Count(1)
            );
        }
        let zero_b = [0.0, 0.5, 0.0, 0.0, 3.0];
        assert!(
            !index_from_parameters(ds, IndexMethod::Auto, &zero_b, tol())
                .unwrap()
                .index
                .is_determinate()
        );
    }

    #[test]
    fn tiny_b_still_has_an_index() {
        let ds = ModelFamily::discrete_system(4).unwrap();
        let mut params = vec![1e-5];
        params.extend([
            0.3, -1.2, 0.8, 0.1, 1.1, 0.4, -0.7, 0.2, -0.5, 0.9, 1.3, -0.6, 0.7, 0.2, -1.0, 0.5,
        ]);
        for method in [IndexMethod::CharPolyRouthHurwitz, IndexMethod::DirectEigen] {
            assert_eq!(
                index_from_parameters(ds, method, &params, tol())
                    .unwrap()
                    .index,
                RootCount::Count(0)
            );
        }
    }

    #[test]
    fn consumes_fixed_number_of_variates() {
        for kind in FamilyKind::ALL {
            let family = ModelFamily::new(kind, 3).unwrap();
            let mut a = ChaCha8Rng::seed_from_u64(9);
            let mut b = ChaCha8Rng::seed_from_u64(9);
            sample_index(family, IndexMethod::Auto, &mut a, tol()).unwrap();
            for _ in 0..family.parameter_count() {
                let _: f64 = b.sample(StandardNormal);
            }
            assert_eq!(a.random::<u64>(), b.random::<u64>(), "{kind}");
        }
    }

    #[test]
    fn methods_agree_on_matrix_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            for kind in [FamilyKind::ContinuousSystem, FamilyKind::DiscreteSystem] {
                let family = ModelFamily::new(kind, n).unwrap();
                for _ in 0..500 {
                    let params: Vec<f64> = (0..family.parameter_count())
                        .map(|_| rng.sample(StandardNormal))
                        .collect();
                    let rh = index_from_parameters(
                        family,
                        IndexMethod::CharPolyRouthHurwitz,
                        &params,
                        tol(),
                    )
                    .unwrap()
                    .index;
                    let ev =
                        index_from_parameters(family, IndexMethod::DirectEigen, &params, tol())
                            .unwrap()
                            .index;
                    if rh.is_determinate() && ev.is_determinate() {
                        assert_eq!(rh, ev, "{family} {params:?}");
                    }
                }
            }
        }
    }
}
