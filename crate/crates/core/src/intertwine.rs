//! Partner construction and eigenfamily transport.
//!
//! Given `theta1` and an operator `x` with `[x x†, theta1] = 0`, the
//! partner is `theta2 = x⁻¹ theta1 x` when `x` is invertible and
//! `N2⁻¹ (x† theta1 x)` otherwise, with `N1 = x x†` and `N2 = x† x`.
//! Eigenvectors of `theta1` are carried to eigenvectors of `theta2` by
//! `x†`. When `N2` is numerically singular the Moore–Penrose inverse is
//! substituted, the pair is flagged, and spectral statements are restricted
//! to the span of the transported family.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    column_matrix, commutator_defect, eig_general, inner, inverse, numerical_rank, outer,
    pseudo_inverse, re, relative, singular_values, svd, HermitianEigenSystem, GeneralEigenSystem,
    Matrix, Tolerances, Vector, C64, ZERO,
};

/// Indexed family of eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenFamily {
    indices: Vec<usize>,
    vectors: Vec<Vector>,
    eigenvalues: Vec<C64>,
    nu: Option<Vec<f64>>,
    nu_multiplicity: Option<Vec<usize>>,
}

impl EigenFamily {
    pub fn new(indices: Vec<usize>, vectors: Vec<Vector>, eigenvalues: Vec<C64>) -> Result<Self> {
        if indices.len() != vectors.len() || indices.len() != eigenvalues.len() {
            return Err(Error::InvalidMatrix(format!(
                "family lengths disagree: {} indices, {} vectors, {} eigenvalues",
                indices.len(),
                vectors.len(),
                eigenvalues.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMatrix("family indices must be strictly increasing".into()));
        }
        if let Some(v) = vectors.first() {
            let d = v.len();
            if vectors.iter().any(|u| u.len() != d) {
                return Err(Error::DimensionMismatch { left: d, right: 0 });
            }
        }
        if let Some(pos) = vectors.iter().position(|v| v.norm() == 0.0) {
            return Err(Error::ZeroVector { index: indices[pos] });
        }
        Ok(Self { indices, vectors, eigenvalues, nu: None, nu_multiplicity: None })
    }

    /// Vectors indexed `0..n` in order.
    pub fn sequential(vectors: Vec<Vector>, eigenvalues: Vec<C64>) -> Result<Self> {
        Self::new((0..vectors.len()).collect(), vectors, eigenvalues)
    }

    /// The canonical basis `e_n` carrying the given eigenvalues.
    pub fn canonical(eigenvalues: &[C64]) -> Self {
        let d = eigenvalues.len();
        let vectors = (0..d).map(|n| crate::linalg::basis_vector(d, n)).collect();
        Self::sequential(vectors, eigenvalues.to_vec()).expect("canonical family is valid")
    }

    pub fn from_hermitian(sys: &HermitianEigenSystem) -> Self {
        let eig = sys.eigenvalues.iter().copied().map(re).collect();
        Self::sequential(sys.eigenvectors.clone(), eig).expect("eigenvectors are nonzero")
    }

    pub fn from_general(sys: &GeneralEigenSystem) -> Self {
        Self::sequential(sys.eigenvectors.clone(), sys.eigenvalues.clone())
            .expect("eigenvectors are nonzero")
    }

    /// Attaches `nu` values and their multiplicities (values within
    /// `rank_tol * max nu` of each other are counted together).
    pub fn with_nu(mut self, nu: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if nu.len() != self.len() {
            return Err(Error::DimensionMismatch { left: nu.len(), right: self.len() });
        }
        if let Some(bad) = nu.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::InvalidMatrix(format!("nu must be non-negative, got {bad}")));
        }
        let thresh = tol.rank_tol * nu.iter().copied().fold(0.0, f64::max);
        let mult = nu
            .iter()
            .map(|a| nu.iter().filter(|b| (a - *b).abs() <= thresh).count())
            .collect();
        self.nu = Some(nu);
        self.nu_multiplicity = Some(mult);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn nu(&self) -> Option<&[f64]> {
        self.nu.as_deref()
    }

    pub fn nu_multiplicity(&self) -> Option<&[usize]> {
        self.nu_multiplicity.as_deref()
    }

    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    pub fn vector(&self, index: usize) -> Option<&Vector> {
        self.position(index).map(|p| &self.vectors[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Vector, C64)> {
        self.indices
            .iter()
            .zip(&self.vectors)
            .zip(&self.eigenvalues)
            .map(|((&i, v), &e)| (i, v, e))
    }

    pub fn normalized(&self) -> Self {
        let vectors = self.vectors.iter().map(|v| v / re(v.norm())).collect();
        Self { vectors, ..self.clone() }
    }

    /// `d x len` matrix with the family's vectors as columns.
    pub fn column_matrix(&self) -> DMatrix<C64> {
        column_matrix(&self.vectors)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartnerMode {
    /// `theta2 = x⁻¹ theta1 x`.
    Alpha,
    /// `theta2 = N2⁻¹ (x† theta1 x)`.
    Beta,
    /// As `Beta` with the Moore–Penrose inverse of a singular `N2`.
    BetaPseudoinverse,
}

impl PartnerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PartnerMode::Alpha => "alpha",
            PartnerMode::Beta => "beta",
            PartnerMode::BetaPseudoinverse => "beta_pseudoinverse",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntertwinePair {
    pub theta1: Matrix,
    pub x: Matrix,
    pub n1: Matrix,
    pub n2: Matrix,
    pub theta2: Matrix,
    pub mode: PartnerMode,
    pub diagnostics: BTreeMap<&'static str, f64>,
}

impl IntertwinePair {
    pub fn pseudo_inverse_used(&self) -> bool {
        self.mode == PartnerMode::BetaPseudoinverse
    }

    /// Orthogonal projector on `range(x†) = range(N2)`.
    pub fn range_projector(&self, tol: &Tolerances) -> Matrix {
        &self.n2 * &pseudo_inverse(&self.n2, tol)
    }
}

fn check_square_pair(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

pub fn partner_alpha(theta1: &Matrix, x: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    check_square_pair(theta1, x)?;
    let xinv = inverse(x, tol)?;
    Ok(&(&xinv * theta1) * x)
}

pub fn partner_beta(theta1: &Matrix, x: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    check_square_pair(theta1, x)?;
    let n2 = &x.adjoint() * x;
    let n2inv = inverse(&n2, tol).map_err(|_| Error::SingularN2)?;
    Ok(&n2inv * &(&(&x.adjoint() * theta1) * x))
}

/// Builds the partner of `theta1` along `x`; fails with
/// [`Error::CommutatorTooLarge`] when `[x x†, theta1] ≠ 0`.
pub fn build_partners(theta1: &Matrix, x: &Matrix, tol: &Tolerances) -> Result<IntertwinePair> {
    build_partners_with(theta1, x, tol, false)
}

/// As [`build_partners`]; with `allow_noncommuting` the commutator defect is
/// recorded but not enforced.
pub fn build_partners_with(
    theta1: &Matrix,
    x: &Matrix,
    tol: &Tolerances,
    allow_noncommuting: bool,
) -> Result<IntertwinePair> {
    check_square_pair(theta1, x)?;
    let xd = x.adjoint();
    let n1 = x * &xd;
    let n2 = &xd * x;
    let defect = commutator_defect(&n1, theta1)?;
    if defect > tol.commute_tol && !allow_noncommuting {
        return Err(Error::CommutatorTooLarge { defect });
    }

    let (theta2, mode) = if let Ok(xinv) = inverse(x, tol) {
        (&(&xinv * theta1) * x, PartnerMode::Alpha)
    } else {
        let m = &(&xd * theta1) * x;
        match inverse(&n2, tol) {
            Ok(n2inv) => (&n2inv * &m, PartnerMode::Beta),
            Err(_) => (&pseudo_inverse(&n2, tol) * &m, PartnerMode::BetaPseudoinverse),
        }
    };

    let scale = x.norm() * theta1.norm().max(theta2.norm());
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("commutator_n1_theta1", defect);
    diagnostics.insert("intertwine_x_theta2", relative(&(&(x * &theta2) - &(theta1 * x)), scale));
    diagnostics.insert("intertwine_theta2_xdag", relative(&(&(&theta2 * &xd) - &(&xd * theta1)), scale));
    diagnostics.insert("hermiticity_theta1", theta1.hermiticity_defect());
    diagnostics.insert("hermiticity_theta2", theta2.hermiticity_defect());
    diagnostics.insert("hermiticity_n1", n1.hermiticity_defect());
    diagnostics.insert("hermiticity_n2", n2.hermiticity_defect());

    Ok(IntertwinePair { theta1: theta1.clone(), x: x.clone(), n1, n2, theta2, mode, diagnostics })
}

/// Transported family together with the dropped index set `I1 \ I2`.
#[derive(Clone, Debug)]
pub struct Transport {
    pub family: EigenFamily,
    pub dropped: Vec<usize>,
}

/// `nu_n = ‖x† φ_n‖² / ‖φ_n‖²`.
pub fn nu_values(x: &Matrix, fam1: &EigenFamily) -> Vec<f64> {
    let xd = x.adjoint();
    fam1.vectors()
        .iter()
        .map(|v| xd.apply(v).norm_squared() / v.norm_squared())
        .collect()
}

/// `φ_n⁽²⁾ = x† φ_n⁽¹⁾` for every `n` with `‖x† φ_n‖ > rank_tol ‖x†‖ ‖φ_n‖`.
pub fn map_eigenfamily(x: &Matrix, fam1: &EigenFamily, tol: &Tolerances) -> Result<Transport> {
    if fam1.dim() != x.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: fam1.dim() });
    }
    let xd = x.adjoint();
    let xd_norm = xd.norm();
    let (mut idx, mut vecs, mut eig, mut nu, mut dropped) = (vec![], vec![], vec![], vec![], vec![]);
    for (n, v, e) in fam1.iter() {
        let w = xd.apply(v);
        if w.norm() > tol.rank_tol * xd_norm * v.norm() {
            nu.push(w.norm_squared() / v.norm_squared());
            idx.push(n);
            vecs.push(w);
            eig.push(e);
        } else {
            dropped.push(n);
        }
    }
    let family = EigenFamily::new(idx, vecs, eig)?.with_nu(nu, tol)?;
    Ok(Transport { family, dropped })
}

/// `φ_n⁽¹⁾ = x φ_n⁽²⁾ / nu_n`, using the recorded `nu` or `‖φ_n⁽²⁾‖²`.
pub fn recover_family1(x: &Matrix, fam2: &EigenFamily, tol: &Tolerances) -> Result<EigenFamily> {
    if fam2.is_empty() {
        return Err(Error::InvalidMatrix("empty family".into()));
    }
    let xn = x.norm();
    let mut out = Vec::with_capacity(fam2.len());
    for (k, (n, v, _)) in fam2.iter().enumerate() {
        let y = x.apply(v);
        if y.norm() <= tol.rank_tol * xn * v.norm() {
            return Err(Error::ZeroVector { index: n });
        }
        let scale = fam2.nu().map_or_else(|| v.norm_squared(), |nu| nu[k]);
        out.push(y / re(scale));
    }
    EigenFamily::new(fam2.indices().to_vec(), out, fam2.eigenvalues().to_vec())
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub ker_x_adjoint: Vec<usize>,
    pub ker_n1: Vec<usize>,
    pub ker_x_on_phi2: Vec<usize>,
    pub consistent: bool,
}

/// The three kernel index sets of the kernel lemma: `x† φ_n = 0`,
/// `N1 φ_n = 0` and `x (x† φ_n) = 0`.
pub fn kernel_equivalence_check(x: &Matrix, fam1: &EigenFamily, tol: &Tolerances) -> KernelReport {
    let xd = x.adjoint();
    let n1 = x * &xd;
    let (xn, n1n) = (x.norm(), n1.norm());
    let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
    for (n, v, _) in fam1.iter() {
        let vn = v.norm();
        let w = xd.apply(v);
        if w.norm() <= tol.rank_tol * xn * vn {
            a.push(n);
        }
        if n1.apply(v).norm() <= tol.rank_tol * n1n * vn {
            b.push(n);
        }
        if x.apply(&w).norm() <= tol.rank_tol * xn * xn * vn {
            c.push(n);
        }
    }
    let consistent = a == b && b == c;
    KernelReport { ker_x_adjoint: a, ker_n1: b, ker_x_on_phi2: c, consistent }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntertwiningReport {
    /// `‖x theta2 − theta1 x‖`, relative.
    pub left: f64,
    /// `‖theta2 x† − x† theta1‖`, relative.
    pub right: f64,
    /// Residuals were taken on `range(x†)` (pseudo-inverse pairs).
    pub projected: bool,
    pub pass: bool,
}

pub fn verify_intertwining(pair: &IntertwinePair, tol: &Tolerances) -> IntertwiningReport {
    let x = &pair.x;
    let xd = x.adjoint();
    let mut left = &(x * &pair.theta2) - &(&pair.theta1 * x);
    let mut right = &(&pair.theta2 * &xd) - &(&xd * &pair.theta1);
    let projected = pair.pseudo_inverse_used();
    if projected {
        let p = pair.range_projector(tol);
        left = &left * &p;
        right = &p * &right;
    }
    let scale = x.norm() * pair.theta1.norm().max(pair.theta2.norm());
    let (left, right) = (relative(&left, scale), relative(&right, scale));
    IntertwiningReport {
        left,
        right,
        projected,
        pass: left <= tol.residual_tol && right <= tol.residual_tol,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub entries: Vec<(&'static str, f64)>,
    pub pseudo_inverse: bool,
    pub pass: bool,
}

impl CommutationReport {
    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

fn n2_inverse_or_pinv(pair: &IntertwinePair, tol: &Tolerances) -> Result<(Matrix, bool)> {
    match inverse(&pair.n2, tol) {
        Ok(m) => Ok((m, false)),
        Err(_) if pair.pseudo_inverse_used() => Ok((pseudo_inverse(&pair.n2, tol), true)),
        Err(_) => Err(Error::SingularN2),
    }
}

/// Relative norms of the commutators that follow from `[N1, theta1] = 0`.
/// A singular `N2` is an error unless the pair was already built on the
/// pseudo-inverse, in which case `N2⁺` stands in for `N2⁻¹`.
pub fn verify_commutation_suite(pair: &IntertwinePair, tol: &Tolerances) -> Result<CommutationReport> {
    let (n2inv, pinv) = n2_inverse_or_pinv(pair, tol)?;
    let (x, xd) = (&pair.x, pair.x.adjoint());
    let t1 = &pair.theta1;
    let t2 = &pair.theta2;
    let t1d = t1.adjoint();
    let t2d = t2.adjoint();
    let m = &(&xd * t1) * x;
    let md = &(&xd * &t1d) * x;
    let k = &(x * &t2d) * &xd;
    let (n1, n2) = (&pair.n1, &pair.n2);
    let entries = vec![
        ("[theta2,N2]", commutator_defect(t2, n2)?),
        ("[theta2,N2^-1]", commutator_defect(t2, &n2inv)?),
        ("[theta2^dag,N2]", commutator_defect(&t2d, n2)?),
        ("[theta2^dag,N2^-1]", commutator_defect(&t2d, &n2inv)?),
        ("[theta1^dag,N1]", commutator_defect(&t1d, n1)?),
        ("[x^dag theta1^dag x,N2]", commutator_defect(&md, n2)?),
        ("[x^dag theta1^dag x,N2^-1]", commutator_defect(&md, &n2inv)?),
        ("[x theta2^dag x^dag,N1]", commutator_defect(&k, n1)?),
        ("[x^dag theta1 x,N2]", commutator_defect(&m, n2)?),
        ("[x^dag theta1 x,N2^-1]", commutator_defect(&m, &n2inv)?),
    ];
    let pass = entries.iter().all(|e| e.1 <= tol.residual_tol);
    Ok(CommutationReport { entries, pseudo_inverse: pinv, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfAdjointReport {
    pub delta1: f64,
    pub delta2: f64,
    pub hermitian1: bool,
    pub hermitian2: bool,
    /// `theta1` Hermitian iff `theta2` Hermitian.
    pub pass: bool,
}

pub fn selfadjointness_equivalence(pair: &IntertwinePair, tol: &Tolerances) -> Result<SelfAdjointReport> {
    inverse(&pair.n2, tol).map_err(|_| Error::SingularN2)?;
    let delta1 = pair.theta1.hermiticity_defect();
    let delta2 = pair.theta2.hermiticity_defect();
    let (hermitian1, hermitian2) = (delta1 <= tol.residual_tol, delta2 <= tol.residual_tol);
    Ok(SelfAdjointReport { delta1, delta2, hermitian1, hermitian2, pass: hermitian1 == hermitian2 })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchedPair {
    pub index: usize,
    pub epsilon: C64,
    pub lambda: C64,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralInclusionReport {
    pub theta2_eigenvalues: Vec<C64>,
    pub pairs: Vec<MatchedPair>,
    pub threshold: f64,
    pub all_matched: bool,
    /// Every eigenvalue of theta2 was used exactly once.
    pub multiset_equal: bool,
    /// Spectrum taken on `span(F2)` only.
    pub restricted: bool,
}

impl SpectralInclusionReport {
    pub fn max_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).fold(0.0, f64::max)
    }
}

/// Orthonormal basis (columns) of the numerical span of `vectors`.
pub fn span_basis(vectors: &[Vector], tol: &Tolerances) -> DMatrix<C64> {
    let dec = svd(&column_matrix(vectors));
    let cutoff = tol.rank_tol * dec.max();
    let keep = dec.singular_values.iter().filter(|&&s| s > cutoff).count();
    dec.u.columns(0, keep).into_owned()
}

/// Each `ε_n`, `n ∈ I2`, is matched to a distinct nearest eigenvalue of
/// `theta2` (compressed to `span(F2)` for pseudo-inverse pairs).
pub fn spectral_inclusion_check(
    pair: &IntertwinePair,
    fam2: &EigenFamily,
    tol: &Tolerances,
) -> Result<SpectralInclusionReport> {
    let restricted = pair.pseudo_inverse_used();
    let eig = if restricted {
        let q = span_basis(fam2.vectors(), tol);
        let comp = q.adjoint() * pair.theta2.inner() * &q;
        eig_general(&Matrix::from_inner(comp)?, tol)?
    } else {
        eig_general(&pair.theta2, tol)?
    };
    let radius = eig.spectral_radius();
    let threshold = if radius > 0.0 { tol.residual_tol * radius } else { tol.residual_tol };
    let mut used = vec![false; eig.eigenvalues.len()];
    let mut pairs = Vec::with_capacity(fam2.len());
    let mut all_matched = true;
    for (n, _, e) in fam2.iter() {
        let best = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, l)| (k, (l - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, dist)) => {
                used[k] = true;
                all_matched &= dist <= threshold;
                pairs.push(MatchedPair { index: n, epsilon: e, lambda: eig.eigenvalues[k], distance: dist });
            }
            None => all_matched = false,
        }
    }
    let multiset_equal = all_matched && used.iter().all(|u| *u);
    Ok(SpectralInclusionReport {
        theta2_eigenvalues: eig.eigenvalues,
        pairs,
        threshold,
        all_matched,
        multiset_equal,
        restricted,
    })
}

/// `Σ ε_n |v_n⟩⟨d_n|`. When `duals` differ from `vectors` they must be
/// biorthogonal to them within `residual_tol`.
pub fn synthesize_from_spectrum(
    eigenvalues: &[C64],
    vectors: &[Vector],
    duals: &[Vector],
    tol: &Tolerances,
) -> Result<Matrix> {
    if eigenvalues.len() != vectors.len() || vectors.len() != duals.len() || vectors.is_empty() {
        return Err(Error::DimensionMismatch { left: vectors.len(), right: duals.len() });
    }
    let d = vectors[0].len();
    if vectors != duals {
        let mut defect: f64 = 0.0;
        for (n, v) in vectors.iter().enumerate() {
            for (k, w) in duals.iter().enumerate() {
                let target = if n == k { 1.0 } else { 0.0 };
                defect = defect.max((inner(v, w) - re(target)).norm());
            }
        }
        if defect > tol.residual_tol {
            return Err(Error::BiorthogonalityViolated { defect });
        }
    }
    let mut m = Matrix::zeros(d);
    for ((e, v), w) in eigenvalues.iter().zip(vectors).zip(duals) {
        m = &m + &outer(v, w).scale(*e);
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub rank: usize,
    pub dim: usize,
    pub complete: bool,
}

impl CompletenessReport {
    /// Completeness of the transported family agrees with invertibility of `N2`.
    pub fn matches_n2(&self, n2: &Matrix, tol: &Tolerances) -> bool {
        self.complete == inverse(n2, tol).is_ok()
    }
}

pub fn completeness_check(fam: &EigenFamily, dim: usize, tol: &Tolerances) -> CompletenessReport {
    let rank = if fam.is_empty() { 0 } else { numerical_rank(&fam.column_matrix(), tol) };
    CompletenessReport { rank, dim, complete: rank == dim }
}

/// Where an operator identity is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Full,
    /// Leading `k x k` block (guard-banded ladder models).
    Leading(usize),
}

impl Scope {
    fn restrict(&self, m: &Matrix) -> Matrix {
        match *self {
            Scope::Full => m.clone(),
            Scope::Leading(k) => m.leading_block(k),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    /// `‖N2 − Σ P_n⁽²⁾‖ / ‖N2‖`.
    pub projector_sum: f64,
    /// `‖N2 − Σ nu_n P̂_n⁽²⁾‖ / ‖N2‖`.
    pub weighted_sum: f64,
}

/// Decomposition of `N2` over the transported family; the sum runs over the
/// single index `n ∈ I2`.
pub fn corollary_n2_decomposition(
    fam2: &EigenFamily,
    n2: &Matrix,
    scope: Scope,
    tol: &Tolerances,
) -> Result<CorollaryReport> {
    let nu: Vec<f64> = match fam2.nu() {
        Some(nu) => nu.to_vec(),
        None => fam2.vectors().iter().map(|v| v.norm_squared()).collect(),
    };
    let thresh = tol.rank_tol * nu.iter().copied().fold(0.0, f64::max);
    let mut degenerate = vec![];
    for i in 0..nu.len() {
        if (0..nu.len()).any(|j| j != i && (nu[i] - nu[j]).abs() <= thresh) {
            degenerate.push(fam2.indices()[i]);
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateNu(degenerate));
    }
    let n2s = scope.restrict(n2);
    inverse(&n2s, tol).map_err(|_| Error::SingularN2)?;

    let d = n2.dim();
    let mut sum_p = Matrix::zeros(d);
    let mut sum_hat = Matrix::zeros(d);
    for (k, v) in fam2.vectors().iter().enumerate() {
        sum_p = &sum_p + &outer(v, v);
        let vh = v / re(v.norm());
        sum_hat = &sum_hat + &outer(&vh, &vh).scale_re(nu[k]);
    }
    let scale = n2s.norm();
    Ok(CorollaryReport {
        projector_sum: relative(&(&n2s - &scope.restrict(&sum_p)), scale),
        weighted_sum: relative(&(&n2s - &scope.restrict(&sum_hat)), scale),
    })
}

/// Rank-one maps `P_{n,m} f = ⟨φ_n, f⟩ φ_m` over a family.
pub struct ProjectorFamily<'a> {
    family: &'a EigenFamily,
}

impl<'a> ProjectorFamily<'a> {
    pub fn new(family: &'a EigenFamily) -> Self {
        Self { family }
    }

    /// `P_{n,m}` by family position.
    pub fn p(&self, n: usize, m: usize) -> Matrix {
        let v = self.family.vectors();
        outer(&v[m], &v[n])
    }

    /// Normalized projector `P̂_n`.
    pub fn p_hat(&self, n: usize) -> Matrix {
        let v = &self.family.vectors()[n];
        let vh = v / re(v.norm());
        outer(&vh, &vh)
    }

    /// `‖P² − P‖ / ‖P‖`.
    pub fn idempotence_defect(p: &Matrix) -> f64 {
        relative(&(&(p * p) - p), p.norm())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    /// `max ‖theta2 φ⁽²⁾ − ε φ⁽²⁾‖ / (‖theta2‖ ‖φ⁽²⁾‖)`.
    pub theta2_eigen_residual: f64,
    /// `max ‖N2 φ⁽²⁾ − nu φ⁽²⁾‖ / (‖N2‖ ‖φ⁽²⁾‖)`.
    pub n2_eigen_residual: f64,
    /// Largest `|⟨φ̂_n⁽²⁾, φ̂_m⁽²⁾⟩|` over pairs with distinct simple `nu`.
    pub max_overlap_distinct_nu: f64,
}

/// Eigen-equations of the transported family under `theta2` and `N2`, and
/// orthogonality for distinct `nu`.
pub fn transport_residuals(pair: &IntertwinePair, fam2: &EigenFamily) -> TransportReport {
    let t2n = pair.theta2.norm().max(f64::MIN_POSITIVE);
    let n2n = pair.n2.norm().max(f64::MIN_POSITIVE);
    let nu = fam2.nu().map(|n| n.to_vec()).unwrap_or_else(|| vec![f64::NAN; fam2.len()]);
    let mut theta_res: f64 = 0.0;
    let mut n2_res: f64 = 0.0;
    for (k, (_, v, e)) in fam2.iter().enumerate() {
        let vn = v.norm();
        theta_res = theta_res.max((pair.theta2.apply(v) - v * e).norm() / (t2n * vn));
        if nu[k].is_finite() {
            n2_res = n2_res.max((pair.n2.apply(v) - v * re(nu[k])).norm() / (n2n * vn));
        }
    }
    let mult = fam2.nu_multiplicity();
    let mut overlap: f64 = 0.0;
    let vs = fam2.vectors();
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let simple = mult.is_some_and(|m| m[i] == 1 && m[j] == 1);
            if simple {
                overlap = overlap.max(inner(&vs[i], &vs[j]).norm() / (vs[i].norm() * vs[j].norm()));
            }
        }
    }
    TransportReport { theta2_eigen_residual: theta_res, n2_eigen_residual: n2_res, max_overlap_distinct_nu: overlap }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimpleNuReport {
    /// `(n, ‖theta† φ_n − conj(ε_n) φ_n‖ / (‖theta‖ ‖φ_n‖))` for each simple `nu_n`.
    pub adjoint_residuals: Vec<(usize, f64)>,
    /// `‖[theta, theta†]‖ / ‖theta‖²`, present when all `nu` are simple and the family is complete.
    pub normality_defect: Option<f64>,
}

/// Consequences of simple `nu`: each `φ_n` is also an eigenvector of
/// `theta†` with eigenvalue `conj(ε_n)`, and a complete family forces
/// `theta` to be normal.
pub fn simple_nu_consequences(theta: &Matrix, fam: &EigenFamily, tol: &Tolerances) -> Result<SimpleNuReport> {
    let mult = fam
        .nu_multiplicity()
        .ok_or_else(|| Error::InvalidMatrix("family carries no nu values".into()))?;
    let td = theta.adjoint();
    let tn = theta.norm().max(f64::MIN_POSITIVE);
    let adjoint_residuals = fam
        .iter()
        .zip(mult)
        .filter(|(_, m)| **m == 1)
        .map(|((n, v, e), _)| (n, (td.apply(v) - v * e.conj()).norm() / (tn * v.norm())))
        .collect();
    let all_simple = mult.iter().all(|m| *m == 1);
    let complete = completeness_check(fam, theta.dim(), tol).complete;
    let normality_defect = if all_simple && complete {
        Some(relative(&(&(theta * &td) - &(&td * theta)), tn * tn))
    } else {
        None
    };
    Ok(SimpleNuReport { adjoint_residuals, normality_defect })
}

/// Largest absolute entry of `Gram(a, b) − I`, `Gram_{nk} = ⟨a_n, b_k⟩`.
pub fn biorthogonality_defect(a: &[Vector], b: &[Vector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (n, u) in a.iter().enumerate() {
        for (k, w) in b.iter().enumerate() {
            let target = if n == k { re(1.0) } else { ZERO };
            worst = worst.max((inner(u, w) - target).norm());
        }
    }
    worst
}

/// Singular values of the columns of a family, descending.
pub fn family_singular_values(fam: &EigenFamily) -> Vec<f64> {
    singular_values(&fam.column_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, distance, eig_hermitian, sqrt_positive};
    use crate::random::{commuting_instance, InstanceRng};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn lowering(d: usize) -> Matrix {
        Matrix::from_fn(d, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { ZERO })
    }

    fn number_family(d: usize) -> EigenFamily {
        let eps: Vec<C64> = (0..d).map(|n| re(n as f64)).collect();
        EigenFamily::canonical(&eps)
    }

    #[test]
    fn family_validation() {
        let v = vec![basis_vector(2, 0), basis_vector(2, 1)];
        assert!(EigenFamily::new(vec![1, 0], v.clone(), vec![ZERO; 2]).is_err());
        assert!(EigenFamily::new(vec![0, 1], vec![v[0].clone(), Vector::zeros(2)], vec![ZERO; 2]).is_err());
        let f = EigenFamily::new(vec![0, 3], v, vec![ZERO; 2]).unwrap();
        assert_eq!(f.position(3), Some(1));
        assert!(f.clone().with_nu(vec![-1.0, 0.0], &tol()).is_err());
    }

    #[test]
    fn identity_partner_is_trivial() {
        let d = 5;
        let theta1 = Matrix::from_fn(d, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let pair = build_partners(&theta1, &Matrix::identity(d), &tol()).unwrap();
        assert_eq!(pair.mode, PartnerMode::Alpha);
        assert!(distance(&pair.theta2, &theta1) < 1e-15);
        assert!(distance(&pair.n1, &Matrix::identity(d)) == 0.0);
        assert!(distance(&pair.n2, &Matrix::identity(d)) == 0.0);
        let r = verify_intertwining(&pair, &tol());
        assert!(r.left < 1e-15 && r.right < 1e-15 && r.pass);
    }

    #[test]
    fn oscillator_raise_partner_block() {
        let (d, t) = (12, tol());
        let a = lowering(d);
        let h1 = &a.adjoint() * &a;
        let pair = build_partners(&h1, &a.adjoint(), &t).unwrap();
        assert_eq!(pair.mode, PartnerMode::BetaPseudoinverse);
        let expect = &h1 + &Matrix::identity(d);
        let k = t.band(d);
        assert!((&pair.theta2.leading_block(k) - &expect.leading_block(k)).norm() < 1e-12);
        assert!(verify_intertwining(&pair, &t).pass);
    }

    #[test]
    fn oscillator_lower_partner_on_span() {
        let (d, t) = (12, tol());
        let a = lowering(d);
        let h1 = &a.adjoint() * &a;
        let pair = build_partners(&h1, &a, &t).unwrap();
        assert_eq!(pair.mode, PartnerMode::BetaPseudoinverse);
        let expect = &h1 - &Matrix::identity(d);
        let diff = (&pair.theta2 - &expect).compress_range(1, t.band(d));
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn noncommuting_pair_is_rejected_but_recordable() {
        let t = tol();
        let theta1 = Matrix::from_real_diagonal(&[1., 2., 3.]);
        let x = Matrix::from_fn(3, |i, j| re(1.0 + (i * j) as f64));
        let err = build_partners(&theta1, &x, &t).unwrap_err();
        assert!(matches!(err, Error::CommutatorTooLarge { defect } if defect > 0.01));
        let pair = build_partners_with(&theta1, &x, &t, true).unwrap();
        assert!(pair.diagnostics["commutator_n1_theta1"] > 0.01);
    }

    #[test]
    fn map_family_oscillator_drops_ground_state() {
        let (d, t) = (8, tol());
        let a = lowering(d);
        let tr = map_eigenfamily(&a.adjoint(), &number_family(d), &t).unwrap();
        assert_eq!(tr.dropped, vec![0]);
        assert_eq!(tr.family.indices(), &(1..d).collect::<Vec<_>>()[..]);
        let nu = nu_values(&a.adjoint(), &number_family(d));
        for (n, v) in nu.iter().enumerate() {
            assert!((v - n as f64).abs() < 1e-12);
        }
        let id = map_eigenfamily(&Matrix::identity(d), &number_family(d), &t).unwrap();
        assert!(id.dropped.is_empty());
        assert_eq!(id.family.vectors(), number_family(d).vectors());
        assert!(nu_values(&Matrix::identity(d), &number_family(d)).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn recover_first_family() {
        let (d, t) = (8, tol());
        let a = lowering(d);
        let x = a.adjoint();
        let tr = map_eigenfamily(&x, &number_family(d), &t).unwrap();
        let back = recover_family1(&x, &tr.family, &t).unwrap();
        for (n, v, _) in back.iter() {
            assert!((v - basis_vector(d, n)).norm() < 1e-12);
        }
        let id = map_eigenfamily(&Matrix::identity(d), &number_family(d), &t).unwrap();
        let back = recover_family1(&Matrix::identity(d), &id.family, &t).unwrap();
        assert_eq!(back.vectors(), number_family(d).vectors());
    }

    #[test]
    fn recover_reports_zero_vector() {
        let t = tol();
        let x = Matrix::from_real_diagonal(&[1., 0.]);
        let fam2 = EigenFamily::canonical(&[ZERO, ZERO]);
        assert!(matches!(recover_family1(&x, &fam2, &t), Err(Error::ZeroVector { index: 1 })));
    }

    #[test]
    fn kernel_sets_for_oscillator_and_invertible() {
        let (d, t) = (8, tol());
        let r = kernel_equivalence_check(&lowering(d).adjoint(), &number_family(d), &t);
        assert_eq!(r.ker_x_adjoint, vec![0]);
        assert!(r.consistent);
        let mut rng = InstanceRng::seed(5);
        let x = rng.ginibre(d);
        let r = kernel_equivalence_check(&x, &number_family(d), &t);
        assert!(r.ker_x_adjoint.is_empty() && r.consistent);
    }

    #[test]
    fn kernel_sets_follow_prescribed_nullspace() {
        let (d, t) = (8, tol());
        let mut rng = InstanceRng::seed(6);
        let u = rng.unitary(d);
        let v = rng.unitary(d);
        let mut s = vec![1.5; d];
        s[3] = 0.0;
        s[5] = 0.0;
        let x = &(&u * &Matrix::from_real_diagonal(&s)) * &v.adjoint();
        let fam = EigenFamily::sequential(u.columns(), vec![ZERO; d]).unwrap();
        let r = kernel_equivalence_check(&x, &fam, &t);
        assert_eq!(r.ker_x_adjoint, vec![3, 5]);
        assert_eq!(r.ker_n1, vec![3, 5]);
        assert_eq!(r.ker_x_on_phi2, vec![3, 5]);
    }

    #[test]
    fn commutation_suite_on_sqrt_instance() {
        let t = tol();
        let mut rng = InstanceRng::seed(7);
        let spec = rng.separated_values(6, -1.0, 1.0, 0.1);
        let h = rng.hermitian_with_spectrum(&spec);
        let theta1 = h.polynomial(&[re(0.3), C64::new(0.5, 0.2), re(-0.7)]);
        let n1 = h.polynomial(&[re(2.0), re(0.5), re(0.3)]);
        let x = sqrt_positive(&n1, &t).unwrap();
        let pair = build_partners(&theta1, &x, &t).unwrap();
        let rep = verify_commutation_suite(&pair, &t).unwrap();
        assert!(rep.pass, "{:?}", rep.entries);
        assert!(!rep.pseudo_inverse);

        let id = build_partners(&theta1, &Matrix::identity(6), &t).unwrap();
        assert!(verify_commutation_suite(&id, &t).unwrap().max() < 1e-15);
    }

    #[test]
    fn commutation_suite_requires_invertible_n2() {
        let t = tol();
        let mut pair = build_partners(&Matrix::identity(3), &Matrix::identity(3), &t).unwrap();
        pair.n2 = Matrix::from_real_diagonal(&[1., 1., 0.]);
        assert!(matches!(verify_commutation_suite(&pair, &t), Err(Error::SingularN2)));
    }

    #[test]
    fn selfadjointness_examples() {
        let t = tol();
        let mut rng = InstanceRng::seed(8);
        let inst = commuting_instance(&mut rng, 6, true);
        let pair = build_partners(&inst.theta1, &inst.x, &t).unwrap();
        let r = selfadjointness_equivalence(&pair, &t).unwrap();
        assert!(r.delta2 <= 1e-9 && r.pass);
        let id = build_partners(&Matrix::identity(4), &Matrix::identity(4), &t).unwrap();
        let r = selfadjointness_equivalence(&id, &t).unwrap();
        assert_eq!((r.delta1, r.delta2), (0.0, 0.0));
    }

    #[test]
    fn alpha_and_beta_agree_for_invertible_x() {
        let t = tol();
        let mut rng = InstanceRng::seed(9);
        for herm in [true, false] {
            let inst = commuting_instance(&mut rng, 7, herm);
            let a = partner_alpha(&inst.theta1, &inst.x, &t).unwrap();
            let b = partner_beta(&inst.theta1, &inst.x, &t).unwrap();
            assert!(distance(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn spectral_inclusion_cases() {
        let (d, t) = (8, tol());
        let a = lowering(d);
        let h1 = &a.adjoint() * &a;
        let pair = build_partners(&h1, &a, &t).unwrap();
        let tr = map_eigenfamily(&a, &number_family(d), &t).unwrap();
        let r = spectral_inclusion_check(&pair, &tr.family, &t).unwrap();
        assert!(r.restricted && r.all_matched, "{r:?}");

        let theta1 = Matrix::from_real_diagonal(&[1., 2., 3.]);
        let pair = build_partners(&theta1, &Matrix::identity(3), &t).unwrap();
        let fam = EigenFamily::canonical(&[re(1.), re(2.), re(3.)]);
        let r = spectral_inclusion_check(&pair, &fam, &t).unwrap();
        assert!(r.multiset_equal && r.max_distance() < 1e-15);

        let mut rng = InstanceRng::seed(10);
        let inst = commuting_instance(&mut rng, d, false);
        let pair = build_partners(&inst.theta1, &inst.x, &t).unwrap();
        let f1 = EigenFamily::from_general(&eig_general(&inst.theta1, &t).unwrap());
        let tr = map_eigenfamily(&inst.x, &f1, &t).unwrap();
        let r = spectral_inclusion_check(&pair, &tr.family, &t).unwrap();
        assert!(r.multiset_equal && r.max_distance() < 1e-8);
    }

    #[test]
    fn synthesis_examples() {
        let t = tol();
        let e = [re(1.), re(2.)];
        let v = [basis_vector(2, 0), basis_vector(2, 1)];
        let m = synthesize_from_spectrum(&e, &v, &v, &t).unwrap();
        assert!(distance(&m, &Matrix::from_real_diagonal(&[1., 2.])) < 1e-16);

        let d = 9;
        let a = lowering(d);
        let h1 = &a.adjoint() * &a;
        let fam = number_family(d);
        let m = synthesize_from_spectrum(fam.eigenvalues(), fam.vectors(), fam.vectors(), &t).unwrap();
        assert!((&m - &h1).max_abs() < 1e-12);

        let bad = [basis_vector(2, 0), basis_vector(2, 0)];
        assert!(matches!(
            synthesize_from_spectrum(&e, &v, &bad, &t),
            Err(Error::BiorthogonalityViolated { .. })
        ));
    }

    #[test]
    fn completeness_tracks_n2() {
        let (d, t) = (10, tol());
        let a = lowering(d);
        for x in [a.adjoint(), a.clone()] {
            let tr = map_eigenfamily(&x, &number_family(d), &t).unwrap();
            let c = completeness_check(&tr.family, d, &t);
            assert_eq!(c.rank, d - 1);
            assert!(!c.complete);
            assert!(c.matches_n2(&(&x.adjoint() * &x), &t));
        }
        assert!(completeness_check(&number_family(d), d, &t).complete);
    }

    #[test]
    fn corollary_on_guard_band_and_trivial() {
        let (d, t) = (10, tol());
        let a = lowering(d);
        let x = a.adjoint();
        let tr = map_eigenfamily(&x, &number_family(d), &t).unwrap();
        let n2 = &x.adjoint() * &x;
        assert!(matches!(
            corollary_n2_decomposition(&tr.family, &n2, Scope::Full, &t),
            Err(Error::SingularN2)
        ));
        let r = corollary_n2_decomposition(&tr.family, &n2, Scope::Leading(t.band(d)), &t).unwrap();
        assert!(r.projector_sum < 1e-12 && r.weighted_sum < 1e-12);

        let one = EigenFamily::canonical(&[re(2.0)]).with_nu(vec![1.0], &t).unwrap();
        let r = corollary_n2_decomposition(&one, &Matrix::identity(1), Scope::Full, &t).unwrap();
        assert_eq!((r.projector_sum, r.weighted_sum), (0.0, 0.0));

        let deg = EigenFamily::canonical(&[re(1.), re(2.)]).with_nu(vec![1.0, 1.0], &t).unwrap();
        assert!(matches!(
            corollary_n2_decomposition(&deg, &Matrix::identity(2), Scope::Full, &t),
            Err(Error::DegenerateNu(_))
        ));
    }

    #[test]
    fn projectors() {
        let (d, t) = (6, tol());
        let a = lowering(d);
        let tr = map_eigenfamily(&a.adjoint(), &number_family(d), &t).unwrap();
        let pf = ProjectorFamily::new(&tr.family);
        for n in 0..tr.family.len() {
            let ph = pf.p_hat(n);
            assert!(ProjectorFamily::idempotence_defect(&ph) < 1e-14);
            assert!(ph.hermiticity_defect() < 1e-15);
            let nu = tr.family.nu().unwrap()[n];
            let p = pf.p(n, n);
            if (nu - 1.0).abs() > 1e-9 {
                assert!(ProjectorFamily::idempotence_defect(&p) > 1e-3);
            }
        }
    }

    #[test]
    fn transport_and_simple_nu() {
        let (d, t) = (7, tol());
        let mut rng = InstanceRng::seed(11);
        let inst = commuting_instance(&mut rng, d, false);
        let pair = build_partners(&inst.theta1, &inst.x, &t).unwrap();
        let f1 = EigenFamily::from_hermitian(&eig_hermitian(&inst.h, &t).unwrap());
        // eigenvalues of theta1 on the H eigenbasis
        let eps: Vec<C64> = f1.vectors().iter().map(|v| inner(v, &inst.theta1.apply(v))).collect();
        let f1 = EigenFamily::sequential(f1.vectors().to_vec(), eps).unwrap();
        let nu = nu_values(&inst.x, &f1);
        let f1 = f1.with_nu(nu, &t).unwrap();
        let tr = map_eigenfamily(&inst.x, &f1, &t).unwrap();
        let rep = transport_residuals(&pair, &tr.family);
        assert!(rep.theta2_eigen_residual < 1e-12);
        assert!(rep.n2_eigen_residual < 1e-12);
        assert!(rep.max_overlap_distinct_nu < 1e-10);
        let s = simple_nu_consequences(&inst.theta1, &f1, &t).unwrap();
        assert!(s.adjoint_residuals.iter().all(|r| r.1 < 1e-12));
        assert!(s.normality_defect.unwrap() < 1e-12);
        let s2 = simple_nu_consequences(&pair.theta2, &tr.family, &t).unwrap();
        assert!(s2.normality_defect.unwrap() < 1e-12);
    }
}
