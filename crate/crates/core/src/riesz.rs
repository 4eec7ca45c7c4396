//! Riesz bases, frame operators, duals and pseudo-hermiticity.
//!
//! A Riesz basis is the image `φ_n = T e_n` of the canonical basis under an
//! invertible `T`. Its frame operator `S = T T†` has the frame bounds as
//! extreme eigenvalues, and the dual basis is `S⁻¹ φ_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intertwine::{biorthogonality_defect, build_partners, EigenFamily};
use crate::linalg::{
    commutator_defect, condition_number, distance, eig_general, eig_hermitian, inner, inverse,
    outer, re, relative, sqrt_positive, Matrix, Tolerances, Vector, C64,
};
use crate::random::InstanceRng;

#[derive(Clone, Debug)]
pub struct RieszBasis {
    /// Generator `T`.
    pub t: Matrix,
    pub vectors: Vec<Vector>,
    /// `S = T T†`.
    pub frame_op: Matrix,
    /// `(A, B) = (λ_min(S), λ_max(S))`.
    pub bounds: (f64, f64),
    /// `S⁻¹ T`, generator of the dual basis.
    pub t_dual: Matrix,
    pub condition_number: f64,
}

pub fn build_riesz(t: &Matrix, tol: &Tolerances) -> Result<RieszBasis> {
    inverse(t, tol)?;
    let frame_op = t * &t.adjoint();
    let eig = eig_hermitian(&frame_op, tol)?;
    let s_inv = inverse(&frame_op, tol)?;
    Ok(RieszBasis {
        t: t.clone(),
        vectors: t.columns(),
        bounds: (eig.min(), eig.max()),
        t_dual: &s_inv * t,
        condition_number: condition_number(t),
        frame_op,
    })
}

impl RieszBasis {
    pub fn dim(&self) -> usize {
        self.t.dim()
    }

    /// `Σ_n |⟨φ_n, f⟩|²`.
    pub fn frame_sum(&self, f: &Vector) -> f64 {
        self.vectors.iter().map(|v| inner(v, f).norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameReport {
    pub samples: usize,
    /// Largest amount by which a sample left `[A‖f‖², B‖f‖²]`.
    pub bound_violation: f64,
    /// Largest `|Σ|⟨φ_n,f⟩|² − ⟨f, S f⟩|`.
    pub quadratic_form_gap: f64,
    /// Relative gaps `|sum − A| / A` and `|sum − B| / B` at the extreme eigenvectors of `S`.
    pub probe_gap: (f64, f64),
    pub pass: bool,
}

/// Samples random unit vectors and the extreme eigenvectors of `S` against
/// the frame inequality.
pub fn frame_inequality_check(
    basis: &RieszBasis,
    samples: usize,
    rng: &mut InstanceRng,
    tol: &Tolerances,
) -> Result<FrameReport> {
    let (a, b) = basis.bounds;
    let tol_abs = tol.residual_tol * b;
    let mut violation: f64 = 0.0;
    let mut qf_gap: f64 = 0.0;
    for _ in 0..samples {
        let f = rng.unit_vector(basis.dim());
        let sum = basis.frame_sum(&f);
        violation = violation.max(a - sum).max(sum - b);
        qf_gap = qf_gap.max((sum - inner(&f, &basis.frame_op.apply(&f)).re).abs());
    }
    let eig = eig_hermitian(&basis.frame_op, tol)?;
    let lo = basis.frame_sum(&eig.eigenvectors[0]);
    let hi = basis.frame_sum(eig.eigenvectors.last().expect("nonempty"));
    let probe_gap = ((lo - a).abs() / a, (hi - b).abs() / b);
    Ok(FrameReport {
        samples,
        bound_violation: violation.max(0.0),
        quadratic_form_gap: qf_gap,
        probe_gap,
        pass: violation <= tol_abs && qf_gap <= tol_abs,
    })
}

#[derive(Clone, Debug)]
pub struct DualBasis {
    /// `φ̃_n = S⁻¹ φ_n`.
    pub vectors: Vec<Vector>,
    pub t_dual: Matrix,
    /// Largest entry of `⟨φ_n, φ̃_k⟩ − δ_nk`.
    pub biorthogonality_defect: f64,
}

impl DualBasis {
    /// The dual viewed as a Riesz basis generated by `S⁻¹ T`.
    pub fn as_riesz(&self, tol: &Tolerances) -> Result<RieszBasis> {
        build_riesz(&self.t_dual, tol)
    }
}

pub fn dual_basis(basis: &RieszBasis) -> DualBasis {
    let vectors = basis.t_dual.columns();
    let defect = biorthogonality_defect(&basis.vectors, &vectors);
    DualBasis { vectors, t_dual: basis.t_dual.clone(), biorthogonality_defect: defect }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolutionReport {
    /// `‖Σ |φ̃_n⟩⟨φ_n| − I‖`.
    pub dual_first: f64,
    /// `‖Σ |φ_n⟩⟨φ̃_n| − I‖`.
    pub primal_first: f64,
    pub pass: bool,
}

pub fn resolution_identity_check(basis: &RieszBasis, dual: &DualBasis, tol: &Tolerances) -> ResolutionReport {
    let d = basis.dim();
    let mut left = Matrix::zeros(d);
    let mut right = Matrix::zeros(d);
    for (v, w) in basis.vectors.iter().zip(&dual.vectors) {
        left = &left + &outer(w, v);
        right = &right + &outer(v, w);
    }
    let id = Matrix::identity(d);
    let dual_first = (&left - &id).norm();
    let primal_first = (&right - &id).norm();
    ResolutionReport {
        dual_first,
        primal_first,
        pass: dual_first <= tol.residual_tol && primal_first <= tol.residual_tol,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BiorthogonalReport {
    /// Relative distance between `x` and `S⁻¹`.
    pub distance_to_s_inv: f64,
    /// Largest entry of `Gram(F1, F2) − I` with `F2 = {x† φ_n}`.
    pub gram_defect: f64,
    /// `x = S⁻¹`.
    pub a: bool,
    /// `F2` is a Riesz basis biorthogonal to `F1`.
    pub b: bool,
    pub consistent: bool,
}

/// `x = S⁻¹` holds exactly when `{x† φ_n}` is a Riesz basis biorthogonal
/// to `{φ_n}`.
pub fn biorthogonal_criterion(basis: &RieszBasis, x: &Matrix, tol: &Tolerances) -> Result<BiorthogonalReport> {
    let s_inv = inverse(&basis.frame_op, tol)?;
    let dist = distance(x, &s_inv);
    let xd = x.adjoint();
    let f2: Vec<Vector> = basis.vectors.iter().map(|v| xd.apply(v)).collect();
    let gram_defect = biorthogonality_defect(&basis.vectors, &f2);
    let generator = &xd * &basis.t;
    let a = dist <= tol.residual_tol;
    let b = gram_defect <= tol.residual_tol && inverse(&generator, tol).is_ok();
    Ok(BiorthogonalReport { distance_to_s_inv: dist, gram_defect, a, b, consistent: a == b })
}

#[derive(Clone, Debug, Serialize)]
pub struct NoGoReport {
    /// `‖[θ1, S⁻²]‖`, relative.
    pub hypothesis_defect: f64,
    /// Largest relative eigen-residual of the basis vectors under `theta1`.
    pub basis_eigen_residual: f64,
    /// `‖[θ1, S⁻¹]‖`, relative.
    pub commutator_s_inv: f64,
    /// `‖θ2 − θ1‖ / ‖θ1‖` with `θ2` the partner along `x = S⁻¹`.
    pub theta_distance: f64,
    /// `min_n |⟨φ̂_n⁽²⁾, φ̂_n⁽¹⁾⟩|`.
    pub min_overlap: f64,
    pub pass: bool,
}

/// With `x = S⁻¹` and `[θ1, S⁻²] = 0`, the partner coincides with `θ1` and
/// every transported vector is parallel to its source. Fails with
/// [`Error::HypothesisViolated`] when the commutator does not vanish.
pub fn nogo_check(basis: &RieszBasis, theta1: &Matrix, tol: &Tolerances) -> Result<NoGoReport> {
    let s_inv = inverse(&basis.frame_op, tol)?;
    let s_inv2 = &s_inv * &s_inv;
    let hypothesis_defect = commutator_defect(theta1, &s_inv2)?;
    if hypothesis_defect > tol.commute_tol {
        return Err(Error::HypothesisViolated(format!(
            "[theta1, S^-2] has relative norm {hypothesis_defect:e}"
        )));
    }
    let tn = theta1.norm().max(f64::MIN_POSITIVE);
    let basis_eigen_residual = basis
        .vectors
        .iter()
        .map(|v| {
            let w = theta1.apply(v);
            let e = inner(v, &w) / re(v.norm_squared());
            (w - v * e).norm() / (tn * v.norm())
        })
        .fold(0.0, f64::max);
    let pair = build_partners(theta1, &s_inv, tol)?;
    let commutator_s_inv = commutator_defect(theta1, &s_inv)?;
    let theta_distance = distance(&pair.theta2, theta1);
    let min_overlap = basis
        .vectors
        .iter()
        .map(|v| {
            let w = s_inv.apply(v);
            inner(&w, v).norm() / (w.norm() * v.norm())
        })
        .fold(f64::INFINITY, f64::min);
    let pass = commutator_s_inv <= tol.residual_tol
        && theta_distance <= tol.residual_tol
        && 1.0 - min_overlap <= tol.residual_tol;
    Ok(NoGoReport { hypothesis_defect, basis_eigen_residual, commutator_s_inv, theta_distance, min_overlap, pass })
}

#[derive(Clone, Debug)]
pub struct PseudoHermitianCert {
    /// The metric `M`.
    pub metric: Matrix,
    /// `‖M θ − θ† M‖ / (‖M‖ ‖θ‖)`.
    pub residual: f64,
    /// `T⁻¹ θ T` with `T = M^{-1/2}`.
    pub similar_form: Matrix,
    pub similar_defect: f64,
    pub pass: bool,
}

pub fn pseudo_hermiticity_check(theta: &Matrix, metric: &Matrix, tol: &Tolerances) -> Result<PseudoHermitianCert> {
    if theta.dim() != metric.dim() {
        return Err(Error::DimensionMismatch { left: theta.dim(), right: metric.dim() });
    }
    let eig = eig_hermitian(metric, tol).map_err(|e| Error::BadMetric(e.to_string()))?;
    if eig.min() <= tol.rank_tol * eig.max() {
        return Err(Error::BadMetric(format!("smallest eigenvalue {:e}", eig.min())));
    }
    let residual = relative(
        &(&(metric * theta) - &(&theta.adjoint() * metric)),
        metric.norm() * theta.norm(),
    );
    let root = sqrt_positive(metric, tol)?;
    let root_inv = inverse(&root, tol)?;
    let similar_form = &(&root * theta) * &root_inv;
    let similar_defect = similar_form.hermiticity_defect();
    Ok(PseudoHermitianCert {
        metric: metric.clone(),
        residual,
        similar_form,
        similar_defect,
        pass: residual <= tol.residual_tol,
    })
}

/// Eigenbasis of a pseudo-hermitian operator returned as a Riesz basis.
#[derive(Clone, Debug)]
pub struct RealEigenbasis {
    pub basis: RieszBasis,
    pub eigenvalues: Vec<f64>,
    /// Largest `‖θ φ_n − ε_n φ_n‖ / (‖θ‖ ‖φ_n‖)`.
    pub residual: f64,
}

impl RealEigenbasis {
    pub fn family(&self) -> EigenFamily {
        let eps = self.eigenvalues.iter().copied().map(re).collect();
        EigenFamily::sequential(self.basis.vectors.clone(), eps).expect("basis vectors are nonzero")
    }
}

/// Diagonalizes `t⁻¹ θ1 t` for a `(t t†)⁻¹`-pseudo-hermitian `θ1` and maps
/// the orthonormal eigenvectors back through `t`.
pub fn riesz_from_pseudohermitian(theta1: &Matrix, t: &Matrix, tol: &Tolerances) -> Result<RealEigenbasis> {
    let t_inv = inverse(t, tol)?;
    let metric = &t_inv.adjoint() * &t_inv;
    let cert = pseudo_hermiticity_check(theta1, &metric, tol)?;
    if !cert.pass {
        return Err(Error::NotPseudoHermitian { residual: cert.residual });
    }
    let similar = &(&t_inv * theta1) * t;
    let defect = similar.hermiticity_defect();
    if defect > tol.residual_tol {
        return Err(Error::SimilarFormNotHermitian { defect });
    }
    let eig = eig_hermitian(&similar, tol)?;
    let u = Matrix::from_columns(&eig.eigenvectors)?;
    let basis = build_riesz(&(t * &u), tol)?;
    let tn = theta1.norm().max(f64::MIN_POSITIVE);
    let residual = basis
        .vectors
        .iter()
        .zip(&eig.eigenvalues)
        .map(|(v, e)| (theta1.apply(v) - v * re(*e)).norm() / (tn * v.norm()))
        .fold(0.0, f64::max);
    Ok(RealEigenbasis { basis, eigenvalues: eig.eigenvalues, residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct RieszTransportReport {
    /// Condition number of the generator `x† T` of the transported family.
    pub generator_condition: f64,
    /// Largest relative eigen-residual of `x† φ_n` under `θ2 = x⁻¹ θ1 x`.
    pub theta2_eigen_residual: f64,
    /// Largest `|Im λ|` over the spectrum of `θ2`.
    pub max_imaginary: f64,
    /// `‖θ2 − θ1‖ / ‖θ1‖`, logged for contrast.
    pub theta_distance: f64,
    pub eigenvalues: Vec<f64>,
    pub pass: bool,
}

/// A pseudo-hermitian `θ1` with Riesz eigenbasis `F1` and invertible `x`
/// commuting with `N1` gives a partner whose eigenvectors `x† φ_n` again
/// form a Riesz basis, with the same real eigenvalues.
pub fn corollary_riesz_transport(theta1: &Matrix, t: &Matrix, x: &Matrix, tol: &Tolerances) -> Result<RieszTransportReport> {
    inverse(x, tol)?;
    let f1 = riesz_from_pseudohermitian(theta1, t, tol)?;
    let pair = build_partners(theta1, x, tol)?;
    let xd = x.adjoint();
    let f2 = build_riesz(&(&xd * &f1.basis.t), tol)?;
    let t2n = pair.theta2.norm().max(f64::MIN_POSITIVE);
    let theta2_eigen_residual = f2
        .vectors
        .iter()
        .zip(&f1.eigenvalues)
        .map(|(v, e)| (pair.theta2.apply(v) - v * re(*e)).norm() / (t2n * v.norm()))
        .fold(0.0, f64::max);
    let spectrum = eig_general(&pair.theta2, tol)?;
    let max_imaginary = spectrum.eigenvalues.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    let radius = spectrum.spectral_radius().max(1.0);
    let pass = theta2_eigen_residual <= tol.residual_tol && max_imaginary <= tol.residual_tol * radius;
    Ok(RieszTransportReport {
        generator_condition: f2.condition_number,
        theta2_eigen_residual,
        max_imaginary,
        theta_distance: distance(&pair.theta2, theta1),
        eigenvalues: f1.eigenvalues,
        pass,
    })
}

/// `Σ_n g(λ_n) P_n` over the spectral decomposition of a Hermitian `s`.
pub fn hermitian_function(s: &Matrix, tol: &Tolerances, g: impl Fn(f64) -> C64) -> Result<Matrix> {
    let eig = eig_hermitian(s, tol)?;
    let mut m = Matrix::zeros(s.dim());
    for (l, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        m = &m + &outer(v, v).scale(g(*l));
    }
    Ok(m)
}
