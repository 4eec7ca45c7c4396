//! The truncated oscillator, quons, and pseudo-bosons built on a Riesz basis.
//!
//! Ladder matrices are the exact action on the first `d` levels with no
//! renormalization of the top level, so operator identities hold only on
//! the leading `d - guard` block.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intertwine::{biorthogonality_defect, build_partners, EigenFamily, PartnerMode};
use crate::linalg::{
    commutator_defect, distance, eig_general, inverse, re, relative, sqrt_positive, Matrix,
    Tolerances, Vector, C64, ZERO,
};
use crate::riesz::{build_riesz, pseudo_hermiticity_check, RieszBasis};

/// Largest dimension for pseudo-boson systems; keeps `1/√(n!)` finite.
pub const MAX_PSEUDOBOSON_DIM: usize = 34;

fn check_dim(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::InvalidDimension { dim: d, reason: "ladder models need d >= 3" });
    }
    Ok(())
}

fn lowering_from(weights: &[f64]) -> Matrix {
    // weights[n] multiplies e_{n-1} in the image of e_n
    let d = weights.len();
    Matrix::from_fn(d, |i, j| if j == i + 1 { re(weights[j]) } else { ZERO })
}

fn canonical_family(eps: &[f64]) -> EigenFamily {
    let e: Vec<C64> = eps.iter().copied().map(re).collect();
    EigenFamily::canonical(&e)
}

#[derive(Clone, Debug)]
pub struct LadderSystem {
    pub dim: usize,
    /// `a e_n = √n e_{n−1}`.
    pub lower: Matrix,
    pub raise: Matrix,
    /// `a† a`.
    pub h1: Matrix,
}

pub fn make_oscillator(d: usize) -> Result<LadderSystem> {
    check_dim(d)?;
    let w: Vec<f64> = (0..d).map(|n| (n as f64).sqrt()).collect();
    let lower = lowering_from(&w);
    let raise = lower.adjoint();
    let h1 = &raise * &lower;
    Ok(LadderSystem { dim: d, lower, raise, h1 })
}

impl LadderSystem {
    /// `e_n` with eigenvalue `n`.
    pub fn number_family(&self) -> EigenFamily {
        let eps: Vec<f64> = (0..self.dim).map(|n| n as f64).collect();
        canonical_family(&eps)
    }
}

#[derive(Clone, Debug)]
pub struct QuonSystem {
    pub q: f64,
    pub dim: usize,
    /// `B e_n = β_{n−1} e_{n−1}`, `B e_0 = 0`.
    pub b: Matrix,
    /// `β_n² = 1 + q + ⋯ + qⁿ`.
    pub beta: Vec<f64>,
    /// `B† B`.
    pub h1: Matrix,
    /// `ε_n = 1 + q + ⋯ + q^{n−1}`, `ε_0 = 0`.
    pub eps: Vec<f64>,
}

pub fn make_quon(d: usize, q: f64) -> Result<QuonSystem> {
    check_dim(d)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::QOutOfRange(q));
    }
    let mut eps = Vec::with_capacity(d);
    let mut acc = 0.0;
    for n in 0..d {
        eps.push(acc);
        acc += q.powi(n as i32);
    }
    let beta: Vec<f64> = (0..d).map(|n| (eps[n] + q.powi(n as i32)).sqrt()).collect();
    let w: Vec<f64> = (0..d).map(|n| eps[n].sqrt()).collect();
    let b = lowering_from(&w);
    let h1 = &b.adjoint() * &b;
    Ok(QuonSystem { q, dim: d, b, beta, h1, eps })
}

impl QuonSystem {
    pub fn family(&self) -> EigenFamily {
        canonical_family(&self.eps)
    }

    /// `B B† − q B† B`.
    pub fn q_commutator(&self) -> Matrix {
        let bd = self.b.adjoint();
        &(&self.b * &bd) - &(&bd * &self.b).scale_re(self.q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `x = B†`.
    Raise,
    /// `x = B`.
    Lower,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Raise => "raise",
            Direction::Lower => "lower",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuonPartnerReport {
    pub direction: Direction,
    pub mode: PartnerMode,
    /// `‖θ2 − expected‖` on the checked block.
    pub block_residual: f64,
    /// `block_residual` over the norm of the expected block (at least 1).
    pub relative_residual: f64,
    /// `N2` invertible on the guard-banded block.
    pub n2_block_invertible: bool,
    /// `N2` invertible as a full `d x d` matrix.
    pub n2_full_invertible: bool,
    pub pass: bool,
}

/// Partner of `h1 = B†B` along `B†` (expected `q h1 + I`) or `B` (expected
/// `(h1 − I)/q` on `span{e_1, …}`), checked on the guard band.
pub fn quon_partner_expectations(sys: &QuonSystem, direction: Direction, tol: &Tolerances) -> Result<QuonPartnerReport> {
    tol.validate_for(sys.dim)?;
    let d = sys.dim;
    let k = tol.band(d);
    let id = Matrix::identity(d);
    let (x, expected, lo) = match direction {
        Direction::Raise => (sys.b.adjoint(), &sys.h1.scale_re(sys.q) + &id, 0),
        Direction::Lower => {
            if sys.q <= tol.rank_tol {
                return Err(Error::QOutOfRange(sys.q));
            }
            (sys.b.clone(), (&sys.h1 - &id).scale_re(1.0 / sys.q), 1)
        }
    };
    let pair = build_partners(&sys.h1, &x, tol)?;
    let block_residual = (&pair.theta2 - &expected).compress_range(lo, k).norm();
    let n2_block_invertible = inverse(&pair.n2.sub_block(lo, k), tol).is_ok();
    let n2_full_invertible = inverse(&pair.n2, tol).is_ok();
    let scale = expected.compress_range(lo, k).norm().max(1.0);
    let structural = match direction {
        Direction::Raise => n2_block_invertible,
        Direction::Lower => !n2_full_invertible && pair.mode == PartnerMode::BetaPseudoinverse,
    };
    Ok(QuonPartnerReport {
        direction,
        mode: pair.mode,
        block_residual,
        relative_residual: block_residual / scale,
        n2_block_invertible,
        n2_full_invertible,
        pass: structural && block_residual <= tol.residual_tol * scale,
    })
}

#[derive(Clone, Debug)]
pub struct PseudoBosonSystem {
    pub basis: RieszBasis,
    /// Frame operator `S = T T†`.
    pub s: Matrix,
    /// `S^{1/2} A S^{-1/2}`.
    pub lower_a: Matrix,
    /// `S^{1/2} A† S^{-1/2}`.
    pub raise_b: Matrix,
    /// `b a`.
    pub theta1: Matrix,
    /// `a† b†`.
    pub theta2: Matrix,
    /// `φ_n⁽¹⁾ = bⁿ φ_0 / √(n!)`, `φ_0 = T e_0`.
    pub f1: EigenFamily,
    /// `φ_n⁽²⁾ = (a†)ⁿ S⁻¹ φ_0 / √(n!)`.
    pub f2: EigenFamily,
}

/// Pseudo-bosons from the Riesz basis `{t e_n}`: `A` lowers the
/// orthonormalized basis `S^{-1/2} φ_n`, and `a`, `b` are its conjugates
/// by `S^{±1/2}`.
pub fn make_pseudoboson(t: &Matrix, tol: &Tolerances) -> Result<PseudoBosonSystem> {
    let d = t.dim();
    check_dim(d)?;
    if d > MAX_PSEUDOBOSON_DIM {
        return Err(Error::InvalidDimension { dim: d, reason: "pseudo-boson systems are capped at d = 34" });
    }
    let basis = build_riesz(t, tol)?;
    let s = basis.frame_op.clone();
    let s_half = sqrt_positive(&s, tol)?;
    let s_half_inv = inverse(&s_half, tol)?;
    let hatted: Vec<Vector> = basis.vectors.iter().map(|v| s_half_inv.apply(v)).collect();
    let mut big_a = Matrix::zeros(d);
    for n in 1..d {
        let term = crate::linalg::outer(&hatted[n - 1], &hatted[n]).scale_re((n as f64).sqrt());
        big_a = &big_a + &term;
    }
    let lower_a = &(&s_half * &big_a) * &s_half_inv;
    let raise_b = &(&s_half * &big_a.adjoint()) * &s_half_inv;
    let theta1 = &raise_b * &lower_a;
    let theta2 = &lower_a.adjoint() * &raise_b.adjoint();

    let s_inv = inverse(&s, tol)?;
    let a_dag = lower_a.adjoint();
    let mut v1 = vec![basis.vectors[0].clone()];
    let mut v2 = vec![s_inv.apply(&basis.vectors[0])];
    for n in 1..d {
        let k = re((n as f64).sqrt());
        v1.push(raise_b.apply(&v1[n - 1]) / k);
        v2.push(a_dag.apply(&v2[n - 1]) / k);
    }
    let eps: Vec<C64> = (0..d).map(|n| re(n as f64)).collect();
    let f1 = EigenFamily::sequential(v1, eps.clone())?;
    let f2 = EigenFamily::sequential(v2, eps)?;
    Ok(PseudoBosonSystem { basis, s, lower_a, raise_b, theta1, theta2, f1, f2 })
}

impl PseudoBosonSystem {
    pub fn dim(&self) -> usize {
        self.s.dim()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoBosonReport {
    /// Residuals that decide `pass`, keyed by check name.
    pub residuals: BTreeMap<&'static str, f64>,
    /// `‖[θ1, S⁻²]‖`, relative; nonzero means the no-go hypothesis fails.
    pub nogo_hypothesis_defect: f64,
    /// `‖θ2 − θ1‖ / ‖θ1‖`.
    pub theta_distance: f64,
    /// Largest distance from `n < d − guard` to the nearest eigenvalue of `θ1`.
    pub spectrum_gap: f64,
    pub theta1_eigenvalues: Vec<C64>,
    pub pass: bool,
}

fn max_relative(items: impl Iterator<Item = (Vector, f64)>) -> f64 {
    items.map(|(r, s)| r.norm() / s).fold(0.0, f64::max)
}

pub fn pseudoboson_verify(sys: &PseudoBosonSystem, tol: &Tolerances) -> Result<PseudoBosonReport> {
    let d = sys.dim();
    tol.validate_for(d)?;
    let k = tol.band(d);
    let (a, b) = (&sys.lower_a, &sys.raise_b);
    let v1 = sys.f1.vectors();
    let v2 = sys.f2.vectors();
    let ccr = &(&(a * b) - &(b * a)) - &Matrix::identity(d);
    let (an, bn) = (a.norm(), b.norm());
    let (t1n, t2n) = (sys.theta1.norm(), sys.theta2.norm());

    let mut res = BTreeMap::new();
    res.insert("ccr_block", max_relative((0..k).map(|n| (ccr.apply(&v1[n]), an * bn * v1[n].norm()))));
    res.insert("theta2_minus_theta1_adjoint", distance(&sys.theta2, &sys.theta1.adjoint()));
    res.insert(
        "theta1_s_minus_s_theta2",
        relative(&(&(&sys.theta1 * &sys.s) - &(&sys.s * &sys.theta2)), t1n * sys.s.norm()),
    );
    let s_inv = inverse(&sys.s, tol)?;
    res.insert("pseudo_hermiticity", pseudo_hermiticity_check(&sys.theta1, &s_inv, tol)?.residual);
    res.insert("biorthogonality", biorthogonality_defect(v1, v2));
    res.insert(
        "lower_action",
        max_relative((0..k).map(|n| {
            let prev = if n == 0 { Vector::zeros(d) } else { &v1[n - 1] * re((n as f64).sqrt()) };
            (a.apply(&v1[n]) - prev, an * v1[n].norm())
        })),
    );
    res.insert(
        "raise_action",
        max_relative((0..k).map(|n| {
            (b.apply(&v1[n]) - &v1[n + 1] * re(((n + 1) as f64).sqrt()), bn * v1[n].norm())
        })),
    );
    res.insert(
        "theta1_eigen",
        max_relative((0..k).map(|n| (sys.theta1.apply(&v1[n]) - &v1[n] * re(n as f64), t1n * v1[n].norm()))),
    );
    res.insert(
        "theta2_eigen",
        max_relative((0..k).map(|n| (sys.theta2.apply(&v2[n]) - &v2[n] * re(n as f64), t2n * v2[n].norm()))),
    );
    res.insert(
        "f2_equals_s_inv_f1",
        max_relative((0..d).map(|n| (&v2[n] - s_inv.apply(&v1[n]), v2[n].norm()))),
    );

    let eig = eig_general(&sys.theta1, tol)?;
    let spectrum_gap = (0..k)
        .map(|n| {
            eig.eigenvalues
                .iter()
                .map(|l| (l - re(n as f64)).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let s_inv2 = &s_inv * &s_inv;
    let pass = res.values().all(|r| *r <= tol.residual_tol);
    Ok(PseudoBosonReport {
        residuals: res,
        nogo_hypothesis_defect: commutator_defect(&sys.theta1, &s_inv2)?,
        theta_distance: distance(&sys.theta2, &sys.theta1),
        spectrum_gap,
        theta1_eigenvalues: eig.eigenvalues,
        pass,
    })
}
