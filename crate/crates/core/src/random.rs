//! Seeded generators for random test instances.
//!
//! All randomness flows through [`InstanceRng`], a ChaCha20 stream seeded
//! from a `u64`, so any instance is reproducible from its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{re, Matrix, Vector, C64};

/// Name recorded in reports next to the seed.
pub const GENERATOR_NAME: &str = "ChaCha20Rng";

pub struct InstanceRng(ChaCha20Rng);

impl InstanceRng {
    pub fn seed(seed: u64) -> Self {
        Self(ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.0.gen_bool(0.5)
    }

    pub fn gaussian(&mut self) -> C64 {
        let a: f64 = self.0.sample(StandardNormal);
        let b: f64 = self.0.sample(StandardNormal);
        C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Complex Ginibre matrix (i.i.d. standard complex Gaussian entries).
    pub fn ginibre(&mut self, dim: usize) -> Matrix {
        Matrix::from_fn(dim, |_, _| self.gaussian())
    }

    pub fn unit_vector(&mut self, dim: usize) -> Vector {
        let v = Vector::from_fn(dim, |_, _| self.gaussian());
        let n = v.norm();
        v / re(n)
    }

    /// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
    pub fn unitary(&mut self, dim: usize) -> Matrix {
        let g = self.ginibre(dim).into_inner();
        let qr = g.qr();
        let (mut q, r) = qr.unpack();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            let mut col = q.column_mut(j);
            col *= phase;
        }
        Matrix::from_inner(q).expect("unitary is square")
    }

    /// Sorted values in `[lo, hi]` with pairwise gaps of at least `min_gap`.
    pub fn separated_values(&mut self, n: usize, lo: f64, hi: f64, min_gap: f64) -> Vec<f64> {
        assert!(min_gap * (n as f64) < hi - lo, "interval too small for requested gap");
        let slack = (hi - lo) - min_gap * (n.saturating_sub(1) as f64);
        let mut cuts: Vec<f64> = (0..n).map(|_| self.uniform(0.0, slack)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.iter().enumerate().map(|(i, c)| lo + c + min_gap * i as f64).collect()
    }

    /// Hermitian `U diag(values) U†` with Haar `U`.
    pub fn hermitian_with_spectrum(&mut self, values: &[f64]) -> Matrix {
        let u = self.unitary(values.len());
        &(&u * &Matrix::from_real_diagonal(values)) * &u.adjoint()
    }

    /// `U diag(sigma) V†` with singular values spread over `[1, kappa]`,
    /// both endpoints attained, so the condition number is exactly `kappa`.
    pub fn with_condition(&mut self, dim: usize, kappa: f64) -> (Matrix, Vec<f64>) {
        let mut sigma: Vec<f64> = (0..dim)
            .map(|i| match i {
                0 => kappa,
                _ if i == dim - 1 => 1.0,
                _ => self.uniform(1.0, kappa),
            })
            .collect();
        sigma.sort_by(|a, b| b.total_cmp(a));
        let u = self.unitary(dim);
        let v = self.unitary(dim);
        let t = &(&u * &Matrix::from_real_diagonal(&sigma)) * &v.adjoint();
        (t, sigma)
    }

    /// Random matrix of exact rank `rank`.
    pub fn rank_deficient(&mut self, dim: usize, rank: usize) -> Matrix {
        let mut s = vec![0.0; dim];
        for v in s.iter_mut().take(rank) {
            *v = self.uniform(1.0, 3.0);
        }
        let u = self.unitary(dim);
        let v = self.unitary(dim);
        &(&u * &Matrix::from_real_diagonal(&s)) * &v.adjoint()
    }
}

/// Random Riesz generator with condition number at most `kappa` (the cap
/// keeps biorthogonality residuals meaningful in double precision).
pub fn riesz_generator(rng: &mut InstanceRng, dim: usize, kappa: f64) -> Matrix {
    rng.with_condition(dim, kappa).0
}

/// An instance satisfying `[N1, theta1] = 0` by construction: a Hermitian
/// `H` with separated spectrum, `theta1 = p(H)` and `x = q(H) W` with `W`
/// unitary and `q` nonvanishing on the spectrum, so `N1 = |q(H)|^2`.
#[derive(Clone, Debug)]
pub struct CommutingInstance {
    pub h: Matrix,
    pub theta1: Matrix,
    pub x: Matrix,
    pub hermitian_theta: bool,
}

pub fn commuting_instance(rng: &mut InstanceRng, dim: usize, hermitian: bool) -> CommutingInstance {
    let spectrum = rng.separated_values(dim, -2.0, 2.0, (2.0 / dim as f64).min(0.2));
    let h = rng.hermitian_with_spectrum(&spectrum);
    let coeff = |rng: &mut InstanceRng| {
        if hermitian {
            re(rng.uniform(-1.0, 1.0))
        } else {
            C64::new(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 1.0))
        }
    };
    let p: Vec<C64> = (0..3).map(|_| coeff(rng)).collect();
    let theta1 = h.polynomial(&p);
    // q(H) = c0 + c1 H with |c0| > 2|c1| stays away from zero on [-2, 2]
    let c1 = rng.uniform(-0.4, 0.4);
    let c0 = rng.uniform(1.0, 2.0);
    let qh = h.polynomial(&[re(c0), re(c1)]);
    let w = rng.unitary(dim);
    CommutingInstance { x: &qh * &w, h, theta1, hermitian_theta: hermitian }
}

/// `theta1 = U diag(eps) U†` and `x = U diag(s) U† W` with `s` vanishing
/// exactly on `kernel`, so `x† u_n = 0` iff `n ∈ kernel`.
#[derive(Clone, Debug)]
pub struct KernelInstance {
    pub theta1: Matrix,
    pub x: Matrix,
    pub eigenvectors: Vec<Vector>,
    pub eigenvalues: Vec<C64>,
}

pub fn kernel_instance(rng: &mut InstanceRng, dim: usize, kernel: &[usize]) -> KernelInstance {
    let u = rng.unitary(dim);
    let w = rng.unitary(dim);
    let eps: Vec<C64> = (0..dim).map(|n| C64::new(n as f64, rng.uniform(-1.0, 1.0))).collect();
    let s: Vec<f64> = (0..dim)
        .map(|n| if kernel.contains(&n) { 0.0 } else { rng.uniform(0.5, 2.0) })
        .collect();
    let theta1 = &(&u * &Matrix::from_diagonal(&eps)) * &u.adjoint();
    let x = &(&(&u * &Matrix::from_real_diagonal(&s)) * &u.adjoint()) * &w;
    KernelInstance { theta1, x, eigenvectors: u.columns(), eigenvalues: eps }
}

/// Random kernel of size `0..dim`, sorted.
pub fn random_kernel(rng: &mut InstanceRng, dim: usize) -> Vec<usize> {
    (0..dim).filter(|_| rng.uniform(0.0, 1.0) < 0.3).collect()
}

/// `T = U D` with `U` unitary and `D` positive diagonal with separated
/// entries, so each `T e_n` is an eigenvector of `S = T T†`.
pub fn aligned_riesz_generator(rng: &mut InstanceRng, dim: usize) -> Matrix {
    let u = rng.unitary(dim);
    let d = rng.separated_values(dim, 0.5, 3.0, 1.0 / dim as f64);
    &u * &Matrix::from_real_diagonal(&d)
}
