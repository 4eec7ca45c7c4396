//! Dense complex matrix primitives and spectral kernels.
//!
//! Every operator in the crate is a [`Matrix`]: a square, finite, complex
//! matrix of truncation dimension `d`. The Hermitian eigensolver and the
//! complex Schur form come from `nalgebra`; singular values use a one-sided
//! Jacobi sweep, which stays accurate on rank-deficient complex input. This
//! module adds the relative-rank discipline, eigenvector back-substitution,
//! phase normalization and the JSON interchange format.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Named numerical thresholds shared by every check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff: `sigma <= rank_tol * sigma_max` counts as zero.
    pub rank_tol: f64,
    /// Relative commutator norm accepted as "commuting".
    pub commute_tol: f64,
    /// Relative residual accepted for identities and eigenpairs.
    pub residual_tol: f64,
    /// Number of top levels excluded from ladder-operator identities.
    pub guard: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            commute_tol: 1e-9,
            residual_tol: 1e-9,
            guard: 2,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("commute_tol", self.commute_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerance(format!("{name} must be positive, got {v}")));
            }
        }
        if self.guard == 0 {
            return Err(Error::InvalidTolerance("guard must be at least 1".into()));
        }
        Ok(())
    }

    /// Validates the tolerances against a truncation dimension (`guard < d`).
    pub fn validate_for(&self, dim: usize) -> Result<()> {
        self.validate()?;
        if self.guard >= dim {
            return Err(Error::InvalidTolerance(format!(
                "guard {} must be smaller than dimension {dim}",
                self.guard
            )));
        }
        Ok(())
    }

    /// Size of the leading block on which truncated ladder identities are asserted.
    pub fn band(&self, dim: usize) -> usize {
        dim.saturating_sub(self.guard)
    }
}

/// Square complex matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Matrix(DMatrix<C64>);

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{}){}", self.dim(), self.dim(), self.0)
    }
}

impl Matrix {
    /// Wraps a nalgebra matrix, checking squareness and finiteness.
    pub fn from_inner(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self(m))
    }

    // Results of arithmetic on valid matrices stay square.
    fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::wrap(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::wrap(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().copied().map(re).collect();
        Self::from_diagonal(&d)
    }

    /// Square matrix whose columns are `cols`.
    pub fn from_columns(cols: &[Vector]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidMatrix("no columns".into()));
        }
        let d = cols[0].len();
        if cols.len() != d || cols.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidMatrix("columns do not form a square matrix".into()));
        }
        Self::from_inner(DMatrix::from_columns(cols))
    }

    /// Row-major entries, as stored in the JSON interchange format.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_inner(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn column(&self, j: usize) -> Vector {
        self.0.column(j).into_owned()
    }

    pub fn columns(&self) -> Vec<Vector> {
        (0..self.dim()).map(|j| self.column(j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::wrap(&self.0 * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// Spectral norm (largest singular value).
    pub fn norm(&self) -> f64 {
        singular_values(&self.0).first().copied().unwrap_or(0.0)
    }

    pub fn fro_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> Self {
        let k = k.min(self.dim());
        Self::wrap(self.0.view((0, 0), (k, k)).into_owned())
    }

    /// Square block on rows and columns `lo..hi`.
    pub fn sub_block(&self, lo: usize, hi: usize) -> Self {
        let hi = hi.min(self.dim());
        Self::wrap(self.0.view((lo, lo), (hi - lo, hi - lo)).into_owned())
    }

    /// `P M P` where `P` projects on `span{e_lo, ..., e_{hi-1}}`.
    pub fn compress_range(&self, lo: usize, hi: usize) -> Self {
        let d = self.dim();
        Self::from_fn(d, |i, j| {
            if (lo..hi).contains(&i) && (lo..hi).contains(&j) {
                self.0[(i, j)]
            } else {
                ZERO
            }
        })
    }

    /// `‖M − M†‖ / ‖M‖`, zero for the zero matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        relative(&(self - &self.adjoint()), self.norm())
    }

    pub fn matrix_power(&self, n: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Evaluates `sum_k coeffs[k] M^k` by Horner's rule.
    pub fn polynomial(&self, coeffs: &[C64]) -> Self {
        let d = self.dim();
        let mut acc = Self::zeros(d);
        for &c in coeffs.iter().rev() {
            acc = &(&acc * self) + &Self::identity(d).scale(c);
        }
        acc
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from(self.clone())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("matrix json serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: MatrixJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }
}

/// `‖a‖ / scale`, or the absolute norm when `scale` vanishes.
pub fn relative(a: &Matrix, scale: f64) -> f64 {
    let n = a.norm();
    if scale > 0.0 {
        n / scale
    } else {
        n
    }
}

/// Relative spectral-norm distance `‖a − b‖ / max(‖a‖, ‖b‖)`.
pub fn distance(a: &Matrix, b: &Matrix) -> f64 {
    relative(&(a - b), a.norm().max(b.norm()))
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Matrix> for &Matrix {
            type Output = Matrix;
            fn $f(self, rhs: &Matrix) -> Matrix {
                Matrix::wrap(&self.0 $op &rhs.0)
            }
        }
        impl $tr<Matrix> for Matrix {
            type Output = Matrix;
            fn $f(self, rhs: Matrix) -> Matrix {
                Matrix::wrap(self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix::wrap(-&self.0)
    }
}

/// JSON interchange form: `{"dim": d, "entries": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<Matrix> for MatrixJson {
    fn from(m: Matrix) -> Self {
        let d = m.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = m.0[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self { dim: d, entries }
    }
}

impl TryFrom<MatrixJson> for Matrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.dim == 0 {
            return Err(Error::Parse("dim must be positive".into()));
        }
        let entries: Vec<C64> = j.entries.iter().map(|[a, b]| C64::new(*a, *b)).collect();
        Matrix::from_row_major(j.dim, &entries).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn check_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

pub fn adjoint(m: &Matrix) -> Matrix {
    m.adjoint()
}

pub fn multiply(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_dims(a, b)?;
    Ok(a * b)
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_dims(a, b)?;
    Ok(&(a * b) - &(b * a))
}

/// `‖[a, b]‖ / (‖a‖ ‖b‖)`.
pub fn commutator_defect(a: &Matrix, b: &Matrix) -> Result<f64> {
    let c = commutator(a, b)?;
    Ok(relative(&c, a.norm() * b.norm()))
}

/// Thin singular value decomposition `M = U diag(s) V†`.
///
/// `s` is sorted descending, `V` is a full unitary and the columns of `U`
/// belonging to zero singular values are zero.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<C64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<C64>,
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }
}

/// One-sided (Hestenes) Jacobi SVD. Wide input is padded with zero rows.
pub fn svd(m: &DMatrix<C64>) -> Svd {
    let (rows, cols) = m.shape();
    let mut a = DMatrix::<C64>::zeros(rows.max(cols), cols);
    a.view_mut((0, 0), (rows, cols)).copy_from(m);
    let mut v = DMatrix::<C64>::identity(cols, cols);
    let eps = f64::EPSILON * (rows.max(cols) as f64);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * c - xq * sn;
                        mat[(i, q)] = xp * sn + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::<C64>::zeros(rows, cols);
    let mut vs = DMatrix::<C64>::zeros(cols, cols);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            let col = a.view((0, j), (rows, 1)) / re(norms[j]);
            u.set_column(k, &col.column(0));
        }
        vs.set_column(k, &v.column(j));
    }
    Svd { u, singular_values: order.iter().map(|&j| norms[j]).collect(), v: vs }
}

/// Singular values in descending order; works for rectangular input.
pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    svd(m).singular_values
}

/// Numerical rank under the relative cutoff `sigma > rank_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<C64>, tol: &Tolerances) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol.rank_tol * smax).count()
}

/// `sigma_max / sigma_min`; infinite for singular input.
pub fn condition_number(m: &Matrix) -> f64 {
    let s = singular_values(m.inner());
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn inverse(m: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let dec = svd(&m.0);
    let (smax, smin) = (dec.max(), dec.min());
    if smax == 0.0 || smin <= tol.rank_tol * smax {
        let ratio = if smax == 0.0 { 0.0 } else { smin / smax };
        return Err(Error::Singular { ratio });
    }
    let sinv: Vec<C64> = dec.singular_values.iter().map(|x| re(1.0 / x)).collect();
    Ok(Matrix::wrap(&dec.v * DMatrix::from_diagonal(&Vector::from_vec(sinv)) * dec.u.adjoint()))
}

pub fn pseudo_inverse(m: &Matrix, tol: &Tolerances) -> Matrix {
    let dec = svd(&m.0);
    let cutoff = tol.rank_tol * dec.max();
    let sinv: Vec<C64> = dec
        .singular_values
        .iter()
        .map(|&x| if x > cutoff && x > 0.0 { re(1.0 / x) } else { ZERO })
        .collect();
    Matrix::wrap(&dec.v * DMatrix::from_diagonal(&Vector::from_vec(sinv)) * dec.u.adjoint())
}

/// Orthonormal basis of the numerical nullspace (`sigma <= rank_tol * sigma_max`).
pub fn kernel_basis(m: &Matrix, tol: &Tolerances) -> Vec<Vector> {
    let dec = svd(&m.0);
    let s = &dec.singular_values;
    let cutoff = tol.rank_tol * dec.max();
    (0..s.len())
        .filter(|&i| s[i] <= cutoff)
        .map(|i| {
            let mut v: Vector = dec.v.column(i).into_owned();
            fix_phase(&mut v);
            v
        })
        .collect()
}

/// Scales `v` so that its largest-modulus entry is real and positive.
pub fn fix_phase(v: &mut Vector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    // first entry within round-off of the maximum, so ties resolve by index
    let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).copied().unwrap();
    let phase = pivot.conj() / pivot.norm();
    *v *= phase;
}

#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, one per eigenvalue.
    pub eigenvectors: Vec<Vector>,
}

impl HermitianEigenSystem {
    /// `sum_n lambda_n |v_n><v_n|`.
    pub fn reconstruct(&self) -> Matrix {
        let d = self.eigenvectors[0].len();
        let mut m = DMatrix::zeros(d, d);
        for (l, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m += v * v.adjoint() * re(*l);
        }
        Matrix::wrap(m)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

pub fn eig_hermitian(m: &Matrix, tol: &Tolerances) -> Result<HermitianEigenSystem> {
    let defect = m.hermiticity_defect();
    if defect > tol.commute_tol {
        return Err(Error::NotHermitian { defect });
    }
    let sym = (&m.0 + m.0.adjoint()) * re(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::ConvergenceFailure)?;
    let mut pairs: Vec<(f64, Vector)> = (0..m.dim())
        .map(|i| {
            let mut v: Vector = eig.eigenvectors.column(i).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Ok(HermitianEigenSystem { eigenvalues, eigenvectors })
}

#[derive(Clone, Debug)]
pub struct GeneralEigenSystem {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors.
    pub eigenvectors: Vec<Vector>,
    /// `‖M v − λ v‖` per pair.
    pub residuals: Vec<f64>,
    /// Groups of indices whose eigenvalues coincide within `rank_tol * spectral radius`.
    pub clusters: Vec<Vec<usize>>,
}

impl GeneralEigenSystem {
    pub fn is_degenerate(&self) -> bool {
        !self.clusters.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn eig_general(m: &Matrix, tol: &Tolerances) -> Result<GeneralEigenSystem> {
    let d = m.dim();
    let schur = Schur::try_new(m.0.clone(), f64::EPSILON, 100 * d.max(10))
        .ok_or(Error::ConvergenceFailure)?;
    let (q, t) = schur.unpack();
    let tnorm = t.norm().max(f64::MIN_POSITIVE);
    for j in 0..d {
        for i in (j + 1)..d {
            if t[(i, j)].norm() > 1e3 * f64::EPSILON * tnorm {
                return Err(Error::ConvergenceFailure);
            }
        }
    }
    let small = f64::EPSILON * tnorm;
    let mut pairs: Vec<(C64, Vector)> = Vec::with_capacity(d);
    for k in 0..d {
        let lambda = t[(k, k)];
        // back-substitution on the triangular factor: (T − λ I) y = 0 with y_k = 1
        let mut y = Vector::zeros(d);
        y[k] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = re(small);
            }
            y[i] = -s / denom;
        }
        let mut v = &q * y;
        let n = v.norm();
        v /= re(n);
        fix_phase(&mut v);
        pairs.push((lambda, v));
    }
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let residuals = pairs
        .iter()
        .map(|(l, v)| (m.apply(v) - v * *l).norm())
        .collect();
    let (eigenvalues, eigenvectors): (Vec<C64>, Vec<Vector>) = pairs.into_iter().unzip();
    let radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let clusters = cluster(&eigenvalues, tol.rank_tol * radius);
    Ok(GeneralEigenSystem { eigenvalues, eigenvectors, residuals, clusters })
}

/// Connected components of the "within `thresh`" relation, singletons dropped.
fn cluster(values: &[C64], thresh: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= thresh {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = root(&mut label, i);
        match groups.iter_mut().find(|g| g[0] == r) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups.retain(|g| g.len() > 1);
    groups
}

/// Positive semidefinite square root of a Hermitian matrix.
pub fn sqrt_positive(m: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let eig = eig_hermitian(m, tol)?;
    let floor = -tol.rank_tol * m.norm();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < floor) {
        return Err(Error::NegativeEigenvalue { value: bad });
    }
    let d = m.dim();
    let mut out = DMatrix::zeros(d, d);
    for (l, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        out += v * v.adjoint() * re(l.max(0.0).sqrt());
    }
    Ok(Matrix::wrap(out))
}

/// `<a, b>`, conjugate-linear in the first slot.
pub fn inner(a: &Vector, b: &Vector) -> C64 {
    a.dotc(b)
}

/// Column matrix (possibly rectangular) built from `vectors`.
pub fn column_matrix(vectors: &[Vector]) -> DMatrix<C64> {
    DMatrix::from_columns(vectors)
}

/// `|a><b|`.
pub fn outer(a: &Vector, b: &Vector) -> Matrix {
    Matrix::wrap(a * b.adjoint())
}

/// Canonical basis vector `e_n` of dimension `dim`.
pub fn basis_vector(dim: usize, n: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[n] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ladder(d: usize) -> Matrix {
        Matrix::from_fn(d, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { ZERO })
    }

    fn deterministic(d: usize, seed: u64) -> Matrix {
        // cheap LCG fill, independent of the crate's rng module
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        Matrix::from_fn(d, |_, _| C64::new(next(), next()))
    }

    fn recompose(dec: &Svd) -> DMatrix<C64> {
        let s: Vec<C64> = dec.singular_values.iter().map(|x| re(*x)).collect();
        &dec.u * DMatrix::from_diagonal(&Vector::from_vec(s)) * dec.v.adjoint()
    }

    #[test]
    fn svd_reconstructs_rank_deficient_hermitian() {
        // B B† with B of rank 3: Hermitian PSD with a 3-dimensional kernel
        let b = deterministic(6, 41);
        let mask = Matrix::from_real_diagonal(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let bm = &b * &mask;
        let n = &bm * &bm.adjoint();
        let dec = svd(n.inner());
        assert!((recompose(&dec) - n.inner()).norm() < 1e-13 * n.norm());
        assert!(dec.singular_values[3] < 1e-14 * dec.max());
        let vv = dec.v.adjoint() * &dec.v;
        assert!((vv - DMatrix::<C64>::identity(6, 6)).norm() < 1e-13);
    }

    #[test]
    fn svd_rectangular() {
        let m = deterministic(5, 42).into_inner();
        let tall = m.columns(0, 3).into_owned();
        let wide = m.rows(0, 2).into_owned();
        for a in [tall, wide] {
            let dec = svd(&a);
            assert!((recompose(&dec) - &a).norm() < 1e-13);
            assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn adjoint_examples() {
        let m = Matrix::from_row_major(2, &[ZERO, ONE, ZERO, ZERO]).unwrap();
        assert_eq!(adjoint(&m), Matrix::from_row_major(2, &[ZERO, ZERO, ONE, ZERO]).unwrap());
        let m = Matrix::from_diagonal(&[C64::i(), ZERO]);
        assert_eq!(adjoint(&m), Matrix::from_diagonal(&[-C64::i(), ZERO]));
        let r = deterministic(5, 3);
        assert_eq!(adjoint(&adjoint(&r)), r);
    }

    #[test]
    fn adjoint_reverses_products() {
        let (a, b) = (deterministic(4, 1), deterministic(4, 2));
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        assert!(distance(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn commutator_examples() {
        let m = deterministic(4, 9);
        assert_eq!(commutator(&m, &m).unwrap().max_abs(), 0.0);
        let c = commutator(&Matrix::from_real_diagonal(&[1., 2.]), &Matrix::from_real_diagonal(&[3., 4.])).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        assert!(matches!(
            commutator(&Matrix::identity(2), &Matrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ladder_commutator_is_identity_on_leading_block() {
        let a = ladder(6);
        let c = commutator(&a, &a.adjoint()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j && i < 5 { 1.0 } else if i == 5 && j == 5 { -5.0 } else { 0.0 };
                assert_abs_diff_eq!(c.get(i, j).re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(c.get(i, j).im, 0.0);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let t = tol();
        assert!(distance(&inverse(&Matrix::identity(3), &t).unwrap(), &Matrix::identity(3)) < 1e-15);
        let inv = inverse(&Matrix::from_real_diagonal(&[1., 2.]), &t).unwrap();
        assert!(distance(&inv, &Matrix::from_real_diagonal(&[1., 0.5])) < 1e-15);
        assert!(matches!(
            inverse(&Matrix::from_real_diagonal(&[1., 1e-14]), &t),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn pseudo_inverse_examples() {
        let t = tol();
        let p = pseudo_inverse(&Matrix::from_real_diagonal(&[0., 1., 2.]), &t);
        assert!(distance(&p, &Matrix::from_real_diagonal(&[0., 1., 0.5])) < 1e-15);
        let m = deterministic(5, 4);
        assert!(distance(&pseudo_inverse(&m, &t), &inverse(&m, &t).unwrap()) < t.residual_tol);
    }

    #[test]
    fn penrose_identities_rank_three() {
        let t = tol();
        let l = deterministic(5, 31).into_inner().columns(0, 3).into_owned();
        let r = deterministic(5, 32).into_inner().rows(0, 3).into_owned();
        let m = Matrix::from_inner(l * r).unwrap();
        assert_eq!(numerical_rank(m.inner(), &t), 3);
        let p = pseudo_inverse(&m, &t);
        assert!(relative(&(&(&m * &p) * &m - m.clone()), m.norm()) < 1e-10);
        assert!(relative(&(&(&p * &m) * &p - p.clone()), p.norm()) < 1e-10);
        assert!((&m * &p).hermiticity_defect() < 1e-10);
        assert!((&p * &m).hermiticity_defect() < 1e-10);
    }

    #[test]
    fn hermitian_examples() {
        let t = tol();
        let e = eig_hermitian(&Matrix::from_row_major(2, &[ZERO, ONE, ONE, ZERO]).unwrap(), &t).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
        let e = eig_hermitian(&Matrix::from_real_diagonal(&[3., 1., 2.]), &t).unwrap();
        assert_eq!(e.eigenvalues, vec![1., 2., 3.]);
        let a = ladder(10);
        let e = eig_hermitian(&(&a.adjoint() * &a), &t).unwrap();
        for (n, l) in e.eigenvalues.iter().enumerate() {
            assert_abs_diff_eq!(*l, n as f64, epsilon = 1e-10);
        }
        assert!(matches!(eig_hermitian(&ladder(3), &t), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn hermitian_reconstruction() {
        let r = deterministic(6, 11);
        let h = &r + &r.adjoint();
        let e = eig_hermitian(&h, &tol()).unwrap();
        assert!(distance(&e.reconstruct(), &h) < 1e-13);
        for i in 0..6 {
            for j in 0..6 {
                let g = inner(&e.eigenvectors[i], &e.eigenvectors[j]);
                assert_abs_diff_eq!(g.norm(), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn general_examples() {
        let t = tol();
        let e = eig_general(&Matrix::from_diagonal(&[C64::new(1., 2.), re(3.)]), &t).unwrap();
        assert!((e.eigenvalues[0] - C64::new(1., 2.)).norm() < 1e-14);
        assert!((e.eigenvalues[1] - re(3.)).norm() < 1e-14);
        assert!(!e.is_degenerate());

        let jordan = Matrix::from_row_major(2, &[ONE, ONE, ZERO, ONE]).unwrap();
        let e = eig_general(&jordan, &t).unwrap();
        assert!(e.eigenvalues.iter().all(|z| (z - ONE).norm() < 1e-12));
        assert_eq!(e.clusters, vec![vec![0, 1]]);
    }

    #[test]
    fn general_residuals_on_random_matrix() {
        let m = deterministic(9, 21);
        let e = eig_general(&m, &tol()).unwrap();
        assert!(e.max_residual() < 1e-12 * m.norm());
        let trace: C64 = e.eigenvalues.iter().sum();
        assert!((trace - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn sqrt_examples() {
        let t = tol();
        let r = sqrt_positive(&Matrix::from_real_diagonal(&[4., 9.]), &t).unwrap();
        assert!(distance(&r, &Matrix::from_real_diagonal(&[2., 3.])) < 1e-15);
        assert!(distance(&sqrt_positive(&Matrix::identity(4), &t).unwrap(), &Matrix::identity(4)) < 1e-15);
        let tt = deterministic(8, 5);
        let s = &tt * &tt.adjoint();
        let root = sqrt_positive(&s, &t).unwrap();
        assert!((&root * &root - s.clone()).max_abs() < 1e-10);
        assert!(matches!(
            sqrt_positive(&Matrix::from_real_diagonal(&[1., -1.]), &t),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn kernel_examples() {
        let t = tol();
        assert!(kernel_basis(&Matrix::identity(3), &t).is_empty());
        let k = kernel_basis(&Matrix::from_real_diagonal(&[0., 1.]), &t);
        assert_eq!(k.len(), 1);
        assert!((&k[0] - basis_vector(2, 0)).norm() < 1e-15);
        let k = kernel_basis(&ladder(8), &t);
        assert_eq!(k.len(), 1);
        assert!((&k[0] - basis_vector(8, 0)).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = deterministic(3, 7);
        let back = Matrix::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back, m);
        assert!(Matrix::from_json_str(r#"{"dim":2,"entries":[[1,0]]}"#).is_err());
        assert!(Matrix::from_json_str(r#"{"dim":0,"entries":[]}"#).is_err());
        assert!(Matrix::from_json_str("not json").is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerances::default().validate_for(3).is_ok());
        assert!(Tolerances::default().validate_for(2).is_err());
        let bad = Tolerances { residual_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
