//! Dense complex vectors and Hermitian matrices.
//!
//! Every beamformer, channel and covariance in the crate lives in one of the
//! two types below. Hermitian matrices are stored in full and re-symmetrized
//! on construction so that `A == A^H` holds bit-for-bit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance used when checking that caller-supplied data is Hermitian.
const HERMITIAN_TOL: f64 = 1e-10;

/// Matrices whose smallest eigenvalue is below `-PSD_TOL * trace` are
/// treated as indefinite by the rank-one helpers.
pub const PSD_TOL: f64 = 1e-8;

/// A finite, non-empty complex column vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ComplexVector(DVector<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(entries))
    }

    pub fn from_dvector(v: DVector<C64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidInput("vector must have length >= 1".into()));
        }
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        Ok(Self(v))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector length must be >= 1");
        Self(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Conjugate inner product `self^H other`.
    pub fn dot(&self, other: &ComplexVector) -> C64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        self.0.dotc(&other.0)
    }

    pub fn scale(&self, factor: C64) -> ComplexVector {
        Self(&self.0 * factor)
    }

    /// The rank-one Hermitian matrix `v v^H`.
    pub fn outer(&self) -> HermitianMatrix {
        HermitianMatrix::from_raw(&self.0 * self.0.adjoint())
    }
}

impl TryFrom<Vec<[f64; 2]>> for ComplexVector {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl From<ComplexVector> for Vec<[f64; 2]> {
    fn from(v: ComplexVector) -> Self {
        v.0.iter().map(|c| [c.re, c.im]).collect()
    }
}

/// Dense N×N complex Hermitian matrix. Serialized as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct HermitianMatrix(DMatrix<C64>);

impl TryFrom<Vec<Vec<[f64; 2]>>> for HermitianMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix rows must all have length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }
}

impl From<HermitianMatrix> for Vec<Vec<[f64; 2]>> {
    fn from(m: HermitianMatrix) -> Self {
        m.0.row_iter()
            .map(|r| r.iter().map(|c| [c.re, c.im]).collect())
            .collect()
    }
}

/// Spectral decomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
}

impl EigenDecomposition {
    pub fn largest(&self) -> (f64, &ComplexVector) {
        (self.eigenvalues[0], &self.eigenvectors[0])
    }

    /// `V Λ V^H`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let v = v.as_dvector();
            m += (v * v.adjoint()) * C64::from(*lambda);
        }
        HermitianMatrix::from_raw(m)
    }
}

impl HermitianMatrix {
    /// Validates squareness, finiteness and Hermitian symmetry (to a relative
    /// tolerance of 1e-10), then stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for j in 0..n {
            for i in 0..=j {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_raw(m))
    }

    /// Symmetrizes without validation. Used for matrices that are Hermitian
    /// by construction up to rounding.
    pub(crate) fn from_raw(m: DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut out = m;
        for j in 0..n {
            out[(j, j)] = C64::new(out[(j, j)].re, 0.0);
            for i in 0..j {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self(out)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::from(*d);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `Tr(self · other)`, which is real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "matrix dimension mismatch");
        // Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `v^H A v`.
    pub fn quad_form(&self, v: &ComplexVector) -> f64 {
        let v = v.as_dvector();
        assert_eq!(v.len(), self.dim(), "vector length mismatch");
        v.dotc(&(&self.0 * v)).re
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, factor: f64) -> HermitianMatrix {
        Self(&self.0 * C64::from(factor))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        if !self.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = self.dim();
        let se = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let eigenvectors = order
            .iter()
            .map(|&k| ComplexVector(se.eigenvectors.column(k).into_owned()))
            .collect();
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("non-empty"))
    }

    /// Sum of singular values.
    pub fn nuclear_norm(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|l| l.abs()).sum())
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    }

    /// `‖A‖_* − ‖A‖_2` for a (numerically) PSD matrix; zero exactly when the
    /// rank is at most one.
    pub fn rank_one_residual(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        let trace: f64 = ev.iter().sum();
        let min = ev[ev.len() - 1];
        if min < -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE) && min < -f64::EPSILON {
            return Err(Error::Precondition(format!(
                "rank-one residual needs a PSD matrix, smallest eigenvalue is {min:e} (trace {trace:e})"
            )));
        }
        let nuclear: f64 = ev.iter().map(|l| l.abs()).sum();
        let spectral = ev[0].abs().max(min.abs());
        Ok((nuclear - spectral).max(0.0))
    }

    /// The real 2N×2N symmetric matrix `[[Re A, −Im A], [Im A, Re A]]`.
    pub fn real_embedding(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut t = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for i in 0..n {
                let a = self.0[(i, j)];
                t[(i, j)] = a.re;
                t[(i + n, j + n)] = a.re;
                t[(i, j + n)] = -a.im;
                t[(i + n, j)] = a.im;
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(rng: &mut impl Rng, n: usize) -> ComplexVector {
        ComplexVector::new(
            (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let e = HermitianMatrix::identity(3).eig().unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 3.0, -2.0]);
        let e = a.eig().unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 1.0, -2.0]);
        // the top eigenvector is the second standard basis vector
        let v = e.eigenvectors[0].as_slice();
        assert!((v[1].norm() - 1.0).abs() < 1e-14);
        assert!(v[0].norm() < 1e-14 && v[2].norm() < 1e-14);
    }

    #[test]
    fn outer_product_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_vector(&mut rng, 5);
        let e = h.outer().eig().unwrap();
        let norm2 = h.norm_sqr();
        assert!((e.eigenvalues[0] - norm2).abs() < 1e-12 * norm2);
        for l in &e.eigenvalues[1..] {
            assert!(l.abs() < 1e-12 * norm2);
        }
    }

    #[test]
    fn reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = HermitianMatrix::zeros(6);
        for _ in 0..4 {
            a = a.add(&random_vector(&mut rng, 6).outer().scale(rng.random_range(-2.0..2.0)));
        }
        let e = a.eig().unwrap();
        let err = e.reconstruct().sub(&a).frobenius_norm();
        assert!(err <= 1e-9 * a.frobenius_norm().max(1.0));
        for w in e.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for (l, v) in e.eigenvalues.iter().zip(&e.eigenvectors) {
            let av = a.matrix() * v.as_dvector();
            let lv = v.as_dvector() * C64::from(*l);
            assert!((av - lv).norm() <= 1e-10 * a.frobenius_norm());
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::InvalidInput(_))));
        assert!(ComplexVector::new(vec![C64::new(f64::INFINITY, 0.0)]).is_err());
        assert!(ComplexVector::new(vec![]).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(1.0, 1.0);
        m[(1, 0)] = C64::new(1.0, 1.0);
        assert!(HermitianMatrix::new(m).is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(HermitianMatrix::identity(4).nuclear_norm().unwrap(), 4.0);
        assert_eq!(HermitianMatrix::identity(4).spectral_norm().unwrap(), 1.0);
        let d = HermitianMatrix::from_real_diagonal(&[2.0, -1.0]);
        assert_eq!(d.nuclear_norm().unwrap(), 3.0);
        let d = HermitianMatrix::from_real_diagonal(&[2.0, -5.0]);
        assert_eq!(d.spectral_norm().unwrap(), 5.0);
    }

    #[test]
    fn rank_one_residual_cases() {
        assert!((HermitianMatrix::identity(2).rank_one_residual().unwrap() - 1.0).abs() < 1e-15);
        // eigenvalues (3, 1) in a rotated basis: 3 + 1 - 3 = 1
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_vector(&mut rng, 2);
        let u = u.scale(C64::from(1.0 / u.norm()));
        let (a, b) = (u.as_slice()[0], u.as_slice()[1]);
        let w = ComplexVector::new(vec![-b.conj(), a.conj()]).unwrap();
        let m = u.outer().scale(3.0).add(&w.outer());
        let oracle: f64 = m.eigenvalues().unwrap().iter().sum::<f64>() - m.eigenvalues().unwrap()[0];
        assert!((m.rank_one_residual().unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 1.0).abs() < 1e-12);
        let bad = HermitianMatrix::from_real_diagonal(&[1.0, -0.5]);
        assert!(matches!(bad.rank_one_residual(), Err(Error::Precondition(_))));
    }

    #[test]
    fn embedding_basics() {
        let t = HermitianMatrix::identity(3).real_embedding();
        assert_eq!(t, DMatrix::identity(6, 6));
        let v = ComplexVector::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        let a = v.outer(); // eigenvalues (2, 0)
        let mut ev: Vec<f64> = SymmetricEigen::new(a.real_embedding()).eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        for (got, want) in ev.iter().zip([2.0, 2.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_matches_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_vector(&mut rng, 4).outer().add(&random_vector(&mut rng, 4).outer().scale(-0.3));
        let b = random_vector(&mut rng, 4).outer();
        let direct = (a.matrix() * b.matrix()).trace().re;
        assert!((a.inner(&b) - direct).abs() < 1e-12);
    }
}
