//! Small dense conic programs over real variables.
//!
//! Problems are held in the standard form
//!
//! ```text
//! minimize    c'x
//! subject to  A x = b
//!             G x + s = h,   s ∈ K
//! ```
//!
//! where `K` is a product of nonnegative orthants, second-order cones and
//! PSD cones (in scaled lower-triangular `svec` form). The builder methods
//! accept constraints as affine maps and translate them into `(G, h)` rows.
//!
//! Complex PSD constraints are expressed through [`HermitianMatrix::real_embedding`],
//! see [`HermitianParam`].
//!
//! [`HermitianMatrix::real_embedding`]: crate::hermitian::HermitianMatrix::real_embedding

mod cones;
mod ipm;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, C64};

pub use ipm::solve;

pub(crate) use cones::{smat, svec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// `dim` independent nonnegativity constraints.
    NonNeg(usize),
    /// `(t, u)` with `‖u‖ ≤ t`; the payload is the total dimension `1 + len(u)`.
    Soc(usize),
    /// Order of the symmetric matrix; occupies `k(k+1)/2` rows.
    Psd(usize),
}

impl ConeKind {
    pub fn dim(&self) -> usize {
        match *self {
            ConeKind::NonNeg(d) | ConeKind::Soc(d) => d,
            ConeKind::Psd(k) => k * (k + 1) / 2,
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            ConeKind::NonNeg(d) => d,
            ConeKind::Soc(_) => 1,
            ConeKind::Psd(k) => k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    n: usize,
    c: DVector<f64>,
    a_rows: Vec<DVector<f64>>,
    b: Vec<f64>,
    g_blocks: Vec<DMatrix<f64>>,
    h_blocks: Vec<DVector<f64>>,
    cones: Vec<ConeKind>,
}

impl ConicProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            n: num_vars,
            c: DVector::zeros(num_vars),
            a_rows: Vec::new(),
            b: Vec::new(),
            g_blocks: Vec::new(),
            h_blocks: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn cones(&self) -> &[ConeKind] {
        &self.cones
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.c
    }

    fn check_row(&self, row: &[f64], what: &str) -> Result<()> {
        if row.len() != self.n {
            return Err(Error::Dimension(format!(
                "{what}: expected {} coefficients, got {}",
                self.n,
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{what}: non-finite coefficient")));
        }
        Ok(())
    }

    pub fn set_objective(&mut self, c: &[f64]) -> Result<()> {
        self.check_row(c, "objective")?;
        self.c = DVector::from_column_slice(c);
        Ok(())
    }

    /// `row · x = rhs`.
    pub fn add_equality(&mut self, row: &[f64], rhs: f64) -> Result<()> {
        self.check_row(row, "equality")?;
        if !rhs.is_finite() {
            return Err(Error::InvalidInput("equality: non-finite right-hand side".into()));
        }
        self.a_rows.push(DVector::from_column_slice(row));
        self.b.push(rhs);
        Ok(())
    }

    /// `row · x + constant ≥ 0`.
    pub fn add_nonneg(&mut self, row: &[f64], constant: f64) -> Result<()> {
        self.check_row(row, "inequality")?;
        if !constant.is_finite() {
            return Err(Error::InvalidInput("inequality: non-finite constant".into()));
        }
        self.push_block(
            ConeKind::NonNeg(1),
            DMatrix::from_row_slice(1, self.n, row),
            DVector::from_element(1, constant),
        );
        Ok(())
    }

    /// `‖U x + u0‖₂ ≤ t·x + t0`.
    pub fn add_soc(&mut self, t: &[f64], t0: f64, u: &DMatrix<f64>, u0: &[f64]) -> Result<()> {
        self.check_row(t, "soc head")?;
        if u.ncols() != self.n || u.nrows() != u0.len() {
            return Err(Error::Dimension(format!(
                "soc body: map is {}x{}, offset has {} entries, expected {} columns",
                u.nrows(),
                u.ncols(),
                u0.len(),
                self.n
            )));
        }
        if !t0.is_finite() || u.iter().chain(u0).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("soc: non-finite data".into()));
        }
        let m = 1 + u.nrows();
        let mut map = DMatrix::zeros(m, self.n);
        map.row_mut(0).copy_from(&DMatrix::from_row_slice(1, self.n, t));
        map.rows_mut(1, u.nrows()).copy_from(u);
        let mut offset = DVector::zeros(m);
        offset[0] = t0;
        offset.rows_mut(1, u0.len()).copy_from_slice(u0);
        self.push_block(ConeKind::Soc(m), map, offset);
        Ok(())
    }

    /// `F0 + Σ_j x_j F_j ⪰ 0` for symmetric `k×k` matrices.
    pub fn add_psd(&mut self, f0: &DMatrix<f64>, terms: &[(usize, DMatrix<f64>)]) -> Result<()> {
        let k = f0.nrows();
        if f0.ncols() != k || k == 0 {
            return Err(Error::Dimension("psd: constant term must be square".into()));
        }
        let dim = k * (k + 1) / 2;
        let mut map = DMatrix::zeros(dim, self.n);
        for (j, fj) in terms {
            if *j >= self.n || fj.nrows() != k || fj.ncols() != k {
                return Err(Error::Dimension(format!("psd: bad term for variable {j}")));
            }
            if fj.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("psd: non-finite data".into()));
            }
            let col = svec(fj);
            for (r, v) in col.iter().enumerate() {
                map[(r, *j)] += v;
            }
        }
        if f0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("psd: non-finite data".into()));
        }
        self.push_block(ConeKind::Psd(k), map, DVector::from_vec(svec(f0)));
        Ok(())
    }

    /// Stores the affine map `s = map·x + offset` as the rows `G = −map`, `h = offset`.
    fn push_block(&mut self, kind: ConeKind, map: DMatrix<f64>, offset: DVector<f64>) {
        self.g_blocks.push(-map);
        self.h_blocks.push(offset);
        self.cones.push(kind);
    }

    /// Cone slack `h − G x` for a candidate point.
    pub fn slack(&self, x: &DVector<f64>) -> DVector<f64> {
        let (g, h) = self.stacked_gh();
        h - g * x
    }

    pub(crate) fn stacked_gh(&self) -> (DMatrix<f64>, DVector<f64>) {
        let m: usize = self.cones.iter().map(ConeKind::dim).sum();
        let mut g = DMatrix::zeros(m, self.n);
        let mut h = DVector::zeros(m);
        let mut row = 0;
        for (gb, hb) in self.g_blocks.iter().zip(&self.h_blocks) {
            g.rows_mut(row, gb.nrows()).copy_from(gb);
            h.rows_mut(row, hb.len()).copy_from(hb);
            row += gb.nrows();
        }
        (g, h)
    }

    pub(crate) fn stacked_ab(&self) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.a_rows.len();
        let mut a = DMatrix::zeros(p, self.n);
        for (i, r) in self.a_rows.iter().enumerate() {
            a.row_mut(i).copy_from(&r.transpose());
        }
        (a, DVector::from_column_slice(&self.b))
    }

    /// Maximum constraint violations of `x`.
    pub fn residuals(&self, x: &DVector<f64>) -> Residuals {
        let mut res = Residuals::default();
        for (row, rhs) in self.a_rows.iter().zip(&self.b) {
            res.eq = res.eq.max((row.dot(x) - rhs).abs());
        }
        for ((gb, hb), kind) in self.g_blocks.iter().zip(&self.h_blocks).zip(&self.cones) {
            let s = hb - gb * x;
            match *kind {
                ConeKind::NonNeg(_) => {
                    res.ineq = res.ineq.max(s.iter().fold(0.0_f64, |acc, v| acc.max(-v)));
                }
                ConeKind::Soc(m) => {
                    let body = s.rows(1, m - 1).norm();
                    res.soc = res.soc.max((body - s[0]).max(0.0));
                }
                ConeKind::Psd(k) => {
                    let mat = smat(s.as_slice(), k);
                    let min = nalgebra::SymmetricEigen::new(mat)
                        .eigenvalues
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min);
                    res.psd = res.psd.max((-min).max(0.0));
                }
            }
        }
        res
    }

    /// Infinity norm of all problem data, used to scale feasibility checks.
    pub fn data_norm(&self) -> f64 {
        let mut m = self.c.amax();
        for r in &self.a_rows {
            m = m.max(r.amax());
        }
        for v in &self.b {
            m = m.max(v.abs());
        }
        for (g, h) in self.g_blocks.iter().zip(&self.h_blocks) {
            m = m.max(g.amax()).max(h.amax());
        }
        m
    }

    /// Plain-text dump, one constraint per line with dense coefficients.
    ///
    /// ```text
    /// vars <n>
    /// min <c_1> ... <c_n>
    /// eq <a_1> ... <a_n> = <b>
    /// nonneg <coeffs> + <const> >= 0
    /// soc <dim> row <i> <coeffs> + <const>
    /// psd <k> row <i> <coeffs> + <const>
    /// ```
    ///
    /// Cone rows hold the affine map `s = coeffs·x + const`; `psd` rows are in
    /// lower-triangular column-major order with off-diagonals scaled by √2.
    pub fn dump(&self) -> String {
        let fmt = |v: f64| format!("{v:.17e}");
        let join = |it: &mut dyn Iterator<Item = f64>| it.map(fmt).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.n);
        let _ = writeln!(out, "min {}", join(&mut self.c.iter().copied()));
        for (row, rhs) in self.a_rows.iter().zip(&self.b) {
            let _ = writeln!(out, "eq {} = {}", join(&mut row.iter().copied()), fmt(*rhs));
        }
        for ((gb, hb), kind) in self.g_blocks.iter().zip(&self.h_blocks).zip(&self.cones) {
            for i in 0..gb.nrows() {
                let coeffs = join(&mut gb.row(i).iter().map(|v| -v));
                match *kind {
                    ConeKind::NonNeg(_) => {
                        let _ = writeln!(out, "nonneg {coeffs} + {} >= 0", fmt(hb[i]));
                    }
                    ConeKind::Soc(m) => {
                        let _ = writeln!(out, "soc {m} row {i} {coeffs} + {}", fmt(hb[i]));
                    }
                    ConeKind::Psd(k) => {
                        let _ = writeln!(out, "psd {k} row {i} {coeffs} + {}", fmt(hb[i]));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Primal infeasibility certificate found.
    Infeasible,
    /// Dual infeasibility certificate found (objective unbounded below).
    Unbounded,
    /// Iteration limit or numerical breakdown before the tolerances were met.
    MaxIterations,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub eq: f64,
    pub ineq: f64,
    pub soc: f64,
    pub psd: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.eq.max(self.ineq).max(self.soc).max(self.psd)
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: DVector<f64>,
    /// Equality multipliers.
    pub y: DVector<f64>,
    /// Cone multipliers.
    pub z: DVector<f64>,
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Turns a non-optimal status into an error carrying `context`.
    pub fn require_optimal(self, context: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                iterations: self.iterations,
                context: context.to_string(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative primal and dual residual target.
    pub feastol: f64,
    /// Absolute duality-gap target.
    pub abstol: f64,
    /// Relative duality-gap target.
    pub reltol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feastol: 1e-8,
            abstol: 1e-8,
            reltol: 1e-7,
            max_iter: 200,
            step_fraction: 0.99,
        }
    }
}

/// Real parametrization of an N×N Hermitian matrix by `N²` reals.
///
/// Parameters are the diagonal entries followed by `(Re, Im)` of each
/// strictly-upper entry in row-major order. `offset` is the position of the
/// first parameter inside the full variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianParam {
    pub n: usize,
    pub offset: usize,
}

impl HermitianParam {
    pub fn new(n: usize, offset: usize) -> Self {
        Self { n, offset }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn end(&self) -> usize {
        self.offset + self.len()
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n;
        let mut idx = self.offset + n;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j))).map(move |(i, j)| {
            let k = idx;
            idx += 2;
            (i, j, k)
        })
    }

    /// Coefficients of `x ↦ Tr(C · W(x))` written into `row`.
    pub fn add_trace_coeffs(&self, c: &HermitianMatrix, scale: f64, row: &mut [f64]) {
        for i in 0..self.n {
            row[self.offset + i] += scale * c.get(i, i).re;
        }
        for (i, j, k) in self.pairs() {
            let cij = c.get(i, j);
            row[k] += scale * 2.0 * cij.re;
            row[k + 1] += scale * 2.0 * cij.im;
        }
    }

    /// Coefficients of `x ↦ Tr(W(x))`.
    pub fn add_identity_trace_coeffs(&self, scale: f64, row: &mut [f64]) {
        for i in 0..self.n {
            row[self.offset + i] += scale;
        }
    }

    pub fn extract(&self, x: &DVector<f64>) -> HermitianMatrix {
        let n = self.n;
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(x[self.offset + i], 0.0);
        }
        for (i, j, k) in self.pairs() {
            let v = C64::new(x[k], x[k + 1]);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        HermitianMatrix::from_raw(m)
    }

    pub fn write(&self, w: &HermitianMatrix, x: &mut DVector<f64>) {
        for i in 0..self.n {
            x[self.offset + i] = w.get(i, i).re;
        }
        for (i, j, k) in self.pairs() {
            let v = w.get(i, j);
            x[k] = v.re;
            x[k + 1] = v.im;
        }
    }

    /// Embedded basis matrices `T(E_p)` for every parameter, in the form
    /// accepted by [`ConicProblem::add_psd`].
    pub fn embedding_terms(&self, weight: f64) -> Vec<(usize, DMatrix<f64>)> {
        let n = self.n;
        let mut terms = Vec::with_capacity(self.len());
        for i in 0..n {
            let mut t = DMatrix::zeros(2 * n, 2 * n);
            t[(i, i)] = weight;
            t[(i + n, i + n)] = weight;
            terms.push((self.offset + i, t));
        }
        for (i, j, k) in self.pairs() {
            let mut re = DMatrix::zeros(2 * n, 2 * n);
            for (a, b) in [(i, j), (j, i), (i + n, j + n), (j + n, i + n)] {
                re[(a, b)] = weight;
            }
            let mut im = DMatrix::zeros(2 * n, 2 * n);
            im[(i, j + n)] = -weight;
            im[(j + n, i)] = -weight;
            im[(j, i + n)] = weight;
            im[(i + n, j)] = weight;
            terms.push((k, re));
            terms.push((k + 1, im));
        }
        terms
    }
}
