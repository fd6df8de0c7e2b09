//! Jordan-algebra helpers and Nesterov–Todd scalings for the three cone types.
//!
//! A scaling `W` satisfies `W z = W^{-T} s = λ`. For the orthant `W` is
//! diagonal, for a second-order cone `W = β(2vvᵀ − J)`, and for a PSD block
//! `W(Z) = rᵀ Z r`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::ConeKind;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Lower-triangular column-major vectorization with off-diagonals scaled by √2,
/// so that `svec(X)·svec(Y) = Tr(XY)`.
pub(crate) fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut v = Vec::with_capacity(k * (k + 1) / 2);
    for j in 0..k {
        v.push(m[(j, j)]);
        for i in j + 1..k {
            v.push(SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    v
}

pub(crate) fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    let mut idx = 0;
    for j in 0..k {
        m[(j, j)] = v[idx];
        idx += 1;
        for i in j + 1..k {
            let x = v[idx] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            idx += 1;
        }
    }
    m
}

fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let k = m.nrows();
    let mut idx = 0;
    for j in 0..k {
        out[idx] = m[(j, j)];
        idx += 1;
        for i in j + 1..k {
            out[idx] = SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            idx += 1;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub kind: ConeKind,
    pub offset: usize,
    pub dim: usize,
}

pub(crate) fn layout(cones: &[ConeKind]) -> Vec<Block> {
    let mut offset = 0;
    cones
        .iter()
        .map(|&kind| {
            let b = Block {
                kind,
                offset,
                dim: kind.dim(),
            };
            offset += b.dim;
            b
        })
        .collect()
}

pub(crate) fn degree(blocks: &[Block]) -> usize {
    blocks.iter().map(|b| b.kind.degree()).sum()
}

/// Identity element `e` of the product cone.
pub(crate) fn identity(blocks: &[Block], m: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    for b in blocks {
        match b.kind {
            ConeKind::NonNeg(d) => e[b.offset..b.offset + d].fill(1.0),
            ConeKind::Soc(_) => e[b.offset] = 1.0,
            ConeKind::Psd(k) => {
                let mut idx = b.offset;
                for j in 0..k {
                    e[idx] = 1.0;
                    idx += k - j;
                }
            }
        }
    }
    e
}

/// Smallest Jordan eigenvalue; `u ∈ int K` iff this is positive.
pub(crate) fn min_eigenvalue(blocks: &[Block], u: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    for b in blocks {
        let ub = &u[b.offset..b.offset + b.dim];
        let v = match b.kind {
            ConeKind::NonNeg(_) => ub.iter().copied().fold(f64::INFINITY, f64::min),
            ConeKind::Soc(_) => ub[0] - norm(&ub[1..]),
            ConeKind::Psd(k) => SymmetricEigen::new(smat(ub, k))
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        };
        min = min.min(v);
    }
    min
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `u ∘ v`.
pub(crate) fn jordan_product(blocks: &[Block], u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for b in blocks {
        let r = b.offset..b.offset + b.dim;
        let (ub, vb, ob) = (&u[r.clone()], &v[r.clone()], &mut out[r]);
        match b.kind {
            ConeKind::NonNeg(_) => {
                for i in 0..b.dim {
                    ob[i] = ub[i] * vb[i];
                }
            }
            ConeKind::Soc(_) => {
                ob[0] = dot(ub, vb);
                for i in 1..b.dim {
                    ob[i] = ub[0] * vb[i] + vb[0] * ub[i];
                }
            }
            ConeKind::Psd(k) => {
                let um = smat(ub, k);
                let vm = smat(vb, k);
                let p = &um * &vm;
                let sym = (&p + p.transpose()) * 0.5;
                svec_into(&sym, ob);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
enum BlockScaling {
    NonNeg { d: Vec<f64> },
    Soc { beta: f64, v: Vec<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

/// Nesterov–Todd scaling point for the whole product cone.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    blocks: Vec<(Block, BlockScaling)>,
    /// `λ = W z`, in cone coordinates.
    pub lambda: Vec<f64>,
    /// Per-block eigenvalues of `λ` for PSD blocks (diagonal of `Λ`).
    psd_lambda: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    W,
    WInv,
    WT,
    WInvT,
}

impl Scaling {
    /// `W = I`.
    pub fn identity(blocks: &[Block], m: usize) -> Self {
        let mut out = Vec::new();
        let mut psd_lambda = Vec::new();
        for b in blocks {
            let bs = match b.kind {
                ConeKind::NonNeg(d) => BlockScaling::NonNeg { d: vec![1.0; d] },
                ConeKind::Soc(d) => {
                    // β(2vvᵀ − J) = I for β = 1, v = e
                    let mut v = vec![0.0; d];
                    v[0] = 1.0;
                    BlockScaling::Soc { beta: 1.0, v }
                }
                ConeKind::Psd(k) => {
                    psd_lambda.push(vec![1.0; k]);
                    BlockScaling::Psd {
                        r: DMatrix::identity(k, k),
                        rinv: DMatrix::identity(k, k),
                    }
                }
            };
            out.push((*b, bs));
        }
        Self {
            blocks: out,
            lambda: identity(blocks, m),
            psd_lambda,
        }
    }

    /// NT scaling for interior `s`, `z`. Returns `None` if either point has
    /// numerically left the cone interior.
    pub fn compute(blocks: &[Block], s: &[f64], z: &[f64]) -> Option<Self> {
        let m = s.len();
        let mut out = Vec::with_capacity(blocks.len());
        let mut lambda = vec![0.0; m];
        let mut psd_lambda = Vec::new();
        for b in blocks {
            let r = b.offset..b.offset + b.dim;
            let (sb, zb) = (&s[r.clone()], &z[r.clone()]);
            let lb = &mut lambda[r];
            let bs = match b.kind {
                ConeKind::NonNeg(_) => {
                    let mut d = Vec::with_capacity(b.dim);
                    for i in 0..b.dim {
                        if !(sb[i] > 0.0 && zb[i] > 0.0) {
                            return None;
                        }
                        d.push((sb[i] / zb[i]).sqrt());
                        lb[i] = (sb[i] * zb[i]).sqrt();
                    }
                    BlockScaling::NonNeg { d }
                }
                ConeKind::Soc(_) => {
                    let s_res = sb[0] * sb[0] - dot(&sb[1..], &sb[1..]);
                    let z_res = zb[0] * zb[0] - dot(&zb[1..], &zb[1..]);
                    if !(s_res > 0.0 && z_res > 0.0 && sb[0] > 0.0 && zb[0] > 0.0) {
                        return None;
                    }
                    let sn = s_res.sqrt();
                    let zn = z_res.sqrt();
                    let sbar: Vec<f64> = sb.iter().map(|v| v / sn).collect();
                    let zbar: Vec<f64> = zb.iter().map(|v| v / zn).collect();
                    let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                    // w̄ = (s̄ + J z̄) / 2γ
                    let mut wbar = vec![0.0; b.dim];
                    wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                    for i in 1..b.dim {
                        wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                    }
                    let beta = (sn / zn).sqrt();
                    let denom = (2.0 * (wbar[0] + 1.0)).sqrt();
                    let mut v = wbar;
                    v[0] += 1.0;
                    for vi in v.iter_mut() {
                        *vi /= denom;
                    }
                    let bs = BlockScaling::Soc { beta, v };
                    let wz = apply_block(&bs, Op::W, zb);
                    lb.copy_from_slice(&wz);
                    bs
                }
                ConeKind::Psd(k) => {
                    let sm = smat(sb, k);
                    let zm = smat(zb, k);
                    let l1 = sm.cholesky()?.l();
                    let l2 = zm.cholesky()?.l();
                    let prod = l2.transpose() * &l1;
                    let svd = prod.svd(true, true);
                    let u = svd.u?;
                    let vt = svd.v_t?;
                    let sv = svd.singular_values;
                    if sv.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                        return None;
                    }
                    let mut r = l1 * vt.transpose();
                    let mut rinv = u.transpose() * l2.transpose();
                    for i in 0..k {
                        let f = sv[i].sqrt();
                        r.column_mut(i).scale_mut(1.0 / f);
                        rinv.row_mut(i).scale_mut(1.0 / f);
                    }
                    let mut idx = 0;
                    for j in 0..k {
                        lb[idx] = sv[j];
                        idx += k - j;
                    }
                    psd_lambda.push(sv.iter().copied().collect());
                    BlockScaling::Psd { r, rinv }
                }
            };
            out.push((*b, bs));
        }
        Some(Self {
            blocks: out,
            lambda,
            psd_lambda,
        })
    }

    pub fn apply(&self, op: Op, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (b, bs) in &self.blocks {
            let r = b.offset..b.offset + b.dim;
            let res = apply_block(bs, op, &u[r.clone()]);
            out[r].copy_from_slice(&res);
        }
        out
    }

    /// Applies `op` to the rows of one block only; used column-by-column when
    /// scaling the constraint matrix.
    pub fn apply_to_block(&self, block: usize, op: Op, u: &[f64]) -> Vec<f64> {
        apply_block(&self.blocks[block].1, op, u)
    }

    /// `λ ∘ u` (if `inverse` is false) or `λ \ u`.
    pub fn lambda_op(&self, u: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        let mut psd_idx = 0;
        for (b, _) in &self.blocks {
            let r = b.offset..b.offset + b.dim;
            let lb = &self.lambda[r.clone()];
            let ub = &u[r.clone()];
            let ob = &mut out[r];
            match b.kind {
                ConeKind::NonNeg(_) => {
                    for i in 0..b.dim {
                        ob[i] = if inverse { ub[i] / lb[i] } else { ub[i] * lb[i] };
                    }
                }
                ConeKind::Soc(_) => {
                    if inverse {
                        let det = lb[0] * lb[0] - dot(&lb[1..], &lb[1..]);
                        let y0 = (lb[0] * ub[0] - dot(&lb[1..], &ub[1..])) / det;
                        ob[0] = y0;
                        for i in 1..b.dim {
                            ob[i] = (ub[i] - y0 * lb[i]) / lb[0];
                        }
                    } else {
                        ob[0] = dot(lb, ub);
                        for i in 1..b.dim {
                            ob[i] = lb[0] * ub[i] + ub[0] * lb[i];
                        }
                    }
                }
                ConeKind::Psd(k) => {
                    let lam = &self.psd_lambda[psd_idx];
                    psd_idx += 1;
                    let mut idx = 0;
                    for j in 0..k {
                        for i in j..k {
                            let f = 0.5 * (lam[i] + lam[j]);
                            ob[idx] = if inverse { ub[idx] / f } else { ub[idx] * f };
                            idx += 1;
                        }
                    }
                }
            }
        }
        out
    }
}

fn apply_block(bs: &BlockScaling, op: Op, u: &[f64]) -> Vec<f64> {
    match bs {
        BlockScaling::NonNeg { d } => match op {
            Op::W | Op::WT => u.iter().zip(d).map(|(x, d)| x * d).collect(),
            Op::WInv | Op::WInvT => u.iter().zip(d).map(|(x, d)| x / d).collect(),
        },
        BlockScaling::Soc { beta, v } => {
            // W = β(2vvᵀ − J), W⁻¹ = (2Jvvᵀ J − J)/β; both symmetric
            let mut out = vec![0.0; u.len()];
            match op {
                Op::W | Op::WT => {
                    let vu = dot(v, u);
                    out[0] = beta * (2.0 * v[0] * vu - u[0]);
                    for i in 1..u.len() {
                        out[i] = beta * (2.0 * v[i] * vu + u[i]);
                    }
                }
                Op::WInv | Op::WInvT => {
                    // Jv = (v0, −v1)
                    let jvu = v[0] * u[0] - dot(&v[1..], &u[1..]);
                    out[0] = (2.0 * v[0] * jvu - u[0]) / beta;
                    for i in 1..u.len() {
                        out[i] = (-2.0 * v[i] * jvu + u[i]) / beta;
                    }
                }
            }
            out
        }
        BlockScaling::Psd { r, rinv } => {
            let k = r.nrows();
            let um = smat(u, k);
            let res = match op {
                Op::W => r.transpose() * um * r,
                Op::WT => r * um * r.transpose(),
                Op::WInv => rinv.transpose() * um * rinv,
                Op::WInvT => rinv * um * rinv.transpose(),
            };
            let mut out = vec![0.0; u.len()];
            svec_into(&res, &mut out);
            out
        }
    }
}

/// Largest `α ≥ 0` with `u + α du ∈ K` for `u` in the interior (may be `∞`).
pub(crate) fn max_step(blocks: &[Block], u: &[f64], du: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for b in blocks {
        let r = b.offset..b.offset + b.dim;
        let (ub, db) = (&u[r.clone()], &du[r]);
        let a = match b.kind {
            ConeKind::NonNeg(_) => ub
                .iter()
                .zip(db)
                .filter(|(_, d)| **d < 0.0)
                .map(|(x, d)| -x / d)
                .fold(f64::INFINITY, f64::min),
            ConeKind::Soc(_) => {
                let qa = db[0] * db[0] - dot(&db[1..], &db[1..]);
                let qb = ub[0] * db[0] - dot(&ub[1..], &db[1..]);
                let qc = (ub[0] * ub[0] - dot(&ub[1..], &ub[1..])).max(0.0);
                let disc = qb * qb - qa * qc;
                if (qa >= 0.0 && qb >= 0.0) || disc < 0.0 {
                    // never reaches the boundary unless the head turns negative
                    if db[0] < 0.0 {
                        -ub[0] / db[0]
                    } else {
                        f64::INFINITY
                    }
                } else {
                    qc / (-qb + disc.sqrt())
                }
            }
            ConeKind::Psd(k) => {
                let um = smat(ub, k);
                let dm = smat(db, k);
                match um.cholesky() {
                    None => 0.0,
                    Some(ch) => {
                        let l = ch.l();
                        let linv = l.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(k, k));
                        let m = &linv * dm * linv.transpose();
                        let min = SymmetricEigen::new((&m + m.transpose()) * 0.5)
                            .eigenvalues
                            .iter()
                            .copied()
                            .fold(f64::INFINITY, f64::min);
                        if min >= 0.0 {
                            f64::INFINITY
                        } else {
                            -1.0 / min
                        }
                    }
                }
            }
        };
        alpha = alpha.min(a);
    }
    alpha
}
