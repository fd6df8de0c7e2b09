//! Random conic programs with a known optimal value.
//!
//! A primal point `x*`, cone slacks `s*` and dual multipliers `z*` are drawn
//! with `s*ᵀz* = 0` block by block; the constant terms are then chosen so
//! that `x*` is feasible and `c = Gᵀz* + Aᵀy*` makes the KKT conditions
//! hold. The optimal value is therefore `cᵀx*`.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use noma_radcom::conic::ConicProblem;

pub struct Planted {
    pub problem: ConicProblem,
    pub optimum: f64,
    pub x: DVector<f64>,
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn random_vec(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

fn random_symmetric(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| normal(rng));
    (&a + a.transpose()) * 0.5
}

fn random_orthogonal(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |_, _| normal(rng)).qr().q()
}

/// Instance with `n` variables, `p < n` equalities and one block of each cone.
pub fn planted(n: usize, p: usize, rng: &mut impl Rng) -> Planted {
    let x = random_vec(n, rng);
    let mut prob = ConicProblem::new(n);
    let mut c = DVector::zeros(n);

    // nonnegative orthant: half active, half inactive
    for i in 0..rng.random_range(1..=4) {
        let row = random_vec(n, rng);
        let (slack, mult) = if i % 2 == 0 {
            (0.0, rng.random_range(0.5..2.0))
        } else {
            (rng.random_range(0.5..2.0), 0.0)
        };
        prob.add_nonneg(row.as_slice(), slack - row.dot(&x)).unwrap();
        c += &row * mult;
    }

    // second-order cone: slack and multiplier on opposite boundary rays
    let m = rng.random_range(2..=5);
    let head = random_vec(n, rng);
    let body = DMatrix::from_fn(m, n, |_, _| normal(rng));
    let dir = random_vec(m, rng).normalize();
    let (ts, tz) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let s_body = &dir * ts;
    let z_body = &dir * -tz;
    let t0 = ts - head.dot(&x);
    let u0 = &s_body - &body * &x;
    prob.add_soc(head.as_slice(), t0, &body, u0.as_slice()).unwrap();
    c += &head * tz + body.tr_mul(&z_body);

    // PSD: S = Q diag(λ, 0) Qᵀ, Z = Q diag(0, μ) Qᵀ
    let k = rng.random_range(2..=4);
    let r = rng.random_range(1..k);
    let q = random_orthogonal(k, rng);
    let lam = DVector::from_fn(k, |i, _| if i < r { rng.random_range(0.5..2.0) } else { 0.0 });
    let mu = DVector::from_fn(k, |i, _| if i < r { 0.0 } else { rng.random_range(0.5..2.0) });
    let s_mat = &q * DMatrix::from_diagonal(&lam) * q.transpose();
    let z_mat = &q * DMatrix::from_diagonal(&mu) * q.transpose();
    let terms: Vec<(usize, DMatrix<f64>)> = (0..n).map(|j| (j, random_symmetric(k, rng))).collect();
    let mut f0 = s_mat.clone();
    for (j, f) in &terms {
        f0 -= f * x[*j];
        c[*j] += z_mat.dot(f);
    }
    prob.add_psd(&f0, &terms).unwrap();

    // equalities with free multipliers
    for _ in 0..p {
        let row = random_vec(n, rng);
        let y = normal(rng);
        prob.add_equality(row.as_slice(), row.dot(&x)).unwrap();
        c += &row * y;
    }

    prob.set_objective(c.as_slice()).unwrap();
    Planted {
        optimum: c.dot(&x),
        problem: prob,
        x,
    }
}

/// `|a − b| / max(1, |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
