//! Primal-dual interior-point method on the homogeneous self-dual embedding
//!
//! ```text
//! [0]   [ 0   Aᵀ  Gᵀ  c ] [x]
//! [0] = [-A   0   0   b ] [y]      s, z ∈ K,  τ, κ ≥ 0
//! [s]   [-G   0   0   h ] [z]
//! [κ]   [-cᵀ -bᵀ -hᵀ  0 ] [τ]
//! ```
//!
//! with Nesterov–Todd scaling and a Mehrotra predictor-corrector. Each Newton
//! system is reduced to `[GᵀW⁻¹W⁻ᵀG  Aᵀ; A  0]`, factored once per iteration
//! and polished with a few steps of iterative refinement on the unreduced
//! system. Infeasibility is read off the embedding as Farkas certificates.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::cones::{self, Block, Op, Scaling};
use super::{ConicProblem, ConicSolution, Residuals, SolveStatus, SolverOptions};

const REFINE_STEPS: usize = 3;
/// Relative KKT residual above which a refined solve is rejected.
const REFINE_ACCEPT: f64 = 1e-6;
const STALL_STEP: f64 = 1e-10;
/// A stalled run still counts as optimal when its best iterate is within this
/// factor of every tolerance.
const REDUCED_ACCURACY: f64 = 10.0;
/// Stop once a near-optimal run's merit has grown this much past its best.
const DIVERGENCE: f64 = 100.0;
/// Relative diagonal regularizations of the reduced KKT system, tried in order.
const KKT_REGULARIZATION: [f64; 3] = [1e-17, 1e-13, 1e-9];

struct Data<'a> {
    c: &'a DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    blocks: Vec<Block>,
    /// Columns of `G` with a nonzero entry inside each cone block.
    block_cols: Vec<Vec<usize>>,
}

impl Data<'_> {
    fn n(&self) -> usize {
        self.c.len()
    }

    fn p(&self) -> usize {
        self.b.len()
    }

    fn m(&self) -> usize {
        self.h.len()
    }
}

struct Kkt {
    lu: LU<f64, Dyn, Dyn>,
    /// `W⁻ᵀ G`.
    gt: DMatrix<f64>,
}

impl Kkt {
    fn factor(data: &Data, scaling: &Scaling, rel_reg: f64) -> Option<Self> {
        let (n, p, m) = (data.n(), data.p(), data.m());
        let mut gt = DMatrix::zeros(m, n);
        for (bi, b) in data.blocks.iter().enumerate() {
            for &col in &data.block_cols[bi] {
                let seg: Vec<f64> = data.g.view((b.offset, col), (b.dim, 1)).iter().copied().collect();
                let scaled = scaling.apply_to_block(bi, Op::WInvT, &seg);
                gt.view_mut((b.offset, col), (b.dim, 1)).copy_from_slice(&scaled);
            }
        }
        // GᵀW⁻¹W⁻ᵀG accumulated block by block over the touched columns only
        let mut hess = DMatrix::zeros(n, n);
        for (bi, b) in data.blocks.iter().enumerate() {
            let cols = &data.block_cols[bi];
            if cols.is_empty() {
                continue;
            }
            let mut compact = DMatrix::zeros(b.dim, cols.len());
            for (k, &col) in cols.iter().enumerate() {
                compact.column_mut(k).copy_from(&gt.view((b.offset, col), (b.dim, 1)));
            }
            let gram = compact.tr_mul(&compact);
            for (i, &ci) in cols.iter().enumerate() {
                for (j, &cj) in cols.iter().enumerate() {
                    hess[(ci, cj)] += gram[(i, j)];
                }
            }
        }
        let diag_max = (0..n).map(|i| hess[(i, i)]).fold(1.0_f64, f64::max);
        let reg = rel_reg * diag_max;
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&hess);
        for i in 0..n {
            k[(i, i)] += reg;
        }
        if p > 0 {
            k.view_mut((n, 0), (p, n)).copy_from(&data.a);
            k.view_mut((0, n), (n, p)).copy_from(&data.a.transpose());
            for i in 0..p {
                k[(n + i, n + i)] = -reg;
            }
        }
        if k.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Self { lu: k.lu(), gt })
    }

    fn reduced_solve(
        &self,
        data: &Data,
        scaling: &Scaling,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (n, p) = (data.n(), data.p());
        let wrz = DVector::from_vec(scaling.apply(Op::WInvT, rz.as_slice()));
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(rx + self.gt.tr_mul(&wrz)));
        rhs.rows_mut(n, p).copy_from(ry);
        let sol = self.lu.solve(&rhs)?;
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let tmp = &self.gt * &dx - wrz;
        let dz = DVector::from_vec(scaling.apply(Op::WInv, tmp.as_slice()));
        Some((dx, dy, dz))
    }

    fn solve(
        &self,
        data: &Data,
        scaling: &Scaling,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        self.solve_refined(data, scaling, rx, ry, rz).map(|(d, _)| d)
    }

    /// Solves `[0 Aᵀ Gᵀ; A 0 0; G 0 −WᵀW] (dx, dy, dz) = (rx, ry, rz)` with
    /// iterative refinement; also returns the relative residual.
    fn solve_refined(
        &self,
        data: &Data,
        scaling: &Scaling,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
    ) -> Option<(Solved, f64)> {
        let (mut dx, mut dy, mut dz) = self.reduced_solve(data, scaling, rx, ry, rz)?;
        let mut err_rel = f64::INFINITY;
        for step in 0..=REFINE_STEPS {
            let wtw = {
                let wdz = scaling.apply(Op::W, dz.as_slice());
                DVector::from_vec(scaling.apply(Op::WT, &wdz))
            };
            let ex = rx - data.a.tr_mul(&dy) - data.g.tr_mul(&dz);
            let ey = ry - &data.a * &dx;
            let ez = rz - (&data.g * &dx - wtw);
            let err = ex.amax().max(ey.amax()).max(ez.amax());
            let scale = rx.amax().max(ry.amax()).max(rz.amax()).max(f64::MIN_POSITIVE);
            err_rel = err / scale;
            if err_rel <= 1e-15 || step == REFINE_STEPS {
                break;
            }
            let (cx, cy, cz) = self.reduced_solve(data, scaling, &ex, &ey, &ez)?;
            dx += cx;
            dy += cy;
            dz += cz;
        }
        if !err_rel.is_finite() || dx.iter().chain(dy.iter()).chain(dz.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        Some(((dx, dy, dz), err_rel))
    }
}

type Solved = (DVector<f64>, DVector<f64>, DVector<f64>);

/// Factors with the smallest regularization whose refined solves meet
/// [`REFINE_ACCEPT`], falling back to the most accurate one.
fn factor_and_solve<T>(
    data: &Data,
    scaling: &Scaling,
    solves: impl Fn(&Kkt) -> Option<(T, f64)>,
) -> Option<(Kkt, T)> {
    let mut best: Option<(Kkt, T, f64)> = None;
    for &reg in &KKT_REGULARIZATION {
        let Some(kkt) = Kkt::factor(data, scaling, reg) else {
            continue;
        };
        let Some((out, err)) = solves(&kkt) else {
            continue;
        };
        if err <= REFINE_ACCEPT {
            return Some((kkt, out));
        }
        if best.as_ref().is_none_or(|b| err < b.2) {
            best = Some((kkt, out, err));
        }
    }
    best.map(|(k, o, _)| (k, o))
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

/// Shifts `u` into the cone interior the way ECOS initializes its iterates.
fn shift_into_cone(blocks: &[Block], u: &mut DVector<f64>) {
    let m = u.len();
    let alpha = -cones::min_eigenvalue(blocks, u.as_slice());
    if alpha >= 0.0 {
        let e = cones::identity(blocks, m);
        for (ui, ei) in u.iter_mut().zip(e) {
            *ui += (1.0 + alpha) * ei;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn direction(
    data: &Data,
    kkt: &Kkt,
    scaling: &Scaling,
    it: &Iterate,
    u1: &(DVector<f64>, DVector<f64>, DVector<f64>),
    lin_scale: f64,
    r: &Residual,
    ds_target: &[f64],
    dkappa_target: f64,
) -> Option<Direction> {
    // q = −lin_scale · r
    let q1 = &r.r1 * (-lin_scale);
    let q2 = &r.r2 * (-lin_scale);
    let q3 = &r.r3 * (-lin_scale);
    let q4 = -lin_scale * r.r4;
    let lam_div = scaling.lambda_op(ds_target, true);
    let wt_lam_div = DVector::from_vec(scaling.apply(Op::WT, &lam_div));
    let rz = -q3 - &wt_lam_div;
    let u2 = kkt.solve(data, scaling, &q1, &(-q2), &rz)?;
    let (u1x, u1y, u1z) = u1;
    let (u2x, u2y, u2z) = u2;
    let num = q4 + data.c.dot(&u2x) + data.b.dot(&u2y) + data.h.dot(&u2z) + dkappa_target / it.tau;
    let den = it.kappa / it.tau - data.c.dot(u1x) - data.b.dot(u1y) - data.h.dot(u1z);
    let dtau = num / den;
    if !dtau.is_finite() {
        return None;
    }
    let dx = u2x + u1x * dtau;
    let dy = u2y + u1y * dtau;
    let dz = u2z + u1z * dtau;
    let wdz = scaling.apply(Op::W, dz.as_slice());
    let inner: Vec<f64> = lam_div.iter().zip(&wdz).map(|(a, b)| a - b).collect();
    let ds = DVector::from_vec(scaling.apply(Op::WT, &inner));
    let dkappa = (dkappa_target - it.kappa * dtau) / it.tau;
    Some(Direction {
        dx,
        dy,
        dz,
        ds,
        dtau,
        dkappa,
    })
}

fn step_length(blocks: &[Block], it: &Iterate, d: &Direction) -> f64 {
    let mut a = cones::max_step(blocks, it.s.as_slice(), d.ds.as_slice())
        .min(cones::max_step(blocks, it.z.as_slice(), d.dz.as_slice()));
    if d.dtau < 0.0 {
        a = a.min(-it.tau / d.dtau);
    }
    if d.dkappa < 0.0 {
        a = a.min(-it.kappa / d.dkappa);
    }
    a
}

struct Residual {
    r1: DVector<f64>,
    r2: DVector<f64>,
    r3: DVector<f64>,
    r4: f64,
}

fn residual(data: &Data, it: &Iterate) -> Residual {
    let r1 = data.a.tr_mul(&it.y) + data.g.tr_mul(&it.z) + data.c * it.tau;
    let r2 = -(&data.a * &it.x) + &data.b * it.tau;
    let r3 = -(&data.g * &it.x) + &data.h * it.tau - &it.s;
    let r4 = -data.c.dot(&it.x) - data.b.dot(&it.y) - data.h.dot(&it.z) - it.kappa;
    Residual { r1, r2, r3, r4 }
}

/// Solves a [`ConicProblem`]. Never panics on numerical trouble; breakdowns
/// are reported as [`SolveStatus::MaxIterations`].
pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> ConicSolution {
    let (a, b) = problem.stacked_ab();
    let (g, h) = problem.stacked_gh();
    let blocks = cones::layout(problem.cones());
    let block_cols = blocks
        .iter()
        .map(|blk| {
            (0..g.ncols())
                .filter(|&j| (0..blk.dim).any(|i| g[(blk.offset + i, j)] != 0.0))
                .collect()
        })
        .collect();
    let data = Data {
        c: problem.objective(),
        a,
        b,
        g,
        h,
        blocks,
        block_cols,
    };
    let (n, p, m) = (data.n(), data.p(), data.m());

    let failed = |iterations: usize, x: DVector<f64>| ConicSolution {
        residuals: problem.residuals(&x),
        x,
        y: DVector::zeros(p),
        z: DVector::zeros(m),
        status: SolveStatus::MaxIterations,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        iterations,
    };

    if m == 0 {
        // No cone constraints: only equality-constrained LPs, which we do not need.
        return failed(0, DVector::zeros(n));
    }

    let mut scaling = Scaling::identity(&data.blocks, m);
    let zero_n = DVector::zeros(n);
    let zero_p = DVector::zeros(p);
    let zero_m = DVector::zeros(m);
    let start = factor_and_solve(&data, &scaling, |kkt| {
        let ((x0, _, zp), e1) = kkt.solve_refined(&data, &scaling, &zero_n, &data.b, &data.h)?;
        let ((_, y0, zd), e2) = kkt.solve_refined(&data, &scaling, &(-data.c), &zero_p, &zero_m)?;
        Some(((x0, zp, y0, zd), e1.max(e2)))
    })
    .map(|(_, v)| v);
    let Some((x0, zp, y0, zd)) = start else {
        return failed(0, DVector::zeros(n));
    };
    let mut s0 = -zp;
    shift_into_cone(&data.blocks, &mut s0);
    let mut z0 = zd;
    shift_into_cone(&data.blocks, &mut z0);
    let mut it = Iterate {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };

    let degree = cones::degree(&data.blocks) as f64;
    let norm_b = data.b.norm().max(1.0);
    let norm_h = data.h.norm().max(1.0);
    let norm_c = data.c.norm().max(1.0);
    let e = cones::identity(&data.blocks, m);
    let mut stalls = 0;
    let mut iterations = 0;
    // (merit, iterate) with merit ≤ 1 meaning every tolerance is met
    let mut best: Option<(f64, Iterate)> = None;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let r = residual(&data, &it);
        let tau = it.tau;
        let pres = (r.r2.norm() / norm_b).max(r.r3.norm() / norm_h) / tau;
        let dres = r.r1.norm() / norm_c / tau;
        let gap = it.s.dot(&it.z) / (tau * tau);
        let pcost = data.c.dot(&it.x) / tau;
        let dcost = -(data.b.dot(&it.y) + data.h.dot(&it.z)) / tau;
        let relgap = if pcost < 0.0 {
            gap / -pcost
        } else if dcost > 0.0 {
            gap / dcost
        } else {
            f64::INFINITY
        };

        if pres <= opts.feastol && dres <= opts.feastol && (gap <= opts.abstol || relgap <= opts.reltol) {
            let x = &it.x / tau;
            return ConicSolution {
                residuals: problem.residuals(&x),
                x,
                y: &it.y / tau,
                z: &it.z / tau,
                status: SolveStatus::Optimal,
                primal_objective: pcost,
                dual_objective: dcost,
                iterations: iter,
            };
        }

        let hz_by = data.h.dot(&it.z) + data.b.dot(&it.y);
        if hz_by < 0.0 {
            let cert = (data.a.tr_mul(&it.y) + data.g.tr_mul(&it.z)).norm() / -hz_by;
            if cert <= opts.feastol {
                return ConicSolution {
                    residuals: Residuals::default(),
                    x: DVector::zeros(n),
                    y: &it.y / -hz_by,
                    z: &it.z / -hz_by,
                    status: SolveStatus::Infeasible,
                    primal_objective: f64::INFINITY,
                    dual_objective: f64::INFINITY,
                    iterations: iter,
                };
            }
        }
        let cx = data.c.dot(&it.x);
        if cx < 0.0 {
            let ax = (&data.a * &it.x).norm();
            let gxs = (&data.g * &it.x + &it.s).norm();
            if ax.max(gxs) / -cx <= opts.feastol {
                return ConicSolution {
                    residuals: Residuals::default(),
                    x: &it.x / -cx,
                    y: DVector::zeros(p),
                    z: DVector::zeros(m),
                    status: SolveStatus::Unbounded,
                    primal_objective: f64::NEG_INFINITY,
                    dual_objective: f64::NEG_INFINITY,
                    iterations: iter,
                };
            }
        }
        let merit = (pres / opts.feastol)
            .max(dres / opts.feastol)
            .max((gap / opts.abstol).min(relgap / opts.reltol));
        match &best {
            Some((b, _)) if merit >= *b => {
                if *b <= REDUCED_ACCURACY && merit > DIVERGENCE * b {
                    break;
                }
            }
            _ => best = Some((merit, it.clone())),
        }
        if iter == opts.max_iter || stalls >= 3 {
            break;
        }

        let Some(sc) = Scaling::compute(&data.blocks, it.s.as_slice(), it.z.as_slice()) else {
            break;
        };
        scaling = sc;
        let Some((kkt, u1)) = factor_and_solve(&data, &scaling, |kkt| {
            kkt.solve_refined(&data, &scaling, &(-data.c), &data.b, &data.h)
        }) else {
            break;
        };
        let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (degree + 1.0);

        // predictor
        let lam_sq = scaling.lambda_op(&scaling.lambda, false);
        let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let Some(aff) = direction(&data, &kkt, &scaling, &it, &u1, 1.0, &r, &ds_aff, -it.tau * it.kappa) else {
            break;
        };
        let alpha_aff = step_length(&data.blocks, &it, &aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let wis = scaling.apply(Op::WInvT, aff.ds.as_slice());
        let wz = scaling.apply(Op::W, aff.dz.as_slice());
        let corr = cones::jordan_product(&data.blocks, &wis, &wz);
        let ds_comb: Vec<f64> = (0..m).map(|i| -lam_sq[i] - corr[i] + sigma * mu * e[i]).collect();
        let dk_comb = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mu;
        let Some(d) = direction(&data, &kkt, &scaling, &it, &u1, 1.0 - sigma, &r, &ds_comb, dk_comb) else {
            break;
        };
        let alpha = (opts.step_fraction * step_length(&data.blocks, &it, &d)).min(1.0);
        if !(alpha > STALL_STEP) {
            stalls += 1;
            continue;
        }
        stalls = 0;
        it.x += &d.dx * alpha;
        it.y += &d.dy * alpha;
        it.z += &d.dz * alpha;
        it.s += &d.ds * alpha;
        it.tau += alpha * d.dtau;
        it.kappa += alpha * d.dkappa;
    }

    let (status, it) = match best {
        Some((merit, b)) if merit <= REDUCED_ACCURACY => (SolveStatus::Optimal, b),
        Some((_, b)) => (SolveStatus::MaxIterations, b),
        None => (SolveStatus::MaxIterations, it),
    };
    let tau = it.tau.max(f64::MIN_POSITIVE);
    let x = &it.x / tau;
    ConicSolution {
        residuals: problem.residuals(&x),
        primal_objective: data.c.dot(&x),
        dual_objective: -(data.b.dot(&it.y) + data.h.dot(&it.z)) / tau,
        x,
        y: &it.y / tau,
        z: &it.z / tau,
        status,
        iterations,
    }
}
