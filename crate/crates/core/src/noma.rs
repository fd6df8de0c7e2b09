//! Beamformer design by a double-layer penalty method.
//!
//! The beamformers are lifted to covariances `W_m = w_m w_m^H` and
//! `W_u = w_u w_u^H`. The rank-one requirement is written as
//! `‖W‖_* − ‖W‖_2 = 0` and moved into the objective with weight `1/η`.
//! The inner loop replaces the concave part `−‖W‖_2` by its first-order
//! upper bound at the current iterate and re-solves until the objective
//! stops improving; the outer loop shrinks `η` geometrically until both
//! residuals vanish.
//!
//! Inside the solver every covariance is measured in units of `P_max` and
//! every received power in units of the receiver noise. Rank residuals in
//! reports are therefore fractions of `P_max`. The public API takes and
//! returns covariances in watts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::beampattern::{compress_affine, gain_map, pattern_error, IdealPatternSolution};
use crate::conic::{self, ConicProblem, HermitianParam, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::hermitian::{ComplexVector, HermitianMatrix, C64};
use crate::scenario::{BeamformerPair, Rates, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    /// Initial penalty factor; the penalty weight is `1/η`.
    pub eta0: f64,
    /// `η ← epsilon_scale · η` after every inner loop.
    pub epsilon_scale: f64,
    /// Inner loop stops once the fractional objective reduction is at most this.
    pub eps_inner: f64,
    /// Outer loop stops once both rank residuals are at most this (units of `P_max`).
    pub eps_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// After convergence, keep following the `η` schedule until both
    /// residuals are at most this, so that the extracted beamformers meet the
    /// rate, power and pattern constraints to tight tolerances.
    pub polish_tol: f64,
    /// Cap on the extra outer iterations spent polishing.
    pub polish_max_outer: usize,
    pub solver: SolverOptions,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            eta0: 1e4,
            epsilon_scale: 0.5,
            eps_inner: 1e-2,
            eps_outer: 1e-5,
            max_inner: 100,
            max_outer: 60,
            polish_tol: 1e-8,
            polish_max_outer: 20,
            solver: SolverOptions {
                abstol: 1e-9,
                reltol: 1e-9,
                ..SolverOptions::default()
            },
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0 must be positive");
        }
        if !(self.epsilon_scale > 0.0 && self.epsilon_scale < 1.0) {
            return bad("epsilon_scale must lie in (0, 1)");
        }
        if !(self.eps_inner > 0.0 && self.eps_outer > 0.0 && self.polish_tol > 0.0) {
            return bad("convergence thresholds must be positive");
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return bad("iteration caps must be >= 1");
        }
        Ok(())
    }

    /// Penalty factor used in outer iteration `k` (zero-based).
    pub fn eta(&self, k: usize) -> f64 {
        self.eta0 * self.epsilon_scale.powi(k as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    InfeasibleInit,
}

/// Covariances of one iterate, in watts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateState {
    pub w_m: HermitianMatrix,
    pub w_u: HermitianMatrix,
    /// `W_m + W_u`.
    pub r1: HermitianMatrix,
    pub eta: f64,
    /// Penalized objective in normalized units (see module docs).
    pub inner_objective: f64,
    /// `‖W‖_* − ‖W‖_2` for `(W_m, W_u)` as fractions of `P_max`.
    pub rank_residuals: [f64; 2],
}

/// First-order upper bound of `−‖W‖_2` around a PSD expansion point.
#[derive(Debug, Clone)]
pub struct ScaBound {
    /// `‖W_at‖_2`.
    pub spectral_norm: f64,
    /// Principal eigenvector of `W_at`.
    pub v: ComplexVector,
    /// `v^H W_at v`.
    anchor: f64,
}

impl ScaBound {
    /// `−‖W_at‖_2 − ⟨v v^H, W − W_at⟩`.
    pub fn eval(&self, w: &HermitianMatrix) -> f64 {
        -self.spectral_norm - (w.quad_form(&self.v) - self.anchor)
    }
}

/// Linearizes `−‖W‖_2` at `w_at`. Ties in the top eigenvalue are broken by
/// taking the first vector of the sorted decomposition.
pub fn sca_linearize(w_at: &HermitianMatrix) -> Result<ScaBound> {
    let eig = w_at.eig()?;
    let (_, v) = eig.largest();
    let v = v.clone();
    Ok(ScaBound {
        spectral_norm: w_at.spectral_norm()?,
        anchor: w_at.quad_form(&v),
        v,
    })
}

/// `w = sqrt(λ_max)·v_max`, refused when `rank_one_residual(w) > tolerance`.
pub fn extract(w: &HermitianMatrix, tolerance: f64) -> Result<ComplexVector> {
    let residual = rank_residual(w)?;
    if !(residual <= tolerance) {
        return Err(Error::Extraction { residual, tolerance });
    }
    let eig = w.eig()?;
    let (lambda, v) = eig.largest();
    Ok(v.scale(C64::from(lambda.max(0.0).sqrt())))
}

/// `‖W‖_* − ‖W‖_2` without the PSD precondition, for solver outputs.
fn rank_residual(w: &HermitianMatrix) -> Result<f64> {
    Ok((w.nuclear_norm()? - w.spectral_norm()?).max(0.0))
}

/// `Tr(C_m W_m) + Tr(C_u W_u) + constant ≥ 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearRow {
    pub c_m: HermitianMatrix,
    pub c_u: HermitianMatrix,
    pub constant: f64,
}

impl LinearRow {
    #[cfg(test)]
    pub fn eval(&self, w_m: &HermitianMatrix, w_u: &HermitianMatrix) -> f64 {
        self.c_m.inner(w_m) + self.c_u.inner(w_u) + self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PowerBudget {
    /// `Tr(W_m + W_u) = 1`.
    Shared,
    /// `Tr(W_m) = Tr(W_u) = 1`.
    PerSlot,
}

/// `‖B·vec(a_m W_m + a_u W_u) + b‖ ≤ bound`.
#[derive(Debug, Clone)]
pub(crate) struct RadarSoc {
    pub weight_m: f64,
    pub weight_u: f64,
    pub body: DMatrix<f64>,
    pub offset: Vec<f64>,
    pub bound: f64,
}

impl RadarSoc {
    /// Pattern-error constraint `Δ(a_m W_m + a_u W_u, δ*) ≤ (1 + γ̄_b)·Δ0` in
    /// normalized units; `None` when `γ̄_b` is infinite.
    pub fn new(scenario: &Scenario, ideal: &IdealPatternSolution, weight_m: f64, weight_u: f64) -> Option<Self> {
        let gamma_b = scenario.params.gamma_b;
        if !gamma_b.is_finite() {
            return None;
        }
        let p = scenario.params.p_max;
        let f = -gain_map(&scenario.grid);
        let d = DVector::from_iterator(
            scenario.desired.len(),
            scenario.desired.gains.iter().map(|g| g * ideal.delta_star / p),
        );
        let (body, offset) = compress_affine(&f, &d);
        Some(Self {
            weight_m,
            weight_u,
            body,
            offset,
            bound: ((1.0 + gamma_b) * ideal.delta0).sqrt() / p,
        })
    }
}

/// Convex part shared by every scheme: two lifted PSD variables, linear
/// rate constraints, a power budget and the radar constraint. The objective
/// is `−Tr(G_u W_u)`.
#[derive(Debug, Clone)]
pub(crate) struct LiftedProblem {
    pub n: usize,
    pub gain_u: HermitianMatrix,
    pub rows: Vec<LinearRow>,
    pub power: PowerBudget,
    pub radar: Option<RadarSoc>,
    pub solver: SolverOptions,
}

/// Principal directions and weight of the linearized rank penalty.
pub(crate) struct Penalty<'a> {
    pub weight: f64,
    pub v_m: &'a ComplexVector,
    pub v_u: &'a ComplexVector,
}

impl LiftedProblem {
    fn params(&self) -> (HermitianParam, HermitianParam) {
        let pm = HermitianParam::new(self.n, 0);
        (pm, HermitianParam::new(self.n, pm.end()))
    }

    pub fn build(&self, penalty: Option<&Penalty>) -> Result<ConicProblem> {
        let n = self.n;
        let (pm, pu) = self.params();
        let nvars = pu.end();
        let mut prob = ConicProblem::new(nvars);

        let mut c = vec![0.0; nvars];
        pu.add_trace_coeffs(&self.gain_u, -1.0, &mut c);
        if let Some(pen) = penalty {
            pm.add_identity_trace_coeffs(pen.weight, &mut c);
            pm.add_trace_coeffs(&pen.v_m.outer(), -pen.weight, &mut c);
            pu.add_identity_trace_coeffs(pen.weight, &mut c);
            pu.add_trace_coeffs(&pen.v_u.outer(), -pen.weight, &mut c);
        }
        prob.set_objective(&c)?;

        for r in &self.rows {
            let scale = r
                .c_m
                .frobenius_norm()
                .max(r.c_u.frobenius_norm())
                .max(r.constant.abs())
                .max(f64::MIN_POSITIVE);
            let mut row = vec![0.0; nvars];
            pm.add_trace_coeffs(&r.c_m, 1.0 / scale, &mut row);
            pu.add_trace_coeffs(&r.c_u, 1.0 / scale, &mut row);
            prob.add_nonneg(&row, r.constant / scale)?;
        }

        match self.power {
            PowerBudget::Shared => {
                let mut row = vec![0.0; nvars];
                pm.add_identity_trace_coeffs(1.0, &mut row);
                pu.add_identity_trace_coeffs(1.0, &mut row);
                prob.add_equality(&row, 1.0)?;
            }
            PowerBudget::PerSlot => {
                for p in [pm, pu] {
                    let mut row = vec![0.0; nvars];
                    p.add_identity_trace_coeffs(1.0, &mut row);
                    prob.add_equality(&row, 1.0)?;
                }
            }
        }

        if let Some(radar) = &self.radar {
            let k = radar.body.ncols();
            let mut body = DMatrix::zeros(radar.body.nrows(), nvars);
            body.columns_mut(pm.offset, k).copy_from(&(&radar.body * radar.weight_m));
            body.columns_mut(pu.offset, k).copy_from(&(&radar.body * radar.weight_u));
            prob.add_soc(&vec![0.0; nvars], radar.bound, &body, &radar.offset)?;
        }

        let zero = DMatrix::zeros(2 * n, 2 * n);
        prob.add_psd(&zero, &pm.embedding_terms(1.0))?;
        prob.add_psd(&zero, &pu.embedding_terms(1.0))?;
        Ok(prob)
    }

    /// Solves the relaxation (no penalty) or a linearized penalty subproblem.
    pub fn solve(&self, penalty: Option<&Penalty>, context: &str) -> Result<(HermitianMatrix, HermitianMatrix)> {
        let prob = self.build(penalty)?;
        let sol = conic::solve(&prob, &self.solver);
        if sol.status == SolveStatus::Infeasible {
            return Err(Error::Infeasible(context.to_string()));
        }
        let sol = sol.require_optimal(context)?;
        let (pm, pu) = self.params();
        Ok((pm.extract(&sol.x), pu.extract(&sol.x)))
    }

    /// Penalized objective `−Tr(G_u W_u) + ρ·Σ(‖W‖_* − ‖W‖_2)`.
    pub fn penalized(&self, w_m: &HermitianMatrix, w_u: &HermitianMatrix, weight: f64) -> Result<f64> {
        Ok(-self.gain_u.inner(w_u) + weight * (rank_residual(w_m)? + rank_residual(w_u)?))
    }

    /// Inner SCA loop at fixed penalty weight starting from `(w_m, w_u)`.
    pub fn inner_loop(
        &self,
        mut w_m: HermitianMatrix,
        mut w_u: HermitianMatrix,
        eta: f64,
        config: &PenaltyConfig,
    ) -> Result<InnerLoop> {
        let weight = 1.0 / eta;
        let mut objectives = vec![self.penalized(&w_m, &w_u, weight)?];
        let mut stalled = true;
        for it in 0..config.max_inner {
            let bm = sca_linearize(&w_m)?;
            let bu = sca_linearize(&w_u)?;
            let pen = Penalty {
                weight,
                v_m: &bm.v,
                v_u: &bu.v,
            };
            let context = format!("penalty subproblem (eta {eta:e}, inner iteration {it})");
            (w_m, w_u) = self.solve(Some(&pen), &context)?;
            let prev = *objectives.last().expect("seeded with the starting value");
            let cur = self.penalized(&w_m, &w_u, weight)?;
            objectives.push(cur);
            if prev - cur <= config.eps_inner * prev.abs().max(f64::MIN_POSITIVE) {
                stalled = false;
                break;
            }
        }
        Ok(InnerLoop {
            w_m,
            w_u,
            objectives,
            stalled,
        })
    }

    /// Relaxation followed by the full penalty path.
    pub fn run(&self, config: &PenaltyConfig) -> Result<PenaltyPath> {
        config.validate()?;
        let (w_m, w_u) = match self.solve(None, "relaxed initialization") {
            Ok(w) => w,
            Err(Error::Infeasible(_)) => {
                return Ok(PenaltyPath {
                    status: RunStatus::InfeasibleInit,
                    w_m: None,
                    w_u: None,
                    trace: Vec::new(),
                })
            }
            Err(e) => return Err(e),
        };
        let (mut w_m, mut w_u) = (w_m, w_u);
        let mut trace: Vec<OuterRecord> = Vec::new();
        let mut status = RunStatus::MaxIterations;
        // least-residual iterate seen since convergence
        let mut best: Option<(f64, HermitianMatrix, HermitianMatrix)> = None;
        let mut polish_used = 0;
        for k in 0.. {
            let polish = status == RunStatus::Converged;
            if polish {
                if polish_used == config.polish_max_outer {
                    break;
                }
                polish_used += 1;
            } else if k == config.max_outer {
                break;
            }
            let eta = config.eta(k);
            let inner = self.inner_loop(w_m, w_u, eta, config)?;
            w_m = inner.w_m;
            w_u = inner.w_u;
            let rank_residuals = [rank_residual(&w_m)?, rank_residual(&w_u)?];
            let worst = rank_residuals[0].max(rank_residuals[1]);
            trace.push(OuterRecord {
                eta,
                inner_iterations: inner.objectives.len() - 1,
                objective: *inner.objectives.last().expect("non-empty"),
                rank_residuals,
                inner_objectives: inner.objectives,
                stalled: inner.stalled,
                polish,
            });
            if worst <= config.eps_outer {
                status = RunStatus::Converged;
                if best.as_ref().is_none_or(|b| worst < b.0) {
                    best = Some((worst, w_m.clone(), w_u.clone()));
                }
                if worst <= config.polish_tol {
                    break;
                }
            }
        }
        if let Some((_, m, u)) = best {
            w_m = m;
            w_u = u;
        }
        Ok(PenaltyPath {
            status,
            w_m: Some(w_m),
            w_u: Some(w_u),
            trace,
        })
    }
}

pub(crate) struct InnerLoop {
    pub w_m: HermitianMatrix,
    pub w_u: HermitianMatrix,
    pub objectives: Vec<f64>,
    pub stalled: bool,
}

/// Outcome of [`LiftedProblem::run`], covariances in normalized units.
pub(crate) struct PenaltyPath {
    pub status: RunStatus,
    pub w_m: Option<HermitianMatrix>,
    pub w_u: Option<HermitianMatrix>,
    pub trace: Vec<OuterRecord>,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub eta: f64,
    pub inner_iterations: usize,
    /// Penalized objective after the inner loop (normalized units).
    pub objective: f64,
    /// Rank residuals of `(W_m, W_u)` as fractions of `P_max`.
    pub rank_residuals: [f64; 2],
    /// Starting value followed by the value after every inner iteration.
    pub inner_objectives: Vec<f64>,
    /// The inner loop hit `max_inner` without meeting its threshold.
    pub stalled: bool,
    /// Spent after the convergence criterion was met.
    pub polish: bool,
}

impl OuterRecord {
    pub fn max_rank_residual(&self) -> f64 {
        self.rank_residuals[0].max(self.rank_residuals[1])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: RunStatus,
    pub rates: Option<Rates>,
    /// `Δ(R_1, δ*)/Δ0 − 1` for the extracted beamformers.
    pub mismatch_ratio: Option<f64>,
    pub trace: Vec<OuterRecord>,
    pub beamformers: Option<BeamformerPair>,
    /// Total transmit power of the extracted beamformers, in watts.
    pub power: Option<f64>,
    /// Number of inner loops that hit `max_inner`.
    pub inner_stalls: usize,
    /// Final lifted covariances in watts.
    #[serde(skip)]
    pub covariances: Option<(HermitianMatrix, HermitianMatrix)>,
}

impl SolveReport {
    pub fn is_converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Radar covariance `w_m w_m^H + w_u w_u^H` of the extracted beamformers.
    pub fn covariance(&self) -> Option<HermitianMatrix> {
        self.beamformers.as_ref().map(BeamformerPair::covariance)
    }
}

/// `γ̄_m = 2^R̄ − 1` rows: multicast SINR at the C-user and at the R-user
/// with unicast treated as interference.
pub(crate) fn multicast_rows(scenario: &Scenario, gamma: f64) -> [LinearRow; 2] {
    let (gc, gr) = normalized_grams(scenario);
    [
        LinearRow {
            c_m: gc.clone(),
            c_u: gc.scale(-gamma),
            constant: -gamma,
        },
        LinearRow {
            c_m: gr.clone(),
            c_u: gr.scale(-gamma),
            constant: -gamma,
        },
    ]
}

/// Channel Gram matrices in units of noise power per `P_max`.
pub(crate) fn normalized_grams(scenario: &Scenario) -> (HermitianMatrix, HermitianMatrix) {
    let p = &scenario.params;
    (
        scenario.channels.gram_c().scale(p.p_max / p.sigma2_c),
        scenario.channels.gram_r().scale(p.p_max / p.sigma2_r),
    )
}

/// Objective `Tr(Ĥ_c W_u)/Tr(Ĥ_c)`, which lies in `[0, 1]` on the feasible set.
pub(crate) fn unicast_gain(scenario: &Scenario) -> HermitianMatrix {
    let (gc, _) = normalized_grams(scenario);
    let s = gc.trace().max(f64::MIN_POSITIVE);
    gc.scale(1.0 / s)
}

pub(crate) fn noma_problem(scenario: &Scenario, ideal: &IdealPatternSolution, config: &PenaltyConfig) -> LiftedProblem {
    LiftedProblem {
        n: scenario.params.n_antennas,
        gain_u: unicast_gain(scenario),
        rows: multicast_rows(scenario, scenario.params.gamma_m()).to_vec(),
        power: PowerBudget::Shared,
        radar: RadarSoc::new(scenario, ideal, 1.0, 1.0),
        solver: config.solver,
    }
}

fn to_state(
    problem: &LiftedProblem,
    w_m: &HermitianMatrix,
    w_u: &HermitianMatrix,
    eta: f64,
    p_max: f64,
) -> Result<IterateState> {
    Ok(IterateState {
        w_m: w_m.scale(p_max),
        w_u: w_u.scale(p_max),
        r1: w_m.add(w_u).scale(p_max),
        eta,
        inner_objective: problem.penalized(w_m, w_u, 1.0 / eta)?,
        rank_residuals: [rank_residual(w_m)?, rank_residual(w_u)?],
    })
}

/// Solves the rank-relaxed problem with the true objective. An empty
/// constraint set is reported as [`Error::Infeasible`].
pub fn initialize(scenario: &Scenario, ideal: &IdealPatternSolution, config: &PenaltyConfig) -> Result<IterateState> {
    let problem = noma_problem(scenario, ideal, config);
    let (w_m, w_u) = problem.solve(None, "relaxed initialization")?;
    to_state(&problem, &w_m, &w_u, config.eta0, scenario.params.p_max)
}

/// Result of one inner SCA loop.
#[derive(Debug, Clone)]
pub struct InnerResult {
    pub state: IterateState,
    /// Starting value followed by the value after every inner iteration.
    pub objectives: Vec<f64>,
    pub stalled: bool,
}

/// Runs the inner loop at `state.eta` from `state`.
pub fn inner_solve(
    state: &IterateState,
    scenario: &Scenario,
    ideal: &IdealPatternSolution,
    config: &PenaltyConfig,
) -> Result<InnerResult> {
    config.validate()?;
    let p = scenario.params.p_max;
    let problem = noma_problem(scenario, ideal, config);
    let inner = problem.inner_loop(state.w_m.scale(1.0 / p), state.w_u.scale(1.0 / p), state.eta, config)?;
    Ok(InnerResult {
        state: to_state(&problem, &inner.w_m, &inner.w_u, state.eta, p)?,
        objectives: inner.objectives,
        stalled: inner.stalled,
    })
}

/// Pattern error of `r1` relative to the radar-only optimum, minus one.
pub fn mismatch_ratio(r1: &HermitianMatrix, scenario: &Scenario, ideal: &IdealPatternSolution) -> f64 {
    pattern_error(r1, ideal.delta_star, &scenario.grid, &scenario.desired) / ideal.delta0 - 1.0
}

/// Rank-one beamformers from normalized converged covariances, in watts,
/// rescaled onto the power equality of `budget`.
pub(crate) fn extract_pair(
    w_m: &HermitianMatrix,
    w_u: &HermitianMatrix,
    p_max: f64,
    eps_outer: f64,
    budget: PowerBudget,
) -> Result<BeamformerPair> {
    let tol = eps_outer * p_max;
    let mut bm = extract(&w_m.scale(p_max), tol)?;
    let mut bu = extract(&w_u.scale(p_max), tol)?;
    let rescale = |v: &ComplexVector, k: f64| v.scale(C64::from(k));
    match budget {
        PowerBudget::Shared => {
            let total = bm.norm_sqr() + bu.norm_sqr();
            if total > 0.0 {
                let k = (p_max / total).sqrt();
                bm = rescale(&bm, k);
                bu = rescale(&bu, k);
            }
        }
        PowerBudget::PerSlot => {
            for b in [&mut bm, &mut bu] {
                let power = b.norm_sqr();
                if power > 0.0 {
                    *b = rescale(b, (p_max / power).sqrt());
                }
            }
        }
    }
    BeamformerPair::new(bm, bu)
}

/// Full penalty method: relaxation, inner SCA loops, `η` updates, and
/// rank-one extraction on convergence.
pub fn outer_loop(scenario: &Scenario, ideal: &IdealPatternSolution, config: &PenaltyConfig) -> Result<SolveReport> {
    let problem = noma_problem(scenario, ideal, config);
    let path = problem.run(config)?;
    let p = scenario.params.p_max;
    let inner_stalls = path.trace.iter().filter(|r| r.stalled).count();
    let covariances = match (&path.w_m, &path.w_u) {
        (Some(m), Some(u)) => Some((m.scale(p), u.scale(p))),
        _ => None,
    };
    let mut report = SolveReport {
        status: path.status,
        rates: None,
        mismatch_ratio: None,
        trace: path.trace,
        beamformers: None,
        power: None,
        inner_stalls,
        covariances,
    };
    match path.status {
        RunStatus::Converged => {
            let (w_m, w_u) = (path.w_m.expect("set"), path.w_u.expect("set"));
            let bf = extract_pair(&w_m, &w_u, p, config.eps_outer, PowerBudget::Shared)?;
            report.rates = Some(Rates::from_beamformers(&bf, &scenario.channels, &scenario.params));
            report.mismatch_ratio = Some(mismatch_ratio(&bf.covariance(), scenario, ideal));
            report.power = Some(bf.power());
            report.beamformers = Some(bf);
        }
        RunStatus::MaxIterations => {
            let (m, u) = report.covariances.clone().expect("set");
            report.rates = Some(Rates::from_covariances(&m, &u, &scenario.channels, &scenario.params));
            report.mismatch_ratio = Some(mismatch_ratio(&m.add(&u), scenario, ideal));
        }
        RunStatus::InfeasibleInit => {}
    }
    Ok(report)
}
