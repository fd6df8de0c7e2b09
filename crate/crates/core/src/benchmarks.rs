//! Comparison schemes without superposition coding.
//!
//! * TDMA: multicast and unicast occupy alternate, equal-length slots at
//!   full power each; the radar constraint applies to the time-averaged
//!   covariance `½(W_m + W_u)`.
//! * CBF without SIC: same superposition and constraints as the proposed
//!   scheme, but the C-user decodes unicast while treating multicast as
//!   interference. The unicast SINR is maximized by bisection.
//!
//! Both reuse the lifted problem and penalty machinery of [`crate::noma`].

use serde::{Deserialize, Serialize};

use crate::beampattern::IdealPatternSolution;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::noma::{
    extract_pair, mismatch_ratio, multicast_rows, normalized_grams, unicast_gain, LiftedProblem, LinearRow,
    OuterRecord, PenaltyConfig, PowerBudget, RadarSoc, RunStatus,
};
use crate::scenario::{BeamformerPair, ChannelPair, Rates, Scenario, SystemParams};

/// Relative width of the final SINR bracket, `ln(hi/lo)`.
pub const BISECTION_TOL: f64 = 1e-3;
const MAX_BISECTION_STEPS: usize = 60;
/// Safety margin on SINR values read off approximate relaxed solutions.
const RELAXED_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    RadarOnly,
    Noma,
    Tdma,
    CbfNoSic,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::RadarOnly, Scheme::Noma, Scheme::Tdma, Scheme::CbfNoSic];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::RadarOnly => "radar_only",
            Scheme::Noma => "noma",
            Scheme::Tdma => "tdma",
            Scheme::CbfNoSic => "cbf_no_sic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BisectionStage {
    /// Feasibility of the rank-relaxed problem.
    Relaxation,
    /// Convergence of the penalty method.
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub stage: BisectionStage,
    pub gamma: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub scheme: Scheme,
    pub status: RunStatus,
    /// Effective unicast rate in bit/s/Hz.
    pub unicast: Option<f64>,
    /// Effective multicast rate in bit/s/Hz.
    pub multicast: Option<f64>,
    pub mismatch_ratio: Option<f64>,
    pub beamformers: Option<BeamformerPair>,
    /// Covariance seen by the radar (time-averaged for TDMA).
    pub covariance: Option<HermitianMatrix>,
    /// Penalty-method trace of the reported solution.
    pub trace: Vec<OuterRecord>,
    /// Bisection history (CBF only).
    pub bisection: Vec<BisectionStep>,
    /// Final `[lo, hi]` SINR bracket (CBF only).
    pub sinr_bracket: Option<[f64; 2]>,
}

impl BenchmarkResult {
    fn empty(scheme: Scheme, status: RunStatus) -> Self {
        Self {
            scheme,
            status,
            unicast: None,
            multicast: None,
            mismatch_ratio: None,
            beamformers: None,
            covariance: None,
            trace: Vec::new(),
            bisection: Vec::new(),
            sinr_bracket: None,
        }
    }

    pub fn is_converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// Time-shared rates `(unicast, multicast)`: each stream gets half the time
/// and no interference.
pub fn tdma_rates(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> (f64, f64) {
    let snr = |h: &crate::ComplexVector, w: &crate::ComplexVector, s2: f64| h.dot(w).norm_sqr() / s2;
    let unicast = 0.5 * (1.0 + snr(&ch.h_c, &bf.w_u, params.sigma2_c)).log2();
    let at_c = (1.0 + snr(&ch.h_c, &bf.w_m, params.sigma2_c)).log2();
    let at_r = (1.0 + snr(&ch.h_r, &bf.w_m, params.sigma2_r)).log2();
    (unicast, 0.5 * at_c.min(at_r))
}

/// Rates without SIC: unicast sees multicast as interference; multicast
/// decoding is the same as in the superposition scheme.
pub fn cbf_rates(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> (f64, f64) {
    let c_m = ch.h_c.dot(&bf.w_m).norm_sqr();
    let c_u = ch.h_c.dot(&bf.w_u).norm_sqr();
    let unicast = (1.0 + c_u / (c_m + params.sigma2_c)).log2();
    (unicast, Rates::from_beamformers(bf, ch, params).multicast)
}

pub(crate) fn tdma_problem(scenario: &Scenario, ideal: &IdealPatternSolution, config: &PenaltyConfig) -> LiftedProblem {
    let n = scenario.params.n_antennas;
    let (gc, gr) = normalized_grams(scenario);
    // half the time at rate R̄ per slot needs SNR 2^(2R̄) − 1
    let gamma = 2f64.powf(2.0 * scenario.params.rate_multicast_min) - 1.0;
    let rows = [gc, gr]
        .into_iter()
        .map(|g| LinearRow {
            c_m: g,
            c_u: HermitianMatrix::zeros(n),
            constant: -gamma,
        })
        .collect();
    LiftedProblem {
        n,
        gain_u: unicast_gain(scenario),
        rows,
        power: PowerBudget::PerSlot,
        radar: RadarSoc::new(scenario, ideal, 0.5, 0.5),
        solver: config.solver,
    }
}

pub fn solve_tdma(scenario: &Scenario, ideal: &IdealPatternSolution, config: &PenaltyConfig) -> Result<BenchmarkResult> {
    let problem = tdma_problem(scenario, ideal, config);
    let path = problem.run(config)?;
    let mut out = BenchmarkResult::empty(Scheme::Tdma, path.status);
    out.trace = path.trace;
    if path.status == RunStatus::Converged {
        let (w_m, w_u) = (path.w_m.expect("set"), path.w_u.expect("set"));
        let bf = extract_pair(&w_m, &w_u, scenario.params.p_max, config.eps_outer, PowerBudget::PerSlot)?;
        let (u, m) = tdma_rates(&bf, &scenario.channels, &scenario.params);
        let r1 = bf.covariance().scale(0.5);
        out.unicast = Some(u);
        out.multicast = Some(m);
        out.mismatch_ratio = Some(mismatch_ratio(&r1, scenario, ideal));
        out.covariance = Some(r1);
        out.beamformers = Some(bf);
    }
    Ok(out)
}

fn cbf_problem(
    scenario: &Scenario,
    ideal: &IdealPatternSolution,
    config: &PenaltyConfig,
    gamma: f64,
) -> LiftedProblem {
    let (gc, _) = normalized_grams(scenario);
    let mut rows = multicast_rows(scenario, scenario.params.gamma_m()).to_vec();
    rows.push(LinearRow {
        c_m: gc.scale(-gamma),
        c_u: gc,
        constant: -gamma,
    });
    LiftedProblem {
        n: scenario.params.n_antennas,
        gain_u: unicast_gain(scenario),
        rows,
        power: PowerBudget::Shared,
        radar: RadarSoc::new(scenario, ideal, 1.0, 1.0),
        solver: config.solver,
    }
}

/// Geometric midpoint once the lower end is positive, arithmetic before.
fn midpoint(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        (lo * hi).sqrt()
    } else {
        0.5 * hi
    }
}

fn bracket_closed(lo: f64, hi: f64) -> bool {
    lo > 0.0 && (hi / lo).ln() <= BISECTION_TOL
}

/// Maximizes the unicast SINR `γ` by bisection over
/// `[0, P_max‖h_c‖²/σ_c²]`.
///
/// The relaxation is bisected first: its feasibility is exact and every
/// rank-one solution is relaxation-feasible, so this yields a certified
/// upper end. The penalty method is then run just inside that end; only if
/// it fails to converge there does bisection continue on penalty runs.
pub fn solve_cbf_no_sic(
    scenario: &Scenario,
    ideal: &IdealPatternSolution,
    config: &PenaltyConfig,
) -> Result<BenchmarkResult> {
    config.validate()?;
    let (gc, _) = normalized_grams(scenario);
    let upper = gc.trace();
    let mut steps = Vec::new();

    // achieved relaxed SINR, or None when the relaxation is infeasible at `gamma`
    let relaxed = |gamma: f64| -> Result<Option<(f64, f64)>> {
        match cbf_problem(scenario, ideal, config, gamma).solve(None, "relaxed feasibility") {
            Ok((w_m, w_u)) => {
                let (c_m, c_u) = (gc.inner(&w_m), gc.inner(&w_u));
                Ok(Some((c_u / (c_m + 1.0), c_u)))
            }
            Err(Error::Infeasible(_)) => Ok(None),
            // an undecided subproblem is treated as infeasible
            Err(Error::Solver { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let first = relaxed(0.0)?;
    steps.push(BisectionStep {
        stage: BisectionStage::Relaxation,
        gamma: 0.0,
        feasible: first.is_some(),
    });
    let Some((sinr0, snr_max)) = first else {
        let mut out = BenchmarkResult::empty(Scheme::CbfNoSic, RunStatus::InfeasibleInit);
        out.bisection = steps;
        return Ok(out);
    };
    // at γ = 0 the unicast gain itself is maximized, which bounds every SINR
    let (mut lo, mut hi) = (sinr0 * (1.0 - RELAXED_SLACK), (snr_max * (1.0 + RELAXED_SLACK)).min(upper));
    for _ in 0..MAX_BISECTION_STEPS {
        if bracket_closed(lo, hi) {
            break;
        }
        let mid = midpoint(lo, hi);
        let found = relaxed(mid)?;
        steps.push(BisectionStep {
            stage: BisectionStage::Relaxation,
            gamma: mid,
            feasible: found.is_some(),
        });
        match found {
            Some((sinr, _)) => lo = mid.max((sinr * (1.0 - RELAXED_SLACK)).min(hi)),
            None => hi = mid,
        }
    }

    let p = scenario.params.p_max;
    let attempt = |gamma: f64| -> Result<Option<(BeamformerPair, Vec<OuterRecord>)>> {
        let path = cbf_problem(scenario, ideal, config, gamma).run(config)?;
        if path.status != RunStatus::Converged {
            return Ok(None);
        }
        let bf = extract_pair(
            path.w_m.as_ref().expect("set"),
            path.w_u.as_ref().expect("set"),
            p,
            config.eps_outer,
            PowerBudget::Shared,
        )?;
        Ok(Some((bf, path.trace)))
    };

    let mut best = None;
    let (mut plo, mut phi) = (0.0, hi);
    let first = if lo > 0.0 { lo } else { midpoint(0.0, hi) };
    let mut gamma = first;
    for _ in 0..MAX_BISECTION_STEPS {
        let found = attempt(gamma)?;
        steps.push(BisectionStep {
            stage: BisectionStage::Penalty,
            gamma,
            feasible: found.is_some(),
        });
        match found {
            Some(sol) => {
                plo = gamma;
                best = Some(sol);
                if gamma == lo && lo > 0.0 {
                    // within tolerance of the relaxation bound
                    break;
                }
            }
            None => phi = gamma,
        }
        if bracket_closed(plo, phi) {
            break;
        }
        gamma = midpoint(plo, phi);
    }

    let Some((bf, trace)) = best else {
        let mut out = BenchmarkResult::empty(Scheme::CbfNoSic, RunStatus::MaxIterations);
        out.bisection = steps;
        out.sinr_bracket = Some([plo, phi]);
        return Ok(out);
    };
    let (u, m) = cbf_rates(&bf, &scenario.channels, &scenario.params);
    let r1 = bf.covariance();
    let mut out = BenchmarkResult::empty(Scheme::CbfNoSic, RunStatus::Converged);
    out.unicast = Some(u);
    out.multicast = Some(m);
    out.mismatch_ratio = Some(mismatch_ratio(&r1, scenario, ideal));
    out.covariance = Some(r1);
    out.beamformers = Some(bf);
    out.trace = trace;
    out.bisection = steps;
    out.sinr_bracket = Some([plo, if plo == lo { hi } else { phi }]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beampattern::solve_ideal_pattern;
    use crate::hermitian::{ComplexVector, C64};
    use crate::scenario::db_to_linear;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64, edit: impl FnOnce(&mut SystemParams)) -> (Scenario, IdealPatternSolution) {
        let mut params = SystemParams {
            gamma_b: db_to_linear(-10.0),
            ..SystemParams::default()
        };
        edit(&mut params);
        let sc = Scenario::generate(params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let ideal = solve_ideal_pattern(&sc.params, &sc.grid, &sc.desired).unwrap();
        (sc, ideal)
    }

    #[test]
    fn tdma_rates_have_half_prelog() {
        let (sc, _) = setup(2, |_| {});
        let w = ComplexVector::new(vec![C64::new(0.03, 0.01); 6]).unwrap();
        let bf = BeamformerPair::new(w.clone(), w.clone()).unwrap();
        let (u, _) = tdma_rates(&bf, &sc.channels, &sc.params);
        let full = (1.0 + sc.channels.h_c.dot(&w).norm_sqr() / sc.params.sigma2_c).log2();
        assert_eq!(u, 0.5 * full);
    }

    #[test]
    fn tdma_meets_its_constraints() {
        let (sc, ideal) = setup(3, |_| {});
        let res = solve_tdma(&sc, &ideal, &PenaltyConfig::default()).unwrap();
        assert_eq!(res.status, RunStatus::Converged);
        assert!(res.multicast.unwrap() >= sc.params.rate_multicast_min - 1e-6);
        assert!(res.mismatch_ratio.unwrap() <= sc.params.gamma_b + 1e-6);
        let bf = res.beamformers.unwrap();
        for w in [&bf.w_m, &bf.w_u] {
            assert!((w.norm_sqr() - sc.params.p_max).abs() <= 1e-7 * sc.params.p_max);
        }
    }

    #[test]
    fn cbf_without_multicast_is_interference_free() {
        let (sc, ideal) = setup(4, |p| {
            p.rate_multicast_min = 0.0;
            p.gamma_b = f64::INFINITY;
        });
        let res = solve_cbf_no_sic(&sc, &ideal, &PenaltyConfig::default()).unwrap();
        assert_eq!(res.status, RunStatus::Converged);
        let ideal_rate = (1.0 + sc.params.p_max * sc.channels.h_c.norm_sqr() / sc.params.sigma2_c).log2();
        assert!((res.unicast.unwrap() - ideal_rate).abs() < 1e-3, "{:?} vs {ideal_rate}", res.unicast);
    }

    #[test]
    fn cbf_reproduces_bracket() {
        let (sc, ideal) = setup(5, |_| {});
        let res = solve_cbf_no_sic(&sc, &ideal, &PenaltyConfig::default()).unwrap();
        assert_eq!(res.status, RunStatus::Converged);
        let [lo, hi] = res.sinr_bracket.unwrap();
        assert!((hi / lo).ln() <= BISECTION_TOL + 1e-12);
        let sinr = 2f64.powf(res.unicast.unwrap()) - 1.0;
        assert!(sinr >= lo * (1.0 - BISECTION_TOL), "{sinr} vs [{lo}, {hi}]");
        assert!(sinr <= hi * (1.0 + BISECTION_TOL));
        assert!(res.multicast.unwrap() >= sc.params.rate_multicast_min - 1e-6);
        assert!(res.mismatch_ratio.unwrap() <= sc.params.gamma_b + 1e-6);
        for stage in [BisectionStage::Relaxation, BisectionStage::Penalty] {
            let steps: Vec<_> = res.bisection.iter().filter(|s| s.stage == stage).collect();
            for a in &steps {
                for b in &steps {
                    if a.feasible && !b.feasible {
                        assert!(b.gamma > a.gamma);
                    }
                }
            }
        }
    }
}
