//! Monte-Carlo experiment driver: configuration, sweeps and file output.
//!
//! Trial `k` of every sweep point draws its channels from
//! `ChaCha8Rng::seed_from_u64(seed ^ k)`, so all points and schemes see the
//! same realizations. Deterministic outputs (`sweep.csv`, `manifest.json`,
//! beampattern files) never contain wall-clock data; timings go to
//! `timing.log`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beampattern::{solve_ideal_pattern, write_beampattern_csv, IdealPatternSolution};
use crate::benchmarks::{solve_cbf_no_sic, solve_tdma, BenchmarkResult, Scheme};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::noma::{outer_loop, PenaltyConfig, RunStatus, SolveReport};
use crate::scenario::{db_to_linear, dbm_to_watts, Scenario, SystemParams};

/// Scientific notation with 17 significant digits, e.g. `1.2500000000000000e-3`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// `git describe`-style version of this build.
pub fn version() -> String {
    match option_env!("NOMA_RADCOM_DESCRIBE") {
        Some(d) => d.to_string(),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    #[serde(alias = "gamma_bar_b_dB")]
    GammaBDb,
    #[serde(alias = "gamma_p_dB")]
    GammaPDb,
    #[serde(alias = "N")]
    NAntennas,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::GammaBDb => "gamma_b_db",
            SweepVariable::GammaPDb => "gamma_p_db",
            SweepVariable::NAntennas => "n_antennas",
        }
    }
}

/// Flat experiment configuration. Powers and ratios are given in dB and
/// angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_antennas: usize,
    pub d_over_lambda: f64,
    /// Transmit SNR `P_max/σ²`.
    pub gamma_p_db: f64,
    /// Receiver noise power at both users.
    pub sigma2_dbm: f64,
    pub rate_multicast_min: f64,
    /// Radar mismatch tolerance; `inf` removes the radar constraint.
    pub gamma_b_db: f64,
    pub l0_db: f64,
    pub d_r: f64,
    pub d_c: f64,
    pub theta_targets_deg: Vec<f64>,
    pub beam_width_deg: f64,
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub sweep_variable: Option<SweepVariable>,
    pub sweep_values: Vec<f64>,
    pub output_dir: PathBuf,
    pub eta0: f64,
    pub epsilon_scale: f64,
    pub eps_inner: f64,
    pub eps_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let penalty = PenaltyConfig::default();
        Self {
            n_antennas: 6,
            d_over_lambda: 0.5,
            gamma_p_db: 110.0,
            sigma2_dbm: -100.0,
            rate_multicast_min: 0.5,
            gamma_b_db: -10.0,
            l0_db: 40.0,
            d_r: 1000.0,
            d_c: 100.0,
            theta_targets_deg: vec![0.0],
            beam_width_deg: 10.0,
            seed: 0,
            trials: 200,
            schemes: vec![Scheme::Noma, Scheme::Tdma, Scheme::CbfNoSic],
            sweep_variable: None,
            sweep_values: Vec::new(),
            output_dir: PathBuf::from("out"),
            eta0: penalty.eta0,
            epsilon_scale: penalty.epsilon_scale,
            eps_inner: penalty.eps_inner,
            eps_outer: penalty.eps_outer,
            max_inner: penalty.max_inner,
            max_outer: penalty.max_outer,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return bad(format!("scheme {s} listed twice"));
            }
        }
        if self.gamma_b_db.is_nan() || self.gamma_b_db == f64::NEG_INFINITY {
            return bad("gamma_b_db must be a number or inf".into());
        }
        match self.sweep_variable {
            None if !self.sweep_values.is_empty() => return bad("sweep_values given without sweep_variable".into()),
            Some(_) if self.sweep_values.is_empty() => return bad("sweep_variable given without sweep_values".into()),
            _ => {}
        }
        if let Some(v) = self.sweep_values.iter().find(|v| !v.is_finite()) {
            return bad(format!("sweep value {v} is not finite"));
        }
        self.penalty_config().validate()?;
        for p in self.points()? {
            p.system_params().validate()?;
        }
        Ok(())
    }

    pub fn penalty_config(&self) -> PenaltyConfig {
        PenaltyConfig {
            eta0: self.eta0,
            epsilon_scale: self.epsilon_scale,
            eps_inner: self.eps_inner,
            eps_outer: self.eps_outer,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            ..PenaltyConfig::default()
        }
    }

    pub fn system_params(&self) -> SystemParams {
        let sigma2 = dbm_to_watts(self.sigma2_dbm);
        SystemParams {
            n_antennas: self.n_antennas,
            d_over_lambda: self.d_over_lambda,
            p_max: db_to_linear(self.gamma_p_db) * sigma2,
            sigma2_r: sigma2,
            sigma2_c: sigma2,
            rate_multicast_min: self.rate_multicast_min,
            gamma_b: db_to_linear(self.gamma_b_db),
            l0_db: self.l0_db,
            d_r: self.d_r,
            d_c: self.d_c,
            theta_targets: self.theta_targets_deg.iter().map(|t| t.to_radians()).collect(),
            beam_width: self.beam_width_deg.to_radians(),
            seed: self.seed,
        }
    }

    /// Copy with the sweep variable set to `value` and the sweep removed.
    pub fn at(&self, variable: SweepVariable, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match variable {
            SweepVariable::GammaBDb => c.gamma_b_db = value,
            SweepVariable::GammaPDb => c.gamma_p_db = value,
            SweepVariable::NAntennas => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(Error::Config(format!("n_antennas sweep value {value} is not an integer >= 2")));
                }
                c.n_antennas = value as usize;
            }
        }
        c.sweep_variable = None;
        c.sweep_values.clear();
        Ok(c)
    }

    /// One configuration per sweep point (just `self` without a sweep).
    pub fn points(&self) -> Result<Vec<Self>> {
        match self.sweep_variable {
            Some(var) => self.sweep_values.iter().map(|&v| self.at(var, v)).collect(),
            None => Ok(vec![self.clone()]),
        }
    }

    pub fn rate_schemes(&self) -> Vec<Scheme> {
        self.schemes.iter().copied().filter(|s| *s != Scheme::RadarOnly).collect()
    }

    /// Seed of trial `k`.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed ^ trial as u64
    }

    pub fn scenario(&self, trial: usize) -> Result<Scenario> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.trial_seed(trial));
        Scenario::generate(self.system_params(), &mut rng)
    }
}

/// Full output of one scheme on one realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeReport {
    Noma(SolveReport),
    Benchmark(BenchmarkResult),
}

impl SchemeReport {
    pub fn status(&self) -> RunStatus {
        match self {
            SchemeReport::Noma(r) => r.status,
            SchemeReport::Benchmark(r) => r.status,
        }
    }

    pub fn unicast(&self) -> Option<f64> {
        match self {
            SchemeReport::Noma(r) => r.rates.as_ref().map(|x| x.unicast),
            SchemeReport::Benchmark(r) => r.unicast,
        }
    }

    pub fn multicast(&self) -> Option<f64> {
        match self {
            SchemeReport::Noma(r) => r.rates.as_ref().map(|x| x.multicast),
            SchemeReport::Benchmark(r) => r.multicast,
        }
    }

    pub fn mismatch_ratio(&self) -> Option<f64> {
        match self {
            SchemeReport::Noma(r) => r.mismatch_ratio,
            SchemeReport::Benchmark(r) => r.mismatch_ratio,
        }
    }

    /// Covariance seen by the radar for converged runs.
    pub fn covariance(&self) -> Option<HermitianMatrix> {
        match self {
            SchemeReport::Noma(r) => r.covariance(),
            SchemeReport::Benchmark(r) => r.covariance.clone(),
        }
    }

    fn iterations(&self) -> (usize, usize) {
        let trace = match self {
            SchemeReport::Noma(r) => &r.trace,
            SchemeReport::Benchmark(r) => &r.trace,
        };
        (trace.len(), trace.iter().map(|r| r.inner_iterations).sum())
    }
}

/// Runs one communication scheme. Radar-only has nothing to solve here.
pub fn run_scheme(
    scheme: Scheme,
    scenario: &Scenario,
    ideal: &IdealPatternSolution,
    config: &PenaltyConfig,
) -> Result<SchemeReport> {
    match scheme {
        Scheme::Noma => outer_loop(scenario, ideal, config).map(SchemeReport::Noma),
        Scheme::Tdma => solve_tdma(scenario, ideal, config).map(SchemeReport::Benchmark),
        Scheme::CbfNoSic => solve_cbf_no_sic(scenario, ideal, config).map(SchemeReport::Benchmark),
        Scheme::RadarOnly => Err(Error::InvalidInput("radar_only has no rate problem".into())),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    /// `None` when the run aborted with an error.
    pub status: Option<RunStatus>,
    pub unicast: Option<f64>,
    pub multicast: Option<f64>,
    pub mismatch_ratio: Option<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub error: Option<String>,
    /// Wall-clock seconds; kept out of the deterministic outputs.
    #[serde(skip)]
    pub seconds: f64,
}

impl SchemeOutcome {
    pub fn is_converged(&self) -> bool {
        self.status == Some(RunStatus::Converged)
    }

    fn from_run(scheme: Scheme, run: Result<SchemeReport>, seconds: f64) -> Self {
        match run {
            Ok(rep) => {
                let (outer, inner) = rep.iterations();
                Self {
                    scheme,
                    status: Some(rep.status()),
                    unicast: rep.unicast(),
                    multicast: rep.multicast(),
                    mismatch_ratio: rep.mismatch_ratio(),
                    outer_iterations: outer,
                    inner_iterations: inner,
                    error: None,
                    seconds,
                }
            }
            Err(e) => Self {
                scheme,
                status: None,
                unicast: None,
                multicast: None,
                mismatch_ratio: None,
                outer_iterations: 0,
                inner_iterations: 0,
                error: Some(e.to_string()),
                seconds,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub outcomes: Vec<SchemeOutcome>,
}

impl TrialRecord {
    pub fn outcome(&self, scheme: Scheme) -> Option<&SchemeOutcome> {
        self.outcomes.iter().find(|o| o.scheme == scheme)
    }
}

/// Aggregates of one scheme at one sweep point. Means run over converged
/// trials only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub scheme: Scheme,
    pub trials: usize,
    pub converged: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub mean_unicast: Option<f64>,
    pub mean_multicast: Option<f64>,
    pub mean_mismatch_ratio: Option<f64>,
    pub mean_outer_iterations: Option<f64>,
    #[serde(skip)]
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdealSummary {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub delta_star: f64,
    pub delta0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub version: String,
    pub config: ExperimentConfig,
    pub ideal: Vec<IdealSummary>,
    pub summary: Vec<PointSummary>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn summary_for(&self, point: usize, scheme: Scheme) -> Option<&PointSummary> {
        self.summary.iter().find(|s| s.point == point && s.scheme == scheme)
    }

    /// True when rate schemes were run and none converged on any trial.
    pub fn all_failed(&self) -> bool {
        let mut outcomes = self.records.iter().flat_map(|r| &r.outcomes).peekable();
        outcomes.peek().is_some() && !outcomes.any(SchemeOutcome::is_converged)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn summarize(point: usize, sweep_value: Option<f64>, scheme: Scheme, records: &[&TrialRecord]) -> PointSummary {
    let outcomes: Vec<&SchemeOutcome> = records.iter().filter_map(|r| r.outcome(scheme)).collect();
    let ok: Vec<&SchemeOutcome> = outcomes.iter().copied().filter(|o| o.is_converged()).collect();
    let infeasible = outcomes
        .iter()
        .filter(|o| o.status == Some(RunStatus::InfeasibleInit))
        .count();
    PointSummary {
        point,
        sweep_value,
        scheme,
        trials: outcomes.len(),
        converged: ok.len(),
        infeasible,
        failed: outcomes.len() - ok.len() - infeasible,
        mean_unicast: mean(ok.iter().filter_map(|o| o.unicast)),
        mean_multicast: mean(ok.iter().filter_map(|o| o.multicast)),
        mean_mismatch_ratio: mean(ok.iter().filter_map(|o| o.mismatch_ratio)),
        mean_outer_iterations: mean(ok.iter().map(|o| o.outer_iterations as f64)),
        mean_seconds: mean(outcomes.iter().map(|o| o.seconds)).unwrap_or(0.0),
    }
}

fn create_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write_probe");
    File::create(&probe).map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Runs every sweep point and trial, then writes `sweep.csv` (omitted when
/// only `radar_only` is selected), `radar_only.csv` (when selected),
/// `manifest.json` and `timing.log` into `output_dir`.
///
/// Per-trial failures are recorded and never abort the sweep. The output
/// directory is checked for writability before any computation.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    create_output_dir(&config.output_dir)?;
    let points = config.points()?;
    let sweep_values: Vec<Option<f64>> = match config.sweep_variable {
        Some(_) => config.sweep_values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let penalty = config.penalty_config();

    // the radar-only design depends on the parameters only
    let ideals: Vec<(Scenario, IdealPatternSolution)> = points
        .par_iter()
        .map(|p| {
            let sc = p.scenario(0)?;
            let ideal = solve_ideal_pattern(&sc.params, &sc.grid, &sc.desired)?;
            Ok((sc, ideal))
        })
        .collect::<Result<_>>()?;

    let schemes = config.rate_schemes();
    let jobs: Vec<(usize, usize)> = if schemes.is_empty() {
        Vec::new()
    } else {
        (0..points.len())
            .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
            .collect()
    };
    let mut records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(p, trial)| {
            let point = &points[p];
            let outcomes = match point.scenario(trial) {
                Ok(sc) => schemes
                    .iter()
                    .map(|&s| {
                        let start = Instant::now();
                        let run = run_scheme(s, &sc, &ideals[p].1, &penalty);
                        SchemeOutcome::from_run(s, run, start.elapsed().as_secs_f64())
                    })
                    .collect(),
                Err(e) => schemes
                    .iter()
                    .map(|&s| SchemeOutcome::from_run(s, Err(Error::InvalidInput(e.to_string())), 0.0))
                    .collect(),
            };
            TrialRecord {
                point: p,
                sweep_value: sweep_values[p],
                trial,
                seed: point.trial_seed(trial),
                outcomes,
            }
        })
        .collect();
    records.sort_by_key(|r| (r.point, r.trial));

    let mut summary = Vec::new();
    for (p, value) in sweep_values.iter().enumerate() {
        let at_point: Vec<&TrialRecord> = records.iter().filter(|r| r.point == p).collect();
        for &s in &schemes {
            summary.push(summarize(p, *value, s, &at_point));
        }
    }
    let ideal = ideals
        .iter()
        .enumerate()
        .map(|(p, (_, sol))| IdealSummary {
            point: p,
            sweep_value: sweep_values[p],
            delta_star: sol.delta_star,
            delta0: sol.delta0,
        })
        .collect();
    let result = SweepResult {
        version: version(),
        config: config.clone(),
        ideal,
        summary,
        records,
    };

    let dir = &config.output_dir;
    if !schemes.is_empty() {
        write_sweep_csv(&dir.join("sweep.csv"), config, &result)?;
    }
    if config.schemes.contains(&Scheme::RadarOnly) {
        write_radar_only_csv(&dir.join("radar_only.csv"), &ideals, &sweep_values)?;
    }
    write_json(&dir.join("manifest.json"), &result)?;
    write_timing_log(&dir.join("timing.log"), &result)?;
    Ok(result)
}

fn write_sweep_csv(path: &Path, config: &ExperimentConfig, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let variable = config.sweep_variable.map_or("point", |v| v.name());
    w.write_record([
        variable,
        "scheme",
        "trials",
        "converged",
        "infeasible",
        "failed",
        "mean_unicast",
        "mean_multicast",
        "mean_mismatch_ratio",
        "mean_outer_iterations",
    ])?;
    for s in &result.summary {
        let key = s.sweep_value.map_or_else(|| s.point.to_string(), format_float);
        w.write_record([
            key,
            s.scheme.to_string(),
            s.trials.to_string(),
            s.converged.to_string(),
            s.infeasible.to_string(),
            s.failed.to_string(),
            format_opt(s.mean_unicast),
            format_opt(s.mean_multicast),
            format_opt(s.mean_mismatch_ratio),
            format_opt(s.mean_outer_iterations),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_radar_only_csv(
    path: &Path,
    ideals: &[(Scenario, IdealPatternSolution)],
    sweep_values: &[Option<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["point", "sweep_value", "theta_deg", "desired", "radar_only"])?;
    for (p, (sc, sol)) in ideals.iter().enumerate() {
        let gains = sc.grid.gains(&sol.r0);
        for ((theta, d), g) in sc.grid.angles().iter().zip(&sc.desired.gains).zip(gains) {
            w.write_record([
                p.to_string(),
                format_opt(sweep_values[p]),
                format_float(theta.to_degrees()),
                format_float(*d),
                format_float(g),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_timing_log(path: &Path, result: &SweepResult) -> Result<()> {
    let mut text = String::new();
    for s in &result.summary {
        let _ = writeln!(
            text,
            "point {} scheme {} mean_seconds {:.6}",
            s.point, s.scheme, s.mean_seconds
        );
    }
    for r in &result.records {
        for o in &r.outcomes {
            let _ = writeln!(
                text,
                "point {} trial {} scheme {} seconds {:.6} outer {} inner {}",
                r.point, r.trial, o.scheme, o.seconds, o.outer_iterations, o.inner_iterations
            );
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Radar-only design of the base configuration, written as
/// `ideal_pattern.csv` and `ideal_pattern.json`.
pub fn run_ideal_pattern(config: &ExperimentConfig) -> Result<IdealPatternSolution> {
    config.validate()?;
    create_output_dir(&config.output_dir)?;
    let sc = config.scenario(0)?;
    let ideal = solve_ideal_pattern(&sc.params, &sc.grid, &sc.desired)?;
    let path = config.output_dir.join("ideal_pattern.csv");
    write_beampattern_csv(create(&path)?, &sc.grid, &ideal.r0)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        version: String,
        config: &'a ExperimentConfig,
        solution: &'a IdealPatternSolution,
    }
    write_json(
        &config.output_dir.join("ideal_pattern.json"),
        &Doc {
            version: version(),
            config,
            solution: &ideal,
        },
    )?;
    Ok(ideal)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleRun {
    pub version: String,
    pub config: ExperimentConfig,
    pub trial: usize,
    pub seed: u64,
    pub delta0: f64,
    pub delta_star: f64,
    pub reports: Vec<(Scheme, std::result::Result<SchemeReport, String>)>,
}

/// Every selected rate scheme on realization `trial` of the base
/// configuration; written to `solve.json`.
pub fn run_single(config: &ExperimentConfig, trial: usize) -> Result<SingleRun> {
    config.validate()?;
    create_output_dir(&config.output_dir)?;
    let sc = config.scenario(trial)?;
    let ideal = solve_ideal_pattern(&sc.params, &sc.grid, &sc.desired)?;
    let penalty = config.penalty_config();
    let reports = config
        .rate_schemes()
        .into_iter()
        .map(|s| (s, run_scheme(s, &sc, &ideal, &penalty).map_err(|e| e.to_string())))
        .collect();
    let run = SingleRun {
        version: version(),
        config: config.clone(),
        trial,
        seed: config.trial_seed(trial),
        delta0: ideal.delta0,
        delta_star: ideal.delta_star,
        reports,
    };
    write_json(&config.output_dir.join("solve.json"), &run)?;
    Ok(run)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternColumn {
    pub scheme: Scheme,
    pub gains: Vec<f64>,
    /// `Δ(R, δ*)/Δ0 − 1`; zero for the radar-only design.
    pub mismatch_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeampatternExport {
    pub version: String,
    pub config: ExperimentConfig,
    pub trial: usize,
    pub theta_deg: Vec<f64>,
    pub desired: Vec<f64>,
    pub delta0: f64,
    pub columns: Vec<PatternColumn>,
    /// Schemes dropped from the CSV, with the reason.
    pub omitted: Vec<(Scheme, String)>,
}

impl BeampatternExport {
    pub fn column(&self, scheme: Scheme) -> Option<&PatternColumn> {
        self.columns.iter().find(|c| c.scheme == scheme)
    }
}

/// Beampatterns of every selected scheme on realization `trial`, written as
/// `beampattern.csv` (`theta_deg, desired, <scheme>...`) and
/// `beampattern.json`. Schemes that do not converge are omitted with a note.
pub fn emit_beampattern(config: &ExperimentConfig, trial: usize) -> Result<BeampatternExport> {
    config.validate()?;
    create_output_dir(&config.output_dir)?;
    let sc = config.scenario(trial)?;
    let ideal = solve_ideal_pattern(&sc.params, &sc.grid, &sc.desired)?;
    let penalty = config.penalty_config();
    let mut columns = Vec::new();
    let mut omitted = Vec::new();
    let order = [Scheme::RadarOnly, Scheme::Noma, Scheme::Tdma, Scheme::CbfNoSic];
    for scheme in order.into_iter().filter(|s| config.schemes.contains(s)) {
        let cov = if scheme == Scheme::RadarOnly {
            Ok(ideal.r0.clone())
        } else {
            match run_scheme(scheme, &sc, &ideal, &penalty) {
                Ok(rep) => rep
                    .covariance()
                    .ok_or_else(|| format!("status {:?}", rep.status())),
                Err(e) => Err(e.to_string()),
            }
        };
        match cov {
            Ok(r) => columns.push(PatternColumn {
                scheme,
                gains: sc.grid.gains(&r),
                mismatch_ratio: crate::noma::mismatch_ratio(&r, &sc, &ideal),
            }),
            Err(note) => omitted.push((scheme, note)),
        }
    }
    let export = BeampatternExport {
        version: version(),
        config: config.clone(),
        trial,
        theta_deg: sc.grid.angles().iter().map(|t| t.to_degrees()).collect(),
        desired: sc.desired.gains.clone(),
        delta0: ideal.delta0,
        columns,
        omitted,
    };

    let path = config.output_dir.join("beampattern.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header = vec!["theta_deg".to_string(), "desired".to_string()];
    header.extend(export.columns.iter().map(|c| c.scheme.to_string()));
    w.write_record(&header)?;
    for i in 0..export.theta_deg.len() {
        let mut row = vec![format_float(export.theta_deg[i]), format_float(export.desired[i])];
        row.extend(export.columns.iter().map(|c| format_float(c.gains[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&config.output_dir.join("beampattern.json"), &export)?;
    Ok(export)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_float(0.00125), "1.2500000000000000e-3");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        let x = std::f64::consts::PI;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn db_roundtrip() {
        for db in [-20.0, -10.0, 0.0, 3.0, 110.0] {
            let back = crate::scenario::linear_to_db(db_to_linear(db));
            assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
        }
        let c = ExperimentConfig {
            gamma_b_db: -10.0,
            ..ExperimentConfig::default()
        };
        assert!((c.system_params().gamma_b - 0.1).abs() <= 1e-12 * 0.1);
    }

    #[test]
    fn parses_flat_toml() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            n_antennas = 10
            gamma_b_db = -20
            schemes = ["noma", "radar_only"]
            sweep_variable = "gamma_p_dB"
            sweep_values = [100, 105]
            trials = 3
            "#,
        )
        .unwrap();
        assert_eq!(c.n_antennas, 10);
        assert_eq!(c.sweep_variable, Some(SweepVariable::GammaPDb));
        assert_eq!(c.rate_schemes(), vec![Scheme::Noma]);
        c.validate().unwrap();
        let pts = c.points().unwrap();
        assert_eq!(pts[1].gamma_p_db, 105.0);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
        let inf = ExperimentConfig::from_toml_str("gamma_b_db = inf").unwrap();
        assert!(inf.system_params().gamma_b.is_infinite());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("bogus_key = 1"),
            Err(Error::Config(_))
        ));
        let bad = |edit: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            edit(&mut c);
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        };
        bad(|c| c.trials = 0);
        bad(|c| c.schemes.clear());
        bad(|c| c.schemes = vec![Scheme::Noma, Scheme::Noma]);
        bad(|c| c.sweep_values = vec![1.0]);
        bad(|c| {
            c.sweep_variable = Some(SweepVariable::NAntennas);
            c.sweep_values = vec![4.5];
        });
        bad(|c| {
            c.sweep_variable = Some(SweepVariable::GammaBDb);
            c.sweep_values = vec![f64::NAN];
        });
        bad(|c| c.n_antennas = 1);
    }

    #[test]
    fn trial_seeds_do_not_depend_on_point() {
        let c = ExperimentConfig {
            seed: 7,
            sweep_variable: Some(SweepVariable::GammaBDb),
            sweep_values: vec![-20.0, -5.0],
            ..ExperimentConfig::default()
        };
        let pts = c.points().unwrap();
        let a = pts[0].scenario(3).unwrap();
        let b = pts[1].scenario(3).unwrap();
        assert_eq!(a.channels.h_c, b.channels.h_c);
        assert_eq!(pts[0].trial_seed(3), 7 ^ 3);
    }
}
