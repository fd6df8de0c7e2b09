//! Uniform-linear-array steering vectors, desired beampatterns and the
//! radar-only least-squares covariance design.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{self, ConicProblem, HermitianParam, SolverOptions};
use crate::error::{Error, Result};
use crate::harness::format_float;
use crate::hermitian::{ComplexVector, HermitianMatrix, C64};
use crate::scenario::SystemParams;

/// Angular slack used when deciding whether a grid point lies in a beam window.
const WINDOW_TOL: f64 = 1e-9;

/// `α(θ)` with entries `exp(j·2π·(d/λ)·k·sin θ)`, `k = 0..n`.
pub fn steering_vector(theta: f64, n: usize, d_over_lambda: f64) -> ComplexVector {
    let phase = 2.0 * PI * d_over_lambda * theta.sin();
    let entries = (0..n).map(|k| C64::from_polar(1.0, phase * k as f64)).collect();
    ComplexVector::new(entries).expect("steering vector entries are finite")
}

/// Strictly increasing set of angles with their steering vectors.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    angles: Vec<f64>,
    steering: Vec<ComplexVector>,
    d_over_lambda: f64,
}

impl AngularGrid {
    pub fn new(angles: Vec<f64>, n: usize, d_over_lambda: f64) -> Result<Self> {
        if angles.len() < 2 {
            return Err(Error::InvalidInput("angular grid needs at least two points".into()));
        }
        if angles.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("angular grid must be strictly increasing".into()));
        }
        let lim = FRAC_PI_2 + 1e-12;
        if angles.iter().any(|a| !(a.abs() <= lim)) {
            return Err(Error::InvalidInput("grid angles must lie in [-pi/2, pi/2]".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("array needs at least one antenna".into()));
        }
        let steering = angles.iter().map(|&t| steering_vector(t, n, d_over_lambda)).collect();
        Ok(Self {
            angles,
            steering,
            d_over_lambda,
        })
    }

    /// Grid from `start_deg` to `stop_deg` inclusive in steps of `step_deg`.
    pub fn uniform_degrees(start_deg: f64, stop_deg: f64, step_deg: f64, n: usize, d_over_lambda: f64) -> Result<Self> {
        if !(step_deg > 0.0) || !(stop_deg > start_deg) {
            return Err(Error::InvalidInput("bad grid range".into()));
        }
        let count = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
        let angles = (0..count)
            .map(|i| (start_deg + i as f64 * step_deg).to_radians())
            .collect();
        Self::new(angles, n, d_over_lambda)
    }

    /// The 1° grid over [−90°, 90°] (181 points) for the array in `params`.
    pub fn standard(params: &SystemParams) -> Result<Self> {
        Self::uniform_degrees(-90.0, 90.0, 1.0, params.n_antennas, params.d_over_lambda)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn steering(&self) -> &[ComplexVector] {
        &self.steering
    }

    pub fn n_antennas(&self) -> usize {
        self.steering[0].len()
    }

    pub fn d_over_lambda(&self) -> f64 {
        self.d_over_lambda
    }

    /// `α^H R α` at every grid point.
    pub fn gains(&self, r: &HermitianMatrix) -> Vec<f64> {
        self.steering.iter().map(|a| r.quad_form(a)).collect()
    }

    /// Mirrors the grid (`θ ↦ −θ`, order reversed).
    pub fn mirrored(&self) -> Result<Self> {
        let angles = self.angles.iter().rev().map(|a| -a).collect();
        Self::new(angles, self.n_antennas(), self.d_over_lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesiredPattern {
    pub gains: Vec<f64>,
}

impl DesiredPattern {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidInput("desired gains must be finite and nonnegative".into()));
        }
        Ok(Self { gains })
    }

    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn mirrored(&self) -> Self {
        Self {
            gains: self.gains.iter().rev().copied().collect(),
        }
    }
}

/// Unit gain inside `[θ̄_k − Δ/2, θ̄_k + Δ/2]` for any target, zero elsewhere.
pub fn desired_pattern(grid: &AngularGrid, theta_targets: &[f64], beam_width: f64) -> DesiredPattern {
    let half = beam_width / 2.0 + WINDOW_TOL;
    let gains = grid
        .angles
        .iter()
        .map(|&t| {
            if theta_targets.iter().any(|&c| (t - c).abs() <= half) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    DesiredPattern { gains }
}

/// Transmit beampattern `α^H(θ) R α(θ)`.
pub fn pattern_gain(r: &HermitianMatrix, theta: f64, d_over_lambda: f64) -> f64 {
    r.quad_form(&steering_vector(theta, r.dim(), d_over_lambda))
}

/// `Σ_m |δ·P*(θ_m) − α^H(θ_m) R α(θ_m)|²`.
pub fn pattern_error(r: &HermitianMatrix, delta: f64, grid: &AngularGrid, desired: &DesiredPattern) -> f64 {
    grid.steering
        .iter()
        .zip(&desired.gains)
        .map(|(a, &p)| (delta * p - r.quad_form(a)).powi(2))
        .sum()
}

fn check_dims(grid: &AngularGrid, desired: &DesiredPattern, n: usize) -> Result<()> {
    if desired.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "desired pattern has {} points, grid has {}",
            desired.len(),
            grid.len()
        )));
    }
    if grid.n_antennas() != n {
        return Err(Error::Dimension(format!(
            "grid steers {} antennas, expected {n}",
            grid.n_antennas()
        )));
    }
    Ok(())
}

/// Row `m` holds the coefficients of `x ↦ α_m^H W(x) α_m` for a Hermitian
/// parameter block starting at column 0.
pub(crate) fn gain_map(grid: &AngularGrid) -> DMatrix<f64> {
    let n = grid.n_antennas();
    let param = HermitianParam::new(n, 0);
    let mut map = DMatrix::zeros(grid.len(), param.len());
    let mut row = vec![0.0; param.len()];
    for (m, a) in grid.steering.iter().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        param.add_trace_coeffs(&a.outer(), 1.0, &mut row);
        map.row_mut(m).copy_from_slice(&row);
    }
    map
}

/// Replaces `‖F x + d‖₂` by an equivalent norm of a short affine map.
///
/// With the thin SVD `F = U Σ Vᵀ` the residual splits into
/// `‖Σ Vᵀ x + Uᵀ d‖² + ‖(I − U Uᵀ) d‖²`; the second term is constant and
/// kept as a trailing offset entry. Returns `(B, b)` with `‖F x + d‖ = ‖B x + b‖`.
pub(crate) fn compress_affine(f: &DMatrix<f64>, d: &DVector<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let svd = f.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * smax.max(f64::MIN_POSITIVE))
        .collect();
    let mut b_map = DMatrix::zeros(keep.len(), f.ncols());
    let mut offset = Vec::with_capacity(keep.len() + 1);
    let mut proj = DVector::zeros(d.len());
    for (r, &i) in keep.iter().enumerate() {
        b_map.row_mut(r).copy_from(&(vt.row(i) * svd.singular_values[i]));
        let ui = u.column(i);
        let c = ui.dot(d);
        offset.push(c);
        proj += ui * c;
    }
    let tail = (d - proj).norm();
    let mut b_full = DMatrix::zeros(keep.len() + 1, f.ncols());
    b_full.rows_mut(0, keep.len()).copy_from(&b_map);
    offset.push(tail);
    (b_full, offset)
}

/// Radar-only optimum of the least-squares pattern matching problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdealPatternSolution {
    pub r0: HermitianMatrix,
    pub delta_star: f64,
    /// `Δ(R0*, δ*)`, the minimum achievable pattern error.
    pub delta0: f64,
}

/// Jointly optimal `(R0, δ)` for `min Δ(R0, δ)` subject to
/// `diag(R0) = P_max/N`, `R0 ⪰ 0`, `δ ≥ 0`.
///
/// Solved as a second-order-cone epigraph in units of `P_max`. The diagonal
/// of the returned covariance is set exactly; `delta0` is evaluated on the
/// returned pair.
pub fn solve_ideal_pattern(
    params: &SystemParams,
    grid: &AngularGrid,
    desired: &DesiredPattern,
) -> Result<IdealPatternSolution> {
    let n = params.n_antennas;
    check_dims(grid, desired, n)?;
    let p_max = params.p_max;
    let r = HermitianParam::new(n, 0);
    let delta = r.end();
    let t = delta + 1;
    let nvars = t + 1;

    // e(x) = δ P* − g(R): columns for R then δ
    let gains = gain_map(grid);
    let mut f = DMatrix::zeros(grid.len(), delta + 1);
    f.columns_mut(0, r.len()).copy_from(&(-gains));
    f.column_mut(delta).copy_from_slice(&desired.gains);
    let (body, offset) = compress_affine(&f, &DVector::zeros(grid.len()));
    let mut body_full = DMatrix::zeros(body.nrows(), nvars);
    body_full.columns_mut(0, delta + 1).copy_from(&body);

    let mut prob = ConicProblem::new(nvars);
    let mut c = vec![0.0; nvars];
    c[t] = 1.0;
    prob.set_objective(&c)?;
    let mut head = vec![0.0; nvars];
    head[t] = 1.0;
    prob.add_soc(&head, 0.0, &body_full, &offset)?;
    for i in 0..n {
        let mut row = vec![0.0; nvars];
        row[r.offset + i] = 1.0;
        prob.add_equality(&row, 1.0 / n as f64)?;
    }
    let mut row = vec![0.0; nvars];
    row[delta] = 1.0;
    prob.add_nonneg(&row, 0.0)?;
    prob.add_psd(&DMatrix::zeros(2 * n, 2 * n), &r.embedding_terms(1.0))?;

    let opts = SolverOptions {
        abstol: 1e-10,
        reltol: 1e-9,
        ..SolverOptions::default()
    };
    let sol = conic::solve(&prob, &opts).require_optimal("radar-only beampattern design")?;

    let mut r0 = r.extract(&sol.x).scale(p_max);
    let mut m = r0.matrix().clone();
    for i in 0..n {
        m[(i, i)] = C64::new(p_max / n as f64, 0.0);
    }
    r0 = HermitianMatrix::new(m)?;
    let delta_star = sol.x[delta].max(0.0) * p_max;
    let delta0 = pattern_error(&r0, delta_star, grid, desired);
    Ok(IdealPatternSolution {
        r0,
        delta_star,
        delta0,
    })
}

/// Writes `theta_deg,gain_linear,gain_dB` rows for `r` over `grid`.
pub fn write_beampattern_csv<W: Write>(out: W, grid: &AngularGrid, r: &HermitianMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_deg", "gain_linear", "gain_dB"])?;
    for (theta, g) in grid.angles.iter().zip(grid.gains(r)) {
        w.write_record([
            format_float(theta.to_degrees()),
            format_float(g),
            format_float(gain_db(g)),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<beampattern csv>", e))?;
    Ok(())
}

/// `10·log10(g)`, with non-positive gains clamped to the smallest positive float.
pub fn gain_db(g: f64) -> f64 {
    10.0 * g.max(f64::MIN_POSITIVE).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(n);
        for _ in 0..n {
            let v: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            acc = acc.add(&ComplexVector::new(v).unwrap().outer());
        }
        acc
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(0.0, 5, 0.5);
        assert!(a.as_slice().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let b = steering_vector(FRAC_PI_2, 5, 0.5);
        for (k, z) in b.as_slice().iter().enumerate() {
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - C64::new(want, 0.0)).norm() < 1e-12);
        }
        let c = steering_vector(0.3, 7, 0.5);
        assert!(c.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn gain_of_identity_and_matched_beam() {
        for theta in [-1.2, 0.0, 0.4] {
            assert!((pattern_gain(&HermitianMatrix::identity(6), theta, 0.5) - 6.0).abs() < 1e-12);
        }
        let r = steering_vector(0.25, 6, 0.5).outer();
        assert!((pattern_gain(&r, 0.25, 0.5) - 36.0).abs() < 1e-10);
    }

    #[test]
    fn gain_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_psd(5, &mut rng);
        for theta in [-0.9, 0.1, 1.3] {
            let a = steering_vector(theta, 5, 0.5);
            let mut sum = C64::new(0.0, 0.0);
            for i in 0..5 {
                for j in 0..5 {
                    sum += a.as_slice()[i].conj() * r.get(i, j) * a.as_slice()[j];
                }
            }
            assert!(sum.im.abs() <= 1e-12 * sum.re.abs());
            assert!((pattern_gain(&r, theta, 0.5) - sum.re).abs() < 1e-10 * sum.re);
        }
    }

    #[test]
    fn gain_map_agrees_with_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let grid = AngularGrid::uniform_degrees(-90.0, 90.0, 15.0, 4, 0.5).unwrap();
        let r = random_psd(4, &mut rng);
        let p = HermitianParam::new(4, 0);
        let mut x = DVector::zeros(p.len());
        p.write(&r, &mut x);
        let via_map = gain_map(&grid) * x;
        for (a, b) in via_map.iter().zip(grid.gains(&r)) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn window_counts() {
        let grid = AngularGrid::uniform_degrees(-90.0, 90.0, 1.0, 4, 0.5).unwrap();
        assert_eq!(grid.len(), 181);
        let d = desired_pattern(&grid, &[0.0], 10f64.to_radians());
        assert_eq!(d.gains.iter().filter(|&&g| g == 1.0).count(), 11);
        let none = desired_pattern(&grid, &[], 10f64.to_radians());
        assert!(none.gains.iter().all(|&g| g == 0.0));
        let two = desired_pattern(&grid, &[-40f64.to_radians(), 30f64.to_radians()], 10f64.to_radians());
        for (theta, g) in grid.angles().iter().zip(&two.gains) {
            let deg = theta.to_degrees();
            let inside = (deg + 40.0).abs() <= 5.0 + 1e-6 || (deg - 30.0).abs() <= 5.0 + 1e-6;
            assert_eq!(*g == 1.0, inside, "at {deg}");
        }
    }

    #[test]
    fn error_examples() {
        let grid = AngularGrid::uniform_degrees(-90.0, 90.0, 1.0, 4, 0.5).unwrap();
        let ones = DesiredPattern::uniform(grid.len(), 1.0).unwrap();
        let p = 0.37;
        let flat = HermitianMatrix::identity(4).scale(p / 4.0);
        assert!(pattern_error(&flat, p, &grid, &ones) < 1e-25);
        assert_eq!(pattern_error(&HermitianMatrix::zeros(4), 0.0, &grid, &ones), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = random_psd(4, &mut rng);
        let desired = desired_pattern(&grid, &[0.2], 0.3);
        let mut want = 0.0;
        for (theta, g) in grid.angles().iter().zip(&desired.gains) {
            want += (1.7 * g - pattern_gain(&r, *theta, 0.5)).powi(2);
        }
        let got = pattern_error(&r, 1.7, &grid, &desired);
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn compression_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = DMatrix::from_fn(20, 5, |_, _| rng.random_range(-1.0..1.0));
        let d = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
        let (b, off) = compress_affine(&f, &d);
        for _ in 0..10 {
            let x = DVector::from_fn(5, |_, _| rng.random_range(-2.0..2.0));
            let full = (&f * &x + &d).norm();
            let short = (&b * &x + DVector::from_vec(off.clone())).norm();
            assert!((full - short).abs() < 1e-12 * full.max(1.0));
        }
    }

    fn params(n: usize, p_max: f64) -> SystemParams {
        SystemParams {
            n_antennas: n,
            p_max,
            ..SystemParams::default()
        }
    }

    #[test]
    fn flat_pattern_is_scaled_identity() {
        for n in [2, 4] {
            let p = params(n, 1.0);
            let grid = AngularGrid::standard(&p).unwrap();
            let ones = DesiredPattern::uniform(grid.len(), 1.0).unwrap();
            let sol = solve_ideal_pattern(&p, &grid, &ones).unwrap();
            assert!(sol.delta0 <= 1e-8 * grid.len() as f64);
            assert!((sol.delta_star - 1.0).abs() < 1e-6);
            let want = HermitianMatrix::identity(n).scale(1.0 / n as f64);
            assert!(sol.r0.sub(&want).matrix().iter().all(|z| z.norm() < 1e-6));
        }
    }

    #[test]
    fn zero_pattern_has_positive_error() {
        let p = params(3, 1.0);
        let grid = AngularGrid::uniform_degrees(-90.0, 90.0, 5.0, 3, 0.5).unwrap();
        let zero = DesiredPattern::uniform(grid.len(), 0.0).unwrap();
        let sol = solve_ideal_pattern(&p, &grid, &zero).unwrap();
        assert!(sol.delta0 > 1e-3);
        assert!((sol.r0.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_antenna_brute_force() {
        // R = [[1/2, ρ], [ρ*, 1/2]], |ρ| ≤ 1/2; for fixed ρ the best δ ≥ 0 is closed-form.
        let p = params(2, 1.0);
        let grid = AngularGrid::new(vec![-0.7, 0.1, 0.9], 2, 0.5).unwrap();
        let desired = DesiredPattern::new(vec![0.0, 1.0, 0.3]).unwrap();
        let sol = solve_ideal_pattern(&p, &grid, &desired).unwrap();

        let eval = |re: f64, im: f64| {
            let m = DMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), C64::new(re, im), C64::new(re, -im), C64::new(0.5, 0.0)]);
            let r = HermitianMatrix::new(m).unwrap();
            let g = grid.gains(&r);
            let pp: f64 = desired.gains.iter().map(|v| v * v).sum();
            let pg: f64 = desired.gains.iter().zip(&g).map(|(a, b)| a * b).sum();
            let delta = (pg / pp).max(0.0);
            pattern_error(&r, delta, &grid, &desired)
        };
        let steps = 800;
        let mut best = f64::INFINITY;
        let mut arg = (0.0, 0.0);
        for i in 0..=steps {
            for j in 0..=steps {
                let re = -0.5 + i as f64 / steps as f64;
                let im = -0.5 + j as f64 / steps as f64;
                if re * re + im * im <= 0.25 {
                    let v = eval(re, im);
                    if v < best {
                        best = v;
                        arg = (re, im);
                    }
                }
            }
        }
        // refine around the coarse optimum
        let h = 1.0 / steps as f64;
        for i in -100..=100 {
            for j in -100..=100 {
                let re = arg.0 + i as f64 * h / 50.0;
                let im = arg.1 + j as f64 * h / 50.0;
                if re * re + im * im <= 0.25 {
                    best = best.min(eval(re, im));
                }
            }
        }
        assert!(sol.delta0 <= best * (1.0 + 1e-4) + 1e-12, "solver {} grid {}", sol.delta0, best);
        assert!(sol.delta0 >= best * (1.0 - 1e-4) - 1e-12, "solver {} grid {}", sol.delta0, best);
    }

    #[test]
    fn mirrored_grid_gives_same_optimum() {
        let p = params(4, 1.0);
        let grid = AngularGrid::uniform_degrees(-90.0, 90.0, 2.0, 4, 0.5).unwrap();
        let desired = desired_pattern(&grid, &[20f64.to_radians()], 10f64.to_radians());
        let a = solve_ideal_pattern(&p, &grid, &desired).unwrap();
        let b = solve_ideal_pattern(&p, &grid.mirrored().unwrap(), &desired.mirrored()).unwrap();
        assert!((a.delta0 - b.delta0).abs() <= 1e-6 * a.delta0.max(1e-12));
    }

    #[test]
    fn csv_has_three_columns() {
        let grid = AngularGrid::uniform_degrees(-90.0, 90.0, 45.0, 3, 0.5).unwrap();
        let mut buf = Vec::new();
        write_beampattern_csv(&mut buf, &grid, &HermitianMatrix::identity(3)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta_deg,gain_linear,gain_dB");
        assert_eq!(lines.len(), 6);
        let cols: Vec<f64> = lines[3].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(cols[0], 0.0);
        assert!((cols[1] - 3.0).abs() < 1e-12);
        assert!((cols[2] - 10.0 * 3f64.log10()).abs() < 1e-12);
    }
}
