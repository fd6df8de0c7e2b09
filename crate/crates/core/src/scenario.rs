//! Physical parameters of one problem instance, channel generation and the
//! achievable-rate expressions of the superposition scheme.
//!
//! The C-user decodes the multicast stream first (treating unicast as
//! noise), cancels it, and then decodes unicast interference-free. The
//! R-user decodes multicast only, treating unicast as noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::beampattern::{desired_pattern, steering_vector, AngularGrid, DesiredPattern};
use crate::error::{Error, Result};
use crate::hermitian::{ComplexVector, HermitianMatrix, C64};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// All quantities in SI units and linear scale; angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    pub n_antennas: usize,
    pub d_over_lambda: f64,
    /// Transmit power budget in watts.
    pub p_max: f64,
    pub sigma2_r: f64,
    pub sigma2_c: f64,
    /// Minimum multicast rate in bit/s/Hz.
    pub rate_multicast_min: f64,
    /// Tolerated relative excess of beampattern error over the radar-only optimum.
    /// `f64::INFINITY` drops the radar constraint.
    pub gamma_b: f64,
    pub l0_db: f64,
    pub d_r: f64,
    pub d_c: f64,
    pub theta_targets: Vec<f64>,
    pub beam_width: f64,
    pub seed: u64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let sigma2 = dbm_to_watts(-100.0);
        Self {
            n_antennas: 6,
            d_over_lambda: 0.5,
            p_max: db_to_linear(110.0) * sigma2,
            sigma2_r: sigma2,
            sigma2_c: sigma2,
            rate_multicast_min: 0.5,
            gamma_b: db_to_linear(-10.0),
            l0_db: 40.0,
            d_r: 1000.0,
            d_c: 100.0,
            theta_targets: vec![0.0],
            beam_width: 10f64.to_radians(),
            seed: 0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_antennas < 2 {
            return bad("n_antennas must be >= 2");
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return bad("p_max must be positive and finite");
        }
        if !(self.sigma2_r > 0.0 && self.sigma2_c > 0.0) {
            return bad("noise powers must be positive");
        }
        if !(self.rate_multicast_min >= 0.0 && self.rate_multicast_min.is_finite()) {
            return bad("rate_multicast_min must be >= 0");
        }
        if !(self.gamma_b >= 0.0) {
            return bad("gamma_b must be >= 0");
        }
        if !(self.d_over_lambda > 0.0 && self.d_over_lambda.is_finite()) {
            return bad("d_over_lambda must be positive");
        }
        if !(self.d_r > 0.0 && self.d_c > 0.0) {
            return bad("distances must be positive");
        }
        if !(self.beam_width >= 0.0) {
            return bad("beam_width must be >= 0");
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if self.theta_targets.iter().any(|t| !(t.abs() < half_pi)) {
            return bad("theta_targets must lie in (-pi/2, pi/2)");
        }
        Ok(())
    }

    /// `2^R̄ − 1`.
    pub fn gamma_m(&self) -> f64 {
        2f64.powf(self.rate_multicast_min) - 1.0
    }

    pub fn path_loss_r_db(&self) -> f64 {
        self.l0_db + 20.0 * self.d_r.log10()
    }

    pub fn path_loss_c_db(&self) -> f64 {
        self.l0_db + 30.0 * self.d_c.log10()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelPair {
    pub h_r: ComplexVector,
    pub h_c: ComplexVector,
}

impl ChannelPair {
    pub fn new(h_r: ComplexVector, h_c: ComplexVector) -> Result<Self> {
        if h_r.len() != h_c.len() {
            return Err(Error::Dimension("channels must have equal length".into()));
        }
        Ok(Self { h_r, h_c })
    }

    /// `H_r = h_r h_r^H`.
    pub fn gram_r(&self) -> HermitianMatrix {
        self.h_r.outer()
    }

    /// `H_c = h_c h_c^H`.
    pub fn gram_c(&self) -> HermitianMatrix {
        self.h_c.outer()
    }
}

/// Draws the line-of-sight R-user channel (towards the first target angle)
/// and the Rayleigh C-user channel.
pub fn generate_channels(params: &SystemParams, rng: &mut impl Rng) -> Result<ChannelPair> {
    let Some(&theta) = params.theta_targets.first() else {
        return Err(Error::Config("theta_targets must not be empty".into()));
    };
    let n = params.n_antennas;
    let amp_r = db_to_linear(-params.path_loss_r_db()).sqrt();
    let h_r = steering_vector(theta, n, params.d_over_lambda).scale(C64::from(amp_r));
    // CN(0, v): real and imaginary parts ~ N(0, v/2)
    let std_c = (db_to_linear(-params.path_loss_c_db()) / 2.0).sqrt();
    let h_c = ComplexVector::new(
        (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re * std_c, im * std_c)
            })
            .collect(),
    )?;
    ChannelPair::new(h_r, h_c)
}

/// One problem instance: parameters, a channel draw, and the radar grid
/// with its desired pattern.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: SystemParams,
    pub channels: ChannelPair,
    pub grid: AngularGrid,
    pub desired: DesiredPattern,
}

impl Scenario {
    /// Uses the standard 1° grid and the unit-gain target windows of `params`.
    pub fn new(params: SystemParams, channels: ChannelPair) -> Result<Self> {
        params.validate()?;
        if channels.h_r.len() != params.n_antennas {
            return Err(Error::Dimension(format!(
                "channels have {} entries, params ask for {} antennas",
                channels.h_r.len(),
                params.n_antennas
            )));
        }
        let grid = AngularGrid::standard(&params)?;
        let desired = desired_pattern(&grid, &params.theta_targets, params.beam_width);
        Ok(Self {
            params,
            channels,
            grid,
            desired,
        })
    }

    /// Draws channels from `rng` and builds the instance.
    pub fn generate(params: SystemParams, rng: &mut impl Rng) -> Result<Self> {
        params.validate()?;
        let channels = generate_channels(&params, rng)?;
        Self::new(params, channels)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamformerPair {
    pub w_m: ComplexVector,
    pub w_u: ComplexVector,
}

impl BeamformerPair {
    pub fn new(w_m: ComplexVector, w_u: ComplexVector) -> Result<Self> {
        if w_m.len() != w_u.len() {
            return Err(Error::Dimension("beamformers must have equal length".into()));
        }
        Ok(Self { w_m, w_u })
    }

    pub fn power(&self) -> f64 {
        self.w_m.norm_sqr() + self.w_u.norm_sqr()
    }

    pub fn check_power(&self, p_max: f64) -> Result<()> {
        if self.power() > p_max * (1.0 + 1e-6) {
            return Err(Error::Precondition(format!(
                "beamformer power {:e} exceeds budget {:e}",
                self.power(),
                p_max
            )));
        }
        Ok(())
    }

    /// `R_1 = w_m w_m^H + w_u w_u^H`.
    pub fn covariance(&self) -> HermitianMatrix {
        self.w_m.outer().add(&self.w_u.outer())
    }
}

/// Received powers `|h^H w|²` that enter every rate expression.
#[derive(Debug, Clone, Copy)]
struct Gains {
    c_m: f64,
    c_u: f64,
    r_m: f64,
    r_u: f64,
}

impl Gains {
    fn from_beamformers(bf: &BeamformerPair, ch: &ChannelPair) -> Self {
        Self {
            c_m: ch.h_c.dot(&bf.w_m).norm_sqr(),
            c_u: ch.h_c.dot(&bf.w_u).norm_sqr(),
            r_m: ch.h_r.dot(&bf.w_m).norm_sqr(),
            r_u: ch.h_r.dot(&bf.w_u).norm_sqr(),
        }
    }

    fn from_covariances(w_m: &HermitianMatrix, w_u: &HermitianMatrix, ch: &ChannelPair) -> Self {
        Self {
            c_m: w_m.quad_form(&ch.h_c),
            c_u: w_u.quad_form(&ch.h_c),
            r_m: w_m.quad_form(&ch.h_r),
            r_u: w_u.quad_form(&ch.h_r),
        }
    }

    fn rates(&self, params: &SystemParams) -> Rates {
        let multicast_at_c = (1.0 + self.c_m / (self.c_u + params.sigma2_c)).log2();
        let multicast_at_r = (1.0 + self.r_m / (self.r_u + params.sigma2_r)).log2();
        Rates {
            unicast: (1.0 + self.c_u / params.sigma2_c).log2(),
            multicast: multicast_at_c.min(multicast_at_r),
            multicast_at_c,
            multicast_at_r,
        }
    }
}

/// Achievable rates in bit/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub unicast: f64,
    pub multicast: f64,
    pub multicast_at_c: f64,
    pub multicast_at_r: f64,
}

impl Rates {
    pub fn from_beamformers(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> Self {
        Gains::from_beamformers(bf, ch).rates(params)
    }

    /// Same expressions evaluated through `Tr(H W)` for lifted covariances.
    pub fn from_covariances(
        w_m: &HermitianMatrix,
        w_u: &HermitianMatrix,
        ch: &ChannelPair,
        params: &SystemParams,
    ) -> Self {
        Gains::from_covariances(w_m, w_u, ch).rates(params)
    }
}

/// Multicast rate at the C-user, before SIC.
pub fn rate_multicast_at_c(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> f64 {
    Rates::from_beamformers(bf, ch, params).multicast_at_c
}

/// Unicast rate at the C-user after cancelling multicast.
pub fn rate_unicast(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> f64 {
    Rates::from_beamformers(bf, ch, params).unicast
}

/// Multicast rate at the R-user, unicast treated as noise.
pub fn rate_multicast_at_r(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> f64 {
    Rates::from_beamformers(bf, ch, params).multicast_at_r
}

/// Multicast rate, limited by the weaker of the two receivers.
pub fn rate_multicast(bf: &BeamformerPair, ch: &ChannelPair, params: &SystemParams) -> f64 {
    Rates::from_beamformers(bf, ch, params).multicast
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cv(v: &[(f64, f64)]) -> ComplexVector {
        ComplexVector::new(v.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
    }

    fn unit_params() -> SystemParams {
        SystemParams {
            sigma2_c: 1.0,
            sigma2_r: 1.0,
            ..SystemParams::default()
        }
    }

    #[test]
    fn los_channel_norm() {
        let p = SystemParams::default();
        assert!((p.path_loss_r_db() - 100.0).abs() < 1e-12);
        assert!((p.path_loss_c_db() - 100.0).abs() < 1e-12);
        let ch = generate_channels(&p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let want = p.n_antennas as f64 * 1e-10;
        assert!((ch.h_r.norm_sqr() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn rayleigh_mean_power() {
        let p = SystemParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|_| generate_channels(&p, &mut rng).unwrap().h_c.norm_sqr())
            .sum::<f64>()
            / draws as f64;
        let want = p.n_antennas as f64 * 1e-10;
        assert!((mean - want).abs() < 0.05 * want, "mean {mean:e} vs {want:e}");
    }

    #[test]
    fn channels_are_deterministic() {
        let p = SystemParams::default();
        let a = generate_channels(&p, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = generate_channels(&p, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.h_c, b.h_c);
        assert_eq!(a.h_r, b.h_r);
    }

    #[test]
    fn empty_targets_rejected() {
        let p = SystemParams {
            theta_targets: vec![],
            ..SystemParams::default()
        };
        let err = generate_channels(&p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn rate_edge_cases() {
        let p = unit_params();
        let ch = ChannelPair::new(cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        let zero = cv(&[(0.0, 0.0), (0.0, 0.0)]);
        // w_m = 0
        let bf = BeamformerPair::new(zero.clone(), cv(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        assert_eq!(rate_multicast_at_c(&bf, &ch, &p), 0.0);
        assert_eq!(rate_multicast_at_r(&bf, &ch, &p), 0.0);
        // w_u = 0 with |h^H w_m|^2 = sigma^2
        let bf = BeamformerPair::new(cv(&[(0.0, 1.0), (5.0, 0.0)]), zero.clone()).unwrap();
        assert!((rate_multicast_at_c(&bf, &ch, &p) - 1.0).abs() < 1e-15);
        assert!((rate_multicast_at_r(&bf, &ch, &p) - 1.0).abs() < 1e-15);
        assert_eq!(rate_unicast(&bf, &ch, &p), 0.0);
        // unicast SNR 3 -> 2 bit/s/Hz
        let bf = BeamformerPair::new(zero, cv(&[(3f64.sqrt(), 0.0), (0.0, 0.0)])).unwrap();
        assert!((rate_unicast(&bf, &ch, &p) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn multicast_is_min() {
        let p = unit_params();
        // R-user sees SNR 1, C-user SNR 3 with no unicast
        let ch = ChannelPair::new(cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(3f64.sqrt(), 0.0), (0.0, 0.0)])).unwrap();
        let bf = BeamformerPair::new(cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(0.0, 0.0), (0.0, 0.0)])).unwrap();
        let r = Rates::from_beamformers(&bf, &ch, &p);
        assert!((r.multicast_at_c - 2.0).abs() < 1e-15);
        assert!((r.multicast_at_r - 1.0).abs() < 1e-15);
        assert_eq!(r.multicast, r.multicast_at_r);
        let sym = ChannelPair::new(ch.h_c.clone(), ch.h_c.clone()).unwrap();
        let r = Rates::from_beamformers(&bf, &sym, &p);
        assert_eq!(r.multicast_at_c, r.multicast_at_r);
    }

    #[test]
    fn random_instance_matches_scalar_formula() {
        let p = SystemParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = generate_channels(&p, &mut rng).unwrap();
        let draw = |rng: &mut ChaCha8Rng| {
            ComplexVector::new(
                (0..p.n_antennas)
                    .map(|_| C64::new(rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03)))
                    .collect(),
            )
            .unwrap()
        };
        let bf = BeamformerPair::new(draw(&mut rng), draw(&mut rng)).unwrap();
        // independent scalar evaluation with explicit sums
        let gain = |h: &ComplexVector, w: &ComplexVector| -> f64 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..h.len() {
                acc += h.as_slice()[k].conj() * w.as_slice()[k];
            }
            acc.re * acc.re + acc.im * acc.im
        };
        let s = p.sigma2_c;
        let rc = (1.0 + gain(&ch.h_c, &bf.w_m) / (gain(&ch.h_c, &bf.w_u) + s)).log2();
        let ru = (1.0 + gain(&ch.h_c, &bf.w_u) / s).log2();
        let rr = (1.0 + gain(&ch.h_r, &bf.w_m) / (gain(&ch.h_r, &bf.w_u) + p.sigma2_r)).log2();
        assert!((rate_multicast_at_c(&bf, &ch, &p) - rc).abs() < 1e-12 * rc.max(1.0));
        assert!((rate_unicast(&bf, &ch, &p) - ru).abs() < 1e-12 * ru.max(1.0));
        assert!((rate_multicast_at_r(&bf, &ch, &p) - rr).abs() < 1e-12 * rr.max(1.0));
        assert_eq!(rate_multicast(&bf, &ch, &p), rc.min(rr));
        let via_cov = Rates::from_covariances(&bf.w_m.outer(), &bf.w_u.outer(), &ch, &p);
        assert!((via_cov.unicast - ru).abs() < 1e-10);
    }

    #[test]
    fn validation() {
        assert!(SystemParams::default().validate().is_ok());
        let p = SystemParams {
            n_antennas: 1,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            theta_targets: vec![std::f64::consts::FRAC_PI_2],
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        assert!((SystemParams::default().p_max - 0.01).abs() < 1e-15);
    }
}
