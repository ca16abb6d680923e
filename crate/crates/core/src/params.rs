//! Model parameters for the spatial, channel and compute models.

use crate::error::{Error, Result};
use crate::units;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Law of the offset `r` between a corridor and its cluster center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum RadiusModel {
    /// Half-normal density `sqrt(2/(pi sigma^2)) exp(-r^2/(2 sigma^2))` on `[0, inf)`.
    TruncatedGaussian { sigma: f64 },
    /// Uniform density `1/r_hat` on `[0, r_hat]`.
    Uniform { r_hat: f64 },
}

impl RadiusModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RadiusModel::TruncatedGaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::param("sigma", "must be positive and finite"))
            }
            RadiusModel::Uniform { r_hat } if !(r_hat > 0.0 && r_hat.is_finite()) => {
                Err(Error::param("r_hat", "must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match *self {
            RadiusModel::TruncatedGaussian { sigma } => {
                (2.0 / (PI * sigma * sigma)).sqrt() * (-r * r / (2.0 * sigma * sigma)).exp()
            }
            RadiusModel::Uniform { r_hat } => {
                if r <= r_hat {
                    1.0 / r_hat
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RadiusModel::TruncatedGaussian { sigma } => sigma * (2.0 / PI).sqrt(),
            RadiusModel::Uniform { r_hat } => 0.5 * r_hat,
        }
    }

    /// Upper integration limit: `8 sigma` for the Gaussian law, `r_hat` for
    /// the uniform law.
    pub fn support_limit(&self) -> f64 {
        match *self {
            RadiusModel::TruncatedGaussian { sigma } => 8.0 * sigma,
            RadiusModel::Uniform { r_hat } => r_hat,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RadiusModel::TruncatedGaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z.abs()
            }
            RadiusModel::Uniform { r_hat } => r_hat * rng.random::<f64>(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadiusModel::TruncatedGaussian { .. } => "truncated_gaussian",
            RadiusModel::Uniform { .. } => "uniform",
        }
    }
}

/// All constants of the network and compute model, in SI units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    /// GBS density, per m².
    pub lambda_b: f64,
    /// Cluster-center density, per m².
    pub lambda_c: f64,
    /// Corridor rate per cluster; the corridor count is truncated Poisson
    /// with rate `lambda_l - 1`.
    pub lambda_l: f64,
    /// Aircraft density along a corridor, per m.
    pub lambda_t: f64,
    /// Maximum number of corridors per cluster.
    pub n_max: u32,
    /// Corridor height, m.
    pub height: f64,
    /// Transmit power, W.
    pub power: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Nakagami shape.
    pub m: u32,
    /// SIR threshold, linear.
    pub gamma: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
    /// Model update packet size, bits.
    pub packet_bits: f64,
    /// Local training data size, bits.
    pub data_bits: f64,
    /// CPU cycles per bit.
    pub cycles_per_bit: f64,
    /// CPU clock, cycles/s.
    pub clock_hz: f64,
    pub radius_model: RadiusModel,
    /// Radius of the simulated disc, m.
    pub disc_radius: f64,
    /// Extra ring, m, in which interferers are sampled beyond the disc.
    pub guard_margin: f64,
}

impl ModelParams {
    /// Simulation parameters of the reference UAM scenario: 20 km disc,
    /// 1 GBS/km², 0.001 clusters/km², corridor rate 5, 1 aircraft/km, at most
    /// 10 corridors per cluster, 500 ft corridors, 40 dBm, alpha = 4,
    /// Rayleigh fading, 0 dB threshold, 10 MHz, 5 kb updates, 1 kb of local
    /// data at 1e3 cycles/bit on a 1 GHz clock. Both radius laws use km.
    pub fn reference(radius_model: RadiusModel) -> Self {
        ModelParams {
            lambda_b: units::per_km2(1.0),
            lambda_c: units::per_km2(0.001),
            lambda_l: 5.0,
            lambda_t: units::per_km(1.0),
            n_max: 10,
            height: 500.0 * units::METERS_PER_FOOT,
            power: units::dbm_to_watts(40.0),
            alpha: 4.0,
            m: 1,
            gamma: units::db_to_linear(0.0),
            bandwidth: 10e6,
            packet_bits: 5e3,
            data_bits: 1e3,
            cycles_per_bit: 1e3,
            clock_hz: 1e9,
            radius_model,
            disc_radius: units::km(20.0),
            guard_margin: 0.0,
        }
    }

    pub fn reference_gaussian() -> Self {
        Self::reference(RadiusModel::TruncatedGaussian {
            sigma: units::km(1.0),
        })
    }

    pub fn reference_uniform() -> Self {
        Self::reference(RadiusModel::Uniform {
            r_hat: units::km(2.0),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite and non-negative"))
            }
        };
        let pos = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite and positive"))
            }
        };
        nonneg("lambda_b", self.lambda_b)?;
        nonneg("lambda_c", self.lambda_c)?;
        nonneg("lambda_t", self.lambda_t)?;
        if !(self.lambda_l > 1.0 && self.lambda_l.is_finite()) {
            return Err(Error::param(
                "lambda_l",
                "must exceed 1 (corridor count rate is lambda_l - 1)",
            ));
        }
        pos("height", self.height)?;
        pos("power", self.power)?;
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", "must exceed 2"));
        }
        if self.m < 1 {
            return Err(Error::param("m", "Nakagami shape must be at least 1"));
        }
        pos("gamma", self.gamma)?;
        pos("bandwidth", self.bandwidth)?;
        pos("packet_bits", self.packet_bits)?;
        nonneg("data_bits", self.data_bits)?;
        nonneg("cycles_per_bit", self.cycles_per_bit)?;
        pos("clock_hz", self.clock_hz)?;
        pos("disc_radius", self.disc_radius)?;
        nonneg("guard_margin", self.guard_margin)?;
        self.radius_model.validate()
    }

    /// Local computing delay `v * eps / f_clock`, s.
    pub fn t_comp(&self) -> f64 {
        self.data_bits * self.cycles_per_bit / self.clock_hz
    }

    /// Transmission delay `V / (W log2(1 + sir))`, s. Zero for infinite SIR.
    pub fn t_tran(&self, sir: f64) -> f64 {
        if sir.is_infinite() {
            0.0
        } else {
            self.packet_bits / (self.bandwidth * (1.0 + sir).log2())
        }
    }

    /// SIR threshold at which the total delay equals `tau`:
    /// `2^(V / (W (tau - t_comp))) - 1`. Infinite at or below `t_comp`.
    pub fn gamma_for_deadline(&self, tau: f64) -> f64 {
        let slack = tau - self.t_comp();
        if slack <= 0.0 {
            return f64::INFINITY;
        }
        let exponent = self.packet_bits / (self.bandwidth * slack);
        // exp_m1 keeps precision for long deadlines
        (exponent * core::f64::consts::LN_2).exp_m1()
    }

    /// Radius of the region in which points are sampled.
    pub fn sampling_radius(&self) -> f64 {
        self.disc_radius + self.guard_margin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        ModelParams::reference_gaussian().validate().unwrap();
        ModelParams::reference_uniform().validate().unwrap();
    }

    #[test]
    fn t_comp_is_one_millisecond() {
        let p = ModelParams::reference_gaussian();
        assert!((p.t_comp() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn deadline_threshold_inverts_delay() {
        let p = ModelParams::reference_gaussian();
        for sir in [1e-3, 0.5, 1.0, 10.0, 1e4] {
            let tau = p.t_comp() + p.t_tran(sir);
            let g = p.gamma_for_deadline(tau);
            assert!((g - sir).abs() <= 1e-9 * sir, "{sir} -> {g}");
        }
        assert!(p.gamma_for_deadline(p.t_comp()).is_infinite());
        assert!(p.gamma_for_deadline(0.0).is_infinite());
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = ModelParams::reference_gaussian();
        p.lambda_l = 1.0;
        assert!(matches!(p.validate(), Err(Error::Parameter { name: "lambda_l", .. })));
        let mut p = ModelParams::reference_gaussian();
        p.alpha = 2.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::reference_gaussian();
        p.m = 0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::reference_gaussian();
        p.lambda_b = -1.0;
        assert!(p.validate().is_err());
        assert!(RadiusModel::Uniform { r_hat: 0.0 }.validate().is_err());
    }

    #[test]
    fn radius_pdfs_normalize() {
        for model in [
            RadiusModel::TruncatedGaussian { sigma: 1.3 },
            RadiusModel::Uniform { r_hat: 2.0 },
        ] {
            let n = 200_000;
            let top = model.support_limit();
            let h = top / n as f64;
            let total: f64 = (0..n).map(|i| model.pdf((i as f64 + 0.5) * h) * h).sum();
            assert!((total - 1.0).abs() < 1e-6, "{model:?}: {total}");
        }
    }
}
