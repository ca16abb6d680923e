//! Viscous Burgers equation `v_t + (v^2/2)_s = rho v_ss` on the periodic unit
//! interval, used to synthesize turbulence training data.
//!
//! Space is pseudo-spectral with 2/3-rule dealiasing of the quadratic term.
//! Diffusion is integrated exactly through an integrating factor and the
//! nonlinear term with classical fourth-order Runge-Kutta.

use crate::error::{Error, Result};
use crate::fft::{wavenumber, FftPlan};
use crate::rng::{substream, Domain};
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Largest admissible `dt * max|v| * k_max` for the explicit nonlinear step.
pub const ADVECTIVE_LIMIT: f64 = 2.5;

/// Velocity samples on `n` equispaced points of `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Field1D {
    pub values: Vec<f64>,
}

impl Field1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(Error::param("n_grid", "grid size must be a power of two"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "field must be finite"));
        }
        Ok(Field1D { values })
    }

    pub fn zeros(n: usize) -> Self {
        Field1D {
            values: alloc::vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Discrete `integral v^2 ds`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    /// Grid coordinate of point `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 / self.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BurgersConfig {
    /// Kinematic viscosity.
    pub rho: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_grid: usize,
    /// Spectral magnitude of the initial field decays like `(1 + k)^-decay`.
    pub init_spectrum_decay: f64,
    /// Scale of the initial spectral coefficients.
    pub init_amplitude: f64,
    /// Drop the `k = 0` mode of the initial field.
    pub zero_mean: bool,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        BurgersConfig {
            rho: 0.01,
            t_final: 0.1,
            dt: 1e-4,
            n_grid: 256,
            init_spectrum_decay: 2.0,
            init_amplitude: 1.0,
            zero_mean: true,
        }
    }
}

impl BurgersConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::param("rho", "viscosity must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "time step must be positive"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("t_final", "must be non-negative"));
        }
        if self.n_grid < 4 || !self.n_grid.is_power_of_two() {
            return Err(Error::param("n_grid", "grid size must be a power of two, at least 4"));
        }
        if !(self.init_spectrum_decay >= 0.0) {
            return Err(Error::param("init_spectrum_decay", "must be non-negative"));
        }
        if !(self.init_amplitude >= 0.0 && self.init_amplitude.is_finite()) {
            return Err(Error::param("init_amplitude", "must be non-negative"));
        }
        Ok(())
    }
}

/// One input/target pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TurbulenceSample {
    pub input: Field1D,
    pub target: Field1D,
}

/// Random initial field with independent Gaussian spectral coefficients of
/// magnitude `init_amplitude (1 + k)^-decay` and conjugate symmetry.
pub fn sample_initial_field<R: Rng + ?Sized>(config: &BurgersConfig, rng: &mut R) -> Result<Field1D> {
    config.validate()?;
    let n = config.n_grid;
    let mut spec = alloc::vec![Complex64::new(0.0, 0.0); n];
    let scale = |k: usize| config.init_amplitude * (1.0 + k as f64).powf(-config.init_spectrum_decay);
    let z0: f64 = StandardNormal.sample(rng);
    if !config.zero_mean {
        spec[0] = Complex64::new(scale(0) * z0 * n as f64, 0.0);
    }
    for k in 1..n / 2 {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        let c = Complex64::new(a, b) * (scale(k) * n as f64 / 2f64.sqrt());
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    let plan = FftPlan::new(n)?;
    Field1D::new(plan.inverse_real(&spec))
}

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct BurgersSolver {
    config: BurgersConfig,
    plan: FftPlan,
    /// `i kappa` per bin, zero at the Nyquist bin.
    ik: Vec<Complex64>,
    mask: Vec<bool>,
    k_max: f64,
}

impl BurgersSolver {
    pub fn new(config: &BurgersConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_grid;
        let plan = FftPlan::new(n)?;
        let cutoff = n / 3;
        let ik = (0..n)
            .map(|k| {
                if 2 * k == n {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, 2.0 * PI * wavenumber(k, n))
                }
            })
            .collect();
        let mask = (0..n).map(|k| wavenumber(k, n).abs() <= cutoff as f64).collect();
        Ok(BurgersSolver {
            config: config.clone(),
            plan,
            ik,
            mask,
            k_max: 2.0 * PI * cutoff as f64,
        })
    }

    pub fn config(&self) -> &BurgersConfig {
        &self.config
    }

    fn decay(&self, k: usize, dt: f64) -> f64 {
        let kappa = 2.0 * PI * wavenumber(k, self.config.n_grid);
        (-self.config.rho * kappa * kappa * dt).exp()
    }

    /// `-(1/2) i kappa FFT(v^2)` with both the field and the product dealiased.
    fn nonlinear(&self, vh: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = vh
            .iter()
            .zip(&self.mask)
            .map(|(&z, &keep)| if keep { z } else { Complex64::new(0.0, 0.0) })
            .collect();
        self.plan.inverse(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.re * z.re, 0.0);
        }
        self.plan.forward(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            *z = if self.mask[k] { self.ik[k] * *z * -0.5 } else { Complex64::new(0.0, 0.0) };
        }
        buf
    }

    fn check(&self, values: &[f64], t: f64, dt: f64) -> Result<()> {
        let mut vmax = 0.0f64;
        for v in values {
            if !v.is_finite() {
                return Err(Error::Unstable {
                    time: t,
                    condition: "non-finite velocity".into(),
                });
            }
            vmax = vmax.max(v.abs());
        }
        let cfl = dt * vmax * self.k_max;
        if cfl > ADVECTIVE_LIMIT {
            return Err(Error::Unstable {
                time: t,
                condition: format!("advective CFL dt*max|v|*k_max = {cfl:.3} exceeds {ADVECTIVE_LIMIT}"),
            });
        }
        Ok(())
    }

    /// One integrating-factor RK4 step of size `dt` in spectral space.
    fn step_spectral(&self, vh: &mut Vec<Complex64>, dt: f64) {
        let n = vh.len();
        let e: Vec<f64> = (0..n).map(|k| self.decay(k, dt)).collect();
        let eh: Vec<f64> = (0..n).map(|k| self.decay(k, 0.5 * dt)).collect();
        let k1 = self.nonlinear(vh);
        let a: Vec<Complex64> = (0..n).map(|k| (vh[k] + k1[k] * (0.5 * dt)) * eh[k]).collect();
        let k2 = self.nonlinear(&a);
        let b: Vec<Complex64> = (0..n).map(|k| vh[k] * eh[k] + k2[k] * (0.5 * dt)).collect();
        let k3 = self.nonlinear(&b);
        let c: Vec<Complex64> = (0..n).map(|k| vh[k] * e[k] + k3[k] * (dt * eh[k])).collect();
        let k4 = self.nonlinear(&c);
        for k in 0..n {
            vh[k] = vh[k] * e[k] + (k1[k] * e[k] + (k2[k] + k3[k]) * (2.0 * eh[k]) + k4[k]) * (dt / 6.0);
        }
    }

    /// Advances `field` by one step of size `dt`.
    pub fn step_by(&self, field: &Field1D, dt: f64, t: f64) -> Result<Field1D> {
        if field.len() != self.config.n_grid {
            return Err(Error::Shape {
                expected: self.config.n_grid,
                got: field.len(),
            });
        }
        self.check(&field.values, t, dt)?;
        let mut vh = self.plan.forward_real(&field.values);
        self.step_spectral(&mut vh, dt);
        let out = self.plan.inverse_real(&vh);
        self.check(&out, t + dt, dt)?;
        Field1D::new(out)
    }

    /// Integrates from `v0` to `t_final`, calling `observe(t, field)` after
    /// every step. The step is shrunk so that a whole number of steps lands
    /// on `t_final`.
    pub fn solve_observed<F: FnMut(f64, &Field1D)>(&self, v0: &Field1D, mut observe: F) -> Result<Field1D> {
        if v0.len() != self.config.n_grid {
            return Err(Error::Shape {
                expected: self.config.n_grid,
                got: v0.len(),
            });
        }
        let t_final = self.config.t_final;
        if t_final == 0.0 {
            return Ok(v0.clone());
        }
        let steps = (t_final / self.config.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = t_final / steps as f64;
        let mut vh = self.plan.forward_real(&v0.values);
        self.check(&v0.values, 0.0, dt)?;
        let mut field = v0.clone();
        for i in 0..steps {
            self.step_spectral(&mut vh, dt);
            let t = (i + 1) as f64 * dt;
            field.values = self.plan.inverse_real(&vh);
            self.check(&field.values, t, dt)?;
            observe(t, &field);
        }
        Ok(field)
    }

    pub fn solve(&self, v0: &Field1D) -> Result<Field1D> {
        self.solve_observed(v0, |_, _| {})
    }
}

/// One step of size `config.dt`.
pub fn step(field: &Field1D, config: &BurgersConfig) -> Result<Field1D> {
    BurgersSolver::new(config)?.step_by(field, config.dt, 0.0)
}

/// Solution at `config.t_final`.
pub fn solve(v0: &Field1D, config: &BurgersConfig) -> Result<Field1D> {
    BurgersSolver::new(config)?.solve(v0)
}

/// Training data of one client. `s_k` is `samples.len()`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClientDataset {
    pub client: usize,
    /// Spectral decay used for this client's initial fields.
    pub decay: f64,
    pub samples: Vec<TurbulenceSample>,
}

impl ClientDataset {
    pub fn size(&self) -> usize {
        self.samples.len()
    }
}

/// Decay exponent of client `k` out of `k_clients`: spread evenly over
/// `decay (1 +- heterogeneity)`.
pub fn client_decay(base: f64, heterogeneity: f64, k: usize, k_clients: usize) -> f64 {
    let u = if k_clients > 1 {
        2.0 * k as f64 / (k_clients - 1) as f64 - 1.0
    } else {
        0.0
    };
    base * (1.0 + heterogeneity * u)
}

/// Generates one sample of a client: initial field from substream
/// `(seed, stream, index)` solved to `t_final`.
pub fn generate_sample(solver: &BurgersSolver, decay: f64, seed: u64, domain: Domain, index: u64) -> Result<TurbulenceSample> {
    let mut cfg = solver.config().clone();
    cfg.init_spectrum_decay = decay;
    let mut rng = substream(seed, domain, index);
    let input = sample_initial_field(&cfg, &mut rng)?;
    let target = solver.solve(&input)?;
    Ok(TurbulenceSample { input, target })
}

/// Stream index of sample `j` of client `k`.
pub fn sample_index(client: usize, sample: usize) -> u64 {
    ((client as u64) << 32) | sample as u64
}

/// Per-client datasets with client-specific spectral decay (the non-IID
/// knob). Samples are independent of each other, so callers may generate
/// them in any order with [`generate_sample`].
pub fn make_federated_dataset(
    k_clients: usize,
    samples_per_client: usize,
    config: &BurgersConfig,
    seed: u64,
    heterogeneity: f64,
) -> Result<Vec<ClientDataset>> {
    if k_clients == 0 {
        return Err(Error::param("k_clients", "need at least one client"));
    }
    if !(0.0..1.0).contains(&heterogeneity) {
        return Err(Error::param("heterogeneity", "must lie in [0, 1)"));
    }
    let solver = BurgersSolver::new(config)?;
    (0..k_clients)
        .map(|k| {
            let decay = client_decay(config.init_spectrum_decay, heterogeneity, k, k_clients);
            let samples = (0..samples_per_client)
                .map(|j| generate_sample(&solver, decay, seed, Domain::Dataset, sample_index(k, j)))
                .collect::<Result<Vec<_>>>()?;
            Ok(ClientDataset {
                client: k,
                decay,
                samples,
            })
        })
        .collect()
}
