//! Experiment configuration: one TOML file with every default filled in.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use uam_core::afl::{ServerConfig, StalenessWeight, StopCriteria};
use uam_core::burgers::BurgersConfig;
use uam_core::channel::ServingRule;
use uam_core::fno::FnoConfig;
use uam_core::quad::QuadratureSpec;
use uam_core::units;
use uam_core::{ModelParams, RadiusModel};

use crate::SimError;

/// Corridor offset law in kilometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusConfig {
    TruncatedGaussian { sigma_km: f64 },
    Uniform { r_hat_km: f64 },
}

impl RadiusConfig {
    pub fn to_model(self) -> RadiusModel {
        match self {
            RadiusConfig::TruncatedGaussian { sigma_km } => RadiusModel::TruncatedGaussian {
                sigma: units::km(sigma_km),
            },
            RadiusConfig::Uniform { r_hat_km } => RadiusModel::Uniform { r_hat: units::km(r_hat_km) },
        }
    }
}

/// Network and compute constants in engineering units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda_b_per_km2: f64,
    pub lambda_c_per_km2: f64,
    pub lambda_l: f64,
    pub lambda_t_per_km: f64,
    pub n_max: u32,
    pub height_m: f64,
    pub power_dbm: f64,
    pub alpha: f64,
    pub m: u32,
    pub gamma_db: f64,
    pub bandwidth_hz: f64,
    pub packet_bits: f64,
    pub data_bits: f64,
    pub cycles_per_bit: f64,
    pub clock_hz: f64,
    pub disc_radius_km: f64,
    pub guard_margin_km: f64,
    pub radius: RadiusConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lambda_b_per_km2: 1.0,
            lambda_c_per_km2: 0.001,
            lambda_l: 5.0,
            lambda_t_per_km: 1.0,
            n_max: 10,
            height_m: 500.0 * units::METERS_PER_FOOT,
            power_dbm: 40.0,
            alpha: 4.0,
            m: 1,
            gamma_db: 0.0,
            bandwidth_hz: 10e6,
            packet_bits: 5e3,
            data_bits: 1e3,
            cycles_per_bit: 1e3,
            clock_hz: 1e9,
            disc_radius_km: 20.0,
            guard_margin_km: 0.0,
            radius: RadiusConfig::TruncatedGaussian { sigma_km: 1.0 },
        }
    }
}

impl ModelConfig {
    pub fn to_params(&self) -> ModelParams {
        ModelParams {
            lambda_b: units::per_km2(self.lambda_b_per_km2),
            lambda_c: units::per_km2(self.lambda_c_per_km2),
            lambda_l: self.lambda_l,
            lambda_t: units::per_km(self.lambda_t_per_km),
            n_max: self.n_max,
            height: self.height_m,
            power: units::dbm_to_watts(self.power_dbm),
            alpha: self.alpha,
            m: self.m,
            gamma: units::db_to_linear(self.gamma_db),
            bandwidth: self.bandwidth_hz,
            packet_bits: self.packet_bits,
            data_bits: self.data_bits,
            cycles_per_bit: self.cycles_per_bit,
            clock_hz: self.clock_hz,
            radius_model: self.radius.to_model(),
            disc_radius: units::km(self.disc_radius_km),
            guard_margin: units::km(self.guard_margin_km),
        }
    }

    pub fn with_radius(&self, radius: RadiusConfig) -> Self {
        ModelConfig { radius, ..self.clone() }
    }
}

/// Parameter sweeps evaluated at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma_db: f64,
    pub lambda_l: Vec<f64>,
    pub lambda_c_per_km2: Vec<f64>,
    pub lambda_b_per_km2: Vec<f64>,
    pub lambda_t_per_km: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gamma_db: 0.0,
            lambda_l: vec![5.0, 10.0, 15.0],
            lambda_c_per_km2: vec![0.001, 0.003, 0.005],
            lambda_b_per_km2: vec![0.5, 1.0, 2.0],
            lambda_t_per_km: vec![1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectivityConfig {
    pub trials: usize,
    pub gammas_db: Vec<f64>,
    pub serving_rule: ServingRule,
    /// One curve per radius law.
    pub radius_models: Vec<RadiusConfig>,
    /// Nodes per decade of the tabulated Laplace transform.
    pub laplace_nodes_per_decade: usize,
    pub sweep: SweepConfig,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        ConnectivityConfig {
            trials: 100_000,
            gammas_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            serving_rule: ServingRule::TaggedAtOrigin,
            radius_models: vec![
                RadiusConfig::TruncatedGaussian { sigma_km: 1.0 },
                RadiusConfig::Uniform { r_hat_km: 2.0 },
            ],
            laplace_nodes_per_decade: 6,
            sweep: SweepConfig::default(),
        }
    }
}

/// Delay grid and the table used to sample delays for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StalenessConfig {
    pub trials: usize,
    pub serving_rule: ServingRule,
    /// CDF grid: delays whose transmission part corresponds to SIR
    /// thresholds from `grid_gamma_db_max` down to `grid_gamma_db_min`.
    pub n_tau: usize,
    pub grid_gamma_db_max: f64,
    pub grid_gamma_db_min: f64,
    /// Sampler table, same construction.
    pub table_points: usize,
    pub table_gamma_db_max: f64,
    pub table_gamma_db_min: f64,
}

impl Default for StalenessConfig {
    fn default() -> Self {
        StalenessConfig {
            trials: 100_000,
            serving_rule: ServingRule::TaggedAtOrigin,
            n_tau: 50,
            grid_gamma_db_max: 40.0,
            grid_gamma_db_min: -30.0,
            table_points: 64,
            table_gamma_db_max: 60.0,
            table_gamma_db_min: -50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RunnerChoice {
    #[default]
    Afl,
    AflStaleFree,
    Fedavg,
    Scalable,
}

impl RunnerChoice {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "afl" => Some(RunnerChoice::Afl),
            "afl-stale-free" => Some(RunnerChoice::AflStaleFree),
            "fedavg" => Some(RunnerChoice::Fedavg),
            "scalable" => Some(RunnerChoice::Scalable),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RunnerChoice::Afl => "afl",
            RunnerChoice::AflStaleFree => "afl-stale-free",
            RunnerChoice::Fedavg => "fedavg",
            RunnerChoice::Scalable => "scalable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StalenessSourceChoice {
    /// Inverse-CDF sampling of the analytical staleness law.
    #[default]
    Analytic,
    /// A fresh Monte Carlo realization per upload.
    MonteCarlo,
    /// Every upload takes `constant_delay_s`.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub runner: RunnerChoice,
    /// Client count is the participant count clamped to this range.
    pub min_clients: usize,
    pub max_clients: usize,
    pub samples_per_client: usize,
    pub test_samples: usize,
    pub heterogeneity: f64,
    pub lr: f64,
    pub local_steps: usize,
    pub cohort_fraction: f64,
    pub staleness_source: StalenessSourceChoice,
    pub constant_delay_s: f64,
    pub stop: StopCriteria,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            runner: RunnerChoice::Afl,
            min_clients: 1,
            max_clients: 10,
            samples_per_client: 20,
            test_samples: 20,
            heterogeneity: 0.0,
            lr: 0.25,
            local_steps: 1,
            cohort_fraction: 0.5,
            staleness_source: StalenessSourceChoice::Analytic,
            constant_delay_s: 1e-3,
            stop: StopCriteria {
                max_rounds: Some(20_000),
                target_loss: Some(1e-3),
                max_sim_time: None,
            },
        }
    }
}

impl TrainConfig {
    pub fn server(&self, runner: RunnerChoice) -> ServerConfig {
        ServerConfig {
            lr: self.lr,
            g1: match runner {
                RunnerChoice::Afl => StalenessWeight::OnePlusExp,
                _ => StalenessWeight::Unit,
            },
            local_steps: self.local_steps,
        }
    }
}

/// Quadratic toy problem for the convergence bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub clients: usize,
    pub dim: usize,
    pub curvature: f64,
    pub spread: f64,
    pub initial_offset: f64,
    pub lr: f64,
    pub rounds: u64,
    pub seeds: u64,
    pub g1: StalenessWeight,
    pub staleness_source: StalenessSourceChoice,
    /// Server deadline: the analytical law is conditioned on `delta <= max_delay_s`.
    pub max_delay_s: Option<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            clients: 10,
            dim: 8,
            curvature: 1.0,
            spread: 1.0,
            initial_offset: 5.0,
            lr: 0.2,
            rounds: 3000,
            seeds: 20,
            g1: StalenessWeight::OnePlusExp,
            staleness_source: StalenessSourceChoice::Analytic,
            max_delay_s: Some(0.01),
        }
    }
}

/// Everything one experiment needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: String,
    pub model: ModelConfig,
    pub quadrature: QuadratureSpec,
    pub connectivity: ConnectivityConfig,
    pub staleness: StalenessConfig,
    pub burgers: BurgersConfig,
    pub fno: FnoConfig,
    pub train: TrainConfig,
    pub bounds: BoundsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            out_dir: "out".into(),
            model: ModelConfig::default(),
            quadrature: QuadratureSpec::default(),
            connectivity: ConnectivityConfig::default(),
            staleness: StalenessConfig::default(),
            burgers: BurgersConfig {
                n_grid: 64,
                ..BurgersConfig::default()
            },
            fno: FnoConfig {
                width: 16,
                k_max: 8,
                grid: 64,
                hidden: 32,
                ..FnoConfig::default()
            },
            train: TrainConfig::default(),
            bounds: BoundsConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// TOML form without the output directory, which does not affect results.
    pub fn canonical_toml(&self) -> String {
        let mut c = self.clone();
        c.out_dir.clear();
        c.to_toml()
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn params(&self) -> ModelParams {
        self.model.to_params()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str, e: uam_core::Error| SimError::Config(format!("{what}: {e}"));
        self.params().validate().map_err(|e| bad("model", e))?;
        for r in &self.connectivity.radius_models {
            r.to_model().validate().map_err(|e| bad("connectivity.radius_models", e))?;
        }
        self.quadrature.validate().map_err(|e| bad("quadrature", e))?;
        self.burgers.validate().map_err(|e| bad("burgers", e))?;
        self.fno.validate().map_err(|e| bad("fno", e))?;
        if self.fno.grid != self.burgers.n_grid {
            return Err(SimError::Config(format!(
                "fno.grid ({}) must equal burgers.n_grid ({})",
                self.fno.grid, self.burgers.n_grid
            )));
        }
        if self.connectivity.trials == 0 || self.staleness.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        if self.staleness.n_tau < 2 || self.staleness.table_points < 2 {
            return Err(SimError::Config("staleness grids need at least two points".into()));
        }
        let t = &self.train;
        if t.min_clients == 0 || t.max_clients < t.min_clients {
            return Err(SimError::Config("train: need 1 <= min_clients <= max_clients".into()));
        }
        if t.samples_per_client == 0 || t.test_samples == 0 {
            return Err(SimError::Config("train: samples_per_client and test_samples must be positive".into()));
        }
        if !(t.cohort_fraction > 0.0 && t.cohort_fraction <= 1.0) {
            return Err(SimError::Config("train.cohort_fraction must lie in (0, 1]".into()));
        }
        if t.stop.max_rounds.is_none() && t.stop.max_sim_time.is_none() {
            return Err(SimError::Config("train.stop: set max_rounds or max_sim_time".into()));
        }
        if !(0.0..1.0).contains(&t.heterogeneity) {
            return Err(SimError::Config("train.heterogeneity must lie in [0, 1)".into()));
        }
        let b = &self.bounds;
        if b.clients == 0 || b.dim == 0 || b.seeds == 0 || !(b.curvature > 0.0) || !(b.lr > 0.0) {
            return Err(SimError::Config("bounds: clients, dim, seeds, curvature and lr must be positive".into()));
        }
        if b.max_delay_s.is_some_and(|d| !(d > 0.0)) {
            return Err(SimError::Config("bounds.max_delay_s must be positive".into()));
        }
        Ok(())
    }
}
