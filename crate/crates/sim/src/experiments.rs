//! Experiment drivers. Each `cmd_*` function writes its artifacts into the
//! output directory and returns their paths; the functions they are built
//! from return the numbers directly.
//!
//! Monte Carlo trial `i` always uses substream `(seed, domain, i)`, so
//! results do not depend on the number of worker threads.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use uam_core::afl::{
    check_convergence_condition, corollary2_step_bound, corollary3_bound, estimate_g1_moments, run_afl, run_fedavg,
    run_scalable, sample_g1_moments, theorem3_step_bound, AflTrace, ConditionCheck, ConvergenceInputs,
    FederatedProblem, FnoFederation, QuadraticToy, ServerConfig, StalenessSource, StalenessTable, StalenessWeight,
    StopCriteria, VarianceGrowth,
};
use uam_core::analysis::{
    connectivity_probability, expected_chord_length, expected_participants, expected_participants_real,
    CpDistribution, LaplaceCurve, LaplaceEvaluator,
};
use uam_core::burgers::{
    client_decay, generate_sample, sample_index, BurgersSolver, ClientDataset, TurbulenceSample,
};
use uam_core::channel::ServingRule;
use uam_core::fno::{Fno, FnoParams};
use uam_core::mcsim::{participant_trial, sir_trial, summarize_connectivity, summarize_mean, McResult, StalenessSample};
use uam_core::pointproc::sample_realization;
use uam_core::rng::{substream, Domain};
use uam_core::units::db_to_linear;
use uam_core::{ModelParams, NetworkRealization};

use crate::config::{ExperimentConfig, ModelConfig, RunnerChoice, StalenessSourceChoice};
use crate::io::{dataset_table, fmt_f64, realization_table, trace_table, write_checkpoint, CsvTable};
use crate::{Result, SimError};

/// SIR of the typical link in trials `0..trials`; `None` for discarded trials.
pub fn mc_sirs(params: &ModelParams, rule: ServingRule, trials: usize, seed: u64) -> Result<Vec<Option<f64>>> {
    let out: uam_core::Result<Vec<_>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| sir_trial(params, rule, seed, i))
        .collect();
    Ok(out?)
}

/// Mean number of aircraft associated with the typical GBS.
pub fn mc_participants(params: &ModelParams, trials: usize, seed: u64) -> Result<McResult> {
    let counts: uam_core::Result<Vec<_>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| participant_trial(params, seed, i))
        .collect();
    let counts = counts?;
    let discarded = counts.iter().filter(|c| c.is_none()).count();
    let values: Vec<f64> = counts.iter().flatten().map(|&c| c as f64).collect();
    Ok(summarize_mean(&values, discarded)?)
}

/// Participant count `K` from the expected corridor length, floored and raw.
pub fn theorem2_clients(cfg: &ExperimentConfig, params: &ModelParams) -> Result<(u64, f64)> {
    let chord = expected_chord_length(params, &cfg.quadrature, CpDistribution::default())?;
    Ok((expected_participants(params, chord)?, expected_participants_real(params, chord)?))
}

fn evaluator(cfg: &ExperimentConfig, params: &ModelParams) -> Result<LaplaceEvaluator> {
    Ok(LaplaceEvaluator::new(params, cfg.quadrature)?)
}

/// Analytical connectivity at each threshold. Three or more thresholds share
/// one tabulated Laplace transform.
pub fn analytic_connectivity(cfg: &ExperimentConfig, params: &ModelParams, gammas_db: &[f64]) -> Result<Vec<f64>> {
    let ev = evaluator(cfg, params)?;
    let lin: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();
    if lin.len() < 3 {
        return lin.iter().map(|&g| Ok(connectivity_probability(g, &ev)?)).collect();
    }
    let lo = lin.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lin.iter().copied().fold(0.0, f64::max);
    let curve = LaplaceCurve::for_thresholds(&ev, lo, hi, cfg.connectivity.laplace_nodes_per_decade)?;
    lin.iter().map(|&g| Ok(curve.connectivity(g)?)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityPoint {
    pub gamma_db: f64,
    pub analytic: f64,
    pub mc: McResult,
}

/// Analytical and Monte Carlo connectivity over `cfg.connectivity.gammas_db`.
pub fn connectivity_curve(cfg: &ExperimentConfig, params: &ModelParams) -> Result<Vec<ConnectivityPoint>> {
    let c = &cfg.connectivity;
    let analytic = analytic_connectivity(cfg, params, &c.gammas_db)?;
    let sirs = mc_sirs(params, c.serving_rule, c.trials, cfg.seed)?;
    c.gammas_db
        .iter()
        .zip(analytic)
        .map(|(&g, a)| {
            Ok(ConnectivityPoint {
                gamma_db: g,
                analytic: a,
                mc: summarize_connectivity(&sirs, db_to_linear(g))?,
            })
        })
        .collect()
}

pub const SWEEP_PARAMETERS: [&str; 4] = ["lambda_l", "lambda_c_per_km2", "lambda_b_per_km2", "lambda_t_per_km"];

fn sweep_values(cfg: &ExperimentConfig, name: &str) -> (Vec<f64>, f64) {
    let s = &cfg.connectivity.sweep;
    let m = &cfg.model;
    let (list, base) = match name {
        "lambda_l" => (&s.lambda_l, m.lambda_l),
        "lambda_c_per_km2" => (&s.lambda_c_per_km2, m.lambda_c_per_km2),
        "lambda_b_per_km2" => (&s.lambda_b_per_km2, m.lambda_b_per_km2),
        "lambda_t_per_km" => (&s.lambda_t_per_km, m.lambda_t_per_km),
        _ => unreachable!("unknown sweep parameter {name}"),
    };
    (list.clone(), base)
}

fn with_parameter(model: &ModelConfig, name: &str, value: f64) -> ModelConfig {
    let mut m = model.clone();
    match name {
        "lambda_l" => m.lambda_l = value,
        "lambda_c_per_km2" => m.lambda_c_per_km2 = value,
        "lambda_b_per_km2" => m.lambda_b_per_km2 = value,
        "lambda_t_per_km" => m.lambda_t_per_km = value,
        _ => unreachable!("unknown sweep parameter {name}"),
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub analytic: f64,
    pub mc: McResult,
}

/// Connectivity at the sweep threshold for each listed value of `name`. An
/// empty list evaluates the base configuration once.
pub fn connectivity_sweep(cfg: &ExperimentConfig, name: &str) -> Result<Vec<SweepPoint>> {
    let (mut values, base) = sweep_values(cfg, name);
    if values.is_empty() {
        values.push(base);
    }
    let gamma_db = cfg.connectivity.sweep.gamma_db;
    values
        .iter()
        .map(|&v| {
            let params = with_parameter(&cfg.model, name, v).to_params();
            params.validate().map_err(|e| SimError::Config(format!("sweep {name} = {v}: {e}")))?;
            let analytic = analytic_connectivity(cfg, &params, &[gamma_db])?[0];
            let sirs = mc_sirs(&params, cfg.connectivity.serving_rule, cfg.connectivity.trials, cfg.seed)?;
            Ok(SweepPoint {
                value: v,
                analytic,
                mc: summarize_connectivity(&sirs, db_to_linear(gamma_db))?,
            })
        })
        .collect()
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    Ok(dir)
}

fn emit(table: &CsvTable, dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    table.write(&path)?;
    written.push(path);
    Ok(())
}

const CONNECTIVITY_COLUMNS: [&str; 4] = ["gamma_db", "p_conn_analytical", "p_conn_mc", "mc_stderr"];

/// One connectivity curve per radius model plus one file per sweep parameter.
pub fn cmd_connectivity(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare_out(cfg)?;
    let mut written = Vec::new();
    for r in &cfg.connectivity.radius_models {
        let params = cfg.model.with_radius(*r).to_params();
        let curve = connectivity_curve(cfg, &params)?;
        let mut t = CsvTable::new(cfg, "connectivity", &CONNECTIVITY_COLUMNS);
        t.meta("radius_model", params.radius_model.name())
            .meta("serving_rule", format!("{:?}", cfg.connectivity.serving_rule))
            .meta("trials", cfg.connectivity.trials)
            .meta("discarded", curve.first().map_or(0, |p| p.mc.discarded));
        for p in &curve {
            t.push_f64(&[p.gamma_db, p.analytic, p.mc.estimate, p.mc.stderr]);
        }
        emit(&t, &dir, &format!("connectivity_{}.csv", params.radius_model.name()), &mut written)?;
    }
    for name in SWEEP_PARAMETERS {
        let points = connectivity_sweep(cfg, name)?;
        let mut t = CsvTable::new(cfg, "connectivity_sweep", &[name, "p_conn_analytical", "p_conn_mc", "mc_stderr"]);
        t.meta("gamma_db", fmt_f64(cfg.connectivity.sweep.gamma_db))
            .meta("radius_model", cfg.params().radius_model.name())
            .meta("trials", cfg.connectivity.trials);
        for p in &points {
            t.push_f64(&[p.value, p.analytic, p.mc.estimate, p.mc.stderr]);
        }
        emit(&t, &dir, &format!("sweep_{name}.csv"), &mut written)?;
    }
    Ok(written)
}

/// `n` delays whose transmission part corresponds to SIR thresholds spaced
/// evenly in dB from `db_max` down to `db_min`. Every point lies above the
/// compute delay, where interference-free links put a jump in the CDF.
pub fn tau_grid(params: &ModelParams, n: usize, db_max: f64, db_min: f64) -> Vec<f64> {
    let t_comp = params.t_comp();
    (0..n)
        .map(|i| {
            let db = if n == 1 {
                db_max
            } else {
                db_max + (db_min - db_max) * i as f64 / (n - 1) as f64
            };
            t_comp + params.t_tran(db_to_linear(db))
        })
        .collect()
}

fn staleness_curve(cfg: &ExperimentConfig, params: &ModelParams, db_max: f64, db_min: f64) -> Result<LaplaceCurve> {
    let ev = evaluator(cfg, params)?;
    let (lo, hi) = (db_to_linear(db_min.min(db_max)), db_to_linear(db_max.max(db_min)));
    Ok(LaplaceCurve::for_thresholds(&ev, lo, hi, cfg.connectivity.laplace_nodes_per_decade)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StalenessReport {
    pub t_comp: f64,
    pub k_theorem2: u64,
    pub k_theorem2_real: f64,
    pub participants: McResult,
    pub tau: Vec<f64>,
    pub analytic: Vec<f64>,
    pub empirical: Vec<f64>,
    pub samples: Vec<StalenessSample>,
}

/// Analytical and empirical staleness CDF on [`tau_grid`].
pub fn staleness_report(cfg: &ExperimentConfig, params: &ModelParams) -> Result<StalenessReport> {
    let s = &cfg.staleness;
    let tau = tau_grid(params, s.n_tau, s.grid_gamma_db_max, s.grid_gamma_db_min);
    let curve = staleness_curve(cfg, params, s.grid_gamma_db_max, s.grid_gamma_db_min)?;
    let analytic = tau.iter().map(|&t| Ok(curve.staleness_cdf(t)?)).collect::<Result<Vec<_>>>()?;
    let sirs = mc_sirs(params, s.serving_rule, s.trials, cfg.seed)?;
    let mut samples: Vec<StalenessSample> = sirs.iter().flatten().map(|&x| StalenessSample::from_sir(params, x)).collect();
    if samples.is_empty() {
        return Err(SimError::Numerical(uam_core::Error::AllDiscarded { trials: s.trials }));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|x| x.delta).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let empirical = tau
        .iter()
        .map(|&t| sorted.partition_point(|&d| d <= t) as f64 / n)
        .collect();
    let (k, k_real) = theorem2_clients(cfg, params)?;
    let participants = mc_participants(params, s.trials.min(10_000), cfg.seed)?;
    samples.shrink_to_fit();
    Ok(StalenessReport {
        t_comp: params.t_comp(),
        k_theorem2: k,
        k_theorem2_real: k_real,
        participants,
        tau,
        analytic,
        empirical,
        samples,
    })
}

/// CDF file and raw delay samples.
pub fn cmd_staleness(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare_out(cfg)?;
    let params = cfg.params();
    let r = staleness_report(cfg, &params)?;
    let mut written = Vec::new();
    let mut t = CsvTable::new(cfg, "staleness_cdf", &["tau_s", "cdf_analytical", "cdf_empirical"]);
    t.meta("t_comp_s", fmt_f64(r.t_comp))
        .meta("k_theorem2", r.k_theorem2)
        .meta("k_theorem2_real", fmt_f64(r.k_theorem2_real))
        .meta("participants_mc", fmt_f64(r.participants.estimate))
        .meta("participants_mc_stderr", fmt_f64(r.participants.stderr))
        .meta("samples", r.samples.len());
    for i in 0..r.tau.len() {
        t.push_f64(&[r.tau[i], r.analytic[i], r.empirical[i]]);
    }
    emit(&t, &dir, "staleness_cdf.csv", &mut written)?;
    let mut raw = CsvTable::new(cfg, "staleness_samples", &["t_comp_s", "t_tran_s", "delta_s"]);
    for x in &r.samples {
        raw.push_f64(&[x.t_comp, x.t_tran, x.delta]);
    }
    emit(&raw, &dir, "staleness_samples.csv", &mut written)?;
    Ok(written)
}

/// Inverse-CDF sampler of the analytical staleness law. Interpolation noise
/// in the tabulated CDF is removed with a running maximum.
pub fn staleness_table(cfg: &ExperimentConfig, params: &ModelParams) -> Result<StalenessTable> {
    let s = &cfg.staleness;
    let curve = staleness_curve(cfg, params, s.table_gamma_db_max, s.table_gamma_db_min)?;
    let tau = tau_grid(params, s.table_points, s.table_gamma_db_max, s.table_gamma_db_min);
    let mut points = Vec::with_capacity(s.table_points);
    let mut running = 0.0f64;
    for &t in &tau {
        running = running.max(curve.staleness_cdf(t)?);
        points.push((t, running));
    }
    Ok(StalenessTable::new(params.t_comp(), &points)?)
}

/// `table` conditioned on `delta <= tau_max`.
pub fn truncate_table(table: &StalenessTable, tau_max: f64) -> Result<StalenessTable> {
    let t_comp = table.t_comp();
    if !(tau_max > t_comp) {
        return Err(SimError::Config(format!("deadline {tau_max} s is not above the compute delay {t_comp} s")));
    }
    let pts: Vec<(f64, f64)> = table.points().collect();
    let f_max = table_cdf(&pts, t_comp, tau_max);
    let mut out: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 < tau_max).map(|&(t, f)| (t, f / f_max)).collect();
    out.push((tau_max, 1.0));
    Ok(StalenessTable::new(t_comp, &out)?)
}

/// CDF of a table at `tau`, interpolated the way the sampler does.
fn table_cdf(pts: &[(f64, f64)], t_comp: f64, tau: f64) -> f64 {
    let ln = |t: f64| (t - t_comp).ln();
    match pts.iter().position(|p| p.0 >= tau) {
        // up to the first point only the atom at t_comp carries mass
        Some(0) => pts[0].1,
        Some(i) => {
            let (t0, f0) = pts[i - 1];
            let (t1, f1) = pts[i];
            f0 + (f1 - f0) * (ln(tau) - ln(t0)) / (ln(t1) - ln(t0))
        }
        None => {
            let (tl, fl) = pts[pts.len() - 1];
            1.0 - (1.0 - fl) * (tl - t_comp) / (tau - t_comp)
        }
    }
}

pub fn staleness_source(
    cfg: &ExperimentConfig,
    params: &ModelParams,
    choice: StalenessSourceChoice,
) -> Result<StalenessSource> {
    Ok(match choice {
        StalenessSourceChoice::Analytic => StalenessSource::Table(staleness_table(cfg, params)?),
        StalenessSourceChoice::MonteCarlo => StalenessSource::MonteCarlo {
            params: params.clone(),
            rule: cfg.staleness.serving_rule,
        },
        StalenessSourceChoice::Constant => StalenessSource::Constant(cfg.train.constant_delay_s),
    })
}

/// Per-client training sets and the shared test set. Client `k` draws its
/// initial fields with its own spectral decay; the test set uses the base decay.
pub fn build_datasets(cfg: &ExperimentConfig, clients: usize) -> Result<(Vec<ClientDataset>, Vec<TurbulenceSample>)> {
    let t = &cfg.train;
    let solver = BurgersSolver::new(&cfg.burgers)?;
    let base = cfg.burgers.init_spectrum_decay;
    let per = t.samples_per_client;
    let flat: uam_core::Result<Vec<TurbulenceSample>> = (0..clients * per)
        .into_par_iter()
        .map(|i| {
            let (k, j) = (i / per, i % per);
            let decay = client_decay(base, t.heterogeneity, k, clients);
            generate_sample(&solver, decay, cfg.seed, Domain::Dataset, sample_index(k, j))
        })
        .collect();
    let mut flat = flat?.into_iter();
    let datasets = (0..clients)
        .map(|k| ClientDataset {
            client: k,
            decay: client_decay(base, t.heterogeneity, k, clients),
            samples: flat.by_ref().take(per).collect(),
        })
        .collect();
    let test: uam_core::Result<Vec<TurbulenceSample>> = (0..t.test_samples as u64)
        .into_par_iter()
        .map(|j| generate_sample(&solver, base, cfg.seed, Domain::Burgers, j))
        .collect();
    Ok((datasets, test?))
}

/// Everything a training run needs apart from the runner.
pub struct TrainSetup {
    pub k_theorem2: u64,
    pub datasets: Vec<ClientDataset>,
    pub problem: FnoFederation,
    pub w0: Vec<f64>,
}

impl TrainSetup {
    pub fn clients(&self) -> usize {
        self.datasets.len()
    }
}

/// Analytical client count clamped to `[min_clients, max_clients]`,
/// Burgers datasets and the seeded initial network.
pub fn train_setup(cfg: &ExperimentConfig) -> Result<TrainSetup> {
    let (k, _) = theorem2_clients(cfg, &cfg.params())?;
    let clients = (k as usize).clamp(cfg.train.min_clients, cfg.train.max_clients);
    let (datasets, test) = build_datasets(cfg, clients)?;
    let problem = FnoFederation::new(Fno::new(&cfg.fno)?, &datasets, test)?;
    let w0 = FnoParams::init_seeded(&cfg.fno, cfg.seed)?.data;
    Ok(TrainSetup {
        k_theorem2: k,
        datasets,
        problem,
        w0,
    })
}

pub fn train(cfg: &ExperimentConfig, setup: &TrainSetup, runner: RunnerChoice, source: &StalenessSource) -> Result<AflTrace> {
    let t = &cfg.train;
    let server = t.server(runner);
    let p = &setup.problem;
    let w0 = &setup.w0;
    Ok(match runner {
        RunnerChoice::Afl | RunnerChoice::AflStaleFree => run_afl(p, w0, &server, source, &t.stop, cfg.seed)?,
        RunnerChoice::Scalable => run_scalable(p, w0, &server, t.cohort_fraction, source, &t.stop, cfg.seed)?,
        RunnerChoice::Fedavg => run_fedavg(p, w0, &server, source, &t.stop, cfg.seed)?,
    })
}

/// Trains with `cfg.train.runner` and writes its trace and final parameters.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare_out(cfg)?;
    let params = cfg.params();
    let setup = train_setup(cfg)?;
    let source = staleness_source(cfg, &params, cfg.train.staleness_source)?;
    let runner = cfg.train.runner;
    let trace = train(cfg, &setup, runner, &source)?;
    let mut written = Vec::new();
    let mut t = trace_table(cfg, runner.name(), &trace);
    t.meta("clients", setup.clients())
        .meta("k_theorem2", setup.k_theorem2)
        .meta("lr", fmt_f64(cfg.train.lr))
        .meta("parameters", setup.w0.len());
    emit(&t, &dir, &format!("trace_{}.csv", runner.name()), &mut written)?;
    let header = format!(
        "runner = \"{}\"\nclients = {}\nrounds = {}\nfinal_test_loss = {}\nconfig_hash = \"{}\"\n\n[config]\n{}",
        runner.name(),
        setup.clients(),
        trace.rounds(),
        fmt_f64(trace.final_loss()),
        cfg.hash(),
        cfg.canonical_toml()
    );
    let path = dir.join(format!("checkpoint_{}.bin", runner.name()));
    write_checkpoint(&path, &header, &trace.final_params)?;
    written.push(path);
    Ok(written)
}

/// Per-round comparison of the measured optimality gap with the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub inputs: ConvergenceInputs,
    pub condition: ConditionCheck,
    pub f0_gap: f64,
    /// Gap averaged over seeds at rounds `0..=rounds`.
    pub mean_gap: Vec<f64>,
    /// Closed-form bound on the gap after each round; `NaN` at round 0.
    pub bound: Vec<f64>,
    /// One-step bound from the measured gap of the previous round.
    pub step_bound: Vec<f64>,
    pub asymptotic_gap: f64,
}

fn condition_grid(t_comp: f64) -> Vec<f64> {
    let mut g = vec![0.0, t_comp];
    g.extend((0..=140).map(|i| 10f64.powf(-7.0 + 0.1 * i as f64)));
    g
}

/// The quadratic toy problem of `cfg.bounds` and its optimum offset start.
pub fn bounds_problem(cfg: &ExperimentConfig) -> Result<(QuadraticToy, Vec<f64>)> {
    let b = &cfg.bounds;
    let toy = QuadraticToy::random(b.clients, b.dim, b.curvature, b.spread, cfg.seed)?;
    let step = b.initial_offset / (b.dim as f64).sqrt();
    let w0 = toy.optimum().iter().map(|w| w + step).collect();
    Ok((toy, w0))
}

/// Runs AFL on the toy over `bounds.seeds` staleness seeds. Refuses when
/// `L eta (g1 + g2) <= K` fails somewhere.
pub fn bounds_report(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    let b = &cfg.bounds;
    let params = cfg.params();
    let (toy, w0) = bounds_problem(cfg)?;
    let mut source = staleness_source(cfg, &params, b.staleness_source)?;
    if let (StalenessSource::Table(table), Some(d)) = (&source, b.max_delay_s) {
        source = StalenessSource::Table(truncate_table(table, d)?);
    }
    let (e_g1, v_g1) = match &source {
        StalenessSource::Table(table) => estimate_g1_moments(table, b.g1)?,
        StalenessSource::Constant(d) => (b.g1.eval(*d), 0.0),
        _ => {
            let draws = (0..2000u64)
                .map(|j| source.draw(cfg.seed, 0, j))
                .collect::<uam_core::Result<Vec<_>>>()?;
            sample_g1_moments(&draws, b.g1)?
        }
    };
    let inputs = ConvergenceInputs {
        lipschitz: b.curvature,
        strong_convexity: b.curvature,
        phi_sq: toy.phi_sq(),
        clients: b.clients as f64,
        eta: b.lr,
        e_g1,
        v_g1,
    };
    inputs.validate()?;
    let condition = check_convergence_condition(&inputs, b.g1, VarianceGrowth::OneMinusExp, &condition_grid(params.t_comp()));
    if !condition.satisfied {
        return Err(SimError::Config(format!(
            "convergence condition L*eta*(g1 + g2) <= K violated: margin {} at delta = {} s",
            fmt_f64(condition.margin),
            fmt_f64(condition.worst_delta)
        )));
    }
    let server = ServerConfig {
        lr: b.lr,
        g1: b.g1,
        local_steps: 1,
    };
    let stop = StopCriteria::rounds(b.rounds);
    let traces: Result<Vec<AflTrace>> = (0..b.seeds)
        .into_par_iter()
        .map(|s| Ok(run_afl(&toy, &w0, &server, &source, &stop, cfg.seed.wrapping_add(s))?))
        .collect();
    let traces = traces?;
    let n = b.rounds as usize + 1;
    let mut mean_gap = vec![0.0; n];
    for tr in &traces {
        for r in &tr.records {
            mean_gap[r.round as usize] += r.test_loss / traces.len() as f64;
        }
    }
    let f0_gap = toy.test_loss(&w0)?;
    let unit = b.g1 == StalenessWeight::Unit;
    let mut bound = vec![f64::NAN; n];
    let mut step_bound = vec![f64::NAN; n];
    for i in 1..n {
        bound[i] = corollary3_bound(&inputs, f0_gap, i as u64 - 1);
        // for these quadratics |grad f|^2 = 2 c (f - f*)
        let prev = mean_gap[i - 1];
        let grad_sq = 2.0 * b.curvature * prev;
        step_bound[i] = if unit {
            corollary2_step_bound(&inputs, prev, grad_sq)
        } else {
            theorem3_step_bound(&inputs, prev, grad_sq)
        };
    }
    Ok(BoundsReport {
        asymptotic_gap: inputs.asymptotic_gap(),
        inputs,
        condition,
        f0_gap,
        mean_gap,
        bound,
        step_bound,
    })
}

pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare_out(cfg)?;
    let r = bounds_report(cfg)?;
    let unit = cfg.bounds.g1 == StalenessWeight::Unit;
    let step_name = if unit { "corollary2_step_bound" } else { "theorem3_step_bound" };
    let mut t = CsvTable::new(cfg, "bounds", &["round", "mean_gap", "corollary3_bound", step_name]);
    let i = &r.inputs;
    t.meta("lipschitz", fmt_f64(i.lipschitz))
        .meta("strong_convexity", fmt_f64(i.strong_convexity))
        .meta("phi_sq", fmt_f64(i.phi_sq))
        .meta("clients", fmt_f64(i.clients))
        .meta("eta", fmt_f64(i.eta))
        .meta("e_g1", fmt_f64(i.e_g1))
        .meta("var_g1", fmt_f64(i.v_g1))
        .meta("condition_margin", fmt_f64(r.condition.margin))
        .meta("asymptotic_gap", fmt_f64(r.asymptotic_gap))
        .meta("seeds", cfg.bounds.seeds);
    for k in 0..r.mean_gap.len() {
        t.push(vec![
            k.to_string(),
            fmt_f64(r.mean_gap[k]),
            if k == 0 { String::new() } else { fmt_f64(r.bound[k]) },
            if k == 0 { String::new() } else { fmt_f64(r.step_bound[k]) },
        ]);
    }
    let mut written = Vec::new();
    emit(&t, &dir, "bounds.csv", &mut written)?;
    Ok(written)
}

/// One network snapshot.
pub fn realization(cfg: &ExperimentConfig) -> Result<NetworkRealization> {
    Ok(sample_realization(&cfg.params(), &mut substream(cfg.seed, Domain::Realization, 0))?)
}

pub fn cmd_realization(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare_out(cfg)?;
    let real = realization(cfg)?;
    let mut written = Vec::new();
    emit(&realization_table(cfg, &real), &dir, "realization.csv", &mut written)?;
    Ok(written)
}

/// Writes the training datasets `cmd_train` would use.
pub fn cmd_dataset(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = prepare_out(cfg)?;
    let (k, _) = theorem2_clients(cfg, &cfg.params())?;
    let clients = (k as usize).clamp(cfg.train.min_clients, cfg.train.max_clients);
    let (datasets, test) = build_datasets(cfg, clients)?;
    let mut written = Vec::new();
    emit(&dataset_table(cfg, &datasets), &dir, "dataset_train.csv", &mut written)?;
    let test_set = [ClientDataset {
        client: 0,
        decay: cfg.burgers.init_spectrum_decay,
        samples: test,
    }];
    emit(&dataset_table(cfg, &test_set), &dir, "dataset_test.csv", &mut written)?;
    Ok(written)
}
