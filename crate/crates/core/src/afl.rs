//! Event-driven asynchronous federated learning with staleness-weighted
//! aggregation, the synchronous baselines and the convergence bounds.
//!
//! The server update on the arrival of client `k` at round `i` is
//!
//! ```text
//! w_{i+1} = w_i - eta g1(delta) (s_k / s_K) grad f_k(w_snapshot)
//! ```
//!
//! where `delta` is the time since the client received its snapshot. Time is
//! virtual: a client that receives a model returns its gradient `delta`
//! seconds later, with `delta` drawn from a [`StalenessSource`]. The downlink
//! is instantaneous.
//!
//! Staleness draw `j` of client `k` is a pure function of `(seed, k, j)`, so
//! runs with different weights or runners see the same delays.

use crate::burgers::{ClientDataset, TurbulenceSample};
use crate::channel::{sir_of_typical_link, ServingRule};
use crate::error::{Error, Result};
use crate::fno::{Fno, FnoParams};
use crate::params::ModelParams;
use crate::pointproc::sample_realization;
use crate::rng::{substream, Domain};
use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;
use rand::Rng;

/// Staleness weight `g1`, decreasing in the delay.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StalenessWeight {
    /// `1 + exp(-delta)` with `delta` in seconds.
    #[default]
    OnePlusExp,
    /// `g1 = 1`: staleness-free aggregation.
    Unit,
}

impl StalenessWeight {
    pub fn eval(self, delta: f64) -> f64 {
        match self {
            StalenessWeight::OnePlusExp => 1.0 + (-delta).exp(),
            StalenessWeight::Unit => 1.0,
        }
    }

    /// Value as `delta -> infinity`.
    pub fn limit(self) -> f64 {
        1.0
    }
}

/// Staleness variance growth `g2`, increasing from 0 to 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VarianceGrowth {
    /// `1 - exp(-delta)`.
    #[default]
    OneMinusExp,
}

impl VarianceGrowth {
    pub fn eval(self, delta: f64) -> f64 {
        match self {
            VarianceGrowth::OneMinusExp => -(-delta).exp_m1(),
        }
    }

    pub fn limit(self) -> f64 {
        1.0
    }
}

/// A staleness CDF tabulated on increasing delays, with an atom at the
/// compute delay and a `1/tau` tail past the last point.
#[derive(Debug, Clone, PartialEq)]
pub struct StalenessTable {
    t_comp: f64,
    taus: Vec<f64>,
    cdf: Vec<f64>,
}

impl StalenessTable {
    /// `points` are `(tau, F(tau))` with `tau > t_comp` strictly increasing.
    /// Mass below the first point is placed at `t_comp`.
    pub fn new(t_comp: f64, points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Empty("staleness table needs two points"));
        }
        let mut prev = (t_comp, 0.0);
        for &(tau, f) in points {
            if !(tau > prev.0) || !(0.0..=1.0).contains(&f) {
                return Err(Error::param("staleness table", "points must have increasing tau > t_comp and F in [0, 1]"));
            }
            if f < prev.1 {
                return Err(Error::NonMonotoneCdf {
                    tau,
                    prev: prev.1,
                    next: f,
                });
            }
            prev = (tau, f);
        }
        Ok(StalenessTable {
            t_comp,
            taus: points.iter().map(|p| p.0).collect(),
            cdf: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn t_comp(&self) -> f64 {
        self.t_comp
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.taus.iter().copied().zip(self.cdf.iter().copied())
    }

    /// Mass of the atom at `t_comp`.
    pub fn atom(&self) -> f64 {
        self.cdf[0]
    }

    /// Inverse CDF: linear in `ln(tau - t_comp)` between points,
    /// `1 - F ~ 1/(tau - t_comp)` in the tail.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.taus.len();
        if u <= self.cdf[0] {
            return self.t_comp;
        }
        let last = self.cdf[n - 1];
        if u > last {
            let slack = self.taus[n - 1] - self.t_comp;
            if last >= 1.0 {
                return self.taus[n - 1];
            }
            return self.t_comp + slack * (1.0 - last) / (1.0 - u).max(f64::MIN_POSITIVE);
        }
        // first index with cdf >= u
        let i = self.cdf.partition_point(|&f| f < u).max(1);
        let (f0, f1) = (self.cdf[i - 1], self.cdf[i]);
        let (s0, s1) = (self.taus[i - 1] - self.t_comp, self.taus[i] - self.t_comp);
        if f1 <= f0 {
            return self.taus[i];
        }
        self.t_comp + s0 * (s1 / s0).powf((u - f0) / (f1 - f0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Where the delay of each uplink comes from.
#[derive(Debug, Clone)]
pub enum StalenessSource {
    Constant(f64),
    /// Fixed delay per client.
    PerClient(Vec<f64>),
    /// Inverse-CDF sampling of a tabulated staleness law.
    Table(StalenessTable),
    /// A fresh network realization per uplink, delay from its SIR.
    MonteCarlo { params: ModelParams, rule: ServingRule },
}

impl StalenessSource {
    /// Delay `draw` of `client` under `seed`.
    pub fn draw(&self, seed: u64, client: usize, draw: u64) -> Result<f64> {
        let index = ((client as u64) << 32) | (draw & 0xFFFF_FFFF);
        match self {
            StalenessSource::Constant(d) => Ok(*d),
            StalenessSource::PerClient(ds) => ds.get(client).copied().ok_or(Error::Shape {
                expected: client + 1,
                got: ds.len(),
            }),
            StalenessSource::Table(t) => Ok(t.sample(&mut substream(seed, Domain::Afl, index))),
            StalenessSource::MonteCarlo { params, rule } => {
                let mut rng = substream(seed, Domain::Staleness, index);
                for _ in 0..1000 {
                    let real = sample_realization(params, &mut rng)?;
                    match sir_of_typical_link(&real, params, *rule, &mut rng) {
                        Ok(link) => return Ok(params.t_comp() + params.t_tran(link.sir)),
                        Err(Error::NoServingLink) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::AllDiscarded { trials: 1000 })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |d: f64| d.is_finite() && d > 0.0;
        match self {
            StalenessSource::Constant(d) if !ok(*d) => Err(Error::param("staleness", "delay must be positive and finite")),
            StalenessSource::PerClient(ds) if !ds.iter().all(|&d| ok(d)) => {
                Err(Error::param("staleness", "delays must be positive and finite"))
            }
            _ => Ok(()),
        }
    }
}

/// A federated objective split across clients.
pub trait FederatedProblem {
    /// Parameter count.
    fn dim(&self) -> usize;
    fn num_clients(&self) -> usize;
    /// Sample count `s_k`.
    fn client_size(&self, client: usize) -> usize;
    /// Full-batch gradient of the client's loss.
    fn gradient(&self, client: usize, w: &[f64]) -> Result<Vec<f64>>;
    /// Loss on the held-out set.
    fn test_loss(&self, w: &[f64]) -> Result<f64>;

    fn total_size(&self) -> usize {
        (0..self.num_clients()).map(|k| self.client_size(k)).sum()
    }
}

/// Fourier network trained on per-client Burgers data.
pub struct FnoFederation {
    net: Fno,
    clients: Vec<Vec<TurbulenceSample>>,
    test: Vec<TurbulenceSample>,
}

impl FnoFederation {
    pub fn new(net: Fno, clients: &[ClientDataset], test: Vec<TurbulenceSample>) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::Empty("clients"));
        }
        if clients.iter().any(|c| c.samples.is_empty()) {
            return Err(Error::Empty("client dataset"));
        }
        if test.is_empty() {
            return Err(Error::Empty("test set"));
        }
        Ok(FnoFederation {
            net,
            clients: clients.iter().map(|c| c.samples.clone()).collect(),
            test,
        })
    }

    pub fn net(&self) -> &Fno {
        &self.net
    }

    fn wrap(&self, w: &[f64]) -> Result<FnoParams> {
        FnoParams::from_vec(self.net.config(), w.to_vec())
    }
}

impl FederatedProblem for FnoFederation {
    fn dim(&self) -> usize {
        self.net.layout().len
    }

    fn num_clients(&self) -> usize {
        self.clients.len()
    }

    fn client_size(&self, client: usize) -> usize {
        self.clients[client].len()
    }

    fn gradient(&self, client: usize, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.net.gradient(&self.wrap(w)?, &self.clients[client])?.data)
    }

    fn test_loss(&self, w: &[f64]) -> Result<f64> {
        self.net.loss(&self.wrap(w)?, &self.test)
    }
}

/// Clients with losses `f_k(w) = (c/2) |w - a_k|^2`.
///
/// The global loss `f = sum_k (s_k/s_K) f_k` has minimizer `w* = sum_k
/// (s_k/s_K) a_k`, gradient Lipschitz constant and strong convexity both `c`,
/// and `|grad f - grad f_k|^2 <= c^2 max_k |a_k - w*|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticToy {
    pub curvature: f64,
    pub centers: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
}

impl QuadraticToy {
    pub fn new(curvature: f64, centers: Vec<Vec<f64>>, sizes: Vec<usize>) -> Result<Self> {
        if !(curvature > 0.0) {
            return Err(Error::param("curvature", "must be positive"));
        }
        if centers.is_empty() {
            return Err(Error::Empty("clients"));
        }
        if sizes.len() != centers.len() {
            return Err(Error::Shape {
                expected: centers.len(),
                got: sizes.len(),
            });
        }
        if sizes.contains(&0) {
            return Err(Error::Empty("client dataset"));
        }
        let d = centers[0].len();
        if let Some(c) = centers.iter().find(|c| c.len() != d) {
            return Err(Error::Shape { expected: d, got: c.len() });
        }
        Ok(QuadraticToy {
            curvature,
            centers,
            sizes,
        })
    }

    /// `k` clients of equal size with centers uniform in `[-spread, spread]^dim`.
    pub fn random(k: usize, dim: usize, curvature: f64, spread: f64, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, Domain::Toy, 0);
        let centers = (0..k)
            .map(|_| (0..dim).map(|_| spread * (2.0 * rng.random::<f64>() - 1.0)).collect())
            .collect();
        Self::new(curvature, centers, vec![1; k])
    }

    pub fn optimum(&self) -> Vec<f64> {
        let total = self.sizes.iter().sum::<usize>() as f64;
        let mut w = vec![0.0; self.centers[0].len()];
        for (a, &s) in self.centers.iter().zip(&self.sizes) {
            for (wi, ai) in w.iter_mut().zip(a) {
                *wi += s as f64 / total * ai;
            }
        }
        w
    }

    /// `max_k |grad f(w) - grad f_k(w)|^2`, the same for every `w`.
    pub fn phi_sq(&self) -> f64 {
        let opt = self.optimum();
        self.centers
            .iter()
            .map(|a| self.curvature * self.curvature * a.iter().zip(&opt).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `f(w) - f(w*)`.
    pub fn gap(&self, w: &[f64]) -> f64 {
        let opt = self.optimum();
        0.5 * self.curvature * w.iter().zip(&opt).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
    }
}

impl FederatedProblem for QuadraticToy {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn num_clients(&self) -> usize {
        self.centers.len()
    }

    fn client_size(&self, client: usize) -> usize {
        self.sizes[client]
    }

    fn gradient(&self, client: usize, w: &[f64]) -> Result<Vec<f64>> {
        let a = &self.centers[client];
        if w.len() != a.len() {
            return Err(Error::Shape {
                expected: a.len(),
                got: w.len(),
            });
        }
        Ok(w.iter().zip(a).map(|(x, y)| self.curvature * (x - y)).collect())
    }

    /// The optimality gap, so that a target loss is a target gap.
    fn test_loss(&self, w: &[f64]) -> Result<f64> {
        Ok(self.gap(w))
    }
}

/// Server-side settings shared by every runner.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ServerConfig {
    /// Fixed learning rate `eta`.
    pub lr: f64,
    pub g1: StalenessWeight,
    /// Local SGD steps per update; 1 sends a single full-batch gradient.
    pub local_steps: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            lr: 0.1,
            g1: StalenessWeight::OnePlusExp,
            local_steps: 1,
        }
    }
}

/// When to stop a run; the first criterion met wins.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct StopCriteria {
    pub max_rounds: Option<u64>,
    pub target_loss: Option<f64>,
    pub max_sim_time: Option<f64>,
}

impl StopCriteria {
    pub fn rounds(n: u64) -> Self {
        StopCriteria {
            max_rounds: Some(n),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_rounds.is_none() && self.max_sim_time.is_none() {
            return Err(Error::param("stop", "set max_rounds or max_sim_time"));
        }
        Ok(())
    }

    fn done(&self, round: u64, clock: f64, loss: f64) -> bool {
        self.max_rounds.is_some_and(|r| round >= r)
            || self.target_loss.is_some_and(|t| loss <= t)
            || self.max_sim_time.is_some_and(|t| clock >= t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Runner {
    Afl,
    /// Barrier rounds over the earliest fraction of clients.
    Scalable,
    FedAvg,
}

/// One aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub round: u64,
    pub sim_clock: f64,
    /// Arriving client, or the last member of a synchronous cohort. `None`
    /// on the initial record.
    pub client: Option<usize>,
    /// Staleness of the applied update; the cohort's largest for barrier rounds.
    pub staleness: f64,
    pub g1_weight: f64,
    pub test_loss: f64,
}

/// Time-ordered log of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct AflTrace {
    pub runner: Runner,
    pub records: Vec<TraceRecord>,
    /// Client updates received, aggregated or not.
    pub events: u64,
    pub final_params: Vec<f64>,
}

impl AflTrace {
    pub fn rounds(&self) -> u64 {
        self.records.last().map_or(0, |r| r.round)
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.test_loss)
    }

    /// First record at or below `target`.
    pub fn first_below(&self, target: f64) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.test_loss <= target)
    }

    pub fn rounds_to(&self, target: f64) -> Option<u64> {
        self.first_below(target).map(|r| r.round)
    }

    pub fn time_to(&self, target: f64) -> Option<f64> {
        self.first_below(target).map(|r| r.sim_clock)
    }
}

fn check_problem<P: FederatedProblem + ?Sized>(problem: &P, w0: &[f64], server: &ServerConfig) -> Result<()> {
    if problem.num_clients() == 0 {
        return Err(Error::Empty("clients"));
    }
    if (0..problem.num_clients()).any(|k| problem.client_size(k) == 0) {
        return Err(Error::Empty("client dataset"));
    }
    if w0.len() != problem.dim() {
        return Err(Error::Shape {
            expected: problem.dim(),
            got: w0.len(),
        });
    }
    if !(server.lr > 0.0) || !server.lr.is_finite() {
        return Err(Error::param("lr", "must be positive and finite"));
    }
    if server.local_steps == 0 {
        return Err(Error::param("local_steps", "must be at least 1"));
    }
    Ok(())
}

/// The update a client sends for snapshot `w`: its gradient, or for several
/// local steps the displacement divided by the learning rate.
fn local_update<P: FederatedProblem + ?Sized>(problem: &P, client: usize, w: &[f64], server: &ServerConfig) -> Result<Vec<f64>> {
    if server.local_steps == 1 {
        return problem.gradient(client, w);
    }
    let mut local = w.to_vec();
    for _ in 0..server.local_steps {
        let g = problem.gradient(client, &local)?;
        local.iter_mut().zip(&g).for_each(|(x, gi)| *x -= server.lr * gi);
    }
    Ok(w.iter().zip(&local).map(|(a, b)| (a - b) / server.lr).collect())
}

fn evaluate<P: FederatedProblem + ?Sized>(problem: &P, w: &[f64], round: u64) -> Result<f64> {
    let loss = problem.test_loss(w)?;
    if !loss.is_finite() {
        return Err(Error::Diverged { round, loss });
    }
    Ok(loss)
}

/// Pending upload, ordered by arrival time then client id.
#[derive(Debug, Clone)]
struct Pending {
    arrival: f64,
    client: usize,
    dispatched: f64,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed so that BinaryHeap pops the earliest arrival
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .arrival
            .total_cmp(&self.arrival)
            .then_with(|| other.client.cmp(&self.client))
    }
}

/// Asynchronous training: every arrival is aggregated immediately and the
/// client is sent the new model.
pub fn run_afl<P: FederatedProblem + ?Sized>(
    problem: &P,
    w0: &[f64],
    server: &ServerConfig,
    staleness: &StalenessSource,
    stop: &StopCriteria,
    seed: u64,
) -> Result<AflTrace> {
    check_problem(problem, w0, server)?;
    staleness.validate()?;
    stop.validate()?;
    let k = problem.num_clients();
    let s_total = problem.total_size() as f64;

    let mut w = w0.to_vec();
    let mut snapshots: Vec<Vec<f64>> = vec![w.clone(); k];
    let mut draws = vec![0u64; k];
    let mut queue = BinaryHeap::with_capacity(k);
    for c in 0..k {
        let d = staleness.draw(seed, c, 0)?;
        draws[c] = 1;
        queue.push(Pending {
            arrival: d,
            client: c,
            dispatched: 0.0,
        });
    }

    let loss0 = evaluate(problem, &w, 0)?;
    let mut records = vec![TraceRecord {
        round: 0,
        sim_clock: 0.0,
        client: None,
        staleness: 0.0,
        g1_weight: 0.0,
        test_loss: loss0,
    }];
    let mut round = 0u64;
    let mut clock = 0.0;
    if stop.done(round, clock, loss0) {
        return Ok(AflTrace {
            runner: Runner::Afl,
            records,
            events: 0,
            final_params: w,
        });
    }
    loop {
        let ev = queue.pop().ok_or(Error::Empty("event queue"))?;
        clock = ev.arrival;
        let c = ev.client;
        let delta = ev.arrival - ev.dispatched;
        let g1 = server.g1.eval(delta);
        let weight = g1 * problem.client_size(c) as f64 / s_total;
        let grad = local_update(problem, c, &snapshots[c], server)?;
        let step = server.lr * weight;
        w.iter_mut().zip(&grad).for_each(|(x, g)| *x -= step * g);
        round += 1;
        let loss = evaluate(problem, &w, round)?;
        records.push(TraceRecord {
            round,
            sim_clock: clock,
            client: Some(c),
            staleness: delta,
            g1_weight: g1,
            test_loss: loss,
        });
        if stop.done(round, clock, loss) {
            break;
        }
        snapshots[c].copy_from_slice(&w);
        let d = staleness.draw(seed, c, draws[c])?;
        draws[c] += 1;
        queue.push(Pending {
            arrival: clock + d,
            client: c,
            dispatched: clock,
        });
    }
    Ok(AflTrace {
        runner: Runner::Afl,
        events: round,
        records,
        final_params: w,
    })
}

/// Barrier rounds that aggregate the earliest `ceil(fraction K)` uploads
/// (plus any tied with the last of them) and drop the rest.
pub fn run_scalable<P: FederatedProblem + ?Sized>(
    problem: &P,
    w0: &[f64],
    server: &ServerConfig,
    cohort_fraction: f64,
    staleness: &StalenessSource,
    stop: &StopCriteria,
    seed: u64,
) -> Result<AflTrace> {
    if !(cohort_fraction > 0.0 && cohort_fraction <= 1.0) {
        return Err(Error::param("cohort_fraction", "must lie in (0, 1]"));
    }
    check_problem(problem, w0, server)?;
    staleness.validate()?;
    stop.validate()?;
    let k = problem.num_clients();
    let s_total = problem.total_size() as f64;
    let cohort = ((cohort_fraction * k as f64).ceil() as usize).clamp(1, k);
    let runner = if cohort == k { Runner::FedAvg } else { Runner::Scalable };

    let mut w = w0.to_vec();
    let loss0 = evaluate(problem, &w, 0)?;
    let mut records = vec![TraceRecord {
        round: 0,
        sim_clock: 0.0,
        client: None,
        staleness: 0.0,
        g1_weight: 0.0,
        test_loss: loss0,
    }];
    let mut round = 0u64;
    let mut clock = 0.0;
    let mut events = 0u64;
    if stop.done(round, clock, loss0) {
        return Ok(AflTrace {
            runner,
            records,
            events,
            final_params: w,
        });
    }
    loop {
        let mut arrivals: Vec<(f64, usize)> = (0..k)
            .map(|c| Ok((staleness.draw(seed, c, round)?, c)))
            .collect::<Result<_>>()?;
        arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let cutoff = arrivals[cohort - 1].0;
        let members: Vec<(f64, usize)> = arrivals.into_iter().filter(|a| a.0 <= cutoff).collect();
        events += k as u64;
        let mut agg = vec![0.0; w.len()];
        for &(_, c) in &members {
            let g = local_update(problem, c, &w, server)?;
            let s = problem.client_size(c) as f64 / s_total;
            agg.iter_mut().zip(&g).for_each(|(a, gi)| *a += s * gi);
        }
        w.iter_mut().zip(&agg).for_each(|(x, a)| *x -= server.lr * a);
        clock += cutoff;
        round += 1;
        let loss = evaluate(problem, &w, round)?;
        let last = members.last().expect("cohort is non-empty");
        records.push(TraceRecord {
            round,
            sim_clock: clock,
            client: Some(last.1),
            staleness: cutoff,
            g1_weight: 1.0,
            test_loss: loss,
        });
        if stop.done(round, clock, loss) {
            break;
        }
    }
    Ok(AflTrace {
        runner,
        records,
        events,
        final_params: w,
    })
}

/// Synchronous rounds over every client; each round lasts as long as the
/// slowest upload.
pub fn run_fedavg<P: FederatedProblem + ?Sized>(
    problem: &P,
    w0: &[f64],
    server: &ServerConfig,
    staleness: &StalenessSource,
    stop: &StopCriteria,
    seed: u64,
) -> Result<AflTrace> {
    run_scalable(problem, w0, server, 1.0, staleness, stop, seed)
}

/// Constants entering the convergence results.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceInputs {
    /// Gradient Lipschitz constant `L`.
    pub lipschitz: f64,
    /// Strong convexity constant `c`.
    pub strong_convexity: f64,
    /// Bound on the client gradient deviation, `phi^2`.
    pub phi_sq: f64,
    /// Number of participating clients `K`.
    pub clients: f64,
    pub eta: f64,
    /// `E[g1(delta)]`.
    pub e_g1: f64,
    /// `Var[g1(delta)]`.
    pub v_g1: f64,
}

impl ConvergenceInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0) {
            return Err(Error::param("lipschitz", "must be positive"));
        }
        if !(self.phi_sq >= 0.0) {
            return Err(Error::param("phi_sq", "must be non-negative"));
        }
        if !(self.clients >= 1.0) {
            return Err(Error::param("clients", "need at least one client"));
        }
        if !(self.eta > 0.0) || !(self.e_g1 > 0.0) || !(self.v_g1 >= 0.0) {
            return Err(Error::param("eta", "eta and E[g1] must be positive, Var[g1] non-negative"));
        }
        Ok(())
    }

    /// The same inputs with `g1 = 1`.
    pub fn staleness_free(&self) -> Self {
        ConvergenceInputs {
            e_g1: 1.0,
            v_g1: 0.0,
            ..*self
        }
    }

    /// Contraction factor `1 - eta E[g1] c / K`.
    pub fn contraction(&self) -> f64 {
        1.0 - self.eta * self.e_g1 * self.strong_convexity / self.clients
    }

    /// Limiting gap `L eta (V + E^2) phi^2 / (2 K E c)`.
    pub fn asymptotic_gap(&self) -> f64 {
        self.lipschitz * self.eta * (self.v_g1 + self.e_g1 * self.e_g1) * self.phi_sq
            / (2.0 * self.clients * self.e_g1 * self.strong_convexity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub satisfied: bool,
    /// `max_delta (L eta g2 + L eta g1 - K)`.
    pub margin: f64,
    /// Delay at which the maximum is attained; infinite for the limit.
    pub worst_delta: f64,
}

/// Checks `L eta g2(delta) + L eta g1(delta) <= K` on `delta_grid` and in the
/// limit `delta -> infinity`.
pub fn check_convergence_condition(
    inputs: &ConvergenceInputs,
    g1: StalenessWeight,
    g2: VarianceGrowth,
    delta_grid: &[f64],
) -> ConditionCheck {
    let le = inputs.lipschitz * inputs.eta;
    let mut margin = le * (g2.limit() + g1.limit()) - inputs.clients;
    let mut worst = f64::INFINITY;
    for &d in delta_grid {
        let m = le * (g2.eval(d) + g1.eval(d)) - inputs.clients;
        if m > margin {
            margin = m;
            worst = d;
        }
    }
    ConditionCheck {
        satisfied: margin <= 0.0,
        margin,
        worst_delta: worst,
    }
}

/// One-round bound on `E f(w_{i+1})` given `f(w_i)` and `|grad f(w_i)|^2`.
pub fn theorem3_step_bound(inputs: &ConvergenceInputs, f_i: f64, grad_norm_sq: f64) -> f64 {
    let k = inputs.clients;
    f_i - inputs.eta * inputs.e_g1 / (2.0 * k) * grad_norm_sq
        + inputs.lipschitz * inputs.eta * inputs.eta * (inputs.v_g1 + inputs.e_g1 * inputs.e_g1) * inputs.phi_sq / (2.0 * k * k)
}

/// The one-round bound without staleness weighting.
pub fn corollary2_step_bound(inputs: &ConvergenceInputs, f_i: f64, grad_norm_sq: f64) -> f64 {
    let k = inputs.clients;
    f_i - inputs.eta / (2.0 * k) * grad_norm_sq + inputs.lipschitz * inputs.eta * inputs.eta * inputs.phi_sq / (2.0 * k * k)
}

/// Bound on `E f(w_{i+1}) - f(w*)` for a strongly convex loss and fixed rate.
pub fn corollary3_bound(inputs: &ConvergenceInputs, f0_gap: f64, i: u64) -> f64 {
    let q = inputs.contraction();
    let qi = q.powf(i as f64);
    q * qi * f0_gap + inputs.asymptotic_gap() * (1.0 - qi)
}

/// `(E[g1(delta)], Var[g1(delta)])` under a tabulated CDF: the atom at the
/// compute delay, a midpoint rule on the CDF increments, and the tail mass
/// at the limit of `g1`.
pub fn estimate_g1_moments(table: &StalenessTable, g1: StalenessWeight) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = table.points().collect();
    let mut e = 0.0;
    let mut e2 = 0.0;
    let mut add = |g: f64, mass: f64| {
        e += g * mass;
        e2 += g * g * mass;
    };
    add(g1.eval(table.t_comp()), pts[0].1);
    for w in pts.windows(2) {
        let (t0, f0) = w[0];
        let (t1, f1) = w[1];
        if f1 < f0 {
            return Err(Error::NonMonotoneCdf {
                tau: t1,
                prev: f0,
                next: f1,
            });
        }
        add(g1.eval(0.5 * (t0 + t1)), f1 - f0);
    }
    add(g1.limit(), 1.0 - pts[pts.len() - 1].1);
    Ok((e, (e2 - e * e).max(0.0)))
}

/// Sample mean and variance of `g1` over delays.
pub fn sample_g1_moments(deltas: &[f64], g1: StalenessWeight) -> Result<(f64, f64)> {
    if deltas.is_empty() {
        return Err(Error::Empty("delays"));
    }
    let n = deltas.len() as f64;
    let e = deltas.iter().map(|&d| g1.eval(d)).sum::<f64>() / n;
    let v = deltas.iter().map(|&d| (g1.eval(d) - e).powi(2)).sum::<f64>() / n;
    Ok((e, v))
}

/// Label used in trace files.
pub fn runner_name(runner: Runner, g1: StalenessWeight) -> &'static str {
    match (runner, g1) {
        (Runner::Afl, StalenessWeight::OnePlusExp) => "afl",
        (Runner::Afl, StalenessWeight::Unit) => "afl-stale-free",
        (Runner::Scalable, _) => "scalable",
        (Runner::FedAvg, _) => "fedavg",
    }
}

impl core::fmt::Display for Runner {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Runner::Afl => "afl",
            Runner::Scalable => "scalable",
            Runner::FedAvg => "fedavg",
        })
    }
}
