//! Monte Carlo counterparts of the analytical results.
//!
//! Trial `i` of every estimator draws from the substream `(seed, domain, i)`,
//! so the per-trial functions can be scheduled on any number of threads and
//! the summaries below reproduce the sequential result bit for bit.

use crate::channel::{interference_at, sir_of_typical_link, associated_aircraft, Fading, GbsIndex, ServingRule};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::pointproc::{sample_realization, Point2};
use crate::rng::{substream, Domain};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McResult {
    pub estimate: f64,
    pub stderr: f64,
    /// Trials that produced a sample.
    pub trials: usize,
    /// Trials discarded for lack of a serving link.
    pub discarded: usize,
}

/// Delay decomposition of one uplink, s.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StalenessSample {
    pub t_comp: f64,
    pub t_tran: f64,
    pub delta: f64,
}

impl StalenessSample {
    pub fn from_sir(params: &ModelParams, sir: f64) -> Self {
        let t_comp = params.t_comp();
        let t_tran = params.t_tran(sir);
        StalenessSample {
            t_comp,
            t_tran,
            delta: t_comp + t_tran,
        }
    }
}

/// SIR of the typical link in trial `index`; `None` when the trial has no
/// serving link.
pub fn sir_trial(params: &ModelParams, rule: ServingRule, seed: u64, index: u64) -> Result<Option<f64>> {
    let mut rng = substream(seed, Domain::Connectivity, index);
    let real = sample_realization(params, &mut rng)?;
    match sir_of_typical_link(&real, params, rule, &mut rng) {
        Ok(link) => Ok(Some(link.sir)),
        Err(Error::NoServingLink) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Number of aircraft associated with the typical GBS in trial `index`.
pub fn participant_trial(params: &ModelParams, seed: u64, index: u64) -> Result<Option<usize>> {
    let mut rng = substream(seed, Domain::Participants, index);
    let real = sample_realization(params, &mut rng)?;
    let Some(typical) = real.typical_gbs() else {
        return Ok(None);
    };
    let grid = GbsIndex::new(&real.gbs);
    Ok(Some(associated_aircraft(&real, &grid, typical).len()))
}

/// `exp(-s I / p)` for the interference at the origin in trial `index`.
pub fn laplace_trial(params: &ModelParams, s: f64, seed: u64, index: u64) -> Result<f64> {
    let mut rng = substream(seed, Domain::Connectivity, index);
    let real = sample_realization(params, &mut rng)?;
    let fading = Fading::new(params.m)?;
    let i = interference_at(&real, Point2::ORIGIN, None, params, &fading, &mut rng);
    Ok((-s * i / params.power).exp())
}

/// Binomial estimate of `P(SIR >= gamma)` over the valid samples. Infinite
/// SIR counts as connected.
pub fn summarize_connectivity(sirs: &[Option<f64>], gamma: f64) -> Result<McResult> {
    let discarded = sirs.iter().filter(|s| s.is_none()).count();
    let valid = sirs.len() - discarded;
    if valid == 0 {
        return Err(Error::AllDiscarded { trials: sirs.len() });
    }
    let hits = sirs.iter().flatten().filter(|&&s| s >= gamma).count();
    let p = hits as f64 / valid as f64;
    Ok(McResult {
        estimate: p,
        stderr: (p * (1.0 - p) / valid as f64).sqrt(),
        trials: valid,
        discarded,
    })
}

/// Sample mean and its standard error.
pub fn summarize_mean(values: &[f64], discarded: usize) -> Result<McResult> {
    if values.is_empty() {
        return Err(Error::AllDiscarded { trials: discarded });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(McResult {
        estimate: mean,
        stderr: (var / n).sqrt(),
        trials: values.len(),
        discarded,
    })
}

pub fn sir_samples(params: &ModelParams, rule: ServingRule, trials: usize, seed: u64) -> Result<Vec<Option<f64>>> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    (0..trials as u64).map(|i| sir_trial(params, rule, seed, i)).collect()
}

/// Empirical connectivity probability at `gamma`.
pub fn mc_connectivity(params: &ModelParams, gamma: f64, trials: usize, rule: ServingRule, seed: u64) -> Result<McResult> {
    summarize_connectivity(&sir_samples(params, rule, trials, seed)?, gamma)
}

/// Empirical connectivity at several thresholds from one set of SIR samples.
pub fn mc_connectivity_curve(
    params: &ModelParams,
    gammas: &[f64],
    trials: usize,
    rule: ServingRule,
    seed: u64,
) -> Result<Vec<McResult>> {
    let sirs = sir_samples(params, rule, trials, seed)?;
    gammas.iter().map(|&g| summarize_connectivity(&sirs, g)).collect()
}

/// Delay samples from the SIR of independent snapshots; trials without a
/// serving link are skipped.
pub fn mc_staleness(params: &ModelParams, trials: usize, rule: ServingRule, seed: u64) -> Result<Vec<StalenessSample>> {
    let sirs = sir_samples(params, rule, trials, seed)?;
    let out: Vec<StalenessSample> = sirs.iter().flatten().map(|&s| StalenessSample::from_sir(params, s)).collect();
    if out.is_empty() {
        return Err(Error::AllDiscarded { trials });
    }
    Ok(out)
}

/// Mean number of aircraft whose nearest GBS is the typical GBS.
pub fn mc_participants(params: &ModelParams, trials: usize, seed: u64) -> Result<McResult> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let counts = (0..trials as u64)
        .map(|i| participant_trial(params, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let discarded = counts.iter().filter(|c| c.is_none()).count();
    let values: Vec<f64> = counts.iter().flatten().map(|&c| c as f64).collect();
    summarize_mean(&values, discarded)
}

/// Fraction of samples with `delta <= tau`.
pub fn empirical_cdf(samples: &[StalenessSample], tau: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|s| s.delta <= tau).count() as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        let mut p = ModelParams::reference_gaussian();
        p.disc_radius = 5000.0;
        p.lambda_c = crate::units::per_km2(0.02);
        p
    }

    #[test]
    fn tiny_threshold_connects_every_valid_trial() {
        let r = mc_connectivity(&small(), 1e-300, 200, ServingRule::TaggedAtOrigin, 1).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn summaries() {
        let sirs = [Some(2.0), None, Some(0.5), Some(f64::INFINITY), Some(1.0)];
        let r = summarize_connectivity(&sirs, 1.0).unwrap();
        assert_eq!(r.trials, 4);
        assert_eq!(r.discarded, 1);
        assert!((r.estimate - 0.75).abs() < 1e-15);
        assert!((r.stderr - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(summarize_connectivity(&[None, None], 1.0), Err(Error::AllDiscarded { trials: 2 }));
    }

    #[test]
    fn deterministic_under_seed() {
        let p = small();
        let a = mc_connectivity(&p, 1.0, 300, ServingRule::NearestAssociated, 9).unwrap();
        let b = mc_connectivity(&p, 1.0, 300, ServingRule::NearestAssociated, 9).unwrap();
        assert_eq!(a, b);
        let c = mc_connectivity(&p, 1.0, 300, ServingRule::NearestAssociated, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stderr_scales_with_trials() {
        let p = small();
        let a = mc_connectivity(&p, 1.0, 2000, ServingRule::TaggedAtOrigin, 3).unwrap();
        let b = mc_connectivity(&p, 1.0, 4000, ServingRule::TaggedAtOrigin, 3).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((ratio - 2f64.sqrt()).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn infinite_sir_gives_compute_delay_only() {
        let p = ModelParams::reference_gaussian();
        let s = StalenessSample::from_sir(&p, f64::INFINITY);
        assert_eq!(s.t_tran, 0.0);
        assert_eq!(s.delta, p.t_comp());
        let mut q = p.clone();
        q.packet_bits *= 2.0;
        let a = StalenessSample::from_sir(&p, 3.0);
        let b = StalenessSample::from_sir(&q, 3.0);
        assert!((b.t_tran - 2.0 * a.t_tran).abs() < 1e-18);
        assert!((a.delta - a.t_comp - a.t_tran).abs() < 1e-18);
    }

    #[test]
    fn no_aircraft_no_participants() {
        let mut p = small();
        p.lambda_t = 0.0;
        let r = mc_participants(&p, 50, 2).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn empirical_cdf_counts() {
        let p = ModelParams::reference_gaussian();
        let xs: Vec<StalenessSample> = [1.0, 3.0, 7.0].iter().map(|&s| StalenessSample::from_sir(&p, s)).collect();
        assert_eq!(empirical_cdf(&xs, 0.0), 0.0);
        assert_eq!(empirical_cdf(&xs, 1.0), 1.0);
        assert!((empirical_cdf(&xs, xs[1].delta) - 2.0 / 3.0).abs() < 1e-15);
    }
}
