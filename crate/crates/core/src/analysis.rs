//! Numerical evaluation of the connectivity, staleness and participation
//! results.
//!
//! The interference Laplace transform is evaluated on a finite window: cluster
//! centers are integrated over the disc of radius `W` (the truncation radius,
//! by default the simulated disc radius) and every corridor contributes only
//! the aircraft on its chord inside that disc. On the infinite plane the
//! cluster-center integral diverges, because a line that misses the origin by
//! `D` still carries aircraft arbitrarily close to it whatever the position of
//! its cluster center.
//!
//! The transform is of the normalized interference `I / p`, so the argument
//! for a link at planar distance `beta` is `gamma (h^2 + beta^2)^(alpha/2)`.
//!
//! Evaluation order for `L(s)`:
//! 1. `1 - K1` as a function of the distance `D` between the origin and the
//!    corridor line (a 1-D integral along the chord), tabulated once per `s`;
//! 2. its average over `(r, theta)` for a cluster center at distance `l`
//!    (isotropy removes the polar angle of the cluster center);
//! 3. the radial integral over `l`, using the probability generating function
//!    of the corridor count.

use crate::error::{Error, Result};
use crate::params::{ModelParams, RadiusModel};
use crate::pointproc::CorridorCountLaw;
use crate::quad::{integrate_try, CompensatedSum, QuadratureSpec};
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

/// Nearest-GBS distance density `2 pi lambda_b beta exp(-lambda_b pi beta^2)`.
pub fn distance_pdf(beta: f64, lambda_b: f64) -> f64 {
    if beta < 0.0 {
        return 0.0;
    }
    2.0 * PI * lambda_b * beta * (-lambda_b * PI * beta * beta).exp()
}

/// Gamma-tail constant `m (m!)^(-1/m)`.
pub fn eta(m: u32) -> f64 {
    let log_fact: f64 = (1..=m).map(|k| (k as f64).ln()).sum();
    m as f64 * (-log_fact / m as f64).exp()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `1 - (1 + s a^(-alpha/2) / m)^(-m)` for squared 3-D distance `a`.
#[inline]
fn blocking(a: f64, s: f64, alpha: f64, m: f64) -> f64 {
    if s.is_infinite() {
        return 1.0;
    }
    let q = s * crate::channel::path_gain(a, alpha) / m;
    -(-m * q.ln_1p()).exp_m1()
}

fn window_of(params: &ModelParams, quad: &QuadratureSpec) -> f64 {
    quad.truncation_radius.unwrap_or(params.disc_radius)
}

/// `J(D, s) = integral over the chord of 1 - (1 + s (D^2 + h^2 + t^2)^(-alpha/2) / m)^(-m) dt`
/// for a line at distance `d` from the origin, clipped to the disc of radius
/// `window`.
fn chord_integral(d: f64, s: f64, params: &ModelParams, window: f64, quad: &QuadratureSpec) -> Result<f64> {
    let rad = window * window - d * d;
    if rad <= 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let half = rad.sqrt();
    if s.is_infinite() {
        return Ok(2.0 * half);
    }
    let c = d * d + params.height * params.height;
    let m = params.m as f64;
    let reach = (s / m).powf(1.0 / params.alpha);
    let mut points = Vec::with_capacity(24);
    points.push(0.0);
    let mut x = c.sqrt().min(reach).max(1e-3);
    while x < half {
        points.push(x);
        x *= 4.0;
    }
    points.push(half);
    let spec = QuadratureSpec {
        rel_tol: quad.rel_tol * 1e-3,
        abs_tol: 1e-10 / params.lambda_t.max(1e-12),
        ..*quad
    };
    let est = integrate_try(
        |t| Ok(blocking(c + t * t, s, params.alpha, m)),
        &points,
        &spec,
        "chord integral",
    )?;
    Ok(2.0 * est.value)
}

/// `K1 = exp(-lambda_t integral_u [1 - (1 + s f^2(u)... )^(-m)] du)` for the
/// corridor `(r, theta)` of a cluster center at `(x1, x2)`, evaluated
/// directly with `f = |x + y(u)|` and `y(u) = (u sin(theta) + r cos(theta),
/// -u cos(theta) + r sin(theta))`, over the part of the corridor inside the
/// truncation window.
pub fn k1_inner(
    x1: f64,
    x2: f64,
    r: f64,
    theta: f64,
    s: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::param("s", "must be non-negative"));
    }
    if s == 0.0 || params.lambda_t == 0.0 {
        return Ok(1.0);
    }
    let window = window_of(params, quad);
    let (sn, cs) = theta.sin_cos();
    let planar_sq = |u: f64| {
        let y1 = x1 + u * sn + r * cs;
        let y2 = x2 - u * cs + r * sn;
        y1 * y1 + y2 * y2
    };
    // offset of the point closest to the origin and the chord half-length
    let u0 = -(x1 * sn - x2 * cs);
    let d = x1 * cs + x2 * sn + r;
    let rad = window * window - d * d;
    if rad <= 0.0 {
        return Ok(1.0);
    }
    let half = rad.sqrt();
    let h2 = params.height * params.height;
    let m = params.m as f64;
    let c = (d * d + h2).sqrt().min((s / m).powf(1.0 / params.alpha)).max(1e-3);
    let mut below = Vec::new();
    let mut x = c;
    while x < half {
        below.push(u0 - x);
        x *= 4.0;
    }
    let mut points = Vec::with_capacity(2 * below.len() + 3);
    points.push(u0 - half);
    points.extend(below.iter().rev());
    points.push(u0);
    points.extend(below.iter().map(|b| 2.0 * u0 - b));
    points.push(u0 + half);
    let spec = QuadratureSpec {
        rel_tol: quad.rel_tol * 1e-3,
        abs_tol: 1e-10 / params.lambda_t,
        ..*quad
    };
    let est = integrate_try(
        |u| Ok(blocking(planar_sq(u) + h2, s, params.alpha, m)),
        &points,
        &spec,
        "K1 integral",
    )?;
    Ok((-params.lambda_t * est.value).exp())
}

/// `1 - K1` tabulated against the line distance `D` for one value of `s`.
#[derive(Debug, Clone)]
pub struct K1Table {
    s: f64,
    scale: f64,
    step: f64,
    window: f64,
    values: Vec<f64>,
}

const TABLE_NODES: usize = 1025;

impl K1Table {
    pub fn new(s: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<Self> {
        let window = window_of(params, quad);
        let reach = if s.is_finite() {
            (s / params.m as f64).powf(1.0 / params.alpha)
        } else {
            window
        };
        let scale = reach.max(params.height).min(window);
        let top = (window / scale).asinh();
        let step = top / (TABLE_NODES - 1) as f64;
        // stored divided by the half-chord, which removes the square-root
        // edge at D = W
        let values = (0..TABLE_NODES)
            .map(|i| {
                if i + 1 == TABLE_NODES {
                    let edge = blocking(window * window + params.height * params.height, s, params.alpha, params.m as f64);
                    return Ok(2.0 * params.lambda_t * edge);
                }
                let d = scale * (i as f64 * step).sinh();
                let j = chord_integral(d, s, params, window, quad)?;
                Ok(-(-params.lambda_t * j).exp_m1() / (window * window - d * d).sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(K1Table {
            s,
            scale,
            step,
            window,
            values,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `1 - K1` for a line at (signed) distance `d` from the origin.
    pub fn blocked(&self, d: f64) -> f64 {
        let d = d.abs();
        if d >= self.window {
            return 0.0;
        }
        let xi = (d / self.scale).asinh() / self.step;
        let last = (TABLE_NODES - 1) as isize;
        let i = (xi.floor() as isize).min(last - 1);
        let t = xi - i as f64;
        // four-point Lagrange in the stretched variable; the table is even in D
        let at = |k: isize| -> f64 {
            let k = k.abs().min(last);
            self.values[k as usize]
        };
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        let half = ((self.window - d) * (self.window + d)).sqrt();
        ((w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3) * half).clamp(0.0, 1.0)
    }
}

/// Radius average `C(x) = E_r[1 - K1(x + r)]` on a uniform grid, together
/// with the `1 - K1` table it was built from.
#[derive(Debug, Clone)]
pub struct KernelTable {
    k1: K1Table,
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

const KERNEL_NODES: usize = 4097;

impl KernelTable {
    pub fn k1(&self) -> &K1Table {
        &self.k1
    }

    pub fn averaged(&self, x: f64) -> f64 {
        let last = (KERNEL_NODES - 1) as isize;
        let xi = (x - self.lo) / self.step;
        if !(xi > 0.0 && xi < last as f64) {
            return 0.0;
        }
        let i = (xi.floor() as isize).clamp(1, last - 2);
        let t = xi - i as f64;
        let at = |k: isize| self.values[k as usize];
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        (w0 * at(i - 1) + w1 * at(i) + w2 * at(i + 1) + w3 * at(i + 2)).clamp(0.0, 1.0)
    }
}

/// Evaluator of the interference Laplace transform and everything built on it.
#[derive(Debug, Clone)]
pub struct LaplaceEvaluator {
    pub params: ModelParams,
    pub quad: QuadratureSpec,
    law: CorridorCountLaw,
}

impl LaplaceEvaluator {
    pub fn new(params: &ModelParams, quad: QuadratureSpec) -> Result<Self> {
        params.validate()?;
        quad.validate()?;
        Ok(LaplaceEvaluator {
            params: params.clone(),
            quad,
            law: CorridorCountLaw::new(params.lambda_l, params.n_max)?,
        })
    }

    pub fn window(&self) -> f64 {
        window_of(&self.params, &self.quad)
    }

    /// Truncated Poisson corridor-count mass.
    pub fn count_mass(&self) -> &[f64] {
        self.law.mass()
    }

    /// `1 - sum_n K2^n P(n)` computed as `sum_n P(n) (1 - (1 - eps)^n)`.
    fn cluster_blocking(&self, eps: f64) -> f64 {
        let lg = (-eps).ln_1p();
        let mut acc = CompensatedSum::default();
        for (n, &p) in self.law.mass().iter().enumerate() {
            if n > 0 {
                acc.add(-p * (n as f64 * lg).exp_m1());
            }
        }
        acc.value()
    }

    fn radius_points(&self, extra: &[f64]) -> Vec<f64> {
        let model = self.params.radius_model;
        let top = model.support_limit();
        let mut v = match model {
            RadiusModel::TruncatedGaussian { sigma } => alloc::vec![0.0, sigma, 2.0 * sigma, 4.0 * sigma, top],
            RadiusModel::Uniform { r_hat } => alloc::vec![0.0, r_hat],
        };
        v.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < top));
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Tables of `1 - K1` and of its radius average for argument `s`.
    pub fn kernel(&self, s: f64) -> Result<KernelTable> {
        let k1 = K1Table::new(s, &self.params, &self.quad)?;
        let model = self.params.radius_model;
        let window = k1.window;
        let lo = -window - model.support_limit();
        let step = (window - lo) / (KERNEL_NODES - 1) as f64;
        let spec = QuadratureSpec {
            rel_tol: self.quad.rel_tol * 1e-2,
            abs_tol: 1e-11,
            ..self.quad
        };
        let values = (0..KERNEL_NODES)
            .map(|i| {
                let x = lo + i as f64 * step;
                let points = self.radius_points(&[-x, -x - k1.scale, -x + k1.scale]);
                let est = integrate_try(|r| Ok(model.pdf(r) * k1.blocked(x + r)), &points, &spec, "radius average")?;
                Ok(est.value)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(KernelTable { k1, lo, step, values })
    }

    /// `1 - K2` for a cluster center at distance `l`: the `theta`-average of
    /// the radius-averaged blocking of a line whose normal passes the
    /// cluster center at signed offset `l cos(theta)`.
    pub fn k2_blocked(&self, l: f64, kernel: &KernelTable) -> Result<f64> {
        let top = self.params.radius_model.support_limit();
        let mut points = alloc::vec![0.0, 0.5 * PI, PI];
        for k in 1..=8 {
            let x = top * k as f64 / 8.0;
            if x < l {
                points.push((-x / l).acos());
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let spec = QuadratureSpec {
            rel_tol: self.quad.rel_tol * 1e-1,
            abs_tol: 1e-10,
            ..self.quad
        };
        let est = integrate_try(|t| Ok(kernel.averaged(l * t.cos())), &points, &spec, "theta average")?;
        Ok((est.value / PI).clamp(0.0, 1.0))
    }

    /// `1 - K2` by direct nested integration over `(r, theta)`; slower
    /// reference for [`LaplaceEvaluator::k2_blocked`].
    pub fn k2_blocked_direct(&self, l: f64, table: &K1Table) -> Result<f64> {
        let model = self.params.radius_model;
        let inner = QuadratureSpec {
            rel_tol: self.quad.rel_tol * 1e-2,
            abs_tol: 1e-11,
            ..self.quad
        };
        let middle = QuadratureSpec {
            rel_tol: self.quad.rel_tol * 1e-1,
            abs_tol: 1e-10,
            ..self.quad
        };
        let est = integrate_try(
            |r| {
                let pdf = model.pdf(r);
                if pdf == 0.0 {
                    return Ok(0.0);
                }
                let mut tpoints = alloc::vec![0.0];
                if r < l {
                    tpoints.push((-r / l).acos());
                }
                tpoints.push(PI);
                let th = integrate_try(
                    |theta| Ok(table.blocked(l * theta.cos() + r)),
                    &tpoints,
                    &inner,
                    "theta average",
                )?;
                Ok(pdf * th.value / PI)
            },
            &self.radius_points(&[l]),
            &middle,
            "radius average",
        )?;
        Ok(est.value.clamp(0.0, 1.0))
    }

    /// `L(s)` from a prepared kernel.
    pub fn laplace_with(&self, kernel: &KernelTable) -> Result<f64> {
        let p = &self.params;
        if kernel.k1.s == 0.0 || p.lambda_c == 0.0 || p.lambda_t == 0.0 {
            return Ok(1.0);
        }
        let window = self.window();
        let mut points = alloc::vec![0.0];
        let mut x = p.radius_model.support_limit().min(window) / 8.0;
        while x < window {
            points.push(x);
            x *= 2.0;
        }
        points.push(window);
        let outer = QuadratureSpec {
            abs_tol: self.quad.abs_tol.max(1e-10),
            ..self.quad
        };
        let est = integrate_try(
            |l| {
                let eps = self.k2_blocked(l, kernel)?;
                Ok(2.0 * PI * p.lambda_c * self.cluster_blocking(eps) * l)
            },
            &points,
            &outer,
            "cluster-center integral",
        )?;
        Ok((-est.value).exp())
    }

    pub fn laplace(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::param("s", "must be non-negative"));
        }
        if s == 0.0 {
            return Ok(1.0);
        }
        let kernel = self.kernel(s)?;
        self.laplace_with(&kernel)
    }

    /// Conditional connectivity given link distance `beta`:
    /// `sum_k (-1)^(k+1) C(m,k) L(gamma k eta (h^2 + beta^2)^(alpha/2))`.
    pub fn conditional_connectivity(&self, gamma: f64, beta: f64) -> Result<f64> {
        conditional_with(&self.params, gamma, beta, |s| self.laplace(s))
    }
}

fn conditional_with<F: FnMut(f64) -> Result<f64>>(p: &ModelParams, gamma: f64, beta: f64, mut laplace: F) -> Result<f64> {
    let m = p.m;
    let base = if gamma.is_infinite() {
        f64::INFINITY
    } else {
        gamma * eta(m) * (p.height * p.height + beta * beta).powf(0.5 * p.alpha)
    };
    let mut acc = CompensatedSum::default();
    for k in 1..=m {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc.add(sign * binomial(m, k) * laplace(base * k as f64)?);
    }
    Ok(acc.value())
}

/// `ln L(s)` tabulated on a logarithmic grid, for evaluating many thresholds
/// against one parameter set. Arguments outside the grid fall back to
/// direct evaluation.
#[derive(Debug, Clone)]
pub struct LaplaceCurve {
    ev: LaplaceEvaluator,
    ln_s0: f64,
    step: f64,
    ln_l: Vec<f64>,
    at_infinity: f64,
}

impl LaplaceCurve {
    /// Grid over `[s_min, s_max]` with `per_decade` nodes per decade.
    pub fn new(ev: &LaplaceEvaluator, s_min: f64, s_max: f64, per_decade: usize) -> Result<Self> {
        if !(s_min > 0.0 && s_max > s_min && s_max.is_finite()) || per_decade < 2 {
            return Err(Error::param("s range", "need 0 < s_min < s_max < inf and two nodes per decade"));
        }
        let ln_s0 = s_min.ln();
        let decades = (s_max / s_min).log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(4) + 1;
        let step = (s_max.ln() - ln_s0) / (n - 1) as f64;
        let ln_l = (0..n)
            .map(|i| Ok(ev.laplace((ln_s0 + i as f64 * step).exp())?.ln()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(LaplaceCurve {
            ev: ev.clone(),
            ln_s0,
            step,
            ln_l,
            at_infinity: ev.laplace(f64::INFINITY)?,
        })
    }

    /// Grid covering every argument that `connectivity` needs for SIR
    /// thresholds in `[gamma_min, gamma_max]`.
    pub fn for_thresholds(ev: &LaplaceEvaluator, gamma_min: f64, gamma_max: f64, per_decade: usize) -> Result<Self> {
        let p = &ev.params;
        let e = eta(p.m);
        let top = beta_limit(p.lambda_b);
        let s_min = gamma_min * e * p.height.powf(p.alpha);
        let s_max = p.m as f64 * gamma_max * e * (p.height * p.height + top * top).powf(0.5 * p.alpha);
        Self::new(ev, s_min, s_max, per_decade)
    }

    pub fn evaluator(&self) -> &LaplaceEvaluator {
        &self.ev
    }

    /// `L(s)`: 4-point Lagrange interpolation of `ln L` in `ln s` inside the grid.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if s.is_infinite() {
            return Ok(self.at_infinity);
        }
        if s == 0.0 {
            return Ok(1.0);
        }
        let n = self.ln_l.len();
        let t = (s.ln() - self.ln_s0) / self.step;
        if !(t >= 0.0 && t <= (n - 1) as f64) {
            return self.ev.laplace(s);
        }
        let i = (t.floor() as usize).clamp(1, n - 3);
        let x = t - i as f64;
        let y = |k: usize| self.ln_l[k];
        let v = -x * (x - 1.0) * (x - 2.0) / 6.0 * y(i - 1)
            + (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0 * y(i)
            - (x + 1.0) * x * (x - 2.0) / 2.0 * y(i + 1)
            + (x + 1.0) * x * (x - 1.0) / 6.0 * y(i + 2);
        Ok(v.exp())
    }

    pub fn connectivity(&self, gamma: f64) -> Result<f64> {
        connectivity_with(gamma, &self.ev, |g, b| conditional_with(&self.ev.params, g, b, |s| self.eval(s)))
    }

    pub fn staleness_cdf(&self, tau: f64) -> Result<f64> {
        let p = &self.ev.params;
        if tau <= p.t_comp() {
            return Ok(0.0);
        }
        self.connectivity(p.gamma_for_deadline(tau))
    }
}

/// Interference Laplace transform `L(s)` of `I / p`.
pub fn laplace_interference(s: f64, ev: &LaplaceEvaluator) -> Result<f64> {
    ev.laplace(s)
}

/// Upper limit of the link-distance integral: the `1e-13` tail quantile.
pub fn beta_limit(lambda_b: f64) -> f64 {
    (30.0 / (PI * lambda_b)).sqrt()
}

/// `P(SIR >= gamma)` averaged over the nearest-GBS distance.
pub fn connectivity_probability(gamma: f64, ev: &LaplaceEvaluator) -> Result<f64> {
    connectivity_with(gamma, ev, |g, b| ev.conditional_connectivity(g, b))
}

fn connectivity_with<F: FnMut(f64, f64) -> Result<f64>>(gamma: f64, ev: &LaplaceEvaluator, mut conditional: F) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", "SIR threshold must be positive"));
    }
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let p = &ev.params;
    if p.lambda_b == 0.0 {
        return Err(Error::param("lambda_b", "no GBS to connect to"));
    }
    if gamma.is_infinite() {
        return conditional(gamma, 0.0);
    }
    let top = beta_limit(p.lambda_b);
    let mode = 1.0 / (2.0 * PI * p.lambda_b).sqrt();
    let points = [0.0, 0.5 * mode, mode, 2.0 * mode, 3.0 * mode, top];
    let spec = QuadratureSpec {
        abs_tol: ev.quad.abs_tol.max(1e-9),
        ..ev.quad
    };
    let est = integrate_try(
        |beta| Ok(distance_pdf(beta, p.lambda_b) * conditional(gamma, beta)?),
        &points,
        &spec,
        "link-distance integral",
    )?;
    Ok(est.value.clamp(0.0, 1.0))
}

/// `P(delta <= tau)`: connectivity at the SIR that makes the total delay
/// equal `tau`. Zero at or below the computing delay.
pub fn staleness_cdf(tau: f64, ev: &LaplaceEvaluator) -> Result<f64> {
    let p = &ev.params;
    if tau <= p.t_comp() {
        return Ok(0.0);
    }
    connectivity_probability(p.gamma_for_deadline(tau), ev)
}

/// Where the cluster center of a corridor is taken to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CpDistribution {
    Origin,
    #[default]
    UniformInDisc,
}

/// Mean length of a corridor inside the disc of radius
/// `params.sampling_radius()`, averaging over `(r, theta)` and, for
/// [`CpDistribution::UniformInDisc`], over the cluster-center position.
pub fn expected_chord_length(params: &ModelParams, quad: &QuadratureSpec, cp: CpDistribution) -> Result<f64> {
    params.validate()?;
    let big_r = params.sampling_radius();
    let model = params.radius_model;
    let top = model.support_limit();
    let chord = |d: f64| {
        let rad = big_r * big_r - d * d;
        if rad > 0.0 {
            2.0 * rad.sqrt()
        } else {
            0.0
        }
    };
    let rpoints = |extra: &[f64]| {
        let mut v: Vec<f64> = match model {
            RadiusModel::TruncatedGaussian { sigma } => alloc::vec![0.0, sigma, 2.0 * sigma, 4.0 * sigma, top],
            RadiusModel::Uniform { r_hat } => alloc::vec![0.0, r_hat],
        };
        v.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < top));
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    match cp {
        CpDistribution::Origin => {
            let est = integrate_try(|r| Ok(model.pdf(r) * chord(r)), &rpoints(&[big_r]), quad, "chord average")?;
            Ok(est.value)
        }
        CpDistribution::UniformInDisc => {
            let inner = quad.tightened(1e-2);
            let middle = quad.tightened(1e-1);
            let est = integrate_try(
                |l| {
                    let by_r = integrate_try(
                        |r| {
                            let pdf = model.pdf(r);
                            if pdf == 0.0 {
                                return Ok(0.0);
                            }
                            let mut tp = alloc::vec![0.0, PI];
                            for edge in [big_r - r, -big_r - r, -r] {
                                if l > 0.0 && edge.abs() < l {
                                    tp.push((edge / l).acos());
                                }
                            }
                            tp.sort_by(|a, b| a.partial_cmp(b).unwrap());
                            let th = integrate_try(|t| Ok(chord(l * t.cos() + r)), &tp, &inner, "chord theta")?;
                            Ok(pdf * th.value / PI)
                        },
                        &rpoints(&[big_r - l, big_r + l, l]),
                        &middle,
                        "chord radius",
                    )?;
                    Ok(2.0 * l / (big_r * big_r) * by_r.value)
                },
                &[0.0, 0.5 * big_r, big_r],
                quad,
                "chord position",
            )?;
            Ok(est.value)
        }
    }
}

/// `lambda_c lambda_t E(L) E[n] / lambda_b` before flooring.
pub fn expected_participants_real(params: &ModelParams, e_chord: f64) -> Result<f64> {
    if !(e_chord >= 0.0) {
        return Err(Error::param("e_chord", "must be non-negative"));
    }
    let law = CorridorCountLaw::new(params.lambda_l, params.n_max)?;
    if params.lambda_b == 0.0 {
        return Err(Error::param("lambda_b", "must be positive"));
    }
    Ok(params.lambda_c * params.lambda_t * e_chord * law.mean() / params.lambda_b)
}

/// Expected number of aircraft associated with a GBS, floored.
pub fn expected_participants(params: &ModelParams, e_chord: f64) -> Result<u64> {
    Ok(expected_participants_real(params, e_chord)?.floor() as u64)
}
