//! Fourier neural network on a periodic 1-D grid with hand-derived gradients.
//!
//! Layout: a pointwise lifting of the input (and optionally the grid
//! coordinate) to `width` channels, `n_layers` Fourier layers
//! `h <- act(K h + W h + b)`, and a two-layer pointwise projection
//! `width -> hidden -> 1`. The spectral operator `K` keeps the modes
//! `0..k_max` of a real DFT, mixes channels per mode with complex weights and
//! transforms back:
//!
//! ```text
//! H_j[k] = sum_x h_j[x] e^{-2 pi i k x / N}
//! Y_c[k] = sum_j R_cjk H_j[k]
//! (K h)_c[x] = (1/N) sum_k c_k Re(Y_c[k] e^{2 pi i k x / N}),  c_0 = 1, c_k = 2
//! ```
//!
//! All parameters live in one flat `f64` vector; [`Layout`] gives the offsets.

use crate::burgers::{Field1D, TurbulenceSample};
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    /// `x Phi(x)` with the exact normal CDF.
    #[default]
    Gelu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => 0.5 * x * (1.0 + libm::erf(x * core::f64::consts::FRAC_1_SQRT_2)),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let cdf = 0.5 * (1.0 + libm::erf(x * core::f64::consts::FRAC_1_SQRT_2));
                let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
                cdf + x * pdf
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FnoConfig {
    pub n_layers: usize,
    pub width: usize,
    pub k_max: usize,
    pub grid: usize,
    pub hidden: usize,
    /// Append the grid coordinate `x / N` as a second input channel.
    pub positional: bool,
    pub activation: Activation,
}

impl Default for FnoConfig {
    fn default() -> Self {
        FnoConfig {
            n_layers: 2,
            width: 32,
            k_max: 12,
            grid: 256,
            hidden: 32,
            positional: true,
            activation: Activation::Gelu,
        }
    }
}

impl FnoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 || !self.grid.is_power_of_two() {
            return Err(Error::param("grid", "must be a power of two"));
        }
        if self.n_layers < 1 {
            return Err(Error::param("n_layers", "need at least one Fourier layer"));
        }
        if self.width < 1 || self.hidden < 1 {
            return Err(Error::param("width", "channel counts must be positive"));
        }
        if self.k_max < 1 || self.k_max > self.grid / 2 {
            return Err(Error::param("k_max", "must lie in 1..=grid/2"));
        }
        Ok(())
    }

    pub fn in_channels(&self) -> usize {
        1 + self.positional as usize
    }
}

/// Offsets of one Fourier layer in the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerLayout {
    /// Real parts of `R`, indexed `[c][j][k]`.
    pub spectral_re: Range<usize>,
    pub spectral_im: Range<usize>,
    /// Pointwise `W`, indexed `[c][j]`.
    pub pointwise: Range<usize>,
    pub bias: Range<usize>,
}

/// Offsets of every parameter block, in storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    /// Lifting matrix `[c][i]`.
    pub lift: Range<usize>,
    pub lift_bias: Range<usize>,
    pub layers: Vec<LayerLayout>,
    /// First projection `[d][c]`.
    pub proj1: Range<usize>,
    pub proj1_bias: Range<usize>,
    pub proj2: Range<usize>,
    pub proj2_bias: Range<usize>,
    pub len: usize,
}

impl Layout {
    pub fn new(config: &FnoConfig) -> Self {
        let w = config.width;
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let lift = take(w * config.in_channels());
        let lift_bias = take(w);
        let layers = (0..config.n_layers)
            .map(|_| LayerLayout {
                spectral_re: take(w * w * config.k_max),
                spectral_im: take(w * w * config.k_max),
                pointwise: take(w * w),
                bias: take(w),
            })
            .collect();
        let proj1 = take(config.hidden * w);
        let proj1_bias = take(config.hidden);
        let proj2 = take(config.hidden);
        let proj2_bias = take(1);
        Layout {
            lift,
            lift_bias,
            layers,
            proj1,
            proj1_bias,
            proj2,
            proj2_bias,
            len: at,
        }
    }
}

/// Trainable parameters as one flat vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FnoParams {
    pub config: FnoConfig,
    pub data: Vec<f64>,
}

/// Gradient with the same layout as [`FnoParams::data`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub data: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector { data: vec![0.0; len] }
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|g| *g *= c);
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

impl FnoParams {
    pub fn zeros(config: &FnoConfig) -> Result<Self> {
        config.validate()?;
        Ok(FnoParams {
            config: config.clone(),
            data: vec![0.0; Layout::new(config).len],
        })
    }

    pub fn from_vec(config: &FnoConfig, data: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = Layout::new(config).len;
        if data.len() != expected {
            return Err(Error::Shape {
                expected,
                got: data.len(),
            });
        }
        Ok(FnoParams {
            config: config.clone(),
            data,
        })
    }

    /// Uniform random init: spectral weights in `+-1/width^2`, real matrices
    /// in `+-1/sqrt(fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(config: &FnoConfig, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let layout = Layout::new(config);
        let w = config.width as f64;
        let mut fill = |range: Range<usize>, scale: f64, data: &mut Vec<f64>| {
            for v in &mut data[range] {
                *v = scale * (2.0 * rng.random::<f64>() - 1.0);
            }
        };
        fill(layout.lift.clone(), 1.0 / (config.in_channels() as f64).sqrt(), &mut p.data);
        for l in &layout.layers {
            fill(l.spectral_re.clone(), 1.0 / (w * w), &mut p.data);
            fill(l.spectral_im.clone(), 1.0 / (w * w), &mut p.data);
            fill(l.pointwise.clone(), 1.0 / w.sqrt(), &mut p.data);
        }
        fill(layout.proj1.clone(), 1.0 / w.sqrt(), &mut p.data);
        fill(layout.proj2.clone(), 1.0 / (config.hidden as f64).sqrt(), &mut p.data);
        Ok(p)
    }

    /// Deterministic init from `seed`.
    pub fn init_seeded(config: &FnoConfig, seed: u64) -> Result<Self> {
        Self::init(config, &mut substream(seed, Domain::FnoInit, 0))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn distance(&self, other: &FnoParams) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Cosine and sine tables `cos(2 pi k x / N)`, `[k][x]`.
#[derive(Debug, Clone)]
struct Basis {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Basis {
    fn new(n: usize, k_max: usize) -> Self {
        let mut cos = vec![0.0; n * k_max];
        let mut sin = vec![0.0; n * k_max];
        for k in 0..k_max {
            for x in 0..n {
                // reduce k x mod N first to keep the angle small
                let a = 2.0 * PI * ((k * x) % n) as f64 / n as f64;
                cos[k * n + x] = a.cos();
                sin[k * n + x] = a.sin();
            }
        }
        Basis { cos, sin }
    }
}

/// Activations kept for the backward pass of one sample.
struct Tape {
    input: Vec<f64>,
    /// `h[l]` is the input of layer `l`; `h[n_layers]` feeds the projection.
    h: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    z: Vec<Vec<f64>>,
    /// Truncated spectra of each layer input, `[j][k]`.
    spec_re: Vec<Vec<f64>>,
    spec_im: Vec<Vec<f64>>,
    /// Projection pre-activations `[d][x]`.
    a1: Vec<f64>,
    out: Vec<f64>,
}

/// Forward/backward evaluator for one configuration.
#[derive(Debug, Clone)]
pub struct Fno {
    config: FnoConfig,
    layout: Layout,
    basis: Basis,
}

impl Fno {
    pub fn new(config: &FnoConfig) -> Result<Self> {
        config.validate()?;
        Ok(Fno {
            config: config.clone(),
            layout: Layout::new(config),
            basis: Basis::new(config.grid, config.k_max),
        })
    }

    pub fn config(&self) -> &FnoConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn check(&self, params: &FnoParams, input: &Field1D) -> Result<()> {
        if params.data.len() != self.layout.len {
            return Err(Error::Shape {
                expected: self.layout.len,
                got: params.data.len(),
            });
        }
        if input.len() != self.config.grid {
            return Err(Error::Shape {
                expected: self.config.grid,
                got: input.len(),
            });
        }
        Ok(())
    }

    fn input_channels(&self, input: &Field1D) -> Vec<f64> {
        let n = self.config.grid;
        let mut v = input.values.clone();
        if self.config.positional {
            v.extend((0..n).map(|x| x as f64 / n as f64));
        }
        v
    }

    fn run(&self, params: &FnoParams, input: &Field1D) -> Tape {
        let cfg = &self.config;
        let (n, w, km) = (cfg.grid, cfg.width, cfg.k_max);
        let p = &params.data;
        let lay = &self.layout;
        let inp = self.input_channels(input);
        let cin = cfg.in_channels();

        let mut h0 = vec![0.0; w * n];
        for c in 0..w {
            let b = p[lay.lift_bias.start + c];
            for x in 0..n {
                let mut acc = b;
                for i in 0..cin {
                    acc += p[lay.lift.start + c * cin + i] * inp[i * n + x];
                }
                h0[c * n + x] = acc;
            }
        }

        let mut hs = vec![h0];
        let mut zs = Vec::with_capacity(cfg.n_layers);
        let mut sres = Vec::with_capacity(cfg.n_layers);
        let mut sims = Vec::with_capacity(cfg.n_layers);
        for l in &lay.layers {
            let h = hs.last().unwrap();
            // truncated DFT of every channel
            let mut hre = vec![0.0; w * km];
            let mut him = vec![0.0; w * km];
            for j in 0..w {
                let row = &h[j * n..(j + 1) * n];
                for k in 0..km {
                    let (cs, sn) = (&self.basis.cos[k * n..(k + 1) * n], &self.basis.sin[k * n..(k + 1) * n]);
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for x in 0..n {
                        re += row[x] * cs[x];
                        im -= row[x] * sn[x];
                    }
                    hre[j * km + k] = re;
                    him[j * km + k] = im;
                }
            }
            let mut z = vec![0.0; w * n];
            for c in 0..w {
                // per-mode channel mixing, then the inverse transform
                let mut coef_c = vec![0.0; km];
                let mut coef_s = vec![0.0; km];
                for k in 0..km {
                    let mut yre = 0.0;
                    let mut yim = 0.0;
                    for j in 0..w {
                        let idx = (c * w + j) * km + k;
                        let (rr, ri) = (p[l.spectral_re.start + idx], p[l.spectral_im.start + idx]);
                        let (a, b) = (hre[j * km + k], him[j * km + k]);
                        yre += rr * a - ri * b;
                        yim += rr * b + ri * a;
                    }
                    let ck = if k == 0 { 1.0 } else { 2.0 } / n as f64;
                    coef_c[k] = ck * yre;
                    coef_s[k] = -ck * yim;
                }
                let zrow = &mut z[c * n..(c + 1) * n];
                let b = p[l.bias.start + c];
                zrow.iter_mut().for_each(|v| *v = b);
                for k in 0..km {
                    let (cs, sn) = (&self.basis.cos[k * n..(k + 1) * n], &self.basis.sin[k * n..(k + 1) * n]);
                    for x in 0..n {
                        zrow[x] += coef_c[k] * cs[x] + coef_s[k] * sn[x];
                    }
                }
                for j in 0..w {
                    let wt = p[l.pointwise.start + c * w + j];
                    if wt != 0.0 {
                        let hrow = &h[j * n..(j + 1) * n];
                        for x in 0..n {
                            zrow[x] += wt * hrow[x];
                        }
                    }
                }
            }
            let next: Vec<f64> = z.iter().map(|&v| cfg.activation.apply(v)).collect();
            zs.push(z);
            sres.push(hre);
            sims.push(him);
            hs.push(next);
        }

        let hl = hs.last().unwrap();
        let hid = cfg.hidden;
        let mut a1 = vec![0.0; hid * n];
        let mut out = vec![p[lay.proj2_bias.start]; n];
        for d in 0..hid {
            let b = p[lay.proj1_bias.start + d];
            let arow = &mut a1[d * n..(d + 1) * n];
            arow.iter_mut().for_each(|v| *v = b);
            for c in 0..w {
                let q = p[lay.proj1.start + d * w + c];
                let hrow = &hl[c * n..(c + 1) * n];
                for x in 0..n {
                    arow[x] += q * hrow[x];
                }
            }
            let q2 = p[lay.proj2.start + d];
            for x in 0..n {
                out[x] += q2 * cfg.activation.apply(arow[x]);
            }
        }
        Tape {
            input: inp,
            h: hs,
            z: zs,
            spec_re: sres,
            spec_im: sims,
            a1,
            out,
        }
    }

    pub fn forward(&self, params: &FnoParams, input: &Field1D) -> Result<Field1D> {
        self.check(params, input)?;
        Ok(Field1D {
            values: self.run(params, input).out,
        })
    }

    /// Accumulates `d loss / d params` into `grad` given `dout = d loss / d out`.
    fn backward(&self, params: &FnoParams, tape: &Tape, dout: &[f64], grad: &mut [f64]) {
        let cfg = &self.config;
        let (n, w, km, hid) = (cfg.grid, cfg.width, cfg.k_max, cfg.hidden);
        let p = &params.data;
        let lay = &self.layout;
        let act = cfg.activation;

        grad[lay.proj2_bias.start] += dout.iter().sum::<f64>();
        let hl = tape.h.last().unwrap();
        let mut dh = vec![0.0; w * n];
        for d in 0..hid {
            let arow = &tape.a1[d * n..(d + 1) * n];
            let q2 = p[lay.proj2.start + d];
            let mut g2 = 0.0;
            let mut da = vec![0.0; n];
            for x in 0..n {
                g2 += dout[x] * act.apply(arow[x]);
                da[x] = q2 * dout[x] * act.derivative(arow[x]);
            }
            grad[lay.proj2.start + d] += g2;
            grad[lay.proj1_bias.start + d] += da.iter().sum::<f64>();
            for c in 0..w {
                let hrow = &hl[c * n..(c + 1) * n];
                let q = p[lay.proj1.start + d * w + c];
                let mut g = 0.0;
                let dhrow = &mut dh[c * n..(c + 1) * n];
                for x in 0..n {
                    g += da[x] * hrow[x];
                    dhrow[x] += q * da[x];
                }
                grad[lay.proj1.start + d * w + c] += g;
            }
        }

        for (li, l) in lay.layers.iter().enumerate().rev() {
            let h = &tape.h[li];
            let z = &tape.z[li];
            let dz: Vec<f64> = dh.iter().zip(z).map(|(&g, &v)| g * act.derivative(v)).collect();
            let mut dprev = vec![0.0; w * n];
            // pointwise path and bias
            for c in 0..w {
                let dzrow = &dz[c * n..(c + 1) * n];
                grad[l.bias.start + c] += dzrow.iter().sum::<f64>();
                for j in 0..w {
                    let hrow = &h[j * n..(j + 1) * n];
                    let mut g = 0.0;
                    for x in 0..n {
                        g += dzrow[x] * hrow[x];
                    }
                    grad[l.pointwise.start + c * w + j] += g;
                    let wt = p[l.pointwise.start + c * w + j];
                    if wt != 0.0 {
                        let drow = &mut dprev[j * n..(j + 1) * n];
                        for x in 0..n {
                            drow[x] += wt * dzrow[x];
                        }
                    }
                }
            }
            // spectral path
            let (hre, him) = (&tape.spec_re[li], &tape.spec_im[li]);
            let mut dhre = vec![0.0; w * km];
            let mut dhim = vec![0.0; w * km];
            for c in 0..w {
                let dzrow = &dz[c * n..(c + 1) * n];
                for k in 0..km {
                    let (cs, sn) = (&self.basis.cos[k * n..(k + 1) * n], &self.basis.sin[k * n..(k + 1) * n]);
                    let ck = if k == 0 { 1.0 } else { 2.0 } / n as f64;
                    let mut gc = 0.0;
                    let mut gs = 0.0;
                    for x in 0..n {
                        gc += dzrow[x] * cs[x];
                        gs += dzrow[x] * sn[x];
                    }
                    let dyre = ck * gc;
                    let dyim = -ck * gs;
                    for j in 0..w {
                        let idx = (c * w + j) * km + k;
                        let (a, b) = (hre[j * km + k], him[j * km + k]);
                        let (rr, ri) = (p[l.spectral_re.start + idx], p[l.spectral_im.start + idx]);
                        grad[l.spectral_re.start + idx] += dyre * a + dyim * b;
                        grad[l.spectral_im.start + idx] += -dyre * b + dyim * a;
                        dhre[j * km + k] += dyre * rr + dyim * ri;
                        dhim[j * km + k] += -dyre * ri + dyim * rr;
                    }
                }
            }
            for j in 0..w {
                let drow = &mut dprev[j * n..(j + 1) * n];
                for k in 0..km {
                    let (cs, sn) = (&self.basis.cos[k * n..(k + 1) * n], &self.basis.sin[k * n..(k + 1) * n]);
                    let (a, b) = (dhre[j * km + k], dhim[j * km + k]);
                    for x in 0..n {
                        drow[x] += a * cs[x] - b * sn[x];
                    }
                }
            }
            dh = dprev;
        }

        let cin = cfg.in_channels();
        for c in 0..w {
            let drow = &dh[c * n..(c + 1) * n];
            grad[lay.lift_bias.start + c] += drow.iter().sum::<f64>();
            for i in 0..cin {
                let irow = &tape.input[i * n..(i + 1) * n];
                grad[lay.lift.start + c * cin + i] += drow.iter().zip(irow).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }

    /// Mean squared error over samples and grid points.
    pub fn loss(&self, params: &FnoParams, data: &[TurbulenceSample]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut total = 0.0;
        for s in data {
            self.check(params, &s.input)?;
            self.check(params, &s.target)?;
            let out = self.run(params, &s.input).out;
            total += out.iter().zip(&s.target.values).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        }
        Ok(total / (data.len() * self.config.grid) as f64)
    }

    /// Loss and its exact gradient.
    pub fn loss_and_gradient(&self, params: &FnoParams, data: &[TurbulenceSample]) -> Result<(f64, GradientVector)> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let scale = 1.0 / (data.len() * self.config.grid) as f64;
        let mut grad = GradientVector::zeros(self.layout.len);
        let mut total = 0.0;
        for s in data {
            self.check(params, &s.input)?;
            self.check(params, &s.target)?;
            let tape = self.run(params, &s.input);
            let dout: Vec<f64> = tape
                .out
                .iter()
                .zip(&s.target.values)
                .map(|(o, t)| {
                    total += (o - t) * (o - t);
                    2.0 * (o - t) * scale
                })
                .collect();
            self.backward(params, &tape, &dout, &mut grad.data);
        }
        Ok((total * scale, grad))
    }

    pub fn gradient(&self, params: &FnoParams, data: &[TurbulenceSample]) -> Result<GradientVector> {
        Ok(self.loss_and_gradient(params, data)?.1)
    }
}

pub fn forward(params: &FnoParams, input: &Field1D) -> Result<Field1D> {
    Fno::new(&params.config)?.forward(params, input)
}

pub fn loss(params: &FnoParams, data: &[TurbulenceSample]) -> Result<f64> {
    Fno::new(&params.config)?.loss(params, data)
}

pub fn gradient(params: &FnoParams, data: &[TurbulenceSample]) -> Result<GradientVector> {
    Fno::new(&params.config)?.gradient(params, data)
}

/// `params - lr * scale * grad`.
pub fn sgd_step(params: &FnoParams, grad: &GradientVector, lr: f64, scale: f64) -> Result<FnoParams> {
    let mut out = params.clone();
    sgd_step_in_place(&mut out.data, &grad.data, lr * scale)?;
    Ok(out)
}

/// `params -= step * grad` on raw vectors.
pub fn sgd_step_in_place(params: &mut [f64], grad: &[f64], step: f64) -> Result<()> {
    if params.len() != grad.len() {
        return Err(Error::Shape {
            expected: params.len(),
            got: grad.len(),
        });
    }
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= step * g;
    }
    Ok(())
}
