//! Layered spatial model: a PPP of GBSs, a PPP of cluster centers, a
//! truncated-Poisson number of corridors (lines) around every cluster center,
//! and a 1-D PPP of aircraft on every corridor, all restricted to a disc
//! centered at the origin.

use crate::error::{Error, Result};
use crate::params::{ModelParams, RadiusModel};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use core::ops::{Add, Sub};
#[allow(unused_imports)] // inherent methods shadow Float when std is linked
use num_traits::{Euclid, Float};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

const TAU: f64 = 2.0 * PI;

/// Planar position, m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        (self - other).norm_sq()
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

/// A corridor: the line at distance `r` from its cluster center `cp` whose
/// normal makes angle `theta` with the x-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Corridor {
    pub r: f64,
    pub theta: f64,
    pub cp: Point2,
}

impl Corridor {
    pub fn new(cp: Point2, r: f64, theta: f64) -> Self {
        Corridor {
            r,
            theta: Euclid::rem_euclid(&theta, &TAU),
            cp,
        }
    }

    /// Foot of the perpendicular from the cluster center.
    pub fn foot(&self) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        self.cp + Point2::new(self.r * c, self.r * s)
    }

    /// Unit direction of increasing offset `u`.
    pub fn direction(&self) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(s, -c)
    }

    /// Signed distance of the line from the origin along its normal,
    /// `x1 cos(theta) + x2 sin(theta) + r`.
    pub fn signed_offset(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        self.cp.x * c + self.cp.y * s + self.r
    }

    /// Offsets `u` (relative to [`Corridor::foot`]) at which the line enters
    /// and leaves the disc of radius `radius` around the origin.
    pub fn chord_offsets(&self, radius: f64) -> Option<(f64, f64)> {
        let d = self.signed_offset();
        let rad = radius * radius - d * d;
        if rad <= 0.0 {
            return None;
        }
        let half = rad.sqrt();
        let dir = self.direction();
        let foot = self.foot();
        let closest = -(foot.x * dir.x + foot.y * dir.y);
        Some((closest - half, closest + half))
    }
}

/// Signed offset `u` of an aircraft along its corridor, measured from the
/// foot of the perpendicular through the cluster center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AircraftOffset(pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aircraft {
    pub corridor: usize,
    pub offset: AircraftOffset,
    pub pos: Point2,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cluster {
    pub cp: Point2,
    pub corridors: Vec<Corridor>,
    pub aircraft: Vec<Aircraft>,
}

/// Identifies an aircraft as `(cluster index, index within the cluster)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AircraftId {
    pub cluster: usize,
    pub index: usize,
}

/// One sampled snapshot of the network.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkRealization {
    pub gbs: Vec<Point2>,
    pub clusters: Vec<Cluster>,
    pub disc_radius: f64,
    pub height: f64,
}

impl NetworkRealization {
    pub fn aircraft(&self) -> impl Iterator<Item = (AircraftId, &Aircraft)> + '_ {
        self.clusters.iter().enumerate().flat_map(|(ci, c)| {
            c.aircraft
                .iter()
                .enumerate()
                .map(move |(ai, a)| (AircraftId { cluster: ci, index: ai }, a))
        })
    }

    pub fn aircraft_count(&self) -> usize {
        self.clusters.iter().map(|c| c.aircraft.len()).sum()
    }

    pub fn corridor_count(&self) -> usize {
        self.clusters.iter().map(|c| c.corridors.len()).sum()
    }

    /// Index of the GBS nearest the origin (the typical GBS).
    pub fn typical_gbs(&self) -> Option<usize> {
        nearest(&self.gbs, Point2::ORIGIN)
    }

    /// Rotates every entity about the origin by `angle`.
    pub fn rotated(&self, angle: f64) -> NetworkRealization {
        NetworkRealization {
            gbs: self.gbs.iter().map(|p| p.rotated(angle)).collect(),
            clusters: self
                .clusters
                .iter()
                .map(|c| {
                    let cp = c.cp.rotated(angle);
                    Cluster {
                        cp,
                        corridors: c
                            .corridors
                            .iter()
                            .map(|k| Corridor::new(cp, k.r, k.theta + angle))
                            .collect(),
                        aircraft: c
                            .aircraft
                            .iter()
                            .map(|a| Aircraft {
                                pos: a.pos.rotated(angle),
                                ..*a
                            })
                            .collect(),
                    }
                })
                .collect(),
            disc_radius: self.disc_radius,
            height: self.height,
        }
    }
}

/// Index of the point of `points` nearest `target` (lowest index on ties).
pub fn nearest(points: &[Point2], target: Point2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = p.dist_sq(target);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn uniform_in_disc<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point2 {
    let rho = radius * rng.random::<f64>().sqrt();
    let phi = TAU * rng.random::<f64>();
    let (s, c) = phi.sin_cos();
    Point2::new(rho * c, rho * s)
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    // mean is finite and positive here
    let dist = Poisson::new(mean).expect("positive finite Poisson mean");
    dist.sample(rng) as usize
}

/// Homogeneous PPP of `density` (per m²) on the disc of radius `disc_radius`.
pub fn sample_ppp_disc<R: Rng + ?Sized>(
    density: f64,
    disc_radius: f64,
    rng: &mut R,
) -> Result<Vec<Point2>> {
    if !(density >= 0.0 && density.is_finite()) {
        return Err(Error::param("density", "must be finite and non-negative"));
    }
    if !(disc_radius > 0.0 && disc_radius.is_finite()) {
        return Err(Error::param("disc_radius", "must be positive"));
    }
    let n = poisson_count(density * PI * disc_radius * disc_radius, rng);
    Ok((0..n).map(|_| uniform_in_disc(disc_radius, rng)).collect())
}

/// Truncated Poisson law of the corridor count: mass proportional to
/// `(lambda_l - 1)^n / n!` on `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorCountLaw {
    mass: Vec<f64>,
}

impl CorridorCountLaw {
    pub fn new(lambda_l: f64, n_max: u32) -> Result<Self> {
        if !(lambda_l > 1.0 && lambda_l.is_finite()) {
            return Err(Error::param(
                "lambda_l",
                "must exceed 1 (corridor count rate is lambda_l - 1)",
            ));
        }
        let rate = lambda_l - 1.0;
        // Work with log-terms so large rates stay finite; the common factor
        // exp(-rate) cancels in the normalization.
        let logs: Vec<f64> = (0..=n_max)
            .scan(0.0, |acc, n| {
                if n > 0 {
                    *acc += rate.ln() - (n as f64).ln();
                }
                Some(*acc)
            })
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut mass: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let omega: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= omega);
        Ok(CorridorCountLaw { mass })
    }

    /// `P(n | n <= N)` for `n` in `0..=N`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Probability generating function `sum_n P(n) z^n` by Horner's rule.
    pub fn pgf(&self, z: f64) -> f64 {
        self.mass.iter().rev().fold(0.0, |acc, &p| acc * z + p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for (n, p) in self.mass.iter().enumerate() {
            cum += p;
            if u < cum {
                return n as u32;
            }
        }
        (self.mass.len() - 1) as u32
    }
}

pub fn sample_corridor_count<R: Rng + ?Sized>(lambda_l: f64, n_max: u32, rng: &mut R) -> Result<u32> {
    Ok(CorridorCountLaw::new(lambda_l, n_max)?.sample(rng))
}

pub fn sample_radius<R: Rng + ?Sized>(model: &RadiusModel, rng: &mut R) -> f64 {
    model.sample(rng)
}

/// Aircraft position `cp + (u sin(theta) + r cos(theta), -u cos(theta) + r sin(theta))`.
pub fn place_aircraft(cp: Point2, corridor: &Corridor, u: AircraftOffset) -> Point2 {
    let (s, c) = corridor.theta.sin_cos();
    let r = corridor.r;
    cp + Point2::new(u.0 * s + r * c, -u.0 * c + r * s)
}

/// Same placement written quadrant by quadrant: first recover the foot of the
/// perpendicular `z` from the cluster center, then step `u` along the line.
pub fn place_aircraft_by_quadrant(cp: Point2, corridor: &Corridor, u: AircraftOffset) -> Point2 {
    let th = Euclid::rem_euclid(&corridor.theta, &TAU);
    let r = corridor.r;
    let u = u.0;
    let three_half = 3.0 * FRAC_PI_2;
    if th < FRAC_PI_2 {
        // cp = (z1 - r cos th, z2 - r sin th)
        let z = Point2::new(cp.x + r * th.cos(), cp.y + r * th.sin());
        Point2::new(z.x + u * (FRAC_PI_2 - th).cos(), z.y - u * (FRAC_PI_2 - th).sin())
    } else if th < PI {
        // cp = (z1 + r sin(th - pi/2), z2 - r cos(th - pi/2))
        let a = th - FRAC_PI_2;
        let z = Point2::new(cp.x - r * a.sin(), cp.y + r * a.cos());
        Point2::new(z.x + u * a.cos(), z.y + u * a.sin())
    } else if th < three_half {
        // cp = (z1 + r sin(3pi/2 - th), z2 + r cos(3pi/2 - th))
        let a = three_half - th;
        let z = Point2::new(cp.x - r * a.sin(), cp.y - r * a.cos());
        Point2::new(z.x - u * a.cos(), z.y + u * a.sin())
    } else {
        // cp = (z1 - r cos(2pi - th), z2 + r sin(2pi - th))
        let b = TAU - th;
        let a = th - three_half;
        let z = Point2::new(cp.x + r * b.cos(), cp.y - r * b.sin());
        Point2::new(z.x - u * a.cos(), z.y - u * a.sin())
    }
}

/// Length of the part of `corridor` inside the disc of radius `disc_radius`
/// centered at the origin: `2 sqrt(R^2 - d^2)` with
/// `d = x1 cos(theta) + x2 sin(theta) + r`, or 0 when the line misses.
pub fn chord_length(cp: Point2, corridor: &Corridor, disc_radius: f64) -> f64 {
    let (s, c) = corridor.theta.sin_cos();
    let d = cp.x * c + cp.y * s + corridor.r;
    let rad = disc_radius * disc_radius - d * d;
    if rad > 0.0 {
        2.0 * rad.sqrt()
    } else {
        0.0
    }
}

/// Samples one snapshot: GBSs, cluster centers, corridors and aircraft, all
/// inside the disc of radius `params.sampling_radius()`.
pub fn sample_realization<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<NetworkRealization> {
    params.validate()?;
    let radius = params.sampling_radius();
    let count_law = CorridorCountLaw::new(params.lambda_l, params.n_max)?;
    let gbs = sample_ppp_disc(params.lambda_b, radius, rng)?;
    let centers = sample_ppp_disc(params.lambda_c, radius, rng)?;
    let clusters = centers
        .into_iter()
        .map(|cp| {
            let n = count_law.sample(rng);
            let mut corridors = Vec::with_capacity(n as usize);
            let mut aircraft = Vec::new();
            for ci in 0..n as usize {
                let r = params.radius_model.sample(rng);
                let theta = TAU * rng.random::<f64>();
                let corridor = Corridor::new(cp, r, theta);
                if let Some((lo, hi)) = corridor.chord_offsets(radius) {
                    let k = poisson_count(params.lambda_t * (hi - lo), rng);
                    for _ in 0..k {
                        let u = AircraftOffset(lo + (hi - lo) * rng.random::<f64>());
                        aircraft.push(Aircraft {
                            corridor: ci,
                            offset: u,
                            pos: place_aircraft(cp, &corridor, u),
                        });
                    }
                }
                corridors.push(corridor);
            }
            Cluster {
                cp,
                corridors,
                aircraft,
            }
        })
        .collect();
    Ok(NetworkRealization {
        gbs,
        clusters,
        disc_radius: radius,
        height: params.height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use crate::units;
    use proptest::prelude::*;
    use rand::Rng;

    fn rng(i: u64) -> crate::rng::SimRng {
        substream(11, Domain::Realization, i)
    }

    #[test]
    fn zero_density_ppp_is_empty() {
        let pts = sample_ppp_disc(0.0, units::km(20.0), &mut rng(0)).unwrap();
        assert!(pts.is_empty());
        assert!(sample_ppp_disc(-1.0, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn ppp_mean_count_matches_intensity() {
        let r = units::km(20.0);
        for (density_km2, tol) in [(1.0, 0.01), (0.001, 0.03)] {
            let density = units::per_km2(density_km2);
            let expected = density * PI * r * r;
            let draws = 10_000;
            let mut g = rng(1);
            let counts: Vec<f64> = (0..draws)
                .map(|_| sample_ppp_disc(density, r, &mut g).unwrap().len() as f64)
                .collect();
            let mean = counts.iter().sum::<f64>() / draws as f64;
            assert!((mean - expected).abs() / expected < tol, "{mean} vs {expected}");
            if expected >= 50.0 {
                let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
                let dispersion = var / mean;
                assert!((0.9..=1.1).contains(&dispersion), "dispersion {dispersion}");
            }
        }
    }

    #[test]
    fn ppp_points_inside_disc() {
        let pts = sample_ppp_disc(units::per_km2(2.0), 5000.0, &mut rng(2)).unwrap();
        assert!(pts.iter().all(|p| p.norm() <= 5000.0));
    }

    #[test]
    fn truncated_poisson_mass() {
        let law = CorridorCountLaw::new(5.0, 10).unwrap();
        let total: f64 = law.mass().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // direct evaluation of (rate^n e^-rate / n!) / omega
        let rate = 4.0f64;
        let mut direct = Vec::new();
        let mut fact = 1.0;
        for n in 0..=10 {
            if n > 0 {
                fact *= n as f64;
            }
            direct.push(rate.powi(n) * (-rate).exp() / fact);
        }
        let omega: f64 = direct.iter().sum();
        for (a, b) in law.mass().iter().zip(&direct) {
            assert!((a - b / omega).abs() < 1e-14);
        }
        assert!(CorridorCountLaw::new(1.0, 10).is_err());
        assert!(CorridorCountLaw::new(0.5, 10).is_err());
    }

    #[test]
    fn corridor_count_degenerate_cases() {
        let mut g = rng(3);
        for _ in 0..1000 {
            assert_eq!(sample_corridor_count(5.0, 0, &mut g).unwrap(), 0);
            assert_eq!(sample_corridor_count(1.0 + 1e-12, 10, &mut g).unwrap(), 0);
        }
    }

    #[test]
    fn corridor_count_chi_square() {
        let law = CorridorCountLaw::new(5.0, 10).unwrap();
        let draws = 100_000;
        let mut hist = [0usize; 11];
        let mut g = rng(4);
        for _ in 0..draws {
            hist[law.sample(&mut g) as usize] += 1;
        }
        // pool bins with expected count < 5
        let mut chi2 = 0.0;
        let mut dof = 0;
        let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
        for (n, &obs) in hist.iter().enumerate() {
            let exp = law.mass()[n] * draws as f64;
            if exp < 5.0 {
                pooled_obs += obs as f64;
                pooled_exp += exp;
            } else {
                chi2 += (obs as f64 - exp).powi(2) / exp;
                dof += 1;
            }
        }
        if pooled_exp > 0.0 {
            chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp.max(1e-9);
            dof += 1;
        }
        // 99.9% quantile of chi-square with <= 11 dof is below 32
        assert!(chi2 < 32.0, "chi2 = {chi2} with {dof} bins");
        let mean = hist.iter().enumerate().map(|(n, &c)| n as f64 * c as f64).sum::<f64>() / draws as f64;
        assert!((mean - law.mean()).abs() < 0.02);
    }

    #[test]
    fn radius_samples() {
        let mut g = rng(5);
        let uni = RadiusModel::Uniform { r_hat: 2000.0 };
        let xs: Vec<f64> = (0..200_000).map(|_| sample_radius(&uni, &mut g)).collect();
        assert!(xs.iter().all(|&x| (0.0..=2000.0).contains(&x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 1000.0).abs() < 5.0);

        let gauss = RadiusModel::TruncatedGaussian { sigma: 1.0 };
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_radius(&gauss, &mut g)).sum::<f64>() / n as f64;
        let half_normal_mean = (2.0 / PI).sqrt();
        assert!((half_normal_mean - 0.797_884_560_802_865_4).abs() < 1e-15);
        assert!((mean - half_normal_mean).abs() < 2e-3, "{mean}");
    }

    #[test]
    fn placement_edge_cases() {
        let cp = Point2::new(3.0, -4.0);
        for th in [0.0, 1.0, 2.5, 4.0, 5.9] {
            let k = Corridor::new(cp, 0.0, th);
            assert_eq!(place_aircraft(cp, &k, AircraftOffset(0.0)), cp);
        }
        let k = Corridor::new(cp, 1.0, 0.0);
        let p = place_aircraft(cp, &k, AircraftOffset(0.0));
        assert!((p.x - 4.0).abs() < 1e-15 && (p.y + 4.0).abs() < 1e-15);
    }

    #[test]
    fn chord_length_cases() {
        let r = units::km(20.0);
        for th in [0.0, 0.7, 3.0] {
            let k = Corridor::new(Point2::ORIGIN, 0.0, th);
            assert!((chord_length(Point2::ORIGIN, &k, r) - 2.0 * r).abs() < 1e-9);
        }
        let k = Corridor::new(Point2::ORIGIN, r, 0.0);
        assert_eq!(chord_length(Point2::ORIGIN, &k, r), 0.0);
    }

    /// Chord by intersecting the parametric line with the circle: solve
    /// `|z + u t|^2 = R^2` for `u` directly.
    fn chord_by_quadratic(k: &Corridor, radius: f64) -> f64 {
        let z = k.foot();
        let t = k.direction();
        let b = 2.0 * (z.x * t.x + z.y * t.y);
        let c = z.norm_sq() - radius * radius;
        let disc = b * b - 4.0 * c;
        if disc <= 0.0 {
            0.0
        } else {
            let u1 = (-b - disc.sqrt()) / 2.0;
            let u2 = (-b + disc.sqrt()) / 2.0;
            let p1 = z + Point2::new(u1 * t.x, u1 * t.y);
            let p2 = z + Point2::new(u2 * t.x, u2 * t.y);
            p1.dist_sq(p2).sqrt()
        }
    }

    proptest! {
        #[test]
        fn quadrant_form_matches_closed_form(
            x in -2e4f64..2e4, y in -2e4f64..2e4, r in 0.0f64..5e3,
            theta in 0.0f64..(2.0 * PI), u in -3e4f64..3e4,
        ) {
            let cp = Point2::new(x, y);
            let k = Corridor::new(cp, r, theta);
            let a = place_aircraft(cp, &k, AircraftOffset(u));
            let b = place_aircraft_by_quadrant(cp, &k, AircraftOffset(u));
            let scale = (a - cp).norm().max(1.0);
            prop_assert!((a - b).norm() <= 1e-9 * scale, "{:?} vs {:?}", a, b);
            // |y|^2 = u^2 + r^2
            let d2 = (a - cp).norm_sq();
            prop_assert!((d2 - (u * u + r * r)).abs() <= 1e-9 * (u * u + r * r).max(1.0));
        }

        #[test]
        fn chord_matches_quadratic_oracle(
            x in -2e4f64..2e4, y in -2e4f64..2e4, r in 0.0f64..5e3, theta in 0.0f64..(2.0 * PI),
        ) {
            let cp = Point2::new(x, y);
            let k = Corridor::new(cp, r, theta);
            let a = chord_length(cp, &k, 2e4);
            let b = chord_by_quadratic(&k, 2e4);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0) + 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn realization_invariants() {
        let params = ModelParams::reference_uniform();
        let mut g = rng(6);
        for _ in 0..50 {
            let real = sample_realization(&params, &mut g).unwrap();
            for c in &real.clusters {
                assert!(c.cp.norm() <= real.disc_radius);
                for a in &c.aircraft {
                    let k = &c.corridors[a.corridor];
                    assert_eq!(k.cp, c.cp);
                    assert!(a.pos.norm() <= real.disc_radius * (1.0 + 1e-12));
                    let again = place_aircraft(c.cp, k, a.offset);
                    assert!((again - a.pos).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn empty_realizations() {
        let mut p = ModelParams::reference_gaussian();
        p.lambda_t = 0.0;
        let real = sample_realization(&p, &mut rng(7)).unwrap();
        assert_eq!(real.aircraft_count(), 0);
        let mut p = ModelParams::reference_gaussian();
        p.lambda_c = 0.0;
        let real = sample_realization(&p, &mut rng(8)).unwrap();
        assert!(real.clusters.is_empty());
        assert_eq!(real.corridor_count(), 0);
        assert_eq!(real.aircraft_count(), 0);
    }

    #[test]
    fn rotation_preserves_geometry() {
        let params = ModelParams::reference_gaussian();
        let mut g = rng(9);
        for i in 0..100 {
            let real = sample_realization(&params, &mut g).unwrap();
            let angle = 0.37 * i as f64;
            let rot = real.rotated(angle);
            for (c, rc) in real.clusters.iter().zip(&rot.clusters) {
                for (k, rk) in c.corridors.iter().zip(&rc.corridors) {
                    let a = chord_length(c.cp, k, real.disc_radius);
                    let b = chord_length(rc.cp, rk, real.disc_radius);
                    assert!((a - b).abs() <= 1e-6 * a.max(1.0));
                }
            }
            let pts: Vec<Point2> = real.aircraft().map(|(_, a)| a.pos).collect();
            let rpts: Vec<Point2> = rot.aircraft().map(|(_, a)| a.pos).collect();
            for i in 0..pts.len().min(20) {
                for j in 0..pts.len().min(20) {
                    let a = pts[i].dist_sq(pts[j]).sqrt();
                    let b = rpts[i].dist_sq(rpts[j]).sqrt();
                    assert!((a - b).abs() <= 1e-6 * a.max(1.0));
                }
                if let Some(&g0) = real.gbs.first() {
                    let a = pts[i].dist_sq(g0).sqrt();
                    let b = rpts[i].dist_sq(g0.rotated(angle)).sqrt();
                    assert!((a - b).abs() <= 1e-6 * a.max(1.0));
                }
            }
        }
    }

    #[test]
    fn mean_aircraft_count_factorizes() {
        // E[total aircraft] = lambda_c pi R^2 * E[n] * lambda_t * E[chord], with
        // E[chord] estimated independently from (cp, r, theta) draws.
        let params = ModelParams::reference_uniform();
        let law = CorridorCountLaw::new(params.lambda_l, params.n_max).unwrap();
        let r = params.disc_radius;
        let mut g = rng(10);
        let draws = 400_000;
        let mut chord = 0.0;
        for _ in 0..draws {
            let cp = uniform_in_disc(r, &mut g);
            let k = Corridor::new(cp, params.radius_model.sample(&mut g), TAU * g.random::<f64>());
            chord += chord_length(cp, &k, r);
        }
        chord /= draws as f64;
        let expected = params.lambda_c * PI * r * r * law.mean() * params.lambda_t * chord;
        let trials = 10_000;
        let mut total = 0usize;
        for _ in 0..trials {
            total += sample_realization(&params, &mut g).unwrap().aircraft_count();
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - expected).abs() / expected < 0.03, "{mean} vs {expected}");
    }
}
