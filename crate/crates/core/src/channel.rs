//! Nakagami-m fading, path loss and the SIR of the typical link.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::pointproc::{AircraftId, NetworkRealization, Point2};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Channel power gain of one transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw(pub f64);

/// Nakagami-m power gain sampler: Gamma with shape `m` and scale `1/m`.
#[derive(Debug, Clone, Copy)]
pub struct Fading {
    dist: Gamma<f64>,
}

impl Fading {
    pub fn new(m: u32) -> Result<Self> {
        if m < 1 {
            return Err(Error::param("m", "Nakagami shape must be at least 1"));
        }
        let dist = Gamma::new(m as f64, 1.0 / m as f64)
            .map_err(|_| Error::param("m", "invalid Gamma parameters"))?;
        Ok(Fading { dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        ChannelDraw(self.dist.sample(rng))
    }
}

pub fn sample_gain<R: Rng + ?Sized>(m: u32, rng: &mut R) -> Result<ChannelDraw> {
    Ok(Fading::new(m)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Transmit power, W.
    pub p: f64,
    /// Corridor height, m.
    pub h: f64,
    pub alpha: f64,
    /// Planar distance between aircraft and GBS, m.
    pub beta: f64,
}

impl LinkBudget {
    pub fn new(params: &ModelParams, beta: f64) -> Self {
        LinkBudget {
            p: params.power,
            h: params.height,
            alpha: params.alpha,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) {
            return Err(Error::param("p", "must be positive"));
        }
        if !(self.h > 0.0) {
            return Err(Error::param("h", "must be positive"));
        }
        if !(self.alpha > 2.0) {
            return Err(Error::param("alpha", "must exceed 2"));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::param("beta", "must be non-negative"));
        }
        Ok(())
    }
}

/// `p g (h^2 + beta^2)^(-alpha/2)`, W.
pub fn received_power(link: &LinkBudget, g: ChannelDraw) -> f64 {
    link.p * g.0 * path_gain(link.h * link.h + link.beta * link.beta, link.alpha)
}

/// `(d^2)^(-alpha/2)` for a squared 3-D distance.
#[inline]
pub fn path_gain(dist_sq: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        1.0 / (dist_sq * dist_sq)
    } else {
        dist_sq.powf(-0.5 * alpha)
    }
}

/// Aggregate interference at ground point `at` from every aircraft except
/// `exclude`, each with a fresh gain. Gains are drawn in realization order.
pub fn interference_at<R: Rng + ?Sized>(
    real: &NetworkRealization,
    at: Point2,
    exclude: Option<AircraftId>,
    params: &ModelParams,
    fading: &Fading,
    rng: &mut R,
) -> f64 {
    let h2 = params.height * params.height;
    let mut total = 0.0;
    for (id, a) in real.aircraft() {
        if Some(id) == exclude {
            continue;
        }
        let g = fading.sample(rng).0;
        total += params.power * g * path_gain(a.pos.dist_sq(at) + h2, params.alpha);
    }
    total
}

/// Interference at a GBS at the origin.
pub fn interference_at_origin<R: Rng + ?Sized>(
    real: &NetworkRealization,
    params: &ModelParams,
    exclude: Option<AircraftId>,
    rng: &mut R,
) -> Result<f64> {
    let fading = Fading::new(params.m)?;
    Ok(interference_at(real, Point2::ORIGIN, exclude, params, &fading, rng))
}

/// Uniform bucket grid over GBS positions for nearest-neighbor association.
#[derive(Debug, Clone)]
pub struct GbsIndex<'a> {
    points: &'a [Point2],
    lo: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> GbsIndex<'a> {
    pub fn new(points: &'a [Point2]) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if points.is_empty() {
            lo = Point2::ORIGIN;
            hi = Point2::ORIGIN;
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
        // about two points per cell
        let per_side = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let cell = span / per_side as f64;
        let nx = (((hi.x - lo.x) / cell) as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell) as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::cell_of(lo, cell, nx, ny, *p);
            buckets[cy * nx + cx].push(i as u32);
        }
        GbsIndex {
            points,
            lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(lo: Point2, cell: f64, nx: usize, ny: usize, p: Point2) -> (usize, usize) {
        let cx = ((p.x - lo.x) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let cy = ((p.y - lo.y) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (cx, cy)
    }

    pub fn points(&self) -> &'a [Point2] {
        self.points
    }

    /// Nearest GBS to `q`; ties go to the lowest index.
    pub fn nearest(&self, q: Point2) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let (cx, cy) = Self::cell_of(self.lo, self.cell, self.nx, self.ny, q);
        // distance from q to its (clamped) cell, nonzero when q is off-grid
        let bx0 = self.lo.x + cx as f64 * self.cell;
        let by0 = self.lo.y + cy as f64 * self.cell;
        let ox = (bx0 - q.x).max(q.x - bx0 - self.cell).max(0.0);
        let oy = (by0 - q.y).max(q.y - by0 - self.cell).max(0.0);
        let off = (ox * ox + oy * oy).sqrt();

        let mut best: Option<(f64, usize)> = None;
        let max_ring = self.nx.max(self.ny);
        for k in 0..=max_ring {
            let k_i = k as isize;
            for dy in -k_i..=k_i {
                let y = cy as isize + dy;
                if y < 0 || y >= self.ny as isize {
                    continue;
                }
                let step = if dy.abs() == k_i { 1 } else { (2 * k_i).max(1) };
                let mut dx = -k_i;
                while dx <= k_i {
                    let x = cx as isize + dx;
                    if x >= 0 && x < self.nx as isize {
                        for &i in &self.buckets[y as usize * self.nx + x as usize] {
                            let i = i as usize;
                            let d = self.points[i].dist_sq(q);
                            let better = match best {
                                None => true,
                                Some((bd, bi)) => d < bd || (d == bd && i < bi),
                            };
                            if better {
                                best = Some((d, i));
                            }
                        }
                    }
                    dx += step;
                }
            }
            if let Some((bd, _)) = best {
                let reach = k as f64 * self.cell - off;
                if reach > 0.0 && bd < reach * reach {
                    break;
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Aircraft whose nearest GBS is `gbs`.
pub fn associated_aircraft(real: &NetworkRealization, index: &GbsIndex<'_>, gbs: usize) -> Vec<AircraftId> {
    real.aircraft()
        .filter(|(_, a)| index.nearest(a.pos) == Some(gbs))
        .map(|(id, _)| id)
        .collect()
}

/// How the serving aircraft of the typical GBS is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ServingRule {
    /// A tagged aircraft is added at the origin and served by its nearest
    /// GBS, which becomes the typical GBS. The link distance then follows the
    /// nearest-GBS law, and the interference at the typical GBS comes from
    /// every corridor aircraft of the realization.
    #[default]
    TaggedAtOrigin,
    /// The typical GBS is the one nearest the origin and serves the nearest
    /// of the aircraft associated with it; every other aircraft interferes.
    NearestAssociated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalLink {
    /// Planar link distance, m.
    pub beta: f64,
    pub signal: f64,
    pub interference: f64,
    /// `signal / interference`; infinite without interferers.
    pub sir: f64,
}

/// SIR of the typical link under `rule`, with fresh fading on every link.
pub fn sir_of_typical_link<R: Rng + ?Sized>(
    real: &NetworkRealization,
    params: &ModelParams,
    rule: ServingRule,
    rng: &mut R,
) -> Result<TypicalLink> {
    let fading = Fading::new(params.m)?;
    let typical = real.typical_gbs().ok_or(Error::NoServingLink)?;
    let at = real.gbs[typical];
    let (beta, exclude) = match rule {
        ServingRule::TaggedAtOrigin => (at.norm(), None),
        ServingRule::NearestAssociated => {
            let index = GbsIndex::new(&real.gbs);
            let mut serving: Option<(f64, AircraftId)> = None;
            for (id, a) in real.aircraft() {
                if index.nearest(a.pos) != Some(typical) {
                    continue;
                }
                let d = a.pos.dist_sq(at);
                if serving.map_or(true, |(bd, _)| d < bd) {
                    serving = Some((d, id));
                }
            }
            let (d2, id) = serving.ok_or(Error::NoServingLink)?;
            (d2.sqrt(), Some(id))
        }
    };
    let signal = received_power(&LinkBudget::new(params, beta), fading.sample(rng));
    let interference = interference_at(real, at, exclude, params, &fading, rng);
    let sir = if interference > 0.0 {
        signal / interference
    } else {
        f64::INFINITY
    };
    Ok(TypicalLink {
        beta,
        signal,
        interference,
        sir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::{nearest, sample_realization, Aircraft, AircraftOffset, Cluster, Corridor};
    use crate::rng::{substream, Domain};
    use proptest::prelude::*;

    fn rng(i: u64) -> crate::rng::SimRng {
        substream(5, Domain::Connectivity, i)
    }

    #[test]
    fn gamma_gain_moments() {
        let n = 1_000_000;
        for m in 1..=4u32 {
            let f = Fading::new(m).unwrap();
            let mut g = rng(m as u64);
            let xs: Vec<f64> = (0..n).map(|_| f.sample(&mut g).0).collect();
            assert!(xs.iter().all(|&x| x > 0.0));
            let mean = xs.iter().sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 0.005, "m={m}: {mean}");
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            assert!((var - 1.0 / m as f64).abs() < 0.01, "m={m}: {var}");
        }
        assert!(sample_gain(0, &mut rng(0)).is_err());
    }

    #[test]
    fn received_power_examples() {
        let link = LinkBudget {
            p: 1.0,
            h: 152.4,
            alpha: 4.0,
            beta: 0.0,
        };
        let expected = 1.0 / (152.4f64 * 152.4 * 152.4 * 152.4);
        assert!((received_power(&link, ChannelDraw(1.0)) - expected).abs() < 1e-12 * expected);
        assert!((expected - 1.853e-9).abs() < 1e-12);
        assert_eq!(received_power(&link, ChannelDraw(0.0)), 0.0);
        let doubled = LinkBudget { p: 2.0, ..link };
        let g = ChannelDraw(0.37);
        assert!((received_power(&doubled, g) - 2.0 * received_power(&link, g)).abs() < 1e-24);
        let odd = LinkBudget { alpha: 3.5, beta: 80.0, ..link };
        let direct = (152.4f64 * 152.4 + 6400.0).powf(-1.75);
        assert!((received_power(&odd, ChannelDraw(1.0)) - direct).abs() < 1e-12 * direct);
    }

    fn single(pos: Point2) -> NetworkRealization {
        NetworkRealization {
            gbs: vec![Point2::ORIGIN],
            clusters: vec![Cluster {
                cp: pos,
                corridors: vec![Corridor::new(pos, 0.0, 0.0)],
                aircraft: vec![Aircraft {
                    corridor: 0,
                    offset: AircraftOffset(0.0),
                    pos,
                }],
            }],
            disc_radius: 20e3,
            height: 152.4,
        }
    }

    #[test]
    fn interference_trivial_cases() {
        let mut p = ModelParams::reference_gaussian();
        let mut empty = single(Point2::ORIGIN);
        empty.clusters[0].aircraft.clear();
        assert_eq!(interference_at_origin(&empty, &p, None, &mut rng(1)).unwrap(), 0.0);

        // one interferer at distance d; m large makes the gain nearly 1
        p.m = 1;
        let d = 1000.0;
        let real = single(Point2::new(d, 0.0));
        let fading = Fading::new(1).unwrap();
        let mut a = rng(2);
        let mut b = rng(2);
        let i = interference_at(&real, Point2::ORIGIN, None, &p, &fading, &mut a);
        let g = fading.sample(&mut b).0;
        let expected = p.power * g * (d * d + p.height * p.height).powf(-2.0);
        assert!((i - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn interference_matches_reverse_summation() {
        let p = ModelParams::reference_uniform();
        let fading = Fading::new(p.m).unwrap();
        for t in 0..20 {
            let real = sample_realization(&p, &mut rng(100 + t)).unwrap();
            let at = Point2::new(300.0, -200.0);
            let i = interference_at(&real, at, None, &p, &fading, &mut rng(200 + t));
            let mut g = rng(200 + t);
            let gains: Vec<f64> = (0..real.aircraft_count()).map(|_| fading.sample(&mut g).0).collect();
            let pos: Vec<Point2> = real.aircraft().map(|(_, a)| a.pos).collect();
            let mut oracle = 0.0;
            for k in (0..pos.len()).rev() {
                let dx = pos[k].x - at.x;
                let dy = pos[k].y - at.y;
                let d2 = dx * dx + dy * dy + p.height * p.height;
                oracle += p.power * gains[k] / (d2 * d2);
            }
            assert!((i - oracle).abs() <= 1e-12 * oracle.max(1e-300), "{i} vs {oracle}");
        }
    }

    #[test]
    fn adding_an_aircraft_never_decreases_interference() {
        let p = ModelParams::reference_gaussian();
        let fading = Fading::new(p.m).unwrap();
        for t in 0..30 {
            let mut real = sample_realization(&p, &mut rng(300 + t)).unwrap();
            let before = interference_at(&real, Point2::ORIGIN, None, &p, &fading, &mut rng(400 + t));
            let cp = Point2::new(500.0, 500.0);
            real.clusters.push(Cluster {
                cp,
                corridors: vec![Corridor::new(cp, 0.0, 1.0)],
                aircraft: vec![Aircraft {
                    corridor: 0,
                    offset: AircraftOffset(0.0),
                    pos: cp,
                }],
            });
            let after = interference_at(&real, Point2::ORIGIN, None, &p, &fading, &mut rng(400 + t));
            assert!(after >= before);
        }
    }

    #[test]
    fn lone_link_has_infinite_sir() {
        let p = ModelParams::reference_gaussian();
        let mut real = single(Point2::new(200.0, 0.0));
        real.gbs = vec![Point2::new(100.0, 0.0)];
        let link = sir_of_typical_link(&real, &p, ServingRule::NearestAssociated, &mut rng(3)).unwrap();
        assert!(link.sir.is_infinite());
        assert!((link.beta - 100.0).abs() < 1e-9);
        assert!(1.0e6 <= link.sir);
    }

    #[test]
    fn missing_link_is_reported() {
        let p = ModelParams::reference_gaussian();
        let mut real = single(Point2::new(5000.0, 0.0));
        real.gbs = vec![Point2::new(0.0, 10.0), Point2::new(5000.0, 10.0)];
        assert_eq!(
            sir_of_typical_link(&real, &p, ServingRule::NearestAssociated, &mut rng(4)),
            Err(Error::NoServingLink)
        );
        real.gbs.clear();
        assert_eq!(
            sir_of_typical_link(&real, &p, ServingRule::TaggedAtOrigin, &mut rng(4)),
            Err(Error::NoServingLink)
        );
    }

    #[test]
    fn symmetric_layout_gives_symmetric_links() {
        // two GBSs mirrored through the origin, each with one aircraft at the
        // same offset: the two links have identical budgets
        let p = ModelParams::reference_gaussian();
        let a = Point2::new(-1000.0, 0.0);
        let b = Point2::new(1000.0, 0.0);
        let mk = |pos: Point2| Cluster {
            cp: pos,
            corridors: vec![Corridor::new(pos, 0.0, 0.0)],
            aircraft: vec![Aircraft {
                corridor: 0,
                offset: AircraftOffset(0.0),
                pos,
            }],
        };
        let real = NetworkRealization {
            gbs: vec![a + Point2::new(0.0, 50.0), b + Point2::new(0.0, 50.0)],
            clusters: vec![mk(a), mk(b)],
            disc_radius: 20e3,
            height: p.height,
        };
        let mirrored = real.rotated(core::f64::consts::PI);
        let x = sir_of_typical_link(&real, &p, ServingRule::NearestAssociated, &mut rng(5)).unwrap();
        let y = sir_of_typical_link(&mirrored, &p, ServingRule::NearestAssociated, &mut rng(5)).unwrap();
        assert!((x.beta - y.beta).abs() < 1e-9);
        assert!((x.sir - y.sir).abs() <= 1e-9 * x.sir);
    }

    #[test]
    fn sir_is_scale_free_in_power() {
        let p = ModelParams::reference_gaussian();
        let mut q = p.clone();
        q.power *= 37.0;
        for t in 0..20 {
            let real = sample_realization(&p, &mut rng(500 + t)).unwrap();
            for rule in [ServingRule::TaggedAtOrigin, ServingRule::NearestAssociated] {
                let a = sir_of_typical_link(&real, &p, rule, &mut rng(600 + t));
                let b = sir_of_typical_link(&real, &q, rule, &mut rng(600 + t));
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        if a.sir.is_finite() {
                            assert!((a.sir - b.sir).abs() <= 1e-12 * a.sir);
                        } else {
                            assert!(b.sir.is_infinite());
                        }
                    }
                    (Err(x), Err(y)) => assert_eq!(x, y),
                    _ => panic!("rules disagree"),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn grid_nearest_matches_brute_force(
            pts in proptest::collection::vec((-2e4f64..2e4, -2e4f64..2e4), 0..200),
            qs in proptest::collection::vec((-2.5e4f64..2.5e4, -2.5e4f64..2.5e4), 1..30),
        ) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            let index = GbsIndex::new(&pts);
            for (x, y) in qs {
                let q = Point2::new(x, y);
                let a = index.nearest(q);
                let b = nearest(&pts, q);
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert_eq!(pts[a].dist_sq(q), pts[b].dist_sq(q)),
                    (None, None) => {}
                    _ => prop_assert!(false, "index and brute force disagree"),
                }
            }
        }
    }
}
