//! Measured geodesic laminations with finitely many leaves.
//!
//! Geodesics of the Klein model are straight chords, so transverse measures
//! reduce to segment–chord crossing tests. Arcs are open: an arc ending on a
//! leaf does not count that leaf.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use robust::{orient2d, Coord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::{EnvelopePair, Side, EPS_BEND};
use crate::mink::{normalize_angle, CirclePoint, GeometryError, KleinPoint, LinearIsometry, MinkVec, Vec2};

/// Minimal angular separation of the endpoints of a geodesic.
pub const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaminationError {
    #[error("geodesic endpoints {0} and {1} are not distinct")]
    DegenerateGeodesic(f64, f64),
    #[error("leaf weight {0} is not positive")]
    BadWeight(f64),
    #[error("leaves {0} and {1} cross")]
    Crossing(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub a: CirclePoint,
    pub b: CirclePoint,
}

impl Geodesic {
    pub fn new(a: CirclePoint, b: CirclePoint) -> Result<Self, LaminationError> {
        let d = normalize_angle(b.theta - a.theta);
        if d.min(std::f64::consts::TAU - d) < MIN_SEPARATION {
            return Err(LaminationError::DegenerateGeodesic(a.theta, b.theta));
        }
        Ok(Geodesic { a, b })
    }

    /// Endpoint angles ordered so that `lo < hi`.
    fn sorted(&self) -> (f64, f64) {
        let (x, y) = (self.a.theta, self.b.theta);
        if x < y {
            (x, y)
        } else {
            (y, x)
        }
    }

    /// Whether the two chords cross in the open disk.
    pub fn crosses(&self, other: &Geodesic) -> bool {
        let (lo, hi) = self.sorted();
        let inside = |t: f64| lo < t && t < hi;
        let (u, v) = other.sorted();
        let shared = [u, v].iter().any(|&t| t == lo || t == hi);
        !shared && inside(u) != inside(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub geodesic: Geodesic,
    pub weight: f64,
}

/// A segment–chord crossing test prepared for repeated queries.
#[derive(Clone, Copy, Debug)]
struct Chord {
    a: Vec2,
    b: Vec2,
    normal: Vec2,
    offset: f64,
}

impl Chord {
    fn new(g: &Geodesic) -> Self {
        let (a, b) = (g.a.to_array(), g.b.to_array());
        let normal = [a[1] - b[1], b[0] - a[0]];
        Chord { a, b, normal, offset: normal[0] * a[0] + normal[1] * a[1] }
    }

    /// Strict crossing with the open segment `p q`. Plain floating point
    /// decides clear cases; near-degenerate ones use exact predicates.
    fn crosses(&self, p: Vec2, q: Vec2) -> bool {
        const GUARD: f64 = 1e-12;
        let sp = self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset;
        let sq = self.normal[0] * q[0] + self.normal[1] * q[1] - self.offset;
        if sp > GUARD && sq > GUARD || sp < -GUARD && sq < -GUARD {
            return false;
        }
        let c = |x: Vec2| Coord { x: x[0], y: x[1] };
        let (op, oq) = (orient2d(c(self.a), c(self.b), c(p)), orient2d(c(self.a), c(self.b), c(q)));
        if op * oq >= 0.0 {
            return false;
        }
        let (oa, ob) = (orient2d(c(p), c(q), c(self.a)), orient2d(c(p), c(q), c(self.b)));
        oa * ob < 0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasuredLamination {
    leaves: Vec<Leaf>,
    #[serde(skip)]
    chords: Vec<ChordCache>,
}

// serde(skip) needs Default + PartialEq on the cache; equality ignores it.
#[derive(Clone, Debug, Default)]
struct ChordCache(Option<Chord>);

impl PartialEq for ChordCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl MeasuredLamination {
    /// Validates weights and pairwise disjointness.
    pub fn new(leaves: Vec<Leaf>) -> Result<Self, LaminationError> {
        if let Some(l) = leaves.iter().find(|l| l.weight <= 0.0 || !l.weight.is_finite()) {
            return Err(LaminationError::BadWeight(l.weight));
        }
        let lam = Self::new_unchecked(leaves);
        if let Some((i, j)) = lam.first_crossing() {
            return Err(LaminationError::Crossing(i, j));
        }
        Ok(lam)
    }

    fn new_unchecked(leaves: Vec<Leaf>) -> Self {
        let chords = leaves.iter().map(|l| ChordCache(Some(Chord::new(&l.geodesic)))).collect();
        MeasuredLamination { leaves, chords }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The bending lamination of one side of an envelope: one leaf per
    /// bending edge, weighted by the bending angle.
    pub fn from_envelope(e: &EnvelopePair, side: Side) -> Self {
        let leaves = e
            .bending_edges(side)
            .iter()
            .map(|edge| Leaf { geodesic: Geodesic { a: edge.a, b: edge.b }, weight: edge.weight })
            .collect();
        Self::new_unchecked(leaves)
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.leaves.iter().map(|l| l.weight).sum()
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.leaves.iter().map(|l| l.weight).min_by(f64::total_cmp)
    }

    /// Whether all weights are at least the bending threshold.
    pub fn weights_above_threshold(&self) -> bool {
        self.leaves.iter().all(|l| l.weight >= EPS_BEND)
    }

    /// First pair of crossing leaves, by a sweep over endpoint angles.
    fn first_crossing(&self) -> Option<(usize, usize)> {
        // non-crossing chords nest like brackets when read in angular order
        let mut events: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * self.leaves.len());
        for (i, l) in self.leaves.iter().enumerate() {
            let (lo, hi) = l.geodesic.sorted();
            events.push((lo, true, i));
            events.push((hi, false, i));
        }
        // at a shared endpoint, close before opening, and among openings the
        // longer chord first
        events.sort_by(|x, y| {
            x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then_with(|| {
                let len = |i: usize| self.leaves[i].geodesic.sorted().1;
                if x.1 {
                    len(y.2).total_cmp(&len(x.2))
                } else {
                    let start = |i: usize| self.leaves[i].geodesic.sorted().0;
                    start(y.2).total_cmp(&start(x.2))
                }
            })
        });
        let mut stack: Vec<usize> = Vec::new();
        for (_, open, i) in events {
            if open {
                stack.push(i);
            } else {
                match stack.pop() {
                    Some(j) if j == i => {}
                    Some(j) => return Some((i.min(j), i.max(j))),
                    None => unreachable!(),
                }
            }
        }
        None
    }

    pub fn is_disjoint(&self) -> bool {
        self.first_crossing().is_none()
    }

    /// Image under the isometry `A`.
    pub fn transported(&self, a: &LinearIsometry) -> Self {
        let leaves = self
            .leaves
            .iter()
            .map(|l| Leaf {
                geodesic: Geodesic { a: a.boundary_action(l.geodesic.a), b: a.boundary_action(l.geodesic.b) },
                weight: l.weight,
            })
            .collect();
        Self::new_unchecked(leaves)
    }

    fn chord(&self, i: usize) -> Chord {
        self.chords.get(i).and_then(|c| c.0).unwrap_or_else(|| Chord::new(&self.leaves[i].geodesic))
    }

    /// Total weight of the leaves crossing the open segment `p q`.
    pub fn transverse_measure(&self, p: KleinPoint, q: KleinPoint) -> f64 {
        let (p, q) = (p.to_array(), q.to_array());
        (0..self.leaves.len()).filter(|&i| self.chord(i).crosses(p, q)).map(|i| self.leaves[i].weight).sum()
    }

    pub fn arc_measure(&self, arc: &GeodesicArc) -> f64 {
        let (p, q) = arc.endpoints();
        self.transverse_measure(p, q)
    }
}

/// A geodesic segment given by its midpoint, direction and hyperbolic length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicArc {
    pub mid: KleinPoint,
    /// Unit Euclidean direction in the Klein chart at `mid`.
    pub dir: Vec2,
    pub length: f64,
}

impl GeodesicArc {
    pub fn endpoints(&self) -> (KleinPoint, KleinPoint) {
        hyperbolic_arc(self.mid, self.dir, self.length).expect("arc midpoint inside the disk")
    }
}

/// Endpoints of the geodesic segment of the given length centred at `mid`
/// with Klein-chart direction `dir`.
pub fn hyperbolic_arc(mid: KleinPoint, dir: Vec2, length: f64) -> Result<(KleinPoint, KleinPoint), GeometryError> {
    if mid.norm_sq() >= 1.0 {
        return Err(GeometryError::OutOfDomain(mid.e1, mid.e2));
    }
    if length == 0.0 {
        return Ok((mid, mid));
    }
    // unit timelike lift and a unit tangent vector at it
    let s = 1.0 / (1.0 - mid.norm_sq()).sqrt();
    let p = s * MinkVec::lift(mid);
    let v = MinkVec::new(0.0, dir[0], dir[1]);
    let t = v + v.inner(p) * p;
    let t = (1.0 / t.norm_sq().sqrt()) * t;
    let h = length / 2.0;
    let at = |sign: f64| {
        let y = h.cosh() * p + (sign * h.sinh()) * t;
        KleinPoint { e1: y.x1 / y.x0, e2: y.x2 / y.x0 }
    };
    Ok((at(-1.0), at(1.0)))
}

/// A lower bound for the Thurston norm and an arc attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThurstonEstimate {
    pub value: f64,
    pub arc: Option<GeodesicArc>,
}

const ARC_LENGTH: f64 = 1.0;
/// Random arc midpoints stay within this Klein radius.
const MAX_MID_RADIUS: f64 = 0.999;
/// Candidates kept for local refinement.
const REFINE_TOP: usize = 8;

fn arc(mid: KleinPoint, angle: f64) -> GeodesicArc {
    GeodesicArc { mid, dir: [angle.cos(), angle.sin()], length: ARC_LENGTH }
}

/// Unit arc at hyperbolic offset `s` from the foot of `leaf` along the
/// diameter through that foot.
fn leaf_arc(leaf: &Leaf, s: f64) -> GeodesicArc {
    let (a, b) = (leaf.geodesic.a.to_array(), leaf.geodesic.b.to_array());
    let foot = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let r = foot[0].hypot(foot[1]);
    let angle = if r > 1e-15 { foot[1].atan2(foot[0]) } else { (b[1] - a[1]).atan2(b[0] - a[0]) + std::f64::consts::FRAC_PI_2 };
    // Klein radius r sits at hyperbolic distance atanh r from the origin
    let rr = (r.atanh() + s).tanh();
    arc(KleinPoint { e1: rr * angle.cos(), e2: rr * angle.sin() }, angle)
}

fn better(x: (f64, usize), y: (f64, usize)) -> (f64, usize) {
    // ties go to the lower candidate index, independent of scheduling
    if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
        y
    } else {
        x
    }
}

/// The arc family scanned by [`thurston_norm`]: three orthogonal unit
/// arcs per leaf near its foot, then `n_samples` seeded random arcs.
pub fn candidate_arcs(lam: &MeasuredLamination, n_samples: usize, seed: u64) -> Vec<GeodesicArc> {
    let mut candidates: Vec<GeodesicArc> = Vec::new();
    for leaf in lam.leaves() {
        for s in [-0.4, 0.0, 0.4] {
            candidates.push(leaf_arc(leaf, s));
        }
    }
    candidates.extend((0..n_samples).map(|k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let r = MAX_MID_RADIUS * rng.gen::<f64>().sqrt();
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let dir = rng.gen_range(0.0..std::f64::consts::PI);
        arc(KleinPoint { e1: r * t.cos(), e2: r * t.sin() }, dir)
    }));
    candidates
}

/// Lower estimate of the Thurston norm: the largest transverse measure among
/// unit arcs crossing the leaves orthogonally near their feet, `n_samples`
/// random arcs, and `refine_iters` rounds of local search from the best
/// candidates. Deterministic for a given seed.
pub fn thurston_norm(lam: &MeasuredLamination, n_samples: usize, refine_iters: usize, seed: u64) -> ThurstonEstimate {
    if lam.is_empty() {
        return ThurstonEstimate { value: 0.0, arc: None };
    }
    let candidates = candidate_arcs(lam, n_samples, seed);
    let values: Vec<f64> = candidates.par_iter().map(|a| lam.arc_measure(a)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));

    let refined: Vec<(f64, GeodesicArc)> = order
        .iter()
        .take(REFINE_TOP)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| hill_climb(lam, candidates[i], values[i], refine_iters))
        .collect();
    let (best_value, best_idx) = refined.iter().enumerate().fold((f64::NEG_INFINITY, usize::MAX), |acc, (k, r)| better(acc, (r.0, k)));
    let (value, arc) = if best_idx == usize::MAX || values[order[0]] > best_value {
        (values[order[0]], candidates[order[0]])
    } else {
        (best_value, refined[best_idx].1)
    };
    ThurstonEstimate { value, arc: Some(arc) }
}

fn hill_climb(lam: &MeasuredLamination, start: GeodesicArc, value: f64, rounds: usize) -> (f64, GeodesicArc) {
    let (mut best, mut best_v) = (start, value);
    let mut step = 0.25;
    for _ in 0..rounds {
        loop {
            let mut improved = false;
            let angle = best.dir[1].atan2(best.dir[0]);
            let scale = 1.0 - best.mid.norm_sq();
            let moves = [
                (step * scale, 0.0, 0.0),
                (-step * scale, 0.0, 0.0),
                (0.0, step * scale, 0.0),
                (0.0, -step * scale, 0.0),
                (0.0, 0.0, step),
                (0.0, 0.0, -step),
            ];
            for (dx, dy, da) in moves {
                let mid = KleinPoint { e1: best.mid.e1 + dx, e2: best.mid.e2 + dy };
                if mid.norm_sq().sqrt() > MAX_MID_RADIUS {
                    continue;
                }
                let cand = arc(mid, angle + da);
                let v = lam.arc_measure(&cand);
                if v > best_v {
                    (best, best_v, improved) = (cand, v, true);
                }
            }
            if !improved {
                break;
            }
        }
        step /= 2.0;
    }
    (best_v, best)
}
