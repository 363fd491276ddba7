//! Convex and concave envelopes of boundary data over the disk.
//!
//! The graph points `(cos θ, sin θ, phi(θ))` are hulled in 3D. Downward
//! facets form the lower envelope `phi⁻`, upward facets the upper envelope
//! `phi⁺`. Adjacent facets that agree up to floating point noise are merged
//! into flat pieces; the chords between distinct pieces are the bending
//! edges, weighted by the angle between the adjacent support planes.

mod dd;
mod hull;
mod locate;

use std::collections::HashMap;
use std::f64::consts::TAU;

use robust::{orient2d, orient3d, Coord, Coord3D};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{CircleField, FieldError};
use crate::halfpipe::{coeffs_to_dual, plane_angle, plane_value};
use crate::mink::{normalize_angle, CirclePoint, KleinPoint, MinkVec, EPS_DISK};

pub use locate::{Location, EDGE_TOL};

/// Smallest bending angle kept as a bending edge.
pub const EPS_BEND: f64 = 1e-7;
/// Facets whose unit normal has smaller vertical component are discarded.
pub const EPS_VERT: f64 = 1e-12;
/// Minimal number of uniform nodes.
pub const MIN_NODES: usize = 8;
/// Relative vertical residual below which adjacent hull triangles count as
/// coplanar and are merged into one piece.
pub const EPS_COPLANAR: f64 = 1e-12;
/// Nodes closer than this are merged, keeping exact nodes over uniform ones.
const NODE_MERGE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("need at least {MIN_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("all samples are coplanar: the field is Killing and has no bending lamination")]
    DegenerateInput,
    #[error("point ({0}, {1}) is outside the evaluation disk")]
    OutOfDomain(f64, f64),
    #[error("adjacent support planes meet in a non-spacelike line (<dσ,dσ> = {0})")]
    NonSpacelikeBend(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub theta: f64,
    pub point: [f64; 3],
}

/// A flat piece of one envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Minkowski dual of the support plane.
    pub sigma: MinkVec,
    /// Low-order part of the dual: `sigma + sigma_lo` carries about twice
    /// the working precision for triangular pieces, and is zero otherwise.
    pub sigma_lo: MinkVec,
    /// Sample indices of the vertices, counter-clockwise.
    pub vertex_ids: Vec<usize>,
    /// For polygon side `k` (from vertex `k` to `k + 1`), the bending edge
    /// behind it, if the side is a bending chord.
    pub side_edges: Vec<Option<usize>>,
}

/// A chord along which the envelope is bent.
///
/// The chord is oriented from `ends[0]` to `ends[1]` (increasing angle);
/// `facet_first` lies on its left.
#[derive(Clone, Debug, PartialEq)]
pub struct BendingEdge {
    pub facet_first: usize,
    pub facet_second: usize,
    pub ends: [usize; 2],
    pub a: CirclePoint,
    pub b: CirclePoint,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct HullSide {
    facets: Vec<Facet>,
    edges: Vec<BendingEdge>,
    locator: locate::Locator,
}

impl HullSide {
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn edges(&self) -> &[BendingEdge] {
        &self.edges
    }
}

/// Support planes of an envelope at a point of the disk.
#[derive(Clone, Debug, PartialEq)]
pub enum SupportPlanes {
    Unique(MinkVec),
    /// The two extreme planes at a bending chord, `first` on the left.
    Edge { first: MinkVec, second: MinkVec, edge: usize },
    /// Incident facet duals at an interior hull vertex, in cyclic order.
    Vertex(Vec<MinkVec>),
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    /// Number of uniform nodes (ignored for tabulated fields, which use
    /// their own nodes).
    pub n: usize,
    pub extra_nodes: Vec<f64>,
    /// Fail with [`EnvelopeError::DegenerateInput`] on affine data.
    pub require_bending: bool,
}

#[derive(Clone, Debug)]
pub struct EnvelopePair {
    samples: Vec<GraphSample>,
    lower: HullSide,
    upper: HullSide,
    eps_hull: f64,
    n: usize,
}

impl EnvelopePair {
    /// Envelopes of `f` sampled at `n` uniform nodes plus `extra_nodes` plus
    /// the field's own exact nodes.
    pub fn build(f: &CircleField, n: usize, extra_nodes: &[f64]) -> Result<Self, EnvelopeError> {
        Self::build_with(f, &BuildOptions { n, extra_nodes: extra_nodes.to_vec(), require_bending: false })
    }

    pub fn build_with(f: &CircleField, opts: &BuildOptions) -> Result<Self, EnvelopeError> {
        let tabulated = matches!(f, CircleField::Sampled(_));
        if !tabulated && opts.n < MIN_NODES {
            return Err(EnvelopeError::TooFewNodes(opts.n));
        }
        let uniform = if tabulated { 0 } else { opts.n };
        let exact: Vec<f64> = f.exact_nodes().into_iter().chain(opts.extra_nodes.iter().copied()).collect();
        let thetas = node_set(uniform, &exact);
        if thetas.len() < 3 {
            return Err(EnvelopeError::TooFewNodes(thetas.len()));
        }
        let mut samples = Vec::with_capacity(thetas.len());
        for t in thetas {
            let phi = f.support_at(t)?;
            samples.push(GraphSample { theta: t, point: [t.cos(), t.sin(), phi] });
        }
        let max_phi = samples.iter().fold(0.0f64, |m, s| m.max(s.point[2].abs()));
        let eps_hull = 1e-9 * (1.0 + max_phi);
        let pts: Vec<[f64; 3]> = samples.iter().map(|s| s.point).collect();

        let (lower, upper) = match hull::cylinder_hull(&pts) {
            hull::Hull::Flat => {
                if opts.require_bending {
                    return Err(EnvelopeError::DegenerateInput);
                }
                let all: Vec<usize> = (0..pts.len()).collect();
                (flat_side(&pts, all.clone()), flat_side(&pts, all))
            }
            hull::Hull::Solid(faces) => {
                let mut lower = Vec::new();
                let mut upper = Vec::new();
                for f in faces {
                    let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
                    let n = cross(sub(b, a), sub(c, a));
                    let nz = n[2] / (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                    if nz.abs() <= EPS_VERT {
                        continue;
                    }
                    if orient2d(c2(&a), c2(&b), c2(&c)) > 0.0 {
                        upper.push(f);
                    } else {
                        lower.push([f[0], f[2], f[1]]);
                    }
                }
                let eps = EPS_COPLANAR * (1.0 + max_phi);
                (assemble_side(&pts, &lower, eps)?, assemble_side(&pts, &upper, eps)?)
            }
        };
        if opts.require_bending && lower.edges.is_empty() && upper.edges.is_empty() {
            return Err(EnvelopeError::DegenerateInput);
        }
        Ok(EnvelopePair { samples, lower, upper, eps_hull, n: opts.n })
    }

    pub fn samples(&self) -> &[GraphSample] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps_hull(&self) -> f64 {
        self.eps_hull
    }

    pub fn side(&self, side: Side) -> &HullSide {
        match side {
            Side::Lower => &self.lower,
            Side::Upper => &self.upper,
        }
    }

    pub fn facets(&self, side: Side) -> &[Facet] {
        &self.side(side).facets
    }

    pub fn bending_edges(&self, side: Side) -> &[BendingEdge] {
        &self.side(side).edges
    }

    fn check_domain(p: KleinPoint) -> Result<(), EnvelopeError> {
        if p.norm_sq().sqrt() > 1.0 - EPS_DISK {
            Err(EnvelopeError::OutOfDomain(p.e1, p.e2))
        } else {
            Ok(())
        }
    }

    pub fn locate(&self, side: Side, p: KleinPoint) -> Result<Location, EnvelopeError> {
        Self::check_domain(p)?;
        Ok(self.side(side).locator.locate(p.to_array()))
    }

    pub fn eval(&self, side: Side, p: KleinPoint) -> Result<f64, EnvelopeError> {
        let s = self.side(side);
        let facet = match self.locate(side, p)? {
            Location::Facet(f) => f,
            Location::Edge(e) => s.edges[e].facet_first,
        };
        Ok(plane_value(s.facets[facet].sigma, p))
    }

    pub fn eval_lower(&self, p: KleinPoint) -> Result<f64, EnvelopeError> {
        self.eval(Side::Lower, p)
    }

    pub fn eval_upper(&self, p: KleinPoint) -> Result<f64, EnvelopeError> {
        self.eval(Side::Upper, p)
    }

    pub fn support_planes_at(&self, p: KleinPoint, side: Side) -> Result<SupportPlanes, EnvelopeError> {
        let s = self.side(side);
        Ok(match self.locate(side, p)? {
            Location::Facet(f) => SupportPlanes::Unique(s.facets[f].sigma),
            Location::Edge(e) => {
                let edge = &s.edges[e];
                SupportPlanes::Edge {
                    first: s.facets[edge.facet_first].sigma,
                    second: s.facets[edge.facet_second].sigma,
                    edge: e,
                }
            }
        })
    }

    /// `sigma(second) - sigma(first)` for two facets of one side, from the
    /// extended-precision duals.
    pub fn dual_difference(&self, side: Side, first: usize, second: usize) -> MinkVec {
        let fs = &self.side(side).facets;
        let (a, b) = (&fs[first], &fs[second]);
        (b.sigma - a.sigma) + (b.sigma_lo - a.sigma_lo)
    }

    /// Facet containing `p`, or `None` when `p` lies on a bending chord.
    pub fn facet_at(&self, side: Side, p: KleinPoint) -> Result<Option<usize>, EnvelopeError> {
        Ok(match self.locate(side, p)? {
            Location::Facet(f) => Some(f),
            Location::Edge(_) => None,
        })
    }

    /// A point strictly inside facet `f` (vertex centroid).
    pub fn facet_interior_point(&self, side: Side, f: usize) -> KleinPoint {
        let ids = &self.side(side).facets[f].vertex_ids;
        let (mut x, mut y) = (0.0, 0.0);
        for &i in ids {
            x += self.samples[i].point[0];
            y += self.samples[i].point[1];
        }
        let k = ids.len() as f64;
        KleinPoint { e1: x / k, e2: y / k }
    }
}

/// Sorted node angles: `n` uniform nodes merged with the exact nodes.
fn node_set(n: usize, exact: &[f64]) -> Vec<f64> {
    let mut tagged: Vec<(f64, u8)> = exact.iter().map(|&t| (normalize_angle(t), 0)).collect();
    tagged.extend((0..n).map(|i| (TAU * i as f64 / n as f64, 1)));
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<(f64, u8)> = Vec::with_capacity(tagged.len());
    for t in tagged {
        match out.last_mut() {
            Some(last) if t.0 - last.0 <= NODE_MERGE => {
                if t.1 < last.1 {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    while out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if first.0 + TAU - last.0 > NODE_MERGE {
            break;
        }
        if last.1 < first.1 {
            out[0] = last;
        }
        out.pop();
    }
    out.into_iter().map(|t| t.0).collect()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn c2(p: &[f64; 3]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn c3(p: &[f64; 3]) -> Coord3D<f64> {
    Coord3D { x: p[0], y: p[1], z: p[2] }
}

/// Vertical distance from `d` to the plane through `a, b, c`.
fn vertical_residual(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    (orient3d(c3(a), c3(b), c3(c), c3(d)) / orient2d(c2(a), c2(b), c2(c))).abs()
}

/// Least-squares plane `z = alpha + beta x + gamma y` through the given
/// points (exact interpolation for three), returned as its Minkowski dual.
pub(crate) fn fit_plane(pts: &[[f64; 3]], ids: &[usize]) -> MinkVec {
    let k = ids.len() as f64;
    let mean = ids.iter().fold([0.0; 3], |m, &i| [m[0] + pts[i][0], m[1] + pts[i][1], m[2] + pts[i][2]]);
    let mean = [mean[0] / k, mean[1] / k, mean[2] / k];
    let col = |c: usize| -> Vec<f64> { ids.iter().map(|&i| pts[i][c] - mean[c]).collect() };
    let (x, y, z) = (col(0), col(1), col(2));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    // modified Gram-Schmidt with one reorthogonalization pass
    let r11 = dot(&x, &x).sqrt();
    let q1: Vec<f64> = x.iter().map(|v| v / r11).collect();
    let mut y2 = y.clone();
    let mut r12 = 0.0;
    for _ in 0..2 {
        let c = dot(&q1, &y2);
        r12 += c;
        y2.iter_mut().zip(&q1).for_each(|(v, q)| *v -= c * q);
    }
    let r22 = dot(&y2, &y2).sqrt();
    let q2: Vec<f64> = y2.iter().map(|v| v / r22).collect();
    let gamma = dot(&q2, &z) / r22;
    let beta = (dot(&q1, &z) - r12 * gamma) / r11;
    let alpha = mean[2] - beta * mean[0] - gamma * mean[1];
    coeffs_to_dual(alpha, beta, gamma)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
        ra != rb
    }
}

fn flat_side(pts: &[[f64; 3]], ids: Vec<usize>) -> HullSide {
    let sigma = fit_plane(pts, &ids);
    let poly: Vec<[f64; 2]> = ids.iter().map(|&i| [pts[i][0], pts[i][1]]).collect();
    let k = ids.len();
    let locator = locate::Locator::new(&[poly], &[vec![None; k]]);
    let facet = Facet { sigma, sigma_lo: MinkVec::ZERO, vertex_ids: ids, side_edges: vec![None; k] };
    HullSide { facets: vec![facet], edges: Vec::new(), locator }
}

/// Merges coplanar triangles (counter-clockwise in projection) of one
/// envelope into flat pieces and extracts the bending edges.
///
/// Pieces meeting at an angle of at most [`EPS_BEND`] stay separate facets,
/// but their common chord is not a bending edge. Fitting one plane to such a
/// slightly folded pair would move it off the chords bounding the pair, and
/// the comparison fields across those chords would no longer have them as
/// axes.
fn assemble_side(pts: &[[f64; 3]], tris: &[[usize; 3]], eps_coplanar: f64) -> Result<HullSide, EnvelopeError> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            by_edge.entry(key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
        }
    }
    let mut shared: Vec<((usize, usize), usize, usize)> =
        by_edge.iter().filter(|(_, ts)| ts.len() == 2).map(|(&e, ts)| (e, ts[0], ts[1])).collect();
    shared.sort_unstable();

    let mut uf = UnionFind((0..tris.len()).collect());
    let opposite = |t: usize, e: (usize, usize)| tris[t].iter().copied().find(|&v| v != e.0 && v != e.1).unwrap();
    for &(e, t1, t2) in &shared {
        let [a, b, c] = tris[t1].map(|i| &pts[i]);
        let d = &pts[opposite(t2, e)];
        let [a2, b2, c2] = tris[t2].map(|i| &pts[i]);
        let d2 = &pts[opposite(t1, e)];
        if vertical_residual(a, b, c, d).max(vertical_residual(a2, b2, c2, d2)) <= eps_coplanar {
            uf.union(t1, t2);
        }
    }

    let mut piece_of_root: HashMap<usize, usize> = HashMap::new();
    let mut verts: Vec<Vec<usize>> = Vec::new();
    let mut piece_of_tri = Vec::with_capacity(tris.len());
    for (t, tri) in tris.iter().enumerate() {
        let r = uf.find(t);
        let p = *piece_of_root.entry(r).or_insert_with(|| {
            verts.push(Vec::new());
            verts.len() - 1
        });
        verts[p].extend_from_slice(tri);
        piece_of_tri.push(p);
    }
    for v in &mut verts {
        v.sort_unstable();
        v.dedup();
    }
    let (sigmas, sigmas_lo): (Vec<MinkVec>, Vec<MinkVec>) = verts
        .iter()
        .map(|v| match v.as_slice() {
            &[i, j, k] => {
                let [a, b, c] = dd::plane_through([pts[i], pts[j], pts[k]]);
                (coeffs_to_dual(a.hi, b.hi, c.hi), coeffs_to_dual(a.lo, b.lo, c.lo))
            }
            _ => (fit_plane(pts, v), MinkVec::ZERO),
        })
        .unzip();

    // chord -> (pieces, bending edge id)
    let mut chords: HashMap<(usize, usize), (usize, usize, Option<usize>)> = HashMap::new();
    let mut edges = Vec::new();
    for &((i, j), t1, t2) in &shared {
        let (p1, p2) = (piece_of_tri[t1], piece_of_tri[t2]);
        if p1 == p2 {
            continue;
        }
        let weight = plane_angle(sigmas[p1], sigmas[p2])
            .map_err(|_| EnvelopeError::NonSpacelikeBend((sigmas[p1] - sigmas[p2]).norm_sq()))?;
        if weight <= EPS_BEND {
            chords.insert((i, j), (p1, p2, None));
            continue;
        }
        let (u, w) = (pts[i], pts[j]);
        let probe = opposite(t1, (i, j));
        let left = orient2d(c2(&u), c2(&w), c2(&pts[probe])) > 0.0;
        let (first, second) = if left { (p1, p2) } else { (p2, p1) };
        chords.insert((i, j), (p1, p2, Some(edges.len())));
        edges.push(BendingEdge {
            facet_first: first,
            facet_second: second,
            ends: [i, j],
            a: CirclePoint::new(u[1].atan2(u[0])),
            b: CirclePoint::new(w[1].atan2(w[0])),
            weight,
        });
    }

    let mut facets: Vec<Facet> = Vec::with_capacity(verts.len());
    let mut polygons = Vec::with_capacity(verts.len());
    let mut across = Vec::with_capacity(verts.len());
    for (p, ids) in verts.into_iter().enumerate() {
        let k = ids.len();
        let sides: Vec<Option<(usize, usize, Option<usize>)>> =
            (0..k).map(|s| chords.get(&key(ids[s], ids[(s + 1) % k])).copied()).collect();
        across.push(
            sides
                .iter()
                .map(|c| c.map(|(p1, p2, e)| (e, if p1 == p { p2 } else { p1 })))
                .collect::<Vec<_>>(),
        );
        polygons.push(ids.iter().map(|&i| [pts[i][0], pts[i][1]]).collect::<Vec<_>>());
        let side_edges = sides.iter().map(|c| c.and_then(|c| c.2)).collect();
        facets.push(Facet { sigma: sigmas[p], sigma_lo: sigmas_lo[p], vertex_ids: ids, side_edges });
    }
    let locator = locate::Locator::new(&polygons, &across);
    Ok(HullSide { facets, edges, locator })
}
