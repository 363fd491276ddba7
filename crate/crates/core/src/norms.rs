//! Width, cross-ratio norm, and the comparison inequalities between width,
//! cross-ratio norm and Thurston norm.
//!
//! Every estimator here is a supremum over a finite candidate set, hence a
//! lower bound of the true quantity. Inequality verdicts carry a relative
//! slack `delta` to absorb that one-sided error.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::envelope::{EnvelopeError, EnvelopePair, Side, SupportPlanes};
use crate::field::{CircleField, FieldError};
use crate::lamination::{candidate_arcs, thurston_norm, GeodesicArc, MeasuredLamination};
use crate::mink::{CirclePoint, KleinPoint, LinearIsometry, MinkVec};

/// `(1 - tanh 1) / (2 √2)`.
pub const C_LEFT: f64 = 0.084_289_194_499_090_57;
pub const C_RIGHT: f64 = 8.0 / 3.0;
/// Constant of the three-point normalized sup bound.
pub const C_FAN_HU: f64 = 4.0 / 3.0;
pub const DEFAULT_SLACK: f64 = 0.05;
/// Outer radius of the width search grid.
pub const WIDTH_MAX_RADIUS: f64 = 1.0 - 1e-6;
/// Evaluation budget of the local width refinement.
const WIDTH_REFINE_BUDGET: usize = 200;
/// Points of a quadruple closer than this are considered equal.
const EPS_QUAD: f64 = 1e-12;
/// Smallest angular gap between consecutive points of a sampled quadruple;
/// below it the difference quotients lose all precision.
const MIN_GAP: f64 = 1e-6;
/// Absolute tolerance added to inequality verdicts so that exact zeros
/// compare equal despite roundoff.
const VERDICT_ABS: f64 = 1e-12;
/// Cross-ratio candidates refined by local search.
const CR_REFINE_TOP: usize = 16;
/// Angular grid for sup-norms of circle fields.
const SUP_GRID: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("quadruple has coincident points")]
    DegenerateQuadruple,
    #[error("fourth point is undetermined")]
    Degenerate,
    #[error("field is not continuous")]
    NotContinuous,
}

/// Height gap between the envelopes at `p`, in the half-pipe height metric.
pub fn width_at(e: &EnvelopePair, p: KleinPoint) -> Result<f64, EnvelopeError> {
    let gap = e.eval_upper(p)? - e.eval_lower(p)?;
    Ok(gap / (1.0 - p.norm_sq()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub argmax: KleinPoint,
}

fn width_or_neg_inf(e: &EnvelopePair, x: [f64; 2]) -> f64 {
    if x[0].hypot(x[1]) > WIDTH_MAX_RADIUS {
        return f64::NEG_INFINITY;
    }
    width_at(e, KleinPoint { e1: x[0], e2: x[1] }).unwrap_or(f64::NEG_INFINITY)
}

/// Maximizes the width function over a `grid_n × grid_n` polar grid, then
/// refines the best point by `refine_iters` golden-section steps along its
/// ray and a Nelder–Mead polish.
pub fn width(e: &EnvelopePair, grid_n: usize, refine_iters: usize) -> WidthEstimate {
    let grid_n = grid_n.max(2);
    let dr = WIDTH_MAX_RADIUS / (grid_n - 1) as f64;
    let dt = TAU / grid_n as f64;
    let polar = |i: usize, j: usize| {
        let (r, t) = (i as f64 * dr, j as f64 * dt);
        [r * t.cos(), r * t.sin()]
    };
    // rows are rays; the origin is evaluated once, on ray 0
    let best_on_ray: Vec<(f64, usize)> = (0..grid_n)
        .into_par_iter()
        .map(|j| {
            let first = if j == 0 { 0 } else { 1 };
            (first..grid_n).fold((f64::NEG_INFINITY, 0), |acc, i| {
                let v = width_or_neg_inf(e, polar(i, j));
                if v > acc.0 {
                    (v, i)
                } else {
                    acc
                }
            })
        })
        .collect();
    let (mut best_v, mut best_ij) = (f64::NEG_INFINITY, (0, 0));
    for (j, &(v, i)) in best_on_ray.iter().enumerate() {
        if v > best_v {
            (best_v, best_ij) = (v, (i, j));
        }
    }
    let mut best_x = polar(best_ij.0, best_ij.1);
    let mut budget = WIDTH_REFINE_BUDGET;

    // golden section on the radius along the best ray
    let (i, j) = best_ij;
    let t = j as f64 * dt;
    let along = |r: f64| [r * t.cos(), r * t.sin()];
    let (mut lo, mut hi) = ((i as f64 - 1.0).max(0.0) * dr, ((i + 1) as f64 * dr).min(WIDTH_MAX_RADIUS));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (width_or_neg_inf(e, along(x1)), width_or_neg_inf(e, along(x2)));
    budget -= 2;
    for _ in 0..refine_iters {
        if f1 >= f2 {
            (hi, x2, f2) = (x2, x1, f1);
            x1 = hi - g * (hi - lo);
            f1 = width_or_neg_inf(e, along(x1));
        } else {
            (lo, x1, f1) = (x1, x2, f2);
            x2 = lo + g * (hi - lo);
            f2 = width_or_neg_inf(e, along(x2));
        }
        budget -= 1;
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best_v {
            (best_v, best_x) = (f, along(x));
        }
    }

    let (v, x) = nelder_mead(|x| width_or_neg_inf(e, x), best_x, dr.max(1e-6), budget);
    if v > best_v {
        (best_v, best_x) = (v, x);
    }
    WidthEstimate { value: best_v.max(0.0), argmax: KleinPoint { e1: best_x[0], e2: best_x[1] } }
}

/// Maximizes `f` from `start` with an initial simplex of size `step`, using
/// at most `budget` evaluations. Returns the best value and point seen.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: f64, budget: usize) -> (f64, [f64; 2]) {
    let used = std::cell::Cell::new(0);
    let eval = |x: [f64; 2]| {
        used.set(used.get() + 1);
        f(x)
    };
    let mut s: Vec<([f64; 2], f64)> =
        [start, [start[0] + step, start[1]], [start[0], start[1] + step]].into_iter().map(|x| (x, eval(x))).collect();
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while used.get() + 2 <= budget {
        // descending by value
        s.sort_by(|a, b| b.1.total_cmp(&a.1));
        let centroid = lerp(s[0].0, s[1].0, 0.5);
        let worst = s[2];
        let reflected = lerp(worst.0, centroid, 2.0);
        let fr = eval(reflected);
        if fr > s[0].1 {
            let expanded = lerp(worst.0, centroid, 3.0);
            let fe = eval(expanded);
            s[2] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > s[1].1 {
            s[2] = (reflected, fr);
        } else {
            let contracted = lerp(worst.0, centroid, 0.5);
            let fc = eval(contracted);
            if fc > worst.1 {
                s[2] = (contracted, fc);
            } else {
                if used.get() + 2 > budget {
                    break;
                }
                for k in 1..3 {
                    let x = lerp(s[0].0, s[k].0, 0.5);
                    s[k] = (x, eval(x));
                }
            }
        }
    }
    s.into_iter().fold((f64::NEG_INFINITY, start), |acc, (x, v)| if v > acc.0 { (v, x) } else { acc })
}

/// Four circle points in cyclic order with cross-ratio 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrQuadruple {
    pub a: CirclePoint,
    pub b: CirclePoint,
    pub c: CirclePoint,
    pub d: CirclePoint,
}

fn cx(z: CirclePoint) -> Complex64 {
    let (x, y) = z.coords();
    Complex64::new(x, y)
}

impl CrQuadruple {
    /// Completes `a, b, c` by the unique `d` with cross-ratio 1.
    pub fn from_three(a: CirclePoint, b: CirclePoint, c: CirclePoint) -> Result<Self, NormError> {
        Ok(CrQuadruple { a, b, c, d: solve_fourth_point(a, b, c)? })
    }

    /// `(b - a)(d - c) / ((c - b)(d - a))`.
    pub fn cross_ratio(&self) -> Complex64 {
        let (a, b, c, d) = (cx(self.a), cx(self.b), cx(self.c), cx(self.d));
        (b - a) * (d - c) / ((c - b) * (d - a))
    }

    pub fn angles(&self) -> [f64; 4] {
        [self.a.theta, self.b.theta, self.c.theta, self.d.theta]
    }

    fn is_degenerate(&self) -> bool {
        let z = [cx(self.a), cx(self.b), cx(self.c), cx(self.d)];
        (0..4).any(|i| (i + 1..4).any(|j| (z[i] - z[j]).norm() < EPS_QUAD))
    }
}

/// The point `d` with `cr(a, b, c, d) = 1`, projected to the circle.
pub fn solve_fourth_point(a: CirclePoint, b: CirclePoint, c: CirclePoint) -> Result<CirclePoint, NormError> {
    let (a, b, c) = (cx(a), cx(b), cx(c));
    let den = (b - a) - (c - b);
    if den.norm() < 1e-14 || (b - a).norm() < EPS_QUAD || (c - b).norm() < EPS_QUAD || (c - a).norm() < EPS_QUAD {
        return Err(NormError::Degenerate);
    }
    let d = ((b - a) * c - (c - b) * a) / den;
    Ok(CirclePoint::from_xy(d.re, d.im))
}

/// `|X[Q]|` with `X(z) = i z phi(z)` in complex notation.
pub fn cross_ratio_value(x: &CircleField, q: &CrQuadruple) -> Result<f64, NormError> {
    if q.is_degenerate() {
        return Err(NormError::DegenerateQuadruple);
    }
    let pts = [q.a, q.b, q.c, q.d];
    let mut z = [Complex64::new(0.0, 0.0); 4];
    let mut xz = z;
    for k in 0..4 {
        z[k] = cx(pts[k]);
        xz[k] = Complex64::i() * z[k] * x.support_at(pts[k].theta)?;
    }
    let quot = |i: usize, j: usize| (xz[j] - xz[i]) / (z[j] - z[i]);
    Ok((quot(0, 1) - quot(1, 2) + quot(2, 3) - quot(3, 0)).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrEstimate {
    pub value: f64,
    pub quadruple: Option<CrQuadruple>,
}

/// Sorted angles `a < b < c` (mod 2π, starting at `a`) as a quadruple, or
/// `None` when degenerate.
fn quad_from_angles(t: [f64; 3]) -> Option<CrQuadruple> {
    if t[1] - t[0] < MIN_GAP || t[2] - t[1] < MIN_GAP || t[0] + TAU - t[2] < MIN_GAP {
        return None;
    }
    let q = CrQuadruple::from_three(CirclePoint::new(t[0]), CirclePoint::new(t[1]), CirclePoint::new(t[2])).ok()?;
    let rel = |x: f64| (x - t[0]).rem_euclid(TAU);
    let (dc, dd) = (rel(t[2]), rel(q.d.theta));
    (dd - dc >= MIN_GAP && TAU - dd >= MIN_GAP).then_some(q)
}

/// Candidate `k`: the first half of the budget goes to a stratified grid of
/// angle triples, the rest to random triples, half of them uniform and half
/// clustered at a log-uniform scale.
fn cr_candidate(k: usize, n_samples: usize, grid_m: usize, seed: u64) -> [f64; 3] {
    let grid_count = grid_m * grid_m * grid_m;
    if k < grid_count.min(n_samples / 2) {
        let (i, j, l) = (k / (grid_m * grid_m), (k / grid_m) % grid_m, k % grid_m);
        let step = TAU / grid_m as f64;
        // start angle and two arc fractions of the remaining circle
        let a = i as f64 * step;
        let u = (j as f64 + 0.5) / grid_m as f64;
        let v = (l as f64 + 0.5) / grid_m as f64;
        let b = a + TAU * u * v;
        let c = b + TAU * (1.0 - u * v) * u;
        return [a, b, c];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let a = rng.gen_range(0.0..TAU);
    let scale = if k.is_multiple_of(2) { TAU } else { TAU * (-12.0 * rng.gen::<f64>()).exp() };
    let mut g: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x *= scale / (total + 1e-300));
    [a, a + g[0], a + g[0] + g[1]]
}

/// Lower estimate of the cross-ratio norm over sampled quadruples, refined
/// by coordinate search on the three free angles. Deterministic for a seed.
pub fn cross_ratio_norm(x: &CircleField, n_samples: usize, refine_iters: usize, seed: u64) -> Result<CrEstimate, NormError> {
    if !x.is_continuous() {
        return Err(NormError::NotContinuous);
    }
    let grid_m = ((n_samples / 2) as f64).cbrt().floor() as usize;
    let value_of = |t: [f64; 3]| -> Result<Option<(f64, CrQuadruple)>, NormError> {
        match quad_from_angles(t) {
            Some(q) => Ok(Some((cross_ratio_value(x, &q)?, q))),
            None => Ok(None),
        }
    };
    let scored: Vec<Option<(f64, [f64; 3])>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let t = cr_candidate(k, n_samples, grid_m, seed);
            Ok(value_of(t)?.map(|(v, _)| (v, t)))
        })
        .collect::<Result<_, NormError>>()?;
    let mut order: Vec<usize> = (0..n_samples).filter(|&k| scored[k].is_some()).collect();
    let val = |k: usize| scored[k].map_or(f64::NEG_INFINITY, |s| s.0);
    order.sort_by(|&i, &j| val(j).total_cmp(&val(i)).then(i.cmp(&j)));
    let refined: Vec<(f64, [f64; 3])> = order
        .iter()
        .take(CR_REFINE_TOP)
        .map(|&k| scored[k].expect("filtered"))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(v, t)| cr_hill_climb(x, t, v, refine_iters))
        .collect::<Result<_, NormError>>()?;
    let best = refined.iter().fold(None::<(f64, [f64; 3])>, |acc, &(v, t)| match acc {
        Some((bv, _)) if bv >= v => acc,
        _ => Some((v, t)),
    });
    Ok(match best {
        Some((v, t)) => CrEstimate { value: v, quadruple: quad_from_angles(t) },
        None => CrEstimate { value: 0.0, quadruple: None },
    })
}

fn cr_hill_climb(x: &CircleField, start: [f64; 3], value: f64, rounds: usize) -> Result<(f64, [f64; 3]), NormError> {
    const MAX_MOVES: usize = 64;
    let (mut best, mut best_v) = (start, value);
    let mut scale = 0.25;
    for _ in 0..rounds {
        for _ in 0..MAX_MOVES {
            let gap = (best[1] - best[0]).min(best[2] - best[1]).min(TAU - (best[2] - best[0]));
            let step = scale * gap;
            let mut improved = false;
            for k in 0..3 {
                for s in [step, -step] {
                    let mut t = best;
                    t[k] += s;
                    if !(t[0] < t[1] && t[1] < t[2] && t[2] < t[0] + TAU) {
                        continue;
                    }
                    if let Some(q) = quad_from_angles(t) {
                        let v = cross_ratio_value(x, &q)?;
                        if v > best_v {
                            (best, best_v, improved) = (t, v, true);
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        scale /= 2.0;
    }
    Ok((best_v, best))
}

/// Sizes and slack for the norm estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    /// Envelope nodes.
    pub n: usize,
    pub grid_n: usize,
    pub refine_iters: usize,
    pub cr_samples: usize,
    /// Random arcs for the Thurston estimator, on top of the leaf arcs.
    pub th_samples: usize,
    pub seed: u64,
    pub delta: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams { n: 4096, grid_n: 256, refine_iters: 5, cr_samples: 20_000, th_samples: 4096, seed: 0, delta: DEFAULT_SLACK }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub width_est: f64,
    pub width_argmax: KleinPoint,
    pub cr_est: f64,
    /// Angles of the best quadruple.
    pub cr_arg: Option<[f64; 4]>,
    pub thurston_lower_est: f64,
    /// Largest dual-difference bound over the scanned arcs.
    pub thurston_upper: f64,
    pub th2_left_ok: bool,
    pub th2_right_ok: bool,
    /// `width - c_left · thurston`.
    pub left_margin: f64,
    /// `c_right · cr - width`.
    pub right_margin: f64,
    pub c_left: f64,
    pub c_right: f64,
    pub delta: f64,
}

impl NormReport {
    pub fn all_ok(&self) -> bool {
        self.th2_left_ok && self.th2_right_ok
    }
}

/// Largest `|sigma(p) - sigma(q)|` over the arcs with both endpoints inside
/// facets. Bounds the transverse measure of each such arc from above.
pub fn thurston_facet_bound(e: &EnvelopePair, side: Side, arcs: &[GeodesicArc]) -> f64 {
    arcs.par_iter()
        .map(|arc| {
            let (p, q) = arc.endpoints();
            match (e.facet_at(side, p), e.facet_at(side, q)) {
                (Ok(Some(fp)), Ok(Some(fq))) => e.dual_difference(side, fp, fq).norm_sq().max(0.0).sqrt(),
                _ => 0.0,
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// Estimates width, cross-ratio norm and Thurston norm of the lower (left)
/// lamination and checks both comparison inequalities.
pub fn verify_th2(f: &CircleField, params: &NormParams) -> Result<NormReport, NormError> {
    let e = EnvelopePair::build(f, params.n, &[])?;
    let w = width(&e, params.grid_n, params.refine_iters);
    verify_th2_on(f, &e, &w, params)
}

/// As [`verify_th2`] with a prebuilt envelope and width estimate.
pub fn verify_th2_on(f: &CircleField, e: &EnvelopePair, w: &WidthEstimate, params: &NormParams) -> Result<NormReport, NormError> {
    verify_th2_side(f, e, w, Side::Lower, params)
}

/// As [`verify_th2_on`] with the lamination of the given envelope side:
/// `Lower` for the left earthquake, `Upper` for the right one.
pub fn verify_th2_side(
    f: &CircleField,
    e: &EnvelopePair,
    w: &WidthEstimate,
    side: Side,
    params: &NormParams,
) -> Result<NormReport, NormError> {
    let cr = cross_ratio_norm(f, params.cr_samples, params.refine_iters, params.seed)?;
    let lam = MeasuredLamination::from_envelope(e, side);
    let th = thurston_norm(&lam, params.th_samples, params.refine_iters, params.seed);
    let mut arcs = candidate_arcs(&lam, params.th_samples, params.seed);
    arcs.extend(th.arc);
    let upper = thurston_facet_bound(e, side, &arcs);
    let slack = 1.0 + params.delta;
    Ok(NormReport {
        width_est: w.value,
        width_argmax: w.argmax,
        cr_est: cr.value,
        cr_arg: cr.quadruple.map(|q| q.angles()),
        thurston_lower_est: th.value,
        thurston_upper: upper,
        th2_left_ok: C_LEFT * th.value <= w.value * slack + VERDICT_ABS,
        th2_right_ok: w.value <= C_RIGHT * cr.value * slack + VERDICT_ABS,
        left_margin: w.value - C_LEFT * th.value,
        right_margin: C_RIGHT * cr.value - w.value,
        c_left: C_LEFT,
        c_right: C_RIGHT,
        delta: params.delta,
    })
}

/// Largest support value over a uniform grid and the exact nodes.
fn max_support(f: &CircleField, n: usize) -> Result<f64, FieldError> {
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        best = best.max(f.support_at(TAU * i as f64 / n as f64)?);
    }
    for t in f.exact_nodes() {
        best = best.max(f.support_at(t)?);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanHuReport {
    /// `max |phi|` after the three-point normalization.
    pub max_abs_phi: f64,
    pub cr_est: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Normalizes `f` to vanish at `0, π/2, π` and compares its sup norm with
/// `4/3` of the cross-ratio estimate.
pub fn fan_hu_check(f: &CircleField, params: &NormParams) -> Result<FanHuReport, NormError> {
    let (g, _) = f.normalize3()?;
    let max_abs_phi = g.max_abs_support(SUP_GRID)?;
    let cr = cross_ratio_norm(&g, params.cr_samples, params.refine_iters, params.seed)?;
    let bound = C_FAN_HU * cr.value * (1.0 + params.delta);
    Ok(FanHuReport { max_abs_phi, cr_est: cr.value, bound, ok: max_abs_phi <= bound + VERDICT_ABS })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiWidthReport {
    pub base_point: KleinPoint,
    /// `max phi` of the normalized field, one value per extreme support
    /// plane at the base point.
    pub max_phi: Vec<f64>,
    pub width: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Normalizes `f` so that the lower envelope has the horizontal support
/// plane at the width argmax, moves that point to the origin, and compares
/// `max phi` with twice the width. At a bending chord both extreme support
/// planes are checked.
pub fn phi_vs_width_check(
    f: &CircleField,
    e: &EnvelopePair,
    w: &WidthEstimate,
    params: &NormParams,
) -> Result<PhiWidthReport, NormError> {
    let planes = match e.support_planes_at(w.argmax, Side::Lower)? {
        SupportPlanes::Unique(s) => vec![s],
        SupportPlanes::Edge { first, second, .. } => vec![first, second],
        SupportPlanes::Vertex(v) => v,
    };
    let recenter = LinearIsometry::recentering(w.argmax);
    let max_phi = planes
        .iter()
        .map(|&s| max_support(&f.add_killing(-s).act_with_nodes(&recenter, MinkVec::ZERO, params.n.max(SUP_GRID)), SUP_GRID))
        .collect::<Result<Vec<f64>, FieldError>>()?;
    let bound = 2.0 * w.value * (1.0 + params.delta);
    let ok = max_phi.iter().all(|&m| m <= bound + VERDICT_ABS);
    Ok(PhiWidthReport { base_point: w.argmax, max_phi, width: w.value, bound, ok })
}
