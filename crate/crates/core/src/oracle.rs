//! Brute-force and closed-form references for testing the pipeline.
//!
//! Each oracle avoids the algorithm it checks: strata come from argmax
//! enumeration instead of hulls, envelopes from triple enumeration, Killing
//! fields from explicit polynomials, Jacobians from central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::earthquake::QuakeSide;
use crate::field::{CircleField, PiecewiseAffine};
use crate::mink::{CirclePoint, GeometryError, KleinPoint, LinearIsometry, MinkVec, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("point ({0}, {1}) lies on a leaf")]
    OnLeaf(f64, f64),
}

/// Killing field of `sigma` at `p` as an explicit quadratic polynomial.
pub fn killing_polynomial(sigma: MinkVec, p: KleinPoint) -> Vec2 {
    let (x, y) = (p.e1, p.e2);
    [
        sigma.x0 * y - sigma.x1 * x * y + sigma.x2 * (x * x - 1.0),
        -sigma.x0 * x + sigma.x1 * (1.0 - y * y) + sigma.x2 * x * y,
    ]
}

/// Simple earthquake along the horizontal diameter: zero below it, the
/// translation of `sigma = (0, 0, b)` above it, and half of it on the leaf.
pub fn simple_eq_oracle(b: f64, p: KleinPoint) -> Vec2 {
    let scale = match p.e2.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Less) => 0.0,
        Some(std::cmp::Ordering::Greater) => b,
        _ => b / 2.0,
    };
    [scale * (p.e1 * p.e1 - 1.0), scale * p.e1 * p.e2]
}

/// A piecewise affine field whose strata are cut out by non-crossing chords.
/// Arc `i` of the circle is `[bounds[i], bounds[i + 1])` and carries
/// `planes[i]`; arcs in the same stratum share their plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteEarthquakeSpec {
    pub planes: Vec<MinkVec>,
    pub bounds: Vec<f64>,
    pub side: QuakeSide,
}

/// Unit spacelike vector vanishing at the ideal points `u, v`, positive on the
/// counter-clockwise arc from `u` to `v`.
fn chord_normal(u: f64, v: f64) -> MinkVec {
    let n = MinkVec::lift_circle(CirclePoint::new(u)).cross(MinkVec::lift_circle(CirclePoint::new(v)));
    let n = (1.0 / n.norm_sq().sqrt()) * n;
    let mid = CirclePoint::new(u + (v - u).rem_euclid(TAU) / 2.0);
    if MinkVec::lift_circle(mid).inner(n) > 0.0 {
        n
    } else {
        -n
    }
}

/// Random non-crossing perfect matching of `2m` points on a circle, as a
/// partner index per point.
fn random_matching<R: Rng>(rng: &mut R, m: usize) -> Vec<usize> {
    // a random balanced bracket sequence; openings pair with their closings
    let mut partner = vec![0; 2 * m];
    let mut stack = Vec::new();
    let (mut open_left, mut i) = (m, 0);
    while i < 2 * m {
        let can_open = open_left > 0;
        let can_close = !stack.is_empty();
        if can_open && (!can_close || rng.gen_bool(0.5)) {
            stack.push(i);
            open_left -= 1;
        } else {
            let j = stack.pop().expect("balanced");
            partner[i] = j;
            partner[j] = i;
        }
        i += 1;
    }
    partner
}

impl FiniteEarthquakeSpec {
    /// Random spec with `m ≤ 5` chords (`m + 1 ≤ 6` strata), plane entries in
    /// `[-2, 2]` and arcs of length at least `min_arc`. Rejection sampling;
    /// deterministic for a seed.
    pub fn random(seed: u64, side: QuakeSide, min_arc: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let m = rng.gen_range(1..=5usize);
            let mut bounds: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(0.0..TAU)).collect();
            bounds.sort_by(f64::total_cmp);
            let gaps_ok = (0..2 * m).all(|i| {
                let next = if i + 1 < 2 * m { bounds[i + 1] } else { bounds[0] + TAU };
                next - bounds[i] >= min_arc
            });
            if let Some(spec) = gaps_ok.then(|| Self::with_bounds(&mut rng, side, bounds)).flatten() {
                return spec;
            }
        }
    }

    /// As [`FiniteEarthquakeSpec::random`], with breakpoints among the angles
    /// `2π k / nodes`, at least two nodes apart.
    pub fn random_on_grid(seed: u64, side: QuakeSide, nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let m = rng.gen_range(1..=5usize);
            let mut idx: Vec<usize> = (0..2 * m).map(|_| rng.gen_range(0..nodes)).collect();
            idx.sort_unstable();
            let gaps_ok = (0..2 * m).all(|i| {
                let next = if i + 1 < 2 * m { idx[i + 1] } else { idx[0] + nodes };
                next - idx[i] >= 2
            });
            let bounds = idx.iter().map(|&k| TAU * k as f64 / nodes as f64).collect();
            if let Some(spec) = gaps_ok.then(|| Self::with_bounds(&mut rng, side, bounds)).flatten() {
                return spec;
            }
        }
    }

    /// Pairs the sorted `bounds` by a random non-crossing matching and walks
    /// around the circle, bending across each chord by a random weight.
    fn with_bounds<R: Rng>(rng: &mut R, side: QuakeSide, bounds: Vec<f64>) -> Option<Self> {
        let k = bounds.len();
        let partner = random_matching(rng, k / 2);
        let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let sign = match side {
            QuakeSide::Left => 1.0,
            QuakeSide::Right => -1.0,
        };
        // arc i runs from bounds[i] to bounds[i + 1]; arc k - 1 wraps to arc 0
        // across bounds[0]
        let mut planes = vec![MinkVec::ZERO; k];
        planes[k - 1] = MinkVec::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for i in 0..k {
            let prev = planes[(i + k - 1) % k];
            let j = partner[i];
            let (lo, hi) = (i.min(j), i.max(j));
            let delta = (sign * weights[lo]) * chord_normal(bounds[lo], bounds[hi]);
            planes[i] = if i == lo { prev + delta } else { prev - delta };
        }
        let in_range = planes.iter().all(|p| p.to_array().iter().all(|c| c.abs() <= 2.0));
        in_range.then_some(FiniteEarthquakeSpec { planes, bounds, side })
    }

    pub fn to_field(&self) -> CircleField {
        CircleField::PiecewiseAffine(PiecewiseAffine::new(self.planes.clone(), self.bounds.clone()).expect("valid spec"))
    }

    /// Distinct planes, one per stratum.
    pub fn strata(&self) -> Vec<MinkVec> {
        let mut out: Vec<MinkVec> = Vec::new();
        for p in &self.planes {
            if !out.iter().any(|q| (*q - *p).euclid_norm() < 1e-12) {
                out.push(*p);
            }
        }
        out
    }
}

/// The earthquake of a finite spec at `p`: the Killing field of the plane
/// that is largest (left) or smallest (right) at `p`.
pub fn finite_eq_oracle(spec: &FiniteEarthquakeSpec, p: KleinPoint) -> Result<Vec2, OracleError> {
    const TIE: f64 = 1e-12;
    let sign = match spec.side {
        QuakeSide::Left => 1.0,
        QuakeSide::Right => -1.0,
    };
    let value = |s: &MinkVec| sign * (-s.x0 + s.x1 * p.e1 + s.x2 * p.e2);
    let strata = spec.strata();
    let mut order: Vec<usize> = (0..strata.len()).collect();
    order.sort_by(|&i, &j| value(&strata[j]).total_cmp(&value(&strata[i])));
    if order.len() > 1 && value(&strata[order[0]]) - value(&strata[order[1]]) <= TIE {
        return Err(OracleError::OnLeaf(p.e1, p.e2));
    }
    Ok(killing_polynomial(strata[order[0]], p))
}

/// Sample angles for [`envelope_oracle`]: the nodes of tabulated fields,
/// otherwise `m` uniform angles.
fn oracle_nodes(f: &CircleField, m: usize) -> Vec<f64> {
    match f {
        CircleField::Sampled(s) => s.thetas().to_vec(),
        _ => (0..m).map(|i| TAU * i as f64 / m as f64).collect(),
    }
}

/// Convex envelope at `p` by enumerating planes through all triples of
/// boundary samples and keeping those below every sample. Cost is quartic in
/// the number of samples; intended for `m ≤ 60`.
pub fn envelope_oracle(f: &CircleField, p: KleinPoint, m: usize) -> f64 {
    let thetas = oracle_nodes(f, m);
    let pts: Vec<[f64; 3]> = thetas
        .iter()
        .map(|&t| {
            let (c, s) = (t.cos(), t.sin());
            [c, s, f.support_at(t).expect("field defined at its nodes")]
        })
        .collect();
    let scale = 1.0 + pts.iter().fold(0.0f64, |a, q| a.max(q[2].abs()));
    let k = pts.len();
    let mut best = f64::NEG_INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                // t = a + b x + c y through the three points, by Cramer's rule
                let (u, v, w) = (pts[i], pts[j], pts[l]);
                let det = (v[0] - u[0]) * (w[1] - u[1]) - (w[0] - u[0]) * (v[1] - u[1]);
                if det.abs() < 1e-14 {
                    continue;
                }
                let b = ((v[2] - u[2]) * (w[1] - u[1]) - (w[2] - u[2]) * (v[1] - u[1])) / det;
                let c = ((v[0] - u[0]) * (w[2] - u[2]) - (w[0] - u[0]) * (v[2] - u[2])) / det;
                let a = u[2] - b * u[0] - c * u[1];
                let below = pts.iter().all(|q| a + b * q[0] + c * q[1] <= q[2] + 1e-12 * scale);
                if below {
                    best = best.max(a + b * p.e1 + c * p.e2);
                }
            }
        }
    }
    best
}

/// Central difference `(A(p + h v) - A(p - h v)) / 2h` of the Klein action.
pub fn pushforward_fd(a: &LinearIsometry, p: KleinPoint, v: Vec2, h: f64) -> Result<Vec2, GeometryError> {
    let plus = KleinPoint::new(p.e1 + h * v[0], p.e2 + h * v[1])?;
    let minus = KleinPoint::new(p.e1 - h * v[0], p.e2 - h * v[1])?;
    let (x, y) = (a.klein_action(plus), a.klein_action(minus));
    Ok([(x.e1 - y.e1) / (2.0 * h), (x.e2 - y.e2) / (2.0 * h)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::EnvelopePair;
    use crate::mink::killing_eval;
    use std::f64::consts::PI;

    fn kp(e1: f64, e2: f64) -> KleinPoint {
        KleinPoint::new(e1, e2).unwrap()
    }

    #[test]
    fn polynomial_matches_killing_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = MinkVec::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let p = KleinPoint::from_polar(rng.gen_range(0.0..0.99), rng.gen_range(0.0..TAU)).unwrap();
            let (a, b) = (killing_polynomial(s, p), killing_eval(s, p));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn simple_eq_examples() {
        assert_eq!(simple_eq_oracle(1.0, kp(0.0, -0.5)), [0.0, 0.0]);
        assert_eq!(simple_eq_oracle(1.0, kp(0.0, 0.5)), [-1.0, 0.0]);
        assert_eq!(simple_eq_oracle(1.0, kp(0.0, 0.0)), [-0.5, 0.0]);
    }

    #[test]
    fn simple_eq_is_linear_in_b() {
        let p = kp(0.3, 0.4);
        let v: Vec<Vec2> = [0.5, 1.0, 1.5].iter().map(|&b| simple_eq_oracle(b, p)).collect();
        for ((a, b), c) in v[0].iter().zip(&v[1]).zip(&v[2]) {
            assert!((a + c - 2.0 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_single_plane_is_killing() {
        let s = MinkVec::new(0.3, -0.2, 0.5);
        let spec = FiniteEarthquakeSpec { planes: vec![s], bounds: vec![0.0], side: QuakeSide::Left };
        let p = kp(-0.2, 0.6);
        assert_eq!(finite_eq_oracle(&spec, p).unwrap(), killing_polynomial(s, p));
    }

    #[test]
    fn finite_two_planes_reduce_to_simple() {
        let spec = FiniteEarthquakeSpec {
            planes: vec![MinkVec::new(0.0, 0.0, 1.0), MinkVec::ZERO],
            bounds: vec![0.0, PI],
            side: QuakeSide::Left,
        };
        for p in [kp(0.2, 0.5), kp(-0.3, -0.4), kp(0.7, 0.1)] {
            assert_eq!(finite_eq_oracle(&spec, p).unwrap(), simple_eq_oracle(1.0, p));
        }
        assert_eq!(finite_eq_oracle(&spec, kp(0.3, 0.0)), Err(OracleError::OnLeaf(0.3, 0.0)));
    }

    #[test]
    fn finite_three_planes_by_argmax() {
        let planes = vec![MinkVec::ZERO, MinkVec::new(0.0, 0.0, 1.0), MinkVec::new(0.0, 1.0, 1.0)];
        let spec = FiniteEarthquakeSpec { planes: planes.clone(), bounds: vec![0.0, 1.0, 2.0], side: QuakeSide::Left };
        let p = kp(0.5, 0.3);
        // values 0, 0.3, 0.8
        assert_eq!(finite_eq_oracle(&spec, p).unwrap(), killing_polynomial(planes[2], p));
        let p = kp(-0.5, 0.3);
        // values 0, 0.3, -0.2
        assert_eq!(finite_eq_oracle(&spec, p).unwrap(), killing_polynomial(planes[1], p));
    }

    #[test]
    fn random_specs_are_convex_and_valid() {
        for seed in 0..50 {
            for side in [QuakeSide::Left, QuakeSide::Right] {
                let spec = FiniteEarthquakeSpec::random(seed, side, 0.05);
                assert!(spec.planes.iter().all(|p| p.to_array().iter().all(|c| c.abs() <= 2.0)));
                let f = spec.to_field();
                assert!(f.is_continuous(), "seed {seed}");
                // the boundary values are the extreme plane values
                let sign = if side == QuakeSide::Left { 1.0 } else { -1.0 };
                for i in 0..100 {
                    let t = TAU * (i as f64 + 0.37) / 100.0;
                    let z = MinkVec::lift_circle(CirclePoint::new(t));
                    let best = spec.strata().iter().map(|s| sign * z.inner(*s)).fold(f64::NEG_INFINITY, f64::max);
                    assert!((best - sign * f.support_at(t).unwrap()).abs() < 1e-12, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn envelope_oracle_examples() {
        let s = MinkVec::new(0.4, -0.3, 0.8);
        let p = kp(0.2, -0.3);
        let exact = MinkVec::lift(p).inner(s);
        assert!((envelope_oracle(&CircleField::Killing(s), p, 24) - exact).abs() < 1e-12);
        assert!(envelope_oracle(&CircleField::simple_earthquake(1.0), KleinPoint::ORIGIN, 24).abs() < 1e-12);
        for r in [0.0, 0.3, 0.8] {
            let v = envelope_oracle(&CircleField::dip_atom(40), kp(r, 0.0), 40);
            assert!((v + (1.0 + r) / 2.0).abs() < 1e-9, "{r} {v}");
        }
    }

    #[test]
    fn envelope_oracle_agrees_with_hull() {
        for seed in 0..10 {
            let f = FiniteEarthquakeSpec::random_on_grid(seed, QuakeSide::Left, 48).to_field();
            let e = EnvelopePair::build(&f, 48, &[]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let p = KleinPoint::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..TAU)).unwrap();
                let (a, b) = (e.eval_lower(p).unwrap(), envelope_oracle(&f, p, 48));
                assert!((a - b).abs() < 1e-9, "seed {seed}: {a} {b}");
            }
        }
    }

    #[test]
    fn pushforward_fd_examples() {
        let p = kp(0.3, -0.2);
        let v = pushforward_fd(&LinearIsometry::IDENTITY, p, [0.6, 0.8], 1e-5).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-10 && (v[1] - 0.8).abs() < 1e-10);

        let a = LinearIsometry::boost(0.8, 1.1).compose(&LinearIsometry::rotation(0.4));
        let exact = a.pushforward(p, [0.6, 0.8]);
        let err = |h: f64| {
            let fd = pushforward_fd(&a, p, [0.6, 0.8], h).unwrap();
            (fd[0] - exact[0]).hypot(fd[1] - exact[1])
        };
        assert!(err(1e-5) < 1e-7);
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
        assert!(pushforward_fd(&a, kp(0.999, 0.0), [1.0, 0.0], 0.01).is_err());
    }
}
