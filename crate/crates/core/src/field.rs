//! Vector fields on the circle, encoded by support functions.
//!
//! A field `X` is stored through the real function `phi` with
//! `X(z) = i z phi(z)`, always against the counter-clockwise unit tangent.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfpipe::{hp_apply_boundary, HpIsometry};
use crate::mink::{normalize_angle, CirclePoint, LinearIsometry, MinkVec, Vec2};

/// Continuity tolerance at the breakpoints of piecewise affine fields.
pub const EPS_PW: f64 = 1e-9;
/// Node spacing of the image grid when a trigonometric field is transported.
pub const DEFAULT_RESAMPLE: usize = 4096;
/// Two angles closer than this are the same node.
const NODE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field has no value off its nodes (queried at theta = {0})")]
    NoInterpolation(f64),
    #[error("invalid field: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interp {
    Linear,
    None,
}

/// Arc `i` is `[bounds[i], bounds[i+1])`; the last arc wraps through `2π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffine {
    planes: Vec<MinkVec>,
    bounds: Vec<f64>,
}

impl PiecewiseAffine {
    pub fn new(planes: Vec<MinkVec>, bounds: Vec<f64>) -> Result<Self, FieldError> {
        if planes.is_empty() || planes.len() != bounds.len() {
            return Err(FieldError::Invalid("need one arc bound per plane".into()));
        }
        if bounds.iter().any(|b| !(0.0..TAU).contains(b)) {
            return Err(FieldError::Invalid("arc bounds must lie in [0, 2π)".into()));
        }
        if bounds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FieldError::Invalid("arc bounds must be strictly increasing".into()));
        }
        Ok(PiecewiseAffine { planes, bounds })
    }

    pub fn planes(&self) -> &[MinkVec] {
        &self.planes
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn arc_of(&self, theta: f64) -> usize {
        let t = normalize_angle(theta);
        match self.bounds.partition_point(|&b| b <= t) {
            0 => self.bounds.len() - 1,
            i => i - 1,
        }
    }

    pub fn support_at(&self, theta: f64) -> f64 {
        let z = CirclePoint::new(theta);
        MinkVec::lift_circle(z).inner(self.planes[self.arc_of(theta)])
    }

    /// Largest mismatch between adjacent affine pieces at the breakpoints.
    pub fn continuity_defect(&self) -> f64 {
        let k = self.planes.len();
        (0..k)
            .map(|i| {
                let z = MinkVec::lift_circle(CirclePoint::new(self.bounds[i]));
                (z.inner(self.planes[i]) - z.inner(self.planes[(i + k - 1) % k])).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_continuous(&self) -> bool {
        self.continuity_defect() <= EPS_PW
    }
}

/// `phi(θ) = c0 + Σ_k cos[k-1] cos(kθ) + sin[k-1] sin(kθ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn new(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, FieldError> {
        if !c0.is_finite() || cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(FieldError::Invalid("non-finite trigonometric coefficient".into()));
        }
        Ok(TrigPoly { c0, cos, sin })
    }

    /// Degree drawn from `2..=max_degree`, coefficients uniform in `[-1, 1]`.
    pub fn random<R: Rng>(rng: &mut R, max_degree: usize) -> Self {
        let degree = rng.gen_range(2..=max_degree.max(2));
        let mut coeff = || rng.gen_range(-1.0..=1.0);
        let c0 = coeff();
        let cos = (0..degree).map(|_| coeff()).collect();
        let sin = (0..degree).map(|_| coeff()).collect();
        TrigPoly { c0, cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn support_at(&self, theta: f64) -> f64 {
        let mut acc = self.c0;
        for (k, c) in self.cos.iter().enumerate() {
            acc += c * ((k + 1) as f64 * theta).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            acc += s * ((k + 1) as f64 * theta).sin();
        }
        acc
    }
}

/// Tabulated support function. With `interp = None` only the nodes carry
/// values; `atoms` lists the nodes whose value differs from the limit of
/// their neighbours (semicontinuous data).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    thetas: Vec<f64>,
    phis: Vec<f64>,
    interp: Interp,
    atoms: Vec<usize>,
}

impl Sampled {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>, interp: Interp, atoms: Vec<usize>) -> Result<Self, FieldError> {
        if thetas.len() < 3 || thetas.len() != phis.len() {
            return Err(FieldError::Invalid("need at least 3 nodes and one value per node".into()));
        }
        if thetas.iter().any(|t| !(0.0..TAU).contains(t)) || phis.iter().any(|p| !p.is_finite()) {
            return Err(FieldError::Invalid("node angles must lie in [0, 2π) with finite values".into()));
        }
        if thetas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FieldError::Invalid("node angles must be strictly increasing".into()));
        }
        if atoms.iter().any(|&i| i >= thetas.len()) {
            return Err(FieldError::Invalid("atom index out of range".into()));
        }
        Ok(Sampled { thetas, phis, interp, atoms })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn support_at(&self, theta: f64) -> Result<f64, FieldError> {
        let t = normalize_angle(theta);
        let n = self.thetas.len();
        let i = self.thetas.partition_point(|&x| x < t);
        let near = |j: usize| {
            let d = (self.thetas[j % n] - t).abs();
            d.min(TAU - d) <= NODE_TOL
        };
        for j in [i, i + n - 1] {
            if near(j % n) {
                return Ok(self.phis[j % n]);
            }
        }
        match self.interp {
            Interp::None => Err(FieldError::NoInterpolation(theta)),
            Interp::Linear => {
                let (lo, hi) = ((i + n - 1) % n, i % n);
                let t0 = self.thetas[lo];
                let mut t1 = self.thetas[hi];
                let mut tt = t;
                if t1 <= t0 {
                    t1 += TAU;
                    if tt < t0 {
                        tt += TAU;
                    }
                }
                let s = (tt - t0) / (t1 - t0);
                Ok(self.phis[lo] + s * (self.phis[hi] - self.phis[lo]))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircleField {
    Killing(MinkVec),
    PiecewiseAffine(PiecewiseAffine),
    TrigPoly(TrigPoly),
    Sampled(Sampled),
}

impl CircleField {
    /// `phi = max(0, b sin θ)`: the simple earthquake along the horizontal
    /// diameter, zero on the lower half disk.
    pub fn simple_earthquake(b: f64) -> Self {
        let planes = vec![MinkVec::new(0.0, 0.0, b), MinkVec::ZERO];
        CircleField::PiecewiseAffine(PiecewiseAffine { planes, bounds: vec![0.0, PI] })
    }

    /// Zero on `n` uniform nodes except the value `-1` at `θ = 0`.
    pub fn dip_atom(n: usize) -> Self {
        let thetas: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let mut phis = vec![0.0; n];
        phis[0] = -1.0;
        CircleField::Sampled(Sampled { thetas, phis, interp: Interp::None, atoms: vec![0] })
    }

    pub fn support_at(&self, theta: f64) -> Result<f64, FieldError> {
        match self {
            CircleField::Killing(s) => Ok(MinkVec::lift_circle(CirclePoint::new(theta)).inner(*s)),
            CircleField::PiecewiseAffine(pa) => Ok(pa.support_at(theta)),
            CircleField::TrigPoly(tp) => Ok(tp.support_at(theta)),
            CircleField::Sampled(s) => s.support_at(theta),
        }
    }

    /// `X(z) = phi(z) · (-sin θ, cos θ)`.
    pub fn field_at(&self, theta: f64) -> Result<Vec2, FieldError> {
        let phi = self.support_at(theta)?;
        let (s, c) = theta.sin_cos();
        Ok([-phi * s, phi * c])
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            CircleField::Killing(_) | CircleField::TrigPoly(_) => true,
            CircleField::PiecewiseAffine(pa) => pa.is_continuous(),
            CircleField::Sampled(s) => s.interp == Interp::Linear,
        }
    }

    /// Angles that must be sampled exactly for the discrete envelope to be
    /// exact: breakpoints of piecewise affine fields, nodes of tabulated ones.
    pub fn exact_nodes(&self) -> Vec<f64> {
        match self {
            CircleField::PiecewiseAffine(pa) => pa.bounds.clone(),
            CircleField::Sampled(s) => s.thetas.clone(),
            _ => Vec::new(),
        }
    }

    /// `X + Λ(sigma)`: adds the support function of a Killing field.
    pub fn add_killing(&self, sigma: MinkVec) -> CircleField {
        match self {
            CircleField::Killing(s) => CircleField::Killing(*s + sigma),
            CircleField::PiecewiseAffine(pa) => CircleField::PiecewiseAffine(PiecewiseAffine {
                planes: pa.planes.iter().map(|p| *p + sigma).collect(),
                bounds: pa.bounds.clone(),
            }),
            CircleField::TrigPoly(tp) => {
                let mut out = tp.clone();
                out.cos.resize(out.cos.len().max(1), 0.0);
                out.sin.resize(out.sin.len().max(1), 0.0);
                out.c0 -= sigma.x0;
                out.cos[0] += sigma.x1;
                out.sin[0] += sigma.x2;
                CircleField::TrigPoly(out)
            }
            CircleField::Sampled(s) => {
                let mut out = s.clone();
                for (phi, &t) in out.phis.iter_mut().zip(&s.thetas) {
                    *phi += MinkVec::lift_circle(CirclePoint::new(t)).inner(sigma);
                }
                CircleField::Sampled(out)
            }
        }
    }

    pub fn scaled(&self, t: f64) -> CircleField {
        match self {
            CircleField::Killing(s) => CircleField::Killing(t * *s),
            CircleField::PiecewiseAffine(pa) => CircleField::PiecewiseAffine(PiecewiseAffine {
                planes: pa.planes.iter().map(|p| t * *p).collect(),
                bounds: pa.bounds.clone(),
            }),
            CircleField::TrigPoly(tp) => CircleField::TrigPoly(TrigPoly {
                c0: t * tp.c0,
                cos: tp.cos.iter().map(|c| t * c).collect(),
                sin: tp.sin.iter().map(|c| t * c).collect(),
            }),
            CircleField::Sampled(s) => {
                let mut out = s.clone();
                out.phis.iter_mut().for_each(|p| *p *= t);
                CircleField::Sampled(out)
            }
        }
    }

    /// The field `A_* X + Λ(v)`. Trigonometric fields are tabulated on the
    /// image of [`DEFAULT_RESAMPLE`] uniform nodes.
    pub fn act(&self, a: &LinearIsometry, v: MinkVec) -> CircleField {
        self.act_with_nodes(a, v, DEFAULT_RESAMPLE)
    }

    /// As [`CircleField::act`], tabulating trigonometric fields on the image
    /// of `n` uniform nodes.
    pub fn act_with_nodes(&self, a: &LinearIsometry, v: MinkVec, n: usize) -> CircleField {
        let iso = HpIsometry::new(*a, v);
        match self {
            CircleField::Killing(s) => CircleField::Killing(iso.apply_plane(*s)),
            CircleField::PiecewiseAffine(pa) => {
                let planes: Vec<MinkVec> = pa.planes.iter().map(|p| iso.apply_plane(*p)).collect();
                let bounds: Vec<f64> = pa.bounds.iter().map(|&b| a.boundary_action(CirclePoint::new(b)).theta).collect();
                let start = argmin(&bounds);
                let k = planes.len();
                PiecewiseAffine::new(
                    (0..k).map(|i| planes[(start + i) % k]).collect(),
                    (0..k).map(|i| bounds[(start + i) % k]).collect(),
                )
                .map(CircleField::PiecewiseAffine)
                .expect("orientation preserving maps keep arc bounds cyclically ordered")
            }
            CircleField::TrigPoly(tp) => {
                let thetas: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
                let phis = thetas.iter().map(|&t| tp.support_at(t)).collect();
                transport_nodes(&iso, &Sampled { thetas, phis, interp: Interp::Linear, atoms: Vec::new() })
            }
            CircleField::Sampled(s) => transport_nodes(&iso, s),
        }
    }

    /// Subtracts the Killing field matching the support values at the
    /// angles `0, π/2, π`. Returns the normalized field and the Killing dual.
    pub fn normalize3(&self) -> Result<(CircleField, MinkVec), FieldError> {
        let a = self.support_at(0.0)?;
        let b = self.support_at(FRAC_PI_2)?;
        let c = self.support_at(PI)?;
        let s0 = -(a + c) / 2.0;
        let sigma = MinkVec::new(s0, (a - c) / 2.0, b + s0);
        Ok((self.add_killing(-sigma), sigma))
    }

    /// Largest `|phi|` over `n` uniform angles plus the exact nodes.
    pub fn max_abs_support(&self, n: usize) -> Result<f64, FieldError> {
        let mut best = 0.0f64;
        match self {
            CircleField::Sampled(s) if s.interp == Interp::None => {
                return Ok(s.phis.iter().fold(0.0, |m, p| m.max(p.abs())));
            }
            _ => {}
        }
        for i in 0..n {
            best = best.max(self.support_at(TAU * i as f64 / n as f64)?.abs());
        }
        for t in self.exact_nodes() {
            best = best.max(self.support_at(t)?.abs());
        }
        Ok(best)
    }
}

fn argmin(xs: &[f64]) -> usize {
    xs.iter().enumerate().fold(0, |best, (i, &x)| if x < xs[best] { i } else { best })
}

fn transport_nodes(iso: &HpIsometry, s: &Sampled) -> CircleField {
    let moved: Vec<(CirclePoint, f64)> =
        s.thetas.iter().zip(&s.phis).map(|(&t, &phi)| hp_apply_boundary(iso, CirclePoint::new(t), phi)).collect();
    let thetas: Vec<f64> = moved.iter().map(|m| m.0.theta).collect();
    let start = argmin(&thetas);
    let n = moved.len();
    let order: Vec<usize> = (0..n).map(|i| (start + i) % n).collect();
    let mut rank = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let mut atoms: Vec<usize> = s.atoms.iter().map(|&i| rank[i]).collect();
    atoms.sort_unstable();
    CircleField::Sampled(Sampled {
        thetas: order.iter().map(|&i| moved[i].0.theta).collect(),
        phis: order.iter().map(|&i| moved[i].1).collect(),
        interp: s.interp,
        atoms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mink::killing_eval;
    use crate::mink::KleinPoint;
    use proptest::prelude::*;

    #[test]
    fn support_examples() {
        let k = CircleField::Killing(MinkVec::new(0.0, 0.0, 1.0));
        assert!((k.support_at(FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        let c = CircleField::TrigPoly(TrigPoly::new(2.0, vec![], vec![]).unwrap());
        assert_eq!(c.support_at(1.234).unwrap(), 2.0);
        let x = k.field_at(FRAC_PI_2).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-15 && x[1].abs() < 1e-15);
        let one = CircleField::TrigPoly(TrigPoly::new(1.0, vec![], vec![]).unwrap());
        assert_eq!(one.field_at(0.0).unwrap(), [-0.0, 1.0]);
    }

    #[test]
    fn simple_earthquake_support() {
        let f = CircleField::simple_earthquake(2.0);
        assert!((f.support_at(FRAC_PI_2).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(f.support_at(1.5 * PI).unwrap(), 0.0);
        assert!(f.is_continuous());
    }

    #[test]
    fn sampled_nodes_and_interp() {
        let s = Sampled::new(vec![0.0, 2.0, 4.0], vec![1.0, 3.0, 5.0], Interp::Linear, vec![]).unwrap();
        assert_eq!(s.support_at(2.0).unwrap(), 3.0);
        assert!((s.support_at(3.0).unwrap() - 4.0).abs() < 1e-15);
        // wrap from 4 to 2π
        let mid = (4.0 + TAU) / 2.0;
        assert!((s.support_at(mid).unwrap() - 3.0).abs() < 1e-12);
        let none = CircleField::dip_atom(16);
        assert_eq!(none.support_at(0.0).unwrap(), -1.0);
        assert!(matches!(none.support_at(0.1), Err(FieldError::NoInterpolation(_))));
        assert!(Sampled::new(vec![0.0, 1.0], vec![0.0, 0.0], Interp::Linear, vec![]).is_err());
        assert!(Sampled::new(vec![0.0, 2.0, 1.0], vec![0.0; 3], Interp::Linear, vec![]).is_err());
    }

    #[test]
    fn piecewise_validation() {
        assert!(PiecewiseAffine::new(vec![MinkVec::ZERO], vec![7.0]).is_err());
        assert!(PiecewiseAffine::new(vec![MinkVec::ZERO; 2], vec![1.0, 0.5]).is_err());
        let jump = PiecewiseAffine::new(vec![MinkVec::ZERO, MinkVec::new(1.0, 0.0, 0.0)], vec![0.0, PI]).unwrap();
        assert!(!jump.is_continuous());
    }

    #[test]
    fn normalize3_examples() {
        let sigma = MinkVec::new(0.3, -1.2, 0.7);
        let (zero, s) = CircleField::Killing(sigma).normalize3().unwrap();
        assert!((s - sigma).euclid_norm() < 1e-14);
        let CircleField::Killing(z) = zero else { panic!() };
        assert!(z.euclid_norm() < 1e-14);

        let f = CircleField::TrigPoly(TrigPoly::new(0.5, vec![0.1, -0.4], vec![0.9, 0.3]).unwrap());
        let (a, b, c) = (f.support_at(0.0).unwrap(), f.support_at(FRAC_PI_2).unwrap(), f.support_at(PI).unwrap());
        let (g, s) = f.normalize3().unwrap();
        assert!((-s.x0 + s.x1 - a).abs() < 1e-14);
        assert!((-s.x0 + s.x2 - b).abs() < 1e-14);
        assert!((-s.x0 - s.x1 - c).abs() < 1e-14);
        for t in [0.0, FRAC_PI_2, PI] {
            assert!(g.support_at(t).unwrap().abs() < 1e-14);
        }
        let (_, again) = g.normalize3().unwrap();
        assert!(again.euclid_norm() < 1e-14);
    }

    #[test]
    fn act_on_killing() {
        let sigma = MinkVec::new(0.2, 0.5, -0.4);
        let v = MinkVec::new(-0.1, 0.3, 0.2);
        let a = LinearIsometry::boost(0.7, 1.1).compose(&LinearIsometry::rotation(0.4));
        let CircleField::Killing(out) = CircleField::Killing(sigma).act(&a, v) else { panic!() };
        assert!((out - (a.apply(sigma) + v)).euclid_norm() < 1e-14);
        // pointwise against the pushforward formula
        let f = CircleField::TrigPoly(TrigPoly::new(0.0, vec![0.0], vec![0.0]).unwrap()).add_killing(sigma);
        let pushed = f.act_with_nodes(&a, v, 512);
        for t in [0.3, 2.0, 4.4] {
            let lhs = pushed.support_at(t).unwrap();
            let rhs = MinkVec::lift_circle(CirclePoint::new(t)).inner(out);
            assert!((lhs - rhs).abs() < 1e-4, "{lhs} {rhs}");
        }
    }

    #[test]
    fn act_identity_and_inverse() {
        let f = CircleField::simple_earthquake(1.0);
        assert_eq!(f.act(&LinearIsometry::IDENTITY, MinkVec::ZERO), f);
        let a = LinearIsometry::boost(0.8, 2.0);
        let back = f.act(&a, MinkVec::ZERO).act(&a.inverse(), MinkVec::ZERO);
        for i in 0..50 {
            let t = 0.1 + i as f64 * 0.12;
            assert!((back.support_at(t).unwrap() - f.support_at(t).unwrap()).abs() < 1e-9);
        }
        let g = CircleField::TrigPoly(TrigPoly::new(0.1, vec![0.5, -0.3], vec![0.2, 0.7]).unwrap());
        let back = g.act_with_nodes(&a, MinkVec::ZERO, 256).act(&a.inverse(), MinkVec::ZERO);
        let CircleField::Sampled(s) = &back else { panic!() };
        for (&t, &phi) in s.thetas().iter().zip(s.phis()) {
            assert!((phi - g.support_at(t).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn act_keeps_atoms() {
        let f = CircleField::dip_atom(12);
        let moved = f.act(&LinearIsometry::rotation(1.0), MinkVec::ZERO);
        let CircleField::Sampled(s) = moved else { panic!() };
        assert_eq!(s.atoms().len(), 1);
        assert_eq!(s.phis()[s.atoms()[0]], -1.0);
        assert!((s.thetas()[s.atoms()[0]] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn killing_field_matches_boundary_limit() {
        let sigma = MinkVec::new(-0.4, 1.1, 0.6);
        let f = CircleField::Killing(sigma);
        for i in 0..32 {
            let t = TAU * i as f64 / 32.0;
            let x = f.field_at(t).unwrap();
            let p = KleinPoint::from_polar(1.0 - 1e-12, t).unwrap();
            let k = killing_eval(sigma, p);
            assert!((x[0] - k[0]).abs() < 1e-10 && (x[1] - k[1]).abs() < 1e-10);
        }
    }

    fn trig() -> impl Strategy<Value = CircleField> {
        (-1.0..1.0f64, prop::collection::vec(-1.0..1.0f64, 4), prop::collection::vec(-1.0..1.0f64, 4))
            .prop_map(|(c0, c, s)| CircleField::TrigPoly(TrigPoly { c0, cos: c, sin: s }))
    }

    proptest! {
        #[test]
        fn field_is_tangent(f in trig(), t in 0.0..TAU) {
            let x = f.field_at(t).unwrap();
            let radial = x[0] * t.cos() + x[1] * t.sin();
            prop_assert!(radial.abs() <= 1e-9 * (1.0 + x[0].hypot(x[1])));
        }

        #[test]
        fn graph_equivariance(
            f in trig(), t in 0.0..TAU, rho in 0.0..1.0f64, alpha in 0.0..TAU,
            v in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        ) {
            let v = MinkVec::new(v.0, v.1, v.2);
            let a = LinearIsometry::boost(rho, alpha);
            let iso = HpIsometry::new(a, v);
            let (w, height) = hp_apply_boundary(&iso, CirclePoint::new(t), f.support_at(t).unwrap());
            // the pushforward formula evaluated at w
            let y = a.inverse().apply(MinkVec::lift_circle(w));
            let back = CirclePoint::from_xy(y.x1, y.x2);
            // A^{-1}(1, w) = (1, z) / y0(z)
            let exact = f.support_at(back.theta).unwrap() * y.x0 + MinkVec::lift_circle(w).inner(v);
            prop_assert!((exact - height).abs() <= 1e-8 * (1.0 + height.abs()));
            // tabulated route: t is a node, so its image is a node of the pushed field
            let mut th: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
            th.push(normalize_angle(t));
            th.sort_by(|x, y| x.partial_cmp(y).unwrap());
            th.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
            let phis = th.iter().map(|&x| f.support_at(x).unwrap()).collect();
            let base = CircleField::Sampled(Sampled::new(th, phis, Interp::Linear, vec![]).unwrap());
            let pushed = base.act(&a, v);
            prop_assert!((pushed.support_at(w.theta).unwrap() - height).abs() <= 1e-8 * (1.0 + height.abs()));
        }

        #[test]
        fn normalize3_idempotent(f in trig()) {
            let (g, _) = f.normalize3().unwrap();
            let (_, s) = g.normalize3().unwrap();
            prop_assert!(s.euclid_norm() <= 1e-12);
        }
    }
}
