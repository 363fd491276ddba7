//! Minkowski space R^{1,2}, the Klein model of the hyperbolic plane, and
//! Killing fields.
//!
//! The bilinear form is `<x, y> = -x0 y0 + x1 y1 + x2 y2`. A vector `sigma`
//! names the Killing field `eta -> dPi_{(1,eta)}((1,eta) x sigma)` where `x`
//! is the Minkowski cross product and `Pi` the radial projection onto the
//! affine chart `x0 = 1`.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for causal classification.
pub const EPS_CAUSAL: f64 = 1e-10;
/// Tolerance on `A^T J A = J`, relative to the squared entry scale.
pub const EPS_MAT: f64 = 1e-10;
/// Points with `1 - |eta|^2 < EPS_DISK` are treated as boundary points.
pub const EPS_DISK: f64 = 1e-12;

/// Euclidean tangent vector in the Klein disk.
pub type Vec2 = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({0}, {1}) is not inside the open unit disk")]
    OutOfDomain(f64, f64),
    #[error("vector is not hyperbolic (<s,s> = {0})")]
    NotHyperbolic(f64),
    #[error("matrix is not an orientation and time preserving Lorentz isometry (defect {0:e})")]
    NotIsometry(f64),
}

static FLIP_KILLING_SIGN: AtomicBool = AtomicBool::new(false);

/// Mutation hook for the verification harness: flips the sign of every
/// Killing evaluation so that orientation suites must fail.
#[doc(hidden)]
pub fn set_killing_sign_fault(on: bool) {
    FLIP_KILLING_SIGN.store(on, Ordering::Relaxed);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MinkVec {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl MinkVec {
    pub const ZERO: MinkVec = MinkVec { x0: 0.0, x1: 0.0, x2: 0.0 };

    pub const fn new(x0: f64, x1: f64, x2: f64) -> Self {
        MinkVec { x0, x1, x2 }
    }

    /// The null vector `(1, z)` over a boundary point.
    pub fn lift_circle(z: CirclePoint) -> Self {
        let (c, s) = z.coords();
        MinkVec::new(1.0, c, s)
    }

    /// The vector `(1, eta)` over a disk point.
    pub fn lift(p: KleinPoint) -> Self {
        MinkVec::new(1.0, p.e1, p.e2)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x0, self.x1, self.x2]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        MinkVec::new(a[0], a[1], a[2])
    }

    pub fn inner(self, y: MinkVec) -> f64 {
        -self.x0 * y.x0 + self.x1 * y.x1 + self.x2 * y.x2
    }

    pub fn norm_sq(self) -> f64 {
        self.inner(self)
    }

    pub fn euclid_norm(self) -> f64 {
        (self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2).sqrt()
    }

    /// Minkowski cross product: `<x ⊠ y, v> = det(x, y, v)` for every `v`.
    pub fn cross(self, y: MinkVec) -> MinkVec {
        let e0 = self.x1 * y.x2 - self.x2 * y.x1;
        let e1 = self.x2 * y.x0 - self.x0 * y.x2;
        let e2 = self.x0 * y.x1 - self.x1 * y.x0;
        MinkVec::new(-e0, e1, e2)
    }
}

impl Add for MinkVec {
    type Output = MinkVec;
    fn add(self, o: MinkVec) -> MinkVec {
        MinkVec::new(self.x0 + o.x0, self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl AddAssign for MinkVec {
    fn add_assign(&mut self, o: MinkVec) {
        *self = *self + o;
    }
}

impl Sub for MinkVec {
    type Output = MinkVec;
    fn sub(self, o: MinkVec) -> MinkVec {
        MinkVec::new(self.x0 - o.x0, self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for MinkVec {
    type Output = MinkVec;
    fn neg(self) -> MinkVec {
        MinkVec::new(-self.x0, -self.x1, -self.x2)
    }
}

impl Mul<MinkVec> for f64 {
    type Output = MinkVec;
    fn mul(self, v: MinkVec) -> MinkVec {
        MinkVec::new(self * v.x0, self * v.x1, self * v.x2)
    }
}

pub fn mink_inner(x: MinkVec, y: MinkVec) -> f64 {
    x.inner(y)
}

pub fn mink_cross(x: MinkVec, y: MinkVec) -> MinkVec {
    x.cross(y)
}

/// A point of the open unit disk (Klein model).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KleinPoint {
    pub e1: f64,
    pub e2: f64,
}

impl KleinPoint {
    pub const ORIGIN: KleinPoint = KleinPoint { e1: 0.0, e2: 0.0 };

    pub fn new(e1: f64, e2: f64) -> Result<Self, GeometryError> {
        let r2 = e1 * e1 + e2 * e2;
        if r2.is_finite() && r2 < 1.0 {
            Ok(KleinPoint { e1, e2 })
        } else {
            Err(GeometryError::OutOfDomain(e1, e2))
        }
    }

    pub fn from_polar(r: f64, theta: f64) -> Result<Self, GeometryError> {
        KleinPoint::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm_sq(self) -> f64 {
        self.e1 * self.e1 + self.e2 * self.e2
    }

    pub fn to_array(self) -> Vec2 {
        [self.e1, self.e2]
    }

    /// Hyperbolic distance via `cosh d = (1 - p.q) / sqrt((1-|p|^2)(1-|q|^2))`.
    pub fn distance(self, q: KleinPoint) -> f64 {
        let num = 1.0 - self.e1 * q.e1 - self.e2 * q.e2;
        let den = ((1.0 - self.norm_sq()) * (1.0 - q.norm_sq())).sqrt();
        let c = (num / den).max(1.0);
        // acosh loses accuracy near 1; use the sinh form there.
        let s2 = c * c - 1.0;
        s2.sqrt().asinh()
    }
}

/// A point of the unit circle, stored by its angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    pub theta: f64,
}

impl CirclePoint {
    pub fn new(theta: f64) -> Self {
        CirclePoint { theta: normalize_angle(theta) }
    }

    pub fn from_xy(x: f64, y: f64) -> Self {
        CirclePoint::new(y.atan2(x))
    }

    pub fn coords(self) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (c, s)
    }

    pub fn to_array(self) -> Vec2 {
        let (c, s) = self.coords();
        [c, s]
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// 3×3 matrix, row major.
pub type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_apply(a: &Mat3, v: MinkVec) -> MinkVec {
    let x = v.to_array();
    let r = |i: usize| a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2];
    MinkVec::new(r(0), r(1), r(2))
}

/// Element of the identity component of O(1,2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearIsometry {
    m: Mat3,
}

impl LinearIsometry {
    pub const IDENTITY: LinearIsometry = LinearIsometry { m: IDENTITY };

    /// Validates `A^T J A = J`, `det A = 1` and preservation of the upper sheet.
    pub fn new(m: Mat3) -> Result<Self, GeometryError> {
        let defect = isometry_defect(&m);
        let det = det3(&m);
        if defect <= EPS_MAT && (det - 1.0).abs() <= 1e-8 * scale_sq(&m) && m[0][0] > 0.0 {
            Ok(LinearIsometry { m })
        } else {
            Err(GeometryError::NotIsometry(defect.max((det - 1.0).abs())))
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// Boost of rapidity `rho` moving the origin towards direction `alpha`.
    pub fn boost(rho: f64, alpha: f64) -> Self {
        let (ch, sh) = (rho.cosh(), rho.sinh());
        let b = [[ch, sh, 0.0], [sh, ch, 0.0], [0.0, 0.0, 1.0]];
        let r = LinearIsometry::rotation(alpha);
        r.compose(&LinearIsometry { m: b }).compose(&r.inverse())
    }

    pub fn rotation(alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        LinearIsometry { m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]] }
    }

    /// Isometry sending the disk point `p` to the origin.
    pub fn recentering(p: KleinPoint) -> Self {
        let r = p.norm_sq().sqrt();
        if r == 0.0 {
            return LinearIsometry::IDENTITY;
        }
        LinearIsometry::boost(-r.atanh(), p.e2.atan2(p.e1))
    }

    pub fn apply(&self, v: MinkVec) -> MinkVec {
        mat_apply(&self.m, v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearIsometry) -> LinearIsometry {
        LinearIsometry { m: mat_mul(&self.m, &other.m) }
    }

    /// `A^{-1} = J A^T J`.
    pub fn inverse(&self) -> LinearIsometry {
        let mut inv = [[0.0; 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                let sign = if (i == 0) != (j == 0) { -1.0 } else { 1.0 };
                *entry = sign * self.m[j][i];
            }
        }
        LinearIsometry { m: inv }
    }

    /// Klein action `A·eta = Pi(A(1, eta))`.
    pub fn klein_action(&self, p: KleinPoint) -> KleinPoint {
        let y = self.apply(MinkVec::lift(p));
        KleinPoint { e1: y.x1 / y.x0, e2: y.x2 / y.x0 }
    }

    /// Continuous extension of the Klein action to the boundary circle.
    pub fn boundary_action(&self, z: CirclePoint) -> CirclePoint {
        let y = self.apply(MinkVec::lift_circle(z));
        CirclePoint::from_xy(y.x1, y.x2)
    }

    /// Jacobian of `eta -> A·eta`, rows indexed by output coordinate.
    pub fn jacobian(&self, p: KleinPoint) -> [[f64; 2]; 2] {
        let m = &self.m;
        let y = self.apply(MinkVec::lift(p));
        let yy = [y.x0, y.x1, y.x2];
        let mut jac = [[0.0; 2]; 2];
        for (i, row) in jac.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (m[i + 1][j + 1] * y.x0 - yy[i + 1] * m[0][j + 1]) / (y.x0 * y.x0);
            }
        }
        jac
    }

    /// Pushforward `A_* v` of a tangent vector `v` based at `p`.
    pub fn pushforward(&self, p: KleinPoint, v: Vec2) -> Vec2 {
        let j = self.jacobian(p);
        [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]]
    }
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn scale_sq(m: &Mat3) -> f64 {
    let s = m.iter().flatten().fold(1.0f64, |acc, x| acc.max(x.abs()));
    s * s
}

/// Max entry of `A^T J A - J`, relative to the squared entry scale.
pub fn isometry_defect(m: &Mat3) -> f64 {
    let j = [-1.0, 1.0, 1.0];
    let mut worst = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let g: f64 = (0..3).map(|k| m[k][a] * j[k] * m[k][b]).sum();
            let target = if a == b { j[a] } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst / scale_sq(m)
}

/// Differential of the radial projection at `(1, p)` applied to `v`.
pub fn radial_diff(p: KleinPoint, v: MinkVec) -> Vec2 {
    [v.x1 - p.e1 * v.x0, v.x2 - p.e2 * v.x0]
}

/// Killing field of `sigma` evaluated at `p`.
pub fn killing_eval(sigma: MinkVec, p: KleinPoint) -> Vec2 {
    let w = radial_diff(p, MinkVec::lift(p).cross(sigma));
    if FLIP_KILLING_SIGN.load(Ordering::Relaxed) {
        [-w[0], -w[1]]
    } else {
        w
    }
}

/// The matrix of `y -> y ⊠ sigma`.
pub fn lambda_matrix(sigma: MinkVec) -> Mat3 {
    let basis = [MinkVec::new(1.0, 0.0, 0.0), MinkVec::new(0.0, 1.0, 0.0), MinkVec::new(0.0, 0.0, 1.0)];
    let mut m = [[0.0; 3]; 3];
    for (j, e) in basis.iter().enumerate() {
        let col = e.cross(sigma).to_array();
        for i in 0..3 {
            m[i][j] = col[i];
        }
    }
    m
}

/// `exp(t Λ(sigma))` by scaling and squaring a Taylor series.
pub fn exp_killing(sigma: MinkVec, t: f64) -> LinearIsometry {
    let mut a = lambda_matrix(sigma);
    for x in a.iter_mut().flatten() {
        *x *= t;
    }
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    for x in a.iter_mut().flatten() {
        *x *= scale;
    }
    let mut result = IDENTITY;
    let mut term = IDENTITY;
    for k in 1..=18 {
        term = mat_mul(&term, &a);
        let inv_k = 1.0 / k as f64;
        for x in term.iter_mut().flatten() {
            *x *= inv_k;
        }
        for i in 0..3 {
            for j in 0..3 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    LinearIsometry { m: result }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalClass {
    Hyperbolic,
    Parabolic,
    Elliptic,
    Zero,
}

pub fn classify(sigma: MinkVec) -> CausalClass {
    if sigma.euclid_norm() <= EPS_CAUSAL {
        return CausalClass::Zero;
    }
    let q = sigma.norm_sq();
    if q > EPS_CAUSAL {
        CausalClass::Hyperbolic
    } else if q < -EPS_CAUSAL {
        CausalClass::Elliptic
    } else {
        CausalClass::Parabolic
    }
}

/// Ideal endpoints of the chord `{eta : <(1, eta), sigma> = 0}`.
///
/// With `sigma1 + i sigma2 = R e^{i alpha}` the chord meets the circle at
/// `alpha ∓ acos(sigma0 / R)`; the arc between them through `alpha` is where
/// the support function of `sigma` is positive.
pub fn axis_endpoints(sigma: MinkVec) -> Result<(CirclePoint, CirclePoint), GeometryError> {
    if classify(sigma) != CausalClass::Hyperbolic {
        return Err(GeometryError::NotHyperbolic(sigma.norm_sq()));
    }
    let r = sigma.x1.hypot(sigma.x2);
    let alpha = sigma.x2.atan2(sigma.x1);
    let beta = (sigma.x0 / r).clamp(-1.0, 1.0).acos();
    Ok((CirclePoint::new(alpha - beta), CirclePoint::new(alpha + beta)))
}
