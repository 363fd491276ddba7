//! Half-pipe space in the Klein chart `D² × R`.
//!
//! A Minkowski vector `sigma` is dual to the spacelike plane
//! `t = <(1, eta), sigma>`, the graph of an affine function over the disk.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mink::{CirclePoint, KleinPoint, LinearIsometry, MinkVec, EPS_CAUSAL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HalfPipeError {
    #[error("planes do not meet in a spacelike geodesic (<dv,dv> = {0})")]
    NotTransverse(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpPoint {
    pub base: KleinPoint,
    pub t: f64,
}

/// `Is(A, v)`: the Half-pipe isometry induced by the Minkowski isometry
/// `x -> A x + v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpIsometry {
    pub a: LinearIsometry,
    pub v: MinkVec,
}

impl HpIsometry {
    pub const IDENTITY: HpIsometry = HpIsometry { a: LinearIsometry::IDENTITY, v: MinkVec::ZERO };

    pub fn new(a: LinearIsometry, v: MinkVec) -> Self {
        HpIsometry { a, v }
    }

    /// `self ∘ other`, i.e. `(A, v)(B, w) = (AB, v + A w)`.
    pub fn compose(&self, other: &HpIsometry) -> HpIsometry {
        HpIsometry { a: self.a.compose(&other.a), v: self.v + self.a.apply(other.v) }
    }

    pub fn inverse(&self) -> HpIsometry {
        let inv = self.a.inverse();
        HpIsometry { a: inv, v: -inv.apply(self.v) }
    }

    /// The dual vector of the image of the plane dual to `sigma`.
    pub fn apply_plane(&self, sigma: MinkVec) -> MinkVec {
        self.a.apply(sigma) + self.v
    }
}

/// Coefficients `(alpha, beta, gamma)` of `a(eta) = alpha + beta eta1 + gamma eta2`.
pub fn dual_plane_coeffs(sigma: MinkVec) -> (f64, f64, f64) {
    (-sigma.x0, sigma.x1, sigma.x2)
}

pub fn coeffs_to_dual(alpha: f64, beta: f64, gamma: f64) -> MinkVec {
    MinkVec::new(-alpha, beta, gamma)
}

/// Value at `p` of the affine function whose graph is the plane dual to `sigma`.
pub fn plane_value(sigma: MinkVec, p: KleinPoint) -> f64 {
    MinkVec::lift(p).inner(sigma)
}

/// Height function `L = t / sqrt(1 - |eta|^2)`.
pub fn height(p: HpPoint) -> f64 {
    p.t / (1.0 - p.base.norm_sq()).sqrt()
}

pub fn hp_apply(iso: &HpIsometry, p: HpPoint) -> HpPoint {
    let y = iso.a.apply(MinkVec::lift(p.base));
    let base = KleinPoint { e1: y.x1 / y.x0, e2: y.x2 / y.x0 };
    HpPoint { base, t: p.t / y.x0 + MinkVec::lift(base).inner(iso.v) }
}

/// Continuous extension of [`hp_apply`] to the boundary cylinder `S¹ × R`.
pub fn hp_apply_boundary(iso: &HpIsometry, z: CirclePoint, t: f64) -> (CirclePoint, f64) {
    let y = iso.a.apply(MinkVec::lift_circle(z));
    let w = CirclePoint::from_xy(y.x1, y.x2);
    (w, t / y.x0 + MinkVec::lift_circle(w).inner(iso.v))
}

/// Angle between the spacelike planes dual to `v1` and `v2`.
pub fn plane_angle(v1: MinkVec, v2: MinkVec) -> Result<f64, HalfPipeError> {
    let q = (v1 - v2).norm_sq();
    if q < -EPS_CAUSAL {
        Err(HalfPipeError::NotTransverse(q))
    } else {
        Ok(q.max(0.0).sqrt())
    }
}
