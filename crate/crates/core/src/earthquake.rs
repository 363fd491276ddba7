//! Left and right infinitesimal earthquakes.
//!
//! At a point `p` of the disk the earthquake is the Killing field dual to a
//! support plane of the envelope at `p`: the lower envelope gives the left
//! earthquake, the upper one the right earthquake. On a bending chord the
//! support plane is not unique and an [`EdgePolicy`] picks one of the pencil.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::{EnvelopeError, EnvelopePair, Side, SupportPlanes};
use crate::field::CircleField;
use crate::mink::{axis_endpoints, classify, killing_eval, CausalClass, CirclePoint, KleinPoint, MinkVec, Vec2, EPS_CAUSAL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuakeSide {
    Left,
    Right,
}

impl QuakeSide {
    pub fn envelope_side(self) -> Side {
        match self {
            QuakeSide::Left => Side::Lower,
            QuakeSide::Right => Side::Upper,
        }
    }
}

/// Choice of support plane on a bending chord, as a point of the segment
/// from the first extreme dual to the second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgePolicy {
    Medial,
    ExtremeFirst,
    ExtremeSecond,
    Blend(f64),
}

impl EdgePolicy {
    pub const ALL: [EdgePolicy; 4] =
        [EdgePolicy::Medial, EdgePolicy::ExtremeFirst, EdgePolicy::ExtremeSecond, EdgePolicy::Blend(0.25)];

    pub fn pick(self, first: MinkVec, second: MinkVec) -> MinkVec {
        match self {
            EdgePolicy::Medial => 0.5 * (first + second),
            EdgePolicy::ExtremeFirst => first,
            EdgePolicy::ExtremeSecond => second,
            EdgePolicy::Blend(s) => (1.0 - s) * first + s * second,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EarthquakeError {
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("point ({0}, {1}) is not interior to a stratum")]
    NotInStratum(f64, f64),
    #[error("segment between the points misses the axis of the comparison field")]
    NotTransverse,
    #[error("comparison field is not hyperbolic (<d,d> = {0})")]
    NonSpacelikeDelta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Left,
    Right,
    Zero,
}

/// The Killing field `E|S' - E|S` between two strata.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonField {
    pub delta: MinkVec,
    pub axis: Option<(CirclePoint, CirclePoint)>,
    pub orientation: Orientation,
}

#[derive(Clone, Copy, Debug)]
pub struct EarthquakeField<'e> {
    envelope: &'e EnvelopePair,
    side: QuakeSide,
    policy: EdgePolicy,
}

impl<'e> EarthquakeField<'e> {
    pub fn new(envelope: &'e EnvelopePair, side: QuakeSide, policy: EdgePolicy) -> Self {
        EarthquakeField { envelope, side, policy }
    }

    pub fn envelope(&self) -> &'e EnvelopePair {
        self.envelope
    }

    pub fn side(&self) -> QuakeSide {
        self.side
    }

    pub fn policy(&self) -> EdgePolicy {
        self.policy
    }

    pub fn with_policy(&self, policy: EdgePolicy) -> Self {
        EarthquakeField { policy, ..*self }
    }

    /// Dual of the support plane used at `p`.
    pub fn sigma_at(&self, p: KleinPoint) -> Result<MinkVec, EnvelopeError> {
        Ok(match self.envelope.support_planes_at(p, self.side.envelope_side())? {
            SupportPlanes::Unique(s) => s,
            SupportPlanes::Edge { first, second, .. } => self.policy.pick(first, second),
            SupportPlanes::Vertex(duals) => self.policy.pick(duals[0], duals[duals.len() - 1]),
        })
    }

    pub fn eval(&self, p: KleinPoint) -> Result<Vec2, EnvelopeError> {
        Ok(killing_eval(self.sigma_at(p)?, p))
    }

    fn stratum(&self, p: KleinPoint) -> Result<usize, EarthquakeError> {
        self.envelope.facet_at(self.side.envelope_side(), p)?.ok_or(EarthquakeError::NotInStratum(p.e1, p.e2))
    }

    /// Comparison field from the stratum of `p1` to the stratum of `p2`.
    pub fn comparison(&self, p1: KleinPoint, p2: KleinPoint) -> Result<ComparisonField, EarthquakeError> {
        let (s1, s2) = (self.stratum(p1)?, self.stratum(p2)?);
        let delta = self.envelope.dual_difference(self.side.envelope_side(), s1, s2);
        if delta.euclid_norm() <= EPS_CAUSAL {
            return Ok(ComparisonField { delta, axis: None, orientation: Orientation::Zero });
        }
        // causal type and axis are scale invariant; classify at unit scale so
        // that small genuine bending is not mistaken for a parabolic field
        let unit = (1.0 / delta.euclid_norm()) * delta;
        if classify(unit) != CausalClass::Hyperbolic {
            return Err(EarthquakeError::NonSpacelikeDelta(delta.norm_sq()));
        }
        let (a, b) = axis_endpoints(unit).expect("hyperbolic");
        let x0 = segment_chord_crossing(p1, p2, a, b).ok_or(EarthquakeError::NotTransverse)?;
        let v = [p2.e1 - p1.e1, p2.e2 - p1.e2];
        let w = killing_eval(delta, x0);
        let det = v[0] * w[1] - v[1] * w[0];
        let orientation = if det > 0.0 { Orientation::Left } else { Orientation::Right };
        Ok(ComparisonField { delta, axis: Some((a, b)), orientation })
    }

    /// Comparison field across bending edge `k`, from the first facet to the
    /// second, probed next to the chord midpoint.
    pub fn edge_comparison(&self, k: usize) -> Result<ComparisonField, EarthquakeError> {
        let (p1, p2) = straddle(self.envelope, self.side.envelope_side(), k);
        self.comparison(p1, p2)
    }

    /// Values along the radius towards `z` at the given radii.
    pub fn boundary_trace(&self, z: CirclePoint, radii: &[f64]) -> Result<Vec<Vec2>, EnvelopeError> {
        let (x, y) = z.coords();
        radii.iter().map(|&r| self.eval(KleinPoint { e1: r * x, e2: r * y })).collect()
    }
}

/// Points just inside the two facets adjacent to bending edge `k`, near the
/// chord midpoint.
pub fn straddle(e: &EnvelopePair, side: Side, k: usize) -> (KleinPoint, KleinPoint) {
    const STEP: f64 = 1e-3;
    let edge = &e.bending_edges(side)[k];
    let (u, w) = (e.samples()[edge.ends[0]].point, e.samples()[edge.ends[1]].point);
    let mid = [(u[0] + w[0]) / 2.0, (u[1] + w[1]) / 2.0];
    let toward = |f: usize| {
        let c = e.facet_interior_point(side, f);
        KleinPoint { e1: mid[0] + STEP * (c.e1 - mid[0]), e2: mid[1] + STEP * (c.e2 - mid[1]) }
    };
    (toward(edge.facet_first), toward(edge.facet_second))
}

/// Intersection of the segment `p1 p2` with the chord `a b`, if they cross.
fn segment_chord_crossing(p1: KleinPoint, p2: KleinPoint, a: CirclePoint, b: CirclePoint) -> Option<KleinPoint> {
    let (a, b) = (a.to_array(), b.to_array());
    let d = [b[0] - a[0], b[1] - a[1]];
    let side = |p: KleinPoint| d[0] * (p.e2 - a[1]) - d[1] * (p.e1 - a[0]);
    let (s1, s2) = (side(p1), side(p2));
    if s1 * s2 >= 0.0 {
        return None;
    }
    let t = s1 / (s1 - s2);
    Some(KleinPoint { e1: p1.e1 + t * (p2.e1 - p1.e1), e2: p1.e2 + t * (p2.e2 - p1.e2) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyReport {
    pub values: Vec<(EdgePolicy, Vec2)>,
    /// Whether the support plane at the point is unique.
    pub unique: bool,
    pub agree: bool,
}

/// Earthquake values at `p` under every edge policy.
pub fn policy_compare_on(e: &EnvelopePair, side: QuakeSide, p: KleinPoint) -> Result<PolicyReport, EnvelopeError> {
    let unique = matches!(e.support_planes_at(p, side.envelope_side())?, SupportPlanes::Unique(_));
    let values = EdgePolicy::ALL
        .iter()
        .map(|&policy| Ok((policy, EarthquakeField::new(e, side, policy).eval(p)?)))
        .collect::<Result<Vec<_>, EnvelopeError>>()?;
    let agree = values.iter().all(|(_, v)| *v == values[0].1);
    Ok(PolicyReport { values, unique, agree })
}

/// Builds the envelope of `f` on `n` nodes and compares policies at `p` on
/// the left earthquake.
pub fn policy_compare(f: &CircleField, n: usize, p: KleinPoint) -> Result<PolicyReport, EnvelopeError> {
    let e = EnvelopePair::build(f, n, &[])?;
    policy_compare_on(&e, QuakeSide::Left, p)
}
