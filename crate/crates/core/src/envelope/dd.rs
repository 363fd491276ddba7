//! Double-double arithmetic for facet planes.
//!
//! Adjacent facets of a finely sampled envelope can differ by less than
//! `1e-7` while their duals are of order one, so their difference loses most
//! of its digits in plain double precision. Triangle planes are solved with
//! about 106 significant bits instead.

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        let q = quick_two_sum(q1, q2);
        q.add(Dd::from(q3))
    }
}

/// Coefficients `(alpha, beta, gamma)` of the plane `z = alpha + beta x +
/// gamma y` through three points with distinct projections.
pub(crate) fn plane_through(p: [[f64; 3]; 3]) -> [Dd; 3] {
    let d = |k: usize, c: usize| Dd::from(p[k][c]).sub(Dd::from(p[0][c]));
    let (x2, y2, z2) = (d(1, 0), d(1, 1), d(1, 2));
    let (x3, y3, z3) = (d(2, 0), d(2, 1), d(2, 2));
    let det = x2.mul(y3).sub(y2.mul(x3));
    let beta = z2.mul(y3).sub(y2.mul(z3)).div(det);
    let gamma = x2.mul(z3).sub(z2.mul(x3)).div(det);
    let alpha = Dd::from(p[0][2]).sub(beta.mul(Dd::from(p[0][0]))).sub(gamma.mul(Dd::from(p[0][1])));
    [alpha, beta, gamma]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_is_accurate() {
        let third = Dd::from(1.0).div(Dd::from(3.0));
        let back = third.mul(Dd::from(3.0)).sub(Dd::from(1.0));
        assert!(back.hi.abs() < 1e-31);
        assert_eq!(third.hi, 1.0 / 3.0);
    }

    #[test]
    fn plane_through_points() {
        let f = |x: f64, y: f64| 0.25 - 0.5 * x + 2.0 * y;
        let pts = [[1.0, 0.0, f(1.0, 0.0)], [0.0, 1.0, f(0.0, 1.0)], [-0.6, -0.8, f(-0.6, -0.8)]];
        let [a, b, c] = plane_through(pts);
        assert!((a.hi - 0.25).abs() < 1e-15 && (b.hi + 0.5).abs() < 1e-15 && (c.hi - 2.0).abs() < 1e-15);
    }
}
