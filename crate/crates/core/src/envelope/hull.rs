//! Incremental 3D convex hull for points on the vertical cylinder over the
//! unit circle, with exact orientation predicates.
//!
//! Every input point projects to a distinct circle point, so every point is
//! a hull vertex and no three projections are collinear. A new point lies
//! beyond the projected boundary edge joining its angular neighbours among
//! the points inserted so far, and one of the two hull triangles on that edge
//! always sees it. The visible region is then grown by adjacency.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robust::{orient3d, Coord3D};

/// Outcome of the hull computation.
pub(crate) enum Hull {
    /// Triangles with counter-clockwise orientation seen from outside.
    Solid(Vec<[usize; 3]>),
    /// All points are exactly coplanar.
    Flat,
}

fn c3(p: &[f64; 3]) -> Coord3D<f64> {
    Coord3D { x: p[0], y: p[1], z: p[2] }
}

/// Positive when `d` lies on the inner side of the face `(a, b, c)`.
fn orient(pts: &[[f64; 3]], a: usize, b: usize, c: usize, d: usize) -> f64 {
    orient3d(c3(&pts[a]), c3(&pts[b]), c3(&pts[c]), c3(&pts[d]))
}

struct Builder<'a> {
    pts: &'a [[f64; 3]],
    faces: Vec<[usize; 3]>,
    alive: Vec<bool>,
    edges: HashMap<(usize, usize), usize>,
}

impl<'a> Builder<'a> {
    fn add_face(&mut self, f: [usize; 3]) -> usize {
        let id = self.faces.len();
        for k in 0..3 {
            self.edges.insert((f[k], f[(k + 1) % 3]), id);
        }
        self.faces.push(f);
        self.alive.push(true);
        id
    }

    fn remove_face(&mut self, id: usize) {
        let f = self.faces[id];
        for k in 0..3 {
            if self.edges.get(&(f[k], f[(k + 1) % 3])) == Some(&id) {
                self.edges.remove(&(f[k], f[(k + 1) % 3]));
            }
        }
        self.alive[id] = false;
    }

    fn visible(&self, id: usize, p: usize) -> bool {
        let f = self.faces[id];
        orient(self.pts, f[0], f[1], f[2], p) < 0.0
    }

    fn insert(&mut self, p: usize, prev: usize, next: usize) {
        let mut seeds: Vec<usize> = [(prev, next), (next, prev)]
            .iter()
            .filter_map(|e| self.edges.get(e).copied())
            .filter(|&f| self.visible(f, p))
            .collect();
        if seeds.is_empty() {
            seeds = (0..self.faces.len()).filter(|&f| self.alive[f] && self.visible(f, p)).collect();
        }
        assert!(!seeds.is_empty(), "cylinder point must see the hull");

        let mut mark: HashMap<usize, bool> = HashMap::new();
        let mut stack = seeds;
        let mut visible = Vec::new();
        for &s in &stack {
            mark.insert(s, true);
        }
        while let Some(f) = stack.pop() {
            visible.push(f);
            let v = self.faces[f];
            for k in 0..3 {
                let g = self.edges[&(v[(k + 1) % 3], v[k])];
                if let std::collections::hash_map::Entry::Vacant(e) = mark.entry(g) {
                    let vis = self.visible(g, p);
                    e.insert(vis);
                    if vis {
                        stack.push(g);
                    }
                }
            }
        }

        let mut horizon = Vec::new();
        for &f in &visible {
            let v = self.faces[f];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let g = self.edges[&(b, a)];
                if !mark[&g] {
                    horizon.push((a, b));
                }
            }
        }
        for &f in &visible {
            self.remove_face(f);
        }
        for (a, b) in horizon {
            self.add_face([a, b, p]);
        }
    }
}

/// Hull of points sorted by the angle of their projection.
pub(crate) fn cylinder_hull(pts: &[[f64; 3]]) -> Hull {
    let n = pts.len();
    assert!(n >= 3);
    // random insertion order keeps the expected number of face updates linear
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let (i0, i1, i2) = (order[0], order[1], order[2]);
    let Some(k) = (3..n).find(|&k| orient(pts, i0, i1, i2, order[k]) != 0.0) else {
        return Hull::Flat;
    };
    order.swap(3, k);
    let tet = [i0, i1, i2, order[3]];
    let mut b = Builder { pts, faces: Vec::with_capacity(8 * n), alive: Vec::new(), edges: HashMap::with_capacity(8 * n) };
    for skip in 0..4 {
        let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| tet[i]).collect();
        if orient(pts, f[0], f[1], f[2], tet[skip]) < 0.0 {
            f.swap(1, 2);
        }
        b.add_face([f[0], f[1], f[2]]);
    }
    let mut inserted: BTreeSet<usize> = tet.iter().copied().collect();
    for &j in &order[4..] {
        let prev = inserted.range(..j).next_back().or_else(|| inserted.iter().next_back()).copied().unwrap();
        let next = inserted.range(j..).next().or_else(|| inserted.iter().next()).copied().unwrap();
        b.insert(j, prev, next);
        inserted.insert(j);
    }
    let faces = b.faces.iter().zip(&b.alive).filter(|(_, &a)| a).map(|(f, _)| *f).collect();
    Hull::Solid(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn ring(n: usize, phi: impl Fn(f64) -> f64) -> Vec<[f64; 3]> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                [t.cos(), t.sin(), phi(t)]
            })
            .collect()
    }

    fn check_closed(faces: &[[usize; 3]], n: usize) {
        // closed 2-manifold with every point a vertex: F = 2n - 4
        assert_eq!(faces.len(), 2 * n - 4);
        let mut edges = HashMap::new();
        for f in faces {
            for k in 0..3 {
                *edges.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &edges {
            assert_eq!(c, 1);
            assert_eq!(edges.get(&(b, a)), Some(&1));
        }
    }

    fn check_convex(pts: &[[f64; 3]], faces: &[[usize; 3]]) {
        for f in faces {
            for i in 0..pts.len() {
                assert!(orient(pts, f[0], f[1], f[2], i) >= 0.0);
            }
        }
    }

    #[test]
    fn smooth_ring() {
        let pts = ring(200, |t| (3.0 * t).sin() + 0.4 * (2.0 * t).cos());
        let Hull::Solid(f) = cylinder_hull(&pts) else { panic!() };
        check_closed(&f, 200);
        check_convex(&pts, &f);
    }

    #[test]
    fn exactly_flat() {
        assert!(matches!(cylinder_hull(&ring(50, |_| 0.0)), Hull::Flat));
    }

    #[test]
    fn flat_with_one_dip() {
        let mut pts = ring(40, |_| 0.0);
        pts[17][2] = -1.0;
        let Hull::Solid(f) = cylinder_hull(&pts) else { panic!() };
        check_closed(&f, 40);
        check_convex(&pts, &f);
    }

    #[test]
    fn coplanar_halves() {
        let pts = ring(64, |t| t.sin().max(0.0));
        let Hull::Solid(f) = cylinder_hull(&pts) else { panic!() };
        check_closed(&f, 64);
        check_convex(&pts, &f);
    }
}
