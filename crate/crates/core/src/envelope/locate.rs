//! Point location in a subdivision of an inscribed convex polygon by
//! pairwise disjoint chords.
//!
//! The dual graph of such a subdivision is a tree and every chord splits the
//! disk, so a query descends a centroid decomposition of that tree: at each
//! centroid the point is either inside, on a chord, or beyond exactly one
//! side, and the component behind that side is handled by a child centroid.

/// Distance to a chord below which a point is reported on it.
pub const EDGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Facet(usize),
    /// On the chord shared by two facets, given by bending edge id.
    Edge(usize),
}

/// Bending edge (if the chord bends) and facet on the other side of a chord.
pub(crate) type Across = (Option<usize>, usize);

#[derive(Clone, Debug)]
struct Side {
    normal: [f64; 2],
    offset: f64,
    /// Set when the side is a chord.
    across: Option<Across>,
}

#[derive(Clone, Debug)]
pub(crate) struct Locator {
    sides: Vec<Vec<Side>>,
    child: Vec<Vec<Option<usize>>>,
    root: usize,
}

impl Locator {
    /// `polygons[f]` lists the vertices of facet `f` counter-clockwise;
    /// `across[f][k]` names the bending edge and neighbour behind side `k`.
    pub(crate) fn new(polygons: &[Vec<[f64; 2]>], across: &[Vec<Option<Across>>]) -> Self {
        let sides: Vec<Vec<Side>> = polygons
            .iter()
            .zip(across)
            .map(|(poly, acr)| {
                let k = poly.len();
                (0..k)
                    .map(|i| {
                        let (u, w) = (poly[i], poly[(i + 1) % k]);
                        let (dx, dy) = (w[0] - u[0], w[1] - u[1]);
                        let len = dx.hypot(dy);
                        let normal = [-dy / len, dx / len];
                        Side { normal, offset: normal[0] * u[0] + normal[1] * u[1], across: acr[i] }
                    })
                    .collect()
            })
            .collect();
        let n = polygons.len();
        let mut child: Vec<Vec<Option<usize>>> = sides.iter().map(|s| vec![None; s.len()]).collect();
        let mut removed = vec![false; n];
        let root = decompose(0, &sides, &mut removed, &mut child);
        Locator { sides, child, root }
    }

    pub(crate) fn locate(&self, p: [f64; 2]) -> Location {
        let mut c = self.root;
        loop {
            let sides = &self.sides[c];
            let mut worst = (f64::INFINITY, usize::MAX);
            let mut nearest_chord = (f64::INFINITY, usize::MAX);
            for (k, s) in sides.iter().enumerate() {
                let d = s.normal[0] * p[0] + s.normal[1] * p[1] - s.offset;
                if d < worst.0 {
                    worst = (d, k);
                }
                if matches!(s.across, Some((Some(_), _))) && d.abs() < nearest_chord.0 {
                    nearest_chord = (d.abs(), k);
                }
            }
            if nearest_chord.0 <= EDGE_TOL && worst.0 >= -EDGE_TOL {
                return Location::Edge(sides[nearest_chord.1].across.and_then(|a| a.0).expect("bending side"));
            }
            if worst.0 >= 0.0 {
                return Location::Facet(c);
            }
            match self.child[c][worst.1] {
                Some(next) => c = next,
                // beyond a boundary side (between the polygon and the circle)
                // or numerically behind an ancestor: extend the facet plane
                None => return Location::Facet(c),
            }
        }
    }
}

fn decompose(start: usize, sides: &[Vec<Side>], removed: &mut [bool], child: &mut [Vec<Option<usize>>]) -> usize {
    // component of `start`, in DFS preorder with parents
    let mut order = Vec::new();
    let mut parent = Vec::new();
    let mut stack = vec![(start, usize::MAX)];
    while let Some((v, par)) = stack.pop() {
        order.push(v);
        parent.push(par);
        for s in &sides[v] {
            if let Some((_, w)) = s.across {
                if w != par && !removed[w] {
                    stack.push((w, v));
                }
            }
        }
    }
    let total = order.len();
    let index: std::collections::HashMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut size = vec![1usize; total];
    for i in (1..total).rev() {
        let p = index[&parent[i]];
        size[p] += size[i];
    }
    // centroid: walk from the root towards any child holding more than half
    let mut c = 0;
    loop {
        let v = order[c];
        let heavy = sides[v].iter().filter_map(|s| s.across).find_map(|(_, w)| {
            let j = *index.get(&w)?;
            (parent[j] == v && size[j] * 2 > total).then_some(j)
        });
        match heavy {
            Some(j) => c = j,
            None => break,
        }
    }
    let centroid = order[c];
    removed[centroid] = true;
    for k in 0..sides[centroid].len() {
        if let Some((_, w)) = sides[centroid][k].across {
            if !removed[w] {
                child[centroid][k] = Some(decompose(w, sides, removed, child));
            }
        }
    }
    centroid
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(i: usize, n: usize) -> [f64; 2] {
        let t = TAU * i as f64 / n as f64;
        [t.cos(), t.sin()]
    }

    type Subdivision = (Vec<Vec<[f64; 2]>>, Vec<Vec<Option<Across>>>);

    /// Fan triangulation from vertex 0: a path-shaped dual tree.
    fn fan(n: usize) -> Subdivision {
        let polys: Vec<Vec<[f64; 2]>> = (1..n - 1).map(|i| vec![circle(0, n), circle(i, n), circle(i + 1, n)]).collect();
        let m = polys.len();
        let across = (0..m)
            .map(|t| {
                let before = (t > 0).then(|| (Some(t - 1), t - 1));
                let after = (t + 1 < m).then_some((Some(t), t + 1));
                vec![before, None, after]
            })
            .collect();
        (polys, across)
    }

    #[test]
    fn fan_location_matches_brute_force() {
        let n = 300;
        let (polys, across) = fan(n);
        let loc = Locator::new(&polys, &across);
        let inside = |poly: &Vec<[f64; 2]>, p: [f64; 2]| {
            (0..3).all(|k| {
                let (u, w) = (poly[k], poly[(k + 1) % 3]);
                (w[0] - u[0]) * (p[1] - u[1]) - (w[1] - u[1]) * (p[0] - u[0]) > 1e-9
            })
        };
        for i in 0..2000 {
            let r = 0.97 * ((i * 7919) % 1000) as f64 / 1000.0;
            let t = TAU * ((i * 104729) % 997) as f64 / 997.0;
            let p = [r * t.cos(), r * t.sin()];
            if let Some(expected) = polys.iter().position(|poly| inside(poly, p)) {
                assert_eq!(loc.locate(p), Location::Facet(expected));
            }
        }
    }

    #[test]
    fn reports_points_on_chords() {
        let (polys, across) = fan(8);
        let loc = Locator::new(&polys, &across);
        let a = circle(0, 8);
        let b = circle(3, 8);
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        // chord 0-3 separates triangles 1 and 2, edge id 1
        assert_eq!(loc.locate(mid), Location::Edge(1));
    }
}
