//! Conforming longest-edge bisection (Rivara's LEPP algorithm).

use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, Mesh, Point};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

pub(crate) struct Refiner {
    pub nodes: Vec<Point>,
    pub tris: Vec<[usize; 3]>,
    edge_tris: HashMap<(usize, usize), [usize; 2]>,
    tags: HashMap<(usize, usize), usize>,
}

fn len2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

impl Refiner {
    pub fn new(nodes: Vec<Point>, tris: Vec<[usize; 3]>) -> Self {
        let mut edge_tris: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let slot = edge_tris.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert([NONE, NONE]);
                if slot[0] == NONE {
                    slot[0] = t;
                } else {
                    slot[1] = t;
                }
            }
        }
        Self {
            nodes,
            tris,
            edge_tris,
            tags: HashMap::new(),
        }
    }

    pub fn with_tags(mut self, edges: &[BoundaryEdge]) -> Self {
        for e in edges {
            self.tags.insert(edge_key(e.nodes[0], e.nodes[1]), e.tag);
        }
        self
    }

    pub fn tag_of(&self, a: usize, b: usize) -> Option<usize> {
        self.tags.get(&edge_key(a, b)).copied()
    }

    /// Edge key of the longest edge; near-ties go to the smaller key.
    fn longest(&self, t: usize) -> (usize, usize) {
        let tri = self.tris[t];
        let mut best = edge_key(tri[0], tri[1]);
        let mut best_l = len2(self.nodes[tri[0]], self.nodes[tri[1]]);
        for k in 1..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let l = len2(self.nodes[a], self.nodes[b]);
            let key = edge_key(a, b);
            let tie = (l - best_l).abs() <= 1e-12 * l.max(best_l);
            if (!tie && l > best_l) || (tie && key < best) {
                best = key;
                best_l = l;
            }
        }
        best
    }

    fn longest_len(&self, t: usize) -> f64 {
        let (a, b) = self.longest(t);
        len2(self.nodes[a], self.nodes[b]).sqrt()
    }

    fn neighbor(&self, t: usize, e: (usize, usize)) -> Option<usize> {
        let s = self.edge_tris[&e];
        let n = if s[0] == t { s[1] } else { s[0] };
        (n != NONE).then_some(n)
    }

    fn replace(&mut self, e: (usize, usize), old: usize, new: usize) {
        let s = self.edge_tris.get_mut(&e).expect("edge present");
        if s[0] == old {
            s[0] = new;
        } else {
            debug_assert_eq!(s[1], old);
            s[1] = new;
        }
    }

    fn add(&mut self, e: (usize, usize), t: usize) {
        let s = self.edge_tris.entry(e).or_insert([NONE, NONE]);
        if s[0] == NONE {
            s[0] = t;
        } else {
            s[1] = t;
        }
    }

    /// Splits edge `e` and both triangles sharing it.
    fn bisect(&mut self, e: (usize, usize)) {
        let (a, b) = e;
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let m = self.nodes.len();
        self.nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        let owners = self.edge_tris.remove(&e).expect("edge present");
        if let Some(tag) = self.tags.remove(&e) {
            self.tags.insert(edge_key(a, m), tag);
            self.tags.insert(edge_key(m, b), tag);
        }
        for &t in owners.iter().filter(|&&t| t != NONE) {
            let tri = self.tris[t];
            let k = (0..3).find(|&k| edge_key(tri[k], tri[(k + 1) % 3]) == e).expect("triangle owns edge");
            let (p, q, r) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let t2 = self.tris.len();
            self.tris[t] = [p, m, r];
            self.tris.push([m, q, r]);
            self.replace(edge_key(q, r), t, t2);
            self.add(edge_key(p, m), t);
            self.add(edge_key(m, q), t2);
            self.add(edge_key(m, r), t);
            self.add(edge_key(m, r), t2);
        }
    }

    fn lepp_step(&mut self, t: usize) {
        let mut cur = t;
        for _ in 0..100_000 {
            let e = self.longest(cur);
            match self.neighbor(cur, e) {
                Some(n) if self.longest(n) != e => cur = n,
                _ => {
                    self.bisect(e);
                    return;
                }
            }
        }
        let e = self.longest(cur);
        self.bisect(e);
    }

    /// Bisects until every triangle selected by `region` has longest edge ≤ `h`.
    pub fn refine(&mut self, region: &dyn Fn([Point; 3]) -> bool, h: f64) {
        loop {
            let mut changed = false;
            let mut t = 0;
            while t < self.tris.len() {
                loop {
                    let tri = self.tris[t];
                    let v = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
                    if !region(v) || self.longest_len(t) <= h {
                        break;
                    }
                    self.lepp_step(t);
                    changed = true;
                }
                t += 1;
            }
            if !changed {
                break;
            }
        }
    }
}

pub(crate) fn bbox_overlaps(v: [Point; 3], rect: [f64; 4]) -> bool {
    let xmin = v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let xmax = v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let ymin = v.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let ymax = v.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    xmax >= rect[0] && xmin <= rect[1] && ymax >= rect[2] && ymin <= rect[3]
}

/// Refines all triangles whose bounding box meets `rect = [x_min, x_max, y_min, y_max]`
/// until their longest edge is at most `h`. Boundary tags carry over to child edges.
pub fn refine_region(mesh: &Mesh, rect: [f64; 4], h: f64) -> Result<Mesh> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("refinement size must be positive, got {h}")));
    }
    let mut r = Refiner::new(mesh.nodes().to_vec(), mesh.triangles().to_vec()).with_tags(mesh.boundary_edges());
    r.refine(&|v| bbox_overlaps(v, rect), h);
    let fresh = Mesh::new(std::mem::take(&mut r.nodes), std::mem::take(&mut r.tris))?;
    let edges = fresh
        .boundary_edges()
        .iter()
        .map(|e| {
            let tag = r.tag_of(e.nodes[0], e.nodes[1]).expect("boundary edge inherited a tag");
            (e.nodes, mesh.tag_name(tag).to_string())
        })
        .collect();
    Mesh::with_boundary(fresh.nodes().to_vec(), fresh.triangles().to_vec(), edges)
}
