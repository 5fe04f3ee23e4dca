//! Triangular meshes with tagged boundary edges.

mod generate;
mod io;
mod refine;

use std::collections::HashMap;

pub use generate::{generate, Corridor, DomainSpec, Hole};
pub use io::{read_mesh, write_mesh};
pub use refine::refine_region;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryEdge {
    /// Oriented as in the owning triangle, so the domain lies to the left.
    pub nodes: [usize; 2],
    pub tag: usize,
}

/// Conforming P1 triangulation. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    tag_names: Vec<String>,
}

/// Name used for every boundary edge until [`Mesh::tag_boundary`] is applied.
pub const DEFAULT_TAG: &str = "boundary";

/// Geometric test on an edge midpoint, paired with the tag it assigns.
pub struct TagRule<'a> {
    pub tag: String,
    pub predicate: Box<dyn Fn(Point) -> bool + 'a>,
}

impl<'a> TagRule<'a> {
    pub fn new(tag: impl Into<String>, predicate: impl Fn(Point) -> bool + 'a) -> Self {
        Self {
            tag: tag.into(),
            predicate: Box::new(predicate),
        }
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edges used by a single triangle, oriented counterclockwise with respect to it,
/// in triangle order.
fn topological_boundary(triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    if let Some((e, _)) = count.iter().find(|(_, &c)| c > 2) {
        return Err(Error::Consistency(format!("edge {:?} is shared by more than two triangles", e)));
    }
    let mut out = Vec::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&edge_key(a, b)] == 1 {
                out.push([a, b]);
            }
        }
    }
    Ok(out)
}

impl Mesh {
    /// Builds a mesh from nodes and triangles. Triangles with negative orientation
    /// are flipped; degenerate ones are rejected. The boundary is recovered from
    /// the topology and carries [`DEFAULT_TAG`].
    pub fn new(nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (i, t) in triangles.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::InvalidInput(format!("triangle {i} references a missing node")));
            }
            let a = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if a == 0.0 || !a.is_finite() {
                return Err(Error::InvalidInput(format!("triangle {i} is degenerate")));
            }
            if a < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut used = vec![false; nodes.len()];
        for t in &triangles {
            for &v in t {
                used[v] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!("node {i} is not used by any triangle")));
        }
        let boundary_edges = topological_boundary(&triangles)?
            .into_iter()
            .map(|nodes| BoundaryEdge { nodes, tag: 0 })
            .collect();
        Ok(Self {
            nodes,
            triangles,
            boundary_edges,
            tag_names: vec![DEFAULT_TAG.to_string()],
        })
    }

    /// Like [`Mesh::new`] but with given boundary tags; every topological boundary
    /// edge must appear exactly once.
    pub fn with_boundary(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, edges: Vec<([usize; 2], String)>) -> Result<Self> {
        let mut mesh = Self::new(nodes, triangles)?;
        let mut given: HashMap<(usize, usize), String> = HashMap::new();
        for (e, tag) in edges {
            if given.insert(edge_key(e[0], e[1]), tag).is_some() {
                return Err(Error::InvalidInput(format!("boundary edge {:?} listed twice", e)));
            }
        }
        let mut names: Vec<String> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        for be in &mut mesh.boundary_edges {
            let tag = given
                .remove(&edge_key(be.nodes[0], be.nodes[1]))
                .ok_or_else(|| Error::InvalidInput(format!("boundary edge {:?} has no tag", be.nodes)))?;
            let next = names.len();
            let id = *ids.entry(tag.clone()).or_insert_with(|| {
                names.push(tag);
                next
            });
            be.tag = id;
        }
        if let Some((e, _)) = given.into_iter().next() {
            return Err(Error::InvalidInput(format!("edge {:?} is not on the boundary", e)));
        }
        if names.is_empty() {
            names.push(DEFAULT_TAG.to_string());
        }
        mesh.tag_names = names;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn tag_id(&self, name: &str) -> Option<usize> {
        self.tag_names.iter().position(|n| n == name)
    }

    pub fn tag_name(&self, id: usize) -> &str {
        &self.tag_names[id]
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_midpoint(&self, e: &BoundaryEdge) -> Point {
        let (a, b) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Longest edge over triangles selected by `keep`.
    pub fn max_edge_length_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let mut h: f64 = 0.0;
        for t in (0..self.num_triangles()).filter(|&t| keep(t)) {
            let v = self.vertices(t);
            for k in 0..3 {
                let (p, q) = (v[k], v[(k + 1) % 3]);
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        h
    }

    pub fn max_edge_length(&self) -> f64 {
        self.max_edge_length_where(|_| true)
    }

    pub fn min_edge_length(&self) -> f64 {
        let mut h = f64::INFINITY;
        for t in 0..self.num_triangles() {
            let v = self.vertices(t);
            for k in 0..3 {
                let (p, q) = (v[k], v[(k + 1) % 3]);
                h = h.min((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        h
    }

    /// Reassigns all boundary tags; the first rule whose predicate holds at the
    /// edge midpoint wins.
    pub fn tag_boundary(&self, rules: &[TagRule<'_>]) -> Result<Mesh> {
        let mut names: Vec<String> = Vec::new();
        for r in rules {
            if !names.contains(&r.tag) {
                names.push(r.tag.clone());
            }
        }
        let mut edges = Vec::with_capacity(self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = self.edge_midpoint(e);
            let rule = rules
                .iter()
                .find(|r| (r.predicate)(m))
                .ok_or_else(|| Error::Config(format!("boundary edge with midpoint ({:.6}, {:.6}) matches no tag rule", m[0], m[1])))?;
            let tag = names.iter().position(|n| *n == rule.tag).expect("tag registered above");
            edges.push(BoundaryEdge { nodes: e.nodes, tag });
        }
        if names.is_empty() {
            names.push(DEFAULT_TAG.to_string());
        }
        Ok(Mesh {
            nodes: self.nodes.clone(),
            triangles: self.triangles.clone(),
            boundary_edges: edges,
            tag_names: names,
        })
    }

    /// Sorted list of nodes on edges carrying `tag`.
    pub fn nodes_with_tag(&self, tag: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().filter(|e| e.tag == tag).flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Lumped nodal areas (one third of each adjacent triangle).
    pub fn nodal_areas(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.num_nodes()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.area(t) / 3.0;
            for &v in tri {
                w[v] += a;
            }
        }
        w
    }

    /// Number of interior edges plus boundary edges.
    pub fn num_edges(&self) -> usize {
        let mut set = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                set.insert(edge_key(t[k], t[(k + 1) % 3]));
            }
        }
        set.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 3, 2]]).unwrap()
    }

    #[test]
    fn orientation_fixed_and_boundary_found() {
        let m = two_triangles();
        for t in 0..2 {
            assert!(m.area(t) > 0.0);
        }
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.total_area(), 1.0);
    }

    #[test]
    fn degenerate_and_orphan_rejected() {
        assert!(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]).is_err());
        assert!(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]], vec![[0, 1, 2]]).is_err());
        assert!(Mesh::new(vec![[0.0, 0.0]], vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn first_rule_wins() {
        let m = two_triangles();
        let tagged = m
            .tag_boundary(&[
                TagRule::new("bottom", |p| p[1] == 0.0),
                TagRule::new("left_or_bottom", |p| p[0] == 0.0 || p[1] == 0.0),
                TagRule::new("rest", |_| true),
            ])
            .unwrap();
        let bottom = tagged.tag_id("bottom").unwrap();
        let count = tagged.boundary_edges().iter().filter(|e| e.tag == bottom).count();
        assert_eq!(count, 1);
        let lb = tagged.tag_id("left_or_bottom").unwrap();
        assert_eq!(tagged.boundary_edges().iter().filter(|e| e.tag == lb).count(), 1);
    }

    #[test]
    fn uncovered_edge_names_midpoint() {
        let m = two_triangles();
        let err = m.tag_boundary(&[TagRule::new("top", |p| p[1] == 1.0)]).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("0.500000")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn explicit_boundary_roundtrip() {
        let m = two_triangles();
        let edges: Vec<_> = m.boundary_edges().iter().map(|e| (e.nodes, "b".to_string())).collect();
        let m2 = Mesh::with_boundary(m.nodes().to_vec(), m.triangles().to_vec(), edges).unwrap();
        assert_eq!(m2.tag_names(), &["b".to_string()]);
        let missing = Mesh::with_boundary(m.nodes().to_vec(), m.triangles().to_vec(), vec![]);
        assert!(missing.is_err());
    }
}
