//! Structured mesh generators for the supported domains.

use serde::{Deserialize, Serialize};

use super::refine::{bbox_overlaps, Refiner};
use super::{signed_area, Mesh, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center: [f64; 2],
    pub radius: f64,
}

fn default_segments() -> usize {
    32
}

/// Geometry of the computational domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// (−1, 1)²
    Square,
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// (−1, 1)² without the closed quadrant [0, 1] × [0, 1].
    LShape,
    /// (−1, 1)² minus circular holes, each approximated by a polygon.
    SquareWithHoles {
        holes: Vec<Hole>,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    /// (−1, 1)² cut along x₂ = 0 from the left edge to the tip (tip_x, 0).
    SlitSquare {
        tip_x: f64,
    },
}

/// Rectangle `[x_min, x_max] × [y_min, y_max]` refined to edge length `h_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h_min: f64,
}

impl Corridor {
    pub fn rect(&self) -> [f64; 4] {
        [self.x_min, self.x_max, self.y_min, self.y_max]
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}

const TOL: f64 = 1e-12;

impl DomainSpec {
    pub fn bbox(&self) -> [f64; 4] {
        match self {
            DomainSpec::Rectangle { x_min, x_max, y_min, y_max } => [*x_min, *x_max, *y_min, *y_max],
            _ => [-1.0, 1.0, -1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self {
            DomainSpec::Rectangle { x_min, x_max, y_min, y_max } => {
                if !(x_max > x_min && y_max > y_min) {
                    return bad("rectangle must have positive extent".into());
                }
            }
            DomainSpec::SquareWithHoles { holes, segments } => {
                if *segments < 8 {
                    return bad(format!("holes need at least 8 polygon segments, got {segments}"));
                }
                for (i, h) in holes.iter().enumerate() {
                    let [x, y] = h.center;
                    if !(h.radius > 0.0) || x - h.radius <= -1.0 || x + h.radius >= 1.0 || y - h.radius <= -1.0 || y + h.radius >= 1.0 {
                        return bad(format!("hole {i} does not lie strictly inside the square"));
                    }
                    for (j, g) in holes.iter().enumerate().skip(i + 1) {
                        let d = (h.center[0] - g.center[0]).hypot(h.center[1] - g.center[1]);
                        if d <= h.radius + g.radius {
                            return bad(format!("holes {i} and {j} overlap"));
                        }
                    }
                }
            }
            DomainSpec::SlitSquare { tip_x } => {
                if !(*tip_x > -1.0 && *tip_x < 1.0) {
                    return bad(format!("slit tip must lie inside the square, got x = {tip_x}"));
                }
            }
            DomainSpec::Square | DomainSpec::LShape => {}
        }
        Ok(())
    }

    /// Number of polygon segments per hole actually used at background size `target_h`.
    /// The configured count is raised to a multiple of 8 large enough for the
    /// surrounding block of grid cells to clear the hole.
    pub fn effective_segments(&self, target_h: f64) -> Result<usize> {
        match self {
            DomainSpec::SquareWithHoles { holes, segments } => {
                let h = GridPlan::for_domain(self, target_h)?.hx;
                let rmax = holes.iter().map(|h| h.radius).fold(0.0, f64::max);
                let q_min = (1.6 * rmax / h).ceil() as usize;
                Ok((segments.div_ceil(8)).max(q_min).max(1) * 8)
            }
            _ => Ok(0),
        }
    }

    /// Exact area of the discretized domain (holes as regular polygons).
    pub fn discrete_area(&self, target_h: f64) -> Result<f64> {
        Ok(match self {
            DomainSpec::Square | DomainSpec::SlitSquare { .. } => 4.0,
            DomainSpec::Rectangle { x_min, x_max, y_min, y_max } => (x_max - x_min) * (y_max - y_min),
            DomainSpec::LShape => 3.0,
            DomainSpec::SquareWithHoles { holes, .. } => {
                let n = self.effective_segments(target_h)? as f64;
                4.0 - holes
                    .iter()
                    .map(|h| 0.5 * n * h.radius * h.radius * (2.0 * std::f64::consts::PI / n).sin())
                    .sum::<f64>()
            }
        })
    }
}

struct GridPlan {
    x0: f64,
    y0: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

/// Smallest cell count ≥ `n0` for which every required coordinate is a grid line.
fn grid_count(lo: f64, hi: f64, n0: usize, required: &[f64]) -> Result<usize> {
    let w = hi - lo;
    for n in n0..=(64 * n0 + 64) {
        let ok = required.iter().all(|&c| {
            let s = (c - lo) / w * n as f64;
            (s - s.round()).abs() < 1e-9
        });
        if ok {
            return Ok(n);
        }
    }
    Err(Error::InvalidInput(format!(
        "no structured grid on [{lo}, {hi}] near {n0} cells has lines through {required:?}"
    )))
}

impl GridPlan {
    fn for_domain(spec: &DomainSpec, target_h: f64) -> Result<Self> {
        if !(target_h > 0.0) || !target_h.is_finite() {
            return Err(Error::InvalidInput(format!("target_h must be positive, got {target_h}")));
        }
        spec.validate()?;
        let [x0, x1, y0, y1] = spec.bbox();
        let n0x = ((x1 - x0) / target_h - 1e-9).ceil().max(1.0) as usize;
        let n0y = ((y1 - y0) / target_h - 1e-9).ceil().max(1.0) as usize;
        let (nx, ny) = match spec {
            DomainSpec::Rectangle { .. } => (n0x, n0y),
            DomainSpec::Square => (n0x, n0x),
            DomainSpec::LShape => {
                let n = grid_count(x0, x1, n0x, &[0.0])?;
                (n, n)
            }
            DomainSpec::SlitSquare { tip_x } => {
                let n = grid_count(x0, x1, n0x, &[0.0, *tip_x])?;
                (n, n)
            }
            DomainSpec::SquareWithHoles { holes, .. } => {
                let req: Vec<f64> = holes.iter().flat_map(|h| h.center).collect();
                let n = grid_count(x0, x1, n0x, &req)?;
                (n, n)
            }
        };
        Ok(Self {
            x0,
            y0,
            nx,
            ny,
            hx: (x1 - x0) / nx as f64,
            hy: (y1 - y0) / ny as f64,
        })
    }

    /// Coordinates odd-symmetric about the box center, so mirrored nodes are exact mirrors.
    fn coord(lo: f64, h: f64, n: usize, i: usize) -> f64 {
        let half = 0.5 * h * n as f64;
        let c = lo + half;
        c + half * (2.0 * i as f64 - n as f64) / n as f64
    }

    fn index_of(lo: f64, h: f64, c: f64) -> usize {
        ((c - lo) / h).round() as usize
    }
}

struct Builder {
    nodes: Vec<Point>,
    tris: Vec<[usize; 3]>,
}

impl Builder {
    fn push_tri(&mut self, a: usize, b: usize, c: usize) {
        if signed_area(self.nodes[a], self.nodes[b], self.nodes[c]) > 0.0 {
            self.tris.push([a, b, c]);
        } else {
            self.tris.push([a, c, b]);
        }
    }

    /// Splits quad a-b-c-d (in cyclic order) along its shorter diagonal.
    fn push_quad(&mut self, a: usize, b: usize, c: usize, d: usize) {
        let dist = |p: usize, q: usize| {
            let (u, v) = (self.nodes[p], self.nodes[q]);
            (u[0] - v[0]).hypot(u[1] - v[1])
        };
        if dist(a, c) <= dist(b, d) * (1.0 + 1e-12) {
            self.push_tri(a, b, c);
            self.push_tri(a, c, d);
        } else {
            self.push_tri(a, b, d);
            self.push_tri(b, c, d);
        }
    }
}

/// Generates the mesh for `spec` with background edge length `target_h` and an
/// optional refined corridor.
pub fn generate(spec: &DomainSpec, target_h: f64, corridor: Option<&Corridor>) -> Result<Mesh> {
    let plan = GridPlan::for_domain(spec, target_h)?;
    let bbox = spec.bbox();
    if let Some(c) = corridor {
        if !(c.h_min > 0.0) {
            return Err(Error::InvalidInput(format!("corridor h_min must be positive, got {}", c.h_min)));
        }
        if c.h_min >= target_h {
            return Err(Error::InvalidInput(format!(
                "infeasible grading: corridor h_min = {} is not below target_h = {target_h}",
                c.h_min
            )));
        }
        if !(c.x_min < c.x_max && c.y_min < c.y_max)
            || c.x_min < bbox[0] - TOL
            || c.x_max > bbox[1] + TOL
            || c.y_min < bbox[2] - TOL
            || c.y_max > bbox[3] + TOL
        {
            return Err(Error::InvalidInput("grading corridor must be a rectangle inside the domain".into()));
        }
    }

    let (nx, ny) = (plan.nx, plan.ny);
    let mut blocks: Vec<(usize, usize, usize, Hole)> = Vec::new();
    if let DomainSpec::SquareWithHoles { holes, .. } = spec {
        let q = spec.effective_segments(target_h)? / 8;
        for h in holes {
            let ic = GridPlan::index_of(plan.x0, plan.hx, h.center[0]);
            let jc = GridPlan::index_of(plan.y0, plan.hy, h.center[1]);
            if ic < q || jc < q || ic + q > nx || jc + q > ny {
                return Err(Error::InvalidInput("hole block does not fit inside the square".into()));
            }
            if (q as f64) * plan.hx <= h.radius * 1.05 {
                return Err(Error::InvalidInput("hole block is too small for the hole".into()));
            }
            for &(i2, j2, _, _) in &blocks {
                if ic.abs_diff(i2) < 2 * q && jc.abs_diff(j2) < 2 * q {
                    return Err(Error::InvalidInput("hole blocks overlap; move holes apart or coarsen".into()));
                }
            }
            blocks.push((ic, jc, q, *h));
        }
    }
    let keep = |i: usize, j: usize| -> bool {
        match spec {
            DomainSpec::LShape => {
                let cx = GridPlan::coord(plan.x0, plan.hx, nx, i) + 0.5 * plan.hx;
                let cy = GridPlan::coord(plan.y0, plan.hy, ny, j) + 0.5 * plan.hy;
                !(cx > 0.0 && cy > 0.0)
            }
            DomainSpec::SquareWithHoles { .. } => !blocks
                .iter()
                .any(|&(ic, jc, q, _)| i + q >= ic && i < ic + q && j + q >= jc && j < jc + q),
            _ => true,
        }
    };

    // grid nodes, compacted to those used by kept cells
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    let gid = |i: usize, j: usize| i + j * (nx + 1);
    for j in 0..ny {
        for i in 0..nx {
            if keep(i, j) {
                for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                    used[gid(i + di, j + dj)] = true;
                }
            }
        }
    }
    let mut map = vec![usize::MAX; used.len()];
    let mut b = Builder {
        nodes: Vec::new(),
        tris: Vec::new(),
    };
    for j in 0..=ny {
        for i in 0..=nx {
            if used[gid(i, j)] {
                map[gid(i, j)] = b.nodes.len();
                b.nodes
                    .push([GridPlan::coord(plan.x0, plan.hx, nx, i), GridPlan::coord(plan.y0, plan.hy, ny, j)]);
            }
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            if !keep(i, j) {
                continue;
            }
            let p00 = map[gid(i, j)];
            let p10 = map[gid(i + 1, j)];
            let p11 = map[gid(i + 1, j + 1)];
            let p01 = map[gid(i, j + 1)];
            if (i + j) % 2 == 0 {
                b.tris.push([p00, p10, p11]);
                b.tris.push([p00, p11, p01]);
            } else {
                b.tris.push([p00, p10, p01]);
                b.tris.push([p10, p11, p01]);
            }
        }
    }

    for &(ic, jc, q, hole) in &blocks {
        // block boundary walked counterclockwise from the point due east of the center
        let mut ring: Vec<(usize, usize)> = Vec::with_capacity(8 * q);
        for s in 0..q {
            ring.push((ic + q, jc + s));
        }
        for s in 0..2 * q {
            ring.push((ic + q - s, jc + q));
        }
        for s in 0..2 * q {
            ring.push((ic - q, jc + q - s));
        }
        for s in 0..2 * q {
            ring.push((ic - q + s, jc - q));
        }
        for s in 0..q {
            ring.push((ic + q, jc - q + s));
        }
        let n = ring.len();
        let outer: Vec<usize> = ring.iter().map(|&(i, j)| map[gid(i, j)]).collect();
        let gap = (q as f64) * plan.hx * std::f64::consts::SQRT_2 - hole.radius;
        let layers = ((gap / plan.hx).ceil() as usize).max(1);
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(layers + 1);
        for l in 0..layers {
            let s = l as f64 / layers as f64;
            let mut row = Vec::with_capacity(n);
            for (k, &o) in outer.iter().enumerate() {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let c = [hole.center[0] + hole.radius * ang.cos(), hole.center[1] + hole.radius * ang.sin()];
                let po = b.nodes[o];
                row.push(b.nodes.len());
                b.nodes.push([c[0] + s * (po[0] - c[0]), c[1] + s * (po[1] - c[1])]);
            }
            rows.push(row);
        }
        rows.push(outer);
        for l in 0..layers {
            for k in 0..n {
                let k1 = (k + 1) % n;
                b.push_quad(rows[l][k], rows[l][k1], rows[l + 1][k1], rows[l + 1][k]);
            }
        }
    }

    let mut r = Refiner::new(b.nodes, b.tris);
    r.refine(&|_| true, 1.5 * target_h);
    if let Some(c) = corridor {
        let rect = c.rect();
        r.refine(&|v| bbox_overlaps(v, rect), c.h_min);
    }
    let mut nodes = std::mem::take(&mut r.nodes);
    let mut tris = std::mem::take(&mut r.tris);

    if let DomainSpec::SlitSquare { tip_x } = spec {
        let mut dup = vec![usize::MAX; nodes.len()];
        for (i, p) in nodes.clone().iter().enumerate() {
            if p[1].abs() <= TOL && p[0] < tip_x - TOL {
                dup[i] = nodes.len();
                nodes.push(*p);
            }
        }
        for t in tris.iter_mut() {
            let cy = (nodes[t[0]][1] + nodes[t[1]][1] + nodes[t[2]][1]) / 3.0;
            if cy < 0.0 {
                for v in t.iter_mut() {
                    if dup[*v] != usize::MAX {
                        *v = dup[*v];
                    }
                }
            }
        }
    }
    Mesh::new(nodes, tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TagRule;

    fn euler(m: &Mesh) -> i64 {
        m.num_nodes() as i64 - m.num_edges() as i64 + m.num_triangles() as i64
    }

    #[test]
    fn square_counts() {
        let m = generate(&DomainSpec::Square, 1.0, None).unwrap();
        assert_eq!((m.num_nodes(), m.num_triangles()), (9, 8));
        for n in [3usize, 4, 7, 16] {
            let m = generate(&DomainSpec::Square, 2.0 / n as f64, None).unwrap();
            assert_eq!(m.num_nodes(), (n + 1) * (n + 1));
            assert_eq!(m.num_triangles(), 2 * n * n);
            assert!((m.total_area() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lshape_area_and_topology() {
        let m = generate(&DomainSpec::LShape, 0.1, None).unwrap();
        assert!((m.total_area() - 3.0).abs() < 1e-12);
        assert_eq!(euler(&m), 1);
        assert!(m.centroid(0)[0] < 1.0);
        for t in 0..m.num_triangles() {
            let c = m.centroid(t);
            assert!(!(c[0] > 0.0 && c[1] > 0.0));
        }
    }

    #[test]
    fn holes_area_and_topology() {
        let spec = DomainSpec::SquareWithHoles {
            holes: vec![
                Hole {
                    center: [-0.5, 0.625],
                    radius: 0.15,
                },
                Hole {
                    center: [-0.5, -0.625],
                    radius: 0.15,
                },
            ],
            segments: 32,
        };
        let h = 1.0 / 16.0;
        let m = generate(&spec, h, None).unwrap();
        assert_eq!(spec.effective_segments(h).unwrap(), 32);
        let a = spec.discrete_area(h).unwrap();
        assert!((m.total_area() - a).abs() < 1e-10 * a);
        // a disk with two holes
        assert_eq!(euler(&m), -1);
        assert!(m.max_edge_length() <= 1.5 * h);
        let on_hole = |p: Point| [0.625f64, -0.625].iter().any(|&cy| ((p[0] + 0.5).hypot(p[1] - cy) - 0.15).abs() < 0.01);
        let tagged = m
            .tag_boundary(&[
                TagRule::new("right", |p| p[0] > 1.0 - 1e-12),
                TagRule::new("hole", on_hole),
                TagRule::new("outer", |p| p[0].abs() > 1.0 - 1e-12 || p[1].abs() > 1.0 - 1e-12),
            ])
            .unwrap();
        let hole = tagged.tag_id("hole").unwrap();
        assert_eq!(tagged.boundary_edges().iter().filter(|e| e.tag == hole).count(), 64);
    }

    #[test]
    fn corridor_grading() {
        let c = Corridor {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -0.1,
            y_max: 0.1,
            h_min: 0.02,
        };
        let m = generate(&DomainSpec::Square, 1.0 / 8.0, Some(&c)).unwrap();
        assert!((m.total_area() - 4.0).abs() < 1e-12);
        assert_eq!(euler(&m), 1);
        let inside = m.max_edge_length_where(|t| {
            let [a, b, cc] = m.vertices(t);
            bbox_overlaps([a, b, cc], c.rect())
        });
        assert!(inside <= 1.5 * c.h_min);
        assert!(m.max_edge_length() <= 1.5 / 8.0);
        let again = generate(&DomainSpec::Square, 1.0 / 8.0, Some(&c)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn infeasible_grading_rejected() {
        let c = Corridor {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -0.1,
            y_max: 0.1,
            h_min: 0.5,
        };
        assert!(matches!(generate(&DomainSpec::Square, 0.25, Some(&c)), Err(Error::InvalidInput(_))));
        assert!(generate(&DomainSpec::Square, 0.0, None).is_err());
    }

    #[test]
    fn slit_duplicates_nodes() {
        let m = generate(&DomainSpec::SlitSquare { tip_x: 0.5 }, 0.125, None).unwrap();
        // 17×17 grid plus 12 duplicated nodes on x₂ = 0, x₁ < 0.5
        assert_eq!(m.num_nodes(), 17 * 17 + 12);
        assert!((m.total_area() - 4.0).abs() < 1e-12);
        let slit = m
            .boundary_edges()
            .iter()
            .filter(|e| {
                let mid = m.edge_midpoint(e);
                mid[1].abs() < 1e-12 && mid[0] < 0.5
            })
            .count();
        assert_eq!(slit, 24);
    }

    #[test]
    fn square_is_mirror_symmetric() {
        let m = generate(&DomainSpec::Square, 0.25, None).unwrap();
        let set: std::collections::HashSet<[u64; 2]> = m.nodes().iter().map(|p| [p[0].to_bits(), p[1].to_bits()]).collect();
        for p in m.nodes() {
            assert!(set.contains(&[p[0].to_bits(), (-p[1]).to_bits()]) || p[1] == 0.0);
        }
        // triangle centroids mirror too
        let cents: Vec<Point> = (0..m.num_triangles()).map(|t| m.centroid(t)).collect();
        for c in &cents {
            assert!(cents.iter().any(|d| (d[0] - c[0]).abs() < 1e-14 && (d[1] + c[1]).abs() < 1e-14));
        }
    }
}
