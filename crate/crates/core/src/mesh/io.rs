//! Plain-text mesh format.
//!
//! ```text
//! <node count>
//! x y            (one line per node)
//! <triangle count>
//! i j k          (zero-based)
//! <boundary edge count>
//! i j tag
//! ```

use std::fmt::Write as _;

use super::{Mesh, Point};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(s, "{}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "{}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], mesh.tag_name(e.tag));
    }
    s
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
        lines
            .next()
            .map(|(n, l)| (n + 1, l.split_whitespace().collect()))
            .ok_or_else(|| Error::parse("mesh", format!("unexpected end of input, expected {what}")))
    };
    fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
        tok.parse()
            .map_err(|_| Error::parse("mesh", format!("line {line}: cannot parse '{tok}'")))
    }
    fn count(fields: &[&str], line: usize) -> Result<usize> {
        match fields {
            [c] => num(c, line),
            _ => Err(Error::parse("mesh", format!("line {line}: expected a single count"))),
        }
    }
    let (ln, f) = next("node count")?;
    let n = count(&f, ln)?;
    let mut nodes: Vec<Point> = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, f) = next("node")?;
        if f.len() != 2 {
            return Err(Error::parse("mesh", format!("line {ln}: expected 'x y'")));
        }
        nodes.push([num(f[0], ln)?, num(f[1], ln)?]);
    }
    let (ln, f) = next("triangle count")?;
    let m = count(&f, ln)?;
    let mut tris = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, f) = next("triangle")?;
        if f.len() != 3 {
            return Err(Error::parse("mesh", format!("line {ln}: expected 'i j k'")));
        }
        tris.push([num(f[0], ln)?, num(f[1], ln)?, num(f[2], ln)?]);
    }
    let (ln, f) = next("boundary edge count")?;
    let b = count(&f, ln)?;
    let mut edges = Vec::with_capacity(b);
    for _ in 0..b {
        let (ln, f) = next("boundary edge")?;
        if f.len() != 3 {
            return Err(Error::parse("mesh", format!("line {ln}: expected 'i j tag'")));
        }
        edges.push(([num(f[0], ln)?, num(f[1], ln)?], f[2].to_string()));
    }
    Mesh::with_boundary(nodes, tris, edges)
}
