//! Nodal P1 fields.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Scalar or 2-vector values at every node. Vector components are interleaved
/// (`[u1(0), u2(0), u1(1), ...]`), matching the global degree-of-freedom order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    arity: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn scalar_zeros(num_nodes: usize) -> Self {
        Self {
            arity: 1,
            values: vec![0.0; num_nodes],
        }
    }

    pub fn vector_zeros(num_nodes: usize) -> Self {
        Self {
            arity: 2,
            values: vec![0.0; 2 * num_nodes],
        }
    }

    pub fn from_values(arity: usize, values: Vec<f64>) -> Result<Self> {
        if !(arity == 1 || arity == 2) || !values.len().is_multiple_of(arity) {
            return Err(Error::InvalidInput(format!("field of arity {arity} cannot hold {} values", values.len())));
        }
        Ok(Self { arity, values })
    }

    pub fn scalar_from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        Self {
            arity: 1,
            values: mesh.nodes().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn vector_from_fn(mesh: &Mesh, f: impl Fn(Point) -> [f64; 2]) -> Self {
        Self {
            arity: 2,
            values: mesh.nodes().iter().flat_map(|&p| f(p)).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / self.arity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn vec_at(&self, node: usize) -> [f64; 2] {
        [self.values[2 * node], self.values[2 * node + 1]]
    }

    pub fn check_on(&self, mesh: &Mesh, arity: usize, name: &str) -> Result<()> {
        if self.arity != arity || self.num_nodes() != mesh.num_nodes() {
            return Err(Error::InvalidInput(format!(
                "field {name} has arity {} on {} nodes, expected arity {arity} on {} nodes",
                self.arity,
                self.num_nodes(),
                mesh.num_nodes()
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &NodalField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
