//! Compressed sparse row storage with a mesh-derived sparsity pattern.

use rayon::prelude::*;

use crate::mesh::Mesh;

/// Rows per parallel task in matrix-vector products.
const ROW_CHUNK: usize = 2048;
/// Below this size everything runs serially.
const PAR_MIN: usize = 16_384;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    /// Row pointers and column indices.
    pub fn structure(&self) -> (&[usize], &[usize]) {
        (&self.row_ptr, &self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// A += diag(d). Every diagonal entry must be in the pattern.
    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (i, di) in d.iter().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let k = self.cols[r.clone()].binary_search(&i).expect("diagonal entry missing from pattern");
            self.vals[r.start + k] += di;
        }
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * x[self.cols[k]];
        }
        s
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n < PAR_MIN {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        } else {
            y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, chunk)| {
                let base = c * ROW_CHUNK;
                for (k, yi) in chunk.iter_mut().enumerate() {
                    *yi = self.row_dot(base + k, x);
                }
            });
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// xᵀ A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul(y))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                row[j] = a;
            }
        }
        d
    }

    /// Symmetric elimination of prescribed values: fixed columns move to the
    /// right-hand side, fixed rows become `d·x_j = d·value` with the original
    /// diagonal `d` (or 1 if it vanished).
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], fixed: &[(usize, f64)]) {
        let mut value = vec![None; self.n];
        for &(j, v) in fixed {
            value[j] = Some(v);
        }
        for i in 0..self.n {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            if let Some(vi) = value[i] {
                let mut d = 0.0;
                for k in range {
                    if self.cols[k] == i {
                        d = self.vals[k];
                    } else {
                        self.vals[k] = 0.0;
                    }
                }
                if d == 0.0 {
                    d = 1.0;
                    let k = self.position(i, i);
                    self.vals[k] = 1.0;
                }
                rhs[i] = d * vi;
            } else {
                for k in range {
                    if let Some(vj) = value[self.cols[k]] {
                        rhs[i] -= self.vals[k] * vj;
                        self.vals[k] = 0.0;
                    }
                }
            }
        }
    }

    fn position(&self, i: usize, j: usize) -> usize {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_ptr[i] + self.cols[r].binary_search(&j).expect("entry lies in the sparsity pattern")
    }
}

/// Deterministic dot product: fixed-size chunks summed in order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < PAR_MIN {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let parts: Vec<f64> = a
        .par_chunks(ROW_CHUNK)
        .zip(b.par_chunks(ROW_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    parts.iter().sum()
}

/// Sparsity of P1 operators on a mesh with `block` unknowns per node, plus the
/// position of every element-matrix entry in the value array.
#[derive(Debug, Clone)]
pub struct Pattern {
    block: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    elem_pos: Vec<usize>,
}

impl Pattern {
    pub fn new(mesh: &Mesh, block: usize) -> Self {
        let nn = mesh.num_nodes();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
        for t in mesh.triangles() {
            for &a in t {
                adj[a].extend_from_slice(t);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let n = nn * block;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for a in &adj {
            for _ in 0..block {
                for &j in a {
                    for c in 0..block {
                        cols.push(j * block + c);
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        let nl = 3 * block;
        let mut elem_pos = Vec::with_capacity(mesh.num_triangles() * nl * nl);
        for t in mesh.triangles() {
            for a in 0..nl {
                let gi = t[a / block] * block + a % block;
                let row = &cols[row_ptr[gi]..row_ptr[gi + 1]];
                for b in 0..nl {
                    let gj = t[b / block] * block + b % block;
                    elem_pos.push(row_ptr[gi] + row.binary_search(&gj).expect("pattern covers element"));
                }
            }
        }
        Self {
            block,
            row_ptr,
            cols,
            elem_pos,
        }
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn size(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn zero_matrix(&self) -> CsrMatrix {
        CsrMatrix {
            n: self.size(),
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: vec![0.0; self.cols.len()],
        }
    }

    /// Adds the row-major local matrix of triangle `t`.
    pub fn scatter(&self, m: &mut CsrMatrix, t: usize, local: &[f64]) {
        let nl = 3 * self.block;
        let pos = &self.elem_pos[t * nl * nl..(t + 1) * nl * nl];
        for (k, &p) in pos.iter().enumerate() {
            m.vals[p] += local[k];
        }
    }
}
