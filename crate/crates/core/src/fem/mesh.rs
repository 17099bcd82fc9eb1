use crate::error::{Error, Result};
use crate::Scalar;

/// Uniform triangulation of `[0, 1]^2` with `n` squares per side, each
/// split along its lower-left to upper-right diagonal.
///
/// Node `(i, j)` sits at `(i / n, j / n)` and has index `j (n + 1) + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformMesh<T> {
    n: usize,
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
}

impl<T: Scalar> UniformMesh<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ConfigError("mesh needs at least one subdivision".into()));
        }
        let side = n + 1;
        let h = T::one() / T::from_usize_lossy(n);
        let idx = |i: usize, j: usize| j * side + i;
        let mut nodes = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                nodes.push([T::from_usize_lossy(i) * h, T::from_usize_lossy(j) * h]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        // counterclockwise walk: bottom, right, top, left
        let mut boundary_edges = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary_edges.push([idx(i, 0), idx(i + 1, 0)]);
        }
        for j in 0..n {
            boundary_edges.push([idx(n, j), idx(n, j + 1)]);
        }
        for i in (0..n).rev() {
            boundary_edges.push([idx(i + 1, n), idx(i, n)]);
        }
        for j in (0..n).rev() {
            boundary_edges.push([idx(0, j + 1), idx(0, j)]);
        }
        Ok(Self { n, nodes, triangles, boundary_edges })
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn mesh_width(&self) -> T {
        T::one() / T::from_usize_lossy(self.n)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn is_boundary_node(&self, k: usize) -> bool {
        let (i, j) = (k % (self.n + 1), k / (self.n + 1));
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// Signed area (positive for counterclockwise vertices).
    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].map(|v| self.nodes[v]);
        ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::lit(0.5)
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.nodes[v]);
        let third = T::one() / T::lit(3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    pub fn edge_length(&self, e: usize) -> T {
        let [a, b] = self.boundary_edges[e].map(|v| self.nodes[v]);
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }
}
