use nalgebra::DMatrix;

use super::linear::{dense_solve, norm, pcg, CgStats};
use super::Mesh;
use crate::constitutive::{Mat2, Vec2};
use crate::error::{HkError, Result};
use crate::fields::{gauss_shape_gradients, gauss_shape_values, Grid, QP};

/// Systems with at most this many nodes are solved by dense Cholesky.
const DENSE_LIMIT: usize = 64;

/// Scalar Q1 discretization: gradients at quadrature points, flux
/// assembly, tangent element matrices and linear solves.
#[derive(Clone, Debug)]
pub struct ScalarDisc<G: Grid> {
    pub mesh: Mesh<G>,
    dn: [[[f64; 2]; 4]; QP],
    nv: [[f64; 4]; QP],
}

/// Element matrix, row-major 4x4.
pub type ElementMatrix = [f64; 16];

impl<G: Grid> ScalarDisc<G> {
    pub fn new(grid: G) -> Self {
        Self {
            mesh: Mesh::new(grid),
            dn: gauss_shape_gradients(),
            nv: gauss_shape_values(),
        }
    }

    pub fn grid(&self) -> G {
        self.mesh.grid
    }

    pub fn dofs(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn points(&self) -> usize {
        self.mesh.element_count() * QP
    }

    /// `background + grad u` at every quadrature point.
    pub fn gradients(&self, u: &[f64], background: Vec2, out: &mut [Vec2]) {
        let inv_h = 1.0 / self.mesh.h;
        for (e, nodes) in self.mesh.nodes.iter().enumerate() {
            let ul = nodes.map(|a| u[a]);
            for q in 0..QP {
                let d = &self.dn[q];
                let mut g = [0.0; 2];
                for a in 0..4 {
                    g[0] += ul[a] * d[a][0];
                    g[1] += ul[a] * d[a][1];
                }
                out[e * QP + q] = [background[0] + g[0] * inv_h, background[1] + g[1] * inv_h];
            }
        }
    }

    /// `r_a = int flux . grad N_a - load_a` on admissible dofs. Returns the
    /// norm of the same sum taken over absolute values, a roundoff scale.
    pub fn residual(&self, flux: &[Vec2], load: Option<&[f64]>, r: &mut [f64]) -> f64 {
        let c = 0.25 * self.mesh.h;
        let mut abs = vec![0.0; r.len()];
        r.iter_mut().for_each(|v| *v = 0.0);
        for (e, nodes) in self.mesh.nodes.iter().enumerate() {
            for q in 0..QP {
                let f = flux[e * QP + q];
                for (a, &node) in nodes.iter().enumerate() {
                    let t = c * (f[0] * self.dn[q][a][0] + f[1] * self.dn[q][a][1]);
                    r[node] += t;
                    abs[node] += t.abs();
                }
            }
        }
        if let Some(load) = load {
            for i in 0..r.len() {
                r[i] -= load[i];
                abs[i] += load[i].abs();
            }
        }
        self.mesh.project(r, 1);
        for (i, &f) in self.mesh.fixed.iter().enumerate() {
            if f {
                abs[i] = 0.0;
            }
        }
        norm(&abs)
    }

    /// Consistent load `int f_h N_a` of a nodal source `f`.
    pub fn load(&self, f: &[f64]) -> Vec<f64> {
        let w = 0.25 * self.mesh.h * self.mesh.h;
        let mut out = vec![0.0; self.dofs()];
        for nodes in &self.mesh.nodes {
            let fl = nodes.map(|a| f[a]);
            for q in 0..QP {
                let nq = &self.nv[q];
                let fq: f64 = (0..4).map(|b| nq[b] * fl[b]).sum();
                for a in 0..4 {
                    out[nodes[a]] += w * nq[a] * fq;
                }
            }
        }
        self.mesh.project(&mut out, 1);
        out
    }

    /// Element matrices `int grad N_a . T grad N_b` for a tangent given at
    /// every quadrature point.
    pub fn element_matrices(&self, tangent: &[Mat2]) -> Vec<ElementMatrix> {
        (0..self.mesh.element_count())
            .map(|e| {
                let mut k = [0.0; 16];
                for q in 0..QP {
                    let t = tangent[e * QP + q];
                    let d = &self.dn[q];
                    for b in 0..4 {
                        let tb = [
                            t[0][0] * d[b][0] + t[0][1] * d[b][1],
                            t[1][0] * d[b][0] + t[1][1] * d[b][1],
                        ];
                        for a in 0..4 {
                            k[a * 4 + b] += 0.25 * (d[a][0] * tb[0] + d[a][1] * tb[1]);
                        }
                    }
                }
                k
            })
            .collect()
    }

    pub fn apply(&self, mats: &[ElementMatrix], x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (nodes, k) in self.mesh.nodes.iter().zip(mats) {
            let xl = nodes.map(|a| x[a]);
            for a in 0..4 {
                let row = &k[a * 4..a * 4 + 4];
                y[nodes[a]] += row[0] * xl[0] + row[1] * xl[1] + row[2] * xl[2] + row[3] * xl[3];
            }
        }
        self.mesh.project_fixed(y, 1);
    }

    fn diagonal(&self, mats: &[ElementMatrix]) -> Vec<f64> {
        let mut d = vec![0.0; self.dofs()];
        for (nodes, k) in self.mesh.nodes.iter().zip(mats) {
            for a in 0..4 {
                d[nodes[a]] += k[a * 5];
            }
        }
        d
    }

    fn dense(&self, mats: &[ElementMatrix]) -> DMatrix<f64> {
        let n = self.dofs();
        let mut a = DMatrix::zeros(n, n);
        for (nodes, k) in self.mesh.nodes.iter().zip(mats) {
            for i in 0..4 {
                for j in 0..4 {
                    a[(nodes[i], nodes[j])] += k[i * 4 + j];
                }
            }
        }
        if self.mesh.periodic() {
            // constants span the kernel; a rank-one shift leaves zero-mean
            // solutions of zero-mean right-hand sides unchanged
            let s = a.trace() / (n * n) as f64;
            a.add_scalar_mut(s);
        } else {
            for (i, &f) in self.mesh.fixed.iter().enumerate() {
                if f {
                    a.row_mut(i).fill(0.0);
                    a.column_mut(i).fill(0.0);
                    a[(i, i)] = 1.0;
                }
            }
        }
        a
    }

    /// Solve `K x = rhs` on the admissible subspace. `x` is the initial
    /// guess for the iterative path.
    pub fn solve(
        &self,
        mats: &[ElementMatrix],
        rhs: &[f64],
        x: &mut [f64],
        rel_tol: f64,
        max_iter: usize,
    ) -> Result<CgStats> {
        let mut b = rhs.to_vec();
        self.mesh.project(&mut b, 1);
        if self.dofs() <= DENSE_LIMIT {
            let sol = dense_solve(self.dense(mats), &b).ok_or(HkError::SingularSystem("scalar"))?;
            x.copy_from_slice(&sol);
            self.mesh.project(x, 1);
            return Ok(CgStats {
                iterations: 1,
                relative_residual: 0.0,
            });
        }
        let diag = self.diagonal(mats);
        pcg(
            &|v, out| self.apply(mats, v, out),
            &diag,
            &|v| self.mesh.project(v, 1),
            &b,
            x,
            rel_tol,
            max_iter,
            "scalar CG",
        )
    }
}
