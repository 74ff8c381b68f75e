use super::linear::{pcg, CgStats};
use super::Mesh;
use crate::constitutive::{ElasticTensorField, Mat4, Phase, Tensor4};
use crate::error::Result;
use crate::fields::{gauss_shape_gradients, gauss_shape_values, Grid, QP};

/// Vector Q1 discretization with two interleaved dofs per node.
#[derive(Clone, Debug)]
pub struct ElasticDisc<G: Grid> {
    pub mesh: Mesh<G>,
    dn: [[[f64; 2]; 4]; QP],
    nv: [[f64; 4]; QP],
}

/// Assembled stiffness: one 8x8 element matrix per phase signature (the
/// phases at the four quadrature points, one bit each).
#[derive(Clone, Debug)]
pub struct Stiffness {
    signature: Vec<u8>,
    mats: Vec<[f64; 64]>,
    diag: Vec<f64>,
}

impl<G: Grid> ElasticDisc<G> {
    pub fn new(grid: G) -> Self {
        Self {
            mesh: Mesh::new(grid),
            dn: gauss_shape_gradients(),
            nv: gauss_shape_values(),
        }
    }

    pub fn dofs(&self) -> usize {
        2 * self.mesh.node_count()
    }

    pub fn points(&self) -> usize {
        self.mesh.element_count() * QP
    }

    fn element_matrix(&self, tensors: [&Tensor4; QP]) -> [f64; 64] {
        let mut k = [0.0; 64];
        for (q, t) in tensors.iter().enumerate() {
            let d = &self.dn[q];
            for a in 0..4 {
                for c in 0..2 {
                    for b in 0..4 {
                        for dd in 0..2 {
                            let mut s = 0.0;
                            for j in 0..2 {
                                for l in 0..2 {
                                    s += t.get(c, j, dd, l) * d[a][j] * d[b][l];
                                }
                            }
                            k[(a * 2 + c) * 8 + b * 2 + dd] += 0.25 * s;
                        }
                    }
                }
            }
        }
        k
    }

    /// Stiffness of `int T D(u) : D(v)` with the phase of every quadrature
    /// point given; requires the minor symmetries of `T`.
    pub fn stiffness(&self, field: &ElasticTensorField, phases: &[Phase]) -> Stiffness {
        let mats: Vec<[f64; 64]> = (0..16u8)
            .map(|s| {
                let t = std::array::from_fn(|q| {
                    field.tensor(if s >> q & 1 == 1 {
                        Phase::Inclusion
                    } else {
                        Phase::Matrix
                    })
                });
                self.element_matrix(t)
            })
            .collect();
        let signature: Vec<u8> = (0..self.mesh.element_count())
            .map(|e| {
                (0..QP).fold(0u8, |s, q| s | ((phases[e * QP + q] as u8) << q))
            })
            .collect();
        let mut diag = vec![0.0; self.dofs()];
        for (nodes, &s) in self.mesh.nodes.iter().zip(&signature) {
            let k = &mats[s as usize];
            for a in 0..4 {
                for c in 0..2 {
                    let i = a * 2 + c;
                    diag[nodes[a] * 2 + c] += k[i * 9];
                }
            }
        }
        Stiffness {
            signature,
            mats,
            diag,
        }
    }

    pub fn apply(&self, k: &Stiffness, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (nodes, &s) in self.mesh.nodes.iter().zip(&k.signature) {
            let m = &k.mats[s as usize];
            let mut xl = [0.0; 8];
            for a in 0..4 {
                xl[2 * a] = x[2 * nodes[a]];
                xl[2 * a + 1] = x[2 * nodes[a] + 1];
            }
            for i in 0..8 {
                let row = &m[i * 8..i * 8 + 8];
                let mut acc = 0.0;
                for j in 0..8 {
                    acc += row[j] * xl[j];
                }
                y[2 * nodes[i / 2] + i % 2] += acc;
            }
        }
        self.mesh.project_fixed(y, 2);
    }

    /// `int S : D(v)` for every basis function `v`, with `S` given at the
    /// quadrature points (only its symmetric part contributes).
    pub fn stress_load(&self, stress: &[Mat4]) -> Vec<f64> {
        let c = 0.25 * self.mesh.h;
        let mut out = vec![0.0; self.dofs()];
        for (e, nodes) in self.mesh.nodes.iter().enumerate() {
            for q in 0..QP {
                let s = stress[e * QP + q];
                let off = 0.5 * (s[1] + s[2]);
                let sym = [[s[0], off], [off, s[3]]];
                for a in 0..4 {
                    let d = self.dn[q][a];
                    for r in 0..2 {
                        out[2 * nodes[a] + r] += c * (sym[r][0] * d[0] + sym[r][1] * d[1]);
                    }
                }
            }
        }
        self.mesh.project(&mut out, 2);
        out
    }

    /// Consistent load `int g_h . v` of a nodal body force.
    pub fn body_load(&self, g: &[f64]) -> Vec<f64> {
        let w = 0.25 * self.mesh.h * self.mesh.h;
        let mut out = vec![0.0; self.dofs()];
        for nodes in &self.mesh.nodes {
            for q in 0..QP {
                let nq = &self.nv[q];
                for r in 0..2 {
                    let gq: f64 = (0..4).map(|b| nq[b] * g[2 * nodes[b] + r]).sum();
                    for a in 0..4 {
                        out[2 * nodes[a] + r] += w * nq[a] * gq;
                    }
                }
            }
        }
        self.mesh.project(&mut out, 2);
        out
    }

    pub fn solve(
        &self,
        k: &Stiffness,
        rhs: &[f64],
        x: &mut [f64],
        rel_tol: f64,
        max_iter: usize,
    ) -> Result<CgStats> {
        pcg(
            &|v, out| self.apply(k, v, out),
            &k.diag,
            &|v| self.mesh.project(v, 2),
            rhs,
            x,
            rel_tol,
            max_iter,
            "elastic CG",
        )
    }
}
