use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::microstructure::{Microstructure, Phase};
use crate::error::{HkError, Result};

/// 2x2 matrix stored row-major `[m11, m12, m21, m22]`.
pub type Mat4 = [f64; 4];

/// Fourth-order tensor in two dimensions, `T[((i*2 + j)*2 + k)*2 + l] = T_ijkl`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor4(pub [f64; 16]);

#[inline]
pub const fn idx4(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 2 + j) * 2 + k) * 2 + l
}

#[inline]
fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl Tensor4 {
    pub fn zero() -> Self {
        Tensor4([0.0; 16])
    }

    /// `T_ijkl = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk)`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let mut t = [0.0; 16];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        t[idx4(i, j, k, l)] = lambda * delta(i, j) * delta(k, l)
                            + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
                    }
                }
            }
        }
        Tensor4(t)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[idx4(i, j, k, l)]
    }

    /// `(T M)_ij = T_ijkl M_kl`.
    #[inline]
    pub fn apply(&self, m: &Mat4) -> Mat4 {
        let mut out = [0.0; 4];
        for (ij, o) in out.iter_mut().enumerate() {
            let row = &self.0[ij * 4..ij * 4 + 4];
            *o = row[0] * m[0] + row[1] * m[1] + row[2] * m[2] + row[3] * m[3];
        }
        out
    }

    /// `T c : c`.
    pub fn energy(&self, c: &Mat4) -> f64 {
        frobenius(&self.apply(c), c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Tensor4(self.0.map(|v| v * s))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest violation of `T_ijkl = T_klij`.
    pub fn major_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                m = m.max((self.0[a * 4 + b] - self.0[b * 4 + a]).abs());
            }
        }
        m
    }

    /// Largest violation of `T_ijkl = T_jikl = T_ijlk`.
    pub fn minor_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let t = self.get(i, j, k, l);
                        m = m.max((t - self.get(j, i, k, l)).abs());
                        m = m.max((t - self.get(i, j, l, k)).abs());
                    }
                }
            }
        }
        m
    }

    /// Matrix of the tensor on symmetric matrices in the orthonormal basis
    /// `e1 (x) e1`, `e2 (x) e2`, `(e1 (x) e2 + e2 (x) e1) / sqrt 2`.
    pub fn symmetric_block(&self) -> Matrix3<f64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let basis: [Mat4; 3] = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, r, r, 0.0]];
        Matrix3::from_fn(|a, b| frobenius(&self.apply(&basis[b]), &basis[a]))
    }

    /// Extreme eigenvalues of the (symmetrized) action on symmetric matrices.
    pub fn symmetric_eigen_range(&self) -> (f64, f64) {
        let m = self.symmetric_block();
        let m = (m + m.transpose()) * 0.5;
        let ev = SymmetricEigen::new(m).eigenvalues;
        (ev.min(), ev.max())
    }

    /// Norm of the tensor as an operator on 2x2 matrices with the
    /// Frobenius norm.
    pub fn operator_norm(&self) -> f64 {
        let m = nalgebra::Matrix4::from_row_slice(&self.0);
        m.singular_values().max()
    }
}

#[inline]
pub fn frobenius(a: &Mat4, b: &Mat4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn outer(a: [f64; 2], b: [f64; 2]) -> Mat4 {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Unit strain `sym(e^i (x) e^j)` for zero-based `i, j`.
pub fn unit_strain(i: usize, j: usize) -> Mat4 {
    let mut e = [0.0; 4];
    e[i * 2 + j] += 0.5;
    e[j * 2 + i] += 0.5;
    e
}

/// Lamé pair of an isotropic phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn tensor(&self) -> Tensor4 {
        Tensor4::isotropic(self.lambda, self.mu)
    }
}

/// Phase-wise constant fourth-order tensor field on the unit cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticTensorField {
    pub matrix: Tensor4,
    pub inclusion: Tensor4,
    pub geometry: Microstructure,
}

impl ElasticTensorField {
    pub fn constant(t: Tensor4) -> Self {
        Self {
            matrix: t,
            inclusion: t,
            geometry: Microstructure::Homogeneous,
        }
    }

    pub fn two_phase(matrix: Tensor4, inclusion: Tensor4, geometry: Microstructure) -> Self {
        Self {
            matrix,
            inclusion,
            geometry,
        }
    }

    pub fn isotropic(matrix: Lame, inclusion: Lame, geometry: Microstructure) -> Self {
        Self::two_phase(matrix.tensor(), inclusion.tensor(), geometry)
    }

    #[inline]
    pub fn tensor(&self, phase: Phase) -> &Tensor4 {
        match phase {
            Phase::Matrix => &self.matrix,
            Phase::Inclusion => &self.inclusion,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.geometry, Microstructure::Homogeneous) || self.matrix == self.inclusion
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.0.iter().chain(&self.inclusion.0).all(|v| *v == 0.0)
    }

    /// Stiffness tensors must have both symmetries and be positive on
    /// symmetric matrices.
    pub fn validate_stiffness(&self) -> Result<()> {
        for (name, t) in [("matrix", &self.matrix), ("inclusion", &self.inclusion)] {
            let scale = t.0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            if t.major_asymmetry() > 1e-12 * scale || t.minor_asymmetry() > 1e-12 * scale {
                return Err(HkError::InvalidSpec(format!("{name} stiffness lacks symmetries")));
            }
            if t.symmetric_eigen_range().0 <= 0.0 {
                return Err(HkError::InvalidSpec(format!("{name} stiffness is not elliptic")));
            }
        }
        self.geometry.validate().map_err(HkError::InvalidSpec)
    }
}

pub fn eval_elastic_tensor(t: &ElasticTensorField, y: [f64; 2]) -> Tensor4 {
    *t.tensor(t.geometry.phase(y))
}

pub fn apply(t: &ElasticTensorField, y: [f64; 2], m: &Mat4) -> Mat4 {
    t.tensor(t.geometry.phase(y)).apply(m)
}
