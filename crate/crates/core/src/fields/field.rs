use super::grid::{Grid, QP};
use crate::error::{HkError, Result};

/// Node-based field with `components` values per node.
///
/// Scalar, vector (d = 2) and tensor (2x2, row-major) fields differ only in
/// their component count. Values are laid out node-major:
/// `values[node * components + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField<G: Grid> {
    grid: G,
    components: usize,
    values: Vec<f64>,
}

pub type ScalarField<G> = NodalField<G>;
pub type VectorField<G> = NodalField<G>;

impl<G: Grid> NodalField<G> {
    pub fn zeros(grid: G, components: usize) -> Self {
        Self {
            grid,
            components,
            values: vec![0.0; grid.node_count() * components],
        }
    }

    pub fn from_values(grid: G, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || values.len() != grid.node_count() * components {
            return Err(HkError::Shape(format!(
                "{} values for {} nodes x {} components",
                values.len(),
                grid.node_count(),
                components
            )));
        }
        Ok(Self {
            grid,
            components,
            values,
        })
    }

    /// Sample a closure at node coordinates.
    pub fn from_fn(grid: G, components: usize, f: impl Fn([f64; 2]) -> Vec<f64>) -> Self {
        let m = grid.nodes_per_side();
        let mut values = Vec::with_capacity(grid.node_count() * components);
        for j in 0..m {
            for i in 0..m {
                let v = f(grid.node_coords(i, j));
                assert_eq!(v.len(), components, "closure returned wrong arity");
                values.extend_from_slice(&v);
            }
        }
        Self {
            grid,
            components,
            values,
        }
    }

    pub fn scalar_from_fn(grid: G, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn(grid, 1, |x| vec![f(x)])
    }

    pub fn grid(&self) -> G {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
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

    /// Value at lattice node `(i, j)`; periodic grids wrap the indices.
    pub fn at(&self, i: usize, j: usize, c: usize) -> f64 {
        self.values[self.grid.node_index(i, j) * self.components + c]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }
}

/// Field stored at the 2x2 Gauss points of a unit-square grid with `n`
/// elements per side. Layout: `values[(e * QP + q) * components + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadField {
    n: usize,
    components: usize,
    values: Vec<f64>,
}

impl QuadField {
    pub fn zeros(n: usize, components: usize) -> Self {
        Self {
            n,
            components,
            values: vec![0.0; n * n * QP * components],
        }
    }

    pub fn from_values(n: usize, components: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n * QP * components {
            return Err(HkError::Shape(format!(
                "{} quadrature values for {} elements x {} components",
                values.len(),
                n * n,
                components
            )));
        }
        Ok(Self {
            n,
            components,
            values,
        })
    }

    /// Evaluate a closure at the quadrature points of `grid`.
    pub fn from_fn<G: Grid>(grid: G, components: usize, f: impl Fn([f64; 2]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.element_count() * QP * components);
        for e in 0..grid.element_count() {
            for q in 0..QP {
                let v = f(grid.quadrature_point(e, q));
                assert_eq!(v.len(), components);
                values.extend_from_slice(&v);
            }
        }
        Self {
            n: grid.elements_per_side(),
            components,
            values,
        }
    }

    pub fn elements_per_side(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn points(&self) -> usize {
        self.n * self.n * QP
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Components at flat quadrature index `k = e * QP + q`.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.components..(k + 1) * self.components]
    }

    pub fn point_mut(&mut self, k: usize) -> &mut [f64] {
        let c = self.components;
        &mut self.values[k * c..(k + 1) * c]
    }

    /// Quadrature weight of every point (uniform on a unit square).
    pub fn weight(&self) -> f64 {
        1.0 / (self.points() as f64)
    }

    /// Componentwise integral over the unit square.
    pub fn integral(&self) -> Vec<f64> {
        let w = self.weight();
        let mut acc = vec![0.0; self.components];
        for k in 0..self.points() {
            for (a, v) in acc.iter_mut().zip(self.point(k)) {
                *a += w * v;
            }
        }
        acc
    }

    /// `(integral |v|^p)^(1/p)` with `|.|` the Euclidean norm over components.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let w = self.weight();
        let s: f64 = (0..self.points())
            .map(|k| w * euclid(self.point(k)).powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        Self {
            n: self.n,
            components: self.components,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[inline]
pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
