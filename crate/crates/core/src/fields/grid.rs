use crate::error::{HkError, Result};

/// Number of quadrature points per bilinear element (2x2 Gauss).
pub const QP: usize = 4;

/// Structured square grid of bilinear (Q1) elements.
///
/// Elements are numbered row-major with the first coordinate fastest,
/// `e = ex + ey * elements_per_side`. Local element nodes use the same
/// convention: node `a = ax + 2 * ay` sits at corner `(ax, ay)`.
pub trait Grid: Copy + std::fmt::Debug + PartialEq {
    fn elements_per_side(&self) -> usize;
    fn nodes_per_side(&self) -> usize;
    /// Coordinate of the lower-left corner (both axes).
    fn origin(&self) -> f64;
    fn is_periodic(&self) -> bool;

    /// The integer printed after `grid=` in field dumps.
    fn label(&self) -> usize {
        self.elements_per_side()
    }

    fn h(&self) -> f64 {
        1.0 / self.elements_per_side() as f64
    }

    fn node_count(&self) -> usize {
        self.nodes_per_side() * self.nodes_per_side()
    }

    fn element_count(&self) -> usize {
        self.elements_per_side() * self.elements_per_side()
    }

    /// Flat node index of lattice node `(i, j)`; periodic grids wrap.
    fn node_index(&self, i: usize, j: usize) -> usize;

    fn node_coords(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.h();
        [self.origin() + i as f64 * h, self.origin() + j as f64 * h]
    }

    fn element_nodes(&self, e: usize) -> [usize; 4] {
        let m = self.elements_per_side();
        let (ex, ey) = (e % m, e / m);
        [
            self.node_index(ex, ey),
            self.node_index(ex + 1, ey),
            self.node_index(ex, ey + 1),
            self.node_index(ex + 1, ey + 1),
        ]
    }

    fn element_origin(&self, e: usize) -> [f64; 2] {
        let m = self.elements_per_side();
        let h = self.h();
        [
            self.origin() + (e % m) as f64 * h,
            self.origin() + (e / m) as f64 * h,
        ]
    }

    fn quadrature_point(&self, e: usize, q: usize) -> [f64; 2] {
        let o = self.element_origin(e);
        let s = GAUSS_2X2.points[q];
        let h = self.h();
        [o[0] + s[0] * h, o[1] + s[1] * h]
    }
}

/// Periodic grid on the unit cell `Y = [-1/2, 1/2]^2` with `n` cells per side.
///
/// Only the `n * n` distinct periodic nodes are stored; lattice node `i + n`
/// is the same storage slot as node `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellGrid {
    n: usize,
}

/// Reject anything that is not a power of two of at least 4.
pub fn make_cell_grid(n: usize) -> Result<CellGrid> {
    CellGrid::new(n)
}

impl CellGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(HkError::UnsupportedGrid(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Grid for CellGrid {
    fn elements_per_side(&self) -> usize {
        self.n
    }
    fn nodes_per_side(&self) -> usize {
        self.n
    }
    fn origin(&self) -> f64 {
        -0.5
    }
    fn is_periodic(&self) -> bool {
        true
    }
    fn node_index(&self, i: usize, j: usize) -> usize {
        (i % self.n) + self.n * (j % self.n)
    }
}

/// Grid on the macroscopic domain `(0, 1)^2` with `n` elements per side and
/// homogeneous Dirichlet data on the whole boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DomainGrid {
    n: usize,
}

impl DomainGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(HkError::UnsupportedDomain(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// Boolean mask over all nodes, `true` on Dirichlet nodes.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let m = self.n + 1;
        (0..m * m)
            .map(|k| self.is_boundary_node(k % m, k / m))
            .collect()
    }

    pub fn interior_node_count(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }
}

impl Grid for DomainGrid {
    fn elements_per_side(&self) -> usize {
        self.n
    }
    fn nodes_per_side(&self) -> usize {
        self.n + 1
    }
    fn origin(&self) -> f64 {
        0.0
    }
    fn is_periodic(&self) -> bool {
        false
    }
    fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j <= self.n);
        i + (self.n + 1) * j
    }
}

/// Tensor-product Gauss rule on the reference square `[0, 1]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates, ordered `q = qx + 2 * qy`.
    pub points: [[f64; 2]; QP],
    /// Weights as fractions of the element area.
    pub fractions: [f64; QP],
}

const G_LO: f64 = 0.211_324_865_405_187_1; // (1 - 1/sqrt(3)) / 2
const G_HI: f64 = 0.788_675_134_594_812_9; // (1 + 1/sqrt(3)) / 2

pub const GAUSS_2X2: QuadratureRule = QuadratureRule {
    points: [[G_LO, G_LO], [G_HI, G_LO], [G_LO, G_HI], [G_HI, G_HI]],
    fractions: [0.25; QP],
};

impl QuadratureRule {
    pub fn gauss_2x2() -> Self {
        GAUSS_2X2
    }

    /// Physical weights on an element of width `h`; they sum to `h^2`.
    pub fn weights(&self, h: f64) -> [f64; QP] {
        self.fractions.map(|f| f * h * h)
    }

    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(self.fractions.iter())
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

/// Bilinear shape function values at reference point `(s, t)`.
#[inline]
pub fn shape_values(s: f64, t: f64) -> [f64; 4] {
    [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t]
}

/// Reference-coordinate shape gradients at `(s, t)`; divide by `h` for
/// physical gradients.
#[inline]
pub fn shape_gradients(s: f64, t: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - t), -(1.0 - s)],
        [1.0 - t, -s],
        [-t, 1.0 - s],
        [t, s],
    ]
}

/// Shape values at the four Gauss points, `[q][a]`.
pub(crate) fn gauss_shape_values() -> [[f64; 4]; QP] {
    GAUSS_2X2.points.map(|p| shape_values(p[0], p[1]))
}

/// Reference shape gradients at the four Gauss points, `[q][a]`.
pub(crate) fn gauss_shape_gradients() -> [[[f64; 2]; 4]; QP] {
    GAUSS_2X2.points.map(|p| shape_gradients(p[0], p[1]))
}
