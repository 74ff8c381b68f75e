//! Structured grids, node and quadrature fields, discrete differential
//! operators and the `y = x / eps` sampling map.

pub mod dump;
mod field;
mod grid;
mod ops;
mod sampling;

pub use field::{euclid, NodalField, QuadField, ScalarField, VectorField};
pub use grid::{
    make_cell_grid, shape_gradients, shape_values, CellGrid, DomainGrid, Grid, QuadratureRule,
    GAUSS_2X2, QP,
};
pub(crate) use grid::{gauss_shape_gradients, gauss_shape_values};
pub use ops::{cell_average, gradient, interpolate, prolong, sym_gradient, vector_gradient, CellAverage};
pub use sampling::{sample_oscillatory, Commensuration, Epsilon};
