//! Q1 finite-element machinery shared by the cell, fine-scale and
//! homogenized solvers.

mod elastic;
mod linear;
mod nonlinear;
mod scalar;

pub use elastic::{ElasticDisc, Stiffness};
pub use linear::CgStats;
pub(crate) use linear::dot;
pub use nonlinear::{solve_nonlinear, FluxModel, LocalLaw, NonlinearStats, SolverOptions};
pub use scalar::ScalarDisc;

use crate::constitutive::{Microstructure, Phase};
use crate::fields::{CellGrid, Commensuration, Grid, QP};

/// Connectivity and constraints of a structured grid.
#[derive(Clone, Debug)]
pub struct Mesh<G: Grid> {
    pub grid: G,
    pub nodes: Vec<[usize; 4]>,
    /// Dirichlet nodes (empty set on periodic grids).
    pub fixed: Vec<bool>,
    pub h: f64,
}

impl<G: Grid> Mesh<G> {
    pub fn new(grid: G) -> Self {
        let nodes = (0..grid.element_count()).map(|e| grid.element_nodes(e)).collect();
        let mut fixed = vec![false; grid.node_count()];
        if !grid.is_periodic() {
            let m = grid.nodes_per_side();
            for j in 0..m {
                for i in 0..m {
                    if i == 0 || j == 0 || i + 1 == m || j + 1 == m {
                        fixed[grid.node_index(i, j)] = true;
                    }
                }
            }
        }
        Self {
            grid,
            nodes,
            fixed,
            h: grid.h(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.fixed.len()
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn periodic(&self) -> bool {
        self.grid.is_periodic()
    }

    /// Zero the Dirichlet entries of a nodal vector with `c` components.
    pub fn project_fixed(&self, v: &mut [f64], c: usize) {
        for (node, &f) in self.fixed.iter().enumerate() {
            if f {
                v[node * c..(node + 1) * c].iter_mut().for_each(|x| *x = 0.0);
            }
        }
    }

    /// Make a nodal vector with `c` interleaved components admissible:
    /// zero on Dirichlet nodes, or zero mean per component when periodic.
    pub fn project(&self, v: &mut [f64], c: usize) {
        if self.periodic() {
            let m = self.node_count() as f64;
            for k in 0..c {
                let mean = v.iter().skip(k).step_by(c).sum::<f64>() / m;
                v.iter_mut().skip(k).step_by(c).for_each(|x| *x -= mean);
            }
        } else {
            self.project_fixed(v, c);
        }
    }
}

/// Phase at every quadrature point of the cell grid.
pub fn cell_phases(geometry: &Microstructure, cell: CellGrid) -> Vec<Phase> {
    (0..cell.element_count() * QP)
        .map(|k| geometry.phase(cell.quadrature_point(k / QP, k % QP)))
        .collect()
}

/// Phase at every quadrature point of the fine grid, read from the matching
/// cell-grid point so fine and cell coefficients agree exactly.
pub fn fine_phases(geometry: &Microstructure, map: &Commensuration) -> Vec<Phase> {
    let cell = cell_phases(geometry, map.cell);
    (0..map.domain.element_count() * QP)
        .map(|k| cell[map.cell_point(k)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DomainGrid, Epsilon};

    #[test]
    fn dirichlet_mask_and_projection() {
        let mesh = Mesh::new(DomainGrid::new(4).unwrap());
        assert_eq!(mesh.fixed.iter().filter(|f| **f).count(), 16);
        let mut v = vec![1.0; 25 * 2];
        mesh.project(&mut v, 2);
        assert_eq!(v.iter().sum::<f64>(), 18.0);
        let cell = Mesh::new(CellGrid::new(4).unwrap());
        let mut w: Vec<f64> = (0..32).map(|i| i as f64).collect();
        cell.project(&mut w, 2);
        assert!(w.iter().step_by(2).sum::<f64>().abs() < 1e-12);
        assert!(w.iter().skip(1).step_by(2).sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn fine_phases_follow_the_cell() {
        let geom = Microstructure::centered_laminate(0.5);
        let cell = CellGrid::new(4).unwrap();
        let map = Commensuration::fine(Epsilon::from_cells(2).unwrap(), cell).unwrap();
        let ph = fine_phases(&geom, &map);
        for e in 0..map.domain.element_count() {
            for q in 0..QP {
                let x = map.domain.quadrature_point(e, q);
                assert_eq!(ph[e * QP + q], geom.phase([2.0 * x[0], 2.0 * x[1]]));
            }
        }
    }
}
