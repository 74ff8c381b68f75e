use super::field::NodalField;
use super::grid::{CellGrid, DomainGrid, Grid, QP};
use crate::error::{HkError, Result};

/// Microstructure period `eps = 1 / cells`, with `cells` a positive integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epsilon {
    cells: usize,
}

impl Epsilon {
    pub fn from_cells(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(HkError::InvalidEpsilon(f64::INFINITY));
        }
        Ok(Self { cells })
    }

    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(HkError::InvalidEpsilon(eps));
        }
        let inv = 1.0 / eps;
        let cells = inv.round();
        if (inv - cells).abs() > 1e-9 * cells {
            return Err(HkError::InvalidEpsilon(eps));
        }
        Ok(Self {
            cells: cells as usize,
        })
    }

    pub fn value(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Number of periods per unit length, `1 / eps`.
    pub fn cells(&self) -> usize {
        self.cells
    }
}

/// Alignment between a fine domain grid and the unit-cell grid for one `eps`.
///
/// The eps-cells are `eps * (Y + i)`, centred on the lattice `eps * Z^2`, so
/// with `Omega = (0, 1)^2` the cells with index 0 or `1/eps` along an axis
/// are cut by the boundary (the index set J). Each fine element lies in one
/// eps-cell and maps onto exactly one cell-grid element with identical local
/// quadrature coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commensuration {
    pub eps: Epsilon,
    pub domain: DomainGrid,
    pub cell: CellGrid,
}

impl Commensuration {
    pub fn new(eps: Epsilon, domain: DomainGrid, cell: CellGrid) -> Result<Self> {
        if domain.n() != cell.n() * eps.cells() {
            return Err(HkError::Incommensurate {
                cells: eps.cells(),
                elements: domain.n(),
                n: cell.n(),
            });
        }
        Ok(Self { eps, domain, cell })
    }

    /// Build the fine grid `N = n / eps` for a given cell grid.
    pub fn fine(eps: Epsilon, cell: CellGrid) -> Result<Self> {
        let domain = DomainGrid::new(cell.n() * eps.cells())?;
        Self::new(eps, domain, cell)
    }

    pub fn n(&self) -> usize {
        self.cell.n()
    }

    /// Cells per axis including the two cut boundary cells.
    pub fn cells_per_axis(&self) -> usize {
        self.eps.cells() + 1
    }

    /// Cell-grid element carrying fine element `e`.
    #[inline]
    pub fn cell_element(&self, e: usize) -> usize {
        let nf = self.domain.n();
        let n = self.n();
        let (ex, ey) = (e % nf, e / nf);
        ((ex + n / 2) % n) + n * ((ey + n / 2) % n)
    }

    /// Cell-grid quadrature index matching fine quadrature index `k`.
    #[inline]
    pub fn cell_point(&self, k: usize) -> usize {
        self.cell_element(k / QP) * QP + k % QP
    }

    /// eps-cell lattice index `(i1, i2)` of fine element `e`, each in `0..=1/eps`.
    #[inline]
    pub fn eps_cell(&self, e: usize) -> (usize, usize) {
        let nf = self.domain.n();
        let n = self.n();
        ((e % nf + n / 2) / n, (e / nf + n / 2) / n)
    }

    #[inline]
    pub fn eps_cell_flat(&self, e: usize) -> usize {
        let (i, j) = self.eps_cell(e);
        i + self.cells_per_axis() * j
    }

    /// Whether eps-cell `(i1, i2)` lies entirely inside Omega (index set I).
    pub fn is_interior_cell(&self, i: usize, j: usize) -> bool {
        let k = self.eps.cells();
        i >= 1 && i < k && j >= 1 && j < k
    }

    /// Fine elements of eps-cell `(i1, i2)` (clipped to Omega), row-major.
    pub fn elements_of_cell(&self, i: usize, j: usize) -> Vec<usize> {
        let nf = self.domain.n() as isize;
        let n = self.n() as isize;
        let lo = |c: usize| (c as isize * n - n / 2).max(0);
        let hi = |c: usize| (c as isize * n + n / 2).min(nf);
        let mut out = Vec::new();
        for ey in lo(j)..hi(j) {
            for ex in lo(i)..hi(i) {
                out.push((ex + ey * nf) as usize);
            }
        }
        out
    }

    /// Cell-grid node that fine node `(i, j)` maps to under `y = {x / eps}`.
    #[inline]
    pub fn cell_node(&self, i: usize, j: usize) -> usize {
        let n = self.n();
        self.cell.node_index((i + n / 2) % n, (j + n / 2) % n)
    }
}

/// Evaluate a unit-cell field at `y = {x / eps}_Y` on every node of `target`.
pub fn sample_oscillatory(
    g: &NodalField<CellGrid>,
    eps: Epsilon,
    target: DomainGrid,
) -> Result<NodalField<DomainGrid>> {
    let map = Commensuration::new(eps, target, g.grid())?;
    let c = g.components();
    let m = target.nodes_per_side();
    let mut values = Vec::with_capacity(m * m * c);
    for j in 0..m {
        for i in 0..m {
            let src = map.cell_node(i, j);
            values.extend_from_slice(&g.values()[src * c..(src + 1) * c]);
        }
    }
    NodalField::from_values(target, c, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::cell_average;

    #[test]
    fn epsilon_parsing() {
        assert_eq!(Epsilon::new(0.25).unwrap().cells(), 4);
        assert_eq!(Epsilon::new(1.0 / 32.0).unwrap().cells(), 32);
        assert!(Epsilon::new(0.3).is_err());
        assert!(Epsilon::new(0.0).is_err());
    }

    #[test]
    fn commensurability_rule() {
        let cell = CellGrid::new(16).unwrap();
        let d = DomainGrid::new(64).unwrap();
        assert!(Commensuration::new(Epsilon::new(0.25).unwrap(), d, cell).is_ok());
        let third = Epsilon::from_cells(3).unwrap();
        assert!(matches!(
            Commensuration::new(third, d, cell),
            Err(HkError::Incommensurate { .. })
        ));
        let g = NodalField::scalar_from_fn(cell, |_| 1.0);
        assert!(sample_oscillatory(&g, third, d).is_err());
    }

    #[test]
    fn constant_sampling() {
        let cell = CellGrid::new(8).unwrap();
        let g = NodalField::scalar_from_fn(cell, |_| 2.5);
        for k in [1usize, 2, 4] {
            let eps = Epsilon::from_cells(k).unwrap();
            let d = DomainGrid::new(8 * k).unwrap();
            let s = sample_oscillatory(&g, eps, d).unwrap();
            assert!(s.values().iter().all(|v| *v == 2.5));
        }
    }

    #[test]
    fn stripes_have_period_eps() {
        let cell = CellGrid::new(8).unwrap();
        // nodes strictly left of y1 = 0
        let g = NodalField::scalar_from_fn(cell, |y| if y[0] < -1e-12 { 1.0 } else { 0.0 });
        let eps = Epsilon::new(0.5).unwrap();
        let d = DomainGrid::new(16).unwrap();
        let s = sample_oscillatory(&g, eps, d).unwrap();
        // a node at x maps to y1 = x/eps - round(x/eps); period in x is 1/2
        for j in 0..=16 {
            for i in 0..=8 {
                assert_eq!(s.at(i, j, 0), s.at(i + 8, j, 0));
            }
            // two stripes per unit length: count rising edges along x
            let rises = (0..16)
                .filter(|&i| s.at(i, j, 0) == 0.0 && s.at(i + 1, j, 0) == 1.0)
                .count();
            assert_eq!(rises, 2);
        }
    }

    #[test]
    fn element_map_matches_coordinates() {
        let cell = CellGrid::new(4).unwrap();
        let map = Commensuration::fine(Epsilon::from_cells(3).unwrap(), cell).unwrap();
        for e in 0..map.domain.element_count() {
            for q in 0..QP {
                let x = map.domain.quadrature_point(e, q);
                let z = [x[0] * 3.0, x[1] * 3.0];
                let y = [z[0] - z[0].round(), z[1] - z[1].round()];
                let yc = cell.quadrature_point(map.cell_element(e), q);
                assert!((y[0] - yc[0]).abs() < 1e-12 && (y[1] - yc[1]).abs() < 1e-12);
                let (i, j) = map.eps_cell(e);
                assert_eq!((i, j), (z[0].round() as usize, z[1].round() as usize));
            }
        }
        let total: usize = (0..4)
            .flat_map(|j| (0..4).map(move |i| (i, j)))
            .map(|(i, j)| map.elements_of_cell(i, j).len())
            .sum();
        assert_eq!(total, map.domain.element_count());
    }

    #[test]
    fn oscillatory_average_over_full_cells() {
        let cell = CellGrid::new(8).unwrap();
        let g = NodalField::scalar_from_fn(cell, |y| 1.0 + y[0] * y[0] + 0.3 * y[1]);
        let eps = Epsilon::from_cells(4).unwrap();
        let map = Commensuration::fine(eps, cell).unwrap();
        let s = sample_oscillatory(&g, eps, map.domain).unwrap();
        // the mean of the interpolant over a full eps-cell equals the cell mean of g
        let target = cell_average(&g)[0];
        for (i, j) in [(1usize, 1usize), (2, 3), (3, 2)] {
            let elems = map.elements_of_cell(i, j);
            let mut acc = 0.0;
            for e in &elems {
                let nodes = map.domain.element_nodes(*e);
                acc += nodes.iter().map(|&a| s.values()[a]).sum::<f64>() / 4.0;
            }
            let mean = acc / elems.len() as f64;
            assert!((mean - target).abs() < 1e-12);
        }
    }
}
