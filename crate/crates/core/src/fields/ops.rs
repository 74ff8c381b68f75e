use super::field::{NodalField, QuadField};
use super::grid::{shape_gradients, shape_values, CellGrid, DomainGrid, Grid, QuadratureRule, QP};

/// Gradient of the bilinear interpolant of a scalar field at the points of
/// `rule`, two components per point.
pub fn gradient<G: Grid>(f: &NodalField<G>, rule: &QuadratureRule) -> QuadField {
    assert_eq!(f.components(), 1, "gradient needs a scalar field");
    let grid = f.grid();
    let inv_h = 1.0 / grid.h();
    let dn: Vec<[[f64; 2]; 4]> = rule.points.iter().map(|p| shape_gradients(p[0], p[1])).collect();
    let mut out = QuadField::zeros(grid.elements_per_side(), 2);
    let vals = f.values();
    for e in 0..grid.element_count() {
        let nodes = grid.element_nodes(e);
        for (q, dq) in dn.iter().enumerate() {
            let mut g = [0.0; 2];
            for a in 0..4 {
                let v = vals[nodes[a]];
                g[0] += v * dq[a][0];
                g[1] += v * dq[a][1];
            }
            let k = e * QP + q;
            out.point_mut(k).copy_from_slice(&[g[0] * inv_h, g[1] * inv_h]);
        }
    }
    out
}

/// Values of the bilinear interpolant at the points of `rule`.
pub fn interpolate<G: Grid>(f: &NodalField<G>, rule: &QuadratureRule) -> QuadField {
    let grid = f.grid();
    let c = f.components();
    let nv: Vec<[f64; 4]> = rule.points.iter().map(|p| shape_values(p[0], p[1])).collect();
    let mut out = QuadField::zeros(grid.elements_per_side(), c);
    let vals = f.values();
    for e in 0..grid.element_count() {
        let nodes = grid.element_nodes(e);
        for (q, nq) in nv.iter().enumerate() {
            let p = out.point_mut(e * QP + q);
            for a in 0..4 {
                for (k, pk) in p.iter_mut().enumerate() {
                    *pk += nq[a] * vals[nodes[a] * c + k];
                }
            }
        }
    }
    out
}

/// Bilinear interpolant of `coarse` sampled at the nodes of `fine`.
pub fn prolong(coarse: &NodalField<DomainGrid>, fine: DomainGrid) -> NodalField<DomainGrid> {
    let cg = coarse.grid();
    let c = coarse.components();
    let nc = cg.n();
    let vals = coarse.values();
    NodalField::from_fn(fine, c, |x| {
        let locate = |t: f64| {
            let s = t * nc as f64;
            let e = (s.floor() as usize).min(nc - 1);
            (e, s - e as f64)
        };
        let (ex, s) = locate(x[0]);
        let (ey, t) = locate(x[1]);
        let nodes = cg.element_nodes(ex + ey * nc);
        let w = shape_values(s, t);
        (0..c)
            .map(|k| (0..4).map(|a| w[a] * vals[nodes[a] * c + k]).sum())
            .collect()
    })
}

/// Full displacement gradient `G[c][k] = du_c/dx_k`, row-major, four
/// components per point.
pub fn vector_gradient<G: Grid>(u: &NodalField<G>, rule: &QuadratureRule) -> QuadField {
    assert_eq!(u.components(), 2, "vector_gradient needs a 2-component field");
    let grid = u.grid();
    let inv_h = 1.0 / grid.h();
    let dn: Vec<[[f64; 2]; 4]> = rule.points.iter().map(|p| shape_gradients(p[0], p[1])).collect();
    let mut out = QuadField::zeros(grid.elements_per_side(), 4);
    let vals = u.values();
    for e in 0..grid.element_count() {
        let nodes = grid.element_nodes(e);
        for (q, dq) in dn.iter().enumerate() {
            let mut g = [0.0; 4];
            for a in 0..4 {
                for c in 0..2 {
                    let v = vals[nodes[a] * 2 + c];
                    g[2 * c] += v * dq[a][0];
                    g[2 * c + 1] += v * dq[a][1];
                }
            }
            out.point_mut(e * QP + q)
                .copy_from_slice(&g.map(|x| x * inv_h));
        }
    }
    out
}

/// Linearized strain `(grad u + grad u^T) / 2` at the points of `rule`,
/// stored row-major `[D11, D12, D21, D22]`.
pub fn sym_gradient<G: Grid>(u: &NodalField<G>, rule: &QuadratureRule) -> QuadField {
    let mut g = vector_gradient(u, rule);
    for k in 0..g.points() {
        let p = g.point_mut(k);
        let off = 0.5 * (p[1] + p[2]);
        p[1] = off;
        p[2] = off;
    }
    g
}

/// Componentwise mean over the unit cell (|Y| = 1, so also the integral).
pub trait CellAverage {
    fn cell_average(&self) -> Vec<f64>;
}

impl CellAverage for QuadField {
    fn cell_average(&self) -> Vec<f64> {
        self.integral()
    }
}

impl CellAverage for NodalField<CellGrid> {
    /// Exact mean of the bilinear interpolant: on a uniform periodic grid
    /// every hat function integrates to `h^2`.
    fn cell_average(&self) -> Vec<f64> {
        let c = self.components();
        let mut acc = vec![0.0; c];
        for chunk in self.values().chunks(c) {
            for (a, v) in acc.iter_mut().zip(chunk) {
                *a += v;
            }
        }
        let m = self.grid().node_count() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }
}

pub fn cell_average<T: CellAverage>(f: &T) -> Vec<f64> {
    f.cell_average()
}
