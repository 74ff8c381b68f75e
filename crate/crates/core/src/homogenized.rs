//! The effective problem on the unit square and the first-order correctors
//! rebuilt from cell solutions.

use std::sync::Arc;

use crate::cell::ScalarCellSolver;
use crate::constitutive::{outer, ElasticTensorField, Mat2, Mat4, Phase, Tensor4, Vec2};
use crate::effective::{pair_slot, CellEntry, Conductivity, ElasticCorrectors, ElectrostrictionCorrectors};
use crate::error::{HkError, Result};
use crate::fem::{solve_nonlinear, ElasticDisc, FluxModel, NonlinearStats, ScalarDisc, SolverOptions};
use crate::fields::{
    gradient, sym_gradient, CellGrid, DomainGrid, NodalField, QuadField, ScalarField, VectorField,
    GAUSS_2X2,
};
use crate::fine::quad_mats;

/// `a_hom` at every quadrature point, warm-starting each cell solve from
/// the previous solution at the same point.
pub struct HomogenizedFlux<'a> {
    law: &'a Conductivity,
    last: Vec<Option<Arc<CellEntry>>>,
}

impl<'a> HomogenizedFlux<'a> {
    pub fn new(law: &'a Conductivity, points: usize) -> Self {
        Self {
            law,
            last: vec![None; points],
        }
    }
}

impl FluxModel for HomogenizedFlux<'_> {
    fn eval(&mut self, xi: &[Vec2], flux: &mut [Vec2], tangent: Option<&mut [Mat2]>) -> Result<()> {
        let e = self.law.entries(xi, Some(&self.last))?;
        for (f, en) in flux.iter_mut().zip(&e) {
            *f = en.flux;
        }
        if let Some(t) = tangent {
            t.copy_from_slice(&self.law.jacobians(&e)?);
        }
        self.last = e.into_iter().map(Some).collect();
        Ok(())
    }

    fn secant(&mut self, xi: &[Vec2], out: &mut [Mat2]) -> Result<()> {
        let unit = self.law.eval([1.0, 0.0])?[0];
        let e = self.law.entries(xi, Some(&self.last))?;
        for (o, en) in out.iter_mut().zip(&e) {
            let n2 = en.xi[0] * en.xi[0] + en.xi[1] * en.xi[1];
            let s = if n2 == 0.0 {
                unit
            } else {
                (en.flux[0] * en.xi[0] + en.flux[1] * en.xi[1]) / n2
            };
            if !(s > 0.0) {
                return Err(HkError::SingularSystem("homogenized secant"));
            }
            *o = [[s, 0.0], [0.0, s]];
        }
        Ok(())
    }

    fn is_linear(&self) -> bool {
        self.law.is_linear()
    }
}

#[derive(Clone, Debug)]
pub struct HomogenizedElectrostatic {
    pub phi: ScalarField<DomainGrid>,
    /// `grad phi_0` at the quadrature points.
    pub grad: QuadField,
    /// Cell solutions at `grad phi_0`, one per quadrature point.
    pub cells: Vec<Arc<CellEntry>>,
    pub stats: NonlinearStats,
}

/// Solve `int a_hom(grad phi_0) . grad v = int f v` with `phi_0 = 0` on the
/// boundary.
pub fn solve_homogenized_electrostatic(
    law: &Conductivity,
    f: &ScalarField<DomainGrid>,
    opts: &SolverOptions,
) -> Result<HomogenizedElectrostatic> {
    solve_homogenized_electrostatic_from(law, f, None, opts)
}

/// As [`solve_homogenized_electrostatic`], starting Newton from `initial`
/// (typically a coarser solution prolonged onto the grid of `f`).
pub fn solve_homogenized_electrostatic_from(
    law: &Conductivity,
    f: &ScalarField<DomainGrid>,
    initial: Option<&ScalarField<DomainGrid>>,
    opts: &SolverOptions,
) -> Result<HomogenizedElectrostatic> {
    let grid = f.grid();
    let disc = ScalarDisc::new(grid);
    let load = disc.load(f.values());
    let mut phi = match initial {
        Some(u) if u.grid() == grid && u.components() == 1 => u.values().to_vec(),
        Some(_) => return Err(HkError::Shape("initial guess does not match the domain grid".into())),
        None => vec![0.0; disc.dofs()],
    };
    let mut model = HomogenizedFlux::new(law, disc.points());
    let stats = solve_nonlinear(&disc, &mut model, [0.0, 0.0], Some(&load), &mut phi, opts, "homogenized electrostatic")?;
    let phi = NodalField::from_values(grid, 1, phi)?;
    let grad = gradient(&phi, &GAUSS_2X2);
    let xi: Vec<Vec2> = (0..grad.points()).map(|k| [grad.point(k)[0], grad.point(k)[1]]).collect();
    let cells = law.entries(&xi, Some(&model.last))?;
    Ok(HomogenizedElectrostatic { phi, grad, cells, stats })
}

/// `grad_y phi_1(x, .) = p(y, grad phi_0(x)) - grad phi_0(x)` on the cell
/// quadrature points, for one macroscopic point.
pub fn phi1_gradient(cell: CellGrid, entry: &CellEntry) -> Result<QuadField> {
    let eta = NodalField::from_values(cell, 1, entry.eta.clone())?;
    Ok(gradient(&eta, &GAUSS_2X2))
}

/// `grad_y phi_1` for every macroscopic quadrature point.
pub fn reconstruct_phi1(law: &Conductivity, hom: &HomogenizedElectrostatic) -> Result<Vec<QuadField>> {
    hom.cells.iter().map(|e| phi1_gradient(law.grid(), e)).collect()
}

/// Largest cell residual and largest flux-identity defect
/// `|int a(y, p) . p - int a(y, p) . grad phi_0|` over the macroscopic
/// quadrature points, where `p = grad phi_0 + grad_y phi_1`.
pub fn two_scale_checks(law: &Conductivity, hom: &HomogenizedElectrostatic) -> (f64, f64) {
    let solver: &ScalarCellSolver = law.solver();
    let spec = law.spec();
    let mut res: f64 = 0.0;
    let mut ident: f64 = 0.0;
    for e in &hom.cells {
        res = res.max(cell_residual(solver, e));
        let p = solver.corrector_gradients(e.xi, &e.eta);
        let w = 1.0 / p.len() as f64;
        let mut acc = 0.0;
        for (q, pq) in p.iter().enumerate() {
            let a = spec.flux(solver.phases()[q], *pq);
            acc += w * (a[0] * (pq[0] - e.xi[0]) + a[1] * (pq[1] - e.xi[1]));
        }
        ident = ident.max(acc.abs());
    }
    (res, ident)
}

/// Weak residual of a stored cell solution relative to that of `eta = 0`.
fn cell_residual(solver: &ScalarCellSolver, e: &CellEntry) -> f64 {
    let disc = ScalarDisc::new(solver.grid());
    let norm_at = |eta: &[f64]| {
        let p = solver.corrector_gradients(e.xi, eta);
        let flux: Vec<Vec2> = p.iter().zip(solver.phases()).map(|(x, ph)| solver.spec().flux(*ph, *x)).collect();
        let mut r = vec![0.0; eta.len()];
        disc.residual(&flux, None, &mut r);
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let n0 = norm_at(&vec![0.0; e.eta.len()]);
    if n0 == 0.0 {
        0.0
    } else {
        norm_at(&e.eta) / n0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogenizedElastic {
    pub u: VectorField<DomainGrid>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve `int B_hom D(u_0) : D(v) = int g . v - int C_hom(grad phi_0 (x)
/// grad phi_0) : D(v)`, with `c_hom` in action form.
pub fn solve_homogenized_elasticity(
    b_hom: &Tensor4,
    c_hom: &Tensor4,
    g: &VectorField<DomainGrid>,
    grad_phi0: &QuadField,
    opts: &SolverOptions,
) -> Result<HomogenizedElastic> {
    let domain = g.grid();
    if grad_phi0.components() != 2 || grad_phi0.elements_per_side() != domain.n() {
        return Err(HkError::Shape("grad phi_0 does not match the domain grid".into()));
    }
    let field = ElasticTensorField::constant(*b_hom);
    field.validate_stiffness()?;
    let disc = ElasticDisc::new(domain);
    let stiff = disc.stiffness(&field, &vec![Phase::Matrix; disc.points()]);
    let stress: Vec<Mat4> = (0..grad_phi0.points())
        .map(|k| {
            let d = [grad_phi0.point(k)[0], grad_phi0.point(k)[1]];
            c_hom.apply(&outer(d, d))
        })
        .collect();
    let mut rhs = disc.body_load(g.values());
    for (r, s) in rhs.iter_mut().zip(disc.stress_load(&stress)) {
        *r -= s;
    }
    let mut u = vec![0.0; disc.dofs()];
    let st = disc.solve(&stiff, &rhs, &mut u, 1e-2 * opts.tol, opts.max_linear)?;
    Ok(HomogenizedElastic {
        u: NodalField::from_values(domain, 2, u)?,
        residual: st.relative_residual,
        iterations: st.iterations,
    })
}

/// `u_1(x, .) = -D(u_0)_ij Upsilon^ij + (d_i phi_0 d_j phi_0) chi^ij` as a
/// nodal cell field, for one macroscopic strain and field strength.
pub fn reconstruct_u1(
    elastic: &ElasticCorrectors,
    electro: &ElectrostrictionCorrectors,
    strain_u0: &Mat4,
    grad_phi0: Vec2,
) -> Result<VectorField<CellGrid>> {
    let m = outer(grad_phi0, grad_phi0);
    let mut out = vec![0.0; elastic.upsilon[0].len()];
    for i in 0..2 {
        for j in 0..2 {
            let s = pair_slot(i, j);
            let (e, mm) = (strain_u0[2 * i + j], m[2 * i + j]);
            for (o, (u, c)) in out.iter_mut().zip(elastic.upsilon[s].iter().zip(&electro.chi[s])) {
                *o += -e * u + mm * c;
            }
        }
    }
    NodalField::from_values(elastic.grid, 2, out)
}

/// `D(u_0)` at the quadrature points as matrices.
pub fn strain_of(u: &VectorField<DomainGrid>) -> Vec<Mat4> {
    quad_mats(&sym_gradient(u, &GAUSS_2X2))
}
