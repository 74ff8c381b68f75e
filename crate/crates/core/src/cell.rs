//! Cell problems on the periodic unit cell: the monotone scalar corrector
//! `eta_xi` and the elastic correctors `Upsilon^ij`, `chi^ij`.

use serde::{Deserialize, Serialize};

use crate::constitutive::{outer, unit_strain, ElasticTensorField, Mat4, OperatorSpec, Phase, Vec2};
use crate::error::{HkError, Result};
use crate::fem::{cell_phases, dot, solve_nonlinear, ElasticDisc, LocalLaw, NonlinearStats, ScalarDisc, SolverOptions, Stiffness};
use crate::fields::{gauss_shape_gradients, gradient, CellGrid, Grid, NodalField, QuadField, ScalarField, VectorField, GAUSS_2X2, QP};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarCellSolution {
    pub xi: Vec2,
    /// Periodic, zero-mean corrector.
    pub eta: ScalarField<CellGrid>,
    /// Final residual relative to the residual of `eta = 0`.
    pub residual: f64,
    pub iterations: usize,
    pub stats: NonlinearStats,
}

/// Scalar cell solver for one operator on one grid; reusable across loadings.
#[derive(Clone, Debug)]
pub struct ScalarCellSolver {
    spec: OperatorSpec,
    disc: ScalarDisc<CellGrid>,
    phases: Vec<Phase>,
    opts: SolverOptions,
}

impl ScalarCellSolver {
    pub fn new(spec: &OperatorSpec, grid: CellGrid, opts: SolverOptions) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec: spec.clone(),
            disc: ScalarDisc::new(grid),
            phases: cell_phases(&spec.geometry, grid),
            opts,
        })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> CellGrid {
        self.disc.grid()
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn dofs(&self) -> usize {
        self.disc.dofs()
    }

    /// Solve in place; `eta` holds the initial guess.
    pub fn solve_into(&self, xi: Vec2, eta: &mut [f64]) -> Result<NonlinearStats> {
        if !(xi[0].is_finite() && xi[1].is_finite()) {
            return Err(HkError::InvalidSpec(format!("non-finite loading {xi:?}")));
        }
        let mut law = LocalLaw {
            spec: &self.spec,
            phases: &self.phases,
        };
        solve_nonlinear(&self.disc, &mut law, xi, None, eta, &self.opts, "scalar cell")
    }

    pub fn solve(&self, xi: Vec2) -> Result<ScalarCellSolution> {
        self.solve_from(xi, None)
    }

    pub fn solve_from(&self, xi: Vec2, warm: Option<&[f64]>) -> Result<ScalarCellSolution> {
        let mut eta = match warm {
            Some(w) => w.to_vec(),
            None => vec![0.0; self.dofs()],
        };
        let stats = self.solve_into(xi, &mut eta)?;
        Ok(ScalarCellSolution {
            xi,
            eta: NodalField::from_values(self.grid(), 1, eta)?,
            residual: stats.residual,
            iterations: stats.newton_iterations + stats.picard_iterations,
            stats,
        })
    }

    /// `xi + grad eta` at every quadrature point.
    pub fn corrector_gradients(&self, xi: Vec2, eta: &[f64]) -> Vec<Vec2> {
        let mut out = vec![[0.0; 2]; self.disc.points()];
        self.disc.gradients(eta, xi, &mut out);
        out
    }

    /// Cell average of `a(y, xi + grad eta)`.
    pub fn average_flux(&self, xi: Vec2, eta: &[f64]) -> Vec2 {
        let p = self.corrector_gradients(xi, eta);
        let mut acc = [0.0; 2];
        for (k, pk) in p.iter().enumerate() {
            let f = self.spec.flux(self.phases[k], *pk);
            acc[0] += f[0];
            acc[1] += f[1];
        }
        let w = 1.0 / p.len() as f64;
        [acc[0] * w, acc[1] * w]
    }
}

pub fn solve_scalar_cell(
    spec: &OperatorSpec,
    xi: Vec2,
    grid: CellGrid,
    opts: &SolverOptions,
) -> Result<ScalarCellSolution> {
    ScalarCellSolver::new(spec, grid, *opts)?.solve(xi)
}

/// `p(y, xi) = xi + grad_y eta_xi` at the quadrature points.
pub fn corrector_flux(solution: &ScalarCellSolution) -> QuadField {
    let mut g = gradient(&solution.eta, &GAUSS_2X2);
    for k in 0..g.points() {
        let p = g.point_mut(k);
        p[0] += solution.xi[0];
        p[1] += solution.xi[1];
    }
    g
}

/// `|int a(y, p) . p - int a(y, p) . xi|`, which vanishes for an exact
/// cell solution.
pub fn verify_flux_identity(spec: &OperatorSpec, solution: &ScalarCellSolution) -> f64 {
    let p = corrector_flux(solution);
    let grid = solution.eta.grid();
    let xi = solution.xi;
    let w = p.weight();
    let mut acc = 0.0;
    for e in 0..grid.element_count() {
        for q in 0..QP {
            let k = e * QP + q;
            let pk = [p.point(k)[0], p.point(k)[1]];
            let a = spec.flux(spec.geometry.phase(grid.quadrature_point(e, q)), pk);
            acc += w * (a[0] * (pk[0] - xi[0]) + a[1] * (pk[1] - xi[1]));
        }
    }
    acc.abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElasticCellSolution {
    /// Zero-based load indices.
    pub i: usize,
    pub j: usize,
    /// Periodic, zero-mean displacement (two components).
    pub field: VectorField<CellGrid>,
    /// Final CG residual relative to the load.
    pub residual: f64,
    pub iterations: usize,
}

/// Which flux defines the electrostriction corrector `chi^ij`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElectrostrictionVariant {
    /// `C D(chi) + zeta`.
    AsWritten,
    /// `C (D(chi) + zeta)`.
    CApplied,
    /// `B D(chi) + C zeta`, the flux the two-scale expansion of
    /// `B D(u) + C Sigma` produces.
    #[default]
    TwoScale,
}

impl ElectrostrictionVariant {
    pub const ALL: [ElectrostrictionVariant; 3] = [
        ElectrostrictionVariant::AsWritten,
        ElectrostrictionVariant::CApplied,
        ElectrostrictionVariant::TwoScale,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ElectrostrictionVariant::AsWritten => "as-written",
            ElectrostrictionVariant::CApplied => "c-applied",
            ElectrostrictionVariant::TwoScale => "two-scale",
        }
    }
}

/// Periodic elasticity solver on the cell for one tensor field.
#[derive(Clone, Debug)]
pub struct ElasticCellSolver {
    pub(crate) disc: ElasticDisc<CellGrid>,
    pub(crate) phases: Vec<Phase>,
    pub(crate) tensor: ElasticTensorField,
    stiffness: Stiffness,
    opts: SolverOptions,
}

impl ElasticCellSolver {
    pub fn new(tensor: &ElasticTensorField, grid: CellGrid, opts: SolverOptions) -> Self {
        let disc = ElasticDisc::new(grid);
        let phases = cell_phases(&tensor.geometry, grid);
        let stiffness = disc.stiffness(tensor, &phases);
        Self {
            disc,
            phases,
            tensor: tensor.clone(),
            stiffness,
            opts,
        }
    }

    pub fn grid(&self) -> CellGrid {
        self.disc.mesh.grid
    }

    /// Apply a phase-wise tensor field to a matrix field at the quadrature
    /// points of this grid.
    pub(crate) fn apply_field(&self, t: &ElasticTensorField, m: &[Mat4]) -> Vec<Mat4> {
        let phases = if t.geometry == self.tensor.geometry {
            None
        } else {
            Some(cell_phases(&t.geometry, self.grid()))
        };
        m.iter()
            .enumerate()
            .map(|(k, mk)| {
                let ph = phases.as_ref().map_or(self.phases[k], |p| p[k]);
                t.tensor(ph).apply(mk)
            })
            .collect()
    }

    /// Solve `int T D(w) : D(v) = -int S : D(v)` for the given stress.
    pub(crate) fn solve_stress(&self, stress: &[Mat4], i: usize, j: usize) -> Result<ElasticCellSolution> {
        let rhs: Vec<f64> = self.disc.stress_load(stress).iter().map(|v| -v).collect();
        let mut x = vec![0.0; self.disc.dofs()];
        let st = self
            .disc
            .solve(&self.stiffness, &rhs, &mut x, self.opts.tol, self.opts.max_linear)?;
        Ok(ElasticCellSolution {
            i,
            j,
            field: NodalField::from_values(self.grid(), 2, x)?,
            residual: st.relative_residual,
            iterations: st.iterations,
        })
    }

    /// `Upsilon^ij` with `int B D(U^ij - Upsilon^ij) : D(v) = 0`.
    pub fn solve_upsilon(&self, i: usize, j: usize) -> Result<ElasticCellSolution> {
        check_indices(i, j)?;
        let e = unit_strain(i, j);
        let stress: Vec<Mat4> = self.phases.iter().map(|ph| self.tensor.tensor(*ph).apply(&e)).collect();
        let mut s = self.solve_stress(&stress, i, j)?;
        // the weak form has +B E on the right-hand side
        s.field.values_mut().iter_mut().for_each(|v| *v = -*v);
        Ok(s)
    }

    /// Symmetrized strain of a cell displacement at the quadrature points.
    pub fn strain(&self, field: &[f64]) -> Vec<Mat4> {
        sym_strain(self.grid(), field)
    }
}

pub(crate) fn sym_strain(grid: CellGrid, field: &[f64]) -> Vec<Mat4> {
    let dn = gauss_shape_gradients();
    let inv_h = 1.0 / grid.h();
    let mut out = Vec::with_capacity(grid.element_count() * QP);
    for e in 0..grid.element_count() {
        let nodes = grid.element_nodes(e);
        for dq in &dn {
            let mut g = [0.0; 4];
            for a in 0..4 {
                for c in 0..2 {
                    let v = field[2 * nodes[a] + c];
                    g[2 * c] += v * dq[a][0];
                    g[2 * c + 1] += v * dq[a][1];
                }
            }
            let off = 0.5 * (g[1] + g[2]) * inv_h;
            out.push([g[0] * inv_h, off, off, g[3] * inv_h]);
        }
    }
    out
}

fn check_indices(i: usize, j: usize) -> Result<()> {
    if i > 1 || j > 1 {
        return Err(HkError::InvalidSpec(format!("index pair ({i}, {j}) outside 0..2")));
    }
    Ok(())
}

pub fn solve_elastic_cell_u(
    b: &ElasticTensorField,
    grid: CellGrid,
    i: usize,
    j: usize,
    opts: &SolverOptions,
) -> Result<ElasticCellSolution> {
    ElasticCellSolver::new(b, grid, *opts).solve_upsilon(i, j)
}

/// `zeta^ij = p(y, e^i) (x) p(y, e^j)` at the quadrature points, stored
/// row-major with four components.
pub fn assemble_zeta(sol_i: &ScalarCellSolution, sol_j: &ScalarCellSolution) -> QuadField {
    let pi = corrector_flux(sol_i);
    let pj = corrector_flux(sol_j);
    let mut z = QuadField::zeros(pi.elements_per_side(), 4);
    for k in 0..pi.points() {
        let a = [pi.point(k)[0], pi.point(k)[1]];
        let b = [pj.point(k)[0], pj.point(k)[1]];
        z.point_mut(k).copy_from_slice(&outer(a, b));
    }
    z
}

pub(crate) fn quad_to_mats(z: &QuadField) -> Vec<Mat4> {
    assert_eq!(z.components(), 4);
    (0..z.points())
        .map(|k| {
            let p = z.point(k);
            [p[0], p[1], p[2], p[3]]
        })
        .collect()
}

/// Electrostriction corrector for the microscopic electric stress `zeta`.
///
/// The variant selects the stiffness in front of `D(chi)` and whether `C`
/// acts on `zeta`; `b` is only used by the two-scale variant.
pub fn solve_electrostriction_cell(
    b: &ElasticTensorField,
    c: &ElasticTensorField,
    zeta: &QuadField,
    grid: CellGrid,
    variant: ElectrostrictionVariant,
    opts: &SolverOptions,
) -> Result<ElasticCellSolution> {
    let stiff = match variant {
        ElectrostrictionVariant::TwoScale => b,
        _ => c,
    };
    let solver = ElasticCellSolver::new(stiff, grid, *opts);
    solve_chi(&solver, c, &quad_to_mats(zeta), variant, 0, 0)
}

pub(crate) fn solve_chi(
    solver: &ElasticCellSolver,
    c: &ElasticTensorField,
    zeta: &[Mat4],
    variant: ElectrostrictionVariant,
    i: usize,
    j: usize,
) -> Result<ElasticCellSolution> {
    let stress = match variant {
        ElectrostrictionVariant::AsWritten => zeta.to_vec(),
        _ => solver.apply_field(c, zeta),
    };
    solver.solve_stress(&stress, i, j)
}

/// Discrete weak residual `max_a |int (T D(w) + S) : D(N_a e_c)|` of an
/// elastic cell solution `w` for the stress `S`.
pub fn elastic_weak_residual(solver: &ElasticCellSolver, field: &[f64], stress: &[Mat4]) -> f64 {
    let strain = solver.strain(field);
    let total: Vec<Mat4> = strain
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let t = solver.tensor.tensor(solver.phases[k]).apply(d);
            [t[0] + stress[k][0], t[1] + stress[k][1], t[2] + stress[k][2], t[3] + stress[k][3]]
        })
        .collect();
    solver.disc.stress_load(&total).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `int a(y, p) . grad eta` for a solved cell problem (test function
/// `v = eta`); zero up to the solver tolerance.
pub fn energy_identity(spec: &OperatorSpec, solution: &ScalarCellSolution) -> f64 {
    let grad = gradient(&solution.eta, &GAUSS_2X2);
    let p = corrector_flux(solution);
    let grid = solution.eta.grid();
    let w = p.weight();
    let mut acc = 0.0;
    for e in 0..grid.element_count() {
        for q in 0..QP {
            let k = e * QP + q;
            let a = spec.flux(
                spec.geometry.phase(grid.quadrature_point(e, q)),
                [p.point(k)[0], p.point(k)[1]],
            );
            acc += w * dot(&a, grad.point(k));
        }
    }
    acc
}
