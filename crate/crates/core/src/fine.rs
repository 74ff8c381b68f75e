//! The eps-problem on the unit square: monotone electrostatics, the Maxwell
//! stress, and elasticity loaded by electrostriction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constitutive::{outer, ElasticTensorField, Mat4, OperatorSpec};
use crate::error::{HkError, Result};
use crate::fem::{fine_phases, solve_nonlinear, ElasticDisc, LocalLaw, NonlinearStats, ScalarDisc, SolverOptions};
use crate::fields::{gradient, CellGrid, Commensuration, DomainGrid, Epsilon, Grid, NodalField, QuadField, ScalarField, VectorField, GAUSS_2X2};

/// Scalar source `f` for the electrostatic equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarSource {
    Constant { value: f64 },
    /// `2 pi^2 sin(pi x1) sin(pi x2)`, whose Laplace solution is
    /// `sin(pi x1) sin(pi x2)`.
    SineProduct,
}

impl Default for ScalarSource {
    fn default() -> Self {
        ScalarSource::Constant { value: 1.0 }
    }
}

impl ScalarSource {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            ScalarSource::Constant { value } => value,
            ScalarSource::SineProduct => 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin(),
        }
    }

    pub fn field(&self, grid: DomainGrid) -> ScalarField<DomainGrid> {
        NodalField::scalar_from_fn(grid, |x| self.eval(x))
    }
}

/// Body force `g` for the elasticity equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorSource {
    Constant { value: [f64; 2] },
    /// The force that makes `u = (sin(pi x1) sin(pi x2), 0)` the solution
    /// for an isotropic tensor with Lame constants `lambda`, `mu`.
    SineProduct { lambda: f64, mu: f64 },
}

impl Default for VectorSource {
    fn default() -> Self {
        VectorSource::Constant { value: [0.0, -1.0] }
    }
}

impl VectorSource {
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            VectorSource::Constant { value } => value,
            VectorSource::SineProduct { lambda, mu } => {
                let (s1, c1) = (PI * x[0]).sin_cos();
                let (s2, c2) = (PI * x[1]).sin_cos();
                [(lambda + 3.0 * mu) * PI * PI * s1 * s2, -(lambda + mu) * PI * PI * c1 * c2]
            }
        }
    }

    pub fn field(&self, grid: DomainGrid) -> VectorField<DomainGrid> {
        NodalField::from_fn(grid, 2, |x| self.eval(x).to_vec())
    }
}

/// Alignment of `domain` with the cell grid of resolution `N eps`.
pub fn commensuration(eps: Epsilon, domain: DomainGrid) -> Result<Commensuration> {
    let k = eps.cells();
    let incommensurate = || HkError::Incommensurate {
        cells: k,
        elements: domain.n(),
        n: domain.n() / k,
    };
    if domain.n() % k != 0 {
        return Err(incommensurate());
    }
    let cell = CellGrid::new(domain.n() / k).map_err(|_| incommensurate())?;
    Commensuration::new(eps, domain, cell)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FineElectrostatic {
    pub eps: Epsilon,
    pub phi: ScalarField<DomainGrid>,
    pub stats: NonlinearStats,
}

/// Solve `int a(x/eps, grad phi) . grad v = int f v` with `phi = 0` on the
/// boundary. The cell resolution is `N eps`.
pub fn solve_fine_electrostatic(
    spec: &OperatorSpec,
    eps: Epsilon,
    f: &ScalarField<DomainGrid>,
    opts: &SolverOptions,
) -> Result<FineElectrostatic> {
    spec.validate()?;
    let map = commensuration(eps, f.grid())?;
    let disc = ScalarDisc::new(f.grid());
    let phases = fine_phases(&spec.geometry, &map);
    let load = disc.load(f.values());
    let mut phi = vec![0.0; disc.dofs()];
    let stats = solve_nonlinear(
        &disc,
        &mut LocalLaw { spec, phases: &phases },
        [0.0, 0.0],
        Some(&load),
        &mut phi,
        opts,
        "fine electrostatic",
    )?;
    Ok(FineElectrostatic {
        eps,
        phi: NodalField::from_values(f.grid(), 1, phi)?,
        stats,
    })
}

/// `grad phi (x) grad phi` at the quadrature points.
pub fn maxwell_stress<G: Grid>(phi: &ScalarField<G>) -> QuadField {
    let g = gradient(phi, &GAUSS_2X2);
    let mut s = QuadField::zeros(g.elements_per_side(), 4);
    for k in 0..g.points() {
        let d = [g.point(k)[0], g.point(k)[1]];
        s.point_mut(k).copy_from_slice(&outer(d, d));
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct FineElastic {
    pub u: VectorField<DomainGrid>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn quad_mats(s: &QuadField) -> Vec<Mat4> {
    (0..s.points())
        .map(|k| {
            let p = s.point(k);
            [p[0], p[1], p[2], p[3]]
        })
        .collect()
}

/// Solve `int B(x/eps) D(u) : D(v) = int g . v - int C(x/eps) Sigma : D(v)`
/// with `u = 0` on the boundary.
pub fn solve_fine_elasticity(
    b: &ElasticTensorField,
    c: &ElasticTensorField,
    eps: Epsilon,
    g: &VectorField<DomainGrid>,
    sigma: &QuadField,
    opts: &SolverOptions,
) -> Result<FineElastic> {
    b.validate_stiffness()?;
    let domain = g.grid();
    if g.components() != 2 || sigma.components() != 4 || sigma.elements_per_side() != domain.n() {
        return Err(HkError::Shape("elasticity data does not match the domain grid".into()));
    }
    let map = commensuration(eps, domain)?;
    let disc = ElasticDisc::new(domain);
    let stiff = disc.stiffness(b, &fine_phases(&b.geometry, &map));
    let cph = fine_phases(&c.geometry, &map);
    let cs: Vec<Mat4> = quad_mats(sigma)
        .iter()
        .zip(&cph)
        .map(|(s, ph)| c.tensor(*ph).apply(s))
        .collect();
    let mut rhs = disc.body_load(g.values());
    for (r, s) in rhs.iter_mut().zip(disc.stress_load(&cs)) {
        *r -= s;
    }
    let mut u = vec![0.0; disc.dofs()];
    let st = disc.solve(&stiff, &rhs, &mut u, 1e-2 * opts.tol, opts.max_linear)?;
    Ok(FineElastic {
        u: NodalField::from_values(domain, 2, u)?,
        residual: st.relative_residual,
        iterations: st.iterations,
    })
}

/// The coupled eps-problem.
#[derive(Clone, Debug, PartialEq)]
pub struct FineSolution {
    pub eps: Epsilon,
    pub phi: ScalarField<DomainGrid>,
    pub u: VectorField<DomainGrid>,
    pub sigma: QuadField,
    pub electrostatic: NonlinearStats,
    pub elastic_residual: f64,
    pub elastic_iterations: usize,
}

pub fn solve_fine(
    spec: &OperatorSpec,
    b: &ElasticTensorField,
    c: &ElasticTensorField,
    eps: Epsilon,
    f: &ScalarField<DomainGrid>,
    g: &VectorField<DomainGrid>,
    opts: &SolverOptions,
) -> Result<FineSolution> {
    let e = solve_fine_electrostatic(spec, eps, f, opts)?;
    let sigma = maxwell_stress(&e.phi);
    let el = solve_fine_elasticity(b, c, eps, g, &sigma, opts)?;
    Ok(FineSolution {
        eps,
        phi: e.phi,
        u: el.u,
        sigma,
        electrostatic: e.stats,
        elastic_residual: el.residual,
        elastic_iterations: el.iterations,
    })
}

/// Largest nodal entry of the electrostatic weak residual at `phi`.
pub fn electrostatic_residual(
    spec: &OperatorSpec,
    eps: Epsilon,
    f: &ScalarField<DomainGrid>,
    phi: &ScalarField<DomainGrid>,
) -> Result<f64> {
    let map = commensuration(eps, f.grid())?;
    let disc = ScalarDisc::new(f.grid());
    let phases = fine_phases(&spec.geometry, &map);
    let mut xi = vec![[0.0; 2]; disc.points()];
    disc.gradients(phi.values(), [0.0, 0.0], &mut xi);
    let flux: Vec<_> = xi.iter().zip(&phases).map(|(x, ph)| spec.flux(*ph, *x)).collect();
    let mut r = vec![0.0; disc.dofs()];
    disc.residual(&flux, Some(&disc.load(f.values())), &mut r);
    Ok(r.iter().fold(0.0, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::Microstructure;

    #[test]
    fn maxwell_stress_of_affine_potential() {
        let g = DomainGrid::new(4).unwrap();
        let phi = NodalField::scalar_from_fn(g, |x| x[0] + 2.0 * x[1]);
        let s = maxwell_stress(&phi);
        for k in 0..s.points() {
            let p = s.point(k);
            for (a, b) in p.iter().zip([1.0, 2.0, 2.0, 4.0]) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
        let eps = Epsilon::from_cells(2).unwrap();
        let d = DomainGrid::new(8).unwrap();
        let s = solve_fine_electrostatic(&spec, eps, &NodalField::zeros(d, 1), &SolverOptions::default()).unwrap();
        assert_eq!(s.phi.max_abs(), 0.0);
    }

    #[test]
    fn incommensurate_pairing_is_rejected() {
        let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::Homogeneous);
        let d = DomainGrid::new(12).unwrap();
        let f = NodalField::zeros(d, 1);
        let e = solve_fine_electrostatic(&spec, Epsilon::from_cells(5).unwrap(), &f, &SolverOptions::default());
        assert!(matches!(e, Err(HkError::Incommensurate { .. })));
    }
}
