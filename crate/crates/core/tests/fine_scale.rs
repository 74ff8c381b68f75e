use std::f64::consts::PI;

use hk_core::constitutive::{ElasticTensorField, Lame, Microstructure, OperatorSpec, Tensor4};
use hk_core::fem::SolverOptions;
use hk_core::fields::{gradient, interpolate, DomainGrid, Epsilon, NodalField, QuadField, GAUSS_2X2};
use hk_core::fine::*;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// L2 error against a closed form, by 2x2 Gauss quadrature.
fn l2_error(f: &QuadField, grid: DomainGrid, exact: impl Fn([f64; 2]) -> Vec<f64>) -> f64 {
    use hk_core::fields::Grid;
    let mut acc = 0.0;
    for e in 0..grid.element_count() {
        for q in 0..4 {
            let x = grid.quadrature_point(e, q);
            let ex = exact(x);
            for (a, b) in f.point(e * 4 + q).iter().zip(ex) {
                acc += (a - b).powi(2);
            }
        }
    }
    (acc * f.weight()).sqrt()
}

fn slopes(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn laplacian_manufactured_solution() {
    let spec = OperatorSpec::linear([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]], Microstructure::Homogeneous);
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let d = DomainGrid::new(n).unwrap();
        let s = solve_fine_electrostatic(&spec, Epsilon::from_cells(n / 4).unwrap(), &ScalarSource::SineProduct.field(d), &opts()).unwrap();
        let v = interpolate(&s.phi, &GAUSS_2X2);
        errs.push(l2_error(&v, d, |x| vec![(PI * x[0]).sin() * (PI * x[1]).sin()]));
    }
    for s in slopes(&errs) {
        assert!((1.8..=2.2).contains(&s), "{errs:?}");
    }
}

#[test]
fn elastic_manufactured_solution() {
    let (lambda, mu) = (1.5, 0.8);
    let b = ElasticTensorField::constant(Tensor4::isotropic(lambda, mu));
    let c = ElasticTensorField::constant(Tensor4::zero());
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let d = DomainGrid::new(n).unwrap();
        let g = VectorSource::SineProduct { lambda, mu }.field(d);
        let sigma = QuadField::zeros(n, 4);
        let s = solve_fine_elasticity(&b, &c, Epsilon::from_cells(n / 4).unwrap(), &g, &sigma, &opts()).unwrap();
        let v = interpolate(&s.u, &GAUSS_2X2);
        errs.push(l2_error(&v, d, |x| vec![(PI * x[0]).sin() * (PI * x[1]).sin(), 0.0]));
    }
    for s in slopes(&errs) {
        assert!((1.8..=2.2).contains(&s), "{errs:?}");
    }
}

#[test]
fn manufactured_body_force_matches_finite_differences() {
    let (lambda, mu) = (1.5, 0.8);
    let u = |x: [f64; 2]| [(PI * x[0]).sin() * (PI * x[1]).sin(), 0.0];
    let h = 1e-4;
    let x = [0.31, 0.62];
    // sigma = lambda tr(D) I + 2 mu D, with D by central differences
    let stress = |x: [f64; 2]| {
        let d = |c: usize, k: usize| {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            (u(a)[c] - u(b)[c]) / (2.0 * h)
        };
        let e = [d(0, 0), 0.5 * (d(0, 1) + d(1, 0)), d(1, 1)];
        let tr = e[0] + e[2];
        [lambda * tr + 2.0 * mu * e[0], 2.0 * mu * e[1], lambda * tr + 2.0 * mu * e[2]]
    };
    let div = |r: usize| {
        let comp = |s: [f64; 3], c: usize| match (r, c) {
            (0, 0) => s[0],
            (0, 1) | (1, 0) => s[1],
            _ => s[2],
        };
        let mut acc = 0.0;
        for k in 0..2 {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            acc += (comp(stress(a), k) - comp(stress(b), k)) / (2.0 * h);
        }
        -acc
    };
    let g = VectorSource::SineProduct { lambda, mu }.eval(x);
    assert!((g[0] - div(0)).abs() < 1e-4 && (g[1] - div(1)).abs() < 1e-4, "{g:?}");
}

#[test]
fn constant_coefficients_do_not_depend_on_eps() {
    let spec = OperatorSpec::power_law(3.0, 2.0, 2.0, Microstructure::centered_laminate(0.5));
    let d = DomainGrid::new(32).unwrap();
    let f = ScalarSource::default().field(d);
    let a = solve_fine_electrostatic(&spec, Epsilon::from_cells(2).unwrap(), &f, &opts()).unwrap();
    let b = solve_fine_electrostatic(&spec, Epsilon::from_cells(8).unwrap(), &f, &opts()).unwrap();
    assert!(a.phi.max_abs_diff(&b.phi) <= 1e-12);
}

fn laminate_b() -> ElasticTensorField {
    ElasticTensorField::isotropic(Lame { lambda: 1.0, mu: 1.0 }, Lame { lambda: 4.0, mu: 3.0 }, Microstructure::centered_laminate(0.5))
}

#[test]
fn elasticity_is_linear_in_the_stress() {
    let d = DomainGrid::new(16).unwrap();
    let eps = Epsilon::from_cells(4).unwrap();
    let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let phi = solve_fine_electrostatic(&spec, eps, &ScalarSource::default().field(d), &opts()).unwrap().phi;
    let s1 = maxwell_stress(&phi);
    let mut s2 = s1.clone();
    s2.values_mut().iter_mut().for_each(|v| *v *= 2.0);
    let c = ElasticTensorField::isotropic(Lame { lambda: 0.3, mu: 0.2 }, Lame { lambda: 1.0, mu: 0.5 }, Microstructure::centered_laminate(0.5));
    let g = NodalField::zeros(d, 2);
    let u1 = solve_fine_elasticity(&laminate_b(), &c, eps, &g, &s1, &opts()).unwrap().u;
    let u2 = solve_fine_elasticity(&laminate_b(), &c, eps, &g, &s2, &opts()).unwrap().u;
    assert!(u1.max_abs() > 1e-6);
    assert!(u2.max_abs_diff(&u1.scaled(2.0)) <= 1e-12 * u2.max_abs().max(1.0) * 10.0);
    let zero = solve_fine_elasticity(&laminate_b(), &c, eps, &g, &QuadField::zeros(16, 4), &opts()).unwrap();
    assert_eq!(zero.u.max_abs(), 0.0);
}

#[test]
fn maxwell_stress_is_rank_one() {
    let d = DomainGrid::new(16).unwrap();
    let phi = NodalField::scalar_from_fn(d, |x| (3.0 * x[0]).sin() * x[1] * x[1]);
    let s = maxwell_stress(&phi);
    let g = gradient(&phi, &GAUSS_2X2);
    for k in 0..s.points() {
        let p = s.point(k);
        let n2 = g.point(k)[0].powi(2) + g.point(k)[1].powi(2);
        assert!((p[0] + p[3] - n2).abs() <= 1e-14);
        assert!((p[0] * p[3] - p[1] * p[2]).abs() <= 1e-12);
        assert!(p[0] >= 0.0 && p[3] >= 0.0 && p[1] == p[2]);
    }
}

#[test]
fn weak_residual_and_energy_bound() {
    let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let mut ratios = Vec::new();
    for k in [4usize, 8, 16] {
        let eps = Epsilon::from_cells(k).unwrap();
        let d = DomainGrid::new(4 * k).unwrap();
        let f = ScalarSource::default().field(d);
        let s = solve_fine_electrostatic(&spec, eps, &f, &opts()).unwrap();
        assert!(electrostatic_residual(&spec, eps, &f, &s.phi).unwrap() <= 1e-9);
        ratios.push(gradient(&s.phi, &GAUSS_2X2).lp_norm(3.0).powi(3));
    }
    // ||f||_{L^p'} = 1 for f = 1, so the ratio is the energy itself
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max <= 2.0 * min, "{ratios:?}");
}

#[test]
fn laminate_normal_flux_is_continuous() {
    // the nodal weak residual is the jump of the normal flux across the
    // edges meeting at each node
    let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let eps = Epsilon::from_cells(4).unwrap();
    let d = DomainGrid::new(32).unwrap();
    let f = ScalarSource::default().field(d);
    let s = solve_fine_electrostatic(&spec, eps, &f, &opts()).unwrap();
    assert!(electrostatic_residual(&spec, eps, &f, &s.phi).unwrap() <= 1e-8);
}
