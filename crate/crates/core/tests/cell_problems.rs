use hk_core::cell::*;
use hk_core::constitutive::{Lame, Microstructure, OperatorSpec, Tensor4, ElasticTensorField};
use hk_core::fem::SolverOptions;
use hk_core::fields::{CellGrid, Grid, QuadField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// sigma = 1 on y1 < 0 and 4 on y1 >= 0
fn laminate(p: f64) -> OperatorSpec {
    OperatorSpec::power_law(p, 1.0, 4.0, Microstructure::Laminate { fraction: 0.5, offset: 0.0 })
}

/// Constant flux `q` of the 1D two-layer problem with equal fractions:
/// `<(q / sigma)^(1/(p-1))> = 1`, solved by bisection.
fn laminate_flux(p: f64, s1: f64, s2: f64) -> f64 {
    let g = |q: f64| 0.5 * (q / s1).powf(1.0 / (p - 1.0)) + 0.5 * (q / s2).powf(1.0 / (p - 1.0)) - 1.0;
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn grid(n: usize) -> CellGrid {
    CellGrid::new(n).unwrap()
}

#[test]
fn laminate_corrector_slopes() {
    let q = laminate_flux(2.0, 1.0, 4.0);
    assert!((q - 1.6).abs() < 1e-12);
    let n = 16;
    let s = solve_scalar_cell(&laminate(2.0), [1.0, 0.0], grid(n), &SolverOptions::default()).unwrap();
    let h = 1.0 / n as f64;
    for j in 0..n {
        for i in 0..n {
            let slope = (s.eta.at(i + 1, j, 0) - s.eta.at(i, j, 0)) / h;
            let y1 = -0.5 + (i as f64 + 0.5) * h;
            let expected = if y1 < 0.0 { q - 1.0 } else { q / 4.0 - 1.0 };
            assert!((slope - expected).abs() < 1e-9, "{slope} vs {expected}");
        }
    }
    assert!(s.eta.values().iter().sum::<f64>().abs() < 1e-12);
}

#[test]
fn laminate_corrector_flux_values() {
    let s = solve_scalar_cell(&laminate(2.0), [1.0, 0.0], grid(16), &SolverOptions::default()).unwrap();
    let p = corrector_flux(&s);
    let g = grid(16);
    for e in 0..g.element_count() {
        for qp in 0..4 {
            let y = g.quadrature_point(e, qp);
            let v = p.point(e * 4 + qp);
            let expected = if y[0] < 0.0 { 1.6 } else { 0.4 };
            assert!((v[0] - expected).abs() < 1e-9 && v[1].abs() < 1e-9);
        }
    }
}

#[test]
fn corrector_flux_mean_is_loading() {
    let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::SquareInclusion { side: 0.5 });
    let solver = ScalarCellSolver::new(&spec, grid(8), SolverOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let s = solver.solve(xi).unwrap();
        let mean = corrector_flux(&s).integral();
        assert!((mean[0] - xi[0]).abs() < 1e-10 && (mean[1] - xi[1]).abs() < 1e-10);
    }
}


#[test]
fn flux_identity_on_laminate_and_unconverged() {
    let spec = laminate(2.0);
    let s = solve_scalar_cell(&spec, [1.0, 0.0], grid(64), &SolverOptions::default()).unwrap();
    assert!(verify_flux_identity(&spec, &s) <= 1e-10);
    // a perturbed field is reported, not rejected
    let mut bad = s.clone();
    let m = bad.eta.values().len();
    for (k, v) in bad.eta.values_mut().iter_mut().enumerate() {
        *v += 0.1 * ((k * 37 % m) as f64 / m as f64 - 0.5);
    }
    assert!(verify_flux_identity(&spec, &bad) > 1e-6);
}

#[test]
fn nonlinear_laminate_flux_matches_oracle() {
    let q = laminate_flux(3.0, 1.0, 4.0);
    assert!((q - 16.0 / 9.0).abs() < 1e-12);
    let spec = laminate(3.0);
    let solver = ScalarCellSolver::new(&spec, grid(16), SolverOptions::default()).unwrap();
    let s = solver.solve([1.0, 0.0]).unwrap();
    let a = solver.average_flux(s.xi, s.eta.values());
    assert!((a[0] - q).abs() < 1e-8 && a[1].abs() < 1e-10, "{a:?}");
    assert!(energy_identity(&spec, &s).abs() < 1e-9);
}

fn laminate_elastic() -> ElasticTensorField {
    ElasticTensorField::isotropic(
        Lame { lambda: 1.0, mu: 1.0 },
        Lame { lambda: 4.0, mu: 3.0 },
        Microstructure::Laminate { fraction: 0.5, offset: 0.0 },
    )
}

#[test]
fn upsilon_laminate_reduces_to_1d() {
    let n = 16;
    let s = solve_elastic_cell_u(&laminate_elastic(), grid(n), 0, 0, &SolverOptions::default()).unwrap();
    // traction continuity: (lambda + 2 mu)(1 - w') is constant with <w'> = 0
    let (m1, m2) = (3.0, 10.0);
    let mh = 1.0 / (0.5 / m1 + 0.5 / m2);
    let h = 1.0 / n as f64;
    for j in 0..n {
        for i in 0..n {
            assert!((s.field.at(i, j, 0) - s.field.at(i, 0, 0)).abs() < 1e-9);
            assert!(s.field.at(i, j, 1).abs() < 1e-9);
            let slope = (s.field.at(i + 1, j, 0) - s.field.at(i, j, 0)) / h;
            let y1 = -0.5 + (i as f64 + 0.5) * h;
            let m = if y1 < 0.0 { m1 } else { m2 };
            assert!((slope - (1.0 - mh / m)).abs() < 1e-8);
        }
    }
}

#[test]
fn constant_tensor_gives_zero_upsilon() {
    let b = ElasticTensorField::constant(Tensor4::isotropic(2.0, 1.5));
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let s = solve_elastic_cell_u(&b, grid(8), i, j, &SolverOptions::default()).unwrap();
        assert!(s.field.max_abs() <= 1e-12);
    }
}

#[test]
fn zeta_values_and_transpose() {
    let g = grid(16);
    let spec = laminate(2.0);
    let s1 = solve_scalar_cell(&spec, [1.0, 0.0], g, &SolverOptions::default()).unwrap();
    let s2 = solve_scalar_cell(&spec, [0.0, 1.0], g, &SolverOptions::default()).unwrap();
    let z11 = assemble_zeta(&s1, &s1);
    for e in 0..g.element_count() {
        for qp in 0..4 {
            let y = g.quadrature_point(e, qp);
            let v = z11.point(e * 4 + qp);
            let d = if y[0] < 0.0 { 2.56 } else { 0.16 };
            assert!((v[0] - d).abs() < 1e-9 && v[1].abs() < 1e-9 && v[2].abs() < 1e-9 && v[3].abs() < 1e-9);
        }
    }
    let z12 = assemble_zeta(&s1, &s2);
    let z21 = assemble_zeta(&s2, &s1);
    for k in 0..z12.points() {
        let (a, b) = (z12.point(k), z21.point(k));
        assert!((a[0] - b[0]).abs() <= 1e-14 && (a[1] - b[2]).abs() <= 1e-14);
        assert!((a[2] - b[1]).abs() <= 1e-14 && (a[3] - b[3]).abs() <= 1e-14);
    }
    let c = OperatorSpec::power_law(2.0, 3.0, 3.0, Microstructure::Homogeneous);
    let c1 = solve_scalar_cell(&c, [1.0, 0.0], g, &SolverOptions::default()).unwrap();
    let c2 = solve_scalar_cell(&c, [0.0, 1.0], g, &SolverOptions::default()).unwrap();
    let z = assemble_zeta(&c1, &c2);
    for k in 0..z.points() {
        assert_eq!(z.point(k), &[0.0, 1.0, 0.0, 0.0]);
    }
}

fn constant_zeta(g: CellGrid, m: [f64; 4]) -> QuadField {
    QuadField::from_values(g.n(), 4, m.repeat(g.element_count() * 4)).unwrap()
}

#[test]
fn chi_vanishes_for_constant_data() {
    let g = grid(8);
    let c = ElasticTensorField::constant(Tensor4::isotropic(0.5, 0.3));
    let zeta = constant_zeta(g, [1.0, 0.5, 0.5, -2.0]);
    for v in ElectrostrictionVariant::ALL {
        let s = solve_electrostriction_cell(&laminate_elastic(), &c, &zeta, g, v, &SolverOptions::default()).unwrap();
        assert!(s.field.max_abs() <= 1e-12, "{}", v.name());
    }
}

#[test]
fn c_applied_load_is_heterogeneous() {
    let g = grid(8);
    let c = ElasticTensorField::isotropic(
        Lame { lambda: 0.2, mu: 0.1 },
        Lame { lambda: 1.0, mu: 0.8 },
        Microstructure::SquareInclusion { side: 0.5 },
    );
    let zeta = constant_zeta(g, [1.0, 0.0, 0.0, 0.0]);
    let b = laminate_elastic();
    let opts = SolverOptions::default();
    let applied = solve_electrostriction_cell(&b, &c, &zeta, g, ElectrostrictionVariant::CApplied, &opts).unwrap();
    assert!(applied.field.max_abs() > 1e-3);
    let written = solve_electrostriction_cell(&b, &c, &zeta, g, ElectrostrictionVariant::AsWritten, &opts).unwrap();
    assert!(written.field.max_abs() <= 1e-12);
}

#[test]
fn phases_agreeing_at_the_loading_need_no_corrector() {
    // sigma |xi|^(p-2) xi is the same in both phases when |xi| = 1
    let spec = OperatorSpec::variable_exponent(2.0, 3.0, 1.0, 1.0, Microstructure::SquareInclusion { side: 0.5 });
    let s = solve_scalar_cell(&spec, [1.0, 0.0], grid(16), &SolverOptions::default()).unwrap();
    assert!(s.residual <= 1e-10, "{}", s.residual);
    assert_eq!(s.eta.max_abs(), 0.0);
    let s = solve_scalar_cell(&spec, [0.6, 0.0], grid(16), &SolverOptions::default()).unwrap();
    assert!(s.residual <= 1e-10 && s.eta.max_abs() > 1e-3);
}

#[test]
fn cell_solves_are_deterministic() {
    let spec = laminate(3.0).with_constants(Default::default());
    let a = solve_scalar_cell(&spec, [0.7, -0.4], grid(16), &SolverOptions::default()).unwrap();
    let b = solve_scalar_cell(&spec, [0.7, -0.4], grid(16), &SolverOptions::default()).unwrap();
    assert_eq!(a.eta.values(), b.eta.values());
}

#[test]
fn rejects_bad_input() {
    assert!(solve_scalar_cell(&laminate(2.0), [f64::NAN, 0.0], grid(8), &SolverOptions::default()).is_err());
    let spec = OperatorSpec::power_law(0.5, 1.0, 1.0, Microstructure::Homogeneous);
    assert!(solve_scalar_cell(&spec, [1.0, 0.0], grid(8), &SolverOptions::default()).is_err());
}
