use hk_core::cell::{solve_scalar_cell, ElectrostrictionVariant};
use hk_core::constitutive::{ElasticTensorField, Lame, Microstructure, OperatorSpec, Tensor4};
use hk_core::effective::*;
use hk_core::fem::SolverOptions;
use hk_core::fields::CellGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(n: usize) -> CellGrid {
    CellGrid::new(n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn constant_linear_law() {
    let b = [[2.0, 0.5], [0.5, 1.0]];
    let spec = OperatorSpec::linear(b, b, Microstructure::centered_laminate(0.5));
    let a = eval_a_hom(&spec, [0.3, -1.0], grid(8), &opts()).unwrap();
    assert!((a[0] - (0.6 - 0.5)).abs() < 1e-12 && (a[1] - (0.15 - 1.0)).abs() < 1e-12);
    let bh = linear_case_b_hom(&spec, grid(8), &opts()).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((bh[i][j] - b[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn linear_laminate_means() {
    let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let a1 = eval_a_hom(&spec, [1.0, 0.0], grid(16), &opts()).unwrap();
    let a2 = eval_a_hom(&spec, [0.0, 1.0], grid(16), &opts()).unwrap();
    assert!(rel(a1[0], 1.6) < 1e-3 && a1[1].abs() < 1e-10);
    assert!(rel(a2[1], 2.5) < 1e-3 && a2[0].abs() < 1e-10);
    let bh = linear_case_b_hom(&spec, grid(16), &opts()).unwrap();
    assert!(rel(bh[0][0], 1.6) < 1e-3 && rel(bh[1][1], 2.5) < 1e-3);
}

#[test]
fn linear_consistency_and_hill_bounds() {
    let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::SquareInclusion { side: 0.5 });
    let g = grid(16);
    let bh = linear_case_b_hom(&spec, g, &opts()).unwrap();
    let law = Conductivity::new(&spec, g, opts()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let direct = eval_a_hom(&spec, xi, g, &opts()).unwrap();
        let cached = law.eval(xi).unwrap();
        for k in 0..2 {
            let v = bh[k][0] * xi[0] + bh[k][1] * xi[1];
            assert!((direct[k] - v).abs() <= 1e-8 * v.abs().max(1.0));
            assert!((cached[k] - v).abs() <= 1e-8 * v.abs().max(1.0));
        }
    }
    // Hill bounds with the discrete inclusion fraction 1/4
    let (f, s1, s2) = (0.25, 1.0, 4.0);
    let harm = 1.0 / ((1.0 - f) / s1 + f / s2);
    let arith = (1.0 - f) * s1 + f * s2;
    let tr = bh[0][0] + bh[1][1];
    let det = bh[0][0] * bh[1][1] - bh[0][1] * bh[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (lo, hi) = (0.5 * tr - disc, 0.5 * tr + disc);
    assert!(lo >= harm * (1.0 - 1e-9) && hi <= arith * (1.0 + 1e-9), "{lo} {hi}");
}

#[test]
fn nonlinear_laminate_oracle() {
    let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let a = eval_a_hom(&spec, [1.0, 0.0], grid(8), &opts()).unwrap();
    assert!(rel(a[0], 16.0 / 9.0) < 1e-3, "{a:?}");
}

#[test]
fn power_law_homogeneity() {
    let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::SquareInclusion { side: 0.5 });
    let law = Conductivity::new(&spec, grid(8), opts()).unwrap();
    let xi = [0.8, -0.3];
    let a = law.eval(xi).unwrap();
    for t in [0.5, 2.0] {
        let b = law.eval([t * xi[0], t * xi[1]]).unwrap();
        for k in 0..2 {
            assert!((b[k] - t * t * a[k]).abs() <= 1e-6 * (t * t * a[k]).abs().max(1e-3));
        }
    }
}

#[test]
fn checkerboard_rotation_equivariance() {
    let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::Checkerboard);
    let law = Conductivity::new(&spec, grid(8), opts()).unwrap();
    let xi = [0.7, 0.2];
    let a = law.eval(xi).unwrap();
    let r = law.eval([-xi[1], xi[0]]).unwrap();
    let scale = (a[0] * a[0] + a[1] * a[1]).sqrt();
    assert!((r[0] + a[1]).abs() <= 1e-6 * scale && (r[1] - a[0]).abs() <= 1e-6 * scale);
}

#[test]
fn property_report() {
    let iso = OperatorSpec::linear([[3.0, 0.0], [0.0, 3.0]], [[3.0, 0.0], [0.0, 3.0]], Microstructure::Homogeneous);
    let law = Conductivity::new(&iso, grid(4), opts()).unwrap();
    let r = check_a_hom_properties(&law, 50, 1).unwrap();
    assert_eq!(r.theta, 1.0);
    assert!((r.min_monotonicity - 3.0).abs() < 1e-10 && (r.max_monotonicity - 3.0).abs() < 1e-10);
    let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let law = Conductivity::new(&spec, grid(4), opts()).unwrap();
    for seed in 0..3 {
        let r = check_a_hom_properties(&law, 100, seed).unwrap();
        assert!(!r.violation && r.min_monotonicity > 0.0);
        assert!(r.max_continuity.is_finite());
    }
    assert!(check_a_hom_properties(&law, 5, 0).is_err());
}

fn iso_laminate() -> ElasticTensorField {
    ElasticTensorField::isotropic(
        Lame { lambda: 1.0, mu: 1.0 },
        Lame { lambda: 4.0, mu: 3.0 },
        Microstructure::Laminate { fraction: 0.5, offset: 0.0 },
    )
}

/// Layered-medium oracle: strains jump only in the components that keep
/// the layer interface compatible; the jumps enforce continuity of the
/// traction `sigma e1`.
fn laminate_b_hom(b: &ElasticTensorField) -> Tensor4 {
    use hk_core::constitutive::{idx4, unit_strain, Phase};
    let t = [b.tensor(Phase::Matrix), b.tensor(Phase::Inclusion)];
    let strains = |e: [f64; 4]| -> [[f64; 4]; 2] {
        // phase k strain = e + s_k * sym(d (x) e1), s = (+1, -1), unknown d
        let resp = |k: usize, d: [f64; 2]| {
            let s = if k == 0 { 1.0 } else { -1.0 };
            let m = [e[0] + s * d[0], e[1] + 0.5 * s * d[1], e[2] + 0.5 * s * d[1], e[3]];
            (m, t[k].apply(&m))
        };
        let traction = |d: [f64; 2]| {
            let (_, a) = resp(0, d);
            let (_, c) = resp(1, d);
            [a[0] - c[0], a[2] - c[2]]
        };
        let r0 = traction([0.0, 0.0]);
        let c0 = traction([1.0, 0.0]);
        let c1 = traction([0.0, 1.0]);
        let j = [[c0[0] - r0[0], c1[0] - r0[0]], [c0[1] - r0[1], c1[1] - r0[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let d = [
            -(j[1][1] * r0[0] - j[0][1] * r0[1]) / det,
            -(-j[1][0] * r0[0] + j[0][0] * r0[1]) / det,
        ];
        [resp(0, d).0, resp(1, d).0]
    };
    let mut out = Tensor4::zero();
    for i in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let a = strains(unit_strain(i, j));
                    let c = strains(unit_strain(m, n));
                    let mut v = 0.0;
                    for k in 0..2 {
                        let s = t[k].apply(&a[k]);
                        v += 0.5 * (0..4).map(|r| s[r] * c[k][r]).sum::<f64>();
                    }
                    out.0[idx4(i, j, m, n)] = v;
                }
            }
        }
    }
    out
}

#[test]
fn b_hom_constant_and_laminate() {
    let t = Tensor4::isotropic(2.0, 1.5);
    let bh = assemble_b_hom(&ElasticTensorField::constant(t), grid(8), &opts()).unwrap();
    assert!(bh.max_abs_diff(&t) <= 1e-12);
    let b = iso_laminate();
    let bh = assemble_b_hom(&b, grid(16), &opts()).unwrap();
    let oracle = laminate_b_hom(&b);
    for k in 0..16 {
        assert!((bh.0[k] - oracle.0[k]).abs() <= 1e-3 * oracle.0[k].abs().max(1e-3), "{k}: {} {}", bh.0[k], oracle.0[k]);
    }
}

#[test]
fn b_hom_symmetries_and_ellipticity() {
    let b = ElasticTensorField::isotropic(
        Lame { lambda: 1.0, mu: 0.5 },
        Lame { lambda: 10.0, mu: 8.0 },
        Microstructure::SquareInclusion { side: 0.5 },
    );
    let bh = assemble_b_hom(&b, grid(16), &opts()).unwrap();
    assert!(bh.major_asymmetry() <= 1e-10 && bh.minor_asymmetry() <= 1e-10);
    assert!(bh.symmetric_eigen_range().0 > 0.0);
}

#[test]
fn c_hom_constant_variants() {
    let g = grid(8);
    let spec = OperatorSpec::power_law(3.0, 2.0, 2.0, Microstructure::Homogeneous);
    let s1 = solve_scalar_cell(&spec, [1.0, 0.0], g, &opts()).unwrap();
    let s2 = solve_scalar_cell(&spec, [0.0, 1.0], g, &opts()).unwrap();
    let c = Tensor4::isotropic(0.7, 0.4);
    let cf = ElasticTensorField::constant(c);
    let bf = ElasticTensorField::constant(Tensor4::isotropic(3.0, 2.0));
    for v in [ElectrostrictionVariant::CApplied, ElectrostrictionVariant::TwoScale] {
        let ch = assemble_c_hom(&bf, &cf, [&s1, &s2], v, &opts()).unwrap();
        assert!(ch.max_abs_diff(&c) <= 1e-12, "{}", v.name());
    }
    // as written the average loses C: C_hom_ij = e^i (x) e^j
    let ch = assemble_c_hom(&bf, &cf, [&s1, &s2], ElectrostrictionVariant::AsWritten, &opts()).unwrap();
    for k in 0..2 {
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let e = if k == i && l == j { 1.0 } else { 0.0 };
                    assert!((ch.get(k, l, i, j) - e).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn c_hom_variants_differ_when_heterogeneous() {
    let g = grid(8);
    let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let s1 = solve_scalar_cell(&spec, [1.0, 0.0], g, &opts()).unwrap();
    let s2 = solve_scalar_cell(&spec, [0.0, 1.0], g, &opts()).unwrap();
    let c = ElasticTensorField::isotropic(
        Lame { lambda: 0.2, mu: 0.1 },
        Lame { lambda: 1.0, mu: 0.6 },
        Microstructure::centered_laminate(0.5),
    );
    let b = iso_laminate();
    let t: Vec<Tensor4> = ElectrostrictionVariant::ALL
        .iter()
        .map(|v| assemble_c_hom(&b, &c, [&s1, &s2], *v, &opts()).unwrap())
        .collect();
    assert!(t[0].max_abs_diff(&t[1]) > 1e-3);
    assert!(t[1].max_abs_diff(&t[2]) > 1e-6);
}

#[test]
fn effective_law_bundle() {
    let spec = OperatorSpec::power_law(2.0, 1.0, 4.0, Microstructure::centered_laminate(0.5));
    let b = iso_laminate();
    let c = ElasticTensorField::constant(Tensor4::isotropic(0.5, 0.5));
    let law = EffectiveLaw::assemble(&spec, &b, &c, grid(8), ElectrostrictionVariant::default(), &opts()).unwrap();
    assert!(rel(law.a_hom([1.0, 0.0]).unwrap()[0], 1.6) < 1e-10);
    assert!(law.b_hom().major_asymmetry() < 1e-10);
    let m = unit_flux_mean(&law.unit[0]);
    assert!((m[0] - 1.0).abs() < 1e-12 && m[1].abs() < 1e-12);
}
