//! Sampling audits of the declared structure constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::elastic::{frobenius, ElasticTensorField, Mat4};
use super::operator::{eval_operator, OperatorSpec, Vec2};

/// Result of [`check_growth_conditions`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub samples: usize,
    pub seed: u64,
    /// `max |a(y, 0)|`, compared against the declared `Lambda_*`.
    pub max_flux_at_zero: f64,
    /// Largest continuity ratio: empirical lower bound for `Lambda_o`.
    pub empirical_big_lambda_o: f64,
    /// Smallest monotonicity ratio: empirical upper bound for `lambda_o`.
    pub empirical_lambda_o: f64,
    /// Set when a monotonicity ratio is not positive.
    pub violation: bool,
    /// Whether the sampled ratios respect the declared constants.
    pub consistent_with_declared: bool,
}

/// Random field strength whose magnitude is spread over several decades.
pub(crate) fn sample_xi(rng: &mut impl Rng) -> Vec2 {
    let r = 10f64.powf(rng.gen_range(-2.0..1.0));
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = rng.gen_range(0.0..1.0f64).sqrt();
    [r * s * t.cos(), r * s * t.sin()]
}

pub(crate) fn sample_y(rng: &mut impl Rng) -> Vec2 {
    [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]
}

/// Monotonicity ratio
/// `(a1 - a2).(x1 - x2) / [(1 + |x1|^2 + |x2|^2)^((p-2)/2) |x1 - x2|^2]`.
pub fn monotonicity_ratio(p: f64, x1: Vec2, x2: Vec2, a1: Vec2, a2: Vec2) -> f64 {
    let d = [x1[0] - x2[0], x1[1] - x2[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let w = 1.0 + x1[0] * x1[0] + x1[1] * x1[1] + x2[0] * x2[0] + x2[1] * x2[1];
    ((a1[0] - a2[0]) * d[0] + (a1[1] - a2[1]) * d[1]) / (w.powf(0.5 * (p - 2.0)) * dd)
}

/// Continuity ratio
/// `|a1 - a2| / [(1 + |x1|^2 + |x2|^2)^((p-1-alpha)/2) |x1 - x2|^alpha]`.
pub fn continuity_ratio(p: f64, alpha: f64, x1: Vec2, x2: Vec2, a1: Vec2, a2: Vec2) -> f64 {
    let d = ((x1[0] - x2[0]).powi(2) + (x1[1] - x2[1]).powi(2)).sqrt();
    let da = ((a1[0] - a2[0]).powi(2) + (a1[1] - a2[1]).powi(2)).sqrt();
    let w = 1.0 + x1[0] * x1[0] + x1[1] * x1[1] + x2[0] * x2[0] + x2[1] * x2[1];
    da / (w.powf(0.5 * (p - 1.0 - alpha)) * d.powf(alpha))
}

pub fn check_growth_conditions(spec: &OperatorSpec, m: usize, seed: u64) -> GrowthReport {
    assert!(m >= 100, "growth audit needs at least 100 samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max0: f64 = 0.0;
    let mut big: f64 = 0.0;
    let mut small = f64::INFINITY;
    for _ in 0..m {
        let y = sample_y(&mut rng);
        let x1 = sample_xi(&mut rng);
        let x2 = sample_xi(&mut rng);
        let a0 = eval_operator(spec, y, [0.0, 0.0]);
        max0 = max0.max((a0[0] * a0[0] + a0[1] * a0[1]).sqrt());
        if x1 == x2 {
            continue;
        }
        let a1 = eval_operator(spec, y, x1);
        let a2 = eval_operator(spec, y, x2);
        big = big.max(continuity_ratio(spec.p, spec.alpha, x1, x2, a1, a2));
        small = small.min(monotonicity_ratio(spec.p, x1, x2, a1, a2));
    }
    let c = spec.constants;
    let rel = 1e-12;
    GrowthReport {
        samples: m,
        seed,
        max_flux_at_zero: max0,
        empirical_big_lambda_o: big,
        empirical_lambda_o: small,
        violation: !(small > 0.0),
        consistent_with_declared: max0 <= c.big_lambda_star * (1.0 + rel)
            && big <= c.big_lambda_o * (1.0 + rel)
            && small >= c.lambda_o * (1.0 - rel),
    }
}

/// Sampled bounds of an elastic tensor field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticAudit {
    pub samples: usize,
    /// Smallest `T c : c / |c|^2` over sampled symmetric `c`.
    pub ellipticity: f64,
    /// Largest `|T c| / |c|` over sampled matrices.
    pub bound: f64,
    pub major_asymmetry: f64,
    pub minor_asymmetry: f64,
}

pub fn audit_elastic_tensor(t: &ElasticTensorField, m: usize, seed: u64) -> ElasticAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ell = f64::INFINITY;
    let mut bound: f64 = 0.0;
    for _ in 0..m {
        let y = sample_y(&mut rng);
        let tensor = t.tensor(t.geometry.phase(y));
        let o = rng.gen_range(-1.0..1.0);
        let c: Mat4 = [rng.gen_range(-1.0..1.0), o, o, rng.gen_range(-1.0..1.0)];
        let cc = frobenius(&c, &c);
        if cc == 0.0 {
            continue;
        }
        ell = ell.min(tensor.energy(&c) / cc);
        let g: Mat4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let tg = tensor.apply(&g);
        bound = bound.max((frobenius(&tg, &tg) / frobenius(&g, &g)).sqrt());
    }
    ElasticAudit {
        samples: m,
        ellipticity: ell,
        bound,
        major_asymmetry: t.matrix.major_asymmetry().max(t.inclusion.major_asymmetry()),
        minor_asymmetry: t.matrix.minor_asymmetry().max(t.inclusion.minor_asymmetry()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::elastic::Lame;
    use crate::constitutive::microstructure::Microstructure;

    #[test]
    fn identity_law_constants() {
        let s = OperatorSpec::linear(
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0]],
            Microstructure::Homogeneous,
        );
        let r = check_growth_conditions(&s, 200, 1);
        assert!((r.empirical_lambda_o - 1.0).abs() < 1e-12);
        assert!((r.empirical_big_lambda_o - 1.0).abs() < 1e-12);
        assert_eq!(r.max_flux_at_zero, 0.0);
        assert!(!r.violation && r.consistent_with_declared);
    }

    #[test]
    fn p_laplacian_is_monotone() {
        let s = OperatorSpec::power_law(3.0, 1.0, 1.0, Microstructure::Homogeneous);
        for seed in 0..3 {
            let r = check_growth_conditions(&s, 1000, seed);
            assert!(r.empirical_lambda_o > 0.0 && !r.violation);
        }
    }

    #[test]
    fn broken_law_is_flagged() {
        let s = OperatorSpec::linear(
            [[-1.0, 0.0], [0.0, -1.0]],
            [[-1.0, 0.0], [0.0, -1.0]],
            Microstructure::Homogeneous,
        );
        let r = check_growth_conditions(&s, 100, 3);
        assert!(r.violation);
        assert!(!r.consistent_with_declared);
    }

    #[test]
    fn elastic_audit_bounds() {
        let t = ElasticTensorField::isotropic(
            Lame { lambda: 1.0, mu: 1.0 },
            Lame { lambda: 4.0, mu: 3.0 },
            Microstructure::centered_laminate(0.5),
        );
        let a = audit_elastic_tensor(&t, 500, 9);
        assert!(a.ellipticity >= 2.0 * 0.99);
        assert!(a.bound <= 2.0 * (4.0 + 3.0) + 1e-12);
        assert_eq!(a.major_asymmetry, 0.0);
        assert_eq!(a.minor_asymmetry, 0.0);
    }
}
