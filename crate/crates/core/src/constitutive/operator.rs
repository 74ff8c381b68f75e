use serde::{Deserialize, Serialize};

use super::microstructure::{wrap_to_cell, Microstructure, Phase};
use crate::error::{HkError, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Default regularization used inside `|xi|` when the exponent is below 2.
pub const DEFAULT_DELTA: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `a(y, xi) = b(y) xi` with a symmetric positive definite `b` per phase.
    LinearMatrix,
    /// `a(y, xi) = sigma(y) (delta^2 + |xi|^2)^((p-2)/2) xi`.
    PowerLaw,
    /// Power law whose exponent is `p_1` in the inclusion and `p_2 >= p_1`
    /// in the matrix.
    VariableExponent,
}

/// Coefficients of one phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLaw {
    pub sigma: f64,
    pub exponent: f64,
    pub matrix: Mat2,
}

impl PhaseLaw {
    pub fn power(sigma: f64, exponent: f64) -> Self {
        Self {
            sigma,
            exponent,
            matrix: [[sigma, 0.0], [0.0, sigma]],
        }
    }

    pub fn linear(matrix: Mat2) -> Self {
        Self {
            sigma: 0.5 * (matrix[0][0] + matrix[1][1]),
            exponent: 2.0,
            matrix,
        }
    }
}

/// Declared structure constants of the growth, continuity and monotonicity
/// conditions. They are audited by sampling, never derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    /// Monotonicity constant `lambda_o`.
    pub lambda_o: f64,
    /// Continuity constant `Lambda_o`.
    pub big_lambda_o: f64,
    /// Bound on `|a(y, 0)|`.
    pub big_lambda_star: f64,
}

impl Default for StructureConstants {
    fn default() -> Self {
        Self {
            lambda_o: 1.0,
            big_lambda_o: 1.0,
            big_lambda_star: 1.0,
        }
    }
}

/// A periodic constitutive law `a(y, xi)` on the unit cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub family: Family,
    /// Growth exponent (for the variable-exponent family, the smaller one).
    pub p: f64,
    /// Hölder exponent of the continuity condition.
    pub alpha: f64,
    pub constants: StructureConstants,
    pub delta: f64,
    pub matrix: PhaseLaw,
    pub inclusion: PhaseLaw,
    pub geometry: Microstructure,
}

impl OperatorSpec {
    pub fn linear(matrix: Mat2, inclusion: Mat2, geometry: Microstructure) -> Self {
        Self {
            family: Family::LinearMatrix,
            p: 2.0,
            alpha: 1.0,
            constants: StructureConstants::default(),
            delta: 0.0,
            matrix: PhaseLaw::linear(matrix),
            inclusion: PhaseLaw::linear(inclusion),
            geometry,
        }
    }

    /// `sigma |xi|^(p-2) xi` with a phase-wise conductivity.
    pub fn power_law(p: f64, sigma_matrix: f64, sigma_inclusion: f64, geometry: Microstructure) -> Self {
        Self {
            family: Family::PowerLaw,
            p,
            alpha: 1.0f64.min(p - 1.0),
            constants: StructureConstants::default(),
            delta: if p < 2.0 { DEFAULT_DELTA } else { 0.0 },
            matrix: PhaseLaw::power(sigma_matrix, p),
            inclusion: PhaseLaw::power(sigma_inclusion, p),
            geometry,
        }
    }

    /// Exponent `p_1` and conductivity `sigma_1` in the inclusion, `p_2`,
    /// `sigma_2` in the matrix.
    pub fn variable_exponent(
        p1: f64,
        p2: f64,
        sigma1: f64,
        sigma2: f64,
        geometry: Microstructure,
    ) -> Self {
        Self {
            family: Family::VariableExponent,
            p: p1,
            alpha: 1.0,
            constants: StructureConstants::default(),
            delta: 0.0,
            matrix: PhaseLaw::power(sigma2, p2),
            inclusion: PhaseLaw::power(sigma1, p1),
            geometry,
        }
    }

    pub fn with_constants(mut self, constants: StructureConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HkError::InvalidSpec(m));
        if !(self.p > 1.0) {
            return fail(format!("p must exceed 1, got {}", self.p));
        }
        let amax = 1.0f64.min(self.p - 1.0);
        if !(self.alpha >= 0.0 && self.alpha <= amax + 1e-15) {
            return fail(format!("alpha must lie in [0, {amax}], got {}", self.alpha));
        }
        let c = self.constants;
        if !(c.lambda_o > 0.0 && c.big_lambda_o > 0.0 && c.big_lambda_star > 0.0) {
            return fail("structure constants must be positive".into());
        }
        if !(self.delta >= 0.0) {
            return fail("delta must be non-negative".into());
        }
        self.geometry.validate().map_err(HkError::InvalidSpec)?;
        for (name, law) in [("matrix", &self.matrix), ("inclusion", &self.inclusion)] {
            match self.family {
                Family::LinearMatrix => {
                    let b = law.matrix;
                    if (b[0][1] - b[1][0]).abs() > 1e-14 * (b[0][1].abs() + 1.0) {
                        return fail(format!("{name} matrix must be symmetric"));
                    }
                    if !(b[0][0] > 0.0 && b[0][0] * b[1][1] - b[0][1] * b[1][0] > 0.0) {
                        return fail(format!("{name} matrix must be positive definite"));
                    }
                }
                Family::PowerLaw | Family::VariableExponent => {
                    if !(law.sigma > 0.0) {
                        return fail(format!("{name} sigma must be positive"));
                    }
                    if law.exponent < 2.0 && self.delta == 0.0 {
                        return fail(format!("{name} exponent below 2 needs delta > 0"));
                    }
                }
            }
        }
        match self.family {
            Family::PowerLaw => {
                if self.matrix.exponent != self.p || self.inclusion.exponent != self.p {
                    return fail("power-law phases must share the exponent p".into());
                }
            }
            Family::VariableExponent => {
                let (p1, p2) = (self.inclusion.exponent, self.matrix.exponent);
                if !(2.0 <= p1 && p1 <= p2) {
                    return fail(format!("variable exponent needs 2 <= p1 <= p2, got {p1}, {p2}"));
                }
                if self.p != p1 {
                    return fail("p must equal the inclusion exponent p1".into());
                }
            }
            Family::LinearMatrix => {
                if self.p != 2.0 {
                    return fail("the linear family has p = 2".into());
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn law(&self, phase: Phase) -> &PhaseLaw {
        match phase {
            Phase::Matrix => &self.matrix,
            Phase::Inclusion => &self.inclusion,
        }
    }

    /// True when `xi -> a(y, xi)` is linear for every `y`.
    pub fn is_linear(&self) -> bool {
        match self.family {
            Family::LinearMatrix => true,
            Family::PowerLaw | Family::VariableExponent => {
                self.matrix.exponent == 2.0 && self.inclusion.exponent == 2.0
            }
        }
    }

    /// True when the coefficients do not depend on `y`.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self.geometry, Microstructure::Homogeneous) || self.matrix == self.inclusion
    }

    /// Scalar factor `c` with `a = c xi` for the power families.
    #[inline]
    fn power_factor(&self, law: &PhaseLaw, norm2: f64) -> f64 {
        if law.exponent == 2.0 {
            law.sigma
        } else {
            let s = self.delta * self.delta + norm2;
            law.sigma * s.powf(0.5 * (law.exponent - 2.0))
        }
    }

    #[inline]
    pub fn flux(&self, phase: Phase, xi: Vec2) -> Vec2 {
        let law = self.law(phase);
        match self.family {
            Family::LinearMatrix => {
                let b = law.matrix;
                [
                    b[0][0] * xi[0] + b[0][1] * xi[1],
                    b[1][0] * xi[0] + b[1][1] * xi[1],
                ]
            }
            Family::PowerLaw | Family::VariableExponent => {
                let c = self.power_factor(law, xi[0] * xi[0] + xi[1] * xi[1]);
                [c * xi[0], c * xi[1]]
            }
        }
    }

    /// Jacobian `d a / d xi`, symmetric for every built-in family.
    #[inline]
    pub fn tangent(&self, phase: Phase, xi: Vec2) -> Mat2 {
        let law = self.law(phase);
        match self.family {
            Family::LinearMatrix => law.matrix,
            Family::PowerLaw | Family::VariableExponent => {
                let n2 = xi[0] * xi[0] + xi[1] * xi[1];
                let c = self.power_factor(law, n2);
                let s = self.delta * self.delta + n2;
                if law.exponent == 2.0 || s == 0.0 {
                    return [[c, 0.0], [0.0, c]];
                }
                let k = c * (law.exponent - 2.0) / s;
                [
                    [c + k * xi[0] * xi[0], k * xi[0] * xi[1]],
                    [k * xi[1] * xi[0], c + k * xi[1] * xi[1]],
                ]
            }
        }
    }

    /// Frozen-coefficient (Kacanov) matrix with `a(y, xi) = S(xi) xi`.
    #[inline]
    pub fn secant(&self, phase: Phase, xi: Vec2) -> Mat2 {
        let law = self.law(phase);
        match self.family {
            Family::LinearMatrix => law.matrix,
            Family::PowerLaw | Family::VariableExponent => {
                let c = self.power_factor(law, xi[0] * xi[0] + xi[1] * xi[1]);
                [[c, 0.0], [0.0, c]]
            }
        }
    }

    /// Secant matrix at unit field strength, used to start from `xi = 0`
    /// where degenerate laws have a vanishing tangent.
    pub fn unit_secant(&self, phase: Phase) -> Mat2 {
        self.secant(phase, [1.0, 0.0])
    }
}

/// `a(y, xi)` at any point `y` (wrapped into the unit cell).
pub fn eval_operator(spec: &OperatorSpec, y: Vec2, xi: Vec2) -> Vec2 {
    spec.flux(spec.geometry.phase(wrap_to_cell(y)), xi)
}
