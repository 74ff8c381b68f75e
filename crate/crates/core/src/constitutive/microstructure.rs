use serde::{Deserialize, Serialize};

/// Material phase at a point of the unit cell: the matrix `Y_f` or the
/// inclusion `Y_s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Phase {
    Matrix = 0,
    Inclusion = 1,
}

impl Phase {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Two-phase periodic geometry on `Y = [-1/2, 1/2]^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Microstructure {
    Homogeneous,
    /// Layers normal to `e^1`: the inclusion is the band
    /// `offset <= y1 < offset + fraction` (mod 1).
    Laminate { fraction: f64, offset: f64 },
    /// Centered square inclusion of the given side length.
    SquareInclusion { side: f64 },
    /// Centered disc inclusion, resolved only through quadrature points.
    Disc { radius: f64 },
    /// Inclusion in the quadrants where `y1 * y2 > 0`.
    Checkerboard,
}

/// Map any point into `Y` by subtracting its nearest lattice vector.
#[inline]
pub fn wrap_to_cell(y: [f64; 2]) -> [f64; 2] {
    [y[0] - y[0].round(), y[1] - y[1].round()]
}

impl Microstructure {
    /// Laminate with the inclusion band centred at `y1 = 0`.
    pub fn centered_laminate(fraction: f64) -> Self {
        Microstructure::Laminate {
            fraction,
            offset: -0.5 * fraction,
        }
    }

    pub fn is_inclusion(&self, y: [f64; 2]) -> bool {
        let y = wrap_to_cell(y);
        match *self {
            Microstructure::Homogeneous => false,
            Microstructure::Laminate { fraction, offset } => {
                (y[0] - offset).rem_euclid(1.0) < fraction
            }
            Microstructure::SquareInclusion { side } => {
                y[0].abs() < 0.5 * side && y[1].abs() < 0.5 * side
            }
            Microstructure::Disc { radius } => y[0] * y[0] + y[1] * y[1] < radius * radius,
            Microstructure::Checkerboard => y[0] * y[1] > 0.0,
        }
    }

    pub fn phase(&self, y: [f64; 2]) -> Phase {
        if self.is_inclusion(y) {
            Phase::Inclusion
        } else {
            Phase::Matrix
        }
    }

    /// Nominal volume fraction of the inclusion.
    pub fn inclusion_fraction(&self) -> f64 {
        match *self {
            Microstructure::Homogeneous => 0.0,
            Microstructure::Laminate { fraction, .. } => fraction,
            Microstructure::SquareInclusion { side } => side * side,
            Microstructure::Disc { radius } => std::f64::consts::PI * radius * radius,
            Microstructure::Checkerboard => 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(format!("{name} must lie in (0, 1), got {v}"))
            }
        };
        match *self {
            Microstructure::Laminate { fraction, offset } => {
                unit("laminate fraction", fraction)?;
                if !offset.is_finite() {
                    return Err("laminate offset must be finite".into());
                }
                Ok(())
            }
            Microstructure::SquareInclusion { side } => unit("inclusion side", side),
            Microstructure::Disc { radius } => {
                if radius > 0.0 && radius < 0.5 {
                    Ok(())
                } else {
                    Err(format!("disc radius must lie in (0, 1/2), got {radius}"))
                }
            }
            Microstructure::Homogeneous | Microstructure::Checkerboard => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laminate_band() {
        let m = Microstructure::Laminate {
            fraction: 0.5,
            offset: 0.0,
        };
        assert_eq!(m.phase([0.1, 0.3]), Phase::Inclusion);
        assert_eq!(m.phase([-0.1, 0.3]), Phase::Matrix);
        assert_eq!(m.phase([1.1, -7.3]), Phase::Inclusion);
        let c = Microstructure::centered_laminate(0.5);
        assert_eq!(c.phase([0.2, 0.0]), Phase::Inclusion);
        assert_eq!(c.phase([0.3, 0.0]), Phase::Matrix);
        assert_eq!(c.phase([-0.3, 0.0]), Phase::Matrix);
    }

    #[test]
    fn checkerboard_rotation_is_a_translation() {
        let m = Microstructure::Checkerboard;
        for &(a, b) in &[(0.1, 0.2), (-0.3, 0.05), (0.45, -0.2)] {
            let rotated = m.is_inclusion([-b, a]);
            let shifted = m.is_inclusion([a + 0.5, b]);
            assert_eq!(rotated, !m.is_inclusion([a, b]));
            assert_eq!(shifted, rotated);
        }
    }

    #[test]
    fn validation() {
        assert!(Microstructure::SquareInclusion { side: 1.2 }.validate().is_err());
        assert!(Microstructure::Disc { radius: 0.3 }.validate().is_ok());
    }
}
