use serde::{Deserialize, Serialize};

use super::linear::norm;
use super::scalar::ScalarDisc;
use crate::constitutive::{Mat2, OperatorSpec, Phase, Vec2};
use crate::error::{HkError, Result};
use crate::fields::Grid;

/// Relative residual below which roundoff dominates any further progress.
const ROUNDOFF: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance relative to the residual of the zero field.
    pub tol: f64,
    pub max_newton: usize,
    pub max_picard: usize,
    /// Iteration cap of every inner conjugate-gradient solve.
    pub max_linear: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_newton: 50,
            max_picard: 200,
            max_linear: 20_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NonlinearStats {
    pub newton_iterations: usize,
    pub picard_iterations: usize,
    /// Final residual relative to the zero-field residual. When the zero
    /// field is already converged to roundoff, relative to the flux scale.
    pub residual: f64,
    /// Relative residual after every accepted step, starting with the
    /// initial guess.
    pub history: Vec<f64>,
}

/// Flux law evaluated at every quadrature point of a discretization.
pub trait FluxModel {
    /// Fluxes (and optionally tangents) for the field strengths `xi`.
    fn eval(&mut self, xi: &[Vec2], flux: &mut [Vec2], tangent: Option<&mut [Mat2]>) -> Result<()>;

    /// Positive definite frozen-coefficient matrices used for fixed-point
    /// steps when Newton cannot proceed.
    fn secant(&mut self, xi: &[Vec2], out: &mut [Mat2]) -> Result<()>;

    fn is_linear(&self) -> bool {
        false
    }
}

/// A pointwise law `a(y, xi)` with the phase of every quadrature point.
pub struct LocalLaw<'a> {
    pub spec: &'a OperatorSpec,
    pub phases: &'a [Phase],
}

impl FluxModel for LocalLaw<'_> {
    fn eval(&mut self, xi: &[Vec2], flux: &mut [Vec2], tangent: Option<&mut [Mat2]>) -> Result<()> {
        for (k, x) in xi.iter().enumerate() {
            flux[k] = self.spec.flux(self.phases[k], *x);
        }
        if let Some(t) = tangent {
            for (k, x) in xi.iter().enumerate() {
                t[k] = self.spec.tangent(self.phases[k], *x);
            }
        }
        Ok(())
    }

    fn secant(&mut self, xi: &[Vec2], out: &mut [Mat2]) -> Result<()> {
        for (k, x) in xi.iter().enumerate() {
            out[k] = if x[0] == 0.0 && x[1] == 0.0 {
                self.spec.unit_secant(self.phases[k])
            } else {
                self.spec.secant(self.phases[k], *x)
            };
        }
        Ok(())
    }

    fn is_linear(&self) -> bool {
        self.spec.is_linear()
    }
}

struct State {
    xi: Vec<Vec2>,
    r: Vec<f64>,
    rn: f64,
    abs: f64,
}

fn evaluate<G: Grid>(
    disc: &ScalarDisc<G>,
    model: &mut dyn FluxModel,
    background: Vec2,
    load: Option<&[f64]>,
    u: &[f64],
) -> Result<State> {
    let np = disc.points();
    let mut xi = vec![[0.0; 2]; np];
    disc.gradients(u, background, &mut xi);
    let mut flux = vec![[0.0; 2]; np];
    model.eval(&xi, &mut flux, None)?;
    let mut r = vec![0.0; disc.dofs()];
    let abs = disc.residual(&flux, load, &mut r);
    let rn = norm(&r);
    Ok(State {
        xi,
        r,
        rn,
        abs,
    })
}

/// Solve `int a(background + grad u) . grad v = int load v` for all
/// admissible `v` by damped Newton with Armijo backtracking on the residual
/// norm, falling back to frozen-coefficient (Kacanov) steps when the
/// tangent is singular or the line search stalls. `u` holds the initial
/// guess and receives the solution.
pub fn solve_nonlinear<G: Grid>(
    disc: &ScalarDisc<G>,
    model: &mut dyn FluxModel,
    background: Vec2,
    load: Option<&[f64]>,
    u: &mut [f64],
    opts: &SolverOptions,
    solver: &'static str,
) -> Result<NonlinearStats> {
    disc.mesh.project(u, 1);
    let zero = vec![0.0; disc.dofs()];
    let at_zero = evaluate(disc, model, background, load, &zero)?;
    let reference = at_zero.rn;
    let mut stats = NonlinearStats::default();
    if reference <= ROUNDOFF * at_zero.abs {
        // zero solves the problem to roundoff and is the only solution by
        // monotonicity; the reference is noise, so report against the flux scale
        u.iter_mut().for_each(|v| *v = 0.0);
        stats.residual = if reference == 0.0 { 0.0 } else { reference / at_zero.abs };
        stats.history.push(stats.residual);
        return Ok(stats);
    }
    let mut state = if u.iter().all(|v| *v == 0.0) {
        at_zero
    } else {
        evaluate(disc, model, background, load, u)?
    };
    let done = |s: &State| s.rn <= opts.tol * reference || s.rn <= ROUNDOFF * s.abs;
    stats.history.push(state.rn / reference);
    let np = disc.points();
    let mut tangent = vec![[[0.0; 2]; 2]; np];
    let mut scratch = vec![[0.0; 2]; np];
    let mut newton_left = opts.max_newton;
    let mut picard_left = opts.max_picard;
    let linear = model.is_linear();
    while !done(&state) {
        let mut step = vec![0.0; disc.dofs()];
        let neg: Vec<f64> = state.r.iter().map(|v| -v).collect();
        let mut accepted = false;
        if newton_left > 0 {
            newton_left -= 1;
            stats.newton_iterations += 1;
            model.eval(&state.xi, &mut scratch, Some(&mut tangent))?;
            let mats = disc.element_matrices(&tangent);
            let floor = 0.1 * opts.tol * reference / state.rn;
            let eta = if linear {
                floor
            } else {
                (state.rn / reference).min(1e-2).max(floor)
            }
            .clamp(1e-14, 1e-2);
            if disc.solve(&mats, &neg, &mut step, eta, opts.max_linear).is_ok() {
                let mut t = 1.0;
                while t >= 1.0 / 1024.0 {
                    let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + t * d).collect();
                    let s = evaluate(disc, model, background, load, &trial)?;
                    if s.rn <= (1.0 - 1e-4 * t) * state.rn || done(&s) {
                        u.copy_from_slice(&trial);
                        state = s;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if !accepted {
            if picard_left == 0 {
                return Err(HkError::NonConvergence {
                    solver,
                    iterations: stats.newton_iterations + stats.picard_iterations,
                    residual: state.rn / reference,
                });
            }
            picard_left -= 1;
            stats.picard_iterations += 1;
            model.secant(&state.xi, &mut tangent)?;
            let mats = disc.element_matrices(&tangent);
            step.iter_mut().for_each(|v| *v = 0.0);
            disc.solve(&mats, &neg, &mut step, 1e-12, opts.max_linear)?;
            for (a, d) in u.iter_mut().zip(&step) {
                *a += d;
            }
            state = evaluate(disc, model, background, load, u)?;
        }
        stats.history.push(state.rn / reference);
    }
    disc.mesh.project(u, 1);
    stats.residual = state.rn / reference;
    Ok(stats)
}
