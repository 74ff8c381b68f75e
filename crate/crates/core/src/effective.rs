//! Effective coefficients: the conductivity `a_hom`, evaluated on demand
//! from cell solves, and the constant tensors `B_hom`, `C_hom`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::{
    assemble_zeta, corrector_flux, quad_to_mats, solve_chi, ElasticCellSolver,
    ElectrostrictionVariant, ScalarCellSolution, ScalarCellSolver,
};
use crate::constitutive::{
    continuity_ratio, monotonicity_ratio, sample_xi, unit_strain, ElasticTensorField, Mat2, Mat4,
    OperatorSpec, Phase, Tensor4, Vec2,
};
use crate::error::{HkError, Result};
use crate::fem::SolverOptions;
use crate::fields::CellGrid;

/// Index pairs `(i, j)` with `i <= j`; `(1, 0)` shares the solution of `(0, 1)`.
pub const PAIRS: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 1)];

pub(crate) fn pair_slot(i: usize, j: usize) -> usize {
    i + j
}

/// Upper bound on the number of stored corrector values.
const CACHE_BUDGET: usize = 1 << 24;

/// One solved cell problem as stored by [`Conductivity`].
#[derive(Clone, Debug, PartialEq)]
pub struct CellEntry {
    pub xi: Vec2,
    /// `a_hom(xi)`.
    pub flux: Vec2,
    /// Nodal corrector `eta_xi` on the cell grid.
    pub eta: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Mode {
    /// No `y` dependence: `a_hom = a` and `eta = 0`.
    Homogeneous,
    /// Linear law: `eta_xi = xi_k omega^k` and `a_hom(xi) = b_hom xi`.
    Linear { b_hom: Mat2, omega: [Vec<f64>; 2] },
    Nonlinear,
}

/// The effective conductivity `xi -> a_hom(xi)` backed by cell solves, with
/// a cache keyed by `xi` rounded to 12 significant digits.
///
/// Reads may run concurrently; inserts happen on the calling thread in
/// input order, so results do not depend on the thread count.
#[derive(Debug)]
pub struct Conductivity {
    solver: ScalarCellSolver,
    mode: Mode,
    cache: RwLock<HashMap<[u64; 2], Arc<CellEntry>>>,
    solves: AtomicUsize,
    hits: AtomicUsize,
}

fn cache_key(xi: Vec2) -> [u64; 2] {
    let round = |v: f64| {
        if v == 0.0 {
            return 0u64;
        }
        let s = format!("{v:.11e}");
        s.parse::<f64>().map(f64::to_bits).unwrap_or(v.to_bits())
    };
    [round(xi[0]), round(xi[1])]
}

impl Conductivity {
    pub fn new(spec: &OperatorSpec, grid: CellGrid, opts: SolverOptions) -> Result<Self> {
        let solver = ScalarCellSolver::new(spec, grid, opts)?;
        let mode = if spec.is_homogeneous() {
            Mode::Homogeneous
        } else if spec.is_linear() {
            let s1 = solver.solve([1.0, 0.0])?;
            let s2 = solver.solve([0.0, 1.0])?;
            let c1 = solver.average_flux(s1.xi, s1.eta.values());
            let c2 = solver.average_flux(s2.xi, s2.eta.values());
            Mode::Linear {
                b_hom: [[c1[0], c2[0]], [c1[1], c2[1]]],
                omega: [s1.eta.into_values(), s2.eta.into_values()],
            }
        } else {
            Mode::Nonlinear
        };
        Ok(Self {
            solver,
            mode,
            cache: RwLock::new(HashMap::new()),
            solves: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    pub fn spec(&self) -> &OperatorSpec {
        self.solver.spec()
    }

    pub fn grid(&self) -> CellGrid {
        self.solver.grid()
    }

    pub fn solver(&self) -> &ScalarCellSolver {
        &self.solver
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.mode, Mode::Nonlinear) && self.spec().is_linear()
    }

    /// The constant matrix `b_hom` when the law is linear.
    pub fn linear_matrix(&self) -> Option<Mat2> {
        match &self.mode {
            Mode::Linear { b_hom, .. } => Some(*b_hom),
            Mode::Homogeneous if self.spec().is_linear() => {
                Some(self.spec().tangent(Phase::Matrix, [0.0, 0.0]))
            }
            _ => None,
        }
    }

    /// Number of nonlinear cell solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn hit_count(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn eval(&self, xi: Vec2) -> Result<Vec2> {
        Ok(self.entry(xi)?.flux)
    }

    pub fn entry(&self, xi: Vec2) -> Result<Arc<CellEntry>> {
        Ok(self.entries(&[xi], None)?.pop().unwrap())
    }

    fn direct(&self, xi: Vec2) -> Option<CellEntry> {
        match &self.mode {
            Mode::Homogeneous => Some(CellEntry {
                xi,
                flux: self.spec().flux(Phase::Matrix, xi),
                eta: vec![0.0; self.solver.dofs()],
            }),
            Mode::Linear { b_hom, omega } => Some(CellEntry {
                xi,
                flux: [
                    b_hom[0][0] * xi[0] + b_hom[0][1] * xi[1],
                    b_hom[1][0] * xi[0] + b_hom[1][1] * xi[1],
                ],
                eta: omega[0].iter().zip(&omega[1]).map(|(a, b)| xi[0] * a + xi[1] * b).collect(),
            }),
            Mode::Nonlinear => None,
        }
    }

    /// Cell solutions for a batch of loadings, solved in parallel. `warm`
    /// supplies optional initial guesses per loading.
    pub fn entries(&self, xis: &[Vec2], warm: Option<&[Option<Arc<CellEntry>>]>) -> Result<Vec<Arc<CellEntry>>> {
        if !matches!(self.mode, Mode::Nonlinear) {
            return xis
                .par_iter()
                .map(|&xi| {
                    if !(xi[0].is_finite() && xi[1].is_finite()) {
                        return Err(HkError::InvalidSpec(format!("non-finite loading {xi:?}")));
                    }
                    Ok(Arc::new(self.direct(xi).unwrap()))
                })
                .collect();
        }
        let keys: Vec<[u64; 2]> = xis.iter().map(|&x| cache_key(x)).collect();
        let mut out: Vec<Option<Arc<CellEntry>>> = vec![None; xis.len()];
        // unique misses in input order
        let mut misses: Vec<usize> = Vec::new();
        let mut first: HashMap<[u64; 2], usize> = HashMap::new();
        {
            let cache = self.cache.read().unwrap();
            for (k, key) in keys.iter().enumerate() {
                if let Some(e) = cache.get(key) {
                    out[k] = Some(e.clone());
                } else if !first.contains_key(key) {
                    first.insert(*key, k);
                    misses.push(k);
                }
            }
        }
        self.hits.fetch_add(xis.len() - misses.len(), Ordering::Relaxed);
        let solved: Vec<Result<CellEntry>> = misses
            .par_iter()
            .map(|&k| {
                let xi = xis[k];
                let guess = warm.and_then(|w| w[k].as_ref()).map(|e| e.eta.as_slice());
                let s = self.solver.solve_from(xi, guess)?;
                let flux = self.solver.average_flux(xi, s.eta.values());
                Ok(CellEntry {
                    xi,
                    flux,
                    eta: s.eta.into_values(),
                })
            })
            .collect();
        self.solves.fetch_add(misses.len(), Ordering::Relaxed);
        let mut fresh: HashMap<[u64; 2], Arc<CellEntry>> = HashMap::new();
        {
            let mut cache = self.cache.write().unwrap();
            let per_entry = self.solver.dofs() + 4;
            for (&k, r) in misses.iter().zip(solved) {
                let e = Arc::new(r?);
                if (cache.len() + 1) * per_entry > CACHE_BUDGET {
                    cache.clear();
                }
                let e = cache.entry(keys[k]).or_insert(e).clone();
                fresh.insert(keys[k], e);
            }
        }
        Ok(out
            .into_iter()
            .zip(&keys)
            .map(|(o, key)| o.unwrap_or_else(|| fresh[key].clone()))
            .collect())
    }

    /// Jacobian of `a_hom`: exact for homogeneous and linear laws, central
    /// differences with step `1e-6 (1 + |xi|)` otherwise (symmetrized).
    pub fn jacobians(&self, base: &[Arc<CellEntry>]) -> Result<Vec<Mat2>> {
        match &self.mode {
            Mode::Homogeneous => Ok(base.iter().map(|e| self.spec().tangent(Phase::Matrix, e.xi)).collect()),
            Mode::Linear { b_hom, .. } => Ok(vec![*b_hom; base.len()]),
            Mode::Nonlinear => {
                let mut xis = Vec::with_capacity(4 * base.len());
                let mut warm = Vec::with_capacity(4 * base.len());
                let mut steps = Vec::with_capacity(base.len());
                for e in base {
                    let x = e.xi;
                    let h = 1e-6 * (1.0 + (x[0] * x[0] + x[1] * x[1]).sqrt());
                    steps.push(h);
                    xis.extend([[x[0] + h, x[1]], [x[0] - h, x[1]], [x[0], x[1] + h], [x[0], x[1] - h]]);
                    warm.extend(std::iter::repeat(Some(e.clone())).take(4));
                }
                let f = self.entries(&xis, Some(&warm))?;
                Ok(steps
                    .iter()
                    .enumerate()
                    .map(|(k, &h)| {
                        let d = |a: usize, b: usize, c: usize| (f[4 * k + a].flux[c] - f[4 * k + b].flux[c]) / (2.0 * h);
                        let j01 = 0.5 * (d(2, 3, 0) + d(0, 1, 1));
                        [[d(0, 1, 0), j01], [j01, d(2, 3, 1)]]
                    })
                    .collect())
            }
        }
    }
}

/// `a_hom(xi)` by a fresh cell solve on `grid`.
pub fn eval_a_hom(spec: &OperatorSpec, xi: Vec2, grid: CellGrid, opts: &SolverOptions) -> Result<Vec2> {
    let solver = ScalarCellSolver::new(spec, grid, *opts)?;
    let s = solver.solve(xi)?;
    Ok(solver.average_flux(xi, s.eta.values()))
}

/// `b_hom_jk = int b (e^k + grad omega^k) . (e^j + grad omega^j)` for a
/// linear law, with `omega^k = eta_{e^k}`.
pub fn linear_case_b_hom(spec: &OperatorSpec, grid: CellGrid, opts: &SolverOptions) -> Result<Mat2> {
    if !spec.is_linear() {
        return Err(HkError::InvalidSpec("b_hom needs a linear law".into()));
    }
    let solver = ScalarCellSolver::new(spec, grid, *opts)?;
    let p: Vec<Vec<Vec2>> = [[1.0, 0.0], [0.0, 1.0]]
        .iter()
        .map(|&e| {
            let s = solver.solve(e)?;
            Ok(solver.corrector_gradients(e, s.eta.values()))
        })
        .collect::<Result<_>>()?;
    let w = 1.0 / p[0].len() as f64;
    let mut b = [[0.0; 2]; 2];
    for (j, row) in b.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (q, ph) in solver.phases().iter().enumerate() {
                let f = spec.flux(*ph, p[k][q]);
                acc += f[0] * p[j][q][0] + f[1] * p[j][q][1];
            }
            *v = acc * w;
        }
    }
    Ok(b)
}

/// Sampled monotonicity and continuity of `a_hom`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AHomReport {
    pub pairs: usize,
    pub seed: u64,
    /// `alpha / (2 - alpha)`.
    pub theta: f64,
    pub min_monotonicity: f64,
    pub max_monotonicity: f64,
    pub max_continuity: f64,
    /// Set when some monotonicity ratio is not positive.
    pub violation: bool,
}

/// Sample `m` pairs and report the monotonicity ratio with weight
/// `(1 + |x1|^2 + |x2|^2)^((p-2)/2)` and the continuity ratio with
/// exponent `theta = alpha / (2 - alpha)`.
pub fn check_a_hom_properties(law: &Conductivity, m: usize, seed: u64) -> Result<AHomReport> {
    if m < 20 {
        return Err(HkError::InvalidSpec(format!("property check needs at least 20 pairs, got {m}")));
    }
    let spec = law.spec();
    let theta = spec.alpha / (2.0 - spec.alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(2 * m);
    for _ in 0..m {
        xs.push(sample_xi(&mut rng));
        xs.push(sample_xi(&mut rng));
    }
    let a = law.entries(&xs, None)?;
    let mut rep = AHomReport {
        pairs: m,
        seed,
        theta,
        min_monotonicity: f64::INFINITY,
        max_monotonicity: 0.0,
        max_continuity: 0.0,
        violation: false,
    };
    for k in 0..m {
        let (x1, x2) = (xs[2 * k], xs[2 * k + 1]);
        if x1 == x2 {
            continue;
        }
        let (a1, a2) = (a[2 * k].flux, a[2 * k + 1].flux);
        let r = monotonicity_ratio(spec.p, x1, x2, a1, a2);
        rep.min_monotonicity = rep.min_monotonicity.min(r);
        rep.max_monotonicity = rep.max_monotonicity.max(r);
        let c = continuity_ratio(spec.p - 1.0, theta, x1, x2, a1, a2);
        rep.max_continuity = rep.max_continuity.max(c);
    }
    rep.violation = !(rep.min_monotonicity > 0.0);
    Ok(rep)
}

/// Cell correctors `Upsilon^ij` on one grid, indexed by [`PAIRS`].
#[derive(Clone, Debug)]
pub struct ElasticCorrectors {
    pub grid: CellGrid,
    pub upsilon: [Vec<f64>; 3],
    pub b_hom: Tensor4,
}

/// Solve the three `Upsilon^ij` problems and form
/// `B_hom_ijmn = int B D(U^ij - Upsilon^ij) : D(U^mn - Upsilon^mn)`.
pub fn elastic_correctors(b: &ElasticTensorField, grid: CellGrid, opts: &SolverOptions) -> Result<ElasticCorrectors> {
    b.validate_stiffness()?;
    let solver = ElasticCellSolver::new(b, grid, *opts);
    let ups: Vec<Vec<f64>> = PAIRS
        .par_iter()
        .map(|&(i, j)| solver.solve_upsilon(i, j).map(|s| s.field.into_values()))
        .collect::<Result<_>>()?;
    let strains: Vec<Vec<Mat4>> = PAIRS
        .iter()
        .zip(&ups)
        .map(|(&(i, j), u)| {
            let e = unit_strain(i, j);
            solver
                .strain(u)
                .iter()
                .map(|d| [e[0] - d[0], e[1] - d[1], e[2] - d[2], e[3] - d[3]])
                .collect()
        })
        .collect();
    let w = 1.0 / strains[0].len() as f64;
    let mut t = Tensor4::zero();
    for i in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let (s1, s2) = (&strains[pair_slot(i, j)], &strains[pair_slot(m, n)]);
                    let mut acc = 0.0;
                    for (q, ph) in solver.phases.iter().enumerate() {
                        let st = b.tensor(*ph).apply(&s1[q]);
                        acc += st[0] * s2[q][0] + st[1] * s2[q][1] + st[2] * s2[q][2] + st[3] * s2[q][3];
                    }
                    t.0[crate::constitutive::idx4(i, j, m, n)] = acc * w;
                }
            }
        }
    }
    Ok(ElasticCorrectors {
        grid,
        upsilon: ups.try_into().unwrap(),
        b_hom: t,
    })
}

pub fn assemble_b_hom(b: &ElasticTensorField, grid: CellGrid, opts: &SolverOptions) -> Result<Tensor4> {
    Ok(elastic_correctors(b, grid, opts)?.b_hom)
}

/// Electrostriction correctors `chi^ij` and the effective tensor in action
/// form: `c_hom.get(k, l, i, j) = (C_hom_ij)_kl`, so that `c_hom.apply(M)`
/// is `sum_ij M_ij C_hom_ij`.
#[derive(Clone, Debug)]
pub struct ElectrostrictionCorrectors {
    pub variant: ElectrostrictionVariant,
    pub chi: [Vec<f64>; 3],
    pub c_hom: Tensor4,
}

/// Solve `chi^ij` for the scalar cell solutions at `e^1`, `e^2` and average
/// the variant's flux to get `C_hom_ij`.
pub fn electrostriction_correctors(
    b: &ElasticTensorField,
    c: &ElasticTensorField,
    unit: [&ScalarCellSolution; 2],
    variant: ElectrostrictionVariant,
    opts: &SolverOptions,
) -> Result<ElectrostrictionCorrectors> {
    let grid = unit[0].eta.grid();
    let stiff = match variant {
        ElectrostrictionVariant::TwoScale => b,
        _ => c,
    };
    stiff.validate_stiffness()?;
    let solver = ElasticCellSolver::new(stiff, grid, *opts);
    let zeta: Vec<Vec<Vec<Mat4>>> = (0..2)
        .map(|i| (0..2).map(|j| quad_to_mats(&assemble_zeta(unit[i], unit[j]))).collect())
        .collect();
    let chi: Vec<Vec<f64>> = PAIRS
        .par_iter()
        .map(|&(i, j)| solve_chi(&solver, c, &zeta[i][j], variant, i, j).map(|s| s.field.into_values()))
        .collect::<Result<_>>()?;
    let cz_phases = crate::fem::cell_phases(&c.geometry, grid);
    let mut t = Tensor4::zero();
    for i in 0..2 {
        for j in 0..2 {
            let d = solver.strain(&chi[pair_slot(i, j)]);
            let z = &zeta[i][j];
            let mut acc = [0.0; 4];
            for q in 0..d.len() {
                let s = stiff.tensor(solver.phases[q]).apply(&d[q]);
                let f = match variant {
                    ElectrostrictionVariant::AsWritten => {
                        [s[0] + z[q][0], s[1] + z[q][1], s[2] + z[q][2], s[3] + z[q][3]]
                    }
                    ElectrostrictionVariant::CApplied => {
                        let sum = [d[q][0] + z[q][0], d[q][1] + z[q][1], d[q][2] + z[q][2], d[q][3] + z[q][3]];
                        c.tensor(cz_phases[q]).apply(&sum)
                    }
                    ElectrostrictionVariant::TwoScale => {
                        let cz = c.tensor(cz_phases[q]).apply(&z[q]);
                        [s[0] + cz[0], s[1] + cz[1], s[2] + cz[2], s[3] + cz[3]]
                    }
                };
                for r in 0..4 {
                    acc[r] += f[r];
                }
            }
            let w = 1.0 / d.len() as f64;
            for k in 0..2 {
                for l in 0..2 {
                    t.0[crate::constitutive::idx4(k, l, i, j)] = acc[2 * k + l] * w;
                }
            }
        }
    }
    Ok(ElectrostrictionCorrectors {
        variant,
        chi: chi.try_into().unwrap(),
        c_hom: t,
    })
}

/// `C_hom` in action form (see [`ElectrostrictionCorrectors`]).
pub fn assemble_c_hom(
    b: &ElasticTensorField,
    c: &ElasticTensorField,
    unit: [&ScalarCellSolution; 2],
    variant: ElectrostrictionVariant,
    opts: &SolverOptions,
) -> Result<Tensor4> {
    Ok(electrostriction_correctors(b, c, unit, variant, opts)?.c_hom)
}

/// Everything the homogenized solvers need.
#[derive(Debug)]
pub struct EffectiveLaw {
    pub conductivity: Conductivity,
    pub elastic: ElasticCorrectors,
    pub electrostriction: ElectrostrictionCorrectors,
    pub unit: [ScalarCellSolution; 2],
}

impl EffectiveLaw {
    pub fn assemble(
        spec: &OperatorSpec,
        b: &ElasticTensorField,
        c: &ElasticTensorField,
        grid: CellGrid,
        variant: ElectrostrictionVariant,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let conductivity = Conductivity::new(spec, grid, *opts)?;
        let s1 = conductivity.solver().solve([1.0, 0.0])?;
        let s2 = conductivity.solver().solve([0.0, 1.0])?;
        let elastic = elastic_correctors(b, grid, opts)?;
        let electrostriction = electrostriction_correctors(b, c, [&s1, &s2], variant, opts)?;
        Ok(Self {
            conductivity,
            elastic,
            electrostriction,
            unit: [s1, s2],
        })
    }

    pub fn a_hom(&self, xi: Vec2) -> Result<Vec2> {
        self.conductivity.eval(xi)
    }

    pub fn b_hom(&self) -> &Tensor4 {
        &self.elastic.b_hom
    }

    pub fn c_hom(&self) -> &Tensor4 {
        &self.electrostriction.c_hom
    }
}

/// Mean of `p(y, e^i)` over the cell, which must equal `e^i`.
pub fn unit_flux_mean(sol: &ScalarCellSolution) -> Vec2 {
    let m = corrector_flux(sol).integral();
    [m[0], m[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::Microstructure;

    #[test]
    fn cache_key_rounds() {
        assert_eq!(cache_key([1.0, 0.5]), cache_key([1.0 + 1e-15, 0.5]));
        assert_ne!(cache_key([1.0, 0.5]), cache_key([1.0 + 1e-9, 0.5]));
        assert_eq!(cache_key([0.0, -0.0]), [0, 0]);
    }

    #[test]
    fn batch_results_and_cache() {
        let spec = OperatorSpec::power_law(3.0, 1.0, 4.0, Microstructure::SquareInclusion { side: 0.5 });
        let law = Conductivity::new(&spec, CellGrid::new(4).unwrap(), SolverOptions::default()).unwrap();
        let xs = [[1.0, 0.0], [0.3, 0.2], [1.0, 0.0]];
        let a = law.entries(&xs, None).unwrap();
        assert_eq!(law.solve_count(), 2);
        assert!(Arc::ptr_eq(&a[0], &a[2]));
        let b = law.entry([0.3, 0.2]).unwrap();
        assert!(Arc::ptr_eq(&a[1], &b));
        assert_eq!(law.solve_count(), 2);
    }
}
