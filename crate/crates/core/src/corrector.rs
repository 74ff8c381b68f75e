//! Averaging operators on eps-cells, two-scale pairings, and the eps-ladder
//! study of the first-order corrector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cell::ElectrostrictionVariant;
use crate::constitutive::{outer, ElasticTensorField, OperatorSpec, Vec2};
use crate::effective::{Conductivity, EffectiveLaw};
use crate::error::{HkError, Result};
use crate::fem::SolverOptions;
use crate::fields::{
    euclid, gradient, interpolate, prolong, CellGrid, Commensuration, DomainGrid, Epsilon, Grid, NodalField,
    QuadField, ScalarField, VectorField, GAUSS_2X2, QP,
};
use crate::fine::{maxwell_stress, solve_fine_elasticity, solve_fine_electrostatic, ScalarSource, VectorSource};
use crate::homogenized::{
    phi1_gradient, solve_homogenized_elasticity, solve_homogenized_electrostatic_from, two_scale_checks,
};

/// Running mean that reproduces a constant input bit for bit.
struct Mean {
    first: Option<Vec<f64>>,
    dev: Vec<f64>,
    count: usize,
}

impl Mean {
    fn new(len: usize) -> Self {
        Self {
            first: None,
            dev: vec![0.0; len],
            count: 0,
        }
    }

    fn add(&mut self, v: &[f64]) {
        let first = self.first.get_or_insert_with(|| v.to_vec());
        for ((d, x), f) in self.dev.iter_mut().zip(v).zip(first.iter()) {
            *d += x - f;
        }
        self.count += 1;
    }

    fn value(&self) -> Vec<f64> {
        match &self.first {
            None => vec![0.0; self.dev.len()],
            Some(f) => f.iter().zip(&self.dev).map(|(f, d)| f + d / self.count as f64).collect(),
        }
    }
}

fn check_domain(v: &QuadField, map: &Commensuration) -> Result<()> {
    if v.elements_per_side() != map.domain.n() {
        return Err(HkError::Shape(format!(
            "quadrature field on {} elements per side, domain has {}",
            v.elements_per_side(),
            map.domain.n()
        )));
    }
    Ok(())
}

/// `M^eps v`: the mean of `v` over each eps-cell inside Omega, and 0 on the
/// cells cut by the boundary.
pub fn coarse_average_m(v: &QuadField, map: &Commensuration) -> Result<QuadField> {
    check_domain(v, map)?;
    let c = v.components();
    let k = map.cells_per_axis();
    let mut out = QuadField::zeros(v.elements_per_side(), c);
    for j in 0..k {
        for i in 0..k {
            if !map.is_interior_cell(i, j) {
                continue;
            }
            let elems = map.elements_of_cell(i, j);
            let mut m = Mean::new(c);
            for e in &elems {
                for q in 0..QP {
                    m.add(v.point(e * QP + q));
                }
            }
            let m = m.value();
            for e in &elems {
                for q in 0..QP {
                    out.point_mut(e * QP + q).copy_from_slice(&m);
                }
            }
        }
    }
    Ok(out)
}

/// `MM^eps v` for a function of `(x, y)` given by one cell field per
/// macroscopic quadrature point. Returns one cell field per eps-cell
/// (indexed by `Commensuration::eps_cell_flat`), averaged over the part of
/// the cell inside Omega.
pub fn coarse_average_mm(map: &Commensuration, v: impl Fn(usize) -> QuadField) -> Vec<QuadField> {
    let k = map.cells_per_axis();
    let n = map.n();
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            let mut m: Option<(Mean, usize)> = None;
            for e in map.elements_of_cell(i, j) {
                for q in 0..QP {
                    let f = v(e * QP + q);
                    let (acc, _) = m.get_or_insert_with(|| (Mean::new(f.values().len()), f.components()));
                    acc.add(f.values());
                }
            }
            let (acc, c) = m.expect("every eps-cell meets Omega");
            out.push(QuadField::from_values(n, c, acc.value()).expect("cell layout"));
        }
    }
    out
}

/// `v o S^eps`: for each eps-cell `i`, the cell field `y -> v(eps i + eps y)`,
/// with 0 where `eps i + eps y` leaves Omega.
pub fn two_scale_compose_s(v: &QuadField, map: &Commensuration) -> Result<Vec<QuadField>> {
    check_domain(v, map)?;
    let c = v.components();
    let k = map.cells_per_axis();
    let mut out = vec![QuadField::zeros(map.n(), c); k * k];
    for e in 0..map.domain.element_count() {
        let target = &mut out[map.eps_cell_flat(e)];
        let ce = map.cell_element(e);
        for q in 0..QP {
            target.point_mut(ce * QP + q).copy_from_slice(v.point(e * QP + q));
        }
    }
    Ok(out)
}

/// `L^p(Omega x Y)` norm of a field given per eps-cell, each cell weighted
/// by the measure of its part inside Omega.
pub fn two_scale_lp_norm(parts: &[QuadField], map: &Commensuration, p: f64) -> f64 {
    let k = map.cells_per_axis();
    let hf = map.domain.h();
    let mut acc = 0.0;
    for j in 0..k {
        for i in 0..k {
            let measure = map.elements_of_cell(i, j).len() as f64 * hf * hf;
            acc += measure * parts[i + k * j].lp_norm(p).powf(p);
        }
    }
    acc.powf(1.0 / p)
}

/// `y = {x / eps}` for every fine quadrature point, read off the cell grid.
fn fast_coordinates(map: &Commensuration) -> Vec<[f64; 2]> {
    (0..map.domain.element_count() * QP)
        .map(|k| map.cell.quadrature_point(map.cell_element(k / QP), k % QP))
        .collect()
}

/// `int_Omega v(x) psi_x(x) psi_y(x / eps) dx` by quadrature on the domain grid.
pub fn two_scale_pairing(
    v: &ScalarField<DomainGrid>,
    psi_x: impl Fn([f64; 2]) -> f64,
    psi_y: impl Fn([f64; 2]) -> f64,
    eps: Epsilon,
    cell: CellGrid,
) -> Result<f64> {
    let map = Commensuration::new(eps, v.grid(), cell)?;
    let vq = interpolate(v, &GAUSS_2X2);
    let y = fast_coordinates(&map);
    let w = vq.weight();
    let grid = v.grid();
    Ok((0..vq.points())
        .map(|k| w * vq.point(k)[0] * psi_x(grid.quadrature_point(k / QP, k % QP)) * psi_y(y[k]))
        .sum())
}

/// `int psi_x dx * int_Y g psi_y dy`, the limit of [`two_scale_pairing`] for
/// `v = sample_oscillatory(g, eps)`. `psi_x` is integrated with a 6-point
/// Gauss rule per axis on `elements` subintervals.
pub fn oscillation_limit(
    g: &ScalarField<CellGrid>,
    psi_x: impl Fn([f64; 2]) -> f64,
    psi_y: impl Fn([f64; 2]) -> f64,
    elements: usize,
) -> f64 {
    let gq = interpolate(g, &GAUSS_2X2);
    let cell = g.grid();
    let w = gq.weight();
    let cell_part: f64 = (0..gq.points())
        .map(|k| w * gq.point(k)[0] * psi_y(cell.quadrature_point(k / QP, k % QP)))
        .sum();
    cell_part * integrate_omega(psi_x, elements)
}

const GAUSS6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152, 0.171_324_492_379_170),
    (-0.661_209_386_466_265, 0.360_761_573_048_139),
    (-0.238_619_186_083_197, 0.467_913_934_572_691),
    (0.238_619_186_083_197, 0.467_913_934_572_691),
    (0.661_209_386_466_265, 0.360_761_573_048_139),
    (0.932_469_514_203_152, 0.171_324_492_379_170),
];

fn integrate_omega(f: impl Fn([f64; 2]) -> f64, elements: usize) -> f64 {
    let h = 1.0 / elements as f64;
    let mut acc = 0.0;
    for ey in 0..elements {
        for ex in 0..elements {
            for (sx, wx) in GAUSS6 {
                for (sy, wy) in GAUSS6 {
                    let x = [(ex as f64 + 0.5 + 0.5 * sx) * h, (ey as f64 + 0.5 + 0.5 * sy) * h];
                    acc += 0.25 * wx * wy * h * h * f(x);
                }
            }
        }
    }
    acc
}

/// Least-squares slope of `log E` against `log eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rate {
    Slope(f64),
    /// Some error was exactly zero.
    FloorReached,
}

impl Rate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            Rate::Slope(s) => Some(*s),
            Rate::FloorReached => None,
        }
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<Rate> {
    if points.len() < 3 {
        return Err(HkError::Degenerate(format!(
            "rate fit needs at least 3 ladder points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(e, v)| !(e > 0.0) || !(v >= 0.0)) {
        return Err(HkError::Degenerate("rate fit needs eps > 0 and E >= 0".into()));
    }
    if points.iter().any(|&(_, v)| v == 0.0) {
        return Ok(Rate::FloorReached);
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HkError::Degenerate("rate fit needs distinct eps".into()));
    }
    Ok(Rate::Slope(sxy / sxx))
}

/// Separable test function `psi(x, y) = sin(pi x1) sin(pi x2) w(y)` used by
/// the Maxwell-stress and elasticity diagnostics.
pub fn test_x(x: [f64; 2]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

pub fn test_y(y: [f64; 2]) -> f64 {
    1.0 + 0.5 * (2.0 * PI * y[0]).cos() + 0.25 * (2.0 * PI * y[1]).sin()
}

/// Elastic part of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticStudy {
    pub b: ElasticTensorField,
    pub c: ElasticTensorField,
    pub g: VectorSource,
    pub variant: ElectrostrictionVariant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub spec: OperatorSpec,
    /// Cell grid; the fine grid for `eps` has `n / eps` elements per side.
    pub cell: CellGrid,
    /// Strictly decreasing.
    pub ladder: Vec<Epsilon>,
    pub f: ScalarSource,
    pub elastic: Option<ElasticStudy>,
    pub options: SolverOptions,
}

/// Corrector errors restricted to the eps-cells inside Omega.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteriorNorms {
    pub e_exp: f64,
    pub e_avg: f64,
    pub e_dm: f64,
    pub e_nocorr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub epsilon: f64,
    pub elements: usize,
    /// `|grad phi_eps - grad phi_0 - grad_y phi_1(x, x/eps)|_p`.
    pub e_exp: f64,
    /// Same with `MM^eps` applied to `grad_y phi_1`.
    pub e_avg: f64,
    /// `|grad phi_eps - p(x/eps, M^eps grad phi_0)|_p`.
    pub e_dm: f64,
    /// `|grad phi_eps - grad phi_0|_p`.
    pub e_nocorr: f64,
    /// `|grad_y phi_1 - MM^eps grad_y phi_1|_p` along `y = x/eps`, so that
    /// `e_avg <= e_exp + average_gap`.
    pub average_gap: f64,
    pub interior: InteriorNorms,
    pub fine_residual: f64,
    pub fine_newton: usize,
    pub homogenized_residual: f64,
    pub homogenized_newton: usize,
    /// Largest relative cell residual over the macroscopic points.
    pub cell_residual: f64,
    /// Largest flux-identity defect over the macroscopic points.
    pub flux_identity: f64,
    /// Entrywise Maxwell-stress pairing discrepancy, row-major.
    pub maxwell: [f64; 4],
    /// `|int psi . u_eps - int psi . u_0|` when elasticity is part of the study.
    pub elastic: Option<f64>,
}

impl LadderRow {
    pub fn maxwell_max(&self) -> f64 {
        self.maxwell.iter().fold(0.0, |m, v| m.max(*v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub e_exp: Rate,
    pub e_avg: Rate,
    pub e_dm: Rate,
    pub e_nocorr: Rate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorReport {
    pub p: f64,
    pub cell_n: usize,
    pub rows: Vec<LadderRow>,
    /// Present when the ladder has at least three entries.
    pub rates: Option<Rates>,
}

impl CorrectorReport {
    pub fn column(&self, f: impl Fn(&LadderRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// The corrector errors for one `eps`, given solved fine and homogenized
/// potentials on the same domain grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectorErrors {
    pub e_exp: f64,
    pub e_avg: f64,
    pub e_dm: f64,
    pub e_nocorr: f64,
    pub average_gap: f64,
    pub interior: InteriorNorms,
}

struct Norm<'a> {
    map: &'a Commensuration,
    p: f64,
    w: f64,
    all: f64,
    interior: f64,
}

impl<'a> Norm<'a> {
    fn new(map: &'a Commensuration, p: f64) -> Self {
        let hf = map.domain.h();
        Self {
            map,
            p,
            w: hf * hf / QP as f64,
            all: 0.0,
            interior: 0.0,
        }
    }

    fn add(&mut self, k: usize, v: Vec2) {
        let t = self.w * euclid(&v).powf(self.p);
        self.all += t;
        let (i, j) = self.map.eps_cell(k / QP);
        if self.map.is_interior_cell(i, j) {
            self.interior += t;
        }
    }

    fn finish(&self) -> (f64, f64) {
        (self.all.powf(1.0 / self.p), self.interior.powf(1.0 / self.p))
    }
}

fn vec_at(q: &QuadField, k: usize) -> Vec2 {
    [q.point(k)[0], q.point(k)[1]]
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// `E_exp`, `E_avg`, `E_dm` and `E_nocorr` for one `eps`. `phi_eps` and
/// `phi_0` live on the fine grid of `map`; `cells` holds the cell solution
/// at `grad phi_0` for every fine quadrature point.
pub fn corrector_errors(
    law: &Conductivity,
    map: &Commensuration,
    phi_eps: &ScalarField<DomainGrid>,
    phi_0: &ScalarField<DomainGrid>,
    cells: &[std::sync::Arc<crate::effective::CellEntry>],
) -> Result<CorrectorErrors> {
    if law.grid() != map.cell || phi_eps.grid() != map.domain || phi_0.grid() != map.domain {
        return Err(HkError::Shape("corrector data on mismatched grids".into()));
    }
    let p = law.spec().p;
    let ge = gradient(phi_eps, &GAUSS_2X2);
    let g0 = gradient(phi_0, &GAUSS_2X2);
    if cells.len() != ge.points() {
        return Err(HkError::Shape("one cell solution per quadrature point expected".into()));
    }
    let cell = law.grid();
    let phi1 = |k: usize| phi1_gradient(cell, &cells[k]).expect("cell layout");
    let averaged = coarse_average_mm(map, phi1);

    // M^eps grad phi_0 and the cell solves at those loadings
    let m0 = coarse_average_m(&g0, map)?;
    let k_cells = map.cells_per_axis();
    let mut loads = vec![[0.0; 2]; k_cells * k_cells];
    for e in 0..map.domain.element_count() {
        loads[map.eps_cell_flat(e)] = vec_at(&m0, e * QP);
    }
    let dm = law.entries(&loads, None)?;
    let dm_grad: Vec<Vec<Vec2>> = dm.iter().map(|en| law.solver().corrector_gradients(en.xi, &en.eta)).collect();

    let mut n_exp = Norm::new(map, p);
    let mut n_avg = Norm::new(map, p);
    let mut n_dm = Norm::new(map, p);
    let mut n_no = Norm::new(map, p);
    let mut n_gap = Norm::new(map, p);
    for k in 0..ge.points() {
        let y = map.cell_point(k);
        let cellk = map.eps_cell_flat(k / QP);
        let d = sub(vec_at(&ge, k), vec_at(&g0, k));
        let g1 = vec_at(&phi1(k), y);
        let g1m = vec_at(&averaged[cellk], y);
        n_no.add(k, d);
        n_exp.add(k, sub(d, g1));
        n_avg.add(k, sub(d, g1m));
        n_gap.add(k, sub(g1, g1m));
        n_dm.add(k, sub(vec_at(&ge, k), dm_grad[cellk][y]));
    }
    let (e_exp, i_exp) = n_exp.finish();
    let (e_avg, i_avg) = n_avg.finish();
    let (e_dm, i_dm) = n_dm.finish();
    let (e_nocorr, i_no) = n_no.finish();
    Ok(CorrectorErrors {
        e_exp,
        e_avg,
        e_dm,
        e_nocorr,
        average_gap: n_gap.finish().0,
        interior: InteriorNorms {
            e_exp: i_exp,
            e_avg: i_avg,
            e_dm: i_dm,
            e_nocorr: i_no,
        },
    })
}

/// Entrywise `|<Sigma_eps, psi(x, x/eps)> - <Sigma_0, psi>|` with
/// `Sigma_0 = p (x) p`, `p = grad phi_0 + grad_y phi_1`.
pub fn maxwell_two_scale_check(
    law: &Conductivity,
    map: &Commensuration,
    phi_eps: &ScalarField<DomainGrid>,
    cells: &[std::sync::Arc<crate::effective::CellEntry>],
    psi_x: impl Fn([f64; 2]) -> f64,
    psi_y: impl Fn([f64; 2]) -> f64,
) -> Result<[f64; 4]> {
    let sigma = maxwell_stress(phi_eps);
    if cells.len() != sigma.points() || law.grid() != map.cell {
        return Err(HkError::Shape("Maxwell check data on mismatched grids".into()));
    }
    let y = fast_coordinates(map);
    let cell = map.cell;
    let wy: Vec<f64> = (0..cell.element_count() * QP)
        .map(|k| psi_y(cell.quadrature_point(k / QP, k % QP)))
        .collect();
    let wc = 1.0 / wy.len() as f64;
    let w = sigma.weight();
    let mut fine = [0.0; 4];
    let mut limit = [0.0; 4];
    for k in 0..sigma.points() {
        let px = psi_x(map.domain.quadrature_point(k / QP, k % QP));
        let s = sigma.point(k);
        let t = w * px * psi_y(y[k]);
        for (a, v) in fine.iter_mut().zip(s) {
            *a += t * v;
        }
        let en = &cells[k];
        let grads = law.solver().corrector_gradients(en.xi, &en.eta);
        let mut inner = [0.0; 4];
        for (g, wq) in grads.iter().zip(&wy) {
            for (a, v) in inner.iter_mut().zip(outer(*g, *g)) {
                *a += wc * wq * v;
            }
        }
        for (a, v) in limit.iter_mut().zip(inner) {
            *a += w * px * v;
        }
    }
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (fine[i] - limit[i]).abs();
    }
    Ok(out)
}

/// `|int psi(x) . u_eps - int psi(x) . u_0|` with `psi = (psi_x, psi_x)`.
pub fn elastic_weak_discrepancy(
    u_eps: &VectorField<DomainGrid>,
    u_0: &VectorField<DomainGrid>,
    psi_x: impl Fn([f64; 2]) -> f64,
) -> f64 {
    let a = interpolate(u_eps, &GAUSS_2X2);
    let b = interpolate(u_0, &GAUSS_2X2);
    let grid = u_eps.grid();
    let w = a.weight();
    let s: f64 = (0..a.points())
        .map(|k| {
            let px = psi_x(grid.quadrature_point(k / QP, k % QP));
            let (ua, ub) = (a.point(k), b.point(k));
            w * px * (ua[0] - ub[0] + ua[1] - ub[1])
        })
        .sum();
    s.abs()
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.ladder.is_empty() {
            return Err(HkError::Degenerate("empty eps ladder".into()));
        }
        if !self.ladder.windows(2).all(|w| w[1].cells() > w[0].cells()) {
            return Err(HkError::Degenerate("eps ladder must be strictly decreasing".into()));
        }
        Ok(())
    }
}

/// Run the eps-ladder. Entries are solved in order; each homogenized solve
/// starts from the previous one prolonged onto the finer grid.
pub fn run_study(cfg: &StudyConfig) -> Result<CorrectorReport> {
    cfg.validate()?;
    let opts = &cfg.options;
    let (law, elastic_law) = match &cfg.elastic {
        Some(el) => {
            let l = EffectiveLaw::assemble(&cfg.spec, &el.b, &el.c, cfg.cell, el.variant, opts)?;
            (None, Some(l))
        }
        None => (Some(Conductivity::new(&cfg.spec, cfg.cell, *opts)?), None),
    };
    let cond = match (&law, &elastic_law) {
        (Some(l), _) => l,
        (None, Some(l)) => &l.conductivity,
        _ => unreachable!(),
    };
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    let mut previous: Option<NodalField<DomainGrid>> = None;
    for &eps in &cfg.ladder {
        let map = Commensuration::fine(eps, cfg.cell)?;
        let f = cfg.f.field(map.domain);
        let fine = solve_fine_electrostatic(&cfg.spec, eps, &f, opts)?;
        let start = previous.as_ref().map(|c| prolong(c, map.domain));
        let hom = solve_homogenized_electrostatic_from(cond, &f, start.as_ref(), opts)?;
        let errs = corrector_errors(cond, &map, &fine.phi, &hom.phi, &hom.cells)?;
        let (cell_residual, flux_identity) = two_scale_checks(cond, &hom);
        let maxwell = maxwell_two_scale_check(cond, &map, &fine.phi, &hom.cells, test_x, test_y)?;
        let elastic = match (&cfg.elastic, &elastic_law) {
            (Some(el), Some(l)) => {
                let g = el.g.field(map.domain);
                let sigma = maxwell_stress(&fine.phi);
                let ue = solve_fine_elasticity(&el.b, &el.c, eps, &g, &sigma, opts)?;
                let u0 = solve_homogenized_elasticity(l.b_hom(), l.c_hom(), &g, &hom.grad, opts)?;
                Some(elastic_weak_discrepancy(&ue.u, &u0.u, test_x))
            }
            _ => None,
        };
        rows.push(LadderRow {
            epsilon: eps.value(),
            elements: map.domain.n(),
            e_exp: errs.e_exp,
            e_avg: errs.e_avg,
            e_dm: errs.e_dm,
            e_nocorr: errs.e_nocorr,
            average_gap: errs.average_gap,
            interior: errs.interior,
            fine_residual: fine.stats.residual,
            fine_newton: fine.stats.newton_iterations,
            homogenized_residual: hom.stats.residual,
            homogenized_newton: hom.stats.newton_iterations,
            cell_residual,
            flux_identity,
            maxwell,
            elastic,
        });
        previous = Some(hom.phi);
    }
    let rates = if rows.len() >= 3 {
        let fit = |f: fn(&LadderRow) -> f64| fit_rate(&rows.iter().map(|r| (r.epsilon, f(r))).collect::<Vec<_>>());
        Some(Rates {
            e_exp: fit(|r| r.e_exp)?,
            e_avg: fit(|r| r.e_avg)?,
            e_dm: fit(|r| r.e_dm)?,
            e_nocorr: fit(|r| r.e_nocorr)?,
        })
    } else {
        None
    };
    Ok(CorrectorReport {
        p: cfg.spec.p,
        cell_n: cfg.cell.n(),
        rows,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(k: usize, n: usize) -> Commensuration {
        Commensuration::fine(Epsilon::from_cells(k).unwrap(), CellGrid::new(n).unwrap()).unwrap()
    }

    #[test]
    fn rates_of_power_laws() {
        let eps = [0.25, 0.125, 0.0625, 0.03125];
        let r = |f: fn(f64) -> f64| fit_rate(&eps.map(|e| (e, f(e)))).unwrap().slope().unwrap();
        assert!((r(|e| e) - 1.0).abs() < 1e-12);
        assert!((r(f64::sqrt) - 0.5).abs() < 1e-12);
        assert!(r(|_| 3.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(0.5, 1.0), (0.25, 0.0), (0.1, 1.0)]).unwrap(), Rate::FloorReached);
        assert!(fit_rate(&[(0.5, 1.0), (0.25, 1.0)]).is_err());
    }

    #[test]
    fn m_eps_of_linear_function_is_cell_centre() {
        let m = map(4, 4);
        let v = QuadField::from_fn(m.domain, 1, |x| vec![x[0]]);
        let a = coarse_average_m(&v, &m).unwrap();
        for e in 0..m.domain.element_count() {
            let (i, j) = m.eps_cell(e);
            let got = a.point(e * QP)[0];
            if m.is_interior_cell(i, j) {
                assert!((got - i as f64 * 0.25).abs() < 1e-14);
            } else {
                assert_eq!(got, 0.0);
            }
        }
        let again = coarse_average_m(&a, &m).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn mm_eps_of_separable_function() {
        let m = map(4, 4);
        let cell = m.cell;
        let w = QuadField::from_fn(cell, 1, |y| vec![1.0 + y[0] - y[1] * y[1]]);
        let xs: Vec<[f64; 2]> = (0..m.domain.element_count() * QP)
            .map(|k| m.domain.quadrature_point(k / QP, k % QP))
            .collect();
        let out = coarse_average_mm(&m, |k| {
            let mut f = w.clone();
            f.values_mut().iter_mut().for_each(|v| *v *= xs[k][0]);
            f
        });
        for (i, j) in [(1usize, 1usize), (2, 3), (3, 2)] {
            let got = &out[i + 5 * j];
            for (a, b) in got.values().iter().zip(w.values()) {
                assert!((a - i as f64 * 0.25 * b).abs() < 1e-14);
            }
        }
        let same = coarse_average_mm(&m, |_| w.clone());
        assert!(same.iter().all(|f| *f == w));
    }
}
