//! Subcommand pipelines.

use hk_core::cell::{
    assemble_zeta, energy_identity, solve_electrostriction_cell, verify_flux_identity, ElasticCellSolver,
    ScalarCellSolver,
};
use hk_core::constitutive::{audit_elastic_tensor, check_growth_conditions};
use hk_core::corrector::{run_study, CorrectorReport, ElasticStudy, StudyConfig};
use hk_core::effective::{check_a_hom_properties, Conductivity, EffectiveLaw, PAIRS};
use hk_core::fields::{gradient, interpolate, DomainGrid, GAUSS_2X2};
use hk_core::fine::{electrostatic_residual, solve_fine, solve_fine_electrostatic};
use hk_core::homogenized::{solve_homogenized_elasticity, solve_homogenized_electrostatic, two_scale_checks};
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::report::{csv_value, envelope, tensor_json, Outputs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Cell,
    Effective,
    Fine,
    Homogenized,
    CorrectorStudy,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cell => "cell",
            Command::Effective => "effective",
            Command::Fine => "fine",
            Command::Homogenized => "homogenized",
            Command::CorrectorStudy => "corrector-study",
            Command::Verify => "verify",
        }
    }
}

/// Everything a subcommand produced. `failure` is set by `verify` when some
/// check did not pass; the outputs are still complete.
pub struct RunOutput {
    pub outputs: Outputs,
    pub report: Value,
    pub failure: Option<String>,
}

pub fn run(command: Command, cfg: &Config) -> Result<RunOutput, CliError> {
    let mut outputs = Outputs::default();
    let mut failure = None;
    let results = match command {
        Command::Cell => cell(cfg, &mut outputs)?,
        Command::Effective => effective(cfg)?,
        Command::Fine => fine(cfg, &mut outputs)?,
        Command::Homogenized => homogenized(cfg, &mut outputs)?,
        Command::CorrectorStudy => corrector_study(cfg, &mut outputs)?,
        Command::Verify => {
            let (v, failed) = verify(cfg)?;
            if !failed.is_empty() {
                failure = Some(failed.join(", "));
            }
            v
        }
    };
    let report = envelope(command.name(), cfg, results);
    let name = format!("{}.json", command.name());
    outputs.add_json(&name, &report);
    Ok(RunOutput {
        outputs,
        report,
        failure,
    })
}

fn cell(cfg: &Config, out: &mut Outputs) -> Result<Value, CliError> {
    let solver = ScalarCellSolver::new(&cfg.spec, cfg.cell, cfg.options)?;
    let mut scalar = Vec::new();
    for (k, xi) in cfg.xi.iter().enumerate() {
        let s = solver.solve(*xi)?;
        let dump = out.add_field(&format!("cell_eta_{k}"), &s.eta);
        scalar.push(json!({
            "xi": s.xi,
            "a_hom": solver.average_flux(s.xi, s.eta.values()),
            "residual": s.residual,
            "newton_iterations": s.stats.newton_iterations,
            "picard_iterations": s.stats.picard_iterations,
            "flux_identity": verify_flux_identity(&cfg.spec, &s),
            "energy_identity": energy_identity(&cfg.spec, &s).abs(),
            "dump": dump,
        }));
    }
    let mut results = json!({ "scalar": scalar });
    if let Some((b, c)) = &cfg.elastic {
        let es = ElasticCellSolver::new(b, cfg.cell, cfg.options);
        let units = [solver.solve([1.0, 0.0])?, solver.solve([0.0, 1.0])?];
        let mut upsilon = Vec::new();
        let mut chi = Vec::new();
        for (i, j) in PAIRS {
            let u = es.solve_upsilon(i, j)?;
            let name = format!("cell_upsilon_{}{}", i + 1, j + 1);
            let dump = out.add_field(&name, &u.field);
            upsilon.push(json!({ "i": i + 1, "j": j + 1, "residual": u.residual, "iterations": u.iterations, "dump": dump }));
            let zeta = assemble_zeta(&units[i], &units[j]);
            let x = solve_electrostriction_cell(b, c, &zeta, cfg.cell, cfg.variant, &cfg.options)?;
            let name = format!("cell_chi_{}{}", i + 1, j + 1);
            let dump = out.add_field(&name, &x.field);
            chi.push(json!({ "i": i + 1, "j": j + 1, "residual": x.residual, "iterations": x.iterations, "dump": dump }));
        }
        results["upsilon"] = json!(upsilon);
        results["chi"] = json!(chi);
    }
    Ok(results)
}

fn property_reports(law: &Conductivity, seed: u64) -> Result<Vec<Value>, CliError> {
    (0..3)
        .map(|s| Ok(serde_json::to_value(check_a_hom_properties(law, 100, seed + s)?).expect("serializable")))
        .collect()
}

fn effective(cfg: &Config) -> Result<Value, CliError> {
    let law = Conductivity::new(&cfg.spec, cfg.cell, cfg.options)?;
    let mut results = json!({
        "a_hom": {
            "e1": law.eval([1.0, 0.0])?,
            "e2": law.eval([0.0, 1.0])?,
        },
        "properties": property_reports(&law, cfg.seed)?,
    });
    if let Some(b) = law.linear_matrix() {
        results["b_hom"] = json!(b);
    }
    if let Some((b, c)) = &cfg.elastic {
        let eff = EffectiveLaw::assemble(&cfg.spec, b, c, cfg.cell, cfg.variant, &cfg.options)?;
        let bh = eff.b_hom();
        results["B_hom"] = tensor_json(bh);
        results["C_hom"] = tensor_json(eff.c_hom());
        results["B_hom_audit"] = json!({
            "major_asymmetry": bh.major_asymmetry(),
            "minor_asymmetry": bh.minor_asymmetry(),
            "min_eigenvalue": bh.symmetric_eigen_range().0,
        });
    }
    results["cell_solves"] = json!(law.solve_count());
    Ok(results)
}

fn fine(cfg: &Config, out: &mut Outputs) -> Result<Value, CliError> {
    let p = cfg.spec.p;
    let mut runs = Vec::new();
    for &eps in &cfg.ladder {
        let domain = DomainGrid::new(cfg.m * eps.cells())?;
        let f = cfg.f.field(domain);
        let f_dual = {
            let q = p / (p - 1.0);
            interpolate(&f, &GAUSS_2X2).lp_norm(q).powf(q)
        };
        let k = eps.cells();
        let mut run = match &cfg.elastic {
            Some((b, c)) => {
                let g = cfg.g.field(domain);
                let s = solve_fine(&cfg.spec, b, c, eps, &f, &g, &cfg.options)?;
                let phi_dump = out.add_field(&format!("fine_phi_{k}"), &s.phi);
                let u_dump = out.add_field(&format!("fine_u_{k}"), &s.u);
                json!({
                    "newton_iterations": s.electrostatic.newton_iterations,
                    "residual": s.electrostatic.residual,
                    "max_nodal_residual": electrostatic_residual(&cfg.spec, eps, &f, &s.phi)?,
                    "gradient_energy": gradient(&s.phi, &GAUSS_2X2).lp_norm(p).powf(p),
                    "elastic_residual": s.elastic_residual,
                    "elastic_iterations": s.elastic_iterations,
                    "dumps": [phi_dump, u_dump],
                })
            }
            None => {
                let s = solve_fine_electrostatic(&cfg.spec, eps, &f, &cfg.options)?;
                let phi_dump = out.add_field(&format!("fine_phi_{k}"), &s.phi);
                json!({
                    "newton_iterations": s.stats.newton_iterations,
                    "residual": s.stats.residual,
                    "max_nodal_residual": electrostatic_residual(&cfg.spec, eps, &f, &s.phi)?,
                    "gradient_energy": gradient(&s.phi, &GAUSS_2X2).lp_norm(p).powf(p),
                    "dumps": [phi_dump],
                })
            }
        };
        run["epsilon"] = json!(eps.value());
        run["elements"] = json!(domain.n());
        run["source_energy"] = json!(f_dual);
        runs.push(run);
    }
    Ok(json!({ "runs": runs }))
}

fn homogenized(cfg: &Config, out: &mut Outputs) -> Result<Value, CliError> {
    let domain = DomainGrid::new(cfg.domain)?;
    let f = cfg.f.field(domain);
    let (law, eff) = match &cfg.elastic {
        Some((b, c)) => {
            let e = EffectiveLaw::assemble(&cfg.spec, b, c, cfg.cell, cfg.variant, &cfg.options)?;
            (None, Some(e))
        }
        None => (Some(Conductivity::new(&cfg.spec, cfg.cell, cfg.options)?), None),
    };
    let cond = law.as_ref().or(eff.as_ref().map(|e| &e.conductivity)).expect("one of the two is set");
    let hom = solve_homogenized_electrostatic(cond, &f, &cfg.options)?;
    let (cell_residual, flux_identity) = two_scale_checks(cond, &hom);
    let phi_dump = out.add_field("homogenized_phi0", &hom.phi);
    let mut results = json!({
        "elements": domain.n(),
        "newton_iterations": hom.stats.newton_iterations,
        "picard_iterations": hom.stats.picard_iterations,
        "residual": hom.stats.residual,
        "history": hom.stats.history,
        "cell_residual": cell_residual,
        "flux_identity": flux_identity,
        "cell_solves": cond.solve_count(),
        "dumps": [phi_dump],
    });
    if let Some(e) = &eff {
        let g = cfg.g.field(domain);
        let u = solve_homogenized_elasticity(e.b_hom(), e.c_hom(), &g, &hom.grad, &cfg.options)?;
        let dump = out.add_field("homogenized_u0", &u.u);
        results["elastic"] = json!({ "residual": u.residual, "iterations": u.iterations });
        results["dumps"].as_array_mut().expect("array").push(json!(dump));
    }
    Ok(results)
}

pub fn study_config(cfg: &Config) -> Result<StudyConfig, CliError> {
    if cfg.m != cfg.cell.n() {
        return Err(CliError::Config {
            pointer: "/grids/m".into(),
            message: "corrector studies need the fine mesh to resolve each cell like the cell grid (m = n)".into(),
        });
    }
    Ok(StudyConfig {
        spec: cfg.spec.clone(),
        cell: cfg.cell,
        ladder: cfg.ladder.clone(),
        f: cfg.f,
        elastic: cfg.elastic.as_ref().map(|(b, c)| ElasticStudy {
            b: b.clone(),
            c: c.clone(),
            g: cfg.g,
            variant: cfg.variant,
        }),
        options: cfg.options,
    })
}

pub const CSV_HEADER: &str = "epsilon,E_exp,E_avg,E_dm,E_nocorr";

pub fn corrector_csv(r: &CorrectorReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for row in &r.rows {
        let cols = [row.epsilon, row.e_exp, row.e_avg, row.e_dm, row.e_nocorr].map(csv_value);
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

fn corrector_study(cfg: &Config, out: &mut Outputs) -> Result<Value, CliError> {
    let report = run_study(&study_config(cfg)?)?;
    let csv = out.add("corrector.csv", corrector_csv(&report));
    let mut v = serde_json::to_value(&report).expect("serializable");
    v["csv"] = json!(csv);
    Ok(v)
}

fn check(name: &str, value: f64, threshold: f64, pass: bool) -> Value {
    json!({ "name": name, "value": value, "threshold": threshold, "pass": pass })
}

/// Property suites for the configured operator and tensors.
fn verify(cfg: &Config) -> Result<(Value, Vec<String>), CliError> {
    let mut checks = Vec::new();
    let growth = check_growth_conditions(&cfg.spec, 1000, cfg.seed);
    checks.push(check(
        "operator monotonicity (min ratio)",
        growth.empirical_lambda_o,
        0.0,
        !growth.violation,
    ));
    let law = Conductivity::new(&cfg.spec, cfg.cell, cfg.options)?;
    for s in 0..3 {
        let r = check_a_hom_properties(&law, 100, cfg.seed + s)?;
        checks.push(check(
            &format!("a_hom monotonicity, seed {}", cfg.seed + s),
            r.min_monotonicity,
            0.0,
            !r.violation,
        ));
    }
    let solver = ScalarCellSolver::new(&cfg.spec, cfg.cell, cfg.options)?;
    for xi in &cfg.xi {
        let s = solver.solve(*xi)?;
        let fi = verify_flux_identity(&cfg.spec, &s);
        checks.push(check(&format!("flux identity at {xi:?}"), fi, 1e-9, fi <= 1e-9));
        let ei = energy_identity(&cfg.spec, &s).abs();
        checks.push(check(&format!("cell equation tested with eta at {xi:?}"), ei, 1e-9, ei <= 1e-9));
    }
    if let Some((b, c)) = &cfg.elastic {
        for (name, t) in [("B", b), ("C", c)] {
            let a = audit_elastic_tensor(t, 100, cfg.seed);
            let asym = a.major_asymmetry.max(a.minor_asymmetry);
            checks.push(check(&format!("{name} symmetries"), asym, 1e-15, asym <= 1e-15));
        }
        let a = audit_elastic_tensor(b, 100, cfg.seed);
        checks.push(check("B ellipticity", a.ellipticity, 0.0, a.ellipticity > 0.0));
        let eff = EffectiveLaw::assemble(&cfg.spec, b, c, cfg.cell, cfg.variant, &cfg.options)?;
        let bh = eff.b_hom();
        let asym = bh.major_asymmetry().max(bh.minor_asymmetry());
        checks.push(check("B_hom symmetries", asym, 1e-10, asym <= 1e-10));
        let min = bh.symmetric_eigen_range().0;
        checks.push(check("B_hom ellipticity", min, 0.0, min > 0.0));
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c["pass"] == json!(false))
        .map(|c| c["name"].as_str().unwrap_or_default().to_string())
        .collect();
    Ok((json!({ "checks": checks, "pass": failed.is_empty() }), failed))
}
