//! The full battery on one model.

use ldl_core::collision::{build_kernel, ensemble_average, generator_identity_defect, poisson_series};
use ldl_core::fock::fock_battery;
use ldl_core::generator::{
    boltzmann_from_t, cp_check, duality_check, evolve_density, heisenberg_generator, TMatrixInput,
};
use ldl_core::linalg::{apply_superop, max_abs, min_eig, trace};
use ldl_core::model::Model;
use ldl_core::random::{random_density, random_hermitian, random_matrix, rng};
use ldl_core::scattering::{build_scattering, theta_map};
use ldl_core::wick::{convergence_report, factorization_check, CorrelatorSpec, SpectralLines, DEFAULT_ETA};
use serde_json::{json, Value};

use super::correlators::{convergence_json, factorization_json};
use super::fock::battery_json;
use crate::args::{DemoName, VerifyArgs};
use crate::error::CliResult;
use crate::io::{load_model, write_text, json_text};
use crate::manifest::{Outcome, Verdict};

pub const XIS: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const MC_WITHIN: f64 = 4.0;
pub const MC_FRACTION: f64 = 0.95;
/// Standard errors below this are treated as this value.
pub const MC_SE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `le`: value ≤ tolerance; `ge`: value ≥ tolerance.
    pub relation: &'static str,
    pub detail: Value,
}

impl Check {
    fn le(name: &str, value: f64, tolerance: f64, detail: Value) -> Self {
        Self { name: name.into(), value, tolerance, relation: "le", detail }
    }

    fn ge(name: &str, value: f64, tolerance: f64, detail: Value) -> Self {
        Self { name: name.into(), value, tolerance, relation: "ge", detail }
    }

    pub fn pass(&self) -> bool {
        match self.relation {
            "le" => self.value <= self.tolerance,
            _ => self.value >= self.tolerance,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "pass": self.pass(),
            "detail": self.detail,
        })
    }
}

/// Largest Θ mismatch: block form for every bin, components where the Gram
/// matrix is invertible (scaled by its smallest eigenvalue below `1e−6`).
fn theta_checks(model: &Model, seed: u64) -> CliResult<(f64, f64)> {
    let data = build_scattering(model)?;
    let mut rg = rng(seed);
    let d = model.system.dim();
    let (mut block, mut comp) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let x = random_matrix(&mut rg, d, d, 1.0);
        for (b, rep) in data.blocks.iter().zip(theta_map(&data, &x)) {
            block = block.max(rep.defect);
            if let Some(ex) = rep.extracted {
                let lmin = min_eig(&b.gram);
                let mut e = 0.0f64;
                for n in 0..2 {
                    for m in 0..2 {
                        e = e.max(max_abs(&(&ex[n][m] - &rep.expanded[n][m])));
                    }
                }
                comp = comp.max(if lmin >= 1e-6 { e } else { e * lmin * 1e5 });
            }
        }
    }
    Ok((block, comp))
}

pub fn run_checks(model: &Model, seed: u64, n_traj: usize) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    let data = build_scattering(model)?;
    let (u1, u2) = data.max_unitarity_defect();
    checks.push(Check::le("smatrix_unitarity", u1.max(u2), 1e-10, json!({ "bins": data.blocks.len() })));

    let (block, comp) = theta_checks(model, seed)?;
    checks.push(Check::le("theta_dual_route", block.max(comp), 1e-10, json!({ "block": block, "components": comp })));

    let weights = model.gas_weights();
    let gen = heisenberg_generator(&data, &weights)?;
    let kernel = build_kernel(&data, &model.grid, &model.gas)?;
    checks.push(Check::le(
        "generator_identity",
        generator_identity_defect(&kernel, &gen),
        1e-8,
        json!({ "rate": kernel.rate }),
    ));

    let cp = cp_check(&gen)?;
    checks.push(Check::ge(
        "choi_min_eigenvalue",
        cp.choi_min_eig,
        -1e-10,
        json!({ "remainder_defect": cp.remainder_defect, "anticommutator_defect": cp.anticommutator_defect }),
    ));

    let d = model.system.dim();
    let mut rg = rng(seed.wrapping_add(1));
    let states: Vec<_> = (0..100).map(|_| random_density(&mut rg, d)).collect();
    let tr = states.iter().take(20).map(|r| trace(&gen.apply_schr(r)).norm()).fold(0.0, f64::max);
    checks.push(Check::le("trace_preservation", tr, 1e-12, json!({ "states": 20 })));
    let horizon = if kernel.rate > 0.0 { 3.0 / kernel.rate } else { 1.0 };
    let mut lowest = f64::INFINITY;
    for r in &states {
        for t in [0.1 * horizon, horizon, 10.0 * horizon] {
            lowest = lowest.min(min_eig(&evolve_density(&gen, r, t, 0.01)?));
        }
    }
    checks.push(Check::ge("positivity", lowest, -1e-8, json!({ "states": states.len() })));
    let x = random_hermitian(&mut rg, d, 1.0);
    checks.push(Check::le("duality", duality_check(&gen, &states[0], &x, 1.0), 1e-10, json!({ "t": 1.0 })));

    let boltz = boltzmann_from_t(&TMatrixInput::from_scattering(&data, &model.grid, &model.gas))?;
    checks.push(Check::le(
        "boltzmann_route",
        max_abs(&(gen.dissipative_heis() - boltz.dissipative_heis())),
        1e-8,
        json!({ "boltzmann_cp": cp_check(&boltz)?.pass }),
    ));

    let rho0 = &states[1];
    let series = poisson_series(&kernel, rho0, horizon, 1e-10)?;
    let exact = apply_superop(&gen.schr_propagator(horizon), rho0);
    checks.push(Check::le(
        "poisson_series",
        max_abs(&(&series.rho - &exact)),
        1e-8,
        json!({ "lambda_t": kernel.rate * horizon, "terms": series.terms, "tail": series.tail }),
    ));

    let times: Vec<f64> = (1..=10).map(|k| horizon * k as f64 / 10.0).collect();
    let avg = ensemble_average(&kernel, rho0, &times, n_traj, seed)?;
    let (mut inside, mut total) = (0usize, 0usize);
    for (k, &t) in times.iter().enumerate() {
        let exact = apply_superop(&gen.schr_propagator(t), rho0);
        for i in 0..d {
            for j in 0..d {
                let diff = avg.mean[k][(i, j)] - exact[(i, j)];
                let se = avg.stderr[k][(i, j)];
                for (dv, s) in [(diff.re, se.re), (diff.im, se.im)] {
                    total += 1;
                    inside += usize::from(dv.abs() <= MC_WITHIN * s.max(MC_SE_FLOOR));
                }
            }
        }
    }
    checks.push(Check::ge(
        "monte_carlo",
        inside as f64 / total as f64,
        MC_FRACTION,
        json!({ "n_traj": n_traj, "inside": inside, "total": total, "time_points": times.len() }),
    ));

    let lines = SpectralLines::from_model(model, DEFAULT_ETA)?;
    for ch in [vec![(0, 1)], vec![(0, 1), (1, 0)], vec![(0, 1), (1, 0), (1, 1)]] {
        let rep = convergence_report(&lines, &CorrelatorSpec::ordered(&ch, 1.0), &XIS)?;
        let n = ch.len();
        let value = if rep.strictly_decreasing { rep.final_rel_error } else { f64::INFINITY };
        checks.push(Check::le(&format!("wick_limit_n{n}"), value, 5e-2, convergence_json(&rep)));
        if n == 1 {
            let slowest = rep.decade_ratios.iter().copied().fold(f64::INFINITY, f64::min);
            checks.push(Check::ge("wick_limit_n1_decade_ratio", slowest, 5.0, json!(rep.decade_ratios)));
        }
    }

    let bin = (0..weights.len())
        .max_by(|&a, &b| weights[a][(0, 1)].norm().total_cmp(&weights[b][(0, 1)].norm()))
        .unwrap_or(0);
    for inner in [vec![(0, 1)], vec![(1, 1), (0, 1)]] {
        let rep = factorization_check(&lines, 1, 0, bin, &CorrelatorSpec::ordered(&inner, 1.0), &XIS)?;
        let value = if rep.decreasing { rep.final_rel_defect } else { f64::INFINITY };
        let mut detail = factorization_json(&rep);
        detail["bin"] = json!(bin);
        checks.push(Check::le(&format!("factorization_n{}", inner.len()), value, 5e-2, detail));
    }

    let battery = fock_battery()?;
    for c in &battery.checks {
        checks.push(Check::le(&format!("fock_{}", c.name), c.defect, c.tolerance, json!(null)));
    }
    let slope = |s: Option<f64>, want: f64| s.map(|s| (s - want).abs()).unwrap_or(f64::INFINITY);
    checks.push(Check::le("fock_ito_leading_slope", slope(battery.ito.leading_slope, 1.0), 0.02, battery_json(&battery)["ito"].clone()));
    checks.push(Check::le("fock_ito_cross_slope", slope(battery.ito.cross_slope, 2.0), 0.05, json!(null)));
    Ok(checks)
}

pub fn run(args: &VerifyArgs) -> CliResult<Outcome> {
    let (model, input) = load_model(&args.source, Some(DemoName::TwoLevel))?;
    if args.n_traj == 0 {
        return Err(crate::error::CliError::Usage("--n-traj must be >= 1".into()));
    }
    let checks = run_checks(&model, args.seed, args.n_traj)?;
    for c in &checks {
        let op = if c.relation == "le" { "<=" } else { ">=" };
        println!("{} {:<32} {:>12.4e} {op} {:.1e}", Verdict::from_pass(c.pass()).label(), c.name, c.value, c.tolerance);
    }
    let pass = checks.iter().all(Check::pass);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.name.as_str()).collect();
    println!("{}: {} of {} checks passed", Verdict::from_pass(pass).label(), checks.len() - failed.len(), checks.len());
    let report = json!({
        "model": model.name,
        "seed": args.seed,
        "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        "failed": failed,
        "pass": pass,
    });
    let outputs = vec![write_text(&args.out_dir.join("report.json"), &json_text(&report))?];
    Ok(Outcome {
        verdict: Verdict::from_pass(pass),
        inputs: vec![input],
        outputs,
        seed: Some(args.seed),
        summary: json!({ "model": model.name, "checks": checks.len(), "failed": failed, "pass": pass }),
    })
}
