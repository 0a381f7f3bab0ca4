//! One PASS/FAIL line per acceptance criterion.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use ldl_core::collision::{build_kernel, ensemble_average, generator_identity_defect, poisson_series};
use ldl_core::fock::fock_battery;
use ldl_core::generator::{
    boltzmann_from_t, cp_check, evolve_density, heisenberg_generator, Shell, TElement, TMatrixInput,
};
use ldl_core::linalg::{apply_superop, c, max_abs, min_eig, trace, CMat};
use ldl_core::model::{demo_model, DemoModel, Model};
use ldl_core::random::{random_density, random_matrix, random_model, random_vector, rng};
use ldl_core::scattering::{build_scattering, theta_map};
use ldl_core::wick::{convergence_report, factorization_check, CorrelatorSpec, SpectralLines, DEFAULT_ETA};

const XIS: [f64; 3] = [1e-1, 1e-2, 1e-3];

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(lines: &mut Vec<Line>, id: usize, name: &'static str, pass: bool, detail: String) {
    println!("{} criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    lines.push(Line { id, name, pass, detail });
}

fn demos() -> Vec<Model> {
    [DemoModel::TwoLevel, DemoModel::Null, DemoModel::RankDeficient].into_iter().map(demo_model).collect()
}

fn fixtures() -> Vec<Model> {
    demos().into_iter().chain((0..5).map(random_model)).collect()
}

fn diagonal_coupling(model: &Model) -> Model {
    let mut m = model.clone();
    let diag = CMat::from_diagonal(&m.system.coupling().diagonal());
    m.system = m.system.with_coupling(diag).unwrap();
    m.name = format!("{}-diagonal", model.name);
    m
}

fn unitarity() -> (bool, String) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let data = build_scattering(&random_model(1000 + seed)).unwrap();
        let (a, b) = data.max_unitarity_defect();
        worst = worst.max(a).max(b);
    }
    let secs = start.elapsed().as_secs_f64();
    (worst <= 1e-10 && secs < 10.0, format!("max defect {worst:.2e} (<= 1e-10) over 100 models in {secs:.2} s (< 10 s)"))
}

fn theta_dual_route() -> (bool, String) {
    let (mut block, mut comp, mut scaled, mut singular) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for seed in 0..50 {
        let model = random_model(2000 + seed);
        let data = build_scattering(&model).unwrap();
        let d = model.system.dim();
        let x = random_matrix(&mut rng(3000 + seed), d, d, 1.0);
        for (b, rep) in data.blocks.iter().zip(theta_map(&data, &x)) {
            block = block.max(rep.defect);
            let Some(ex) = rep.extracted else { continue };
            let lmin = min_eig(&b.gram);
            let e = (0..4).map(|k| max_abs(&(&ex[k / 2][k % 2] - &rep.expanded[k / 2][k % 2]))).fold(0.0, f64::max);
            if lmin >= 1e-6 {
                comp = comp.max(e);
            } else {
                singular += 1;
                scaled = scaled.max(e * lmin);
            }
        }
    }
    (
        block <= 1e-10 && comp <= 1e-10 && scaled <= 1e-15,
        format!(
            "block {block:.2e} (<= 1e-10), components {comp:.2e} (<= 1e-10), {singular} near-singular bins error*lambda_min {scaled:.2e} (<= 1e-15)"
        ),
    )
}

fn generator_identity() -> (bool, String) {
    let mut worst = 0.0f64;
    for model in fixtures() {
        let data = build_scattering(&model).unwrap();
        let kernel = build_kernel(&data, &model.grid, &model.gas).unwrap();
        let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
        worst = worst.max(generator_identity_defect(&kernel, &gen));
    }
    (worst <= 1e-8, format!("max defect {worst:.2e} (<= 1e-8) over {} fixtures", fixtures().len()))
}

fn dilation() -> (bool, String) {
    let start = Instant::now();
    let model = demo_model(DemoModel::TwoLevel);
    let data = build_scattering(&model).unwrap();
    let kernel = build_kernel(&data, &model.grid, &model.gas).unwrap();
    let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
    let rho0 = random_density(&mut rng(4000), 2);
    let (mut series_err, mut tail) = (0.0f64, 0.0f64);
    for lt in [0.5, 1.0, 2.0, 3.0] {
        let t = lt / kernel.rate;
        let s = poisson_series(&kernel, &rho0, t, 1e-10).unwrap();
        let exact = apply_superop(&gen.schr_propagator(t), &rho0);
        series_err = series_err.max(max_abs(&(&s.rho - &exact)));
        tail = tail.max(s.tail);
    }
    let horizon = 3.0 / kernel.rate;
    let times: Vec<f64> = (1..=10).map(|k| horizon * k as f64 / 10.0).collect();
    let avg = ensemble_average(&kernel, &rho0, &times, 10_000, 4001).unwrap();
    let (mut inside, mut total) = (0usize, 0usize);
    for (k, &t) in times.iter().enumerate() {
        let exact = apply_superop(&gen.schr_propagator(t), &rho0);
        let diff = &avg.mean[k] - &exact;
        for (z, s) in diff.iter().zip(avg.stderr[k].iter()) {
            for (dv, se) in [(z.re, s.re), (z.im, s.im)] {
                total += 1;
                inside += usize::from(dv.abs() <= 4.0 * se.max(1e-12));
            }
        }
    }
    let frac = inside as f64 / total as f64;
    let secs = start.elapsed().as_secs_f64();
    (
        series_err <= 1e-8 && tail < 1e-10 && frac >= 0.95 && secs < 60.0,
        format!(
            "series {series_err:.2e} (<= 1e-8, tail {tail:.1e}), Monte Carlo {inside}/{total} entries within 4 se (>= 95%), {secs:.2} s (< 60 s)"
        ),
    )
}

fn lindblad_structure() -> (bool, String) {
    let (mut choi, mut tr, mut pos) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    let mut rg = rng(5000);
    for model in fixtures() {
        let data = build_scattering(&model).unwrap();
        let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
        let kernel = build_kernel(&data, &model.grid, &model.gas).unwrap();
        choi = choi.min(cp_check(&gen).unwrap().choi_min_eig);
        let horizon = if kernel.rate > 0.0 { 3.0 / kernel.rate } else { 1.0 };
        for _ in 0..100 {
            let rho = random_density(&mut rg, gen.dim);
            tr = tr.max(trace(&gen.apply_schr(&rho)).norm());
            for t in [0.1 * horizon, horizon, 10.0 * horizon] {
                pos = pos.min(min_eig(&evolve_density(&gen, &rho, t, 0.01).unwrap()));
            }
        }
    }
    (
        choi >= -1e-10 && tr <= 1e-12 && pos >= -1e-8,
        format!("Choi min eig {choi:.2e} (>= -1e-10), trace {tr:.2e} (<= 1e-12), min state eig {pos:.2e} (>= -1e-8) on 100 states per fixture"),
    )
}

fn limit_theorem() -> (bool, String) {
    let start = Instant::now();
    let lines = SpectralLines::from_model(&demo_model(DemoModel::TwoLevel), DEFAULT_ETA).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for ch in [vec![(0, 1)], vec![(0, 1), (1, 0)], vec![(0, 1), (1, 0), (1, 1)]] {
        let rep = convergence_report(&lines, &CorrelatorSpec::ordered(&ch, 1.0), &XIS).unwrap();
        pass &= rep.strictly_decreasing && rep.final_rel_error <= 5e-2;
        if ch.len() == 1 {
            let slowest = rep.decade_ratios.iter().copied().fold(f64::INFINITY, f64::min);
            pass &= slowest >= 5.0;
            parts.push(format!("n=1 {:.2e} decade ratio {slowest:.1} (>= 5)", rep.final_rel_error));
        } else {
            parts.push(format!("n={} {:.2e}", ch.len(), rep.final_rel_error));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    (pass, format!("{} (strictly decreasing, <= 5e-2), {secs:.2} s (< 120 s)", parts.join(", ")))
}

fn factorization() -> (bool, String) {
    let model = demo_model(DemoModel::TwoLevel);
    let lines = SpectralLines::from_model(&model, DEFAULT_ETA).unwrap();
    let weights = model.gas_weights();
    let bin = (0..weights.len()).max_by(|&a, &b| weights[a][(0, 1)].norm().total_cmp(&weights[b][(0, 1)].norm())).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for inner in [vec![(0, 1)], vec![(1, 1), (0, 1)]] {
        let rep = factorization_check(&lines, 1, 0, bin, &CorrelatorSpec::ordered(&inner, 1.0), &XIS).unwrap();
        pass &= rep.decreasing && rep.final_rel_defect <= 5e-2;
        parts.push(format!("inner order {} {:.2e}", inner.len(), rep.final_rel_defect));
    }
    (pass, format!("{} (decreasing, <= 5e-2)", parts.join(", ")))
}

fn fock() -> (bool, String) {
    let b = fock_battery().unwrap();
    let worst = b.checks.iter().map(|c| c.defect).fold(0.0, f64::max);
    let lead = b.ito.leading_slope.unwrap_or(f64::NAN);
    let cross = b.ito.cross_slope.unwrap_or(f64::NAN);
    let pass = b.checks.iter().all(|c| c.pass && c.tolerance <= 1e-8)
        && (lead - 1.0).abs() <= 0.02
        && (cross - 2.0).abs() <= 0.05;
    (pass, format!("{} oracles max defect {worst:.2e} (<= 1e-8), Ito slopes {lead:.3} (1.00 +- 0.02) and {cross:.3} (2.00 +- 0.05)", b.checks.len()))
}

fn boltzmann_builder() -> (bool, String) {
    let mut rg = rng(6000);
    let (l, w_in, w_out, width) = (0.7, 0.2, 0.3, 0.4);
    let u = random_vector(&mut rg, 2, 1.0);
    let v = random_vector(&mut rg, 2, 1.0);
    let t = (&u * v.adjoint()) * c(0.5, 0.3);
    let input = TMatrixInput {
        dim: 2,
        shells: vec![
            Shell { energy: 1.0, weight: w_in, width, density: l },
            Shell { energy: 1.1, weight: w_out, width, density: 0.0 },
        ],
        elements: vec![TElement { omega: 0.0, incoming: 0, outgoing: 1, op: t.clone() }],
    };
    let gen = boltzmann_from_t(&input).unwrap();
    let rate = 2.0 * PI * l * w_in * w_out / width;
    let td = t.adjoint();
    let mut closed = 0.0f64;
    for _ in 0..10 {
        let rho = random_density(&mut rg, 2);
        let direct = (&t * &rho * &td - (&td * &t * &rho + &rho * &td * &t) * c(0.5, 0.0)) * c(rate, 0.0);
        closed = closed.max(max_abs(&(gen.apply_schr(&rho) - direct)));
    }

    let mut cp_ok = cp_check(&gen).unwrap().pass;
    let mut route = 0.0f64;
    let diagonal: Vec<Model> = demos().iter().chain(&(0..5).map(random_model).collect::<Vec<_>>()).map(diagonal_coupling).collect();
    for model in &diagonal {
        let data = build_scattering(model).unwrap();
        let boltz = boltzmann_from_t(&TMatrixInput::from_scattering(&data, &model.grid, &model.gas)).unwrap();
        let cp = cp_check(&boltz).unwrap();
        let tr = (0..5).map(|_| trace(&boltz.apply_schr(&random_density(&mut rg, boltz.dim))).norm()).fold(0.0, f64::max);
        cp_ok &= cp.pass && tr <= 1e-12;
        let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
        route = route.max(max_abs(&(gen.dissipative_heis() - boltz.dissipative_heis())));
    }
    (
        closed <= 1e-10 && cp_ok && route <= 1e-8,
        format!("rank-1 closed form {closed:.2e} (<= 1e-10), CP and trace {}, diagonal-D route {route:.2e} (<= 1e-8) on {} fixtures", if cp_ok { "ok" } else { "failed" }, diagonal.len()),
    )
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str, args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_ldl"))
            .current_dir(dir.path())
            .args(["--threads", threads])
            .args(args)
            .args(["--manifest", &format!("{tag}.manifest.json")])
            .output()
            .unwrap();
        out.status.code() == Some(0)
    };
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap_or_default();
    let mut ok = true;
    let mut compared = 0;
    for (tag, threads) in [("a", "1"), ("b", "3")] {
        ok &= run(&format!("{tag}-traj"), threads, &[
            "trajectories", "--demo", "two-level", "--t-end", "40", "--n-traj", "2000", "--seed", "7",
            "--out", &format!("{tag}/traj.csv"), "--json", &format!("{tag}/traj.json"),
        ]);
        ok &= run(&format!("{tag}-verify"), threads, &["verify-all", "--seed", "7", "--n-traj", "2000", "--out-dir", &format!("{tag}/verify")]);
        ok &= run(&format!("{tag}-smatrix"), threads, &["smatrix", "--demo", "two-level", "--out", &format!("{tag}/s.csv")]);
    }
    for f in ["traj.csv", "traj.json", "verify/report.json", "s.csv"] {
        let (a, b) = (read(&format!("a/{f}")), read(&format!("b/{f}")));
        ok &= !a.is_empty() && a == b;
        compared += 1;
    }
    let strip = |tag: &str| {
        let mut v: serde_json::Value = serde_json::from_slice(&read(&format!("{tag}-traj.manifest.json"))).unwrap_or_default();
        if let Some(o) = v.as_object_mut() {
            for k in ["timing", "argv", "outputs", "threads"] {
                o.remove(k);
            }
        }
        v
    };
    let (ma, mb) = (strip("a"), strip("b"));
    ok &= !ma.is_null() && ma == mb;
    (ok, format!("{compared} output files byte-identical across repeated runs with 1 and 3 threads, manifests equal outside timing"))
}

fn main() {
    let mut lines = Vec::new();
    let criteria: [(&'static str, fn() -> (bool, String)); 10] = [
        ("S-matrix unitarity", unitarity),
        ("Theta dual route", theta_dual_route),
        ("generator identity", generator_identity),
        ("semigroup dilation", dilation),
        ("Lindblad structure", lindblad_structure),
        ("limit theorem", limit_theorem),
        ("factorization", factorization),
        ("Fock oracles", fock),
        ("Boltzmann builder", boltzmann_builder),
        ("determinism", determinism),
    ];
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let (pass, detail) = f();
        report(&mut lines, i + 1, name, pass, detail);
    }
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| format!("{} {}: {}", l.id, l.name, l.detail)).collect();
    println!("{} of {} criteria passed", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:#?}");
        std::process::exit(1);
    }
}
