use ldl_core::collision::{build_kernel, ensemble_average, generator_identity_defect, KernelStatus};
use ldl_core::generator::heisenberg_generator;
use ldl_core::linalg::{unitary_exp, zeros, CMat};
use ldl_core::scattering::build_scattering;
use ldl_core::C64;
use serde_json::json;

use super::evolve::output_times;
use crate::args::TrajectoryArgs;
use crate::error::{CliError, CliResult};
use crate::io::{csv_row, emit_json, load_model, load_state, num, write_text};
use crate::manifest::{Outcome, Verdict};

/// Mean and standard error of real and imaginary parts, entrywise.
fn statistics(samples: &[CMat]) -> (CMat, CMat) {
    let n = samples.len() as f64;
    let d = samples[0].nrows();
    let mut mean = zeros(d, d);
    for s in samples {
        mean += s;
    }
    mean /= C64::new(n, 0.0);
    let mut se = zeros(d, d);
    if samples.len() > 1 {
        for s in samples {
            let dev = s - &mean;
            se += dev.map(|z| C64::new(z.re * z.re, z.im * z.im));
        }
        se = se.map(|z| C64::new((z.re / (n - 1.0) / n).sqrt(), (z.im / (n - 1.0) / n).sqrt()));
    }
    (mean, se)
}

pub fn run(args: &TrajectoryArgs) -> CliResult<Outcome> {
    if !(args.t_end > 0.0 && args.t_end.is_finite()) || args.samples == 0 || args.n_traj == 0 {
        return Err(CliError::Usage("--t-end must be finite and > 0, --samples and --n-traj >= 1".into()));
    }
    let (model, model_in) = load_model(&args.source, None)?;
    let d = model.system.dim();
    let (rho0, state_in) = load_state(&args.state, d)?;
    let data = build_scattering(&model)?;
    let kernel = build_kernel(&data, &model.grid, &model.gas)?;
    let gen = heisenberg_generator(&data, &model.gas_weights())?;
    let identity_defect = generator_identity_defect(&kernel, &gen);
    let times = output_times(args.t_end, args.samples);
    let avg = ensemble_average(&kernel, &rho0, &times, args.n_traj, args.seed)?;
    let h = model.system.hamiltonian();

    let mut header = vec!["t".to_string()];
    for kind in ["mean", "se"] {
        for i in 0..d {
            for j in 0..d {
                header.push(format!("{kind}_re{i}{j}"));
                header.push(format!("{kind}_im{i}{j}"));
            }
        }
    }
    let mut csv = csv_row(header);
    for (k, &t) in times.iter().enumerate() {
        let (mean, se) = if args.schroedinger_picture {
            // ρ ↦ e^{−iHt} ρ e^{iHt}
            let u = unitary_exp(&h, -t);
            let moved: Vec<CMat> = avg.records.iter().map(|r| &u * &r.snapshots[k] * u.adjoint()).collect();
            statistics(&moved)
        } else {
            (avg.mean[k].clone(), avg.stderr[k].clone())
        };
        let mut row = vec![num(t)];
        for m in [&mean, &se] {
            for i in 0..d {
                for j in 0..d {
                    row.push(num(m[(i, j)].re));
                    row.push(num(m[(i, j)].im));
                }
            }
        }
        csv += &csv_row(row);
    }
    let mut outputs = vec![write_text(&args.out, &csv)?];
    let n = args.n_traj as f64;
    let mean_count = avg.counts.iter().map(|c| c[times.len() - 1] as f64).sum::<f64>() / n;
    let summary = json!({
        "model": model.name,
        "rate": kernel.rate,
        "kernel_status": match kernel.status { KernelStatus::Active => "active", KernelStatus::EmptyGas => "empty_gas" },
        "channels": kernel.channels.len(),
        "bins_with_particles": kernel.densities.len(),
        "generator_identity_defect": identity_defect,
        "n_traj": args.n_traj,
        "t_end": args.t_end,
        "expected_collisions": kernel.rate * args.t_end,
        "mean_collisions": mean_count,
        "picture": if args.schroedinger_picture { "schroedinger" } else { "interaction" },
    });
    if let Some(p) = &args.json {
        outputs.extend(emit_json(Some(p), &summary)?);
    }
    println!(
        "{} trajectories of {}: rate {:.4e}, mean collisions {:.3} (expected {:.3}), generator identity defect {:.2e}",
        args.n_traj,
        model.name,
        kernel.rate,
        mean_count,
        kernel.rate * args.t_end,
        identity_defect
    );
    Ok(Outcome {
        verdict: Verdict::Done,
        inputs: vec![model_in, state_in],
        outputs,
        seed: Some(args.seed),
        summary,
    })
}
