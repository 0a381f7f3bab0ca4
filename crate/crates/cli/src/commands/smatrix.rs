use ldl_core::scattering::build_scattering;
use serde_json::json;

use crate::args::SmatrixArgs;
use crate::error::{CliError, CliResult};
use crate::io::{csv_row, emit_json, load_model, num, write_text};
use crate::manifest::{Outcome, Verdict};

pub fn run(args: &SmatrixArgs) -> CliResult<Outcome> {
    if !(args.tol > 0.0) {
        return Err(CliError::Usage("--tol must be > 0".into()));
    }
    let (model, input) = load_model(&args.source, None)?;
    let data = build_scattering(&model)?;
    let mut csv = csv_row(["bin", "E", "cond_T0", "cond_T1", "unit_defect"].map(String::from));
    let mut worst = 0.0f64;
    for b in &data.blocks {
        let (a, c) = b.unitarity_defect();
        let defect = a.max(c);
        worst = worst.max(defect);
        csv += &csv_row([b.bin.to_string(), num(b.energy), num(b.t.cond_t0), num(b.t.cond_t1), num(defect)]);
    }
    let mut outputs = vec![write_text(&args.out, &csv)?];
    let pass = worst <= args.tol;
    let summary = json!({
        "model": model.name,
        "bins": data.blocks.len(),
        "max_unit_defect": worst,
        "max_condition": data.max_condition(),
        "degenerate_bins": data.degenerate_bins(),
        "tolerance": args.tol,
        "pass": pass,
    });
    if let Some(p) = &args.json {
        outputs.extend(emit_json(Some(p), &summary)?);
    }
    println!("{} S-matrix unitarity: max defect {:.3e} over {} bins", Verdict::from_pass(pass).label(), worst, data.blocks.len());
    Ok(Outcome {
        verdict: Verdict::from_pass(pass),
        inputs: vec![input],
        outputs,
        seed: None,
        summary,
    })
}
