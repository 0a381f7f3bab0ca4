use ldl_core::model::{demo_model, gamma_table, write_model};
use ldl_core::scattering::build_smatrix;
use serde_json::json;

use crate::args::{CheckArgs, DemoArgs};
use crate::error::CliResult;
use crate::io::{demo_of, emit_json, load_model, write_text};
use crate::manifest::{Outcome, Verdict};

pub fn check(args: &CheckArgs) -> CliResult<Outcome> {
    let (model, input) = load_model(&args.source, None)?;
    let gamma = gamma_table(&model.grid, &model.form_factors);
    let (status, verdict, worst) = match build_smatrix(&model.system, &model.grid, &model.form_factors, &gamma) {
        Ok(data) => {
            let (a, b) = data.max_unitarity_defect();
            ("ok".to_string(), Verdict::from_pass(a.max(b) <= 1e-10), json!(a.max(b)))
        }
        Err(e @ ldl_core::Error::SingularTMatrix { .. }) => (e.to_string(), Verdict::Fail, json!(null)),
        Err(e) => return Err(e.into()),
    };
    let summary = json!({
        "name": model.name,
        "levels": model.system.dim(),
        "bohr_frequencies": model.system.bohr_frequencies(),
        "bins": model.grid.len(),
        "multiplicities": model.grid.bins().iter().map(|b| b.multiplicity).collect::<Vec<_>>(),
        "energy_range": energy_range(&model),
        "fugacity": model.gas.fugacity(),
        "scattering": status,
        "max_unitarity_defect": worst,
    });
    println!(
        "{} {}: {} levels, {} bins, scattering {}",
        verdict.label(),
        model.name,
        model.system.dim(),
        model.grid.len(),
        summary["scattering"].as_str().unwrap_or("")
    );
    let outputs = match &args.json {
        Some(p) => emit_json(Some(p), &summary)?,
        None => Vec::new(),
    };
    Ok(Outcome {
        verdict,
        inputs: vec![input],
        outputs,
        seed: None,
        summary,
    })
}

pub fn demo(args: &DemoArgs) -> CliResult<Outcome> {
    let which = demo_of(args.name);
    let text = write_model(&demo_model(which));
    let outputs = match &args.out {
        Some(p) => vec![write_text(p, &text)?],
        None => {
            print!("{text}");
            Vec::new()
        }
    };
    Ok(Outcome {
        verdict: Verdict::Done,
        inputs: Vec::new(),
        outputs,
        seed: None,
        summary: json!({ "demo": which.name() }),
    })
}

fn energy_range(model: &ldl_core::model::Model) -> [f64; 2] {
    let bins = model.grid.bins();
    let (first, last) = (&bins[0], &bins[bins.len() - 1]);
    [first.center - first.width / 2.0, last.center + last.width / 2.0]
}
