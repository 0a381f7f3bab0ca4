use ldl_core::fock::{fock_battery, FockBattery, TAIL_TOLERANCE};
use serde_json::{json, Value};

use crate::args::FockArgs;
use crate::error::CliResult;
use crate::io::{complex_json, emit_json};
use crate::manifest::{Outcome, Verdict};

pub fn battery_json(b: &FockBattery) -> Value {
    json!({
        "modes": b.modes,
        "cutoff": b.cutoff,
        "tail_tolerance": TAIL_TOLERANCE,
        "checks": b.checks.iter().map(|c| json!({
            "name": c.name,
            "defect": c.defect,
            "tolerance": c.tolerance,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
        "ito": {
            "rows": b.ito.rows.iter().map(|r| json!({
                "dt": r.dt,
                "product": complex_json(r.product),
                "leading": complex_json(r.leading),
                "cross": complex_json(r.cross),
                "identity_defect": r.identity_defect,
                "leading_defect": r.leading_defect,
            })).collect::<Vec<_>>(),
            "leading_slope": b.ito.leading_slope,
            "cross_slope": b.ito.cross_slope,
            "pass": b.ito.pass,
        },
        "pass": b.pass,
    })
}

pub fn run(args: &FockArgs) -> CliResult<Outcome> {
    let battery = fock_battery()?;
    for c in &battery.checks {
        eprintln!("{} {}: defect {:.3e} (tolerance {:.1e})", Verdict::from_pass(c.pass).label(), c.name, c.defect, c.tolerance);
    }
    eprintln!(
        "{} ito scaling: slopes {:?} and {:?}",
        Verdict::from_pass(battery.ito.pass).label(),
        battery.ito.leading_slope,
        battery.ito.cross_slope
    );
    let summary = battery_json(&battery);
    let outputs = emit_json(args.out.as_deref(), &summary)?;
    Ok(Outcome {
        verdict: Verdict::from_pass(battery.pass),
        inputs: Vec::new(),
        outputs,
        seed: None,
        summary,
    })
}
