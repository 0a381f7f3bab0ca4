use ldl_core::wick::{convergence_report, factorization_check, CorrelatorSpec, Factor, SpectralLines, N_MAX};
use serde_json::{json, Value};

use crate::args::CorrelatorArgs;
use crate::error::{CliError, CliResult};
use crate::io::{complex_json, emit_json, load_model};
use crate::manifest::{Outcome, Verdict};

/// `"01"` → `(0, 1)`.
pub fn parse_pair(s: &str) -> CliResult<(usize, usize)> {
    let digits: Vec<usize> = s.trim().chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>().unwrap_or_default();
    match digits.as_slice() {
        [f, g] if *f <= 1 && *g <= 1 => Ok((*f, *g)),
        _ => Err(CliError::Usage(format!("channel pair {s:?} must be two digits from {{0, 1}}, e.g. 01"))),
    }
}

pub fn build_spec(channels: &[String], slots: Option<&[usize]>, t: f64) -> CliResult<CorrelatorSpec> {
    let pairs = channels.iter().map(|s| parse_pair(s)).collect::<CliResult<Vec<_>>>()?;
    let mut spec = CorrelatorSpec::ordered(&pairs, t);
    if let Some(slots) = slots {
        if slots.len() != pairs.len() {
            return Err(CliError::Usage(format!("{} slots for {} factors", slots.len(), pairs.len())));
        }
        spec.factors = pairs.iter().zip(slots).map(|(&(f, g), &slot)| Factor { f, g, slot }).collect();
    }
    spec.validate(N_MAX)?;
    Ok(spec)
}

pub fn convergence_json(rep: &ldl_core::wick::ConvergenceReport) -> Value {
    json!({
        "limit": complex_json(rep.limit),
        "rows": rep.rows.iter().map(|r| json!({
            "xi": r.xi,
            "exact": complex_json(r.exact),
            "abs_error": r.abs_error,
            "rel_error": r.rel_error,
        })).collect::<Vec<_>>(),
        "strictly_decreasing": rep.strictly_decreasing,
        "decade_ratios": rep.decade_ratios,
        "final_rel_error": rep.final_rel_error,
        "pass": rep.pass,
    })
}

pub fn factorization_json(rep: &ldl_core::wick::FactorizationReport) -> Value {
    json!({
        "limit_rhs": complex_json(rep.limit_rhs),
        "rows": rep.rows.iter().map(|r| json!({
            "xi": r.xi,
            "lhs": complex_json(r.lhs),
            "rhs": complex_json(r.rhs),
            "defect": r.defect,
            "rel_defect": r.rel_defect,
        })).collect::<Vec<_>>(),
        "decreasing": rep.decreasing,
        "final_rel_defect": rep.final_rel_defect,
        "pass": rep.pass,
    })
}

pub fn run(args: &CorrelatorArgs) -> CliResult<Outcome> {
    let (model, input) = load_model(&args.source, None)?;
    let lines = SpectralLines::from_model(&model, args.eta)?;
    let spec = build_spec(&args.channels, args.slots.as_deref(), args.t)?;
    let conv = convergence_report(&lines, &spec, &args.xi)?;
    let mut pass = conv.pass;
    let mut summary = json!({
        "model": model.name,
        "eta": args.eta,
        "t": args.t,
        "factors": spec.factors.iter().map(|x| json!({ "f": x.f, "g": x.g, "slot": x.slot })).collect::<Vec<_>>(),
        "convergence": convergence_json(&conv),
    });
    eprintln!(
        "{} convergence: final relative error {:.3e}, strictly decreasing {}",
        Verdict::from_pass(conv.pass).label(),
        conv.final_rel_error,
        conv.strictly_decreasing
    );
    if let Some(bin) = args.factorize_bin {
        let (f, g) = parse_pair(&args.outer)?;
        let fact = factorization_check(&lines, f, g, bin, &spec, &args.xi)?;
        pass &= fact.pass;
        eprintln!("{} factorization: final relative defect {:.3e}", Verdict::from_pass(fact.pass).label(), fact.final_rel_defect);
        summary["factorization"] = json!({ "bin": bin, "outer": [f, g], "report": factorization_json(&fact) });
    }
    summary["pass"] = json!(pass);
    let outputs = emit_json(args.out.as_deref(), &summary)?;
    Ok(Outcome {
        verdict: Verdict::from_pass(pass),
        inputs: vec![input],
        outputs,
        seed: None,
        summary,
    })
}
