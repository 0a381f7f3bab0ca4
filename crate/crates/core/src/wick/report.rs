use super::exact::{evaluate_ops, exact_correlator};
use super::limit::limit_correlator;
use super::{spec_ops, CorrelatorSpec, FieldOp, SpectralLines, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Relative tolerance on the smallest fugacity.
pub const FINAL_REL_TOL: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub xi: f64,
    pub exact: C64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub limit: C64,
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    /// `err(ξ_k)/err(ξ_{k+1})` normalised to one decade of ξ.
    pub decade_ratios: Vec<f64>,
    pub final_rel_error: f64,
    pub pass: bool,
}

fn check_xis(xis: &[f64]) -> Result<()> {
    if xis.is_empty() || xis.windows(2).any(|w| w[1] >= w[0]) || xis.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidInput("fugacities must be strictly decreasing in (0, 1)".into()));
    }
    Ok(())
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Errors below `ROUNDING_FLOOR · scale` are treated as exact zeros.
pub const ROUNDING_FLOOR: f64 = 1e-13;

fn decreasing(errs: &[f64], scale: f64) -> bool {
    let floor = ROUNDING_FLOOR * scale.max(f64::MIN_POSITIVE);
    errs.windows(2).all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor))
}

fn decade_ratios(xis: &[f64], errs: &[f64]) -> Vec<f64> {
    xis.windows(2)
        .zip(errs.windows(2))
        .map(|(x, e)| {
            let decades = (x[0] / x[1]).log10();
            if e[1] == 0.0 {
                f64::INFINITY
            } else {
                (e[0] / e[1]).powf(1.0 / decades)
            }
        })
        .collect()
}

/// `|exact_correlator(ξ) − limit_correlator|` along a decreasing ξ list.
/// Non-convergence shows up as `pass = false`.
pub fn convergence_report(lines: &SpectralLines, spec: &CorrelatorSpec, xis: &[f64]) -> Result<ConvergenceReport> {
    check_xis(xis)?;
    let limit = limit_correlator(lines, spec)?.value;
    let mut rows = Vec::with_capacity(xis.len());
    for &xi in xis {
        let exact = exact_correlator(lines, spec, xi)?;
        let abs_error = (exact - limit).norm();
        rows.push(ConvergenceRow { xi, exact, abs_error, rel_error: relative(abs_error, limit.norm()) });
    }
    let errs: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
    let strictly_decreasing = decreasing(&errs, limit.norm());
    let final_rel_error = rows.last().map(|r| r.rel_error).unwrap_or(f64::INFINITY);
    Ok(ConvergenceReport {
        limit,
        strictly_decreasing,
        decade_ratios: decade_ratios(xis, &errs),
        final_rel_error,
        pass: strictly_decreasing && final_rel_error <= FINAL_REL_TOL,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationRow {
    pub xi: f64,
    pub lhs: C64,
    pub rhs: C64,
    pub defect: f64,
    pub rel_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub rows: Vec<FactorizationRow>,
    /// `⟨g_b, L f_b⟩ · limit_correlator(inner)`.
    pub limit_rhs: C64,
    pub decreasing: bool,
    pub final_rel_defect: f64,
    pub pass: bool,
}

/// Mixed moment with an outer pair `A⁺(P_b f)`, `A(P_b g)` at the horizon
/// `t` around the inner factors, whose times are integrated over the simplex
/// below `t`:
///
/// ```text
/// LHS = ξ^{−(n+1)} ∫ φ_{L,ξ}(A⁺(S_{t/ξ}P_b f) N(t₁) ⋯ N(t_n) A(S_{t/ξ}P_b g))
/// RHS = ΔE_b ⟨v_g, L_b(1 − ξL_b)⁻¹ v_f⟩ · exact_correlator(inner, ξ)
/// ```
pub fn factorization_check(
    lines: &SpectralLines,
    f: usize,
    g: usize,
    bin: usize,
    inner: &CorrelatorSpec,
    xis: &[f64],
) -> Result<FactorizationReport> {
    check_xis(xis)?;
    if inner.len() > 2 {
        return Err(Error::InvalidInput("the inner spec of a factorization check has at most 2 factors".into()));
    }
    inner.validate(2)?;
    if bin >= lines.len() || f > 1 || g > 1 {
        return Err(Error::InvalidInput(format!("bin {bin} or channels ({f}, {g}) out of range")));
    }
    let funcs = [lines.channel(0), lines.channel(1), lines.channel(f).project(bin), lines.channel(g).project(bin)];
    let mut ops = vec![FieldOp { creator: true, func: 2, slot: 0 }];
    ops.extend(spec_ops(inner, [0, 1]));
    ops.push(FieldOp { creator: false, func: 3, slot: 0 });
    let n = inner.len();
    let (vf, vg, l) = (&lines.amplitudes[bin][f], &lines.amplitudes[bin][g], &lines.gas[bin]);
    let pair_limit = vg.dotc(&(l * vf)) * lines.weights[bin];
    let limit_rhs = pair_limit * limit_correlator(lines, inner)?.value;

    let mut rows = Vec::with_capacity(xis.len());
    for &xi in xis {
        let lhs = evaluate_ops(lines, &funcs, &ops, n, inner.t, xi, xi.powi(-(n as i32 + 1)), DEFAULT_BUDGET)?.value;
        let d = l.nrows();
        let resolvent = (crate::linalg::eye(d) - l * C64::new(xi, 0.0))
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput(format!("1 − ξL is singular at ξ = {xi}")))?;
        let pair = vg.dotc(&(l * resolvent * vf)) * lines.weights[bin];
        let rhs = pair * exact_correlator(lines, inner, xi)?;
        let defect = (lhs - rhs).norm();
        rows.push(FactorizationRow { xi, lhs, rhs, defect, rel_defect: relative(defect, rhs.norm()) });
    }
    let errs: Vec<f64> = rows.iter().map(|r| r.defect).collect();
    let scale = rows.iter().map(|r| r.rhs.norm()).fold(limit_rhs.norm(), f64::max);
    let dec = decreasing(&errs, scale);
    let final_rel_defect = rows.last().map(|r| r.rel_defect).unwrap_or(f64::INFINITY);
    Ok(FactorizationReport { limit_rhs, decreasing: dec, final_rel_defect, pass: dec && final_rel_defect <= FINAL_REL_TOL, rows })
}
