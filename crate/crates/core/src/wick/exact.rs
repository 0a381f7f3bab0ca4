use rayon::prelude::*;

use super::expsum::{pairwise_sum, simplex_integral};
use super::{cycles, permutations, spec_ops, CorrelatorSpec, FieldOp, SpectralLines, TestFn, DEFAULT_BUDGET, N_MAX};
use crate::error::{Error, Result};
use crate::linalg::{eye, CMat, C64};

/// Value of one Wick pairing; `perm[k]` is the creator matched with the
/// `k`-th annihilator (for correlator specs: factor `k`'s `A` with factor
/// `perm[k]`'s `A⁺`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairingValue {
    pub perm: Vec<usize>,
    pub cycles: usize,
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub value: C64,
    pub pairings: Vec<PairingValue>,
}

/// `n!` gauge-invariant pairings of `n` creators with `n` annihilators.
pub fn pairing_count(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// One line's contribution to a contraction: coefficient and the exponent
/// rate `w` of `e^{(t_c − t_a) w/ξ}`.
#[derive(Debug, Clone, Copy)]
struct LineTerm {
    coef: C64,
    rate: C64,
}

#[derive(Debug, Clone)]
struct Contraction {
    terms: Vec<LineTerm>,
    /// Gap range `lo..=hi` spanned by `t_c − t_a`, with its sign; empty
    /// for equal slots.
    span: Option<(usize, usize, f64)>,
}

struct Engine<'a> {
    lines: &'a SpectralLines,
    funcs: &'a [TestFn],
    ops: &'a [FieldOp],
    n_slots: usize,
    t: f64,
    xi: f64,
    fwd: Vec<CMat>,
    back: Vec<CMat>,
}

impl<'a> Engine<'a> {
    fn new(lines: &'a SpectralLines, funcs: &'a [TestFn], ops: &'a [FieldOp], n_slots: usize, t: f64, xi: f64) -> Result<Self> {
        let mut fwd = Vec::with_capacity(lines.len());
        let mut back = Vec::with_capacity(lines.len());
        for l in &lines.gas {
            let d = l.nrows();
            let inv = (eye(d) - l * C64::new(xi, 0.0))
                .try_inverse()
                .ok_or_else(|| Error::InvalidInput(format!("1 − ξL is singular at ξ = {xi}")))?;
            back.push(l * &inv * C64::new(xi, 0.0));
            fwd.push(inv);
        }
        Ok(Self { lines, funcs, ops, n_slots, t, xi, fwd, back })
    }

    /// Two-point function of annihilator op `ia` with creator op `ic`:
    /// backward `ξ⟨g, L(1−ξL)⁻¹ S f⟩` when the creator stands to the left,
    /// forward `⟨g, (1−ξL)⁻¹ S f⟩` otherwise.
    fn contraction(&self, ia: usize, ic: usize) -> Contraction {
        let (a, c) = (self.ops[ia], self.ops[ic]);
        let kernel = if ic < ia { &self.back } else { &self.fwd };
        let sign = match c.slot.cmp(&a.slot) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Greater => -1.0,
            std::cmp::Ordering::Equal => 0.0,
        };
        let mut terms = Vec::new();
        for j in 0..self.lines.len() {
            let vg = &self.funcs[a.func].0[j];
            let vf = &self.funcs[c.func].0[j];
            let coef = vg.dotc(&(&kernel[j] * vf)) * self.lines.weights[j];
            if coef != C64::new(0.0, 0.0) {
                let rate = C64::new(-sign * self.lines.damping[j], self.lines.energies[j]);
                terms.push(LineTerm { coef, rate });
            }
        }
        let span = match c.slot.cmp(&a.slot) {
            std::cmp::Ordering::Less => Some((c.slot + 1, a.slot, 1.0)),
            std::cmp::Ordering::Greater => Some((a.slot + 1, c.slot, -1.0)),
            std::cmp::Ordering::Equal => None,
        };
        Contraction { terms, span }
    }

    fn pairing_value(&self, pairs: &[Contraction]) -> C64 {
        let mut leaves = Vec::new();
        self.descend(pairs, 0, C64::new(1.0, 0.0), vec![C64::new(0.0, 0.0); self.n_slots], &mut leaves);
        pairwise_sum(&leaves)
    }

    // Exponents are rebuilt per branch rather than added and subtracted, so
    // gaps that cancel exactly stay exactly zero.
    fn descend(&self, pairs: &[Contraction], k: usize, coef: C64, alphas: Vec<C64>, leaves: &mut Vec<C64>) {
        if k == pairs.len() {
            leaves.push(coef * simplex_integral(&alphas, self.t));
            return;
        }
        let pair = &pairs[k];
        for term in &pair.terms {
            let mut next = alphas.clone();
            if let Some((lo, hi, sign)) = pair.span {
                let step = term.rate * (sign / self.xi);
                for a in &mut next[lo - 1..hi] {
                    *a += step;
                }
            }
            self.descend(pairs, k + 1, coef * term.coef, next, leaves);
        }
    }
}

/// Sums every Wick pairing of a field product over the simplex of its
/// integrated slots, times `prefactor`.
pub(crate) fn evaluate_ops(
    lines: &SpectralLines,
    funcs: &[TestFn],
    ops: &[FieldOp],
    n_slots: usize,
    t: f64,
    xi: f64,
    prefactor: f64,
    budget: u128,
) -> Result<ExactResult> {
    if !(0.0..1.0).contains(&xi) || xi == 0.0 {
        return Err(Error::InvalidInput(format!("fugacity {xi} must lie in (0, 1)")));
    }
    let creators: Vec<usize> = (0..ops.len()).filter(|&i| ops[i].creator).collect();
    let annihilators: Vec<usize> = (0..ops.len()).filter(|&i| !ops[i].creator).collect();
    if creators.len() != annihilators.len() {
        return Ok(ExactResult { value: C64::new(0.0, 0.0), pairings: Vec::new() });
    }
    let engine = Engine::new(lines, funcs, ops, n_slots, t, xi)?;
    let n = creators.len();
    let table: Vec<Vec<Contraction>> =
        annihilators.iter().map(|&ia| creators.iter().map(|&ic| engine.contraction(ia, ic)).collect()).collect();
    let perms = permutations(n);
    let required: u128 = perms
        .iter()
        .map(|p| p.iter().enumerate().map(|(k, &c)| table[k][c].terms.len() as u128).product::<u128>())
        .sum();
    if required > budget {
        return Err(Error::CombinatoricsOverflow { required, budget });
    }
    let pairings: Vec<PairingValue> = perms
        .into_par_iter()
        .map(|perm| {
            let pairs: Vec<Contraction> = perm.iter().enumerate().map(|(k, &c)| table[k][c].clone()).collect();
            let value = engine.pairing_value(&pairs) * prefactor;
            PairingValue { cycles: cycles(&perm).len(), perm, value }
        })
        .collect();
    let values: Vec<C64> = pairings.iter().map(|p| p.value).collect();
    Ok(ExactResult { value: pairwise_sum(&values), pairings })
}

pub fn exact_correlator_detailed(lines: &SpectralLines, spec: &CorrelatorSpec, xi: f64, budget: u128) -> Result<ExactResult> {
    spec.validate(N_MAX)?;
    let funcs = [lines.channel(0), lines.channel(1)];
    let ops = spec_ops(spec, [0, 1]);
    let n = spec.len();
    evaluate_ops(lines, &funcs, &ops, n, spec.t, xi, xi.powi(-(n as i32)), budget)
}

/// `∫_simplex φ_{L,ξ}(N_{f₁,g₁,ξ}(t₁) ⋯ N_{f_n,g_n,ξ}(t_n))` with the default
/// budget.
pub fn exact_correlator(lines: &SpectralLines, spec: &CorrelatorSpec, xi: f64) -> Result<C64> {
    Ok(exact_correlator_detailed(lines, spec, xi, DEFAULT_BUDGET)?.value)
}
