//! ξ → 0 limits of the integrated correlators.
//!
//! A pairing survives the limit iff every cycle of annihilator → creator
//! contractions contains exactly one contraction with the creator to the
//! left, and the factors of each cycle occupy consecutive time slots. Each
//! such cycle collapses to one time; `b` cycles leave `t^b/b!` of free
//! simplex volume times the product of the cycle weights.

use super::{cycles, permutations, CorrelatorSpec, SpectralLines, TestFn, N_MAX};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::model::{EnergyGrid, FormFactorSet, GammaTable, GasState};

#[derive(Debug, Clone, PartialEq)]
pub struct LimitResult {
    pub value: C64,
    /// `(perm, cycles, value)` for every surviving pairing.
    pub terms: Vec<(Vec<usize>, usize, C64)>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `γ_{g,f}(z) = Σ_l ΔE_l ⟨v_g, v_f⟩_l / (Γ_l + i(E_l − z))`, the causal
/// transform `∫_{−∞}^0 dτ ⟨g, S_τ f⟩ e^{−iτz}` of the line model, valid for
/// `Im z > −min Γ`.
pub fn gamma_at(lines: &SpectralLines, g: &TestFn, f: &TestFn, z: C64) -> C64 {
    (0..lines.len())
        .map(|l| {
            let dens = g.0[l].dotc(&f.0[l]) * lines.weights[l];
            dens / (C64::new(lines.damping[l], 0.0) + C64::new(0.0, 1.0) * (lines.energies[l] - z))
        })
        .sum()
}

/// Weight of a connected block `N_{f₁,g₁} ⋯ N_{f_k,g_k}`:
/// `Σ_j ΔE_j ⟨v_{g_k}, L_j v_{f₁}⟩ Π_{m<k} γ_{g_m,f_{m+1}}(E_j + iΓ_j)`.
pub fn block_weight(lines: &SpectralLines, channels: &[(usize, usize)]) -> C64 {
    let k = channels.len();
    if k == 0 {
        return C64::new(1.0, 0.0);
    }
    let fns = [lines.channel(0), lines.channel(1)];
    (0..lines.len())
        .map(|j| {
            let occ = fns[channels[k - 1].1].0[j].dotc(&(&lines.gas[j] * &fns[channels[0].0].0[j])) * lines.weights[j];
            if occ == C64::new(0.0, 0.0) {
                return occ;
            }
            let z = C64::new(lines.energies[j], lines.damping[j]);
            (0..k - 1).fold(occ, |acc, m| acc * gamma_at(lines, &fns[channels[m].1], &fns[channels[m + 1].0], z))
        })
        .sum()
}

/// Limit correlator for the line model. Handles arbitrary time-slot
/// assignments by evaluating each surviving cycle directly: its internal
/// gaps are integrated over `[0, ∞)` in units of ξ.
pub fn limit_correlator(lines: &SpectralLines, spec: &CorrelatorSpec) -> Result<LimitResult> {
    spec.validate(N_MAX)?;
    let n = spec.len();
    let fns = [lines.channel(0), lines.channel(1)];
    let mut terms = Vec::new();
    for perm in permutations(n) {
        let cyc = cycles(&perm);
        let mut weight = C64::new(1.0, 0.0);
        let mut survives = true;
        for c in &cyc {
            // factor a's annihilator pairs with factor perm[a]'s creator;
            // the creator is to the left iff perm[a] ≤ a
            let backward = c.iter().filter(|&&a| perm[a] <= a).count();
            let slots: Vec<usize> = c.iter().map(|&a| spec.factors[a].slot).collect();
            let (lo, hi) = (*slots.iter().min().unwrap(), *slots.iter().max().unwrap());
            if backward != 1 || hi - lo + 1 != c.len() {
                survives = false;
                break;
            }
            weight *= cycle_weight(lines, spec, &fns, &perm, c, lo);
        }
        if survives {
            let b = cyc.len();
            let value = weight * spec.t.powi(b as i32) / factorial(b);
            terms.push((perm, b, value));
        }
    }
    let value = terms.iter().map(|t| t.2).sum();
    Ok(LimitResult { value, terms })
}

fn cycle_weight(lines: &SpectralLines, spec: &CorrelatorSpec, fns: &[TestFn; 2], perm: &[usize], cycle: &[usize], lo: usize) -> C64 {
    let k = cycle.len();
    // per contraction: list of (coef, rate, gap span)
    let contractions: Vec<(Vec<(C64, C64)>, Option<(usize, usize, f64)>)> = cycle
        .iter()
        .map(|&a| {
            let c = perm[a];
            let (fa, fc) = (spec.factors[a], spec.factors[c]);
            let backward = c <= a;
            let sign = match fc.slot.cmp(&fa.slot) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Greater => -1.0,
                std::cmp::Ordering::Equal => 0.0,
            };
            let mut list = Vec::new();
            for j in 0..lines.len() {
                let vg = &fns[fa.g].0[j];
                let vf = &fns[fc.f].0[j];
                let inner = if backward { vg.dotc(&(&lines.gas[j] * vf)) } else { vg.dotc(vf) };
                let coef = inner * lines.weights[j];
                if coef != C64::new(0.0, 0.0) {
                    list.push((coef, C64::new(-sign * lines.damping[j], lines.energies[j])));
                }
            }
            let span = match fc.slot.cmp(&fa.slot) {
                std::cmp::Ordering::Less => Some((fc.slot + 1 - lo, fa.slot - lo, 1.0)),
                std::cmp::Ordering::Greater => Some((fa.slot + 1 - lo, fc.slot - lo, -1.0)),
                std::cmp::Ordering::Equal => None,
            };
            (list, span)
        })
        .collect();

    fn walk(
        cs: &[(Vec<(C64, C64)>, Option<(usize, usize, f64)>)],
        k: usize,
        coef: C64,
        alphas: Vec<C64>,
        acc: &mut C64,
    ) {
        if k == cs.len() {
            // ∫_0^∞ e^{α u} du = −1/α for each internal gap
            let mut v = coef;
            for a in &alphas {
                debug_assert!(a.re < 0.0, "internal gap is not damped");
                v /= -a;
            }
            *acc += v;
            return;
        }
        let (list, span) = &cs[k];
        for &(c, rate) in list {
            let mut next = alphas.clone();
            if let Some((lo, hi, sign)) = *span {
                for a in &mut next[lo - 1..hi] {
                    *a += rate * sign;
                }
            }
            walk(cs, k + 1, coef * c, next, acc);
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    walk(&contractions, 0, C64::new(1.0, 0.0), vec![C64::new(0.0, 0.0); k - 1], &mut acc);
    acc
}

/// Limit correlator on the energy grid with point bins, using the midpoint
/// γ table: connected blocks weigh
/// `Σ_j ΔE_j ⟨v_{g_last}, L_j v_{f_first}⟩ Π γ_{g_m,f_{m+1}}(E_j)`.
/// Only time-ordered specs are supported.
pub fn limit_correlator_grid(
    grid: &EnergyGrid,
    ff: &FormFactorSet,
    gas: &GasState,
    gamma: &GammaTable,
    spec: &CorrelatorSpec,
) -> Result<C64> {
    spec.validate(N_MAX)?;
    if !spec.is_time_ordered() {
        return Err(Error::InvalidInput("the grid limit needs factors in time order".into()));
    }
    let ch: Vec<(usize, usize)> = spec.factors.iter().map(|x| (x.f, x.g)).collect();
    let weight = |p: usize, q: usize| -> C64 {
        (0..grid.len())
            .map(|j| {
                let occ = ff.amplitude(j, ch[q].1).dotc(&(gas.weight(j) * ff.amplitude(j, ch[p].0)))
                    * grid.bins()[j].width;
                (p..q).fold(occ, |acc, m| acc * gamma.entry(j, ch[m].1, ch[m + 1].0))
            })
            .sum()
    };
    Ok(compositions(ch.len(), spec.t, &weight))
}

/// `Σ_{compositions} t^b/b! Π_blocks w(block)` over splittings of `0..n`
/// into consecutive blocks.
fn compositions(n: usize, t: f64, weight: &dyn Fn(usize, usize) -> C64) -> C64 {
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    // bit m set: a block boundary after factor m
    for mask in 0u32..(1 << (n - 1)) {
        let mut start = 0;
        let mut prod = C64::new(1.0, 0.0);
        let mut b = 0;
        for m in 0..n {
            if m == n - 1 || mask & (1 << m) != 0 {
                prod *= weight(start, m);
                b += 1;
                start = m + 1;
            }
        }
        total += prod * t.powi(b) / factorial(b as usize);
    }
    total
}

/// Limit via consecutive blocks and [`block_weight`] (time-ordered specs).
pub fn limit_by_blocks(lines: &SpectralLines, spec: &CorrelatorSpec) -> C64 {
    let ch: Vec<(usize, usize)> = spec.factors.iter().map(|x| (x.f, x.g)).collect();
    compositions(ch.len(), spec.t, &|p, q| block_weight(lines, &ch[p..=q]))
}
