//! Finite-fugacity correlators of the rescaled number fields
//! `N_{f,g,ξ}(t) = ξ⁻¹ A⁺(S_{t/ξ} f) A(S_{t/ξ} g)` in the quasifree gas
//! state, and their ξ → 0 limits.
//!
//! The one-particle space is a direct sum of spectral lines, one per bin:
//! line `j` carries the multiplicity space `C^{d_j}`, weight `ΔE_j` and a
//! Lorentzian profile of half-width `Γ_j = η·ΔE_j` around `E_j`, so that
//!
//! ```text
//! ⟨g, K S_τ f⟩ = Σ_j ΔE_j ⟨v_g(E_j), K_j v_f(E_j)⟩ e^{iτE_j − Γ_j|τ|}
//! ```
//!
//! for any `K` commuting with the free evolution (block-diagonal per line).
//! The broadening gives the spectral measure a density, which is what makes
//! the ξ → 0 limit exist; with point lines the same-line contributions grow
//! without bound.

mod exact;
mod expsum;
mod limit;
mod report;

pub use exact::{exact_correlator, exact_correlator_detailed, pairing_count, ExactResult, PairingValue};
pub use expsum::{pairwise_sum, phase_integral, simplex_integral, PHASE_SERIES_SWITCH};
pub use limit::{block_weight, gamma_at, limit_by_blocks, limit_correlator, limit_correlator_grid, LimitResult};
pub use report::{
    convergence_report, factorization_check, ConvergenceReport, ROUNDING_FLOOR, FINAL_REL_TOL, ConvergenceRow, FactorizationReport, FactorizationRow,
};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::model::Model;

/// Default maximum number of factors.
pub const N_MAX: usize = 4;
/// Default cap on `Σ_pairings Π_contractions (#bins)`.
pub const DEFAULT_BUDGET: u128 = 50_000_000;
/// Default line broadening `Γ_j/ΔE_j`.
pub const DEFAULT_ETA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLines {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    pub damping: Vec<f64>,
    /// `[v₀(E_j), v₁(E_j)]` per line.
    pub amplitudes: Vec<[CVec; 2]>,
    /// Gas density `L_j` per line.
    pub gas: Vec<CMat>,
}

impl SpectralLines {
    pub fn from_model(model: &Model, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("line broadening {eta} must be > 0")));
        }
        let bins = model.grid.bins();
        Ok(Self {
            energies: bins.iter().map(|b| b.center).collect(),
            weights: bins.iter().map(|b| b.width).collect(),
            damping: bins.iter().map(|b| eta * b.width).collect(),
            amplitudes: model.form_factors.amplitudes().to_vec(),
            gas: model.gas.weights().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn channel(&self, n: usize) -> TestFn {
        TestFn(self.amplitudes.iter().map(|a| a[n].clone()).collect())
    }

    pub fn with_gas(&self, gas: Vec<CMat>) -> Self {
        Self { gas, ..self.clone() }
    }
}

/// A one-particle vector given by its amplitude on every line.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFn(pub Vec<CVec>);

impl TestFn {
    /// `P_b f`: the component on line `b` only.
    pub fn project(&self, bin: usize) -> Self {
        Self(self.0.iter().enumerate().map(|(j, v)| if j == bin { v.clone() } else { v * C64::new(0.0, 0.0) }).collect())
    }

    pub fn is_zero_on(&self, bin: usize) -> bool {
        self.0[bin].iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

/// One factor `N_{f,g}(t_slot)`; `f`, `g` are form-factor channels and
/// `slot` is the time rank (0 = latest time).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub f: usize,
    pub g: usize,
    pub slot: usize,
}

/// `∫_{t ≥ t_{(0)} ≥ … ≥ t_{(n−1)} ≥ 0} φ(N_{f₁,g₁}(t_{s₁}) ⋯ N_{f_n,g_n}(t_{s_n}))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSpec {
    pub factors: Vec<Factor>,
    pub t: f64,
}

impl CorrelatorSpec {
    /// Factors in time order: the first factor carries the latest time.
    pub fn ordered(channels: &[(usize, usize)], t: f64) -> Self {
        Self { factors: channels.iter().enumerate().map(|(slot, &(f, g))| Factor { f, g, slot }).collect(), t }
    }

    /// Adjoint product: reversed factor order with `f` and `g` exchanged,
    /// same time slots.
    pub fn reversed(&self) -> Self {
        Self {
            factors: self.factors.iter().rev().map(|x| Factor { f: x.g, g: x.f, slot: x.slot }).collect(),
            t: self.t,
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Time slots follow the operator order.
    pub fn is_time_ordered(&self) -> bool {
        self.factors.iter().enumerate().all(|(k, x)| x.slot == k)
    }

    pub fn validate(&self, n_max: usize) -> Result<()> {
        let n = self.factors.len();
        if n > n_max {
            return Err(Error::InvalidInput(format!("{n} factors exceed the maximum of {n_max}")));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon {} must be finite and >= 0", self.t)));
        }
        let mut seen = vec![false; n];
        for x in &self.factors {
            if x.f > 1 || x.g > 1 {
                return Err(Error::InvalidInput("channels must be 0 or 1".into()));
            }
            if x.slot >= n || seen[x.slot] {
                return Err(Error::InvalidInput("time slots must be a permutation of 0..n".into()));
            }
            seen[x.slot] = true;
        }
        Ok(())
    }
}

/// A field operator in a product: creator `A⁺(S f)` or annihilator
/// `A(S g)` at time slot `slot`. Slot 0 is the fixed horizon `t`; slots
/// `1..=n` are integrated over the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FieldOp {
    pub creator: bool,
    pub func: usize,
    pub slot: usize,
}

/// Field products built from a correlator spec: the factor at spec slot `s`
/// sits at engine slot `s + 1`.
pub(crate) fn spec_ops(spec: &CorrelatorSpec, func_of_channel: [usize; 2]) -> Vec<FieldOp> {
    spec.factors
        .iter()
        .flat_map(|x| {
            [
                FieldOp { creator: true, func: func_of_channel[x.f], slot: x.slot + 1 },
                FieldOp { creator: false, func: func_of_channel[x.g], slot: x.slot + 1 },
            ]
        })
        .collect()
}

/// Permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Cycles of a permutation, each starting at its smallest element.
pub(crate) fn cycles(perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            cyc.push(k);
            k = perm[k];
        }
        out.push(cyc);
    }
    out
}
