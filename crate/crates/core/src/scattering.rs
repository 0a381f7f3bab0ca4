//! One-particle scattering: `T₀(E)`, `T₁(E)`, `R_{m,n}(E)` and the per-bin
//! S-matrix
//!
//! ```text
//! S_j = 1 − 2π Σ_{n,m} R_{m,n}(E_j) ⊗ |v_m(E_j)⟩⟨v_n(E_j)|
//! ```
//!
//! acting on `H_S ⊗ span{v₀(E_j), v₁(E_j)}`. The relevant subspace of each
//! bin is orthonormalised through its Gram matrix: writing `V = Q C` with
//! `Q` orthonormal and `C⁺C = G`, the block is stored in the `Q` basis where
//! `|v_m⟩⟨v_n| ↦ c_m c_n⁺`. `S` is the identity on the complement.
//!
//! Tensor ordering is system-major: index `s·r + a` for system index `s` and
//! relevant-basis index `a`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eye, herm_eig, kron, max_abs, op_norm, second_factor_element, zeros, CMat, C64};
use crate::model::{gamma_table, EnergyGrid, FormFactorSet, GammaTable, Model, SystemModel};

/// Condition number above which a T bracket counts as singular.
pub const SINGULAR_COND: f64 = 1e12;
/// Relative rank tolerance for Gram matrices (times `trace G`).
pub const GRAM_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TInverses {
    pub t0: CMat,
    pub t1: CMat,
    pub cond_t0: f64,
    pub cond_t1: f64,
}

/// The two bracketed operators whose inverses are `T₀` (with `DD⁺`) and
/// `T₁` (with `D⁺D`).
pub fn t_brackets(gamma: &CMat, d: &CMat) -> (CMat, CMat) {
    let ds = d.nrows();
    let g = |n, m| gamma[(n, m)];
    let dd = d.adjoint();
    let base = eye(ds) + &dd * g(0, 1) - d * g(1, 0);
    let det = g(0, 0) * g(1, 1) - g(1, 0) * g(0, 1);
    (&base + d * &dd * det, &base + &dd * d * det)
}

pub fn t_inverses(bin: usize, energy: f64, gamma: &CMat, d: &CMat) -> Result<TInverses> {
    let (b0, b1) = t_brackets(gamma, d);
    let invert = |b: CMat| -> Result<(CMat, f64)> {
        let cond = crate::linalg::cond(&b);
        if !(cond <= SINGULAR_COND) {
            return Err(Error::SingularTMatrix { bin, energy, cond });
        }
        let inv = b.try_inverse().ok_or(Error::SingularTMatrix { bin, energy, cond: f64::INFINITY })?;
        Ok((inv, cond))
    };
    let (t0, cond_t0) = invert(b0)?;
    let (t1, cond_t1) = invert(b1)?;
    Ok(TInverses { t0, t1, cond_t0, cond_t1 })
}

/// `R_{m,n}(E)` stored as `r[m][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ROps(pub [[CMat; 2]; 2]);

impl ROps {
    pub fn get(&self, m: usize, n: usize) -> &CMat {
        &self.0[m][n]
    }
}

pub fn r_ops(gamma: &CMat, d: &CMat, t: &TInverses) -> ROps {
    let ds = d.nrows();
    let dd = d.adjoint();
    let r00 = d * &t.t1 * &dd * gamma[(1, 1)];
    let r01 = -(d * &t.t1 * (eye(ds) + &dd * gamma[(0, 1)]));
    let r11 = &dd * &t.t0 * d * gamma[(0, 0)];
    let r10 = &dd * &t.t0 * (eye(ds) - d * gamma[(1, 0)]);
    ROps([[r00, r01], [r10, r11]])
}

/// Orthonormal basis `Q` of `span{v₀, v₁}` and coefficients `C` with `V = QC`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevantBasis {
    pub rank: usize,
    /// `r × 2`; column `m` holds the coordinates of `v_m`.
    pub coeffs: CMat,
    /// `d_j × r`.
    pub basis: CMat,
}

impl RelevantBasis {
    pub fn from_columns(v: &CMat) -> Self {
        let gram = v.adjoint() * v;
        let tr: f64 = (0..2).map(|i| gram[(i, i)].re).sum();
        if tr <= 0.0 {
            return Self { rank: 0, coeffs: zeros(0, 2), basis: zeros(v.nrows(), 0) };
        }
        let tol = GRAM_RANK_TOL * tr;
        let (vals, vecs) = herm_eig(&gram);
        let kept: Vec<usize> = (0..2).filter(|&k| vals[k] > tol).collect();
        if kept.len() == 2 {
            if let Some(chol) = gram.clone().cholesky() {
                let c = chol.l().adjoint();
                let cinv = c.clone().try_inverse().expect("Cholesky factor of a positive matrix is invertible");
                return Self { rank: 2, basis: v * cinv, coeffs: c };
            }
        }
        let rank = kept.len();
        let mut coeffs = zeros(rank, 2);
        let mut basis = zeros(v.nrows(), rank);
        for (row, &k) in kept.iter().enumerate() {
            let s = vals[k].sqrt();
            let u = vecs.column(k);
            for m in 0..2 {
                coeffs[(row, m)] = u[m].conj() * s;
            }
            basis.set_column(row, &((v * u) / C64::new(s, 0.0)));
        }
        Self { rank, coeffs, basis }
    }

    /// `c_m c_n⁺` as an `r × r` matrix.
    pub fn dyad(&self, m: usize, n: usize) -> CMat {
        self.coeffs.column(m) * self.coeffs.column(n).adjoint()
    }
}

#[derive(Debug, Clone)]
pub struct ScatteringBlock {
    pub bin: usize,
    pub energy: f64,
    pub gamma: CMat,
    pub gram: CMat,
    pub t: TInverses,
    pub r: ROps,
    pub relevant: RelevantBasis,
    /// `S_j` on `H_S ⊗ C^r` in the orthonormal relevant basis.
    pub s: CMat,
}

impl ScatteringBlock {
    pub fn dim_s(&self) -> usize {
        self.r.get(0, 0).nrows()
    }

    pub fn rank(&self) -> usize {
        self.relevant.rank
    }

    /// `(‖S⁺S − 1‖, ‖SS⁺ − 1‖)` in operator norm.
    pub fn unitarity_defect(&self) -> (f64, f64) {
        let n = self.s.nrows();
        if n == 0 {
            return (0.0, 0.0);
        }
        let id = eye(n);
        (op_norm(&(self.s.adjoint() * &self.s - &id)), op_norm(&(&self.s * self.s.adjoint() - id)))
    }
}

/// Assembles one bin from its γ matrix, the coupling and the amplitude
/// columns `V = [v₀ v₁]`.
pub fn build_block(bin: usize, energy: f64, gamma: &CMat, d: &CMat, v: &CMat) -> Result<ScatteringBlock> {
    let t = t_inverses(bin, energy, gamma, d)?;
    let r = r_ops(gamma, d, &t);
    let relevant = RelevantBasis::from_columns(v);
    let ds = d.nrows();
    let dim = ds * relevant.rank;
    let mut s = eye(dim);
    if relevant.rank > 0 {
        for m in 0..2 {
            for n in 0..2 {
                s -= kron(r.get(m, n), &relevant.dyad(m, n)) * C64::new(2.0 * PI, 0.0);
            }
        }
    }
    Ok(ScatteringBlock { bin, energy, gamma: gamma.clone(), gram: v.adjoint() * v, t, r, relevant, s })
}

#[derive(Debug, Clone)]
pub struct ScatteringData {
    pub dim_s: usize,
    pub gamma: GammaTable,
    pub blocks: Vec<ScatteringBlock>,
}

impl ScatteringData {
    /// Largest per-bin `(‖S⁺S − 1‖, ‖SS⁺ − 1‖)`.
    pub fn max_unitarity_defect(&self) -> (f64, f64) {
        self.blocks.iter().map(|b| b.unitarity_defect()).fold((0.0, 0.0), |acc, d| (acc.0.max(d.0), acc.1.max(d.1)))
    }

    /// Bins whose Gram matrix has rank below two.
    pub fn degenerate_bins(&self) -> Vec<usize> {
        self.blocks.iter().filter(|b| b.rank() < 2).map(|b| b.bin).collect()
    }

    pub fn max_condition(&self) -> f64 {
        self.blocks.iter().map(|b| b.t.cond_t0.max(b.t.cond_t1)).fold(0.0, f64::max)
    }
}

/// Builds every bin's block. Bins are processed in parallel; the first
/// singular bin (lowest index) is reported.
pub fn build_smatrix(
    system: &SystemModel,
    grid: &EnergyGrid,
    ff: &FormFactorSet,
    gamma: &GammaTable,
) -> Result<ScatteringData> {
    let d = system.coupling();
    let blocks: Vec<Result<ScatteringBlock>> = (0..grid.len())
        .into_par_iter()
        .map(|j| build_block(j, grid.bins()[j].center, gamma.at(j), d, &ff.columns(j)))
        .collect();
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScatteringData { dim_s: system.dim(), gamma: gamma.clone(), blocks })
}

pub fn build_scattering(model: &Model) -> Result<ScatteringData> {
    let gamma = gamma_table(&model.grid, &model.form_factors);
    build_smatrix(&model.system, &model.grid, &model.form_factors, &gamma)
}

/// `Θ^{n,m}_E(X)` stored as `[n][m]`.
pub type ThetaComponents = [[CMat; 2]; 2];

/// `Θ^{n,m}_E(X) = 2π Σ_{n',m'} R⁺_{n',m} X R_{m',n} G_{n'm'} − R⁺_{n,m} X − X R_{m,n}`.
pub fn theta_expanded(block: &ScatteringBlock, x: &CMat) -> ThetaComponents {
    let r = &block.r;
    let g = &block.gram;
    let comp = |n: usize, m: usize| {
        let mut acc = zeros(x.nrows(), x.ncols());
        for np in 0..2 {
            for mp in 0..2 {
                acc += r.get(np, m).adjoint() * x * r.get(mp, n) * g[(np, mp)];
            }
        }
        acc * C64::new(2.0 * PI, 0.0) - r.get(n, m).adjoint() * x - x * r.get(m, n)
    };
    [[comp(0, 0), comp(0, 1)], [comp(1, 0), comp(1, 1)]]
}

/// `S⁺(X ⊗ 1)S − X ⊗ 1` on the relevant block, evaluated as
/// `(S⁺−1)X(S−1) + (S⁺−1)X + X(S−1)` to avoid cancellation when `S ≈ 1`.
pub fn theta_direct(block: &ScatteringBlock, x: &CMat) -> CMat {
    let xi = kron(x, &eye(block.rank()));
    let sm = &block.s - eye(block.s.nrows());
    let smd = sm.adjoint();
    &smd * &xi * &sm + &smd * &xi + &xi * &sm
}

/// `2π Σ_{n,m} Θ^{n,m} ⊗ c_m c_n⁺`.
pub fn theta_from_components(block: &ScatteringBlock, comps: &ThetaComponents) -> CMat {
    let ds = block.dim_s();
    let mut out = zeros(ds * block.rank(), ds * block.rank());
    if block.rank() == 0 {
        return out;
    }
    for n in 0..2 {
        for m in 0..2 {
            out += kron(&comps[n][m], &block.relevant.dyad(m, n));
        }
    }
    out * C64::new(2.0 * PI, 0.0)
}

/// Recovers `Θ^{n,m}` from a block operator when the Gram matrix has full
/// rank.
pub fn theta_extract(block: &ScatteringBlock, op: &CMat) -> Option<ThetaComponents> {
    if block.rank() != 2 {
        return None;
    }
    let ds = block.dim_s();
    let cinv = block.relevant.coeffs.clone().try_inverse()?;
    let comp = |n: usize, m: usize| {
        let mut acc = zeros(ds, ds);
        for a in 0..2 {
            for b in 0..2 {
                acc += second_factor_element(op, ds, 2, a, b) * (cinv[(m, a)] * cinv[(n, b)].conj());
            }
        }
        acc / C64::new(2.0 * PI, 0.0)
    };
    Some([[comp(0, 0), comp(0, 1)], [comp(1, 0), comp(1, 1)]])
}

#[derive(Debug, Clone)]
pub struct ThetaReport {
    pub bin: usize,
    pub expanded: ThetaComponents,
    /// Components extracted from `S⁺XS − X` (full-rank bins only).
    pub extracted: Option<ThetaComponents>,
    /// `max |S⁺XS − X − 2πΣ Θ^{n,m} ⊗ c_m c_n⁺|` entrywise.
    pub defect: f64,
}

/// Evaluates `Θ` both ways at every bin.
pub fn theta_map(data: &ScatteringData, x: &CMat) -> Vec<ThetaReport> {
    data.blocks
        .iter()
        .map(|b| {
            let expanded = theta_expanded(b, x);
            let direct = theta_direct(b, x);
            let defect = max_abs(&(&direct - theta_from_components(b, &expanded)));
            ThetaReport { bin: b.bin, extracted: theta_extract(b, &direct), expanded, defect }
        })
        .collect()
}
