//! Discretised physical model: system spectrum and coupling, energy grid,
//! form factors and the quasifree gas state.
//!
//! The one-particle energy axis is a list of bins. A bin `j` has a center
//! `E_j`, a width `ΔE_j` and a multiplicity space `C^{d_j}`. The form factor
//! `g_n` is stored as one vector `v_n(E_j) ∈ C^{d_j}` per bin, normalised as a
//! spectral density: `⟨g_n, P_{E_j} g_m⟩ = ⟨v_n(E_j), v_m(E_j)⟩` per unit
//! energy, so continuum integrals `∫dE` become `Σ_j ΔE_j`.

mod demo;
mod file;
mod gamma;

pub use demo::{demo_model, DemoModel};
pub use file::{parse_model, parse_model_file, write_model, ModelFile};
pub use gamma::{gamma_table, principal_value, principal_value_at, GammaTable};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, hermiticity_defect, is_finite, zeros, CMat, CVec, C64, ONE};

/// Grouping tolerance for Bohr frequencies (absolute, energy units).
pub const BOHR_TOL: f64 = 1e-9;

/// Test-particle Hamiltonian `H_S = Σ ε_ℓ P_ℓ` in its eigenbasis, plus the
/// coupling operator `D`.
///
/// Basis vector `i` belongs to the eigenspace `labels[i]`, whose energy is
/// `eigenvalues[labels[i]]`. Distinct labels may share an energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    eigenvalues: Vec<f64>,
    labels: Vec<usize>,
    coupling: CMat,
}

impl SystemModel {
    pub fn new(eigenvalues: Vec<f64>, labels: Vec<usize>, coupling: CMat) -> Result<Self> {
        let d = labels.len();
        if d == 0 {
            return Err(Error::InvalidModel("system dimension must be at least 1".into()));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidModel("eigenvalues must be finite".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= eigenvalues.len()) {
            return Err(Error::InvalidModel(format!(
                "label {bad} has no eigenvalue ({} given)",
                eigenvalues.len()
            )));
        }
        if coupling.nrows() != d || coupling.ncols() != d {
            return Err(Error::InvalidModel(format!(
                "coupling is {}x{}, system dimension is {d}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if !is_finite(&coupling) {
            return Err(Error::InvalidModel("coupling has non-finite entries".into()));
        }
        Ok(Self { eigenvalues, labels, coupling })
    }

    /// Non-degenerate system with one basis vector per eigenvalue.
    pub fn diagonal(eigenvalues: Vec<f64>, coupling: CMat) -> Result<Self> {
        let labels = (0..eigenvalues.len()).collect();
        Self::new(eigenvalues, labels, coupling)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn coupling(&self) -> &CMat {
        &self.coupling
    }

    pub fn with_coupling(&self, coupling: CMat) -> Result<Self> {
        Self::new(self.eigenvalues.clone(), self.labels.clone(), coupling)
    }

    /// Energy of basis vector `i`.
    pub fn level_energy(&self, i: usize) -> f64 {
        self.eigenvalues[self.labels[i]]
    }

    pub fn projector(&self, label: usize) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| if i == j && self.labels[i] == label { ONE } else { C64::default() })
    }

    pub fn hamiltonian(&self) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| if i == j { C64::new(self.level_energy(i), 0.0) } else { C64::default() })
    }

    /// The Bohr set `{ε_m − ε_k}` over all label pairs, clustered with
    /// [`BOHR_TOL`] and sorted.
    pub fn bohr_frequencies(&self) -> Vec<f64> {
        let used: Vec<f64> = {
            let mut seen: Vec<usize> = self.labels.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.into_iter().map(|l| self.eigenvalues[l]).collect()
        };
        let mut diffs: Vec<f64> = used.iter().flat_map(|a| used.iter().map(move |b| b - a)).collect();
        diffs.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for w in diffs {
            match out.last() {
                Some(&last) if (w - last).abs() <= BOHR_TOL => {}
                _ => out.push(w),
            }
        }
        out
    }
}

/// One Bohr component of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrComponent {
    pub omega: f64,
    pub op: CMat,
}

fn split_by_frequency(model: &SystemModel, op: &CMat, freq: impl Fn(f64, f64) -> f64) -> Vec<BohrComponent> {
    let d = model.dim();
    let mut comps: Vec<BohrComponent> =
        model.bohr_frequencies().into_iter().map(|omega| BohrComponent { omega, op: zeros(d, d) }).collect();
    for i in 0..d {
        for j in 0..d {
            let w = freq(model.level_energy(i), model.level_energy(j));
            let slot = comps
                .iter_mut()
                .find(|c| (c.omega - w).abs() <= BOHR_TOL)
                .expect("every level difference is in the Bohr set");
            slot.op[(i, j)] = op[(i, j)];
        }
    }
    comps
}

/// `D_ω = Σ_{k,m: ε_m − ε_k = ω} P_k D P_m`, so that `D(t) = Σ_ω D_ω e^{−itω}`.
///
/// Every frequency of the Bohr set is returned, including those whose
/// component vanishes.
pub fn bohr_decompose(model: &SystemModel) -> Vec<BohrComponent> {
    split_by_frequency(model, model.coupling(), |ket, bra| bra - ket)
}

/// `T_ω = Σ_{m,n: ε_m − ε_n = ω} T_{mn} |m⟩⟨n|` for a system operator given
/// in the eigenbasis (the convention of T-matrix jump operators).
pub fn raising_components(model: &SystemModel, op: &CMat) -> Vec<BohrComponent> {
    split_by_frequency(model, op, |ket, bra| ket - bra)
}

/// Nonzero components only.
pub fn support(components: &[BohrComponent]) -> Vec<&BohrComponent> {
    components.iter().filter(|c| c.op.iter().any(|z| z.norm() > 0.0)).collect()
}

/// A single energy bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub center: f64,
    pub width: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    bins: Vec<Bin>,
}

impl EnergyGrid {
    pub fn new(bins: Vec<Bin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidModel("energy grid needs at least one bin".into()));
        }
        for (j, b) in bins.iter().enumerate() {
            if !b.center.is_finite() || !(b.width > 0.0 && b.width.is_finite()) {
                return Err(Error::InvalidModel(format!("bin {j}: center must be finite and width > 0")));
            }
            if b.multiplicity == 0 {
                return Err(Error::InvalidModel(format!("bin {j}: multiplicity must be >= 1")));
            }
        }
        for (j, w) in bins.windows(2).enumerate() {
            if w[1].center <= w[0].center {
                return Err(Error::InvalidModel(format!("bin {}: centers must be strictly increasing", j + 1)));
            }
            if w[0].center + 0.5 * w[0].width > w[1].center - 0.5 * w[1].width + 1e-12 * w[1].width {
                return Err(Error::InvalidModel(format!("bins {j} and {} overlap", j + 1)));
            }
        }
        Ok(Self { bins })
    }

    /// `n` equal bins of width `(hi − lo)/n` covering `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize, multiplicity: usize) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(Error::InvalidModel("uniform grid needs n >= 1 and hi > lo".into()));
        }
        let width = (hi - lo) / n as f64;
        Self::new(
            (0..n)
                .map(|j| Bin { center: lo + (j as f64 + 0.5) * width, width, multiplicity })
                .collect(),
        )
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.center)
    }
}

/// Spectral amplitudes of the two form factors `g₀`, `g₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorSet {
    amplitudes: Vec<[CVec; 2]>,
}

impl FormFactorSet {
    pub fn new(grid: &EnergyGrid, amplitudes: Vec<[CVec; 2]>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidModel(format!(
                "{} amplitude entries for {} bins",
                amplitudes.len(),
                grid.len()
            )));
        }
        for (j, (pair, bin)) in amplitudes.iter().zip(grid.bins()).enumerate() {
            for (n, v) in pair.iter().enumerate() {
                if v.len() != bin.multiplicity {
                    return Err(Error::InvalidModel(format!(
                        "bin {j}: g{n} has length {}, multiplicity is {}",
                        v.len(),
                        bin.multiplicity
                    )));
                }
                if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvalidModel(format!("bin {j}: g{n} has non-finite entries")));
                }
            }
        }
        Ok(Self { amplitudes })
    }

    /// Builds amplitudes from per-channel profile functions of the bin.
    pub fn from_fn(grid: &EnergyGrid, mut f: impl FnMut(usize, &Bin) -> [CVec; 2]) -> Result<Self> {
        let amps = grid.bins().iter().enumerate().map(|(j, b)| f(j, b)).collect();
        Self::new(grid, amps)
    }

    pub fn amplitude(&self, bin: usize, channel: usize) -> &CVec {
        &self.amplitudes[bin][channel]
    }

    pub fn amplitudes(&self) -> &[[CVec; 2]] {
        &self.amplitudes
    }

    /// `V_j = [v₀(E_j) v₁(E_j)]`, a `d_j × 2` matrix.
    pub fn columns(&self, bin: usize) -> CMat {
        let [v0, v1] = &self.amplitudes[bin];
        CMat::from_columns(&[v0.clone(), v1.clone()])
    }

    /// `G_{nm}(E_j) = ⟨v_n(E_j), v_m(E_j)⟩`.
    pub fn gram(&self, bin: usize) -> CMat {
        let [v0, v1] = &self.amplitudes[bin];
        let g01 = v0.dotc(v1);
        CMat::from_row_slice(2, 2, &[C64::new(v0.norm_squared(), 0.0), g01, g01.conj(), C64::new(v1.norm_squared(), 0.0)])
    }

    /// `‖g_n‖² = Σ_j ΔE_j G_{nn}(E_j)`.
    pub fn norm_sqr(&self, grid: &EnergyGrid, channel: usize) -> f64 {
        grid.bins().iter().enumerate().map(|(j, b)| b.width * self.amplitudes[j][channel].norm_squared()).sum()
    }
}

/// Quasifree gas state: fugacity `ξ` and the per-bin density operator `L_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GasState {
    fugacity: f64,
    weights: Vec<CMat>,
}

impl GasState {
    pub fn new(grid: &EnergyGrid, fugacity: f64, weights: Vec<CMat>) -> Result<Self> {
        if !(0.0..1.0).contains(&fugacity) {
            return Err(Error::InvalidModel(format!("fugacity {fugacity} outside [0, 1)")));
        }
        if weights.len() != grid.len() {
            return Err(Error::InvalidModel(format!("{} gas weights for {} bins", weights.len(), grid.len())));
        }
        for (j, (l, bin)) in weights.iter().zip(grid.bins()).enumerate() {
            let d = bin.multiplicity;
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::InvalidModel(format!(
                    "bin {j}: gas weight is {}x{}, multiplicity is {d}",
                    l.nrows(),
                    l.ncols()
                )));
            }
            if hermiticity_defect(l) > 1e-12 * (1.0 + crate::linalg::max_abs(l)) {
                return Err(Error::InvalidModel(format!("bin {j}: gas weight is not Hermitian")));
            }
            let (vals, _) = herm_eig(l);
            let (lo, hi) = (vals[0], vals[vals.len() - 1]);
            if lo < -1e-12 {
                return Err(Error::InvalidModel(format!("bin {j}: gas weight has negative eigenvalue {lo:.3e}")));
            }
            if fugacity * hi >= 1.0 {
                return Err(Error::InvalidModel(format!(
                    "bin {j}: spectral radius of ξL is {:.6} >= 1",
                    fugacity * hi
                )));
            }
        }
        Ok(Self { fugacity, weights })
    }

    /// Gibbs gas `L(E_j) = e^{−βE_j}·1`.
    pub fn gibbs(grid: &EnergyGrid, beta: f64, fugacity: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidModel(format!("inverse temperature {beta} must be finite and >= 0")));
        }
        let weights = grid
            .bins()
            .iter()
            .map(|b| CMat::identity(b.multiplicity, b.multiplicity) * C64::new((-beta * b.center).exp(), 0.0))
            .collect();
        Self::new(grid, fugacity, weights)
    }

    /// `L = 0`.
    pub fn empty(grid: &EnergyGrid) -> Self {
        Self {
            fugacity: 0.0,
            weights: grid.bins().iter().map(|b| zeros(b.multiplicity, b.multiplicity)).collect(),
        }
    }

    pub fn fugacity(&self) -> f64 {
        self.fugacity
    }

    pub fn weight(&self, bin: usize) -> &CMat {
        &self.weights[bin]
    }

    pub fn weights(&self) -> &[CMat] {
        &self.weights
    }

    pub fn with_fugacity(&self, grid: &EnergyGrid, fugacity: f64) -> Result<Self> {
        Self::new(grid, fugacity, self.weights.clone())
    }
}

/// Gibbs occupation `n(E) = ξe^{−βE}/(1 − ξe^{−βE})`.
pub fn gibbs_density(energy: f64, beta: f64, fugacity: f64) -> Result<f64> {
    let q = fugacity * (-beta * energy).exp();
    if !(q.is_finite() && (0.0..1.0).contains(&q)) || fugacity < 0.0 {
        return Err(Error::InvalidInput(format!("ξe^(-βE) = {q} must lie in [0, 1)")));
    }
    Ok(q / (1.0 - q))
}

/// The complete input of the low-density pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub system: SystemModel,
    pub grid: EnergyGrid,
    pub form_factors: FormFactorSet,
    pub gas: GasState,
}

impl Model {
    /// Per-bin weights `w_{nm}(E_j) = ΔE_j ⟨v_n(E_j), L_j v_m(E_j)⟩`.
    pub fn gas_weights(&self) -> Vec<CMat> {
        bin_weights(&self.grid, &self.form_factors, &self.gas)
    }
}

/// Per-bin weights `w_{nm}(E_j) = ΔE_j ⟨v_n(E_j), L_j v_m(E_j)⟩` entering the
/// reduced master equation.
pub fn bin_weights(grid: &EnergyGrid, ff: &FormFactorSet, gas: &GasState) -> Vec<CMat> {
    grid.bins()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let v = ff.columns(j);
            v.adjoint() * gas.weight(j) * v * C64::new(b.width, 0.0)
        })
        .collect()
}
