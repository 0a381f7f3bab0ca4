use std::f64::consts::PI;

use super::{EnergyGrid, FormFactorSet};
use crate::linalg::{CMat, C64};

/// `γ_{nm}(E_j) ≡ γ_{g_n, g_m}(E_j)` at every bin, a 2×2 matrix per bin.
///
/// `γ_{g,f}(E) = ∫_{−∞}^0 dt ⟨g, S_t f⟩ e^{−itE}` splits into the Hermitian
/// part `π⟨g, P_E f⟩` and `−i·PV∫dE' ⟨g, P_{E'} f⟩/(E' − E)`. The Hermitian
/// part is stored exactly as `π·G(E_j)`; only the principal value is
/// discretised (midpoint rule, singular bin dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    values: Vec<CMat>,
    hermitian: Vec<CMat>,
}

impl GammaTable {
    /// Table from explicit values; the Hermitian part is taken from them.
    pub fn from_values(values: Vec<CMat>) -> Self {
        let hermitian = values.iter().map(|g| (g + g.adjoint()) * C64::new(0.5, 0.0)).collect();
        Self { values, hermitian }
    }

    /// The stored Hermitian part, `π·G(E_j)` for tables built by [`gamma_table`].
    pub fn hermitian_part(&self, bin: usize) -> &CMat {
        &self.hermitian[bin]
    }

    pub fn at(&self, bin: usize) -> &CMat {
        &self.values[bin]
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `γ_{nm}` at one bin.
    pub fn entry(&self, bin: usize, n: usize, m: usize) -> C64 {
        self.values[bin][(n, m)]
    }
}

/// Midpoint principal-value sum `PV Σ_{j'} ΔE_{j'} G(E_{j'})/(E_{j'} − E_j)`.
pub fn principal_value(grid: &EnergyGrid, grams: &[CMat], bin: usize) -> CMat {
    let e = grid.bins()[bin].center;
    let mut acc = CMat::zeros(2, 2);
    for (k, b) in grid.bins().iter().enumerate() {
        if k == bin {
            continue;
        }
        acc += &grams[k] * C64::new(b.width / (b.center - e), 0.0);
    }
    acc
}

/// Midpoint principal value at an arbitrary energy; bins centred on
/// `energy` are skipped. At a bin centre this is [`principal_value`].
///
/// At bin centres the dropped bin costs `ΔE·G'(E)`, first order in the bin
/// width; between centres (e.g. on bin boundaries, which nest under
/// refinement) the rule is second order.
pub fn principal_value_at(grid: &EnergyGrid, ff: &FormFactorSet, energy: f64) -> CMat {
    let mut acc = CMat::zeros(2, 2);
    for (k, b) in grid.bins().iter().enumerate() {
        let dist = b.center - energy;
        if dist.abs() <= 1e-12 * b.width {
            continue;
        }
        acc += ff.gram(k) * C64::new(b.width / dist, 0.0);
    }
    acc
}

pub fn gamma_table(grid: &EnergyGrid, ff: &FormFactorSet) -> GammaTable {
    let grams: Vec<CMat> = (0..grid.len()).map(|j| ff.gram(j)).collect();
    let hermitian: Vec<CMat> = grams.iter().map(|g| g * C64::new(PI, 0.0)).collect();
    let values = (0..grid.len())
        .map(|j| &hermitian[j] - principal_value(grid, &grams, j) * C64::new(0.0, 1.0))
        .collect();
    GammaTable { values, hermitian }
}
