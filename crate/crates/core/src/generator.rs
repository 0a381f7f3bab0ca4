//! Markovian generators as superoperator matrices.
//!
//! Superoperators act on column-stacked matrices: `vec(AXB) = (Bᵀ ⊗ A) vec X`.
//! The Heisenberg generator acts on observables, the Schrödinger generator
//! `ℒ_*` on density matrices; they are Hilbert–Schmidt adjoints.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    apply_superop, eye, hs_inner, kron, matrix_unit, max_abs, min_eig, sandwich, trace, unvec, validate_density,
    vec_cols, zeros, CMat, C64,
};
use crate::scattering::ScatteringData;

/// Dimension up to which evolution uses the exact superoperator exponential.
pub const EXACT_EXP_MAX_DIM: usize = 8;
/// Tolerance for accepting an initial density matrix.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GeneratorPair {
    pub dim: usize,
    /// Heisenberg generator on `vec X`.
    pub heis: CMat,
    /// `ℒ_* = heis⁺` on `vec ρ`.
    pub schr: CMat,
    /// Completely positive part of `heis` in Heisenberg form.
    pub jump: CMat,
    /// Per-bin weights `w_{nm}(E_j)` (empty for T-matrix input).
    pub weights: Vec<CMat>,
}

impl GeneratorPair {
    pub fn zero(dim: usize) -> Self {
        let z = zeros(dim * dim, dim * dim);
        Self { dim, heis: z.clone(), schr: z.clone(), jump: z, weights: Vec::new() }
    }

    fn from_heis(dim: usize, heis: CMat, jump: CMat, weights: Vec<CMat>) -> Self {
        Self { dim, schr: heis.adjoint(), heis, jump, weights }
    }

    pub fn apply_heis(&self, x: &CMat) -> CMat {
        apply_superop(&self.heis, x)
    }

    pub fn apply_schr(&self, rho: &CMat) -> CMat {
        apply_superop(&self.schr, rho)
    }

    pub fn apply_jump(&self, x: &CMat) -> CMat {
        apply_superop(&self.jump, x)
    }

    /// `e^{t·ℒ_*}` as a superoperator matrix.
    pub fn schr_propagator(&self, t: f64) -> CMat {
        (&self.schr * C64::new(t, 0.0)).exp()
    }

    pub fn heis_propagator(&self, t: f64) -> CMat {
        (&self.heis * C64::new(t, 0.0)).exp()
    }

    /// Dissipative part `Φ(X) − ½{Φ(1), X}` in Heisenberg form.
    pub fn dissipative_heis(&self) -> CMat {
        let d = self.dim;
        let phi1 = self.apply_jump(&eye(d));
        &self.jump - (sandwich(&phi1, &eye(d)) + sandwich(&eye(d), &phi1)) * C64::new(0.5, 0.0)
    }
}

/// Heisenberg-form superoperator of `Σ_{n,m} w_{nm} Θ^{n,m}` at one bin,
/// returned with its jump part.
fn bin_generator(block: &crate::scattering::ScatteringBlock, w: &CMat) -> (CMat, CMat) {
    let ds = block.dim_s();
    let id = eye(ds);
    let r = &block.r;
    let g = &block.gram;
    let mut jump = zeros(ds * ds, ds * ds);
    let mut rest = zeros(ds * ds, ds * ds);
    for n in 0..2 {
        for m in 0..2 {
            let wnm = w[(n, m)];
            if wnm == C64::new(0.0, 0.0) {
                continue;
            }
            for np in 0..2 {
                for mp in 0..2 {
                    let coef = wnm * g[(np, mp)] * (2.0 * PI);
                    if coef != C64::new(0.0, 0.0) {
                        jump += sandwich(&r.get(np, m).adjoint(), r.get(mp, n)) * coef;
                    }
                }
            }
            rest -= (sandwich(&r.get(n, m).adjoint(), &id) + sandwich(&id, r.get(m, n))) * wnm;
        }
    }
    (&jump + rest, jump)
}

/// `heis(X) = Σ_j Σ_{n,m} w_{nm}(E_j) Θ^{n,m}_{E_j}(X)` with
/// `w_{nm}(E_j) = ΔE_j ⟨v_n(E_j), L_j v_m(E_j)⟩` (see [`crate::model::bin_weights`]).
pub fn heisenberg_generator(data: &ScatteringData, weights: &[CMat]) -> Result<GeneratorPair> {
    if weights.len() != data.blocks.len() {
        return Err(Error::InvalidInput(format!("{} weights for {} bins", weights.len(), data.blocks.len())));
    }
    let d = data.dim_s;
    let parts: Vec<(CMat, CMat)> =
        data.blocks.par_iter().zip(weights.par_iter()).map(|(b, w)| bin_generator(b, w)).collect();
    let mut heis = zeros(d * d, d * d);
    let mut jump = zeros(d * d, d * d);
    for (h, j) in parts {
        heis += h;
        jump += j;
    }
    Ok(GeneratorPair::from_heis(d, heis, jump, weights.to_vec()))
}

/// One energy shell of a T-matrix input: dispersion energy, integration
/// weight, δ-window width and gas density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub energy: f64,
    pub weight: f64,
    pub width: f64,
    pub density: f64,
}

/// `T_ω(k', k)` for `k = shells[incoming]`, `k' = shells[outgoing]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TElement {
    pub omega: f64,
    pub incoming: usize,
    pub outgoing: usize,
    pub op: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TMatrixInput {
    pub dim: usize,
    pub shells: Vec<Shell>,
    pub elements: Vec<TElement>,
}

impl TMatrixInput {
    /// Shells `(j, a)` for every bin `j` and eigenvector `e_a` of the gas
    /// density on the relevant subspace, with `T_{ba} = (i/2π)⟨e_b|S_j − 1|e_a⟩`.
    /// For `D(t) = D` the resulting Boltzmann generator carries the
    /// dissipative part of the scattering route.
    pub fn from_scattering(data: &ScatteringData, grid: &crate::model::EnergyGrid, gas: &crate::model::GasState) -> Self {
        let ds = data.dim_s;
        let mut shells = Vec::new();
        let mut elements = Vec::new();
        for (block, bin) in data.blocks.iter().zip(grid.bins()) {
            let r = block.rank();
            if r == 0 {
                continue;
            }
            let q = &block.relevant.basis;
            let lrel = q.adjoint() * gas.weight(block.bin) * q;
            let (vals, vecs) = crate::linalg::herm_eig(&lrel);
            let first = shells.len();
            for &l in &vals {
                shells.push(Shell { energy: bin.center, weight: bin.width, width: bin.width, density: l.max(0.0) });
            }
            let u = kron(&eye(ds), &vecs);
            let s_eig = u.adjoint() * (&block.s - eye(ds * r)) * &u;
            for a in 0..r {
                for b in 0..r {
                    let mut op = zeros(ds, ds);
                    for x in 0..ds {
                        for y in 0..ds {
                            op[(x, y)] = s_eig[(x * r + b, y * r + a)] * C64::new(0.0, 1.0 / (2.0 * PI));
                        }
                    }
                    elements.push(TElement { omega: 0.0, incoming: first + a, outgoing: first + b, op });
                }
            }
        }
        Self { dim: ds, shells, elements }
    }
}

/// Lindblad generator of the linear Boltzmann form with jump operators
/// `√(2π L(k) w_k w_{k'} / ΔE_{k'}) · T_ω(k', k)` for energy-conserving
/// pairs `|E(k') − E(k) + ω| ≤ ΔE_{k'}/2`.
pub fn boltzmann_from_t(input: &TMatrixInput) -> Result<GeneratorPair> {
    let d = input.dim;
    for (i, s) in input.shells.iter().enumerate() {
        if !(s.density >= 0.0) {
            return Err(Error::InvalidInput(format!("shell {i}: negative gas density {}", s.density)));
        }
        if !(s.width > 0.0 && s.weight >= 0.0) {
            return Err(Error::InvalidInput(format!("shell {i}: width must be > 0 and weight >= 0")));
        }
    }
    let mut jump_schr = zeros(d * d, d * d);
    let mut jtj = zeros(d, d);
    for (k, el) in input.elements.iter().enumerate() {
        if el.op.nrows() != d || el.op.ncols() != d {
            return Err(Error::InvalidInput(format!("T element {k} is not {d}x{d}")));
        }
        let (sin, sout) = match (input.shells.get(el.incoming), input.shells.get(el.outgoing)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidInput(format!("T element {k} references a missing shell"))),
        };
        if (sout.energy - sin.energy + el.omega).abs() > sout.width / 2.0 {
            continue;
        }
        let rate = 2.0 * PI * sin.density * sin.weight * sout.weight / sout.width;
        if rate == 0.0 {
            continue;
        }
        let j = &el.op * C64::new(rate.sqrt(), 0.0);
        jump_schr += sandwich(&j, &j.adjoint());
        jtj += j.adjoint() * &j;
    }
    let half = C64::new(0.5, 0.0);
    let schr = &jump_schr - (sandwich(&jtj, &eye(d)) + sandwich(&eye(d), &jtj)) * half;
    let jump = jump_schr.adjoint();
    Ok(GeneratorPair { dim: d, heis: schr.adjoint(), schr, jump, weights: Vec::new() })
}

/// `ρ(t) = e^{tℒ_*} ρ₀`: exact exponential for `d ≤ 8`, fixed-step RK4
/// with step `dt` otherwise.
pub fn evolve_density(gen: &GeneratorPair, rho0: &CMat, t: f64, dt: f64) -> Result<CMat> {
    validate_density(rho0, STATE_TOL).map_err(Error::InvalidState)?;
    if rho0.nrows() != gen.dim {
        return Err(Error::InvalidState(format!("state is {}x{}, system dimension is {}", rho0.nrows(), rho0.ncols(), gen.dim)));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("evolution time {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    if gen.dim <= EXACT_EXP_MAX_DIM {
        return Ok(apply_superop(&gen.schr_propagator(t), rho0));
    }
    rk4_propagate(gen, rho0, t, dt)
}

/// Fixed-step classical RK4 for `dρ/dt = ℒ_*(ρ)`; the step is shrunk so
/// that it divides `t`.
pub fn rk4_propagate(gen: &GeneratorPair, rho0: &CMat, t: f64, dt: f64) -> Result<CMat> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("step {dt} must be > 0")));
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = C64::new(t / steps as f64, 0.0);
    let (two, half, sixth) = (C64::new(2.0, 0.0), h * 0.5, h / 6.0);
    let mut v = vec_cols(rho0);
    let l = &gen.schr;
    for _ in 0..steps {
        let k1 = l * &v;
        let k2 = l * (&v + &k1 * half);
        let k3 = l * (&v + &k2 * half);
        let k4 = l * (&v + &k3 * h);
        v += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    Ok(unvec(&v, gen.dim))
}

/// `|Tr(ρ₀ e^{t·heis}(X)) − Tr(e^{t·ℒ_*}(ρ₀) X)|`.
pub fn duality_check(gen: &GeneratorPair, rho0: &CMat, x: &CMat, t: f64) -> f64 {
    let xt = apply_superop(&gen.heis_propagator(t), x);
    let rt = apply_superop(&gen.schr_propagator(t), rho0);
    (trace(&(rho0 * xt)) - trace(&(rt * x))).norm()
}

/// `max |⟨ℒ_*(ρ), X⟩ − ⟨ρ, heis(X)⟩|` over matrix units.
pub fn pairing_defect(gen: &GeneratorPair) -> f64 {
    let d = gen.dim;
    let mut worst = 0.0f64;
    for (a, b) in (0..d).flat_map(|a| (0..d).map(move |b| (a, b))) {
        let rho = matrix_unit(d, a, b);
        let lrho = gen.apply_schr(&rho);
        for (c, e) in (0..d).flat_map(|c| (0..d).map(move |e| (c, e))) {
            let x = matrix_unit(d, c, e);
            worst = worst.max((hs_inner(&lrho, &x) - hs_inner(&rho, &gen.apply_heis(&x))).norm());
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct CpReport {
    pub choi_min_eig: f64,
    /// `max |M(E_ab) − (K E_ab + E_ab K⁺)|` for the remainder `M = heis − Φ`.
    pub remainder_defect: f64,
    /// `‖(K + K⁺)/2 + ½Φ(1)‖` entrywise.
    pub anticommutator_defect: f64,
    pub h_eff: CMat,
    pub pass: bool,
}

pub const CP_TOL: f64 = 1e-10;

/// Splits `heis` into its jump part `Φ` and a remainder of the form
/// `−½{Φ(1), X} + i[H_eff, X]`, reporting the Choi spectrum of `Φ`.
pub fn cp_check(gen: &GeneratorPair) -> Result<CpReport> {
    let d = gen.dim;
    let mut choi = zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            choi += kron(&matrix_unit(d, i, j), &gen.apply_jump(&matrix_unit(d, i, j)));
        }
    }
    let choi = (&choi + choi.adjoint()) * C64::new(0.5, 0.0);
    let choi_min_eig = min_eig(&choi);

    let rem = &gen.heis - &gen.jump;
    let mut q = zeros(d, d);
    for c in 0..d {
        for b in 0..d {
            let m = apply_superop(&rem, &matrix_unit(d, c, b));
            for a in 0..d {
                q[(a, c)] += m[(a, b)];
            }
        }
    }
    let tr_k = trace(&q).re / (2.0 * d as f64);
    let k = (q - eye(d) * C64::new(tr_k, 0.0)) / C64::new(d as f64, 0.0);
    let mut remainder_defect = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let e = matrix_unit(d, a, b);
            let fit = &k * &e + &e * k.adjoint();
            remainder_defect = remainder_defect.max(max_abs(&(apply_superop(&rem, &e) - fit)));
        }
    }
    let scale = 1.0 + max_abs(&gen.heis);
    if remainder_defect > 1e-8 * scale {
        return Err(Error::ShapeMismatch { defect: remainder_defect });
    }
    let phi1 = gen.apply_jump(&eye(d));
    let herm_k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
    let anticommutator_defect = max_abs(&(herm_k + phi1 * C64::new(0.5, 0.0)));
    let h_eff = (&k - k.adjoint()) / C64::new(0.0, 2.0);
    let pass = choi_min_eig >= -CP_TOL && remainder_defect <= CP_TOL * scale && anticommutator_defect <= CP_TOL * scale;
    Ok(CpReport { choi_min_eig, remainder_defect, anticommutator_defect, h_eff, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, r as re};
    use crate::model::{demo_model, DemoModel};
    use crate::scattering::build_scattering;

    fn demo_generator(which: DemoModel) -> GeneratorPair {
        let model = demo_model(which);
        let data = build_scattering(&model).unwrap();
        heisenberg_generator(&data, &model.gas_weights()).unwrap()
    }

    fn mixed_state() -> CMat {
        CMat::from_row_slice(2, 2, &[re(0.6), c(0.1, 0.2), c(0.1, -0.2), re(0.4)])
    }

    #[test]
    fn generator_is_unital_and_hermiticity_preserving() {
        let gen = demo_generator(DemoModel::TwoLevel);
        assert!(max_abs(&gen.apply_heis(&eye(2))) <= 1e-12);
        let x = CMat::from_row_slice(2, 2, &[re(0.3), c(1.0, -0.4), c(0.2, 0.7), re(-1.1)]);
        let lhs = gen.apply_heis(&x.adjoint());
        let rhs = gen.apply_heis(&x).adjoint();
        assert!(max_abs(&(lhs - rhs)) <= 1e-12);
        assert!(pairing_defect(&gen) <= 1e-12);
    }

    #[test]
    fn empty_gas_gives_zero_generator() {
        let mut model = demo_model(DemoModel::TwoLevel);
        model.gas = crate::model::GasState::empty(&model.grid);
        let data = build_scattering(&model).unwrap();
        let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
        assert_eq!(max_abs(&gen.heis), 0.0);
        assert!(cp_check(&gen).unwrap().pass);
    }

    #[test]
    fn single_bin_matches_hand_assembly_from_theta() {
        let model = demo_model(DemoModel::TwoLevel);
        let data = build_scattering(&model).unwrap();
        let weights = model.gas_weights();
        let j = 6;
        let mut mask = vec![zeros(2, 2); weights.len()];
        mask[j] = weights[j].clone();
        let gen = heisenberg_generator(&data, &mask).unwrap();
        let mut hand = zeros(4, 4);
        for (col, (a, b)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let th = crate::scattering::theta_expanded(&data.blocks[j], &matrix_unit(2, a, b));
            let mut y = zeros(2, 2);
            for n in 0..2 {
                for m in 0..2 {
                    y += &th[n][m] * weights[j][(n, m)];
                }
            }
            hand.set_column(col, &vec_cols(&y));
        }
        assert!(max_abs(&(hand - &gen.heis)) <= 1e-13);
    }

    #[test]
    fn cp_check_passes_on_demo_models() {
        for which in DemoModel::ALL {
            let rep = cp_check(&demo_generator(which)).unwrap();
            assert!(rep.pass, "{which:?}: {rep:?}");
            assert!(crate::linalg::hermiticity_defect(&rep.h_eff) <= 1e-12);
        }
    }

    #[test]
    fn evolution_preserves_trace_and_semigroup() {
        let gen = demo_generator(DemoModel::TwoLevel);
        let rho = mixed_state();
        assert_eq!(evolve_density(&gen, &rho, 0.0, 0.1).unwrap(), rho);
        let r1 = evolve_density(&gen, &rho, 1.1, 0.1).unwrap();
        let r2 = evolve_density(&gen, &evolve_density(&gen, &rho, 0.1, 0.1).unwrap(), 1.0, 0.1).unwrap();
        assert!(max_abs(&(&r1 - r2)) <= 1e-10);
        assert!((trace(&r1) - C64::new(1.0, 0.0)).norm() <= 1e-12);
        assert!(min_eig(&r1) >= -1e-8);
        assert!(duality_check(&gen, &rho, &eye(2), 1.0) <= 1e-12);
    }

    #[test]
    fn rejects_invalid_states() {
        let gen = demo_generator(DemoModel::TwoLevel);
        let bad = CMat::from_row_slice(2, 2, &[re(1.2), re(0.0), re(0.0), re(-0.2)]);
        assert!(matches!(evolve_density(&gen, &bad, 1.0, 0.1), Err(Error::InvalidState(_))));
    }

    #[test]
    fn zero_t_matrix_gives_zero_generator_and_negative_density_is_rejected() {
        let shells = vec![
            Shell { energy: 1.0, weight: 0.1, width: 0.1, density: 0.5 },
            Shell { energy: 1.0, weight: 0.1, width: 0.1, density: 0.5 },
        ];
        let input = TMatrixInput {
            dim: 2,
            shells: shells.clone(),
            elements: vec![TElement { omega: 0.0, incoming: 0, outgoing: 1, op: zeros(2, 2) }],
        };
        assert_eq!(max_abs(&boltzmann_from_t(&input).unwrap().heis), 0.0);
        let mut bad = input.clone();
        bad.shells[0].density = -1.0;
        assert!(boltzmann_from_t(&bad).is_err());
    }

    #[test]
    fn single_jump_decay_matches_closed_form() {
        // σ₋ = |0⟩⟨1|, rate 2π·L·w_in·w_out/ΔE
        let (l, w) = (0.8, 0.05);
        let shells = vec![
            Shell { energy: 2.0, weight: w, width: w, density: l },
            Shell { energy: 3.0, weight: w, width: w, density: 0.0 },
        ];
        let t_amp = c(0.3, 0.4);
        let mut op = zeros(2, 2);
        op[(0, 1)] = t_amp;
        let input = TMatrixInput { dim: 2, shells, elements: vec![TElement { omega: -1.0, incoming: 0, outgoing: 1, op }] };
        let gen = boltzmann_from_t(&input).unwrap();
        let rate = 2.0 * PI * l * w * w / w * t_amp.norm_sqr();
        let rho = CMat::from_row_slice(2, 2, &[re(0.25), c(0.2, 0.1), c(0.2, -0.1), re(0.75)]);
        for t in [0.3, 1.0, 4.0] {
            let out = evolve_density(&gen, &rho, t, 0.01).unwrap();
            assert!((out[(1, 1)].re - 0.75 * (-rate * t).exp()).abs() <= 1e-12);
            assert!((out[(0, 1)] - rho[(0, 1)] * (-rate * t / 2.0).exp()).norm() <= 1e-12);
        }
        assert!(cp_check(&gen).unwrap().pass);
    }

    #[test]
    fn route_consistency_on_demo() {
        let model = demo_model(DemoModel::TwoLevel);
        let data = build_scattering(&model).unwrap();
        let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
        let tin = TMatrixInput::from_scattering(&data, &model.grid, &model.gas);
        let boltz = boltzmann_from_t(&tin).unwrap();
        assert!(max_abs(&(gen.dissipative_heis() - boltz.dissipative_heis())) <= 1e-8);
    }

    #[test]
    fn rk4_path_agrees_with_exponential() {
        let gen = demo_generator(DemoModel::TwoLevel);
        let rho = mixed_state();
        let exact = apply_superop(&gen.schr_propagator(0.7), &rho);
        let rk = rk4_propagate(&gen, &rho, 0.7, 1e-3).unwrap();
        assert!(max_abs(&(rk - exact)) <= 1e-10);
    }
}
