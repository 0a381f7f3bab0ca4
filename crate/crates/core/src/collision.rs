//! Poisson collision model realising `dU_t = dN_t(S − 1)U_t`.
//!
//! Each collision draws a gas particle from the unnormalised one-particle
//! operator `ρ̃ = ⊕_j ρ̃_j`, `ρ̃_j = (ΔE_j/2π)·Q_j⁺ L_j Q_j` on the
//! orthonormalised relevant subspace of bin `j`, scatters it with `S_j`
//! and traces it out. Collisions arrive at rate `λ = Tr ρ̃`, so that
//! `λ(E_{ρ₁}[S⁺(X⊗1)S] − X)` is the reduced Heisenberg generator.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generator::GeneratorPair;
use crate::linalg::{
    apply_superop, eye, herm_eig, kron, matrix_unit, max_abs, sandwich, second_factor_element, validate_density, zeros,
    CMat, C64,
};
use crate::model::{EnergyGrid, GasState};
use crate::scattering::ScatteringData;

/// Rates at or below this count as an empty gas.
pub const EMPTY_RATE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelStatus {
    Active,
    /// `λ ≤ 1e−15`: no collisions, free evolution.
    EmptyGas,
}

/// One incoming component of a bin: probability weight `p_a` (unnormalised)
/// and the CPTP collision channel on the system.
#[derive(Debug, Clone)]
pub struct Channel {
    pub bin: usize,
    pub component: usize,
    pub weight: f64,
    /// Schrödinger superoperator `ρ ↦ Σ_b K_b ρ K_b⁺`.
    pub superop: CMat,
}

#[derive(Debug, Clone)]
pub struct CollisionKernel {
    pub dim_s: usize,
    pub rate: f64,
    pub status: KernelStatus,
    /// `(bin, ρ̃_j)` for every bin with a nonzero relevant subspace.
    pub densities: Vec<(usize, CMat)>,
    /// `S_j` per entry of `densities`.
    pub blocks: Vec<CMat>,
    pub channels: Vec<Channel>,
}

pub fn build_kernel(data: &ScatteringData, grid: &EnergyGrid, gas: &GasState) -> Result<CollisionKernel> {
    if grid.len() != data.blocks.len() || gas.weights().len() != grid.len() {
        return Err(Error::InvalidInput("scattering data, grid and gas disagree on the bin count".into()));
    }
    let ds = data.dim_s;
    let mut densities = Vec::new();
    let mut blocks = Vec::new();
    let mut channels = Vec::new();
    let mut rate = 0.0;
    for (block, bin) in data.blocks.iter().zip(grid.bins()) {
        let r = block.rank();
        if r == 0 {
            continue;
        }
        let q = &block.relevant.basis;
        let rho = q.adjoint() * gas.weight(block.bin) * q * C64::new(bin.width / (2.0 * PI), 0.0);
        let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let (vals, vecs) = herm_eig(&rho);
        for (a, &p) in vals.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let e_a = kron(&eye(ds), &vecs.columns(a, 1).into_owned());
            let mut superop = zeros(ds * ds, ds * ds);
            for b in 0..r {
                let e_b = kron(&eye(ds), &vecs.columns(b, 1).into_owned());
                let k = e_b.adjoint() * &block.s * &e_a;
                superop += sandwich(&k, &k.adjoint());
            }
            rate += p;
            channels.push(Channel { bin: block.bin, component: a, weight: p, superop });
        }
        densities.push((block.bin, rho));
        blocks.push(block.s.clone());
    }
    let status = if rate <= EMPTY_RATE { KernelStatus::EmptyGas } else { KernelStatus::Active };
    if status == KernelStatus::EmptyGas {
        rate = 0.0;
        channels.clear();
    }
    Ok(CollisionKernel { dim_s: ds, rate, status, densities, blocks, channels })
}

impl CollisionKernel {
    /// The normalised gas particle state `ρ₁ = ρ̃/λ` as a block-diagonal
    /// matrix over the relevant subspaces.
    pub fn particle_density(&self) -> CMat {
        let n: usize = self.densities.iter().map(|(_, m)| m.nrows()).sum();
        let mut out = zeros(n, n);
        if self.rate == 0.0 {
            return out;
        }
        let mut off = 0;
        for (_, m) in &self.densities {
            let k = m.nrows();
            out.view_mut((off, off), (k, k)).copy_from(&(m / C64::new(self.rate, 0.0)));
            off += k;
        }
        out
    }

    /// One-collision map `M(ρ) = λ⁻¹ Σ_j Tr₁[S_j(ρ ⊗ ρ̃_j)S_j⁺]` as a
    /// superoperator (identity for an empty gas).
    pub fn collision_superop(&self) -> CMat {
        let d = self.dim_s;
        if self.rate == 0.0 {
            return eye(d * d);
        }
        let mut m = zeros(d * d, d * d);
        for ch in &self.channels {
            m += &ch.superop * C64::new(ch.weight / self.rate, 0.0);
        }
        m
    }

    pub fn collide(&self, rho: &CMat) -> CMat {
        apply_superop(&self.collision_superop(), rho)
    }

    /// `λ(M − id)` as a Schrödinger superoperator.
    pub fn schr_generator(&self) -> CMat {
        let d = self.dim_s;
        (self.collision_superop() - eye(d * d)) * C64::new(self.rate, 0.0)
    }

    /// `λ(E_{ρ₁}[S⁺(X⊗1)S] − X)` evaluated by partial traces over the block
    /// matrices.
    pub fn heis_action(&self, x: &CMat) -> CMat {
        let ds = self.dim_s;
        let mut out = -x * C64::new(self.rate, 0.0);
        if self.rate == 0.0 {
            return zeros(ds, ds);
        }
        for ((_, rho), s) in self.densities.iter().zip(&self.blocks) {
            let r = rho.nrows();
            let y = s.adjoint() * kron(x, &eye(r)) * s;
            for a in 0..r {
                for b in 0..r {
                    if rho[(b, a)] != C64::new(0.0, 0.0) {
                        out += second_factor_element(&y, ds, r, a, b) * rho[(b, a)];
                    }
                }
            }
        }
        out
    }
}

/// `max_{a,b} |λ(E[S⁺E_ab S] − E_ab) − heis(E_ab)|`.
pub fn generator_identity_defect(kernel: &CollisionKernel, gen: &GeneratorPair) -> f64 {
    let d = kernel.dim_s;
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let x = matrix_unit(d, a, b);
            worst = worst.max(max_abs(&(kernel.heis_action(&x) - gen.apply_heis(&x))));
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct PoissonSeries {
    pub rho: CMat,
    pub terms: usize,
    pub tail: f64,
}

/// `Σ_k e^{−λt}(λt)^k/k! M^k(ρ₀)`, truncated once the remaining Poisson
/// mass is below `tail_tol`.
pub fn poisson_series(kernel: &CollisionKernel, rho0: &CMat, t: f64, tail_tol: f64) -> Result<PoissonSeries> {
    validate_density(rho0, 1e-10).map_err(Error::InvalidState)?;
    let mu = kernel.rate * t;
    if mu == 0.0 {
        return Ok(PoissonSeries { rho: rho0.clone(), terms: 1, tail: 0.0 });
    }
    let m = kernel.collision_superop();
    let mut weight = (-mu).exp();
    let mut mass = weight;
    let mut state = rho0.clone();
    let mut acc = &state * C64::new(weight, 0.0);
    let mut k = 0usize;
    while 1.0 - mass > tail_tol {
        k += 1;
        if k > 10_000 {
            return Err(Error::InvalidInput(format!("Poisson series for λt = {mu} did not reach tail {tail_tol}")));
        }
        weight *= mu / k as f64;
        mass += weight;
        state = apply_superop(&m, &state);
        acc += &state * C64::new(weight, 0.0);
    }
    Ok(PoissonSeries { rho: acc, terms: k + 1, tail: (1.0 - mass).max(0.0) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub collision_times: Vec<f64>,
    pub bins: Vec<usize>,
    /// System state at each requested output time.
    pub snapshots: Vec<CMat>,
}

impl TrajectoryRecord {
    pub fn collisions_before(&self, t: f64) -> usize {
        self.collision_times.iter().take_while(|&&s| s <= t).count()
    }
}

/// One trajectory. Output times must be sorted; the trajectory runs to the
/// last one.
pub fn sample_trajectory(kernel: &CollisionKernel, rho0: &CMat, outputs: &[f64], seed: u64) -> TrajectoryRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_end = outputs.last().copied().unwrap_or(0.0);
    let mut times = Vec::new();
    let mut bins = Vec::new();
    let mut snapshots = Vec::with_capacity(outputs.len());
    let mut rho = rho0.clone();
    let mut now = 0.0;
    let mut next_out = 0;
    loop {
        let next = if kernel.rate > 0.0 {
            let u: f64 = rng.random();
            now - (1.0 - u).ln() / kernel.rate
        } else {
            f64::INFINITY
        };
        while next_out < outputs.len() && outputs[next_out] < next {
            snapshots.push(rho.clone());
            next_out += 1;
        }
        if next > t_end {
            break;
        }
        now = next;
        let pick: f64 = rng.random::<f64>() * kernel.rate;
        let mut cum = 0.0;
        let mut chosen = kernel.channels.len() - 1;
        for (i, ch) in kernel.channels.iter().enumerate() {
            cum += ch.weight;
            if pick < cum {
                chosen = i;
                break;
            }
        }
        let ch = &kernel.channels[chosen];
        rho = apply_superop(&ch.superop, &rho);
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        times.push(now);
        bins.push(ch.bin);
    }
    TrajectoryRecord { seed, collision_times: times, bins, snapshots }
}

#[derive(Debug, Clone)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub mean: Vec<CMat>,
    /// Standard error of the real and imaginary parts, packed as `re + i·im`.
    pub stderr: Vec<CMat>,
    /// Collision counts up to each output time, per trajectory.
    pub counts: Vec<Vec<usize>>,
    pub records: Vec<TrajectoryRecord>,
}

/// Trajectory seed `master_seed ⊕ index`.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    master_seed ^ index
}

/// Runs `n_traj` trajectories in parallel and reduces them in index order,
/// so the result does not depend on scheduling.
pub fn ensemble_average(
    kernel: &CollisionKernel,
    rho0: &CMat,
    times: &[f64],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleAverage> {
    validate_density(rho0, 1e-10).map_err(Error::InvalidState)?;
    if n_traj == 0 {
        return Err(Error::InvalidInput("n_traj must be >= 1".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidInput("output times must be sorted and >= 0".into()));
    }
    let records: Vec<TrajectoryRecord> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| sample_trajectory(kernel, rho0, times, trajectory_seed(master_seed, i)))
        .collect();
    let d = kernel.dim_s;
    let n = n_traj as f64;
    let mut mean = vec![zeros(d, d); times.len()];
    let mut sq_re = vec![zeros(d, d); times.len()];
    for rec in &records {
        for (k, s) in rec.snapshots.iter().enumerate() {
            mean[k] += s;
            sq_re[k] += s.map(|z| C64::new(z.re * z.re, z.im * z.im));
        }
    }
    let mut stderr = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        mean[k] /= C64::new(n, 0.0);
        let se = if n_traj > 1 {
            let m = &mean[k];
            let sq = &sq_re[k];
            CMat::from_fn(d, d, |i, j| {
                let var_re = ((sq[(i, j)].re - n * m[(i, j)].re.powi(2)) / (n - 1.0)).max(0.0);
                let var_im = ((sq[(i, j)].im - n * m[(i, j)].im.powi(2)) / (n - 1.0)).max(0.0);
                C64::new((var_re / n).sqrt(), (var_im / n).sqrt())
            })
        } else {
            zeros(d, d)
        };
        stderr.push(se);
    }
    let counts = records.iter().map(|r| times.iter().map(|&t| r.collisions_before(t)).collect()).collect();
    Ok(EnsembleAverage { times: times.to_vec(), mean, stderr, counts, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::heisenberg_generator;
    use crate::linalg::{c, min_eig, r as re, trace};
    use crate::model::{demo_model, DemoModel, FormFactorSet};
    use crate::scattering::build_scattering;

    fn setup(which: DemoModel) -> (CollisionKernel, GeneratorPair) {
        let model = demo_model(which);
        let data = build_scattering(&model).unwrap();
        let kernel = build_kernel(&data, &model.grid, &model.gas).unwrap();
        (kernel, heisenberg_generator(&data, &model.gas_weights()).unwrap())
    }

    fn rho0() -> CMat {
        CMat::from_row_slice(2, 2, &[re(0.3), c(0.2, -0.1), c(0.2, 0.1), re(0.7)])
    }

    #[test]
    fn generator_identity_holds_on_fixtures() {
        for which in DemoModel::ALL {
            let (kernel, gen) = setup(which);
            assert!(generator_identity_defect(&kernel, &gen) <= 1e-8, "{which:?}");
            let sop = kernel.schr_generator();
            assert!(max_abs(&(sop - &gen.schr)) <= 1e-8, "{which:?}");
        }
    }

    #[test]
    fn empty_gas_is_a_null_kernel() {
        let mut model = demo_model(DemoModel::TwoLevel);
        model.gas = GasState::empty(&model.grid);
        let data = build_scattering(&model).unwrap();
        let kernel = build_kernel(&data, &model.grid, &model.gas).unwrap();
        assert_eq!(kernel.status, KernelStatus::EmptyGas);
        assert_eq!(kernel.rate, 0.0);
        let rec = sample_trajectory(&kernel, &rho0(), &[0.5, 1.0], 3);
        assert!(rec.collision_times.is_empty());
        assert!(rec.snapshots.iter().all(|s| *s == rho0()));
    }

    #[test]
    fn single_bin_orthonormal_channels_give_closed_form_rate() {
        let grid = EnergyGrid::uniform(1.0, 1.5, 1, 2).unwrap();
        let ff = FormFactorSet::new(
            &grid,
            vec![[
                crate::linalg::CVec::from_vec(vec![re(1.0), re(0.0)]),
                crate::linalg::CVec::from_vec(vec![re(0.0), re(1.0)]),
            ]],
        )
        .unwrap();
        let cval = 0.6;
        let gas = GasState::new(&grid, 0.1, vec![eye(2) * C64::new(cval, 0.0)]).unwrap();
        let system = crate::model::SystemModel::diagonal(vec![0.0, 1.0], CMat::from_row_slice(2, 2, &[re(0.1), re(0.3), re(0.3), re(0.0)])).unwrap();
        let gamma = crate::model::gamma_table(&grid, &ff);
        let data = crate::scattering::build_smatrix(&system, &grid, &ff, &gamma).unwrap();
        let kernel = build_kernel(&data, &grid, &gas).unwrap();
        let de = 0.5;
        assert!((kernel.rate - de * cval / PI).abs() <= 1e-15);
        assert!(max_abs(&(kernel.particle_density() - eye(2) * C64::new(0.5, 0.0))) <= 1e-15);
    }

    #[test]
    fn collision_map_is_trace_preserving_and_positive() {
        let (kernel, _) = setup(DemoModel::TwoLevel);
        let out = kernel.collide(&rho0());
        assert!((trace(&out) - C64::new(1.0, 0.0)).norm() <= 1e-13);
        assert!(min_eig(&out) >= -1e-13);
        for ch in &kernel.channels {
            let o = apply_superop(&ch.superop, &rho0());
            assert!((trace(&o) - C64::new(1.0, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn null_model_trajectories_stay_constant() {
        let (kernel, _) = setup(DemoModel::Null);
        assert!(kernel.rate > 0.0);
        let rec = sample_trajectory(&kernel, &rho0(), &[1.0, 5.0, 50.0], 9);
        assert!(!rec.collision_times.is_empty());
        for s in &rec.snapshots {
            assert!(max_abs(&(s - rho0())) <= 1e-14);
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let (kernel, _) = setup(DemoModel::TwoLevel);
        let t = [0.5, 1.0, 2.0];
        let a = ensemble_average(&kernel, &rho0(), &t, 50, 77).unwrap();
        let b = ensemble_average(&kernel, &rho0(), &t, 50, 77).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.mean, b.mean);
        let one = ensemble_average(&kernel, &rho0(), &t, 1, 5).unwrap();
        assert_eq!(one.mean, sample_trajectory(&kernel, &rho0(), &t, trajectory_seed(5, 0)).snapshots);
    }

    #[test]
    fn poisson_series_matches_semigroup() {
        let (kernel, gen) = setup(DemoModel::TwoLevel);
        let t = 3.0 / kernel.rate;
        let series = poisson_series(&kernel, &rho0(), t, 1e-12).unwrap();
        let exact = apply_superop(&gen.schr_propagator(t), &rho0());
        assert!(max_abs(&(series.rho - exact)) <= 1e-8);
    }
}
