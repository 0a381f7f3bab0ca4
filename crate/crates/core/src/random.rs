//! Seeded random fixtures: Hermitian matrices, states and whole models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec, C64};
use crate::model::{EnergyGrid, FormFactorSet, GasState, Model, SystemModel};
use crate::scattering::build_scattering;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng) * scale)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize, scale: f64) -> CMat {
    let m = random_matrix(rng, d, d, scale);
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Uniformly oriented vector of the given norm.
pub fn random_vector<R: Rng>(rng: &mut R, d: usize, norm: f64) -> CVec {
    let v = CVec::from_fn(d, |_, _| complex_normal(rng));
    let n = v.norm();
    v * C64::new(norm / n, 0.0)
}

/// Ginibre density matrix `GG⁺/Tr(GG⁺)`, full rank almost surely.
pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> CMat {
    let g = random_matrix(rng, d, d, 1.0);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Condition number above which a random model is redrawn.
pub const MAX_MODEL_CONDITION: f64 = 1e8;

/// A random model: 2 or 3 non-degenerate levels, 8 to 16 bins of
/// multiplicity 1 to 3 on `[0, 4]`, Gaussian-enveloped random amplitudes,
/// a random coupling and a Gibbs gas. Draws whose T-matrices are worse
/// conditioned than `1e8` are replaced by the next draw of the same stream.
pub fn random_model(seed: u64) -> Model {
    let mut rng = rng(seed);
    loop {
        let model = draw_model(&mut rng, seed);
        if let Ok(data) = build_scattering(&model) {
            if data.max_condition() < MAX_MODEL_CONDITION {
                return model;
            }
        }
    }
}

fn draw_model(rng: &mut ChaCha8Rng, seed: u64) -> Model {
    let levels = rng.random_range(2..=3);
    let mut eig: Vec<f64> = (0..levels).map(|_| rng.random_range(0.0..1.5)).collect();
    eig.sort_by(f64::total_cmp);
    for k in 1..levels {
        // keep levels apart
        eig[k] = eig[k].max(eig[k - 1] + 0.2);
    }
    let coupling = random_hermitian(rng, levels, 0.5) + random_matrix(rng, levels, levels, 0.2);
    let system = SystemModel::diagonal(eig, coupling).expect("random system is valid");
    let bins = rng.random_range(8..=16);
    let mult = rng.random_range(1..=3);
    let grid = EnergyGrid::uniform(0.0, 4.0, bins, mult).expect("random grid is valid");
    let dirs = [random_vector(rng, mult, 1.0), random_vector(rng, mult, 1.0)];
    let centers = [rng.random_range(1.0..2.5), rng.random_range(1.0..2.5)];
    let amps = [rng.random_range(0.2..0.6), rng.random_range(0.2..0.6)];
    let ff = FormFactorSet::from_fn(&grid, |_, b| {
        [0, 1].map(|n| {
            let env = amps[n] * (-(b.center - centers[n]).powi(2) / 0.8).exp();
            (&dirs[n] + random_vector(rng, mult, 0.3)) * C64::new(env, 0.0)
        })
    })
    .expect("random form factors are valid");
    let beta = rng.random_range(0.5..2.0);
    let gas = GasState::gibbs(&grid, beta, 0.05).expect("random gas is valid");
    Model { name: format!("random-{seed}"), system, grid, form_factors: ff, gas }
}
