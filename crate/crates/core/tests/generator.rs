use std::f64::consts::PI;

use ldl_core::generator::*;
use ldl_core::linalg::{apply_superop, c, eye, max_abs, min_eig, r, trace, zeros, CMat};
use ldl_core::model::Model;
use ldl_core::random::{random_density, random_hermitian, random_matrix, random_model, rng};
use ldl_core::scattering::build_scattering;
use ldl_core::C64;

fn generator_of(model: &Model) -> GeneratorPair {
    let data = build_scattering(model).unwrap();
    heisenberg_generator(&data, &model.gas_weights()).unwrap()
}

/// Random model with `D` commuting with `H_S`.
fn diagonal_coupling_model(seed: u64) -> Model {
    let mut model = random_model(seed);
    let d = model.system.coupling().clone();
    let diag = CMat::from_diagonal(&d.diagonal());
    model.system = model.system.with_coupling(diag).unwrap();
    model
}

#[test]
fn semigroup_property_on_random_states() {
    let mut rg = rng(31);
    for seed in 0..5 {
        let gen = generator_of(&random_model(seed));
        for _ in 0..4 {
            let rho = random_density(&mut rg, gen.dim);
            for s in [0.1, 1.0] {
                for t in [0.1, 1.0] {
                    let joint = evolve_density(&gen, &rho, s + t, 0.01).unwrap();
                    let split = evolve_density(&gen, &evolve_density(&gen, &rho, s, 0.01).unwrap(), t, 0.01).unwrap();
                    assert!(max_abs(&(joint - split)) <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn evolved_states_stay_positive_and_normalised() {
    let mut rg = rng(32);
    let gens: Vec<GeneratorPair> = (0..4).map(|s| generator_of(&random_model(40 + s))).collect();
    for k in 0..100 {
        let gen = &gens[k % gens.len()];
        let rho = random_density(&mut rg, gen.dim);
        for t in [0.3, 3.0, 30.0] {
            let out = evolve_density(gen, &rho, t, 0.01).unwrap();
            assert!(min_eig(&out) >= -1e-8);
            assert!((trace(&out) - C64::new(1.0, 0.0)).norm() <= 1e-10);
        }
    }
}

#[test]
fn trace_preservation_of_both_builders() {
    let mut rg = rng(33);
    let gen = generator_of(&random_model(3));
    // an arbitrary T input with several shells and frequencies
    let shells: Vec<Shell> = (0..4)
        .map(|k| Shell { energy: 1.0 + 0.5 * k as f64, weight: 0.1, width: 0.6, density: 0.2 + 0.1 * k as f64 })
        .collect();
    let elements = (0..6)
        .map(|k| TElement {
            omega: [0.0, 0.5, -0.5][k % 3],
            incoming: k % 4,
            outgoing: (k + 1) % 4,
            op: random_matrix(&mut rg, 3, 3, 1.0),
        })
        .collect();
    let boltz = boltzmann_from_t(&TMatrixInput { dim: 3, shells, elements }).unwrap();
    assert!(cp_check(&boltz).unwrap().pass);
    for g in [&gen, &boltz] {
        for _ in 0..20 {
            let rho = random_density(&mut rg, g.dim);
            assert!(trace(&g.apply_schr(&rho)).norm() <= 1e-12);
        }
    }
}

#[test]
fn duality_on_random_three_level_models() {
    let mut rg = rng(34);
    let mut seen = 0;
    for seed in 0.. {
        let model = random_model(seed);
        if model.system.dim() != 3 {
            continue;
        }
        let gen = generator_of(&model);
        let rho = random_density(&mut rg, 3);
        let x = random_hermitian(&mut rg, 3, 1.0);
        assert!(duality_check(&gen, &rho, &x, 1.0) <= 1e-10);
        assert!((duality_check(&gen, &rho, &eye(3), 1.0)) <= 1e-12);
        assert!(pairing_defect(&gen) <= 1e-12);
        seen += 1;
        if seen == 5 {
            break;
        }
    }
}

#[test]
fn jump_part_is_completely_positive_on_random_models() {
    for seed in 0..20 {
        let gen = generator_of(&random_model(seed));
        let rep = cp_check(&gen).unwrap();
        assert!(rep.pass, "seed {seed}: {rep:?}");
        assert!(rep.choi_min_eig >= -1e-10);
    }
}

#[test]
fn amplitude_damping_follows_the_generator_spectrum() {
    let shells = vec![
        Shell { energy: 2.0, weight: 0.05, width: 0.05, density: 1.3 },
        Shell { energy: 3.0, weight: 0.05, width: 0.05, density: 0.0 },
    ];
    let mut op = zeros(2, 2);
    op[(0, 1)] = c(0.6, -0.2);
    let input = TMatrixInput { dim: 2, shells, elements: vec![TElement { omega: -1.0, incoming: 0, outgoing: 1, op }] };
    let gen = boltzmann_from_t(&input).unwrap();
    let eig = gen.schr.clone().schur().eigenvalues().unwrap();
    let slowest_real = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    assert!(slowest_real < 0.0);
    let rho = CMat::from_row_slice(2, 2, &[r(0.1), c(0.1, 0.2), c(0.1, -0.2), r(0.9)]);
    for t in [0.5, 2.0, 8.0] {
        let out = evolve_density(&gen, &rho, t, 0.01).unwrap();
        assert!((out[(1, 1)].re - 0.9 * (slowest_real * t).exp()).abs() <= 1e-12);
    }
}

#[test]
fn single_rank_one_element_matches_direct_lindbladian() {
    let mut rg = rng(35);
    let (l, w_in, w_out, width) = (0.7, 0.2, 0.3, 0.4);
    let shells = vec![
        Shell { energy: 1.0, weight: w_in, width, density: l },
        Shell { energy: 1.1, weight: w_out, width, density: 0.0 },
    ];
    let u = ldl_core::random::random_vector(&mut rg, 2, 1.0);
    let v = ldl_core::random::random_vector(&mut rg, 2, 1.0);
    let t = (&u * v.adjoint()) * c(0.5, 0.3);
    let input = TMatrixInput {
        dim: 2,
        shells,
        elements: vec![TElement { omega: 0.0, incoming: 0, outgoing: 1, op: t.clone() }],
    };
    let gen = boltzmann_from_t(&input).unwrap();
    let rate = 2.0 * PI * l * w_in * w_out / width;
    let mut rgs = rng(36);
    for _ in 0..5 {
        let rho = random_density(&mut rgs, 2);
        let td = t.adjoint();
        let direct = (&t * &rho * &td - (&td * &t * &rho + &rho * &td * &t) * c(0.5, 0.0)) * c(rate, 0.0);
        assert!(max_abs(&(gen.apply_schr(&rho) - direct)) <= 1e-10);
    }
}

#[test]
fn both_routes_share_the_dissipative_part_for_diagonal_coupling() {
    for seed in 0..10 {
        let model = diagonal_coupling_model(seed);
        let data = build_scattering(&model).unwrap();
        let gen = heisenberg_generator(&data, &model.gas_weights()).unwrap();
        let boltz = boltzmann_from_t(&TMatrixInput::from_scattering(&data, &model.grid, &model.gas)).unwrap();
        let defect = max_abs(&(gen.dissipative_heis() - boltz.dissipative_heis()));
        assert!(defect <= 1e-8, "seed {seed}: {defect:.2e}");
    }
}

#[test]
fn exponential_and_rk4_agree_on_a_random_model() {
    let gen = generator_of(&random_model(12));
    let rho = random_density(&mut rng(37), gen.dim);
    let exact = apply_superop(&gen.schr_propagator(1.3), &rho);
    let rk = rk4_propagate(&gen, &rho, 1.3, 1e-3).unwrap();
    assert!(max_abs(&(rk - exact)) <= 1e-10);
}
