use ldl_core::linalg::{c, eye, max_abs, CMat};
use ldl_core::model::{gamma_table, FormFactorSet, Model};
use ldl_core::random::{random_hermitian, random_matrix, random_model, rng};
use ldl_core::scattering::*;

/// T and R written out once more from their defining formulas.
fn literal_r(gamma: &CMat, d: &CMat) -> [[CMat; 2]; 2] {
    let n = d.nrows();
    let one = eye(n);
    let dp = d.adjoint();
    let (g00, g01, g10, g11) = (gamma[(0, 0)], gamma[(0, 1)], gamma[(1, 0)], gamma[(1, 1)]);
    let det = g00 * g11 - g10 * g01;
    let t0 = (&one + &dp * g01 - d * g10 + d * &dp * det).try_inverse().unwrap();
    let t1 = (&one + &dp * g01 - d * g10 + &dp * d * det).try_inverse().unwrap();
    let r00 = d * &t1 * &dp * g11;
    let r01 = -(d * &t1) * (&one + &dp * g01);
    let r11 = &dp * &t0 * d * g00;
    let r10 = &dp * &t0 * (&one - d * g10);
    [[r00, r01], [r10, r11]]
}

#[test]
fn r_operators_match_literal_transcription() {
    for seed in 0..10 {
        let model = random_model(seed);
        let data = build_scattering(&model).unwrap();
        let d = model.system.coupling();
        for block in &data.blocks {
            let lit = literal_r(&block.gamma, d);
            for m in 0..2 {
                for n in 0..2 {
                    let scale = 1.0 + max_abs(&lit[m][n]);
                    assert!(max_abs(&(block.r.get(m, n) - &lit[m][n])) <= 1e-14 * scale);
                }
            }
        }
    }
}

#[test]
fn t_inverse_residuals() {
    let mut rg = rng(2);
    for _ in 0..20 {
        let d = random_matrix(&mut rg, 2, 2, 1.0);
        // Hermitian part πG with G PSD, arbitrary anti-Hermitian part
        let v = random_matrix(&mut rg, 3, 2, 0.5);
        let gamma = v.adjoint() * v * c(std::f64::consts::PI, 0.0) - random_hermitian(&mut rg, 2, 0.3) * c(0.0, 1.0);
        let t = t_inverses(0, 1.0, &gamma, &d).unwrap();
        let (b0, b1) = t_brackets(&gamma, &d);
        assert!(max_abs(&(&t.t0 * b0 - eye(2))) <= 1e-12);
        assert!(max_abs(&(&t.t1 * b1 - eye(2))) <= 1e-12);
    }
}

#[test]
fn random_models_are_unitary_and_sensitive_to_the_hermitian_part() {
    for seed in 0..20 {
        let model = random_model(seed);
        let data = build_scattering(&model).unwrap();
        let (a, b) = data.max_unitarity_defect();
        assert!(a <= 1e-10 && b <= 1e-10, "seed {seed}: {a:.2e} {b:.2e}");
        // scaling Re γ by 1.01 breaks unitarity visibly
        let block = data.blocks.iter().max_by(|x, y| x.gram.norm().total_cmp(&y.gram.norm())).unwrap();
        let skewed = &block.gamma + data.gamma.hermitian_part(block.bin) * c(0.01, 0.0);
        let bad =
            build_block(block.bin, block.energy, &skewed, model.system.coupling(), &model.form_factors.columns(block.bin))
                .unwrap();
        assert!(bad.unitarity_defect().0 > 1e-6, "seed {seed}");
    }
}

#[test]
fn parallel_form_factors_give_rank_one_unitary_block() {
    let model = random_model(3);
    let bin = model.grid.len() / 2;
    let ratio = c(0.4, -0.7);
    let mut amps = model.form_factors.amplitudes().to_vec();
    amps[bin][1] = &amps[bin][0] * ratio;
    let ff = FormFactorSet::new(&model.grid, amps).unwrap();
    let model = Model { form_factors: ff, ..model };
    let data = build_scattering(&model).unwrap();
    assert!(data.degenerate_bins().contains(&bin));
    let block = &data.blocks[bin];
    assert_eq!(block.rank(), 1);
    assert_eq!(block.s.nrows(), model.system.dim());
    let (a, b) = block.unitarity_defect();
    assert!(a <= 1e-10 && b <= 1e-10);
    // the expansion still reproduces S⁺XS − X on the rank-one block
    let x = random_hermitian(&mut rng(4), model.system.dim(), 1.0);
    let rep = &theta_map(&data, &x)[bin];
    assert!(rep.defect <= 1e-10 && rep.extracted.is_none());
}

#[test]
fn theta_is_a_star_map() {
    let mut rg = rng(5);
    for seed in 0..5 {
        let model = random_model(100 + seed);
        let data = build_scattering(&model).unwrap();
        let ds = model.system.dim();
        let x = random_matrix(&mut rg, ds, ds, 1.0);
        let xd = x.adjoint();
        for block in &data.blocks {
            let a = theta_expanded(block, &x);
            let b = theta_expanded(block, &xd);
            for n in 0..2 {
                for m in 0..2 {
                    assert!(max_abs(&(a[n][m].adjoint() - &b[m][n])) <= 1e-13);
                }
            }
        }
    }
}

#[test]
fn parallel_build_is_reproducible() {
    let model = random_model(9);
    let gamma = gamma_table(&model.grid, &model.form_factors);
    let a = build_smatrix(&model.system, &model.grid, &model.form_factors, &gamma).unwrap();
    let b = build_scattering(&model).unwrap();
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        assert_eq!(x.s, y.s);
    }
}
