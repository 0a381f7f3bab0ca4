//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Superoperators use column-stacking vectorization throughout:
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, which matches nalgebra's column-major
//! storage so `vec` is a plain copy of the backing slice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec_cols(x: &CMat) -> CVec {
    CVec::from_column_slice(x.as_slice())
}

pub fn unvec(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "vector length is not a square");
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Superoperator matrix of `X ↦ A X B`.
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    kron(&b.transpose(), a)
}

/// Superoperator matrix of `X ↦ A X`.
pub fn left_mul(a: &CMat) -> CMat {
    kron(&eye(a.ncols()), a)
}

/// Superoperator matrix of `X ↦ X B`.
pub fn right_mul(b: &CMat) -> CMat {
    kron(&b.transpose(), &eye(b.nrows()))
}

pub fn apply_superop(sop: &CMat, x: &CMat) -> CMat {
    unvec(&(sop * vec_cols(x)), x.nrows())
}

pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(d, d);
    m[(i, j)] = ONE;
    m
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// 2-norm condition number; `inf` for singular input.
pub fn cond(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * r(0.5)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn min_eig(m: &CMat) -> f64 {
    herm_eig(m).0.first().copied().unwrap_or(0.0)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr(A⁺ B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Partial trace over the second tensor factor of `H_a ⊗ H_b`
/// (index `i·d_b + k`).
pub fn partial_trace_second(m: &CMat, da: usize, db: usize) -> CMat {
    assert_eq!(m.nrows(), da * db);
    CMat::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum())
}

/// Sub-block `⟨a|M|b⟩` (a `d_a × d_a` matrix) of an operator on
/// `H_a ⊗ H_b`, for basis vectors `a`, `b` of the second factor.
pub fn second_factor_element(m: &CMat, da: usize, db: usize, a: usize, b: usize) -> CMat {
    CMat::from_fn(da, da, |i, j| m[(i * db + a, j * db + b)])
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Exponential of `i·t·H` for Hermitian `H`, via eigendecomposition.
pub fn unitary_exp(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = herm_eig(h);
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&e| C64::from_polar(1.0, e * t)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Checks that `rho` is a density matrix: Hermitian, unit trace and
/// positive semidefinite within `tol`.
pub fn validate_density(rho: &CMat, tol: f64) -> Result<(), String> {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(format!("not a square matrix: {}x{}", rho.nrows(), rho.ncols()));
    }
    if !is_finite(rho) {
        return Err("non-finite entries".into());
    }
    let herm = hermiticity_defect(rho);
    if herm > tol {
        return Err(format!("not Hermitian (defect {herm:.3e})"));
    }
    let tr = trace(rho);
    if (tr - ONE).norm() > tol {
        return Err(format!("trace {tr} differs from 1"));
    }
    let lo = min_eig(rho);
    if lo < -tol {
        return Err(format!("negative eigenvalue {lo:.3e}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(d: usize, seed: f64) -> CMat {
        CMat::from_fn(d, d, |i, j| c((seed + i as f64 * 1.3 - j as f64).sin(), (seed * j as f64 + 0.4 * i as f64).cos()))
    }

    #[test]
    fn vectorization_round_trip_and_sandwich() {
        let (a, x, b) = (sample(3, 0.1), sample(3, 0.7), sample(3, 1.9));
        assert_eq!(unvec(&vec_cols(&x), 3), x);
        let direct = &a * &x * &b;
        let via = apply_superop(&sandwich(&a, &b), &x);
        assert!(max_abs(&(direct - via)) < 1e-13);
        let lx = apply_superop(&left_mul(&a), &x);
        let xr = apply_superop(&right_mul(&b), &x);
        assert!(max_abs(&(lx - &a * &x)) < 1e-13);
        assert!(max_abs(&(xr - &x * &b)) < 1e-13);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = sample(2, 0.3);
        let b = sample(3, 1.1);
        let pt = partial_trace_second(&kron(&a, &b), 2, 3);
        assert!(max_abs(&(pt - a * trace(&b))) < 1e-13);
    }

    #[test]
    fn unitary_exp_matches_nalgebra_exp() {
        let h = hermitian_part(&sample(3, 0.5));
        let u = unitary_exp(&h, 0.8);
        let v = (h * c(0.0, 0.8)).exp();
        assert!(max_abs(&(u - v)) < 1e-12);
    }

    #[test]
    fn density_validation_rejects_bad_states() {
        let mut rho = eye(2) * r(0.5);
        assert!(validate_density(&rho, 1e-10).is_ok());
        rho[(0, 0)] = r(1.2);
        rho[(1, 1)] = r(-0.2);
        assert!(validate_density(&rho, 1e-10).is_err());
        assert!(validate_density(&(eye(2) * r(0.6)), 1e-10).is_err());
    }
}
