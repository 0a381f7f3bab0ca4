//! Shared numerical oracles for the integration tests.
#![allow(dead_code)]

use ldl_core::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn gl_panel(f: &dyn Fn(f64) -> C64, a: f64, b: f64, rule: &[(f64, f64)]) -> C64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|&(x, w)| f(mid + half * x) * (w * half)).sum()
}

/// Adaptive bisection with a 12-point Gauss–Legendre panel: a panel is
/// accepted once it agrees with its two halves to `tol`.
pub fn adaptive(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    let rule = gauss_legendre(12);
    fn rec(f: &dyn Fn(f64) -> C64, a: f64, b: f64, whole: C64, tol: f64, depth: u32, rule: &[(f64, f64)]) -> C64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl_panel(f, a, m, rule), gl_panel(f, m, b, rule));
        if (l + r - whole).norm() <= tol || depth > 40 {
            return l + r;
        }
        rec(f, a, m, l, 0.5 * tol, depth + 1, rule) + rec(f, m, b, r, 0.5 * tol, depth + 1, rule)
    }
    let whole = gl_panel(f, a, b, &rule);
    rec(f, a, b, whole, tol, 0, &rule)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
