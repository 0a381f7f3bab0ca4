//! Closed-form integration of exponential sums over a simplex.

use crate::linalg::C64;

/// `∫₀^u e^{iθs} ds = (e^{iθu} − 1)/(iθ)`.
///
/// For `|θu| < 1e−6` the fourth-order expansion `u·Σ_{k≤4} (iθu)^k/(k+1)!`
/// is used; above it `e^{iθu} − 1 = −2sin²(θu/2) + i·sin(θu)` avoids the
/// cancellation of the naive difference.
pub fn phase_integral(theta: f64, u: f64) -> C64 {
    let x = theta * u;
    if x.abs() < PHASE_SERIES_SWITCH {
        let ix = C64::new(0.0, x);
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..=4 {
            term = term * ix / (k as f64 + 1.0);
            sum += term;
        }
        return sum * u;
    }
    let half = (0.5 * x).sin();
    C64::new(-2.0 * half * half, x.sin()) / C64::new(0.0, theta)
}

pub const PHASE_SERIES_SWITCH: f64 = 1e-6;

/// `c · s^p · e^{βs}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    c: C64,
    p: u32,
    beta: C64,
}

#[derive(Debug, Default, Clone)]
struct ExpPoly {
    terms: Vec<Term>,
}

impl ExpPoly {
    fn one() -> Self {
        Self { terms: vec![Term { c: C64::new(1.0, 0.0), p: 0, beta: C64::new(0.0, 0.0) }] }
    }

    fn push(&mut self, c: C64, p: u32, beta: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        match self.terms.iter_mut().find(|t| t.p == p && t.beta == beta) {
            Some(t) => t.c += c,
            None => self.terms.push(Term { c, p, beta }),
        }
    }

    fn eval(&self, s: f64) -> C64 {
        self.terms.iter().map(|t| t.c * s.powi(t.p as i32) * (t.beta * s).exp()).sum()
    }
}

/// Terms of the series below this relative size are dropped.
const SERIES_EPS: f64 = 1e-18;

/// `e^{αs} ∫₀^s v^p e^{δv} dv` appended to `out`, where `β = δ + α` is
/// passed separately so that the surviving exponent is exactly `β`.
///
/// The closed form `Σ_k (−1)^k p!/(p−k)! s^{p−k} e^{δs}/δ^{k+1} − (−1)^p p!/δ^{p+1}`
/// cancels badly when `|δ|·T` is not large compared with `p`, so below
/// `|δ|T < p + 2` the Taylor series `Σ_k δ^k s^{p+k+1}/(k!(p+k+1))` is used
/// instead, summed until its terms drop below `1e−18` on `[0, T]`.
fn integrate_term(out: &mut ExpPoly, c: C64, p: u32, alpha: C64, beta: C64, horizon: f64) {
    let delta = beta - alpha;
    let x = delta.norm() * horizon;
    if delta == C64::new(0.0, 0.0) {
        out.push(c / (p as f64 + 1.0), p + 1, alpha);
        return;
    }
    if x < p as f64 + 2.0 {
        let mut coef = c;
        let mut k = 0u32;
        let mut mag = 1.0f64;
        loop {
            out.push(coef / (p + k + 1) as f64, p + k + 1, alpha);
            k += 1;
            mag *= x / k as f64;
            if mag < SERIES_EPS && k as f64 > x {
                break;
            }
            coef = coef * delta / k as f64;
        }
        return;
    }
    // falling factorial p!/(p−k)! and powers of 1/δ
    let inv = C64::new(1.0, 0.0) / delta;
    let mut fall = 1.0f64;
    let mut invpow = inv;
    for k in 0..=p {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(c * invpow * (sign * fall), p - k, beta);
        if k < p {
            fall *= (p - k) as f64;
            invpow *= inv;
        }
    }
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    out.push(-c * invpow * (sign * fall), 0, alpha);
}

/// `∫_{u ≥ 0, u₁+…+u_n ≤ t} exp(Σ_m α_m u_m) du`, exact up to rounding.
///
/// Requires `Re α_m ≤ 0` for every exponent that is not exactly zero; the
/// intermediate representation then never contains growing exponentials.
pub fn simplex_integral(alphas: &[C64], t: f64) -> C64 {
    let mut g = ExpPoly::one();
    for &alpha in alphas.iter().rev() {
        let mut next = ExpPoly::default();
        for term in &g.terms {
            integrate_term(&mut next, term.c, term.p, alpha, term.beta, t);
        }
        g = next;
    }
    // G₁(t): the slack variable absorbs the rest of the interval.
    let mut last = ExpPoly::default();
    for term in &g.terms {
        last.push(term.c, term.p, term.beta);
    }
    last.eval(t)
}

/// Pairwise summation, independent of thread scheduling.
pub fn pairwise_sum(values: &[C64]) -> C64 {
    match values.len() {
        0 => C64::new(0.0, 0.0),
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}
