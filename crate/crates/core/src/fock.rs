//! Truncated bosonic Fock space over `C^d`, `d ≤ 3`, with total occupation
//! at most `N_max ≤ 8`.
//!
//! Ladder operators are stored as monomial matrices whose entries are square
//! roots of integers, so products and commutators of them can be formed
//! exactly before anything is rounded.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{commutator, max_abs, unitary_exp, zeros, CMat, CVec, C64};

pub const MAX_MODES: usize = 3;
pub const MAX_CUTOFF: usize = 8;
/// Default bound on the probability mass lost to truncation.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Pass threshold for the identity checks.
pub const CHECK_TOLERANCE: f64 = 1e-8;

/// Operator sending basis state `col` to `sqrt(radicand)·|row⟩`, or to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialOp {
    pub image: Vec<Option<(usize, u64)>>,
}

impl MonomialOp {
    /// `self ∘ other`; radicands multiply exactly.
    pub fn compose(&self, other: &MonomialOp) -> MonomialOp {
        let image = other
            .image
            .iter()
            .map(|e| e.and_then(|(mid, r1)| self.image[mid].map(|(row, r2)| (row, r1 * r2))))
            .collect();
        MonomialOp { image }
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.image.len();
        let mut m = zeros(n, n);
        for (col, e) in self.image.iter().enumerate() {
            if let Some((row, rad)) = e {
                m[(*row, col)] = C64::new((*rad as f64).sqrt(), 0.0);
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedFock {
    modes: usize,
    cutoff: usize,
    basis: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    lower: Vec<MonomialOp>,
    raise: Vec<MonomialOp>,
    lower_dense: Vec<CMat>,
    raise_dense: Vec<CMat>,
    tail_tolerance: f64,
}

fn occupations(modes: usize, cutoff: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, modes: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == modes {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, modes, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), modes, cutoff, &mut out);
    // order by total number, then lexicographically
    out.sort_by_key(|n| (n.iter().sum::<usize>(), n.clone()));
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `e^{−x}Σ_{k>N} x^k/k!`, the Poisson mass above the cutoff.
pub fn poisson_tail(x: f64, cutoff: usize) -> f64 {
    let mut term = (-x).exp();
    let mut head = term;
    for k in 1..=cutoff {
        term *= x / k as f64;
        head += term;
    }
    // summing the tail directly avoids cancellation in 1 − head
    let mut tail = 0.0;
    let mut t = term;
    let mut k = cutoff;
    loop {
        k += 1;
        t *= x / k as f64;
        tail += t;
        if t <= 1e-300 || t < 1e-18 * tail {
            break;
        }
    }
    if head.is_finite() {
        tail
    } else {
        1.0
    }
}

impl TruncatedFock {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::InvalidInput(format!("{modes} modes; the truncated Fock space supports 1..={MAX_MODES}")));
        }
        if cutoff > MAX_CUTOFF {
            return Err(Error::InvalidInput(format!("cutoff {cutoff} exceeds {MAX_CUTOFF}")));
        }
        let basis = occupations(modes, cutoff);
        let index: HashMap<Vec<usize>, usize> = basis.iter().enumerate().map(|(k, n)| (n.clone(), k)).collect();
        let mut lower = Vec::with_capacity(modes);
        let mut raise = Vec::with_capacity(modes);
        for i in 0..modes {
            let mut lo = Vec::with_capacity(basis.len());
            let mut hi = Vec::with_capacity(basis.len());
            for n in &basis {
                lo.push((n[i] > 0).then(|| {
                    let mut m = n.clone();
                    m[i] -= 1;
                    (index[&m], n[i] as u64)
                }));
                let mut m = n.clone();
                m[i] += 1;
                hi.push(index.get(&m).map(|&row| (row, (n[i] + 1) as u64)));
            }
            lower.push(MonomialOp { image: lo });
            raise.push(MonomialOp { image: hi });
        }
        let lower_dense = lower.iter().map(MonomialOp::to_dense).collect();
        let raise_dense = raise.iter().map(MonomialOp::to_dense).collect();
        Ok(Self { modes, cutoff, basis, index, lower, raise, lower_dense, raise_dense, tail_tolerance: TAIL_TOLERANCE })
    }

    /// Replaces the default tail bound of `1e−10`.
    pub fn with_tail_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tail tolerance {tol} must be > 0")));
        }
        self.tail_tolerance = tol;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn state_index(&self, occupation: &[usize]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn annihilator(&self, i: usize) -> &CMat {
        &self.lower_dense[i]
    }

    pub fn creator(&self, i: usize) -> &CMat {
        &self.raise_dense[i]
    }

    pub fn total_number(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.dim(),
            self.basis.iter().map(|n| C64::new(n.iter().sum::<usize>() as f64, 0.0)),
        ))
    }

    /// Basis states with total occupation `≤ N_max − 1`, where the ladder
    /// operators act without truncation.
    pub fn protected(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.basis[k].iter().sum::<usize>() < self.cutoff).collect()
    }

    /// Largest entry of `[a_i, a⁺_j] − δ_ij` on protected columns, computed
    /// from exact integer radicands.
    pub fn ccr_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.modes {
            for j in 0..self.modes {
                let ab = self.lower[i].compose(&self.raise[j]);
                let ba = self.raise[j].compose(&self.lower[i]);
                for col in self.protected() {
                    let mut entries: HashMap<usize, f64> = HashMap::new();
                    if let Some((row, rad)) = ab.image[col] {
                        *entries.entry(row).or_default() += exact_sqrt(rad);
                    }
                    if let Some((row, rad)) = ba.image[col] {
                        *entries.entry(row).or_default() -= exact_sqrt(rad);
                    }
                    if i == j {
                        *entries.entry(col).or_default() -= 1.0;
                    }
                    worst = entries.values().fold(worst, |w, v| w.max(v.abs()));
                }
            }
        }
        worst
    }

    /// `dΓ(X) = Σ_ij X_ij a⁺_i a_j`.
    pub fn dgamma(&self, x: &CMat) -> Result<CMat> {
        self.check_one_particle(x)?;
        let mut out = zeros(self.dim(), self.dim());
        for i in 0..self.modes {
            for j in 0..self.modes {
                if x[(i, j)] != C64::new(0.0, 0.0) {
                    out += self.raise[i].compose(&self.lower[j]).to_dense() * x[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// `A⁺(f) = Σ f_i a⁺_i`.
    pub fn creation(&self, f: &CVec) -> Result<CMat> {
        self.check_vector(f)?;
        Ok((0..self.modes).fold(zeros(self.dim(), self.dim()), |acc, i| acc + &self.raise_dense[i] * f[i]))
    }

    /// `A(g) = Σ conj(g_i) a_i`.
    pub fn annihilation(&self, g: &CVec) -> Result<CMat> {
        self.check_vector(g)?;
        Ok((0..self.modes).fold(zeros(self.dim(), self.dim()), |acc, i| acc + &self.lower_dense[i] * g[i].conj()))
    }

    /// Mass of `Ψ(f)` above the cutoff.
    pub fn coherent_tail(&self, f: &CVec) -> f64 {
        poisson_tail(f.norm_squared(), self.cutoff)
    }

    /// Projection of `Ψ(f) = e^{−‖f‖²/2} Σ_n Π_i f_i^{n_i}/√(n_i!) |n⟩` onto
    /// the truncated space. Its squared norm is `1 − tail`.
    pub fn coherent_vector(&self, f: &CVec) -> Result<CVec> {
        self.check_vector(f)?;
        let tail = self.coherent_tail(f);
        if tail > self.tail_tolerance {
            return Err(Error::TruncationTooSmall { tail, tolerance: self.tail_tolerance });
        }
        let pre = (-0.5 * f.norm_squared()).exp();
        Ok(CVec::from_iterator(
            self.dim(),
            self.basis.iter().map(|n| {
                n.iter().enumerate().fold(C64::new(pre, 0.0), |acc, (i, &k)| acc * f[i].powu(k as u32) / factorial(k).sqrt())
            }),
        ))
    }

    fn check_vector(&self, f: &CVec) -> Result<()> {
        if f.len() != self.modes {
            return Err(Error::InvalidInput(format!("vector of length {} for {} modes", f.len(), self.modes)));
        }
        if !f.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        Ok(())
    }

    fn check_one_particle(&self, x: &CMat) -> Result<()> {
        if x.nrows() != self.modes || x.ncols() != self.modes {
            return Err(Error::InvalidInput(format!("{}x{} operator for {} modes", x.nrows(), x.ncols(), self.modes)));
        }
        Ok(())
    }
}

fn exact_sqrt(rad: u64) -> f64 {
    // correctly rounded sqrt is exact on perfect squares
    (rad as f64).sqrt()
}

/// `e^{⟨f,g⟩ − (‖f‖² + ‖g‖²)/2`.
pub fn coherent_overlap(f: &CVec, g: &CVec) -> C64 {
    (f.dotc(g) - C64::new(0.5 * (f.norm_squared() + g.norm_squared()), 0.0)).exp()
}

/// `|⟨Ψ(f), dΓ(X)Ψ(g)⟩ − ⟨f,Xg⟩⟨Ψ(f),Ψ(g)⟩|`.
pub fn number_characterization_check(fock: &TruncatedFock, x: &CMat, f: &CVec, g: &CVec) -> Result<f64> {
    let (pf, pg) = (fock.coherent_vector(f)?, fock.coherent_vector(g)?);
    let lhs = pf.dotc(&(fock.dgamma(x)? * &pg));
    let rhs = f.dotc(&(x * g)) * coherent_overlap(f, g);
    Ok((lhs - rhs).norm())
}

/// `‖e^{it·dΓ(X)}Ψ(f) − Ψ(e^{itX}f)‖` for Hermitian `X`.
pub fn second_quantization_check(fock: &TruncatedFock, x: &CMat, f: &CVec, t: f64) -> Result<f64> {
    fock.check_one_particle(x)?;
    if crate::linalg::hermiticity_defect(x) > 1e-12 * (1.0 + max_abs(x)) {
        return Err(Error::InvalidInput("second quantization needs a Hermitian generator".into()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let lhs = unitary_exp(&fock.dgamma(x)?, t) * fock.coherent_vector(f)?;
    let rhs = fock.coherent_vector(&(unitary_exp(x, t) * f))?;
    Ok((lhs - rhs).norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointReport {
    /// `Tr(ρ A⁺(f)A(g))` on the truncated space.
    pub fock_value: C64,
    /// `ξ⟨g, L(1−ξL)⁻¹f⟩`, `L = e^{−βH₁}`.
    pub closed_form: C64,
    pub defect: f64,
    /// Gibbs mass above the cutoff.
    pub tail: f64,
}

/// Two-point function of the grand-canonical state
/// `ρ ∝ ξ^N e^{−β dΓ(H₁)}` with diagonal `H₁`.
pub fn quasifree_two_point_check(
    fock: &TruncatedFock,
    energies: &[f64],
    beta: f64,
    xi: f64,
    f: &CVec,
    g: &CVec,
) -> Result<TwoPointReport> {
    if energies.len() != fock.modes() {
        return Err(Error::InvalidInput(format!("{} energies for {} modes", energies.len(), fock.modes())));
    }
    if !(beta.is_finite() && xi >= 0.0 && xi.is_finite()) {
        return Err(Error::InvalidInput(format!("need finite β and ξ ≥ 0, got β={beta}, ξ={xi}")));
    }
    let q: Vec<f64> = energies.iter().map(|&e| xi * (-beta * e).exp()).collect();
    if q.iter().any(|&x| !(x < 1.0)) {
        return Err(Error::InvalidInput("ξe^(−βE) must stay below 1 for every mode".into()));
    }
    let weights: Vec<f64> =
        fock.basis().iter().map(|n| n.iter().zip(&q).map(|(&k, &x)| x.powi(k as i32)).product()).collect();
    let z_trunc: f64 = weights.iter().sum();
    let z_full: f64 = q.iter().map(|x| 1.0 / (1.0 - x)).product();
    let tail = ((z_full - z_trunc) / z_full).max(0.0);
    if tail > fock.tail_tolerance() {
        return Err(Error::TruncationTooSmall { tail, tolerance: fock.tail_tolerance() });
    }
    let op = fock.creation(f)? * fock.annihilation(g)?;
    let fock_value: C64 = weights.iter().enumerate().map(|(k, w)| op[(k, k)] * *w).sum::<C64>() / z_trunc;
    let closed_form: C64 = (0..fock.modes()).map(|i| g[i].conj() * f[i] * (q[i] / (1.0 - q[i]))).sum();
    Ok(TwoPointReport { fock_value, closed_form, defect: (fock_value - closed_form).norm(), tail })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItoRow {
    pub dt: f64,
    /// `⟨Ψ(f_Δ), dΓ(X)dΓ(Y)Ψ(f_Δ)⟩`.
    pub product: C64,
    /// `⟨Ψ(f_Δ), dΓ(XY)Ψ(f_Δ)⟩`.
    pub leading: C64,
    /// `product − leading`.
    pub cross: C64,
    /// `|product − ⟨f,XYf⟩ − ⟨f,Xf⟩⟨f,Yf⟩|` at `f = f_Δ`.
    pub identity_defect: f64,
    /// `|leading − ⟨f,XYf⟩|` at `f = f_Δ`.
    pub leading_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItoReport {
    pub rows: Vec<ItoRow>,
    /// Log-log slope of `|leading|` against `Δt`; `None` when it vanishes.
    pub leading_slope: Option<f64>,
    pub cross_slope: Option<f64>,
    pub pass: bool,
}

pub const LEADING_SLOPE_TOL: f64 = 0.02;
pub const CROSS_SLOPE_TOL: f64 = 0.05;

fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|&y| !(y > 0.0)) || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(num / den)
}

/// Scaling of `dΓ(X)dΓ(Y)` on coherent states `Ψ(f√Δt)`: the `dΓ(XY)` part
/// is linear in `Δt`, the remainder quadratic.
pub fn ito_scaling_check(fock: &TruncatedFock, x: &CMat, y: &CMat, f: &CVec, dts: &[f64]) -> Result<ItoReport> {
    if dts.iter().any(|&dt| !(dt > 0.0 && dt.is_finite())) {
        return Err(Error::InvalidInput("Δt values must be positive".into()));
    }
    let (dx, dy, dxy) = (fock.dgamma(x)?, fock.dgamma(y)?, fock.dgamma(&(x * y))?);
    let prod = &dx * &dy;
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in dts {
        let fd = f * C64::new(dt.sqrt(), 0.0);
        let psi = fock.coherent_vector(&fd)?;
        let product = psi.dotc(&(&prod * &psi));
        let leading = psi.dotc(&(&dxy * &psi));
        let one = fd.dotc(&(x * y * &fd));
        let two = fd.dotc(&(x * &fd)) * fd.dotc(&(y * &fd));
        rows.push(ItoRow {
            dt,
            product,
            leading,
            cross: product - leading,
            identity_defect: (product - one - two).norm(),
            leading_defect: (leading - one).norm(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let leading_slope = loglog_slope(&xs, &rows.iter().map(|r| r.leading.norm()).collect::<Vec<_>>());
    let cross_slope = loglog_slope(&xs, &rows.iter().map(|r| r.cross.norm()).collect::<Vec<_>>());
    let defects_ok = rows.iter().all(|r| r.identity_defect <= CHECK_TOLERANCE && r.leading_defect <= CHECK_TOLERANCE);
    let vanishing = |pick: fn(&ItoRow) -> C64| rows.iter().all(|r| pick(r).norm() <= CHECK_TOLERANCE);
    let slope_ok = |s: Option<f64>, want: f64, tol: f64, zero: bool| match s {
        Some(s) => (s - want).abs() <= tol,
        None => zero,
    };
    let pass = defects_ok
        && slope_ok(leading_slope, 1.0, LEADING_SLOPE_TOL, vanishing(|r| r.leading))
        && slope_ok(cross_slope, 2.0, CROSS_SLOPE_TOL, vanishing(|r| r.cross));
    Ok(ItoReport { rows, leading_slope, cross_slope, pass })
}

/// `max |[dΓ(X), dΓ(Y)] − dΓ([X,Y])|`. `dΓ` conserves the total number, so
/// the identity holds on the whole truncated space.
pub fn lie_morphism_defect(fock: &TruncatedFock, x: &CMat, y: &CMat) -> Result<f64> {
    let lhs = commutator(&fock.dgamma(x)?, &fock.dgamma(y)?);
    Ok(max_abs(&(lhs - fock.dgamma(&commutator(x, y))?)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockCheck {
    pub name: &'static str,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockBattery {
    pub modes: usize,
    pub cutoff: usize,
    pub checks: Vec<FockCheck>,
    pub ito: ItoReport,
    pub pass: bool,
}

/// Runs every check on fixed inputs: two modes, cutoff 8, `‖f‖² ≈ 0.3`,
/// `H₁ = diag(1.5, 2)`, `β = 1`, `ξ = 0.2`, `Δt ∈ {1e−1, 1e−2, 1e−3}`.
pub fn fock_battery() -> Result<FockBattery> {
    use crate::linalg::c;
    let fock = TruncatedFock::new(2, MAX_CUTOFF)?;
    let f = CVec::from_vec(vec![c(0.35, -0.2), c(0.1, 0.3)]);
    let g = CVec::from_vec(vec![c(-0.15, 0.25), c(0.3, 0.05)]);
    let x = CMat::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.2, -0.5), c(0.2, 0.5), c(-0.4, 0.0)]);
    let y = CMat::from_row_slice(2, 2, &[c(0.1, 0.0), c(-0.6, 0.3), c(0.9, 0.2), c(0.5, 0.0)]);
    let mut checks = Vec::new();
    let mut push = |name, defect: f64, tolerance: f64| {
        checks.push(FockCheck { name, defect, tolerance, pass: defect <= tolerance });
    };
    push("ccr", fock.ccr_defect(), 0.0);
    push("lie_morphism", lie_morphism_defect(&fock, &x, &y)?, 1e-12);
    push("coherent_norm", (fock.coherent_vector(&f)?.norm_squared() - 1.0).abs(), TAIL_TOLERANCE);
    let overlap = fock.coherent_vector(&f)?.dotc(&fock.coherent_vector(&g)?);
    push("coherent_overlap", (overlap - coherent_overlap(&f, &g)).norm(), TAIL_TOLERANCE);
    push("number_characterization", number_characterization_check(&fock, &x, &f, &g)?, CHECK_TOLERANCE);
    push("second_quantization", second_quantization_check(&fock, &x, &f, 0.7)?, CHECK_TOLERANCE);
    let tp = quasifree_two_point_check(&fock, &[1.5, 2.0], 1.0, 0.2, &f, &g)?;
    push("quasifree_two_point", tp.defect, CHECK_TOLERANCE);
    let ito = ito_scaling_check(&fock, &x, &y, &CVec::from_vec(vec![c(0.8, 0.1), c(-0.3, 0.5)]), &[1e-1, 1e-2, 1e-3])?;
    let pass = checks.iter().all(|c| c.pass) && ito.pass;
    Ok(FockBattery { modes: fock.modes(), cutoff: fock.cutoff(), checks, ito, pass })
}
