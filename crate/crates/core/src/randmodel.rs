//! The random Euler product: laws of 𝕏(p), the factors E_p(z), the
//! log-moment functions 𝓛 and 𝓛̃, the constants C_max, C_min, C_ℓ, saddle
//! points and the tail probabilities Φ, Ψ.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{precondition, LabError, Result};
use crate::numeric::{adaptive_simpson, expm1_minus_x, GaussLegendre, KahanSum, EULER_GAMMA, ZETA2, ZETA3};
use crate::par;
use crate::primes::{factorize, is_prime, primes_up_to};

/// Default explicit prime cutoff for 𝓛 and 𝓛̃.
pub const DEFAULT_PRIME_CUTOFF: u64 = 1_000_000;

/// Tolerance used for the C_max and C_min integrals.
pub const CONSTANT_QUAD_TOL: f64 = 1e-13;

/// The law of the independent variables 𝕏(p) for characters of order ℓ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomCharModel {
    ell: u64,
}

/// Exact distribution of 𝕏(p): P(0) and P(ω^k), k = 0..ℓ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XLaw {
    pub zero: Ratio<i128>,
    pub roots: Vec<Ratio<i128>>,
}

impl XLaw {
    pub fn total(&self) -> Ratio<i128> {
        self.roots.iter().fold(self.zero, |acc, r| acc + r)
    }
}

impl RandomCharModel {
    pub fn new(ell: u64) -> Result<Self> {
        if ell < 3 || !is_prime(ell) {
            return precondition(format!("order must be an odd prime, got {ell}"));
        }
        Ok(Self { ell })
    }

    pub fn cubic() -> Self {
        Self { ell: 3 }
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    /// δ_p = (ℓ − 1)/(p + ℓ − 1) for p ≡ 1 mod ℓ, else 0.
    pub fn delta(&self, p: u64) -> Ratio<i128> {
        if p % self.ell == 1 {
            Ratio::new(self.ell as i128 - 1, (p + self.ell - 1) as i128)
        } else {
            Ratio::from_integer(0)
        }
    }

    pub fn alpha(&self, p: u64) -> Ratio<i128> {
        Ratio::from_integer(1) - self.delta(p)
    }

    pub fn alpha_f64(&self, p: u64) -> f64 {
        if p % self.ell == 1 {
            p as f64 / (p + self.ell - 1) as f64
        } else {
            1.0
        }
    }

    pub fn x_law(&self, p: u64) -> XLaw {
        let each = self.alpha(p) / Ratio::from_integer(self.ell as i128);
        XLaw {
            zero: self.delta(p),
            roots: vec![each; self.ell as usize],
        }
    }

    /// 𝔼 𝕏(m) as an exact rational: zero unless m is an ℓ-th power.
    pub fn expect_x_exact(&self, m: u64) -> Result<Ratio<i128>> {
        if m == 0 {
            return precondition("expect_x needs m >= 1");
        }
        let mut acc = Ratio::from_integer(1);
        for (p, e) in factorize(m) {
            if e as u64 % self.ell != 0 {
                return Ok(Ratio::from_integer(0));
            }
            acc *= self.alpha(p);
        }
        Ok(acc)
    }

    pub fn expect_x(&self, m: u64) -> Result<f64> {
        let r = self.expect_x_exact(m)?;
        Ok(*r.numer() as f64 / *r.denom() as f64)
    }

    /// E_p(z) = 𝔼|1 − 𝕏(p)/p|^{−2z}.
    pub fn ep(&self, p: u64, z: Complex64) -> Complex64 {
        let alpha = self.alpha_f64(p);
        let pf = p as f64;
        if self.ell == 3 {
            let x1 = (1.0 - 1.0 / pf).powi(2);
            let x2 = 1.0 + 1.0 / pf + 1.0 / (pf * pf);
            let pw = |x: f64| (-z * x.ln()).exp();
            Complex64::new(1.0 - alpha, 0.0) + pw(x1) * (alpha / 3.0) + pw(x2) * (2.0 * alpha / 3.0)
        } else {
            let ell = self.ell as f64;
            let mut acc = Complex64::new(1.0 - alpha, 0.0);
            for k in 0..self.ell {
                let th = std::f64::consts::TAU * k as f64 / ell;
                let sq = 1.0 - 2.0 * th.cos() / pf + 1.0 / (pf * pf);
                acc += (-z * sq.ln()).exp() * (alpha / ell);
            }
            acc
        }
    }
}

/// Which tail a log-moment function describes: 𝓛 (large values) or 𝓛̃ (small values).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Max,
    Min,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Max => "large",
            Side::Min => "small",
        }
    }
}

/// 𝓛 and its first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMomentValues {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Per-prime data: atom weights and log-magnitudes of |1 − x/p|^{-2}.
#[derive(Debug)]
struct PrimeAtoms {
    cutoff: u64,
    w0: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    e0: Vec<f64>,
}

impl PrimeAtoms {
    fn build(cutoff: u64) -> Self {
        let primes = primes_up_to(cutoff);
        let n = primes.len();
        let mut a = PrimeAtoms {
            cutoff,
            w0: Vec::with_capacity(n),
            w1: Vec::with_capacity(n),
            w2: Vec::with_capacity(n),
            c1: Vec::with_capacity(n),
            c2: Vec::with_capacity(n),
            e0: Vec::with_capacity(n),
        };
        for p in primes {
            let pf = p as f64;
            let (w0, alpha) = if p % 3 == 1 {
                (2.0 / (pf + 2.0), pf / (pf + 2.0))
            } else {
                (0.0, 1.0)
            };
            let (w0, w1, w2, c1, c2, e0) = atoms(pf, alpha, w0);
            a.w0.push(w0);
            a.w1.push(w1);
            a.w2.push(w2);
            a.c1.push(c1);
            a.c2.push(c2);
            a.e0.push(e0);
        }
        a
    }
}

#[inline]
fn atoms(p: f64, alpha: f64, w0: f64) -> (f64, f64, f64, f64, f64, f64) {
    let inv = 1.0 / p;
    let c1 = -2.0 * (-inv).ln_1p();
    let c2 = -(inv + inv * inv).ln_1p();
    let e0 = -(2.0 * alpha / 3.0) * (-inv * inv * inv).ln_1p();
    (w0, alpha / 3.0, 2.0 * alpha / 3.0, c1, c2, e0)
}

/// log E_p(s), d/ds log E_p(s) and d²/ds² log E_p(s) from the three atoms.
#[inline]
fn log_ep_parts(s: f64, w0: f64, w1: f64, w2: f64, c1: f64, c2: f64, e0: f64) -> (f64, f64, f64) {
    if s.abs() * c1.abs().max(c2.abs()) <= 0.5 {
        let x1 = s * c1;
        let x2 = s * c2;
        let em1 = s * e0 + w1 * expm1_minus_x(x1) + w2 * expm1_minus_x(x2);
        let e = 1.0 + em1;
        let d1 = e0 + w1 * c1 * x1.exp_m1() + w2 * c2 * x2.exp_m1();
        let d2 = w1 * c1 * c1 * x1.exp() + w2 * c2 * c2 * x2.exp();
        let mean = d1 / e;
        (em1.ln_1p(), mean, d2 / e - mean * mean)
    } else {
        let l0 = if w0 > 0.0 { w0.ln() } else { f64::NEG_INFINITY };
        let l1 = w1.ln() + s * c1;
        let l2 = w2.ln() + s * c2;
        let m = l0.max(l1).max(l2);
        let (q0, q1, q2) = ((l0 - m).exp(), (l1 - m).exp(), (l2 - m).exp());
        let tot = q0 + q1 + q2;
        let (p1, p2) = (q1 / tot, q2 / tot);
        let mean = p1 * c1 + p2 * c2;
        let var = (1.0 - p1 - p2) * mean * mean + p1 * (c1 - mean).powi(2) + p2 * (c2 - mean).powi(2);
        (m + tot.ln(), mean, var)
    }
}

/// The log-moment function 𝓛(r) = Σ_p log E_p(r) (side `Max`) or
/// 𝓛̃(r) = Σ_p log E_p(−r) (side `Min`).
///
/// Primes up to the cutoff are summed explicitly. Beyond it the sum is
/// replaced by ∫ dt/log t of the average of the split and non-split
/// summands (each class carries half the primes), integrated numerically in
/// log t until the summand is negligible and closed off analytically.
#[derive(Debug, Clone)]
pub struct LogMomentFn {
    side: Side,
    tail_correction: bool,
    atoms: Arc<PrimeAtoms>,
    gl: Arc<GaussLegendre>,
}

const TAIL_PANEL: f64 = 0.25;
const TAIL_NODES: usize = 12;
const TAIL_EXTENT: f64 = 40.0;
const CHUNK: usize = 4096;

impl LogMomentFn {
    pub fn new(side: Side, prime_cutoff: u64) -> Result<Self> {
        if prime_cutoff < 100 {
            return precondition(format!("prime cutoff must be >= 100, got {prime_cutoff}"));
        }
        Ok(Self {
            side,
            tail_correction: true,
            atoms: Arc::new(PrimeAtoms::build(prime_cutoff)),
            gl: Arc::new(GaussLegendre::new(TAIL_NODES)),
        })
    }

    pub fn with_default_cutoff(side: Side) -> Self {
        Self::new(side, DEFAULT_PRIME_CUTOFF).expect("default cutoff is valid")
    }

    /// Same prime data, other side.
    pub fn with_side(&self, side: Side) -> Self {
        Self { side, ..self.clone() }
    }

    pub fn without_tail_correction(mut self) -> Self {
        self.tail_correction = false;
        self
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn prime_cutoff(&self) -> u64 {
        self.atoms.cutoff
    }

    pub fn has_tail_correction(&self) -> bool {
        self.tail_correction
    }

    /// Warns when the uncorrected sum is used at an `r` its cutoff cannot support.
    pub fn tail_warning(&self, r: f64) -> Option<String> {
        (!self.tail_correction && r * 200.0 > self.atoms.cutoff as f64).then(|| {
            format!(
                "prime cutoff {} is below 200 r = {:.3e} and the tail correction is off",
                self.atoms.cutoff,
                200.0 * r
            )
        })
    }

    fn sum_explicit(&self, s: f64) -> [f64; 3] {
        let a = &*self.atoms;
        let n = a.w1.len();
        let parts = par::map_range(n.div_ceil(CHUNK), |k| {
            let lo = k * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut acc = [KahanSum::new(); 3];
            for i in lo..hi {
                let (l, m, v) = log_ep_parts(s, a.w0[i], a.w1[i], a.w2[i], a.c1[i], a.c2[i], a.e0[i]);
                acc[0].add(l);
                acc[1].add(m);
                acc[2].add(v);
            }
            acc
        });
        let mut tot = [KahanSum::new(); 3];
        for p in &parts {
            for j in 0..3 {
                tot[j].merge(&p[j]);
            }
        }
        tot.map(|k| k.value())
    }

    fn sum_tail(&self, s: f64) -> [f64; 3] {
        let lo = (self.atoms.cutoff as f64).ln();
        let hi = lo.max(s.abs().max(1.0).ln()) + TAIL_EXTENT;
        let body = self.gl.integrate_composite_n(lo, hi, TAIL_PANEL, |u| {
            let t = u.exp();
            let jac = t / u;
            let split_alpha = t / (t + 2.0);
            let (w0, w1, w2, c1, c2, e0) = atoms(t, split_alpha, 2.0 / (t + 2.0));
            let a = log_ep_parts(s, w0, w1, w2, c1, c2, e0);
            let (w0, w1, w2, c1, c2, e0) = atoms(t, 1.0, 0.0);
            let b = log_ep_parts(s, w0, w1, w2, c1, c2, e0);
            [
                0.5 * jac * (a.0 + b.0),
                0.5 * jac * (a.1 + b.1),
                0.5 * jac * (a.2 + b.2),
            ]
        });
        // log E_t(s) ≈ s²/t² far beyond |s|
        let big_t = hi.exp();
        let k = 1.0 / (big_t * hi);
        [body[0] + s * s * k, body[1] + 2.0 * s * k, body[2] + 2.0 * k]
    }

    /// 𝓛 (or 𝓛̃) with first and second derivatives in r.
    pub fn eval(&self, r: f64) -> Result<LogMomentValues> {
        if !(r >= 0.0 && r.is_finite()) {
            return precondition(format!("log-moment argument must be finite and >= 0, got {r}"));
        }
        let s = match self.side {
            Side::Max => r,
            Side::Min => -r,
        };
        let mut v = self.sum_explicit(s);
        if self.tail_correction {
            let t = self.sum_tail(s);
            for j in 0..3 {
                v[j] += t[j];
            }
        }
        let sign = if self.side == Side::Max { 1.0 } else { -1.0 };
        Ok(LogMomentValues {
            value: v[0],
            d1: sign * v[1],
            d2: v[2],
        })
    }

    /// 𝓛(r), 𝓛′(r) or 𝓛″(r) for `deriv` = 0, 1, 2.
    pub fn log_moment(&self, r: f64, deriv: u8) -> Result<f64> {
        let v = self.eval(r)?;
        match deriv {
            0 => Ok(v.value),
            1 => Ok(v.d1),
            2 => Ok(v.d2),
            _ => precondition(format!("derivative order must be 0, 1 or 2, got {deriv}")),
        }
    }
}

/// C_max, C_min and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub c_max: f64,
    pub c_min: f64,
    /// C_3, which equals √ζ(3)
    pub c3: f64,
    pub zeta3: f64,
    pub zeta2: f64,
    pub euler_gamma: f64,
    /// Absolute tolerance requested from the quadrature
    pub quad_tol: f64,
}

impl ModelConstants {
    pub fn c_ell(&self, ell: u64) -> Result<f64> {
        c_ell(ell, DEFAULT_PRIME_CUTOFF)
    }
}

/// f′(t)/t on [0, 1] for the large-value constant.
fn cmax_inner(t: f64) -> f64 {
    if t == 0.0 {
        return 2.0;
    }
    2.0 * (-t).exp() * (3.0 * t).exp_m1() / (t * ((2.0 * t).exp() + 2.0 * (-t).exp()))
}

fn cmax_outer(t: f64) -> f64 {
    -6.0 / (t * ((3.0 * t).exp() + 2.0))
}

fn cmin_inner(t: f64) -> f64 {
    if t == 0.0 {
        return 2.0;
    }
    2.0 * (-2.0 * t).exp() * (3.0 * t).exp_m1() / (t * ((-2.0 * t).exp() + 2.0 * t.exp()))
}

fn cmin_outer(t: f64) -> f64 {
    -3.0 * (-2.0 * t).exp() / (t * ((-2.0 * t).exp() + 2.0 * t.exp()))
}

/// C_max by adaptive Simpson on [0, 1] and [1, 15] at tolerance `tol`.
pub fn c_max_with_tol(tol: f64) -> Result<f64> {
    let a = adaptive_simpson(&cmax_inner, 0.0, 1.0, tol)?;
    let b = adaptive_simpson(&cmax_outer, 1.0, 15.0, tol)?;
    Ok(0.5 * (a + b))
}

pub fn c_min_with_tol(tol: f64) -> Result<f64> {
    let a = adaptive_simpson(&cmin_inner, 0.0, 1.0, tol)?;
    let b = adaptive_simpson(&cmin_outer, 1.0, 15.0, tol)?;
    Ok(a + b)
}

/// C_ℓ = ∏_p (1 − 1/p)^{−c} (1 + 2c/p + 1/p²)^{−1/2}, c = cos(π/ℓ), with
/// primes up to `cutoff` and the remaining primes through ∫ dt/(t² log t).
pub fn c_ell(ell: u64, cutoff: u64) -> Result<f64> {
    if ell < 3 || !is_prime(ell) {
        return precondition(format!("C_ell needs an odd prime, got {ell}"));
    }
    if cutoff < 100 {
        return precondition(format!("prime cutoff must be >= 100, got {cutoff}"));
    }
    let c = (std::f64::consts::PI / ell as f64).cos();
    let mut acc = KahanSum::new();
    for p in primes_up_to(cutoff) {
        let inv = 1.0 / p as f64;
        acc.add(-c * (-inv).ln_1p() - 0.5 * (2.0 * c * inv + inv * inv).ln_1p());
    }
    // log of the factor is (c² + c/2 − 1/2)/p² + O(1/p³)
    let pc = cutoff as f64;
    acc.add((c * c + 0.5 * c - 0.5) / (pc * pc.ln()));
    Ok(acc.value().exp())
}

/// Table of (ℓ, C_ℓ).
pub fn c_ell_limit_scan(ells: &[u64]) -> Result<Vec<(u64, f64)>> {
    ells.iter().map(|&l| Ok((l, c_ell(l, DEFAULT_PRIME_CUTOFF)?))).collect()
}

/// ζ(3) from Σ_{n ≤ N} n^{-3} plus the Euler–Maclaurin remainder.
pub fn zeta3_series(n: u64) -> f64 {
    let mut acc = KahanSum::new();
    for k in (1..=n).rev() {
        let kf = k as f64;
        acc.add(1.0 / (kf * kf * kf));
    }
    let nf = n as f64;
    acc.add(1.0 / (2.0 * nf * nf) - 1.0 / (2.0 * nf.powi(3)) + 1.0 / (4.0 * nf.powi(4)));
    acc.value()
}

pub fn constants() -> Result<ModelConstants> {
    Ok(ModelConstants {
        c_max: c_max_with_tol(CONSTANT_QUAD_TOL)?,
        c_min: c_min_with_tol(CONSTANT_QUAD_TOL)?,
        c3: c_ell(3, DEFAULT_PRIME_CUTOFF)?,
        zeta3: ZETA3,
        zeta2: ZETA2,
        euler_gamma: EULER_GAMMA,
        quad_tol: CONSTANT_QUAD_TOL,
    })
}

/// `constants()` computed once per process.
pub fn cached_constants() -> &'static ModelConstants {
    static C: OnceLock<ModelConstants> = OnceLock::new();
    C.get_or_init(|| constants().expect("constant quadrature converges"))
}

/// r₃ · F_{3,2}(1): the asymptotic number of cubic characters per unit conductor.
pub fn family_density_cubic(cutoff: u64) -> f64 {
    let mut acc = KahanSum::new();
    for p in primes_up_to(cutoff) {
        let inv = 1.0 / p as f64;
        acc.add(match p % 3 {
            1 => (2.0 * inv).ln_1p() + 2.0 * (-inv).ln_1p(),
            2 => (-inv * inv).ln_1p(),
            _ => (-inv).ln_1p(),
        });
    }
    let pc = cutoff as f64;
    acc.add(-2.0 / (pc * pc.ln()));
    let r3 = std::f64::consts::PI / (3.0 * 3f64.sqrt());
    r3 * acc.value().exp()
}

/// Saddle point κ(τ) with 𝓛 and its derivatives there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    pub tau: f64,
    pub side: Side,
    pub kappa: f64,
    pub l: f64,
    pub lp: f64,
    pub lpp: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Right-hand side of the saddle equation.
pub fn saddle_target(side: Side, tau: f64) -> f64 {
    match side {
        Side::Max => 2.0 * (tau.ln() + EULER_GAMMA),
        Side::Min => 2.0 * tau.ln() + EULER_GAMMA - ZETA3.ln(),
    }
}

const SADDLE_MAX_ITER: usize = 200;
const SADDLE_TOL: f64 = 1e-12;

/// Solves 𝓛′(κ) = target(τ) by safeguarded Newton in u = log κ.
pub fn solve_saddle(f: &LogMomentFn, tau: f64) -> Result<SaddleSolution> {
    if !(tau > 0.0 && tau.is_finite()) {
        return precondition(format!("tau must be positive, got {tau}"));
    }
    let side = f.side();
    let target = saddle_target(side, tau);
    let consts = cached_constants();
    let g = |u: f64| -> Result<(f64, LogMomentValues)> {
        let v = f.eval(u.exp())?;
        Ok((v.d1 - target, v))
    };
    let u0 = match side {
        Side::Max => tau - consts.c_max,
        Side::Min => tau * tau - consts.c_min,
    }
    .clamp(-30.0, 200.0);

    let (mut lo, mut hi) = (u0, u0);
    let (mut g0, mut v0) = g(u0)?;
    let mut iterations = 0usize;
    let mut step = 1.0;
    if g0 > 0.0 {
        let mut glo = g0;
        while glo > 0.0 {
            iterations += 1;
            hi = lo;
            lo -= step;
            step *= 2.0;
            if lo < -60.0 {
                return precondition(format!(
                    "saddle target {target:.6} at tau = {tau} lies below the infimum of the derivative"
                ));
            }
            glo = g(lo)?.0;
        }
    } else {
        let mut ghi = g0;
        while ghi < 0.0 {
            iterations += 1;
            lo = hi;
            hi += step;
            step *= 2.0;
            if hi > 700.0 || iterations > SADDLE_MAX_ITER {
                return Err(LabError::NoConvergence { iterations, lo, hi });
            }
            ghi = g(hi)?.0;
        }
    }
    let mut u = u0.clamp(lo, hi);
    if u != u0 {
        (g0, v0) = g(u)?;
    }
    while iterations < SADDLE_MAX_ITER {
        iterations += 1;
        if g0.abs() < SADDLE_TOL {
            break;
        }
        if g0 < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let kappa = u.exp();
        let slope = v0.d2 * kappa;
        let mut next = u - g0 / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() < 1e-15 * u.abs().max(1.0) {
            u = next;
            (g0, v0) = g(u)?;
            break;
        }
        u = next;
        (g0, v0) = g(u)?;
    }
    if g0.abs() >= 1e-10 {
        return Err(LabError::NoConvergence { iterations, lo: lo.exp(), hi: hi.exp() });
    }
    Ok(SaddleSolution {
        tau,
        side,
        kappa: u.exp(),
        l: v0.value,
        lp: v0.d1,
        lpp: v0.d2,
        residual: g0.abs(),
        iterations,
    })
}

/// How a tail value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailMethod {
    Empirical,
    MonteCarlo,
    Saddle,
    Asymptotic,
}

impl TailMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TailMethod::Empirical => "empirical",
            TailMethod::MonteCarlo => "montecarlo",
            TailMethod::Saddle => "saddle",
            TailMethod::Asymptotic => "asymptotic",
        }
    }
}

/// A model tail probability kept in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub tau: f64,
    pub side: Side,
    pub method: TailMethod,
    /// natural log of the probability
    pub ln_value: f64,
    pub kappa: Option<f64>,
    /// τ < 1: the formulas are only meaningful for large τ
    pub outside_regime: bool,
}

impl TailValue {
    pub fn log10(&self) -> f64 {
        self.ln_value / std::f64::consts::LN_10
    }

    /// The probability itself, when it does not underflow.
    pub fn value(&self) -> Option<f64> {
        let v = self.ln_value.exp();
        (v > 0.0 && v.is_normal()).then_some(v)
    }
}

/// Φ(τ) = ℙ(|L(1, 𝕏)| > e^γ τ).
pub fn tail_phi(f: &LogMomentFn, tau: f64, method: TailMethod) -> Result<TailValue> {
    tail(f, Side::Max, tau, method)
}

/// Ψ(τ) = ℙ(|L(1, 𝕏)| < (ζ(3)/e^γ)^{1/2} / τ).
pub fn tail_psi(f: &LogMomentFn, tau: f64, method: TailMethod) -> Result<TailValue> {
    tail(f, Side::Min, tau, method)
}

fn tail(f: &LogMomentFn, side: Side, tau: f64, method: TailMethod) -> Result<TailValue> {
    if !(tau > 0.0 && tau.is_finite()) {
        return precondition(format!("tau must be positive, got {tau}"));
    }
    let consts = cached_constants();
    let (ln_value, kappa) = match method {
        TailMethod::Asymptotic => match side {
            Side::Max => (-2.0 * (tau - consts.c_max).exp() / tau, None),
            Side::Min => (-(tau * tau - consts.c_min).exp() / (tau * tau), None),
        },
        TailMethod::Saddle => {
            let f = if f.side() == side { f.clone() } else { f.with_side(side) };
            let s = solve_saddle(&f, tau)?;
            let k = s.kappa;
            let gauss = (k * (std::f64::consts::TAU * s.lpp).sqrt()).ln();
            let ln = match side {
                Side::Max => s.l - 2.0 * k * (tau.ln() + EULER_GAMMA) - gauss,
                Side::Min => s.l + k * ZETA3.ln() - k * (EULER_GAMMA + 2.0 * tau.ln()) - gauss,
            };
            (ln, Some(k))
        }
        _ => return precondition("model tails are computed by the saddle or asymptotic method"),
    };
    Ok(TailValue {
        tau,
        side,
        method,
        ln_value,
        kappa,
        outside_regime: tau < 1.0,
    })
}

/// Predicted extreme values of |L(1, χ)| over conductors up to X, with o(1) = 0.
pub fn conjecture_extremes(x: f64) -> Result<(f64, f64)> {
    if x < 1e3 {
        return precondition(format!("conjecture_extremes needs X >= 1000, got {x}"));
    }
    let c = cached_constants();
    let l2 = x.ln().ln();
    let l3 = l2.ln();
    let eg = EULER_GAMMA.exp();
    let max_pred = eg * (l2 + l3 + c.c_max - std::f64::consts::LN_2);
    let min_pred = (ZETA3 / (eg * (l2 + l3 + c.c_min))).sqrt();
    Ok((max_pred, min_pred))
}

/// Thresholds e^γ(log₂X + log₃X − log(2 log 3)) for large values and
/// (ζ(3) / (e^γ(log₂X + log₃X − log(2 log 3))))^{1/2} for small values.
pub fn omega_thresholds(x: f64) -> Result<(f64, f64)> {
    if x < 1e3 {
        return precondition(format!("omega thresholds need X >= 1000, got {x}"));
    }
    let l2 = x.ln().ln();
    let l3 = l2.ln();
    let inner = EULER_GAMMA.exp() * (l2 + l3 - (2.0 * 3f64.ln()).ln());
    Ok((inner, (ZETA3 / inner).sqrt()))
}

/// Upper end log₂X − log₃X − log₄X − 2 of the τ-range where the family
/// tails are known to follow the model; may be negative for small X.
pub fn family_tau_range_end(x: f64) -> f64 {
    let l2 = x.ln().ln();
    let l3 = l2.ln();
    let l4 = l3.ln();
    l2 - l3 - l4 - 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws() {
        let m = RandomCharModel::cubic();
        let l7 = m.x_law(7);
        assert_eq!(l7.zero, Ratio::new(2, 9));
        assert!(l7.roots.iter().all(|r| *r == Ratio::new(7, 27)));
        for p in [2u64, 3, 5] {
            let l = m.x_law(p);
            assert_eq!(l.zero, Ratio::from_integer(0));
            assert!(l.roots.iter().all(|r| *r == Ratio::new(1, 3)));
        }
        for ell in [3u64, 5, 7, 11] {
            let m = RandomCharModel::new(ell).unwrap();
            for p in primes_up_to(500) {
                assert_eq!(m.x_law(p).total(), Ratio::from_integer(1));
            }
        }
        assert!(RandomCharModel::new(9).is_err());
    }

    #[test]
    fn cube_expectations() {
        let m = RandomCharModel::cubic();
        assert_eq!(m.expect_x(8).unwrap(), 1.0);
        assert_eq!(m.expect_x_exact(343).unwrap(), Ratio::new(7, 9));
        assert_eq!(m.expect_x(12).unwrap(), 0.0);
        assert_eq!(m.expect_x(1).unwrap(), 1.0);
    }

    #[test]
    fn ep_closed_form_values() {
        let m = RandomCharModel::cubic();
        let one = Complex64::new(1.0, 0.0);
        assert!((m.ep(11, Complex64::new(0.0, 0.0)) - one).norm() < 1e-15);
        assert!((m.ep(2, one).re - 12.0 / 7.0).abs() < 1e-14);
        // the general-ℓ path at ℓ = 3 must reproduce the closed form
        let gen = RandomCharModel { ell: 3 };
        let z = Complex64::new(0.7, -1.3);
        let direct = {
            let alpha = gen.alpha_f64(13);
            let mut acc = Complex64::new(1.0 - alpha, 0.0);
            for k in 0..3 {
                let th = std::f64::consts::TAU * k as f64 / 3.0;
                let sq = 1.0 - 2.0 * th.cos() / 13.0 + 1.0 / 169.0;
                acc += (-z * sq.ln()).exp() * (alpha / 3.0);
            }
            acc
        };
        assert!((m.ep(13, z) - direct).norm() < 1e-13);
    }

    #[test]
    fn log_ep_regimes_agree() {
        // near the regime switch both branches must give the same numbers
        let p = 7.0;
        let (w0, w1, w2, c1, c2, e0) = atoms(p, p / (p + 2.0), 2.0 / (p + 2.0));
        let s = 0.5 / c1.abs().max(c2.abs());
        let a = log_ep_parts(s, w0, w1, w2, c1, c2, e0);
        let l0 = w0.ln();
        let l1 = w1.ln() + s * c1;
        let l2 = w2.ln() + s * c2;
        let tot = l0.exp() + l1.exp() + l2.exp();
        assert!((a.0 - tot.ln()).abs() < 1e-14);
        let mean = (l1.exp() * c1 + l2.exp() * c2) / tot;
        assert!((a.1 - mean).abs() < 1e-13);
    }

    #[test]
    fn constants_match_reference() {
        let c = constants().unwrap();
        assert!((c.c_max - 0.98727).abs() < 1e-4);
        assert!((c.c_min - 1.40459).abs() < 1e-4);
        assert!((c.c3 - ZETA3.sqrt()).abs() < 1e-9);
        let coarse = c_max_with_tol(2.0 * CONSTANT_QUAD_TOL).unwrap();
        assert!((coarse - c.c_max).abs() < 1e-8);
    }

    #[test]
    fn literals_match_series() {
        assert!((zeta3_series(10_000) - ZETA3).abs() < 1e-15);
        // γ = lim H_n − log n, with H_n − log n − 1/(2n) + 1/(12 n²) − γ = O(n⁻⁴)
        let n = 100_000u64;
        let h: KahanSum = (1..=n).rev().map(|k| 1.0 / k as f64).collect();
        let nf = n as f64;
        let g = h.value() - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf * nf);
        assert!((g - EULER_GAMMA).abs() < 1e-13);
    }

    #[test]
    fn c_ell_trend() {
        let t = c_ell_limit_scan(&[5, 11, 101]).unwrap();
        let d: Vec<f64> = t.iter().map(|(_, c)| (c - ZETA2).abs()).collect();
        assert!(d[2] < d[1] && d[1] < d[0]);
    }

    #[test]
    fn family_density_value() {
        let d = family_density_cubic(1_000_000);
        assert!((d - 0.2594).abs() < 5e-4, "{d}");
    }

    #[test]
    fn extremes_ordering() {
        let (mx, mn) = conjecture_extremes(1e6).unwrap();
        assert!(mn < ZETA3.sqrt() && ZETA3.sqrt() < mx);
        for x in [1e3, 1e6, 1e12, 1e30] {
            let (mx, _) = conjecture_extremes(x).unwrap();
            assert!(mx > EULER_GAMMA.exp() * x.ln().ln());
            assert!(omega_thresholds(x).unwrap().0 < mx);
        }
        assert!(family_tau_range_end(1e5) < 0.0);
    }
}
