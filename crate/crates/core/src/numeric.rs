//! Small numerical toolkit: compensated summation, quadrature rules and the
//! fixed mathematical constants used throughout the crate.

use crate::error::{LabError, Result};

/// Euler–Mascheroni constant, 20+ digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;
/// Apéry's constant ζ(3), 20+ digits.
pub const ZETA3: f64 = 1.202_056_903_159_594_285_40;
/// ζ(2) = π²/6.
pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `expm1(x) - x`, accurate for small `|x|`.
#[inline]
pub fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // x²/2! + x³/3! + ... ; 12 terms reach 1e-17 relative for |x| < 0.1
        let mut term = x * x / 2.0;
        let mut acc = term;
        for k in 3..15 {
            term *= x / k as f64;
            acc += term;
        }
        acc
    } else {
        x.exp_m1() - x
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `tol` is an absolute tolerance for the whole interval; it is split between
/// halves as the recursion descends.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 48;
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 0usize;
    let r = simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut evals)?;
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > 5_000_000 {
        return Err(LabError::Quadrature(format!(
            "evaluation budget exhausted on [{a}, {b}]"
        )));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        if delta.abs() <= 15.0 * tol * 1e3 {
            return Ok(left + right + delta / 15.0);
        }
        return Err(LabError::Quadrature(format!(
            "maximum depth reached on [{a}, {b}] with error {delta:e}"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals)?
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals)?,
    )
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = KahanSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(w * f(c + h * x));
        }
        h * s.value()
    }

    /// Composite rule over equal panels no wider than `max_panel`.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        max_panel: f64,
        mut f: F,
    ) -> f64 {
        self.integrate_composite_n(a, b, max_panel, |x| [f(x)])[0]
    }

    /// Composite rule applied to `K` integrands sharing their evaluation points.
    pub fn integrate_composite_n<const K: usize, F: FnMut(f64) -> [f64; K]>(
        &self,
        a: f64,
        b: f64,
        max_panel: f64,
        mut f: F,
    ) -> [f64; K] {
        let mut acc = [KahanSum::new(); K];
        if b <= a {
            return [0.0; K];
        }
        let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
        let w = (b - a) / panels as f64;
        let h = 0.5 * w;
        for k in 0..panels {
            let c = a + w * k as f64 + h;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                let v = f(c + h * x);
                for (s, vi) in acc.iter_mut().zip(v) {
                    s.add(wt * h * vi);
                }
            }
        }
        acc.map(|s| s.value())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Formats `x` with 12 significant digits (fixed notation when the exponent is
/// moderate, scientific otherwise).
pub fn fmt_sig(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Round first so the exponent is taken from the printed value.
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if (-5..SIG).contains(&exp) {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}
