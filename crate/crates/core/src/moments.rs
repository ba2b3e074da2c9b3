//! Moments 𝔼|L(1, 𝕏; y)|^{2z} of the truncated random Euler product, by two
//! independent routes: the divisor double sum over pairs (n, m) with nm² a
//! cube, and the product of the local factors E_p(z).

use std::io::Write;

use num_complex::Complex64;

use crate::error::{budget, precondition, Result};
use crate::numeric::{fmt_sig, KahanSum};
use crate::primes::{factorize, primes_up_to};
use crate::randmodel::RandomCharModel;

/// d_z(p^a) = z(z + 1)⋯(z + a − 1)/a!
pub fn d_z_prime_power(a: u32, z: f64) -> f64 {
    let mut acc = 1.0;
    for j in 0..a {
        acc *= (z + j as f64) / (j + 1) as f64;
    }
    acc
}

/// The z-th divisor function, extended multiplicatively.
pub fn d_z(n: u64, z: f64) -> f64 {
    assert!(n >= 1, "d_z is defined for n >= 1");
    factorize(n)
        .into_iter()
        .map(|(_, a)| d_z_prime_power(a, z))
        .product()
}

/// d_z for a fixed z, with a small cache of prime-power values.
#[derive(Debug, Clone)]
pub struct ZDivisor {
    z: f64,
    powers: Vec<f64>,
}

impl ZDivisor {
    pub fn new(z: f64) -> Self {
        let mut powers = vec![1.0];
        for a in 0..64 {
            let last = powers[a];
            powers.push(last * (z + a as f64) / (a + 1) as f64);
        }
        Self { z, powers }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn prime_power(&self, a: u32) -> f64 {
        self.powers
            .get(a as usize)
            .copied()
            .unwrap_or_else(|| d_z_prime_power(a, self.z))
    }

    pub fn eval(&self, n: u64) -> f64 {
        factorize(n).into_iter().map(|(_, a)| self.prime_power(a)).product()
    }
}

/// Parameters of a moment evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    pub z: f64,
    /// smoothness bound for n and m, and the Euler product cutoff
    pub y: u64,
    /// bound applied to each of r, s, t in n = r s³, m = r t³
    pub sum_bound: u64,
    /// tail estimate above which a warning is attached
    pub tolerance: f64,
}

impl MomentSpec {
    pub fn new(z: f64, y: u64) -> Self {
        Self {
            z,
            y,
            sum_bound: 1_000_000,
            tolerance: 1e-10,
        }
    }

    pub fn with_sum_bound(mut self, bound: u64) -> Self {
        self.sum_bound = bound;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.y < 2 {
            return precondition(format!("moment cutoff y must be >= 2, got {}", self.y));
        }
        if !self.z.is_finite() {
            return precondition("z must be finite");
        }
        if self.sum_bound < 10 {
            return precondition(format!("sum bound must be >= 10, got {}", self.sum_bound));
        }
        Ok(())
    }
}

/// Result of the double-sum evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSum {
    pub value: f64,
    /// |S(B) − S(B/10)| for the bound B in use
    pub tail_estimate: f64,
    pub warning: Option<String>,
}

/// Largest number of split primes below y the double sum accepts.
pub const MAX_SPLIT_PRIMES: usize = 10;
const MAX_PAIR_WORK: u128 = 200_000_000;

/// y-smooth numbers up to `bound` with their exponent vectors over `primes`.
fn smooth_numbers(primes: &[u64], bound: u64) -> Vec<(u64, Vec<u8>)> {
    let mut out = vec![(1u64, vec![0u8; primes.len()])];
    for (i, &p) in primes.iter().enumerate() {
        let mut extra = Vec::new();
        for (n, e) in &out {
            let mut m = *n;
            let mut ex = e.clone();
            while let Some(next) = m.checked_mul(p).filter(|&v| v <= bound) {
                m = next;
                ex[i] += 1;
                extra.push((m, ex.clone()));
            }
        }
        out.extend(extra);
    }
    out.sort_unstable_by_key(|(n, _)| *n);
    out
}

/// Σ over y-smooth n, m with nm² a cube of d_z(n) d_z(m)/(nm) · 𝔼 𝕏(nm²).
///
/// Pairs are enumerated as n = r s³, m = r t³ with r cube-free. For each r
/// the inner sums over s (and t) are grouped by which split primes they
/// introduce beyond those of r, so the pair sum is a small quadratic form.
pub fn moment_double_sum(spec: &MomentSpec) -> Result<MomentSum> {
    spec.validate()?;
    let full = double_sum_at(spec, spec.sum_bound)?;
    let coarse = double_sum_at(spec, (spec.sum_bound / 10).max(2))?;
    let tail_estimate = (full - coarse).abs();
    let warning = (tail_estimate > spec.tolerance * full.abs().max(1.0)).then(|| {
        format!(
            "double-sum truncation at {} leaves an estimated tail of {:.3e}",
            spec.sum_bound, tail_estimate
        )
    });
    Ok(MomentSum {
        value: full,
        tail_estimate,
        warning,
    })
}

fn double_sum_at(spec: &MomentSpec, bound: u64) -> Result<f64> {
    let primes = primes_up_to(spec.y);
    let split: Vec<usize> = (0..primes.len()).filter(|&i| primes[i] % 3 == 1).collect();
    if split.len() > MAX_SPLIT_PRIMES {
        return budget(format!(
            "double sum over {} split primes exceeds the limit of {MAX_SPLIT_PRIMES}",
            split.len()
        ));
    }
    let smooth = smooth_numbers(&primes, bound);
    let cube_free: Vec<&(u64, Vec<u8>)> = smooth.iter().filter(|(_, e)| e.iter().all(|&a| a < 3)).collect();
    let work = cube_free.len() as u128 * smooth.len() as u128;
    if work > MAX_PAIR_WORK {
        return budget(format!(
            "double sum needs {} (r, s) pairs, limit is {MAX_PAIR_WORK}",
            work
        ));
    }
    let dz = ZDivisor::new(spec.z);
    let masks = 1usize << split.len();
    let alpha: Vec<f64> = split
        .iter()
        .map(|&i| {
            let p = primes[i] as f64;
            p / (p + 2.0)
        })
        .collect();
    let alpha_of = |mask: usize| -> f64 {
        (0..split.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| alpha[b])
            .product()
    };
    let mask_of = |e: &[u8]| -> usize {
        split
            .iter()
            .enumerate()
            .filter(|(_, &i)| e[i] > 0)
            .fold(0, |m, (b, _)| m | 1 << b)
    };
    let alpha_table: Vec<f64> = (0..masks).map(alpha_of).collect();

    let per_r = crate::par::map(&cube_free, |(r, er)| {
        let r_mask = mask_of(er);
        let mut groups = vec![KahanSum::new(); masks];
        for (s, es) in &smooth {
            let mut d = 1.0;
            for i in 0..primes.len() {
                let a = er[i] as u32 + 3 * es[i] as u32;
                if a > 0 {
                    d *= dz.prime_power(a);
                }
            }
            let sf = *s as f64;
            groups[mask_of(es) & !r_mask].add(d / (sf * sf * sf));
        }
        let g: Vec<f64> = groups.iter().map(|k| k.value()).collect();
        let mut acc = KahanSum::new();
        for a in 0..masks {
            if g[a] == 0.0 {
                continue;
            }
            for b in 0..masks {
                if g[b] != 0.0 {
                    acc.add(g[a] * g[b] * alpha_table[r_mask | a | b]);
                }
            }
        }
        let rf = *r as f64;
        acc.value() / (rf * rf)
    });
    Ok(per_r.iter().copied().collect::<KahanSum>().value())
}

/// ∏_{p ≤ y} E_p(z).
pub fn moment_euler_product(y: u64, z: f64) -> Result<f64> {
    if y < 2 {
        return precondition(format!("moment cutoff y must be >= 2, got {y}"));
    }
    let model = RandomCharModel::cubic();
    let zc = Complex64::new(z, 0.0);
    let logs: KahanSum = primes_up_to(y).into_iter().map(|p| model.ep(p, zc).re.ln()).collect();
    Ok(logs.value().exp())
}

/// c_{p,ω^j}(z) = (1/3) Σ_k ω^{jk} (1 − ω^k/p)^{−z} for j = 0, 1, 2; real for real z.
pub fn c_coefficients(p: u64, z: f64) -> [f64; 3] {
    let pf = p as f64;
    let root = |k: u32| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 3.0);
    let f: Vec<Complex64> = (0..3)
        .map(|k| (Complex64::new(1.0, 0.0) - root(k) / pf).powc(Complex64::new(-z, 0.0)))
        .collect();
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let s: Complex64 = (0..3).map(|k| root(j as u32 * k) * f[k as usize]).sum();
        *o = s.re / 3.0;
    }
    out
}

/// Average of |L(1, χ)|^{2z} over a list of |L| values.
pub fn family_moment(abs_values: &[f64], z: f64) -> Result<f64> {
    if abs_values.is_empty() {
        return precondition("family moment over an empty slice");
    }
    if !z.is_finite() {
        return precondition("z must be finite");
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let s: KahanSum = abs_values.iter().map(|a| (2.0 * z * a.ln()).exp()).collect();
    Ok(s.value() / abs_values.len() as f64)
}

/// One row of a moment sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub z: f64,
    pub y: u64,
    pub double_sum: Option<f64>,
    pub euler_product: f64,
}

impl MomentRow {
    pub fn rel_diff(&self) -> Option<f64> {
        self.double_sum
            .map(|d| (d - self.euler_product).abs() / self.euler_product.abs())
    }
}

/// Writes `z,y,double_sum,euler_product,rel_diff`; missing values are empty fields.
pub fn write_moment_sweep<W: Write>(rows: &[MomentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["z", "y", "double_sum", "euler_product", "rel_diff"])?;
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    for r in rows {
        w.write_record([
            fmt_sig(r.z),
            r.y.to_string(),
            opt(r.double_sum),
            fmt_sig(r.euler_product),
            opt(r.rel_diff()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisor_examples() {
        assert_eq!(d_z(7, 0.5), 0.5);
        assert_eq!(d_z(12, 2.0), 6.0);
        assert_eq!(d_z(4, 0.5), 0.375);
        assert_eq!(d_z(1, -3.7), 1.0);
        assert_eq!(d_z(30, 0.0), 0.0);
        // rising product has a zero at z = −1 for a >= 2
        assert_eq!(d_z_prime_power(3, -1.0), 0.0);
        assert_eq!(ZDivisor::new(1.5).eval(360), d_z(360, 1.5));
    }

    #[test]
    fn integer_z_counts_factorizations() {
        // number of ordered k-tuples with product n, by recursion over divisors
        fn count(n: u64, k: u32) -> u64 {
            if k == 1 {
                return 1;
            }
            (1..=n).filter(|d| n % d == 0).map(|d| count(n / d, k - 1)).sum()
        }
        for k in 1..=4u32 {
            for n in 1..=500u64 {
                assert_eq!(d_z(n, k as f64), count(n, k) as f64, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn zero_moment_is_one() {
        let s = moment_double_sum(&MomentSpec::new(0.0, 13)).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
        assert_eq!(moment_euler_product(13, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn single_prime_matches_local_factor() {
        let s = moment_double_sum(&MomentSpec::new(1.0, 2)).unwrap();
        assert!((s.value - 12.0 / 7.0).abs() < 1e-8, "{}", s.value);
    }

    #[test]
    fn smooth_enumeration() {
        let s = smooth_numbers(&[2, 3], 20);
        let ns: Vec<u64> = s.iter().map(|(n, _)| *n).collect();
        assert_eq!(ns, vec![1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
    }

    #[test]
    fn large_y_is_refused() {
        let r = moment_double_sum(&MomentSpec::new(1.0, 200));
        assert!(matches!(r, Err(crate::LabError::Budget(_))));
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = [
            MomentRow { z: 1.0, y: 2, double_sum: Some(12.0 / 7.0), euler_product: 12.0 / 7.0 },
            MomentRow { z: -1.0, y: 10_000, double_sum: None, euler_product: 0.5 },
        ];
        let mut buf = Vec::new();
        write_moment_sweep(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "z,y,double_sum,euler_product,rel_diff");
        assert_eq!(lines[1], "1.00000000000,2,1.71428571429,1.71428571429,0");
        assert_eq!(lines[2], "-1.00000000000,10000,,0.500000000000,");
    }
}
