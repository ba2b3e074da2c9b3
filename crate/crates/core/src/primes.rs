//! Prime generation: a segmented odd-only sieve, residue-class filters,
//! deterministic primality and factorization for 64-bit integers, and
//! Mertens-type partial Euler products.

use crate::error::{budget, precondition, Result};
use crate::numeric::KahanSum;

/// Odd numbers covered by one sieve segment (one bit each).
pub const SEGMENT_BITS: usize = 1 << 20;

/// Default memory ceiling for a sieve run, in bytes.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Residue-class restriction applied to the primes of a range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ClassFilter {
    #[default]
    Any,
    /// p ≡ residue (mod modulus)
    Congruent { modulus: u64, residue: u64 },
    /// p ≢ residue (mod modulus)
    NotCongruent { modulus: u64, residue: u64 },
}

impl ClassFilter {
    /// Primes that split in ℤ[ω]: p ≡ 1 mod 3.
    pub const SPLIT: ClassFilter = ClassFilter::Congruent { modulus: 3, residue: 1 };
    /// Inert or ramified primes: p ≡ 2 mod 3 or p = 3.
    pub const NON_SPLIT: ClassFilter = ClassFilter::NotCongruent { modulus: 3, residue: 1 };

    #[inline]
    pub fn accepts(&self, p: u64) -> bool {
        match *self {
            ClassFilter::Any => true,
            ClassFilter::Congruent { modulus, residue } => p % modulus == residue % modulus,
            ClassFilter::NotCongruent { modulus, residue } => p % modulus != residue % modulus,
        }
    }
}

/// The primes of `[lo, hi]` passing `filter`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeRange {
    pub lo: u64,
    pub hi: u64,
    pub filter: ClassFilter,
    pub memory_budget: u64,
}

impl PrimeRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        Self {
            lo,
            hi,
            filter: ClassFilter::Any,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }

    pub fn up_to(hi: u64) -> Self {
        Self::new(2, hi)
    }

    pub fn with_filter(mut self, filter: ClassFilter) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_memory_budget(mut self, bytes: u64) -> Self {
        self.memory_budget = bytes;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.lo < 2 || self.hi < self.lo {
            return precondition(format!(
                "prime range needs hi >= lo >= 2, got [{}, {}]",
                self.lo, self.hi
            ));
        }
        if self.hi > i64::MAX as u64 {
            return precondition(format!("hi = {} exceeds 2^63 - 1", self.hi));
        }
        if let ClassFilter::Congruent { modulus: 0, .. } | ClassFilter::NotCongruent { modulus: 0, .. } =
            self.filter
        {
            return precondition("class filter modulus must be positive");
        }
        Ok(())
    }

    /// Bytes needed by the base primes plus one segment.
    fn sieve_bytes(&self) -> u64 {
        let root = isqrt(self.hi) + 1;
        estimate_pi(root) * 8 + (SEGMENT_BITS as u64) / 8
    }

    /// Lazily iterates the range; memory is one segment plus the base primes.
    pub fn iter(&self) -> Result<PrimeIter> {
        self.validate()?;
        if self.sieve_bytes() > self.memory_budget {
            return budget(format!(
                "sieving up to {} needs ~{} bytes, budget is {}",
                self.hi,
                self.sieve_bytes(),
                self.memory_budget
            ));
        }
        Ok(PrimeIter::new(*self))
    }
}

/// Segmented odd-only Eratosthenes iterator.
pub struct PrimeIter {
    range: PrimeRange,
    base: Vec<u64>,
    /// bit i of the current segment stands for `seg_lo + 2 i`
    bits: Vec<u64>,
    seg_lo: u64,
    seg_len: usize,
    pos: usize,
    emitted_two: bool,
    done: bool,
}

impl PrimeIter {
    fn new(range: PrimeRange) -> Self {
        let root = isqrt(range.hi);
        let base: Vec<u64> = simple_sieve(root).into_iter().skip(1).collect();
        let first_odd = if range.lo <= 3 { 3 } else { range.lo | 1 };
        let mut it = Self {
            range,
            base,
            bits: vec![0; SEGMENT_BITS / 64],
            seg_lo: first_odd,
            seg_len: 0,
            pos: 0,
            emitted_two: range.lo > 2,
            done: first_odd > range.hi,
        };
        if !it.done {
            it.fill_segment();
        }
        it
    }

    fn fill_segment(&mut self) {
        let lo = self.seg_lo;
        let span = (self.range.hi - lo) / 2 + 1;
        self.seg_len = span.min(SEGMENT_BITS as u64) as usize;
        let words = self.seg_len.div_ceil(64);
        self.bits[..words].fill(u64::MAX);
        let hi = lo + 2 * (self.seg_len as u64 - 1);
        for &p in &self.base {
            let sq = p * p;
            if sq > hi {
                break;
            }
            let mut start = if sq >= lo { sq } else { lo.div_ceil(p) * p };
            if start % 2 == 0 {
                start += p;
            }
            let mut i = ((start - lo) / 2) as usize;
            while i < self.seg_len {
                self.bits[i >> 6] &= !(1u64 << (i & 63));
                i += p as usize;
            }
        }
        if lo == 1 {
            self.bits[0] &= !1;
        }
        self.pos = 0;
    }
}

impl Iterator for PrimeIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if !self.emitted_two {
            self.emitted_two = true;
            if self.range.filter.accepts(2) && self.range.hi >= 2 {
                return Some(2);
            }
        }
        while !self.done {
            while self.pos < self.seg_len {
                let w = self.pos >> 6;
                let word = self.bits[w] >> (self.pos & 63);
                if word == 0 {
                    self.pos = (w + 1) << 6;
                    continue;
                }
                self.pos += word.trailing_zeros() as usize;
                if self.pos >= self.seg_len {
                    break;
                }
                let p = self.seg_lo + 2 * self.pos as u64;
                self.pos += 1;
                if self.range.filter.accepts(p) {
                    return Some(p);
                }
            }
            let next_lo = self.seg_lo + 2 * self.seg_len as u64;
            if next_lo > self.range.hi {
                self.done = true;
            } else {
                self.seg_lo = next_lo;
                self.fill_segment();
            }
        }
        None
    }
}

/// Collects the filtered primes of `range` in ascending order.
pub fn primes_in(range: &PrimeRange) -> Result<Vec<u64>> {
    let iter = range.iter()?;
    let out_bytes = estimate_pi(range.hi).saturating_sub(estimate_pi(range.lo)) * 8;
    if out_bytes + range.sieve_bytes() > range.memory_budget {
        return budget(format!(
            "collecting primes in [{}, {}] needs ~{} bytes, budget is {}",
            range.lo, range.hi, out_bytes, range.memory_budget
        ));
    }
    Ok(iter.collect())
}

/// All primes `<= n`, unsegmented (the reference sieve).
pub fn simple_sieve(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Primes `<= n` with the default budget; panics only on absurd `n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    primes_in(&PrimeRange::up_to(n)).expect("prime range within default budget")
}

/// Smallest-prime-factor table for `0..=n` (entries 0 and 1 are 0).
pub fn spf_table(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            let j = p as usize * i;
            if p > si || j > n {
                break;
            }
            spf[j] = p;
        }
    }
    spf
}

/// Upper estimate of π(x) (Rosser–Schoenfeld style), used for budgeting only.
fn estimate_pi(x: u64) -> u64 {
    if x < 17 {
        return 7;
    }
    let xf = x as f64;
    (1.26 * xf / xf.ln()).ceil() as u64
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Brent's variant of Pollard rho; `n` must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let (mut g, mut x, mut ys) = (1u64, 0u64, 0u64);
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(128.min(r - k)) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += 128;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Prime factorization as ascending `(p, exponent)` pairs; `factorize(1)` is empty.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize(0) is undefined");
    let mut out: Vec<(u64, u32)> = Vec::new();
    let mut n = n;
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    let mut stack = vec![n];
    let mut big: Vec<u64> = Vec::new();
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            big.push(m);
            continue;
        }
        let d = pollard_rho(m);
        stack.push(d);
        stack.push(m / d);
    }
    big.sort_unstable();
    for p in big {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Which partial Euler product `mertens_product` evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MertensForm {
    /// ∏ (1 − 1/p)
    OneMinusInv,
    /// ∏ (1 − 1/p³)⁻¹, the partial Euler product of ζ(3)
    Zeta3Partial,
    /// ∏ (1 − 1/p^s)
    CustomExponent(f64),
}

/// Partial Euler product over p ≤ y, accumulated as a compensated sum of logs.
pub fn mertens_product(y: u64, form: MertensForm) -> Result<f64> {
    if y < 2 {
        return precondition(format!("mertens_product needs y >= 2, got {y}"));
    }
    let mut acc = KahanSum::new();
    for p in PrimeRange::up_to(y).iter()? {
        let pf = p as f64;
        acc.add(match form {
            MertensForm::OneMinusInv => (-1.0 / pf).ln_1p(),
            MertensForm::Zeta3Partial => -(-pf.powi(-3)).ln_1p(),
            MertensForm::CustomExponent(s) => (-pf.powf(-s)).ln_1p(),
        });
    }
    Ok(acc.value().exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn small_ranges() {
        let r = PrimeRange::new(2, 20).with_filter(ClassFilter::SPLIT);
        assert_eq!(primes_in(&r).unwrap(), vec![7, 13, 19]);
        assert_eq!(primes_in(&PrimeRange::new(2, 10)).unwrap(), vec![2, 3, 5, 7]);
        let split = primes_in(&PrimeRange::up_to(100).with_filter(ClassFilter::SPLIT)).unwrap();
        let oracle: Vec<u64> = (2..=100).filter(|&n| trial_division(n) && n % 3 == 1).collect();
        assert_eq!(split, oracle);
        assert_eq!(split.len(), 11);
        let ns = primes_in(&PrimeRange::new(2, 20).with_filter(ClassFilter::NON_SPLIT)).unwrap();
        assert_eq!(ns, vec![2, 3, 5, 11, 17]);
    }

    #[test]
    fn prime_counting_matches_trial_division() {
        let all = primes_up_to(10_000);
        let mut count = 0;
        let mut idx = 0;
        for x in 2..=10_000u64 {
            if trial_division(x) {
                count += 1;
            }
            while idx < all.len() && all[idx] <= x {
                idx += 1;
            }
            assert_eq!(idx, count, "pi({x})");
        }
    }

    #[test]
    fn segmented_matches_whole_range() {
        let seg = primes_up_to(1_000_000);
        assert_eq!(seg, simple_sieve(1_000_000));
        assert_eq!(seg.len(), 78_498);
        // a window straddling segment boundaries
        let lo = 2 * SEGMENT_BITS as u64 - 1000;
        let hi = 4 * SEGMENT_BITS as u64 + 1000;
        let w = primes_in(&PrimeRange::new(lo, hi)).unwrap();
        let whole: Vec<u64> = simple_sieve(hi).into_iter().filter(|&p| p >= lo).collect();
        assert_eq!(w, whole);
    }

    #[test]
    fn range_edges() {
        assert_eq!(primes_in(&PrimeRange::new(3, 3)).unwrap(), vec![3]);
        assert_eq!(primes_in(&PrimeRange::new(2, 2)).unwrap(), vec![2]);
        assert!(primes_in(&PrimeRange::new(24, 28)).unwrap().is_empty());
        assert!(primes_in(&PrimeRange::new(1, 10)).is_err());
        assert!(primes_in(&PrimeRange::new(10, 5)).is_err());
        let tight = PrimeRange::up_to(1 << 40).with_memory_budget(1 << 20);
        assert!(matches!(primes_in(&tight), Err(crate::LabError::Budget(_))));
    }

    #[test]
    fn iteration_is_deterministic() {
        let r = PrimeRange::new(1_000_000, 1_200_000);
        let a: Vec<u64> = r.iter().unwrap().collect();
        let b: Vec<u64> = r.iter().unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn miller_rabin_and_factorization() {
        for n in 0..5000u64 {
            assert_eq!(is_prime(n), trial_division(n), "{n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
        let n = 1_000_000_007u64 * 998_244_353;
        assert_eq!(factorize(n), vec![(998_244_353, 1), (1_000_000_007, 1)]);
        assert_eq!(factorize(343 * 8 * 5), vec![(2, 3), (5, 1), (7, 3)]);
        assert!(factorize(1).is_empty());
    }

    #[test]
    fn spf_agrees_with_factorize() {
        let spf = spf_table(10_000);
        for n in 2..=10_000usize {
            assert_eq!(spf[n] as u64, factorize(n as u64)[0].0);
        }
    }

    #[test]
    fn mertens_examples() {
        let v = mertens_product(10, MertensForm::OneMinusInv).unwrap();
        assert!((v - 8.0 / 35.0).abs() < 1e-15);
        let v = mertens_product(2, MertensForm::CustomExponent(3.0)).unwrap();
        assert!((v - 0.875).abs() < 1e-15);
        assert!(mertens_product(1, MertensForm::OneMinusInv).is_err());
    }

    #[test]
    fn mertens_ratio_approaches_one() {
        let mut prev = f64::INFINITY;
        for y in [1_000u64, 10_000, 100_000, 1_000_000] {
            let prod = mertens_product(y, MertensForm::OneMinusInv).unwrap();
            let gap = (crate::numeric::EULER_GAMMA.exp() * (y as f64).ln() * prod - 1.0).abs();
            assert!(gap < prev, "y = {y}");
            prev = gap;
        }
        let y = 1_000_000f64;
        let prod = mertens_product(1_000_000, MertensForm::OneMinusInv).unwrap();
        assert!((prod - (-crate::numeric::EULER_GAMMA).exp() / y.ln()).abs() < 1e-2);
    }

    #[test]
    fn zeta3_partial_converges() {
        let v = mertens_product(1_000_000, MertensForm::Zeta3Partial).unwrap();
        assert!((v - crate::numeric::ZETA3).abs() < 1e-11);
    }
}
