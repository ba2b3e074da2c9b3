//! Arithmetic in ℤ[ω], ω = e^{2πi/3}: norms, primary associates, the norm
//! equation a² − ab + b² = p, and the cubic residue symbol.

use std::fmt;

use num_complex::Complex64;

use crate::error::{precondition, LabError, Result};
use crate::primes::{is_prime, isqrt, mul_mod, pow_mod};

/// Above this bound `split_prime` switches from exhaustive search to Cornacchia.
pub const EXHAUSTIVE_SPLIT_LIMIT: u64 = 1_000_000;

/// The element a + bω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EisensteinInt {
    pub a: i128,
    pub b: i128,
}

impl EisensteinInt {
    pub const ZERO: Self = Self::new(0, 0);
    pub const ONE: Self = Self::new(1, 0);
    pub const OMEGA: Self = Self::new(0, 1);

    pub const fn new(a: i128, b: i128) -> Self {
        Self { a, b }
    }

    pub fn norm(&self) -> i128 {
        self.checked_norm().expect("Eisenstein norm overflow")
    }

    pub fn checked_norm(&self) -> Option<i128> {
        let aa = self.a.checked_mul(self.a)?;
        let ab = self.a.checked_mul(self.b)?;
        let bb = self.b.checked_mul(self.b)?;
        aa.checked_sub(ab)?.checked_add(bb)
    }

    /// (a + bω)(c + dω) = (ac − bd) + (ad + bc − bd)ω
    pub fn checked_mul(&self, o: &Self) -> Option<Self> {
        let ac = self.a.checked_mul(o.a)?;
        let bd = self.b.checked_mul(o.b)?;
        let ad = self.a.checked_mul(o.b)?;
        let bc = self.b.checked_mul(o.a)?;
        Some(Self::new(
            ac.checked_sub(bd)?,
            ad.checked_add(bc)?.checked_sub(bd)?,
        ))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.a - self.b, -self.b)
    }

    /// Multiplication by ω.
    pub fn rotate(&self) -> Self {
        Self::new(-self.b, self.a - self.b)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.a, -self.b)
    }

    /// The six unit multiples ±z, ±ωz, ±ω²z.
    pub fn associates(&self) -> [Self; 6] {
        let w1 = self.rotate();
        let w2 = w1.rotate();
        [*self, w1, w2, self.neg(), w1.neg(), w2.neg()]
    }

    /// z ≡ 1 mod 3.
    pub fn is_primary(&self) -> bool {
        self.a.rem_euclid(3) == 1 && self.b.rem_euclid(3) == 0
    }

    /// The unique primary associate; `None` when 1 − ω divides z.
    pub fn primary_associate(&self) -> Option<Self> {
        self.associates().into_iter().find(Self::is_primary)
    }

    pub fn to_complex(&self) -> Complex64 {
        let s3 = 3f64.sqrt();
        Complex64::new(self.a as f64 - 0.5 * self.b as f64, 0.5 * s3 * self.b as f64)
    }
}

impl std::ops::Mul for EisensteinInt {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.checked_mul(&o).expect("Eisenstein product overflow")
    }
}

impl std::ops::Add for EisensteinInt {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl std::ops::Sub for EisensteinInt {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl fmt::Display for EisensteinInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b < 0 {
            write!(f, "{}-{}ω", self.a, -self.b)
        } else {
            write!(f, "{}+{}ω", self.a, self.b)
        }
    }
}

/// A primary prime of ℤ[ω] together with the rational prime below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimaryPrime {
    value: EisensteinInt,
    rational_norm: u64,
    /// ω mod this prime, as a residue mod p (split primes only)
    omega_mod: u64,
}

impl PrimaryPrime {
    /// Normalizes `z` to its primary associate and checks irreducibility.
    /// For split primes `rational_norm` is N(z) = p; for an inert prime ±p it is p.
    pub fn from_element(z: EisensteinInt) -> Result<Self> {
        let Some(n) = z.checked_norm() else {
            return precondition(format!("norm of {z} overflows"));
        };
        let Some(value) = z.primary_associate() else {
            return precondition(format!("{z} is divisible by 1 - ω and has no primary associate"));
        };
        if n > 0 && n <= u64::MAX as i128 && is_prime(n as u64) && n % 3 == 1 {
            let p = n as u64;
            let (a, b) = (value.a.rem_euclid(p as i128) as u64, value.b.rem_euclid(p as i128) as u64);
            let b_inv = pow_mod(b, p - 2, p);
            let omega_mod = mul_mod((p - a) % p, b_inv, p);
            return Ok(Self { value, rational_norm: p, omega_mod });
        }
        if value.b == 0 && value.a.unsigned_abs() <= u64::MAX as u128 {
            let p = value.a.unsigned_abs() as u64;
            if is_prime(p) && p % 3 == 2 {
                return Ok(Self { value, rational_norm: p, omega_mod: 0 });
            }
        }
        precondition(format!("{z} is not a prime of Z[ω] coprime to 3"))
    }

    pub fn value(&self) -> EisensteinInt {
        self.value
    }

    pub fn rational_norm(&self) -> u64 {
        self.rational_norm
    }

    pub fn is_split(&self) -> bool {
        self.rational_norm % 3 == 1
    }

    /// The residue w mod p with w ≡ ω modulo this prime.
    pub fn omega_mod(&self) -> u64 {
        self.omega_mod
    }

    /// The other primary prime above p (conjugates of primary elements are primary).
    pub fn conjugate(&self) -> Self {
        Self::from_element(self.value.conj()).expect("conjugate of a primary prime")
    }
}

impl fmt::Display for PrimaryPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

/// Canonical choice between π and π̄: smaller nonnegative b, then smaller a.
fn canonical(z: EisensteinInt) -> EisensteinInt {
    let z = z.primary_associate().expect("norm coprime to 3");
    let c = z.conj();
    let key = |w: &EisensteinInt| (w.b < 0, w.b, w.a);
    if key(&c) < key(&z) {
        c
    } else {
        z
    }
}

/// Solves a² − ab + b² = p by scanning b; O(√p).
fn norm_solution_exhaustive(p: u64) -> Option<EisensteinInt> {
    // 4p = (2a − b)² + 3b²
    let four_p = 4 * p as i128;
    let mut b: i128 = 1;
    while 3 * b * b <= four_p {
        let disc = four_p - 3 * b * b;
        let s = isqrt(disc as u64) as i128;
        if s * s == disc && (s + b) % 2 == 0 {
            return Some(EisensteinInt::new((s + b) / 2, b));
        }
        b += 1;
    }
    None
}

/// Cornacchia: p = u² + 3v², then a + bω with a = u + v, b = 2v.
fn norm_solution_cornacchia(p: u64) -> Option<EisensteinInt> {
    // √−3 = 2w + 1 for any primitive cube root of unity w mod p
    let w = (2..p).find_map(|g| {
        let w = pow_mod(g, (p - 1) / 3, p);
        (w != 1).then_some(w)
    })?;
    let mut r0 = p;
    let mut r1 = (2 * w + 1) % p;
    if r1 > p / 2 {
        r1 = p - r1;
    }
    let bound = isqrt(p);
    while r1 > bound {
        (r0, r1) = (r1, r0 % r1);
    }
    let _ = r0;
    let rest = p - r1 * r1;
    if rest % 3 != 0 {
        return None;
    }
    let v = isqrt(rest / 3);
    if v * v * 3 != rest {
        return None;
    }
    Some(EisensteinInt::new(r1 as i128 + v as i128, 2 * v as i128))
}

/// The canonical primary prime above a split rational prime p ≡ 1 mod 3.
pub fn split_prime(p: u64) -> Result<PrimaryPrime> {
    if p % 3 != 1 || !is_prime(p) {
        return precondition(format!("split_prime needs a prime p ≡ 1 mod 3, got {p}"));
    }
    let z = if p <= EXHAUSTIVE_SPLIT_LIMIT {
        norm_solution_exhaustive(p)
    } else {
        norm_solution_cornacchia(p)
    };
    let z = z.ok_or_else(|| LabError::Precondition(format!("no norm-{p} element found")))?;
    PrimaryPrime::from_element(canonical(z))
}

#[doc(hidden)]
pub fn split_prime_via_cornacchia(p: u64) -> Option<EisensteinInt> {
    norm_solution_cornacchia(p).map(canonical)
}

/// A value of a cubic character: ω^k for k ∈ {0, 1, 2}, or zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CubeRoot(u8);

impl CubeRoot {
    pub const ZERO: Self = Self(3);
    pub const ONE: Self = Self(0);

    pub fn omega_pow(k: i64) -> Self {
        Self(k.rem_euclid(3) as u8)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 3
    }

    /// The exponent k of ω^k, or `None` for zero.
    pub fn exponent(&self) -> Option<u8> {
        (self.0 < 3).then_some(self.0)
    }

    /// Raw code: 0, 1, 2 for ω^k and 3 for zero.
    pub fn code(&self) -> u8 {
        self.0
    }

    pub fn from_code(code: u8) -> Self {
        assert!(code <= 3, "cube-root code out of range");
        Self(code)
    }

    pub fn conj(&self) -> Self {
        if self.is_zero() {
            *self
        } else {
            Self((3 - self.0) % 3)
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        if self.is_zero() {
            if e == 0 {
                Self::ONE
            } else {
                *self
            }
        } else {
            Self(((self.0 as u32 * e) % 3) as u8)
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        const H: f64 = 0.866_025_403_784_438_6;
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(-0.5, H),
            2 => Complex64::new(-0.5, -H),
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

impl std::ops::Mul for CubeRoot {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            Self::ZERO
        } else {
            Self((self.0 + o.0) % 3)
        }
    }
}

impl fmt::Debug for CubeRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent() {
            None => write!(f, "0"),
            Some(k) => write!(f, "ω^{k}"),
        }
    }
}

/// The cubic residue symbol (m/q)₃ for a split primary prime q.
pub fn cubic_symbol(m: i64, q: &PrimaryPrime) -> Result<CubeRoot> {
    cubic_symbol_residue(m.rem_euclid(q.rational_norm as i64) as u64, q)
}

fn cubic_symbol_residue(m: u64, q: &PrimaryPrime) -> Result<CubeRoot> {
    if !q.is_split() {
        return precondition(format!(
            "cubic symbol needs a split prime, got norm {}",
            q.rational_norm
        ));
    }
    let p = q.rational_norm;
    let m = m % p;
    if m == 0 {
        return Ok(CubeRoot::ZERO);
    }
    let r = pow_mod(m, (p - 1) / 3, p);
    let w = q.omega_mod;
    if r == 1 {
        Ok(CubeRoot::omega_pow(0))
    } else if r == w {
        Ok(CubeRoot::omega_pow(1))
    } else if r == mul_mod(w, w, p) {
        Ok(CubeRoot::omega_pow(2))
    } else {
        Err(LabError::SymbolMismatch { m: m as i64, p })
    }
}

/// Checks (m1·m2 / q)₃ = (m1 / q)₃ (m2 / q)₃.
pub fn symbol_totally_multiplicative_check(m1: i64, m2: i64, q: &PrimaryPrime) -> bool {
    let p = q.rational_norm as i128;
    let prod = ((m1 as i128 % p) * (m2 as i128 % p)).rem_euclid(p) as u64;
    match (
        cubic_symbol_residue(prod, q),
        cubic_symbol(m1, q),
        cubic_symbol(m2, q),
    ) {
        (Ok(s), Ok(s1), Ok(s2)) => s == s1 * s2,
        _ => false,
    }
}
