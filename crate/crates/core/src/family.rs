//! The family of primitive cubic Dirichlet characters with conductor up to X,
//! their values, their L-values at s = 1, and family averages.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use num_rational::Ratio;

use crate::eisenstein::{cubic_symbol, split_prime, CubeRoot, EisensteinInt, PrimaryPrime};
use crate::error::{budget, precondition, LabError, Result};
use crate::numeric::{fmt_sig, KahanSum, EULER_GAMMA, ZETA3};
use crate::par;
use crate::primes::{factorize, isqrt, pow_mod, primes_up_to, PrimeRange, ClassFilter};
use crate::randmodel::{Side, TailMethod};
use crate::tables::{TailRow, TailTable};

/// Largest X accepted by `enumerate_family`.
pub const MAX_FAMILY_X: u64 = 100_000_000;
/// Memory ceiling for an enumerated slice, in bytes.
pub const DEFAULT_FAMILY_BUDGET: u64 = 1 << 30;
/// Rough footprint of one character in memory.
const BYTES_PER_CHARACTER: u64 = 96;

/// A primitive cubic character χ = ∏ χ_{π_i}^{e_i}, with χ_π(m) = (m/π)₃.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubicCharacter {
    conductor: u64,
    factors: Vec<(PrimaryPrime, u8)>,
}

impl CubicCharacter {
    /// Factors must lie above distinct split primes, in ascending order, with exponents 1 or 2.
    pub fn new(factors: Vec<(PrimaryPrime, u8)>) -> Result<Self> {
        if factors.is_empty() {
            return precondition("a primitive cubic character needs at least one prime factor");
        }
        let mut conductor: u64 = 1;
        let mut last = 0;
        for (q, e) in &factors {
            if !q.is_split() {
                return precondition(format!("{q} does not lie above a prime p ≡ 1 mod 3"));
            }
            if !(1..=2).contains(e) {
                return precondition(format!("exponent must be 1 or 2, got {e}"));
            }
            if q.rational_norm() <= last {
                return precondition("factor primes must be distinct and ascending");
            }
            last = q.rational_norm();
            conductor = conductor
                .checked_mul(last)
                .ok_or_else(|| LabError::Precondition("conductor overflows u64".into()))?;
        }
        Ok(Self { conductor, factors })
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn factors(&self) -> &[(PrimaryPrime, u8)] {
        &self.factors
    }

    pub fn exponents(&self) -> Vec<u8> {
        self.factors.iter().map(|(_, e)| *e).collect()
    }

    /// χ̄ = χ²: every exponent e becomes 3 − e.
    pub fn conj(&self) -> Self {
        Self {
            conductor: self.conductor,
            factors: self.factors.iter().map(|(q, e)| (*q, 3 - e)).collect(),
        }
    }

    pub fn value(&self, m: u64) -> CubeRoot {
        let mut acc = CubeRoot::ONE;
        for (q, e) in &self.factors {
            let p = q.rational_norm();
            let s = cubic_symbol((m % p) as i64, q).expect("split prime");
            acc = acc * s.pow(*e as u32);
            if acc.is_zero() {
                break;
            }
        }
        acc
    }
}

/// χ(m) as a complex number in {0, 1, ω, ω²}.
pub fn chi_eval(chi: &CubicCharacter, m: u64) -> Result<Complex64> {
    if m == 0 {
        return precondition("chi_eval needs m >= 1");
    }
    Ok(chi.value(m).to_complex())
}

/// Which of the two primary primes above p labels χ_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrimeLabel {
    #[default]
    Canonical,
    Conjugate,
}

/// All characters of conductor ≤ X, ordered by conductor and then by
/// exponent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySlice {
    pub x: u64,
    pub characters: Vec<CubicCharacter>,
}

impl FamilySlice {
    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }
}

/// Squarefree products of split primes up to `x`, each as its ascending prime list.
fn conductors(primes: &[u64], x: u64) -> Vec<Vec<u64>> {
    fn rec(primes: &[u64], start: usize, prod: u64, x: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        for i in start..primes.len() {
            let p = primes[i];
            let Some(next) = prod.checked_mul(p).filter(|&v| v <= x) else {
                break;
            };
            cur.push(p);
            out.push(cur.clone());
            rec(primes, i + 1, next, x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(primes, 0, 1, x, &mut Vec::new(), &mut out);
    out.sort_by_key(|f| f.iter().product::<u64>());
    out
}

pub fn enumerate_family(x: u64) -> Result<FamilySlice> {
    enumerate_family_with(x, PrimeLabel::Canonical, DEFAULT_FAMILY_BUDGET)
}

pub fn enumerate_family_with(x: u64, label: PrimeLabel, memory_budget: u64) -> Result<FamilySlice> {
    if x > MAX_FAMILY_X {
        return precondition(format!("X = {x} exceeds the family ceiling {MAX_FAMILY_X}"));
    }
    let estimate = (0.26 * x as f64) as u64 + 16;
    if estimate.saturating_mul(BYTES_PER_CHARACTER) > memory_budget {
        return budget(format!(
            "about {estimate} characters for X = {x} exceed the memory budget of {memory_budget} bytes"
        ));
    }
    if x < 7 {
        return Ok(FamilySlice { x, characters: Vec::new() });
    }
    let split: Vec<u64> = PrimeRange::up_to(x).with_filter(ClassFilter::SPLIT).iter()?.collect();
    let label_of = |p: u64| -> Result<PrimaryPrime> {
        let q = split_prime(p)?;
        Ok(match label {
            PrimeLabel::Canonical => q,
            PrimeLabel::Conjugate => q.conjugate(),
        })
    };
    let primaries: Vec<PrimaryPrime> = par::map(&split, |&p| label_of(p)).into_iter().collect::<Result<_>>()?;
    let index: BTreeMap<u64, usize> = split.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut characters = Vec::new();
    for f in conductors(&split, x) {
        let qs: Vec<PrimaryPrime> = f.iter().map(|p| primaries[index[p]]).collect();
        let s = f.len();
        for bits in 0..(1u32 << s) {
            // most significant bit belongs to the smallest prime
            let factors = (0..s)
                .map(|i| (qs[i], 1 + ((bits >> (s - 1 - i)) & 1) as u8))
                .collect();
            characters.push(CubicCharacter::new(factors)?);
        }
    }
    Ok(FamilySlice { x, characters })
}

/// χ_π(n) for every residue n mod p, as cube-root codes (3 marks zero).
#[derive(Debug, Clone)]
pub struct SymbolTable {
    p: u64,
    codes: Vec<u8>,
}

impl SymbolTable {
    /// Walks the powers of a primitive root g, using χ(g^k) = χ(g)^k.
    pub fn build(q: &PrimaryPrime) -> Result<Self> {
        let p = q.rational_norm();
        if !q.is_split() {
            return precondition(format!("symbol table needs a split prime, got {q}"));
        }
        let g = primitive_root(p);
        let kg = cubic_symbol(g as i64, q)?.exponent().expect("g is a unit") as u32;
        let mut codes = vec![0u8; p as usize];
        codes[0] = CubeRoot::ZERO.code();
        let red = Barrett::new(p);
        // independent interleaved walks g^{j + kW} hide the multiply latency
        const W: usize = 8;
        let steps = p - 1;
        let gw = pow_mod(g, W as u64, p);
        let mut xs = [1u64; W];
        for j in 1..W {
            xs[j] = red.reduce(xs[j - 1] * g);
        }
        let step_phase = (W as u32 * kg) % 3;
        let mut phases: [u32; W] = std::array::from_fn(|j| (j as u32 * kg) % 3);
        let full = steps / W as u64;
        for _ in 0..full {
            for j in 0..W {
                codes[xs[j] as usize] = phases[j] as u8;
                xs[j] = red.reduce(xs[j] * gw);
                phases[j] += step_phase;
                if phases[j] >= 3 {
                    phases[j] -= 3;
                }
            }
        }
        for j in 0..(steps % W as u64) as usize {
            codes[xs[j] as usize] = phases[j] as u8;
        }
        Ok(Self { p, codes })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn code(&self, n: u64) -> u8 {
        self.codes[(n % self.p) as usize]
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// Floor-reciprocal reduction for products below 2⁶⁴ modulo p < 2³².
#[derive(Debug, Clone, Copy)]
struct Barrett {
    p: u64,
    m: u64,
}

impl Barrett {
    fn new(p: u64) -> Self {
        Self { p, m: u64::MAX / p }
    }

    #[inline]
    fn reduce(&self, a: u64) -> u64 {
        let q = ((a as u128 * self.m as u128) >> 64) as u64;
        // the quotient estimate is short by at most 2
        let mut r = a - q * self.p;
        r -= if r >= self.p { self.p } else { 0 };
        r -= if r >= self.p { self.p } else { 0 };
        r
    }
}

fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let fs: Vec<u64> = factorize(p - 1).into_iter().map(|(f, _)| f).collect();
    (2..p)
        .find(|&g| fs.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("every prime has a primitive root")
}

/// How L(1, χ) is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LMethod {
    /// Σ_{n ≤ N} χ(n)/n
    TruncatedSeries,
    /// ∏_{p ≤ y} (1 − χ(p)/p)^{−1}
    ShortEulerProduct,
}

impl LMethod {
    pub fn name(&self) -> &'static str {
        match self {
            LMethod::TruncatedSeries => "truncated_series",
            LMethod::ShortEulerProduct => "short_euler_product",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "truncated_series" | "series" => Ok(LMethod::TruncatedSeries),
            "short_euler_product" | "euler" => Ok(LMethod::ShortEulerProduct),
            _ => Err(LabError::Parse(format!("unknown L-value method {s:?}"))),
        }
    }
}

/// Series length or prime cutoff for a batch evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// N = max(10⁶, 50·conductor) for the series; y = 10⁴ for the product
    Default,
    Fixed(u64),
}

pub const DEFAULT_SERIES_MIN: u64 = 1_000_000;
pub const DEFAULT_SERIES_FACTOR: u64 = 50;
pub const DEFAULT_PRODUCT_Y: u64 = 10_000;

impl Truncation {
    fn resolve(&self, method: LMethod, conductor: u64) -> u64 {
        match (*self, method) {
            (Truncation::Fixed(n), _) => n,
            (Truncation::Default, LMethod::TruncatedSeries) => {
                DEFAULT_SERIES_MIN.max(DEFAULT_SERIES_FACTOR * conductor)
            }
            (Truncation::Default, LMethod::ShortEulerProduct) => DEFAULT_PRODUCT_Y,
        }
    }
}

/// L(1, χ) for one character of a slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LValue {
    /// position of the character in its slice
    pub index: usize,
    pub conductor: u64,
    pub value: Complex64,
    pub abs: f64,
    pub method: LMethod,
    pub truncation: u64,
    /// rigorous bound on the omitted series tail, when one is available
    pub tail_bound: Option<f64>,
    /// the tail bound exceeds 10⁻⁴·|L|
    pub precision_warning: bool,
}

impl LValue {
    fn new(index: usize, conductor: u64, value: Complex64, method: LMethod, truncation: u64, tail_bound: Option<f64>) -> Self {
        let abs = value.norm();
        Self {
            index,
            conductor,
            value,
            abs,
            method,
            truncation,
            tail_bound,
            precision_warning: tail_bound.is_some_and(|t| t > 1e-4 * abs),
        }
    }
}

/// L(1, χ) for a single character; the series needs N ≥ 10·conductor and the
/// product needs y ≥ 100.
pub fn l_value(chi: &CubicCharacter, method: LMethod, n_or_y: u64) -> Result<LValue> {
    check_truncation(method, n_or_y, chi.conductor())?;
    let exps = vec![chi.exponents()];
    let primes: Vec<PrimaryPrime> = chi.factors().iter().map(|(q, _)| *q).collect();
    let out = match method {
        LMethod::TruncatedSeries => {
            let tables = primes.iter().map(SymbolTable::build).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&SymbolTable> = tables.iter().collect();
            series_for_conductor(&refs, &exps, n_or_y, &reciprocals(n_or_y + 1))
        }
        LMethod::ShortEulerProduct => {
            let ps = EulerPrimes::new(n_or_y);
            product_for_conductor(&primes, &exps, &ps)
        }
    };
    let (v, t) = out[0];
    Ok(LValue::new(0, chi.conductor(), v, method, n_or_y, t))
}

fn check_truncation(method: LMethod, n_or_y: u64, conductor: u64) -> Result<()> {
    match method {
        LMethod::TruncatedSeries if n_or_y < 10 * conductor => precondition(format!(
            "series length {n_or_y} is below 10 × conductor {conductor}"
        )),
        LMethod::ShortEulerProduct if n_or_y < 100 => {
            precondition(format!("Euler product cutoff {n_or_y} is below 100"))
        }
        _ => Ok(()),
    }
}

/// Largest reciprocal table shared by a batch evaluation (64 MiB).
const RECIPROCAL_TABLE_MAX: u64 = 1 << 23;

/// 1/n for n < len, with the unused slot 0 set to zero.
fn reciprocals(len: u64) -> Vec<f64> {
    let len = len.min(RECIPROCAL_TABLE_MAX) as usize;
    let mut v: Vec<f64> = (0..len).map(|i| 1.0 / i as f64).collect();
    if let Some(z) = v.first_mut() {
        *z = 0.0;
    }
    v
}

/// Σ 1/n over n ≤ N, binned by `comb[n mod Q]`; bin `nbins` collects the
/// residues where χ vanishes and is dropped.
///
/// The terms are first folded into per-residue sums h[r] = Σ_{n ≡ r} 1/n,
/// which vectorizes, and only then scattered into the bins.
fn harmonic_bins<C: Copy + Into<usize>>(comb: &[C], nbins: usize, n: u64, recip: &[f64]) -> Vec<f64> {
    // residue blocks small enough for h to stay in L1
    const BLOCK: usize = 2048;
    const LANES: usize = 4;
    let q = comb.len();
    let ramp: [f64; BLOCK] = std::array::from_fn(|i| i as f64);
    let mut lanes = vec![[0.0f64; LANES]; nbins + 1];
    let mut h = [0.0f64; BLOCK];
    let mut r0 = 0usize;
    while r0 < q {
        let width = (q - r0).min(BLOCK);
        h[..width].fill(0.0);
        let mut n0 = r0 as u64;
        while n0 <= n {
            let len = ((n - n0 + 1) as usize).min(width);
            // n = 0 only occurs as the first residue of the first period
            let skip = usize::from(n0 == 0);
            let start = n0 as usize + skip;
            if n0 + len as u64 <= recip.len() as u64 {
                for (slot, &x) in h[skip..len].iter_mut().zip(&recip[start..n0 as usize + len]) {
                    *slot += x;
                }
            } else {
                let base = n0 as f64;
                for (slot, &o) in h[skip..len].iter_mut().zip(&ramp[skip..len]) {
                    *slot += 1.0 / (base + o);
                }
            }
            n0 += q as u64;
        }
        for (t, (&c, &x)) in comb[r0..r0 + width].iter().zip(&h[..width]).enumerate() {
            lanes[c.into()][t % LANES] += x;
        }
        r0 += width;
    }
    lanes.truncate(nbins);
    lanes.into_iter().map(|l| (l[0] + l[1]) + (l[2] + l[3])).collect()
}

/// Σ_{n ≤ N} χ(n)/n for all characters of one conductor at once, with the
/// tail bound 2M/(N + 1), M = max_x |Σ_{n ≤ x} χ(n)|.
///
/// Residues n mod Q are binned by their vector of per-prime symbol codes, so
/// a single pass over n serves every exponent vector.
fn series_for_conductor(
    tables: &[&SymbolTable],
    exps: &[Vec<u8>],
    n: u64,
    recip: &[f64],
) -> Vec<(Complex64, Option<f64>)> {
    let s = tables.len();
    let q: u64 = tables.iter().map(|t| t.p()).product();
    let nbins = 3usize.pow(s as u32);
    let mut weights = vec![1u16; s];
    for i in 1..s {
        weights[i] = weights[i - 1] * 3;
    }

    if s == 1 {
        // code 3 (zero) coincides with the dropped bin 3
        return series_from_codes(tables[0].codes(), nbins, exps, n, recip);
    }
    let zero_bin = nbins as u16;
    let mut comb = vec![zero_bin; q as usize];
    let mut res = vec![0usize; s];
    for slot in comb.iter_mut() {
        let mut b = 0u16;
        let mut zero = false;
        for i in 0..s {
            let c = tables[i].codes[res[i]];
            if c == 3 {
                zero = true;
            }
            b += c as u16 * weights[i];
        }
        if !zero {
            *slot = b;
        }
        for i in 0..s {
            res[i] += 1;
            if res[i] as u64 == tables[i].p() {
                res[i] = 0;
            }
        }
    }
    series_from_codes(&comb, nbins, exps, n, recip)
}

/// The series for every exponent vector, given the bin of each residue
/// mod Q (bin `nbins` where χ vanishes).
fn series_from_codes<C: Copy + Into<usize>>(
    comb: &[C],
    nbins: usize,
    exps: &[Vec<u8>],
    n: u64,
    recip: &[f64],
) -> Vec<(Complex64, Option<f64>)> {
    let bins = harmonic_bins(comb, nbins, n, recip);

    // phase of each character on each bin
    let phases: Vec<Vec<u8>> = exps
        .iter()
        .map(|e| {
            (0..nbins)
                .map(|b| {
                    let mut rest = b;
                    let mut ph = 0u32;
                    for &ei in e.iter() {
                        ph += (rest % 3) as u32 * ei as u32;
                        rest /= 3;
                    }
                    (ph % 3) as u8
                })
                .collect()
        })
        .collect();

    // maximal partial sum over one period; χ and χ̄ share it
    let mut m_of: Vec<Option<f64>> = vec![None; exps.len()];
    for j in 0..exps.len() {
        if m_of[j].is_some() {
            continue;
        }
        // S = u + vω with u = c₀ − c₂, v = c₁ − c₂, |S|² = u² − uv + v²
        const STEPS: [(i64, i64); 3] = [(1, 0), (0, 1), (-1, -1)];
        let mut d = vec![(0i64, 0i64); nbins + 1];
        for (slot, &ph) in d.iter_mut().zip(&phases[j]) {
            *slot = STEPS[ph as usize];
        }
        let (mut u, mut v, mut best) = (0i64, 0i64, 0i64);
        for &b in comb {
            let (du, dv) = d[b.into()];
            u += du;
            v += dv;
            best = best.max(u * u - u * v + v * v);
        }
        let m = (best as f64).sqrt();
        m_of[j] = Some(m);
        let conj: Vec<u8> = exps[j].iter().map(|e| 3 - e).collect();
        if let Some(k) = exps.iter().position(|e| *e == conj) {
            m_of[k] = Some(m);
        }
    }

    let tail = |m: f64| 2.0 * m / (n as f64 + 1.0);
    (0..exps.len())
        .map(|j| {
            let mut cls = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
            for (b, &v) in bins.iter().enumerate() {
                cls[phases[j][b] as usize].add(v);
            }
            let [a0, a1, a2] = cls.map(|c| c.value());
            let h = 0.5 * 3f64.sqrt();
            let v = Complex64::new(a0 - 0.5 * (a1 + a2), h * (a1 - a2));
            (v, Some(tail(m_of[j].unwrap_or(0.0))))
        })
        .collect()
}

/// Primes up to y with −log(1 − ω^k/p) for k = 0, 1, 2.
struct EulerPrimes {
    y: u64,
    primes: Vec<u64>,
    logs: Vec<[Complex64; 3]>,
}

impl EulerPrimes {
    fn new(y: u64) -> Self {
        let primes = primes_up_to(y);
        let logs = primes
            .iter()
            .map(|&p| {
                let inv = 1.0 / p as f64;
                [0u8, 1, 2].map(|k| -(Complex64::new(1.0, 0.0) - CubeRoot::omega_pow(k as i64).to_complex() * inv).ln())
            })
            .collect();
        Self { y, primes, logs }
    }
}

fn product_for_conductor(qs: &[PrimaryPrime], exps: &[Vec<u8>], ps: &EulerPrimes) -> Vec<(Complex64, Option<f64>)> {
    let mut acc = vec![[KahanSum::new(), KahanSum::new()]; exps.len()];
    let mut codes = vec![0u8; qs.len()];
    for (i, &p) in ps.primes.iter().enumerate() {
        let mut zero = false;
        for (c, q) in codes.iter_mut().zip(qs) {
            let v = cubic_symbol(p as i64, q).expect("split prime");
            zero |= v.is_zero();
            *c = v.code();
        }
        if zero {
            continue;
        }
        for (j, e) in exps.iter().enumerate() {
            let ph: u32 = codes.iter().zip(e).map(|(&c, &ei)| c as u32 * ei as u32).sum::<u32>() % 3;
            let l = ps.logs[i][ph as usize];
            acc[j][0].add(l.re);
            acc[j][1].add(l.im);
        }
    }
    let _ = ps.y;
    acc.iter()
        .map(|[re, im]| (Complex64::new(re.value(), im.value()).exp(), None))
        .collect()
}

/// L(1, χ) for every character of the slice, in slice order.
///
/// Conductors are grouped by their largest prime, whose symbol table is
/// built once per group; tables of the smaller primes (all below √X) are
/// shared across the whole run.
pub fn evaluate_family(slice: &FamilySlice, method: LMethod, trunc: Truncation) -> Result<Vec<LValue>> {
    if let Truncation::Fixed(t) = trunc {
        if t == 0 || (method == LMethod::ShortEulerProduct && t < 100) {
            return precondition(format!("invalid truncation {t} for {}", method.name()));
        }
    }
    // (first index, exponent vectors) per conductor, grouped by largest prime
    let mut groups: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
    let chars = &slice.characters;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].conductor();
        let mut j = i;
        while j < chars.len() && chars[j].conductor() == c {
            j += 1;
        }
        let largest = chars[i].factors().last().expect("nonempty").0.rational_norm();
        groups.entry(largest).or_default().push((i, j));
        i = j;
    }
    let small_limit = isqrt(slice.x);
    let mut small: BTreeMap<u64, SymbolTable> = BTreeMap::new();
    if method == LMethod::TruncatedSeries {
        for ch in chars {
            for (q, _) in ch.factors() {
                let p = q.rational_norm();
                if p <= small_limit && !small.contains_key(&p) {
                    small.insert(p, SymbolTable::build(q)?);
                }
            }
        }
    }
    let euler = (method == LMethod::ShortEulerProduct).then(|| {
        EulerPrimes::new(trunc.resolve(method, 1))
    });
    let group_list: Vec<(u64, Vec<(usize, usize)>)> = groups.into_iter().collect();
    let recip = if method == LMethod::TruncatedSeries {
        let longest = chars.iter().map(|c| trunc.resolve(method, c.conductor())).max().unwrap_or(0);
        reciprocals(longest + 1)
    } else {
        Vec::new()
    };
    let results = par::map(&group_list, |(largest, ranges)| -> Result<Vec<LValue>> {
        let mut out = Vec::new();
        let big = if method == LMethod::TruncatedSeries && !small.contains_key(largest) {
            let q = chars[ranges[0].0].factors().last().unwrap().0;
            Some(SymbolTable::build(&q)?)
        } else {
            None
        };
        for &(lo, hi) in ranges {
            let head = &chars[lo];
            let cond = head.conductor();
            let exps: Vec<Vec<u8>> = chars[lo..hi].iter().map(|c| c.exponents()).collect();
            let t = trunc.resolve(method, cond);
            let vals = match method {
                LMethod::TruncatedSeries => {
                    let tables: Vec<&SymbolTable> = head
                        .factors()
                        .iter()
                        .map(|(q, _)| {
                            let p = q.rational_norm();
                            small.get(&p).or(big.as_ref()).expect("table available")
                        })
                        .collect();
                    series_for_conductor(&tables, &exps, t, &recip)
                }
                LMethod::ShortEulerProduct => {
                    let qs: Vec<PrimaryPrime> = head.factors().iter().map(|(q, _)| *q).collect();
                    product_for_conductor(&qs, &exps, euler.as_ref().unwrap())
                }
            };
            for (k, (v, tb)) in vals.into_iter().enumerate() {
                out.push(LValue::new(lo + k, cond, v, method, t, tb));
            }
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(chars.len());
    for r in results {
        all.extend(r?);
    }
    all.sort_by_key(|l| l.index);
    Ok(all)
}

/// Log-scale threshold for |L(1, χ)| on each side.
fn abs_threshold(side: Side, tau: f64) -> f64 {
    match side {
        Side::Max => EULER_GAMMA.exp() * tau,
        Side::Min => (ZETA3 / EULER_GAMMA.exp()).sqrt() / tau,
    }
}

/// Fraction of characters with |L| > e^γ τ (large side) or
/// |L| < (ζ(3)/e^γ)^{1/2}/τ (small side); ties count as not exceeding.
pub fn empirical_tail(values: &[LValue], taus: &[f64], side: Side) -> Result<TailTable> {
    if values.is_empty() {
        return precondition("empirical tail of an empty slice");
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return precondition("tau grid must be ascending");
    }
    let n = values.len() as u64;
    let rows = taus
        .iter()
        .map(|&tau| {
            let t = abs_threshold(side, tau);
            let hits = match side {
                Side::Max => values.iter().filter(|v| v.abs > t).count(),
                Side::Min => values.iter().filter(|v| v.abs < t).count(),
            } as u64;
            TailRow::counted(tau, side, TailMethod::Empirical, hits, n)
        })
        .collect();
    Ok(TailTable::new(rows))
}

/// (1/|F|) Σ_χ χ(m).
pub fn character_sum_average(slice: &FamilySlice, m: u64) -> Result<Complex64> {
    if m == 0 {
        return precondition("character_sum_average needs m >= 1");
    }
    if slice.is_empty() {
        return precondition("character sum over an empty slice");
    }
    let mut cache: BTreeMap<u64, CubeRoot> = BTreeMap::new();
    let mut counts = [0u64; 3];
    for ch in &slice.characters {
        let mut acc = CubeRoot::ONE;
        for (q, e) in ch.factors() {
            let p = q.rational_norm();
            let s = *cache
                .entry(p)
                .or_insert_with(|| cubic_symbol((m % p) as i64, q).expect("split prime"));
            acc = acc * s.pow(*e as u32);
        }
        if let Some(k) = acc.exponent() {
            counts[k as usize] += 1;
        }
    }
    let total: Complex64 = (0..3)
        .map(|k| CubeRoot::omega_pow(k as i64).to_complex() * counts[k] as f64)
        .sum();
    Ok(total / slice.len() as f64)
}

/// Prime-conductor characters of conductor ≤ X with χ(p) = ε_p for every forced p.
pub fn forced_character_search(x: u64, z: u64, eps: &BTreeMap<u64, CubeRoot>) -> Result<Vec<CubicCharacter>> {
    let pi_z = primes_up_to(z).len() as u32;
    if 3f64.powi(pi_z as i32) > (x as f64).sqrt() {
        return precondition(format!("3^π({z}) exceeds √X for X = {x}"));
    }
    for (&p, v) in eps {
        if p > z {
            return precondition(format!("forced prime {p} exceeds z = {z}"));
        }
        if v.is_zero() {
            return precondition(format!("forced value at {p} must be a cube root of unity"));
        }
    }
    let split: Vec<u64> = PrimeRange::up_to(x)
        .with_filter(ClassFilter::SPLIT)
        .iter()?
        .collect();
    let found = par::map(&split, |&p| -> Result<Vec<CubicCharacter>> {
        let q = split_prime(p)?;
        let mut out = Vec::new();
        for e in 1..=2u8 {
            let ok = eps
                .iter()
                .all(|(&r, v)| cubic_symbol((r % p) as i64, &q).map(|s| s.pow(e as u32) == *v).unwrap_or(false));
            if ok {
                out.push(CubicCharacter::new(vec![(q, e)])?);
            }
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for f in found {
        all.extend(f?);
    }
    Ok(all)
}

/// Probability that a uniform residue mod p² is an ℓ-th power, given that it
/// is coprime to p and an ℓ-th power mod p… expressed as the exact quotient
/// (p² − p)^{ℓ−1} / [(p² − p)^{ℓ−1} + (ℓ − 1)(p² − p)^{ℓ−2}(p − 1)].
pub fn heuristic_quotient(p: u64, ell: u64) -> Ratio<i128> {
    let a = (p * p - p) as i128;
    let num = a.pow(ell as u32 - 1);
    let den = num + (ell as i128 - 1) * a.pow(ell as u32 - 2) * (p as i128 - 1);
    Ratio::new(num, den)
}

/// The band [0.2 (ζ(3)/(e^γ log log q))^{1/2}, 5 e^γ log log q] used as a sanity corridor.
pub fn littlewood_corridor(q: u64) -> (f64, f64) {
    let l2 = (q as f64).ln().ln();
    let eg = EULER_GAMMA.exp();
    (0.2 * (ZETA3 / (eg * l2)).sqrt(), 5.0 * eg * l2)
}

/// Writes the slice as `idx,conductor,p,a,b,e`, one row per prime factor.
pub fn write_slice_cache<W: Write>(slice: &FamilySlice, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["idx", "conductor", "p", "a", "b", "e"])?;
    for (i, ch) in slice.characters.iter().enumerate() {
        for (q, e) in ch.factors() {
            let v = q.value();
            w.write_record([
                i.to_string(),
                ch.conductor().to_string(),
                q.rational_norm().to_string(),
                v.a.to_string(),
                v.b.to_string(),
                e.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a slice written by `write_slice_cache`; the primes are validated
/// but not re-solved.
pub fn read_slice_cache<R: Read>(x: u64, input: R) -> Result<FamilySlice> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["idx", "conductor", "p", "a", "b", "e"] {
        return Err(LabError::Parse(format!("unexpected cache header {headers:?}")));
    }
    let mut characters: Vec<CubicCharacter> = Vec::new();
    let mut cur: Option<(usize, u64, Vec<(PrimaryPrime, u8)>)> = None;
    let parse = |s: &str| -> Result<i128> { s.trim().parse().map_err(|_| LabError::Parse(format!("bad integer {s:?}"))) };
    let finish = |c: (usize, u64, Vec<(PrimaryPrime, u8)>), out: &mut Vec<CubicCharacter>| -> Result<()> {
        let (idx, cond, f) = c;
        if idx != out.len() {
            return Err(LabError::Parse(format!("character index {idx} out of sequence")));
        }
        let ch = CubicCharacter::new(f)?;
        if ch.conductor() != cond {
            return Err(LabError::Parse(format!("conductor mismatch for character {idx}")));
        }
        out.push(ch);
        Ok(())
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 6 {
            return Err(LabError::Parse(format!("expected 6 fields, got {}", rec.len())));
        }
        let idx = parse(&rec[0])? as usize;
        let cond = parse(&rec[1])? as u64;
        let p = parse(&rec[2])? as u64;
        let q = PrimaryPrime::from_element(EisensteinInt::new(parse(&rec[3])?, parse(&rec[4])?))?;
        if q.rational_norm() != p || !q.value().is_primary() || q.value() != EisensteinInt::new(parse(&rec[3])?, parse(&rec[4])?) {
            return Err(LabError::Parse(format!("({}, {}) is not a primary prime above {p}", &rec[3], &rec[4])));
        }
        let e = parse(&rec[5])? as u8;
        match &mut cur {
            Some((i, _, f)) if *i == idx => f.push((q, e)),
            _ => {
                if let Some(c) = cur.take() {
                    finish(c, &mut characters)?;
                }
                cur = Some((idx, cond, vec![(q, e)]));
            }
        }
    }
    if let Some(c) = cur.take() {
        finish(c, &mut characters)?;
    }
    Ok(FamilySlice { x, characters })
}

/// Writes `idx,conductor,re,im,abs,method,trunc`.
pub fn write_l_values<W: Write>(values: &[LValue], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["idx", "conductor", "re", "im", "abs", "method", "trunc"])?;
    for v in values {
        w.write_record([
            v.index.to_string(),
            v.conductor.to_string(),
            fmt_sig(v.value.re),
            fmt_sig(v.value.im),
            fmt_sig(v.abs),
            v.method.name().to_string(),
            v.truncation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_families() {
        assert!(enumerate_family(6).unwrap().is_empty());
        let f = enumerate_family(10).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.characters[0].exponents(), vec![1]);
        assert_eq!(f.characters[1].exponents(), vec![2]);
        let f = enumerate_family(100).unwrap();
        assert_eq!(f.len(), 26);
        let c91: Vec<Vec<u8>> = f.characters.iter().filter(|c| c.conductor() == 91).map(|c| c.exponents()).collect();
        assert_eq!(c91, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        assert!(f.characters.windows(2).all(|w| w[0].conductor() <= w[1].conductor()));
        assert!(enumerate_family(MAX_FAMILY_X + 1).is_err());
        assert!(matches!(
            enumerate_family_with(10_000_000, PrimeLabel::Canonical, 1 << 20),
            Err(LabError::Budget(_))
        ));
    }

    #[test]
    fn symbol_table_matches_exponentiation() {
        for p in [7u64, 13, 19, 97, 1009] {
            let q = split_prime(p).unwrap();
            let t = SymbolTable::build(&q).unwrap();
            for n in 0..p {
                assert_eq!(t.code(n), cubic_symbol(n as i64, &q).unwrap().code(), "p = {p}, n = {n}");
            }
        }
    }

    #[test]
    fn barrett_reduction() {
        let r = Barrett::new(999_983);
        for a in [0u64, 1, 999_982, 999_983, 999_983 * 999_982, u32::MAX as u64 * 7] {
            assert_eq!(r.reduce(a), a % 999_983);
        }
    }

    #[test]
    fn character_values() {
        let f = enumerate_family(100).unwrap();
        for ch in &f.characters {
            assert_eq!(chi_eval(ch, 1).unwrap(), Complex64::new(1.0, 0.0));
            let p = ch.factors()[0].0.rational_norm();
            assert_eq!(chi_eval(ch, p).unwrap(), Complex64::new(0.0, 0.0));
            for m in 1..300u64 {
                let v = ch.value(m);
                assert_eq!(v.pow(3).is_zero(), v.is_zero());
                assert_eq!(v.is_zero(), crate::primes::factorize(ch.conductor()).iter().any(|(p, _)| m % p == 0));
                assert_eq!(v * ch.conj().value(m), if v.is_zero() { CubeRoot::ZERO } else { CubeRoot::ONE });
                // periodic modulo the conductor
                assert_eq!(v, ch.value(m + ch.conductor()));
            }
        }
        assert!(chi_eval(&f.characters[0], 0).is_err());
    }

    #[test]
    fn batch_series_matches_single() {
        let f = enumerate_family(200).unwrap();
        let batch = evaluate_family(&f, LMethod::TruncatedSeries, Truncation::Fixed(20_000)).unwrap();
        for (i, ch) in f.characters.iter().enumerate() {
            // direct summation oracle
            let mut direct = Complex64::new(0.0, 0.0);
            for n in 1..=20_000u64 {
                direct += ch.value(n).to_complex() / n as f64;
            }
            assert!((batch[i].value - direct).norm() < 1e-11, "char {i}");
            assert_eq!(batch[i].index, i);
        }
    }

    #[test]
    fn tail_bound_from_period_sums() {
        let q = split_prime(7).unwrap();
        let ch = CubicCharacter::new(vec![(q, 1)]).unwrap();
        let l = l_value(&ch, LMethod::TruncatedSeries, 70).unwrap();
        let mut best: f64 = 0.0;
        let mut s = Complex64::new(0.0, 0.0);
        for n in 1..=7u64 {
            s += ch.value(n).to_complex();
            best = best.max(s.norm());
        }
        assert!((l.tail_bound.unwrap() - 2.0 * best / 71.0).abs() < 1e-12);
        assert!(l_value(&ch, LMethod::TruncatedSeries, 69).is_err());
        assert!(l_value(&ch, LMethod::ShortEulerProduct, 99).is_err());
    }

    #[test]
    fn conjugates_have_equal_modulus() {
        let f = enumerate_family(1000).unwrap();
        for method in [LMethod::TruncatedSeries, LMethod::ShortEulerProduct] {
            let v = evaluate_family(&f, method, Truncation::Fixed(50_000)).unwrap();
            for (i, ch) in f.characters.iter().enumerate() {
                let j = f.characters.iter().position(|c| *c == ch.conj()).unwrap();
                assert!((v[i].abs - v[j].abs).abs() < 1e-12 * v[i].abs);
                assert!((v[i].value - v[j].value.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn heuristic_quotient_is_exact() {
        for p in [7u64, 13, 19] {
            for ell in [3u64, 5, 7] {
                assert_eq!(heuristic_quotient(p, ell), Ratio::new(p as i128, (p + ell - 1) as i128));
            }
        }
    }

    #[test]
    fn forced_search_filters() {
        let all = forced_character_search(10_000, 5, &BTreeMap::new()).unwrap();
        let primes = primes_up_to(10_000).into_iter().filter(|p| p % 3 == 1).count();
        assert_eq!(all.len(), 2 * primes);
        let eps: BTreeMap<u64, CubeRoot> = [(2, CubeRoot::ONE), (5, CubeRoot::ONE)].into_iter().collect();
        let forced = forced_character_search(10_000, 5, &eps).unwrap();
        assert!(!forced.is_empty());
        for ch in &forced {
            assert_eq!(ch.value(2), CubeRoot::ONE);
            assert_eq!(ch.value(5), CubeRoot::ONE);
        }
        assert!(forced_character_search(100, 11, &BTreeMap::new()).is_err());
    }

    #[test]
    fn caches_round_trip() {
        let f = enumerate_family(300).unwrap();
        let mut buf = Vec::new();
        write_slice_cache(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("idx,conductor,p,a,b,e\n0,7,7,1,3,1\n"));
        let back = read_slice_cache(300, &buf[..]).unwrap();
        assert_eq!(back, f);
        let bad = "idx,conductor,p,a,b,e\n0,7,7,2,3,1\n";
        assert!(read_slice_cache(10, bad.as_bytes()).is_err());
    }
}
