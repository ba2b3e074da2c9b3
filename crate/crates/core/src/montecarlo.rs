//! Seeded sampling of the truncated random Euler product L(1, 𝕏; y).
//!
//! Every variate is addressed by (seed, draw index, prime index): draw `d`
//! reads ChaCha8 stream `d` and prime number `i` consumes the 32-bit word at
//! position `i` of that stream. Draws are therefore independent of thread
//! scheduling and of the order in which they are produced.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{budget, precondition, Result};
use crate::numeric::{fmt_sig, EULER_GAMMA, ZETA3};
use crate::par;
use crate::primes::primes_up_to;
use crate::randmodel::{RandomCharModel, Side, TailMethod};
use crate::tables::{TailRow, TailTable};

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const MAX_Y: u64 = 10_000_000;
pub const MAX_SAMPLES: u64 = 100_000_000;
/// Sampled tails with fewer hits than this are flagged rather than reported.
pub const MIN_HITS: u64 = 25;

const DRAW_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub y: u64,
    pub n_samples: u64,
    pub ell: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64, y: u64, n_samples: u64) -> Self {
        Self { seed, y, n_samples, ell: 3 }
    }

    pub fn with_ell(mut self, ell: u64) -> Self {
        self.ell = ell;
        self
    }
}

/// Per-prime sampling thresholds on a uniform 32-bit word `u`:
/// `u < bounds[0]` gives 𝕏(p) = 0 and `u < bounds[k + 1]` gives ω^k.
#[derive(Debug, Clone)]
struct PrimeSampler {
    bounds: Vec<u32>,
    /// −log|1 − ω^k/p| for each root
    log_terms: Vec<f64>,
}

impl PrimeSampler {
    fn new(p: u64, ell: u64) -> Self {
        // u/2³² lands in atom k of the partition
        // [0, δ), [δ, δ + α/ℓ), …, with δ = (ℓ−1)/(p+ℓ−1) or 0;
        // the cut points are c·2³²/D for integers c, with D = ℓ(p + ℓ − 1) or ℓ.
        let split = p % ell == 1;
        let (den, zero_num, step) = if split {
            (ell as u128 * (p + ell - 1) as u128, ell as u128 * (ell - 1) as u128, p as u128)
        } else {
            (ell as u128, 0, 1)
        };
        let ceil_cut = |num: u128| -> u32 { (num << 32).div_ceil(den).min(u32::MAX as u128) as u32 };
        let mut bounds = Vec::with_capacity(ell as usize + 1);
        bounds.push(ceil_cut(zero_num));
        for k in 1..ell as u128 {
            bounds.push(ceil_cut(zero_num + k * step));
        }
        bounds.push(u32::MAX);
        let pf = p as f64;
        let log_terms = (0..ell)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / ell as f64;
                -0.5 * (-2.0 * th.cos() / pf + 1.0 / (pf * pf)).ln_1p()
            })
            .collect();
        Self { bounds, log_terms }
    }

    /// `None` for 𝕏(p) = 0, otherwise the exponent k of ω^k.
    #[inline]
    fn atom(&self, u: u32) -> Option<usize> {
        if u < self.bounds[0] {
            return None;
        }
        let last = self.bounds.len() - 1;
        for k in 1..last {
            if u < self.bounds[k] {
                return Some(k - 1);
            }
        }
        Some(last - 1)
    }
}

/// Precomputed sampler for a configuration.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    primes: Vec<u64>,
    per_prime: Vec<PrimeSampler>,
    /// the first ℓ bounds of every prime, back to back
    flat_bounds: Vec<u32>,
    /// 0 followed by the ℓ log terms of every prime
    flat_terms: Vec<f64>,
    base: ChaCha8Rng,
}

impl Sampler {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        RandomCharModel::new(config.ell)?;
        if config.y < 2 {
            return precondition(format!("sampler cutoff y must be >= 2, got {}", config.y));
        }
        if config.y > MAX_Y {
            return budget(format!("y = {} exceeds the sampler limit {MAX_Y}", config.y));
        }
        if config.n_samples > MAX_SAMPLES {
            return budget(format!(
                "{} samples exceed the sampler limit {MAX_SAMPLES}",
                config.n_samples
            ));
        }
        let primes = primes_up_to(config.y);
        let per_prime: Vec<PrimeSampler> = primes.iter().map(|&p| PrimeSampler::new(p, config.ell)).collect();
        let ell = config.ell as usize;
        let mut flat_bounds = Vec::with_capacity(per_prime.len() * ell);
        let mut flat_terms = Vec::with_capacity(per_prime.len() * (ell + 1));
        for s in &per_prime {
            flat_bounds.extend_from_slice(&s.bounds[..ell]);
            flat_terms.push(0.0);
            flat_terms.extend_from_slice(&s.log_terms);
        }
        Ok(Self {
            config,
            primes,
            per_prime,
            flat_bounds,
            flat_terms,
            base: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    fn stream(&self, draw: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(draw);
        rng.set_word_pos(0);
        rng
    }

    /// 𝕏(p) for the `prime_index`-th prime in draw `draw`, by random access.
    pub fn draw_x(&self, draw: u64, prime_index: usize) -> Option<usize> {
        let mut rng = self.stream(draw);
        rng.set_word_pos(prime_index as u128);
        self.per_prime[prime_index].atom(rng.next_u32())
    }

    /// log|L(1, 𝕏; y)| for one draw.
    pub fn log_abs(&self, draw: u64) -> f64 {
        let mut words = vec![0u32; self.per_prime.len()];
        self.log_abs_with(draw, &mut words)
    }

    fn log_abs_with(&self, draw: u64, words: &mut [u32]) -> f64 {
        let mut rng = self.stream(draw);
        for w in words.iter_mut() {
            *w = rng.next_u32();
        }
        let ell = self.config.ell as usize;
        let mut acc = 0.0;
        for (i, &w) in words.iter().enumerate() {
            let b = &self.flat_bounds[i * ell..(i + 1) * ell];
            let idx: usize = b.iter().map(|&c| (w >= c) as usize).sum();
            acc += self.flat_terms[i * (ell + 1) + idx];
        }
        acc
    }

    pub fn sample(&self) -> SampleBatch {
        self.sample_range(0, self.config.n_samples)
    }

    /// Draws `start..start + count`.
    pub fn sample_range(&self, start: u64, count: u64) -> SampleBatch {
        let mut log_abs = vec![0.0; count as usize];
        par::for_each_chunk_mut(&mut log_abs, DRAW_CHUNK, |c, out| {
            let first = start + (c * DRAW_CHUNK) as u64;
            let mut words = vec![0u32; self.per_prime.len()];
            for (j, v) in out.iter_mut().enumerate() {
                *v = self.log_abs_with(first + j as u64, &mut words);
            }
        });
        SampleBatch {
            log_abs,
            config: self.config,
        }
    }
}

/// log|L(1, 𝕏; y)| for every draw of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub log_abs: Vec<f64>,
    pub config: SamplerConfig,
}

/// Samples the configuration in full.
pub fn sample(config: &SamplerConfig) -> Result<SampleBatch> {
    Ok(Sampler::new(*config)?.sample())
}

/// Log-scale threshold for |L| on each side: log(e^γ τ) or log((ζ(3)/e^γ)^{1/2}/τ).
pub fn log_threshold(side: Side, tau: f64) -> f64 {
    match side {
        Side::Max => EULER_GAMMA + tau.ln(),
        Side::Min => 0.5 * (ZETA3.ln() - EULER_GAMMA) - tau.ln(),
    }
}

/// Half-width of the Wilson score interval at one standard deviation.
pub fn wilson_stderr(hits: u64, n: u64) -> f64 {
    let n = n as f64;
    let p = hits as f64 / n;
    (p * (1.0 - p) / n + 1.0 / (4.0 * n * n)).sqrt() / (1.0 + 1.0 / n)
}

/// Strict-inequality tail proportions with Wilson standard errors.
pub fn empirical_tails(batch: &SampleBatch, taus: &[f64], side: Side) -> Result<TailTable> {
    if batch.log_abs.is_empty() {
        return precondition("empirical tails of an empty batch");
    }
    let n = batch.log_abs.len() as u64;
    let rows = taus
        .iter()
        .map(|&tau| {
            let t = log_threshold(side, tau);
            let hits = match side {
                Side::Max => batch.log_abs.iter().filter(|&&v| v > t).count(),
                Side::Min => batch.log_abs.iter().filter(|&&v| v < t).count(),
            } as u64;
            TailRow {
                stderr: Some(wilson_stderr(hits, n)),
                too_few_hits: hits < MIN_HITS,
                ..TailRow::counted(tau, side, TailMethod::MonteCarlo, hits, n)
            }
        })
        .collect();
    Ok(TailTable::new(rows))
}

/// Writes `tau,side,estimate,stderr,n,seed,y`; flagged rows carry
/// `too_few_hits` in the estimate column.
pub fn write_tails_csv<W: Write>(table: &TailTable, config: &SamplerConfig, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "side", "estimate", "stderr", "n", "seed", "y"])?;
    for r in &table.rows {
        let estimate = if r.too_few_hits {
            "too_few_hits".to_string()
        } else {
            fmt_sig(r.value)
        };
        w.write_record([
            fmt_sig(r.tau),
            r.side.name().to_string(),
            estimate,
            r.stderr.map(fmt_sig).unwrap_or_default(),
            r.n.unwrap_or(0).to_string(),
            config.seed.to_string(),
            config.y.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
