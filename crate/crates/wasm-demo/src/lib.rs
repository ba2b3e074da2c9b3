//! Browser bindings for the random-model side of `cubic-lab`.
//!
//! Every export returns a flat `Float64Array` so the page can draw it
//! without any marshalling layer. Rows are laid out consecutively.

use std::sync::OnceLock;

use cubic_lab::montecarlo::{log_threshold, sample, SamplerConfig};
use cubic_lab::randmodel::{cached_constants, tail_phi, tail_psi, LogMomentFn, Side, TailMethod};
use wasm_bindgen::prelude::*;

/// Prime cutoff of the in-browser log-moment function; the integral tail
/// covers the remaining primes.
pub const DEMO_PRIME_CUTOFF: u64 = 100_000;
pub const MAX_DEMO_SAMPLES: u64 = 2_000_000;
pub const MAX_DEMO_Y: u64 = 100_000;

fn model(side: Side) -> &'static LogMomentFn {
    static MAX: OnceLock<LogMomentFn> = OnceLock::new();
    static MIN: OnceLock<LogMomentFn> = OnceLock::new();
    let cell = match side {
        Side::Max => &MAX,
        Side::Min => &MIN,
    };
    cell.get_or_init(|| LogMomentFn::new(side, DEMO_PRIME_CUTOFF).expect("cutoff is valid"))
}

fn grid(lo: f64, hi: f64, steps: u32) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || steps < 2 || steps > 10_000 {
        return Err(format!("need lo < hi and 2 <= steps <= 10000, got [{lo}, {hi}] with {steps}"));
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

fn side_of(large: bool) -> Side {
    if large {
        Side::Max
    } else {
        Side::Min
    }
}

/// `[c_max, c_min, c_3, zeta3, euler_gamma]`
#[wasm_bindgen]
pub fn constants() -> Vec<f64> {
    let c = cached_constants();
    vec![c.c_max, c.c_min, c.c3, c.zeta3, c.euler_gamma]
}

/// Rows `[tau, log10 saddle, log10 asymptotic]` for Φ (`large`) or Ψ.
/// Taus where the saddle point cannot be found carry NaN.
#[wasm_bindgen]
pub fn tail_curves(large: bool, tau_lo: f64, tau_hi: f64, steps: u32) -> Result<Vec<f64>, String> {
    if tau_lo <= 0.0 {
        return Err(format!("tau must be positive, got {tau_lo}"));
    }
    let side = side_of(large);
    let f = model(side);
    let tail = |tau: f64, m: TailMethod| {
        let t = match side {
            Side::Max => tail_phi(f, tau, m),
            Side::Min => tail_psi(f, tau, m),
        };
        t.map(|v| v.log10()).unwrap_or(f64::NAN)
    };
    let mut out = Vec::with_capacity(3 * steps as usize);
    for tau in grid(tau_lo, tau_hi, steps)? {
        out.extend([tau, tail(tau, TailMethod::Saddle), tail(tau, TailMethod::Asymptotic)]);
    }
    Ok(out)
}

/// Rows `[log10 r, L(r), L'(r), L''(r)]` over a log-spaced grid of r.
#[wasm_bindgen]
pub fn log_moment_curve(large: bool, log10_lo: f64, log10_hi: f64, steps: u32) -> Result<Vec<f64>, String> {
    let f = model(side_of(large));
    let mut out = Vec::with_capacity(4 * steps as usize);
    for e in grid(log10_lo, log10_hi, steps)? {
        let v = f.eval(10f64.powf(e)).map_err(|err| err.to_string())?;
        out.extend([e, v.value, v.d1, v.d2]);
    }
    Ok(out)
}

/// Histogram of log|L(1, 𝕏; y)| over `samples` draws.
///
/// Layout: `[lo, hi, phi_hat, psi_hat, count_0, …, count_{bins-1}]` where
/// the bins split [lo, hi] evenly and the two proportions are the sampled
/// tails at `tau`.
#[wasm_bindgen]
pub fn mc_histogram(seed: u64, y: u64, samples: u64, bins: u32, tau: f64) -> Result<Vec<f64>, String> {
    if samples == 0 || samples > MAX_DEMO_SAMPLES || y > MAX_DEMO_Y {
        return Err(format!("demo limits: 1 <= samples <= {MAX_DEMO_SAMPLES}, y <= {MAX_DEMO_Y}"));
    }
    if bins == 0 || bins > 1000 || !(tau > 0.0) {
        return Err("need 1 <= bins <= 1000 and tau > 0".into());
    }
    let batch = sample(&SamplerConfig::new(seed, y, samples)).map_err(|e| e.to_string())?;
    let v = &batch.log_abs;
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0f64; bins as usize];
    for &x in v {
        let k = (((x - lo) / width) as usize).min(bins as usize - 1);
        counts[k] += 1.0;
    }
    let n = v.len() as f64;
    let (tmax, tmin) = (log_threshold(Side::Max, tau), log_threshold(Side::Min, tau));
    let phi = v.iter().filter(|&&x| x > tmax).count() as f64 / n;
    let psi = v.iter().filter(|&&x| x < tmin).count() as f64 / n;
    let mut out = vec![lo, hi, phi, psi];
    out.extend(counts);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_known() {
        let c = constants();
        assert!((c[0] - 0.987_277_568_745).abs() < 1e-9);
        assert!((c[2] * c[2] - c[3]).abs() < 1e-8);
    }

    #[test]
    fn tails_decrease() {
        let rows = tail_curves(true, 1.0, 4.0, 7).unwrap();
        let saddle: Vec<f64> = rows.chunks(3).map(|r| r[1]).collect();
        assert!(saddle.windows(2).all(|w| w[1] < w[0]), "{saddle:?}");
        assert!(tail_curves(false, 1.0, 3.0, 5).unwrap().chunks(3).all(|r| r[1] < 0.0));
        assert!(tail_curves(true, 0.0, 1.0, 5).is_err());
    }

    #[test]
    fn log_moment_is_convex() {
        let rows = log_moment_curve(true, -2.0, 4.0, 13).unwrap();
        assert!(rows.chunks(4).all(|r| r[3] > 0.0));
        assert!(log_moment_curve(true, 1.0, 0.0, 5).is_err());
    }

    #[test]
    fn histogram_counts_every_draw() {
        let h = mc_histogram(7, 1000, 5000, 40, 1.5).unwrap();
        assert_eq!(h.len(), 44);
        assert_eq!(h[4..].iter().sum::<f64>(), 5000.0);
        assert!(h[0] < h[1] && (0.0..=1.0).contains(&h[2]));
        assert_eq!(h, mc_histogram(7, 1000, 5000, 40, 1.5).unwrap());
        assert!(mc_histogram(7, 1000, 0, 40, 1.5).is_err());
    }
}
