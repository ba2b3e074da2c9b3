//! Tail tables shared by the family, Monte Carlo and model evaluations.

use std::io::Write;

use crate::error::Result;
use crate::numeric::fmt_sig;
use crate::randmodel::{Side, TailMethod, TailValue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub tau: f64,
    pub side: Side,
    pub method: TailMethod,
    /// probability; 0 when it underflows (see `ln_value`)
    pub value: f64,
    pub ln_value: f64,
    pub stderr: Option<f64>,
    pub hits: Option<u64>,
    pub n: Option<u64>,
    /// fewer than the minimum number of hits for a sampled estimate
    pub too_few_hits: bool,
    pub outside_regime: bool,
}

impl TailRow {
    /// A row for an observed proportion `hits / n`.
    pub fn counted(tau: f64, side: Side, method: TailMethod, hits: u64, n: u64) -> Self {
        let value = hits as f64 / n as f64;
        Self {
            tau,
            side,
            method,
            value,
            ln_value: value.ln(),
            stderr: None,
            hits: Some(hits),
            n: Some(n),
            too_few_hits: false,
            outside_regime: false,
        }
    }
}

impl From<TailValue> for TailRow {
    fn from(t: TailValue) -> Self {
        Self {
            tau: t.tau,
            side: t.side,
            method: t.method,
            value: t.value().unwrap_or(0.0),
            ln_value: t.ln_value,
            stderr: None,
            hits: None,
            n: None,
            too_few_hits: false,
            outside_regime: t.outside_regime,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TailTable {
    pub rows: Vec<TailRow>,
}

impl TailTable {
    pub fn new(rows: Vec<TailRow>) -> Self {
        Self { rows }
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ln_value <= w[0].ln_value)
    }

    /// `tau,side,method,value,log10_value,stderr,hits,n,flag`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "side", "method", "value", "log10_value", "stderr", "hits", "n", "flag"])?;
        for r in &self.rows {
            let flag = match (r.too_few_hits, r.outside_regime) {
                (true, _) => "too_few_hits",
                (false, true) => "outside_asymptotic_regime",
                _ => "",
            };
            w.write_record([
                fmt_sig(r.tau),
                r.side.name().to_string(),
                r.method.name().to_string(),
                fmt_sig(r.value),
                fmt_sig(r.ln_value / std::f64::consts::LN_10),
                r.stderr.map(fmt_sig).unwrap_or_default(),
                r.hits.map(|h| h.to_string()).unwrap_or_default(),
                r.n.map(|h| h.to_string()).unwrap_or_default(),
                flag.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// τ grid `a, a + step, …` up to and including `b` (within rounding).
pub fn tau_grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || b < a {
        return vec![a];
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| a + step * i as f64).collect()
}
