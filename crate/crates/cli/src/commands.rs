use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cubic_lab::error::{LabError, Result};
use cubic_lab::family::{
    empirical_tail, enumerate_family, evaluate_family, read_slice_cache, write_l_values, write_slice_cache,
    FamilySlice, LMethod, LValue, Truncation,
};
use cubic_lab::moments::{family_moment, moment_double_sum, moment_euler_product, MomentSpec};
use cubic_lab::montecarlo::{empirical_tails, sample, SamplerConfig};
use cubic_lab::randmodel::{
    c_ell, cached_constants, family_tau_range_end, tail_phi, LogMomentFn, Side, TailMethod, DEFAULT_PRIME_CUTOFF,
};
use cubic_lab::tables::TailTable;

use crate::output::{Cell, Format, Table};

pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write(format, &mut w)?;
            w.flush()?;
        }
        None => table.write(format, io::stdout().lock())?,
    }
    Ok(())
}

pub fn constants(ells: &[u64]) -> Result<Table> {
    let c = cached_constants();
    let mut t = Table::new(&["name", "value"]);
    t.push(vec!["c_max".into(), c.c_max.into()]);
    t.push(vec!["c_min".into(), c.c_min.into()]);
    for &ell in ells {
        let name = format!("c_ell_{ell}");
        t.push(vec![Cell::Text(name), c_ell(ell, DEFAULT_PRIME_CUTOFF)?.into()]);
    }
    t.push(vec!["zeta3".into(), c.zeta3.into()]);
    t.push(vec!["zeta2".into(), c.zeta2.into()]);
    t.push(vec!["euler_gamma".into(), c.euler_gamma.into()]);
    t.push(vec!["quad_tol".into(), c.quad_tol.into()]);
    Ok(t)
}

fn load_family(x: u64, cache: Option<&Path>) -> Result<FamilySlice> {
    match cache {
        Some(p) if p.exists() => read_slice_cache(x, File::open(p)?),
        Some(p) => {
            let slice = enumerate_family(x)?;
            let mut w = BufWriter::new(File::create(p)?);
            write_slice_cache(&slice, &mut w)?;
            w.flush()?;
            Ok(slice)
        }
        None => enumerate_family(x),
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn warn_precision(values: &[LValue]) {
    let n = values.iter().filter(|l| l.precision_warning).count();
    if n > 0 {
        eprintln!("warning: {n} of {} L-values carry a precision warning", values.len());
    }
}

/// Writes `slice.csv`, `lvalues.csv` and `tails.csv` under `dir`; returns the
/// tail proportions on both sides.
pub fn family(
    x: u64,
    method: LMethod,
    trunc: Truncation,
    taus: &[f64],
    cache: Option<&Path>,
    dir: &Path,
) -> Result<Table> {
    let slice = load_family(x, cache)?;
    if slice.is_empty() {
        return Err(LabError::Precondition(format!("the family up to X = {x} is empty")));
    }
    let values = evaluate_family(&slice, method, trunc)?;
    warn_precision(&values);
    let large = empirical_tail(&values, taus, Side::Max)?;
    let small = empirical_tail(&values, taus, Side::Min)?;
    fs::create_dir_all(dir)?;
    write_file(&dir.join("slice.csv"), |w| write_slice_cache(&slice, w))?;
    write_file(&dir.join("lvalues.csv"), |w| write_l_values(&values, w))?;
    let both = TailTable::new(large.rows.iter().chain(&small.rows).copied().collect());
    write_file(&dir.join("tails.csv"), |w| both.write_csv(w))?;

    let mut t = Table::new(&["tau", "phi_family", "psi_family", "characters"]);
    for (a, b) in large.rows.iter().zip(&small.rows) {
        t.push(vec![a.tau.into(), a.value.into(), b.value.into(), (values.len() as u64).into()]);
    }
    Ok(t)
}

pub fn compare(
    x: u64,
    method: LMethod,
    trunc: Truncation,
    y: u64,
    seed: u64,
    samples: u64,
    taus: &[f64],
) -> Result<Table> {
    let slice = enumerate_family(x)?;
    if slice.is_empty() {
        return Err(LabError::Precondition(format!("the family up to X = {x} is empty")));
    }
    let values = evaluate_family(&slice, method, trunc)?;
    warn_precision(&values);
    let fam = empirical_tail(&values, taus, Side::Max)?;
    let batch = sample(&SamplerConfig::new(seed, y, samples))?;
    let mc = empirical_tails(&batch, taus, Side::Max)?;
    let f = LogMomentFn::with_default_cutoff(Side::Max);
    let end = family_tau_range_end(x as f64);
    let mut t = Table::new(&["tau", "phi_family", "phi_mc", "phi_mc_se", "phi_saddle", "phi_asym", "in_thm13_range"]);
    for ((&tau, fr), mr) in taus.iter().zip(&fam.rows).zip(&mc.rows) {
        let saddle = tail_phi(&f, tau, TailMethod::Saddle)?;
        let asym = tail_phi(&f, tau, TailMethod::Asymptotic)?;
        let phi_mc = if mr.too_few_hits { Cell::Text("too_few_hits".into()) } else { mr.value.into() };
        t.push(vec![
            tau.into(),
            fr.value.into(),
            phi_mc,
            mr.stderr.into(),
            saddle.ln_value.exp().into(),
            asym.ln_value.exp().into(),
            Cell::Bool(tau >= 1.0 && tau <= end),
        ]);
    }
    Ok(t)
}

pub fn moments(zs: &[f64], y: u64, sum_bound: u64, family: Option<(u64, LMethod, Truncation)>) -> Result<Table> {
    let abs = match family {
        Some((x, method, trunc)) => {
            let slice = enumerate_family(x)?;
            if slice.is_empty() {
                return Err(LabError::Precondition(format!("the family up to X = {x} is empty")));
            }
            let values = evaluate_family(&slice, method, trunc)?;
            warn_precision(&values);
            Some(values.iter().map(|l| l.abs).collect::<Vec<f64>>())
        }
        None => None,
    };
    let mut headers = vec!["z", "y", "double_sum", "euler_product", "rel_diff"];
    if abs.is_some() {
        headers.extend(["family", "family_rel_diff"]);
    }
    let mut t = Table::new(&headers);
    for &z in zs {
        let product = moment_euler_product(y, z)?;
        let double = match moment_double_sum(&MomentSpec::new(z, y).with_sum_bound(sum_bound)) {
            Ok(s) => {
                if let Some(w) = &s.warning {
                    eprintln!("warning: z = {z}: {w}");
                }
                Some(s.value)
            }
            Err(LabError::Budget(_)) => None,
            Err(e) => return Err(e),
        };
        let rel = |v: f64| (v - product).abs() / product.abs();
        let mut row = vec![z.into(), y.into(), double.into(), product.into(), double.map(rel).into()];
        if let Some(a) = &abs {
            let m = family_moment(a, z)?;
            row.extend([m.into(), rel(m).into()]);
        }
        t.push(row);
    }
    Ok(t)
}

pub fn montecarlo(y: u64, seed: u64, samples: u64, ell: u64, taus: &[f64], side: Side) -> Result<Table> {
    let config = SamplerConfig::new(seed, y, samples).with_ell(ell);
    let batch = sample(&config)?;
    let tails = empirical_tails(&batch, taus, side)?;
    let mut t = Table::new(&["tau", "side", "estimate", "stderr", "n", "seed", "y"]);
    for r in &tails.rows {
        let estimate = if r.too_few_hits { Cell::Text("too_few_hits".into()) } else { r.value.into() };
        t.push(vec![
            r.tau.into(),
            r.side.name().into(),
            estimate,
            r.stderr.into(),
            r.n.into(),
            seed.into(),
            y.into(),
        ]);
    }
    Ok(t)
}
