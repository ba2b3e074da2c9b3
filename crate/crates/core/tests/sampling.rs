use cubic_lab::moments::moment_euler_product;
use cubic_lab::montecarlo::*;
use cubic_lab::primes::primes_up_to;
use cubic_lab::randmodel::{RandomCharModel, Side};
use num_complex::Complex64;

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn batches_are_reproducible_and_order_free() {
    let cfg = SamplerConfig::new(7, 1000, 4096);
    let a = sample(&cfg).unwrap();
    let b = sample(&cfg).unwrap();
    assert_eq!(a, b);
    let s = Sampler::new(cfg).unwrap();
    let tail = s.sample_range(1000, 96);
    assert_eq!(&a.log_abs[1000..1096], &tail.log_abs[..]);
    // reversed access order gives the same values
    let rev: Vec<f64> = (0..4096u64).rev().map(|d| s.log_abs(d)).collect();
    assert!(rev.iter().rev().zip(&a.log_abs).all(|(x, y)| x == y));
    let other = sample(&SamplerConfig::new(8, 1000, 4096)).unwrap();
    assert_ne!(a.log_abs, other.log_abs);
}

#[test]
fn single_prime_second_moment() {
    let batch = sample(&SamplerConfig::new(DEFAULT_SEED, 2, 1_000_000)).unwrap();
    let (m, se) = mean_and_se(batch.log_abs.iter().map(|l| (2.0 * l).exp()));
    assert!((m - 12.0 / 7.0).abs() < 3.0 * se, "{m} ± {se}");
    // the three possible values of |1 − x/2|
    let allowed = [0.5f64, 7f64.sqrt() / 2.0];
    assert!(batch.log_abs.iter().all(|l| allowed.iter().any(|a| (-l - a.ln()).abs() < 1e-12)));
}

#[test]
fn atoms_follow_the_law() {
    let cfg = SamplerConfig::new(DEFAULT_SEED, 13, 1_000_000);
    let s = Sampler::new(cfg).unwrap();
    let model = RandomCharModel::cubic();
    let n = cfg.n_samples;
    for (i, &p) in s.primes().iter().enumerate() {
        let mut counts = [0u64; 4];
        for d in 0..n {
            match s.draw_x(d, i) {
                None => counts[3] += 1,
                Some(k) => counts[k] += 1,
            }
        }
        let law = model.x_law(p);
        let prob = |r: &num_rational::Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
        let expected = [prob(&law.roots[0]), prob(&law.roots[1]), prob(&law.roots[2]), prob(&law.zero)];
        for (c, e) in counts.iter().zip(expected) {
            let se = (e * (1.0 - e) / n as f64).sqrt().max(1e-12);
            let f = *c as f64 / n as f64;
            assert!((f - e).abs() <= 4.0 * se, "p = {p}: {f} vs {e}");
        }
    }
}

#[test]
fn variance_of_square_matches_moments() {
    let batch = sample(&SamplerConfig::new(DEFAULT_SEED, 1000, 1_000_000)).unwrap();
    let w: Vec<f64> = batch.log_abs.iter().map(|l| (2.0 * l).exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = w.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - var * var) / n).sqrt();
    let model = moment_euler_product(1000, 2.0).unwrap() - moment_euler_product(1000, 1.0).unwrap().powi(2);
    assert!((var - model).abs() < 3.0 * se, "{var} vs {model} ± {se}");
}

#[test]
fn mean_log_matches_per_prime_expectation() {
    let y = 10_000;
    let batch = sample(&SamplerConfig::new(DEFAULT_SEED, y, 1_000_000)).unwrap();
    let (m, se) = mean_and_se(batch.log_abs.iter().copied());
    let model = RandomCharModel::cubic();
    let analytic: f64 = primes_up_to(y)
        .into_iter()
        .map(|p| {
            let law = model.x_law(p);
            let inv = 1.0 / p as f64;
            law.roots
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let x = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 3.0);
                    -(*w.numer() as f64 / *w.denom() as f64) * (Complex64::new(1.0, 0.0) - x * inv).norm().ln()
                })
                .sum::<f64>()
        })
        .sum();
    assert!((m - analytic).abs() < 3.0 * se, "{m} vs {analytic} ± {se}");
}

#[test]
fn tail_table_edges() {
    let batch = sample(&SamplerConfig::new(DEFAULT_SEED, 1000, 20_000)).unwrap();
    let t = empirical_tails(&batch, &[0.0, 1.0, 1.5, 10.0], Side::Max).unwrap();
    assert_eq!(t.rows[0].value, 1.0);
    assert!(t.is_nonincreasing());
    assert_eq!(t.rows[3].hits, Some(0));
    assert!(t.rows[3].too_few_hits);
    let mut buf = Vec::new();
    write_tails_csv(&t, &batch.config, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("tau,side,estimate,stderr,n,seed,y\n"));
    assert!(text.lines().last().unwrap().contains("too_few_hits"));
    assert!(sample(&SamplerConfig::new(1, MAX_Y + 1, 1)).is_err());
    assert!(sample(&SamplerConfig::new(1, 100, MAX_SAMPLES + 1)).is_err());
}
