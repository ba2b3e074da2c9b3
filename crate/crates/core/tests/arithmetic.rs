use cubic_lab::eisenstein::{cubic_symbol, split_prime, symbol_totally_multiplicative_check, CubeRoot, EisensteinInt};
use cubic_lab::moments::{d_z, d_z_prime_power};
use cubic_lab::primes::{mertens_product, primes_in, primes_up_to, ClassFilter, MertensForm, PrimeRange};
use proptest::prelude::*;

fn trial_division(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

#[test]
fn prime_counts_match_trial_division() {
    let sieve = primes_up_to(10_000);
    let oracle: Vec<u64> = (0..=10_000).filter(|&n| trial_division(n)).collect();
    assert_eq!(sieve, oracle);
    let split: Vec<u64> = PrimeRange::new(2, 10_000).with_filter(ClassFilter::SPLIT).iter().unwrap().collect();
    assert_eq!(split, oracle.iter().copied().filter(|p| p % 3 == 1).collect::<Vec<_>>());
}

#[test]
fn segmented_sieve_agrees_with_whole_range() {
    let whole = primes_up_to(1_000_000);
    let seg: Vec<u64> = PrimeRange::new(2, 1_000_000).with_memory_budget(1 << 18).iter().unwrap().collect();
    assert_eq!(whole, seg);
    let inner = primes_in(&PrimeRange::new(999_000, 1_000_000)).unwrap();
    assert_eq!(inner, whole.into_iter().filter(|&p| p >= 999_000).collect::<Vec<_>>());
}

#[test]
fn mertens_ratio_approaches_one() {
    let gaps: Vec<f64> = [1_000u64, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&y| {
            let prod = mertens_product(y, MertensForm::OneMinusInv).unwrap();
            (0.577_215_664_901_532_9f64.exp() * (y as f64).ln() * prod - 1.0).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn norm_is_multiplicative_on_small_box() {
    for a in -10..=10i128 {
        for b in -10..=10i128 {
            let z = EisensteinInt::new(a, b);
            assert!(z.norm() >= 0);
            assert_eq!(z.norm() == 0, a == 0 && b == 0);
            for c in -4..=4i128 {
                for d in -4..=4i128 {
                    let w = EisensteinInt::new(c, d);
                    assert_eq!((z * w).norm(), z.norm() * w.norm());
                }
            }
        }
    }
}

#[test]
fn every_small_split_prime_splits() {
    for p in primes_up_to(10_000).into_iter().filter(|p| p % 3 == 1) {
        let q = split_prime(p).unwrap();
        assert_eq!(q.value().norm(), p as i128);
        assert!(q.value().is_primary());
        assert_eq!(q.conjugate().value(), q.value().conj());
    }
}

proptest! {
    #[test]
    fn norm_multiplicative(a in -1_000_000i128..1_000_000, b in -1_000_000i128..1_000_000,
                           c in -1_000_000i128..1_000_000, d in -1_000_000i128..1_000_000) {
        let z = EisensteinInt::new(a, b);
        let w = EisensteinInt::new(c, d);
        prop_assert_eq!((z * w).norm(), z.norm() * w.norm());
        prop_assert_eq!(z * w, w * z);
    }

    #[test]
    fn symbol_is_multiplicative(idx in 0usize..200, m1 in 1i64..1_000_000_000, m2 in 1i64..1_000_000_000) {
        let p = primes_up_to(10_000).into_iter().filter(|p| p % 3 == 1).nth(idx).unwrap();
        let q = split_prime(p).unwrap();
        prop_assert!(symbol_totally_multiplicative_check(m1, m2, &q));
    }

    #[test]
    fn symbol_properties(idx in 0usize..200, m in 1i64..1_000_000_000) {
        let p = primes_up_to(10_000).into_iter().filter(|p| p % 3 == 1).nth(idx).unwrap();
        let q = split_prime(p).unwrap();
        let s = cubic_symbol(m, &q).unwrap();
        prop_assert_eq!(s, cubic_symbol(m % p as i64, &q).unwrap());
        prop_assert_eq!(s.is_zero(), m % p as i64 == 0);
        if !s.is_zero() {
            prop_assert_eq!(s.pow(3), CubeRoot::ONE);
        }
        prop_assert_eq!(cubic_symbol(m, &q.conjugate()).unwrap(), s.conj());
    }

    #[test]
    fn d_z_multiplicative(a in 1u64..5_000, b in 1u64..5_000, z in -3.0f64..3.0) {
        fn gcd(a: u64, b: u64) -> u64 { if b == 0 { a } else { gcd(b, a % b) } }
        prop_assume!(gcd(a, b) == 1);
        let lhs = d_z(a * b, z);
        let rhs = d_z(a, z) * d_z(b, z);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        prop_assert!(d_z(a, z).abs() <= d_z(a, z.abs()) * (1.0 + 1e-12));
    }
}

#[test]
fn d_k_counts_ordered_factorizations() {
    fn count(n: u64, k: u32) -> u64 {
        if k == 1 {
            return 1;
        }
        (1..=n).filter(|d| n % d == 0).map(|d| count(n / d, k - 1)).sum()
    }
    for k in 1..=4u32 {
        for n in 1..=500u64 {
            assert!((d_z(n, k as f64) - count(n, k) as f64).abs() < 1e-9, "d_{k}({n})");
        }
    }
    assert_eq!(d_z_prime_power(0, 0.7), 1.0);
}
