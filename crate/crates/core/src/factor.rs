//! Factorization of discriminants: trial division by a prime table, then Pollard rho.

use crate::arith::is_prime;
use rug::Integer;

/// Primes up to `limit` by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Trial division against a fixed prime table; covers every `n ≤ bound²` without fallback.
#[derive(Clone, Debug)]
pub struct Factorizer {
    primes: Vec<u64>,
    bound: u64,
}

impl Factorizer {
    pub fn new(bound: u64) -> Self {
        let bound = bound.max(2);
        Factorizer { primes: primes_up_to(bound), bound }
    }

    /// Prime factorization of `n ≥ 1` as `(p, e)` pairs in increasing order of `p`.
    pub fn factor_u64(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        for &p in &self.primes {
            if p * p > n {
                break;
            }
            if n.is_multiple_of(p) {
                let mut e = 0;
                while n.is_multiple_of(p) {
                    n /= p;
                    e += 1;
                }
                out.push((p, e));
            }
        }
        if n > 1 {
            let covered = (n as u128) <= (self.bound as u128) * (self.bound as u128);
            if covered || is_prime(n) {
                out.push((n, 1));
            } else {
                merge_into(&mut out, split_large(&Integer::from(n)));
            }
        }
        out
    }
}

fn merge_into(out: &mut Vec<(u64, u32)>, more: Vec<(Integer, u32)>) {
    for (q, e) in more {
        let q = q.to_u64().expect("prime factors of discriminants fit in 64 bits");
        match out.iter_mut().find(|(p, _)| *p == q) {
            Some(entry) => entry.1 += e,
            None => out.push((q, e)),
        }
    }
    out.sort_unstable();
}

/// Prime factorization of `|n|`, `n ≠ 0`. Panics if a prime factor exceeds 64 bits.
pub fn factor_discriminant(n: &Integer) -> Vec<(u64, u32)> {
    assert!(*n != 0, "cannot factor zero");
    let mut m = Integer::from(n.abs_ref());
    let mut out = Vec::new();
    for p in primes_up_to(1000) {
        let e = m.remove_factor_mut(&Integer::from(p));
        if e > 0 {
            out.push((p, e));
        }
    }
    if m > 1 {
        merge_into(&mut out, split_large(&m));
    }
    out
}

/// Factor `n` with no prime factor below 1000.
fn split_large(n: &Integer) -> Vec<(Integer, u32)> {
    let mut stack = vec![n.clone()];
    let mut primes: Vec<(Integer, u32)> = Vec::new();
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if m.is_probably_prime(40) != rug::integer::IsPrime::No {
            match primes.iter_mut().find(|(q, _)| *q == m) {
                Some(entry) => entry.1 += 1,
                None => primes.push((m, 1)),
            }
            continue;
        }
        if m.is_perfect_square() {
            let r = m.sqrt();
            stack.push(r.clone());
            stack.push(r);
            continue;
        }
        let d = pollard_brent(&m);
        let rest = Integer::from(&m / &d);
        stack.push(d);
        stack.push(rest);
    }
    primes.sort();
    primes
}

/// A nontrivial factor of the odd composite `n`.
fn pollard_brent(n: &Integer) -> Integer {
    for c in 1u32.. {
        let f = |x: &Integer| (Integer::from(x * x) + c) % n;
        let mut y = Integer::from(2);
        let mut r = 1u64;
        let mut q = Integer::from(1);
        let mut g = Integer::from(1);
        let mut x = Integer::new();
        let mut ys = Integer::new();
        let block = 128u64;
        while g == 1 {
            x.clone_from(&y);
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys.clone_from(&y);
                for _ in 0..block.min(r - k) {
                    y = f(&y);
                    q = (&q * Integer::from(&x - &y).abs()) % n;
                }
                g = Integer::from(q.gcd_ref(n));
                k += block;
            }
            r *= 2;
        }
        if g == *n {
            loop {
                ys = f(&ys);
                g = Integer::from(Integer::from(&x - &ys).abs().gcd_ref(n));
                if g > 1 {
                    break;
                }
            }
        }
        if g != *n {
            return g;
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn expand(f: &[(u64, u32)]) -> Integer {
        f.iter().fold(Integer::from(1), |acc, &(p, e)| acc * Integer::from(p).pow(e))
    }

    use rug::ops::Pow;

    #[test]
    fn sieve_counts() {
        assert_eq!(primes_up_to(100).len(), 25);
        assert_eq!(primes_up_to(1).len(), 0);
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(factor_discriminant(&Integer::from(-496)), vec![(2, 4), (31, 1)]);
        assert_eq!(factor_discriminant(&Integer::from(-5184)), vec![(2, 6), (3, 4)]);
        assert!(factor_discriminant(&Integer::from(1)).is_empty());
        // product of two 31-bit primes
        let n = Integer::from(2147483647u64) * Integer::from(2147483629u64);
        assert_eq!(factor_discriminant(&n), vec![(2147483629, 1), (2147483647, 1)]);
        let sq = Integer::from(1000003u64).pow(2) * 1000033u64;
        assert_eq!(factor_discriminant(&sq), vec![(1000003, 2), (1000033, 1)]);
    }

    proptest! {
        #[test]
        fn factorizer_matches_general(n in 1u64..50_000_000) {
            let f = Factorizer::new(7072);
            let a = f.factor_u64(n);
            prop_assert_eq!(expand(&a), Integer::from(n));
            prop_assert!(a.iter().all(|&(p, _)| is_prime(p)));
            prop_assert_eq!(a, factor_discriminant(&Integer::from(n)));
        }

        #[test]
        fn small_table_falls_back(n in 1u64..u64::MAX / 2) {
            let f = Factorizer::new(50);
            let a = f.factor_u64(n);
            prop_assert_eq!(expand(&a), Integer::from(n));
            prop_assert!(a.iter().all(|&(p, _)| is_prime(p)));
        }
    }
}
