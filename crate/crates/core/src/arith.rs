//! Valuations, Legendre symbols, p-adic square roots and root counts over F_p.

use rug::integer::IsPrime;
use rug::ops::Pow;
use rug::Integer;
use serde::{Serialize, Serializer};
use std::fmt;

/// A p-adic valuation; `v_p(0)` is infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn at_least(self, k: u32) -> bool {
        match self {
            Valuation::Finite(v) => v >= k,
            Valuation::Infinite => true,
        }
    }

    pub fn is(self, k: u32) -> bool {
        self == Valuation::Finite(k)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Valuation::Finite(v) => s.serialize_u32(*v),
            Valuation::Infinite => s.serialize_str("inf"),
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    // BPSW inside GMP is deterministic below 2^64
    p >= 2 && Integer::from(p).is_probably_prime(30) != IsPrime::No
}

/// Largest `e` with `p^e | n`.
pub fn valuation(n: &Integer, p: u64) -> Valuation {
    split_valuation(n, p).0
}

/// `(v_p(n), n / p^{v_p(n)})`; the unit part of zero is zero.
pub fn split_valuation(n: &Integer, p: u64) -> (Valuation, Integer) {
    if *n == 0 {
        return (Valuation::Infinite, Integer::new());
    }
    let mut unit = n.clone();
    let e = unit.remove_factor_mut(&Integer::from(p));
    (Valuation::Finite(e), unit)
}

/// Least nonnegative residue of `n` modulo `m`.
pub fn residue(n: &Integer, m: u64) -> u64 {
    let r = Integer::from(n % m).to_i128().expect("remainder below the modulus");
    r.rem_euclid(m as i128) as u64
}

/// Least nonnegative residue of `n` modulo the arbitrary modulus `m > 0`.
pub fn residue_big(n: &Integer, m: &Integer) -> Integer {
    let mut r = Integer::from(n % m);
    if r < 0 {
        r += m;
    }
    r
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
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

pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// Legendre symbol `(a|p)` for an odd prime `p` by Euler's criterion.
pub fn legendre_u64(a: u64, p: u64) -> i32 {
    debug_assert!(p % 2 == 1);
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

pub fn legendre(a: &Integer, p: u64) -> i32 {
    legendre_u64(residue(a, p), p)
}

/// A square root of `a` modulo the odd prime `p` (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if legendre_u64(a, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while legendre_u64(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// A square root of the p-adic unit `a` modulo `p^k` for an odd prime `p`, Hensel-lifted.
/// The result lies in `[0, p^k)`; the other root is its negative.
pub fn sqrt_mod_prime_power(a: &Integer, p: u64, k: u32) -> Option<Integer> {
    debug_assert!(p % 2 == 1);
    let r0 = sqrt_mod_prime(residue(a, p), p)?;
    if r0 == 0 {
        return None;
    }
    let modulus = Integer::from(p).pow(k);
    let a = residue_big(a, &modulus);
    let mut r = Integer::from(r0);
    for _ in 0..64 {
        let err = residue_big(&(Integer::from(&r * &r) - &a), &modulus);
        if err == 0 {
            return Some(r);
        }
        let inv = Integer::from(2 * &r).invert(&modulus).ok()?;
        r = residue_big(&(r - err * inv), &modulus);
    }
    None
}

/// The 2-adic square root of `a ≡ 1 (mod 8)` that is `≡ 1 (mod 4)`, reduced modulo `2^k`.
pub fn sqrt_mod_two_power(a: &Integer, k: u32) -> Option<Integer> {
    if residue(a, 8) != 1 {
        return None;
    }
    // bit-lifting yields r with r^2 ≡ a mod 2^m, which agrees with a true root mod 2^(m-1)
    let m = k.max(3) + 1;
    let modulus = Integer::from(1) << m;
    let a = residue_big(a, &modulus);
    let mut r = Integer::from(1);
    for j in 3..m {
        let err = Integer::from(&r * &r) - &a;
        if err.get_bit(j) {
            r += Integer::from(1) << (j - 1);
        }
    }
    let out_mod = Integer::from(1) << k;
    let mut r = residue_big(&r, &out_mod);
    if k >= 2 && residue(&r, 4) == 3 {
        r = residue_big(&(Integer::from(&out_mod - &r)), &out_mod);
    }
    Some(r)
}

fn trim(f: &mut Vec<u64>) {
    while f.last() == Some(&0) {
        f.pop();
    }
}

fn poly_rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    trim(&mut r);
    let df = f.len() - 1;
    let lead_inv = inv_mod(f[df], p);
    while r.len() > df {
        let dr = r.len() - 1;
        let q = mul_mod(r[dr], lead_inv, p);
        for (i, &fi) in f.iter().enumerate() {
            let sub = mul_mod(q, fi, p);
            let idx = dr - df + i;
            r[idx] = (r[idx] + p - sub) % p;
        }
        trim(&mut r);
    }
    r
}

fn poly_mul_rem(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    poly_rem(&out, f, p)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Number of distinct roots in F_p of the polynomial with coefficients `coeffs`
/// (lowest degree first). The zero polynomial has `p` roots.
pub fn count_roots_mod_p(coeffs: &[u64], p: u64) -> u64 {
    let mut f: Vec<u64> = coeffs.iter().map(|c| c % p).collect();
    trim(&mut f);
    match f.len() {
        0 => return p,
        1 => return 0,
        2 => return 1,
        _ => {}
    }
    if p <= 64 {
        return (0..p)
            .filter(|&x| f.iter().rev().fold(0, |acc, &c| (mul_mod(acc, x, p) + c) % p) == 0)
            .count() as u64;
    }
    // deg gcd(f, x^p - x) counts the distinct roots
    let mut result = vec![1u64];
    let mut base = poly_rem(&[0, 1], &f, p);
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul_rem(&result, &base, &f, p);
        }
        base = poly_mul_rem(&base, &base, &f, p);
        e >>= 1;
    }
    result.resize(result.len().max(2), 0);
    result[1] = (result[1] + p - 1) % p;
    let g = poly_gcd(&f, &result, p);
    (g.len() - 1) as u64
}

pub fn count_roots_mod_p_big(coeffs: &[Integer], p: u64) -> u64 {
    let reduced: Vec<u64> = coeffs.iter().map(|c| residue(c, p)).collect();
    count_roots_mod_p(&reduced, p)
}

/// Whether `a y^2 + b y + c` has a root modulo the prime `p`.
pub fn quadratic_has_root(a: &Integer, b: &Integer, c: &Integer, p: u64) -> bool {
    let (a, b, c) = (residue(a, p), residue(b, p), residue(c, p));
    if p == 2 {
        return c == 0 || (a + b + c) % 2 == 0;
    }
    if a == 0 {
        return b != 0 || c == 0;
    }
    let disc = (mul_mod(b, b, p) + p - mul_mod(4 % p, mul_mod(a, c, p), p)) % p;
    legendre_u64(disc, p) >= 0
}

/// Serialize an integer as its decimal string.
pub fn ser_int<S: Serializer>(n: &Integer, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

pub fn ser_opt_int<S: Serializer>(n: &Option<Integer>, s: S) -> Result<S::Ok, S::Error> {
    match n {
        Some(n) => s.serialize_some(&n.to_string()),
        None => s.serialize_none(),
    }
}

pub fn pow_u(p: u64, e: u32) -> Integer {
    Integer::from(p).pow(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&Integer::from(-5184), 2), Valuation::Finite(6));
        assert_eq!(valuation(&Integer::from(0), 7), Valuation::Infinite);
        assert_eq!(valuation(&Integer::from(1), 13), Valuation::Finite(0));
        let (v, u) = split_valuation(&Integer::from(-5184), 3);
        assert_eq!(v, Valuation::Finite(4));
        assert_eq!(u, -64);
    }

    #[test]
    fn residues_are_nonnegative() {
        assert_eq!(residue(&Integer::from(-1), 5), 4);
        assert_eq!(residue(&Integer::from(-10), 5), 0);
        let big = u64::MAX - 58; // prime
        assert_eq!(residue(&Integer::from(-1), big), big - 1);
    }

    #[test]
    fn legendre_matches_brute_force() {
        for p in [3u64, 5, 7, 11, 13, 101] {
            for a in 0..p {
                let brute = if a == 0 {
                    0
                } else if (1..p).any(|x| x * x % p == a) {
                    1
                } else {
                    -1
                };
                assert_eq!(legendre_u64(a, p), brute, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn tonelli_shanks_all_residues() {
        for p in [3u64, 5, 13, 17, 97, 257, 65537] {
            for a in 1..p.min(500) {
                match sqrt_mod_prime(a, p) {
                    Some(r) => assert_eq!(mul_mod(r, r, p), a),
                    None => assert_eq!(legendre_u64(a, p), -1),
                }
            }
        }
    }

    #[test]
    fn hensel_lift_odd() {
        let a = Integer::from(-2); // square mod 3^k: -2 ≡ 1 mod 3
        let r = sqrt_mod_prime_power(&a, 3, 12).unwrap();
        let m = pow_u(3, 12);
        assert_eq!(residue_big(&(Integer::from(&r * &r) - &a), &m), 0);
        assert!(sqrt_mod_prime_power(&Integer::from(2), 5, 4).is_none());
    }

    #[test]
    fn two_adic_root() {
        for a in [1i64, 9, 17, -7, -15, 33, 57] {
            let a = Integer::from(a);
            let r = sqrt_mod_two_power(&a, 20).unwrap();
            assert_eq!(residue(&r, 4), 1);
            // r agrees with a true root modulo 2^20
            let m = Integer::from(1) << 20;
            assert_eq!(residue_big(&(Integer::from(&r * &r) - &a), &m), 0);
        }
        assert!(sqrt_mod_two_power(&Integer::from(5), 10).is_none());
    }

    #[test]
    fn root_count_brute_vs_gcd() {
        let p = 1_000_003u64;
        // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let f = [p - 6, 11, p - 6, 1];
        assert_eq!(count_roots_mod_p(&f, p), 3);
        // x^3 - 2 has 1 or 3 roots depending on p mod 3; p ≡ 1 mod 3 here
        let g = [p - 2, 0, 0, 1];
        let brute_small = count_roots_mod_p(&[5, 0, 0, 1], 7);
        assert_eq!(brute_small, (0..7u64).filter(|x| (x * x * x + 5) % 7 == 0).count() as u64);
        let c = count_roots_mod_p(&g, p);
        assert!(c == 0 || c == 3);
        // x^2 + 1 over p ≡ 3 mod 4
        assert_eq!(count_roots_mod_p(&[1, 0, 1], 1_000_003), 0);
        assert_eq!(count_roots_mod_p(&[1, 0, 1], 1_000_033), 2);
    }

    #[test]
    fn quadratic_roots_mod_two() {
        let i = |x: i64| Integer::from(x);
        assert!(quadratic_has_root(&i(1), &i(1), &i(0), 2));
        assert!(!quadratic_has_root(&i(1), &i(1), &i(1), 2));
        assert!(quadratic_has_root(&i(1), &i(0), &i(1), 2));
    }

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
    }
}
