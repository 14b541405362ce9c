//! Exact local densities `δ_p(c)`: the proportion of short models (ordered by height) whose
//! Tamagawa number at `p` equals `c`.
//!
//! Each table lists `δ'_p(K, c)`, the mass of minimal models of type `K` with Tamagawa number
//! `c`, and for `p ∈ {2, 3}` also `δ̂_p(K, c)`, the mass of models whose short form is not minimal
//! but whose minimal model has no further short rescaling. Families indexed by `n` (types `I_n`
//! and `I_n*`) are stored as geometric series.

mod series;

pub use series::{
    convenient_density, convenient_factor_closed_form, l_tam, l_tam_local, p_tam, p_tam_table,
    p_tam_with, rho_minimal, DensityConstants, PTamRow, SeriesValue, PRECISION,
};

use crate::arith::is_prime;
use crate::tate::{epsilon, KodairaType};
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DensityError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("({kodaira}, {c}) is not an admissible pair")]
    Illegal { kodaira: KodairaType, c: u64 },
    #[error("the non-minimal table exists only for p = 2 and p = 3, not {0}")]
    NoHatTable(u64),
    #[error("c must be at least 1")]
    ZeroC,
    #[error("{0}")]
    Series(String),
}

/// Which version of the `p = 3` table to use.
///
/// `Published` reproduces the printed values. `Corrected` moves the curves with
/// `α4 = α6 = 3, d = 10` from `III*` to `IV*` (split evenly between `c = 1` and `c = 3`), which is
/// what Tate's algorithm actually gives for them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Table {
    #[default]
    Published,
    Corrected,
}

/// Rows of a table. `ratio^n · coef` is the mass of the `n`-th member of a family.
#[derive(Clone, Debug)]
enum Row {
    Fixed { kodaira: KodairaType, c: u64, value: Rational },
    /// `I_n` for `n ≥ n_min` with `c = ε(n)`.
    InEps { coef: Rational, ratio: Rational, n_min: u32 },
    /// `I_n` for `n ≥ n_min` with `c = n`.
    InSplit { coef: Rational, ratio: Rational, n_min: u32 },
    /// `I_n*` for `n ≥ 1`.
    InStar { c: u64, coef: Rational, ratio: Rational },
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn pw(p: u64, e: u32) -> Rational {
    Rational::from(Integer::from(p).pow(e))
}

fn inv_pw(p: u64, e: u32) -> Rational {
    pw(p, e).recip()
}

/// `Σ_{n ≥ n0, n ≡ n0 (mod step)} coef·ratio^n`.
fn geometric(coef: &Rational, ratio: &Rational, n0: u32, step: u32) -> Rational {
    let first = coef * Rational::from(ratio.pow(n0 as i32));
    let denom = Rational::from(1) - Rational::from(ratio.pow(step as i32));
    first / denom
}

fn minimal_rows(p: u64, table: Table) -> Vec<Row> {
    use KodairaType::*;
    let fixed = |kodaira, c, value| Row::Fixed { kodaira, c, value };
    match p {
        2 => vec![
            fixed(II, 1, q(1, 2)),
            fixed(III, 2, q(1, 4)),
            fixed(IV, 1, q(1, 16)),
            fixed(IV, 3, q(1, 16)),
            fixed(I0Star, 1, q(1, 32)),
            fixed(I0Star, 2, q(1, 32)),
            Row::InStar { c: 2, coef: q(1, 64), ratio: q(1, 2) },
            Row::InStar { c: 4, coef: q(1, 64), ratio: q(1, 2) },
            fixed(IVStar, 1, q(1, 128)),
            fixed(IVStar, 3, q(1, 128)),
            fixed(IIIStar, 2, q(1, 128)),
            fixed(IIStar, 1, q(1, 256)),
        ],
        3 => {
            let (iii_star, iv_star) = match table {
                Table::Published => (q(10, 19683), q(7, 19683)),
                Table::Corrected => (q(6, 19683), q(9, 19683)),
            };
            vec![
                fixed(I0, 1, q(2, 3)),
                fixed(II, 1, q(2, 9)),
                fixed(III, 2, q(2, 27)),
                fixed(IV, 1, q(1, 81)),
                fixed(IV, 3, q(1, 81)),
                fixed(I0Star, 1, q(8, 2187)),
                fixed(I0Star, 2, q(1, 243)),
                fixed(I0Star, 4, q(1, 2187)),
                Row::InStar { c: 2, coef: q(2, 729), ratio: q(1, 3) },
                Row::InStar { c: 4, coef: q(2, 729), ratio: q(1, 3) },
                fixed(IVStar, 1, iv_star.clone()),
                fixed(IVStar, 3, iv_star),
                fixed(IIIStar, 2, iii_star),
                fixed(IIStar, 1, q(2, 19683)),
            ]
        }
        _ => {
            let pr = Rational::from(p);
            let pm1 = Rational::from(p - 1);
            let pm1_sq = Rational::from(&pm1 * &pm1);
            let half_sq = Rational::from(&pm1_sq / 2u32);
            let inv_p = pr.clone().recip();
            vec![
                fixed(I0, 1, Rational::from(&pm1 / &pr)),
                fixed(In(1), 1, &pm1_sq * inv_pw(p, 3)),
                fixed(In(2), 2, &pm1_sq * inv_pw(p, 4)),
                Row::InEps { coef: (&half_sq * inv_pw(p, 2)), ratio: inv_p.clone(), n_min: 3 },
                Row::InSplit { coef: (&half_sq * inv_pw(p, 2)), ratio: inv_p.clone(), n_min: 3 },
                fixed(II, 1, &pm1 * inv_pw(p, 3)),
                fixed(III, 2, &pm1 * inv_pw(p, 4)),
                fixed(IV, 1, (&pm1 * inv_pw(p, 5)) / 2u32),
                fixed(IV, 3, (&pm1 * inv_pw(p, 5)) / 2u32),
                fixed(I0Star, 1, Rational::from(p * p - 1) * inv_pw(p, 7) / 3u32),
                fixed(I0Star, 2, (&pm1 * inv_pw(p, 6)) / 2u32),
                fixed(I0Star, 4, Rational::from((p - 1) * (p - 2)) * inv_pw(p, 7) / 6u32),
                Row::InStar { c: 2, coef: (&half_sq * inv_pw(p, 7)), ratio: inv_p.clone() },
                Row::InStar { c: 4, coef: (&half_sq * inv_pw(p, 7)), ratio: inv_p },
                fixed(IVStar, 1, (&pm1 * inv_pw(p, 8)) / 2u32),
                fixed(IVStar, 3, (&pm1 * inv_pw(p, 8)) / 2u32),
                fixed(IIIStar, 2, &pm1 * inv_pw(p, 9)),
                fixed(IIStar, 1, &pm1 * inv_pw(p, 10)),
            ]
        }
    }
}

fn hat_rows(p: u64) -> Vec<Row> {
    use KodairaType::*;
    let fixed = |kodaira, c, value| Row::Fixed { kodaira, c, value };
    match p {
        2 => vec![
            fixed(I0, 1, q(1, 512)),
            fixed(In(1), 1, inv_pw(2, 11)),
            fixed(In(2), 2, inv_pw(2, 12)),
            Row::InEps { coef: inv_pw(2, 11), ratio: q(1, 2), n_min: 3 },
            Row::InSplit { coef: inv_pw(2, 11), ratio: q(1, 2), n_min: 3 },
        ],
        3 => vec![
            fixed(I0, 1, q(4, 1) * inv_pw(3, 11)),
            fixed(In(1), 1, q(4, 1) * inv_pw(3, 12)),
            fixed(In(2), 2, q(4, 1) * inv_pw(3, 13)),
            Row::InEps { coef: q(2, 1) * inv_pw(3, 11), ratio: q(1, 3), n_min: 3 },
            Row::InSplit { coef: q(2, 1) * inv_pw(3, 11), ratio: q(1, 3), n_min: 3 },
        ],
        _ => Vec::new(),
    }
}

fn lookup(rows: &[Row], kodaira: KodairaType, c: u64) -> Rational {
    let mut total = Rational::new();
    for row in rows {
        match row {
            Row::Fixed { kodaira: k, c: cc, value } if *k == kodaira && *cc == c => total += value,
            Row::InEps { coef, ratio, n_min } => {
                if let KodairaType::In(n) = kodaira {
                    if n >= *n_min && epsilon(n) as u64 == c {
                        total += coef * Rational::from(ratio.pow(n as i32));
                    }
                }
            }
            Row::InSplit { coef, ratio, n_min } => {
                if let KodairaType::In(n) = kodaira {
                    if n >= *n_min && n as u64 == c {
                        total += coef * Rational::from(ratio.pow(n as i32));
                    }
                }
            }
            Row::InStar { c: cc, coef, ratio } => {
                if let KodairaType::InStar(n) = kodaira {
                    if *cc == c {
                        total += coef * Rational::from(ratio.pow(n as i32));
                    }
                }
            }
            _ => {}
        }
    }
    total
}

/// Total mass of the rows with Tamagawa number `c`, families summed in closed form.
fn mass_at(rows: &[Row], c: u64) -> Rational {
    let mut total = Rational::new();
    for row in rows {
        match row {
            Row::Fixed { c: cc, value, .. } if *cc == c => total += value,
            Row::InEps { coef, ratio, n_min } => {
                // ε(n) = 1 on odd n, 2 on even n
                let start = match c {
                    1 => n_min + (1 - n_min % 2),
                    2 => n_min + n_min % 2,
                    _ => continue,
                };
                total += geometric(coef, ratio, start, 2);
            }
            Row::InSplit { coef, ratio, n_min } => {
                if c >= *n_min as u64 {
                    total += coef * Rational::from(ratio.pow(c as i32));
                }
            }
            Row::InStar { c: cc, coef, ratio } if *cc == c => total += geometric(coef, ratio, 1, 1),
            _ => {}
        }
    }
    total
}

/// Mass of all rows, with every family summed.
fn total_mass(rows: &[Row]) -> Rational {
    let mut total = Rational::new();
    for row in rows {
        match row {
            Row::Fixed { value, .. } => total += value,
            Row::InEps { coef, ratio, n_min } | Row::InSplit { coef, ratio, n_min } => {
                total += geometric(coef, ratio, *n_min, 1)
            }
            Row::InStar { coef, ratio, .. } => total += geometric(coef, ratio, 1, 1),
        }
    }
    total
}

fn check(p: u64, kodaira: KodairaType, c: u64) -> Result<(), DensityError> {
    if !is_prime(p) {
        return Err(DensityError::NotPrime(p));
    }
    if !kodaira.admits(c) {
        return Err(DensityError::Illegal { kodaira, c });
    }
    Ok(())
}

/// `δ'_p(K, c)` from the published tables.
pub fn delta_prime(p: u64, kodaira: KodairaType, c: u64) -> Result<Rational, DensityError> {
    delta_prime_with(Table::Published, p, kodaira, c)
}

pub fn delta_prime_with(table: Table, p: u64, kodaira: KodairaType, c: u64) -> Result<Rational, DensityError> {
    check(p, kodaira, c)?;
    Ok(lookup(&minimal_rows(p, table), kodaira, c))
}

/// `δ̂_p(K, c)` for `p ∈ {2, 3}`.
pub fn delta_hat(p: u64, kodaira: KodairaType, c: u64) -> Result<Rational, DensityError> {
    if p != 2 && p != 3 {
        return Err(DensityError::NoHatTable(p));
    }
    check(p, kodaira, c)?;
    Ok(lookup(&hat_rows(p), kodaira, c))
}

/// `p^10 / (p^10 - 1)`: summing over the number of short rescalings.
pub fn iteration_factor(p: u64) -> Rational {
    let p10 = pw(p, 10);
    &p10 / Rational::from(&p10 - 1u32)
}

/// `δ_p(c)` assembled from the tables: `p^10/(p^10-1) · Σ_K (δ'_p(K,c) + δ̂_p(K,c))`.
pub fn delta_from_tables(p: u64, c: u64, table: Table) -> Rational {
    assert!(c >= 1);
    let sum = mass_at(&minimal_rows(p, table), c) + mass_at(&hat_rows(p), c);
    sum * iteration_factor(p)
}

/// Closed form of `δ_p(c)` for `p ≥ 5`.
///
/// For `c = 4` the numerator is `p³(3p² - 2p + 1)`, which is what the table entries sum to; the
/// variant `p³(3p² - 2p - 1)` leaves the densities summing to less than 1.
pub fn delta_closed_form(p: u64, c: u64) -> Rational {
    assert!(p >= 5 && c >= 1);
    let pr = Integer::from(p);
    let pp = |e: u32| pr.clone().pow(e);
    let s = pp(8) + pp(6) + pp(4) + pp(2) + 1u32;
    let p1 = Integer::from(&pr + 1u32);
    let p1sq = Integer::from(&p1 * &p1);
    match c {
        1 => {
            let num = &pr * (6 * pp(7) + 9 * pp(6) + 9 * pp(5) + 7 * pp(4) + 8 * pp(3) + 7 * pp(2) + 9 * pp(1) + 6u32);
            let den = 6 * p1sq * s;
            Rational::from(1) - Rational::from((num, den))
        }
        2 => {
            let num = &pr * (2 * pp(7) + 2 * pp(6) + pp(5) + pp(4) + 2 * pp(3) + pp(2) + 2 * pp(1) + 2u32);
            Rational::from((num, 2 * p1sq * s))
        }
        3 => Rational::from((pp(2) * (pp(4) + 1u32), 2 * p1 * s)),
        4 => Rational::from((pp(3) * (3 * pp(2) - 2 * pp(1) + 1u32), 6 * p1 * s)),
        _ => {
            let num = pp(10) - 2 * pp(9) + pp(8);
            let den = 2 * pp(c as u32) * (pp(10) - 1u32);
            Rational::from((num, den))
        }
    }
}

/// `δ_p(c)`: the closed form for `p ≥ 5`, the published tables for `p ∈ {2, 3}`.
pub fn delta(p: u64, c: u64) -> Result<Rational, DensityError> {
    if c == 0 {
        return Err(DensityError::ZeroC);
    }
    if !is_prime(p) {
        return Err(DensityError::NotPrime(p));
    }
    Ok(if p >= 5 { delta_closed_form(p, c) } else { delta_from_tables(p, c, Table::Published) })
}

/// `K_p` with `δ_p(c) = K_p · p^(-c)` for every `c ≥ 5`.
pub fn tail_constant(p: u64, table: Table) -> Rational {
    let rows = [minimal_rows(p, table), hat_rows(p)].concat();
    // only the c = n branch of I_n reaches c ≥ 5
    let five = mass_at(&rows, 5) * iteration_factor(p);
    five * pw(p, 5)
}

/// `Σ_{c > cutoff} δ_p(c)` exactly; requires `cutoff ≥ 4`.
pub fn delta_tail(p: u64, cutoff: u64, table: Table) -> Rational {
    assert!(cutoff >= 4);
    let x = Rational::from(p).recip();
    tail_constant(p, table) * geometric(&Rational::from(1), &x, cutoff as u32 + 1, 1)
}

/// `Σ_{c > cutoff} c · δ_p(c)` exactly; requires `cutoff ≥ 4`.
pub fn weighted_tail(p: u64, cutoff: u64, table: Table) -> Rational {
    assert!(cutoff >= 4);
    let x = Rational::from(p).recip();
    let one_minus = Rational::from(1) - x.clone();
    // Σ_{c>C} c x^c = x^(C+1) ((C+1) - C x) / (1-x)^2
    let head = x.clone().pow(cutoff as i32 + 1);
    let inner = Rational::from(cutoff + 1) - Rational::from(cutoff) * x;
    tail_constant(p, table) * head * inner / one_minus.clone() / one_minus
}

/// Total mass of the minimal and non-minimal tables, before the iteration factor.
pub fn table_total(p: u64, table: Table) -> (Rational, Rational) {
    (total_mass(&minimal_rows(p, table)), total_mass(&hat_rows(p)))
}

/// One concrete row of an exported table.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaRow {
    pub p: u64,
    pub table: &'static str,
    pub kodaira: String,
    pub c: u64,
    pub value: String,
    pub approx: f64,
}

/// All nonzero entries with `n ≤ n_max` for the symbolic families.
pub fn table_rows(p: u64, n_max: u32) -> Result<Vec<DeltaRow>, DensityError> {
    if !is_prime(p) {
        return Err(DensityError::NotPrime(p));
    }
    use KodairaType::*;
    let mut types = vec![I0, II, III, IV, I0Star, IVStar, IIIStar, IIStar];
    types.extend((1..=n_max).map(In));
    types.extend((1..=n_max).map(InStar));
    types.sort();
    let mut out = Vec::new();
    let mut push = |name: &'static str, k: KodairaType, c: u64, v: Rational| {
        if v != 0 {
            out.push(DeltaRow { p, table: name, kodaira: k.code(), c, approx: v.to_f64(), value: v.to_string() });
        }
    };
    for &k in &types {
        let mut cs: Vec<u64> = vec![1, 2, 3, 4];
        if let In(n) = k {
            cs.push(n as u64);
        }
        cs.sort_unstable();
        cs.dedup();
        for c in cs.into_iter().filter(|&c| k.admits(c)) {
            push("minimal", k, c, delta_prime(p, k, c)?);
            if p <= 3 {
                push("nonminimal", k, c, delta_hat(p, k, c)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::primes_up_to;
    use KodairaType::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn table_lookups() {
        assert_eq!(delta_prime(7, I0, 1).unwrap(), r(6, 7));
        assert_eq!(delta_prime(3, IVStar, 1).unwrap(), r(7, 19683));
        assert_eq!(delta_prime(2, II, 1).unwrap(), r(1, 2));
        assert_eq!(delta_prime(3, In(4), 2).unwrap(), 0);
        assert_eq!(delta_prime(2, InStar(3), 4).unwrap(), r(1, 512));
        assert_eq!(delta_prime(5, In(4), 4).unwrap(), r(16, 2 * 5i64.pow(6)));
        assert!(delta_prime(5, II, 2).is_err());
        assert!(delta_prime(6, II, 1).is_err());
        assert_eq!(delta_hat(2, I0, 1).unwrap(), r(1, 512));
        assert_eq!(delta_hat(3, In(2), 2).unwrap(), r(4, 3i64.pow(13)));
        assert_eq!(delta_hat(5, I0, 1), Err(DensityError::NoHatTable(5)));
    }

    #[test]
    fn exact_small_prime_values() {
        let want = [
            (2, 1, r(241, 396)),
            (2, 2, r(7495, 24552)),
            (2, 3, r(1153, 16368)),
            (2, 4, r(171, 10912)),
            (3, 1, r(1924625, 2125728)),
            (3, 2, r(510641, 6377184)),
            (3, 3, r(7594, 597861)),
            (3, 4, r(1193, 652212)),
        ];
        for (p, c, v) in want {
            assert_eq!(delta(p, c).unwrap(), v, "delta({p}, {c})");
        }
        assert_eq!(delta(2, 7).unwrap(), Rational::from((1, 256 * 1023)));
    }

    #[test]
    fn corrected_three_adic_values() {
        let d = |c| delta_from_tables(3, c, Table::Corrected);
        assert_eq!(d(1), r(1924841, 2125728));
        assert_eq!(d(2), r(509345, 6377184));
        assert_eq!(d(3), r(30619, 2391444));
        assert_eq!(d(4), r(1193, 652212));
    }

    #[test]
    fn closed_form_matches_tables() {
        for p in primes_up_to(97).into_iter().filter(|&p| p >= 5) {
            for c in 1..=12 {
                assert_eq!(delta_closed_form(p, c), delta_from_tables(p, c, Table::Published), "p={p} c={c}");
            }
        }
    }

    #[test]
    fn sign_variant_of_c4_breaks_normalization() {
        for p in [5u64, 7, 11] {
            let s = Rational::from(p.pow(8) + p.pow(6) + p.pow(4) + p * p + 1);
            let variant = Rational::from(p.pow(3) * (3 * p * p - 2 * p - 1)) / (Rational::from(6 * (p + 1)) * &s);
            let gap = delta_closed_form(p, 4) - variant;
            assert_eq!(gap, Rational::from(p.pow(3)) / (Rational::from(3 * (p + 1)) * s));
        }
    }

    #[test]
    fn normalization() {
        for p in primes_up_to(100) {
            for table in [Table::Published, Table::Corrected] {
                let head: Rational = (1..=4).map(|c| delta_from_tables(p, c, table)).sum();
                assert_eq!(head + delta_tail(p, 4, table), 1, "p={p}");
                let (m, h) = table_total(p, table);
                assert_eq!((m + h) * iteration_factor(p), 1);
            }
            if p >= 5 {
                let head: Rational = (1..=9).map(|c| delta(p, c).unwrap()).sum();
                assert_eq!(head + delta_tail(p, 9, Table::Published), 1);
            }
        }
        assert_eq!(table_total(2, Table::Published).0, r(255, 256));
        assert_eq!(table_total(3, Table::Published).0, r(19682, 19683));
    }

    #[test]
    fn envelope_bounds() {
        for p in primes_up_to(10_000).into_iter().filter(|&p| p >= 5) {
            let d1 = delta_closed_form(p, 1);
            let lower = Rational::from(1) - Rational::from(p * p).recip();
            assert!(d1 > lower && d1 < 1, "p={p}");
            for c in 2..=6 {
                assert!(delta_closed_form(p, c) <= Rational::from(Integer::from(p).pow(c as u32)).recip());
            }
        }
    }

    #[test]
    fn weighted_tail_matches_sum() {
        for p in [2u64, 3, 5, 11] {
            let direct: Rational = (5..=400u64).map(|c| Rational::from(c) * delta_from_tables(p, c, Table::Published)).sum();
            let tail = weighted_tail(p, 4, Table::Published);
            let gap = Rational::from(&tail - &direct).to_f64();
            assert!((0.0..1e-100).contains(&gap), "p={p} gap={gap}");
        }
    }

    #[test]
    fn exported_rows() {
        let rows = table_rows(5, 3).unwrap();
        assert!(rows.iter().any(|r| r.kodaira == "In:3" && r.c == 3));
        let rows = table_rows(2, 2).unwrap();
        assert!(rows.iter().any(|r| r.table == "nonminimal" && r.kodaira == "I0"));
        assert!(rows.iter().all(|r| r.approx > 0.0));
    }
}
