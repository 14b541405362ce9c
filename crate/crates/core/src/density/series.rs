//! Euler products over the local densities, evaluated in multiprecision with certified bounds.
//!
//! Every value is reported as an enclosure `[value - error_bound, value + error_bound]`.
//! Primes above the cutoff are handled by envelopes that follow from
//! `1 - 1/p² < δ_p(1) < 1` and `δ_p(c) ≤ p^(-c)` for `c ≥ 2`, both valid for `p ≥ 5`.

use super::{delta_from_tables, delta_tail, tail_constant, weighted_tail, DensityError, Table};
use crate::factor::primes_up_to;
use rayon::prelude::*;
use rug::float::{Constant, Round};
use rug::ops::{DivAssignRound, Pow};
use rug::{Float, Integer, Rational};
use serde::{Serialize, Serializer};

/// Working precision in bits.
pub const PRECISION: u32 = 160;

/// Primes processed per parallel batch; bounds peak memory of the coefficient vectors.
const BATCH: usize = 2048;

/// Absolute allowance for accumulated rounding in a product of at most a few million terms.
fn rounding_slack() -> Float {
    Float::with_val(PRECISION, Float::i_exp(1, -100))
}

/// A real number with a certified enclosure.
#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub value: Float,
    pub error_bound: Float,
    pub prime_cutoff: u64,
    pub coefficient_cutoff: u64,
}

impl SeriesValue {
    fn from_bounds(lo: Float, hi: Float, prime_cutoff: u64, coefficient_cutoff: u64) -> Self {
        debug_assert!(lo <= hi);
        let value = Float::with_val(PRECISION, &lo + &hi) / 2u32;
        let half = Float::with_val(PRECISION, &hi - &lo) / 2u32;
        SeriesValue { value, error_bound: half + rounding_slack(), prime_cutoff, coefficient_cutoff }
    }

    pub fn lower(&self) -> Float {
        Float::with_val(PRECISION, &self.value - &self.error_bound)
    }

    pub fn upper(&self) -> Float {
        Float::with_val(PRECISION, &self.value + &self.error_bound)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn error_f64(&self) -> f64 {
        self.error_bound.to_f64_round(Round::Up)
    }

    /// True if the whole enclosure lies in `[lo, hi)`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.lower() >= lo && self.upper() < hi
    }

    /// The value as a decimal string with `digits` significant digits.
    pub fn render(&self, digits: usize) -> String {
        self.value.to_string_radix(10, Some(digits))
    }

    fn scaled(&self, factor: &Float) -> SeriesValue {
        SeriesValue {
            value: Float::with_val(PRECISION, &self.value * factor),
            error_bound: Float::with_val(PRECISION, &self.error_bound * factor) + rounding_slack(),
            prime_cutoff: self.prime_cutoff,
            coefficient_cutoff: self.coefficient_cutoff,
        }
    }
}

impl Serialize for SeriesValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SeriesValue", 4)?;
        st.serialize_field("value", &self.render(30))?;
        st.serialize_field("error_bound", &self.error_f64())?;
        st.serialize_field("prime_cutoff", &self.prime_cutoff)?;
        st.serialize_field("coefficient_cutoff", &self.coefficient_cutoff)?;
        st.end()
    }
}

fn to_float(q: &Rational) -> Float {
    Float::with_val(PRECISION, q)
}

/// `δ_p(c)` as a float, using the closed form for `p ≥ 5`.
fn delta_float(p: u64, c: u64, table: Table) -> Float {
    if p >= 5 {
        to_float(&super::delta_closed_form(p, c))
    } else {
        to_float(&delta_from_tables(p, c, table))
    }
}

/// A divisor-closed index set with, for each element `n`, the pairs `(c, n/c)` as positions.
struct DivisorLattice {
    values: Vec<u64>,
    splits: Vec<Vec<(usize, usize)>>,
}

impl DivisorLattice {
    fn new(values: Vec<u64>) -> Self {
        let pos = |x: u64| values.binary_search(&x).expect("divisor-closed set");
        let splits = values
            .iter()
            .map(|&n| values.iter().enumerate().filter(|(_, &c)| n % c == 0).map(|(i, &c)| (i, pos(n / c))).collect())
            .collect();
        DivisorLattice { values, splits }
    }

    fn divisors_of(m: u64) -> Self {
        let mut d: Vec<u64> = (1..).take_while(|i| i * i <= m).filter(|i| m.is_multiple_of(*i)).flat_map(|i| [i, m / i]).collect();
        d.sort_unstable();
        d.dedup();
        Self::new(d)
    }

    /// Dirichlet convolution `a * b` restricted to the lattice.
    fn convolve(&self, a: &[Float], b: &[Float]) -> Vec<Float> {
        self.splits
            .iter()
            .map(|pairs| {
                let mut acc = Float::new(PRECISION);
                for &(i, j) in pairs {
                    acc += Float::with_val(PRECISION, &a[i] * &b[j]);
                }
                acc
            })
            .collect()
    }
}

fn check_cutoff(prime_cutoff: u64) {
    assert!(prime_cutoff >= 3, "prime cutoff must be at least 3");
}

/// Dirichlet coefficients of `Π_{p ≤ cutoff} Σ_c δ_p(c) c^(-s)` on the lattice, exact up to rounding.
fn truncated_product(lattice: &DivisorLattice, prime_cutoff: u64, table: Table) -> Vec<Float> {
    let mut acc: Vec<Float> = lattice.values.iter().map(|&n| Float::with_val(PRECISION, (n == 1) as u32)).collect();
    for batch in primes_up_to(prime_cutoff).chunks(BATCH) {
        let locals: Vec<Vec<Float>> = batch
            .par_iter()
            .map(|&p| lattice.values.iter().map(|&c| delta_float(p, c, table)).collect())
            .collect();
        for local in &locals {
            acc = lattice.convolve(&acc, local);
        }
    }
    acc
}

/// Coefficientwise upper bound for `Π_{q > cutoff} (1 + Σ_{c ≥ 2} q^(-c) c^(-s))`, i.e. for the
/// Dirichlet coefficients at `n > 1` of the product over the omitted primes.
///
/// Uses `1 + x ≤ exp(x)` coefficientwise and `Σ_{q > P} q^(-c) ≤ 1/((c-1) P^(c-1))`; the exponential
/// of a Dirichlet series `f` with `f(1) = 0` satisfies `log(n) g(n) = Σ_{d | n} log(d) f(d) g(n/d)`.
fn omitted_prime_envelope(lattice: &DivisorLattice, prime_cutoff: u64) -> Vec<Float> {
    let p = Float::with_val(PRECISION, prime_cutoff);
    let f: Vec<Float> = lattice
        .values
        .iter()
        .map(|&c| {
            if c == 1 {
                Float::new(PRECISION)
            } else {
                let mut v = Float::with_val(PRECISION, (&p).pow(c - 1)) * (c - 1);
                v.recip_round(Round::Up);
                v
            }
        })
        .collect();
    let mut g = vec![Float::new(PRECISION); lattice.values.len()];
    for (k, &n) in lattice.values.iter().enumerate() {
        if n == 1 {
            g[k] = Float::with_val(PRECISION, 1);
            continue;
        }
        let mut acc = Float::new(PRECISION);
        for &(i, j) in &lattice.splits[k] {
            let d = lattice.values[i];
            if d > 1 {
                let logd = Float::with_val(PRECISION, d).ln();
                acc += Float::with_val(PRECISION, &logd * &f[i]) * &g[j];
            }
        }
        let logn = Float::with_val(PRECISION, n).ln();
        acc.div_assign_round(&logn, Round::Up);
        g[k] = acc;
    }
    g
}

/// Enclosures of `P_Tam(n)` for every `n` in the lattice.
fn p_tam_lattice(lattice: &DivisorLattice, prime_cutoff: u64, table: Table) -> Vec<SeriesValue> {
    check_cutoff(prime_cutoff);
    let f = truncated_product(lattice, prime_cutoff, table);
    let g = omitted_prime_envelope(lattice, prime_cutoff);
    let shrink = Float::with_val(PRECISION, 1) - Float::with_val(PRECISION, prime_cutoff).recip();
    lattice
        .values
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let lo = Float::with_val(PRECISION, &f[k] * &shrink);
            let mut hi = f[k].clone();
            for &(i, j) in &lattice.splits[k] {
                // i indexes the factor from the omitted primes
                if lattice.values[i] > 1 {
                    hi += Float::with_val(PRECISION, &f[j] * &g[i]);
                }
            }
            SeriesValue::from_bounds(lo, hi, prime_cutoff, n)
        })
        .collect()
}

/// `P_Tam(m)`: the density of short models with Tamagawa product `m`.
pub fn p_tam(m: u64, prime_cutoff: u64) -> Result<SeriesValue, DensityError> {
    p_tam_with(Table::Published, m, prime_cutoff)
}

pub fn p_tam_with(table: Table, m: u64, prime_cutoff: u64) -> Result<SeriesValue, DensityError> {
    if m == 0 {
        return Err(DensityError::ZeroC);
    }
    let lattice = DivisorLattice::divisors_of(m);
    Ok(p_tam_lattice(&lattice, prime_cutoff, table).pop().expect("m is in its own divisor set"))
}

/// One row of the `P_Tam` table.
#[derive(Clone, Debug, Serialize)]
pub struct PTamRow {
    pub m: u64,
    pub p_tam: String,
    pub error_bound: f64,
}

/// `P_Tam(m)` for `1 ≤ m ≤ m_max`, sharing one Euler product.
pub fn p_tam_table(m_max: u64, prime_cutoff: u64) -> Vec<(u64, SeriesValue)> {
    let lattice = DivisorLattice::new((1..=m_max.max(1)).collect());
    let values = p_tam_lattice(&lattice, prime_cutoff, Table::Published);
    lattice.values.into_iter().zip(values).collect()
}

impl From<(u64, &SeriesValue)> for PTamRow {
    fn from((m, v): (u64, &SeriesValue)) -> Self {
        PTamRow { m, p_tam: v.render(12), error_bound: v.error_f64() }
    }
}

fn exponent(s: f64) -> Result<Float, DensityError> {
    if !s.is_finite() || s < -1.0 {
        return Err(DensityError::Series(format!("L_Tam(s) is only certified for finite s >= -1, got {s}")));
    }
    Ok(Float::with_val(PRECISION, -s))
}

/// Enclosure `[lo, hi]` of the local factor `Σ_c δ_p(c) c^(-s)`, summing `c ≤ c_cutoff` exactly.
fn local_factor(p: u64, neg_s: &Float, c_cutoff: u64, table: Table) -> (Float, Float) {
    let c_cutoff = c_cutoff.max(4);
    let k = to_float(&tail_constant(p, table));
    let mut lo = Float::new(PRECISION);
    for c in 1..=c_cutoff {
        let d = if c <= 4 { delta_float(p, c, table) } else { Float::with_val(PRECISION, &k / Float::with_val(PRECISION, p).pow(c)) };
        lo += d * Float::with_val(PRECISION, c).pow(neg_s);
    }
    // c^(-s) ≤ max(1, c) on the tail
    let tail = if *neg_s > 0 { weighted_tail(p, c_cutoff, table) } else { delta_tail(p, c_cutoff, table) };
    let hi = Float::with_val(PRECISION, &lo + to_float(&tail));
    (lo, hi)
}

/// The local factor `Σ_c δ_p(c) c^(-s)` of `L_Tam` at a single prime.
pub fn l_tam_local(p: u64, s: f64, c_cutoff: u64) -> Result<SeriesValue, DensityError> {
    if !crate::arith::is_prime(p) {
        return Err(DensityError::NotPrime(p));
    }
    let neg_s = exponent(s)?;
    let (lo, hi) = local_factor(p, &neg_s, c_cutoff, Table::Published);
    Ok(SeriesValue::from_bounds(lo, hi, p, c_cutoff))
}

/// `L_Tam(s) = Σ_m P_Tam(m) m^(-s) = Π_p Σ_c δ_p(c) c^(-s)` for `s ≥ -1`.
///
/// Beyond the cutoff `P`, each local factor lies in `[1 - 1/p², 1]` when `s ≥ 0`, and in
/// `[1, 1 + 1/(p-1)²]` when `-1 ≤ s < 0` since `c^(-s) - 1 ≤ c - 1` and `Σ_{c≥2} (c-1) p^(-c) = 1/(p-1)²`.
/// The products over `p > P` are then bounded by `1 - 1/P` and `exp(1/(P-1))`.
pub fn l_tam(s: f64, prime_cutoff: u64, c_cutoff: u64) -> Result<SeriesValue, DensityError> {
    check_cutoff(prime_cutoff);
    let neg_s = exponent(s)?;
    let mut lo = Float::with_val(PRECISION, 1);
    let mut hi = Float::with_val(PRECISION, 1);
    for batch in primes_up_to(prime_cutoff).chunks(BATCH) {
        let factors: Vec<(Float, Float)> =
            batch.par_iter().map(|&p| local_factor(p, &neg_s, c_cutoff, Table::Published)).collect();
        for (l, h) in factors {
            lo *= l;
            hi *= h;
        }
    }
    let big_p = Float::with_val(PRECISION, prime_cutoff);
    if s >= 0.0 {
        lo *= Float::with_val(PRECISION, 1) - big_p.recip();
    } else {
        let bump = Float::with_val(PRECISION, Float::with_val(PRECISION, prime_cutoff - 1).recip().exp());
        hi *= bump;
    }
    Ok(SeriesValue::from_bounds(lo, hi, prime_cutoff, c_cutoff.max(4)))
}

/// The constants governing minimal and convenient models.
#[derive(Clone, Debug)]
pub struct DensityConstants {
    /// Rational `r` with `ρ = r / π^10`.
    pub rho_coefficient: Rational,
    pub rho: Float,
    pub kappa1: Rational,
    /// `κ₂ = 3√6/40`.
    pub kappa2: Float,
}

/// `ρ`, the density of short models that are globally minimal.
///
/// `ρ = (255/256)(19682/19683) Π_{p ≥ 5} (1 - p^(-10))`, and `Π_p (1 - p^(-10)) = 1/ζ(10) = 93555/π^10`.
pub fn rho_minimal() -> DensityConstants {
    let two = Rational::from((255, 256)) / Rational::from((1023, 1024));
    let three = Rational::from((19682, 19683)) / Rational::from((59048, 59049));
    let coefficient = two * three * Rational::from(93555);
    let pi = Float::with_val(PRECISION, Constant::Pi);
    let rho = Float::with_val(PRECISION, &coefficient) / pi.pow(10u32);
    let kappa2 = Float::with_val(PRECISION, 6).sqrt() * 3u32 / 40u32;
    DensityConstants { rho_coefficient: coefficient, rho, kappa1: Rational::from((3, 20)), kappa2 }
}

/// `ρ (κ₁ + κ₂) P_Tam(1)`, the density of convenient short models with `Tam = 1`.
pub fn convenient_density(prime_cutoff: u64) -> SeriesValue {
    let k = rho_minimal();
    let factor = Float::with_val(PRECISION, &k.kappa1) + &k.kappa2;
    let factor = Float::with_val(PRECISION, &factor * &k.rho);
    p_tam(1, prime_cutoff).expect("m = 1 is valid").scaled(&factor)
}

/// `12805748865 (2 + √6) / (1830488 π^10)`, the displayed form of `ρ (κ₁ + κ₂)`.
pub fn convenient_factor_closed_form() -> Float {
    let pi = Float::with_val(PRECISION, Constant::Pi);
    let root6 = Float::with_val(PRECISION, 6).sqrt();
    let num = Float::with_val(PRECISION, root6 + 2u32) * Integer::from(12805748865u64);
    num / (pi.pow(10u32) * 1830488u32)
}
