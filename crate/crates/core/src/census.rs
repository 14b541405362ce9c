//! Exhaustive census of curves of bounded height: `N(X)`, `N_m(X)`, `S_Tam(X)`, the number of
//! globally minimal curves and the number of convenient curves.

use crate::curve::{Curve, HeightBound};
use crate::factor::Factorizer;
use crate::heights::shape_holds_i64;
use crate::tate::{classify, generic_tate};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::ops::RangeInclusive;
use std::time::Instant;

pub const DEFAULT_TAM_CEILING: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct CensusOptions {
    pub shards: usize,
    /// Histogram keys above this value are counted in `tam_overflow`.
    pub tam_ceiling: u64,
    /// Fraction of curves re-classified with the generic algorithm.
    pub oracle_rate: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { shards: rayon::current_num_threads() * 4, tam_ceiling: DEFAULT_TAM_CEILING, oracle_rate: 0.0 }
    }
}

/// A curve whose Tamagawa product differs between the two classifiers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleMismatch {
    pub a4: i64,
    pub a6: i64,
    pub fast: u64,
    pub generic: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CensusDiagnostics {
    pub wall_time: f64,
    pub shard_count: usize,
    pub oracle_checked: u64,
    pub oracle_mismatches: Vec<OracleMismatch>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CensusResult {
    #[serde(rename = "X")]
    pub x: u64,
    pub n_total: u64,
    pub tam_histogram: BTreeMap<u64, u64>,
    /// Curves with `Tam(E)` above the histogram ceiling.
    pub tam_overflow: u64,
    pub s_tam: u128,
    pub n_minimal: u64,
    pub n_convenient: u64,
    /// Convenient curves with one real component.
    pub n_convenient_one_component: u64,
    pub diagnostics: CensusDiagnostics,
}

impl CensusResult {
    fn empty(x: u64) -> Self {
        CensusResult { x, ..Default::default() }
    }

    fn merge(&mut self, other: CensusResult) {
        self.n_total += other.n_total;
        for (m, n) in other.tam_histogram {
            *self.tam_histogram.entry(m).or_default() += n;
        }
        self.tam_overflow += other.tam_overflow;
        self.s_tam += other.s_tam;
        self.n_minimal += other.n_minimal;
        self.n_convenient += other.n_convenient;
        self.n_convenient_one_component += other.n_convenient_one_component;
        self.diagnostics.oracle_checked += other.diagnostics.oracle_checked;
        self.diagnostics.oracle_mismatches.extend(other.diagnostics.oracle_mismatches);
    }

    /// `N_m(X)`; zero for `m` above the ceiling.
    pub fn n_m(&self, m: u64) -> u64 {
        self.tam_histogram.get(&m).copied().unwrap_or(0)
    }

    pub fn ratio(&self, count: u64) -> f64 {
        count as f64 / self.n_total as f64
    }

    pub fn average_tamagawa(&self) -> f64 {
        self.s_tam as f64 / self.n_total as f64
    }

    /// Equality of every count, ignoring diagnostics.
    pub fn same_counts(&self, other: &CensusResult) -> bool {
        (self.x, self.n_total, &self.tam_histogram, self.tam_overflow, self.s_tam, self.n_minimal, self.n_convenient, self.n_convenient_one_component)
            == (other.x, other.n_total, &other.tam_histogram, other.tam_overflow, other.s_tam, other.n_minimal, other.n_convenient, other.n_convenient_one_component)
    }

    /// One row per histogram key.
    pub fn rows(&self) -> Vec<CensusRow> {
        self.tam_histogram
            .iter()
            .map(|(&m, &n_m)| CensusRow { x: self.x, m, n_m, n: self.n_total, ratio: self.ratio(n_m) })
            .collect()
    }
}

/// CSV row `(X, m, N_m, N, ratio)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRow {
    #[serde(rename = "X")]
    pub x: u64,
    pub m: u64,
    #[serde(rename = "N_m")]
    pub n_m: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub ratio: f64,
}

/// Per-curve census data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurveStats {
    pub tamagawa: u64,
    pub minimal: bool,
    pub convenient: bool,
}

/// Classifies one curve at every prime of its discriminant.
pub fn curve_stats(a4: i64, a6: i64, factorizer: &Factorizer) -> CurveStats {
    let curve = Curve::new(a4, a6).expect("nonsingular");
    let inner = 4 * (a4 as i128).pow(3) + 27 * (a6 as i128).pow(2);
    let mut primes: Vec<u64> = factorizer.factor_u64(inner.unsigned_abs() as u64).into_iter().map(|(p, _)| p).collect();
    if primes.first() != Some(&2) {
        primes.insert(0, 2);
    }
    let mut tamagawa = 1u64;
    let mut minimal = true;
    for p in primes {
        let r = classify(&curve, p);
        tamagawa *= r.c_p;
        minimal &= r.short_minimal;
    }
    let convenient = minimal && tamagawa == 1 && shape_holds_i64(a4, a6);
    CurveStats { tamagawa, minimal, convenient }
}

fn generic_product(a4: i64, a6: i64, factorizer: &Factorizer) -> u64 {
    let curve = Curve::new(a4, a6).expect("nonsingular");
    let model = curve.to_long_model();
    let inner = 4 * (a4 as i128).pow(3) + 27 * (a6 as i128).pow(2);
    let mut primes: Vec<u64> = factorizer.factor_u64(inner.unsigned_abs() as u64).into_iter().map(|(p, _)| p).collect();
    if primes.first() != Some(&2) {
        primes.insert(0, 2);
    }
    primes.into_iter().map(|p| generic_tate(&model, p).c_p).product()
}

fn sampled(a4: i64, a6: i64, rate: f64) -> bool {
    if rate <= 0.0 {
        return false;
    }
    let mut h = DefaultHasher::new();
    (a4, a6).hash(&mut h);
    (h.finish() % 1_000_000) < (rate * 1e6) as u64
}

/// Splits `range` into `shards` contiguous pieces (some possibly empty), in increasing order.
pub fn shard_ranges(range: RangeInclusive<i64>, shards: usize) -> Vec<RangeInclusive<i64>> {
    let shards = shards.max(1) as i64;
    let (lo, hi) = (*range.start(), *range.end());
    let len = hi - lo + 1;
    (0..shards)
        .map(|i| {
            let start = lo + len * i / shards;
            let end = lo + len * (i + 1) / shards - 1;
            start..=end
        })
        .collect()
}

fn run_shard(bound: HeightBound, a4s: RangeInclusive<i64>, factorizer: &Factorizer, opts: &CensusOptions) -> CensusResult {
    let mut out = CensusResult::empty(bound.x);
    for (a4, a6) in bound.pairs(a4s) {
        let s = curve_stats(a4, a6, factorizer);
        out.n_total += 1;
        if s.tamagawa > opts.tam_ceiling {
            out.tam_overflow += 1;
        } else {
            *out.tam_histogram.entry(s.tamagawa).or_default() += 1;
        }
        out.s_tam += s.tamagawa as u128;
        out.n_minimal += s.minimal as u64;
        if s.convenient {
            out.n_convenient += 1;
            let disc_positive = 4 * (a4 as i128).pow(3) + 27 * (a6 as i128).pow(2) < 0;
            out.n_convenient_one_component += (!disc_positive) as u64;
        }
        if sampled(a4, a6, opts.oracle_rate) {
            out.diagnostics.oracle_checked += 1;
            let generic = generic_product(a4, a6, factorizer);
            if generic != s.tamagawa {
                out.diagnostics.oracle_mismatches.push(OracleMismatch { a4, a6, fast: s.tamagawa, generic });
            }
        }
    }
    out
}

/// The census over all curves of height at most `x`; counts do not depend on `opts.shards`.
pub fn run_census_with(x: u64, opts: &CensusOptions) -> CensusResult {
    let start = Instant::now();
    let bound = HeightBound::new(x);
    // |Δ|/16 = |4a4³ + 27a6²| ≤ 2X
    let factorizer = Factorizer::new(((2 * x as u128).isqrt() as u64 + 1).max(2));
    let ranges = shard_ranges(bound.a4_range(), opts.shards);
    let parts: Vec<CensusResult> = ranges.into_par_iter().map(|r| run_shard(bound, r, &factorizer, opts)).collect();
    let mut total = CensusResult::empty(x);
    for part in parts {
        total.merge(part);
    }
    total.diagnostics.shard_count = opts.shards.max(1);
    total.diagnostics.wall_time = start.elapsed().as_secs_f64();
    total
}

pub fn run_census(x: u64, shards: usize) -> CensusResult {
    run_census_with(x, &CensusOptions { shards, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tate::tamagawa_product;

    #[test]
    fn tiny_census_by_hand() {
        // X = 27: a4 ∈ {-1, 0, 1}, a6 ∈ {-1, 0, 1}, minus (0, 0)
        let r = run_census_with(27, &CensusOptions { shards: 2, oracle_rate: 1.0, ..Default::default() });
        assert_eq!(r.n_total, 8);
        let mut expected = BTreeMap::new();
        for (a4, a6) in HeightBound::new(27).pairs(-1..=1) {
            let curve = Curve::new(a4, a6).unwrap();
            let model = curve.to_long_model();
            let generic: u64 = crate::factor::factor_discriminant(&curve.discriminant())
                .into_iter()
                .map(|(p, _)| generic_tate(&model, p).c_p)
                .product();
            assert_eq!(generic, tamagawa_product(&curve));
            *expected.entry(generic).or_insert(0u64) += 1;
        }
        assert_eq!(r.tam_histogram, expected);
        assert_eq!(r.diagnostics.oracle_checked, 8);
        assert!(r.diagnostics.oracle_mismatches.is_empty());
    }

    #[test]
    fn invariants_and_shards() {
        let base = run_census(20_000, 1);
        assert_eq!(base.n_total, HeightBound::new(20_000).count());
        assert_eq!(base.tam_histogram.values().sum::<u64>() + base.tam_overflow, base.n_total);
        assert_eq!(base.s_tam, base.tam_histogram.iter().map(|(m, n)| (*m * *n) as u128).sum::<u128>());
        assert!(base.n_minimal <= base.n_total && base.n_convenient <= base.n_m(1));
        for shards in [2, 3, 7, 64, 1000] {
            assert!(run_census(20_000, shards).same_counts(&base));
        }
        let capped = run_census_with(20_000, &CensusOptions { shards: 4, tam_ceiling: 4, oracle_rate: 0.0 });
        assert_eq!(capped.s_tam, base.s_tam);
        assert_eq!(capped.tam_overflow, base.tam_histogram.range(5..).map(|(_, n)| n).sum::<u64>());
    }

    #[test]
    fn shard_ranges_partition() {
        for shards in 1..20 {
            let r = shard_ranges(-5..=5, shards);
            let covered: Vec<i64> = r.into_iter().flatten().collect();
            assert_eq!(covered, (-5..=5).collect::<Vec<_>>());
        }
    }

    #[test]
    fn small_census_matches_generic_classification() {
        let r = run_census_with(10_000, &CensusOptions { shards: 8, oracle_rate: 1.0, ..Default::default() });
        assert_eq!(r.diagnostics.oracle_checked, r.n_total);
        assert!(r.diagnostics.oracle_mismatches.is_empty());
    }
}
