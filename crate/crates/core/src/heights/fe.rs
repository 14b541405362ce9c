//! The archimedean local height `F_E(x) = ½ log|x| + (1/8) Σ log(z_n) / 4^n` and a certified
//! positivity check on `(-1, 1) ∩ D`.

use super::convenient::{real_roots, shape_condition};
use super::HeightError;
use crate::curve::Curve;
use rug::{Float, Integer, Rational};
use serde::Serialize;

/// Working precision for the series, in bits.
pub const FE_PRECISION: u32 = 256;

/// Default number of series terms.
pub const FE_TERMS: u32 = 40;

/// `N(x) = x⁴ - 2a4x² - 8a6x + a4²`, so that `z = N(x)/x⁴` and `x(2P) = N(x) / (4 f(x))`.
fn n_poly(a4: &Rational, a6: &Rational, x: &Rational) -> Rational {
    let x2 = Rational::from(x * x);
    Rational::from(&x2 * &x2) - Rational::from(a4 * &x2) * 2u32 - Rational::from(a6 * x) * 8u32 + Rational::from(a4 * a4)
}

fn f_poly(a4: &Rational, a6: &Rational, x: &Rational) -> Rational {
    Rational::from(x * x) * x + Rational::from(a4 * x) + a6
}

/// The series value with a bound on the omitted terms: the true value lies in
/// `[value, value + tail_bound]` up to rounding.
#[derive(Clone, Debug, Serialize)]
pub struct FeValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: u32,
    /// `log z_n` for the computed terms `n ≥ 1`; all are positive on the convenient domain.
    #[serde(skip)]
    pub log_z: Vec<f64>,
    #[serde(skip)]
    pub precise: Option<Float>,
}

/// Per-curve data reused across evaluations of `F_E`.
#[derive(Clone, Debug)]
pub struct FeContext {
    a4: Rational,
    a6: Rational,
    /// A positive lower bound for `α`, the largest real root.
    alpha_lo: Rational,
    /// Bound on `log z_n` for `n ≥ 1`.
    log_z_max: f64,
}

impl FeContext {
    /// Requires the shape condition `G < 0 on D`, which makes every `z_n > 1`.
    pub fn new(curve: &Curve) -> Result<Self, HeightError> {
        if !shape_condition(curve.a4(), curve.a6()).holds {
            return Err(HeightError::ShapeFails);
        }
        let alpha = real_roots(curve, 60).into_iter().next().expect("a cubic has a real root");
        let alpha_lo = alpha.lo;
        debug_assert!(alpha_lo > 0);
        // for n ≥ 1, x_n = x(2^n P) lies on the identity component, so x_n ≥ α and
        // z_n ≤ 1 + 2|a4|/α² + 8|a6|/α³ + a4²/α⁴
        let a = alpha_lo.to_f64();
        let (m4, m6) = (curve.a4().to_f64().abs(), curve.a6().to_f64().abs());
        let z_max = 1.0 + 2.0 * m4 / (a * a) + 8.0 * m6 / (a * a * a) + m4 * m4 / (a * a * a * a);
        Ok(FeContext {
            a4: Rational::from(curve.a4()),
            a6: Rational::from(curve.a6()),
            alpha_lo,
            log_z_max: z_max.ln() * (1.0 + 1e-12),
        })
    }

    pub fn in_domain(&self, x: &Rational) -> bool {
        f_poly(&self.a4, &self.a6, x) >= 0
    }

    pub fn alpha_lower_bound(&self) -> &Rational {
        &self.alpha_lo
    }

    /// `Σ_{n ≥ terms} log z_n / (8·4^n) ≤ log(z_max) / (6·4^terms)`.
    pub fn tail_bound(&self, terms: u32) -> f64 {
        self.log_z_max / (6.0 * 4f64.powi(terms as i32))
    }

    /// `F_E(x)` for `x ∈ D`, summing `terms` terms of the series.
    ///
    /// The `n = 0` term is merged with `½ log|x|` into `(1/8) log N(x)`, which stays finite at `x = 0`.
    pub fn eval(&self, x: &Rational, terms: u32) -> Result<FeValue, HeightError> {
        if terms == 0 {
            return Err(HeightError::ZeroTerms);
        }
        let fx = f_poly(&self.a4, &self.a6, x);
        if fx < 0 {
            return Err(HeightError::OutsideDomain(x.to_string()));
        }
        let n0 = n_poly(&self.a4, &self.a6, x);
        let mut total = Float::with_val(FE_PRECISION, &n0).ln() / 8u32;
        let mut log_z = Vec::new();
        if fx != 0 {
            let a4 = Float::with_val(FE_PRECISION, &self.a4);
            let a6 = Float::with_val(FE_PRECISION, &self.a6);
            let mut xn = Float::with_val(FE_PRECISION, &n0 / Rational::from(&fx * 4u32));
            let mut weight = Float::with_val(FE_PRECISION, 32u32).recip();
            for _ in 1..terms {
                let x2 = Float::with_val(FE_PRECISION, &xn * &xn);
                let x4 = Float::with_val(FE_PRECISION, &x2 * &x2);
                let big_n = Float::with_val(FE_PRECISION, &x4 - Float::with_val(FE_PRECISION, &a4 * &x2) * 2u32)
                    - Float::with_val(FE_PRECISION, &a6 * &xn) * 8u32
                    + Float::with_val(FE_PRECISION, &a4 * &a4);
                let zn = Float::with_val(FE_PRECISION, &big_n / &x4);
                let ln = Float::with_val(FE_PRECISION, zn.ln_ref());
                log_z.push(ln.to_f64());
                total += ln * &weight;
                weight /= 4u32;
                let fxn = Float::with_val(FE_PRECISION, &x2 * &xn) + Float::with_val(FE_PRECISION, &a4 * &xn) + &a6;
                if fxn <= 0 {
                    // 2^n P is a 2-torsion point up to rounding: later iterates are at infinity
                    break;
                }
                xn = big_n / (fxn * 4u32);
            }
        }
        let tail = if fx == 0 { 0.0 } else { self.tail_bound(terms) };
        Ok(FeValue { value: total.to_f64(), tail_bound: tail, terms, log_z, precise: Some(total) })
    }
}

/// `F_E(x)` with `terms` terms; see [`FeContext::eval`].
pub fn f_e(curve: &Curve, x: &Rational, terms: u32) -> Result<FeValue, HeightError> {
    FeContext::new(curve)?.eval(x, terms)
}

/// Closed real interval with outward rounding.
#[derive(Clone, Copy, Debug)]
struct Iv {
    lo: f64,
    hi: f64,
}

impl Iv {
    fn new(lo: f64, hi: f64) -> Self {
        Iv { lo: lo.next_down(), hi: hi.next_up() }
    }

    fn point(x: f64) -> Self {
        Iv::new(x, x)
    }

    fn add(self, o: Iv) -> Iv {
        Iv::new(self.lo + o.lo, self.hi + o.hi)
    }

    fn mul(self, o: Iv) -> Iv {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Iv::new(c.iter().cloned().fold(f64::INFINITY, f64::min), c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    fn scale(self, k: f64) -> Iv {
        self.mul(Iv::point(k))
    }

    fn sqr(self) -> Iv {
        if self.lo >= 0.0 {
            Iv::new(self.lo * self.lo, self.hi * self.hi)
        } else if self.hi <= 0.0 {
            Iv::new(self.hi * self.hi, self.lo * self.lo)
        } else {
            Iv::new(0.0, (self.lo * self.lo).max(self.hi * self.hi))
        }
    }

    fn recip(self) -> Option<Iv> {
        (self.lo > 0.0 || self.hi < 0.0).then(|| Iv::new(1.0 / self.hi, 1.0 / self.lo))
    }
}

/// Enclosure of `N(x)` on an interval.
fn n_iv(a4: f64, a6: f64, x: Iv) -> Iv {
    let x2 = x.sqr();
    x2.sqr().add(x2.scale(-2.0 * a4)).add(x.scale(-8.0 * a6)).add(Iv::point(a4 * a4))
}

fn f_iv(a4: f64, a6: f64, x: Iv) -> Iv {
    x.sqr().mul(x).add(x.scale(a4)).add(Iv::point(a6))
}

/// Outcome of the positivity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Positivity {
    /// `F_E > 0` is certified on every cell covering `(-1, 1) ∩ D`.
    Positive { cells: usize },
    /// A point of the domain where `F_E` is certified negative.
    Negative { x: f64, upper: f64 },
    /// Cells where neither sign could be certified.
    Inconclusive { cells: Vec<(f64, f64)> },
}

impl Positivity {
    pub fn is_positive(&self) -> bool {
        matches!(self, Positivity::Positive { .. })
    }
}

/// Lower bound of `F_E` on `[lo, hi]`: the `n = 0` term from an enclosure of `N`, plus the
/// `n = 1` term when the cell lies inside `D`; all later terms are nonnegative.
fn cell_lower_bound(a4: f64, a6: f64, cell: Iv) -> f64 {
    let n = n_iv(a4, a6, cell);
    if n.lo <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut bound = n.lo.ln() / 8.0;
    let f = f_iv(a4, a6, cell);
    if f.lo > 0.0 {
        if let Some(inv) = f.scale(4.0).recip() {
            let x1 = n.mul(inv);
            let n1 = n_iv(a4, a6, x1);
            let x1_4 = x1.sqr().sqr();
            if let Some(inv4) = x1_4.recip() {
                let z1 = n1.mul(inv4);
                if z1.lo > 1.0 {
                    bound += z1.lo.ln() / 32.0;
                }
            }
        }
    }
    bound - 1e-12 * bound.abs().max(1.0)
}

/// Certified sign check of `F_E` on `(-1, 1) ∩ D` for a two-component curve satisfying the shape
/// condition. Cells are bisected up to `max_depth` times before being reported inconclusive.
pub fn check_fe_positivity(curve: &Curve) -> Result<Positivity, HeightError> {
    check_fe_positivity_with(curve, 64, 24)
}

pub fn check_fe_positivity_with(curve: &Curve, initial_cells: usize, max_depth: u32) -> Result<Positivity, HeightError> {
    if *curve.a4() > 0 {
        return Err(HeightError::PositiveA4);
    }
    if curve.discriminant() < 0 {
        return Err(HeightError::NotTwoComponent);
    }
    let ctx = FeContext::new(curve)?;
    let roots = real_roots(curve, 50);
    let (alpha, beta, gamma) = (&roots[0], &roots[1], &roots[2]);
    let (a4, a6) = (curve.a4().to_f64(), curve.a6().to_f64());
    // outer approximations of the pieces of (-1, 1) ∩ D
    let mut pieces = Vec::new();
    let lo = (gamma.lo.to_f64() - 1e-12).max(-1.0);
    let hi = (beta.hi.to_f64() + 1e-12).min(1.0);
    if lo < hi {
        pieces.push((lo, hi));
    }
    let a = alpha.lo.to_f64() - 1e-12;
    if a < 1.0 {
        pieces.push((a, 1.0));
    }
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    for (lo, hi) in pieces {
        let step = (hi - lo) / initial_cells as f64;
        for i in 0..initial_cells {
            stack.push((lo + step * i as f64, if i + 1 == initial_cells { hi } else { lo + step * (i + 1) as f64 }, 0));
        }
    }
    let mut certified = 0;
    let mut inconclusive = Vec::new();
    while let Some((lo, hi, depth)) = stack.pop() {
        if cell_lower_bound(a4, a6, Iv::new(lo, hi)) > 0.0 {
            certified += 1;
            continue;
        }
        let mid = Rational::from_f64((lo + hi) / 2.0).expect("finite");
        if ctx.in_domain(&mid) {
            let v = ctx.eval(&mid, FE_TERMS)?;
            let upper = v.value + v.tail_bound + 1e-12;
            if upper < 0.0 {
                return Ok(Positivity::Negative { x: mid.to_f64(), upper });
            }
        }
        if depth >= max_depth {
            inconclusive.push((lo, hi));
        } else {
            let m = (lo + hi) / 2.0;
            stack.push((lo, m, depth + 1));
            stack.push((m, hi, depth + 1));
        }
    }
    if inconclusive.is_empty() {
        Ok(Positivity::Positive { cells: certified })
    } else {
        inconclusive.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Positivity::Inconclusive { cells: inconclusive })
    }
}

/// `½ log` of a positive integer, computed without overflow.
pub(crate) fn half_log(n: &Integer) -> Float {
    Float::with_val(FE_PRECISION, n).ln() / 2u32
}

/// `log max(|x|, 1)` for a rational `x`.
pub(crate) fn log_max_one(x: &Rational) -> Float {
    let ax = Rational::from(x.abs_ref());
    if ax <= 1 {
        Float::new(FE_PRECISION)
    } else {
        Float::with_val(FE_PRECISION, &ax).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_x_behaviour() {
        // F_E(x) - ½ log x decays like 1/x: the iterates shrink by about 4 per step
        let curve = Curve::new(0, -1).unwrap();
        let ctx = FeContext::new(&curve).unwrap();
        let mut last = f64::INFINITY;
        for k in [10u32, 100, 1000, 100000] {
            let x = Rational::from(k);
            let v = ctx.eval(&x, FE_TERMS).unwrap();
            let gap = (v.value - 0.5 * (k as f64).ln()).abs();
            assert!(gap < last);
            assert!(gap * (k as f64) < 0.5);
            last = gap;
            assert!(v.log_z.iter().all(|&l| l > 0.0));
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn domain_is_enforced() {
        let curve = Curve::new(-7, 1).unwrap();
        let ctx = FeContext::new(&curve).unwrap();
        // f(-3) = -27 + 21 + 1 < 0
        assert!(matches!(ctx.eval(&Rational::from(-3), 10), Err(HeightError::OutsideDomain(_))));
        assert!(ctx.eval(&Rational::from(0), 10).is_ok());
        assert!(matches!(FeContext::new(&Curve::new(1, 1).unwrap()), Err(HeightError::ShapeFails)));
    }

    #[test]
    fn positivity_on_two_component_curves() {
        let curve = Curve::new(-7, 1).unwrap();
        let p = check_fe_positivity(&curve).unwrap();
        assert!(p.is_positive(), "{p:?}");
        // refinement keeps a certified answer certified
        assert!(check_fe_positivity_with(&curve, 256, 24).unwrap().is_positive());
        assert!(matches!(check_fe_positivity(&Curve::new(2, 1).unwrap()), Err(HeightError::PositiveA4)));
        assert!(matches!(check_fe_positivity(&Curve::new(0, -2).unwrap()), Err(HeightError::NotTwoComponent)));
    }
}
