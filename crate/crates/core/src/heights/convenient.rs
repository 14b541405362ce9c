//! The convenience predicate: global minimality, trivial Tamagawa product, `a4 ≤ 0`, and
//! `G(x) = 2a4x² + 8a6x - a4² < 0` on the real locus `D = {x : x³ + a4x + a6 ≥ 0}`.

use super::roots::{isolate_real_roots, separate, Poly, RootInterval};
use crate::curve::Curve;
use crate::tate::local_data;
use rug::{Integer, Rational};
use serde::Serialize;
use rug::ops::Pow;
use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvenientCase {
    OneComponent,
    TwoComponent,
    NotConvenient,
}

/// Exact description of `T = a6 / |a4|^(3/2)` by its sign and `T² = a6² / |a4|³`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TToken {
    pub sign: i8,
    /// `None` when `a4 = 0`.
    pub square: Option<Rational>,
}

impl Serialize for TToken {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TToken", 2)?;
        st.serialize_field("sign", &self.sign)?;
        st.serialize_field("square", &self.square.as_ref().map(|q| q.to_string()))?;
        st.end()
    }
}

/// Outcome of the shape condition `G < 0 on D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub holds: bool,
    /// `G` vanishes at a point of `D` (the strict inequality fails only on a measure-zero set).
    pub boundary: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvenientTest {
    pub component_count: u8,
    pub a4_nonpositive: bool,
    #[serde(rename = "T")]
    pub t: TToken,
    /// Real roots of `x³ + a4x + a6`, largest first (`α`, then `β`, `γ`).
    pub roots: Vec<RootInterval>,
    pub globally_minimal: bool,
    pub tamagawa_trivial: bool,
    pub shape: Shape,
    pub case: ConvenientCase,
}

impl ConvenientTest {
    pub fn is_convenient(&self) -> bool {
        self.case != ConvenientCase::NotConvenient
    }
}

/// The shape condition by exact integer comparisons.
///
/// With `m = |a4|`: one real component (`27a6² > 4m³`) needs `a6 < 0`; two components need
/// `8a6² < m³`. The boundary `8a6² = m³` makes `G` touch zero at a point of `D`, and
/// `64a6² = 9m³` makes `G` and the cubic share a root.
pub fn shape_condition(a4: &Integer, a6: &Integer) -> Shape {
    let a62 = Integer::from(a6 * a6);
    match a4.cmp0() {
        Ordering::Greater => Shape { holds: false, boundary: false },
        Ordering::Equal => Shape { holds: *a6 < 0, boundary: false },
        Ordering::Less => {
            let m3 = (-a4.clone()).pow(3u32);
            let one_component = Integer::from(&a62 * 27u32) > Integer::from(&m3 * 4u32);
            let holds = if one_component { *a6 < 0 } else { Integer::from(&a62 * 8u32) < m3 };
            let boundary = Integer::from(&a62 * 8u32) == m3 || Integer::from(&a62 * 64u32) == Integer::from(&m3 * 9u32);
            Shape { holds, boundary }
        }
    }
}

/// [`shape_condition`] for machine-size coefficients.
pub fn shape_holds_i64(a4: i64, a6: i64) -> bool {
    let (a4, a6) = (a4 as i128, a6 as i128);
    match a4.cmp(&0) {
        Ordering::Greater => false,
        Ordering::Equal => a6 < 0,
        Ordering::Less => {
            let m3 = (-a4).pow(3);
            if 27 * a6 * a6 > 4 * m3 {
                a6 < 0
            } else {
                8 * a6 * a6 < m3
            }
        }
    }
}

fn cubic(a4: &Integer, a6: &Integer) -> Poly {
    Poly::new(vec![Rational::from(a6), Rational::from(a4), Rational::new(), Rational::from(1)])
}

fn g_poly(a4: &Integer, a6: &Integer) -> Poly {
    let a4sq = Integer::from(a4 * a4);
    Poly::new(vec![Rational::from(-a4sq), Rational::from(a6 * Integer::from(8)), Rational::from(a4 * Integer::from(2))])
}

/// Number of roots (with their isolating intervals, already separated) strictly above `x`.
fn roots_above(roots: &[RootInterval], x: &RootInterval) -> usize {
    roots.iter().filter(|r| r.lo > x.hi).count()
}

/// The shape condition decided directly, by isolating the real roots of the cubic and of `G`
/// and locating the set `{G ≥ 0}` relative to `D`. Independent of [`shape_condition`].
pub fn shape_condition_direct(a4: &Integer, a6: &Integer) -> bool {
    let f = cubic(a4, a6);
    let g = g_poly(a4, a6);
    match a4.cmp0() {
        // G is eventually positive on [α, ∞)
        Ordering::Greater => false,
        Ordering::Equal => {
            // G = 8a6 x; {G ≥ 0} is a half-line through 0
            if *a6 > 0 {
                return false;
            }
            // need f < 0 on (-∞, 0]: f(0) = a6 < 0, so 0 is never a root and every root
            // interval can be shrunk to one side of it
            let zero = Rational::new();
            isolate_real_roots(&f).into_iter().all(|mut r| {
                while r.lo < zero && r.hi > zero {
                    r.bisect(&f);
                }
                r.lo >= zero
            })
        }
        Ordering::Less => {
            let disc = Integer::from(a6 * a6) * 64u32 + Integer::from(a4 * a4) * a4 * 8u32;
            match disc.cmp0() {
                Ordering::Less => true,
                Ordering::Equal => {
                    // G ≤ 0 with a double root at x0 = -2a6/a4
                    let x0 = Rational::from((Integer::from(a6 * -2), a4.clone()));
                    f.sign_at(&x0) == Ordering::Less
                }
                Ordering::Greater => {
                    if f.gcd(&g).degree() != Some(0) {
                        // a shared root lies in D and has G = 0
                        return false;
                    }
                    let mut fr = isolate_real_roots(&f);
                    let mut gr = isolate_real_roots(&g);
                    separate(&f, &mut fr, &g, &mut gr);
                    let (r1, r2) = (&gr[0], &gr[1]);
                    // f < 0 on [r1, r2] iff no root of f in between and f(r1) < 0
                    let between = fr.iter().filter(|r| r.lo > r1.hi && r.hi < r2.lo).count();
                    between == 0 && roots_above(&fr, r1) % 2 == 1
                }
            }
        }
    }
}

/// Real roots of the cubic, largest first, refined to width at most `2^-precision_bits`.
pub fn real_roots(curve: &Curve, precision_bits: u32) -> Vec<RootInterval> {
    let f = cubic(curve.a4(), curve.a6());
    let width = Rational::from((1, Integer::from(1) << precision_bits));
    let mut roots = isolate_real_roots(&f);
    for r in &mut roots {
        r.refine(&f, &width);
    }
    roots.reverse();
    roots
}

fn t_token(a4: &Integer, a6: &Integer) -> TToken {
    let sign = a6.cmp0() as i8;
    let square = (*a4 != 0).then(|| {
        let m3 = Integer::from(a4.abs_ref()).pow(3u32);
        Rational::from((Integer::from(a6 * a6), m3))
    });
    TToken { sign, square }
}

/// Whether `curve` is convenient, with the data behind the decision.
pub fn is_convenient(curve: &Curve) -> ConvenientTest {
    let local = local_data(curve);
    let globally_minimal = local.iter().all(|r| r.short_minimal);
    let tamagawa_trivial = local.iter().all(|r| r.c_p == 1);
    let (a4, a6) = (curve.a4(), curve.a6());
    let shape = shape_condition(a4, a6);
    let component_count = if curve.discriminant() > 0 { 2 } else { 1 };
    let case = match (globally_minimal && tamagawa_trivial && shape.holds, component_count) {
        (false, _) => ConvenientCase::NotConvenient,
        (true, 1) => ConvenientCase::OneComponent,
        (true, _) => ConvenientCase::TwoComponent,
    };
    ConvenientTest {
        component_count,
        a4_nonpositive: *a4 <= 0,
        t: t_token(a4, a6),
        roots: real_roots(curve, 40),
        globally_minimal,
        tamagawa_trivial,
        shape,
        case,
    }
}

/// `64T⁴ - 17T² + 9/8`, the product of the cubic `x³ - x + T` at the two roots of
/// `-2x² + 8Tx - 1`.
pub fn shared_root_polynomial(t: &Rational) -> Rational {
    let t2 = Rational::from(t * t);
    Rational::from(&t2 * &t2) * 64u32 - Rational::from(&t2 * 17u32) + Rational::from((9, 8))
}

/// The factored form `(8T² - 1)(8T + 3)(8T - 3) / 8`.
pub fn shared_root_polynomial_factored(t: &Rational) -> Rational {
    let t2 = Rational::from(t * t);
    let a = Rational::from(&t2 * 8u32) - 1u32;
    let b = Rational::from(t * 8u32) + 3u32;
    let c = Rational::from(t * 8u32) - 3u32;
    a * b * c / 8u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::HeightBound;

    fn int(n: i64) -> Integer {
        Integer::from(n)
    }

    #[test]
    fn exact_rule_matches_direct_decision() {
        for (a4, a6) in HeightBound::new(10_000).pairs(HeightBound::new(10_000).a4_range()) {
            let exact = shape_condition(&int(a4), &int(a6));
            let direct = shape_condition_direct(&int(a4), &int(a6));
            assert_eq!(exact.holds, direct, "({a4}, {a6})");
            assert_eq!(exact.holds, shape_holds_i64(a4, a6));
        }
    }

    #[test]
    fn boundaries() {
        for a6 in [-1, 1] {
            let s = shape_condition(&int(-2), &int(a6));
            assert!(!s.holds && s.boundary);
            assert!(!shape_condition_direct(&int(-2), &int(a6)));
        }
        // T = 3/8: 64 a6² = 9 |a4|³ with a4 = -4, a6 = 3
        let s = shape_condition(&int(-4), &int(3));
        assert!(!s.holds && s.boundary);
        assert!(!shape_condition(&int(1), &int(5)).holds);
    }

    #[test]
    fn shared_root_values() {
        let r = |n, d| Rational::from((n, d));
        assert_eq!(shared_root_polynomial(&r(3, 8)), 0);
        assert_eq!(shared_root_polynomial(&r(-3, 8)), 0);
        assert_eq!(shared_root_polynomial(&r(1, 1)), r(385, 8));
        for t in [r(1, 3), r(-5, 7), r(2, 1), r(0, 1)] {
            assert_eq!(shared_root_polynomial(&t), shared_root_polynomial_factored(&t));
        }
        // the (8T² - 1) factor vanishes at T = 1/√8
        let t = 1.0 / 8f64.sqrt();
        assert!((64.0 * t.powi(4) - 17.0 * t * t + 1.125).abs() < 1e-12);
    }

    #[test]
    fn convenient_examples() {
        let c = is_convenient(&Curve::new(1, 5).unwrap());
        assert!(!c.is_convenient() && !c.a4_nonpositive);
        // y² = x³ - 2: minimal, Tam = 1? check that the data is self-consistent
        let c = is_convenient(&Curve::new(0, -2).unwrap());
        assert_eq!(c.component_count, 1);
        assert!(c.shape.holds);
        assert_eq!(c.roots.len(), 1);
        let c = is_convenient(&Curve::new(-7, 1).unwrap());
        assert_eq!(c.component_count, 2);
        assert_eq!(c.roots.len(), 3);
        assert!(c.roots[0].lo > c.roots[1].hi && c.roots[1].lo > c.roots[2].hi);
    }
}
