//! Short and long Weierstrass models, discriminants, naive heights and height-bounded enumeration.

use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("singular model: the discriminant vanishes")]
    Singular,
    #[error("not an integer: {0:?}")]
    Parse(String),
}

/// `y^2 = x^3 + a4 x + a6` with nonzero discriminant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct Curve {
    a4: Integer,
    a6: Integer,
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    a4: String,
    a6: String,
}

impl TryFrom<CurveRepr> for Curve {
    type Error = CurveError;

    fn try_from(r: CurveRepr) -> Result<Self, CurveError> {
        Curve::parse(&r.a4, &r.a6)
    }
}

impl From<Curve> for CurveRepr {
    fn from(c: Curve) -> Self {
        CurveRepr {
            a4: c.a4.to_string(),
            a6: c.a6.to_string(),
        }
    }
}

fn short_disc(a4: &Integer, a6: &Integer) -> Integer {
    let inner = Integer::from(4) * a4.clone() * a4 * a4 + Integer::from(27) * a6.clone() * a6;
    inner * -16
}

impl Curve {
    pub fn new(a4: impl Into<Integer>, a6: impl Into<Integer>) -> Result<Self, CurveError> {
        let (a4, a6) = (a4.into(), a6.into());
        if short_disc(&a4, &a6) == 0 {
            return Err(CurveError::Singular);
        }
        Ok(Curve { a4, a6 })
    }

    pub fn parse(a4: &str, a6: &str) -> Result<Self, CurveError> {
        let p = |s: &str| {
            s.trim()
                .parse::<Integer>()
                .map_err(|_| CurveError::Parse(s.to_string()))
        };
        Curve::new(p(a4)?, p(a6)?)
    }

    pub fn a4(&self) -> &Integer {
        &self.a4
    }

    pub fn a6(&self) -> &Integer {
        &self.a6
    }

    /// `-16(4 a4^3 + 27 a6^2)`.
    pub fn discriminant(&self) -> Integer {
        short_disc(&self.a4, &self.a6)
    }

    /// `max(4|a4|^3, 27 a6^2)`.
    pub fn height(&self) -> Integer {
        let t4: Integer = Integer::from(self.a4.abs_ref()).pow(3) * 4;
        let t6 = Integer::from(self.a6.square_ref()) * 27;
        t4.max(t6)
    }

    pub fn to_long_model(&self) -> LongModel {
        LongModel {
            a: [
                Integer::new(),
                Integer::new(),
                Integer::new(),
                self.a4.clone(),
                self.a6.clone(),
            ],
        }
    }

    /// The coefficients as machine integers, when they fit.
    pub fn to_i64_pair(&self) -> Option<(i64, i64)> {
        Some((self.a4.to_i64()?, self.a6.to_i64()?))
    }
}

impl std::fmt::Display for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.a4, self.a6)
    }
}

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LongModel {
    a: [Integer; 5],
}

impl LongModel {
    pub fn new(a1: impl Into<Integer>, a2: impl Into<Integer>, a3: impl Into<Integer>, a4: impl Into<Integer>, a6: impl Into<Integer>) -> Result<Self, CurveError> {
        let m = LongModel {
            a: [a1.into(), a2.into(), a3.into(), a4.into(), a6.into()],
        };
        if m.discriminant() == 0 {
            return Err(CurveError::Singular);
        }
        Ok(m)
    }

    pub fn a1(&self) -> &Integer {
        &self.a[0]
    }
    pub fn a2(&self) -> &Integer {
        &self.a[1]
    }
    pub fn a3(&self) -> &Integer {
        &self.a[2]
    }
    pub fn a4(&self) -> &Integer {
        &self.a[3]
    }
    pub fn a6(&self) -> &Integer {
        &self.a[4]
    }

    pub fn coefficients(&self) -> &[Integer; 5] {
        &self.a
    }

    pub fn b2(&self) -> Integer {
        Integer::from(self.a1().square_ref()) + Integer::from(4 * self.a2())
    }

    pub fn b4(&self) -> Integer {
        Integer::from(2 * self.a4()) + Integer::from(self.a1() * self.a3())
    }

    pub fn b6(&self) -> Integer {
        Integer::from(self.a3().square_ref()) + Integer::from(4 * self.a6())
    }

    pub fn b8(&self) -> Integer {
        let (a1, a2, a3, a4, a6) = (self.a1(), self.a2(), self.a3(), self.a4(), self.a6());
        Integer::from(a1.square_ref()) * a6 + Integer::from(4 * a2) * a6
            - Integer::from(a1 * a3) * a4
            + Integer::from(a3.square_ref()) * a2
            - Integer::from(a4.square_ref())
    }

    pub fn c4(&self) -> Integer {
        let b2 = self.b2();
        Integer::from(b2.square_ref()) - self.b4() * 24
    }

    pub fn c6(&self) -> Integer {
        let (b2, b4, b6) = (self.b2(), self.b4(), self.b6());
        -Integer::from(b2.square_ref()) * &b2 + Integer::from(36) * &b2 * &b4 - b6 * 216
    }

    pub fn discriminant(&self) -> Integer {
        let (b2, b4, b6, b8) = (self.b2(), self.b4(), self.b6(), self.b8());
        -Integer::from(b2.square_ref()) * &b8 - Integer::from(8) * b4.clone() * &b4 * &b4
            - Integer::from(27) * b6.clone() * &b6
            + Integer::from(9) * &b2 * &b4 * &b6
    }

    /// Coordinate change `x = x' + r`, `y = y' + s x' + t`.
    pub(crate) fn transform(&mut self, r: &Integer, s: &Integer, t: &Integer) {
        let [a1, a2, a3, a4, a6] = &self.a;
        let n1 = a1 + 2 * s.clone();
        let n2 = (a2 - Integer::from(s * a1)) + Integer::from(3 * r) - Integer::from(s.square_ref());
        let n3 = (a3 + Integer::from(r * a1)) + Integer::from(2 * t);
        let n4 = (a4 - Integer::from(s * a3))
            + (2 * r.clone()) * a2
            - (t + Integer::from(r * s)) * a1
            + (3 * r.clone()) * r
            - (2 * s.clone()) * t;
        let n6 = (a6 + Integer::from(r * a4))
            + Integer::from(r.square_ref()) * a2
            + Integer::from(r.square_ref()) * r
            - Integer::from(t * a3)
            - Integer::from(t.square_ref())
            - Integer::from(r * t) * a1;
        self.a = [n1, n2, n3, n4, n6];
    }

    /// Divide `a_i` by `u^i`; caller guarantees exactness.
    pub(crate) fn scale_down(&mut self, u: &Integer) {
        for (i, e) in [1u32, 2, 3, 4, 6].iter().enumerate() {
            let pow = u.clone().pow(*e);
            debug_assert!(self.a[i].is_divisible(&pow));
            self.a[i].div_exact_mut(&pow);
        }
    }
}

/// Curves with `max(4|a4|^3, 27 a6^2) <= x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeightBound {
    pub x: u64,
}

fn icbrt(n: u64) -> u64 {
    let mut r = (n as f64).cbrt() as u64;
    while r > 0 && (r as u128).pow(3) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128).pow(3) <= n as u128 {
        r += 1;
    }
    r
}

impl HeightBound {
    pub fn new(x: u64) -> Self {
        HeightBound { x }
    }

    /// Largest `|a4|` with `4|a4|^3 <= X`.
    pub fn a4_max(&self) -> i64 {
        icbrt(self.x / 4) as i64
    }

    /// Largest `|a6|` with `27 a6^2 <= X`.
    pub fn a6_max(&self) -> i64 {
        (self.x / 27).isqrt() as i64
    }

    pub fn a4_range(&self) -> RangeInclusive<i64> {
        -self.a4_max()..=self.a4_max()
    }

    pub fn contains(&self, c: &Curve) -> bool {
        c.height() <= self.x
    }

    /// Nonsingular `(a4, a6)` pairs with `a4` restricted to `a4s`, in lexicographic order.
    pub fn pairs(&self, a4s: RangeInclusive<i64>) -> impl Iterator<Item = (i64, i64)> {
        let b = self.a6_max();
        let (lo, hi) = (a4s.start().max(&-self.a4_max()).to_owned(), a4s.end().min(&self.a4_max()).to_owned());
        (lo..=hi).flat_map(move |a4| {
            (-b..=b).filter_map(move |a6| {
                let inner = 4 * (a4 as i128).pow(3) + 27 * (a6 as i128).pow(2);
                (inner != 0).then_some((a4, a6))
            })
        })
    }

    /// Every curve in range, each once, ordered lexicographically by `(a4, a6)`.
    pub fn enumerate(&self) -> impl Iterator<Item = Curve> {
        self.enumerate_a4(self.a4_range())
    }

    /// The sub-stream with `a4` in `a4s`; concatenating sub-streams over a partition of
    /// the full `a4` range in increasing order reproduces `enumerate`.
    pub fn enumerate_a4(&self, a4s: RangeInclusive<i64>) -> impl Iterator<Item = Curve> {
        self.pairs(a4s)
            .map(|(a4, a6)| Curve::new(a4, a6).expect("nonsingular by construction"))
    }

    /// Number of curves in range, `N(X)`.
    pub fn count(&self) -> u64 {
        let (a, b) = (self.a4_max(), self.a6_max());
        let all = (2 * a as u64 + 1) * (2 * b as u64 + 1);
        // singular pairs are (-3u^2, ±2u^3) and (0, 0)
        let mut singular = 1;
        let mut u = 1i64;
        while 3 * u * u <= a && 2 * u * u * u <= b {
            singular += 2;
            u += 1;
        }
        all - singular
    }
}

pub fn enumerate(bound: HeightBound) -> impl Iterator<Item = Curve> {
    bound.enumerate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn discriminant_examples() {
        assert_eq!(Curve::new(-3, -4).unwrap().discriminant(), -5184);
        assert_eq!(Curve::new(0, 1).unwrap().discriminant(), -432);
        assert_eq!(Curve::new(-3, 2), Err(CurveError::Singular));
        assert_eq!(Curve::new(0, 0), Err(CurveError::Singular));
    }

    #[test]
    fn height_examples() {
        assert_eq!(Curve::new(-3, -4).unwrap().height(), 432);
        assert_eq!(Curve::new(1, 0).unwrap().height(), 4);
        assert_eq!(Curve::new(0, 1).unwrap().height(), 27);
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(HeightBound::new(0).enumerate().count(), 0);
        let v: Vec<_> = HeightBound::new(27).enumerate().collect();
        assert_eq!(v.len(), 8);
        assert_eq!(v[0], Curve::new(-1, -1).unwrap());
        assert_eq!(v[7], Curve::new(1, 1).unwrap());
        for x in [0u64, 1, 27, 100, 432, 10_000, 123_456] {
            let b = HeightBound::new(x);
            assert_eq!(b.enumerate().count() as u64, b.count(), "X={x}");
        }
    }

    #[test]
    fn enumerate_membership_exhaustive() {
        let b = HeightBound::new(5000);
        let got: std::collections::BTreeSet<(i64, i64)> =
            b.enumerate().map(|c| c.to_i64_pair().unwrap()).collect();
        for a4 in -20i64..=20 {
            for a6 in -20i64..=20 {
                let inside = (4 * a4.abs().pow(3)).max(27 * a6 * a6) <= 5000
                    && 4 * a4.pow(3) + 27 * a6 * a6 != 0;
                assert_eq!(got.contains(&(a4, a6)), inside, "{a4} {a6}");
            }
        }
    }

    #[test]
    fn long_model_embedding() {
        let c = Curve::new(-3, -4).unwrap();
        let m = c.to_long_model();
        assert_eq!(m.coefficients(), &[0, 0, 0, -3, -4].map(Integer::from));
        assert_eq!(m.discriminant(), c.discriminant());
        assert_eq!(m.b2(), 0);
    }

    #[test]
    fn transform_preserves_discriminant() {
        let mut m = LongModel::new(1, -1, 1, -10, -20).unwrap();
        let d = m.discriminant();
        m.transform(&Integer::from(3), &Integer::from(-2), &Integer::from(5));
        assert_eq!(m.discriminant(), d);
    }

    #[test]
    fn json_round_trip() {
        let c = Curve::parse("-123456789012345678901234567890", "7").unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"a4":"-123456789012345678901234567890","a6":"7"}"#);
        let back: Curve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Curve>(r#"{"a4":"-3","a6":"2"}"#).is_err());
    }

    proptest! {
        #[test]
        fn prop_long_model_discriminant(a4 in -10_000i64..10_000, a6 in -10_000i64..10_000) {
            if let Ok(c) = Curve::new(a4, a6) {
                prop_assert_eq!(c.to_long_model().discriminant(), c.discriminant());
                prop_assert!(c.height() >= 1);
            }
        }

        #[test]
        fn prop_disc_bounded_by_height(x in 1u64..200_000) {
            let b = HeightBound::new(x);
            for c in b.enumerate().step_by(97) {
                prop_assert!(Integer::from(c.discriminant().abs_ref()) <= 32 * x);
                prop_assert!(b.contains(&c));
            }
        }

        #[test]
        fn prop_shards_concatenate(x in 1u64..50_000, cut in -40i64..40) {
            let b = HeightBound::new(x);
            let whole: Vec<_> = b.enumerate().collect();
            let (lo, hi) = (-b.a4_max(), b.a4_max());
            let cut = cut.clamp(lo - 1, hi);
            let mut parts: Vec<_> = b.enumerate_a4(lo..=cut).collect();
            parts.extend(b.enumerate_a4(cut + 1..=hi));
            prop_assert_eq!(whole, parts);
        }
    }
}
