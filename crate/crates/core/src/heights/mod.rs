//! Rational points, naive and canonical heights, and convenient curves.

mod convenient;
mod fe;
mod roots;

pub use convenient::{
    is_convenient, real_roots, shape_condition, shape_condition_direct, shape_holds_i64, shared_root_polynomial,
    shared_root_polynomial_factored, ConvenientCase, ConvenientTest, Shape, TToken,
};
pub use fe::{check_fe_positivity, check_fe_positivity_with, f_e, FeContext, FeValue, Positivity, FE_PRECISION, FE_TERMS};
pub use roots::{isolate_real_roots, Poly, RootInterval};

use crate::curve::Curve;
use crate::tate::local_data;
use rayon::prelude::*;
use rug::{Float, Integer, Rational};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeightError {
    #[error("the model is not minimal at {0}")]
    NotMinimal(u64),
    #[error("the Tamagawa product is {0}, not 1")]
    NotTamagawaTrivial(u64),
    #[error("2a4x² + 8a6x - a4² is not negative on the real locus")]
    ShapeFails,
    #[error("x = {0} is not the x-coordinate of a real point")]
    OutsideDomain(String),
    #[error("the point is not on the curve")]
    NotOnCurve,
    #[error("a4 must be nonpositive")]
    PositiveA4,
    #[error("the curve has one real component")]
    NotTwoComponent,
    #[error("at least one series term is required")]
    ZeroTerms,
}

/// `(A/C², B/C³)` with `gcd(A, C) = gcd(B, C) = 1` and `C ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalPoint {
    pub a: Integer,
    pub b: Integer,
    pub c: Integer,
}

impl Serialize for RationalPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalPoint", 3)?;
        st.serialize_field("A", &self.a.to_string())?;
        st.serialize_field("B", &self.b.to_string())?;
        st.serialize_field("C", &self.c.to_string())?;
        st.end()
    }
}

impl RationalPoint {
    /// Normalizes a point given by affine rational coordinates.
    pub fn from_xy(x: &Rational, y: &Rational) -> Option<Self> {
        let c = x.denom().clone().sqrt();
        if Integer::from(&c * &c) != *x.denom() {
            return None;
        }
        let c3 = Integer::from(&c * &c) * &c;
        if *y.denom() != c3 {
            return None;
        }
        Some(RationalPoint { a: x.numer().clone(), b: y.numer().clone(), c })
    }

    pub fn x(&self) -> Rational {
        Rational::from((self.a.clone(), Integer::from(&self.c * &self.c)))
    }

    pub fn y(&self) -> Rational {
        Rational::from((self.b.clone(), Integer::from(&self.c * &self.c) * &self.c))
    }

    /// `H(P) = max(|A|, C²)`.
    pub fn naive_height(&self) -> Integer {
        let c2 = Integer::from(&self.c * &self.c);
        Integer::from(self.a.abs_ref()).max(c2)
    }

    pub fn weil_height(&self) -> f64 {
        Float::with_val(FE_PRECISION, &self.naive_height()).ln().to_f64()
    }

    pub fn is_on(&self, curve: &Curve) -> bool {
        let c2 = Integer::from(&self.c * &self.c);
        let c4 = Integer::from(&c2 * &c2);
        let c6 = Integer::from(&c4 * &c2);
        let rhs = Integer::from(&self.a * &self.a) * &self.a + Integer::from(curve.a4() * &self.a) * c4 + (curve.a6() * c6);
        Integer::from(&self.b * &self.b) == rhs
    }

    /// `2P`, or `None` if `P` has order 2.
    pub fn double(&self, curve: &Curve) -> Option<RationalPoint> {
        let (x, y) = (self.x(), self.y());
        if y == 0 {
            return None;
        }
        let lambda = (Rational::from(&x * &x) * 3u32 + Rational::from(curve.a4())) / (Rational::from(&y * 2u32));
        let x2 = Rational::from(&lambda * &lambda) - Rational::from(&x * 2u32);
        let y2 = lambda * (x - &x2) - y;
        RationalPoint::from_xy(&x2, &y2)
    }
}

/// Every point with `max(|A|, C²) ≤ naive_bound`, ordered by `(C, A, B)`.
pub fn find_points(curve: &Curve, naive_bound: u64) -> Vec<RationalPoint> {
    let c_max = naive_bound.isqrt();
    let bound = naive_bound as i64;
    let small = curve.to_i64_pair().filter(|&(a4, a6)| a4.unsigned_abs() < 1 << 20 && a6.unsigned_abs() < 1 << 20 && naive_bound <= 1 << 20);
    let per_c = |c: u64| -> Vec<RationalPoint> {
        let mut out = Vec::new();
        let ci = Integer::from(c);
        for a in -bound..=bound {
            if Integer::from(a).gcd(&ci) != 1 {
                continue;
            }
            let root = match small {
                Some((a4, a6)) => {
                    let (a, c, a4, a6) = (a as i128, c as i128, a4 as i128, a6 as i128);
                    let c2 = c * c;
                    let v = a * a * a + a4 * a * c2 * c2 + a6 * c2 * c2 * c2;
                    if v < 0 {
                        continue;
                    }
                    let r = (v as u128).isqrt();
                    if r * r != v as u128 {
                        continue;
                    }
                    Integer::from(r)
                }
                None => {
                    let c2 = Integer::from(&ci * &ci);
                    let c4 = Integer::from(&c2 * &c2);
                    let ai = Integer::from(a);
                    let v = Integer::from(&ai * &ai) * &ai + Integer::from(curve.a4() * &ai) * &c4 + (curve.a6() * c4) * c2;
                    if v < 0 || !v.is_perfect_square() {
                        continue;
                    }
                    v.sqrt()
                }
            };
            if root == 0 {
                out.push(RationalPoint { a: Integer::from(a), b: root, c: ci.clone() });
            } else {
                out.push(RationalPoint { a: Integer::from(a), b: -root.clone(), c: ci.clone() });
                out.push(RationalPoint { a: Integer::from(a), b: root, c: ci.clone() });
            }
        }
        out
    };
    (1..=c_max).into_par_iter().flat_map_iter(per_c).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeightMethod {
    LocalSum,
    DoublingOracle,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightReport {
    pub point: RationalPoint,
    #[serde(serialize_with = "crate::arith::ser_int")]
    pub naive_h: Integer,
    pub weil: f64,
    pub canonical: f64,
    /// `F_E(x(P))`; absent for the doubling route.
    pub f_e_value: Option<f64>,
    /// Bound on the omitted tail of the `F_E` series; absent for the doubling route.
    pub tail_bound: Option<f64>,
    pub inequality_holds: bool,
    pub method: HeightMethod,
}

/// Absolute tolerance for `ĥ(P) ≥ ½ h_W(P)`.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;

/// Canonical heights on a globally minimal, Tamagawa-trivial curve satisfying the shape
/// condition, as `½ log C² + F_E(x)`: each finite place contributes `max(0, ½ log|x|_v)`.
#[derive(Clone, Debug)]
pub struct HeightContext {
    curve: Curve,
    fe: FeContext,
}

impl HeightContext {
    pub fn new(curve: &Curve) -> Result<Self, HeightError> {
        let local = local_data(curve);
        if let Some(r) = local.iter().find(|r| !r.short_minimal) {
            return Err(HeightError::NotMinimal(r.p));
        }
        let tam: u64 = local.iter().map(|r| r.c_p).product();
        if tam != 1 {
            return Err(HeightError::NotTamagawaTrivial(tam));
        }
        Ok(HeightContext { curve: curve.clone(), fe: FeContext::new(curve)? })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn fe(&self) -> &FeContext {
        &self.fe
    }

    pub fn canonical_height(&self, p: &RationalPoint) -> Result<HeightReport, HeightError> {
        self.canonical_height_precise(p).map(|(r, _)| r)
    }

    /// The report together with `ĥ` at full working precision.
    pub fn canonical_height_precise(&self, p: &RationalPoint) -> Result<(HeightReport, Float), HeightError> {
        if !p.is_on(&self.curve) {
            return Err(HeightError::NotOnCurve);
        }
        let fe = self.fe.eval(&p.x(), FE_TERMS)?;
        let fe_precise = fe.precise.clone().expect("set by eval");
        let c2 = Integer::from(&p.c * &p.c);
        let canonical = fe::half_log(&c2) + &fe_precise;
        let weil = Float::with_val(FE_PRECISION, &p.naive_height()).ln();
        let half_weil = Float::with_val(FE_PRECISION, &weil / 2u32);
        let holds = Float::with_val(FE_PRECISION, &canonical - &half_weil) >= -INEQUALITY_TOLERANCE;
        let report = HeightReport {
            point: p.clone(),
            naive_h: p.naive_height(),
            weil: weil.to_f64(),
            canonical: canonical.to_f64(),
            f_e_value: Some(fe.value),
            tail_bound: Some(fe.tail_bound),
            inequality_holds: holds,
            method: HeightMethod::LocalSum,
        };
        Ok((report, canonical))
    }

    /// `ĥ(P) - ½h_W(P) - F_E(x(P)) + ½ log max(|x(P)|, 1)`, which vanishes identically.
    pub fn identity_residual(&self, p: &RationalPoint) -> Result<f64, HeightError> {
        let (report, canonical) = self.canonical_height_precise(p)?;
        let fe = self.fe.eval(&p.x(), FE_TERMS)?.precise.expect("set by eval");
        let weil = Float::with_val(FE_PRECISION, &report.naive_h).ln();
        let r = canonical - weil / 2u32 - fe + fe::log_max_one(&p.x()) / 2u32;
        Ok(r.to_f64())
    }
}

/// `ĥ(P)` by the local-sum formula; see [`HeightContext`].
pub fn canonical_height(curve: &Curve, p: &RationalPoint) -> Result<HeightReport, HeightError> {
    HeightContext::new(curve)?.canonical_height(p)
}

/// A report from the doubling oracle, for curves outside the local-sum hypotheses.
pub fn height_report_oracle(curve: &Curve, p: &RationalPoint, doublings: u32) -> Result<HeightReport, HeightError> {
    if !p.is_on(curve) {
        return Err(HeightError::NotOnCurve);
    }
    let o = canonical_height_oracle(curve, p, doublings);
    let weil = p.weil_height();
    Ok(HeightReport {
        point: p.clone(),
        naive_h: p.naive_height(),
        weil,
        canonical: o.value,
        f_e_value: None,
        tail_bound: None,
        inequality_holds: o.value >= weil / 2.0 - INEQUALITY_TOLERANCE,
        method: HeightMethod::DoublingOracle,
    })
}

/// Result of the doubling oracle.
#[derive(Clone, Debug, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub doublings: u32,
    pub torsion: bool,
    /// `|e_k - e_(k-1)|` for the last step.
    pub last_change: f64,
}

/// `x(2P)` from `x(P) = num/den` in lowest terms; `None` when `2P = O`.
///
/// `x(2P) = φ(num, den) / ψ(num, den)` with `φ = (X² - a4Z²)² - 8a6XZ³` and
/// `ψ = 4Z(X³ + a4XZ² + a6Z³)`. Their resultant is `Δ²`, so for coprime inputs the common
/// factor divides `disc_sq` and can be found without a gcd of the full-size values.
fn double_x(curve: &Curve, disc_sq: &Integer, num: &Integer, den: &Integer) -> Option<(Integer, Integer)> {
    let (a4, a6) = (curve.a4(), curve.a6());
    let n2 = Integer::from(num.square_ref());
    let d2 = Integer::from(den.square_ref());
    let nd = Integer::from(num * den);
    let d3 = Integer::from(&d2 * den);
    let cubic = (num * (&n2 + Integer::from(a4 * &d2))) + Integer::from(a6 * &d3);
    if cubic == 0 {
        return None;
    }
    let s = n2 - Integer::from(a4 * &d2);
    let top = Integer::from(s.square_ref()) - Integer::from(&nd * &d2) * a6 * 8u32;
    let bottom = cubic * den * 4u32;
    let h = Integer::from(&top % disc_sq).gcd(disc_sq);
    let g = Integer::from(&bottom % &h).gcd(&h);
    let (mut top, mut bottom) = (top.div_exact(&g), bottom.div_exact(&g));
    if bottom < 0 {
        top = -top;
        bottom = -bottom;
    }
    Some((top, bottom))
}

fn half_log_height(num: &Integer, den: &Integer) -> Float {
    let h = Integer::from(num.abs_ref()).max(den.clone());
    Float::with_val(FE_PRECISION, &h).ln() / 2u32
}

/// `½ h_W(2^k P) / 4^k` by exact rational doubling of the `x`-coordinate.
///
/// Returns 0 for torsion points, detected when a doubling reaches the identity or an
/// `x`-coordinate repeats within the first 8 doublings.
pub fn canonical_height_oracle(curve: &Curve, p: &RationalPoint, doublings: u32) -> OracleValue {
    let disc_sq = Integer::from(curve.discriminant().square_ref());
    let mut num = p.a.clone();
    let mut den = Integer::from(&p.c * &p.c);
    let mut seen = vec![(num.clone(), den.clone())];
    let mut estimate = half_log_height(&num, &den);
    let mut k = 0u32;
    let mut change = f64::INFINITY;
    let torsion = |k| OracleValue { value: 0.0, doublings: k, torsion: true, last_change: 0.0 };
    while k < doublings {
        let Some((n, d)) = double_x(curve, &disc_sq, &num, &den) else {
            return torsion(k + 1);
        };
        k += 1;
        if k <= 8 {
            if seen.iter().any(|(sn, sd)| *sn == n && *sd == d) {
                return torsion(k);
            }
            seen.push((n.clone(), d.clone()));
        }
        num = n;
        den = d;
        let next = half_log_height(&num, &den) >> (2 * k);
        change = Float::with_val(FE_PRECISION, &next - &estimate).abs().to_f64();
        estimate = next;
    }
    OracleValue { value: estimate.to_f64(), doublings: k, torsion: false, last_change: change }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(a: i64, b: i64, c: i64) -> RationalPoint {
        RationalPoint { a: Integer::from(a), b: Integer::from(b), c: Integer::from(c) }
    }

    #[test]
    fn points_on_x3_plus_1() {
        let curve = Curve::new(0, 1).unwrap();
        let pts = find_points(&curve, 4);
        assert_eq!(pts, vec![pt(-1, 0, 1), pt(0, -1, 1), pt(0, 1, 1), pt(2, -3, 1), pt(2, 3, 1)]);
        assert!(pts.iter().all(|p| p.is_on(&curve)));
    }

    #[test]
    fn search_paths_agree() {
        // the same points through the bignum path
        let curve = Curve::new(-3, -4).unwrap();
        let fast = find_points(&curve, 100);
        assert!(!fast.is_empty());
        let big = Curve::new(Integer::from(-3), Integer::from(-4)).unwrap();
        assert_eq!(fast, find_points(&big, 100));
        assert!(fast.iter().all(|p| p.is_on(&curve)));
        let mut sorted = fast.clone();
        sorted.sort_by(|a, b| (&a.c, &a.a, &a.b).cmp(&(&b.c, &b.a, &b.b)));
        sorted.dedup();
        assert_eq!(sorted, fast);
    }

    #[test]
    fn doubling_and_torsion() {
        let curve = Curve::new(0, 1).unwrap();
        // (2, 3) has order 6 on y² = x³ + 1
        assert!(canonical_height_oracle(&curve, &pt(2, 3, 1), 5).torsion);
        assert!(canonical_height_oracle(&curve, &pt(-1, 0, 1), 5).torsion);
        let d = pt(2, 3, 1).double(&curve).unwrap();
        assert_eq!(d, pt(0, 1, 1));
        assert!(d.is_on(&curve));
    }

    #[test]
    fn oracle_self_convergence() {
        // y² = x³ - 2 has the point (3, 5) of infinite order
        let curve = Curve::new(0, -2).unwrap();
        let p = pt(3, 5, 1);
        let e4 = canonical_height_oracle(&curve, &p, 4).value;
        let e5 = canonical_height_oracle(&curve, &p, 5).value;
        assert!((e4 - e5).abs() < 1e-3);
    }
}

#[cfg(test)]
mod agreement_tests {
    use super::*;

    fn convenient_with_points() -> Vec<(Curve, Vec<RationalPoint>)> {
        [(0i64, -2i64), (-7, 1)]
            .into_iter()
            .map(|(a4, a6)| {
                let curve = Curve::new(a4, a6).unwrap();
                assert!(is_convenient(&curve).is_convenient());
                let pts = find_points(&curve, 200).into_iter().filter(|p| p.b > 0).take(2).collect();
                (curve, pts)
            })
            .collect()
    }

    #[test]
    fn local_sum_matches_doubling_oracle() {
        for (curve, pts) in convenient_with_points() {
            let ctx = HeightContext::new(&curve).unwrap();
            for p in &pts {
                let r = ctx.canonical_height(p).unwrap();
                let o = canonical_height_oracle(&curve, p, 9);
                assert!(!o.torsion);
                assert!((r.canonical - o.value).abs() < 1e-5, "{p:?}: {} vs {}", r.canonical, o.value);
                assert!(r.inequality_holds);
                assert!(ctx.identity_residual(p).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_under_doubling() {
        for (curve, pts) in convenient_with_points() {
            let ctx = HeightContext::new(&curve).unwrap();
            for p in &pts {
                let h1 = ctx.canonical_height(p).unwrap().canonical;
                let d = p.double(&curve).unwrap();
                let h2 = ctx.canonical_height(&d).unwrap().canonical;
                assert!((h2 - 4.0 * h1).abs() < 1e-9 * h2.max(1.0), "{h1} {h2}");
            }
        }
    }

    #[test]
    fn rejects_unsuitable_curves() {
        // y² = x³ + 1 fails the shape condition
        assert!(HeightContext::new(&Curve::new(0, 1).unwrap()).is_err());
        let curve = Curve::new(0, -2).unwrap();
        let off = RationalPoint { a: Integer::from(3), b: Integer::from(4), c: Integer::from(1) };
        assert!(matches!(canonical_height(&curve, &off), Err(HeightError::NotOnCurve)));
    }
}
