use super::{check_prime, TateError};
use crate::arith::{
    pow_u, residue, ser_int, ser_opt_int, residue_big, split_valuation, sqrt_mod_prime_power, sqrt_mod_two_power,
    valuation, Valuation,
};
use crate::curve::Curve;
use rug::Integer;
use serde::Serialize;

/// Which auxiliary model the units `s`, `t` belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnitRegime {
    /// `a4 = -3 p^α4 t²` (p ≥ 5), `a4 = -3^α4 t²` (p = 3) or `a4 = -3t²` (p = 2), with
    /// `a6 = 2 p^α6 t³ + p^e s` and `s` a unit.
    Cancellation,
    /// p = 3 with `α6 ∈ {0, 3}` and no cancellation: `t ≡ A6 (mod 3)` and `s` is the next
    /// 3-adic digit of the constant term after moving the singular point to the origin.
    Translation,
    /// p = 2, `(a4, a6) ≡ (1, 2) (mod 4)`: `a4 = -3t² + 2v` and `a6 = 2t³ - 2vt + v² + 2^k s`.
    TwoAdic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitData {
    pub regime: UnitRegime,
    /// Known modulo `p^t_precision`, reduced into `[0, p^t_precision)`.
    #[serde(serialize_with = "ser_int")]
    pub t: Integer,
    pub t_precision: u32,
    /// Known modulo `p^s_precision`, reduced into `[0, p^s_precision)`.
    #[serde(serialize_with = "ser_int")]
    pub s: Integer,
    pub s_precision: u32,
}

/// Valuation data of a short model at `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TateData {
    pub p: u64,
    pub alpha4: Valuation,
    pub alpha6: Valuation,
    /// Unit parts; zero when the coefficient is zero.
    #[serde(rename = "A4", serialize_with = "ser_int")]
    pub a4_unit: Integer,
    #[serde(rename = "A6", serialize_with = "ser_int")]
    pub a6_unit: Integer,
    pub d: u32,
    pub units: Option<UnitData>,
    /// p = 2 only.
    #[serde(serialize_with = "ser_opt_int")]
    pub v: Option<Integer>,
    /// p = 2 only; infinite when the residual vanishes to working precision.
    pub k: Option<Valuation>,
}

/// Tate data of the given short model. `s`, `t` are computed modulo at least `p^(d+2)`.
pub fn tate_data(curve: &Curve, p: u64, precision: u32) -> Result<TateData, TateError> {
    check_prime(p)?;
    let vals = Vals::new(curve.a4(), curve.a6(), p);
    let prec = precision.max(vals.d + 2);
    let mut out = TateData {
        p,
        alpha4: vals.alpha4,
        alpha6: vals.alpha6,
        a4_unit: vals.a4u.clone(),
        a6_unit: vals.a6u.clone(),
        d: vals.d,
        units: None,
        v: None,
        k: None,
    };
    let (a4, a6) = (curve.a4(), curve.a6());
    match p {
        2 => {
            if vals.two_exceptional(a4, a6) {
                if vals.two_starred(a4, a6) {
                    out.units = two_cancellation(a4, a6, &vals, prec);
                } else {
                    let ex = two_adic(a4, a6, &vals, prec);
                    out.v = Some(ex.v);
                    out.k = ex.k;
                    out.units = ex.units;
                }
            }
        }
        3 => {
            if vals.cancels(3) {
                out.units = cancellation(a6, &vals, prec);
            } else if vals.translation3() {
                out.units = Some(translation3(a4, a6, &vals));
            }
        }
        _ => {
            if vals.cancels(p) {
                out.units = cancellation(a6, &vals, prec);
            }
        }
    }
    Ok(out)
}

/// Valuations of the current model.
#[derive(Clone, Debug)]
pub(crate) struct Vals {
    pub p: u64,
    pub alpha4: Valuation,
    pub a4u: Integer,
    pub alpha6: Valuation,
    pub a6u: Integer,
    pub d: u32,
}

impl Vals {
    pub fn new(a4: &Integer, a6: &Integer, p: u64) -> Self {
        let (alpha4, a4u) = split_valuation(a4, p);
        let (alpha6, a6u) = split_valuation(a6, p);
        let disc = Integer::from(-16) * (4 * Integer::from(a4 * a4) * a4 + 27 * Integer::from(a6 * a6));
        let d = valuation(&disc, p).finite().expect("nonsingular model");
        Vals { p, alpha4, a4u, alpha6, a6u, d }
    }

    /// `v(4a4³) = v(27a6²) < d`, the regime where `s`, `t` exist for odd `p`.
    pub fn cancels(&self, p: u64) -> bool {
        let (Some(a4), Some(a6)) = (self.alpha4.finite(), self.alpha6.finite()) else {
            return false;
        };
        let shift = if p == 3 { 3 } else { 0 };
        3 * a4 == 2 * a6 + shift && 3 * a4 < self.d
    }

    /// p = 3, `α6 ∈ {0, 3}` and `v(4a4³) ≥ v(27a6²) = d`.
    pub fn translation3(&self) -> bool {
        let Some(a6) = self.alpha6.finite() else {
            return false;
        };
        (a6 == 0 || a6 == 3) && self.alpha4.at_least(2 * a6 / 3 + 1) && self.d == 2 * a6 + 3
    }

    /// p = 2, `(a4, a6) ≡ (1, 2) (mod 4)` and `d ≥ 8`.
    pub fn two_exceptional(&self, a4: &Integer, a6: &Integer) -> bool {
        residue(a4, 4) == 1 && residue(a6, 4) == 2 && self.d >= 8
    }

    /// p = 2, `(a4, a6) ≡ (5, 6) (mod 8)` and `d ≥ 12`.
    pub fn two_starred(&self, a4: &Integer, a6: &Integer) -> bool {
        residue(a4, 8) == 5 && residue(a6, 8) == 6 && self.d >= 12
    }
}

/// Odd `p`: Hensel-lift `t` and pick the sign that makes `a6 - 2p^α6 t³` divisible by `p^e`.
pub(crate) fn cancellation(a6: &Integer, vals: &Vals, prec: u32) -> Option<UnitData> {
    let p = vals.p;
    let alpha6 = vals.alpha6.finite()?;
    let modulus = pow_u(p, prec);
    let square = if p == 3 {
        Integer::from(-&vals.a4u)
    } else {
        let third = Integer::from(3).invert(&modulus).ok()?;
        -Integer::from(&vals.a4u * &third)
    };
    let e = if p == 3 { vals.d - alpha6 - 3 } else { vals.d - alpha6 };
    let root = sqrt_mod_prime_power(&square, p, prec)?;
    let known = pow_u(p, alpha6 + prec);
    let scale = Integer::from(2) * pow_u(p, alpha6);
    for t in [root.clone(), residue_big(&Integer::from(-&root), &modulus)] {
        let cube = Integer::from(&t * &t) * &t;
        let r = residue_big(&(a6 - scale.clone() * cube), &known);
        if valuation(&r, p).at_least(e) {
            let s_precision = alpha6 + prec - e;
            let s = residue_big(&(r / pow_u(p, e)), &pow_u(p, s_precision));
            return Some(UnitData { regime: UnitRegime::Cancellation, t, t_precision: prec, s, s_precision });
        }
    }
    None
}

/// p = 3, no cancellation: `s = (a6 - 3^α6 t³ - 3^(α6/3) a4 t) / 3^(α6+1) mod 3`.
pub(crate) fn translation3(a4: &Integer, a6: &Integer, vals: &Vals) -> UnitData {
    let alpha6 = vals.alpha6.finite().expect("translation regime has a6 != 0");
    let t: i32 = if residue(&vals.a6u, 3) == 1 { 1 } else { -1 };
    let constant = (a6 - pow_u(3, alpha6) * t) - pow_u(3, alpha6 / 3) * Integer::from(a4 * t);
    let denom = pow_u(3, alpha6 + 1);
    debug_assert!(constant.is_divisible(&denom));
    let s = residue(&(constant / denom), 3);
    UnitData {
        regime: UnitRegime::Translation,
        t: Integer::from(residue(&Integer::from(t), 3)),
        t_precision: 1,
        s: Integer::from(s),
        s_precision: 1,
    }
}

pub(crate) struct TwoAdic {
    pub v: Integer,
    pub k: Option<Valuation>,
    pub units: Option<UnitData>,
}

/// p = 2, `(a4, a6) ≡ (1, 2) (mod 4)`: the model `a4 = -3t² + 2v`, `a6 = 2t³ - 2vt + v² + 2^k s`
/// with `t ≡ a6/2 (mod 4)`.
pub(crate) fn two_adic(a4: &Integer, a6: &Integer, vals: &Vals, prec: u32) -> TwoAdic {
    let d = vals.d;
    let v = if d.is_multiple_of(2) { Integer::from(1) << ((d - 6) / 2) } else { Integer::new() };
    let wide = Integer::from(1) << (prec + 1);
    let third = Integer::from(3).invert(&wide).expect("3 is a 2-adic unit");
    let square = residue_big(&(Integer::from(2 * &v - a4) * third), &wide);
    let Some(root) = sqrt_mod_two_power(&square, prec) else {
        return TwoAdic { v, k: None, units: None };
    };
    let modulus = Integer::from(1) << prec;
    let want = residue(&Integer::from(a6 >> 1), 4);
    let t = if residue(&root, 4) == want {
        root
    } else {
        residue_big(&Integer::from(-&root), &modulus)
    };
    // t is known mod 2^prec, so the residual is known mod 2^(prec+1)
    let cube = Integer::from(&t * &t) * &t;
    let residual = (a6 - 2 * cube) + 2 * Integer::from(&v * &t) - Integer::from(&v * &v);
    let r = residue_big(&residual, &wide);
    let (k, s, s_precision) = match valuation(&r, 2) {
        Valuation::Finite(k) => {
            let sp = prec + 1 - k;
            (Valuation::Finite(k), residue_big(&(r >> k), &(Integer::from(1) << sp)), sp)
        }
        Valuation::Infinite => (Valuation::Infinite, Integer::new(), 0),
    };
    TwoAdic {
        v,
        k: Some(k),
        units: Some(UnitData { regime: UnitRegime::TwoAdic, t, t_precision: prec, s, s_precision }),
    }
}

/// p = 2 starred regime: `a4 = -3t²` with `t ≡ 3 (mod 4)`, `a6 = 2t³ + 2^(d-6) s`.
pub(crate) fn two_cancellation(a4: &Integer, a6: &Integer, vals: &Vals, prec: u32) -> Option<UnitData> {
    let wide = Integer::from(1) << (prec + 1);
    let third = Integer::from(3).invert(&wide).expect("3 is a 2-adic unit");
    let square = residue_big(&(Integer::from(-a4) * third), &wide);
    let root = sqrt_mod_two_power(&square, prec)?;
    let modulus = Integer::from(1) << prec;
    let t = residue_big(&Integer::from(-&root), &modulus);
    let e = vals.d - 6;
    let cube = Integer::from(&t * &t) * &t;
    let r = residue_big(&(a6 - 2 * cube), &wide);
    if !valuation(&r, 2).at_least(e) {
        return None;
    }
    let sp = prec + 1 - e;
    let s = residue_big(&(r >> e), &(Integer::from(1) << sp));
    Some(UnitData { regime: UnitRegime::Cancellation, t, t_precision: prec, s, s_precision: sp })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(a4: i64, a6: i64, p: u64) -> TateData {
        tate_data(&Curve::new(a4, a6).unwrap(), p, 1).unwrap()
    }

    #[test]
    fn multiplicative_at_five() {
        let td = data(-3, 27, 5);
        assert_eq!((td.alpha4, td.alpha6, td.d), (Valuation::Finite(0), Valuation::Finite(0), 2));
        let u = td.units.unwrap();
        assert_eq!(residue(&u.t, 5), 1);
        assert_ne!(residue(&u.s, 5), 0);
        // a4 ≡ -3t² and a6 ≡ 2t³ + 25 s to working precision
        let m = pow_u(5, 4);
        assert_eq!(residue_big(&(Integer::from(-3) + 3 * Integer::from(&u.t * &u.t)), &m), 0);
        let rhs = 2 * Integer::from(&u.t * &u.t) * &u.t + 25 * u.s.clone();
        assert_eq!(residue_big(&(Integer::from(27) - rhs), &pow_u(5, 3)), 0);
    }

    #[test]
    fn good_reduction_has_no_units() {
        let td = data(0, 1, 5);
        assert_eq!(td.alpha4, Valuation::Infinite);
        assert_eq!(td.alpha6, Valuation::Finite(0));
        assert_eq!(td.d, 0);
        assert!(td.units.is_none());
    }

    #[test]
    fn rejects_composite() {
        assert!(tate_data(&Curve::new(1, 1).unwrap(), 15, 4).is_err());
    }

    #[test]
    fn starred_two_round_trip() {
        // a4 = -3t², a6 = 2t³ + 2^(d-6) s with t ≡ 3 (mod 4) and s odd
        for (t, e, s) in [(3i64, 6u32, 1i64), (7, 7, 3), (11, 8, -1), (-1, 9, 5)] {
            let a4 = -3 * t * t;
            let a6 = 2 * t * t * t + (1i64 << e) * s;
            let td = data(a4, a6, 2);
            assert_eq!(td.d, e + 6);
            let u = td.units.expect("starred regime");
            assert_eq!(u.regime, UnitRegime::Cancellation);
            let m = Integer::from(1) << 20u32.min(u.t_precision);
            assert_eq!(residue_big(&u.t, &m), residue_big(&Integer::from(t), &m));
            let sm = Integer::from(1) << u.s_precision.min(10);
            assert_eq!(residue_big(&u.s, &sm), residue_big(&Integer::from(s), &sm));
        }
    }

    #[test]
    fn two_adic_identity() {
        for a4 in (-200i64..200).filter(|a| a.rem_euclid(4) == 1) {
            for a6 in (-400i64..400).filter(|a| a.rem_euclid(4) == 2) {
                let Ok(c) = Curve::new(a4, a6) else { continue };
                let td = tate_data(&c, 2, 1).unwrap();
                if td.d < 8 || (a4.rem_euclid(8) == 5 && a6.rem_euclid(8) == 6 && td.d >= 12) {
                    continue;
                }
                let u = td.units.expect("2-adic square root exists");
                let v = td.v.clone().unwrap();
                let m = Integer::from(1) << u.t_precision;
                let lhs = Integer::from(a4) + 3 * Integer::from(&u.t * &u.t) - 2 * v.clone();
                assert_eq!(residue_big(&lhs, &m), 0, "{a4} {a6}");
                assert_eq!(residue(&u.t, 4), (a6 / 2).rem_euclid(4) as u64);
                let Some(k) = td.k.unwrap().finite() else { continue };
                assert!(k >= td.d - 6);
                if td.d % 2 == 1 {
                    assert_eq!(k, td.d - 6);
                }
            }
        }
    }
}
