//! Local reduction data at a prime: Kodaira type, Tamagawa number and minimality.
//!
//! [`classify`] dispatches on the valuation data of a short model; [`generic_tate`] runs the
//! textbook algorithm on a long model and serves as the reference.

mod data;
mod generic;
mod short;

pub use data::{tate_data, TateData, UnitData, UnitRegime};
pub use generic::generic_tate;
pub use short::{classify, classify_detailed, is_short_minimal, Classified};

use crate::arith::is_prime;
use crate::curve::Curve;
use crate::factor::factor_discriminant;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TateError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("unknown Kodaira symbol {0:?}")]
    BadSymbol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KodairaType {
    I0,
    In(u32),
    II,
    III,
    IV,
    I0Star,
    InStar(u32),
    IVStar,
    IIIStar,
    IIStar,
}

impl KodairaType {
    /// Stable machine-readable form: `I0`, `In:<n>`, `II`, `III`, `IV`, `I0star`,
    /// `Instar:<n>`, `IVstar`, `IIIstar`, `IIstar`.
    pub fn code(&self) -> String {
        match self {
            KodairaType::I0 => "I0".into(),
            KodairaType::In(n) => format!("In:{n}"),
            KodairaType::II => "II".into(),
            KodairaType::III => "III".into(),
            KodairaType::IV => "IV".into(),
            KodairaType::I0Star => "I0star".into(),
            KodairaType::InStar(n) => format!("Instar:{n}"),
            KodairaType::IVStar => "IVstar".into(),
            KodairaType::IIIStar => "IIIstar".into(),
            KodairaType::IIStar => "IIstar".into(),
        }
    }

    /// Whether `c` is an admissible Tamagawa number for this type.
    pub fn admits(&self, c: u64) -> bool {
        match *self {
            KodairaType::I0 | KodairaType::II | KodairaType::IIStar => c == 1,
            KodairaType::III | KodairaType::IIIStar => c == 2,
            KodairaType::IV | KodairaType::IVStar => c == 1 || c == 3,
            KodairaType::I0Star => matches!(c, 1 | 2 | 4),
            KodairaType::InStar(_) => c == 2 || c == 4,
            KodairaType::In(n) => c == 1 || c == 2 || c == n as u64,
        }
    }
}

impl fmt::Display for KodairaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KodairaType::I0 => f.write_str("I0"),
            KodairaType::In(n) => write!(f, "I{n}"),
            KodairaType::II => f.write_str("II"),
            KodairaType::III => f.write_str("III"),
            KodairaType::IV => f.write_str("IV"),
            KodairaType::I0Star => f.write_str("I0*"),
            KodairaType::InStar(n) => write!(f, "I{n}*"),
            KodairaType::IVStar => f.write_str("IV*"),
            KodairaType::IIIStar => f.write_str("III*"),
            KodairaType::IIStar => f.write_str("II*"),
        }
    }
}

impl FromStr for KodairaType {
    type Err = TateError;

    fn from_str(s: &str) -> Result<Self, TateError> {
        let bad = || TateError::BadSymbol(s.to_string());
        let indexed = |rest: &str| -> Result<u32, TateError> {
            rest.parse::<u32>().ok().filter(|&n| n >= 1).ok_or_else(bad)
        };
        Ok(match s {
            "I0" => KodairaType::I0,
            "II" => KodairaType::II,
            "III" => KodairaType::III,
            "IV" => KodairaType::IV,
            "I0star" => KodairaType::I0Star,
            "IVstar" => KodairaType::IVStar,
            "IIIstar" => KodairaType::IIIStar,
            "IIstar" => KodairaType::IIStar,
            _ => {
                if let Some(rest) = s.strip_prefix("Instar:") {
                    KodairaType::InStar(indexed(rest)?)
                } else if let Some(rest) = s.strip_prefix("In:") {
                    KodairaType::In(indexed(rest)?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl Serialize for KodairaType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for KodairaType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Output of Tate's algorithm at one prime.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalReduction {
    pub p: u64,
    pub kodaira: KodairaType,
    #[serde(rename = "cp")]
    pub c_p: u64,
    /// The input model is already p-minimal.
    #[serde(rename = "minimal")]
    pub short_minimal: bool,
    /// Number of `(a4, a6) -> (a4/p^4, a6/p^6)` reductions applied.
    pub rescalings: u32,
    #[serde(rename = "vmin")]
    pub min_disc_valuation: u32,
}

/// `1` for odd `n`, `2` for even `n`.
pub fn epsilon(n: u32) -> u32 {
    if n.is_multiple_of(2) {
        2
    } else {
        1
    }
}

/// Local data at every prime dividing the discriminant, in increasing order of `p`.
pub fn local_data(curve: &Curve) -> Vec<LocalReduction> {
    factor_discriminant(&curve.discriminant())
        .into_iter()
        .map(|(p, _)| classify(curve, p))
        .collect()
}

/// Product of the local Tamagawa numbers of the minimal model.
pub fn tamagawa_product(curve: &Curve) -> u64 {
    local_data(curve).iter().map(|r| r.c_p).product()
}

pub(crate) fn check_prime(p: u64) -> Result<(), TateError> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(TateError::NotPrime(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kodaira_codes_round_trip() {
        let all = [
            KodairaType::I0,
            KodairaType::In(7),
            KodairaType::II,
            KodairaType::III,
            KodairaType::IV,
            KodairaType::I0Star,
            KodairaType::InStar(3),
            KodairaType::IVStar,
            KodairaType::IIIStar,
            KodairaType::IIStar,
        ];
        for k in all {
            assert_eq!(k.code().parse::<KodairaType>().unwrap(), k);
        }
        assert!("In:0".parse::<KodairaType>().is_err());
        assert!("I5".parse::<KodairaType>().is_err());
    }

    #[test]
    fn epsilon_parity() {
        assert_eq!(epsilon(3), 1);
        assert_eq!(epsilon(4), 2);
        for n in 1..=100 {
            assert!(epsilon(n) == 1 || epsilon(n) == 2);
            assert_eq!(epsilon(n), ((-1i32).pow(n) + 3) as u32 / 2);
        }
    }

    #[test]
    fn local_reduction_json() {
        let r = LocalReduction {
            p: 5,
            kodaira: KodairaType::In(2),
            c_p: 2,
            short_minimal: true,
            rescalings: 0,
            min_disc_valuation: 2,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"p":5,"kodaira":"In:2","cp":2,"minimal":true,"rescalings":0,"vmin":2}"#);
        let back: LocalReduction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn tamagawa_examples() {
        assert_eq!(tamagawa_product(&Curve::new(-3, -4).unwrap()), 1);
        let c = Curve::new(1, 1).unwrap();
        assert_eq!(c.discriminant(), -496);
        let primes: Vec<u64> = local_data(&c).iter().map(|r| r.p).collect();
        assert_eq!(primes, vec![2, 31]);
    }
}

#[cfg(test)]
mod oracle_tests {
    use super::*;
    use crate::curve::HeightBound;
    use crate::factor::Factorizer;
    use proptest::prelude::*;
    use rug::Integer;

    fn agree(curve: &Curve, p: u64) -> Result<(), String> {
        let c = classify_detailed(curve, p);
        let g = generic_tate(&curve.to_long_model(), p);
        let fast = &c.reduction;
        if (fast.kodaira, fast.c_p, fast.min_disc_valuation) != (g.kodaira, g.c_p, g.min_disc_valuation) {
            return Err(format!("{curve} at {p} case {}: fast {fast:?} oracle {g:?}", c.case));
        }
        if c.case == "unmatched" {
            return Err(format!("{curve} at {p}: no case matched"));
        }
        if !fast.kodaira.admits(fast.c_p) {
            return Err(format!("{curve} at {p}: {} with c = {}", fast.kodaira, fast.c_p));
        }
        if fast.short_minimal != is_short_minimal(curve, p) {
            return Err(format!("{curve} at {p}: minimality flag disagrees"));
        }
        let d = crate::arith::valuation(&curve.discriminant(), p).finite().unwrap();
        if fast.rescalings > d / 12 {
            return Err(format!("{curve} at {p}: too many rescalings"));
        }
        Ok(())
    }

    #[test]
    fn oracle_agreement_small_heights() {
        let bound = HeightBound::new(10_000);
        let f = Factorizer::new(1000);
        let mut checked = 0;
        for curve in bound.enumerate() {
            let delta = curve.discriminant();
            for (p, _) in f.factor_u64(Integer::from(delta.abs_ref()).to_u64().unwrap()) {
                agree(&curve, p).unwrap();
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    /// Curves concentrated on the rare branches: many factors of 2 and 3.
    fn structured() -> impl Strategy<Value = (i64, i64, u64)> {
        (
            -400i64..400,
            -400i64..400,
            0u32..9,
            0u32..13,
            prop_oneof![Just(2u64), Just(3u64), Just(5u64), Just(7u64)],
        )
            .prop_map(|(u4, u6, e4, e6, p)| {
                let a4 = u4 * (p as i64).pow(e4.min(6));
                let a6 = u6 * (p as i64).pow(e6.min(if p > 3 { 9 } else { 12 }));
                (a4, a6, p)
            })
    }

    /// Curves built from the auxiliary models, so that `d` is large and the unit data matters.
    fn cancelling() -> impl Strategy<Value = (i64, i64, u64)> {
        (-60i64..60, -60i64..60, 0u32..14, 0u32..3, 0u32..5, prop_oneof![Just(2u64), Just(3u64), Just(5u64)]).prop_map(
            |(t, s, e, which, w, p)| {
                let pi = p as i64;
                let (a4, a6) = match (p, which) {
                    // a4 = -3t² + 2v, a6 = 2t³ - 2vt + v² + 2^e s
                    (2, _) => {
                        let v = if w == 0 { 0 } else { 1i64 << w };
                        (-3 * t * t + 2 * v, 2 * t * t * t - 2 * v * t + v * v + (1i64 << e) * s)
                    }
                    // a4 = -3^α t², a6 = 2·3^(α6) t³ + 3^e s with 3α = 2α6 + 3
                    (3, 0) => (-3 * t * t, 2 * t * t * t + 3i64.pow(e) * s),
                    (3, _) => (-27 * t * t, 54 * t * t * t + 3i64.pow(e.min(12)) * s),
                    // a4 = -3p^α t², a6 = 2p^(α6) t³ + p^e s with 3α = 2α6
                    (_, 0) => (-3 * t * t, 2 * t * t * t + pi.pow(e.min(9)) * s),
                    _ => (-3 * pi * pi * t * t, 2 * pi.pow(3) * t * t * t + pi.pow(e.min(9)) * s),
                };
                (a4, a6, p)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(4000))]
        #[test]
        fn oracle_agreement_auxiliary_models((a4, a6, p) in cancelling()) {
            if let Ok(curve) = Curve::new(a4, a6) {
                prop_assert!(agree(&curve, p).is_ok(), "{}", agree(&curve, p).unwrap_err());
            }
        }

        #[test]
        fn oracle_agreement_structured((a4, a6, p) in structured()) {
            if let Ok(curve) = Curve::new(a4, a6) {
                prop_assert!(agree(&curve, p).is_ok(), "{}", agree(&curve, p).unwrap_err());
            }
        }

        #[test]
        fn multiplicative_symbol_matches_shortcut(a4 in -10_000i64..10_000, a6 in -10_000i64..10_000) {
            let Ok(curve) = Curve::new(a4, a6) else { return Ok(()) };
            for (p, _) in crate::factor::factor_discriminant(&curve.discriminant()) {
                let r = classify(&curve, p);
                if p < 5 || r.rescalings > 0 {
                    continue;
                }
                if let KodairaType::In(n) = r.kodaira {
                    let chi = crate::arith::legendre(&Integer::from(-2 * a4 as i128 * a6 as i128), p);
                    let want = if chi == 1 { n as u64 } else { epsilon(n) as u64 };
                    prop_assert_eq!(r.c_p, want);
                }
            }
        }
    }
}
