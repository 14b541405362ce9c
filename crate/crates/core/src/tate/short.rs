use super::data::{cancellation, translation3, two_adic, two_cancellation, Vals};
use super::generic::generic_tate;
use super::{epsilon, KodairaType, LocalReduction};
use crate::arith::{count_roots_mod_p_big, is_prime, legendre, pow_u, residue};
use crate::curve::Curve;
use rug::Integer;

/// A classification together with the name of the case that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classified {
    pub reduction: LocalReduction,
    /// Case label such as `"2"`, `"3(ii)"`, `"1*"`; `"unmatched"` if no rule applied.
    pub case: &'static str,
    /// The case was resolved by running the long-model algorithm.
    pub delegated: bool,
}

enum Outcome {
    Done { kodaira: KodairaType, c: u64, starred: bool, case: &'static str },
    Delegate(&'static str),
}

fn done(kodaira: KodairaType, c: u64, case: &'static str) -> Outcome {
    Outcome::Done { kodaira, c, starred: false, case }
}

fn starred(kodaira: KodairaType, c: u64, case: &'static str) -> Outcome {
    Outcome::Done { kodaira, c, starred: true, case }
}

/// Local reduction of the short model at the prime `p`.
pub fn classify(curve: &Curve, p: u64) -> LocalReduction {
    classify_detailed(curve, p).reduction
}

pub fn classify_detailed(curve: &Curve, p: u64) -> Classified {
    assert!(is_prime(p), "{p} is not prime");
    let mut a4 = curve.a4().clone();
    let mut a6 = curve.a6().clone();
    let mut rescalings = 0u32;
    loop {
        let vals = Vals::new(&a4, &a6, p);
        if vals.alpha4.at_least(4) && vals.alpha6.at_least(6) {
            a4 /= pow_u(p, 4);
            a6 /= pow_u(p, 6);
            rescalings += 1;
            continue;
        }
        let outcome = match p {
            2 => at_two(&a4, &a6, &vals),
            3 => at_three(&a4, &a6, &vals),
            _ => at_large(&a4, &a6, &vals),
        };
        return match outcome {
            Outcome::Done { kodaira, c, starred, case } => Classified {
                reduction: LocalReduction {
                    p,
                    kodaira,
                    c_p: c,
                    short_minimal: rescalings == 0 && !starred,
                    rescalings,
                    min_disc_valuation: vals.d - if starred { 12 } else { 0 },
                },
                case,
                delegated: false,
            },
            Outcome::Delegate(case) => {
                let model = Curve::new(a4, a6).expect("rescaling preserves nonsingularity");
                let r = generic_tate(&model.to_long_model(), p);
                Classified {
                    reduction: LocalReduction {
                        short_minimal: rescalings == 0 && r.rescalings == 0,
                        rescalings: rescalings + r.rescalings,
                        ..r
                    },
                    case,
                    delegated: true,
                }
            }
        };
    }
}

/// Whether the short model is already p-minimal.
pub fn is_short_minimal(curve: &Curve, p: u64) -> bool {
    let vals = Vals::new(curve.a4(), curve.a6(), p);
    if vals.alpha4.at_least(4) && vals.alpha6.at_least(6) {
        return false;
    }
    match p {
        2 => {
            let cond2 = vals.alpha4.at_least(4) && residue(curve.a6(), 64) == 16;
            !(cond2 || vals.two_starred(curve.a4(), curve.a6()))
        }
        3 => !(vals.alpha4.is(3) && vals.alpha6.is(3) && vals.d >= 12),
        _ => true,
    }
}

fn roots_plus_one(coeffs: &[Integer], p: u64) -> u64 {
    1 + count_roots_mod_p_big(coeffs, p)
}

fn in_type(n: u32, split: bool) -> (KodairaType, u64) {
    let c = if split { n } else { epsilon(n) };
    (KodairaType::In(n), c as u64)
}

fn at_large(a4: &Integer, a6: &Integer, v: &Vals) -> Outcome {
    let p = v.p;
    let (al4, al6, d) = (v.alpha4, v.alpha6, v.d);
    if d == 0 {
        return done(KodairaType::I0, 1, "1");
    }
    if al4.is(0) && al6.is(0) {
        let u = cancellation(a6, v, d + 2).expect("multiplicative reduction has a unit t");
        let (k, c) = in_type(d, legendre(&(3 * u.t), p) == 1);
        return done(k, c, "2");
    }
    if al4.at_least(1) && al6.is(1) {
        return done(KodairaType::II, 1, "3");
    }
    if al4.is(1) && al6.at_least(2) {
        return done(KodairaType::III, 2, "4");
    }
    if al4.at_least(2) && al6.is(2) {
        return done(KodairaType::IV, (2 + legendre(&v.a6u, p)) as u64, "5");
    }
    if al4.at_least(2) && al6.at_least(3) && d == 6 {
        let coeffs = [(a6 / pow_u(p, 3)), (a4 / pow_u(p, 2)), Integer::new(), Integer::from(1)];
        return done(KodairaType::I0Star, roots_plus_one(&coeffs, p), "6");
    }
    if al4.is(2) && al6.is(3) {
        let n = d - 6;
        let u = cancellation(a6, v, d + 2).expect("In* has units s, t");
        let chi = if n % 2 == 1 { legendre(&u.s, p) } else { legendre(&(-3 * u.s * u.t), p) };
        return done(KodairaType::InStar(n), (3 + chi) as u64, "7");
    }
    if al4.at_least(3) && al6.is(4) {
        return done(KodairaType::IVStar, (2 + legendre(&v.a6u, p)) as u64, "8");
    }
    if al4.is(3) && al6.at_least(5) {
        return done(KodairaType::IIIStar, 2, "9");
    }
    if al4.at_least(4) && al6.is(5) {
        return done(KodairaType::IIStar, 1, "10");
    }
    unreachable!("valuation data ({al4}, {al6}, {d}) matches no case at p = {p}")
}

/// `(s|3)` for `s ∈ {0, 1, 2}` read as a residue.
fn leg3(s: &Integer) -> i64 {
    match residue(s, 3) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

fn at_three(a4: &Integer, a6: &Integer, v: &Vals) -> Outcome {
    let (al4, al6, d) = (v.alpha4, v.alpha6, v.d);
    if al4.is(0) {
        return done(KodairaType::I0, 1, "1");
    }
    if al6.is(0) {
        if d == 3 {
            let u = translation3(a4, a6, v);
            return if u.s != 0 { done(KodairaType::II, 1, "3(ii)") } else { done(KodairaType::III, 2, "4(ii)") };
        }
        // cancellation forces α4 = 1 here
        if d == 4 {
            return done(KodairaType::II, 1, "3(iii)");
        }
        let u = cancellation(a6, v, d + 2).expect("cancellation regime has units s, t");
        return match d {
            5 => done(KodairaType::IV, (2 + leg3(&u.s)) as u64, "5(ii)"),
            6 => {
                let coeffs = [u.s.clone(), Integer::new(), u.t.clone(), Integer::from(1)];
                done(KodairaType::I0Star, roots_plus_one(&coeffs, 3), "6(ii)")
            }
            _ => {
                let n = d - 6;
                let four = if n % 2 == 1 {
                    residue(&u.s, 3) == 1
                } else {
                    residue(&Integer::from(&u.s + &u.t), 3) == 0
                };
                done(KodairaType::InStar(n), if four { 4 } else { 2 }, "7")
            }
        };
    }
    if al6.is(1) {
        return done(KodairaType::II, 1, "3(i)");
    }
    if al4.is(1) {
        return done(KodairaType::III, 2, "4(i)");
    }
    if al6.is(2) {
        return done(KodairaType::IV, (2 + leg3(&v.a6u)) as u64, "5(i)");
    }
    if al4.is(2) {
        let coeffs = [Integer::from(a6 / 27), Integer::from(a4 / 9), Integer::new(), Integer::from(1)];
        return done(KodairaType::I0Star, roots_plus_one(&coeffs, 3), "6(i)");
    }
    // α4 ≥ 3 and α6 ≥ 3 from here on
    if al6.is(3) {
        if d == 9 {
            let u = translation3(a4, a6, v);
            return if u.s != 0 {
                done(KodairaType::IVStar, (2 + leg3(&u.s)) as u64, "8(ii)")
            } else {
                done(KodairaType::IIIStar, 2, "9(ii)")
            };
        }
        return match d {
            10 => {
                // a4 = -27t², a6 = 54t³ + 81s: after x -> x + 3t the cubic has a triple root and
                // Y² - s has distinct roots, so this is IV* rather than III*
                let u = cancellation(a6, v, d + 2).expect("cancellation regime has units s, t");
                done(KodairaType::IVStar, (2 + leg3(&u.s)) as u64, "8(iii)")
            }
            11 => done(KodairaType::IIStar, 1, "10(ii)"),
            12 => starred(KodairaType::I0, 1, "1*"),
            _ => {
                let u = cancellation(a6, v, d + 2).expect("cancellation regime has units s, t");
                let (k, c) = in_type(d - 12, leg3(&u.t) == 1);
                starred(k, c, "2*")
            }
        };
    }
    if al6.is(4) {
        return done(KodairaType::IVStar, (2 + leg3(&v.a6u)) as u64, "8(i)");
    }
    if al4.is(3) {
        return done(KodairaType::IIIStar, 2, "9(i)");
    }
    if al6.is(5) {
        return done(KodairaType::IIStar, 1, "10(i)");
    }
    unreachable!("valuation data ({al4}, {al6}, {d}) matches no case at p = 3")
}

fn at_two(a4: &Integer, a6: &Integer, v: &Vals) -> Outcome {
    let (al4, d) = (v.alpha4, v.d);
    if al4.at_least(4) && residue(a6, 64) == 16 {
        return starred(KodairaType::I0, 1, "1*(i)");
    }
    let (r4, r6) = (residue(a4, 4), residue(a6, 4));
    match (r4, r6) {
        (0, 2) | (0, 3) | (1, 0) | (1, 1) | (2, 2) | (2, 3) | (3, 2) | (3, 3) => {
            return done(KodairaType::II, 1, "3");
        }
        (1, 3) | (2, 1) | (2, 0) | (3, 0) => return done(KodairaType::III, 2, "4"),
        (0, 1) | (3, 1) => {
            let c = match (residue(a4, 8), residue(a6, 8)) {
                (0, 5) | (3, 1) | (4, 5) | (7, 5) => 1,
                _ => 3,
            };
            return done(KodairaType::IV, c, "5");
        }
        (0, 0) => {
            let r16 = residue(a6, 16);
            if r16 == 8 || r16 == 12 {
                let c = if residue(a4, 8) == 4 { 1 } else { 2 };
                return done(KodairaType::I0Star, c, "6(i)");
            }
            if al4.is(2) {
                return Outcome::Delegate("7(i)");
            }
            if r16 == 4 {
                let c = if residue(a6, 32) == 20 { 1 } else { 3 };
                return done(KodairaType::IVStar, c, "8(i)");
            }
            if al4.is(3) {
                return done(KodairaType::IIIStar, 2, "9(i)");
            }
            return match residue(a6, 64) {
                32 | 48 => done(KodairaType::IIStar, 1, "10(i)"),
                _ => Outcome::Delegate("unmatched"),
            };
        }
        _ => {}
    }
    // (a4, a6) ≡ (1, 2) (mod 4), so d ≥ 8
    debug_assert!((r4, r6) == (1, 2) && d >= 8);
    let (r8_4, r8_6) = (residue(a4, 8), residue(a6, 8));
    if v.two_starred(a4, a6) {
        if d == 12 {
            return starred(KodairaType::I0, 1, "1*(ii)");
        }
        let Some(u) = two_cancellation(a4, a6, v, d + 2) else {
            return Outcome::Delegate("unmatched");
        };
        let (k, c) = in_type(d - 12, residue(&u.t, 8) == 3);
        return starred(k, c, "2*");
    }
    let ex = two_adic(a4, a6, v, d + 2);
    let (Some(u), Some(k)) = (ex.units, ex.k) else {
        return Outcome::Delegate("unmatched");
    };
    if k.is(3) {
        let c = if residue(&u.t, 4) == 1 { 1 } else { 2 };
        return done(KodairaType::I0Star, c, "6(ii)");
    }
    if !k.at_least(4) {
        return Outcome::Delegate("unmatched");
    }
    match (r8_4, r8_6) {
        (1, 6) => done(KodairaType::IVStar, if k.is(4) { 1 } else { 3 }, "8(ii)"),
        (5, 6) if k.is(4) => done(KodairaType::IIIStar, 2, "9(ii)"),
        (5, 6) if k.is(5) => done(KodairaType::IIStar, 1, "10(ii)"),
        (_, 2) => Outcome::Delegate("7(ii)"),
        _ => Outcome::Delegate("unmatched"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red(a4: i64, a6: i64, p: u64) -> LocalReduction {
        classify(&Curve::new(a4, a6).unwrap(), p)
    }

    #[test]
    fn worked_examples() {
        let r = red(-3, 27, 5);
        assert_eq!((r.kodaira, r.c_p), (KodairaType::In(2), 2));
        let r = red(50, 125, 5);
        assert_eq!(r.kodaira, KodairaType::I0Star);
        // T³ + 2T + 1 has no root mod 5
        assert_eq!(r.c_p, 1);
        let r = red(0, 1, 5);
        assert_eq!((r.kodaira, r.c_p, r.short_minimal), (KodairaType::I0, 1, true));
        assert_eq!(red(-3, -4, 2).c_p, 1);
        assert_eq!(red(-3, -4, 3).c_p, 1);
    }

    #[test]
    fn minimality_examples() {
        assert!(!is_short_minimal(&Curve::new(625, 15625).unwrap(), 5));
        assert!(is_short_minimal(&Curve::new(-3, -4).unwrap(), 2));
        assert!(!is_short_minimal(&Curve::new(16, 16).unwrap(), 2));
        let r = red(625, 15625 * 2, 5);
        assert_eq!(r.rescalings, 1);
        assert!(!r.short_minimal);
    }
}
