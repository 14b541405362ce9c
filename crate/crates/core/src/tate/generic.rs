//! Tate's algorithm on long Weierstrass models, following the step order of the textbook
//! presentation with exact integer arithmetic.

use super::{KodairaType, LocalReduction};
use crate::arith::{count_roots_mod_p_big, is_prime, pow_u, quadratic_has_root, residue, valuation};
use crate::curve::LongModel;
use rug::Integer;

fn v(n: &Integer, p: u64) -> u32 {
    valuation(n, p).finite().unwrap_or(u32::MAX)
}

fn divides(p: u64, n: &Integer) -> bool {
    residue(n, p) == 0
}

fn div(n: &Integer, d: &Integer) -> Integer {
    debug_assert!(n.is_divisible(d));
    Integer::from(n.div_exact_ref(d))
}

/// Inverse of `a` modulo the prime `p`, as an integer in `[0, p)`.
fn inv(a: &Integer, p: u64) -> Integer {
    Integer::from(residue(a, p))
        .invert(&Integer::from(p))
        .expect("unit modulo p")
}

fn reduce(a: Integer, p: u64) -> Integer {
    Integer::from(residue(&a, p))
}

/// Kodaira type, Tamagawa number and minimal discriminant valuation of `model` at `p`.
pub fn generic_tate(model: &LongModel, p: u64) -> LocalReduction {
    assert!(is_prime(p), "{p} is not prime");
    let pz = Integer::from(p);
    let p2 = pow_u(p, 2);
    let p3 = pow_u(p, 3);
    let p4 = pow_u(p, 4);
    let zero = Integer::new();
    let mut e = model.clone();
    let mut rescalings = 0u32;
    loop {
        let n = v(&e.discriminant(), p);
        let result = |kodaira, c_p: u64, rescalings: u32| LocalReduction {
            p,
            kodaira,
            c_p,
            short_minimal: rescalings == 0,
            rescalings,
            min_disc_valuation: n,
        };
        if n == 0 {
            return result(KodairaType::I0, 1, rescalings);
        }

        // move the singular point of the reduction to (0, 0)
        let b2 = e.b2();
        let (r, t) = match p {
            2 => {
                if divides(2, &b2) {
                    let r = reduce(e.a4().clone(), 2);
                    let t = reduce(((Integer::from(&r + e.a2()) * &r + e.a4()) * &r) + e.a6(), 2);
                    (r, t)
                } else {
                    let r = reduce(e.a3().clone(), 2);
                    let t = reduce(Integer::from(&r + e.a4()), 2);
                    (r, t)
                }
            }
            3 => {
                let r = if divides(3, &b2) { reduce(-e.b6(), 3) } else { reduce(-(b2 * e.b4()), 3) };
                let t = reduce(Integer::from(e.a1() * &r) + e.a3(), 3);
                (r, t)
            }
            _ => {
                let c4 = e.c4();
                let twelve_inv = inv(&Integer::from(12), p);
                let r = if divides(p, &c4) {
                    reduce(-(twelve_inv * &b2), p)
                } else {
                    let denom = inv(&Integer::from(12 * &c4), p);
                    reduce(-(denom * (e.c6() + b2 * &c4)), p)
                };
                let half = inv(&Integer::from(2), p);
                let t = reduce(-(half * (Integer::from(e.a1() * &r) + e.a3())), p);
                (r, t)
            }
        };
        e.transform(&r, &zero, &t);

        // multiplicative reduction
        if !divides(p, &e.c4()) {
            let split = quadratic_has_root(&Integer::from(1), e.a1(), &Integer::from(-e.a2()), p);
            let c = if split { n as u64 } else if n.is_multiple_of(2) { 2 } else { 1 };
            return result(KodairaType::In(n), c, rescalings);
        }
        if v(e.a6(), p) < 2 {
            return result(KodairaType::II, 1, rescalings);
        }
        if v(&e.b8(), p) < 3 {
            return result(KodairaType::III, 2, rescalings);
        }
        if v(&e.b6(), p) < 3 {
            let c = if quadratic_has_root(&Integer::from(1), &div(e.a3(), &pz), &-div(e.a6(), &p2), p) { 3 } else { 1 };
            return result(KodairaType::IV, c, rescalings);
        }

        // make p | a1, a2; p^2 | a3, a4; p^3 | a6
        let (s, t) = match p {
            2 => (reduce(e.a2().clone(), 2), 2 * reduce(div(e.a6(), &Integer::from(4)), 2)),
            3 => (e.a1().clone(), e.a3().clone()),
            _ => {
                let half = Integer::from(p.div_ceil(2));
                (-Integer::from(e.a1() * &half), -Integer::from(e.a3() * &half))
            }
        };
        e.transform(&zero, &s, &t);

        let b = div(e.a2(), &pz);
        let c = div(e.a4(), &p2);
        let d = div(e.a6(), &p3);
        let w = 27 * Integer::from(&d * &d) - Integer::from(&b * &b) * Integer::from(&c * &c)
            + 4 * Integer::from(&b * &b) * &b * &d
            - 18 * Integer::from(&b * &c) * &d
            + 4 * Integer::from(&c * &c) * &c;
        let x = 3 * c.clone() - Integer::from(&b * &b);

        if !divides(p, &w) {
            let roots = count_roots_mod_p_big(&[d, c, b, Integer::from(1)], p);
            return result(KodairaType::I0Star, 1 + roots, rescalings);
        }

        if !divides(p, &x) {
            // double root: move it to zero, then iterate the I_n* subprocedure
            let root = match p {
                2 => reduce(c.clone(), 2),
                3 => reduce(c.clone() * &b, 3),
                _ => reduce((Integer::from(&b * &c) - 9 * d.clone()) * inv(&(2 * x.clone()), p), p),
            };
            e.transform(&(root * &pz), &zero, &zero);
            let (mut ix, mut iy) = (3u32, 3u32);
            let (mut mx, mut my) = (p2.clone(), p2.clone());
            let c_p = loop {
                let a3t = div(e.a3(), &my);
                let a6t = div(e.a6(), &Integer::from(&mx * &my));
                if !divides(p, &(Integer::from(&a3t * &a3t) + 4 * a6t.clone())) {
                    break if quadratic_has_root(&Integer::from(1), &a3t, &-a6t, p) { 4 } else { 2 };
                }
                let shift = if p == 2 {
                    &my * reduce(a6t, 2)
                } else {
                    &my * reduce(-(a3t * inv(&Integer::from(2), p)), p)
                };
                e.transform(&zero, &zero, &shift);
                my *= p;
                iy += 1;

                let a2t = div(e.a2(), &pz);
                let a4t = div(e.a4(), &Integer::from(&pz * &mx));
                let a6t = div(e.a6(), &Integer::from(&mx * &my));
                if !divides(p, &(Integer::from(&a4t * &a4t) - 4 * Integer::from(&a2t * &a6t))) {
                    break if quadratic_has_root(&a2t, &a4t, &a6t, p) { 4 } else { 2 };
                }
                let shift = if p == 2 {
                    &mx * reduce(a6t * inv(&a2t, 2), 2)
                } else {
                    &mx * reduce(-(a4t * inv(&(2 * a2t), p)), p)
                };
                e.transform(&shift, &zero, &zero);
                mx *= p;
                ix += 1;
            };
            return result(KodairaType::InStar(ix + iy - 5), c_p, rescalings);
        }

        // triple root: move it to zero
        let root = match p {
            2 => reduce(b.clone(), 2),
            3 => reduce(-d.clone(), 3),
            _ => reduce(-(b.clone() * inv(&Integer::from(3), p)), p),
        };
        e.transform(&(root * &pz), &zero, &zero);
        let x3 = div(e.a3(), &p2);
        let x6 = div(e.a6(), &p4);
        if !divides(p, &(Integer::from(&x3 * &x3) + 4 * x6.clone())) {
            let c = if quadratic_has_root(&Integer::from(1), &x3, &-x6.clone(), p) { 3 } else { 1 };
            return result(KodairaType::IVStar, c, rescalings);
        }
        let shift = if p == 2 {
            4 * reduce(x6, 2)
        } else {
            -(&p2 * reduce(x3 * inv(&Integer::from(2), p), p))
        };
        e.transform(&zero, &zero, &shift);
        if v(e.a4(), p) < 4 {
            return result(KodairaType::IIIStar, 2, rescalings);
        }
        if v(e.a6(), p) < 6 {
            return result(KodairaType::IIStar, 1, rescalings);
        }
        e.scale_down(&pz);
        rescalings += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tate(a: [i64; 5], p: u64) -> LocalReduction {
        generic_tate(&LongModel::new(a[0], a[1], a[2], a[3], a[4]).unwrap(), p)
    }

    #[test]
    fn textbook_examples() {
        let r = tate([0, 0, 0, -3, -4], 3);
        assert_eq!(r.c_p, 1);
        // 11a1: y^2 + y = x^3 - x^2 - 10x - 20, split I5
        let r = tate([0, -1, 1, -10, -20], 11);
        assert_eq!((r.kodaira, r.c_p), (KodairaType::In(5), 5));
        // 14a1: y^2 + xy + y = x^3 + 4x - 6, non-split I6 at 2 and split I3 at 7
        let r = tate([1, 0, 1, 4, -6], 2);
        assert_eq!((r.kodaira, r.c_p), (KodairaType::In(6), 2));
        let r = tate([1, 0, 1, 4, -6], 7);
        assert_eq!((r.kodaira, r.c_p), (KodairaType::In(3), 3));
        // y^2 = x^3 - x has type III at 2 with vmin 6
        let r = tate([0, 0, 0, -1, 0], 2);
        assert_eq!((r.kodaira, r.c_p, r.min_disc_valuation), (KodairaType::III, 2, 6));
        // y^2 = x^3 + 1 at 2: Δ = -432, type IV
        let r = tate([0, 0, 0, 0, 1], 2);
        assert_eq!(r.kodaira, KodairaType::IV);
    }

    #[test]
    fn rescales_scaled_models() {
        // (x, y) -> (25x, 125y) applied to a good model at 5
        let r = tate([0, 0, 0, 625, 15625 * 2], 5);
        assert_eq!(r.rescalings, 1);
        assert_eq!(r.min_disc_valuation, valuation(&Integer::from(-16 * (4 + 27 * 4)), 5).finite().unwrap());
    }
}
