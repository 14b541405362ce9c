//! Real root isolation for squarefree rational polynomials by Sturm sequences and bisection.

use rug::Rational;
use serde::Serialize;
use std::cmp::Ordering;

/// Coefficients from the constant term up; the last entry is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(pub Vec<Rational>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| *c == 0) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Rational::from(c)).collect())
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.0.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn sign_at(&self, x: &Rational) -> Ordering {
        self.eval(x).cmp0()
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.0.iter().enumerate().skip(1).map(|(i, c)| Rational::from(c * i as u32)).collect())
    }

    /// Remainder of `self` divided by `d`.
    pub fn rem(&self, d: &Poly) -> Poly {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.0[dd].clone();
        let mut r = self.0.clone();
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let q = Rational::from(&r[k] / &lead);
            for (i, c) in d.0.iter().enumerate() {
                r[k - dd + i] -= Rational::from(&q * c);
            }
            r.pop();
            while r.last().is_some_and(|c| *c == 0) {
                r.pop();
            }
        }
        Poly::new(r)
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// Bound on the absolute value of every real root.
    fn root_bound(&self) -> Rational {
        let n = self.degree().expect("nonzero polynomial");
        let lead = self.0[n].clone().abs();
        let max = self.0[..n].iter().map(|c| Rational::from(c.abs_ref()) / &lead).max().unwrap_or_default();
        max + 1u32
    }
}

fn sturm_sequence(p: &Poly) -> Vec<Poly> {
    let mut seq = vec![p.clone(), p.derivative()];
    loop {
        let n = seq.len();
        if seq[n - 1].is_zero() {
            seq.pop();
            break;
        }
        let r = seq[n - 2].rem(&seq[n - 1]);
        if r.is_zero() {
            break;
        }
        seq.push(Poly::new(r.0.into_iter().map(|c| -c).collect()));
    }
    seq
}

fn variations(seq: &[Poly], x: &Rational) -> usize {
    let signs: Vec<Ordering> = seq.iter().map(|p| p.sign_at(x)).filter(|s| *s != Ordering::Equal).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// A real algebraic number known to lie in `[lo, hi]`; `lo == hi` marks an exact rational root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    pub fn midpoint(&self) -> Rational {
        Rational::from(&self.lo + &self.hi) / 2u32
    }

    pub fn to_f64(&self) -> f64 {
        self.midpoint().to_f64()
    }

    /// Halve the interval, keeping the root of `p` inside.
    pub fn bisect(&mut self, p: &Poly) {
        if self.is_exact() {
            return;
        }
        let mid = self.midpoint();
        let s_mid = p.sign_at(&mid);
        if s_mid == Ordering::Equal {
            self.lo = mid.clone();
            self.hi = mid;
        } else if s_mid == p.sign_at(&self.hi) {
            self.hi = mid;
        } else {
            self.lo = mid;
        }
    }

    pub fn refine(&mut self, p: &Poly, width: &Rational) {
        while self.width() > *width {
            self.bisect(p);
        }
    }

    fn overlaps(&self, other: &RootInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl Serialize for RootInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RootInterval", 3)?;
        st.serialize_field("lo", &self.lo.to_string())?;
        st.serialize_field("hi", &self.hi.to_string())?;
        st.serialize_field("approx", &self.to_f64())?;
        st.end()
    }
}

/// Isolating intervals for the real roots of a squarefree polynomial, in increasing order.
/// Each non-exact interval `[lo, hi]` has `p(lo)` and `p(hi)` nonzero of opposite signs.
pub fn isolate_real_roots(p: &Poly) -> Vec<RootInterval> {
    let seq = sturm_sequence(p);
    let b = p.root_bound();
    let mut out = Vec::new();
    let mut stack = vec![(-b.clone(), b)];
    while let Some((lo, hi)) = stack.pop() {
        // Sturm counts roots in (lo, hi]
        let count = variations(&seq, &lo) - variations(&seq, &hi);
        if count == 0 {
            continue;
        }
        let exact_hi = p.sign_at(&hi) == Ordering::Equal;
        if exact_hi {
            out.push(RootInterval { lo: hi.clone(), hi: hi.clone() });
        }
        if count == 1 {
            if !exact_hi {
                out.push(open_left(p, &seq, lo, hi));
            }
            continue;
        }
        let mid = Rational::from(&lo + &hi) / 2u32;
        stack.push((lo, mid.clone()));
        stack.push((mid, hi));
    }
    out.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
    out.dedup();
    out
}

/// An isolating interval for the single root in `(lo, hi]`, moved off a root at `lo` if needed.
fn open_left(p: &Poly, seq: &[Poly], lo: Rational, hi: Rational) -> RootInterval {
    if p.sign_at(&lo) != Ordering::Equal {
        return RootInterval { lo, hi };
    }
    let mut step = Rational::from(&hi - &lo);
    loop {
        step /= 2u32;
        let candidate = Rational::from(&lo + &step);
        if p.sign_at(&candidate) != Ordering::Equal && variations(seq, &candidate) - variations(seq, &hi) == 1 {
            return RootInterval { lo: candidate, hi };
        }
    }
}

/// Refine two families of isolating intervals (for coprime polynomials) until no interval
/// from one meets an interval from the other.
pub fn separate(p: &Poly, ps: &mut [RootInterval], q: &Poly, qs: &mut [RootInterval]) {
    loop {
        let mut clash = false;
        for a in ps.iter_mut() {
            for b in qs.iter_mut() {
                if a.overlaps(b) {
                    clash = true;
                    a.bisect(p);
                    b.bisect(q);
                }
            }
        }
        if !clash {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolates_cubic_roots() {
        // (x - 1)(x + 2)(2x - 1) = 2x^3 + x^2 - 5x + 2
        let p = Poly::from_ints(&[2, -5, 1, 2]);
        let mut roots = isolate_real_roots(&p);
        assert_eq!(roots.len(), 3);
        let eps = Rational::from((1, 1 << 30));
        for r in &mut roots {
            r.refine(&p, &eps);
        }
        let approx: Vec<f64> = roots.iter().map(|r| r.to_f64()).collect();
        for (a, b) in approx.iter().zip([-2.0, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn single_real_root() {
        // x^3 - 2
        let p = Poly::from_ints(&[-2, 0, 0, 1]);
        let mut roots = isolate_real_roots(&p);
        assert_eq!(roots.len(), 1);
        roots[0].refine(&p, &Rational::from((1, 1u64 << 40)));
        assert!((roots[0].to_f64() - 2f64.cbrt()).abs() < 1e-11);
    }

    #[test]
    fn rational_roots_are_exact() {
        // x^3 - x
        let p = Poly::from_ints(&[0, -1, 0, 1]);
        let mut roots = isolate_real_roots(&p);
        assert_eq!(roots.len(), 3);
        assert!(roots.iter().all(|r| r.is_exact() || (p.sign_at(&r.lo) != Ordering::Equal && p.sign_at(&r.hi) != Ordering::Equal)));
        for r in &mut roots {
            r.refine(&p, &Rational::from((1, 1 << 20)));
        }
        let approx: Vec<f64> = roots.iter().map(|r| r.to_f64()).collect();
        for (a, b) in approx.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn gcd_detects_common_roots() {
        let f = Poly::from_ints(&[-1, 0, 1]);
        let g = Poly::from_ints(&[-2, 1]);
        assert_eq!(f.gcd(&g).degree(), Some(0));
        let h = Poly::from_ints(&[2, 3, 1]);
        assert_eq!(f.gcd(&h).degree(), Some(1));
    }

    #[test]
    fn separation_orders_roots() {
        let f = Poly::from_ints(&[-2, 0, 1]);
        let g = Poly::from_ints(&[-3, 0, 1]);
        let mut fr = isolate_real_roots(&f);
        let mut gr = isolate_real_roots(&g);
        separate(&f, &mut fr, &g, &mut gr);
        assert!(fr[1].hi < gr[1].lo);
        assert!(gr[0].hi < fr[0].lo);
    }
}
