//! Certified real root isolation over the rationals.
//!
//! Roots are isolated by Sturm-sequence bisection on the square-free part and
//! represented as [`AlgebraicNumber`]s: a square-free defining polynomial plus
//! a rational bracket containing exactly one of its roots. Everything is exact;
//! no floating point is involved in any sign decision.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::polynomials::{IntPoly, UniPoly};
use crate::rational::{format_rational, midpoint, pow2_neg, to_f64, Interval, Rational};

/// Default bracket width after isolation, as a power of two.
pub const ISOLATION_BITS: u32 = 30;

/// A real root of a square-free integer polynomial, located by a rational
/// bracket that contains no other root. Exact rationals have `lo == hi` and
/// defining polynomial `t - r`.
#[derive(Clone, Debug)]
pub struct AlgebraicNumber {
    defining: IntPoly,
    lo: Rational,
    hi: Rational,
    sign_at_lo: i8,
}

impl AlgebraicNumber {
    pub fn from_rational(r: Rational) -> Self {
        AlgebraicNumber {
            defining: IntPoly::from_rational(&UniPoly::linear_root(&r)),
            lo: r.clone(),
            hi: r,
            sign_at_lo: 0,
        }
    }

    /// Builds a root from its parts, checking that the bracket isolates a
    /// sign change of a square-free polynomial. Used when reading serialized
    /// values back in.
    pub fn from_parts(defining: &UniPoly, lo: Rational, hi: Rational) -> Result<Self> {
        let poly = IntPoly::from_rational(defining).normalized();
        if poly.degree() == 0 || lo > hi {
            return Err(Error::InvalidConfig("invalid algebraic number".into()));
        }
        if lo == hi {
            if poly.sign_at(&lo) != 0 {
                return Err(Error::InvalidConfig("rational is not a root".into()));
            }
            return Ok(AlgebraicNumber::from_rational(lo));
        }
        if poly.square_free().degree() != poly.degree() {
            return Err(Error::InvalidConfig("defining polynomial not square-free".into()));
        }
        let (sl, sh) = (poly.sign_at(&lo), poly.sign_at(&hi));
        if sl == 0 || sh == 0 || sl == sh {
            return Err(Error::InvalidConfig("bracket does not isolate a root".into()));
        }
        let chain = poly.sturm_chain();
        if variations(&chain, &lo) - variations(&chain, &hi) != 1 {
            return Err(Error::InvalidConfig("bracket contains several roots".into()));
        }
        Ok(AlgebraicNumber {
            defining: poly,
            lo,
            hi,
            sign_at_lo: sl,
        })
    }

    fn isolated(defining: &IntPoly, lo: Rational, hi: Rational) -> Self {
        let defining = defining.normalized();
        let sign_at_lo = defining.sign_at(&lo);
        debug_assert!(sign_at_lo != 0 && sign_at_lo == -defining.sign_at(&hi));
        AlgebraicNumber {
            defining,
            lo,
            hi,
            sign_at_lo,
        }
    }

    pub fn defining(&self) -> UniPoly {
        self.defining.to_unipoly()
    }

    pub fn defining_int(&self) -> &IntPoly {
        &self.defining
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn sign_at_lo(&self) -> i8 {
        self.sign_at_lo
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        (self.lo == self.hi).then_some(&self.lo)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn center(&self) -> Rational {
        midpoint(&self.lo, &self.hi)
    }

    /// Nearest double, up to one ulp; refines a copy until both bracket
    /// ends round alike (or the bracket is below `2^-1100`).
    pub fn to_f64(&self) -> f64 {
        let floor = pow2_neg(1100);
        let mut a = self.clone();
        while to_f64(&a.lo) != to_f64(&a.hi) && a.width() > floor {
            a.bisect();
        }
        to_f64(&a.center())
    }

    fn make_rational(&mut self, r: Rational) {
        *self = AlgebraicNumber::from_rational(r);
    }

    /// Halves the bracket in place.
    fn bisect(&mut self) {
        if self.lo == self.hi {
            return;
        }
        let m = self.center();
        self.split_at(&m);
    }

    /// Shrinks the bracket to the side of `r` containing the root, for
    /// `lo < r < hi`.
    fn split_at(&mut self, r: &Rational) {
        let s = self.defining.sign_at(r);
        if s == 0 {
            self.make_rational(r.clone());
        } else if s == self.sign_at_lo {
            self.lo = r.clone();
        } else {
            self.hi = r.clone();
        }
    }

    /// Returns a copy whose bracket is no wider than `width`.
    pub fn refined(&self, width: &Rational) -> Self {
        let mut out = self.clone();
        while &out.width() > width {
            out.bisect();
        }
        out
    }

    fn brackets_root(&self, l: &Rational, r: &Rational) -> bool {
        let sl = self.defining.sign_at(l);
        let sr = self.defining.sign_at(r);
        sl == 0 || sr == 0 || sl != sr
    }

    /// Exact comparison with a rational.
    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        if let Some(q) = self.as_rational() {
            return q.cmp(r);
        }
        if r <= &self.lo {
            return Ordering::Greater;
        }
        if r >= &self.hi {
            return Ordering::Less;
        }
        let s = self.defining.sign_at(r);
        if s == 0 {
            Ordering::Equal
        } else if s == self.sign_at_lo {
            // The sign change happens to the right of r.
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    /// Exact comparison: refine until the brackets separate, or prove
    /// equality through a common factor of the defining polynomials with a
    /// root in the bracket overlap.
    pub fn cmp_exact(&self, other: &AlgebraicNumber) -> Ordering {
        if let Some(r) = other.as_rational() {
            return self.cmp_rational(r);
        }
        if let Some(r) = self.as_rational() {
            return other.cmp_rational(r).reverse();
        }
        let mut a = self.clone();
        let mut b = other.clone();
        let same_poly = a.defining == b.defining;
        let mut common: Option<IntPoly> = None;
        loop {
            if a.hi < b.lo {
                return Ordering::Less;
            }
            if b.hi < a.lo {
                return Ordering::Greater;
            }
            let l = if a.lo >= b.lo { a.lo.clone() } else { b.lo.clone() };
            let r = if a.hi <= b.hi { a.hi.clone() } else { b.hi.clone() };
            if a.brackets_root(&l, &r) && b.brackets_root(&l, &r) {
                if same_poly {
                    return Ordering::Equal;
                }
                let g = common.get_or_insert_with(|| a.defining.gcd(&b.defining));
                // g divides both defining polynomials, so it has at most one
                // (simple) root in the overlap, and that root is both numbers.
                if g.degree() >= 1 {
                    let (gl, gr) = (g.sign_at(&l), g.sign_at(&r));
                    if gl == 0 || gr == 0 || gl != gr {
                        return Ordering::Equal;
                    }
                }
            }
            a.bisect();
            b.bisect();
            if a.as_rational().is_some() || b.as_rational().is_some() {
                return a.cmp_exact(&b);
            }
        }
    }

    /// Rational enclosure of `p` evaluated at this number, of width at most
    /// `width`.
    pub fn enclose_value(&self, p: &UniPoly, width: &Rational) -> (Rational, Rational) {
        if let Some(r) = self.as_rational() {
            let v = p.eval(r);
            return (v.clone(), v);
        }
        let mut a = self.clone();
        loop {
            if let Some(r) = a.as_rational() {
                let v = p.eval(r);
                return (v.clone(), v);
            }
            let (lo, hi) = interval_eval(p, &a.lo, &a.hi);
            if &(&hi - &lo) <= width {
                return (lo, hi);
            }
            a.bisect();
        }
    }
}

impl PartialEq for AlgebraicNumber {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_exact(other) == Ordering::Equal
    }
}

impl Eq for AlgebraicNumber {}

impl PartialOrd for AlgebraicNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AlgebraicNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_exact(other)
    }
}

impl fmt::Display for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_rational() {
            Some(r) => write!(f, "{}", format_rational(r)),
            None => write!(
                f,
                "root of {} in [{}, {}] (~{:.9})",
                self.defining,
                format_rational(&self.lo),
                format_rational(&self.hi),
                self.to_f64()
            ),
        }
    }
}

/// Interval Horner evaluation of `p` over `[lo, hi]`.
fn interval_eval(p: &UniPoly, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    let mut acc_lo = Rational::zero();
    let mut acc_hi = Rational::zero();
    for c in p.coeffs().iter().rev() {
        let cands = [&acc_lo * lo, &acc_lo * hi, &acc_hi * lo, &acc_hi * hi];
        let mut mn = cands[0].clone();
        let mut mx = cands[0].clone();
        for v in &cands[1..] {
            if v < &mn {
                mn = v.clone();
            }
            if v > &mx {
                mx = v.clone();
            }
        }
        acc_lo = mn + c;
        acc_hi = mx + c;
    }
    (acc_lo, acc_hi)
}

/// Number of sign variations of a Sturm chain at `x`, zeros skipped.
pub fn variations(chain: &[IntPoly], x: &Rational) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for p in chain {
        let s = p.sign_at(x);
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Number of distinct real roots of `p` in the closed interval, by Sturm's
/// theorem on the square-free part.
pub fn sturm_root_count(p: &UniPoly, domain: &Interval) -> Result<usize> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let sf = IntPoly::from_rational(p).square_free();
    if sf.degree() == 0 {
        return Ok(0);
    }
    let chain = sf.sturm_chain();
    let at_lo = usize::from(sf.sign_at(&domain.lo) == 0);
    Ok(variations(&chain, &domain.lo) - variations(&chain, &domain.hi) + at_lo)
}

/// All distinct real roots of `p` in the closed domain, ascending, each with
/// bracket width at most `2^-30`.
pub fn isolate_roots(p: &UniPoly, domain: &Interval) -> Result<Vec<AlgebraicNumber>> {
    isolate_roots_with(p, domain, &pow2_neg(ISOLATION_BITS))
}

pub fn isolate_roots_with(
    p: &UniPoly,
    domain: &Interval,
    width: &Rational,
) -> Result<Vec<AlgebraicNumber>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    Ok(isolate_int(&IntPoly::from_rational(p).square_free(), domain, width))
}

/// Isolation for a square-free integer polynomial.
pub(crate) fn isolate_int(sf: &IntPoly, domain: &Interval, width: &Rational) -> Vec<AlgebraicNumber> {
    let mut out = Vec::new();
    if sf.degree() == 0 {
        return out;
    }
    if sf.degree() == 1 {
        // a + b t
        let c = sf.coeffs();
        let r = Rational::new(-c[0].clone(), c[1].clone());
        if domain.contains(&r) {
            out.push(AlgebraicNumber::from_rational(r));
        }
        return out;
    }
    let chain = sf.sturm_chain();
    if sf.sign_at(&domain.lo) == 0 {
        out.push(AlgebraicNumber::from_rational(domain.lo.clone()));
    }
    let vl = variations(&chain, &domain.lo);
    let vh = variations(&chain, &domain.hi);
    let mut iso = Isolator {
        sf,
        chain: &chain,
        width,
        out: &mut out,
    };
    iso.split(domain.lo.clone(), domain.hi.clone(), vl, vh);
    out
}

struct Isolator<'a> {
    sf: &'a IntPoly,
    chain: &'a [IntPoly],
    width: &'a Rational,
    out: &'a mut Vec<AlgebraicNumber>,
}

impl Isolator<'_> {
    /// Roots in the half-open `(a, b]`, where `va`, `vb` are the variation
    /// counts at the endpoints.
    fn split(&mut self, a: Rational, b: Rational, va: usize, vb: usize) {
        let count = va - vb;
        if count == 0 {
            return;
        }
        if count == 1 {
            self.single(a, b, va);
            return;
        }
        let m = midpoint(&a, &b);
        let vm = variations(self.chain, &m);
        self.split(a, m.clone(), va, vm);
        self.split(m, b, vm, vb);
    }

    fn single(&mut self, mut a: Rational, mut b: Rational, mut va: usize) {
        if self.sf.sign_at(&b) == 0 {
            self.out.push(AlgebraicNumber::from_rational(b));
            return;
        }
        // Move the left end off a root of sf; the counted root is in (a, b).
        while self.sf.sign_at(&a) == 0 {
            let m = midpoint(&a, &b);
            let vm = variations(self.chain, &m);
            if va - vm == 1 {
                if self.sf.sign_at(&m) == 0 {
                    self.out.push(AlgebraicNumber::from_rational(m));
                    return;
                }
                b = m;
            } else {
                a = m;
                va = vm;
            }
        }
        let s_lo = self.sf.sign_at(&a);
        while &(&b - &a) > self.width {
            let m = midpoint(&a, &b);
            let s = self.sf.sign_at(&m);
            if s == 0 {
                self.out.push(AlgebraicNumber::from_rational(m));
                return;
            }
            if s == s_lo {
                a = m;
            } else {
                b = m;
            }
        }
        // A rational root with a small denominator is the simplest rational
        // in its bracket; recognize it so it is represented exactly.
        let r = simplest_between(&a, &b);
        if self.sf.sign_at(&r) == 0 {
            self.out.push(AlgebraicNumber::from_rational(r));
        } else {
            self.out.push(AlgebraicNumber::isolated(self.sf, a, b));
        }
    }
}

/// The rational with the smallest denominator in `[lo, hi]`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    let c = lo.ceil();
    if &c <= hi {
        // Smallest-magnitude integer in range.
        if c.is_positive() || c.is_zero() {
            return c;
        }
        let f = hi.floor();
        return if f.is_negative() { f } else { Rational::zero() };
    }
    let fl = lo.floor();
    let inner = simplest_between(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

/// A rational strictly between `a < b`.
pub fn rational_between(a: &AlgebraicNumber, b: &AlgebraicNumber) -> Rational {
    debug_assert!(a < b);
    let mut a = a.clone();
    let mut b = b.clone();
    loop {
        if a.hi < b.lo {
            return midpoint(&a.hi, &b.lo);
        }
        if a.width() >= b.width() {
            a.bisect();
        } else {
            b.bisect();
        }
    }
}

/// Maximal interval on which a polynomial is strictly negative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SublevelInterval {
    pub lo: AlgebraicNumber,
    pub hi: AlgebraicNumber,
    /// Only a domain endpoint can be included.
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SublevelSet {
    pub intervals: Vec<SublevelInterval>,
    /// Set when the input was identically zero; the whole domain is then
    /// returned as a single flagged interval.
    pub degenerate: bool,
}

/// The set `{t in domain : p(t) < 0}` as maximal intervals, ascending.
pub fn sublevel_intervals(p: &UniPoly, domain: &Interval) -> SublevelSet {
    let whole = || SublevelInterval {
        lo: AlgebraicNumber::from_rational(domain.lo.clone()),
        hi: AlgebraicNumber::from_rational(domain.hi.clone()),
        lo_closed: true,
        hi_closed: true,
    };
    if p.is_zero() {
        return SublevelSet {
            intervals: vec![whole()],
            degenerate: true,
        };
    }
    let ip = IntPoly::from_rational(p);
    let roots = isolate_int(&ip.square_free(), domain, &pow2_neg(ISOLATION_BITS));
    let lo = AlgebraicNumber::from_rational(domain.lo.clone());
    let hi = AlgebraicNumber::from_rational(domain.hi.clone());
    let mut points = vec![lo];
    for r in roots {
        if r.cmp_rational(&domain.lo) == Ordering::Greater
            && r.cmp_rational(&domain.hi) == Ordering::Less
        {
            points.push(r);
        }
    }
    points.push(hi);
    let mut intervals = Vec::new();
    for (k, w) in points.windows(2).enumerate() {
        let sample = rational_between(&w[0], &w[1]);
        if ip.sign_at(&sample) < 0 {
            intervals.push(SublevelInterval {
                lo: w[0].clone(),
                hi: w[1].clone(),
                lo_closed: k == 0 && ip.sign_at(&domain.lo) < 0,
                hi_closed: k + 2 == points.len() && ip.sign_at(&domain.hi) < 0,
            });
        }
    }
    SublevelSet {
        intervals,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn dom(a: i64, b: i64) -> Interval {
        Interval::new(int(a), int(b)).unwrap()
    }

    #[test]
    fn sqrt_two_is_isolated() {
        let roots = isolate_roots(&UniPoly::from_ints(&[-2, 0, 1]), &dom(0, 2)).unwrap();
        assert_eq!(roots.len(), 1);
        let r = &roots[0];
        assert!(r.width() <= pow2_neg(30));
        assert!(r.lo() * r.lo() < int(2) && r.hi() * r.hi() > int(2));
    }

    #[test]
    fn repeated_root_is_exact() {
        let roots = isolate_roots(&UniPoly::from_ints(&[1, -2, 1]), &dom(0, 2)).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].as_rational(), Some(&int(1)));
    }

    #[test]
    fn cubic_roots_are_one_two_three() {
        let roots = isolate_roots(&UniPoly::from_ints(&[-6, 11, -6, 1]), &dom(0, 4)).unwrap();
        let got: Vec<_> = roots.iter().map(|r| r.as_rational().cloned()).collect();
        assert_eq!(got, vec![Some(int(1)), Some(int(2)), Some(int(3))]);
    }

    #[test]
    fn rational_roots_are_exact() {
        // (10t - 9)(10t - 11)
        let roots = isolate_roots(&UniPoly::from_ints(&[99, -200, 100]), &dom(0, 2)).unwrap();
        assert_eq!(roots[0].as_rational(), Some(&ratio(9, 10)));
        assert_eq!(roots[1].as_rational(), Some(&ratio(11, 10)));
    }

    #[test]
    fn simplest_rational() {
        assert_eq!(simplest_between(&ratio(1, 3), &ratio(1, 2)), ratio(1, 2));
        assert_eq!(simplest_between(&ratio(3, 10), &ratio(4, 10)), ratio(1, 3));
        assert_eq!(simplest_between(&ratio(-7, 2), &ratio(-3, 1)), int(-3));
        assert_eq!(simplest_between(&ratio(-1, 2), &ratio(1, 2)), int(0));
        assert_eq!(simplest_between(&ratio(-2, 5), &ratio(-3, 10)), ratio(-1, 3));
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        assert_eq!(isolate_roots(&UniPoly::zero(), &dom(0, 1)), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn roots_on_domain_endpoints() {
        // t (t - 1) (t - 1/3) on [0, 1]
        let p = &(&UniPoly::from_ints(&[0, 1]) * &UniPoly::from_ints(&[-1, 1]))
            * &UniPoly::new(vec![ratio(-1, 3), int(1)]);
        let roots = isolate_roots(&p, &dom(0, 1)).unwrap();
        assert_eq!(roots.len(), 3);
        assert_eq!(roots[0].as_rational(), Some(&int(0)));
        assert_eq!(roots[1], AlgebraicNumber::from_rational(ratio(1, 3)));
        assert_eq!(roots[2].as_rational(), Some(&int(1)));
    }

    #[test]
    fn sublevel_examples() {
        let s = sublevel_intervals(&UniPoly::from_ints(&[-1, 0, 1]), &dom(0, 2));
        assert_eq!(s.intervals.len(), 1);
        let iv = &s.intervals[0];
        assert!(iv.lo_closed && !iv.hi_closed);
        assert_eq!(iv.hi.as_rational(), Some(&int(1)));

        let s = sublevel_intervals(&UniPoly::from_ints(&[1, 0, 1]), &dom(0, 2));
        assert!(s.intervals.is_empty() && !s.degenerate);

        let s = sublevel_intervals(&UniPoly::from_ints(&[-6, 11, -6, 1]), &dom(0, 4));
        assert_eq!(s.intervals.len(), 2);
        assert_eq!(s.intervals[0].lo.as_rational(), Some(&int(0)));
        assert_eq!(s.intervals[0].hi.as_rational(), Some(&int(1)));
        assert_eq!(s.intervals[1].lo.as_rational(), Some(&int(2)));
        assert_eq!(s.intervals[1].hi.as_rational(), Some(&int(3)));

        let s = sublevel_intervals(&UniPoly::zero(), &dom(0, 2));
        assert!(s.degenerate);
        assert_eq!(s.intervals.len(), 1);
    }

    #[test]
    fn comparisons_between_roots() {
        let sqrt2 = isolate_roots(&UniPoly::from_ints(&[-2, 0, 1]), &dom(0, 2)).unwrap()[0].clone();
        let three_halves = AlgebraicNumber::from_rational(ratio(3, 2));
        assert!(sqrt2 < three_halves);
        assert_eq!(sqrt2.cmp_rational(&ratio(141, 100)), Ordering::Greater);

        // sqrt 2 as a root of (t^2 - 2)(t - 5): same number, different polynomial.
        let other = &UniPoly::from_ints(&[-2, 0, 1]) * &UniPoly::from_ints(&[-5, 1]);
        let again = isolate_roots(&other, &dom(1, 3)).unwrap()[0].clone();
        assert_eq!(sqrt2, again);
        let coarse = AlgebraicNumber::from_parts(&UniPoly::from_ints(&[-2, 0, 1]), int(1), int(2)).unwrap();
        assert_eq!(coarse, sqrt2);
        assert_eq!(coarse.cmp_exact(&again), Ordering::Equal);
    }

    #[test]
    fn from_parts_validation() {
        let p = UniPoly::from_ints(&[-2, 0, 1]);
        assert!(AlgebraicNumber::from_parts(&p, int(-2), int(2)).is_err());
        assert!(AlgebraicNumber::from_parts(&p, int(2), int(3)).is_err());
        assert!(AlgebraicNumber::from_parts(&UniPoly::from_ints(&[1, -2, 1]), int(0), int(2)).is_err());
    }

    #[test]
    fn enclosure_of_value() {
        let sqrt2 = isolate_roots(&UniPoly::from_ints(&[-2, 0, 1]), &dom(0, 2)).unwrap()[0].clone();
        let (lo, hi) = sqrt2.enclose_value(&UniPoly::from_ints(&[0, 0, 1]), &pow2_neg(40));
        assert!(lo <= int(2) && int(2) <= hi);
        assert!(&hi - &lo <= pow2_neg(40));
    }
}
