//! Exact polynomial arithmetic over the rationals.
//!
//! [`MultiPoly`] holds objectives, boundary functions and validation
//! functions. [`UniPoly`] holds the symbolic iterates: each coordinate of a
//! gradient descent iterate is a univariate polynomial in the free
//! hyperparameter. [`IntPoly`] is the primitive integer form used by the root
//! isolation routines, where rational coefficient normalization would dominate
//! the running time.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{bit_size, format_rational, to_f64, Rational};

/// Caps on the size of symbolic polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_degree: usize,
    /// Total numerator plus denominator bits over all coefficients.
    pub max_bits: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_degree: 4096,
            max_bits: 1 << 20,
        }
    }
}

impl Budget {
    pub fn check(&self, p: &UniPoly) -> Result<()> {
        let degree = p.degree();
        let bits = p.bit_size();
        if degree > self.max_degree || bits > self.max_bits {
            return Err(Error::SymbolicBudgetExceeded {
                degree,
                max_degree: self.max_degree,
                bits,
                max_bits: self.max_bits,
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Univariate polynomials over Q
// ---------------------------------------------------------------------------

/// Dense univariate polynomial, constant term first. The zero polynomial is
/// the empty coefficient list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        UniPoly::new(coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        UniPoly::new(vec![c])
    }

    /// The identity polynomial `t`.
    pub fn identity() -> Self {
        UniPoly::new(vec![Rational::zero(), Rational::one()])
    }

    /// `t - r`.
    pub fn linear_root(r: &Rational) -> Self {
        UniPoly::new(vec![-r.clone(), Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeffs.first().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return UniPoly::zero();
        }
        UniPoly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = UniPoly::constant(Rational::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn bit_size(&self) -> u64 {
        self.coeffs.iter().map(bit_size).sum()
    }

    /// Polynomial long division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &UniPoly) -> (UniPoly, UniPoly) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.degree();
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (UniPoly::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    /// Clears denominators: returns integer coefficients and the common
    /// denominator `l` with `self = coeffs / l`.
    fn lift(&self) -> (Vec<BigInt>, BigInt) {
        let l = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&l / c.denom()))
            .collect();
        (ints, l)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", format_rational(c))?,
                1 => write!(f, "({})t", format_rational(c))?,
                _ => write!(f, "({})t^{k}", format_rational(c))?,
            }
        }
        Ok(())
    }
}

impl Add for &UniPoly {
    type Output = UniPoly;
    fn add(self, rhs: &UniPoly) -> UniPoly {
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut coeffs = long.coeffs.clone();
        for (c, s) in coeffs.iter_mut().zip(&short.coeffs) {
            *c += s;
        }
        UniPoly::new(coeffs)
    }
}

impl Sub for &UniPoly {
    type Output = UniPoly;
    fn sub(self, rhs: &UniPoly) -> UniPoly {
        self + &(-rhs)
    }
}

impl Neg for &UniPoly {
    type Output = UniPoly;
    fn neg(self) -> UniPoly {
        UniPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero();
        }
        if self.is_constant() {
            return rhs.scale(&self.coeffs[0]);
        }
        if rhs.is_constant() {
            return self.scale(&rhs.coeffs[0]);
        }
        // Multiply over Z and normalize once per output coefficient.
        let (a, la) = self.lift();
        let (b, lb) = rhs.lift();
        let den = la * lb;
        let mut prod = vec![BigInt::zero(); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                prod[i + j] += ai * bj;
            }
        }
        UniPoly::new(
            prod.into_iter()
                .map(|c| Rational::new(c, den.clone()))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Primitive integer polynomials
// ---------------------------------------------------------------------------

/// Univariate polynomial with integer coefficients, kept primitive (content 1).
/// Only positive rescalings are applied implicitly, so signs are preserved;
/// [`IntPoly::normalized`] additionally fixes the leading sign.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    /// Primitive integer polynomial `c * p` with `c > 0`, so signs agree with
    /// `p` everywhere.
    pub fn from_rational(p: &UniPoly) -> Self {
        let (ints, _) = p.lift();
        IntPoly::primitive_signed(ints)
    }

    /// Scales by `-1` if needed so that the leading coefficient is positive.
    /// Roots are unchanged; signs may flip.
    pub fn normalized(&self) -> Self {
        IntPoly::primitive(self.coeffs.clone())
    }

    fn primitive(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        let content = coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        if !content.is_zero() && !content.is_one() {
            for c in &mut coeffs {
                *c /= &content;
            }
        }
        if coeffs.last().is_some_and(Signed::is_negative) {
            for c in &mut coeffs {
                *c = -&*c;
            }
        }
        IntPoly { coeffs }
    }

    /// Same as `primitive` but keeps the sign of the leading coefficient.
    fn primitive_signed(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        let content = coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        if !content.is_zero() && !content.is_one() {
            for c in &mut coeffs {
                *c /= &content;
            }
        }
        IntPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn to_unipoly(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .map(|c| Rational::from_integer(c.clone()))
                .collect(),
        )
    }

    /// Sign of the polynomial at a rational point, computed without
    /// denominators: `q^n p(a/q) = sum c_k a^k q^(n-k)`.
    pub fn sign_at(&self, t: &Rational) -> i8 {
        if self.coeffs.is_empty() {
            return 0;
        }
        let a = t.numer();
        let q = t.denom();
        let mut acc = self.coeffs.last().unwrap().clone();
        let mut qpow = q.clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * a + c * &qpow;
            qpow *= q;
        }
        match acc.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn derivative(&self) -> Self {
        IntPoly::primitive_signed(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigInt::from(k))
                .collect(),
        )
    }

    /// Pseudo-remainder of `self` by `d`: `lc(d)^(deg self - deg d + 1) * self mod d`.
    fn pseudo_rem(&self, d: &IntPoly) -> Vec<BigInt> {
        let dd = d.degree();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return r;
        }
        let lead = d.coeffs.last().unwrap();
        let steps = r.len() - dd;
        for _ in 0..steps {
            let top = r.len() - 1;
            let c = r[top].clone();
            for x in r.iter_mut() {
                *x *= lead;
            }
            if !c.is_zero() {
                let shift = top - dd;
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[shift + j] -= &c * dc;
                }
            }
            r.pop();
        }
        while r.last().is_some_and(Zero::is_zero) {
            r.pop();
        }
        r
    }

    /// Greatest common divisor by the primitive remainder sequence.
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        let (mut a, mut b) = if self.degree() >= other.degree() {
            (self.clone(), other.clone())
        } else {
            (other.clone(), self.clone())
        };
        while !b.is_zero() {
            let r = IntPoly::primitive(a.pseudo_rem(&b));
            a = b;
            b = r;
        }
        IntPoly::primitive(a.coeffs)
    }

    /// Exact quotient `self / d`, assuming `d` divides `self` over Q.
    pub fn exact_div(&self, d: &IntPoly) -> IntPoly {
        let (q, r) = self.to_unipoly().div_rem(&d.to_unipoly());
        debug_assert!(r.is_zero(), "inexact polynomial division");
        IntPoly::from_rational(&q)
    }

    /// Square-free part `p / gcd(p, p')`.
    pub fn square_free(&self) -> IntPoly {
        if self.degree() <= 1 {
            return IntPoly::primitive(self.coeffs.clone());
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            IntPoly::primitive(self.coeffs.clone())
        } else {
            self.exact_div(&g)
        }
    }

    /// Sturm sequence `p, p', -rem(p, p'), ...` up to scaling by positive
    /// constants.
    pub fn sturm_chain(&self) -> Vec<IntPoly> {
        let mut chain = vec![self.clone()];
        if self.degree() == 0 {
            return chain;
        }
        chain.push(self.derivative());
        loop {
            let n = chain.len();
            let (a, b) = (&chain[n - 2], &chain[n - 1]);
            if b.degree() == 0 {
                break;
            }
            let r = a.pseudo_rem(b);
            if r.is_empty() {
                break;
            }
            // prem multiplies by lc(b)^k; undo its sign, then negate.
            let k = a.degree() - b.degree() + 1;
            let lead_negative = b.coeffs.last().unwrap().is_negative() && k % 2 == 1;
            let mut next = IntPoly::primitive_signed(r);
            if !lead_negative {
                for c in &mut next.coeffs {
                    *c = -&*c;
                }
            }
            chain.push(next);
        }
        chain
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_unipoly(), f)
    }
}

// ---------------------------------------------------------------------------
// Multivariate polynomials
// ---------------------------------------------------------------------------

/// Exponent vector ordered graded-lexicographically: by total degree, then
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial in `dim` variables with nonzero rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        MultiPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut p = MultiPoly::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function `x_j`.
    pub fn var(dim: usize, j: usize) -> Self {
        let mut exps = vec![0; dim];
        exps[j] = 1;
        let mut p = MultiPoly::zero(dim);
        p.add_term(exps, Rational::one());
        p
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = MultiPoly::zero(dim);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: exps.len(),
                });
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        let key = Monomial(exps);
        match self.terms.get_mut(&key) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(m, c)| (m.exps(), c))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return MultiPoly::zero(self.dim);
        }
        MultiPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        self.check_dim(point.len())?;
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(m.exps()) {
                for _ in 0..e {
                    term *= x;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    /// Partial derivative with respect to `x_j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut out = MultiPoly::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.0[j];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[j] -= 1;
            out.add_term(exps, c * Rational::from_integer(BigInt::from(e)));
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.dim).map(|j| self.partial(j)).collect()
    }

    /// Substitutes the curve `x_j = curve[j](t)` and returns the univariate
    /// result.
    pub fn compose_uni(&self, curve: &[UniPoly], budget: &Budget) -> Result<UniPoly> {
        let mut cache = PowerCache::new(curve)?;
        cache.compose(self, budget)
    }

    /// Fixed-coefficient `f64` form for fast numeric evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (to_f64(c), m.0.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", format_rational(c))?;
            for (j, &e) in m.exps().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "x{j}")?,
                    _ => write!(f, "x{j}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in polynomial sum");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.0.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &(-rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in polynomial product");
        let mut out = MultiPoly::zero(self.dim);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let exps = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }
}

/// Memoized powers of a curve's coordinates, shared across several
/// compositions with the same curve (e.g. all partial derivatives).
pub struct PowerCache<'a> {
    curve: &'a [UniPoly],
    powers: Vec<Vec<UniPoly>>,
}

impl<'a> PowerCache<'a> {
    pub fn new(curve: &'a [UniPoly]) -> Result<Self> {
        Ok(PowerCache {
            curve,
            powers: curve
                .iter()
                .map(|_| vec![UniPoly::constant(Rational::one())])
                .collect(),
        })
    }

    fn power(&mut self, j: usize, e: u32) -> &UniPoly {
        let e = e as usize;
        while self.powers[j].len() <= e {
            let next = self.powers[j].last().unwrap() * &self.curve[j];
            self.powers[j].push(next);
        }
        &self.powers[j][e]
    }

    pub fn compose(&mut self, f: &MultiPoly, budget: &Budget) -> Result<UniPoly> {
        f.check_dim(self.curve.len())?;
        let curve_degree = self.curve.iter().map(UniPoly::degree).max().unwrap_or(0);
        // Accumulate over Z with a common denominator.
        let mut acc = UniPoly::zero();
        for (m, c) in &f.terms {
            let mut term = UniPoly::constant(c.clone());
            for (j, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    let pw = self.power(j, e).clone();
                    term = &term * &pw;
                }
            }
            acc = &acc + &term;
        }
        assert!(
            acc.degree() <= f.total_degree() as usize * curve_degree,
            "composition degree bound violated"
        );
        budget.check(&acc)?;
        Ok(acc)
    }
}

/// Polynomial with `f64` coefficients for the numeric oracle.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl CompiledPoly {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, exps)| {
                exps.iter()
                    .zip(x)
                    .fold(*c, |acc, (&e, &xi)| acc * powi(xi, e))
            })
            .sum()
    }
}

fn powi(x: f64, e: u32) -> f64 {
    let mut out = 1.0;
    for _ in 0..e {
        out *= x;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn mp(dim: usize, terms: &[(&[u32], i64)]) -> MultiPoly {
        MultiPoly::from_terms(dim, terms.iter().map(|(e, c)| (e.to_vec(), int(*c)))).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = mp(2, &[(&[2, 0], 1), (&[1, 1], 3)]);
        assert_eq!(f.eval(&[int(1), int(2)]).unwrap(), int(7));
        assert_eq!(MultiPoly::zero(1).eval(&[int(5)]).unwrap(), int(0));
        let cubic = mp(1, &[(&[3], 1), (&[2], -6), (&[1], 11), (&[0], -6)]);
        assert_eq!(cubic.eval(&[int(2)]).unwrap(), int(0));
    }

    #[test]
    fn eval_dimension_error() {
        let f = mp(2, &[(&[1, 0], 1)]);
        assert_eq!(
            f.eval(&[int(1)]),
            Err(Error::Dimension {
                expected: 2,
                found: 1
            })
        );
        assert!(MultiPoly::from_terms(2, [(vec![1], int(1))]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let f = mp(2, &[(&[2, 0], 1), (&[1, 1], 3)]);
        let g = f.gradient();
        assert_eq!(g[0], mp(2, &[(&[1, 0], 2), (&[0, 1], 3)]));
        assert_eq!(g[1], mp(2, &[(&[1, 0], 3)]));

        let c = MultiPoly::constant(1, int(7));
        assert_eq!(c.gradient(), vec![MultiPoly::zero(1)]);

        let m = mp(2, &[(&[2, 3], 1)]);
        let g = m.gradient();
        assert_eq!(g[0], mp(2, &[(&[1, 3], 2)]));
        assert_eq!(g[1], mp(2, &[(&[2, 2], 3)]));
    }

    #[test]
    fn compose_examples() {
        let b = Budget::default();
        let xy = mp(2, &[(&[1, 1], 1)]);
        let curve = [UniPoly::identity(), UniPoly::from_ints(&[0, 0, 1])];
        assert_eq!(xy.compose_uni(&curve, &b).unwrap(), UniPoly::from_ints(&[0, 0, 0, 1]));

        let sq = mp(1, &[(&[2], 1)]);
        let curve = [UniPoly::from_ints(&[1, -1])];
        assert_eq!(sq.compose_uni(&curve, &b).unwrap(), UniPoly::from_ints(&[1, -2, 1]));

        let sum = mp(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let curve = [UniPoly::from_ints(&[1, 0, 1]), UniPoly::from_ints(&[0, 0, -1])];
        assert_eq!(sum.compose_uni(&curve, &b).unwrap(), UniPoly::from_ints(&[1]));
    }

    #[test]
    fn compose_respects_budget() {
        let f = mp(1, &[(&[4], 1)]);
        let curve = [UniPoly::from_ints(&[1, 1, 1])];
        let tight = Budget {
            max_degree: 7,
            max_bits: 1 << 20,
        };
        assert!(matches!(
            f.compose_uni(&curve, &tight),
            Err(Error::SymbolicBudgetExceeded { degree: 8, .. })
        ));
        let few_bits = Budget {
            max_degree: 100,
            max_bits: 8,
        };
        assert!(f.compose_uni(&curve, &few_bits).is_err());
    }

    #[test]
    fn monomial_order_is_graded() {
        let a = Monomial::new(vec![0, 2]);
        let b = Monomial::new(vec![3, 0]);
        let c = Monomial::new(vec![1, 1]);
        assert!(a < b);
        assert!(a < c);
        assert!(Monomial::new(vec![0, 0]) < Monomial::new(vec![0, 1]));
    }

    #[test]
    fn div_rem_and_gcd() {
        // (t-1)(t-2)(t-3) / (t-2)
        let p = UniPoly::from_ints(&[-6, 11, -6, 1]);
        let (q, r) = p.div_rem(&UniPoly::from_ints(&[-2, 1]));
        assert!(r.is_zero());
        assert_eq!(q, UniPoly::from_ints(&[3, -4, 1]));

        let a = IntPoly::from_rational(&UniPoly::from_ints(&[-1, 0, 1])); // (t-1)(t+1)
        let b = IntPoly::from_rational(&UniPoly::from_ints(&[1, -2, 1])); // (t-1)^2
        assert_eq!(a.gcd(&b), IntPoly::from_rational(&UniPoly::from_ints(&[-1, 1])));
        let neg = IntPoly::from_rational(&UniPoly::from_ints(&[1, -1]));
        assert_eq!(neg.sign_at(&int(0)), 1);
        assert_eq!(neg.normalized().sign_at(&int(0)), -1);
    }

    #[test]
    fn square_free_part() {
        // (t-1)^2 (t+2)
        let p = &UniPoly::from_ints(&[1, -2, 1]) * &UniPoly::from_ints(&[2, 1]);
        let sf = IntPoly::from_rational(&p).square_free();
        assert_eq!(sf.normalized(), IntPoly::from_rational(&UniPoly::from_ints(&[-2, 1, 1])));
    }

    #[test]
    fn int_sign_at_rational() {
        let p = IntPoly::from_rational(&UniPoly::new(vec![ratio(-1, 2), int(0), int(1)]));
        assert_eq!(p.sign_at(&int(0)), -1);
        assert_eq!(p.sign_at(&int(1)), 1);
        assert_eq!(p.sign_at(&ratio(7, 10)), -1);
        assert_eq!(p.sign_at(&ratio(3, 4)), 1);
    }

    #[test]
    fn rational_mul_matches_naive() {
        let a = UniPoly::new(vec![ratio(1, 3), ratio(-2, 5), ratio(7, 2)]);
        let b = UniPoly::new(vec![ratio(3, 4), ratio(1, 6)]);
        let prod = &a * &b;
        for t in [int(0), ratio(1, 7), int(-3)] {
            assert_eq!(prod.eval(&t), a.eval(&t) * b.eval(&t));
        }
    }
}
