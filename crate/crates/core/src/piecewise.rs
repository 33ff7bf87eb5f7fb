//! Piecewise-constant and piecewise-polynomial functions of one parameter.
//!
//! Cells are open intervals between consecutive breakpoints; the outer cells
//! also contain the closed domain endpoints. A query exactly at a breakpoint
//! returns the value of the cell to its left.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::polynomials::{IntPoly, UniPoly};
use crate::rational::{int, midpoint, pow2_neg, Interval, Rational};
use crate::realroots::{isolate_roots, AlgebraicNumber, ISOLATION_BITS};

/// Values that can be averaged exactly.
pub trait ExactValue: Clone {
    fn to_rational(&self) -> Rational;
}

impl ExactValue for u32 {
    fn to_rational(&self) -> Rational {
        int(i64::from(*self))
    }
}

impl ExactValue for Rational {
    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

/// Piecewise-constant function on a closed rational domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwConst<V> {
    domain: Interval,
    breakpoints: Vec<AlgebraicNumber>,
    values: Vec<V>,
}

impl<V: Clone + PartialEq> PwConst<V> {
    pub fn constant(domain: Interval, value: V) -> Self {
        PwConst {
            domain,
            breakpoints: Vec::new(),
            values: vec![value],
        }
    }

    /// Validates ordering and interiority, then canonicalizes.
    pub fn new(domain: Interval, breakpoints: Vec<AlgebraicNumber>, values: Vec<V>) -> Result<Self> {
        check_partition(&domain, &breakpoints, values.len())?;
        Ok(Self::from_sorted(domain, breakpoints, values))
    }

    /// Builds from breakpoints already known to be strictly increasing and
    /// interior, merging equal neighbours.
    pub(crate) fn from_sorted(domain: Interval, breakpoints: Vec<AlgebraicNumber>, values: Vec<V>) -> Self {
        let raw = PwConst {
            domain,
            breakpoints,
            values,
        };
        raw.canonical()
    }

    pub(crate) fn from_raw_parts(domain: Interval, breakpoints: Vec<AlgebraicNumber>, values: Vec<V>) -> Self {
        debug_assert_eq!(breakpoints.len() + 1, values.len());
        PwConst {
            domain,
            breakpoints,
            values,
        }
    }

    /// Same as [`PwConst::new`] without merging equal neighbours.
    pub fn new_raw(domain: Interval, breakpoints: Vec<AlgebraicNumber>, values: Vec<V>) -> Result<Self> {
        check_partition(&domain, &breakpoints, values.len())?;
        Ok(PwConst {
            domain,
            breakpoints,
            values,
        })
    }

    pub fn canonical(&self) -> Self {
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut vals = vec![self.values[0].clone()];
        for (bp, v) in self.breakpoints.iter().zip(&self.values[1..]) {
            if vals.last() != Some(v) {
                bps.push(bp.clone());
                vals.push(v.clone());
            }
        }
        PwConst {
            domain: self.domain.clone(),
            breakpoints: bps,
            values: vals,
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.values.windows(2).all(|w| w[0] != w[1])
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn breakpoints(&self) -> &[AlgebraicNumber] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    /// Index of the cell owning `t` under the left convention.
    pub fn cell_index(&self, t: &Rational) -> usize {
        self.breakpoints
            .partition_point(|b| b.cmp_rational(t) == Ordering::Less)
    }

    pub fn eval(&self, t: &Rational) -> &V {
        &self.values[self.cell_index(t)]
    }

    /// Endpoints of cell `k`; domain endpoints are exact rationals.
    pub fn cell(&self, k: usize) -> (AlgebraicNumber, AlgebraicNumber) {
        cell_bounds(&self.domain, &self.breakpoints, k)
    }

    pub fn map<W: Clone + PartialEq>(&self, f: impl Fn(&V) -> W) -> PwConst<W> {
        PwConst {
            domain: self.domain.clone(),
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(f).collect(),
        }
        .canonical()
    }

    /// A rational strictly inside each cell.
    pub fn cell_samples(&self) -> Vec<Rational> {
        (0..self.num_cells())
            .map(|k| {
                let (a, b) = self.cell(k);
                interior_midpoint(&a, &b)
            })
            .collect()
    }
}

fn check_partition(domain: &Interval, breakpoints: &[AlgebraicNumber], cells: usize) -> Result<()> {
    if cells != breakpoints.len() + 1 {
        return Err(Error::InvalidConfig("cell count must be breakpoints + 1".into()));
    }
    for b in breakpoints {
        if b.cmp_rational(&domain.lo) != Ordering::Greater || b.cmp_rational(&domain.hi) != Ordering::Less {
            return Err(Error::InvalidConfig("breakpoint outside the open domain".into()));
        }
    }
    for w in breakpoints.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidConfig("breakpoints must be strictly increasing".into()));
        }
    }
    Ok(())
}

fn cell_bounds(domain: &Interval, bps: &[AlgebraicNumber], k: usize) -> (AlgebraicNumber, AlgebraicNumber) {
    let lo = if k == 0 {
        AlgebraicNumber::from_rational(domain.lo.clone())
    } else {
        bps[k - 1].clone()
    };
    let hi = if k == bps.len() {
        AlgebraicNumber::from_rational(domain.hi.clone())
    } else {
        bps[k].clone()
    };
    (lo, hi)
}

/// A rational strictly between `a < b`, equal to the exact midpoint when both
/// are rational and otherwise the midpoint of refined bracket centres.
pub fn interior_midpoint(a: &AlgebraicNumber, b: &AlgebraicNumber) -> Rational {
    if let (Some(x), Some(y)) = (a.as_rational(), b.as_rational()) {
        return midpoint(x, y);
    }
    let mut w = pow2_neg(ISOLATION_BITS);
    loop {
        let ra = a.refined(&w);
        let rb = b.refined(&w);
        if ra.hi() < rb.lo() {
            let m = midpoint(&ra.center(), &rb.center());
            if ra.hi() < &m && &m < rb.lo() {
                return m;
            }
            return midpoint(ra.hi(), rb.lo());
        }
        w = &w / int(1 << 16);
    }
}

/// Sorted union of breakpoint lists with exact duplicate elimination.
pub fn partition_refine(partitions: &[Vec<AlgebraicNumber>]) -> Vec<AlgebraicNumber> {
    merge_events(partitions.iter().map(|p| p.as_slice()))
        .into_iter()
        .map(|(b, _)| b)
        .collect()
}

/// Merged breakpoints, each tagged with the indices of the inputs that have a
/// breakpoint there.
fn merge_events<'a>(lists: impl Iterator<Item = &'a [AlgebraicNumber]>) -> Vec<(AlgebraicNumber, Vec<usize>)> {
    let mut all: Vec<(&AlgebraicNumber, usize)> = Vec::new();
    for (src, list) in lists.enumerate() {
        all.extend(list.iter().map(|b| (b, src)));
    }
    all.sort_by(|x, y| x.0.cmp_exact(y.0).then(x.1.cmp(&y.1)));
    let mut out: Vec<(AlgebraicNumber, Vec<usize>)> = Vec::new();
    for (b, src) in all {
        match out.last_mut() {
            Some((last, srcs)) if last.cmp_exact(b) == Ordering::Equal => srcs.push(src),
            _ => out.push((b.clone(), vec![src])),
        }
    }
    out
}

fn same_domain<V>(fs: &[&PwConst<V>]) -> Result<Interval> {
    let first = fs.first().ok_or(Error::Empty("piecewise function list"))?;
    if fs.iter().any(|f| f.domain != first.domain) {
        return Err(Error::DomainMismatch);
    }
    Ok(first.domain.clone())
}

/// Combines functions on their common refinement: `op` sees the value of
/// every input on each refined cell.
pub fn pw_zip<V, W>(fs: &[&PwConst<V>], op: impl Fn(&[&V]) -> W) -> Result<PwConst<W>>
where
    V: Clone + PartialEq,
    W: Clone + PartialEq,
{
    let domain = same_domain(fs)?;
    let events = merge_events(fs.iter().map(|f| f.breakpoints.as_slice()));
    let mut idx = vec![0usize; fs.len()];
    let mut values = Vec::with_capacity(events.len() + 1);
    let mut current: Vec<&V> = fs.iter().map(|f| &f.values[0]).collect();
    values.push(op(&current));
    let mut bps = Vec::with_capacity(events.len());
    for (b, srcs) in events {
        for s in srcs {
            idx[s] += 1;
            current[s] = &fs[s].values[idx[s]];
        }
        bps.push(b);
        values.push(op(&current));
    }
    Ok(PwConst::from_sorted(domain, bps, values))
}

/// Exact pointwise sum on the common refinement, canonicalized.
pub fn pwconst_sum<V: ExactValue + PartialEq>(fs: &[PwConst<V>]) -> Result<PwConst<Rational>> {
    let refs: Vec<&PwConst<V>> = fs.iter().collect();
    let domain = same_domain(&refs)?;
    let events = merge_events(fs.iter().map(|f| f.breakpoints.as_slice()));
    let mut idx = vec![0usize; fs.len()];
    let mut sum: Rational = fs.iter().map(|f| f.values[0].to_rational()).sum();
    let mut values = Vec::with_capacity(events.len() + 1);
    values.push(sum.clone());
    let mut bps = Vec::with_capacity(events.len());
    for (b, srcs) in events {
        for s in srcs {
            sum -= fs[s].values[idx[s]].to_rational();
            idx[s] += 1;
            sum += fs[s].values[idx[s]].to_rational();
        }
        bps.push(b);
        values.push(sum.clone());
    }
    Ok(PwConst::from_sorted(domain, bps, values))
}

/// Empirical mean: [`pwconst_sum`] divided by the number of inputs.
pub fn pwconst_mean<V: ExactValue + PartialEq>(fs: &[PwConst<V>]) -> Result<PwConst<Rational>> {
    let n = int(fs.len() as i64);
    Ok(pwconst_sum(fs)?.map(|v| v / &n))
}

/// Exact `sup |f - g|` over the common refinement.
pub fn pw_sup_diff<V: ExactValue + PartialEq>(f: &PwConst<V>, g: &PwConst<V>) -> Result<Rational> {
    let diff = pw_zip(&[f, g], |v| (v[0].to_rational() - v[1].to_rational()).abs())?;
    Ok(diff.values.into_iter().max().unwrap_or_else(Rational::zero))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgMin<V> {
    pub cell: (AlgebraicNumber, AlgebraicNumber),
    pub cell_index: usize,
    pub value: V,
    pub eta_hat: Rational,
}

/// Leftmost cell attaining the minimum and a certified interior point of it.
pub fn pwconst_argmin<V: Clone + PartialEq + Ord>(f: &PwConst<V>) -> ArgMin<V> {
    let mut best = 0;
    for (k, v) in f.values.iter().enumerate() {
        if v < &f.values[best] {
            best = k;
        }
    }
    let cell = f.cell(best);
    let eta_hat = interior_midpoint(&cell.0, &cell.1);
    ArgMin {
        cell,
        cell_index: best,
        value: f.values[best].clone(),
        eta_hat,
    }
}

/// Piecewise-polynomial function on a closed rational domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwPoly {
    domain: Interval,
    breakpoints: Vec<AlgebraicNumber>,
    pieces: Vec<UniPoly>,
}

impl PwPoly {
    pub fn new(domain: Interval, breakpoints: Vec<AlgebraicNumber>, pieces: Vec<UniPoly>) -> Result<Self> {
        check_partition(&domain, &breakpoints, pieces.len())?;
        Ok(PwPoly {
            domain,
            breakpoints,
            pieces,
        })
    }

    pub(crate) fn from_raw_parts(domain: Interval, breakpoints: Vec<AlgebraicNumber>, pieces: Vec<UniPoly>) -> Self {
        debug_assert_eq!(breakpoints.len() + 1, pieces.len());
        PwPoly {
            domain,
            breakpoints,
            pieces,
        }
    }

    pub fn single(domain: Interval, piece: UniPoly) -> Self {
        PwPoly {
            domain,
            breakpoints: Vec::new(),
            pieces: vec![piece],
        }
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn breakpoints(&self) -> &[AlgebraicNumber] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[UniPoly] {
        &self.pieces
    }

    pub fn num_cells(&self) -> usize {
        self.pieces.len()
    }

    pub fn cell(&self, k: usize) -> (AlgebraicNumber, AlgebraicNumber) {
        cell_bounds(&self.domain, &self.breakpoints, k)
    }

    pub fn cell_index(&self, t: &Rational) -> usize {
        self.breakpoints
            .partition_point(|b| b.cmp_rational(t) == Ordering::Less)
    }

    /// Value at `t` under the left convention.
    pub fn eval(&self, t: &Rational) -> Rational {
        self.pieces[self.cell_index(t)].eval(t)
    }

    /// Merges neighbouring cells that carry the same polynomial.
    pub fn canonical(&self) -> Self {
        let mut bps = Vec::new();
        let mut pieces = vec![self.pieces[0].clone()];
        for (bp, p) in self.breakpoints.iter().zip(&self.pieces[1..]) {
            if pieces.last() != Some(p) {
                bps.push(bp.clone());
                pieces.push(p.clone());
            }
        }
        PwPoly {
            domain: self.domain.clone(),
            breakpoints: bps,
            pieces,
        }
    }
}

/// Minimum value, exact when `lo == hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueEnclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl ValueEnclosure {
    pub fn exact(&self) -> Option<&Rational> {
        (self.lo == self.hi).then_some(&self.lo)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMin {
    pub location: AlgebraicNumber,
    pub cell_index: usize,
    pub value: ValueEnclosure,
}

/// Enclosures at most this wide are treated as indistinguishable when two
/// candidates at different locations cannot be separated.
const TIE_BITS: u32 = 64;

struct Candidate {
    location: AlgebraicNumber,
    cell: usize,
    piece: usize,
    value: ValueEnclosure,
}

/// Global infimum over the closed domain. Per cell the candidates are the
/// roots of the derivative inside the cell and both cell endpoints, where the
/// piece is used as a one-sided limit. The leftmost minimizer wins ties.
pub fn pwpoly_min(f: &PwPoly) -> PolyMin {
    let width = pow2_neg(ISOLATION_BITS);
    let mut cands: Vec<Candidate> = Vec::new();
    for k in 0..f.num_cells() {
        let (a, b) = f.cell(k);
        let p = &f.pieces[k];
        let mut locs = vec![a.clone()];
        let dp = p.derivative();
        if !dp.is_zero() {
            let hull = Interval {
                lo: a.lo().clone(),
                hi: b.hi().clone(),
            };
            if hull.lo < hull.hi {
                if let Ok(roots) = isolate_roots(&dp, &hull) {
                    locs.extend(roots.into_iter().filter(|r| &a < r && r < &b));
                }
            }
        }
        locs.push(b);
        for loc in locs {
            let (lo, hi) = loc.enclose_value(p, &width);
            cands.push(Candidate {
                location: loc,
                cell: k,
                piece: k,
                value: ValueEnclosure { lo, hi },
            });
        }
    }
    let mut best = 0;
    for i in 1..cands.len() {
        if strictly_less(f, &cands[i], &cands[best]) {
            best = i;
        }
    }
    let c = cands.swap_remove(best);
    PolyMin {
        location: c.location,
        cell_index: c.cell,
        value: c.value,
    }
}

/// Whether candidate `x` has a certified smaller value than `y`.
fn strictly_less(f: &PwPoly, x: &Candidate, y: &Candidate) -> bool {
    if x.value.hi < y.value.lo {
        return true;
    }
    if y.value.hi < x.value.lo {
        return false;
    }
    let (px, py) = (&f.pieces[x.piece], &f.pieces[y.piece]);
    if x.location == y.location {
        // Same point: equal values exactly when the difference of the pieces
        // vanishes there.
        let d = px - py;
        if d.is_zero() {
            return false;
        }
        let vanishes = match x.location.as_rational() {
            Some(r) => d.eval(r).is_zero(),
            None => {
                let g = IntPoly::from_rational(&d).gcd(x.location.defining_int());
                let (sl, sh) = (g.sign_at(x.location.lo()), g.sign_at(x.location.hi()));
                g.degree() >= 1 && (sl == 0 || sh == 0 || sl != sh)
            }
        };
        if vanishes {
            return false;
        }
    }
    let fine = pow2_neg(TIE_BITS);
    let (xl, xh) = x.location.enclose_value(px, &fine);
    let (yl, yh) = y.location.enclose_value(py, &fine);
    xh < yl && !(yh < xl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn dom(a: i64, b: i64) -> Interval {
        Interval::new(int(a), int(b)).unwrap()
    }

    fn q(r: Rational) -> AlgebraicNumber {
        AlgebraicNumber::from_rational(r)
    }

    fn sqrt2() -> AlgebraicNumber {
        isolate_roots(&UniPoly::from_ints(&[-2, 0, 1]), &dom(0, 2)).unwrap()[0].clone()
    }

    #[test]
    fn refine_examples() {
        let merged = partition_refine(&[vec![q(ratio(1, 2))], vec![q(ratio(1, 2)), q(ratio(3, 4))]]);
        assert_eq!(merged, vec![q(ratio(1, 2)), q(ratio(3, 4))]);
        let merged = partition_refine(&[vec![sqrt2()], vec![q(ratio(3, 2))]]);
        assert_eq!(merged.len(), 2);
        assert!(merged[0].as_rational().is_none());
        assert_eq!(merged[1].as_rational(), Some(&ratio(3, 2)));
        assert!(partition_refine(&[vec![], vec![]]).is_empty());
    }

    #[test]
    fn sum_examples() {
        let f = PwConst::new(dom(0, 2), vec![q(int(1))], vec![2u32, 3]).unwrap();
        let g = PwConst::new(dom(0, 2), vec![q(int(1))], vec![3u32, 2]).unwrap();
        let m = pwconst_mean(&[f.clone(), f.clone()]).unwrap();
        assert_eq!(m, f.map(|v| int(i64::from(*v))));
        let m = pwconst_mean(&[f.clone(), g]).unwrap();
        assert_eq!(m, PwConst::constant(dom(0, 2), ratio(5, 2)));
        let c = PwConst::constant(dom(0, 2), 2u32);
        let h = PwConst::new(dom(0, 2), vec![q(int(1))], vec![2u32, 4]).unwrap();
        let m = pwconst_mean(&[c, h]).unwrap();
        assert_eq!(m.values(), &[int(2), int(3)]);
        let other = PwConst::constant(dom(0, 3), 2u32);
        assert_eq!(pwconst_mean(&[f, other]), Err(Error::DomainMismatch));
    }

    #[test]
    fn sup_diff_examples() {
        let f = PwConst::new(dom(0, 2), vec![q(int(1))], vec![2u32, 4]).unwrap();
        let g = PwConst::constant(dom(0, 2), 3u32);
        assert_eq!(pw_sup_diff(&f, &g).unwrap(), int(1));
        assert_eq!(pw_sup_diff(&f, &f).unwrap(), int(0));
        let a = PwConst::constant(dom(0, 2), 2u32);
        let b = PwConst::constant(dom(0, 2), 5u32);
        assert_eq!(pw_sup_diff(&a, &b).unwrap(), int(3));
    }

    #[test]
    fn argmin_examples() {
        let c = PwConst::constant(dom(0, 2), 5u32);
        let a = pwconst_argmin(&c);
        assert_eq!((a.value, a.eta_hat), (5, int(1)));
        let f = PwConst::new(dom(0, 2), vec![q(int(1)), q(ratio(3, 2))], vec![3u32, 2, 2]).unwrap();
        // Canonical form merges the two trailing cells, so build it raw.
        let raw = PwConst::new_raw(dom(0, 2), vec![q(int(1)), q(ratio(3, 2))], vec![3u32, 2, 2]).unwrap();
        let a = pwconst_argmin(&raw);
        assert_eq!((a.value, a.eta_hat.clone()), (2, ratio(5, 4)));
        assert_eq!(pwconst_argmin(&f).value, 2);
    }

    #[test]
    fn interior_midpoint_of_irrational_cell() {
        let m = interior_midpoint(&q(int(1)), &sqrt2());
        assert!(m > int(1) && &m * &m < int(2));
    }

    #[test]
    fn left_convention() {
        let f = PwConst::new(dom(0, 2), vec![q(int(1))], vec![2u32, 4]).unwrap();
        assert_eq!(*f.eval(&int(1)), 2);
        assert_eq!(*f.eval(&ratio(3, 2)), 4);
        assert_eq!(*f.eval(&int(0)), 2);
        assert_eq!(*f.eval(&int(2)), 4);
    }

    #[test]
    fn pwpoly_min_examples() {
        let p = PwPoly::single(dom(0, 1), UniPoly::new(vec![ratio(-1, 2), int(1)]).pow(2));
        let m = pwpoly_min(&p);
        assert_eq!(m.location.as_rational(), Some(&ratio(1, 2)));
        assert_eq!(m.value.exact(), Some(&int(0)));

        let p = PwPoly::new(
            dom(0, 2),
            vec![q(int(1))],
            vec![UniPoly::from_ints(&[0, 1]), UniPoly::from_ints(&[2, -1])],
        )
        .unwrap();
        let m = pwpoly_min(&p);
        assert_eq!(m.location.as_rational(), Some(&int(0)));
        assert_eq!(m.value.exact(), Some(&int(0)));

        let p = PwPoly::single(dom(0, 2), UniPoly::from_ints(&[0, -3, 0, 1]));
        let m = pwpoly_min(&p);
        assert_eq!(m.location.as_rational(), Some(&int(1)));
        assert_eq!(m.value.exact(), Some(&int(-2)));
    }

    #[test]
    fn pwpoly_min_at_irrational_point() {
        // t^3 - 6t on [0, 3]: minimum at sqrt 2, value -4 sqrt 2.
        let p = PwPoly::single(dom(0, 3), UniPoly::from_ints(&[0, -6, 0, 1]));
        let m = pwpoly_min(&p);
        assert_eq!(m.location, sqrt2());
        assert!(m.value.lo <= m.value.hi);
        assert!(&m.value.hi - &m.value.lo <= pow2_neg(30));
        let approx = -4.0 * core::f64::consts::SQRT_2;
        assert!((crate::rational::to_f64(&m.value.lo) - approx).abs() < 1e-8);
    }
}
