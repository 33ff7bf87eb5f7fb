use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::polynomials::MultiPoly;
use crate::rational::Rational;

/// Signs of the boundary polynomials at a point; `true` is strictly
/// positive, `false` is non-positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignVector(Vec<bool>);

impl SignVector {
    pub fn new(signs: Vec<bool>) -> Self {
        SignVector(signs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Bit `k` set when boundary `k` is positive.
    pub fn mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (k, &s)| if s { m | (1 << k) } else { m })
    }

    pub fn from_mask(mask: u64, p: usize) -> Self {
        SignVector((0..p).map(|k| mask >> k & 1 == 1).collect())
    }

    /// Parses a string of `+` and `-`.
    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '+' => Ok(true),
                '-' => Ok(false),
                _ => Err(Error::InvalidConfig(alloc::format!("bad sign vector {text:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SignVector)
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Produces the polynomial piece for a sign vector on demand, for objectives
/// whose piece table is too large to materialize.
pub trait PieceSource: fmt::Debug + Send + Sync {
    fn piece(&self, signs: &SignVector) -> Result<MultiPoly>;
}

#[derive(Clone, Debug)]
enum Pieces {
    Table(BTreeMap<SignVector, MultiPoly>),
    Generated(Arc<dyn PieceSource>),
}

/// Objective that equals one polynomial on each sign region of `p`
/// boundary polynomials. A plain polynomial has `p = 0` and a single piece
/// keyed by the empty sign vector.
#[derive(Clone, Debug)]
pub struct PwPolyObjective {
    dim: usize,
    boundaries: Vec<MultiPoly>,
    pieces: Pieces,
    degree: u32,
}

impl PartialEq for PwPolyObjective {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.boundaries == other.boundaries
            && match (&self.pieces, &other.pieces) {
                (Pieces::Table(a), Pieces::Table(b)) => a == b,
                (Pieces::Generated(a), Pieces::Generated(b)) => Arc::ptr_eq(a, b),
                _ => false,
            }
    }
}

impl PwPolyObjective {
    pub fn polynomial(f: MultiPoly) -> Self {
        let degree = f.total_degree().max(1);
        let dim = f.dim();
        let mut table = BTreeMap::new();
        table.insert(SignVector::default(), f);
        PwPolyObjective {
            dim,
            boundaries: Vec::new(),
            pieces: Pieces::Table(table),
            degree,
        }
    }

    /// Pieces may omit sign vectors that never occur; a missing piece is
    /// reported when a trace reaches it.
    pub fn piecewise(
        dim: usize,
        boundaries: Vec<MultiPoly>,
        pieces: BTreeMap<SignVector, MultiPoly>,
    ) -> Result<Self> {
        for b in &boundaries {
            check_dim(dim, b)?;
        }
        for (s, f) in &pieces {
            check_dim(dim, f)?;
            if s.len() != boundaries.len() {
                return Err(Error::Dimension {
                    expected: boundaries.len(),
                    found: s.len(),
                });
            }
        }
        let degree = boundaries
            .iter()
            .chain(pieces.values())
            .map(MultiPoly::total_degree)
            .max()
            .unwrap_or(0)
            .max(1);
        Ok(PwPolyObjective {
            dim,
            boundaries,
            pieces: Pieces::Table(pieces),
            degree,
        })
    }

    /// `degree` must bound the total degree of every piece and boundary.
    pub fn generated(
        dim: usize,
        boundaries: Vec<MultiPoly>,
        source: Arc<dyn PieceSource>,
        degree: u32,
    ) -> Result<Self> {
        for b in &boundaries {
            check_dim(dim, b)?;
        }
        let bdeg = boundaries.iter().map(MultiPoly::total_degree).max().unwrap_or(0);
        Ok(PwPolyObjective {
            dim,
            boundaries,
            pieces: Pieces::Generated(source),
            degree: degree.max(bdeg).max(1),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundaries(&self) -> &[MultiPoly] {
        &self.boundaries
    }

    pub fn num_boundaries(&self) -> usize {
        self.boundaries.len()
    }

    /// Largest total degree of any piece or boundary, at least 1.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// The piece table, unless pieces are generated on demand.
    pub fn table(&self) -> Option<&BTreeMap<SignVector, MultiPoly>> {
        match &self.pieces {
            Pieces::Table(t) => Some(t),
            Pieces::Generated(_) => None,
        }
    }

    pub fn piece(&self, signs: &SignVector) -> Result<MultiPoly> {
        match &self.pieces {
            Pieces::Table(t) => t
                .get(signs)
                .cloned()
                .ok_or_else(|| Error::MissingPiece(missing(signs))),
            Pieces::Generated(g) => g.piece(signs),
        }
    }

    pub fn signs_at(&self, point: &[Rational]) -> Result<SignVector> {
        self.boundaries
            .iter()
            .map(|b| b.eval(point).map(|v| v.is_positive()))
            .collect::<Result<Vec<_>>>()
            .map(SignVector)
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        self.piece(&self.signs_at(point)?)?.eval(point)
    }

    pub fn gradient_at(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        let piece = self.piece(&self.signs_at(point)?)?;
        piece.gradient().iter().map(|g| g.eval(point)).collect()
    }
}

fn missing(signs: &SignVector) -> String {
    alloc::format!("{signs}")
}

fn check_dim(dim: usize, f: &MultiPoly) -> Result<()> {
    if f.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: f.dim(),
        });
    }
    Ok(())
}
