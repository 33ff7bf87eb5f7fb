//! Problem instances and the distributions they are drawn from.
//!
//! Random coefficients come from the lattice `2^-16 Z` intersected with the
//! requested range, which keeps coefficient sizes small under repeated
//! composition. Sampling is counter based: instance `k` depends only on the
//! distribution seed, the sample seed and `k`, so parallel and sequential
//! sampling agree.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gdtrace::{CompiledObjective, GradientOracle, PieceSource, PwPolyObjective, SignVector};
use crate::polynomials::{Monomial, MultiPoly};
use crate::rational::{int, ratio, to_f64, Rational};

/// Random coefficients are multiples of `2^-LATTICE_BITS`.
pub const LATTICE_BITS: u32 = 16;

/// Default cap on the number of ReLU boundaries.
pub const DEFAULT_BOUNDARY_CAP: usize = 16;

/// Uniform draw from the lattice points of `[lo, hi]`; `lo` itself when the
/// range holds no lattice point.
pub fn draw_lattice<R: Rng>(rng: &mut R, lo: &Rational, hi: &Rational) -> Rational {
    let scale = Rational::from_integer(BigInt::one() << LATTICE_BITS as usize);
    let kmin = (lo * &scale).ceil().to_integer();
    let kmax = (hi * &scale).floor().to_integer();
    match (kmin.to_i64(), kmax.to_i64()) {
        (Some(a), Some(b)) if a <= b => Rational::from_integer(BigInt::from(rng.gen_range(a..=b))) / scale,
        _ => lo.clone(),
    }
}

/// All exponent vectors of total degree at most `delta`, in graded order.
pub fn monomials(d: usize, delta: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(d, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, delta, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| Monomial::new(a.clone()).cmp(&Monomial::new(b.clone())));
    out
}

fn check_range(lo: &Rational, hi: &Rational) -> Result<()> {
    if lo > hi {
        return Err(Error::InvalidConfig("empty coefficient range".into()));
    }
    Ok(())
}

fn random_poly_with<R: Rng>(rng: &mut R, d: usize, delta: u32, lo: &Rational, hi: &Rational) -> Result<MultiPoly> {
    let terms: Vec<_> = monomials(d, delta)
        .into_iter()
        .map(|e| (e, draw_lattice(rng, lo, hi)))
        .collect();
    MultiPoly::from_terms(d, terms)
}

/// Every monomial of total degree at most `delta` gets an independent
/// lattice coefficient from `[lo, hi]`.
pub fn gen_random_poly(d: usize, delta: u32, lo: &Rational, hi: &Rational, seed: u64) -> Result<MultiPoly> {
    if d == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    check_range(lo, hi)?;
    random_poly_with(&mut ChaCha8Rng::seed_from_u64(seed), d, delta, lo, hi)
}

fn random_pwpoly_with<R: Rng>(
    rng: &mut R,
    d: usize,
    delta: u32,
    p: usize,
    lo: &Rational,
    hi: &Rational,
) -> Result<PwPolyObjective> {
    let boundaries = (0..p)
        .map(|_| random_poly_with(rng, d, 1, lo, hi))
        .collect::<Result<Vec<_>>>()?;
    let mut pieces = BTreeMap::new();
    for mask in 0..(1u64 << p) {
        pieces.insert(SignVector::from_mask(mask, p), random_poly_with(rng, d, delta, lo, hi)?);
    }
    PwPolyObjective::piecewise(d, boundaries, pieces)
}

/// Random piecewise objective: `p` affine boundaries and an independent
/// random polynomial of degree at most `delta` for each of the `2^p` sign
/// vectors.
pub fn gen_random_pwpoly(
    d: usize,
    delta: u32,
    p: usize,
    lo: &Rational,
    hi: &Rational,
    seed: u64,
) -> Result<PwPolyObjective> {
    if d == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    check_range(lo, hi)?;
    random_pwpoly_with(&mut ChaCha8Rng::seed_from_u64(seed), d, delta, p, lo, hi)
}

/// `f(x) = a x^2 / 2` in one variable.
pub fn scalar_quadratic(a: &Rational) -> MultiPoly {
    MultiPoly::from_terms(1, [(vec![2], a / int(2))]).expect("one variable")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::InvalidConfig(format!("unknown activation {name:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub input: Vec<Rational>,
    pub target: Vec<Rational>,
}

/// One-hidden-layer network `y = W2 act(W1 x + b1) + b2` with MSE loss over
/// `data`. Weights are flattened as `W1` (row-major, hidden x input), `b1`,
/// `W2` (row-major, output x hidden), `b2`. The weights listed in `free` are
/// the variables of the objective, in that order; `frozen` holds the values
/// of all other weights in flat order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub data: Vec<Sample>,
    pub free: Vec<usize>,
    pub frozen: Vec<Rational>,
}

/// A weight as a polynomial in the free variables.
#[derive(Clone, Debug)]
enum Weight {
    Free(usize),
    Fixed(Rational),
}

impl NetSpec {
    pub fn num_weights(&self) -> usize {
        let (n, h, o) = (self.widths[0], self.widths[1], self.widths[2]);
        h * n + h + o * h + o
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() != 3 || self.widths.contains(&0) {
            return Err(Error::InvalidConfig(
                "networks need exactly one hidden layer: widths [input, hidden, output]".into(),
            ));
        }
        if self.data.is_empty() {
            return Err(Error::Empty("network dataset"));
        }
        for s in &self.data {
            if s.input.len() != self.widths[0] || s.target.len() != self.widths[2] {
                return Err(Error::InvalidConfig("sample does not match layer widths".into()));
            }
        }
        let total = self.num_weights();
        let mut seen = vec![false; total];
        for &k in &self.free {
            if k >= total || seen[k] {
                return Err(Error::InvalidConfig(format!("bad free weight index {k}")));
            }
            seen[k] = true;
        }
        if self.free.is_empty() {
            return Err(Error::InvalidConfig("at least one free weight is required".into()));
        }
        if self.frozen.len() != total - self.free.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} frozen weights, found {}",
                total - self.free.len(),
                self.frozen.len()
            )));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<Weight> {
        let total = self.num_weights();
        let mut out = Vec::with_capacity(total);
        let mut frozen = self.frozen.iter();
        for k in 0..total {
            match self.free.iter().position(|&f| f == k) {
                Some(v) => out.push(Weight::Free(v)),
                None => out.push(Weight::Fixed(frozen.next().expect("validated").clone())),
            }
        }
        out
    }

    /// Full flat weight vector with the free weights set to `values`.
    pub fn full_weights(&self, values: &[Rational]) -> Vec<Rational> {
        self.weights()
            .into_iter()
            .map(|w| match w {
                Weight::Free(v) => values[v].clone(),
                Weight::Fixed(c) => c,
            })
            .collect()
    }

    /// Exact forward-pass MSE at the given free weights (ReLU only).
    pub fn exact_loss(&self, values: &[Rational]) -> Result<Rational> {
        if self.activation != Activation::Relu {
            return Err(Error::InvalidConfig("exact loss needs relu".into()));
        }
        let w = self.full_weights(values);
        let (n, h, o) = (self.widths[0], self.widths[1], self.widths[2]);
        let (w1, rest) = w.split_at(h * n);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(o * h);
        let mut total = Rational::zero();
        for s in &self.data {
            let act: Vec<Rational> = (0..h)
                .map(|j| {
                    let z: Rational = (0..n).map(|i| &w1[j * n + i] * &s.input[i]).sum::<Rational>() + &b1[j];
                    if z.is_positive() {
                        z
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            for k in 0..o {
                let y: Rational = (0..h).map(|j| &w2[k * h + j] * &act[j]).sum::<Rational>() + &b2[k];
                let e = y - &s.target[k];
                total += &e * &e;
            }
        }
        Ok(total / int(self.data.len() as i64))
    }
}

/// Whether a hidden unit on a sample has a constant sign or a boundary.
#[derive(Clone, Debug)]
enum UnitSign {
    Boundary(usize),
    Fixed(bool),
}

#[derive(Debug)]
struct ReluPieces {
    dim: usize,
    hidden: usize,
    /// Pre-activation of each hidden unit, per sample.
    pre: Vec<Vec<MultiPoly>>,
    units: Vec<Vec<UnitSign>>,
    /// `W2` rows and `b2` as polynomials.
    w2: Vec<Vec<MultiPoly>>,
    b2: Vec<MultiPoly>,
    targets: Vec<Vec<Rational>>,
}

impl PieceSource for ReluPieces {
    fn piece(&self, signs: &SignVector) -> Result<MultiPoly> {
        let mut total = MultiPoly::zero(self.dim);
        for (s, pre) in self.pre.iter().enumerate() {
            let active: Vec<bool> = self.units[s]
                .iter()
                .map(|u| match u {
                    UnitSign::Boundary(k) => signs.get(*k),
                    UnitSign::Fixed(b) => *b,
                })
                .collect();
            for (k, row) in self.w2.iter().enumerate() {
                let mut y = &self.b2[k] - &MultiPoly::constant(self.dim, self.targets[s][k].clone());
                for j in 0..self.hidden {
                    if active[j] {
                        y = &y + &(&row[j] * &pre[j]);
                    }
                }
                total = &total + &(&y * &y);
            }
        }
        Ok(total.scale(&ratio(1, self.pre.len() as i64)))
    }
}

/// The ReLU network loss as a piecewise polynomial in the free weights.
/// Boundaries are the pre-activations that depend on a free weight, one per
/// (sample, hidden unit) in sample-major order; pieces are generated per
/// sign vector on demand. Fails with `BudgetExceeded` above `cap`
/// boundaries.
pub fn gen_net_mse(net: &NetSpec, cap: usize) -> Result<PwPolyObjective> {
    net.validate()?;
    if net.activation != Activation::Relu {
        return Err(Error::InvalidConfig(format!(
            "{} networks have no exact piecewise form; use the numeric oracle",
            net.activation.name()
        )));
    }
    let dim = net.dim();
    let poly = |w: &Weight| match w {
        Weight::Free(v) => MultiPoly::var(dim, *v),
        Weight::Fixed(c) => MultiPoly::constant(dim, c.clone()),
    };
    let w: Vec<MultiPoly> = net.weights().iter().map(poly).collect();
    let (n, h, o) = (net.widths[0], net.widths[1], net.widths[2]);
    let (w1, rest) = w.split_at(h * n);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(o * h);

    let mut boundaries = Vec::new();
    let mut pre = Vec::new();
    let mut units = Vec::new();
    for s in &net.data {
        let mut zs = Vec::with_capacity(h);
        let mut us = Vec::with_capacity(h);
        for j in 0..h {
            let mut z = b1[j].clone();
            for i in 0..n {
                z = &z + &w1[j * n + i].scale(&s.input[i]);
            }
            if z.total_degree() == 0 {
                let c = z.eval(&vec![Rational::zero(); dim])?;
                us.push(UnitSign::Fixed(c.is_positive()));
            } else {
                us.push(UnitSign::Boundary(boundaries.len()));
                boundaries.push(z.clone());
            }
            zs.push(z);
        }
        pre.push(zs);
        units.push(us);
    }
    if boundaries.len() > cap {
        return Err(Error::BudgetExceeded {
            count: boundaries.len(),
            cap,
        });
    }
    let w2rows: Vec<Vec<MultiPoly>> = (0..o).map(|k| w2[k * h..(k + 1) * h].to_vec()).collect();
    // Output degree: weight degree times pre-activation degree, summed.
    let out_degree = (0..o)
        .flat_map(|k| (0..h).map(move |j| (k, j)))
        .map(|(k, j)| {
            let zdeg = pre.iter().map(|zs| zs[j].total_degree()).max().unwrap_or(0);
            w2rows[k][j].total_degree() + zdeg
        })
        .chain(b2.iter().map(MultiPoly::total_degree))
        .max()
        .unwrap_or(0);
    let source = ReluPieces {
        dim,
        hidden: h,
        pre,
        units,
        w2: w2rows,
        b2: b2.to_vec(),
        targets: net.data.iter().map(|s| s.target.clone()).collect(),
    };
    PwPolyObjective::generated(dim, boundaries, Arc::new(source), 2 * out_degree)
}

/// Floating-point network loss gradient in the free weights; works for every
/// activation.
#[derive(Clone, Debug)]
pub struct NetOracle {
    widths: [usize; 3],
    activation: Activation,
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    base: Vec<f64>,
    free: Vec<usize>,
}

impl NetOracle {
    pub fn new(net: &NetSpec) -> Result<Self> {
        net.validate()?;
        let zeros = vec![Rational::zero(); net.dim()];
        Ok(NetOracle {
            widths: [net.widths[0], net.widths[1], net.widths[2]],
            activation: net.activation,
            inputs: net.data.iter().map(|s| s.input.iter().map(to_f64).collect()).collect(),
            targets: net.data.iter().map(|s| s.target.iter().map(to_f64).collect()).collect(),
            base: net.full_weights(&zeros).iter().map(to_f64).collect(),
            free: net.free.clone(),
        })
    }

    fn act(&self, z: f64) -> (f64, f64) {
        match self.activation {
            Activation::Relu => {
                if z > 0.0 {
                    (z, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::Sigmoid => {
                let a = 1.0 / (1.0 + libm::exp(-z));
                (a, a * (1.0 - a))
            }
            Activation::Tanh => {
                let a = libm::tanh(z);
                (a, 1.0 - a * a)
            }
        }
    }

    /// Loss and full weight gradient.
    pub fn loss_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut w = self.base.clone();
        for (v, &k) in self.free.iter().enumerate() {
            w[k] = x[v];
        }
        let [n, h, o] = self.widths;
        let (ow1, ob1, ow2, ob2) = (0, h * n, h * n + h, h * n + h + o * h);
        let mut grad = vec![0.0; w.len()];
        let mut loss = 0.0;
        let scale = 1.0 / self.inputs.len() as f64;
        let mut a = vec![0.0; h];
        let mut da = vec![0.0; h];
        for (inp, tgt) in self.inputs.iter().zip(&self.targets) {
            for j in 0..h {
                let z = (0..n).map(|i| w[ow1 + j * n + i] * inp[i]).sum::<f64>() + w[ob1 + j];
                let (v, d) = self.act(z);
                a[j] = v;
                da[j] = d;
            }
            for k in 0..o {
                let y = (0..h).map(|j| w[ow2 + k * h + j] * a[j]).sum::<f64>() + w[ob2 + k];
                let e = y - tgt[k];
                loss += scale * e * e;
                let g = 2.0 * scale * e;
                grad[ob2 + k] += g;
                for j in 0..h {
                    grad[ow2 + k * h + j] += g * a[j];
                    let gz = g * w[ow2 + k * h + j] * da[j];
                    grad[ob1 + j] += gz;
                    for i in 0..n {
                        grad[ow1 + j * n + i] += gz * inp[i];
                    }
                }
            }
        }
        (loss, grad)
    }
}

impl GradientOracle for NetOracle {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let (_, g) = self.loss_and_grad(x);
        for (o, &k) in out.iter_mut().zip(&self.free) {
            *o = g[k];
        }
    }
}

/// Network with random data and frozen weights, all lattice values in
/// `[-1, 1]`.
pub fn random_net(
    widths: &[usize],
    activation: Activation,
    samples: usize,
    free: &[usize],
    seed: u64,
) -> Result<NetSpec> {
    random_net_with(&mut ChaCha8Rng::seed_from_u64(seed), widths, activation, samples, free)
}

fn random_net_with<R: Rng>(
    rng: &mut R,
    widths: &[usize],
    activation: Activation,
    samples: usize,
    free: &[usize],
) -> Result<NetSpec> {
    if widths.len() != 3 {
        return Err(Error::InvalidConfig("networks need exactly one hidden layer".into()));
    }
    let (lo, hi) = (int(-1), int(1));
    let data = (0..samples)
        .map(|_| Sample {
            input: (0..widths[0]).map(|_| draw_lattice(rng, &lo, &hi)).collect(),
            target: (0..widths[2]).map(|_| draw_lattice(rng, &lo, &hi)).collect(),
        })
        .collect();
    let total = widths[1] * widths[0] + widths[1] + widths[2] * widths[1] + widths[2];
    let frozen = (0..total.saturating_sub(free.len()))
        .map(|_| draw_lattice(rng, &lo, &hi))
        .collect();
    let net = NetSpec {
        widths: widths.to_vec(),
        activation,
        data,
        free: free.to_vec(),
        frozen,
    };
    net.validate()?;
    Ok(net)
}

/// The objective part of an instance, as written in instance files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObjectiveSpec {
    Poly(MultiPoly),
    PwPoly {
        boundaries: Vec<MultiPoly>,
        pieces: BTreeMap<SignVector, MultiPoly>,
    },
    Net(NetSpec),
}

impl ObjectiveSpec {
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveSpec::Poly(f) => f.dim(),
            ObjectiveSpec::PwPoly { boundaries, pieces } => boundaries
                .first()
                .or_else(|| pieces.values().next())
                .map_or(0, MultiPoly::dim),
            ObjectiveSpec::Net(n) => n.dim(),
        }
    }

    /// Exact form; smooth networks have none.
    pub fn objective(&self) -> Result<PwPolyObjective> {
        match self {
            ObjectiveSpec::Poly(f) => Ok(PwPolyObjective::polynomial(f.clone())),
            ObjectiveSpec::PwPoly { boundaries, pieces } => {
                PwPolyObjective::piecewise(self.dim(), boundaries.clone(), pieces.clone())
            }
            ObjectiveSpec::Net(n) => gen_net_mse(n, DEFAULT_BOUNDARY_CAP),
        }
    }

    /// Floating-point gradient oracle.
    pub fn oracle(&self) -> Result<Box<dyn GradientOracle + Send>> {
        match self {
            ObjectiveSpec::Net(n) => Ok(Box::new(NetOracle::new(n)?)),
            _ => Ok(Box::new(CompiledObjective::new(&self.objective()?)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub label: String,
    /// Initial point; absent when the parameter binding supplies it.
    pub x0: Option<Vec<Rational>>,
    pub objective: ObjectiveSpec,
    pub validation: Option<ObjectiveSpec>,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        let d = self.objective.dim();
        if let ObjectiveSpec::Net(n) = &self.objective {
            n.validate()?;
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: x0.len(),
                });
            }
        }
        if let Some(v) = &self.validation {
            if v.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: v.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn x0_or_zero(&self) -> Vec<Rational> {
        self.x0.clone().unwrap_or_else(|| vec![Rational::zero(); self.dim()])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// Random polynomial objective and random initial point in `[lo, hi]^d`.
    RandomPoly {
        d: usize,
        delta: u32,
        lo: Rational,
        hi: Rational,
    },
    /// Random piecewise objective with `p` affine boundaries.
    RandomPwPoly {
        d: usize,
        delta: u32,
        p: usize,
        lo: Rational,
        hi: Rational,
    },
    /// Random data and frozen weights; free weights start at zero.
    NetMse {
        widths: Vec<usize>,
        activation: Activation,
        samples: usize,
        free: Vec<usize>,
    },
    /// `a x^2 / 2` with curvature `a` drawn from `[lo, hi]`, `x0 = 1`.
    ScalarQuadratic { lo: Rational, hi: Rational },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::RandomPoly { .. } => "random_poly",
            Family::RandomPwPoly { .. } => "random_pwpoly",
            Family::NetMse { .. } => "net_mse",
            Family::ScalarQuadratic { .. } => "scalar_quadratic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDistribution {
    pub family: Family,
    pub seed: u64,
}

impl InstanceDistribution {
    pub fn validate(&self) -> Result<()> {
        match &self.family {
            Family::RandomPoly { d, lo, hi, .. } | Family::RandomPwPoly { d, lo, hi, .. } => {
                if *d == 0 {
                    return Err(Error::InvalidConfig("dimension must be at least 1".into()));
                }
                check_range(lo, hi)
            }
            Family::NetMse { widths, samples, .. } => {
                if widths.len() != 3 || *samples == 0 {
                    return Err(Error::InvalidConfig("bad network family".into()));
                }
                Ok(())
            }
            Family::ScalarQuadratic { lo, hi } => check_range(lo, hi),
        }
    }
}

/// Generator for instance `k` of the sample identified by `seed`.
pub fn instance_rng(dist_seed: u64, seed: u64, k: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&dist_seed.to_le_bytes());
    key[8..16].copy_from_slice(&seed.to_le_bytes());
    key[16..24].copy_from_slice(b"gdinstnc");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(k);
    rng
}

/// Instance `k` of the sample identified by `seed`.
pub fn sample_instance(dist: &InstanceDistribution, seed: u64, k: u64) -> Result<Instance> {
    let rng = &mut instance_rng(dist.seed, seed, k);
    let label = format!("{}#{k}", dist.family.name());
    let unit = (int(-1), int(1));
    let (objective, x0) = match &dist.family {
        Family::RandomPoly { d, delta, lo, hi } => {
            let f = random_poly_with(rng, *d, *delta, lo, hi)?;
            let x0 = (0..*d).map(|_| draw_lattice(rng, &unit.0, &unit.1)).collect();
            (ObjectiveSpec::Poly(f), x0)
        }
        Family::RandomPwPoly { d, delta, p, lo, hi } => {
            let f = random_pwpoly_with(rng, *d, *delta, *p, lo, hi)?;
            let x0 = (0..*d).map(|_| draw_lattice(rng, &unit.0, &unit.1)).collect();
            let spec = ObjectiveSpec::PwPoly {
                boundaries: f.boundaries().to_vec(),
                pieces: f.table().expect("table objective").clone(),
            };
            (spec, x0)
        }
        Family::NetMse {
            widths,
            activation,
            samples,
            free,
        } => {
            let net = random_net_with(rng, widths, *activation, *samples, free)?;
            let x0 = vec![Rational::zero(); free.len()];
            (ObjectiveSpec::Net(net), x0)
        }
        Family::ScalarQuadratic { lo, hi } => {
            let a = draw_lattice(rng, lo, hi);
            (ObjectiveSpec::Poly(scalar_quadratic(&a)), vec![int(1)])
        }
    };
    Ok(Instance {
        label,
        x0: Some(x0),
        objective,
        validation: None,
    })
}

/// `m` independent draws; deterministic in `(dist.seed, seed, index)`.
pub fn sample_instances(dist: &InstanceDistribution, m: usize, seed: u64) -> Result<Vec<Instance>> {
    if m == 0 {
        return Err(Error::InvalidConfig("sample size must be at least 1".into()));
    }
    dist.validate()?;
    (0..m as u64).map(|k| sample_instance(dist, seed, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn constant_forced_by_range() {
        let f = gen_random_poly(1, 0, &int(5), &int(5), 3).unwrap();
        assert_eq!(f, MultiPoly::constant(1, int(5)));
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = gen_random_poly(1, 2, &int(-1), &int(1), 11).unwrap();
        let b = gen_random_poly(1, 2, &int(-1), &int(1), 11).unwrap();
        assert_eq!(a, b);
        let f = gen_random_poly(2, 3, &int(-1), &int(1), 5).unwrap();
        assert!(f.total_degree() <= 3 && f.num_terms() <= 10);
        assert_eq!(monomials(2, 3).len(), 10);
    }

    fn unit_net(out_weight: i64) -> NetSpec {
        // Weights: w1, b1, w2, b2 with only w1 free.
        NetSpec {
            widths: vec![1, 1, 1],
            activation: Activation::Relu,
            data: vec![Sample {
                input: vec![int(1)],
                target: vec![int(1)],
            }],
            free: vec![0],
            frozen: vec![int(0), int(out_weight), int(0)],
        }
    }

    #[test]
    fn relu_unit_pieces() {
        let f = gen_net_mse(&unit_net(1), DEFAULT_BOUNDARY_CAP).unwrap();
        assert_eq!(f.boundaries(), &[MultiPoly::var(1, 0)]);
        let plus = f.piece(&SignVector::new(vec![true])).unwrap();
        let minus = f.piece(&SignVector::new(vec![false])).unwrap();
        let w = MultiPoly::var(1, 0);
        let one = MultiPoly::constant(1, int(1));
        let wm1 = &w - &one;
        assert_eq!(plus, &wm1 * &wm1);
        assert_eq!(minus, one.clone());

        let f = gen_net_mse(&unit_net(2), DEFAULT_BOUNDARY_CAP).unwrap();
        let plus = f.piece(&SignVector::new(vec![true])).unwrap();
        let two_w = &w.scale(&int(2)) - &one;
        assert_eq!(plus, &two_w * &two_w);
        assert_eq!(f.piece(&SignVector::new(vec![false])).unwrap(), one);
    }

    #[test]
    fn boundary_count_and_cap() {
        // 1-2-1 net, 2 samples, both first-layer weights free: 4 boundaries.
        let net = random_net(&[1, 2, 1], Activation::Relu, 2, &[0, 1], 9).unwrap();
        let f = gen_net_mse(&net, DEFAULT_BOUNDARY_CAP).unwrap();
        assert_eq!(f.num_boundaries(), 4);
        assert_eq!(
            gen_net_mse(&net, 3).unwrap_err(),
            Error::BudgetExceeded { count: 4, cap: 3 }
        );
        // Only the output bias free: no boundary depends on it.
        let net = random_net(&[1, 2, 1], Activation::Relu, 2, &[6], 9).unwrap();
        assert_eq!(gen_net_mse(&net, DEFAULT_BOUNDARY_CAP).unwrap().num_boundaries(), 0);
    }

    #[test]
    fn unknown_activation() {
        assert!(Activation::parse("softplus").is_err());
        assert_eq!(Activation::parse("tanh").unwrap().name(), "tanh");
    }

    #[test]
    fn sampling_is_counter_based() {
        let dist = InstanceDistribution {
            family: Family::RandomPoly {
                d: 2,
                delta: 2,
                lo: int(-1),
                hi: int(1),
            },
            seed: 4,
        };
        let all = sample_instances(&dist, 3, 8).unwrap();
        assert_eq!(all, sample_instances(&dist, 3, 8).unwrap());
        assert_eq!(all[2], sample_instance(&dist, 8, 2).unwrap());
        assert_eq!(all[0].label, "random_poly#0".to_string());
    }

    #[test]
    fn degenerate_curvature_range() {
        let dist = InstanceDistribution {
            family: Family::ScalarQuadratic { lo: int(1), hi: int(1) },
            seed: 0,
        };
        for inst in sample_instances(&dist, 5, 1).unwrap() {
            assert_eq!(inst.objective, ObjectiveSpec::Poly(scalar_quadratic(&int(1))));
        }
    }
}
