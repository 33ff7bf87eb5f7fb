//! JSON-shaped text formats for instances and piecewise functions.
//!
//! Every exact quantity is written as a `"num/den"` string (bare integers
//! are accepted on input). JSON numbers with a fractional part or exponent
//! are rejected in exact fields. Decoding walks a parsed `serde_json::Value`
//! and reports the dotted path of the offending field.

use std::collections::BTreeMap;

use gdtune_core::instances::{Activation, Instance, NetSpec, ObjectiveSpec, Sample};
use gdtune_core::piecewise::{PwConst, PwPoly};
use gdtune_core::rational::{format_rational, parse_rational, to_f64};
use gdtune_core::{AlgebraicNumber, Interval, MultiPoly, Rational, SignVector, UniPoly};
use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

/// Cursor into a JSON document that remembers how it got there.
#[derive(Clone, Copy)]
pub struct Field<'a> {
    value: &'a Value,
    path: &'a str,
}

/// Owned path segments keep the borrow checker out of the way.
pub struct Node {
    value: Value,
    path: String,
}

impl Node {
    pub fn parse(text: &str, what: &str) -> Result<Node> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::parse(format!("{what} line {}, column {}", e.line(), e.column()), e.to_string()))?;
        Ok(Node {
            value,
            path: what.to_string(),
        })
    }

    pub fn field(&self) -> Field<'_> {
        Field {
            value: &self.value,
            path: &self.path,
        }
    }
}

impl<'a> Field<'a> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::parse(self.path, message)
    }

    fn child<T>(&self, key: &str, f: impl FnOnce(Field<'_>) -> Result<T>) -> Result<T> {
        let obj = self.value.as_object().ok_or_else(|| self.err("expected an object"))?;
        let v = obj.get(key).ok_or_else(|| self.err(format!("missing field {key:?}")))?;
        let path = format!("{}.{key}", self.path);
        f(Field { value: v, path: &path })
    }

    fn opt_child<T>(&self, key: &str, f: impl FnOnce(Field<'_>) -> Result<T>) -> Result<Option<T>> {
        let obj = self.value.as_object().ok_or_else(|| self.err("expected an object"))?;
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => {
                let path = format!("{}.{key}", self.path);
                f(Field { value: v, path: &path }).map(Some)
            }
        }
    }

    fn items<T>(&self, mut f: impl FnMut(Field<'_>) -> Result<T>) -> Result<Vec<T>> {
        let arr = self.value.as_array().ok_or_else(|| self.err("expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(k, v)| {
                let path = format!("{}[{k}]", self.path);
                f(Field { value: v, path: &path })
            })
            .collect()
    }

    fn str(&self) -> Result<&'a str> {
        self.value.as_str().ok_or_else(|| self.err("expected a string"))
    }

    fn usize(&self) -> Result<usize> {
        self.value
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| self.err("expected a non-negative integer"))
    }

    fn u32(&self) -> Result<u32> {
        self.value
            .as_u64()
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| self.err("expected a non-negative 32-bit integer"))
    }

    fn rational(&self) -> Result<Rational> {
        match self.value {
            Value::String(s) => parse_rational(s).map_err(|e| self.err(e.to_string())),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(BigInt::from(n.as_i64().unwrap()))),
            Value::Number(n) if n.is_u64() => Ok(Rational::from_integer(BigInt::from(n.as_u64().unwrap()))),
            Value::Number(_) => Err(self.err("floats are not allowed in exact fields; write \"num/den\"")),
            _ => Err(self.err("expected an exact rational string")),
        }
    }

    fn rationals(&self) -> Result<Vec<Rational>> {
        self.items(|f| f.rational())
    }
}

pub fn rat(q: &Rational) -> Value {
    Value::String(format_rational(q))
}

fn rats(qs: &[Rational]) -> Value {
    Value::Array(qs.iter().map(rat).collect())
}

// Polynomials

pub fn poly_to_json(p: &MultiPoly) -> Value {
    Value::Array(
        p.terms()
            .map(|(exp, c)| json!({ "exp": exp, "coef": format_rational(c) }))
            .collect(),
    )
}

fn poly_from(f: Field<'_>, dim: usize) -> Result<MultiPoly> {
    let terms = f.items(|t| {
        let exp = t.child("exp", |e| e.items(|x| x.u32()))?;
        let coef = t.child("coef", |c| c.rational())?;
        if exp.len() != dim {
            return Err(t.err(format!("exponent vector has length {}, expected {dim}", exp.len())));
        }
        Ok((exp, coef))
    })?;
    MultiPoly::from_terms(dim, terms).map_err(|e| f.err(e.to_string()))
}

pub fn unipoly_to_json(p: &UniPoly) -> Value {
    rats(p.coeffs())
}

fn unipoly_from(f: Field<'_>) -> Result<UniPoly> {
    Ok(UniPoly::new(f.rationals()?))
}

// Instances

fn objective_to_json(spec: &ObjectiveSpec, out: &mut Map<String, Value>) {
    match spec {
        ObjectiveSpec::Poly(p) => {
            out.insert("kind".into(), json!("poly"));
            out.insert("d".into(), json!(p.dim()));
            out.insert("poly".into(), poly_to_json(p));
        }
        ObjectiveSpec::PwPoly { boundaries, pieces } => {
            out.insert("kind".into(), json!("pwpoly"));
            out.insert("d".into(), json!(spec.dim()));
            out.insert("boundaries".into(), boundaries.iter().map(poly_to_json).collect());
            out.insert(
                "pieces".into(),
                pieces
                    .iter()
                    .map(|(s, p)| json!({ "signs": s.to_string(), "poly": poly_to_json(p) }))
                    .collect(),
            );
        }
        ObjectiveSpec::Net(n) => {
            out.insert("kind".into(), json!("net"));
            out.insert("d".into(), json!(n.dim()));
            out.insert(
                "net".into(),
                json!({
                    "widths": n.widths,
                    "activation": n.activation.name(),
                    "data": n.data.iter().map(|s| json!({ "input": rats(&s.input), "target": rats(&s.target) })).collect::<Vec<_>>(),
                    "free": n.free,
                    "frozen": rats(&n.frozen),
                }),
            );
        }
    }
}

fn objective_from(f: Field<'_>) -> Result<ObjectiveSpec> {
    let kind = f.child("kind", |k| k.str().map(str::to_string))?;
    let d = f.child("d", |d| d.usize())?;
    let spec = match kind.as_str() {
        "poly" => ObjectiveSpec::Poly(f.child("poly", |p| poly_from(p, d))?),
        "pwpoly" => {
            let boundaries = f.child("boundaries", |b| b.items(|p| poly_from(p, d)))?;
            let mut pieces = BTreeMap::new();
            f.child("pieces", |ps| {
                ps.items(|p| {
                    let signs = p.child("signs", |s| {
                        SignVector::parse(s.str()?).map_err(|e| s.err(e.to_string()))
                    })?;
                    if signs.len() != boundaries.len() {
                        return Err(p.err(format!("sign vector needs {} entries", boundaries.len())));
                    }
                    let poly = p.child("poly", |q| poly_from(q, d))?;
                    if pieces.insert(signs, poly).is_some() {
                        return Err(p.err("duplicate sign vector"));
                    }
                    Ok(())
                })
            })?;
            ObjectiveSpec::PwPoly { boundaries, pieces }
        }
        "net" => {
            let net = f.child("net", net_from)?;
            if net.dim() != d {
                return Err(f.err(format!("d = {d} but the net has {} free weights", net.dim())));
            }
            ObjectiveSpec::Net(net)
        }
        other => return Err(f.err(format!("unknown kind {other:?}"))),
    };
    Ok(spec)
}

fn net_from(f: Field<'_>) -> Result<NetSpec> {
    let widths = f.child("widths", |w| w.items(|x| x.usize()))?;
    let activation = f.child("activation", |a| {
        Activation::parse(a.str()?).map_err(|e| a.err(e.to_string()))
    })?;
    let data = f.child("data", |d| {
        d.items(|s| {
            Ok(Sample {
                input: s.child("input", |x| x.rationals())?,
                target: s.child("target", |x| x.rationals())?,
            })
        })
    })?;
    let net = NetSpec {
        widths,
        activation,
        data,
        free: f.child("free", |x| x.items(|i| i.usize()))?,
        frozen: f.child("frozen", |x| x.rationals())?,
    };
    net.validate().map_err(|e| f.err(e.to_string()))?;
    Ok(net)
}

pub fn instance_to_json(inst: &Instance) -> Value {
    let mut out = Map::new();
    out.insert("label".into(), json!(inst.label));
    objective_to_json(&inst.objective, &mut out);
    if let Some(x0) = &inst.x0 {
        out.insert("x0".into(), rats(x0));
    }
    if let Some(v) = &inst.validation {
        let mut vm = Map::new();
        objective_to_json(v, &mut vm);
        out.insert("validation".into(), Value::Object(vm));
    }
    Value::Object(out)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_to_json(inst)).expect("json");
    s.push('\n');
    s
}

fn instance_from(f: Field<'_>) -> Result<Instance> {
    let inst = Instance {
        label: f.opt_child("label", |l| l.str().map(str::to_string))?.unwrap_or_default(),
        objective: objective_from(f)?,
        x0: f.opt_child("x0", |x| x.rationals())?,
        validation: f.opt_child("validation", objective_from)?,
    };
    inst.validate().map_err(|e| f.err(e.to_string()))?;
    Ok(inst)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let node = Node::parse(text, "instance")?;
    instance_from(node.field())
}

// Piecewise functions

pub fn algebraic_to_json(a: &AlgebraicNumber) -> Value {
    match a.as_rational() {
        Some(q) => json!({ "rational": format_rational(q) }),
        None => json!({
            "defining": a.defining_int().coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "lo": format_rational(a.lo()),
            "hi": format_rational(a.hi()),
            "approx": a.to_f64(),
        }),
    }
}

fn algebraic_from(f: Field<'_>) -> Result<AlgebraicNumber> {
    if let Some(q) = f.opt_child("rational", |r| r.rational())? {
        return Ok(AlgebraicNumber::from_rational(q));
    }
    let defining = f.child("defining", unipoly_from)?;
    let lo = f.child("lo", |x| x.rational())?;
    let hi = f.child("hi", |x| x.rational())?;
    AlgebraicNumber::from_parts(&defining, lo, hi).map_err(|e| f.err(e.to_string()))
}

fn domain_to_json(d: &Interval) -> Value {
    json!([format_rational(&d.lo), format_rational(&d.hi)])
}

fn domain_from(f: Field<'_>) -> Result<Interval> {
    let ends = f.rationals()?;
    match <[Rational; 2]>::try_from(ends) {
        Ok([lo, hi]) => Interval::new(lo, hi).map_err(|e| f.err(e.to_string())),
        Err(_) => Err(f.err("domain needs exactly two endpoints")),
    }
}

/// Values a step function can carry in files.
pub trait StepValue: Clone + PartialEq + Sized {
    fn to_json(&self) -> Value;
    fn from_json(f: Field<'_>) -> Result<Self>;
}

impl StepValue for u32 {
    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(f: Field<'_>) -> Result<Self> {
        f.u32()
    }
}

impl StepValue for Rational {
    fn to_json(&self) -> Value {
        rat(self)
    }

    fn from_json(f: Field<'_>) -> Result<Self> {
        f.rational()
    }
}

pub fn pwconst_to_json<V: StepValue>(p: &PwConst<V>) -> Value {
    json!({
        "domain": domain_to_json(p.domain()),
        "breakpoints": p.breakpoints().iter().map(algebraic_to_json).collect::<Vec<_>>(),
        "values": p.values().iter().map(StepValue::to_json).collect::<Vec<_>>(),
    })
}

pub fn pwconst_from<V: StepValue>(f: Field<'_>) -> Result<PwConst<V>> {
    let domain = f.child("domain", domain_from)?;
    let bps = f.child("breakpoints", |b| b.items(algebraic_from))?;
    let values = f.child("values", |v| v.items(V::from_json))?;
    // Kept as written: a file may hold a non-canonical partition on purpose.
    PwConst::new_raw(domain, bps, values).map_err(|e| f.err(e.to_string()))
}

pub fn parse_pwconst<V: StepValue>(text: &str) -> Result<PwConst<V>> {
    let node = Node::parse(text, "dual")?;
    pwconst_from(node.field())
}

pub fn pwpoly_to_json(p: &PwPoly) -> Value {
    json!({
        "domain": domain_to_json(p.domain()),
        "breakpoints": p.breakpoints().iter().map(algebraic_to_json).collect::<Vec<_>>(),
        "pieces": p.pieces().iter().map(unipoly_to_json).collect::<Vec<_>>(),
    })
}

pub fn pwpoly_from(f: Field<'_>) -> Result<PwPoly> {
    let domain = f.child("domain", domain_from)?;
    let bps = f.child("breakpoints", |b| b.items(algebraic_from))?;
    let pieces = f.child("pieces", |p| p.items(unipoly_from))?;
    PwPoly::new(domain, bps, pieces).map_err(|e| f.err(e.to_string()))
}

pub fn parse_pwpoly(text: &str) -> Result<PwPoly> {
    let node = Node::parse(text, "validation dual")?;
    pwpoly_from(node.field())
}

/// Either kind of piecewise function, as found in a file.
pub enum Piecewise {
    Cost(PwConst<u32>),
    Mean(PwConst<Rational>),
    Poly(PwPoly),
}

/// Reads a step function or piecewise polynomial, also when it is nested
/// under a `"dual"` or `"values"` key of a command output.
pub fn parse_piecewise(text: &str) -> Result<Piecewise> {
    let node = Node::parse(text, "input")?;
    let f = node.field();
    let obj = f.value.as_object().ok_or_else(|| f.err("expected an object"))?;
    for key in ["dual", "values", "mean"] {
        if let Some(Value::Object(_)) = obj.get(key) {
            return f.child(key, piecewise_from);
        }
    }
    piecewise_from(f)
}

fn piecewise_from(f: Field<'_>) -> Result<Piecewise> {
    let obj = f.value.as_object().ok_or_else(|| f.err("expected an object"))?;
    if obj.contains_key("pieces") {
        return pwpoly_from(f).map(Piecewise::Poly);
    }
    let all_ints = obj
        .get("values")
        .and_then(Value::as_array)
        .is_some_and(|vs| vs.iter().all(Value::is_u64));
    if all_ints {
        pwconst_from(f).map(Piecewise::Cost)
    } else {
        pwconst_from(f).map(Piecewise::Mean)
    }
}

/// Breakpoints as doubles, for summaries.
pub fn approx(bps: &[AlgebraicNumber]) -> Vec<f64> {
    bps.iter().map(AlgebraicNumber::to_f64).collect()
}

pub fn rat_f64(q: &Rational) -> f64 {
    to_f64(q)
}
