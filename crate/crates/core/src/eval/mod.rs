//! Concrete values and the interpretation of formulas over them.
//!
//! Int `div`/`mod` are Euclidean (the remainder is never negative) and a
//! zero divisor is an error. Bit-vector arithmetic wraps at the operand
//! width, with SMT-LIB results for division by zero.

mod engine;

use std::fmt;

use indexmap::IndexMap;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use engine::{
    extract_examples, run_examples, EvalError, EvalMode, EvalOutcome, Evaluator, Example,
    ExampleResult, DEFAULT_FUEL,
};

use crate::formula::{BitVec, Builtin, Literal, Op, Sort, Term};
use crate::sexpr::SExpr;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    BitVec(BitVec),
    Str(String),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
            Value::BitVec(b) => Sort::BitVec(b.width()),
            Value::Str(_) => Sort::String,
        }
    }

    pub fn to_literal(&self) -> Literal {
        match self {
            Value::Int(n) => Literal::Int(n.clone()),
            Value::Bool(b) => Literal::Bool(*b),
            Value::BitVec(b) => Literal::BitVec(b.clone()),
            Value::Str(s) => Literal::Str(s.clone()),
        }
    }

    pub fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Int(n) => Value::Int(n.clone()),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::BitVec(b) => Value::BitVec(b.clone()),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }

    pub fn to_sexpr(&self) -> SExpr {
        self.to_literal().to_sexpr()
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sexpr())
    }
}

pub type Binding = IndexMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivByZero,
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
}

/// Evaluates a quantifier-free formula under `env`.
pub fn eval_formula(t: &Term, env: &Binding) -> Result<Value, FormulaError> {
    match t {
        Term::Var(v) => env.get(v).cloned().ok_or_else(|| FormulaError::UnboundVariable(v.clone())),
        Term::Lit(l) => Ok(Value::from_literal(l)),
        Term::App(Op::Builtin(b), args) => {
            let mut eval = |i: usize| eval_formula(&args[i], env);
            apply_lazy(*b, args.len(), &mut eval)
        }
        Term::App(Op::Relation(r), _) => {
            Err(FormulaError::SortMismatch(format!("relation `{r}` inside a formula")))
        }
        Term::Quant(..) => Err(FormulaError::SortMismatch("quantifier inside a formula".into())),
    }
}

fn want_bool(v: Value) -> Result<bool, FormulaError> {
    v.as_bool().ok_or_else(|| FormulaError::SortMismatch(format!("expected Bool, got {v}")))
}

/// Applies a builtin, evaluating arguments on demand so that `ite`,
/// `and`, `or` and `=>` short-circuit.
pub(crate) fn apply_lazy(
    b: Builtin,
    n: usize,
    arg: &mut dyn FnMut(usize) -> Result<Value, FormulaError>,
) -> Result<Value, FormulaError> {
    match b {
        Builtin::Ite => {
            if n != 3 {
                return Err(FormulaError::SortMismatch("ite arity".into()));
            }
            let c = want_bool(arg(0)?)?;
            arg(if c { 1 } else { 2 })
        }
        Builtin::And => {
            for i in 0..n {
                if !want_bool(arg(i)?)? {
                    return Ok(Value::Bool(false));
                }
            }
            Ok(Value::Bool(true))
        }
        Builtin::Or => {
            for i in 0..n {
                if want_bool(arg(i)?)? {
                    return Ok(Value::Bool(true));
                }
            }
            Ok(Value::Bool(false))
        }
        Builtin::Implies => {
            // right associative: a => (b => c)
            for i in 0..n.saturating_sub(1) {
                if !want_bool(arg(i)?)? {
                    return Ok(Value::Bool(true));
                }
            }
            Ok(Value::Bool(want_bool(arg(n - 1)?)?))
        }
        _ => {
            let vals = (0..n).map(arg).collect::<Result<Vec<_>, _>>()?;
            apply_builtin(b, vals)
        }
    }
}

fn ints(b: Builtin, vals: Vec<Value>) -> Result<Vec<BigInt>, FormulaError> {
    vals.into_iter()
        .map(|v| match v {
            Value::Int(n) => Ok(n),
            other => Err(FormulaError::SortMismatch(format!("`{b}` expects Int, got {other}"))),
        })
        .collect()
}

fn bvs(b: Builtin, vals: Vec<Value>) -> Result<(u32, Vec<BitVec>), FormulaError> {
    let mut width = None;
    let mut out = Vec::with_capacity(vals.len());
    for v in vals {
        match v {
            Value::BitVec(x) if width.map_or(true, |w| w == x.width()) => {
                width = Some(x.width());
                out.push(x);
            }
            other => {
                return Err(FormulaError::SortMismatch(format!("`{b}` expects matching bit-vectors, got {other}")))
            }
        }
    }
    width
        .map(|w| (w, out))
        .ok_or_else(|| FormulaError::SortMismatch(format!("`{b}` needs arguments")))
}

fn strs(b: Builtin, vals: Vec<Value>) -> Result<Vec<String>, FormulaError> {
    vals.into_iter()
        .map(|v| match v {
            Value::Str(s) => Ok(s),
            other => Err(FormulaError::SortMismatch(format!("`{b}` expects String, got {other}"))),
        })
        .collect()
}

fn chain<T>(xs: &[T], rel: impl Fn(&T, &T) -> bool) -> Value {
    Value::Bool(xs.windows(2).all(|w| rel(&w[0], &w[1])))
}

fn two<T: Clone>(b: Builtin, xs: &[T]) -> Result<(T, T), FormulaError> {
    match xs {
        [a, c] => Ok((a.clone(), c.clone())),
        _ => Err(FormulaError::SortMismatch(format!("`{b}` expects 2 arguments"))),
    }
}

/// Euclidean quotient and remainder.
pub fn div_mod_euclid(a: &BigInt, d: &BigInt) -> Result<(BigInt, BigInt), FormulaError> {
    if d.is_zero() {
        return Err(FormulaError::DivByZero);
    }
    let r = a.mod_floor(&d.abs());
    let q = (a - &r) / d;
    Ok((q, r))
}

fn shift_amount(x: &BitVec) -> Option<u32> {
    x.value().to_u32().filter(|&s| s < x.width())
}

pub fn apply_builtin(b: Builtin, vals: Vec<Value>) -> Result<Value, FormulaError> {
    use Builtin::*;
    Ok(match b {
        Ite | And | Or | Implies => {
            let n = vals.len();
            let mut it = vals.into_iter().map(Some).collect::<Vec<_>>();
            return apply_lazy(b, n, &mut |i| Ok(it[i].take().expect("each argument read once")));
        }
        Not => match vals.as_slice() {
            [Value::Bool(x)] => Value::Bool(!x),
            _ => return Err(FormulaError::SortMismatch("`not` expects one Bool".into())),
        },
        Xor => {
            let mut acc = false;
            for v in vals {
                acc ^= want_bool(v)?;
            }
            Value::Bool(acc)
        }
        Eq => {
            if vals.iter().any(|v| std::mem::discriminant(v) != std::mem::discriminant(&vals[0])) {
                return Err(FormulaError::SortMismatch("`=` on different sorts".into()));
            }
            chain(&vals, |a, c| a == c)
        }
        Distinct => {
            let all = vals.iter().enumerate().all(|(i, a)| vals[i + 1..].iter().all(|c| a != c));
            Value::Bool(all)
        }
        Add => Value::Int(ints(b, vals)?.into_iter().sum()),
        Mul => Value::Int(ints(b, vals)?.into_iter().product()),
        Sub => {
            let xs = ints(b, vals)?;
            match xs.split_first() {
                Some((x, [])) => Value::Int(-x),
                Some((x, rest)) => Value::Int(rest.iter().fold(x.clone(), |acc, y| acc - y)),
                None => return Err(FormulaError::SortMismatch("`-` needs arguments".into())),
            }
        }
        Div => {
            let (x, y) = two(b, &ints(b, vals)?)?;
            Value::Int(div_mod_euclid(&x, &y)?.0)
        }
        Mod => {
            let (x, y) = two(b, &ints(b, vals)?)?;
            Value::Int(div_mod_euclid(&x, &y)?.1)
        }
        Abs => match ints(b, vals)?.as_slice() {
            [x] => Value::Int(x.abs()),
            _ => return Err(FormulaError::SortMismatch("`abs` expects one Int".into())),
        },
        Lt => chain(&ints(b, vals)?, |x, y| x < y),
        Le => chain(&ints(b, vals)?, |x, y| x <= y),
        Gt => chain(&ints(b, vals)?, |x, y| x > y),
        Ge => chain(&ints(b, vals)?, |x, y| x >= y),
        BvNot | BvNeg => {
            let (w, xs) = bvs(b, vals)?;
            let [x] = xs.as_slice() else {
                return Err(FormulaError::SortMismatch(format!("`{b}` expects one argument")));
            };
            let v = if b == BvNot {
                BitVec::mask(w) ^ x.value()
            } else {
                (BitVec::mask(w) + BigUint::one() - x.value()) & BitVec::mask(w)
            };
            Value::BitVec(BitVec::new(w, v))
        }
        BvAdd | BvSub | BvMul | BvUdiv | BvUrem | BvAnd | BvOr | BvXor | BvShl | BvLshr | BvAshr => {
            let (w, xs) = bvs(b, vals)?;
            let (x, y) = two(b, &xs)?;
            let m = BitVec::mask(w);
            let modulus = &m + BigUint::one();
            let (xv, yv) = (x.value(), y.value());
            let r = match b {
                BvAdd => xv + yv,
                BvSub => xv + (&modulus - yv),
                BvMul => xv * yv,
                BvUdiv if yv.is_zero() => m.clone(),
                BvUdiv => xv / yv,
                BvUrem if yv.is_zero() => xv.clone(),
                BvUrem => xv % yv,
                BvAnd => xv & yv,
                BvOr => xv | yv,
                BvXor => xv ^ yv,
                BvShl => shift_amount(&y).map_or_else(BigUint::zero, |s| xv << s),
                BvLshr => shift_amount(&y).map_or_else(BigUint::zero, |s| xv >> s),
                _ => {
                    let s = shift_amount(&y).unwrap_or(w);
                    let shifted = x.signed() >> s;
                    return Ok(Value::BitVec(BitVec::from_bigint(w, &shifted)));
                }
            };
            Value::BitVec(BitVec::new(w, r))
        }
        BvUlt | BvUle | BvUgt | BvUge => {
            let (_, xs) = bvs(b, vals)?;
            let (x, y) = two(b, &xs)?;
            let (x, y) = (x.value(), y.value());
            Value::Bool(match b {
                BvUlt => x < y,
                BvUle => x <= y,
                BvUgt => x > y,
                _ => x >= y,
            })
        }
        BvSlt | BvSle | BvSgt | BvSge => {
            let (_, xs) = bvs(b, vals)?;
            let (x, y) = two(b, &xs)?;
            let (x, y) = (x.signed(), y.signed());
            Value::Bool(match b {
                BvSlt => x < y,
                BvSle => x <= y,
                BvSgt => x > y,
                _ => x >= y,
            })
        }
        StrConcat => Value::Str(strs(b, vals)?.concat()),
        StrLen => match strs(b, vals)?.as_slice() {
            [s] => Value::Int(BigInt::from(s.chars().count())),
            _ => return Err(FormulaError::SortMismatch("`str.len` expects one String".into())),
        },
        StrContains => {
            let (s, t) = two(b, &strs(b, vals)?)?;
            Value::Bool(s.contains(t.as_str()))
        }
        StrAt => match vals.as_slice() {
            [Value::Str(s), Value::Int(i)] => {
                let c = i.to_usize().and_then(|i| s.chars().nth(i));
                Value::Str(c.map(String::from).unwrap_or_default())
            }
            _ => return Err(FormulaError::SortMismatch("`str.at` expects String and Int".into())),
        },
    })
}

/// A value of `sort` read from a literal s-expression, e.g. a model entry
/// or an example argument.
pub fn value_from_sexpr(e: &SExpr, sort: &Sort) -> Option<Value> {
    let v = match e {
        SExpr::Numeral(n) => Value::Int(BigInt::from(n.clone())),
        SExpr::BoolLit(b) => Value::Bool(*b),
        SExpr::StringLit(s) => Value::Str(s.clone()),
        SExpr::BitVecLit { width, value } => Value::BitVec(BitVec::new(*width, value.clone())),
        SExpr::List(items) => match items.as_slice() {
            [SExpr::Symbol(m), x] if m == "-" => match value_from_sexpr(x, sort)? {
                Value::Int(n) => Value::Int(-n),
                _ => return None,
            },
            // (_ bvN w)
            [SExpr::Symbol(u), SExpr::Symbol(bv), SExpr::Numeral(w)] if u == "_" && bv.starts_with("bv") => {
                let value: BigUint = bv[2..].parse().ok()?;
                Value::BitVec(BitVec::new(u32::try_from(w).ok()?, value))
            }
            _ => return None,
        },
        _ => return None,
    };
    (v.sort() == *sort).then_some(v)
}

#[cfg(test)]
mod tests;
