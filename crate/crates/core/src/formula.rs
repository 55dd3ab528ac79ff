//! Quantifier-free formulas over Int, Bool, BitVec and String, plus the
//! quantified forms that may appear in top-level constraints.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use num_bigint::{BigInt, BigUint, Sign};
use thiserror::Error;

use crate::sexpr::SExpr;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    BitVec(u32),
    String,
    /// A term type of the user-defined language.
    Term(String),
}

impl Sort {
    pub fn is_term(&self) -> bool {
        matches!(self, Sort::Term(_))
    }

    pub fn to_sexpr(&self) -> SExpr {
        match self {
            Sort::Int => SExpr::symbol("Int"),
            Sort::Bool => SExpr::symbol("Bool"),
            Sort::String => SExpr::symbol("String"),
            Sort::BitVec(w) => SExpr::list([
                SExpr::symbol("_"),
                SExpr::symbol("BitVec"),
                SExpr::num(u64::from(*w)),
            ]),
            Sort::Term(name) => SExpr::symbol(name.clone()),
        }
    }

    /// Parses a value sort; other symbols are treated as term types when
    /// `is_term_type` accepts them.
    pub fn from_sexpr(e: &SExpr, is_term_type: impl Fn(&str) -> bool) -> Option<Sort> {
        match e {
            SExpr::Symbol(s) => match s.as_str() {
                "Int" => Some(Sort::Int),
                "Bool" => Some(Sort::Bool),
                "String" => Some(Sort::String),
                other if is_term_type(other) => Some(Sort::Term(other.to_string())),
                _ => None,
            },
            SExpr::List(items) => match items.as_slice() {
                [SExpr::Symbol(u), SExpr::Symbol(bv), SExpr::Numeral(w)]
                    if u == "_" && bv == "BitVec" =>
                {
                    let w = u32::try_from(w).ok()?;
                    (w > 0).then_some(Sort::BitVec(w))
                }
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sexpr())
    }
}

/// A fixed-width bitvector; `value < 2^width` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    width: u32,
    value: BigUint,
}

impl BitVec {
    /// Builds a bitvector, reducing `value` modulo `2^width`.
    pub fn new(width: u32, value: BigUint) -> Self {
        assert!(width > 0, "bitvector width must be positive");
        let value = value & Self::mask(width);
        BitVec { width, value }
    }

    pub fn from_u64(width: u32, value: u64) -> Self {
        Self::new(width, BigUint::from(value))
    }

    /// Reduces a signed integer modulo `2^width`.
    pub fn from_bigint(width: u32, value: &BigInt) -> Self {
        let modulus = BigInt::from(1u8) << width;
        let r = ((value % &modulus) + &modulus) % &modulus;
        Self::new(width, r.to_biguint().expect("nonnegative after reduction"))
    }

    pub fn mask(width: u32) -> BigUint {
        (BigUint::from(1u8) << width) - 1u8
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// Two's complement interpretation.
    pub fn signed(&self) -> BigInt {
        let v = BigInt::from(self.value.clone());
        if self.value.bit(u64::from(self.width) - 1) {
            v - (BigInt::from(1u8) << self.width)
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Int(BigInt),
    Bool(bool),
    BitVec(BitVec),
    Str(String),
}

impl Literal {
    pub fn sort(&self) -> Sort {
        match self {
            Literal::Int(_) => Sort::Int,
            Literal::Bool(_) => Sort::Bool,
            Literal::BitVec(bv) => Sort::BitVec(bv.width()),
            Literal::Str(_) => Sort::String,
        }
    }

    pub fn to_sexpr(&self) -> SExpr {
        match self {
            Literal::Int(n) => {
                let mag = SExpr::Numeral(n.magnitude().clone());
                if n.sign() == Sign::Minus {
                    SExpr::list([SExpr::symbol("-"), mag])
                } else {
                    mag
                }
            }
            Literal::Bool(b) => SExpr::BoolLit(*b),
            Literal::BitVec(bv) => {
                SExpr::BitVecLit { width: bv.width(), value: bv.value().clone() }
            }
            Literal::Str(s) => SExpr::StringLit(s.clone()),
        }
    }
}

macro_rules! builtins {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Interpreted operators.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Builtin { $($variant),* }

        impl Builtin {
            pub fn name(self) -> &'static str {
                match self { $(Builtin::$variant => $name),* }
            }

            pub fn from_name(name: &str) -> Option<Builtin> {
                match name { $($name => Some(Builtin::$variant),)* _ => None }
            }
        }
    };
}

builtins! {
    And => "and", Or => "or", Not => "not", Implies => "=>", Xor => "xor",
    Ite => "ite", Eq => "=", Distinct => "distinct",
    Add => "+", Sub => "-", Mul => "*", Div => "div", Mod => "mod", Abs => "abs",
    Lt => "<", Le => "<=", Gt => ">", Ge => ">=",
    BvAdd => "bvadd", BvSub => "bvsub", BvMul => "bvmul", BvUdiv => "bvudiv",
    BvUrem => "bvurem", BvAnd => "bvand", BvOr => "bvor", BvXor => "bvxor",
    BvNot => "bvnot", BvNeg => "bvneg", BvShl => "bvshl", BvLshr => "bvlshr",
    BvAshr => "bvashr", BvUlt => "bvult", BvUle => "bvule", BvUgt => "bvugt",
    BvUge => "bvuge", BvSlt => "bvslt", BvSle => "bvsle", BvSgt => "bvsgt",
    BvSge => "bvsge",
    StrConcat => "str.++", StrLen => "str.len", StrAt => "str.at",
    StrContains => "str.contains",
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    Builtin(Builtin),
    /// Application of a semantic relation; its term position holds a
    /// variable naming a term (the synthesis target, or a CHC term variable).
    Relation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Lit(Literal),
    App(Op, Vec<Term>),
    Quant(Quantifier, Vec<(String, Sort)>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn int(n: i64) -> Term {
        Term::Lit(Literal::Int(BigInt::from(n)))
    }

    pub fn bool(b: bool) -> Term {
        Term::Lit(Literal::Bool(b))
    }

    pub fn app(op: Builtin, args: Vec<Term>) -> Term {
        Term::App(Op::Builtin(op), args)
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::app(Builtin::Eq, vec![a, b])
    }

    /// Conjunction, flattening the trivial cases.
    pub fn and(mut conjuncts: Vec<Term>) -> Term {
        match conjuncts.len() {
            0 => Term::bool(true),
            1 => conjuncts.pop().unwrap(),
            _ => Term::app(Builtin::And, conjuncts),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Lit(Literal::Bool(true)))
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Term> {
        match self {
            Term::App(Op::Builtin(Builtin::And), args) => {
                args.iter().flat_map(|a| a.conjuncts()).collect()
            }
            t if t.is_true() => Vec::new(),
            t => vec![t],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Term::Lit(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
            Term::Quant(_, vars, body) => {
                let n = bound.len();
                bound.extend(vars.iter().map(|(v, _)| v.clone()));
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Term::Quant(..) => true,
            Term::App(_, args) => args.iter().any(Term::has_quantifier),
            _ => false,
        }
    }

    pub fn mentions_relation(&self) -> bool {
        match self {
            Term::App(Op::Relation(_), _) => true,
            Term::App(_, args) => args.iter().any(Term::mentions_relation),
            Term::Quant(_, _, body) => body.mentions_relation(),
            _ => false,
        }
    }

    /// Capture-unaware substitution of free variables; callers only
    /// substitute closed terms or fresh names.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => map(v).unwrap_or_else(|| self.clone()),
            Term::Lit(_) => self.clone(),
            Term::App(op, args) => {
                Term::App(op.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
            Term::Quant(q, vars, body) => {
                let shadow = |v: &str| {
                    if vars.iter().any(|(b, _)| b == v) {
                        None
                    } else {
                        map(v)
                    }
                };
                Term::Quant(*q, vars.clone(), Box::new(body.substitute(&shadow)))
            }
        }
    }

    pub fn to_sexpr(&self) -> SExpr {
        match self {
            Term::Var(v) => SExpr::symbol(v.clone()),
            Term::Lit(l) => l.to_sexpr(),
            Term::App(op, args) => {
                let head = match op {
                    Op::Builtin(b) => SExpr::symbol(b.name()),
                    Op::Relation(r) => SExpr::symbol(r.clone()),
                };
                SExpr::list(std::iter::once(head).chain(args.iter().map(Term::to_sexpr)))
            }
            Term::Quant(q, vars, body) => SExpr::list([
                SExpr::symbol(q.keyword()),
                sorted_vars_sexpr(vars),
                body.to_sexpr(),
            ]),
        }
    }
}

pub fn sorted_vars_sexpr(vars: &[(String, Sort)]) -> SExpr {
    SExpr::list(
        vars.iter()
            .map(|(v, s)| SExpr::list([SExpr::symbol(v.clone()), s.to_sexpr()])),
    )
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sexpr())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unknown function symbol `{0}`")]
    UnknownSymbol(String),
    #[error("malformed term `{0}`")]
    Malformed(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
}

/// Converts an s-expression to a term. `is_relation` decides which heads
/// are semantic relations; `is_term_type` resolves quantifier sorts.
pub fn term_from_sexpr(
    e: &SExpr,
    is_relation: &dyn Fn(&str) -> bool,
    is_term_type: &dyn Fn(&str) -> bool,
) -> Result<Term, TermError> {
    match e {
        SExpr::Symbol(s) => Ok(Term::Var(s.clone())),
        SExpr::Numeral(n) => Ok(Term::Lit(Literal::Int(BigInt::from(n.clone())))),
        SExpr::BoolLit(b) => Ok(Term::bool(*b)),
        SExpr::StringLit(s) => Ok(Term::Lit(Literal::Str(s.clone()))),
        SExpr::BitVecLit { width, value } => {
            Ok(Term::Lit(Literal::BitVec(BitVec::new(*width, value.clone()))))
        }
        SExpr::Keyword(_) => Err(TermError::Malformed(e.to_string())),
        SExpr::List(items) => {
            let Some((head, rest)) = items.split_first() else {
                return Err(TermError::Malformed(e.to_string()));
            };
            let Some(head) = head.as_symbol() else {
                return Err(TermError::Malformed(e.to_string()));
            };
            if head == "forall" || head == "exists" {
                let [vars, body] = rest else {
                    return Err(TermError::Malformed(e.to_string()));
                };
                let vars = parse_sorted_vars(vars, is_term_type)?;
                let q = if head == "forall" { Quantifier::Forall } else { Quantifier::Exists };
                let body = term_from_sexpr(body, is_relation, is_term_type)?;
                return Ok(Term::Quant(q, vars, Box::new(body)));
            }
            if head == "-" {
                if let [SExpr::Numeral(n)] = rest {
                    return Ok(Term::Lit(Literal::Int(-BigInt::from(n.clone()))));
                }
            }
            if head == "!" {
                // annotations carry no meaning inside formulas
                return match rest.first() {
                    Some(inner) => term_from_sexpr(inner, is_relation, is_term_type),
                    None => Err(TermError::Malformed(e.to_string())),
                };
            }
            let op = if let Some(b) = Builtin::from_name(head) {
                Op::Builtin(b)
            } else if is_relation(head) {
                Op::Relation(head.to_string())
            } else {
                return Err(TermError::UnknownSymbol(head.to_string()));
            };
            let args = rest
                .iter()
                .map(|a| term_from_sexpr(a, is_relation, is_term_type))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::App(op, args))
        }
    }
}

pub fn parse_sorted_vars(
    e: &SExpr,
    is_term_type: &dyn Fn(&str) -> bool,
) -> Result<Vec<(String, Sort)>, TermError> {
    let items = e.as_list().ok_or_else(|| TermError::Malformed(e.to_string()))?;
    items
        .iter()
        .map(|item| match item.as_list() {
            Some([SExpr::Symbol(v), sort]) => Sort::from_sexpr(sort, is_term_type)
                .map(|s| (v.clone(), s))
                .ok_or_else(|| TermError::UnknownSort(sort.to_string())),
            _ => Err(TermError::Malformed(item.to_string())),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("ill-sorted term `{term}`: {reason}")]
    IllSorted { term: String, reason: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

fn ill(t: &Term, reason: impl Into<String>) -> SortError {
    SortError::IllSorted { term: t.to_string(), reason: reason.into() }
}

/// Variable sorts plus relation signatures for sort checking.
#[derive(Debug, Clone, Default)]
pub struct SortEnv<'a> {
    pub vars: IndexMap<String, Sort>,
    pub relations: Option<&'a IndexMap<String, Vec<Sort>>>,
}

impl<'a> SortEnv<'a> {
    pub fn new(vars: impl IntoIterator<Item = (String, Sort)>) -> Self {
        SortEnv { vars: vars.into_iter().collect(), relations: None }
    }
}

/// Infers the sort of `t`, rejecting ill-sorted applications.
pub fn formula_sort(t: &Term, env: &SortEnv<'_>) -> Result<Sort, SortError> {
    match t {
        Term::Var(v) => env.vars.get(v).cloned().ok_or_else(|| SortError::Unbound(v.clone())),
        Term::Lit(l) => Ok(l.sort()),
        Term::Quant(_, vars, body) => {
            let mut inner = env.clone();
            for (v, s) in vars {
                inner.vars.insert(v.clone(), s.clone());
            }
            match formula_sort(body, &inner)? {
                Sort::Bool => Ok(Sort::Bool),
                s => Err(ill(t, format!("quantifier body has sort {s}"))),
            }
        }
        Term::App(Op::Relation(r), args) => {
            let sig = env
                .relations
                .and_then(|sigs| sigs.get(r).cloned())
                .ok_or_else(|| ill(t, format!("unknown relation {r}")))?;
            if sig.len() != args.len() {
                return Err(ill(t, format!("{r} expects {} arguments", sig.len())));
            }
            for (a, s) in args.iter().zip(&sig) {
                let got = formula_sort(a, env)?;
                if &got != s {
                    return Err(ill(t, format!("argument `{a}` has sort {got}, expected {s}")));
                }
            }
            Ok(Sort::Bool)
        }
        Term::App(Op::Builtin(b), args) => {
            let sorts = args.iter().map(|a| formula_sort(a, env)).collect::<Result<Vec<_>, _>>()?;
            builtin_sort(*b, &sorts).map_err(|reason| ill(t, reason))
        }
    }
}

/// Result sort of a builtin applied to arguments of the given sorts.
pub fn builtin_sort(b: Builtin, args: &[Sort]) -> Result<Sort, String> {
    use Builtin::*;
    let all = |want: &Sort| args.iter().all(|s| s == want);
    let same_bv = || match args.first() {
        Some(Sort::BitVec(w)) if args.iter().all(|s| s == &Sort::BitVec(*w)) => Some(*w),
        _ => None,
    };
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("`{b}` expects {n} arguments, got {}", args.len()))
        }
    };
    match b {
        And | Or | Xor | Implies => {
            if args.len() < 2 && b != And && b != Or {
                return Err(format!("`{b}` expects at least 2 arguments"));
            }
            if all(&Sort::Bool) {
                Ok(Sort::Bool)
            } else {
                Err(format!("`{b}` expects Bool arguments"))
            }
        }
        Not => {
            arity(1)?;
            if all(&Sort::Bool) {
                Ok(Sort::Bool)
            } else {
                Err("`not` expects a Bool argument".into())
            }
        }
        Ite => {
            arity(3)?;
            if args[0] != Sort::Bool {
                return Err("`ite` condition must be Bool".into());
            }
            if args[1] != args[2] || args[1].is_term() {
                return Err("`ite` branches must share a value sort".into());
            }
            Ok(args[1].clone())
        }
        Eq | Distinct => {
            if args.len() < 2 {
                return Err(format!("`{b}` expects at least 2 arguments"));
            }
            if args.iter().all(|s| s == &args[0]) && !args[0].is_term() {
                Ok(Sort::Bool)
            } else {
                Err(format!("`{b}` arguments must share a value sort"))
            }
        }
        Add | Mul => {
            if args.len() >= 2 && all(&Sort::Int) {
                Ok(Sort::Int)
            } else {
                Err(format!("`{b}` expects at least 2 Int arguments"))
            }
        }
        Sub => {
            if !args.is_empty() && all(&Sort::Int) {
                Ok(Sort::Int)
            } else {
                Err("`-` expects Int arguments".into())
            }
        }
        Div | Mod => {
            arity(2)?;
            if all(&Sort::Int) {
                Ok(Sort::Int)
            } else {
                Err(format!("`{b}` expects Int arguments"))
            }
        }
        Abs => {
            arity(1)?;
            if all(&Sort::Int) {
                Ok(Sort::Int)
            } else {
                Err("`abs` expects an Int argument".into())
            }
        }
        Lt | Le | Gt | Ge => {
            if args.len() >= 2 && all(&Sort::Int) {
                Ok(Sort::Bool)
            } else {
                Err(format!("`{b}` expects Int arguments"))
            }
        }
        BvNot | BvNeg => {
            arity(1)?;
            same_bv().map(Sort::BitVec).ok_or_else(|| format!("`{b}` expects a bitvector"))
        }
        BvAdd | BvSub | BvMul | BvUdiv | BvUrem | BvAnd | BvOr | BvXor | BvShl | BvLshr
        | BvAshr => {
            arity(2)?;
            same_bv()
                .map(Sort::BitVec)
                .ok_or_else(|| format!("`{b}` expects bitvectors of equal width"))
        }
        BvUlt | BvUle | BvUgt | BvUge | BvSlt | BvSle | BvSgt | BvSge => {
            arity(2)?;
            same_bv()
                .map(|_| Sort::Bool)
                .ok_or_else(|| format!("`{b}` expects bitvectors of equal width"))
        }
        StrConcat => {
            if args.len() >= 2 && all(&Sort::String) {
                Ok(Sort::String)
            } else {
                Err("`str.++` expects String arguments".into())
            }
        }
        StrLen => {
            arity(1)?;
            if all(&Sort::String) {
                Ok(Sort::Int)
            } else {
                Err("`str.len` expects a String".into())
            }
        }
        StrAt => {
            arity(2)?;
            if args[0] == Sort::String && args[1] == Sort::Int {
                Ok(Sort::String)
            } else {
                Err("`str.at` expects (String, Int)".into())
            }
        }
        StrContains => {
            arity(2)?;
            if all(&Sort::String) {
                Ok(Sort::Bool)
            } else {
                Err("`str.contains` expects Strings".into())
            }
        }
    }
}
