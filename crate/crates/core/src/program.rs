//! Program terms of the user-defined language and the grammars that
//! generate them.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::problem::{ConstructorId, SynthesisProblem};
use crate::sexpr::{read_sexprs, SExpr};

/// A possibly partial program. Subterms are shared, so cloning is cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProgramTerm {
    Node(Arc<Node>),
    /// A placeholder labeled by a grammar nonterminal.
    Hole(Arc<str>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub ctor: ConstructorId,
    pub children: Vec<ProgramTerm>,
}

impl ProgramTerm {
    pub fn node(ctor: ConstructorId, children: Vec<ProgramTerm>) -> Self {
        ProgramTerm::Node(Arc::new(Node { ctor, children }))
    }

    pub fn hole(nonterminal: &str) -> Self {
        ProgramTerm::Hole(nonterminal.into())
    }

    pub fn is_complete(&self) -> bool {
        match self {
            ProgramTerm::Hole(_) => false,
            ProgramTerm::Node(n) => n.children.iter().all(ProgramTerm::is_complete),
        }
    }

    /// Node count, holes excluded.
    pub fn size(&self) -> usize {
        match self {
            ProgramTerm::Hole(_) => 0,
            ProgramTerm::Node(n) => 1 + n.children.iter().map(ProgramTerm::size).sum::<usize>(),
        }
    }

    pub fn hole_count(&self) -> usize {
        match self {
            ProgramTerm::Hole(_) => 1,
            ProgramTerm::Node(n) => n.children.iter().map(ProgramTerm::hole_count).sum(),
        }
    }

    /// A leaf has height 1; holes count as leaves.
    pub fn height(&self) -> usize {
        match self {
            ProgramTerm::Hole(_) => 1,
            ProgramTerm::Node(n) => 1 + n.children.iter().map(ProgramTerm::height).max().unwrap_or(0),
        }
    }

    pub fn to_sexpr(&self, problem: &SynthesisProblem) -> SExpr {
        match self {
            ProgramTerm::Hole(nt) => SExpr::list([SExpr::symbol("??"), SExpr::symbol(&**nt)]),
            ProgramTerm::Node(n) => {
                let op = SExpr::symbol(problem.constructor(n.ctor).operator.clone());
                if n.children.is_empty() {
                    op
                } else {
                    SExpr::list(
                        std::iter::once(op).chain(n.children.iter().map(|c| c.to_sexpr(problem))),
                    )
                }
            }
        }
    }

    pub fn display<'a>(&'a self, problem: &'a SynthesisProblem) -> impl fmt::Display + 'a {
        struct D<'a>(&'a ProgramTerm, &'a SynthesisProblem);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0.to_sexpr(self.1))
            }
        }
        D(self, problem)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermParseError {
    #[error("could not read term: {0}")]
    Read(String),
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(String),
    #[error("`{op}` takes {expected} children, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("`{op}` builds {got}, expected {expected}")]
    TermType { op: String, expected: String, got: String },
    #[error("malformed term `{0}`")]
    Malformed(String),
    #[error("expected exactly one term")]
    NotOneTerm,
}

/// Parses a term of `term_type`. Accepts a bare term, `(define-fun f ()
/// T term)`, or that definition wrapped in one more list, which is the
/// shape solutions are printed in. Holes are written `(?? N)`.
pub fn parse_term(
    problem: &SynthesisProblem,
    text: &str,
    term_type: &str,
) -> Result<ProgramTerm, TermParseError> {
    let exprs = read_sexprs(text).map_err(|e| TermParseError::Read(e.to_string()))?;
    let [e] = exprs.as_slice() else {
        return Err(TermParseError::NotOneTerm);
    };
    term_from_sexpr(problem, unwrap_definition(e), term_type)
}

fn unwrap_definition(e: &SExpr) -> &SExpr {
    match e.as_list() {
        Some([inner]) if inner.head() == Some("define-fun") => unwrap_definition(inner),
        Some([head, _, _, _, body]) if head.as_symbol() == Some("define-fun") => body,
        _ => e,
    }
}

pub fn term_from_sexpr(
    problem: &SynthesisProblem,
    e: &SExpr,
    term_type: &str,
) -> Result<ProgramTerm, TermParseError> {
    let (op, args) = match e {
        SExpr::Symbol(s) => (s.as_str(), &[][..]),
        SExpr::List(items) => match items.as_slice() {
            [SExpr::Symbol(q), SExpr::Symbol(nt)] if q == "??" => return Ok(ProgramTerm::hole(nt)),
            [SExpr::Symbol(op), rest @ ..] => (op.as_str(), rest),
            _ => return Err(TermParseError::Malformed(e.to_string())),
        },
        _ => return Err(TermParseError::Malformed(e.to_string())),
    };
    let id = problem
        .constructor_id(op)
        .ok_or_else(|| TermParseError::UnknownConstructor(op.to_string()))?;
    let owner = problem.constructor_term_type(id);
    if owner != term_type {
        return Err(TermParseError::TermType {
            op: op.to_string(),
            expected: term_type.to_string(),
            got: owner.to_string(),
        });
    }
    let ctor = problem.constructor(id);
    if ctor.children.len() != args.len() {
        return Err(TermParseError::Arity {
            op: op.to_string(),
            expected: ctor.children.len(),
            got: args.len(),
        });
    }
    let children = args
        .iter()
        .zip(&ctor.children)
        .map(|(a, tt)| term_from_sexpr(problem, a, tt))
        .collect::<Result<_, _>>()?;
    Ok(ProgramTerm::node(id, children))
}

/// Prints a solution as `((define-fun name () T term))`.
pub fn solution_text(problem: &SynthesisProblem, term: &ProgramTerm) -> String {
    let t = problem.target();
    format!("((define-fun {} () {} {}))", t.name, t.term_type, term.display(problem))
}

/// A grammar with names resolved to indices, ready for enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumGrammar {
    pub nonterminals: Vec<Nonterminal>,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonterminal {
    pub name: Arc<str>,
    pub term_type: String,
    pub productions: Vec<EnumProduction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumProduction {
    pub ctor: ConstructorId,
    /// Nonterminal indices.
    pub children: Vec<usize>,
}

impl EnumGrammar {
    /// The `synth-fun` grammar, or the whole term universe when the target
    /// has none (one nonterminal per term type, named after it).
    pub fn for_problem(problem: &SynthesisProblem) -> Self {
        match &problem.target().grammar {
            Some(g) => {
                let index = |n: &str| g.nonterminals.iter().position(|(m, _)| m == n).unwrap();
                let nonterminals = g
                    .nonterminals
                    .iter()
                    .map(|(name, tt)| Nonterminal {
                        name: name.as_str().into(),
                        term_type: tt.clone(),
                        productions: g.rules[name]
                            .iter()
                            .map(|p| EnumProduction {
                                ctor: problem.constructor_id(&p.constructor).unwrap(),
                                children: p.children.iter().map(|c| index(c)).collect(),
                            })
                            .collect(),
                    })
                    .collect();
                EnumGrammar { nonterminals, start: 0 }
            }
            None => {
                let tts = problem.term_types();
                let index = |n: &str| tts.iter().position(|t| t.name == n).unwrap();
                let nonterminals = tts
                    .iter()
                    .map(|tt| Nonterminal {
                        name: tt.name.as_str().into(),
                        term_type: tt.name.clone(),
                        productions: tt
                            .constructors
                            .iter()
                            .map(|c| EnumProduction {
                                ctor: problem.constructor_id(&c.operator).unwrap(),
                                children: c.children.iter().map(|ch| index(ch)).collect(),
                            })
                            .collect(),
                    })
                    .collect();
                EnumGrammar { nonterminals, start: index(&problem.target().term_type) }
            }
        }
    }

    /// Restarts the grammar at another nonterminal, dropping the
    /// nonterminals it cannot reach.
    pub fn with_start(self, nonterminal: &str) -> Option<Self> {
        let start = self.nonterminal(nonterminal)?;
        let mut reach = vec![false; self.nonterminals.len()];
        let mut work = vec![start];
        reach[start] = true;
        while let Some(n) = work.pop() {
            for p in &self.nonterminals[n].productions {
                for &c in &p.children {
                    if !reach[c] {
                        reach[c] = true;
                        work.push(c);
                    }
                }
            }
        }
        let mut renumber = vec![usize::MAX; reach.len()];
        let mut next = 0;
        for (i, r) in reach.iter().enumerate() {
            if *r {
                renumber[i] = next;
                next += 1;
            }
        }
        let nonterminals = self
            .nonterminals
            .into_iter()
            .zip(&reach)
            .filter(|(_, r)| **r)
            .map(|(mut n, _)| {
                for p in &mut n.productions {
                    for c in &mut p.children {
                        *c = renumber[*c];
                    }
                }
                n
            })
            .collect();
        Some(EnumGrammar { nonterminals, start: renumber[start] })
    }

    pub fn nonterminal(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|n| &*n.name == name)
    }

    pub fn max_arity(&self) -> usize {
        self.nonterminals
            .iter()
            .flat_map(|n| n.productions.iter().map(|p| p.children.len()))
            .max()
            .unwrap_or(0)
    }

    /// Whether `term` derives from nonterminal `nt`; holes must name the
    /// nonterminal they stand for.
    pub fn derives(&self, nt: usize, term: &ProgramTerm) -> bool {
        match term {
            ProgramTerm::Hole(h) => *self.nonterminals[nt].name == **h,
            ProgramTerm::Node(n) => self.nonterminals[nt].productions.iter().any(|p| {
                p.ctor == n.ctor
                    && p.children.len() == n.children.len()
                    && p.children.iter().zip(&n.children).all(|(&c, t)| self.derives(c, t))
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::parse_problem;

    const MUL: &str = include_str!("../../../benchmarks/semgus/imp-mul.sem");
    pub(crate) const MUL_SOLUTION: &str = "((define-fun mul () F ($function
        ($while ($< $0 $y)
            ($seq ($y<- ($- $y $1))
                  ($r<- ($+ $r $x))))
        $r)))";

    #[test]
    fn parses_solution_listing() {
        let p = parse_problem(MUL).unwrap();
        let t = parse_term(&p, MUL_SOLUTION, "F").unwrap();
        assert!(t.is_complete());
        assert_eq!(t.size(), 15);
        assert_eq!(t.height(), 6);
        assert_eq!(
            t.display(&p).to_string(),
            "($function ($while ($< $0 $y) ($seq ($y<- ($- $y $1)) ($r<- ($+ $r $x)))) $r)"
        );
        assert_eq!(parse_term(&p, &solution_text(&p, &t), "F").unwrap(), t);
    }

    #[test]
    fn holes_and_errors() {
        let p = parse_problem(MUL).unwrap();
        let t = parse_term(&p, "($+ (?? E) $x)", "E").unwrap();
        assert!(!t.is_complete());
        assert_eq!((t.size(), t.hole_count()), (2, 1));
        assert!(matches!(parse_term(&p, "($+ $x)", "E"), Err(TermParseError::Arity { .. })));
        assert!(matches!(parse_term(&p, "$noop", "E"), Err(TermParseError::TermType { .. })));
        assert!(matches!(parse_term(&p, "$nope", "E"), Err(TermParseError::UnknownConstructor(_))));
    }

    #[test]
    fn universe_grammar() {
        let p = parse_problem(MUL).unwrap();
        let g = EnumGrammar::for_problem(&p);
        assert_eq!(&*g.nonterminals[g.start].name, "F");
        assert_eq!(g.max_arity(), 2);
        let e = g.nonterminal("E").unwrap();
        assert_eq!(g.nonterminals[e].productions.len(), 7);
        let t = parse_term(&p, MUL_SOLUTION, "F").unwrap();
        assert!(g.derives(g.start, &t));
        let e = g.with_start("E").unwrap();
        assert_eq!(e.nonterminals.len(), 1);
        assert_eq!(e.start, 0);
    }
}
