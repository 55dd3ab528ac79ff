//! Interpretation of SemGuS commands into a validated [`SynthesisProblem`].
//!
//! Recognized commands: `declare-term-types`, `define-funs-rec`,
//! `synth-fun`, `constraint`, `declare-var`, `check-synth`, and any
//! `set-*` command (kept as metadata).

mod json;
mod model;
mod print;

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

pub use json::{parts_to_json, sexpr_from_json, to_json, JSON_VERSION};
pub use model::*;
pub use print::{commands as source_commands, to_semgus_source};

use crate::chc::{desugar_semantics, ChcErrorKind, DesugarContext, MatchArm, SemanticDefinition};
use crate::formula::{formula_sort, term_from_sexpr, Sort, SortEnv, SortError, TermError};
use crate::sexpr::{read_with_spans, ReadError, SExpr, Span, SpanTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisErrorKind {
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("duplicate declaration of `{0}`")]
    DuplicateDeclaration(String),
    #[error("unresolved name `{0}`")]
    UnresolvedName(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("missing (check-synth)")]
    MissingCheckSynth,
    #[error("no synth-fun target declared")]
    AbsentSynthTarget,
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("malformed command: {0}")]
    Malformed(String),
    #[error("bad input/output annotation: {0}")]
    BadAnnotation(String),
    #[error("no semantics for `{0}`")]
    EmptySemantics(String),
    #[error("term type `{0}` has nonzero arity; only arity 0 is supported")]
    UnsupportedArity(String),
    #[error("{0}")]
    Semantics(ChcErrorKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisError {
    pub kind: AnalysisErrorKind,
    pub span: Option<Span>,
    /// The offending expression, printed.
    pub context: String,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = self.span {
            write!(f, "{}: ", span.start)?;
        }
        write!(f, "{}", self.kind)?;
        if !self.context.is_empty() {
            let mut ctx = self.context.clone();
            if ctx.len() > 80 {
                let cut = (0..=77).rev().find(|&i| ctx.is_char_boundary(i)).unwrap_or(0);
                ctx.truncate(cut);
                ctx.push_str("...");
            }
            write!(f, " in `{ctx}`")?;
        }
        Ok(())
    }
}

impl std::error::Error for AnalysisError {}

/// Reading or analysis failure for a whole source file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl ParseError {
    /// 1-based line and column of the diagnostic, when known.
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            ParseError::Read(e) => Some((e.position().line, e.position().column)),
            ParseError::Analysis(e) => e.span.map(|s| (s.start.line, s.start.column)),
        }
    }
}

/// Reads and analyzes SemGuS source text.
pub fn parse_problem(text: &str) -> Result<SynthesisProblem, ParseError> {
    let located = read_with_spans(text)?;
    Ok(analyze_located(&located)?)
}

/// Analyzes already-read commands (no source locations).
pub fn analyze(commands: &[SExpr]) -> Result<SynthesisProblem, AnalysisError> {
    let nodes: Vec<Node<'_>> = commands.iter().map(|e| Node { expr: e, spans: None }).collect();
    Analyzer::default().run(&nodes)
}

pub fn analyze_located(commands: &[(SExpr, SpanTree)]) -> Result<SynthesisProblem, AnalysisError> {
    let nodes: Vec<Node<'_>> =
        commands.iter().map(|(e, s)| Node { expr: e, spans: Some(s) }).collect();
    Analyzer::default().run(&nodes)
}

/// An expression paired with its (optional) source spans.
#[derive(Clone, Copy)]
struct Node<'a> {
    expr: &'a SExpr,
    spans: Option<&'a SpanTree>,
}

impl<'a> Node<'a> {
    fn span(&self) -> Option<Span> {
        self.spans.map(|s| s.span)
    }

    fn items(&self) -> Option<Vec<Node<'a>>> {
        let items = self.expr.as_list()?;
        Some(
            items
                .iter()
                .enumerate()
                .map(|(i, e)| Node { expr: e, spans: self.spans.and_then(|s| s.children.get(i)) })
                .collect(),
        )
    }

    fn symbol(&self) -> Option<&'a str> {
        self.expr.as_symbol()
    }

    fn error(&self, kind: AnalysisErrorKind) -> AnalysisError {
        AnalysisError { kind, span: self.span(), context: self.expr.to_string() }
    }

    fn malformed(&self, what: impl Into<String>) -> AnalysisError {
        self.error(AnalysisErrorKind::Malformed(what.into()))
    }

    fn list(&self, what: &str) -> Result<Vec<Node<'a>>, AnalysisError> {
        self.items().ok_or_else(|| self.malformed(format!("expected a list of {what}")))
    }

    fn sym(&self, what: &str) -> Result<&'a str, AnalysisError> {
        self.symbol().ok_or_else(|| self.malformed(format!("expected {what}")))
    }
}

#[derive(Default)]
struct Analyzer<'a> {
    parts: ProblemParts,
    definitions: Vec<(SemanticDefinition, Node<'a>)>,
    pending_constraints: Vec<Node<'a>>,
    target_node: Option<Node<'a>>,
    grammar_node: Option<Node<'a>>,
}

impl<'a> Analyzer<'a> {
    fn run(mut self, commands: &[Node<'a>]) -> Result<SynthesisProblem, AnalysisError> {
        for cmd in commands {
            self.command(*cmd)?;
        }
        self.finish()
    }

    fn is_term_type(&self, name: &str) -> bool {
        self.parts.term_types.iter().any(|t| t.name == name)
    }

    fn sort(&self, node: Node<'a>) -> Result<Sort, AnalysisError> {
        Sort::from_sexpr(node.expr, |s| self.is_term_type(s))
            .ok_or_else(|| node.error(AnalysisErrorKind::UnresolvedName(node.expr.to_string())))
    }

    fn command(&mut self, cmd: Node<'a>) -> Result<(), AnalysisError> {
        let items = cmd.list("command parts")?;
        let Some(name) = items.first().and_then(Node::symbol) else {
            return Err(cmd.malformed("command must start with a symbol"));
        };
        match name {
            "declare-term-types" => self.declare_term_types(cmd, &items),
            "define-funs-rec" => self.define_funs_rec(cmd, &items),
            "synth-fun" => self.synth_fun(cmd, &items),
            "constraint" => {
                if items.len() != 2 {
                    return Err(cmd.malformed("constraint takes one formula"));
                }
                self.pending_constraints.push(items[1]);
                Ok(())
            }
            "declare-var" => {
                let [_, v, sort] = items.as_slice() else {
                    return Err(cmd.malformed("expected (declare-var name sort)"));
                };
                let v = v.sym("a variable name")?;
                if self.parts.declared_vars.iter().any(|(n, _)| n == v) {
                    return Err(cmd.error(AnalysisErrorKind::DuplicateDeclaration(v.to_string())));
                }
                let sort = self.sort(*sort)?;
                if sort.is_term() {
                    return Err(cmd.malformed("declared variables must have value sorts"));
                }
                self.parts.declared_vars.push((v.to_string(), sort));
                Ok(())
            }
            "check-synth" => {
                self.parts.check_synth = true;
                Ok(())
            }
            s if s.starts_with("set-") => {
                let rest = &cmd.expr.as_list().unwrap()[1..];
                let (key, value) = match rest {
                    [SExpr::Keyword(k), v] => (format!("{s}:{k}"), v.clone()),
                    [SExpr::Keyword(k)] => (format!("{s}:{k}"), SExpr::List(vec![])),
                    [v] => (s.to_string(), v.clone()),
                    vs => (s.to_string(), SExpr::List(vs.to_vec())),
                };
                self.parts.metadata.push((key, value));
                Ok(())
            }
            other => Err(items[0].error(AnalysisErrorKind::UnknownCommand(other.to_string()))),
        }
    }

    fn declare_term_types(&mut self, cmd: Node<'a>, items: &[Node<'a>]) -> Result<(), AnalysisError> {
        let [_, decls, ctor_lists] = items else {
            return Err(cmd.malformed("expected (declare-term-types (decls) (constructors))"));
        };
        let decls = decls.list("term type declarations")?;
        let ctor_lists = ctor_lists.list("constructor lists")?;
        if decls.len() != ctor_lists.len() {
            return Err(cmd.error(AnalysisErrorKind::ArityMismatch(format!(
                "{} term types but {} constructor lists",
                decls.len(),
                ctor_lists.len()
            ))));
        }
        let mut new_types = Vec::new();
        for d in &decls {
            let parts = d.list("(name arity)")?;
            let [name, arity] = parts.as_slice() else {
                return Err(d.malformed("expected (name arity)"));
            };
            let name = name.sym("a term type name")?;
            let arity = match arity.expr {
                SExpr::Numeral(n) => u32::try_from(n).map_err(|_| arity.malformed("arity too large"))?,
                _ => return Err(arity.malformed("expected a numeral arity")),
            };
            if arity != 0 {
                return Err(d.error(AnalysisErrorKind::UnsupportedArity(name.to_string())));
            }
            if self.is_term_type(name) || new_types.iter().any(|t: &TermTypeDecl| t.name == name) {
                return Err(d.error(AnalysisErrorKind::DuplicateDeclaration(name.to_string())));
            }
            new_types.push(TermTypeDecl { name: name.to_string(), arity, constructors: Vec::new() });
        }
        let known = |n: &str, new: &[TermTypeDecl]| {
            self.is_term_type(n) || new.iter().any(|t| t.name == n)
        };
        let mut seen_ops: Vec<String> = self
            .parts
            .term_types
            .iter()
            .flat_map(|t| t.constructors.iter().map(|c| c.operator.clone()))
            .collect();
        for (i, list) in ctor_lists.iter().enumerate() {
            let mut ctors = Vec::new();
            for c in list.list("constructors")? {
                let (op, children) = match c.items() {
                    Some(parts) if !parts.is_empty() => {
                        let op = parts[0].sym("a constructor name")?;
                        let mut ch = Vec::new();
                        for p in &parts[1..] {
                            let tt = p.sym("a term type")?;
                            if !known(tt, &new_types) {
                                return Err(p.error(AnalysisErrorKind::UnresolvedName(tt.to_string())));
                            }
                            ch.push(tt.to_string());
                        }
                        (op, ch)
                    }
                    Some(_) => return Err(c.malformed("empty constructor")),
                    None => (c.sym("a constructor")?, Vec::new()),
                };
                if seen_ops.iter().any(|s| s == op) {
                    return Err(c.error(AnalysisErrorKind::DuplicateDeclaration(op.to_string())));
                }
                seen_ops.push(op.to_string());
                ctors.push(Constructor { operator: op.to_string(), children });
            }
            new_types[i].constructors = ctors;
        }
        self.parts.term_types.extend(new_types);
        Ok(())
    }

    fn define_funs_rec(&mut self, cmd: Node<'a>, items: &[Node<'a>]) -> Result<(), AnalysisError> {
        let [_, sigs, bodies] = items else {
            return Err(cmd.malformed("expected (define-funs-rec (signatures) (bodies))"));
        };
        let sigs = sigs.list("signatures")?;
        let bodies = bodies.list("bodies")?;
        if sigs.len() != bodies.len() {
            return Err(cmd.error(AnalysisErrorKind::ArityMismatch(format!(
                "{} signatures but {} bodies",
                sigs.len(),
                bodies.len()
            ))));
        }
        let first_new = self.parts.relations.len();
        for sig in &sigs {
            let rel = self.relation_signature(*sig)?;
            if self.parts.relations.iter().any(|r| r.name == rel.name) {
                return Err(sig.error(AnalysisErrorKind::DuplicateDeclaration(rel.name)));
            }
            self.parts.relations.push(rel);
        }
        for (k, body) in bodies.iter().enumerate() {
            let ri = first_new + k;
            let (inner, annotations) = match body.items() {
                Some(parts) if parts.first().and_then(Node::symbol) == Some("!") => {
                    if parts.len() < 2 {
                        return Err(body.malformed("empty annotation"));
                    }
                    (parts[1], parts[2..].to_vec())
                }
                _ => (*body, Vec::new()),
            };
            self.apply_annotations(ri, *body, &annotations)?;
            let def = self.match_definition(ri, inner)?;
            self.definitions.push((def, *body));
        }
        Ok(())
    }

    fn relation_signature(&self, sig: Node<'a>) -> Result<SemanticRelation, AnalysisError> {
        let parts = sig.list("(name (params) Bool)")?;
        let [name, params, ret] = parts.as_slice() else {
            return Err(sig.malformed("expected (name ((param sort) ...) Bool)"));
        };
        let name = name.sym("a relation name")?;
        if ret.symbol() != Some("Bool") {
            return Err(ret.error(AnalysisErrorKind::SortMismatch(format!(
                "semantic relation `{name}` must return Bool"
            ))));
        }
        let mut out = Vec::new();
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (i, p) in params.list("parameters")?.iter().enumerate() {
            let pp = p.list("(name sort)")?;
            if pp.len() < 2 {
                return Err(p.malformed("expected (name sort)"));
            }
            let pname = pp[0].sym("a parameter name")?;
            if out.iter().any(|(n, _): &(String, Sort)| n == pname) {
                return Err(p.error(AnalysisErrorKind::DuplicateDeclaration(pname.to_string())));
            }
            let sort = self.sort(pp[1])?;
            for attr in &pp[2..] {
                match attr.expr {
                    SExpr::Keyword(k) if k == "input" => inputs.push(i),
                    SExpr::Keyword(k) if k == "output" => outputs.push(i),
                    _ => return Err(attr.error(AnalysisErrorKind::BadAnnotation(attr.expr.to_string()))),
                }
            }
            out.push((pname.to_string(), sort));
        }
        let term_positions: Vec<usize> =
            out.iter().enumerate().filter(|(_, (_, s))| s.is_term()).map(|(i, _)| i).collect();
        let [term_index] = term_positions.as_slice() else {
            return Err(sig.error(AnalysisErrorKind::SortMismatch(format!(
                "relation `{name}` must have exactly one term-typed parameter"
            ))));
        };
        let mut rel = SemanticRelation {
            name: name.to_string(),
            params: out,
            term_index: *term_index,
            modes: None,
        };
        if !inputs.is_empty() || !outputs.is_empty() {
            rel.modes = Some(check_modes(&rel, inputs, outputs).map_err(|m| sig.error(m))?);
        }
        Ok(rel)
    }

    fn apply_annotations(
        &mut self,
        ri: usize,
        body: Node<'a>,
        annotations: &[Node<'a>],
    ) -> Result<(), AnalysisError> {
        if annotations.is_empty() {
            return Ok(());
        }
        let rel = &self.parts.relations[ri];
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut it = annotations.iter();
        while let Some(key) = it.next() {
            let target = match key.expr {
                SExpr::Keyword(k) if k == "input" => &mut inputs,
                SExpr::Keyword(k) if k == "output" => &mut outputs,
                SExpr::Keyword(_) => {
                    // unrelated attribute: skip its value
                    it.next();
                    continue;
                }
                _ => return Err(key.error(AnalysisErrorKind::BadAnnotation(key.expr.to_string()))),
            };
            let Some(value) = it.next() else {
                return Err(key.error(AnalysisErrorKind::BadAnnotation("missing variable list".into())));
            };
            for v in value.list("annotated variables")? {
                let name = v.sym("a parameter name")?;
                let pos = rel.params.iter().position(|(n, _)| n == name).ok_or_else(|| {
                    v.error(AnalysisErrorKind::UnresolvedName(name.to_string()))
                })?;
                if pos != rel.term_index {
                    target.push(pos);
                }
            }
        }
        if rel.modes.is_some() {
            return Err(body.error(AnalysisErrorKind::BadAnnotation(format!(
                "`{}` is annotated twice",
                rel.name
            ))));
        }
        let modes = check_modes(rel, inputs, outputs).map_err(|k| body.error(k))?;
        self.parts.relations[ri].modes = Some(modes);
        Ok(())
    }

    fn match_definition(&self, ri: usize, node: Node<'a>) -> Result<SemanticDefinition, AnalysisError> {
        let rel = &self.parts.relations[ri];
        let parts = node.list("(match term arms)")?;
        let [head, scrutinee, arms] = parts.as_slice() else {
            return Err(node.malformed("semantics must be (match <term> (<arms>))"));
        };
        if head.symbol() != Some("match") {
            return Err(node.malformed("semantics must be (match <term> (<arms>))"));
        }
        let scrutinee = scrutinee.sym("the matched term parameter")?;
        let mut out = Vec::new();
        for arm in arms.list("match arms")? {
            let ap = arm.list("(pattern body ...)")?;
            let Some(pattern) = ap.first() else {
                return Err(arm.malformed("empty match arm"));
            };
            let (ctor, bindings) = match pattern.items() {
                Some(pp) if !pp.is_empty() => {
                    let c = pp[0].sym("a constructor")?;
                    let b = pp[1..]
                        .iter()
                        .map(|v| v.sym("a pattern variable").map(str::to_string))
                        .collect::<Result<Vec<_>, _>>()?;
                    (c.to_string(), b)
                }
                Some(_) => return Err(pattern.malformed("empty pattern")),
                None => (pattern.sym("a constructor pattern")?.to_string(), Vec::new()),
            };
            out.push(MatchArm {
                constructor: ctor,
                bindings,
                alternatives: ap[1..].iter().map(|n| n.expr.clone()).collect(),
                span: arm.span(),
            });
        }
        Ok(SemanticDefinition {
            relation: rel.name.clone(),
            scrutinee: scrutinee.to_string(),
            arms: out,
            span: node.span(),
        })
    }

    fn synth_fun(&mut self, cmd: Node<'a>, items: &[Node<'a>]) -> Result<(), AnalysisError> {
        if self.parts.target.is_some() {
            let name = items.get(1).and_then(Node::symbol).unwrap_or("synth-fun");
            return Err(cmd.error(AnalysisErrorKind::DuplicateDeclaration(name.to_string())));
        }
        if items.len() < 4 || items.len() > 6 {
            return Err(cmd.malformed("expected (synth-fun name () TermType [grammar])"));
        }
        let name = items[1].sym("a function name")?;
        match items[2].items() {
            Some(args) if args.is_empty() => {}
            _ => {
                return Err(items[2].error(AnalysisErrorKind::ArityMismatch(
                    "synth-fun targets take no arguments".into(),
                )))
            }
        }
        let tt = items[3].sym("a term type")?;
        if !self.is_term_type(tt) {
            return Err(items[3].error(AnalysisErrorKind::UnresolvedName(tt.to_string())));
        }
        self.target_node = Some(cmd);
        let grammar = match &items[4..] {
            [] => None,
            [decls, rules] => {
                self.grammar_node = Some(cmd);
                Some(self.grammar(*decls, *rules, tt)?)
            }
            [rules] => {
                // only grouped rules: ((nt TermType (prods)) ...)
                let decls: Vec<(String, String)> = rules
                    .list("grammar rules")?
                    .iter()
                    .map(|r| {
                        let p = r.list("(nt TermType (productions))")?;
                        Ok((p.first().map(|n| n.sym("a nonterminal")).transpose()?.unwrap_or("").to_string(),
                            p.get(1).map(|n| n.sym("a term type")).transpose()?.unwrap_or("").to_string()))
                    })
                    .collect::<Result<_, AnalysisError>>()?;
                Some(self.grammar_rules(decls, *rules, tt)?)
            }
            _ => return Err(cmd.malformed("unexpected synth-fun arguments")),
        };
        self.parts.target =
            Some(SynthTarget { name: name.to_string(), term_type: tt.to_string(), grammar });
        Ok(())
    }

    fn grammar(&self, decls: Node<'a>, rules: Node<'a>, tt: &str) -> Result<Grammar, AnalysisError> {
        let mut nts = Vec::new();
        for d in decls.list("nonterminal declarations")? {
            let p = d.list("(nt TermType)")?;
            let [nt, ty] = p.as_slice() else {
                return Err(d.malformed("expected (nonterminal TermType)"));
            };
            nts.push((nt.sym("a nonterminal")?.to_string(), ty.sym("a term type")?.to_string()));
        }
        self.grammar_rules(nts, rules, tt)
    }

    fn grammar_rules(
        &self,
        nts: Vec<(String, String)>,
        rules: Node<'a>,
        target_tt: &str,
    ) -> Result<Grammar, AnalysisError> {
        for (i, (nt, ty)) in nts.iter().enumerate() {
            if !self.is_term_type(ty) {
                return Err(rules.error(AnalysisErrorKind::UnresolvedName(ty.clone())));
            }
            if nts[..i].iter().any(|(n, _)| n == nt) {
                return Err(rules.error(AnalysisErrorKind::DuplicateDeclaration(nt.clone())));
            }
        }
        let Some((_, start_tt)) = nts.first() else {
            return Err(rules.malformed("grammar declares no nonterminals"));
        };
        if start_tt != target_tt {
            return Err(rules.error(AnalysisErrorKind::SortMismatch(format!(
                "grammar start has term type {start_tt}, synth-fun expects {target_tt}"
            ))));
        }
        let nt_type = |n: &str| nts.iter().find(|(a, _)| a == n).map(|(_, t)| t.clone());
        let mut out: IndexMap<String, Vec<Production>> =
            nts.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
        for r in rules.list("grammar rules")? {
            let p = r.list("(nt TermType (productions))")?;
            let [nt, ty, prods] = p.as_slice() else {
                return Err(r.malformed("expected (nonterminal TermType (productions))"));
            };
            let nt = nt.sym("a nonterminal")?;
            let Some(declared) = nt_type(nt) else {
                return Err(r.error(AnalysisErrorKind::UnresolvedName(nt.to_string())));
            };
            if ty.symbol() != Some(declared.as_str()) {
                return Err(ty.error(AnalysisErrorKind::SortMismatch(format!(
                    "nonterminal {nt} declared with term type {declared}"
                ))));
            }
            let tdecl = self.parts.term_types.iter().find(|t| t.name == declared).unwrap();
            for prod in prods.list("productions")? {
                let (op, children, node) = match prod.items() {
                    Some(pp) if !pp.is_empty() => (
                        pp[0].sym("a constructor")?,
                        pp[1..]
                            .iter()
                            .map(|c| c.sym("a nonterminal").map(str::to_string))
                            .collect::<Result<Vec<_>, _>>()?,
                        prod,
                    ),
                    Some(_) => return Err(prod.malformed("empty production")),
                    None => (prod.sym("a production")?, Vec::new(), prod),
                };
                let Some(ctor) = tdecl.constructors.iter().find(|c| c.operator == op) else {
                    let exists = self
                        .parts
                        .term_types
                        .iter()
                        .any(|t| t.constructors.iter().any(|c| c.operator == op));
                    return Err(node.error(if exists {
                        AnalysisErrorKind::SortMismatch(format!(
                            "constructor {op} does not build term type {declared}"
                        ))
                    } else {
                        AnalysisErrorKind::UnresolvedName(op.to_string())
                    }));
                };
                if ctor.children.len() != children.len() {
                    return Err(node.error(AnalysisErrorKind::ArityMismatch(format!(
                        "{op} takes {} children",
                        ctor.children.len()
                    ))));
                }
                for (c, want) in children.iter().zip(&ctor.children) {
                    match nt_type(c) {
                        None => return Err(node.error(AnalysisErrorKind::UnresolvedName(c.clone()))),
                        Some(t) if &t != want => {
                            return Err(node.error(AnalysisErrorKind::SortMismatch(format!(
                                "nonterminal {c} has term type {t}, {op} expects {want}"
                            ))))
                        }
                        _ => {}
                    }
                }
                out[nt].push(Production { constructor: op.to_string(), children });
            }
        }
        Ok(Grammar { nonterminals: nts, rules: out })
    }

    fn finish(mut self) -> Result<SynthesisProblem, AnalysisError> {
        let defs: Vec<SemanticDefinition> = self.definitions.iter().map(|(d, _)| d.clone()).collect();
        let cx = DesugarContext { term_types: &self.parts.term_types, relations: &self.parts.relations };
        let chcs = desugar_semantics(&defs, &cx).map_err(|e| {
            let node = self
                .definitions
                .iter()
                .find(|(d, _)| e.span.is_some() && (d.span == e.span || d.arms.iter().any(|a| a.span == e.span)))
                .map(|(_, n)| *n);
            let kind = match e.kind {
                ChcErrorKind::UnresolvedName(n) => AnalysisErrorKind::UnresolvedName(n),
                other => AnalysisErrorKind::Semantics(other),
            };
            AnalysisError {
                kind,
                span: e.span.or_else(|| node.and_then(|n| n.span())),
                context: node.map(|n| n.expr.to_string()).unwrap_or_default(),
            }
        })?;
        self.parts.chcs = chcs;
        for (def, node) in &self.definitions {
            let rel = self.parts.relations.iter().find(|r| r.name == def.relation).unwrap();
            let tt = self.parts.term_types.iter().find(|t| t.name == rel.term_type()).unwrap();
            if tt.constructors.is_empty() {
                return Err(node.error(AnalysisErrorKind::EmptySemantics(tt.name.clone())));
            }
        }

        let Some(target) = self.parts.target.clone() else {
            return Err(AnalysisError {
                kind: AnalysisErrorKind::AbsentSynthTarget,
                span: None,
                context: String::new(),
            });
        };
        let sigs: IndexMap<String, Vec<Sort>> =
            self.parts.relations.iter().map(|r| (r.name.clone(), r.sorts())).collect();
        let mut vars: IndexMap<String, Sort> = self.parts.declared_vars.iter().cloned().collect();
        vars.insert(target.name.clone(), Sort::Term(target.term_type.clone()));
        let env = SortEnv { vars, relations: Some(&sigs) };
        for node in std::mem::take(&mut self.pending_constraints) {
            let tts: Vec<String> = self.parts.term_types.iter().map(|t| t.name.clone()).collect();
            let t = term_from_sexpr(
                node.expr,
                &|s| sigs.contains_key(s),
                &|s| tts.iter().any(|t| t == s),
            )
            .map_err(|e| match e {
                TermError::UnknownSymbol(s) | TermError::UnknownSort(s) => {
                    node.error(AnalysisErrorKind::UnresolvedName(s))
                }
                TermError::Malformed(s) => node.malformed(s),
            })?;
            match formula_sort(&t, &env) {
                Ok(Sort::Bool) => {}
                Ok(s) => {
                    return Err(node.error(AnalysisErrorKind::SortMismatch(format!(
                        "constraint has sort {s}, expected Bool"
                    ))))
                }
                Err(SortError::Unbound(v)) => return Err(node.error(AnalysisErrorKind::UnresolvedName(v))),
                Err(e @ SortError::IllSorted { .. }) => {
                    return Err(node.error(AnalysisErrorKind::SortMismatch(e.to_string())))
                }
            }
            self.parts.constraints.push(t);
        }
        if !self.parts.check_synth {
            return Err(AnalysisError {
                kind: AnalysisErrorKind::MissingCheckSynth,
                span: self.target_node.and_then(|n| n.span()),
                context: String::new(),
            });
        }
        let span = self.target_node.and_then(|n| n.span());
        SynthesisProblem::new(self.parts).map_err(|mut e| {
            e.span = e.span.or(span);
            e
        })
    }
}

fn check_modes(
    rel: &SemanticRelation,
    mut inputs: Vec<usize>,
    mut outputs: Vec<usize>,
) -> Result<Modes, AnalysisErrorKind> {
    inputs.retain(|&i| i != rel.term_index);
    inputs.sort_unstable();
    outputs.sort_unstable();
    let dup = |v: &[usize]| v.windows(2).any(|w| w[0] == w[1]);
    if dup(&inputs) || dup(&outputs) || inputs.iter().any(|i| outputs.contains(i)) {
        return Err(AnalysisErrorKind::BadAnnotation(format!(
            "positions of `{}` annotated more than once",
            rel.name
        )));
    }
    if outputs.contains(&rel.term_index) {
        return Err(AnalysisErrorKind::BadAnnotation(format!(
            "the term parameter of `{}` cannot be an output",
            rel.name
        )));
    }
    let missing: Vec<&str> = (0..rel.params.len())
        .filter(|i| *i != rel.term_index && !inputs.contains(i) && !outputs.contains(i))
        .map(|i| rel.params[i].0.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(AnalysisErrorKind::BadAnnotation(format!(
            "parameters {missing:?} of `{}` are neither input nor output",
            rel.name
        )));
    }
    Ok(Modes { inputs, outputs })
}


#[cfg(test)]
mod tests;
