use std::fmt;

use indexmap::IndexMap;

use crate::chc::Chc;
use crate::formula::{Sort, Term};
use crate::sexpr::SExpr;

use super::{AnalysisError, AnalysisErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constructor {
    pub operator: String,
    pub children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermTypeDecl {
    pub name: String,
    pub arity: u32,
    pub constructors: Vec<Constructor>,
}

/// Input/output annotation of a relation's value positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modes {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticRelation {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub term_index: usize,
    pub modes: Option<Modes>,
}

impl SemanticRelation {
    pub fn term_type(&self) -> &str {
        match &self.params[self.term_index].1 {
            Sort::Term(t) => t,
            _ => unreachable!("term position always has a term sort"),
        }
    }

    pub fn sorts(&self) -> Vec<Sort> {
        self.params.iter().map(|(_, s)| s.clone()).collect()
    }

    pub fn input_positions(&self) -> Option<&[usize]> {
        self.modes.as_ref().map(|m| m.inputs.as_slice())
    }

    pub fn output_positions(&self) -> Option<&[usize]> {
        self.modes.as_ref().map(|m| m.outputs.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub constructor: String,
    pub children: Vec<String>,
}

/// A grammar as written in `synth-fun`; the first nonterminal is the start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub nonterminals: Vec<(String, String)>,
    pub rules: IndexMap<String, Vec<Production>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTarget {
    pub name: String,
    pub term_type: String,
    pub grammar: Option<Grammar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstructorId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub u32);

/// The unvalidated pieces of a problem.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProblemParts {
    pub term_types: Vec<TermTypeDecl>,
    pub relations: Vec<SemanticRelation>,
    pub chcs: Vec<Chc>,
    pub target: Option<SynthTarget>,
    pub constraints: Vec<Term>,
    pub declared_vars: Vec<(String, Sort)>,
    pub metadata: Vec<(String, SExpr)>,
    pub check_synth: bool,
}

/// A validated, fully cross-referenced synthesis problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisProblem {
    parts: ProblemParts,
    target: SynthTarget,
    ctor_index: IndexMap<String, (usize, usize)>,
    relation_index: IndexMap<String, usize>,
    // chc indices per (relation, constructor), in declaration order
    chc_table: IndexMap<(usize, ConstructorId), Vec<usize>>,
}

impl SynthesisProblem {
    pub fn new(parts: ProblemParts) -> Result<Self, AnalysisError> {
        let err = |kind| AnalysisError { kind, span: None, context: String::new() };
        let mut ctor_index = IndexMap::new();
        let mut tt_names = IndexMap::new();
        for (ti, tt) in parts.term_types.iter().enumerate() {
            if tt_names.insert(tt.name.clone(), ti).is_some() {
                return Err(err(AnalysisErrorKind::DuplicateDeclaration(tt.name.clone())));
            }
            for (ci, c) in tt.constructors.iter().enumerate() {
                if ctor_index.insert(c.operator.clone(), (ti, ci)).is_some() {
                    return Err(err(AnalysisErrorKind::DuplicateDeclaration(c.operator.clone())));
                }
            }
        }
        for tt in &parts.term_types {
            if tt.arity != 0 {
                return Err(err(AnalysisErrorKind::UnsupportedArity(tt.name.clone())));
            }
            for c in &tt.constructors {
                for child in &c.children {
                    if !tt_names.contains_key(child) {
                        return Err(err(AnalysisErrorKind::UnresolvedName(child.clone())));
                    }
                }
            }
        }
        let mut relation_index = IndexMap::new();
        for (ri, r) in parts.relations.iter().enumerate() {
            if relation_index.insert(r.name.clone(), ri).is_some() {
                return Err(err(AnalysisErrorKind::DuplicateDeclaration(r.name.clone())));
            }
            if !tt_names.contains_key(r.term_type()) {
                return Err(err(AnalysisErrorKind::UnresolvedName(r.term_type().to_string())));
            }
        }
        let target = parts.target.clone().ok_or_else(|| err(AnalysisErrorKind::AbsentSynthTarget))?;
        if !tt_names.contains_key(&target.term_type) {
            return Err(err(AnalysisErrorKind::UnresolvedName(target.term_type.clone())));
        }
        let mut chc_table: IndexMap<(usize, ConstructorId), Vec<usize>> = IndexMap::new();
        let flat_id = |name: &str| -> Option<ConstructorId> {
            ctor_index.get_index_of(name).map(|i| ConstructorId(i as u32))
        };
        for (k, chc) in parts.chcs.iter().enumerate() {
            let ri = *relation_index
                .get(&chc.head_relation)
                .ok_or_else(|| err(AnalysisErrorKind::UnresolvedName(chc.head_relation.clone())))?;
            let cid = flat_id(&chc.constructor)
                .ok_or_else(|| err(AnalysisErrorKind::UnresolvedName(chc.constructor.clone())))?;
            for app in chc.body_applications() {
                if !relation_index.contains_key(&app.relation) {
                    return Err(err(AnalysisErrorKind::UnresolvedName(app.relation.clone())));
                }
            }
            chc_table.entry((ri, cid)).or_default().push(k);
        }
        for tt in &parts.term_types {
            if tt.constructors.is_empty() {
                return Err(err(AnalysisErrorKind::EmptySemantics(tt.name.clone())));
            }
            for c in &tt.constructors {
                let cid = flat_id(&c.operator).unwrap();
                let covered = parts
                    .relations
                    .iter()
                    .enumerate()
                    .any(|(ri, _)| chc_table.contains_key(&(ri, cid)));
                if !covered {
                    return Err(err(AnalysisErrorKind::EmptySemantics(c.operator.clone())));
                }
            }
        }
        Ok(SynthesisProblem { parts, target, ctor_index, relation_index, chc_table })
    }

    pub fn parts(&self) -> &ProblemParts {
        &self.parts
    }

    pub fn into_parts(self) -> ProblemParts {
        self.parts
    }

    pub fn term_types(&self) -> &[TermTypeDecl] {
        &self.parts.term_types
    }

    pub fn term_type(&self, name: &str) -> Option<&TermTypeDecl> {
        self.parts.term_types.iter().find(|t| t.name == name)
    }

    pub fn relations(&self) -> &[SemanticRelation] {
        &self.parts.relations
    }

    pub fn relation(&self, name: &str) -> Option<&SemanticRelation> {
        self.relation_index.get(name).map(|&i| &self.parts.relations[i])
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).map(|&i| RelationId(i as u32))
    }

    pub fn relation_by_id(&self, id: RelationId) -> &SemanticRelation {
        &self.parts.relations[id.0 as usize]
    }

    /// Relations interpreting the given term type.
    pub fn relations_for(&self, term_type: &str) -> impl Iterator<Item = &SemanticRelation> {
        let tt = term_type.to_string();
        self.parts.relations.iter().filter(move |r| r.term_type() == tt)
    }

    pub fn chcs(&self) -> &[Chc] {
        &self.parts.chcs
    }

    pub fn target(&self) -> &SynthTarget {
        &self.target
    }

    pub fn constraints(&self) -> &[Term] {
        &self.parts.constraints
    }

    pub fn declared_vars(&self) -> &[(String, Sort)] {
        &self.parts.declared_vars
    }

    pub fn metadata(&self) -> &[(String, SExpr)] {
        &self.parts.metadata
    }

    pub fn constructor_count(&self) -> usize {
        self.ctor_index.len()
    }

    pub fn constructor_id(&self, operator: &str) -> Option<ConstructorId> {
        self.ctor_index.get_index_of(operator).map(|i| ConstructorId(i as u32))
    }

    pub fn constructor(&self, id: ConstructorId) -> &Constructor {
        let (ti, ci) = self.ctor_index[id.0 as usize];
        &self.parts.term_types[ti].constructors[ci]
    }

    /// Term type that owns the constructor.
    pub fn constructor_term_type(&self, id: ConstructorId) -> &str {
        let (ti, _) = self.ctor_index[id.0 as usize];
        &self.parts.term_types[ti].name
    }

    pub fn constructor_ids(&self) -> impl Iterator<Item = ConstructorId> {
        (0..self.ctor_index.len() as u32).map(ConstructorId)
    }

    /// CHCs defining `relation` on `ctor`, in declaration order.
    pub fn chcs_for(&self, relation: RelationId, ctor: ConstructorId) -> &[usize] {
        self.chc_table
            .get(&(relation.0 as usize, ctor))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Sorts of every variable a CHC may mention.
    pub fn chc_env(&self, chc: &Chc) -> IndexMap<String, Sort> {
        let mut env = IndexMap::new();
        if let Some(rel) = self.relation(&chc.head_relation) {
            for (arg, (_, sort)) in chc.head_args.iter().zip(&rel.params) {
                env.insert(arg.clone(), sort.clone());
            }
        }
        if let Some(cid) = self.constructor_id(&chc.constructor) {
            for (v, tt) in chc.child_vars.iter().zip(&self.constructor(cid).children) {
                env.insert(v.clone(), Sort::Term(tt.clone()));
            }
        }
        for (v, s) in &chc.auxiliaries {
            env.insert(v.clone(), s.clone());
        }
        env
    }

    pub fn relation_signatures(&self) -> IndexMap<String, Vec<Sort>> {
        self.parts.relations.iter().map(|r| (r.name.clone(), r.sorts())).collect()
    }
}

impl fmt::Display for Constructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            write!(f, "({})", self.operator)
        } else {
            write!(f, "({} {})", self.operator, self.children.join(" "))
        }
    }
}
