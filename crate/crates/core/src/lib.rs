//! Parsing, execution, verification and enumerative solving for SemGuS
//! synthesis problems.

pub mod chc;
pub mod enumerate;
pub mod eval;
pub mod formula;
pub mod problem;
pub mod sexpr;
pub mod sygus;
pub mod operational;
pub mod program;
pub mod verify;
