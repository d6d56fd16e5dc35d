//! A workbench for structured-interaction processes and comprehensive
//! multiparty session types: concrete syntax, global-type analysis and
//! robustness transformation, endpoint projection with prefix sorting,
//! prefix/coinductive subtyping, static and runtime type checking, a
//! small-step interpreter, and executable meta-theory harnesses.

pub mod ast;
pub mod constraints;
pub mod syntax;

pub mod analysis;
pub mod projection;
pub mod subtyping;
pub mod typecheck;

pub mod interp;
pub mod metaprops;
