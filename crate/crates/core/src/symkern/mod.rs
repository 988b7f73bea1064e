//! Exact symbolic scalars.
//!
//! Rational functions over named parameters, extended by square-root atoms,
//! with a three-valued zero test and exact linear and quadratic solving.

pub mod budget;
pub mod expr;
pub mod interval;
pub mod linear;
pub mod parse;
pub mod poly;
pub mod quadratic;
pub mod ratfunc;
pub mod rational;
pub mod zero;

pub use expr::{Atom, Expr, SquareRoot, Tower};
pub use interval::Interval;
pub use linear::{solve_linear, LinearSolution};
pub use parse::parse_expr;
pub use poly::{Param, Poly};
pub use quadratic::solve_quadratic;
pub use ratfunc::RatFunc;
pub use rational::Rational;
pub use zero::{Probe, ZeroTest};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by an expression of undecided sign")]
    DivisionUnknown,
    #[error("substituted value depends on the parameter it replaces")]
    CyclicSubstitution,
    #[error("inconsistent linear system")]
    Inconsistent,
    #[error("elimination needs an undecided pivot")]
    PivotUnknown,
    #[error("degenerate equation without solutions")]
    Degenerate,
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("negative radicand")]
    NegativeRadicand,
    #[error("radicand of undecided sign")]
    IndeterminateSign,
    #[error("parameter '{0}' has no value")]
    Unassigned(String),
    #[error("evaluation hit a pole")]
    Pole,
}
