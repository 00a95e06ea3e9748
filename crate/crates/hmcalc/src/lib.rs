//! Exact intersection calculus for tautological classes on the relative
//! Hilbert scheme of a family of nodal curves.
//!
//! The engine works in a formal model of the tautological module: monomials
//! in block variables `t_n[a]` and node variables `phi^n_j(theta)`,
//! `chi^n_j(theta)` with coefficients in configured finite-dimensional
//! graded Q-algebras. On this model it provides
//!
//! - the discriminant operator in conjugated coordinates and its classical
//!   part, the interior multiplications, the node transfer operators and the
//!   nilpotent change of variable between bracket and product coordinates;
//! - evaluation of operator words and of the generating series they solve,
//!   down to exact rational intersection numbers;
//! - an independent bracket-calculus engine used for differential testing.
//!
//! All arithmetic is exact (`BigRational`); all outputs are deterministic.

pub mod algebra;
pub mod check;
pub mod config;
pub mod error;
pub mod evolve;
pub mod family;
pub mod fixtures;
pub mod ops;
pub mod oracle;
pub mod rational;
pub mod rtable;
pub mod taut;
mod tensor;

pub use algebra::{Algebra, ClassExpr, LinearMap};
pub use config::load_family;
pub use error::{HmError, Result};
pub use evolve::{GSeries, WordStep};
pub use family::{FamilyModel, Stratum};
pub use rational::Rat;
pub use rtable::RTable;
pub use taut::{NodeKind, TautElement, TautMonomial};
