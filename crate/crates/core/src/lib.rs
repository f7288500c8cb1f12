//! Constrained quadratic models over binary variables, end to end: ingest
//! a CSV catalog of grouped items, build a pick-one-per-group model with
//! attribute bounds, fold it into a penalized QUBO when a sampler needs
//! one, and solve with interchangeable backends that all return the same
//! canonical sample set.
//!
//! The pieces compose but stand alone:
//!
//! - [`expr`] / [`model`]: quadratic expressions, constraints with a
//!   comparison sense, exact evaluation and feasibility checking.
//! - [`catalog`] / [`builder`]: CSV catalogs with exact minor-unit
//!   arithmetic, and the grouped-selection model generator.
//! - [`qubo`]: squared-penalty transform with binary-encoded inequality
//!   slack and provenance for decoding solutions.
//! - [`solvers`]: an exhaustive enumerator, a seeded annealing sampler,
//!   and a remote-protocol client behind one [`solvers::Solver`] trait,
//!   registered by name in a [`solvers::SolverRegistry`].
//!
//! ```
//! use cqmkit::builder::{build_model, AttributeBound, ChoiceSpec};
//! use cqmkit::catalog::ChoiceCatalog;
//! use cqmkit::solvers::solve_exact;
//!
//! let catalog = ChoiceCatalog::parse(
//!     "name,item_type,price,calories\n\
//!      Plain,waffle,$8.00,358\n\
//!      Fancy,waffle,$9.00,284.4\n\
//!      Eggs,side,$4.75,362\n\
//!      Fruit,side,$4.00,80\n",
//! )?;
//! let spec = ChoiceSpec::minimize("price")
//!     .with_bound(AttributeBound::parse("calories<=700", &catalog)?);
//! let model = build_model(&catalog, &spec)?;
//! let samples = solve_exact(&model, 3)?;
//! assert_eq!(samples.best_feasible().unwrap().energy, 12.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod builder;
pub mod catalog;
pub mod expr;
pub mod model;
pub mod qubo;
pub mod sample;
pub mod solvers;

pub use expr::{Assignment, QuadraticExpression};
pub use model::{Constraint, ConstraintKind, ConstraintSense, CqmModel};
pub use qubo::{PenaltyPolicy, QuboModel};
pub use sample::{Sample, SampleSet, SolveParams};
pub use solvers::{Solver, SolverRegistry};
