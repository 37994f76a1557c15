//! Solvers, enumerators, and generators for constraint satisfaction problems
//! on *complete* instances: one nontrivial constraint per k-subset of variables.
//!
//! The crate is organized around a shared [`instance::Instance`] data model:
//!
//! - [`oracle`] — brute-force enumeration and exact Min-CSP optima, the ground
//!   truth everything else is checked against;
//! - [`twocsp`] — 2-SAT machinery (implication graph, SCC decision, complete
//!   2-CSP solution enumeration);
//! - [`kcsp`] — quasi-polynomial all-solutions enumeration for complete
//!   Boolean k-CSP by good-tuple branching;
//! - [`induced2`] — polynomial decision for clause families whose predicates
//!   project onto binary constraints, including symmetric predicates (NAE and
//!   friends);
//! - [`csp23`] — label-set reduction decision procedure for complete binary
//!   CSPs over a three-letter alphabet;
//! - [`pac`] — permutation-avoiding coloring instances and deciders for the
//!   (4,3) and (5,5) regimes;
//! - [`min2sat`] — SDP relaxation, bias preprocessing, and ball rounding for
//!   approximate Min-2-SAT;
//! - [`reductions`] — instance generators: dense embeddings, product
//!   reductions, gadget search, CNF conversion.

pub mod cli;
pub mod csp23;
pub mod induced2;
pub mod instance;
pub mod kcsp;
pub mod min2sat;
pub mod oracle;
pub mod pac;
pub mod reductions;
pub mod twocsp;
pub(crate) mod util;

pub use instance::{Instance, Label, LabelSet, PartialAssignment, UnsatTable, ValidationReport};
pub use oracle::SolutionSet;
pub use twocsp::Decision;

