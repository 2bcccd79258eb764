//! Finite-model workbench for implication zroupoids: algebras `<A, ->, 0>`
//! satisfying `(x -> y) -> z = [(z' -> x) -> (y -> z)']'` and `0'' = 0`,
//! where `x' := x -> 0`.

pub mod algebra;
pub mod catalog;
pub mod congruence;
pub mod proof;
pub mod search;
pub mod term;
pub mod variety;

pub use algebra::{Assignment, CheckResult, FiniteAlgebra};
pub use catalog::{builtin_catalog, IdentityCatalog};
pub use congruence::{Partition, Relation, RelationKind};
pub use search::{enumerate, ModelCorpus, SearchConfig};
pub use term::{ConditionalIdentity, Identity, Term};
