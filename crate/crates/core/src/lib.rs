//! Portal kernel built on a computational data/metadata object model.
//!
//! The crate is layered bottom-up:
//!
//! * [`object_model`]: typed domains, concepts, individuals, states and the
//!   `⟨concept, individual, state⟩` data object.
//! * [`calculus`]: the evaluation function over mappings, generalized values
//!   with curried assignment application, comprehension and the metadata tower.
//! * [`semnet`]: the dyadic frame store.
//! * [`profiles`]: profile functionals, roles and session-scoped grants.
//! * [`sources`]: tabular, media and content adapters with an ordered update log.
//! * [`engine`]: templates, slot binding, page cache, scripts and statistics.
//! * [`bundle`] and [`repl`]: loading the whole model from JSON and evaluating
//!   application chains.
//!
//! Bulk filters and joins run through an [`exec::Executor`], which uses rayon
//! when the `parallel` feature is enabled (the default) and a plain iterator
//! otherwise.

pub mod bundle;
pub mod calculus;
pub mod engine;
pub mod error;
pub mod exec;
pub mod ids;
pub mod object_model;
pub mod predicate;
pub mod profiles;
pub mod repl;
pub mod semnet;
pub mod sources;
pub mod value;

pub use engine::Portal;
pub use error::{Error, Result};
pub use exec::Executor;
pub use predicate::Predicate;
pub use value::{Attributes, Value};
