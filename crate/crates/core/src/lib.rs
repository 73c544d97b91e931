//! A repository and navigation engine for interconnected pattern languages.
//!
//! Patterns and their semantic links form a directed graph spanning several
//! languages. Cross-language links live in their own registry. On top of
//! that graph the crate provides views, solution-path enumeration, a
//! fact-driven entry-point solver, and aggregation of working solutions.

pub mod entry;
pub mod ids;
pub mod model;
pub mod navigation;
pub mod solutions;
pub mod store;
pub mod views;

pub use entry::{
    apply_path, find_entry, plan_iterative, rank_paths, score_path, search, Context, EntryError,
    EntryResult, Plan, Polarity, ScoredPath, SearchHit,
};
pub use ids::{FactId, IdError, PatternRef};
pub use model::{
    Atlas, AtlasError, Concretization, CrossLinkRegistry, Direction, Issue, IssueCode, Link,
    LinkKind, LinkSemantics, Pattern, PatternLanguage, ValidationReport,
};
pub use navigation::{
    enumerate_paths, extend_path, path_valid, NavError, NavOptions, PathCheck, Scope, ScopeGraph,
    ScopeKind, SolutionPath, Violation,
};
pub use solutions::{
    aggregate, attach_solution, detach_solution, realize_path, solutions_for, AggregatedSolution,
    Binding, ConcreteSolution, PartialAggregate, SolutionError,
};
pub use store::{export_graph, load_atlas, save_atlas, StoreError};
pub use views::{create_view, induced_view, materialize, register_view, View, ViewError};
