//! Generator and verifier harness for repository-level coding-agent tasks.
//!
//! The crate indexes Python repositories ([`source`]), extracts direct call
//! dependencies ([`depgraph`]), synthesizes task instances ([`taskgen`]),
//! materializes sandbox workspaces ([`workspace`]), checks agent patches
//! ([`patchcheck`]), assembles datasets ([`sampling`]) and analyzes agent
//! trajectories ([`trajstats`]).

pub mod depgraph;
pub mod error;
pub mod patchcheck;
pub mod records;
pub mod sampling;
pub mod source;
pub mod taskgen;
pub mod trajstats;
pub mod tree;
pub mod unidiff;
pub mod workspace;

pub use depgraph::{CallKind, CallSite, DependencyRecord, Resolution};
pub use error::{Error, Result};
pub use patchcheck::{LineClass, PatchReport, Reason, VerificationResult};
pub use source::{ImportBinding, RepoSnapshot, SourceFile, SymbolDef, SymbolKind, Target};
pub use taskgen::{GenOptions, Generator, GroundTruth, TaskInstance, TaskKind, WorkspaceTransform};

pub use tree::SourceTree;
pub use workspace::{RepoStore, Workspace};
