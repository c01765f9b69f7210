//! Out-of-turn dialog engine.
//!
//! A dialog is a tree of stagers ([`staging`]) over slots bound to the
//! attributes of a record catalog ([`view`]). User tokens, whether clicked or
//! spoken, run through one pipeline ([`session::Session::handle`]) that
//! validates them against the tree, narrows the view, then prunes and
//! possibly completes the dialog ([`motivators`]). [`grammar`] emits the
//! phrases that are speakable in the current state.

pub mod dialogxml;
pub mod grammar;
pub mod motivators;
pub mod par;
pub mod registry;
pub mod session;
pub mod staging;
pub mod text;
pub mod trace;
pub mod utterance;
pub mod view;

pub use dialogxml::{bind_to_catalog, parse_dialog_spec, to_dialog_xml, BoundSpec, DialogSpec, SlotMeta};
pub use grammar::{emit_grammar, emit_grammar_with, GrammarDoc, GrammarMode};
pub use motivators::{run_motivators, DialogStatus, MotivatorReport};
pub use par::Execution;
pub use registry::{Registry, RegistryError};
pub use session::{Input, RenderModel, Session, SessionError, SessionStatus};
pub use staging::{DialogState, DialogTree, SlotId, StagerKind, StagingError, TurnContext};
pub use text::normalize_phrase;
pub use utterance::{ApplyReport, RejectReason};
pub use view::{ingest_csv, Catalog, View};
