//! Per-state grammar of legal single utterances.
//!
//! When the number of legal phrase sequences stays under the limit the grammar
//! lists them exactly. Otherwise (typically under a partial evaluator, where
//! the count grows factorially) it falls back to per-slot token pools and
//! leaves exactness to the validator.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::par::Execution;
use crate::staging::{DialogState, SlotId, TurnContext};
use crate::text::normalize_phrase;
use crate::utterance::RESERVED;
use crate::view::View;

pub const GRAMMAR_VERSION: u32 = 1;
pub const DEFAULT_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrammarMode {
    Exact,
    OverApproximation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarDoc {
    pub version: u32,
    pub mode: GrammarMode,
    pub reserved: Vec<String>,
    pub sequences: Vec<Vec<String>>,
    pub token_pool: IndexMap<String, Vec<String>>,
}

impl GrammarDoc {
    /// Grammar for a state that only accepts the given reserved phrases.
    pub fn reserved_only(reserved: &[&str]) -> GrammarDoc {
        GrammarDoc {
            version: GRAMMAR_VERSION,
            mode: GrammarMode::Exact,
            reserved: reserved.iter().map(|s| s.to_string()).collect(),
            sequences: Vec::new(),
            token_pool: IndexMap::new(),
        }
    }
}

pub fn emit_grammar(state: &DialogState, view: &View, limit: usize) -> GrammarDoc {
    emit_grammar_with(state, view, limit, Execution::default())
}

pub fn emit_grammar_with(state: &DialogState, view: &View, limit: usize, exec: Execution) -> GrammarDoc {
    let state = state.normalize();
    let mut doc = GrammarDoc::reserved_only(&RESERVED);
    if state.is_complete() {
        return doc;
    }

    // First tokens are expanded in parallel; each branch carries its own
    // budget so the fan-out stops as soon as any branch alone overflows.
    let firsts: Vec<(SlotId, String)> = state
        .legal_first_slots()
        .into_iter()
        .flat_map(|slot| {
            view.available_values(slot.as_str()).unwrap_or_default().into_iter().map(move |v| (slot.clone(), v))
        })
        .collect();
    let branches = exec.map(&firsts, |(slot, value)| {
        let mut turn = TurnContext::default();
        let next = state.apply_token(&mut turn, slot, value.as_str()).ok()?;
        let view = view.restrict(slot.as_str(), value).ok()?;
        let mut out = vec![vec![normalize_phrase(value)]];
        let mut prefix = out[0].clone();
        expand(&next, &view, &turn, &mut prefix, &mut out, limit).then_some(out)
    });

    let mut sequences = Vec::new();
    let mut exact = true;
    for branch in branches {
        match branch {
            Some(seqs) if sequences.len() + seqs.len() <= limit => sequences.extend(seqs),
            _ => {
                exact = false;
                break;
            }
        }
    }

    if exact {
        doc.sequences = sequences;
    } else {
        doc.mode = GrammarMode::OverApproximation;
        for slot in state.unfilled_slots() {
            let phrases =
                view.available_values(slot.as_str()).unwrap_or_default().iter().map(|v| normalize_phrase(v)).collect();
            doc.token_pool.insert(slot.to_string(), phrases);
        }
    }
    doc
}

/// Depth-first expansion within one utterance. Returns false once `out`
/// exceeds `limit`.
fn expand(
    state: &DialogState,
    view: &View,
    turn: &TurnContext,
    prefix: &mut Vec<String>,
    out: &mut Vec<Vec<String>>,
    limit: usize,
) -> bool {
    for slot in state.legal_first_slots() {
        if turn.is_exhausted(&slot) {
            continue;
        }
        for value in view.available_values(slot.as_str()).unwrap_or_default() {
            let mut turn = turn.clone();
            let Ok(next) = state.apply_token(&mut turn, &slot, value.as_str()) else { continue };
            let Ok(narrowed) = view.restrict(slot.as_str(), &value) else { continue };
            prefix.push(normalize_phrase(&value));
            out.push(prefix.clone());
            if out.len() > limit || !expand(&next, &narrowed, &turn, prefix, out, limit) {
                return false;
            }
            prefix.pop();
        }
    }
    true
}
