//! Utterance validation: vocabulary construction, keyword-spotting
//! tokenization, binding resolution and the report returned for every input.
//!
//! The driver that applies tokens to a session lives in
//! [`Session::apply_utterance`](crate::session::Session::apply_utterance) and
//! [`Session::click`](crate::session::Session::click); both go through the same
//! token pipeline.

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::motivators::MotivatorReport;
use crate::session::HelpPayload;
use crate::staging::{DialogState, SlotId, StagingError};
use crate::text::normalize_phrase;
use crate::view::View;

pub const SHOW_RESULTS: &str = "show me results";
pub const WHAT_MAY_I_SAY: &str = "what may i say";
pub const YES: &str = "yes";
pub const NO: &str = "no";
pub const RESERVED: [&str; 4] = [SHOW_RESULTS, WHAT_MAY_I_SAY, YES, NO];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UtteranceError {
    #[error("value `{phrase}` of slot `{slot}` collides with a reserved phrase")]
    ReservedPhraseCollision { phrase: String, slot: SlotId },
}

/// Phrase -> (slot, value) bindings for the currently speakable values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: IndexMap<String, Vec<(SlotId, String)>>,
    max_words: usize,
}

impl Vocabulary {
    pub fn bindings(&self, phrase: &str) -> Option<&[(SlotId, String)]> {
        self.entries.get(phrase).map(Vec::as_slice)
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One phrase per (unfilled slot, available value).
pub fn build_vocabulary(state: &DialogState, view: &View) -> Result<Vocabulary, UtteranceError> {
    let mut vocab = Vocabulary::default();
    for slot in state.unfilled_slots() {
        for value in view.available_values(slot.as_str()).unwrap_or_default() {
            let phrase = normalize_phrase(&value);
            if phrase.is_empty() {
                continue;
            }
            if RESERVED.contains(&phrase.as_str()) {
                return Err(UtteranceError::ReservedPhraseCollision { phrase, slot });
            }
            vocab.max_words = vocab.max_words.max(phrase.split(' ').count());
            vocab.entries.entry(phrase).or_default().push((slot.clone(), value));
        }
    }
    Ok(vocab)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Segment {
    Token { phrase: String, bindings: Vec<(SlotId, String)> },
    Ignored(String),
}

/// Greedy longest-match, left to right. Runs of unmatched words become one
/// `Ignored` fragment.
pub fn tokenize(vocab: &Vocabulary, text: &str) -> Vec<Segment> {
    let normalized = normalize_phrase(text);
    let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
    let mut out = Vec::new();
    let mut pending: Vec<&str> = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let longest = (1..=vocab.max_words.min(words.len() - i)).rev().find_map(|n| {
            let phrase = words[i..i + n].join(" ");
            vocab.bindings(&phrase).map(|b| (n, phrase, b.to_vec()))
        });
        match longest {
            Some((n, phrase, bindings)) => {
                if !pending.is_empty() {
                    out.push(Segment::Ignored(pending.join(" ")));
                    pending.clear();
                }
                out.push(Segment::Token { phrase, bindings });
                i += n;
            }
            None => {
                pending.push(words[i]);
                i += 1;
            }
        }
    }
    if !pending.is_empty() {
        out.push(Segment::Ignored(pending.join(" ")));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    SlotNotLegal,
    SlotAlreadyFilled,
    InterpreterTurnExhausted,
    Ambiguous,
    NoMatchingRecords,
    ConfirmationPending,
    NothingToConfirm,
}

impl From<&StagingError> for RejectReason {
    fn from(e: &StagingError) -> Self {
        match e {
            StagingError::SlotAlreadyFilled(_) => RejectReason::SlotAlreadyFilled,
            StagingError::InterpreterTurnExhausted(_) => RejectReason::InterpreterTurnExhausted,
            _ => RejectReason::SlotNotLegal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AcceptedToken {
    pub phrase: String,
    pub slot: SlotId,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RejectedToken {
    pub phrase: String,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportAction {
    #[default]
    Tokens,
    Results,
    Help,
    Confirmed,
    RolledBack,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ApplyReport {
    pub action: ReportAction,
    pub accepted: Vec<AcceptedToken>,
    pub rejected: Vec<RejectedToken>,
    pub ignored: Vec<String>,
    pub motivators: Option<MotivatorReport>,
    pub help: Option<HelpPayload>,
}

/// Picks the binding for an ambiguous phrase: a currently legal slot first
/// (canonical order), otherwise the only binding, otherwise none.
pub fn resolve_binding<'a>(state: &DialogState, bindings: &'a [(SlotId, String)]) -> Option<&'a (SlotId, String)> {
    let legal = state.legal_first_slots();
    legal.iter().find_map(|slot| bindings.iter().find(|(s, _)| s == slot)).or(match bindings {
        [only] => Some(only),
        _ => None,
    })
}
