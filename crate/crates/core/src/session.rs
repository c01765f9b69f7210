//! A dialog session: the staged dialog, its view, the confirmation gate and
//! the render model shown to the user. Both the HTTP service and the CLI
//! drive sessions exclusively through [`Session::handle`].

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogxml::BoundSpec;
use crate::grammar::{emit_grammar, GrammarDoc, DEFAULT_LIMIT};
use crate::motivators::{confirmation_gate, run_motivators, DialogStatus, Gate, MotivatorReport};
use crate::staging::{DialogState, SlotId, StagingError, TurnContext};
use crate::text::normalize_phrase;
use crate::utterance::{
    build_vocabulary, resolve_binding, tokenize, AcceptedToken, ApplyReport, RejectReason, RejectedToken, ReportAction,
    Segment, UtteranceError, NO, RESERVED, SHOW_RESULTS, WHAT_MAY_I_SAY, YES,
};
use crate::view::{RecordId, View};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("the dialog is complete")]
    SessionComplete,
    #[error("a confirmation is pending; say yes or no")]
    ConfirmationPending,
    #[error("`{value}` is no longer offered for `{slot}`")]
    StaleLink { slot: String, value: String },
    #[error(transparent)]
    Staging(#[from] StagingError),
    #[error(transparent)]
    Vocabulary(#[from] UtteranceError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::SessionComplete => "SessionComplete",
            SessionError::ConfirmationPending => "ConfirmationPending",
            SessionError::StaleLink { .. } => "StaleLink",
            SessionError::Staging(StagingError::DuplicateSlot(_)) => "DuplicateSlot",
            SessionError::Staging(_) => "StagingError",
            SessionError::Vocabulary(_) => "ReservedPhraseCollision",
        }
    }
}

/// One user input: `{"say": "..."}` or `{"click": {"slot": "...", "value": "..."}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Say(String),
    Click { slot: String, value: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InProgress,
    Complete,
    Results,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillSource {
    User,
    Auto,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crumb {
    pub slot: SlotId,
    pub value: String,
    pub label: String,
    pub source: FillSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub value: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solicitation {
    pub slot: SlotId,
    pub prompt: String,
    pub links: Vec<Link>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutOfTurn {
    pub slots: Vec<SlotId>,
    pub hint: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoticeKind {
    AutoFilled,
    SlotRemoved,
    ValuesRemoved,
    Rejected,
    Ignored,
    ConfirmationRequested,
    Confirmed,
    RolledBack,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub kind: NoticeKind,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: RecordId,
    pub fields: IndexMap<String, String>,
}

impl ResultRecord {
    pub fn name(&self) -> Option<&str> {
        self.fields.get("name").map(String::as_str)
    }
}

/// Everything a page shows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderModel {
    pub status: SessionStatus,
    pub solicitation: Option<Solicitation>,
    pub out_of_turn: OutOfTurn,
    pub breadcrumb: Vec<Crumb>,
    pub notifications: Vec<Notification>,
    pub pending_confirmation: bool,
    pub confirmation_phrase: Option<String>,
    pub live_records: usize,
    pub results: Vec<ResultRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelpSlot {
    pub slot: SlotId,
    pub sayable_now: bool,
    pub samples: Vec<String>,
    pub value_count: usize,
}

/// Answer to "What may I say?".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelpPayload {
    pub message: String,
    pub solicitation: Option<SlotId>,
    pub slots: Vec<HelpSlot>,
    pub reserved: Vec<String>,
}

/// Serializable summary of the engine-relevant session state. Two sessions
/// with equal snapshots behave identically on every future input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionSnapshot {
    pub tree: Option<String>,
    pub fillings: Vec<(SlotId, String)>,
    pub constraints: Vec<(String, String)>,
    pub live: Vec<RecordId>,
    pub breadcrumb: Vec<Crumb>,
    pub status: SessionStatus,
    pub pending: Option<(SlotId, String)>,
    pub dropped: Vec<SlotId>,
    pub results: Vec<RecordId>,
}

#[derive(Clone, Debug)]
struct Checkpoint {
    state: DialogState,
    view: View,
    breadcrumb: Vec<Crumb>,
}

#[derive(Clone, Debug)]
struct Pending {
    slot: SlotId,
    value: String,
    label: String,
    before: Checkpoint,
    offers_before: IndexMap<SlotId, Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct Session {
    bound: Arc<BoundSpec>,
    state: DialogState,
    view: View,
    pending: Option<Pending>,
    breadcrumb: Vec<Crumb>,
    prompt_counts: HashMap<SlotId, usize>,
    status: SessionStatus,
    results: Vec<RecordId>,
    dropped: Vec<SlotId>,
    grammar_limit: usize,
    render: RenderModel,
}

impl Session {
    /// Seeds a session: builds the initial state and view, runs the
    /// motivators once and renders the first page.
    pub fn new(bound: Arc<BoundSpec>) -> Result<Session, SessionError> {
        Session::with_grammar_limit(bound, DEFAULT_LIMIT)
    }

    pub fn with_grammar_limit(bound: Arc<BoundSpec>, grammar_limit: usize) -> Result<Session, SessionError> {
        let state = DialogState::new(bound.spec.root.clone())?;
        let view = View::new(bound.catalog.clone());
        build_vocabulary(&state, &view)?;
        let mut session = Session {
            bound,
            state,
            view,
            pending: None,
            breadcrumb: Vec::new(),
            prompt_counts: HashMap::new(),
            status: SessionStatus::InProgress,
            results: Vec::new(),
            dropped: Vec::new(),
            grammar_limit,
            render: RenderModel {
                status: SessionStatus::InProgress,
                solicitation: None,
                out_of_turn: OutOfTurn::default(),
                breadcrumb: Vec::new(),
                notifications: Vec::new(),
                pending_confirmation: false,
                confirmation_phrase: None,
                live_records: 0,
                results: Vec::new(),
            },
        };
        let offers = session.offers();
        let report = session.motivate();
        let notes = session.motivator_notices(&report, &offers);
        session.rerender(notes);
        Ok(session)
    }

    pub fn state(&self) -> &DialogState {
        &self.state
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn bound(&self) -> &Arc<BoundSpec> {
        &self.bound
    }

    pub fn render_model(&self) -> &RenderModel {
        &self.render
    }

    pub fn is_pending(&self) -> bool {
        self.pending.is_some()
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            tree: self.state.tree().map(ToString::to_string),
            fillings: self.state.fillings().iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            constraints: self.view.constraints().iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            live: self.view.live_ids().to_vec(),
            breadcrumb: self.breadcrumb.clone(),
            status: self.status,
            pending: self.pending.as_ref().map(|p| (p.slot.clone(), p.value.clone())),
            dropped: self.dropped.clone(),
            results: self.results.clone(),
        }
    }

    pub fn handle(&mut self, input: Input) -> Result<ApplyReport, SessionError> {
        match input {
            Input::Say(text) => self.apply_utterance(&text),
            Input::Click { slot, value } => self.click(&slot, &value),
        }
    }

    /// Validates and applies a typed (or recognized) utterance.
    pub fn apply_utterance(&mut self, text: &str) -> Result<ApplyReport, SessionError> {
        let phrase = normalize_phrase(text);
        match phrase.as_str() {
            YES => return Ok(self.answer_confirmation(true)),
            NO => return Ok(self.answer_confirmation(false)),
            _ if self.pending.is_some() => return Err(SessionError::ConfirmationPending),
            SHOW_RESULTS => return Ok(self.show_results()),
            WHAT_MAY_I_SAY => {
                return Ok(ApplyReport { action: ReportAction::Help, help: Some(self.help()), ..Default::default() })
            }
            _ => {}
        }
        if self.status != SessionStatus::InProgress {
            return Err(SessionError::SessionComplete);
        }
        let vocab = build_vocabulary(&self.state, &self.view)?;
        let mut tokens = Vec::new();
        let mut ignored = Vec::new();
        for segment in tokenize(&vocab, text) {
            match segment {
                Segment::Token { phrase, bindings } => tokens.push((phrase, bindings)),
                Segment::Ignored(words) => ignored.push(words),
            }
        }
        Ok(self.run_tokens(tokens, ignored))
    }

    /// A hyperlink selection. Only links on the current page are accepted.
    pub fn click(&mut self, slot: &str, value: &str) -> Result<ApplyReport, SessionError> {
        if self.pending.is_some() {
            return Err(SessionError::ConfirmationPending);
        }
        if self.status != SessionStatus::InProgress {
            return Err(SessionError::SessionComplete);
        }
        let slot_id = SlotId::new(slot);
        let value = normalize_phrase(value);
        let offered = self
            .render
            .solicitation
            .as_ref()
            .is_some_and(|s| s.slot == slot_id && s.links.iter().any(|l| l.value == value));
        if !offered {
            return Err(SessionError::StaleLink { slot: slot.to_string(), value });
        }
        Ok(self.run_tokens(vec![(value.clone(), vec![(slot_id, value)])], Vec::new()))
    }

    pub fn grammar(&self) -> GrammarDoc {
        if self.pending.is_some() {
            return GrammarDoc::reserved_only(&[YES, NO]);
        }
        emit_grammar(&self.state, &self.view, self.grammar_limit)
    }

    pub fn help(&self) -> HelpPayload {
        let reserved = RESERVED.iter().map(|s| s.to_string()).collect();
        if let Some(p) = &self.pending {
            return HelpPayload {
                message: format!("Please confirm {}: say yes or no.", p.label),
                solicitation: None,
                slots: Vec::new(),
                reserved: vec![YES.to_string(), NO.to_string()],
            };
        }
        if self.status != SessionStatus::InProgress {
            return HelpPayload {
                message: "The dialog is complete. You may say \"show me results\".".into(),
                solicitation: None,
                slots: Vec::new(),
                reserved,
            };
        }
        let legal = self.state.legal_first_slots();
        let slots: Vec<HelpSlot> = self
            .state
            .unfilled_slots()
            .into_iter()
            .map(|slot| {
                let values = self.view.available_values(slot.as_str()).unwrap_or_default();
                HelpSlot {
                    sayable_now: legal.contains(&slot),
                    samples: values.iter().take(3).map(|v| self.label(&slot, v)).collect(),
                    value_count: values.len(),
                    slot,
                }
            })
            .collect();
        let names: Vec<&str> = slots.iter().filter(|s| s.sayable_now).map(|s| s.slot.as_str()).collect();
        HelpPayload {
            message: format!("You may specify: {}.", names.join(", ")),
            solicitation: self.state.current_solicitation(),
            slots,
            reserved,
        }
    }

    fn label(&self, slot: &SlotId, value: &str) -> String {
        self.bound.catalog.display_value(slot.as_str(), value).to_string()
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint { state: self.state.clone(), view: self.view.clone(), breadcrumb: self.breadcrumb.clone() }
    }

    /// Currently offered values per unfilled slot.
    fn offers(&self) -> IndexMap<SlotId, Vec<String>> {
        self.state
            .unfilled_slots()
            .into_iter()
            .map(|s| {
                let values = self.view.available_values(s.as_str()).unwrap_or_default();
                (s, values)
            })
            .collect()
    }

    fn run_tokens(&mut self, tokens: Vec<(String, Vec<(SlotId, String)>)>, ignored: Vec<String>) -> ApplyReport {
        let offers_before = self.offers();
        let mut turn = TurnContext::default();
        let mut report = ApplyReport { ignored, ..Default::default() };
        let mut notes = Vec::new();

        for (phrase, bindings) in tokens {
            let reject =
                |reason: RejectReason, detail: String| RejectedToken { phrase: phrase.clone(), reason, detail };
            if self.pending.is_some() {
                report.rejected.push(reject(RejectReason::ConfirmationPending, "awaiting confirmation".into()));
                continue;
            }
            let Some((slot, value)) = resolve_binding(&self.state, &bindings).cloned() else {
                let slots: Vec<&str> = bindings.iter().map(|(s, _)| s.as_str()).collect();
                report.rejected.push(reject(RejectReason::Ambiguous, format!("could be any of: {}", slots.join(", "))));
                continue;
            };
            let mut attempt = turn.clone();
            let next = match self.state.apply_token(&mut attempt, &slot, value.clone()) {
                Ok(next) => next,
                Err(e) => {
                    report.rejected.push(reject(RejectReason::from(&e), e.to_string()));
                    continue;
                }
            };
            let narrowed = self.view.restrict(slot.as_str(), &value).expect("bound slot is a catalog attribute");
            if narrowed.record_count() == 0 {
                report.rejected.push(reject(
                    RejectReason::NoMatchingRecords,
                    format!("no records match {slot} = {value} together with the earlier choices"),
                ));
                continue;
            }
            let before = self.checkpoint();
            turn = attempt;
            let label = self.label(&slot, &value);
            self.state = next;
            self.view = narrowed;
            self.breadcrumb.push(Crumb {
                slot: slot.clone(),
                value: value.clone(),
                label: label.clone(),
                source: FillSource::User,
            });
            report.accepted.push(AcceptedToken { phrase: phrase.clone(), slot: slot.clone(), value: value.clone() });
            if confirmation_gate(self.bound.spec.slot_meta.get(&slot)) == Gate::PendingConfirmation {
                notes.push(Notification {
                    kind: NoticeKind::ConfirmationRequested,
                    message: format!("Did you say {label} for {slot}? Say yes or no."),
                });
                self.pending = Some(Pending { slot, value, label, before, offers_before: offers_before.clone() });
            }
        }

        for r in &report.rejected {
            notes.push(Notification {
                kind: NoticeKind::Rejected,
                message: format!("\"{}\" was not accepted: {}", r.phrase, r.detail),
            });
        }
        for words in &report.ignored {
            notes.push(Notification { kind: NoticeKind::Ignored, message: format!("Ignored \"{words}\".") });
        }
        if !report.accepted.is_empty() && self.pending.is_none() {
            let motivators = self.motivate();
            notes.extend(self.motivator_notices(&motivators, &offers_before));
            report.motivators = Some(motivators);
        }
        self.rerender(notes);
        report
    }

    fn answer_confirmation(&mut self, yes: bool) -> ApplyReport {
        let phrase = if yes { YES } else { NO };
        let Some(pending) = self.pending.take() else {
            let rejected = RejectedToken {
                phrase: phrase.to_string(),
                reason: RejectReason::NothingToConfirm,
                detail: "there is nothing to confirm".into(),
            };
            let note = Notification { kind: NoticeKind::Rejected, message: "There is nothing to confirm.".into() };
            self.rerender(vec![note]);
            return ApplyReport { rejected: vec![rejected], ..Default::default() };
        };
        let mut notes = Vec::new();
        let action = if yes {
            notes.push(Notification {
                kind: NoticeKind::Confirmed,
                message: format!("Confirmed {} for {}.", pending.label, pending.slot),
            });
            ReportAction::Confirmed
        } else {
            self.state = pending.before.state;
            self.view = pending.before.view;
            self.breadcrumb = pending.before.breadcrumb;
            notes.push(Notification {
                kind: NoticeKind::RolledBack,
                message: format!("Discarded {} for {}.", pending.label, pending.slot),
            });
            ReportAction::RolledBack
        };
        let motivators = self.motivate();
        notes.extend(self.motivator_notices(&motivators, &pending.offers_before));
        self.rerender(notes);
        ApplyReport { action, motivators: Some(motivators), ..Default::default() }
    }

    fn show_results(&mut self) -> ApplyReport {
        if self.status == SessionStatus::InProgress {
            for slot in self.state.unfilled_slots() {
                self.state = self.state.drop_slot(&slot);
                self.dropped.push(slot);
            }
            self.results = self.view.live_ids().to_vec();
        }
        self.status = SessionStatus::Results;
        self.rerender(Vec::new());
        ApplyReport { action: ReportAction::Results, ..Default::default() }
    }

    fn motivate(&mut self) -> MotivatorReport {
        let (state, view, report) = run_motivators(&self.state, &self.view);
        self.state = state;
        self.view = view;
        for (slot, value) in &report.auto_filled {
            let label = self.label(slot, value);
            self.breadcrumb.push(Crumb { slot: slot.clone(), value: value.clone(), label, source: FillSource::Auto });
        }
        self.dropped.extend(report.removed_slots.iter().cloned());
        if let DialogStatus::Complete { records } = &report.status {
            self.status = SessionStatus::Complete;
            self.results = records.clone();
        }
        report
    }

    fn motivator_notices(
        &self,
        report: &MotivatorReport,
        offers_before: &IndexMap<SlotId, Vec<String>>,
    ) -> Vec<Notification> {
        let mut notes = Vec::new();
        for (slot, value) in &report.auto_filled {
            notes.push(Notification {
                kind: NoticeKind::AutoFilled,
                message: format!("{slot} is {}, the only remaining choice.", self.label(slot, value)),
            });
        }
        for slot in &report.removed_slots {
            notes.push(Notification {
                kind: NoticeKind::SlotRemoved,
                message: format!("{slot} no longer needs to be specified."),
            });
        }
        if self.status == SessionStatus::InProgress {
            let now = self.offers();
            for (slot, before) in offers_before {
                let Some(after) = now.get(slot) else { continue };
                let gone: Vec<String> =
                    before.iter().filter(|v| !after.contains(v)).map(|v| self.label(slot, v)).collect();
                if !gone.is_empty() {
                    notes.push(Notification {
                        kind: NoticeKind::ValuesRemoved,
                        message: format!("No longer available for {slot}: {}.", gone.join(", ")),
                    });
                }
            }
        }
        notes
    }

    fn rerender(&mut self, notifications: Vec<Notification>) {
        let active = self.pending.is_none() && self.status == SessionStatus::InProgress;
        let solicitation = if active {
            self.state.current_solicitation().map(|slot| {
                let count = self.prompt_counts.entry(slot.clone()).or_insert(0);
                let prompt = self
                    .bound
                    .spec
                    .slot_meta
                    .get(&slot)
                    .map_or_else(|| format!("Choose a {slot}."), |m| m.prompt(*count).to_string());
                *count += 1;
                let links = self
                    .view
                    .available_values(slot.as_str())
                    .unwrap_or_default()
                    .into_iter()
                    .map(|v| Link { label: self.label(&slot, &v), value: v })
                    .collect();
                Solicitation { slot, prompt, links }
            })
        } else {
            None
        };
        let out_of_turn = if active {
            let slots: Vec<SlotId> = self
                .state
                .legal_first_slots()
                .into_iter()
                .filter(|s| solicitation.as_ref().is_none_or(|sol| &sol.slot != s))
                .collect();
            let hint = if slots.is_empty() {
                String::new()
            } else {
                let names: Vec<&str> = slots.iter().map(SlotId::as_str).collect();
                format!("You may also say: {}.", names.join(", "))
            };
            OutOfTurn { slots, hint }
        } else {
            OutOfTurn::default()
        };
        let results = if self.status == SessionStatus::InProgress {
            Vec::new()
        } else {
            self.results
                .iter()
                .filter_map(|&id| self.bound.catalog.record(id))
                .map(|r| ResultRecord { id: r.id, fields: r.payload() })
                .collect()
        };
        self.render = RenderModel {
            status: self.status,
            solicitation,
            out_of_turn,
            breadcrumb: self.breadcrumb.clone(),
            notifications,
            pending_confirmation: self.pending.is_some(),
            confirmation_phrase: self.pending.as_ref().map(|p| p.label.clone()),
            live_records: self.view.record_count(),
            results,
        };
    }
}
