//! Replayable interaction traces in JSON-lines form.
//!
//! ```text
//! {"session": {"dataset": "congress", "spec": "congress"}}
//! {"click": {"slot": "house", "value": "senator"}}
//! {"say": "Not sure, but represents the state of Indiana."}
//! {"expect": {"solicitation": "party", "offered": ["democrat", "republican"]}}
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. An input that fails
//! with an error must be followed by an `expect` naming that error.

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::registry::{Registry, RegistryError};
use crate::session::{Input, Session, SessionError, SessionStatus};
use crate::utterance::ApplyReport;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStep {
    Session { dataset: String, spec: String },
    Say(String),
    Click { slot: String, value: String },
    Expect(Expectation),
}

fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<String>>, D::Error> {
    Option::<String>::deserialize(d).map(Some)
}

/// Assertions on the session after the preceding input. Absent fields are
/// not checked; `"solicitation": null` asserts that nothing is solicited.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default, deserialize_with = "present", skip_serializing_if = "Option::is_none")]
    pub solicitation: Option<Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offered: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_of_turn: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<SessionStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub live_records: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_confirmation: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace has no session step before its first input")]
    NoSession,
    #[error("line {line}: {source}")]
    Registry { line: usize, source: RegistryError },
}

/// Outcome of the most recent input.
#[derive(Clone, Debug, Default)]
pub struct LastInput {
    pub report: Option<ApplyReport>,
    pub error: Option<SessionError>,
}

/// Differences between `expect` and the session; empty when satisfied.
pub fn check(expect: &Expectation, session: &Session, last: &LastInput) -> Vec<String> {
    let render = session.render_model();
    let mut diffs = Vec::new();
    let mut compare = |what: &str, want: String, got: String| {
        if want != got {
            diffs.push(format!("{what}: expected {want}, got {got}"));
        }
    };
    if let Some(want) = &expect.solicitation {
        let got = render.solicitation.as_ref().map(|s| s.slot.to_string());
        compare("solicitation", format!("{want:?}"), format!("{got:?}"));
    }
    if let Some(want) = &expect.offered {
        let got: Vec<String> =
            render.solicitation.iter().flat_map(|s| s.links.iter().map(|l| l.value.clone())).collect();
        compare("offered", format!("{want:?}"), format!("{got:?}"));
    }
    if let Some(want) = &expect.out_of_turn {
        let got: Vec<String> = render.out_of_turn.slots.iter().map(ToString::to_string).collect();
        compare("out_of_turn", format!("{want:?}"), format!("{got:?}"));
    }
    if let Some(want) = expect.status {
        compare("status", format!("{want:?}"), format!("{:?}", render.status));
    }
    if let Some(want) = &expect.results {
        let got: Vec<&str> = render.results.iter().filter_map(|r| r.name()).collect();
        compare("results", format!("{want:?}"), format!("{got:?}"));
    }
    if let Some(want) = expect.live_records {
        compare("live_records", want.to_string(), render.live_records.to_string());
    }
    if let Some(want) = expect.pending_confirmation {
        compare("pending_confirmation", want.to_string(), render.pending_confirmation.to_string());
    }
    let report = last.report.as_ref();
    if let Some(want) = expect.accepted {
        compare("accepted", want.to_string(), report.map_or(0, |r| r.accepted.len()).to_string());
    }
    if let Some(want) = expect.rejected {
        compare("rejected", want.to_string(), report.map_or(0, |r| r.rejected.len()).to_string());
    }
    if let Some(want) = &expect.error {
        let got = last.error.as_ref().map_or("none", SessionError::code);
        compare("error", want.clone(), got.to_string());
    }
    diffs
}

pub fn parse_trace(text: &str) -> Result<Vec<(usize, TraceStep)>, TraceError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            serde_json::from_str(l)
                .map(|step| (line, step))
                .map_err(|e| TraceError::Parse { line, message: e.to_string() })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayFailure {
    pub line: usize,
    pub diffs: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplayReport {
    pub inputs: usize,
    pub expectations: usize,
    /// One line per step, in order.
    pub log: Vec<String>,
    pub failure: Option<ReplayFailure>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Replays a trace against sessions created from `registry`. Stops at the
/// first failed expectation.
pub fn replay(registry: &Registry, text: &str, grammar_limit: usize) -> Result<ReplayReport, TraceError> {
    let mut report = ReplayReport::default();
    let mut session: Option<Session> = None;
    let mut last = LastInput::default();
    let mut unchecked_error: Option<(usize, SessionError)> = None;

    for (line, step) in parse_trace(text)? {
        if let Some((at, err)) = unchecked_error.take() {
            if !matches!(&step, TraceStep::Expect(e) if e.error.is_some()) {
                report.failure =
                    Some(ReplayFailure { line: at, diffs: vec![format!("unexpected error: {} ({err})", err.code())] });
                return Ok(report);
            }
        }
        match step {
            TraceStep::Session { dataset, spec } => {
                let s = registry
                    .create_session_with_limit(&dataset, &spec, grammar_limit)
                    .map_err(|source| TraceError::Registry { line, source })?;
                report.log.push(format!("{line}: session {dataset}/{spec}"));
                session = Some(s);
                last = LastInput::default();
            }
            TraceStep::Say(_) | TraceStep::Click { .. } => {
                let s = session.as_mut().ok_or(TraceError::NoSession)?;
                let input = match step {
                    TraceStep::Say(text) => Input::Say(text),
                    TraceStep::Click { slot, value } => Input::Click { slot, value },
                    _ => unreachable!(),
                };
                report.log.push(format!("{line}: {}", serde_json::to_string(&input).unwrap_or_default()));
                report.inputs += 1;
                last = match s.handle(input) {
                    Ok(r) => LastInput { report: Some(r), error: None },
                    Err(e) => {
                        unchecked_error = Some((line, e.clone()));
                        LastInput { report: None, error: Some(e) }
                    }
                };
            }
            TraceStep::Expect(expect) => {
                let s = session.as_ref().ok_or(TraceError::NoSession)?;
                report.expectations += 1;
                let diffs = check(&expect, s, &last);
                if !diffs.is_empty() {
                    report.log.push(format!("{line}: expect FAILED"));
                    report.failure = Some(ReplayFailure { line, diffs });
                    return Ok(report);
                }
                report.log.push(format!("{line}: expect ok"));
            }
        }
    }
    if let Some((line, err)) = unchecked_error {
        report.failure = Some(ReplayFailure { line, diffs: vec![format!("unexpected error: {} ({err})", err.code())] });
    }
    Ok(report)
}
