mod common;

use std::sync::Arc;

use stager_core::dialogxml::parse_dialog_spec;
use stager_core::registry::{Registry, RegistryError};
use stager_core::session::{FillSource, NoticeKind};
use stager_core::utterance::ReportAction;
use stager_core::{ingest_csv, Input, RejectReason, SessionError, SessionStatus, SlotId};

use common::criteria::medium_equivalence;
use common::{registry, session};

fn offered(s: &stager_core::Session) -> Vec<String> {
    s.render_model().solicitation.iter().flat_map(|x| x.links.iter().map(|l| l.value.clone())).collect()
}

#[test]
fn fresh_congress_page() {
    let s = session("congress", "congress");
    let r = s.render_model();
    let sol = r.solicitation.as_ref().unwrap();
    assert_eq!(sol.slot, SlotId::new("house"));
    assert_eq!(sol.prompt, "Welcome. Are you looking for a Senator or a Representative?");
    assert_eq!(sol.links.iter().map(|l| l.label.as_str()).collect::<Vec<_>>(), ["Senator", "Representative"]);
    assert_eq!(r.out_of_turn.slots.len(), 4);
    assert!(r.out_of_turn.hint.starts_with("You may also say: party"));
}

#[test]
fn fuel_solicits_year_first() {
    let s = session("cars", "fuel");
    assert_eq!(s.render_model().solicitation.as_ref().unwrap().slot, SlotId::new("year"));
}

#[test]
fn unknown_pair_errors() {
    let reg = registry();
    assert!(matches!(reg.create_session("nope", "congress"), Err(RegistryError::UnknownDataset(_))));
    assert!(matches!(reg.create_session("congress", "nope"), Err(RegistryError::UnknownSpec(_))));
    assert!(matches!(reg.create_session("cars", "congress"), Err(RegistryError::Bind(_))));
    let pairs: Vec<(String, String)> = reg.pairs().into_iter().map(|p| (p.dataset, p.spec)).collect();
    assert_eq!(
        pairs,
        [("breakfast", "breakfast"), ("cars", "fuel"), ("congress", "congress")]
            .map(|(a, b)| (a.to_string(), b.to_string()))
    );
}

#[test]
fn tapered_prompt_on_second_solicitation() {
    let mut s = session("congress", "congress");
    // An unrelated rejection re-renders the same solicitation.
    s.apply_utterance("gibberish").unwrap();
    assert_eq!(s.render_model().solicitation.as_ref().unwrap().prompt, "Senator or Representative?");
    s.apply_utterance("gibberish").unwrap();
    assert_eq!(s.render_model().solicitation.as_ref().unwrap().prompt, "Senator or Representative?");
}

#[test]
fn partial_acceptance_reports_the_illegal_token() {
    let mut s = session("breakfast", "breakfast");
    s.apply_utterance("espresso").unwrap();
    let report = s.apply_utterance("croissant black").unwrap();
    assert_eq!(report.accepted.len(), 1);
    assert_eq!(report.accepted[0].slot, SlotId::new("c2"));
    assert_eq!(report.rejected.len(), 1);
    assert_eq!(report.rejected[0].phrase, "croissant");
    assert_eq!(report.rejected[0].reason, RejectReason::SlotNotLegal);
    assert!(s.render_model().notifications.iter().any(|n| n.kind == NoticeKind::Rejected));
}

#[test]
fn token_without_supporting_record_is_rejected() {
    let mut s = session("congress", "congress");
    let report = s.apply_utterance("representative from minnesota").unwrap();
    assert_eq!(report.accepted.len(), 1);
    assert_eq!(report.rejected[0].reason, RejectReason::NoMatchingRecords);
    assert_eq!(report.ignored, vec!["from".to_string()]);
    assert_eq!(s.view().record_count(), 4);
}

#[test]
fn indiana_removes_independents_with_notice() {
    let mut s = session("congress", "congress");
    s.click("house", "senator").unwrap();
    let report = s.apply_utterance("Indiana").unwrap();
    assert_eq!(offered(&s), ["republican", "democrat"]);
    let m = report.motivators.unwrap();
    assert_eq!(m.removed_values[&SlotId::new("party")], vec!["independent".to_string()]);
    assert!(s
        .render_model()
        .notifications
        .iter()
        .any(|n| n.kind == NoticeKind::ValuesRemoved && n.message.contains("Independent")));
}

#[test]
fn auto_fill_shows_in_breadcrumb() {
    let mut s = session("congress", "congress");
    s.apply_utterance("senator republican minnesota").unwrap();
    let crumbs = &s.render_model().breadcrumb;
    assert_eq!(crumbs.len(), 4);
    assert_eq!(crumbs[3].slot, SlotId::new("seat"));
    assert_eq!(crumbs[3].source, FillSource::Auto);
    assert_eq!(s.status(), SessionStatus::Complete);
    assert_eq!(s.render_model().results[0].name(), Some("Norm Coleman"));
}

#[test]
fn show_me_results_lists_live_records() {
    let mut s = session("congress", "congress");
    s.click("house", "senator").unwrap();
    let report = s.apply_utterance("Show me results!").unwrap();
    assert_eq!(report.action, ReportAction::Results);
    assert_eq!(s.status(), SessionStatus::Results);
    assert_eq!(s.render_model().results.len(), 8);
    assert!(s.render_model().solicitation.is_none());
    assert_eq!(s.apply_utterance("indiana"), Err(SessionError::SessionComplete));
    assert!(matches!(s.click("party", "republican"), Err(SessionError::SessionComplete)));
}

#[test]
fn help_lists_every_open_slot() {
    let s = session("congress", "congress");
    let help = s.help();
    assert_eq!(help.slots.len(), 5);
    assert!(help.slots.iter().all(|h| h.sayable_now && !h.samples.is_empty()));
    assert_eq!(help.slots[0].samples, ["Senator", "Representative"]);
    let mut t = s.clone();
    let report = t.apply_utterance("What may I say?").unwrap();
    assert_eq!(report.help.unwrap(), help);
    assert_eq!(t.snapshot(), s.snapshot());
}

#[test]
fn stale_link_is_refused() {
    let mut s = session("congress", "congress");
    assert!(matches!(s.click("party", "democrat"), Err(SessionError::StaleLink { .. })));
    s.click("house", "senator").unwrap();
    assert!(matches!(s.click("house", "senator"), Err(SessionError::StaleLink { .. })));
}

fn confirming_registry() -> Registry {
    let mut reg = Registry::default();
    reg.insert_dataset("congress", ingest_csv(include_str!("../../../data/datasets/congress.csv")).unwrap());
    let spec = r#"<dialog id="top" stager="pe">
        <dialog-item name="house"/><dialog-item name="party" confirm="yes"/><dialog-item name="state"/>
    </dialog>"#;
    reg.insert_spec("confirming", parse_dialog_spec(spec).unwrap());
    reg
}

#[test]
fn confirmation_commit_and_rollback() {
    let reg = confirming_registry();
    let fresh = reg.create_session("congress", "confirming").unwrap();

    let mut s = fresh.clone();
    let report = s.apply_utterance("democrat vermont").unwrap();
    assert_eq!(report.accepted.len(), 1);
    assert_eq!(report.rejected[0].reason, RejectReason::ConfirmationPending);
    assert!(report.motivators.is_none());
    assert!(s.render_model().pending_confirmation);
    assert_eq!(s.render_model().confirmation_phrase.as_deref(), Some("Democrat"));
    assert!(s.render_model().solicitation.is_none());
    assert_eq!(s.grammar().reserved, ["yes", "no"]);
    assert_eq!(s.apply_utterance("show me results"), Err(SessionError::ConfirmationPending));
    assert!(matches!(s.click("house", "senator"), Err(SessionError::ConfirmationPending)));

    let mut yes = s.clone();
    assert_eq!(yes.apply_utterance("yes").unwrap().action, ReportAction::Confirmed);
    assert_eq!(yes.state().fillings().get(&SlotId::new("party")).map(String::as_str), Some("democrat"));
    assert!(!yes.render_model().pending_confirmation);

    let mut no = s.clone();
    assert_eq!(no.apply_utterance("No.").unwrap().action, ReportAction::RolledBack);
    assert_eq!(no.snapshot(), fresh.snapshot());

    let mut idle = fresh.clone();
    let report = idle.handle(Input::Say("yes".into())).unwrap();
    assert_eq!(report.rejected[0].reason, RejectReason::NothingToConfirm);
    assert_eq!(idle.snapshot(), fresh.snapshot());
}

#[test]
fn reserved_value_cannot_seed_a_session() {
    let mut reg = Registry::default();
    reg.insert_dataset("answers", ingest_csv("reply,name\nyes,a\nmaybe,b\n").unwrap());
    reg.insert_spec("ask", parse_dialog_spec(r#"<dialog stager="pe"><dialog-item name="reply"/></dialog>"#).unwrap());
    let err = reg.create_session("answers", "ask").unwrap_err();
    assert_eq!(err.code(), "ReservedPhraseCollision");
}

#[test]
fn replay_is_deterministic() {
    let run = || {
        let mut s = session("congress", "congress");
        let mut models = vec![serde_json::to_string(s.render_model()).unwrap()];
        for input in [Input::Click { slot: "house".into(), value: "senator".into() }, Input::Say("indiana".into())] {
            s.handle(input).unwrap();
            models.push(serde_json::to_string(s.render_model()).unwrap());
        }
        models
    };
    assert_eq!(run(), run());
}

#[test]
fn click_and_say_are_equivalent_on_both_traces() {
    assert!(medium_equivalence("dialog1").unwrap() >= 6);
    assert!(medium_equivalence("dialog2").unwrap() >= 6);
}

#[test]
fn sessions_share_the_catalog() {
    let reg = registry();
    let a = reg.create_session("congress", "congress").unwrap();
    let b = reg.create_session("congress", "congress").unwrap();
    assert!(Arc::ptr_eq(&a.bound().catalog, &b.bound().catalog));
}
