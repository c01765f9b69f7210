//! Checks shared by the integration tests and the acceptance runner.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stager_core::registry::Registry;
use stager_core::trace::{parse_trace, TraceStep};
use stager_core::utterance::{build_vocabulary, tokenize, Segment};
use stager_core::{dialogxml::parse_dialog_spec, ingest_csv, Execution, Input, Session};

use super::{registry, trace};

/// Full factorial branch(2) x party(3) x state(4) under a fresh curryer.
pub fn curryer_registry() -> Registry {
    let mut csv = String::from("branch,party,state,name\n");
    for b in ["senate", "house"] {
        for p in ["democrat", "republican", "independent"] {
            for s in ["ohio", "utah", "maine", "texas"] {
                csv.push_str(&format!("{b},{p},{s},{b} {p} {s}\n"));
            }
        }
    }
    let spec = r#"<dialog id="legislator" stager="c">
        <dialog-item name="branch"/><dialog-item name="party"/><dialog-item name="state"/>
    </dialog>"#;
    let mut reg = Registry::default();
    reg.insert_dataset("legislature", ingest_csv(&csv).unwrap());
    reg.insert_spec("curry", parse_dialog_spec(spec).unwrap());
    reg
}

/// Every phrase sequence of length 1..=max_len over the session's current
/// vocabulary that a fresh copy of the session accepts in full.
pub fn accepted_language(session: &Session, max_len: usize) -> BTreeSet<Vec<String>> {
    let vocab = build_vocabulary(session.state(), session.view()).unwrap();
    let phrases: Vec<String> = vocab.phrases().map(str::to_string).collect();
    let mut candidates: Vec<Vec<String>> = phrases.iter().map(|p| vec![p.clone()]).collect();
    let mut frontier = candidates.clone();
    for _ in 1..max_len {
        frontier = frontier
            .iter()
            .flat_map(|c| phrases.iter().map(move |p| c.iter().cloned().chain([p.clone()]).collect::<Vec<_>>()))
            .collect();
        candidates.extend(frontier.iter().cloned());
    }
    let verdicts = Execution::default().map(&candidates, |seq| {
        let mut s = session.clone();
        let report = s.apply_utterance(&seq.join(" ")).ok()?;
        (report.rejected.is_empty() && report.ignored.is_empty() && report.accepted.len() == seq.len())
            .then(|| seq.clone())
    });
    verdicts.into_iter().flatten().collect()
}

/// Applies `count` random pooled-phrase sequences to copies of `session`.
/// Every token must be accepted or rejected with a reason, and the view must
/// stay in step with the fillings. Returns the number of rejected tokens.
pub fn fuzz_pooled(session: &Session, count: u64, seed: u64) -> Result<usize, String> {
    let grammar = session.grammar();
    let pool: Vec<String> = grammar.token_pool.values().flatten().cloned().collect();
    if pool.is_empty() {
        return Err("empty token pool".into());
    }
    let seeds: Vec<u64> = (0..count).map(|i| seed.wrapping_mul(6364136223846793005).wrapping_add(i)).collect();
    let outcomes = Execution::default().map(&seeds, |&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let len = rng.random_range(1..=6);
        let seq: Vec<&String> = (0..len).map(|_| pool.choose(&mut rng).unwrap()).collect();
        let text = seq.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(" ");
        let mut sess = session.clone();
        let vocab = build_vocabulary(sess.state(), sess.view()).map_err(|e| e.to_string())?;
        let tokens = tokenize(&vocab, &text).iter().filter(|s| matches!(s, Segment::Token { .. })).count();
        let report = catch_unwind(AssertUnwindSafe(|| sess.apply_utterance(&text)))
            .map_err(|_| format!("panic on {text:?}"))?
            .map_err(|e| format!("error on {text:?}: {e}"))?;
        if report.accepted.len() + report.rejected.len() != tokens || !report.ignored.is_empty() {
            return Err(format!("{text:?}: {tokens} tokens but {report:?}"));
        }
        if report.rejected.iter().any(|r| r.detail.is_empty()) {
            return Err(format!("{text:?}: rejection without detail"));
        }
        let fillings: Vec<(String, String)> =
            sess.state().fillings().iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let mut constraints: Vec<(String, String)> =
            sess.view().constraints().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut sorted = fillings.clone();
        sorted.sort();
        constraints.sort();
        if sorted != constraints {
            return Err(format!("{text:?}: fillings {fillings:?} but view constraints {constraints:?}"));
        }
        Ok(report.rejected.len())
    });
    outcomes.into_iter().sum()
}

/// The session before every input of a trace and after the last one.
pub fn trace_states(name: &str) -> Vec<Session> {
    let reg = registry();
    let mut states = Vec::new();
    let mut current: Option<Session> = None;
    for (_, step) in parse_trace(&trace(name)).unwrap() {
        match step {
            TraceStep::Session { dataset, spec } => current = Some(reg.create_session(&dataset, &spec).unwrap()),
            TraceStep::Say(text) => {
                let s = current.as_mut().unwrap();
                states.push(s.clone());
                let _ = s.handle(Input::Say(text));
            }
            TraceStep::Click { slot, value } => {
                let s = current.as_mut().unwrap();
                states.push(s.clone());
                let _ = s.handle(Input::Click { slot, value });
            }
            TraceStep::Expect(_) => {}
        }
    }
    states.extend(current);
    states
}

/// Clicks every offered link and says its label instead; both must lead to
/// identical sessions. Returns the number of links compared.
pub fn medium_equivalence(name: &str) -> Result<usize, String> {
    let mut compared = 0;
    for state in trace_states(name) {
        let Some(sol) = state.render_model().solicitation.clone() else { continue };
        for link in &sol.links {
            let mut clicked = state.clone();
            let mut said = state.clone();
            let a = clicked.click(sol.slot.as_str(), &link.value).map_err(|e| e.to_string())?;
            let b = said.apply_utterance(&link.label).map_err(|e| e.to_string())?;
            if a != b || clicked.snapshot() != said.snapshot() || clicked.render_model() != said.render_model() {
                return Err(format!("{name}: click and say differ for {} = {}", sol.slot, link.value));
            }
            compared += 1;
        }
    }
    Ok(compared)
}
