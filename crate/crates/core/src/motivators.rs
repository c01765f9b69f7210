//! Post-utterance housekeeping: pruning, completion, result collection and
//! the confirmation gate.

use indexmap::IndexMap;
use serde::Serialize;

use crate::dialogxml::SlotMeta;
use crate::staging::{DialogState, SlotId};
use crate::view::{Record, RecordId, View};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum DialogStatus {
    #[default]
    InProgress,
    Complete {
        records: Vec<RecordId>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MotivatorReport {
    pub auto_filled: Vec<(SlotId, String)>,
    pub removed_slots: Vec<SlotId>,
    /// Per remaining slot: catalog values no longer supported by the view.
    pub removed_values: IndexMap<SlotId, Vec<String>>,
    pub status: DialogStatus,
    /// Pruning rounds until the fixpoint was reached.
    pub rounds: usize,
}

/// Drops slots without support, auto-fills slots with a single supported
/// value, and repeats until nothing changes.
///
/// A slot is auto-filled only when every live record carries that one value;
/// if some live records are null for the slot, filling it would silently
/// discard them, so the slot stays on offer instead.
pub fn prune_dialog(state: &DialogState, view: &View) -> (DialogState, View, MotivatorReport) {
    let mut state = state.normalize();
    let mut view = view.clone();
    let mut report = MotivatorReport::default();
    let max_rounds = state.unfilled_slots().len() + 1;

    while report.rounds < max_rounds {
        report.rounds += 1;
        let mut changed = false;
        for slot in state.unfilled_slots() {
            let values = view.available_values(slot.as_str()).unwrap_or_default();
            match values.as_slice() {
                [] => {
                    state = state.drop_slot(&slot);
                    report.removed_slots.push(slot);
                    changed = true;
                }
                [only] if view.fully_defined(slot.as_str()).unwrap_or(false) => {
                    state = state
                        .fill_without_restructure(&slot, only.clone())
                        .expect("unfilled slot is present in the tree");
                    view = view.restrict(slot.as_str(), only).expect("bound slot");
                    report.auto_filled.push((slot, only.clone()));
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    for slot in state.unfilled_slots() {
        let available = view.available_values(slot.as_str()).unwrap_or_default();
        let removed: Vec<String> = view
            .catalog()
            .domain(slot.as_str())
            .unwrap_or_default()
            .into_iter()
            .filter(|v| !available.contains(v))
            .collect();
        if !removed.is_empty() {
            report.removed_values.insert(slot, removed);
        }
    }
    (state, view, report)
}

/// Completes the dialog when the view holds a single record or nothing is
/// left to solicit. Remaining slots are dropped on completion.
pub fn complete_dialog(state: &DialogState, view: &View) -> (DialogState, DialogStatus, Vec<SlotId>) {
    let state = state.normalize();
    if view.record_count() == 1 || state.is_complete() {
        let dropped = state.unfilled_slots();
        let state = dropped.iter().fold(state, |s, slot| s.drop_slot(slot));
        let status = DialogStatus::Complete { records: view.live_ids().to_vec() };
        (state, status, dropped)
    } else {
        (state, DialogStatus::InProgress, Vec::new())
    }
}

/// Prune, then complete: the per-utterance motivator pass.
pub fn run_motivators(state: &DialogState, view: &View) -> (DialogState, View, MotivatorReport) {
    let (state, view, mut report) = prune_dialog(state, view);
    let (state, status, dropped) = complete_dialog(&state, &view);
    if matches!(status, DialogStatus::Complete { .. }) {
        report.removed_values.clear();
    }
    report.removed_slots.extend(dropped);
    report.status = status;
    (state, view, report)
}

/// Flat listing of the live records.
pub fn collect_results(view: &View) -> Vec<Record> {
    view.records().cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    PendingConfirmation,
    Committed,
}

pub fn confirmation_gate(meta: Option<&SlotMeta>) -> Gate {
    match meta {
        Some(m) if m.confirm => Gate::PendingConfirmation,
        _ => Gate::Committed,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::staging::TurnContext;
    use crate::view::ingest_csv;

    fn congress() -> (DialogState, View) {
        let cat = ingest_csv(include_str!("../../../data/datasets/congress.csv")).unwrap();
        let st = DialogState::new("PE[house party state seat district]".parse().unwrap()).unwrap();
        (st, View::new(Arc::new(cat)))
    }

    fn user(st: &DialogState, view: &View, slot: &str, value: &str) -> (DialogState, View) {
        let st = st.apply_token(&mut TurnContext::default(), &SlotId::new(slot), value).unwrap();
        (st, view.restrict(slot, value).unwrap())
    }

    #[test]
    fn pizza_topping_auto_filled() {
        let cat = ingest_csv(
            "size,topping,crust\nsmall,pepperoni,thin\nsmall,pepperoni,thick\nlarge,mushroom,thin\nlarge,pepperoni,thin\n",
        )
        .unwrap();
        let st = DialogState::new("PE[size topping crust]".parse().unwrap()).unwrap();
        let view = View::new(Arc::new(cat));
        let (st, view) = user(&st, &view, "size", "small");
        let (st, view, report) = prune_dialog(&st, &view);
        assert_eq!(report.auto_filled, vec![(SlotId::new("topping"), "pepperoni".to_string())]);
        assert_eq!(st.unfilled_slots(), vec![SlotId::new("crust")]);
        assert_eq!(view.record_count(), 2);
        assert!(report.removed_values.is_empty());
    }

    #[test]
    fn indiana_loses_independent() {
        let (st, view) = congress();
        let (st, view) = user(&st, &view, "state", "indiana");
        let (_, _, report) = prune_dialog(&st, &view);
        assert_eq!(report.removed_values[&SlotId::new("party")], vec!["independent"]);
        assert!(report.auto_filled.is_empty());
    }

    #[test]
    fn no_op_when_all_slots_multi_valued() {
        let (st, view) = congress();
        let (st2, view2, report) = prune_dialog(&st, &view);
        assert_eq!(st2, st);
        assert_eq!(view2, view);
        assert!(report.auto_filled.is_empty() && report.removed_slots.is_empty());
        assert_eq!(report.rounds, 1);
    }

    #[test]
    fn senator_drops_district() {
        let (st, view) = congress();
        let (st, view) = user(&st, &view, "house", "senator");
        let (st, _, report) = prune_dialog(&st, &view);
        assert_eq!(report.removed_slots, vec![SlotId::new("district")]);
        assert!(!st.unfilled_slots().contains(&SlotId::new("district")));
    }

    #[test]
    fn singleton_with_nulls_is_not_auto_filled() {
        // Vermont: one representative (at-large district) and two senators.
        let (st, view) = congress();
        let (st, view) = user(&st, &view, "state", "vermont");
        let (st, view, report) = prune_dialog(&st, &view);
        assert!(report.auto_filled.is_empty());
        assert_eq!(view.record_count(), 3);
        assert!(st.unfilled_slots().contains(&SlotId::new("district")));
    }

    #[test]
    fn unique_record_completes() {
        let (st, view) = congress();
        let (st, view) = user(&st, &view, "house", "senator");
        let (st, view) = user(&st, &view, "party", "republican");
        let (st, view) = user(&st, &view, "state", "minnesota");
        let (st, view, report) = run_motivators(&st, &view);
        assert!(st.is_complete());
        let DialogStatus::Complete { records } = &report.status else { panic!("not complete") };
        assert_eq!(records.len(), 1);
        assert_eq!(view.catalog().record(records[0]).unwrap().display("name"), Some("Norm Coleman"));
        assert_eq!(report.auto_filled, vec![(SlotId::new("seat"), "junior".to_string())]);
        assert!(report.rounds <= 6);
    }

    #[test]
    fn empty_tree_completes_with_many_records() {
        let cat = ingest_csv("a,b\nx,1\nx,2\nx,3\n").unwrap();
        let view = View::new(Arc::new(cat));
        let st = DialogState::new("PE[a]".parse().unwrap()).unwrap();
        let st = st.apply_token(&mut TurnContext::default(), &SlotId::new("a"), "x").unwrap();
        let (_, status, dropped) = complete_dialog(&st, &view.restrict("a", "x").unwrap());
        assert_eq!(status, DialogStatus::Complete { records: vec![0, 1, 2] });
        assert!(dropped.is_empty());
    }

    #[test]
    fn fresh_is_in_progress() {
        let (st, view) = congress();
        let (_, _, report) = run_motivators(&st, &view);
        assert_eq!(report.status, DialogStatus::InProgress);
    }

    #[test]
    fn results_listing() {
        let (st, view) = congress();
        assert_eq!(collect_results(&view).len(), 12);
        let (_, senators) = user(&st, &view, "house", "senator");
        let listed = collect_results(&senators);
        assert_eq!(listed.len(), 8);
        assert!(listed.iter().all(|r| r.value("house") == Some("senator")));
        assert!(collect_results(&view.restrict("state", "texas").unwrap()).is_empty());
    }

    #[test]
    fn gate() {
        let meta = SlotMeta { prompts: vec!["p".into()], confirm: true };
        assert_eq!(confirmation_gate(Some(&meta)), Gate::PendingConfirmation);
        let meta = SlotMeta { confirm: false, ..meta };
        assert_eq!(confirmation_gate(Some(&meta)), Gate::Committed);
        assert_eq!(confirmation_gate(None), Gate::Committed);
    }
}
