//! Dialogs as stager trees and the staging transformations that simplify them.
//!
//! A dialog is a tree whose leaves are slots and whose inner nodes carry a
//! stager. The stager decides which orderings of slot fillings are legal:
//!
//! * an **interpreter** only accepts its current slot, one token per utterance;
//! * a **curryer** only accepts prefixes of its children in order;
//! * a **partial evaluator** accepts its children in any order.
//!
//! Every accepted token removes a leaf. When a token enters a subdialog of a
//! partial evaluator without completing it, that partial evaluator is rewritten
//! into a curryer whose first child is the entered subdialog, so the subdialog
//! has to be finished before any sibling may be addressed. Normalization
//! collapses unary composites, which turns the curryer back into the original
//! partial evaluator once the entered subdialog completes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StagerKind {
    Interpreter,
    PartialEvaluator,
    Curryer,
}

impl StagerKind {
    pub const ALL: [StagerKind; 3] = [StagerKind::Interpreter, StagerKind::PartialEvaluator, StagerKind::Curryer];

    /// Short notation used in DialogXML and in tree rendering.
    pub fn code(self) -> &'static str {
        match self {
            StagerKind::Interpreter => "I",
            StagerKind::PartialEvaluator => "PE",
            StagerKind::Curryer => "C",
        }
    }

    /// Case-insensitive inverse of [`StagerKind::code`].
    pub fn from_code(code: &str) -> Option<StagerKind> {
        match code.trim().to_ascii_lowercase().as_str() {
            "i" => Some(StagerKind::Interpreter),
            "pe" => Some(StagerKind::PartialEvaluator),
            "c" => Some(StagerKind::Curryer),
            _ => None,
        }
    }
}

/// Name of a dialog slot. Always lowercased and trimmed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(String);

impl SlotId {
    pub fn new(name: &str) -> SlotId {
        SlotId(name.trim().to_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SlotId {
    fn from(s: &str) -> Self {
        SlotId::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Composite {
    pub id: String,
    pub stager: StagerKind,
    pub children: Vec<DialogTree>,
    /// Set on curryers produced by [`restructure`]; kept for trace output only.
    pub restructured_from: Option<StagerKind>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogTree {
    Leaf(SlotId),
    Composite(Composite),
}

impl DialogTree {
    pub fn leaf(name: &str) -> DialogTree {
        DialogTree::Leaf(SlotId::new(name))
    }

    pub fn composite(id: impl Into<String>, stager: StagerKind, children: Vec<DialogTree>) -> DialogTree {
        DialogTree::Composite(Composite { id: id.into(), stager, children, restructured_from: None })
    }

    /// Slots in canonical (depth-first, left-to-right) order.
    pub fn slots(&self) -> Vec<SlotId> {
        let mut out = Vec::new();
        self.collect_slots(&mut out);
        out
    }

    fn collect_slots(&self, out: &mut Vec<SlotId>) {
        match self {
            DialogTree::Leaf(s) => out.push(s.clone()),
            DialogTree::Composite(c) => c.children.iter().for_each(|ch| ch.collect_slots(out)),
        }
    }

    pub fn contains(&self, slot: &SlotId) -> bool {
        match self {
            DialogTree::Leaf(s) => s == slot,
            DialogTree::Composite(c) => c.children.iter().any(|ch| ch.contains(slot)),
        }
    }

    pub fn slot_count(&self) -> usize {
        match self {
            DialogTree::Leaf(_) => 1,
            DialogTree::Composite(c) => c.children.iter().map(DialogTree::slot_count).sum(),
        }
    }

    /// Composites on the path from this node down to `slot`, outermost first.
    fn path_to(&self, slot: &SlotId) -> Vec<&Composite> {
        let mut path = Vec::new();
        let mut node = self;
        while let DialogTree::Composite(c) = node {
            match c.children.iter().find(|ch| ch.contains(slot)) {
                Some(child) => {
                    path.push(c);
                    node = child;
                }
                None => break,
            }
        }
        path
    }

    /// Two trees are structurally equal when they render identically, i.e.
    /// they agree on stagers, nesting and slot order (node ids are ignored).
    pub fn structurally_eq(&self, other: &DialogTree) -> bool {
        self.to_string() == other.to_string()
    }
}

/// Renders as `PE[C[e1 e2] C[c1 c2]]`.
impl fmt::Display for DialogTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DialogTree::Leaf(s) => write!(f, "{s}"),
            DialogTree::Composite(c) => {
                write!(f, "{}[", c.stager.code())?;
                for (i, ch) in c.children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{ch}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bad tree notation at byte {pos}: {msg}")]
pub struct NotationError {
    pub pos: usize,
    pub msg: String,
}

/// Parses the bracket notation produced by `Display`. Composite ids are
/// generated as `n0`, `n1`, ... in pre-order.
impl FromStr for DialogTree {
    type Err = NotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = NotationParser { src: s, pos: 0, next_id: 0 };
        let tree = parser.tree()?;
        parser.skip_ws();
        if parser.pos != s.len() {
            return Err(parser.err("trailing input"));
        }
        Ok(tree)
    }
}

struct NotationParser<'a> {
    src: &'a str,
    pos: usize,
    next_id: usize,
}

impl NotationParser<'_> {
    fn err(&self, msg: &str) -> NotationError {
        NotationError { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '[' || c == ']' || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn tree(&mut self) -> Result<DialogTree, NotationError> {
        self.skip_ws();
        let word = self.word().to_string();
        if word.is_empty() {
            return Err(self.err("expected a slot or stager"));
        }
        let open = self.src[self.pos..].chars().next();
        let close = match open {
            Some('[') => ']',
            Some('(') => ')',
            _ => return Ok(DialogTree::leaf(&word)),
        };
        let stager = StagerKind::from_code(&word).ok_or_else(|| self.err("unknown stager"))?;
        self.pos += 1;
        let id = format!("n{}", self.next_id);
        self.next_id += 1;
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.src[self.pos..].chars().next() {
                Some(c) if c == close => {
                    self.pos += 1;
                    break;
                }
                Some(_) => children.push(self.tree()?),
                None => return Err(self.err("unterminated composite")),
            }
        }
        if children.is_empty() {
            return Err(self.err("empty composite"));
        }
        Ok(DialogTree::composite(id, stager, children))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StagingError {
    #[error("slot `{0}` may not be specified at this point of the dialog")]
    SlotNotLegal(SlotId),
    #[error("slot `{0}` has already been filled")]
    SlotAlreadyFilled(SlotId),
    #[error("slot `{0}` is governed by an interpreter that already consumed a token this utterance")]
    InterpreterTurnExhausted(SlotId),
    #[error("{unfilled} unfilled slots exceed the enumeration bound {bound}")]
    EnumerationTooLarge { unfilled: usize, bound: usize },
    #[error("slot `{0}` appears more than once in the dialog")]
    DuplicateSlot(SlotId),
}

/// Bookkeeping for one utterance: which interpreters have consumed a token,
/// together with every slot each of them governed at the time.
///
/// Slots are recorded rather than just node ids because normalization may
/// collapse the interpreter node away while the utterance is still running.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TurnContext {
    charged: BTreeMap<String, BTreeSet<SlotId>>,
}

impl TurnContext {
    pub fn charged_interpreters(&self) -> impl Iterator<Item = &str> {
        self.charged.keys().map(String::as_str)
    }

    pub fn is_exhausted(&self, slot: &SlotId) -> bool {
        self.charged.values().any(|slots| slots.contains(slot))
    }
}

/// The dialog tree together with the fillings received so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DialogState {
    tree: Option<DialogTree>,
    fillings: IndexMap<SlotId, String>,
    canonical: Arc<Vec<SlotId>>,
}

impl DialogState {
    pub fn new(tree: DialogTree) -> Result<DialogState, StagingError> {
        let slots = tree.slots();
        let mut seen = HashSet::new();
        for s in &slots {
            if !seen.insert(s) {
                return Err(StagingError::DuplicateSlot(s.clone()));
            }
        }
        Ok(DialogState { tree: Some(tree), fillings: IndexMap::new(), canonical: Arc::new(slots) })
    }

    pub fn tree(&self) -> Option<&DialogTree> {
        self.tree.as_ref()
    }

    pub fn fillings(&self) -> &IndexMap<SlotId, String> {
        &self.fillings
    }

    /// Every slot of the original dialog, in document order.
    pub fn canonical_slots(&self) -> &[SlotId] {
        &self.canonical
    }

    pub fn canonical_index(&self, slot: &SlotId) -> Option<usize> {
        self.canonical.iter().position(|s| s == slot)
    }

    /// Slots still present in the tree, in canonical order.
    pub fn unfilled_slots(&self) -> Vec<SlotId> {
        let mut slots = self.tree.as_ref().map(DialogTree::slots).unwrap_or_default();
        self.sort_canonical(&mut slots);
        slots
    }

    fn sort_canonical(&self, slots: &mut [SlotId]) {
        slots.sort_by_key(|s| self.canonical_index(s).unwrap_or(usize::MAX));
    }

    /// Removes filled leaves, empty composites and unary composites.
    pub fn normalize(&self) -> DialogState {
        let tree = self.tree.clone().and_then(|t| normalize_tree(t, &self.fillings));
        DialogState { tree, ..self.clone() }
    }

    pub fn is_complete(&self) -> bool {
        self.normalize().tree.is_none()
    }

    /// Slots that may legally be specified next, in canonical order.
    pub fn legal_first_slots(&self) -> Vec<SlotId> {
        let mut out = Vec::new();
        if let Some(tree) = &self.tree {
            first_slots(tree, &mut out);
        }
        self.sort_canonical(&mut out);
        out
    }

    /// The slot rendered as hyperlinks: the canonically first legal slot.
    pub fn current_solicitation(&self) -> Option<SlotId> {
        self.legal_first_slots().into_iter().next()
    }

    /// Accepts one user token, restructuring partial evaluators along the
    /// token's path and normalizing the result.
    pub fn apply_token(
        &self,
        turn: &mut TurnContext,
        slot: &SlotId,
        value: impl Into<String>,
    ) -> Result<DialogState, StagingError> {
        self.fill(Some(turn), slot, value.into(), true)
    }

    /// Records a system-chosen filling. Legality is still enforced against
    /// the tree (the slot must be unfilled and present) but no restructuring
    /// happens and no interpreter is charged.
    pub fn fill_without_restructure(
        &self,
        slot: &SlotId,
        value: impl Into<String>,
    ) -> Result<DialogState, StagingError> {
        self.fill(None, slot, value.into(), false)
    }

    fn fill(
        &self,
        turn: Option<&mut TurnContext>,
        slot: &SlotId,
        value: String,
        restructure_path: bool,
    ) -> Result<DialogState, StagingError> {
        if self.fillings.contains_key(slot) {
            return Err(StagingError::SlotAlreadyFilled(slot.clone()));
        }
        let state = self.normalize();
        let tree = match &state.tree {
            Some(t) if t.contains(slot) => t,
            _ => return Err(StagingError::SlotNotLegal(slot.clone())),
        };
        if let Some(turn) = turn {
            if !state.legal_first_slots().contains(slot) {
                return Err(StagingError::SlotNotLegal(slot.clone()));
            }
            if turn.is_exhausted(slot) {
                return Err(StagingError::InterpreterTurnExhausted(slot.clone()));
            }
            for node in tree.path_to(slot) {
                if node.stager == StagerKind::Interpreter {
                    let governed = DialogTree::Composite(node.clone()).slots();
                    turn.charged.insert(node.id.clone(), governed.into_iter().collect());
                }
            }
        }
        let tree = enter(tree.clone(), slot, restructure_path);
        let mut fillings = state.fillings.clone();
        fillings.insert(slot.clone(), value);
        Ok(DialogState { tree, fillings, canonical: state.canonical.clone() }.normalize())
    }

    /// Removes an unfilled slot without recording a filling.
    pub fn drop_slot(&self, slot: &SlotId) -> DialogState {
        let tree = self.tree.clone().and_then(|t| enter(t, slot, false));
        DialogState { tree, ..self.clone() }.normalize()
    }

    /// All complete slot orderings reachable from this state, treating each
    /// token as its own utterance. The empty sequence stands for an already
    /// complete dialog.
    pub fn enumerate_sequences(&self, bound: usize) -> Result<BTreeSet<Vec<SlotId>>, StagingError> {
        self.enumerate_sequences_with(bound, Execution::default())
    }

    pub fn enumerate_sequences_with(
        &self,
        bound: usize,
        exec: Execution,
    ) -> Result<BTreeSet<Vec<SlotId>>, StagingError> {
        let state = self.normalize();
        let unfilled = state.tree.as_ref().map_or(0, DialogTree::slot_count);
        if unfilled > bound {
            return Err(StagingError::EnumerationTooLarge { unfilled, bound });
        }
        let firsts = state.legal_first_slots();
        if firsts.is_empty() {
            return Ok(BTreeSet::from([Vec::new()]));
        }
        let branches = exec.map(&firsts, |slot| {
            let mut out = Vec::new();
            let next = state.apply_token(&mut TurnContext::default(), slot, "").expect("legal first slot is accepted");
            let mut prefix = vec![slot.clone()];
            walk_sequences(&next, &mut prefix, &mut out);
            out
        });
        Ok(branches.into_iter().flatten().collect())
    }

    /// All non-empty slot sequences accepted within a single utterance (one
    /// shared [`TurnContext`]).
    pub fn utterance_shapes(&self, bound: usize) -> Result<BTreeSet<Vec<SlotId>>, StagingError> {
        let state = self.normalize();
        let unfilled = state.tree.as_ref().map_or(0, DialogTree::slot_count);
        if unfilled > bound {
            return Err(StagingError::EnumerationTooLarge { unfilled, bound });
        }
        let mut out = BTreeSet::new();
        walk_utterances(&state, &TurnContext::default(), &mut Vec::new(), &mut out);
        Ok(out)
    }
}

fn walk_sequences(state: &DialogState, prefix: &mut Vec<SlotId>, out: &mut Vec<Vec<SlotId>>) {
    let firsts = state.legal_first_slots();
    if firsts.is_empty() {
        out.push(prefix.clone());
        return;
    }
    for slot in firsts {
        let next = state.apply_token(&mut TurnContext::default(), &slot, "").expect("legal first slot is accepted");
        prefix.push(slot);
        walk_sequences(&next, prefix, out);
        prefix.pop();
    }
}

fn walk_utterances(state: &DialogState, turn: &TurnContext, prefix: &mut Vec<SlotId>, out: &mut BTreeSet<Vec<SlotId>>) {
    for slot in state.legal_first_slots() {
        let mut turn = turn.clone();
        if let Ok(next) = state.apply_token(&mut turn, &slot, "") {
            prefix.push(slot);
            out.insert(prefix.clone());
            walk_utterances(&next, &turn, prefix, out);
            prefix.pop();
        }
    }
}

fn first_slots(tree: &DialogTree, out: &mut Vec<SlotId>) {
    match tree {
        DialogTree::Leaf(s) => out.push(s.clone()),
        DialogTree::Composite(c) => match c.stager {
            StagerKind::Interpreter | StagerKind::Curryer => {
                if let Some(first) = c.children.first() {
                    first_slots(first, out);
                }
            }
            StagerKind::PartialEvaluator => c.children.iter().for_each(|ch| first_slots(ch, out)),
        },
    }
}

fn normalize_tree(tree: DialogTree, fillings: &IndexMap<SlotId, String>) -> Option<DialogTree> {
    match tree {
        DialogTree::Leaf(s) => (!fillings.contains_key(&s)).then_some(DialogTree::Leaf(s)),
        DialogTree::Composite(mut c) => {
            c.children = c.children.into_iter().filter_map(|ch| normalize_tree(ch, fillings)).collect();
            match c.children.len() {
                0 => None,
                1 => c.children.pop(),
                _ => Some(DialogTree::Composite(c)),
            }
        }
    }
}

/// Removes the leaf for `slot`, restructuring every partial evaluator on the
/// way whose entered child is left incomplete.
fn enter(tree: DialogTree, slot: &SlotId, restructure_path: bool) -> Option<DialogTree> {
    match tree {
        DialogTree::Leaf(s) if &s == slot => None,
        leaf @ DialogTree::Leaf(_) => Some(leaf),
        DialogTree::Composite(mut c) => {
            let Some(idx) = c.children.iter().position(|ch| ch.contains(slot)) else {
                return Some(DialogTree::Composite(c));
            };
            let child = c.children.remove(idx);
            match enter(child, slot, restructure_path) {
                None if c.children.is_empty() => None,
                None => Some(DialogTree::Composite(c)),
                Some(rest) => {
                    let siblings = !c.children.is_empty();
                    c.children.insert(idx, rest);
                    let node = DialogTree::Composite(c);
                    if restructure_path && siblings && is_pe(&node) {
                        Some(restructure(node, idx))
                    } else {
                        Some(node)
                    }
                }
            }
        }
    }
}

fn is_pe(tree: &DialogTree) -> bool {
    matches!(tree, DialogTree::Composite(c) if c.stager == StagerKind::PartialEvaluator)
}

/// Rewrites a partial evaluator whose child at `entered` was entered but not
/// completed into `C[entered, PE[other children]]`. The other children keep
/// their relative order. Nodes that are not partial evaluators are returned
/// unchanged.
pub fn restructure(tree: DialogTree, entered: usize) -> DialogTree {
    let DialogTree::Composite(mut c) = tree else {
        return tree;
    };
    if c.stager != StagerKind::PartialEvaluator || entered >= c.children.len() {
        return DialogTree::Composite(c);
    }
    let focus = c.children.remove(entered);
    let mut children = vec![focus];
    if !c.children.is_empty() {
        children.push(DialogTree::Composite(Composite {
            id: format!("{}/rest", c.id),
            stager: StagerKind::PartialEvaluator,
            children: c.children,
            restructured_from: None,
        }));
    }
    DialogTree::Composite(Composite {
        id: c.id,
        stager: StagerKind::Curryer,
        children,
        restructured_from: Some(StagerKind::PartialEvaluator),
    })
}
