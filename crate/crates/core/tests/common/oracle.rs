//! Reference semantics for stager trees, computed from the original tree
//! without any restructuring: the language of complete slot sequences.
//!
//! L(leaf s) = {s}; L(I[..]) = L(C[..]) = concatenation in child order;
//! L(PE[..]) = union over all child permutations of their concatenation.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stager_core::{DialogState, DialogTree, SlotId, StagerKind, TurnContext};

pub type Word = Vec<SlotId>;

fn concat(parts: &[BTreeSet<Word>]) -> BTreeSet<Word> {
    parts.iter().fold(BTreeSet::from([Vec::new()]), |acc, part| {
        acc.iter().flat_map(|a| part.iter().map(move |b| a.iter().chain(b).cloned().collect())).collect()
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    permutations(n - 1)
        .into_iter()
        .flat_map(|p| {
            (0..=p.len()).map(move |i| {
                let mut q = p.clone();
                q.insert(i, n - 1);
                q
            })
        })
        .collect()
}

pub fn language(tree: &DialogTree) -> BTreeSet<Word> {
    match tree {
        DialogTree::Leaf(s) => BTreeSet::from([vec![s.clone()]]),
        DialogTree::Composite(c) => {
            let parts: Vec<BTreeSet<Word>> = c.children.iter().map(language).collect();
            match c.stager {
                StagerKind::Interpreter | StagerKind::Curryer => concat(&parts),
                StagerKind::PartialEvaluator => permutations(parts.len())
                    .into_iter()
                    .flat_map(|p| concat(&p.iter().map(|&i| parts[i].clone()).collect::<Vec<_>>()))
                    .collect(),
            }
        }
    }
}

/// Random tree over `n` slots named a, b, c, ...
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> DialogTree {
    let names: Vec<String> = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut counter = 0;
    build(rng, &names, &mut counter)
}

fn build(rng: &mut ChaCha8Rng, names: &[String], counter: &mut usize) -> DialogTree {
    if names.len() == 1 && rng.random_bool(0.75) {
        return DialogTree::leaf(&names[0]);
    }
    let stager = *StagerKind::ALL.choose(rng).unwrap();
    let groups = if names.len() == 1 { 1 } else { rng.random_range(2..=names.len()) };
    let mut cuts: Vec<usize> = (1..names.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(groups - 1).collect();
    cuts.sort_unstable();
    cuts.push(names.len());
    *counter += 1;
    let id = format!("g{counter}");
    let mut children = Vec::new();
    let mut start = 0;
    for end in cuts {
        children.push(build(rng, &names[start..end], counter));
        start = end;
    }
    DialogTree::composite(id, stager, children)
}

pub fn seeded_tree(seed: u64) -> DialogTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6);
    random_tree(&mut rng, n)
}

/// Walks every reachable prefix (one token per utterance) and compares the
/// engine with the language. Returns the number of states checked.
pub fn check_tree(tree: &DialogTree) -> Result<usize, String> {
    let lang = language(tree);
    let state = DialogState::new(tree.clone()).map_err(|e| e.to_string())?;
    let mut checked = 0;
    visit(tree, &lang, &state, &mut Vec::new(), &mut checked)?;
    Ok(checked)
}

fn visit(
    tree: &DialogTree,
    lang: &BTreeSet<Word>,
    state: &DialogState,
    prefix: &mut Word,
    checked: &mut usize,
) -> Result<(), String> {
    *checked += 1;
    let suffixes: BTreeSet<Word> =
        lang.iter().filter(|w| w.starts_with(prefix)).map(|w| w[prefix.len()..].to_vec()).collect();
    let expected_next: BTreeSet<SlotId> = suffixes.iter().filter_map(|s| s.first().cloned()).collect();
    let got: BTreeSet<SlotId> = state.legal_first_slots().into_iter().collect();
    if got != expected_next {
        return Err(format!("{tree} after {prefix:?}: legal {got:?}, oracle {expected_next:?}"));
    }
    let enumerated = state.enumerate_sequences(8).map_err(|e| e.to_string())?;
    if enumerated != suffixes {
        return Err(format!("{tree} after {prefix:?}: enumerated {enumerated:?}, oracle {suffixes:?}"));
    }
    for slot in tree.slots() {
        let result = state.apply_token(&mut TurnContext::default(), &slot, "v");
        match (expected_next.contains(&slot), result) {
            (true, Ok(next)) => {
                prefix.push(slot);
                visit(tree, lang, &next, prefix, checked)?;
                prefix.pop();
            }
            (true, Err(e)) => return Err(format!("{tree} after {prefix:?}: legal {slot} rejected: {e}")),
            (false, Ok(_)) => return Err(format!("{tree} after {prefix:?}: illegal {slot} accepted")),
            (false, Err(_)) => {}
        }
    }
    Ok(())
}
