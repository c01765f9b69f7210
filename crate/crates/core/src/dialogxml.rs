//! DialogXML reader/writer and catalog binding.
//!
//! ```xml
//! <dialog-spec>
//!   <dialog id="top" stager="pe">
//!     <dialog-item name="house" prompt1="Senator or Representative?" prompt2="Which house?"/>
//!     <dialog-item name="party" confirm="true"/>
//!   </dialog>
//! </dialog-spec>
//! ```
//!
//! `<dialog>` elements nest; `stager` is one of `i`, `c`, `pe`. The `next` and
//! `type` attributes are accepted and ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::staging::{DialogTree, SlotId, StagerKind};
use crate::view::Catalog;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DialogXmlError {
    #[error("malformed DialogXML: {0}")]
    MalformedDocument(String),
    #[error("unknown stager `{0}`")]
    UnknownStager(String),
    #[error("slot `{0}` is declared more than once")]
    DuplicateSlot(String),
    #[error("dialog `{0}` has no items")]
    EmptyDialog(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BindError {
    #[error("slot `{0}` has no matching catalog attribute")]
    UnboundSlot(SlotId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlotMeta {
    /// Tapering sequence; never empty.
    pub prompts: Vec<String>,
    pub confirm: bool,
}

impl SlotMeta {
    /// Prompt for the `k`-th solicitation (zero based) of this slot.
    pub fn prompt(&self, k: usize) -> &str {
        &self.prompts[k.min(self.prompts.len() - 1)]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DialogSpec {
    pub root: DialogTree,
    pub slot_meta: IndexMap<SlotId, SlotMeta>,
}

/// A spec whose every slot names a catalog attribute.
#[derive(Debug)]
pub struct BoundSpec {
    pub spec: Arc<DialogSpec>,
    pub catalog: Arc<Catalog>,
}

pub fn bind_to_catalog(spec: Arc<DialogSpec>, catalog: Arc<Catalog>) -> Result<BoundSpec, BindError> {
    for slot in spec.slot_meta.keys() {
        if !catalog.has_attribute(slot.as_str()) {
            return Err(BindError::UnboundSlot(slot.clone()));
        }
    }
    Ok(BoundSpec { spec, catalog })
}

fn malformed(msg: impl Into<String>) -> DialogXmlError {
    DialogXmlError::MalformedDocument(msg.into())
}

pub fn parse_dialog_spec(document: &str) -> Result<DialogSpec, DialogXmlError> {
    let doc = roxmltree::Document::parse(document).map_err(|e| malformed(e.to_string()))?;
    let root = doc.root_element();
    let top = match root.tag_name().name() {
        "dialog" => root,
        "dialog-spec" => {
            let mut dialogs = root.children().filter(|n| n.is_element());
            let first = dialogs.next().ok_or_else(|| malformed("<dialog-spec> has no <dialog>"))?;
            if dialogs.next().is_some() {
                return Err(malformed("<dialog-spec> must hold exactly one top-level <dialog>"));
            }
            first
        }
        other => return Err(malformed(format!("unexpected root element <{other}>"))),
    };
    if top.tag_name().name() != "dialog" {
        return Err(malformed(format!("expected <dialog>, found <{}>", top.tag_name().name())));
    }
    let mut cx = ParseCx::default();
    let tree = cx.dialog(top)?;
    Ok(DialogSpec { root: tree, slot_meta: cx.meta })
}

#[derive(Default)]
struct ParseCx {
    meta: IndexMap<SlotId, SlotMeta>,
    ids: HashSet<String>,
    anonymous: usize,
}

impl ParseCx {
    fn dialog(&mut self, node: roxmltree::Node) -> Result<DialogTree, DialogXmlError> {
        let id = match node.attribute("id") {
            Some(id) => id.to_string(),
            None => {
                self.anonymous += 1;
                format!("dialog{}", self.anonymous)
            }
        };
        if !self.ids.insert(id.clone()) {
            return Err(malformed(format!("dialog id `{id}` is used twice")));
        }
        let code =
            node.attribute("stager").ok_or_else(|| malformed(format!("dialog `{id}` has no stager attribute")))?;
        let stager = StagerKind::from_code(code).ok_or_else(|| DialogXmlError::UnknownStager(code.to_string()))?;

        let mut children = Vec::new();
        for child in node.children().filter(|n| n.is_element()) {
            match child.tag_name().name() {
                "dialog" => children.push(self.dialog(child)?),
                "dialog-item" => children.push(self.item(child)?),
                other => return Err(malformed(format!("unexpected element <{other}> in dialog `{id}`"))),
            }
        }
        if children.is_empty() {
            return Err(DialogXmlError::EmptyDialog(id));
        }
        Ok(DialogTree::composite(id, stager, children))
    }

    fn item(&mut self, node: roxmltree::Node) -> Result<DialogTree, DialogXmlError> {
        let raw = node.attribute("name").ok_or_else(|| malformed("<dialog-item> without a name"))?;
        let slot = SlotId::new(raw);
        if slot.as_str().is_empty() {
            return Err(malformed("<dialog-item> with an empty name"));
        }
        if self.meta.contains_key(&slot) {
            return Err(DialogXmlError::DuplicateSlot(slot.to_string()));
        }

        let mut prompts: Vec<(u32, String)> = Vec::new();
        for attr in node.attributes() {
            let Some(suffix) = attr.name().strip_prefix("prompt") else { continue };
            let rank = if suffix.is_empty() {
                0
            } else {
                suffix.parse::<u32>().map_err(|_| malformed(format!("bad prompt attribute `{}`", attr.name())))?
            };
            prompts.push((rank, attr.value().to_string()));
        }
        prompts.sort_by_key(|(rank, _)| *rank);
        let mut prompts: Vec<String> = prompts.into_iter().map(|(_, p)| p).collect();
        if prompts.is_empty() {
            prompts.push(format!("Choose a {slot}."));
        }

        let confirm = match node.attribute("confirm").map(|v| v.trim().to_ascii_lowercase()) {
            None => false,
            Some(v) if matches!(v.as_str(), "true" | "yes" | "1") => true,
            Some(v) if matches!(v.as_str(), "false" | "no" | "0") => false,
            Some(v) => return Err(malformed(format!("bad confirm value `{v}` on `{slot}`"))),
        };
        self.meta.insert(slot.clone(), SlotMeta { prompts, confirm });
        Ok(DialogTree::Leaf(slot))
    }
}

/// Serializes a spec back to DialogXML.
pub fn to_dialog_xml(spec: &DialogSpec) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dialog-spec>\n");
    write_tree(&spec.root, &spec.slot_meta, 1, &mut out);
    out.push_str("</dialog-spec>\n");
    out
}

fn write_tree(tree: &DialogTree, meta: &IndexMap<SlotId, SlotMeta>, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match tree {
        DialogTree::Leaf(slot) => {
            let _ = write!(out, "{pad}<dialog-item name=\"{}\"", escape(slot.as_str()));
            if let Some(m) = meta.get(slot) {
                for (i, p) in m.prompts.iter().enumerate() {
                    let _ = write!(out, " prompt{}=\"{}\"", i + 1, escape(p));
                }
                if m.confirm {
                    out.push_str(" confirm=\"true\"");
                }
            }
            out.push_str("/>\n");
        }
        DialogTree::Composite(c) => {
            let _ = writeln!(
                out,
                "{pad}<dialog id=\"{}\" stager=\"{}\">",
                escape(&c.id),
                c.stager.code().to_ascii_lowercase()
            );
            for ch in &c.children {
                write_tree(ch, meta, depth + 1, out);
            }
            let _ = writeln!(out, "{pad}</dialog>");
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
