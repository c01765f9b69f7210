//! Terminal front end: a line-oriented REPL over one session and a trace
//! replayer. Both go through the same session entry points as the server.

use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use stager_core::dialogxml::parse_dialog_spec;
use stager_core::registry::Registry;
use stager_core::session::HelpPayload;
use stager_core::{ApplyReport, Input, RenderModel, Session, SessionStatus};

/// Loads `data_dir`; a `spec` naming an existing file is added under its stem.
/// Returns the registry and the spec name to use.
pub fn load_registry(data_dir: &Path, spec: Option<&str>) -> Result<(Registry, Option<String>)> {
    let mut registry =
        Registry::load(data_dir).with_context(|| format!("loading data directory {}", data_dir.display()))?;
    let Some(spec) = spec else { return Ok((registry, None)) };
    let path = Path::new(spec);
    if !path.is_file() {
        return Ok((registry, Some(spec.to_string())));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = parse_dialog_spec(&text).with_context(|| format!("parsing {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
    registry.insert_spec(name.clone(), doc);
    Ok((registry, Some(name)))
}

/// Spec to pair with `dataset` when none is given: the first one that binds.
pub fn default_spec(registry: &Registry, dataset: &str) -> Option<String> {
    registry.pairs().into_iter().find(|p| p.dataset == dataset).map(|p| p.spec)
}

pub fn write_render(out: &mut impl Write, r: &RenderModel) -> std::io::Result<()> {
    for n in &r.notifications {
        writeln!(out, "! {}", n.message)?;
    }
    if !r.breadcrumb.is_empty() {
        let crumbs: Vec<String> = r.breadcrumb.iter().map(|c| format!("{}={}", c.slot, c.label)).collect();
        writeln!(out, "> {}", crumbs.join(" / "))?;
    }
    if let Some(phrase) = &r.confirmation_phrase {
        writeln!(out, "Did you say {phrase}? (say yes or no)")?;
    }
    if let Some(sol) = &r.solicitation {
        writeln!(out, "{}", sol.prompt)?;
        for (i, link) in sol.links.iter().enumerate() {
            writeln!(out, "  {}. {}", i + 1, link.label)?;
        }
    }
    if !r.out_of_turn.hint.is_empty() {
        writeln!(out, "{}", r.out_of_turn.hint)?;
    }
    match r.status {
        SessionStatus::InProgress => writeln!(out, "[{} records]", r.live_records)?,
        SessionStatus::Complete => writeln!(out, "The dialog is complete.")?,
        SessionStatus::Results => writeln!(out, "Results:")?,
    }
    for rec in &r.results {
        let fields: Vec<&str> = rec.fields.values().map(String::as_str).collect();
        writeln!(out, "  * {}", fields.join(" | "))?;
    }
    Ok(())
}

fn write_help(out: &mut impl Write, help: &HelpPayload) -> std::io::Result<()> {
    writeln!(out, "{}", help.message)?;
    for slot in &help.slots {
        let mark = if slot.sayable_now { "" } else { " (not yet)" };
        writeln!(out, "  {}{}: {} ...", slot.slot, mark, slot.samples.join(", "))?;
    }
    writeln!(out, "  also: {}", help.reserved.join(", "))
}

fn write_report(out: &mut impl Write, report: &ApplyReport) -> std::io::Result<()> {
    for a in &report.accepted {
        writeln!(out, "+ {} -> {}", a.phrase, a.slot)?;
    }
    for r in &report.rejected {
        writeln!(out, "- {} ({:?})", r.phrase, r.reason)?;
    }
    if let Some(help) = &report.help {
        write_help(out, help)?;
    }
    Ok(())
}

const USAGE: &str = "commands: say TEXT | click N | results | help | grammar | quit";

/// Reads commands from `input` until `quit` or end of input.
pub fn repl(session: &mut Session, input: impl BufRead, out: &mut impl Write) -> Result<()> {
    write_render(out, session.render_model())?;
    for line in input.lines() {
        let line = line?;
        let (cmd, rest) = line.trim().split_once(' ').unwrap_or((line.trim(), ""));
        let step = match cmd {
            "" => continue,
            "quit" | "exit" => break,
            "say" => Input::Say(rest.to_string()),
            "results" => Input::Say(stager_core::utterance::SHOW_RESULTS.to_string()),
            "help" => Input::Say(stager_core::utterance::WHAT_MAY_I_SAY.to_string()),
            "grammar" => {
                writeln!(out, "{}", serde_json::to_string_pretty(&session.grammar())?)?;
                continue;
            }
            "click" => {
                let links = session.render_model().solicitation.as_ref();
                let pick = rest.trim().parse::<usize>().ok().and_then(|n| n.checked_sub(1));
                match (links, pick) {
                    (Some(sol), Some(i)) if i < sol.links.len() => {
                        Input::Click { slot: sol.slot.to_string(), value: sol.links[i].value.clone() }
                    }
                    _ => {
                        writeln!(out, "no such link: {rest}")?;
                        continue;
                    }
                }
            }
            _ => {
                writeln!(out, "{USAGE}")?;
                continue;
            }
        };
        let is_help = matches!(&step, Input::Say(t) if t == stager_core::utterance::WHAT_MAY_I_SAY);
        match session.handle(step) {
            Ok(report) => {
                write_report(out, &report)?;
                if !is_help {
                    write_render(out, session.render_model())?;
                }
            }
            Err(e) => writeln!(out, "error: {} ({e})", e.code())?,
        }
    }
    Ok(())
}

/// Replays a trace file; returns whether every expectation held.
pub fn replay_file(registry: &Registry, path: &Path, grammar_limit: usize, out: &mut impl Write) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = stager_core::trace::replay(registry, &text, grammar_limit)?;
    for line in &report.log {
        writeln!(out, "{line}")?;
    }
    match &report.failure {
        None => {
            writeln!(out, "PASS {}: {} inputs, {} expectations", path.display(), report.inputs, report.expectations)?;
            Ok(true)
        }
        Some(f) => {
            writeln!(out, "FAIL {} at line {}", path.display(), f.line)?;
            for d in &f.diffs {
                writeln!(out, "  {d}")?;
            }
            Ok(false)
        }
    }
}

pub fn ensure_dataset(registry: &Registry, dataset: &str) -> Result<()> {
    if registry.dataset(dataset).is_none() {
        bail!("unknown dataset `{dataset}`");
    }
    Ok(())
}
