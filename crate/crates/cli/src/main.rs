use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use stager_cli::{default_spec, ensure_dataset, load_registry, repl, replay_file};

#[derive(Parser)]
#[command(version, about = "Conduct a dialog in the terminal or replay a trace")]
struct Args {
    /// Directory holding datasets/*.csv and specs/*.xml.
    #[arg(long, default_value = "data")]
    data: PathBuf,
    /// Spec name from the data directory, or a DialogXML file.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long, default_value = "congress")]
    dataset: String,
    /// Replay a JSON-lines trace instead of starting the REPL.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, default_value_t = stager_core::grammar::DEFAULT_LIMIT)]
    grammar_limit: usize,
}

fn run(args: Args) -> Result<bool> {
    let (registry, spec) = load_registry(&args.data, args.spec.as_deref())?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    if let Some(trace) = &args.replay {
        let passed = replay_file(&registry, trace, args.grammar_limit, &mut out)?;
        out.flush()?;
        return Ok(passed);
    }
    ensure_dataset(&registry, &args.dataset)?;
    let spec = spec
        .or_else(|| default_spec(&registry, &args.dataset))
        .with_context(|| format!("no spec binds to dataset `{}`", args.dataset))?;
    let mut session = registry.create_session_with_limit(&args.dataset, &spec, args.grammar_limit)?;
    repl(&mut session, io::stdin().lock(), &mut out)?;
    out.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
