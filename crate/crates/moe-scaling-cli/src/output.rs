//! Output-mode plumbing: one JSON document on stdout in `json` mode, plain
//! tables or CSV otherwise. Diagnostics always go to stderr.

use anyhow::Result;
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Human,
    Json,
    Csv,
}

/// Emits a command result in the selected mode. Commands provide the JSON
/// value plus renderers for the two text modes.
pub fn emit(
    mode: OutputMode,
    json: &serde_json::Value,
    human: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> Result<()> {
    match mode {
        OutputMode::Json => println!("{}", serde_json::to_string_pretty(json)?),
        OutputMode::Human => {
            let text = human();
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
        OutputMode::Csv => {
            let text = csv();
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

pub fn warn(message: impl AsRef<str>) {
    eprintln!("warning: {}", message.as_ref());
}
