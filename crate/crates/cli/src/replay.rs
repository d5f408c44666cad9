//! Config-file mode: `{"command": "...", "config": {...}}`, which is also the
//! shape of every run manifest. Keys are the long flag names with `_` for `-`.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{run_command, Command, Status};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest or config file
    pub path: PathBuf,
    /// Write the output here instead of the recorded path
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct ConfigFile {
    command: String,
    #[serde(default)]
    config: serde_json::Map<String, Value>,
}

#[derive(Debug, Parser)]
#[command(name = "xxzctl", no_binary_name = true)]
struct Single {
    #[command(subcommand)]
    command: Command,
}

/// Turns a config object into command-line arguments.
fn to_argv(command: &str, config: &serde_json::Map<String, Value>) -> anyhow::Result<Vec<String>> {
    let mut argv = vec![command.to_string()];
    for (key, value) in config {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => argv.push(flag),
            Value::Number(n) => argv.extend([flag, n.to_string()]),
            Value::String(s) => argv.extend([flag, s.clone()]),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::Number(n) => Ok(n.to_string()),
                        Value::String(s) => Ok(s.clone()),
                        other => bail!("unsupported list element {other} for '{key}'"),
                    })
                    .collect::<anyhow::Result<_>>()?;
                argv.extend([flag, joined.join(",")]);
            }
            Value::Object(_) => bail!("nested object for '{key}' is not a valid option"),
        }
    }
    Ok(argv)
}

pub fn replay(args: &ReplayArgs) -> anyhow::Result<Status> {
    let text = std::fs::read_to_string(&args.path).with_context(|| format!("reading {}", args.path.display()))?;
    let mut file: ConfigFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.path.display()))?;
    if file.command == "replay" {
        bail!("a config file cannot replay another config file");
    }
    if let Some(out) = &args.out {
        file.config
            .insert("out".into(), Value::String(out.to_string_lossy().into_owned()));
    }
    let argv = to_argv(&file.command, &file.config)?;
    let parsed = Single::try_parse_from(&argv).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
    run_command(&parsed.command)
}
