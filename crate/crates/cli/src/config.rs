//! Config file merging: `key = value` lines become `--key=value` flags placed
//! directly after the subcommand, so anything on the command line overrides them.

use clap::{ArgAction, Command};

use crate::Failure;

fn config_path(argv: &[String]) -> Option<(String, usize, usize)> {
    for (i, a) in argv.iter().enumerate().skip(1) {
        if a == "--config" {
            return argv.get(i + 1).map(|p| (p.clone(), i, 2));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some((p.to_string(), i, 1));
        }
    }
    None
}

fn truthy(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

pub fn merge_config(cli: &Command, argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some((path, at, width)) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("config {path}: {e}")))?;
    let entries = modspace::io::parse_config(&text).map_err(|e| Failure::Usage(e.to_string()))?;

    let names: Vec<&str> = cli.get_subcommands().map(|c| c.get_name()).collect();
    let Some(pos) = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| !(*i >= at && *i < at + width) && names.contains(&a.as_str()))
        .map(|(i, _)| i)
    else {
        // no subcommand: let clap report it
        return Ok(argv);
    };
    let sub = cli.find_subcommand(&argv[pos]).expect("known subcommand");

    let mut injected = Vec::new();
    for (raw_key, value) in entries {
        let key = raw_key.replace('_', "-");
        if key == "config" {
            continue;
        }
        match sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
            Some(arg) if matches!(arg.get_action(), ArgAction::SetTrue) => {
                match truthy(&value) {
                    Some(true) => injected.push(format!("--{key}")),
                    Some(false) => {}
                    None => return Err(Failure::Usage(format!("config key {key}: expected true/false, got {value:?}"))),
                }
            }
            Some(_) => injected.push(format!("--{key}={value}")),
            None => {
                let known = cli
                    .get_subcommands()
                    .any(|c| c.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
                if !known {
                    return Err(Failure::Usage(format!("unknown config key {raw_key:?} in {path}")));
                }
            }
        }
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}
