//! `key = value` configuration files, merged into the command line so that
//! explicit flags take precedence.

use std::ffi::OsString;
use std::path::Path;

use crate::CliError;

/// Parses `key = value` lines into `--key=value` arguments. Blank lines and
/// text after `#` are ignored; underscores in keys become hyphens.
pub fn parse_config(text: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`, found {line:?}", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(format!("line {}: invalid key {:?}", i + 1, key));
        }
        args.push(format!("--{key}={}", value.trim()));
    }
    Ok(args)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = s.strip_prefix("--config=") {
            return Some(path.into());
        }
    }
    None
}

/// Inserts the options from a `--config` file right after the subcommand
/// words, ahead of every explicit flag.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let extra = parse_config(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))?;
    let split = 1 + argv.iter().skip(1).take_while(|a| !a.to_string_lossy().starts_with('-')).count();
    let mut out: Vec<OsString> = argv[..split].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&argv[split..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let text = "# settings\nlambda_e = 1e-2  # sparse noise\n\nstrict-descent=true\n";
        assert_eq!(parse_config(text).unwrap(), vec!["--lambda-e=1e-2", "--strict-descent=true"]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse_config("lambda_e 3").unwrap_err().contains("line 1"));
    }

    #[test]
    fn file_options_go_before_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "d = 7\n").unwrap();
        let argv: Vec<OsString> = ["rnlmf", "bench", "synthetic", "--config", cfg.to_str().unwrap(), "--d", "9"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = expand_config(argv).unwrap();
        let out: Vec<_> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&out[..4], &["rnlmf", "bench", "synthetic", "--d=7"]);
        assert_eq!(out.last().unwrap(), "9");
    }
}
