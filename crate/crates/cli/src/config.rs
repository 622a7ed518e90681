//! JSON config files. Keys mirror the long flag names (`-` or `_`), plus an
//! optional `command`. Entries are spliced into argv ahead of the user's own
//! flags so that, with `args_override_self`, the flags win.

use std::fs;

use serde_json::Value;

pub fn expand_argv(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config_path = None;
    let mut it = argv.into_iter();
    let prog = it.next().unwrap_or_else(|| "zrp".into());
    while let Some(a) = it.next() {
        if a == "--config" {
            config_path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config_path else {
        let mut out = vec![prog];
        out.extend(rest);
        return Ok(out);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let json: Value = serde_json::from_str(&text).map_err(|e| format!("config {path} is not valid JSON: {e}"))?;
    let Value::Object(map) = json else {
        return Err(format!("config {path} must be a JSON object"));
    };

    // a subcommand on the command line comes before any flag
    let on_line = rest.first().is_some_and(|a| !a.starts_with('-'));
    let command = match (on_line, map.get("command")) {
        (true, _) => rest.remove(0),
        (false, Some(Value::String(c))) => c.clone(),
        (false, Some(other)) => return Err(format!("config key `command` must be a string, got {other}")),
        (false, None) => return Err("no subcommand given on the command line or in the config".into()),
    };

    let mut out = vec![prog, command];
    for (key, value) in map.iter().filter(|(k, _)| k.as_str() != "command") {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => {
                out.push(flag);
                out.push(n.to_string());
            }
            Value::String(s) => {
                out.push(flag);
                out.push(s.clone());
            }
            Value::Array(items) => {
                let parts: Result<Vec<String>, String> = items
                    .iter()
                    .map(|v| match v {
                        Value::Number(n) => Ok(n.to_string()),
                        Value::String(s) => Ok(s.clone()),
                        _ => Err(format!("config key `{key}`: list items must be numbers or strings")),
                    })
                    .collect();
                out.push(flag);
                out.push(parts?.join(","));
            }
            Value::Object(_) => return Err(format!("config key `{key}`: nested objects are not supported")),
        }
    }
    out.extend(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &[&str]) -> Vec<String> {
        s.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn passthrough_without_config() {
        let a = argv(&["zrp", "bound", "--ebind", "-3"]);
        assert_eq!(expand_argv(a.clone()).unwrap(), a);
    }

    #[test]
    fn config_entries_precede_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"command": "bound", "ebind": -2, "levels": 3, "binding_list": [1, 2]}"#).unwrap();
        let out = expand_argv(argv(&["zrp", "--config", path.to_str().unwrap(), "--levels", "5"])).unwrap();
        assert_eq!(
            out,
            argv(&["zrp", "bound", "--ebind", "-2", "--levels", "3", "--binding-list", "1,2", "--levels", "5"])
        );
    }

    #[test]
    fn command_line_subcommand_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"command": "bound"}"#).unwrap();
        let out = expand_argv(argv(&["zrp", "table1", "--config", path.to_str().unwrap()])).unwrap();
        assert_eq!(out, argv(&["zrp", "table1"]));
    }

    #[test]
    fn bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, "[1, 2]").unwrap();
        assert!(expand_argv(argv(&["zrp", "--config", path.to_str().unwrap()])).is_err());
        fs::write(&path, r#"{"ebind": -3}"#).unwrap();
        assert!(expand_argv(argv(&["zrp", "--config", path.to_str().unwrap()])).is_err());
        assert!(expand_argv(argv(&["zrp", "--config"])).is_err());
        assert!(expand_argv(argv(&["zrp", "--config", "/nonexistent/x.json"])).is_err());
    }
}
