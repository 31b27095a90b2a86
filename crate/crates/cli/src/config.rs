//! Config-file handling: flags override values from the TOML file, which
//! override built-in defaults.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Parsed config file; each command reads its own table.
#[derive(Debug, Default)]
pub struct ConfigFile {
    root: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        let table: toml::Table = toml::from_str(&text)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        match serde_json::to_value(table).expect("toml maps to json") {
            Value::Object(root) => Ok(Self { root }),
            _ => unreachable!("a toml table is an object"),
        }
    }

    /// Fills every unset field of `flags` from the `[section]` table.
    pub fn merge<T: Serialize + DeserializeOwned>(
        &self,
        section: &str,
        flags: &T,
    ) -> Result<T, CliError> {
        let mut merged = match self.root.get(section) {
            Some(Value::Object(m)) => m.clone(),
            Some(_) => {
                return Err(CliError::input(format!(
                    "config: [{section}] must be a table"
                )))
            }
            None => Map::new(),
        };
        let Value::Object(cli) = serde_json::to_value(flags).expect("flags serialise") else {
            unreachable!("argument structs serialise to objects");
        };
        for (k, v) in cli {
            let unset = v.is_null()
                || v.as_array().is_some_and(|a| a.is_empty())
                || v == Value::Bool(false);
            if !unset || !merged.contains_key(&k) {
                merged.insert(k, v);
            }
        }
        serde_json::from_value(Value::Object(merged))
            .map_err(|e| CliError::input(format!("config [{section}]: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq, Default)]
    struct A {
        x: Option<f64>,
        y: Option<String>,
        list: Vec<f64>,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[a]\nx = 1.5\ny = \"file\"\nlist = [1.0]\n").unwrap();
        let cfg = ConfigFile::load(Some(&p)).unwrap();
        let flags = A {
            x: None,
            y: Some("flag".into()),
            list: vec![],
        };
        let m = cfg.merge("a", &flags).unwrap();
        assert_eq!(
            m,
            A {
                x: Some(1.5),
                y: Some("flag".into()),
                list: vec![1.0]
            }
        );
    }

    #[test]
    fn unknown_types_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[a]\nx = \"text\"\n").unwrap();
        let cfg = ConfigFile::load(Some(&p)).unwrap();
        assert!(cfg.merge("a", &A::default()).is_err());
    }
}
