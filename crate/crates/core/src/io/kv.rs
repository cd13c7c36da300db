use std::fmt::Display;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered `key = value` report. Keys appear in insertion order, so two runs
/// that record the same values produce identical bytes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    /// Real values at full precision.
    pub fn set_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.set(key, crate::io::format_value(value))
    }

    pub fn set_list<T: Display>(&mut self, key: impl Into<String>, values: &[T]) -> &mut Self {
        let joined = values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        self.set(key, joined)
    }

    pub fn set_f64_list(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let joined = values
            .iter()
            .map(|&v| crate::io::format_value(v))
            .collect::<Vec<_>>()
            .join(",");
        self.set(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn extend(&mut self, prefix: &str, other: &Report) {
        for (k, v) in &other.entries {
            self.set(format!("{prefix}{k}"), v);
        }
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

/// Parse `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: "empty key".into(),
            });
        }
        if out.iter().any(|(existing, _)| *existing == key) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: format!("duplicate key `{key}`"),
            });
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_kv(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_order_and_parse() {
        let mut r = Report::new();
        r.set("b", 2).set("a", "x").set("b", 3);
        assert_eq!(r.render(), "b = 3\na = x\n");
        let back = parse_kv(&r.render(), Path::new("r")).unwrap();
        assert_eq!(back, vec![("b".into(), "3".into()), ("a".into(), "x".into())]);
    }

    #[test]
    fn comments_and_errors() {
        let kv = parse_kv("# header\nk = 4 # trailing\n\n  x=y\n", Path::new("c")).unwrap();
        assert_eq!(kv, vec![("k".into(), "4".into()), ("x".into(), "y".into())]);
        assert!(matches!(
            parse_kv("k 4\n", Path::new("c")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_kv("k=1\nk=2\n", Path::new("c")).is_err());
    }
}
