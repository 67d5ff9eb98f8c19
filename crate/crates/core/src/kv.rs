//! Line-based `key = value` text format shared by every config type.
//!
//! `#` starts a comment, blank lines are skipped, keys are case-sensitive.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            });
        };
        let (key, value) = (k.trim(), v.trim());
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: "empty key".into(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_owned(),
            value: value.to_owned(),
        });
    }
    Ok(out)
}

/// Outcome of offering one entry to a config section.
pub enum Applied {
    Taken,
    NotMine,
}

/// A config section that recognizes a fixed set of keys.
pub trait KvSection {
    /// Returns `Ok(NotMine)` for keys the section does not own.
    fn apply(&mut self, key: &str, value: &str) -> Result<Applied, String>;
    /// All keys with their current values, in documentation order.
    fn entries(&self) -> Vec<(&'static str, String)>;
}

pub fn value<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse::<T>()
        .map_err(|_| format!("bad value `{v}` for `{key}`"))
}

pub fn boolean(key: &str, v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("bad boolean `{v}` for `{key}`")),
    }
}

/// Feeds every entry to `sections` in order; the first section to claim a
/// key wins.
pub fn apply_all(entries: &[Entry], sections: &mut [&mut dyn KvSection]) -> Result<(), ConfigError> {
    'outer: for e in entries {
        for s in sections.iter_mut() {
            match s.apply(&e.key, &e.value) {
                Ok(Applied::Taken) => continue 'outer,
                Ok(Applied::NotMine) => {}
                Err(msg) => return Err(ConfigError::Parse { line: e.line, msg }),
            }
        }
        return Err(ConfigError::UnknownKey {
            line: e.line,
            key: e.key.clone(),
        });
    }
    Ok(())
}

pub fn render(sections: &[&dyn KvSection]) -> String {
    let mut s = String::new();
    for sec in sections {
        for (k, v) in sec.entries() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let e = parse("# hi\n\n a = 1 # trailing\nb=two\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].line, 3);
        assert_eq!((e[1].key.as_str(), e[1].value.as_str()), ("b", "two"));
    }

    #[test]
    fn missing_equals_is_parse_error() {
        assert_eq!(
            parse("a = 1\nnonsense\n"),
            Err(ConfigError::Parse {
                line: 2,
                msg: "expected `key = value`, got `nonsense`".into()
            })
        );
    }
}
