//! Flat `key = value` experiment documents.
//!
//! ```text
//! # comment
//! p = [2, 2]
//! theta = [inf, inf]
//! v2 = [l1, 2 * l1^0.5]
//! function = expsum(1@1:0, 0.5@2:3)
//! ```
//!
//! Values are scalars or bracketed lists; list items are split on commas
//! outside parentheses. Keys are unique.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use lklab_core::{SvFunction, WeightV};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Scalar(String),
    List(Vec<String>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(s) => f.write_str(s),
            Self::List(items) => write!(f, "[{}]", items.join(", ")),
        }
    }
}

/// Parsed document, keys in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, Value>,
}

fn split_top_level(body: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in body.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                items.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.trim().is_empty() || !items.is_empty() {
        items.push(current.trim().to_string());
    }
    items
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: line_no,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(CliError::Config {
                    line: line_no,
                    msg: format!("bad key {key:?}"),
                });
            }
            let value = value.trim();
            let parsed = if let Some(body) = value.strip_prefix('[') {
                let body = body.strip_suffix(']').ok_or_else(|| CliError::Config {
                    line: line_no,
                    msg: "unterminated list".into(),
                })?;
                let items = split_top_level(body);
                if items.iter().any(String::is_empty) {
                    return Err(CliError::Config {
                        line: line_no,
                        msg: "empty list item".into(),
                    });
                }
                Value::List(items)
            } else if value.is_empty() {
                return Err(CliError::Config {
                    line: line_no,
                    msg: format!("missing value for {key}"),
                });
            } else {
                Value::Scalar(value.to_string())
            };
            if entries.insert(key.to_string(), parsed).is_some() {
                return Err(CliError::Config {
                    line: line_no,
                    msg: format!("duplicate key {key}"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::Invalid(format!(
                "unknown key {k:?}; expected one of {}",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    /// One-line `key=value` echo in key order; parses back to the same document.
    pub fn echo(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn raw(&self, key: &str) -> Result<&Value, CliError> {
        self.entries
            .get(key)
            .ok_or_else(|| CliError::Invalid(format!("missing key {key:?}")))
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        match self.raw(key)? {
            Value::Scalar(s) => Ok(s),
            Value::List(_) => Err(CliError::Invalid(format!("{key} must be a scalar"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, CliError> {
        if self.contains(key) {
            self.str(key)
        } else {
            Ok(default)
        }
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let s = self.str(key)?;
        s.parse()
            .map_err(|_| CliError::Invalid(format!("cannot parse {key} = {s:?}")))
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        if self.contains(key) {
            self.parsed(key)
        } else {
            Ok(default)
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<String>, CliError> {
        match self.raw(key)? {
            Value::List(items) => Ok(items.clone()),
            Value::Scalar(s) => Ok(vec![s.clone()]),
        }
    }

    /// Real list; `inf` is accepted.
    pub fn reals(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.list(key)?
            .iter()
            .map(|s| parse_real(s).ok_or_else(|| CliError::Invalid(format!("{key}: bad number {s:?}"))))
            .collect()
    }

    pub fn reals_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        if self.contains(key) {
            self.reals(key)
        } else {
            Ok(default)
        }
    }

    pub fn naturals(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.list(key)?
            .iter()
            .map(|s| s.parse().map_err(|_| CliError::Invalid(format!("{key}: bad index {s:?}"))))
            .collect()
    }

    /// Weight list in the SV grammar; a missing key means `V ≡ 1` on `m` axes.
    pub fn weights_or_unit(&self, key: &str, m: usize) -> Result<Vec<WeightV>, CliError> {
        if !self.contains(key) {
            return Ok(vec![WeightV::unit(); m]);
        }
        self.list(key)?
            .iter()
            .map(|s| {
                s.parse::<SvFunction>()
                    .map(WeightV::from)
                    .map_err(CliError::from)
            })
            .collect()
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "∞" => Some(f64::INFINITY),
        t => t.parse().ok().filter(|x: &f64| x.is_finite()),
    }
}

/// `a:b` window.
pub fn parse_window(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Invalid(format!("window must look like a:b, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_lists_and_comments() {
        let c = Config::parse(
            "# header\np = [2, 2.5]\ntheta = [inf, 1] # trailing\nfunction = expsum(1@1:0, 0.5@2:3)\nv = [1, 2 * l1^0.5]\n",
        )
        .unwrap();
        assert_eq!(c.reals("p").unwrap(), vec![2.0, 2.5]);
        assert_eq!(c.reals("theta").unwrap(), vec![f64::INFINITY, 1.0]);
        assert_eq!(c.str("function").unwrap(), "expsum(1@1:0, 0.5@2:3)");
        let w = c.weights_or_unit("v", 2).unwrap();
        assert!(w[0].is_unit());
        assert!((w[1].at_dyadic(3.0) - 4.0).abs() < 1e-12);
        assert_eq!(c.weights_or_unit("absent", 3).unwrap().len(), 3);
    }

    #[test]
    fn echo_round_trips() {
        let c = Config::parse("b = [1, inf]\na = exp(1,0)\n").unwrap();
        let echo = c.echo();
        assert_eq!(echo, "a=exp(1,0); b=[1, inf]");
        let back = Config::parse(&echo.replace("; ", "\n")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_malformed_documents() {
        for text in ["p 2", "p = [1, 2", "p = 1\np = 2", "= 3", "p = [1,,2]", "p ="] {
            assert!(Config::parse(text).is_err(), "{text}");
        }
        let c = Config::parse("p = [1]").unwrap();
        assert!(c.check_keys(&["q"]).is_err());
        assert!(c.check_keys(&["p"]).is_ok());
        assert!(c.reals("q").is_err());
        assert!(Config::parse("p = [x]").unwrap().reals("p").is_err());
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("6:14").unwrap(), (6, 14));
        assert!(parse_window("6-14").is_err());
    }
}
