//! Experiment configuration: a flat key-value text format with sections.
//!
//! Grammar (documented in the README):
//!
//! ```text
//! # comment to end of line
//! [section]
//! key = 1.5                        # number
//! key = true                       # boolean
//! key = "text"                     # string (no escapes)
//! key = [1, 2, 3]                  # array of values
//! key = { kind = "poisson", lambda = 10.0 }   # inline table
//! ```
//!
//! Values are re-validated against model constraints at parse time; errors
//! carry the line and key they refer to. Command-line `--set section.key=v`
//! overrides win over file values.

use std::collections::BTreeMap;

use epirisk::dist::DegreeDist;
use epirisk::econ::Utility;
use epirisk::game::{CostCdf, CostModel};
use epirisk::lmf::EpidemicParams;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Str(String),
    Array(Vec<Value>),
    Table(BTreeMap<String, Value>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::Array(_) => "array",
            Value::Table(_) => "table",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    /// section -> key -> (value, line number)
    entries: BTreeMap<String, BTreeMap<String, (Value, usize)>>,
}

fn err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Config> {
        let mut config = Config::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let Some(name) = inner.strip_suffix(']') else {
                    return Err(err(line_no, "unterminated section header"));
                };
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(err(line_no, format!("invalid section name '{name}'")));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    line_no,
                    format!("expected 'key = value', got '{line}'"),
                ));
            };
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(line_no, format!("invalid key '{key}'")));
            }
            let value = parse_value(value.trim(), line_no)?;
            config
                .entries
                .entry(section.clone())
                .or_default()
                .insert(key.to_string(), (value, line_no));
        }
        Ok(config)
    }

    pub fn parse_file(path: &std::path::Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Apply a `section.key=value` override (flags win over file values).
    pub fn set(&mut self, spec: &str) -> CliResult<()> {
        let Some((path, value)) = spec.split_once('=') else {
            return Err(CliError::Config(format!(
                "--set expects section.key=value, got '{spec}'"
            )));
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            return Err(CliError::Config(format!(
                "--set expects section.key=value, got '{spec}'"
            )));
        };
        let value = parse_value(value.trim(), 0)?;
        self.entries
            .entry(section.trim().to_string())
            .or_default()
            .insert(key.trim().to_string(), (value, 0));
        Ok(())
    }

    pub fn set_value(&mut self, section: &str, key: &str, value: Value) {
        self.entries
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), (value, 0));
    }

    fn raw(&self, section: &str, key: &str) -> Option<&(Value, usize)> {
        self.entries.get(section).and_then(|s| s.get(key))
    }

    /// All keys actually present, for unknown-key diagnostics.
    pub fn keys(&self) -> Vec<(String, String, usize)> {
        let mut out = Vec::new();
        for (s, entries) in &self.entries {
            for (k, (_, line)) in entries {
                out.push((s.clone(), k.clone(), *line));
            }
        }
        out
    }

    pub fn f64(&self, section: &str, key: &str) -> CliResult<Option<f64>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((Value::Number(x), _)) => Ok(Some(*x)),
            Some((v, line)) => Err(err(
                *line,
                format!(
                    "[{section}].{key} must be a number, found {}",
                    v.type_name()
                ),
            )),
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64(section, key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> CliResult<usize> {
        match self.f64(section, key)? {
            None => Ok(default),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as usize),
            Some(x) => Err(CliError::Config(format!(
                "[{section}].{key} must be a nonnegative integer, got {x}"
            ))),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> CliResult<u64> {
        Ok(self.usize_or(section, key, default as usize)? as u64)
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((Value::Bool(b), _)) => Ok(*b),
            Some((v, line)) => Err(err(
                *line,
                format!(
                    "[{section}].{key} must be a boolean, found {}",
                    v.type_name()
                ),
            )),
        }
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> CliResult<String> {
        match self.raw(section, key) {
            None => Ok(default.to_string()),
            Some((Value::Str(s), _)) => Ok(s.clone()),
            Some((v, line)) => Err(err(
                *line,
                format!(
                    "[{section}].{key} must be a string, found {}",
                    v.type_name()
                ),
            )),
        }
    }

    pub fn str_opt(&self, section: &str, key: &str) -> CliResult<Option<String>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((Value::Str(s), _)) => Ok(Some(s.clone())),
            Some((v, line)) => Err(err(
                *line,
                format!(
                    "[{section}].{key} must be a string, found {}",
                    v.type_name()
                ),
            )),
        }
    }

    pub fn f64_list(&self, section: &str, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((Value::Array(items), line)) => items
                .iter()
                .map(|v| match v {
                    Value::Number(x) => Ok(*x),
                    other => Err(err(
                        *line,
                        format!(
                            "[{section}].{key} must contain numbers, found {}",
                            other.type_name()
                        ),
                    )),
                })
                .collect::<CliResult<Vec<f64>>>()
                .map(Some),
            Some((v, line)) => Err(err(
                *line,
                format!(
                    "[{section}].{key} must be an array, found {}",
                    v.type_name()
                ),
            )),
        }
    }

    fn table(
        &self,
        section: &str,
        key: &str,
    ) -> CliResult<Option<(&BTreeMap<String, Value>, usize)>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((Value::Table(t), line)) => Ok(Some((t, *line))),
            Some((v, line)) => Err(err(
                *line,
                format!(
                    "[{section}].{key} must be an inline table, found {}",
                    v.type_name()
                ),
            )),
        }
    }

    /// `[params]` block with the documented defaults.
    pub fn epidemic_params(&self) -> CliResult<EpidemicParams> {
        let degree = self.degree_dist()?;
        let params = EpidemicParams::new(
            self.f64_or("params", "p_plus", defaults::P_PLUS)?,
            self.f64_or("params", "p_minus", defaults::P_MINUS)?,
            self.f64_or("params", "q_plus", defaults::Q_PLUS)?,
            self.f64_or("params", "q_minus", defaults::Q_MINUS)?,
            degree,
        )?;
        Ok(params)
    }

    pub fn degree_dist(&self) -> CliResult<DegreeDist> {
        let Some((t, line)) = self.table("params", "degree")? else {
            return Ok(DegreeDist::poisson(defaults::LAMBDA).expect("default degree"));
        };
        let kind = table_str(t, "kind", line)?;
        let dist = match kind.as_str() {
            "poisson" => DegreeDist::poisson(table_f64(t, "lambda", line)?)?,
            "regular" => {
                let d = table_f64(t, "degree", line)?;
                if d < 0.0 || d.fract() != 0.0 {
                    return Err(err(line, "regular degree must be a nonnegative integer"));
                }
                DegreeDist::regular(d as usize)
            }
            "geometric" => DegreeDist::geometric(table_f64(t, "p", line)?)?,
            "empirical" => {
                let probs = match t.get("probs") {
                    Some(Value::Array(items)) => items
                        .iter()
                        .map(|v| match v {
                            Value::Number(x) => Ok(*x),
                            _ => Err(err(line, "degree probs must be numbers")),
                        })
                        .collect::<CliResult<Vec<f64>>>()?,
                    _ => return Err(err(line, "empirical degree needs probs = [...]")),
                };
                DegreeDist::empirical(probs)?
            }
            other => {
                return Err(err(
                    line,
                    format!("unknown degree kind '{other}' (poisson|regular|geometric|empirical)"),
                ))
            }
        };
        Ok(dist)
    }

    /// `[econ]` block: utility, wealth, loss.
    pub fn agent_economy(&self) -> CliResult<epirisk::AgentEconomy> {
        let utility = match self.table("econ", "utility")? {
            None => Utility::RiskNeutral,
            Some((t, line)) => match table_str(t, "kind", line)?.as_str() {
                "risk_neutral" => Utility::RiskNeutral,
                "cara" => Utility::Cara {
                    a: table_f64(t, "a", line)?,
                },
                "log" => Utility::Log {
                    shift: table_f64(t, "shift", line)?,
                },
                "crra" => Utility::Crra {
                    rho: table_f64(t, "rho", line)?,
                },
                other => {
                    return Err(err(
                        line,
                        format!("unknown utility kind '{other}' (risk_neutral|cara|log|crra)"),
                    ))
                }
            },
        };
        let loss = self.f64_or("econ", "loss", defaults::LOSS)?;
        let wealth = self.f64_or("econ", "wealth", defaults::WEALTH)?;
        let cost = match self.f64("cost", "c")? {
            Some(c) if (0.0..=loss).contains(&c) => c,
            _ => 0.0,
        };
        Ok(epirisk::AgentEconomy::new(utility, wealth, loss, cost)?)
    }

    /// `[cost]` block; defaults to a constant cost of `0.5 * loss`.
    pub fn cost_model(&self) -> CliResult<CostModel> {
        let loss = self.f64_or("econ", "loss", defaults::LOSS)?;
        let kind = self.str_or("cost", "kind", "constant")?;
        match kind.as_str() {
            "constant" => {
                let c = self.f64_or("cost", "c", 0.5 * loss)?;
                Ok(CostModel::constant(c, loss)?)
            }
            "distribution" => {
                let flat = self.f64_list("cost", "points")?.ok_or_else(|| {
                    CliError::Config(
                        "[cost].points = [t0, F0, t1, F1, ...] required for kind = \"distribution\""
                            .into(),
                    )
                })?;
                if flat.len() % 2 != 0 {
                    return Err(CliError::Config(
                        "[cost].points must hold (t, F) pairs: even length required".into(),
                    ));
                }
                let pts: Vec<(f64, f64)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
                Ok(CostModel::Distribution {
                    cdf: CostCdf::new(pts)?,
                    loss,
                })
            }
            other => Err(CliError::Config(format!(
                "[cost].kind must be constant or distribution, got '{other}'"
            ))),
        }
    }
}

/// Documented configuration defaults.
pub mod defaults {
    pub const P_PLUS: f64 = 0.01;
    pub const P_MINUS: f64 = 0.005;
    pub const Q_PLUS: f64 = 0.5;
    pub const Q_MINUS: f64 = 0.0;
    pub const LAMBDA: f64 = 10.0;
    pub const LOSS: f64 = 1.0;
    pub const WEALTH: f64 = 10.0;
    pub const SEED: u64 = 42;
    pub const TRIALS: usize = 10_000;
    pub const GAMMA_GRID: usize = 401;
    pub const COST_GRID: usize = 400;
    pub const Q_MINUS_VALUES: [f64; 5] = [0.0, 0.125, 0.25, 0.375, 0.5];
}

fn table_f64(t: &BTreeMap<String, Value>, key: &str, line: usize) -> CliResult<f64> {
    match t.get(key) {
        Some(Value::Number(x)) => Ok(*x),
        Some(v) => Err(err(
            line,
            format!("field '{key}' must be a number, found {}", v.type_name()),
        )),
        None => Err(err(line, format!("missing field '{key}'"))),
    }
}

fn table_str(t: &BTreeMap<String, Value>, key: &str, line: usize) -> CliResult<String> {
    match t.get(key) {
        Some(Value::Str(s)) => Ok(s.clone()),
        Some(v) => Err(err(
            line,
            format!("field '{key}' must be a string, found {}", v.type_name()),
        )),
        None => Err(err(line, format!("missing field '{key}'"))),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(s: &str, line: usize) -> CliResult<Value> {
    let s = s.trim();
    if s.is_empty() {
        return Err(err(line, "empty value"));
    }
    if let Some(rest) = s.strip_prefix('"') {
        let Some(inner) = rest.strip_suffix('"') else {
            return Err(err(line, "unterminated string"));
        };
        if inner.contains('"') {
            return Err(err(line, "strings cannot contain embedded quotes"));
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if s == "true" {
        return Ok(Value::Bool(true));
    }
    if s == "false" {
        return Ok(Value::Bool(false));
    }
    if let Some(inner) = s.strip_prefix('[') {
        let Some(inner) = inner.strip_suffix(']') else {
            return Err(err(line, "unterminated array"));
        };
        let items = split_top_level(inner, line)?
            .into_iter()
            .map(|part| parse_value(part, line))
            .collect::<CliResult<Vec<Value>>>()?;
        return Ok(Value::Array(items));
    }
    if let Some(inner) = s.strip_prefix('{') {
        let Some(inner) = inner.strip_suffix('}') else {
            return Err(err(line, "unterminated inline table"));
        };
        let mut map = BTreeMap::new();
        for part in split_top_level(inner, line)? {
            let Some((k, v)) = part.split_once('=') else {
                return Err(err(
                    line,
                    format!("inline table entry '{part}' is not key = value"),
                ));
            };
            map.insert(k.trim().to_string(), parse_value(v.trim(), line)?);
        }
        return Ok(Value::Table(map));
    }
    s.parse::<f64>()
        .map(Value::Number)
        .map_err(|_| err(line, format!("cannot parse value '{s}'")))
}

/// Split on commas that are not nested inside brackets or braces.
fn split_top_level(s: &str, line: usize) -> CliResult<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    let mut in_string = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '[' | '{' if !in_string => depth += 1,
            ']' | '}' if !in_string => depth -= 1,
            ',' if depth == 0 && !in_string => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 || in_string {
        return Err(err(line, "unbalanced brackets or quotes"));
    }
    let last = s[start..].trim();
    if !last.is_empty() {
        parts.push(last);
    }
    Ok(parts.into_iter().filter(|p| !p.is_empty()).collect())
}
