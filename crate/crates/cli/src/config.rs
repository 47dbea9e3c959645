//! Run configuration: defaults, an optional `key = value` file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use zeroledger::ledger::{LedgerOptions, DEFAULT_C0, DEFAULT_EPS_NUM};

use crate::CliError;

pub const DEFAULT_DELTA: f64 = 0.291;
pub const DEFAULT_GRID: usize = 201;
pub const MIN_GRID: usize = 51;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(CliError::Usage(format!(
                "unknown format {other:?}, expected json, csv or markdown"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Markdown => "markdown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub delta: f64,
    pub c0: f64,
    pub eps_num: f64,
    pub grid_points: usize,
    pub output_format: OutputFormat,
    pub out_path: Option<PathBuf>,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            c0: DEFAULT_C0,
            eps_num: DEFAULT_EPS_NUM,
            grid_points: DEFAULT_GRID,
            output_format: OutputFormat::Json,
            out_path: None,
            parallel: false,
        }
    }
}

/// Values supplied on the command line; `None` leaves the file or default value alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub delta: Option<f64>,
    pub c0: Option<f64>,
    pub eps_num: Option<f64>,
    pub grid_points: Option<usize>,
    pub output_format: Option<OutputFormat>,
    pub out_path: Option<PathBuf>,
    pub parallel: bool,
}

impl RunConfig {
    /// Defaults, then the config file if any, then the flags.
    pub fn resolve(config_path: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        cfg.apply_overrides(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (line_no, key, value) in parse_pairs(text)? {
            let bad = |what: &str| CliError::Usage(format!("config line {line_no}: {key} = {value:?} is not {what}"));
            match key.as_str() {
                "delta" => self.delta = value.parse().map_err(|_| bad("a real"))?,
                "c0" => self.c0 = value.parse().map_err(|_| bad("a real"))?,
                "eps_num" | "eps-num" => self.eps_num = value.parse().map_err(|_| bad("a real"))?,
                "grid" | "grid_points" => self.grid_points = value.parse().map_err(|_| bad("an integer"))?,
                "format" | "output_format" => self.output_format = value.parse()?,
                "out" | "out_path" => self.out_path = Some(PathBuf::from(value)),
                "parallel" => self.parallel = parse_bool(&value).ok_or_else(|| bad("a boolean"))?,
                _ => return Err(CliError::Usage(format!("config line {line_no}: unknown key {key:?}"))),
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(v) = o.delta {
            self.delta = v;
        }
        if let Some(v) = o.c0 {
            self.c0 = v;
        }
        if let Some(v) = o.eps_num {
            self.eps_num = v;
        }
        if let Some(v) = o.grid_points {
            self.grid_points = v;
        }
        if let Some(v) = o.output_format {
            self.output_format = v;
        }
        if let Some(v) = &o.out_path {
            self.out_path = Some(v.clone());
        }
        if o.parallel {
            self.parallel = true;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Usage(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.eps_num >= 0.0 && self.eps_num.is_finite()) {
            return Err(CliError::Usage(format!(
                "eps_num must be finite and non-negative, got {}",
                self.eps_num
            )));
        }
        // An odd count puts a grid point on both endpoints and the midpoint.
        if self.grid_points < MIN_GRID || self.grid_points.is_multiple_of(2) {
            return Err(CliError::Usage(format!(
                "grid must be an odd integer >= {MIN_GRID}, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }

    pub fn ledger_options(&self) -> LedgerOptions {
        LedgerOptions {
            eps_num: self.eps_num,
            grid_points: self.grid_points,
        }
    }
}

/// `(line number, key, value)` triples. Blank lines and `#` comments are skipped,
/// including trailing comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value, got {raw:?}", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((i + 1, k.to_ascii_lowercase(), v.to_string()));
    }
    Ok(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("# run\ndelta = 0.28  # tighter\n\nformat = csv\nparallel = yes\n")
            .unwrap();
        assert_eq!(cfg.delta, 0.28);
        assert_eq!(cfg.output_format, OutputFormat::Csv);
        assert!(cfg.parallel);
        cfg.apply_overrides(&Overrides {
            delta: Some(0.25),
            ..Default::default()
        });
        assert_eq!(cfg.delta, 0.25);
        assert_eq!(cfg.output_format, OutputFormat::Csv);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_file("colour = blue").is_err());
        assert!(cfg.apply_file("delta 0.3").is_err());
        assert!(cfg.apply_file("grid = many").is_err());
    }

    #[test]
    fn grid_must_be_odd_and_large_enough() {
        let mut cfg = RunConfig {
            grid_points: 200,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.grid_points = 49;
        assert!(cfg.validate().is_err());
        cfg.grid_points = 401;
        assert!(cfg.validate().is_ok());
    }
}
