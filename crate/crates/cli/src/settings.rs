// SPDX-License-Identifier: Apache-2.0

//! Run parameters assembled from defaults, a `key=value` file, flags and
//! sweep points, applied in that order.

use std::path::PathBuf;
use std::str::FromStr;

use s2lal::engine::SimConfig;
use s2lal::netlist::{parse_number, DEFAULT_CAP, DEFAULT_RON};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SettingError {
    #[error("unknown setting '{0}'")]
    UnknownKey(String),
    #[error("bad value '{value}' for {key}")]
    BadValue { key: String, value: String },
    #[error("{path}:{line}: expected key=value")]
    Syntax { path: String, line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Vcd,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vcd" => Ok(Format::Vcd),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub config: SimConfig,
    pub ticks_given: bool,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            config: SimConfig::default(),
            ticks_given: false,
            format: None,
            out: None,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl Settings {
    /// Applies one setting. Keys accept `-` or `_` interchangeably.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SettingError> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let bad = || SettingError::BadValue {
            key: key.clone(),
            value: value.to_string(),
        };
        let num = || parse_number(value).ok_or_else(bad);
        let spec = &mut self.config.spec;
        match key.as_str() {
            "ticks" => {
                self.config.ticks = value.parse().map_err(|_| bad())?;
                self.ticks_given = true;
            }
            "substeps" => self.config.substeps = value.parse().map_err(|_| bad())?,
            "vdd" => spec.vdd = num()?,
            "vt" => spec.vt = num()?,
            "vb" => spec.vb = num()?,
            "tau-tr" => *spec = spec.with_tau_tr(num()?),
            "xi-tr" => spec.xi_tr = num()?,
            "strict" => self.config.strict = parse_bool(value).ok_or_else(bad)?,
            "epsilon" => self.config.epsilon = Some(num()?),
            "format" => self.format = Some(value.parse().map_err(|_| bad())?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(SettingError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Reads `key=value` lines; `#` starts a comment.
    pub fn load(&mut self, path: &str, text: &str) -> Result<(), SettingError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(SettingError::Syntax {
                path: path.to_string(),
                line: i + 1,
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn defaults_line() -> String {
        let d = SimConfig::default();
        format!(
            "# defaults: vdd={} V vt={} V r_on={} ohm cap={:e} F substeps={} tau_tr={:e} s",
            d.spec.vdd, d.spec.vt, DEFAULT_RON, DEFAULT_CAP, d.substeps, d.spec.tau_tr
        )
    }

    pub fn run_line(&self) -> String {
        let c = &self.config;
        format!(
            "# run: ticks={} substeps={} vdd={} vt={} vb={} tau_tr={:e} xi_tr={} strict={} epsilon={}",
            c.ticks,
            c.substeps,
            c.spec.vdd,
            c.spec.vt,
            c.spec.vb,
            c.spec.tau_tr,
            c.spec.xi_tr,
            c.strict,
            c.eps()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut s = Settings::default();
        s.load("cfg", "# sweep base\nvdd = 1.2\ntau_tr=2n\nstrict=off\n").unwrap();
        s.set("vdd", "0.9").unwrap();
        assert_eq!(s.config.spec.vdd, 0.9);
        assert_eq!(s.config.spec.tau_tr, 2e-9);
        assert_eq!(s.config.spec.tick, 2e-9);
        assert!(!s.config.strict);
        assert!(!s.ticks_given);
    }

    #[test]
    fn rejects_junk() {
        let mut s = Settings::default();
        assert!(matches!(s.set("volts", "1"), Err(SettingError::UnknownKey(_))));
        assert!(matches!(s.set("vt", "x"), Err(SettingError::BadValue { .. })));
        assert!(matches!(s.load("cfg", "vdd\n"), Err(SettingError::Syntax { line: 1, .. })));
    }
}
