// SPDX-License-Identifier: Apache-2.0

//! Per-cycle symbol sequences for primary input buses.
//!
//! One line per bus: `bus <name> phase=<p>: 1 0 - 1`. Each entry is the
//! index of the active symbol in that cycle, or `-` when every symbol rests.

use std::fmt;

use thiserror::Error;

use crate::timing::Phase;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("stimulus line {line}: {message}")]
pub struct StimulusError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusStimulus {
    pub name: String,
    pub phase: Phase,
    /// Active symbol per cycle; `None` is an inactive cycle.
    pub symbols: Vec<Option<usize>>,
}

impl BusStimulus {
    pub fn new(name: impl Into<String>, phase: Phase, symbols: Vec<Option<usize>>) -> Self {
        BusStimulus {
            name: name.into(),
            phase,
            symbols,
        }
    }

    /// Binary helper: `true` activates symbol 1, `false` symbol 0.
    pub fn from_bits(name: impl Into<String>, phase: Phase, bits: &[Option<bool>]) -> Self {
        Self::new(name, phase, bits.iter().map(|b| b.map(usize::from)).collect())
    }

    /// Activity pattern of one symbol, per cycle.
    pub fn activity(&self, symbol: usize) -> Vec<bool> {
        self.symbols.iter().map(|s| *s == Some(symbol)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stimulus {
    pub buses: Vec<BusStimulus>,
}

impl Stimulus {
    pub fn new(buses: Vec<BusStimulus>) -> Self {
        Stimulus { buses }
    }

    pub fn bus(&self, name: &str) -> Option<&BusStimulus> {
        self.buses.iter().find(|b| b.name == name)
    }

    pub fn push(&mut self, bus: BusStimulus) {
        self.buses.push(bus);
    }

    pub fn parse(text: &str) -> Result<Self, StimulusError> {
        let mut out = Stimulus::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| StimulusError { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (head, body) = content
                .split_once(':')
                .ok_or_else(|| err("expected 'bus <name> phase=<p>: ...'".into()))?;
            let mut words = head.split_whitespace();
            if words.next() != Some("bus") {
                return Err(err("line must start with 'bus'".into()));
            }
            let name = words.next().ok_or_else(|| err("missing bus name".into()))?;
            let phase = words
                .next()
                .and_then(|w| w.strip_prefix("phase="))
                .and_then(|p| p.parse::<i64>().ok())
                .and_then(|p| Phase::new(p).ok())
                .ok_or_else(|| err("expected phase=<0..7>".into()))?;
            if let Some(extra) = words.next() {
                return Err(err(format!("unexpected '{extra}'")));
            }
            let symbols = body
                .split_whitespace()
                .map(|s| match s {
                    "-" => Ok(None),
                    _ => s.parse::<usize>().map(Some).map_err(|_| err(format!("bad symbol '{s}'"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if out.bus(name).is_some() {
                return Err(err(format!("bus {name} given twice")));
            }
            out.buses.push(BusStimulus::new(name, phase, symbols));
        }
        Ok(out)
    }
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.buses {
            write!(f, "bus {} phase={}:", b.name, b.phase)?;
            for s in &b.symbols {
                match s {
                    Some(v) => write!(f, " {v}")?,
                    None => write!(f, " -")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let s = Stimulus::parse("# input\nbus s0_0 phase=0: 1 0 - 1\nbus ret phase=1: - 1\n").unwrap();
        assert_eq!(s.buses.len(), 2);
        assert_eq!(s.buses[0].symbols, vec![Some(1), Some(0), None, Some(1)]);
        assert_eq!(s.buses[1].phase, Phase::wrap(1));
        assert_eq!(Stimulus::parse(&s.to_string()).unwrap(), s);
        assert_eq!(s.buses[0].activity(1), vec![true, false, false, true]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = Stimulus::parse("bus a phase=0: 1\nbus b phase=9: 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(Stimulus::parse("bus a phase=0: x").is_err());
        assert!(Stimulus::parse("wire a phase=0: 1").is_err());
    }
}
