// SPDX-License-Identifier: Apache-2.0

//! Waveform export (VCD, CSV) and the CSV reader used for clock checks.

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::engine::{Circuit, Trace};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

fn vcd_id(mut i: usize) -> String {
    // printable identifier alphabet '!'..='~'
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s
}

fn vcd_name(name: &str) -> String {
    name.replace('/', ".")
}

/// Writes every node as a `real` variable, emitting value changes only.
/// Timestamps are femtoseconds, rounded to the nearest step.
pub fn write_vcd<W: Write>(c: &Circuit, trace: &Trace, mut out: W) -> Result<(), ExportError> {
    let s = trace.config.substeps as f64;
    let step_fs = c.spec.tick * 1e15 / s;
    writeln!(out, "$date s2lal $end")?;
    writeln!(out, "$version s2lal {} $end", env!("CARGO_PKG_VERSION"))?;
    writeln!(
        out,
        "$comment tick {} s, {} substeps per tick, substep {:e} s $end",
        c.spec.tick,
        trace.config.substeps,
        c.spec.tick / s
    )?;
    writeln!(out, "$timescale 1 fs $end")?;
    writeln!(out, "$scope module top $end")?;
    for n in 0..c.node_count() {
        writeln!(out, "$var real 64 {} {} $end", vcd_id(n), vcd_name(c.node_name(n)))?;
    }
    writeln!(out, "$upscope $end")?;
    writeln!(out, "$enddefinitions $end")?;
    let mut last: Vec<Option<f64>> = vec![None; c.node_count()];
    for (k, snap) in trace.snapshots.iter().enumerate() {
        let changed: Vec<usize> = (0..c.node_count()).filter(|&n| last[n] != Some(snap.voltages[n])).collect();
        if changed.is_empty() {
            continue;
        }
        writeln!(out, "#{}", (k as f64 * step_fs).round() as u64)?;
        if k == 0 {
            writeln!(out, "$dumpvars")?;
        }
        for n in changed {
            writeln!(out, "r{} {}", snap.voltages[n], vcd_id(n))?;
            last[n] = Some(snap.voltages[n]);
        }
        if k == 0 {
            writeln!(out, "$end")?;
        }
    }
    Ok(())
}

/// Writes `time_ticks,node,volts` rows for every node at every substep.
pub fn write_csv<W: Write>(c: &Circuit, trace: &Trace, out: W) -> Result<(), ExportError> {
    let s = trace.config.substeps;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_ticks", "node", "volts"])?;
    for snap in &trace.snapshots {
        let t = snap.time.ticks(s).to_string();
        for n in 0..c.node_count() {
            w.write_record([t.as_str(), c.node_name(n), &snap.voltages[n].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `time_ticks,node,volts` rows into per-node sample lists sorted by
/// time. A header row is optional; `#` starts a comment line.
pub fn read_csv(text: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>, ExportError> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 1, |p| p.line()) as usize;
        let err = |message: String| ExportError::Row { line, message };
        if i == 0 && row.get(0) == Some("time_ticks") {
            continue;
        }
        let (Some(t), Some(node), Some(v), None) = (row.get(0), row.get(1), row.get(2), row.get(3)) else {
            return Err(err(format!("expected 3 fields, got {}", row.len())));
        };
        let t: f64 = t.parse().map_err(|_| err(format!("bad time '{t}'")))?;
        let v: f64 = v.parse().map_err(|_| err(format!("bad voltage '{v}'")))?;
        out.entry(node.to_string()).or_default().push((t, v));
    }
    for samples in out.values_mut() {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}
