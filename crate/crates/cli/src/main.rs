// SPDX-License-Identifier: Apache-2.0

//! `s2lal`: generate cells, simulate netlists, tabulate gates, check clocks.
//!
//! Exit status: 0 clean, 2 violations found, 1 operational error.

mod settings;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use s2lal::cells::{
    self, gate_testbench, return_stimulus, shift_register, shift_register_stimulus, CellError, GateKind, PipelineError,
    StageFunction,
};
use s2lal::checker::{check_clock_shape, check_trace, summarize, Violation};
use s2lal::energy::{attribute, EnergyError};
use s2lal::engine::{simulate_partial, Circuit, SimConfig, SimError, Trace};
use s2lal::export::{read_csv, write_csv, write_vcd, ExportError};
use s2lal::netlist::{flatten, parse, serialize, validate, Design, FlattenError, ParseError};
use s2lal::stimulus::{BusStimulus, Stimulus, StimulusError};
use s2lal::timing::{Phase, TimingError, PHASES};
use settings::{Format, SettingError, Settings};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{source}")]
    Netlist { path: String, source: ParseError },
    #[error("{path}: line {}: {}", source.line, source.message)]
    Stimulus { path: String, source: StimulusError },
    #[error(transparent)]
    Setting(#[from] SettingError),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "s2lal", version, about = "Switch-level simulator and rule checker for quad-rail adiabatic logic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a generated cell or circuit as netlist text.
    Gen(GenArgs),
    /// Simulate a netlist under a stimulus, check it and report energy.
    Sim(SimArgs),
    /// Tabulate which output symbol a gate pulses for every input pair.
    Truth(TruthArgs),
    /// Check clock rail shapes in a `time_ticks,node,volts` CSV.
    CheckClock(CheckClockArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CellKind {
    Tgate,
    Buffer,
    LatchingBuffer,
    Not,
    And,
    Or,
    Nand,
    Nor,
    Shiftreg,
    Pipeline,
}

#[derive(Args)]
struct GenArgs {
    cell: CellKind,
    /// Drive phase of single cells.
    #[arg(long, visible_alias = "drive", default_value_t = 0, allow_negative_numbers = true)]
    phase: i64,
    /// Pass phase of a latching buffer; defaults to the phase before the drive.
    #[arg(long, allow_negative_numbers = true)]
    pass: Option<i64>,
    /// Wrap a gate in its two-symbol test bench instead of a bare cell.
    #[arg(long)]
    bench: bool,
    /// Shift register stages.
    #[arg(long, default_value_t = 8)]
    stages: usize,
    /// Symbols per shift register bus.
    #[arg(long, default_value_t = 2)]
    symbols: usize,
    /// Input word width of a pipeline.
    #[arg(long, default_value_t = 1)]
    width: usize,
    /// Pipeline stage function, e.g. `b1,b0`; repeat per stage.
    #[arg(long = "stage")]
    stage_functions: Vec<String>,
    /// Input stream for a stimulus file: symbols for a shift register
    /// (`1 0 - 1`), bit words `b0b1...` for a pipeline (`01 10 -`).
    #[arg(long)]
    inputs: Option<String>,
    /// Where to write the stimulus built from `--inputs`.
    #[arg(long, requires = "inputs")]
    stimulus_out: Option<PathBuf>,
    /// Netlist output file; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    ticks: Option<String>,
    #[arg(long)]
    substeps: Option<String>,
    #[arg(long)]
    vdd: Option<String>,
    #[arg(long)]
    vt: Option<String>,
    /// Body bias added to the threshold.
    #[arg(long)]
    vb: Option<String>,
    #[arg(long)]
    tau_tr: Option<String>,
    /// Ramp shape factor.
    #[arg(long)]
    xi_tr: Option<String>,
    /// Treat floating nodes as violations (`--strict false` lets them hold).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    strict: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// File of `key=value` lines using the flag names; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("ticks", &self.ticks),
            ("substeps", &self.substeps),
            ("vdd", &self.vdd),
            ("vt", &self.vt),
            ("vb", &self.vb),
            ("tau-tr", &self.tau_tr),
            ("xi-tr", &self.xi_tr),
            ("strict", &self.strict),
            ("epsilon", &self.epsilon),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            let text = read(path)?;
            s.load(&path.display().to_string(), &text)?;
        }
        for (k, v) in self.pairs() {
            s.set(k, v)?;
        }
        Ok(s)
    }
}

#[derive(Args)]
struct SimArgs {
    netlist: PathBuf,
    stimulus: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Waveform format; inferred from the `--out` extension when absent.
    #[arg(long)]
    format: Option<String>,
    /// Waveform output file.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Parameter sweep `key=v1,v2,...`; repeat for a cartesian product.
    #[arg(long)]
    sweep: Vec<String>,
}

#[derive(Args)]
struct TruthArgs {
    gate: GateKind,
    #[arg(long, visible_alias = "drive", default_value_t = 1, allow_negative_numbers = true)]
    phase: i64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CheckClockArgs {
    csv: PathBuf,
    /// Rails to check; every `phi<n>` column when absent.
    #[arg(long = "rail")]
    rails: Vec<String>,
    #[command(flatten)]
    run: RunArgs,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_symbols(text: &str) -> Result<Vec<Option<usize>>, CliError> {
    text.split_whitespace()
        .map(|s| match s {
            "-" => Ok(None),
            _ => s.parse().map(Some).map_err(|_| CliError::Usage(format!("bad symbol '{s}'"))),
        })
        .collect()
}

fn parse_words(text: &str, width: usize) -> Result<Vec<Option<Vec<bool>>>, CliError> {
    text.split_whitespace()
        .map(|w| {
            if w == "-" {
                return Ok(None);
            }
            let bits: Option<Vec<bool>> = w
                .chars()
                .map(|ch| match ch {
                    '0' => Some(false),
                    '1' => Some(true),
                    _ => None,
                })
                .collect();
            match bits {
                Some(b) if b.len() == width => Ok(Some(b)),
                _ => Err(CliError::Usage(format!("bad word '{w}' for width {width}"))),
            }
        })
        .collect()
}

fn gate_kind(cell: CellKind) -> Option<GateKind> {
    Some(match cell {
        CellKind::Buffer => GateKind::Buffer,
        CellKind::Not => GateKind::Not,
        CellKind::And => GateKind::And,
        CellKind::Or => GateKind::Or,
        CellKind::Nand => GateKind::Nand,
        CellKind::Nor => GateKind::Nor,
        _ => return None,
    })
}

fn gen(args: &GenArgs) -> Result<ExitCode, CliError> {
    let drive = Phase::new(args.phase)?;
    let mut stimulus = None;
    let design: Design = match args.cell {
        CellKind::Tgate => cells::standalone(cells::tgate(), drive),
        CellKind::LatchingBuffer => {
            let pass = match args.pass {
                Some(p) => Phase::new(p)?,
                None => drive.offset(-1),
            };
            cells::standalone(cells::latching_buffer(drive, pass)?, drive)
        }
        CellKind::Shiftreg => {
            if let Some(text) = &args.inputs {
                stimulus = Some(shift_register_stimulus(args.stages, &parse_symbols(text)?));
            }
            shift_register(args.stages, args.symbols)?
        }
        CellKind::Pipeline => {
            let functions = args
                .stage_functions
                .iter()
                .map(|s| s.parse::<StageFunction>().map_err(CliError::Usage))
                .collect::<Result<Vec<_>, _>>()?;
            let (d, _) = cells::pipeline(args.width, &functions, None)?;
            if let Some(text) = &args.inputs {
                stimulus = Some(return_stimulus(args.width, &functions, &parse_words(text, args.width)?));
            }
            d
        }
        gate => {
            let kind = gate_kind(gate).expect("remaining kinds are gates");
            if args.bench {
                gate_testbench(kind, drive)
            } else {
                let cell = match kind {
                    GateKind::Buffer => cells::buffer(drive),
                    GateKind::Not => cells::not_gate(drive),
                    GateKind::And => cells::and_gate(drive),
                    GateKind::Or => cells::or_gate(drive),
                    GateKind::Nand => cells::nand_gate(drive),
                    GateKind::Nor => cells::nor_gate(drive),
                };
                cells::standalone(cell, drive)
            }
        }
    };
    if let (Some(path), Some(stim)) = (&args.stimulus_out, &stimulus) {
        write_text(Some(path), &stim.to_string())?;
    } else if args.stimulus_out.is_some() {
        return Err(CliError::Usage("--inputs applies to shiftreg and pipeline only".into()));
    }
    write_text(args.out.as_deref(), &serialize(&design))?;
    Ok(ExitCode::SUCCESS)
}

/// Ticks covering every stimulus cycle plus two periods to drain.
fn default_ticks(stim: &Stimulus) -> u64 {
    let cycles = stim.buses.iter().map(|b| b.symbols.len()).max().unwrap_or(0) as u64;
    (cycles + 2) * PHASES as u64
}

fn check_length(stim: &Stimulus, config: &SimConfig) -> Result<(), CliError> {
    let cycles = config.ticks.div_ceil(PHASES as u64) as usize;
    match stim.buses.iter().find(|b| b.symbols.len() > cycles) {
        Some(b) => Err(CliError::Usage(format!(
            "stimulus for bus {} has {} cycles, the run covers {cycles}",
            b.name,
            b.symbols.len()
        ))),
        None => Ok(()),
    }
}

struct Outcome {
    circuit: Circuit,
    trace: Trace,
    violations: Vec<Violation>,
    aborted: Option<SimError>,
}

fn run(design: &Design, stim: &Stimulus, config: &SimConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    check_length(stim, config)?;
    let net = flatten(design)?;
    let circuit = Circuit::compile(&net, stim, config)?;
    let (trace, aborted) = simulate_partial(&circuit, config)?;
    let violations = check_trace(&circuit, &trace);
    Ok(Outcome {
        circuit,
        trace,
        violations,
        aborted,
    })
}

fn violation_report(out: &mut String, violations: &[Violation]) {
    let _ = writeln!(out, "violations: {}", violations.len());
    for (kind, n) in summarize(violations) {
        let _ = writeln!(out, "  {}: {n}", kind.as_str());
    }
    for v in violations {
        let _ = writeln!(out, "{}", v.line());
    }
}

/// Output path of one sweep point: `<stem>.<label>.<ext>`.
fn point_path(base: &Path, label: &str) -> PathBuf {
    if label.is_empty() {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{label}"),
    };
    base.with_file_name(name)
}

struct Point {
    label: String,
    settings: Settings,
}

fn sweep_points(base: &Settings, sweeps: &[String]) -> Result<Vec<Point>, CliError> {
    let mut points = vec![Point {
        label: String::new(),
        settings: base.clone(),
    }];
    for spec in sweeps {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("sweep '{spec}' is not key=v1,v2,...")))?;
        let mut next = Vec::new();
        for p in &points {
            for v in values.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                let mut settings = p.settings.clone();
                settings.set(key, v)?;
                let item = format!("{}={v}", key.trim());
                let label = if p.label.is_empty() { item } else { format!("{},{item}", p.label) };
                next.push(Point { label, settings });
            }
        }
        points = next;
    }
    Ok(points)
}

/// Runs one point and renders its report. Returns the report and whether
/// violations were found.
fn sim_point(design: &Design, stim: &Stimulus, point: &Point) -> Result<(String, bool), CliError> {
    let s = &point.settings;
    let mut config = s.config;
    if !s.ticks_given {
        config.ticks = default_ticks(stim);
    }
    let shown = Settings { config, ..s.clone() };
    let mut report = String::new();
    if !point.label.is_empty() {
        let _ = writeln!(report, "## sweep {}", point.label);
    }
    let _ = writeln!(report, "{}", shown.run_line());
    let o = run(design, stim, &config)?;
    let _ = writeln!(
        report,
        "# circuit: {} nodes, {} devices",
        o.circuit.node_count(),
        o.circuit.net.devices.len()
    );
    for f in validate(&o.circuit.net) {
        let _ = writeln!(report, "# finding: {f}");
    }
    if let Some(base) = &s.out {
        let path = point_path(base, &point.label);
        let format = match s.format {
            Some(f) => f,
            None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
            None => Format::Vcd,
        };
        let mut w = create(&path)?;
        match format {
            Format::Vcd => write_vcd(&o.circuit, &o.trace, &mut w)?,
            Format::Csv => write_csv(&o.circuit, &o.trace, &mut w)?,
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let _ = writeln!(report, "# waveform: {}", path.display());
    }
    violation_report(&mut report, &o.violations);
    let ledger = attribute(&o.circuit, &o.trace, &o.violations)?;
    let _ = writeln!(report, "energy ({} transitions):", ledger.transitions);
    for line in ledger.lines() {
        let _ = writeln!(report, "  {line}");
    }
    let _ = writeln!(report, "{ledger}");
    if let Some(e) = o.aborted {
        // what was checked up to the failure is still worth showing
        print!("{report}");
        return Err(e.into());
    }
    Ok((report, !o.violations.is_empty()))
}

fn sim(args: &SimArgs) -> Result<ExitCode, CliError> {
    let mut settings = args.run.settings()?;
    if let Some(f) = &args.format {
        settings.set("format", f)?;
    }
    if let Some(o) = &args.out {
        settings.out = Some(o.clone());
    }
    let netlist_path = args.netlist.display().to_string();
    let design = parse(&read(&args.netlist)?).map_err(|source| CliError::Netlist {
        path: netlist_path.clone(),
        source,
    })?;
    let stim = Stimulus::parse(&read(&args.stimulus)?).map_err(|source| CliError::Stimulus {
        path: args.stimulus.display().to_string(),
        source,
    })?;
    let points = sweep_points(&settings, &args.sweep)?;
    println!("# s2lal {} sim {netlist_path}", env!("CARGO_PKG_VERSION"));
    println!("{}", Settings::defaults_line());
    let results: Vec<Result<(String, bool), CliError>> = points.par_iter().map(|p| sim_point(&design, &stim, p)).collect();
    let mut dirty = false;
    for r in results {
        let (report, v) = r?;
        print!("{report}");
        dirty |= v;
    }
    Ok(if dirty { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

/// Symbol of `bus` pulsed at the start of `tick`: `Some(s)` when exactly one
/// hi rail is above mid-swing.
fn pulsed(o: &Outcome, bus: &str, tick: u64) -> Result<Option<usize>, CliError> {
    let k = (tick * o.trace.config.substeps as u64) as usize;
    let mid = o.trace.config.spec.vdd / 2.0;
    let mut found = Vec::new();
    for sym in 0..2 {
        let name = format!("{bus}_h{sym}");
        let n = o
            .circuit
            .net
            .node_index(&name)
            .ok_or_else(|| CliError::Usage(format!("bench has no node {name}")))?;
        if o.trace.voltage(n, k) > mid {
            found.push(sym);
        }
    }
    Ok(if found.len() == 1 { Some(found[0]) } else { None })
}

fn truth(args: &TruthArgs) -> Result<ExitCode, CliError> {
    let drive = Phase::new(args.phase)?;
    let kind = args.gate;
    let input = drive.offset(-1);
    let combos: Vec<(bool, bool)> = if kind.inputs() == 1 {
        vec![(false, false), (true, false)]
    } else {
        vec![(false, false), (true, false), (false, true), (true, true)]
    };
    let mut stim = Stimulus::default();
    let a: Vec<Option<bool>> = combos.iter().map(|c| Some(c.0)).collect();
    stim.push(BusStimulus::from_bits("a", input, &a));
    if kind.inputs() == 2 {
        let b: Vec<Option<bool>> = combos.iter().map(|c| Some(c.1)).collect();
        stim.push(BusStimulus::from_bits("b", input, &b));
    }
    let mut settings = args.run.settings()?;
    if !settings.ticks_given {
        settings.config.ticks = default_ticks(&stim);
    }
    let o = run(&gate_testbench(kind, drive), &stim, &settings.config)?;
    if let Some(e) = o.aborted {
        return Err(e.into());
    }
    println!("# s2lal {} truth {kind} drive={}", env!("CARGO_PKG_VERSION"), drive.index());
    println!("{}", Settings::defaults_line());
    println!("{}", settings.run_line());
    println!("{}", if kind.inputs() == 1 { "a | q" } else { "a b | q" });
    let mut wrong = 0;
    for (c, &(x, y)) in combos.iter().enumerate() {
        // output settles one tick after the input, mid-way through its hold
        let tick = PHASES as u64 * c as u64 + input.index() as u64 + 4;
        let got = pulsed(&o, "q", tick)?;
        let want = usize::from(kind.eval(x, y));
        let shown = got.map_or("?".to_string(), |s| s.to_string());
        let mark = if got == Some(want) { "" } else { "  MISMATCH" };
        wrong += usize::from(got != Some(want));
        if kind.inputs() == 1 {
            println!("{} | {shown}{mark}", u8::from(x));
        } else {
            println!("{} {} | {shown}{mark}", u8::from(x), u8::from(y));
        }
    }
    let mut report = String::new();
    violation_report(&mut report, &o.violations);
    print!("{report}");
    Ok(if wrong > 0 || !o.violations.is_empty() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn is_clock_name(name: &str) -> bool {
    name.strip_prefix("phi").is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

fn check_clock(args: &CheckClockArgs) -> Result<ExitCode, CliError> {
    let settings = args.run.settings()?;
    let spec = settings.config.spec;
    spec.validate()?;
    let samples = read_csv(&read(&args.csv)?)?;
    let rails: Vec<&String> = if args.rails.is_empty() {
        samples.keys().filter(|n| is_clock_name(n)).collect()
    } else {
        args.rails.iter().collect()
    };
    println!("# s2lal {} check-clock {}", env!("CARGO_PKG_VERSION"), args.csv.display());
    println!("{}", Settings::defaults_line());
    println!("{}", settings.run_line());
    let mut found = Vec::new();
    for rail in rails {
        let s = samples
            .get(rail)
            .ok_or_else(|| CliError::Usage(format!("no samples for rail {rail}")))?;
        println!("# {rail}: {} samples", s.len());
        found.extend(check_clock_shape(rail, s, &spec, settings.config.substeps));
    }
    let mut report = String::new();
    violation_report(&mut report, &found);
    print!("{report}");
    Ok(if found.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are operational errors, not findings
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Sim(a) => sim(a),
        Command::Truth(a) => truth(a),
        Command::CheckClock(a) => check_clock(a),
    };
    let _ = io::stdout().flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("s2lal: error: {e}");
            ExitCode::FAILURE
        }
    }
}
