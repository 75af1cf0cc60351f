//! `dd-pricer` command-line front end.
//!
//! Results go to stdout (or `--output`) as JSON with a `schema_version`
//! field, or as CSV with a header row. Diagnostics go to stderr. Exit codes:
//! 0 success, 2 validation failure, 3 input error, 4 numerical error.

pub mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use serde::Serialize;
use serde_json::{Map, Value};

use dd_pricer_core::validation::{self, SuiteConfig};

use args::{Cli, Command, Format, Params, SWEEP_AXES};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl From<dd_pricer_core::Error> for CliError {
    fn from(e: dd_pricer_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

/// Parses `argv`, runs the command and writes its payload to `stdout`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli, stderr) {
        Ok((payload, code)) => match emit(&cli, &payload, stdout) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(stderr, "error: {}", e.message());
                e.exit_code()
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

fn params_map(cli: &Cli) -> Result<Map<String, Value>, CliError> {
    let mut map = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("reading config {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Input("config file must hold a JSON object".into())),
                Err(e) => return Err(CliError::Input(format!("parsing config {}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(flags) = serde_json::to_value(&cli.params).expect("params serialize") {
        map.extend(flags);
    }
    Ok(map)
}

fn params_from(map: &Map<String, Value>) -> Result<Params, CliError> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|e| CliError::Input(format!("config: {e}")))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("grid must be start:end:count, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn axis_value(axis: &str, v: f64) -> Result<Value, CliError> {
    if axis == "periods" {
        if v.fract() != 0.0 || v < 0.0 {
            return Err(CliError::Input(format!("periods must be a whole number, got {v}")));
        }
        return Ok(Value::from(v as u64));
    }
    Ok(Value::from(v))
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

enum Payload {
    Single { command: String, params: Map<String, Value>, result: Value },
    Sweep { command: String, axis: String, params: Map<String, Value>, rows: Vec<Value> },
}

fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<(Payload, i32), CliError> {
    let map = params_map(cli)?;
    let p = params_from(&map)?;
    let single = |command: String, result: Value| Payload::Single {
        command,
        params: map.clone(),
        result,
    };
    Ok(match &cli.command {
        Command::Price { contract } => {
            let name = format!("price {}", value_name(contract));
            (single(name, commands::price(*contract, &p)?), EXIT_OK)
        }
        Command::Threshold => (single("threshold".into(), commands::threshold(&p)?), EXIT_OK),
        Command::ExpectedTime { kind } => {
            let name = format!("expected-time {}", value_name(kind));
            (single(name, commands::expected_time(*kind, &p)?), EXIT_OK)
        }
        Command::Simulate { quantity } => {
            let name = format!("simulate {}", value_name(quantity));
            (single(name, commands::simulate(*quantity, &p)?), EXIT_OK)
        }
        Command::Validate { fast } => {
            let seed = p.seed.unwrap_or(validation::DEFAULT_SEED);
            let mut suite = if *fast { SuiteConfig::fast(seed) } else { SuiteConfig::full(seed) };
            if let Some(paths) = p.paths {
                suite.sim.paths = paths;
            }
            if let Some(dt) = p.dt {
                suite.sim.dt = dt;
            }
            if let Some(w) = p.workers {
                suite.sim.workers = w;
            }
            if let Some(b) = p.bridge {
                suite.sim.bridge_correction = b;
            }
            let report = validation::run_suite(&suite)?;
            let _ = write!(stderr, "{}", report.render_text());
            let code = if report.passed { EXIT_OK } else { EXIT_VALIDATION };
            (single("validate".into(), to_json(&report)?), code)
        }
        Command::Sweep { axis, grid, inner } => {
            if !SWEEP_AXES.contains(&axis.as_str()) {
                return Err(CliError::Input(format!(
                    "unknown sweep axis `{axis}`; expected one of {}",
                    SWEEP_AXES.join(", ")
                )));
            }
            let mut rows = Vec::new();
            for v in parse_grid(grid)? {
                let mut point = map.clone();
                point.insert(axis.clone(), axis_value(axis, v)?);
                let result = commands::sweep_point(*inner, &params_from(&point)?)?;
                let mut row = Map::new();
                row.insert(axis.clone(), point[axis.as_str()].clone());
                if let Value::Object(fields) = result {
                    row.extend(fields);
                }
                rows.push(Value::Object(row));
            }
            let command = match inner {
                args::SweepCommand::Price { contract } => format!("sweep price {}", value_name(contract)),
                args::SweepCommand::Threshold => "sweep threshold".into(),
                args::SweepCommand::ExpectedTime { kind } => format!("sweep expected-time {}", value_name(kind)),
            };
            let mut params = map.clone();
            params.remove(axis.as_str());
            (
                Payload::Sweep {
                    command,
                    axis: axis.clone(),
                    params,
                    rows,
                },
                EXIT_OK,
            )
        }
    })
}

fn value_name<T: clap::ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn to_json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Input(format!("serializing result: {e}")))
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

fn emit(cli: &Cli, payload: &Payload, stdout: &mut dyn Write) -> Result<(), CliError> {
    let default_format = match payload {
        Payload::Sweep { .. } => Format::Csv,
        Payload::Single { .. } => Format::Json,
    };
    let text = match cli.format.unwrap_or(default_format) {
        Format::Json => render_json(payload)?,
        Format::Csv => render_csv(payload)?,
    };
    let io = |e: std::io::Error| CliError::Input(format!("writing output: {e}"));
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => stdout.write_all(text.as_bytes()).map_err(io),
    }
}

fn render_json(payload: &Payload) -> Result<String, CliError> {
    let doc = match payload {
        Payload::Single { command, params, result } => serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "params": params,
            "result": result,
        }),
        Payload::Sweep {
            command,
            axis,
            params,
            rows,
        } => serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "axis": axis,
            "params": params,
            "rows": rows,
        }),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Nested objects become `outer_inner` columns; arrays are not expected.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}_{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, inner) in m {
                flatten(&key(k), inner, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render_csv(payload: &Payload) -> Result<String, CliError> {
    let rows: Vec<&Value> = match payload {
        Payload::Single { result, .. } => vec![result],
        Payload::Sweep { rows, .. } => rows.iter().collect(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Option<Vec<String>> = None;
    let csv_err = |e: csv::Error| CliError::Input(format!("csv: {e}"));
    for row in rows {
        let mut cells = Vec::new();
        flatten("", row, &mut cells);
        let names: Vec<String> = cells.iter().map(|c| c.0.clone()).collect();
        match &header {
            None => {
                w.write_record(&names).map_err(csv_err)?;
                header = Some(names);
            }
            Some(h) if *h != names => {
                return Err(CliError::Input("sweep rows have differing columns".into()));
            }
            Some(_) => {}
        }
        w.write_record(cells.iter().map(|c| c.1.as_str())).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}
