//! `fpf` command-line front end.
//!
//! Commands render into an [`Outcome`] (exit code plus captured output) so
//! they can be driven in-process by tests as well as by the binary.

pub mod format;
pub mod verify;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use fpf_core::scenarios::{builtin_names, builtin_source, parse_scenario, run_scenario};
use fpf_core::Error;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_200_707;

/// Prefix selecting a bundled scenario instead of a file, e.g. `builtin:maudlin`.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "fpf",
    version,
    about = "Evaluate multiple-time quantum scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one scenario document.
    Run {
        /// Scenario file, or `builtin:<name>`.
        path: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Evaluate a scenario across a range of one numeric field.
    Sweep {
        path: String,
        /// JSON pointer to the swept field, e.g. `/mode_params/t`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run the randomized invariant suites.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Fault injection: perturb the propagators fed to the unitarity suite.
        #[arg(long, hide = true)]
        perturb_unitary: bool,
    },
    /// List the bundled scenarios.
    List,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = format!("error: {}", message.into());
        stderr.push('\n');
        Outcome {
            code,
            stdout: String::new(),
            stderr,
        }
    }

    fn from_error(e: &Error) -> Self {
        let code = if e.is_degenerate() {
            EXIT_DEGENERATE
        } else {
            EXIT_INVALID
        };
        Self::fail(code, e.to_string())
    }
}

/// Parses `args` (program name first) and executes the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            }
        }
    }
}

pub fn execute(command: &Command) -> Outcome {
    match command {
        Command::Run { path, format } => cmd_run(path, *format),
        Command::Sweep {
            path,
            param,
            from,
            to,
            steps,
            format,
        } => cmd_sweep(path, param, *from, *to, *steps, *format),
        Command::Verify {
            seed,
            perturb_unitary,
        } => verify::cmd_verify(*seed, *perturb_unitary),
        Command::List => cmd_list(),
    }
}

fn load(path: &str) -> Result<String, Outcome> {
    if let Some(name) = path.strip_prefix(BUILTIN_PREFIX) {
        return builtin_source(name).map(str::to_string).ok_or_else(|| {
            Outcome::fail(EXIT_INVALID, format!("no builtin scenario named `{name}`"))
        });
    }
    fs::read_to_string(PathBuf::from(path))
        .map_err(|e| Outcome::fail(EXIT_INVALID, format!("cannot read `{path}`: {e}")))
}

/// Evaluates a document and returns its rounded JSON form.
fn evaluate(text: &str) -> Result<Value, Outcome> {
    let spec = parse_scenario(text).map_err(|e| Outcome::from_error(&e))?;
    let doc = run_scenario(&spec).map_err(|e| Outcome::from_error(&e))?;
    Ok(format::rounded(
        &serde_json::to_value(doc).expect("serializable"),
    ))
}

pub fn cmd_run(path: &str, fmt: Format) -> Outcome {
    let result = load(path).and_then(|text| evaluate(&text));
    match result {
        Ok(doc) => Outcome::ok(match fmt {
            Format::Json => format::json_text(&doc),
            Format::Table => format::result_table(&doc),
        }),
        Err(o) => o,
    }
}

/// The `i`-th of `steps` evenly spaced values from `from` to `to`.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

pub fn cmd_sweep(
    path: &str,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    fmt: Format,
) -> Outcome {
    if steps < 2 {
        return Outcome::fail(
            EXIT_INVALID,
            format!("a sweep needs at least 2 steps, got {steps}"),
        );
    }
    if !from.is_finite() || !to.is_finite() {
        return Outcome::fail(EXIT_INVALID, "sweep bounds must be finite");
    }
    let text = match load(path) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let mut base: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_INVALID, format!("`{path}` is not valid JSON: {e}")),
    };
    match base.pointer(param) {
        Some(v) if v.is_number() => {}
        Some(_) => {
            return Outcome::fail(
                EXIT_INVALID,
                format!("`{param}` does not address a numeric field"),
            )
        }
        None => return Outcome::fail(EXIT_INVALID, format!("unknown parameter path `{param}`")),
    }

    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::with_capacity(steps);
    for v in sweep_values(from, to, steps) {
        *base.pointer_mut(param).expect("checked above") = json!(v);
        let doc = match evaluate(&base.to_string()) {
            Ok(d) => d,
            Err(mut o) => {
                o.stderr = format!(
                    "at {param} = {v}: {}",
                    o.stderr.trim_start_matches("error: ")
                );
                o.stderr.insert_str(0, "error: ");
                return o;
            }
        };
        let (names, values) = format::summary_columns(&doc);
        columns.get_or_insert(names);
        let mut row = vec![format::rounded(&json!(v))];
        row.extend(values);
        rows.push(Value::Array(row));
    }
    let mut header = vec![param.to_string()];
    header.extend(columns.unwrap_or_default());
    let series = json!({ "param": param, "columns": header, "rows": rows });
    Outcome::ok(match fmt {
        Format::Json => format::json_text(&series),
        Format::Table => format::series_table(&series),
    })
}

pub fn cmd_list() -> Outcome {
    let mut out = String::new();
    for name in builtin_names() {
        let spec = fpf_core::scenarios::builtin(name).expect("bundled");
        out.push_str(&format!(
            "{name:<16} {:<14} dim {}\n",
            spec.mode().name(),
            spec.dim()
        ));
    }
    Outcome::ok(out)
}
