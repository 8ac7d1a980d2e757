//! `plmmse` command line.
//!
//! ```text
//! plmmse <toy|sparse|deblur|track|minimax> [--<param> <value>]... [--seed N] [--mc N]
//!        [--config FILE] [--out FILE [--store-runs]]
//! plmmse selftest [--level quick|full] [--seed N]
//! ```
//!
//! Flags override keys read from `--config`. Without `--out` the result
//! table is written to standard output. Exit status is 0 on success, 1 on a
//! usage error and 2 on a runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::{Error, Result};
use crate::harness::{execute, ExperimentConfig, ExperimentKind, ParamType};
use crate::selftest::{run_suites, Fault, Level};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const COMMON: [&str; 5] = ["seed", "mc", "out", "config", "store-runs"];

pub fn command() -> Command {
    let mut cmd = Command::new("plmmse")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Partially linear MMSE estimation experiments")
        .after_help(format!(
            "Set {} to cap the number of worker threads.",
            crate::harness::THREADS_ENV
        ))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for kind in ExperimentKind::ALL {
        cmd = cmd.subcommand(experiment_command(kind));
    }
    cmd.subcommand(
        Command::new("selftest")
            .about("Run the oracle-equivalence suites and print one status line per suite")
            .arg(
                Arg::new("level")
                    .long("level")
                    .value_name("LEVEL")
                    .value_parser(["quick", "full"])
                    .default_value("quick")
                    .help("Problem count: quick (under a minute) or full [name]"),
            )
            .arg(
                Arg::new("seed")
                    .long("seed")
                    .value_name("N")
                    .value_parser(clap::value_parser!(u64))
                    .default_value("1")
                    .help("Root seed of the random problems [integer]"),
            ),
    )
}

fn experiment_command(kind: ExperimentKind) -> Command {
    let mut cmd = Command::new(kind.name()).about(kind.about());
    for spec in kind.schema() {
        let mut arg = Arg::new(spec.key)
            .long(spec.key)
            .help(format!("{} [{}; default: {}]", capitalize(spec.help), spec.units, spec.default));
        arg = match spec.kind {
            ParamType::Bool => arg
                .value_name("BOOL")
                .num_args(0..=1)
                .default_missing_value("true")
                .value_parser(["true", "false"]),
            ParamType::Choice(options) => arg.value_name("NAME").value_parser(options.to_vec()),
            ParamType::Grid => arg.value_name("GRID").allow_hyphen_values(true),
            ParamType::Int => arg.value_name("N"),
            ParamType::Float => arg.value_name("X").allow_hyphen_values(true),
        };
        cmd = cmd.arg(arg);
    }
    cmd.arg(
        Arg::new("seed")
            .long("seed")
            .value_name("N")
            .help(format!("Root seed [integer; default: {}]", ExperimentConfig::DEFAULT_SEED)),
    )
    .arg(
        Arg::new("mc")
            .long("mc")
            .value_name("N")
            .help(format!("Monte Carlo count [{}; default: {}]", kind.mc_units(), kind.default_mc())),
    )
    .arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("Read `key = value` parameters from FILE; flags take precedence [path]"),
    )
    .arg(
        Arg::new("out")
            .long("out")
            .value_name("FILE")
            .help("Write the result table to FILE instead of standard output [path]"),
    )
    .arg(
        Arg::new("store-runs")
            .long("store-runs")
            .action(ArgAction::SetTrue)
            .help("Also write per-run values to <out stem>.runs.csv; needs --out [flag]"),
    )
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// Builds the experiment configuration from parsed flags.
pub fn config_from_matches(kind: ExperimentKind, m: &ArgMatches) -> Result<ExperimentConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => ExperimentConfig::from_file(path, Some(kind))?,
        None => ExperimentConfig::new(kind),
    };
    let keys = kind.schema().iter().map(|s| s.key).chain(COMMON.into_iter().filter(|k| *k != "config"));
    for key in keys {
        if key == "store-runs" {
            if m.get_flag(key) {
                cfg.store_runs = true;
            }
        } else if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    if cfg.store_runs && cfg.output.is_none() {
        return Err(Error::invalid("--store-runs needs --out"));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the command line `args` (including the program name) and returns
/// the exit status.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    if name == "selftest" {
        let level: Level = sub
            .get_one::<String>("level")
            .expect("defaulted")
            .parse()
            .expect("validated by clap");
        let seed = *sub.get_one::<u64>("seed").expect("defaulted");
        let outcomes = run_suites(level, Fault::None, seed);
        for o in &outcomes {
            let _ = writeln!(stdout, "{o}");
        }
        return if outcomes.iter().all(|o| o.passed()) {
            EXIT_OK
        } else {
            let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.name).collect();
            let _ = writeln!(stderr, "error: failed suites: {}", failed.join(", "));
            EXIT_RUNTIME
        };
    }
    let kind: ExperimentKind = name.parse().expect("subcommands mirror experiment kinds");
    let cfg = match config_from_matches(kind, sub) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", chain(&e));
            let _ = writeln!(stderr, "\nFor more information, try 'plmmse {name} --help'.");
            return EXIT_USAGE;
        }
    };
    match execute(&cfg) {
        Ok((out, written)) => {
            if written.is_empty() {
                let _ = write!(stdout, "{}", out.table.to_csv());
            } else {
                for p in written {
                    let _ = writeln!(stderr, "wrote {}", p.display());
                }
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", chain(&e));
            EXIT_RUNTIME
        }
    }
}

fn chain(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        let part = s.to_string();
        if !msg.contains(&part) {
            msg.push_str(": ");
            msg.push_str(&part);
        }
        src = s.source();
    }
    msg
}

pub fn main() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("plmmse").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn command_is_consistent() {
        command().debug_assert();
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&[]).0, EXIT_USAGE);
        assert_eq!(run(&["toy", "--bogus", "1"]).0, EXIT_USAGE);
        assert_eq!(run(&["toy", "--sigma-u2", "abc"]).0, EXIT_USAGE);
        assert_eq!(run(&["toy", "--store-runs"]).0, EXIT_USAGE);
        assert_eq!(run(&["deblur", "--wavelet", "db8"]).0, EXIT_USAGE);
        assert_eq!(run(&["toy", "--mc", "0"]).0, EXIT_USAGE);
    }

    #[test]
    fn runtime_error_exit_code() {
        let (code, _, err) = run(&["deblur", "--n", "64", "--levels", "3", "--mc", "1"]);
        assert_eq!(code, EXIT_RUNTIME, "{err}");
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn help_lists_units() {
        let (code, out, _) = run(&["sparse", "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("--snr-grid") && out.contains("dB"));
    }

    #[test]
    fn csv_to_stdout() {
        let (code, out, _) = run(&["toy", "--mc", "1000", "--alpha-grid", "0,1", "--seed", "5"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("# seed = 5"));
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }

    #[test]
    fn negative_grid_values_parse() {
        let (code, _, err) = run(&["sparse", "--m", "8", "--mc", "2", "--snr-grid", "-5:5:0"]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
}
