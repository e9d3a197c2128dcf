//! Command line front end: each subcommand resolves its settings from flags
//! merged over an optional key=value config file, runs one experiment, and
//! writes CSV artifacts plus a manifest into an output directory. The
//! manifest uses the same key=value format, so a finished run's manifest can
//! be fed back through --config to reproduce it.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 numerical divergence,
//! 3 a check requested with --assert failed.

mod runs;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use roughsplit::Error;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

/// Splitting schemes for equations driven by a clock and a rough path.
#[derive(Parser)]
#[command(name = "roughsplit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split solve of a two-field state preset with the smooth driver
    OdeSplit(RunArgs),
    /// Split solve of a state preset with a sampled stochastic driver
    RdeSplit(RunArgs),
    /// Split evolution of a grid preset over a stochastic driver
    RpdeSplit(RunArgs),
    /// Error ladder over period counts against an oracle or fine reference
    Converge(RunArgs),
    /// One rough transport sweep measured against its closed form
    TransportCheck(RunArgs),
}

/// One flag set shared by all subcommands; which entries are required,
/// defaulted or rejected is decided per command, so a config file written
/// for one command fails loudly when handed to another.
#[derive(Args, Default)]
struct RunArgs {
    /// Problem preset; each command lists its own in error messages
    #[arg(long)]
    preset: Option<String>,
    /// key=value file merged under the flags (explicit flags win)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, default runs/<command>_<preset>
    #[arg(long)]
    out: Option<PathBuf>,
    /// Alternation periods; a comma list like 4,8,16,32 for converge
    #[arg(long)]
    n: Option<String>,
    /// Seed for stochastic drivers
    #[arg(long)]
    seed: Option<u64>,
    /// Dyadic resolution level of stochastic drivers
    #[arg(long)]
    level: Option<u32>,
    /// Hurst index in (0, 1]: fractional driver instead of Brownian
    #[arg(long)]
    hurst: Option<f64>,
    /// Solver sub-steps per mesh cell, or refinement per transport sweep
    #[arg(long)]
    steps: Option<usize>,
    /// lie or strang
    #[arg(long)]
    scheme: Option<String>,
    /// clock-first or driver-first
    #[arg(long)]
    order: Option<String>,
    /// Fine-split reference periods for presets without a closed form
    #[arg(long)]
    n_ref: Option<usize>,
    /// Mesh resolution of the direct reference solve (nilpotent preset)
    #[arg(long)]
    ref_steps: Option<usize>,
    /// Replace the rough channel by zero; the split must then be exact
    #[arg(long)]
    zero_noise: bool,
    /// Write zeros in the seconds column for byte-stable reports
    #[arg(long)]
    no_timing: bool,
    /// Enforce the command's closed-form checks; failures exit 3
    #[arg(long = "assert")]
    assert_checks: bool,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub(crate) enum Failure {
    Validation(String),
    Numeric(String),
    Assertion(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Assertion(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numeric(m) | Failure::Assertion(m) => m,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Failure {
        Failure::Validation(msg.into())
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        match err {
            Error::Divergence { .. }
            | Error::ResolutionExceeded { .. }
            | Error::TwoRouteMismatch { .. }
            | Error::NonFinite { .. } => Failure::Numeric(err.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

/// Runs the tool on the given argument list and returns the exit code.
/// Split out from main so integration tests can drive it in-process.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match runs::dispatch(&cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    }
}

/// Settings resolution: a flag wins over a config entry, a config entry
/// over the default. Config keys are consumed as they are matched; whatever
/// remains must agree with the run's own manifest (that is what lets a
/// manifest act as a config file) or name a version, else it is unknown.
pub(crate) struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    pub(crate) fn load(path: Option<&PathBuf>) -> Result<Settings, Failure> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::invalid(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (k, v) in roughsplit::io::parse_key_values(&text)? {
                file.insert(k, v);
            }
        }
        Ok(Settings { file })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.file.remove(key)
    }

    /// Flag value if given, else the parsed config entry, else None.
    pub(crate) fn merge<V: Clone, E: std::fmt::Display>(
        &mut self,
        key: &str,
        flag: &Option<V>,
        parse: impl Fn(&str) -> Result<V, E>,
    ) -> Result<Option<V>, Failure> {
        let entry = self.take(key);
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        match entry {
            Some(raw) => parse(raw.trim())
                .map(Some)
                .map_err(|e| Failure::invalid(format!("config key '{key}': {e} (got '{raw}')"))),
            None => Ok(None),
        }
    }

    /// Flags without a value carry false when absent, so the config entry
    /// wins only when the flag was not given.
    pub(crate) fn merge_switch(&mut self, key: &str, flag: bool) -> Result<bool, Failure> {
        let entry = self.take(key);
        if flag {
            return Ok(true);
        }
        match entry.as_deref() {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(Failure::invalid(format!(
                "config key '{key}': expected true or false (got '{other}')"
            ))),
        }
    }

    /// Called after a run has assembled its manifest: every unconsumed
    /// config key must match the manifest verbatim, so stale or foreign
    /// config files are rejected instead of half-applied.
    pub(crate) fn finish(self, manifest: &[(&str, String)]) -> Result<(), Failure> {
        for (key, value) in self.file {
            if key == "lib_version" || key == "cli_version" {
                continue;
            }
            match manifest.iter().find(|(k, _)| *k == key) {
                Some((_, run_value)) if *run_value == value => {}
                Some((_, run_value)) => {
                    return Err(Failure::invalid(format!(
                        "config key '{key}' disagrees with this run: config says '{value}', the run produces '{run_value}'"
                    )));
                }
                None => {
                    return Err(Failure::invalid(format!(
                        "config key '{key}' is not used by this run"
                    )));
                }
            }
        }
        Ok(())
    }
}
