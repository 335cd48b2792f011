//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 invalid config, 2 runtime error, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::output::{write_manifest, write_timeseries_csv, SnapshotWriter, MANIFEST_FILE, TIMESERIES_FILE};
use crate::scenario::{parse_config, validate, Scenario, TWO_SOURCES_TOML};
use crate::stepper::{run, Observer, Termination};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "antforage", version, about = "Ant foraging with pheromone trails on a square grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write time series, snapshots and a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `run.out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `run.steps`.
        #[arg(long)]
        steps: Option<u64>,
        /// Overrides `run.dt`.
        #[arg(long)]
        dt: Option<f64>,
        /// Allow writing into a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Check a scenario and list every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the commented reference config.
    PrintDefaults,
}

/// Runs the CLI with the given arguments (program name first) and returns
/// the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            steps,
            dt,
            force,
        } => cmd_run(&config, out, steps, dt, force),
        Command::Validate { config } => cmd_validate(&config),
        Command::PrintDefaults => {
            print!("{TWO_SOURCES_TOML}");
            EXIT_OK
        }
    }
}

fn load(path: &Path) -> Result<Scenario, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INVALID
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INVALID
    })
}

fn cmd_validate(path: &Path) -> i32 {
    let scenario = match load(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let violations = validate(&scenario);
    if violations.is_empty() {
        println!("{}: ok", path.display());
        EXIT_OK
    } else {
        for v in &violations {
            println!("{v}");
        }
        EXIT_INVALID
    }
}

fn dir_is_nonempty(dir: &Path) -> bool {
    fs::read_dir(dir).map(|mut it| it.next().is_some()).unwrap_or(false)
}

fn cmd_run(path: &Path, out: Option<PathBuf>, steps: Option<u64>, dt: Option<f64>, force: bool) -> i32 {
    let mut scenario = match load(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(n) = steps {
        scenario.run.steps = n;
    }
    if let Some(dt) = dt {
        scenario.run.dt = dt;
    }
    let out_dir = out.unwrap_or_else(|| PathBuf::from(&scenario.run.out_dir));
    scenario.run.out_dir = out_dir.display().to_string();

    // an unstable dt is reported but not fatal here: the run itself will
    // stop with a positivity error if it actually misbehaves
    let mut fatal = false;
    for v in validate(&scenario) {
        if v.code == "run.dt_unstable" {
            eprintln!("warning: {v}");
        } else {
            eprintln!("error: {v}");
            fatal = true;
        }
    }
    if fatal {
        return EXIT_INVALID;
    }

    if dir_is_nonempty(&out_dir) && !force {
        eprintln!(
            "error: output directory {} is not empty (use --force to write into it)",
            out_dir.display()
        );
        return EXIT_RUNTIME;
    }
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_RUNTIME;
    }

    let mut writer = match SnapshotWriter::new(&out_dir, scenario.run.snapshot_every, scenario.render) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let report = {
        let mut observers: [&mut dyn Observer; 1] = [&mut writer];
        match run(&scenario, &mut observers) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_RUNTIME;
            }
        }
    };

    let ts_path = out_dir.join(TIMESERIES_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let written = write_timeseries_csv(&report.series, scenario.food.len(), &ts_path)
        .and_then(|_| write_manifest(&report, &scenario, &writer.entries, &manifest_path));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }

    let stdout = std::io::stdout();
    let mut so = stdout.lock();
    let r = &report.final_row;
    let _ = writeln!(
        so,
        "steps {} t {} mass_u {} mass_w {} mass_v {} mass_c {} ({:.2}s)",
        report.steps_taken,
        r.t,
        r.mass_u,
        r.mass_w,
        r.mass_v,
        r.mass_c,
        report.wall_time.as_secs_f64()
    );
    for (k, ev) in report.events.sources.iter().enumerate() {
        let _ = writeln!(
            so,
            "food[{k}]: formation {} depletion {} fade {}",
            ev.formation_time, ev.depletion_time, ev.fade_time
        );
    }
    match &report.termination {
        Termination::Error { step, error } => {
            eprintln!("error: step {step}: {error}");
            EXIT_RUNTIME
        }
        Termination::EarlyStop { step } => {
            let _ = writeln!(so, "stopped early at step {step}: all food gone, all trails faded");
            EXIT_OK
        }
        Termination::Completed => EXIT_OK,
    }
}
