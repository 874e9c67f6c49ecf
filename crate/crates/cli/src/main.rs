use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use vibelab_core::campaign::run_once;
use vibelab_core::output;
use vibelab_core::plant::oracle::{amplitude_grid, calibrate_backbone};
use vibelab_core::protocols::ProtocolKind;
use vibelab_core::report::{compare, comparison_markdown};
use vibelab_core::scenario::Scenario;

mod selftest;

#[derive(Parser)]
#[command(name = "vibelab", version, about = "Virtual nonlinear vibration test rig")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Prt,
    Rct,
    Ect,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's protocols and write records, backbones, FRCs and reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's run count.
        #[arg(long)]
        repeat: Option<u32>,
        /// Override the base seed; run i uses seed + i - 1.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
    },
    /// Harmonic-balance backbone of the scenario's plant.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Modal amplitude range (m) and number of grid points.
        #[arg(long, default_value_t = 0.05e-3)]
        amp_min: f64,
        #[arg(long, default_value_t = 3.0e-3)]
        amp_max: f64,
        #[arg(long, default_value_t = 40)]
        points: usize,
    },
    /// Cross-run comparison from previously written run reports.
    Report {
        /// One or more scenario files whose outputs live in --out.
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Quick end-to-end checks on the linear plant.
    Selftest,
    /// Full acceptance suite, one PASS/FAIL line per criterion (takes minutes).
    Acceptance {
        /// Directory with the bundled scenario files.
        #[arg(long, default_value = "scenarios")]
        scenarios: PathBuf,
    },
}

fn load(config: &Path) -> Result<Scenario> {
    Scenario::load(config).with_context(|| format!("loading scenario {}", config.display()))
}

fn cmd_run(
    config: &Path,
    out: &Path,
    repeat: Option<u32>,
    seed: Option<u64>,
    protocol: Option<ProtocolArg>,
) -> Result<()> {
    let mut s = load(config)?;
    if let Some(n) = repeat {
        s.repeat = n;
    }
    if let Some(v) = seed {
        s.seed = v;
    }
    if let Some(p) = protocol {
        s.protocols = match p {
            ProtocolArg::Prt => vec![ProtocolKind::Prt],
            ProtocolArg::Rct => vec![ProtocolKind::Rct],
            ProtocolArg::Ect => vec![ProtocolKind::Ect],
            ProtocolArg::All => vec![ProtocolKind::Prt, ProtocolKind::Rct, ProtocolKind::Ect],
        };
    }
    s.validate()?;
    for i in 1..=s.repeat {
        let run = run_once(&s, i).with_context(|| format!("{} run {i}", s.name))?;
        let files = output::write_run(out, &s, &run)?;
        println!("{}", run.report.markdown());
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn cmd_calibrate(config: &Path, out: &Path, lo: f64, hi: f64, n: usize) -> Result<()> {
    let s = load(config)?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        bail!("amplitude grid needs 0 < amp-min < amp-max and at least 2 points");
    }
    let plant = s.plant.build()?;
    let oracle = calibrate_backbone(&plant, &amplitude_grid(lo, hi, n))?;
    for (a, e) in &oracle.failures {
        eprintln!("no convergence at {a:e} m: {e}");
    }
    std::fs::create_dir_all(out)?;
    let path = out.join(format!("{}_oracle.csv", s.name));
    std::fs::write(&path, output::oracle_csv(&s.config_hash(), &plant, &oracle)?)?;
    println!("{:>12} {:>10} {:>9} {:>9}", "a (m)", "f (Hz)", "D", "E22/E11");
    for sol in &oracle.solutions {
        let e22 = vibelab_core::ident::energy_decomposition(&sol.modal_spectra(), sol.omega, plant.omegas())
            .map(|t| t.fraction(2, 2))
            .unwrap_or(0.0);
        println!(
            "{:>12.4e} {:>10.4} {:>9.5} {:>9.4}",
            sol.modal_amplitude,
            sol.omega / (2.0 * std::f64::consts::PI),
            sol.damping,
            e22
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_report(configs: &[PathBuf], out: &Path) -> Result<()> {
    let mut reports = Vec::new();
    let mut missing = Vec::new();
    for c in configs {
        let s = load(c)?;
        match output::read_reports(out, &s) {
            Ok(r) => reports.extend(r),
            Err(vibelab_core::Error::Missing(m)) => missing.push(m),
            Err(e) => return Err(e.into()),
        }
    }
    if !missing.is_empty() {
        bail!("{}", missing.join("\n"));
    }
    let rows = compare(&reports)?;
    let md = comparison_markdown(&rows);
    output::write_comparison(out, &rows)?;
    print!("{md}");
    Ok(())
}

fn cmd_acceptance(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        bail!("scenario directory {} not found", dir.display());
    }
    let verdicts = vibelab_core::acceptance::run_all(dir);
    for v in &verdicts {
        println!("{v}");
    }
    let failed: Vec<String> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id.to_string()).collect();
    if !failed.is_empty() {
        bail!("criteria failed: {}", failed.join(", "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run {
            config,
            out,
            repeat,
            seed,
            protocol,
        } => cmd_run(config, out, *repeat, *seed, *protocol),
        Command::Calibrate {
            config,
            out,
            amp_min,
            amp_max,
            points,
        } => cmd_calibrate(config, out, *amp_min, *amp_max, *points),
        Command::Report { config, out } => cmd_report(config, out),
        Command::Selftest => selftest::run(),
        Command::Acceptance { scenarios } => cmd_acceptance(scenarios),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
