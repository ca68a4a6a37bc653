use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iga_contact::config::{execute, RunConfig};
use iga_contact::Error;

#[derive(Parser)]
#[command(name = "iga-contact", version, about = "Isogeometric Hertz contact benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write CSV (and optionally VTK) results.
    ///
    /// The config file holds `key = value` lines. Flags override the file.
    /// Defaults: degree 2, levels 3, r0 = 100 E, out `out`, all cores.
    Run {
        /// Configuration file.
        #[arg(long)]
        config: PathBuf,
        /// hertz2d_p003, hertz2d_p01, hertz3d_p5e-4 or hertz2d_large_uy04.
        #[arg(long)]
        scenario: Option<String>,
        /// Displacement degree (2 or 3); the multiplier degree is p - 2.
        #[arg(long)]
        p: Option<usize>,
        /// Number of reported refinement levels.
        #[arg(long)]
        levels: Option<usize>,
        /// Augmentation scale; the parameter is r0 / h.
        #[arg(long)]
        r0: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write a VTK snapshot of the finest level.
        #[arg(long)]
        vtk: bool,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, scenario, p, levels, r0, out, threads, vtk } = Cli::parse().command;
    let mut overrides: Vec<(&str, String)> = Vec::new();
    if let Some(s) = scenario {
        overrides.push(("scenario", s));
    }
    if let Some(p) = p {
        overrides.push(("degree", p.to_string()));
    }
    if let Some(l) = levels {
        overrides.push(("levels", l.to_string()));
    }
    if let Some(r) = r0 {
        overrides.push(("r0", r.to_string()));
    }
    if let Some(o) = out {
        overrides.push(("out", o.display().to_string()));
    }
    if let Some(t) = threads {
        overrides.push(("threads", t.to_string()));
    }
    if vtk {
        overrides.push(("vtk", "true".into()));
    }
    let cfg = match RunConfig::from_file(&config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match execute(&cfg) {
        Ok(res) => {
            let rates = res.table.rates();
            for (i, r) in res.table.rows.iter().enumerate() {
                println!("level {i}: h = {:.4}, H1 = {:.3e}, L2 = {:.3e}", r.h, r.h1_disp, r.l2_disp);
            }
            println!("rates: {rates:?}");
            println!("results in {}", cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let solver_failure = matches!(
                e,
                Error::NonConvergence { .. }
                    | Error::NonPhysicalState { .. }
                    | Error::SingularSystem { .. }
                    | Error::InaccurateSolve { .. }
            );
            ExitCode::from(if solver_failure { 2 } else { 1 })
        }
    }
}
