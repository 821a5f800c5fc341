//! `soras` command line: single solves, table reproduction, operator
//! analysis and assumption checks.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use soras::analysis::check_assumptions;
use soras::decomposition::{Partitioner, PuRamp};
use soras::experiment::{reproduce_table, run_scenario, OutputFormat, Pipeline, RunConfig, TableOverrides};
use soras::preconditioner::PreconditionerKind;
use soras::problem::{Forcing, Scenario};
use soras::{Error, Result};

#[derive(Parser)]
#[command(name = "soras", version, about = "Overlapping Schwarz (SORAS/ORAS) experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and print the report as JSON.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Write the relative residual history as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Write the mesh as plain text.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
        /// Write the decomposition (dofs and partition of unity) as plain text.
        #[arg(long)]
        dump_decomposition: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce one of the iteration-count tables.
    Table {
        /// Table number, 1 to 5.
        id: u8,
        /// Comma-separated columns: overlap layers k (tables 1-3) or N (4-5).
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<usize>>,
        /// Comma-separated case indices 0-3.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Cells per 0.2 in each direction.
        #[arg(long)]
        resolution: Option<usize>,
        /// Partition-of-unity ramp: sharp or linear.
        #[arg(long)]
        pu_ramp: Option<PuRamp>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and attach the operator analysis (small problems).
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the algebraic identities of the decomposition.
    Check {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    overlap_layers: Option<usize>,
    #[arg(long)]
    prec: Option<PreconditionerKind>,
    #[arg(long)]
    partition: Option<Partitioner>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    supg_theta: Option<f64>,
    #[arg(long)]
    forcing: Option<Forcing>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Partition-of-unity ramp: sharp or linear.
    #[arg(long)]
    pu_ramp: Option<PuRamp>,
    /// Output format of the report (JSON only).
    #[arg(long, default_value = "json")]
    format: OutputFormat,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident => $t:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    cfg.$t = v;
                }
            )*};
        }
        set!(scenario => scenario, c0 => c0, nu => nu, n => n, overlap_layers => overlap_layers,
             prec => prec, partition => partition, seed => seed, tol => tol,
             supg_theta => supg_theta, forcing => forcing, resolution => resolution, pu_ramp => pu_ramp);
        cfg.validate()?;
        if self.format != OutputFormat::Json {
            return Err(Error::InvalidConfig("run reports are only available as json".into()));
        }
        Ok(cfg)
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { run, history, dump_mesh, dump_decomposition, out } => {
            let cfg = run.config()?;
            if dump_mesh.is_some() || dump_decomposition.is_some() {
                let pipe = Pipeline::build(&cfg, false)?;
                if let Some(p) = dump_mesh {
                    pipe.mesh.write_ascii(BufWriter::new(File::create(p)?))?;
                }
                if let Some(p) = dump_decomposition {
                    pipe.decomposition.write_ascii(BufWriter::new(File::create(p)?))?;
                }
            }
            let outcome = run_scenario(&cfg)?;
            if let Some(p) = history {
                outcome.solve.write_history_csv(BufWriter::new(File::create(p)?))?;
            }
            write_out(out.as_deref(), &(serde_json::to_string_pretty(&outcome)? + "\n"))?;
            Ok(outcome.solve.converged)
        }
        Command::Table { id, columns, cases, seed, tol, resolution, pu_ramp, format, out } => {
            let ov = TableOverrides { columns, cases, seed, tol, resolution, pu_ramp };
            let report = reproduce_table(id, &ov)?;
            eprint!("{}", report.to_text());
            match out {
                Some(p) => report.emit(&p, format)?,
                None => write_out(None, &report.render(format)?)?,
            }
            Ok(true)
        }
        Command::Analyze { run, out } => {
            let mut cfg = run.config()?;
            cfg.analysis = true;
            let outcome = run_scenario(&cfg)?;
            write_out(out.as_deref(), &(serde_json::to_string_pretty(&outcome)? + "\n"))?;
            Ok(true)
        }
        Command::Check { run } => {
            let cfg = run.config()?;
            let pipe = Pipeline::build(&cfg, false)?;
            let rep = check_assumptions(&pipe.system, &pipe.decomposition, &pipe.locals, cfg.dense_cap)?;
            let line = |name: &str, ok: bool, value: f64| {
                println!("{:<4} {name:<32} {value:.3e}", if ok { "ok" } else { "FAIL" });
            };
            line("partition of unity", rep.pu_ok, rep.pu_error);
            line("row identity A / B_j", rep.row_identity_a_ok, rep.row_identity_a);
            line("row identity F / F_j", rep.row_identity_f_ok, rep.row_identity_f);
            match (rep.local_coercivity_ok, rep.local_coercivity_min_eig) {
                (Some(ok), Some(m)) => line("local coercivity (min eig)", ok, m),
                _ => println!("skip local coercivity (support above dense cap)"),
            }
            Ok(rep.all_ok())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
