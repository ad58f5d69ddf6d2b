//! Command-line front end: `nholo <command> <scene>`.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! numerical error is recorded, 2 on scene, flag or I/O errors.

mod commands;
mod report;
mod scene;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::{parse_scene, run_scene, Command, Overrides, RunOptions};
pub use report::{Check, FieldDump, Report, Row, Table};
pub use scene::{Driver, RawScene, Scene, SceneError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "nholo",
    version,
    about = "Geometry checks for N-connection scenes"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    pub scene: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Pass threshold for every residual row.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Simpson panels for integral nodes.
    #[arg(long)]
    pub panels: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1 skips the curvature checks.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub jet_order: Option<u8>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; reports do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Args {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            tol: self.tol,
            panels: self.panels,
            seed: self.seed,
            jet_order: self.jet_order,
        }
    }
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    }
}

fn execute(args: &Args) -> Result<Report, String> {
    let text = std::fs::read_to_string(&args.scene)
        .map_err(|e| format!("{}: {e}", args.scene.display()))?;
    let run = || run_scene(args.command, &text, &args.overrides()).map_err(|e| e.to_string());
    match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| e.to_string())?
            .install(run),
        None => run(),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let report = match execute(&args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("nholo: {e}");
            return 2;
        }
    };
    let out = render(&report, args.format);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, out) {
                eprintln!("nholo: {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{out}"),
    }
    if report.pass {
        0
    } else {
        1
    }
}
