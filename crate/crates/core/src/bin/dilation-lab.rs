use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dilation_lab::families::{generate, Family, GenOptions};
use dilation_lab::instance::InstanceFile;
use dilation_lab::pipeline::{self, Command, Overrides, RunReport, EXIT_IO, EXIT_MISMATCH, EXIT_OK};
use dilation_lab::LatticePoint;

#[derive(Parser)]
#[command(name = "dilation-lab", version, about = "Regular isometric dilations of product-system representations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Instance JSON file.
    path: PathBuf,
    /// Box bound of the block space, e.g. 3,3.
    #[arg(long = "L", value_parser = parse_point)]
    l: Option<LatticePoint>,
    /// Kernel window bound, e.g. 3,3.
    #[arg(long = "M", value_parser = parse_point)]
    m: Option<LatticePoint>,
    #[arg(long)]
    guard: Option<usize>,
    /// Validation tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that the instance is a valid c.c. representation.
    Validate(RunArgs),
    /// Evaluate the doubly-commuting and Brehmer hypotheses.
    Check(RunArgs),
    /// Build and verify the minimal regular isometric dilation.
    Dilate(RunArgs),
    /// Print a generated instance.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// `h_dim` or `gen_dim,h_dim`.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
    },
    /// Rerun against a reference report.
    Verify {
        path: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn parse_point(s: &str) -> Result<LatticePoint, String> {
    LatticePoint::parse(s).map_err(|e| e.to_string())
}

fn read_instance(path: &Path) -> Result<InstanceFile, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    InstanceFile::from_json(&text).map_err(|e| e.to_string())
}

fn emit(report: &RunReport, out: Option<&Path>) -> Result<(), String> {
    let text = report.to_json();
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command, args: RunArgs) -> i32 {
    let file = match read_instance(&args.path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_IO;
        }
    };
    let overrides = Overrides {
        l: args.l,
        m: args.m,
        guard: args.guard,
        tol: args.tol,
        probes: None,
    };
    let (report, code) = pipeline::run(command, &file, &overrides);
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    if let Err(e) = emit(&report, args.out.as_deref()) {
        eprintln!("{e}");
        return EXIT_IO;
    }
    code
}

fn init_threads() {
    if let Some(n) = std::env::var("DILATION_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let code = match cli.command {
        Cmd::Validate(a) => run(Command::Validate, a),
        Cmd::Check(a) => run(Command::Check, a),
        Cmd::Dilate(a) => run(Command::Dilate, a),
        Cmd::Gen { family, seed, k, dims } => {
            let made = family
                .parse::<Family>()
                .and_then(|f| generate(f, seed, GenOptions { k, ..GenOptions::default() }.with_dims(&dims)?));
            match made {
                Ok(inst) => {
                    println!("{}", InstanceFile::from_instance(&inst).to_json_pretty());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_IO
                }
            }
        }
        Cmd::Verify { path, report } => {
            let file = match read_instance(&path) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_IO as u8);
                }
            };
            let reference = match fs::read_to_string(&report)
                .map_err(|e| format!("cannot read {}: {e}", report.display()))
                .and_then(|t| RunReport::from_json(&t).map_err(|e| e.to_string()))
            {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_IO as u8);
                }
            };
            let (_, cmp) = pipeline::verify(&file, &reference);
            for w in &cmp.warnings {
                eprintln!("warning: {w}");
            }
            for m in &cmp.mismatches {
                eprintln!("mismatch: {m}");
            }
            if cmp.matches() {
                EXIT_OK
            } else {
                EXIT_MISMATCH
            }
        }
    };
    ExitCode::from(code as u8)
}
