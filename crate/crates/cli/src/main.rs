use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use tmpkit_core::analyze::{analyze, RootBranch, SolveOptions};
use tmpkit_core::arith::parse_rational;
use tmpkit_core::generate::generate;
use tmpkit_core::io::{parse_moment_json, write_moment_json, SupportJson, UnivariateJson};
use tmpkit_core::numeric::{parse_real, Real};
use tmpkit_core::symmetric::{solve_symmetric, Mode, SymmetricOptions};
use tmpkit_core::univariate::{solve_halfline, solve_union, Status, UnivariateOptions};
use tmpkit_core::CurveParams;

/// Exit code for input that cannot be parsed or is rejected before solving.
const EXIT_INVALID: i32 = 3;
/// Exit code for a failure inside the solver (e.g. numeric extraction).
const EXIT_INTERNAL: i32 = 1;

#[derive(Parser)]
#[command(name = "tmpkit", version, about = "Truncated moment problems on cubic curves y^2 = x^3 + ax + b")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Purity, R(theta), flat extension and measure extraction.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Reduction of symmetric data to a one-variable problem.
    Symmetric {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Solve a one-variable problem on [0, inf) or [0, c] u [d, inf).
    Univariate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Emit moment data of a seeded random measure.
    Generate {
        /// Curve coefficients `a,b`, each an integer or `p/q`.
        #[arg(long, value_parser = parse_curve, allow_hyphen_values = true)]
        curve: CurveParams,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        atoms: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Moments are emitted up to degree 2n.
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

#[derive(Args, Clone)]
struct Flags {
    #[arg(long, default_value_t = 128)]
    precision_bits: usize,
    #[arg(long, value_enum, default_value_t = BranchArg::Preferred)]
    root_branch: BranchArg,
    #[arg(long, default_value = "1e-20")]
    tolerance: String,
    /// Only the symmetric and univariate solvers distinguish modes.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    /// Add wall-clock timings to the report (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Preferred,
    Minus,
    Plus,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Numeric,
    Auto,
}

fn parse_curve(s: &str) -> Result<CurveParams, String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a = parse_rational(a.trim()).map_err(|e| e.to_string())?;
    let b = parse_rational(b.trim()).map_err(|e| e.to_string())?;
    Ok(CurveParams::new(a, b))
}

struct Settings {
    flags: Flags,
    tolerance: Real,
}

impl Settings {
    fn new(flags: Flags) -> anyhow::Result<Self> {
        if flags.precision_bits < 64 {
            bail!("--precision-bits must be at least 64");
        }
        let tolerance = parse_real(&flags.tolerance, flags.precision_bits + 32)
            .ok_or_else(|| anyhow!("--tolerance: cannot parse {:?}", flags.tolerance))?;
        Ok(Settings { flags, tolerance })
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            precision_bits: self.flags.precision_bits,
            tolerance: self.tolerance.clone(),
            root_branch: match self.flags.root_branch {
                BranchArg::Preferred => RootBranch::Preferred,
                BranchArg::Minus => RootBranch::Minus,
                BranchArg::Plus => RootBranch::Plus,
                BranchArg::Both => RootBranch::Both,
            },
            ..SolveOptions::default()
        }
    }

    fn mode(&self) -> Mode {
        match self.flags.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Numeric => Mode::Numeric,
            ModeArg::Auto => Mode::Auto,
        }
    }

    fn to_json(&self) -> Value {
        let branch = match self.flags.root_branch {
            BranchArg::Preferred => "preferred",
            BranchArg::Minus => "minus",
            BranchArg::Plus => "plus",
            BranchArg::Both => "both",
        };
        json!({
            "precision_bits": self.flags.precision_bits,
            "tolerance": self.flags.tolerance,
            "root_branch": branch,
            "mode": self.mode(),
        })
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Analyze,
    Symmetric,
    Univariate,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Analyze => "analyze",
            Kind::Symmetric => "symmetric",
            Kind::Univariate => "univariate",
        }
    }
}

/// Solves one file and returns `(exit code, report)`. Every outcome,
/// including a rejected input, produces a report.
fn run_file(kind: Kind, path: &Path, settings: &Settings) -> (i32, Value) {
    let start = Instant::now();
    let mut out = Map::new();
    out.insert("command".into(), json!(kind.name()));
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            out.insert("error".into(), json!(format!("cannot read {}: {e}", path.display())));
            return (EXIT_INVALID, Value::Object(out));
        }
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    out.insert(
        "input".into(),
        json!({"file": name, "sha256": format!("{:x}", Sha256::digest(text.as_bytes()))}),
    );
    out.insert("options".into(), settings.to_json());
    let (code, result) = match solve(kind, &text, settings) {
        Ok(r) => r,
        Err((code, e)) => {
            log::error!("{}: {e:#}", path.display());
            out.insert("error".into(), json!(format!("{e:#}")));
            return (code, Value::Object(out));
        }
    };
    out.insert("report".into(), result);
    if settings.flags.timing {
        out.insert("timing".into(), json!({"seconds": start.elapsed().as_secs_f64()}));
    }
    log::info!("{}: exit {code} in {:.3}s", path.display(), start.elapsed().as_secs_f64());
    (code, Value::Object(out))
}

fn invalid(e: impl Into<anyhow::Error>) -> (i32, anyhow::Error) {
    (EXIT_INVALID, e.into())
}

fn solve(kind: Kind, text: &str, settings: &Settings) -> Result<(i32, Value), (i32, anyhow::Error)> {
    let internal = |e: tmpkit_core::Error| (EXIT_INTERNAL, anyhow::Error::from(e));
    match kind {
        Kind::Analyze => {
            let file = parse_moment_json(text).map_err(invalid)?;
            let report = analyze(&file.beta, &file.curve, &settings.solve_options()).map_err(internal)?;
            log::info!("conclusion: {}", report.reason);
            Ok((report.exit_code(), report.to_json()))
        }
        Kind::Symmetric => {
            let file = parse_moment_json(text).map_err(invalid)?;
            if !file.beta.is_symmetric() {
                return Err(invalid(anyhow!("data are not symmetric: an odd-in-y moment is nonzero")));
            }
            let opts = SymmetricOptions {
                mode: settings.mode(),
                precision_bits: settings.flags.precision_bits,
                tolerance: settings.tolerance.clone(),
            };
            let report = solve_symmetric(&file.beta, &file.curve, &opts).map_err(|e| match e {
                tmpkit_core::Error::Invalid(_) | tmpkit_core::Error::NotOnCurve(_) => invalid(e),
                e => internal(e),
            })?;
            Ok((report.exit_code(), report.to_json()))
        }
        Kind::Univariate => {
            let u: UnivariateJson = serde_json::from_str(text).map_err(invalid)?;
            let gamma = u.gamma_rational().map_err(invalid)?;
            let opts = UnivariateOptions {
                precision_bits: settings.flags.precision_bits,
                tolerance: settings.tolerance.clone(),
                hints: vec![],
            };
            let sol = match &u.support {
                SupportJson::Halfline => solve_halfline(&gamma, &opts),
                SupportJson::Union { c, d } => {
                    let c = parse_rational(c).map_err(invalid)?;
                    let d = parse_rational(d).map_err(invalid)?;
                    solve_union(&gamma, &c, &d, &opts)
                }
            }
            .map_err(|e| match e {
                tmpkit_core::Error::Invalid(_) => invalid(e),
                e => internal(e),
            })?;
            let digits = (settings.flags.precision_bits as f64 * std::f64::consts::LOG10_2) as usize;
            let code = match sol.status {
                Status::MeasureExists => 0,
                Status::NoMeasure => 2,
            };
            Ok((code, sol.to_json(digits)))
        }
    }
}

/// Runs every file on its own thread; a single file prints one report, several
/// print an array in argument order. The exit code is the largest one seen.
fn run_batch(kind: Kind, files: &[PathBuf], flags: Flags) -> anyhow::Result<i32> {
    let settings = Settings::new(flags)?;
    let results: Vec<(i32, Value)> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|f| {
                let settings = &settings;
                s.spawn(move || run_file(kind, f, settings))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let code = results.iter().map(|(c, _)| *c).max().unwrap_or(0);
    let value = if results.len() == 1 {
        results.into_iter().next().unwrap().1
    } else {
        Value::Array(results.into_iter().map(|(_, v)| v).collect())
    };
    println!("{}", serde_json::to_string_pretty(&value).context("serializing report")?);
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { files, flags } => run_batch(Kind::Analyze, &files, flags),
        Command::Symmetric { files, flags } => run_batch(Kind::Symmetric, &files, flags),
        Command::Univariate { files, flags } => run_batch(Kind::Univariate, &files, flags),
        Command::Generate { curve, atoms, seed, n } => {
            let inst = generate(&curve, atoms as usize, n, seed);
            print!("{}", write_moment_json(&inst.curve, &inst.beta));
            log::info!("generated {atoms} atoms, seed {seed}, degree {}", 2 * n);
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(EXIT_INVALID as u8)
        }
    }
}
