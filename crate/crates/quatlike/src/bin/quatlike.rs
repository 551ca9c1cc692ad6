use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use quatlike::catalog::{self, CatalogEntry};
use quatlike::liftjson;
use quatlike::report::{self, Header};
use quatlike::suite::{self, Config, Suite};
use quatlike::Error;

/// Exit codes.
mod code {
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const UNKNOWN_MANIFOLD: u8 = 3;
    pub const BAD_LIFTDATA: u8 = 4;
    pub const BAD_POINTS: u8 = 5;
    pub const BAD_ARGUMENT: u8 = 6;
    pub const IO: u8 = 7;
    pub const NUMERICAL: u8 = 8;
}

#[derive(Parser)]
#[command(name = "quatlike", version, about = "Verify conformal hypercomplex cones and their quaternionic quotients")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quaternion algebra, Nijenhuis tensors, ω^Op extraction
    VerifyStructure(Flags),
    /// Obata, Oproiu, Levi-Civita and ξ-transformations
    Connections(Flags),
    /// Curvature relations, splits and Einstein conditions
    Curvature(Flags),
    /// Lift LiftData to the cone
    Lift(Flags),
    /// Project the cone to LiftData
    Project(Flags),
    /// Lift/project round trips
    Roundtrip(Flags),
    /// Killing vectors, moment maps, symmetry lift and projection
    Symmetries(Flags),
    /// Every suite that applies to the manifold
    All(Flags),
    /// Print the catalog manifest
    Catalog {
        #[arg(long, default_value_t = 1)]
        nh: usize,
    },
}

#[derive(Args, Clone)]
struct Flags {
    /// Catalog entry
    #[arg(long, default_value = "flat-cone")]
    manifold: String,
    /// Quaternionic dimension of the small space
    #[arg(long, default_value_t = 1)]
    nh: usize,
    /// Quaternionic dimension of rigid-flat (overrides --nh)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 100, allow_negative_numbers = true)]
    points: i64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Jet order
    #[arg(long, default_value_t = 3)]
    order: u8,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// LiftData JSON file; replaces --manifold
    #[arg(long)]
    liftdata: Option<std::path::PathBuf>,
    /// Worker threads (0: one per core)
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownManifold(_) => code::UNKNOWN_MANIFOLD,
        Error::LiftData(_) => code::BAD_LIFTDATA,
        Error::Argument(_) | Error::OrderTooHigh(_) => code::BAD_ARGUMENT,
        Error::Io(_) => code::IO,
        _ => code::NUMERICAL,
    }
}

fn entry(f: &Flags) -> Result<CatalogEntry, Error> {
    if let Some(path) = &f.liftdata {
        let text = std::fs::read_to_string(path)?;
        return Ok(catalog::from_lift_data(liftjson::parse(&text)?));
    }
    let n = if f.manifold == "rigid-flat" { f.n.unwrap_or(f.nh) } else { f.nh };
    catalog::by_name(&f.manifold, n)
}

fn run(suite: Suite, f: &Flags) -> Result<bool, (u8, String)> {
    let err = |e: Error| (exit_code(&e), e.to_string());
    if f.points <= 0 {
        return Err((code::BAD_POINTS, format!("point count must be positive, got {}", f.points)));
    }
    if !(f.tol > 0.0) {
        return Err((code::BAD_ARGUMENT, format!("tolerance must be positive, got {}", f.tol)));
    }
    let e = entry(f).map_err(err)?;
    let cfg = Config { points: f.points as usize, seed: f.seed, tol: f.tol, order: f.order, parallel: f.parallel };
    let t0 = Instant::now();
    let tally = suite::run(suite, &e, &cfg).map_err(err)?;
    let h = Header {
        subcommand: suite.name().into(),
        manifold: e.name.clone(),
        params: e.params.clone(),
        seed: f.seed,
        tolerance: f.tol,
        points: cfg.points,
        order: cfg.order,
    };
    let text = report::to_string(&h, &tally);
    match &f.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| err(e.into()))?,
        None => print!("{text}"),
    }
    eprintln!("wall_time_ms: {}", t0.elapsed().as_millis());
    Ok(tally.pass())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { 0 });
        }
    };
    let (suite, flags) = match cli.cmd {
        Cmd::VerifyStructure(f) => (Suite::Structure, f),
        Cmd::Connections(f) => (Suite::Connections, f),
        Cmd::Curvature(f) => (Suite::Curvature, f),
        Cmd::Lift(f) => (Suite::Lift, f),
        Cmd::Project(f) => (Suite::Project, f),
        Cmd::Roundtrip(f) => (Suite::Roundtrip, f),
        Cmd::Symmetries(f) => (Suite::Symmetries, f),
        Cmd::All(f) => (Suite::All, f),
        Cmd::Catalog { nh } => {
            return match catalog::manifest(nh) {
                Ok(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("manifest serializes"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                }
            };
        }
    };
    match run(suite, &flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(code::CHECK_FAILED),
        Err((c, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(c)
        }
    }
}
