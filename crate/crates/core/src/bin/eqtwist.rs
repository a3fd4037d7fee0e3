use clap::{Parser, Subcommand, ValueEnum};
use eqtwist::run::{load, to_json, Cache, CacheMode, Command, Document};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "eqtwist",
    version,
    about = "Twisted equivariant cyclic homology on finite models"
)]
struct Cli {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Ignore the report cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Recompute and compare against cached reports.
    #[arg(long, global = true, conflicts_with = "no_cache")]
    verify_cache: bool,
    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the problem and every structural identity.
    Validate,
    /// Transgressed line families on fixed-point sectors.
    Transgress {
        #[arg(long, conflicts_with = "all")]
        element: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Localized twisted equivariant cohomology per sector.
    Cohomology {
        #[arg(long)]
        sector: Option<String>,
        #[arg(long)]
        truncation: Option<usize>,
    },
    /// Periodic cyclic homology of the twisted groupoid algebra.
    Cyclic {
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Equivariant periodic cyclic homology against the crossed product.
    CrossedProduct {
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Seeded check that tau is a chain map.
    VerifyHkr {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// EXPERIMENT: sector sums against periodic cyclic homology.
    Delocalize {
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Every command, rendered as one document.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match load(&cli.problem) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mode = if cli.no_cache {
        CacheMode::Off
    } else if cli.verify_cache {
        CacheMode::Verify
    } else {
        CacheMode::Use
    };
    let cache = Cache::from_env(mode);
    let (commands, format) = match cli.command {
        Cmd::Validate => (vec![Command::Validate], None),
        Cmd::Transgress { element, .. } => (vec![Command::Transgress { element }], None),
        Cmd::Cohomology { sector, truncation } => {
            (vec![Command::Cohomology { sector, truncation }], None)
        }
        Cmd::Cyclic { kmax } => (vec![Command::Cyclic { kmax }], None),
        Cmd::CrossedProduct { kmax } => (vec![Command::CrossedProduct { kmax }], None),
        Cmd::VerifyHkr { trials, seed } => (vec![Command::VerifyHkr { trials, seed }], None),
        Cmd::Delocalize { kmax } => (vec![Command::Delocalize { kmax }], None),
        Cmd::Report { format } => (Command::all(), Some(format)),
    };
    let mut reports = Vec::new();
    let mut diverged = false;
    for c in &commands {
        match cache.run(c, &spec) {
            Ok((r, div)) => {
                if let Some(d) = div {
                    eprintln!("cache divergence: {} ({})", d.key, d.path.display());
                    diverged = true;
                }
                reports.push(r);
            }
            Err(e) => {
                eprintln!("error in {}: {e}", c.name());
                return ExitCode::from(2);
            }
        }
    }
    let doc = Document::new(reports);
    let text = match format {
        Some(Format::Markdown) => doc.markdown(),
        Some(Format::Json) => to_json(&doc),
        None => to_json(&doc.reports[0]),
    };
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if doc.passed && !diverged {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
