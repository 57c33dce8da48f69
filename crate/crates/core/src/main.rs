use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use fqdist::cli::{
    run, write_atomic, Command, DistanceSpec, ExperimentConfig, Geometry, OutputFormat, PathColors, RandomPair,
    SetSource, TreeHost,
};
use fqdist::constructions::ConstructionKind;
use fqdist::haxell::Strategy;

/// Distance graphs over finite fields: spectra, peeling, path and tree
/// embeddings, constructions and incidence bounds.
#[derive(Parser)]
#[command(name = "fqdist", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, default_value = "json", value_parser = serde_value::<OutputFormat>)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Args)]
struct GeometryArgs {
    /// Field order, an odd prime power.
    #[arg(long)]
    q: u64,
    /// Dimension.
    #[arg(long)]
    d: usize,
}

impl From<GeometryArgs> for Geometry {
    fn from(g: GeometryArgs) -> Self {
        Geometry { q: g.q, d: g.d }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral certificate of each distance graph.
    Spectrum {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// `all` or comma-separated radius indices.
        #[arg(long, visible_alias = "r", default_value = "all")]
        distances: DistanceSpec,
        /// Emit every eigenvalue.
        #[arg(long)]
        eigenvalues: bool,
    },
    /// Random trials of the expander mixing bound.
    Mixing {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, visible_alias = "r", default_value = "all")]
        distances: DistanceSpec,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Minimum-degree peeling of a vertex set.
    Peel {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, visible_alias = "r", default_value = "all")]
        distances: DistanceSpec,
        /// `full`, `random:SIZE:SEED` or `file:PATH`.
        #[arg(long, default_value = "full")]
        set: SetSource,
        /// Density constant; 4 when omitted.
        #[arg(long)]
        c: Option<f64>,
        /// Also peel at the star threshold |S|/(6q).
        #[arg(long)]
        star: bool,
    },
    /// Depth-first embedding of a colored path.
    EmbedPath {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, visible_alias = "r", default_value = "all")]
        distances: DistanceSpec,
        #[arg(long, default_value = "full")]
        set: SetSource,
        /// Number of path vertices; the guaranteed length when omitted.
        #[arg(long)]
        len: Option<usize>,
        /// `cyclic`, `random:SEED` or comma-separated colors.
        #[arg(long, default_value = "cyclic")]
        colors: PathColors,
    },
    /// Embedding of a colored tree into a distance graph or a graph file.
    EmbedTree {
        /// Tree file `{"vertices": n, "edges": [[u, v, color], ...]}`.
        #[arg(long)]
        tree: PathBuf,
        /// Host graph file in the same format; a distance graph otherwise.
        #[arg(long, conflicts_with_all = ["q", "d"])]
        host: Option<PathBuf>,
        #[arg(long, requires = "d")]
        q: Option<u64>,
        #[arg(long, requires = "q")]
        d: Option<usize>,
        #[arg(long, visible_alias = "r", default_value = "all")]
        distances: DistanceSpec,
        #[arg(long, default_value = "full")]
        set: SetSource,
        #[arg(long, default_value = "exact-good", value_parser = serde_value::<Strategy>)]
        strategy: Strategy,
        /// Maximum color degree.
        #[arg(long, default_value_t = 2)]
        delta: u32,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Tree size bound; the tree size when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Largest set size checked for goodness.
        #[arg(long)]
        s_cap: Option<usize>,
    },
    /// Extremal point-set constructions.
    Construct {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, value_parser = serde_value::<ConstructionKind>)]
        kind: ConstructionKind,
        /// Slab parameter.
        #[arg(long)]
        k: Option<usize>,
        /// Radius index.
        #[arg(long)]
        r: Option<u64>,
    },
    /// Point-sphere incidence count against its bound.
    Incidence {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, requires = "spheres")]
        points: Option<PathBuf>,
        #[arg(long, requires = "points")]
        spheres: Option<PathBuf>,
        /// `X_SIZE:Y_SIZE:SEED`.
        #[arg(long, conflicts_with_all = ["points", "spheres"])]
        random: Option<RandomPair>,
        /// Replace the exponent of the bound.
        #[arg(long)]
        exponent: Option<f64>,
    },
    /// Observational probe of the minimum-degree conjecture.
    ProbeConjecture {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value = "full")]
        set: SetSource,
    },
    /// Per-claim tally over saved JSON reports.
    Audit {
        reports: Vec<PathBuf>,
    },
}

fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn command(cmd: Cmd) -> anyhow::Result<Command> {
    Ok(match cmd {
        Cmd::Spectrum { geometry, distances, eigenvalues } => {
            Command::Spectrum { geometry: geometry.into(), distances, eigenvalues }
        }
        Cmd::Mixing { geometry, distances, trials, seed } => {
            Command::Mixing { geometry: geometry.into(), distances, trials, seed }
        }
        Cmd::Peel { geometry, distances, set, c, star } => Command::Peel { geometry: geometry.into(), distances, set, c, star },
        Cmd::EmbedPath { geometry, distances, set, len, colors } => {
            Command::EmbedPath { geometry: geometry.into(), distances, set, len, colors }
        }
        Cmd::EmbedTree { tree, host, q, d, distances, set, strategy, delta, m, k, s_cap } => {
            let host = match (host, q, d) {
                (Some(path), _, _) => TreeHost::File { path },
                (None, Some(q), Some(d)) => TreeHost::Distance { geometry: Geometry { q, d }, distances, set },
                _ => anyhow::bail!("embed-tree needs --host or both --q and --d"),
            };
            Command::EmbedTree { tree, host, strategy, delta, m, k, s_cap }
        }
        Cmd::Construct { geometry, kind, k, r } => Command::Construct { geometry: geometry.into(), kind, slab_k: k, r },
        Cmd::Incidence { geometry, points, spheres, random, exponent } => {
            Command::Incidence { geometry: geometry.into(), points, spheres, random, exponent }
        }
        Cmd::ProbeConjecture { geometry, set } => Command::ProbeConjecture { geometry: geometry.into(), set },
        Cmd::Audit { reports } => Command::Audit { reports },
    })
}

fn main() -> ExitCode {
    match try_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let config = ExperimentConfig { command: command(cli.command)?, format: cli.output.format };
    let start = Instant::now();
    let mut report = run(&config)?;
    if cli.output.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    let text = report.render()?;
    match &cli.output.out {
        Some(path) => write_atomic(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(report.passed())
}
