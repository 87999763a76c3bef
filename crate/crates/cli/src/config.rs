//! Flag parsing and config-file merging. The config file is flat
//! `key = value` text; explicit flags win over file values, file values win
//! over defaults.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blowup_core::IntegratorControls;

#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Self-similar blow-up profiles of a degenerate chemotaxis model", max_term_width = 100)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Space dimension (>= 3)
    #[arg(short, long, global = true)]
    pub dimension: Option<u32>,

    /// Relative integration tolerance
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,

    /// Absolute integration tolerance
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,

    /// Event location tolerance
    #[arg(long, global = true)]
    pub event_tol: Option<f64>,

    /// Bisection tolerance for the critical height
    #[arg(long, global = true)]
    pub bisect_tol: Option<f64>,

    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Output path (stdout if omitted); written atomically
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Flat key=value config file; flags override file values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for scans (default: rayon's choice)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the critical shooting height a_c by bisection
    Critical {
        /// Lower bracket endpoint (default: derived from the dimension)
        #[arg(long)]
        bracket_lo: Option<f64>,
        /// Upper bracket endpoint
        #[arg(long)]
        bracket_hi: Option<f64>,
    },
    /// Integrate one shot and dump the trajectory
    Shoot {
        /// Shooting height u(0) = a
        #[arg(short, long)]
        a: f64,
        /// Integrate up to this radius
        #[arg(long)]
        r_limit: Option<f64>,
        /// Print positivity components instead of the trajectory
        #[arg(long)]
        components: bool,
    },
    /// Scan the mass curve over a grid of heights
    Scan {
        /// Number of grid points
        #[arg(long)]
        points: Option<usize>,
    },
    /// First zero and mass limit of the unforced comparison equation
    LaneEmden,
    /// Build the physical profile table for one height
    Profile {
        /// Shooting height u(0) = a
        #[arg(short, long)]
        a: f64,
        /// Blow-up time for solution samples
        #[arg(short = 'T', long, default_value_t = 1.0)]
        t_blowup: f64,
        /// Sample the space-time solution at "t,radius" (repeatable)
        #[arg(long, value_parser = parse_at)]
        at: Vec<(f64, f64)>,
        /// Grid panels across the support
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the invariant verification suite
    Verify,
}

fn parse_at(s: &str) -> Result<(f64, f64), String> {
    let (t, r) = s
        .split_once(',')
        .ok_or_else(|| format!("expected t,radius, got {s:?}"))?;
    let t: f64 = t.trim().parse().map_err(|e| format!("bad t: {e}"))?;
    let r: f64 = r.trim().parse().map_err(|e| format!("bad radius: {e}"))?;
    Ok((t, r))
}

/// Fully resolved run configuration, echoed into JSON output.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunConfig {
    pub dimension: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
    pub bisect_tol: f64,
    pub format: &'static str,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn controls(&self) -> IntegratorControls {
        IntegratorControls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            event_tol: self.event_tol,
            ..IntegratorControls::default()
        }
    }

    pub fn is_json(&self) -> bool {
        self.format == "json"
    }
}

fn parse_file(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, String> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s
            .parse()
            .map_err(|_| format!("config key {key}: cannot parse {s:?}")),
        None => Ok(default),
    }
}

pub fn resolve(global: &mut GlobalArgs) -> Result<RunConfig, String> {
    let file = match &global.config {
        Some(p) => parse_file(p)?,
        None => HashMap::new(),
    };
    let defaults = IntegratorControls::default();
    let format = match global.format {
        Some(Format::Json) => "json",
        Some(Format::Csv) => "csv",
        None => match file.get("format").map(String::as_str) {
            Some("json") => "json",
            Some("csv") | None => "csv",
            Some(other) => return Err(format!("config key format: expected csv|json, got {other:?}")),
        },
    };
    if global.out.is_none() {
        global.out = file.get("out").map(PathBuf::from);
    }
    Ok(RunConfig {
        dimension: pick(global.dimension, &file, "dimension", 3)?,
        rel_tol: pick(global.rel_tol, &file, "rel_tol", defaults.rel_tol)?,
        abs_tol: pick(global.abs_tol, &file, "abs_tol", defaults.abs_tol)?,
        event_tol: pick(global.event_tol, &file, "event_tol", defaults.event_tol)?,
        bisect_tol: pick(global.bisect_tol, &file, "bisect_tol", 1e-8)?,
        format,
        threads: match global.threads {
            Some(n) => Some(n),
            None => match file.get("threads") {
                Some(s) => Some(
                    s.parse()
                        .map_err(|_| format!("config key threads: cannot parse {s:?}"))?,
                ),
                None => None,
            },
        },
    })
}
