//! Command-line driver: configuration, subcommands and artifact writers.

pub mod commands;
pub mod config;
pub mod svg;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] peano_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<peano_core::smoothfn::SmoothError> for CliError {
    fn from(e: peano_core::smoothfn::SmoothError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for configuration errors, 3 for failed checks, 4 for an exceeded
    /// node or stack budget, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Core(peano_core::Error::Budget { .. }) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RenderTarget {
    Subdivide,
    Cantor,
    Curve,
    Footprint,
    Field,
    Cylinder,
    Theorem,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the lune family: tree JSON, norm table and a picture of the slices.
    Subdivide,
    /// Interval tree of the parameter Cantor set.
    Cantor,
    /// Ceiling functions at the configured parameters.
    Ceiling,
    /// Samples of the depth-N curve.
    Curve,
    /// Footprint regions at the configured parameters.
    Footprint,
    /// The slope field inside the root lune.
    Field,
    /// The cylinder curve and its boundary, seam and stacking checks.
    Cylinder,
    /// The planar curve over a band schedule.
    Theorem,
    /// Run the configured checks and write a pass/fail report.
    Verify,
    /// Write only the SVG of one of the other subcommands.
    Render {
        #[arg(value_enum)]
        what: RenderTarget,
    },
}

#[derive(Debug, Parser)]
#[command(name = "peano", version, about = "Peano curves with smooth footprints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Depth of the construction used by the subcommand.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of samples per sweep.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Write only artifacts of this format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

/// Where artifacts go and which formats are wanted.
pub struct Output {
    pub dir: PathBuf,
    pub format: Option<Format>,
    written: std::cell::RefCell<Vec<PathBuf>>,
}

impl Output {
    pub fn new(dir: &Path, format: Option<Format>) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), format, written: Default::default() })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.format.map_or(true, |g| g == f)
    }

    fn record(&self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.borrow_mut().push(p.clone());
        p
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.record(name), text)?;
        Ok(())
    }

    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<(), CliError> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut w = csv::Writer::from_path(self.record(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Builds the SVG only when it is wanted.
    pub fn svg(&self, name: &str, draw: impl FnOnce() -> Result<String, CliError>) -> Result<(), CliError> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        let text = draw()?;
        std::fs::write(self.record(name), text)?;
        Ok(())
    }

    pub fn written(&self) -> Vec<PathBuf> {
        self.written.borrow().clone()
    }
}

/// Applies command-line overrides and validates the result.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.depth {
        match cli.command {
            Command::Cylinder | Command::Render { what: RenderTarget::Cylinder } => cfg.cylinder.depth = d,
            Command::Theorem | Command::Render { what: RenderTarget::Theorem } => cfg.theorem.depth = d,
            _ => cfg.depth = d,
        }
    }
    if let Some(g) = cli.grid {
        cfg.grids.samples = g;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve_config(cli)?;
    let format = match cli.command {
        Command::Render { .. } => Some(Format::Svg),
        _ => cli.format,
    };
    let out = Output::new(&cfg.out_dir, format)?;
    use commands::*;
    match cli.command {
        Command::Subdivide | Command::Render { what: RenderTarget::Subdivide } => cmd_subdivide(&cfg, &out)?,
        Command::Cantor | Command::Render { what: RenderTarget::Cantor } => cmd_cantor(&cfg, &out)?,
        Command::Ceiling => cmd_ceiling(&cfg, &out)?,
        Command::Curve | Command::Render { what: RenderTarget::Curve } => cmd_curve(&cfg, &out)?,
        Command::Footprint | Command::Render { what: RenderTarget::Footprint } => cmd_footprint(&cfg, &out)?,
        Command::Field | Command::Render { what: RenderTarget::Field } => cmd_field(&cfg, &out)?,
        Command::Cylinder | Command::Render { what: RenderTarget::Cylinder } => cmd_cylinder(&cfg, &out)?,
        Command::Theorem | Command::Render { what: RenderTarget::Theorem } => cmd_theorem(&cfg, &out)?,
        Command::Verify => {
            let report = verify::cmd_verify(&cfg, &out)?;
            print!("{}", report.table());
            if !report.all_pass {
                let failed: Vec<&str> =
                    report.rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
    }
    Ok(out.written())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 3);
        let budget = peano_core::Error::Budget { needed: "10".into(), budget: 1 };
        assert_eq!(CliError::Core(budget).exit_code(), 4);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }

    #[test]
    fn depth_override_targets_the_command() {
        let cli = Cli::parse_from(["peano", "cylinder", "--depth", "2"]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!((cfg.depth, cfg.cylinder.depth), (4, 2));
        let cli = Cli::parse_from(["peano", "curve", "--depth", "2", "--grid", "9"]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!((cfg.depth, cfg.grids.samples), (2, 9));
    }
}
