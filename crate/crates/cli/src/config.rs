//! Run configuration: command-line flags over a TOML file over defaults.
//!
//! The file format is flat `key = value` TOML with the same names as the
//! long flags (dashes become underscores). A fully resolved config is a
//! valid input file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use epitaxy_core::{BoundaryKind, Grid2D};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::forcing::ForcingSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Mpass,
    Evolve,
    Radial,
    Kpz,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Mpass => "mpass",
            Command::Evolve => "evolve",
            Command::Radial => "radial",
            Command::Kpz => "kpz",
            Command::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Navier,
    Dirichlet,
}

impl From<Bc> for BoundaryKind {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Navier => BoundaryKind::Navier,
            Bc::Dirichlet => BoundaryKind::Dirichlet,
        }
    }
}

pub mod defaults {
    pub const NX: usize = 65;
    pub const NY: usize = 65;
    pub const LAMBDA: f64 = 1.0;
    pub const F: &str = "constant:1";
    pub const TOL: f64 = 1e-10;
    pub const MAX_ITER: usize = 200;
    pub const DT: f64 = 1e-4;
    pub const STEPS: usize = 1000;
    pub const OUTPUT_DIR: &str = "out";
    pub const LAMBDA_LO: f64 = 0.01;
    pub const LAMBDA_HI: f64 = 100.0;
    pub const RTOL: f64 = 1e-3;
    pub const WORKERS: usize = 4;
    pub const SNAPSHOT_EVERY: usize = 100;
    pub const RADIAL_STEPS: usize = 10_000;
}

/// Optional settings, as given on the command line or in a config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// TOML config file; flags given on the command line take precedence
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Command named in a config file; must match the subcommand
    #[arg(skip)]
    pub command: Option<Command>,

    /// Nodes in x [default: 65]
    #[arg(long)]
    pub nx: Option<usize>,
    /// Nodes in y [default: 65]
    #[arg(long)]
    pub ny: Option<usize>,
    /// Domain left edge [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Domain right edge [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<f64>,
    /// Domain bottom edge [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<f64>,
    /// Domain top edge [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub y1: Option<f64>,

    /// Boundary conditions [default: dirichlet; navier for kpz]
    #[arg(long, value_enum)]
    pub bc: Option<Bc>,
    /// Load parameter λ [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Forcing: constant:c | gaussian:x0,y0,sigma,amp | file:path [default: constant:1]
    #[arg(long = "f", value_name = "SPEC", allow_hyphen_values = true)]
    pub f: Option<String>,

    /// Picard step tolerance, or steady-state rate for evolve [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Picard iteration cap [default: 200]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Time step of the flow and of the stability test [default: 1e-4]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time steps of the flow and of the stability test [default: 1000]
    #[arg(long)]
    pub steps: Option<usize>,

    /// Output directory [default: out]
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Seed for the randomized constant probes of mpass [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Lower end of the threshold search [default: 0.01]
    #[arg(long)]
    pub lambda_lo: Option<f64>,
    /// Upper end of the threshold search [default: 100]
    #[arg(long)]
    pub lambda_hi: Option<f64>,
    /// Relative width of threshold brackets [default: 1e-3]
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Worker threads for sweep [default: 4]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Snapshot interval of evolve, 0 for none [default: 100]
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Also bracket the radial fold threshold [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub threshold: Option<bool>,
    /// RK4 steps of the radial shooting [default: 10000]
    #[arg(long)]
    pub radial_steps: Option<usize>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|source| CliError::ConfigParse { path: path.display().to_string(), source })
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            config: self.config.or(lower.config),
            command: self.command.or(lower.command),
            nx: self.nx.or(lower.nx),
            ny: self.ny.or(lower.ny),
            x0: self.x0.or(lower.x0),
            x1: self.x1.or(lower.x1),
            y0: self.y0.or(lower.y0),
            y1: self.y1.or(lower.y1),
            bc: self.bc.or(lower.bc),
            lambda: self.lambda.or(lower.lambda),
            f: self.f.or(lower.f),
            tol: self.tol.or(lower.tol),
            max_iter: self.max_iter.or(lower.max_iter),
            dt: self.dt.or(lower.dt),
            steps: self.steps.or(lower.steps),
            output_dir: self.output_dir.or(lower.output_dir),
            seed: self.seed.or(lower.seed),
            lambda_lo: self.lambda_lo.or(lower.lambda_lo),
            lambda_hi: self.lambda_hi.or(lower.lambda_hi),
            rtol: self.rtol.or(lower.rtol),
            workers: self.workers.or(lower.workers),
            snapshot_every: self.snapshot_every.or(lower.snapshot_every),
            threshold: self.threshold.or(lower.threshold),
            radial_steps: self.radial_steps.or(lower.radial_steps),
        }
    }
}

/// Every setting of a run, resolved and validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub bc: Bc,
    pub lambda: f64,
    pub f: String,
    pub tol: f64,
    pub max_iter: usize,
    pub dt: f64,
    pub steps: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub rtol: f64,
    pub workers: usize,
    pub snapshot_every: usize,
    pub threshold: bool,
    pub radial_steps: usize,
}

impl RunConfig {
    /// Layers `cli` over the file named by `cli.config` (if any) over the
    /// defaults, then validates.
    pub fn resolve(command: Command, cli: Overrides) -> CliResult<Self> {
        let file = match &cli.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        if let Some(c) = file.command {
            if c != command {
                return Err(CliError::Usage(format!("config file is for `{c}`, not `{command}`")));
            }
        }
        let o = cli.over(file);
        let default_bc = if command == Command::Kpz { Bc::Navier } else { Bc::Dirichlet };
        let cfg = RunConfig {
            command,
            nx: o.nx.unwrap_or(defaults::NX),
            ny: o.ny.unwrap_or(defaults::NY),
            x0: o.x0.unwrap_or(0.0),
            x1: o.x1.unwrap_or(1.0),
            y0: o.y0.unwrap_or(0.0),
            y1: o.y1.unwrap_or(1.0),
            bc: o.bc.unwrap_or(default_bc),
            lambda: o.lambda.unwrap_or(defaults::LAMBDA),
            f: o.f.unwrap_or_else(|| defaults::F.to_string()),
            tol: o.tol.unwrap_or(defaults::TOL),
            max_iter: o.max_iter.unwrap_or(defaults::MAX_ITER),
            dt: o.dt.unwrap_or(defaults::DT),
            steps: o.steps.unwrap_or(defaults::STEPS),
            output_dir: o.output_dir.unwrap_or_else(|| PathBuf::from(defaults::OUTPUT_DIR)),
            seed: o.seed.unwrap_or(0),
            lambda_lo: o.lambda_lo.unwrap_or(defaults::LAMBDA_LO),
            lambda_hi: o.lambda_hi.unwrap_or(defaults::LAMBDA_HI),
            rtol: o.rtol.unwrap_or(defaults::RTOL),
            workers: o.workers.unwrap_or(defaults::WORKERS),
            snapshot_every: o.snapshot_every.unwrap_or(defaults::SNAPSHOT_EVERY),
            threshold: o.threshold.unwrap_or(false),
            radial_steps: o.radial_steps.unwrap_or(defaults::RADIAL_STEPS),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        self.grid()?;
        self.forcing()?;
        if !self.lambda.is_finite() {
            return bad(format!("lambda must be finite, got {}", self.lambda));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("tol must be positive and max_iter at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.steps == 0 {
            return bad("dt must be positive and steps at least 1".into());
        }
        if !(self.lambda_lo > 0.0 && self.lambda_hi > self.lambda_lo && self.lambda_hi.is_finite()) {
            return bad(format!("need 0 < lambda_lo < lambda_hi, got [{}, {}]", self.lambda_lo, self.lambda_hi));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return bad(format!("rtol must lie in (0, 1), got {}", self.rtol));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.radial_steps < 10 {
            return bad("radial_steps must be at least 10".into());
        }
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must not exceed {}", i64::MAX));
        }
        match (self.command, self.bc) {
            (Command::Mpass, Bc::Navier) => bad("mpass works with clamped (dirichlet) conditions".into()),
            (Command::Kpz, Bc::Dirichlet) => bad("kpz uses u = Δu = 0 (navier) conditions".into()),
            _ => Ok(()),
        }
    }

    pub fn grid(&self) -> CliResult<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.x0, self.x1, self.y0, self.y1)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn forcing(&self) -> CliResult<ForcingSpec> {
        self.f.parse()
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.bc.into()
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::resolve(Command::Solve, Overrides::default()).unwrap();
        assert_eq!((c.nx, c.ny, c.bc, c.lambda), (65, 65, Bc::Dirichlet, 1.0));
        assert_eq!(c.f, "constant:1");
        assert_eq!(RunConfig::resolve(Command::Kpz, Overrides::default()).unwrap().bc, Bc::Navier);
    }

    #[test]
    fn resolved_toml_round_trips() {
        let cli = Overrides { lambda: Some(0.1 + 0.2), tol: Some(3e-11), seed: Some(42), ..Default::default() };
        let c = RunConfig::resolve(Command::Sweep, cli).unwrap();
        let text = c.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        let o: Overrides = toml::from_str(&text).unwrap();
        assert_eq!(RunConfig::resolve(Command::Sweep, o).unwrap(), c);
    }

    #[test]
    fn command_line_beats_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "command = \"solve\"\nlambda = 2.5\nnx = 17\n").unwrap();
        let cli = Overrides { config: Some(p.clone()), nx: Some(33), ..Default::default() };
        let c = RunConfig::resolve(Command::Solve, cli).unwrap();
        assert_eq!((c.lambda, c.nx, c.ny), (2.5, 33, 65));
        let cli = Overrides { config: Some(p), ..Default::default() };
        assert!(matches!(RunConfig::resolve(Command::Kpz, cli), Err(CliError::Usage(_))));
    }

    #[test]
    fn malformed_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        std::fs::write(&p, "lamda = 2\n").unwrap();
        let cli = Overrides { config: Some(p.clone()), ..Default::default() };
        assert!(matches!(RunConfig::resolve(Command::Solve, cli), Err(CliError::ConfigParse { .. })));
        std::fs::write(&p, "nx = \"many\"\n").unwrap();
        let cli = Overrides { config: Some(p), ..Default::default() };
        assert!(RunConfig::resolve(Command::Solve, cli).is_err());
        for o in [
            Overrides { nx: Some(2), ..Default::default() },
            Overrides { tol: Some(0.0), ..Default::default() },
            Overrides { f: Some("wave:1".into()), ..Default::default() },
            Overrides { lambda_lo: Some(5.0), lambda_hi: Some(1.0), ..Default::default() },
            Overrides { workers: Some(0), ..Default::default() },
        ] {
            assert!(RunConfig::resolve(Command::Solve, o).is_err());
        }
        let navier = Overrides { bc: Some(Bc::Navier), ..Default::default() };
        assert!(RunConfig::resolve(Command::Mpass, navier).is_err());
    }
}
