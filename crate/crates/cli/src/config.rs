//! Flag parsing, config files and the resolved run configuration.
//!
//! Config files are flat `key = value` text whose keys are the long flag
//! names without dashes (`az = 0.5`, `L = 20`, `n-typ = 4`). An optional
//! `command = spin-otoc` line names the subcommand. Flags given on the
//! command line override the file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use otoc_core::floquet::{FloquetParams, PhiMode};
use otoc_core::gates::GateParams;
use otoc_core::otoc::{EngineOptions, OtocConfig};
use otoc_core::schedule::{Boundary, Geometry};

use crate::error::CliError;

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (unknown subcommand or flag, malformed value)
  3  invalid configuration
  4  engine failure (truncation ceiling, lost signal, numerical integrity)
  5  fit window too short
  6  I/O error
  7  unsupported combination (e.g. closed-form rates off the dual-unitary family)
  8  oracle check failed

Errors are printed to stderr as one line:
  error code=<n> kind=<kind> message=\"<text>\"

Environment:
  OTOC_RELAX_THREADS  caps the worker pool (sweeps, disorder samples)";

#[derive(Parser, Debug)]
#[command(name = "otoc-relax", version, about = "Two-stage OTOC relaxation in averaged random circuits", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spin-basis OTOC series and two-stage fit
    SpinOtoc(Flags),
    /// OTOC in the occupied/unoccupied cluster basis
    ClusterOtoc(Flags),
    /// Squared one-point function in the cluster basis
    OnePoint(Flags),
    /// Magnetization grid along the dominant trajectory
    Heatmap(Flags),
    /// Exact Floquet state-vector OTOC with typicality averaging
    Floquet(Flags),
    /// Tensor-train engine against dense evolution
    OracleCheck(Flags),
    /// Closed-form rates for the dual-unitary family
    Rates(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcmd {
    SpinOtoc,
    ClusterOtoc,
    OnePoint,
    Heatmap,
    Floquet,
    OracleCheck,
    Rates,
}

impl Subcmd {
    pub fn name(self) -> &'static str {
        match self {
            Subcmd::SpinOtoc => "spin-otoc",
            Subcmd::ClusterOtoc => "cluster-otoc",
            Subcmd::OnePoint => "one-point",
            Subcmd::Heatmap => "heatmap",
            Subcmd::Floquet => "floquet",
            Subcmd::OracleCheck => "oracle-check",
            Subcmd::Rates => "rates",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }
}

impl Command {
    pub fn split(self) -> (Subcmd, Flags) {
        match self {
            Command::SpinOtoc(f) => (Subcmd::SpinOtoc, f),
            Command::ClusterOtoc(f) => (Subcmd::ClusterOtoc, f),
            Command::OnePoint(f) => (Subcmd::OnePoint, f),
            Command::Heatmap(f) => (Subcmd::Heatmap, f),
            Command::Floquet(f) => (Subcmd::Floquet, f),
            Command::OracleCheck(f) => (Subcmd::OracleCheck, f),
            Command::Rates(f) => (Subcmd::Rates, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Tt,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiModeArg {
    Clean,
    Homog,
    Site,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PgmFormat {
    /// plain text
    P2,
    /// binary
    P5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    Spin,
    Cluster,
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Circuit geometry
    #[arg(long, default_value = "bw", value_parser = parse_geom)]
    pub geom: Geometry,
    /// Boundary condition
    #[arg(long, default_value = "obc", value_parser = parse_bc)]
    pub bc: Boundary,
    /// Number of sites
    #[arg(long = "L", default_value_t = 16)]
    pub len: usize,
    /// Total time in time units (Floquet: brickwork layers). Default 6L, 2L for heatmap and floquet
    #[arg(long = "T")]
    pub total: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub ax: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub ay: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub az: f64,
    /// Local dimension
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    /// Site of V
    #[arg(long, default_value_t = 0)]
    pub xv: usize,
    /// Site of W. Default 4 (L/4 on short chains), 1 for floquet
    #[arg(long)]
    pub xw: Option<usize>,
    /// Tensor-train bond-dimension cap
    #[arg(long, default_value_t = 128)]
    pub chi: usize,
    /// Relative singular-value cutoff
    #[arg(long, default_value_t = 1e-14)]
    pub cutoff: f64,
    #[arg(long, value_enum, default_value = "tt")]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random states per circuit sample
    #[arg(long = "n-typ", default_value_t = 1)]
    pub n_typ: usize,
    /// Circuit samples
    #[arg(long = "n-samples", default_value_t = 1)]
    pub n_samples: usize,
    #[arg(long = "phi-mode", value_enum, default_value = "clean")]
    pub phi_mode: PhiModeArg,
    /// Single-site angle of the clean Floquet circuit
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub phi: f64,
    /// Heatmap basis
    #[arg(long, value_enum, default_value = "spin")]
    pub basis: Basis,
    #[arg(long, value_enum, default_value = "p2")]
    pub pgm: PgmFormat,
    /// Output directory
    #[arg(long, default_value = "otoc-out")]
    pub out: PathBuf,
    /// Flat key = value config file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter sweep `key=start:stop:step`, one subdirectory per point
    #[arg(long)]
    pub sweep: Option<String>,
    /// Write the final tensor-train state of spin-otoc to this file
    #[arg(long = "save-state")]
    pub save_state: Option<PathBuf>,
}

fn parse_geom(s: &str) -> Result<Geometry, String> {
    s.parse().map_err(|e: otoc_core::Error| e.to_string())
}

fn parse_bc(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: otoc_core::Error| e.to_string())
}

/// Splices a `--config` file into the argument list, after the subcommand
/// and before the user's own flags.
pub fn expand_args(argv: &[OsString]) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut it = argv.iter().enumerate();
    while let Some((_, a)) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = it.next().map(|(_, p)| PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(argv.to_vec()) };
    let (file_cmd, file_args) = read_config_file(&path)?;
    let given: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|k| k.split('=').next().unwrap_or(k).to_string()))
        .collect();
    let file_args: Vec<OsString> = file_args
        .chunks(2)
        .filter(|kv| !given.iter().any(|g| kv[0].to_str() == Some(&format!("--{g}"))))
        .flatten()
        .cloned()
        .collect();

    let mut out = vec![argv.first().cloned().unwrap_or_else(|| "otoc-relax".into())];
    let rest = &argv[argv.len().min(1)..];
    let user_cmd = rest.first().filter(|a| !a.to_string_lossy().starts_with('-'));
    match (user_cmd, file_cmd) {
        (Some(c), _) => out.push(c.clone()),
        (None, Some(c)) => out.push(c.into()),
        (None, None) => {}
    }
    out.extend(file_args);
    out.extend(rest.iter().skip(usize::from(user_cmd.is_some())).cloned());
    Ok(out)
}

fn read_config_file(path: &Path) -> Result<(Option<String>, Vec<OsString>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut cmd = None;
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "command" => {
                if Subcmd::from_name(v).is_none() {
                    return Err(CliError::Config(format!("{}:{}: unknown command '{v}'", path.display(), n + 1)));
                }
                cmd = Some(v.to_string());
            }
            "config" => return Err(CliError::Config("config files cannot include other config files".into())),
            _ => {
                args.push(format!("--{k}").into());
                args.push(v.into());
            }
        }
    }
    Ok((cmd, args))
}

/// Every flag with its default applied and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Subcmd,
    pub geom: Geometry,
    pub bc: Boundary,
    pub len: usize,
    pub total: usize,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub q: u32,
    pub xv: usize,
    pub xw: usize,
    pub chi: usize,
    pub cutoff: f64,
    pub engine: EngineArg,
    pub seed: u64,
    pub n_typ: usize,
    pub n_samples: usize,
    pub phi_mode: PhiModeArg,
    pub phi: f64,
    pub basis: Basis,
    pub pgm: PgmFormat,
    pub out: PathBuf,
    pub sweep: Option<Sweep>,
    pub save_state: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: Subcmd, f: Flags) -> Result<Self, CliError> {
        let total = f.total.unwrap_or(match command {
            Subcmd::Heatmap | Subcmd::Floquet => 2 * f.len,
            _ => 6 * f.len,
        });
        let xw = f.xw.unwrap_or(match command {
            Subcmd::Floquet => 1,
            _ => 4.min(f.len / 4).max(1),
        });
        let sweep = f.sweep.as_deref().map(Sweep::parse).transpose()?;
        let cfg = Self {
            command,
            geom: f.geom,
            bc: f.bc,
            len: f.len,
            total,
            ax: f.ax,
            ay: f.ay,
            az: f.az,
            q: f.q,
            xv: f.xv,
            xw,
            chi: f.chi,
            cutoff: f.cutoff,
            engine: f.engine,
            seed: f.seed,
            n_typ: f.n_typ,
            n_samples: f.n_samples,
            phi_mode: f.phi_mode,
            phi: f.phi,
            basis: f.basis,
            pgm: f.pgm,
            out: f.out,
            sweep,
            save_state: f.save_state,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the parameters the selected pipeline will use.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.chi == 0 {
            return Err(CliError::Config("chi must be at least 1".into()));
        }
        if !(self.cutoff >= 0.0 && self.cutoff < 1.0) {
            return Err(CliError::Config(format!("cutoff {} must lie in [0, 1)", self.cutoff)));
        }
        if self.save_state.is_some() && (self.command != Subcmd::SpinOtoc || self.engine != EngineArg::Tt) {
            return Err(CliError::Config("--save-state needs spin-otoc with the tt engine".into()));
        }
        match self.command {
            Subcmd::Floquet => {
                if self.geom != Geometry::Brickwork {
                    return Err(CliError::Core(otoc_core::Error::Unsupported(
                        "the Floquet circuit is brickwork only".into(),
                    )));
                }
                self.floquet_params().validate()?;
            }
            Subcmd::Rates => {
                GateParams::new(self.ax, self.ay, self.az, self.q)?;
            }
            Subcmd::OracleCheck => {
                if !(4..=12).contains(&self.len) {
                    return Err(CliError::Config(format!("oracle-check needs 4 <= L <= 12, got {}", self.len)));
                }
            }
            _ => {
                self.otoc_config()?;
            }
        }
        Ok(())
    }

    pub fn gate_params(&self) -> Result<GateParams<f64>, CliError> {
        Ok(GateParams::new(self.ax, self.ay, self.az, self.q)?)
    }

    pub fn otoc_config(&self) -> Result<OtocConfig<f64>, CliError> {
        let c = OtocConfig {
            params: self.gate_params()?,
            geometry: self.geom,
            boundary: self.bc,
            len: self.len,
            total_time: self.total,
            x_v: self.xv,
            x_w: self.xw,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn engine_options(&self) -> EngineOptions {
        match self.engine {
            EngineArg::Tt => EngineOptions::tt(self.chi, self.cutoff),
            EngineArg::Dense => EngineOptions::dense(),
        }
    }

    pub fn floquet_params(&self) -> FloquetParams {
        FloquetParams {
            a_z: self.az,
            phi_mode: match self.phi_mode {
                PhiModeArg::Clean => PhiMode::Clean(self.phi),
                PhiModeArg::Homog => PhiMode::Homogeneous,
                PhiModeArg::Site => PhiMode::Site,
            },
            boundary: self.bc,
            len: self.len,
            layers: self.total,
            n_typ: self.n_typ,
            n_samples: self.n_samples,
            seed: self.seed,
            x_v: self.xv,
            x_w: self.xw,
        }
    }

    /// `key = value` text that reproduces this run through `--config`.
    pub fn resolved_text(&self) -> String {
        let value_name = |v: &dyn ValueName| v.value_name();
        let mut s = String::from("# otoc-relax resolved config v1\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("command", self.command.name().into());
        kv("geom", self.geom.to_string());
        kv("bc", self.bc.to_string());
        kv("L", self.len.to_string());
        kv("T", self.total.to_string());
        kv("ax", format!("{:?}", self.ax));
        kv("ay", format!("{:?}", self.ay));
        kv("az", format!("{:?}", self.az));
        kv("q", self.q.to_string());
        kv("xv", self.xv.to_string());
        kv("xw", self.xw.to_string());
        kv("chi", self.chi.to_string());
        kv("cutoff", format!("{:e}", self.cutoff));
        kv("engine", value_name(&self.engine));
        kv("seed", self.seed.to_string());
        kv("n-typ", self.n_typ.to_string());
        kv("n-samples", self.n_samples.to_string());
        kv("phi-mode", value_name(&self.phi_mode));
        kv("phi", format!("{:?}", self.phi));
        kv("basis", value_name(&self.basis));
        kv("pgm", value_name(&self.pgm));
        kv("out", self.out.display().to_string());
        if let Some(p) = &self.save_state {
            kv("save-state", p.display().to_string());
        }
        s
    }
}

trait ValueName {
    fn value_name(&self) -> String;
}

impl<E: ValueEnum> ValueName for E {
    fn value_name(&self) -> String {
        self.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    Az,
    Ax,
    Ay,
    Phi,
    Len,
    Total,
    Xw,
    Seed,
}

/// `key=start:stop:step`, inclusive of `stop` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: SweepKey,
    pub name: String,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("sweep '{s}' is not key=start:stop:step"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let key = match name.trim() {
            "az" => SweepKey::Az,
            "ax" => SweepKey::Ax,
            "ay" => SweepKey::Ay,
            "phi" => SweepKey::Phi,
            "L" => SweepKey::Len,
            "T" => SweepKey::Total,
            "xw" => SweepKey::Xw,
            "seed" => SweepKey::Seed,
            other => return Err(CliError::Config(format!("cannot sweep '{other}'"))),
        };
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        if n >= 10_000 {
            return Err(CliError::Config(format!("sweep '{s}' has more than 10000 points")));
        }
        let values = (0..=n).map(|i| start + i as f64 * step).collect();
        Ok(Self { key, name: name.trim().to_string(), values })
    }

    /// Copy of `base` at one sweep value, writing into its own subdirectory.
    pub fn point(&self, base: &RunConfig, value: f64) -> Result<RunConfig, CliError> {
        let mut c = base.clone();
        c.sweep = None;
        let int = || -> Result<u64, CliError> {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CliError::Config(format!("sweep value {value} for '{}' must be a whole number", self.name)));
            }
            Ok(value as u64)
        };
        let label = match self.key {
            SweepKey::Az | SweepKey::Ax | SweepKey::Ay | SweepKey::Phi => format!("{}={value:.4}", self.name),
            _ => format!("{}={}", self.name, int()?),
        };
        match self.key {
            SweepKey::Az => c.az = value,
            SweepKey::Ax => c.ax = value,
            SweepKey::Ay => c.ay = value,
            SweepKey::Phi => c.phi = value,
            SweepKey::Len => c.len = int()? as usize,
            SweepKey::Total => c.total = int()? as usize,
            SweepKey::Xw => c.xw = int()? as usize,
            SweepKey::Seed => c.seed = int()?,
        }
        c.out = base.out.join(label);
        c.validate()?;
        Ok(c)
    }
}
