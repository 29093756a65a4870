//! `kapdirac` command line.
//!
//! Exit codes: 0 success, 2 usage, 3 config/parse, 4 precondition, 5 I/O,
//! 6 numerical failure (including a failed `check`).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, default_window};
use crate::error::{Error, Result};
use crate::fields;
use crate::model::{load_config, BeamConfig, ElectronConfig};
use crate::par::Exec;
use crate::tdse::snapshot::{self, SnapshotFormat, SnapshotMeta};
use crate::tdse::{self, Grid2D, PropagatorConfig, Schedule};

use super::checks::run_checks;
use super::scan::{resolve_workers, run_scan, with_workers, ScanSpec};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_NUMERICAL: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "kapdirac", version, about = "Kapitza-Dirac diffraction with inclined laser beams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (TOML, or JSON with a .json extension); for `analyze`, the snapshot directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overridden by KAPDIRAC_THREADS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Also write JSON copies of every output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-parameter scan of an analytic observable.
    Scan,
    /// Wavepacket propagation followed by diffraction analysis of the final state.
    Tdse,
    /// Diffraction analysis of a snapshot directory.
    Analyze {
        /// Snapshot index (default: the last one).
        #[arg(long)]
        index: Option<usize>,
    },
    /// Vector potential and electric field on a grid.
    Fields,
    /// Runs the invariant suite.
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx_m: f64,
    pub dy_m: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid2D> {
        Grid2D::centered(self.nx, self.ny, self.dx_m, self.dy_m)
    }
}

/// Input of the `tdse` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdseRunConfig {
    pub beam: BeamConfig,
    pub electron: ElectronConfig,
    pub grid: GridSpec,
    pub propagator: PropagatorConfig,
    pub schedule: Schedule,
    #[serde(default)]
    pub snapshot_format: SnapshotFormat,
    /// Half-width of the order windows (1/m); default `k_ph sin φ / 4`.
    #[serde(rename = "order_window_per_m", default)]
    pub order_window: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range1 {
    pub min_m: f64,
    pub max_m: f64,
    pub n: usize,
}

impl Range1 {
    fn values(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![self.min_m];
        }
        let d = (self.max_m - self.min_m) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.min_m + d * i as f64).collect()
    }
}

/// Input of the `fields` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldsConfig {
    pub beam: BeamConfig,
    pub x: Range1,
    pub y: Range1,
    #[serde(rename = "t_s", default)]
    pub t: f64,
}

fn exit_code(e: &Error) -> (i32, &'static str) {
    match e {
        Error::Parse { .. } => (EXIT_CONFIG, "parse"),
        Error::InvalidConfig(_) => (EXIT_CONFIG, "config"),
        Error::Precondition(_) | Error::OverlappingWindows { .. } | Error::InsufficientPeaks(_) => {
            (EXIT_PRECONDITION, "precondition")
        }
        Error::Io { .. } => (EXIT_IO, "io"),
        Error::Truncation { .. } | Error::KrylovNonConvergence { .. } | Error::NormDrift { .. } => {
            (EXIT_NUMERICAL, "numerical")
        }
    }
}

fn need_config(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().ok_or_else(|| Error::config("--config <path> is required"))
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(path: PathBuf, body: String) -> Result<()> {
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output types serialize to JSON")
}

fn cmd_scan(cli: &Cli) -> Result<()> {
    let spec: ScanSpec = load_config(need_config(cli)?)?;
    let out = out_dir(cli)?;
    let result = run_scan(&spec, resolve_workers(cli.workers))?;
    write(out.join("scan.csv"), result.to_csv())?;
    write(out.join("scan_meta.json"), to_json(&serde_json::json!({ "spec": spec, "metadata": result.metadata })))?;
    if cli.json {
        write(out.join("scan.json"), to_json(&result))?;
    }
    println!(
        "scan: {}x{} cells, {} flagged, {:.2} s",
        result.axis1_values.len(),
        result.axis2_values.len(),
        result.metadata.flagged_cells,
        result.metadata.wall_time_s
    );
    Ok(())
}

fn analyze_into(out: &Path, psi: &tdse::Wavefunction2D, beam: &BeamConfig, electron: &ElectronConfig, window: Option<f64>, json: bool) -> Result<()> {
    let w = window.unwrap_or_else(|| default_window(beam));
    let d = diagnostics::analyze(psi, beam, electron, w, Exec::Parallel)?;
    diagnostics::write_outputs(out, &d, json)?;
    println!(
        "analyze: {} orders binned, residual {:.3e}, {} peaks",
        d.order_populations.entries.len(),
        d.order_populations.residual,
        d.peak_list.len()
    );
    Ok(())
}

fn cmd_tdse(cli: &Cli) -> Result<()> {
    let cfg: TdseRunConfig = load_config(need_config(cli)?)?;
    let out = out_dir(cli)?;
    let grid = cfg.grid.build()?;
    let (run, _) = with_workers(resolve_workers(cli.workers), |exec| {
        tdse::run(&cfg.electron, &cfg.beam, &grid, &cfg.propagator, &cfg.schedule, exec)
    })?;
    let run = run?;
    for s in &run.snapshots {
        let meta = SnapshotMeta {
            index: s.index,
            step: s.step,
            stage: s.stage,
            mode: cfg.propagator.mode,
            beam: &cfg.beam,
            electron: &cfg.electron,
        };
        snapshot::write_snapshot(&out, &s.psi, &meta, cfg.snapshot_format)?;
    }
    let summary = serde_json::json!({
        "steps": run.steps,
        "dt_s": run.dt,
        "snapshots": run.snapshots.len(),
        "max_krylov_dim": run.max_krylov_dim,
        "max_norm_drift": run.max_norm_drift,
        "config": cfg,
    });
    write(out.join("run.json"), to_json(&summary))?;
    println!("tdse: {} steps, max norm drift {:.3e}", run.steps, run.max_norm_drift);
    analyze_into(&out, run.last(), &cfg.beam, &cfg.electron, cfg.order_window, cli.json)
}

fn cmd_analyze(cli: &Cli, index: Option<usize>) -> Result<()> {
    let dir = need_config(cli)?;
    let index = match index {
        Some(i) => i,
        None => *snapshot::list_snapshots(dir)?
            .last()
            .ok_or_else(|| Error::precondition(format!("no snapshots in {}", dir.display())))?,
    };
    let (psi, side) = snapshot::read_snapshot(dir, index)?;
    let out = match &cli.out {
        Some(_) => out_dir(cli)?,
        None => dir.to_owned(),
    };
    analyze_into(&out, &psi, &side.beam, &side.electron, None, cli.json)
}

fn cmd_fields(cli: &Cli) -> Result<()> {
    let cfg: FieldsConfig = load_config(need_config(cli)?)?;
    cfg.beam.validate()?;
    let out = out_dir(cli)?;
    fields::write_field_csv(&out.join("fields.csv"), &cfg.beam, &cfg.x.values(), &cfg.y.values(), cfg.t)?;
    if let crate::model::Envelope::GaussianParaxial { .. } = cfg.beam.envelope {
        let contour = fields::intensity_contour_e1(&cfg.beam)?;
        let mut body = String::from("x,y\n");
        for p in contour {
            body.push_str(&format!("{:e},{:e}\n", p[0], p[1]));
        }
        write(out.join("contour_e1.csv"), body)?;
    }
    if cli.json {
        write(out.join("fields.json"), to_json(&cfg))?;
    }
    Ok(())
}

fn cmd_check() -> i32 {
    let results = run_checks();
    for c in &results {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if results.iter().all(|c| c.passed) {
        0
    } else {
        EXIT_NUMERICAL
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let res = match &cli.command {
        Command::Scan => cmd_scan(&cli),
        Command::Tdse => cmd_tdse(&cli),
        Command::Analyze { index } => cmd_analyze(&cli, *index),
        Command::Fields => cmd_fields(&cli),
        Command::Check => return cmd_check(),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            let (code, class) = exit_code(&e);
            eprintln!("error[{class}]: {e}");
            code
        }
    }
}
