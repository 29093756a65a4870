//! Snapshot files: `snap_{index}_{real|momentum}.{csv|bin}` plus a
//! `snap_{index}.json` sidecar.
//!
//! Both spaces are written in the lab frame. Real space holds
//! `x, y, Re ψ, Im ψ` with `x` the lab coordinate; momentum space holds
//! `kx, ky, Re ψ̃, Im ψ̃` in ascending order. Binary files are little-endian
//! `f64` pairs `(re, im)` in x-major order with the axes described by the
//! sidecar.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid2D, HamiltonianMode, Stage, Wavefunction2D};
use crate::diagnostics::MomentumWavefunction;
use crate::error::{Error, Result};
use crate::model::{BeamConfig, ElectronConfig};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Bin,
    Csv,
}

impl SnapshotFormat {
    fn ext(self) -> &'static str {
        match self {
            SnapshotFormat::Bin => "bin",
            SnapshotFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub index: usize,
    pub step: usize,
    pub stage: Stage,
    pub format: SnapshotFormat,
    pub grid: Grid2D,
    #[serde(rename = "time_s")]
    pub time: f64,
    pub norm: f64,
    pub absorbed: f64,
    #[serde(rename = "frame_velocity_m_per_s")]
    pub frame_velocity: f64,
    pub mode: HamiltonianMode,
    pub beam: BeamConfig,
    pub electron: ElectronConfig,
    pub gaussian_convention: String,
}

pub const GAUSSIAN_CONVENTION: &str =
    "TEM00 per beam: amplitude w0/w(z) exp(-rho^2/w(z)^2), phase k zeta - k rho^2 z/(2(z^2+zR^2)) + atan(z/zR)";

pub fn file_name(index: usize, space: &str, format: SnapshotFormat) -> String {
    format!("snap_{index}_{space}.{}", format.ext())
}

fn sidecar_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("snap_{index}.json"))
}

/// Lab-frame real-space amplitudes with their `(x, y)` coordinates.
fn lab_real(psi: &Wavefunction2D) -> Vec<([f64; 2], Complex64)> {
    let g = psi.grid;
    (0..g.len())
        .map(|idx| {
            let x = psi.lab_x(idx / g.ny);
            ([x, g.y(idx % g.ny)], psi.amplitudes[idx] * psi.boost_phase(x))
        })
        .collect()
}

fn write_values(path: &Path, header: &str, rows: &[([f64; 2], Complex64)], format: SnapshotFormat) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let res = match format {
        SnapshotFormat::Csv => {
            let mut r = writeln!(w, "{header}");
            for (c, a) in rows {
                if r.is_err() {
                    break;
                }
                r = writeln!(w, "{:e},{:e},{:e},{:e}", c[0], c[1], a.re, a.im);
            }
            r
        }
        SnapshotFormat::Bin => {
            let mut bytes = Vec::with_capacity(rows.len() * 16);
            for (_, a) in rows {
                bytes.extend_from_slice(&a.re.to_le_bytes());
                bytes.extend_from_slice(&a.im.to_le_bytes());
            }
            w.write_all(&bytes)
        }
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub struct SnapshotMeta<'a> {
    pub index: usize,
    pub step: usize,
    pub stage: Stage,
    pub mode: HamiltonianMode,
    pub beam: &'a BeamConfig,
    pub electron: &'a ElectronConfig,
}

/// Writes real- and momentum-space files and the sidecar for one snapshot.
pub fn write_snapshot(dir: &Path, psi: &Wavefunction2D, meta: &SnapshotMeta<'_>, format: SnapshotFormat) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_values(&dir.join(file_name(meta.index, "real", format)), "x,y,re,im", &lab_real(psi), format)?;
    let m = MomentumWavefunction::from_wavefunction(psi, Exec::Parallel);
    let ny = m.ky.len();
    let rows: Vec<_> =
        m.amplitudes.iter().enumerate().map(|(idx, a)| ([m.kx[idx / ny], m.ky[idx % ny]], *a)).collect();
    write_values(&dir.join(file_name(meta.index, "momentum", format)), "kx,ky,re,im", &rows, format)?;
    let side = Sidecar {
        index: meta.index,
        step: meta.step,
        stage: meta.stage,
        format,
        grid: psi.grid,
        time: psi.time,
        norm: psi.norm(),
        absorbed: psi.absorbed,
        frame_velocity: psi.frame_velocity,
        mode: meta.mode,
        beam: *meta.beam,
        electron: *meta.electron,
        gaussian_convention: GAUSSIAN_CONVENTION.to_string(),
    };
    let p = sidecar_path(dir, meta.index);
    let text = serde_json::to_string_pretty(&side).map_err(|e| Error::config(e.to_string()))?;
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

/// Indices of all sidecars in `dir`, ascending.
pub fn list_snapshots(dir: &Path) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
        let name = name.to_string_lossy();
        if let Some(idx) = name.strip_prefix("snap_").and_then(|s| s.strip_suffix(".json")) {
            if let Ok(i) = idx.parse() {
                out.push(i);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Reads a snapshot back into the frame it was propagated in.
pub fn read_snapshot(dir: &Path, index: usize) -> Result<(Wavefunction2D, Sidecar)> {
    let sp = sidecar_path(dir, index);
    let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Parse { path: sp.clone(), msg: e.to_string() })?;
    side.grid.validate()?;
    let n = side.grid.len();
    let path = dir.join(file_name(index, "real", side.format));
    let bad = |msg: String| Error::Parse { path: path.clone(), msg };
    let values: Vec<Complex64> = match side.format {
        SnapshotFormat::Bin => {
            let mut bytes = Vec::new();
            std::fs::File::open(&path)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|e| Error::io(&path, e))?;
            if bytes.len() != 16 * n {
                return Err(bad(format!("expected {} bytes, found {}", 16 * n, bytes.len())));
            }
            bytes
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    Complex64::new(re, im)
                })
                .collect()
        }
        SnapshotFormat::Csv => {
            let f = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            let mut out = Vec::with_capacity(n);
            for (ln, line) in BufReader::new(f).lines().enumerate().skip(1) {
                let line = line.map_err(|e| Error::io(&path, e))?;
                let cols: Vec<f64> = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
                if cols.len() != 4 {
                    return Err(bad(format!("line {}: expected 4 columns", ln + 1)));
                }
                out.push(Complex64::new(cols[2], cols[3]));
            }
            if out.len() != n {
                return Err(bad(format!("expected {n} rows, found {}", out.len())));
            }
            out
        }
    };
    let mut psi = Wavefunction2D {
        grid: side.grid,
        amplitudes: values,
        time: side.time,
        frame_velocity: side.frame_velocity,
        absorbed: side.absorbed,
    };
    // undo the lab boost
    for idx in 0..n {
        let x = psi.lab_x(idx / side.grid.ny);
        let ph = psi.boost_phase(x).conj();
        psi.amplitudes[idx] *= ph;
    }
    Ok((psi, side))
}
