//! Text writers for run outputs. Data files contain only deterministic
//! content; wall time goes to the metadata sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{ConservedSample, Grid, ModeState, RunReport, Scheme};

/// Time tag used in file names, e.g. `t0.020000`.
pub fn time_tag(time: f64) -> String {
    format!("t{time:.6}")
}

pub fn snapshot_path(dir: &Path, run_id: &str, time: f64, suffix: &str) -> PathBuf {
    dir.join(format!("{run_id}_{}_{suffix}.dat", time_tag(time)))
}

fn header(out: &mut String, state: &ModeState, step: u64, scheme: Scheme, grid: &Grid) {
    let _ = writeln!(out, "# time = {:.16e}", state.time);
    let _ = writeln!(out, "# step = {step}");
    let _ = writeln!(out, "# scheme = {scheme}");
    let _ = writeln!(
        out,
        "# grid: x0 = {:.16e}, dx = {:.16e}, n_points = {}, periodic",
        grid.x0, grid.dx, grid.n_points
    );
}

/// One row per grid point: `x, θ^{n₁}, θ^{n₂}, …`.
pub fn modes_text(state: &ModeState, step: u64, scheme: Scheme, grid: &Grid) -> String {
    let mut out = String::new();
    header(&mut out, state, step, scheme, grid);
    out.push_str("# x");
    for n in &state.modes {
        let _ = write!(out, "\ttheta_{n}");
    }
    out.push('\n');
    for i in 0..grid.n_points {
        let _ = write!(out, "{:.16e}", grid.x(i));
        for t in &state.theta {
            let _ = write!(out, "\t{:.16e}", t[i]);
        }
        out.push('\n');
    }
    out
}

/// Two columns `x, θⁿ` for the mode at `position` in the state.
pub fn mode_profile_text(state: &ModeState, position: usize, step: u64, scheme: Scheme, grid: &Grid) -> String {
    let mut out = String::new();
    header(&mut out, state, step, scheme, grid);
    let _ = writeln!(out, "# x\ttheta_{}", state.modes[position]);
    for (i, v) in state.theta[position].iter().enumerate() {
        let _ = writeln!(out, "{:.16e}\t{v:.16e}", grid.x(i));
    }
    out
}

/// Reads the `x, θ…` table written by [`modes_text`].
pub fn read_modes_text(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let mut x = Vec::new();
    let mut theta: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let vals = line
            .split('\t')
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
        if theta.is_empty() {
            theta = vec![Vec::new(); vals.len().saturating_sub(1)];
        }
        if vals.len() != theta.len() + 1 {
            return Err(bad(format!("line {}: wrong column count", ln + 1)));
        }
        x.push(vals[0]);
        for (t, v) in theta.iter_mut().zip(&vals[1..]) {
            t.push(*v);
        }
    }
    Ok((x, theta))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Sidecar written next to the data files of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub run_id: String,
    pub scheme: Scheme,
    pub tau: f64,
    pub steps: u64,
    pub final_time: f64,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_warning: Option<String>,
    pub captured_energy_fraction: f64,
    pub profile_residual: f64,
    pub field_residual: f64,
    pub modal_coefficients: Vec<f64>,
    pub files: Vec<String>,
    pub conserved: Vec<ConservedSample>,
}

impl RunMetadata {
    pub fn from_report(run_id: &str, report: &RunReport) -> Self {
        RunMetadata {
            run_id: run_id.to_string(),
            scheme: report.scheme,
            tau: report.tau,
            steps: report.steps,
            final_time: report.final_time,
            wall_time_seconds: report.wall_time,
            stability_warning: report.stability_warning.clone(),
            captured_energy_fraction: 0.0,
            profile_residual: 0.0,
            field_residual: 0.0,
            modal_coefficients: Vec::new(),
            files: Vec::new(),
            conserved: report.samples.clone(),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_text_round_trip() {
        let grid = Grid::new(-1.0, 0.25, 8).unwrap();
        let s = ModeState::new(0.5, vec![2, 4], vec![grid.sample(|x| x.sin() / 3.0), grid.sample(|x| x.exp())]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dat");
        write_text(&p, &modes_text(&s, 10, Scheme::TwoStage, &grid)).unwrap();
        let (x, theta) = read_modes_text(&p).unwrap();
        assert_eq!(x, grid.coordinates());
        assert_eq!(theta, s.theta);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("# scheme = two-stage"));
        assert!(text.contains("# step = 10"));
    }

    #[test]
    fn file_names() {
        let p = snapshot_path(Path::new("out"), "r1", 0.02, "mode4");
        assert_eq!(p, Path::new("out/r1_t0.020000_mode4.dat"));
    }
}
