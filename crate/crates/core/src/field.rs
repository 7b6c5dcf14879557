//! Stream function `ψ(z, x, t) = Σ_n Zⁿ(z) θⁿ(x, t)` on a `(z, x)` lattice
//! and its text exports.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modal_basis::ModeBasis;
use crate::solver::{Grid, ModeState};

/// Default depth sampling; resolves the shortest default mode with a dozen
/// points per half-wavelength.
pub const DEFAULT_Z_POINTS: usize = 129;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub time: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// `psi[q][i] = ψ(z_q, x_i)`.
    pub psi: Vec<Vec<f64>>,
}

/// `z_points` uniform depths from 0 to `depth`; the end points are exact.
pub fn depth_grid(depth: f64, z_points: usize) -> Vec<f64> {
    let last = z_points - 1;
    (0..z_points)
        .map(|q| if q == last { depth } else { depth * q as f64 / last as f64 })
        .collect()
}

/// Evaluates the modal sum on every lattice point. Wall rows are exactly 0.
pub fn synthesize(basis: &ModeBasis, state: &ModeState, grid: &Grid, z_points: usize) -> Result<FieldSnapshot> {
    if z_points < 2 {
        return Err(Error::Parameter(format!("need at least 2 depth points, got {z_points}")));
    }
    if basis.indices() != state.modes {
        return Err(Error::ModeMismatch {
            expected: basis.indices(),
            found: state.modes.clone(),
        });
    }
    if state.n_points() != grid.n_points {
        return Err(Error::Shape(format!(
            "state has {} points, grid {}",
            state.n_points(),
            grid.n_points
        )));
    }
    let z = depth_grid(basis.depth(), z_points);
    let psi = z
        .par_iter()
        .map(|&zq| {
            let zn: Vec<f64> = basis.modes().iter().map(|m| m.value(zq)).collect();
            (0..grid.n_points)
                .map(|i| zn.iter().zip(&state.theta).map(|(v, t)| v * t[i]).sum())
                .collect()
        })
        .collect();
    Ok(FieldSnapshot {
        time: state.time,
        x: grid.coordinates(),
        z,
        psi,
    })
}

/// Depth profile at one grid column.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub x_requested: f64,
    /// Abscissa of the nearest grid column (ties go to the left column).
    pub x_used: f64,
    pub column: usize,
    pub z: Vec<f64>,
    pub psi: Vec<f64>,
}

impl CrossSection {
    pub fn to_text(&self, time: f64) -> String {
        let mut out = format!(
            "# cross-section t = {time:.16e}\n# x_requested = {:.16e}, x_used = {:.16e} (nearest grid column {})\n# z\tpsi\n",
            self.x_requested, self.x_used, self.column
        );
        for (z, p) in self.z.iter().zip(&self.psi) {
            let _ = writeln!(out, "{z:.16e}\t{p:.16e}");
        }
        out
    }
}

impl FieldSnapshot {
    pub fn max_abs(&self) -> f64 {
        self.psi.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest `|ψ|` on the two wall rows.
    pub fn wall_max(&self) -> f64 {
        let first = self.psi.first().into_iter().flatten();
        let last = self.psi.last().into_iter().flatten();
        first.chain(last).fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `ψ(·, x)` at the grid column nearest to `x_fixed`.
    pub fn cross_section(&self, x_fixed: f64) -> Result<CrossSection> {
        let (lo, hi) = match (self.x.first(), self.x.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Shape("snapshot has no columns".into())),
        };
        if !(x_fixed >= lo && x_fixed <= hi) {
            return Err(Error::Parameter(format!(
                "x = {x_fixed} outside the domain [{lo}, {hi}]"
            )));
        }
        let mut column = 0;
        for (i, &x) in self.x.iter().enumerate() {
            if (x - x_fixed).abs() < (self.x[column] - x_fixed).abs() {
                column = i;
            }
        }
        Ok(CrossSection {
            x_requested: x_fixed,
            x_used: self.x[column],
            column,
            z: self.z.clone(),
            psi: self.psi.iter().map(|row| row[column]).collect(),
        })
    }

    /// Rows with `z ≥ depth / 2`.
    pub fn upper_half(&self) -> FieldSnapshot {
        let depth = self.z.last().copied().unwrap_or(0.0);
        let keep: Vec<usize> = (0..self.z.len()).filter(|&q| self.z[q] >= depth / 2.0).collect();
        FieldSnapshot {
            time: self.time,
            x: self.x.clone(),
            z: keep.iter().map(|&q| self.z[q]).collect(),
            psi: keep.iter().map(|&q| self.psi[q].clone()).collect(),
        }
    }

    /// Matrix block: a header row of `x`, then one row per depth led by `z`.
    pub fn grid_text(&self) -> String {
        let mut out = format!(
            "# psi(z, x), t = {:.16e}\n# first row: x; first column: z\n",
            self.time
        );
        out.push_str("z\\x");
        for x in &self.x {
            let _ = write!(out, "\t{x:.16e}");
        }
        out.push('\n');
        for (z, row) in self.z.iter().zip(&self.psi) {
            let _ = write!(out, "{z:.16e}");
            for v in row {
                let _ = write!(out, "\t{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// `(x, z, ψ)` triples, `x` outermost; blank line between `x` blocks.
    pub fn column_text(&self) -> String {
        let mut out = format!("# psi(z, x), t = {:.16e}\n# x\tz\tpsi\n", self.time);
        for (i, x) in self.x.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for (z, row) in self.z.iter().zip(&self.psi) {
                let _ = writeln!(out, "{x:.16e}\t{z:.16e}\t{:.16e}", row[i]);
            }
        }
        out
    }

    pub fn export(&self, path: &Path, format: FieldFormat) -> Result<()> {
        let text = match format {
            FieldFormat::GridText => self.grid_text(),
            FieldFormat::ColumnText => self.column_text(),
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: &Path, format: FieldFormat) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = match format {
            FieldFormat::GridText => parse_grid_text(&text),
            FieldFormat::ColumnText => parse_column_text(&text),
        };
        parsed.map_err(|reason| Error::Parse {
            path: path.to_path_buf(),
            reason,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    GridText,
    ColumnText,
}

fn parse_time(text: &str) -> std::result::Result<f64, String> {
    let first = text.lines().next().ok_or("empty file")?;
    let t = first.rsplit("t = ").next().ok_or("missing time header")?;
    t.trim().parse().map_err(|e| format!("bad time '{t}': {e}"))
}

fn parse_f64(s: &str, line: usize) -> std::result::Result<f64, String> {
    s.parse().map_err(|e| format!("line {line}: bad number '{s}': {e}"))
}

fn parse_grid_text(text: &str) -> std::result::Result<FieldSnapshot, String> {
    let time = parse_time(text)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (ln, head) = lines.next().ok_or("missing x header row")?;
    let x = head
        .split('\t')
        .skip(1)
        .map(|s| parse_f64(s, ln + 1))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut z = Vec::new();
    let mut psi = Vec::new();
    for (ln, line) in lines {
        let mut cells = line.split('\t');
        z.push(parse_f64(cells.next().unwrap_or(""), ln + 1)?);
        let row = cells
            .map(|s| parse_f64(s, ln + 1))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if row.len() != x.len() {
            return Err(format!("line {}: {} values for {} columns", ln + 1, row.len(), x.len()));
        }
        psi.push(row);
    }
    Ok(FieldSnapshot { time, x, z, psi })
}

fn parse_column_text(text: &str) -> std::result::Result<FieldSnapshot, String> {
    let time = parse_time(text)?;
    let mut x: Vec<f64> = Vec::new();
    let mut z: Vec<f64> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 3 {
            return Err(format!("line {}: expected 3 columns, got {}", ln + 1, cells.len()));
        }
        let (xv, zv, pv) = (parse_f64(cells[0], ln + 1)?, parse_f64(cells[1], ln + 1)?, parse_f64(cells[2], ln + 1)?);
        if x.last() != Some(&xv) {
            x.push(xv);
            columns.push(Vec::new());
        }
        let first = columns.len() == 1;
        let col = columns.last_mut().expect("column pushed above");
        if first {
            z.push(zv);
        } else if z.get(col.len()) != Some(&zv) {
            return Err(format!("line {}: depth {zv} out of order", ln + 1));
        }
        col.push(pv);
    }
    if columns.iter().any(|c| c.len() != z.len()) {
        return Err("ragged column blocks".into());
    }
    let psi = (0..z.len()).map(|q| columns.iter().map(|c| c[q]).collect()).collect();
    Ok(FieldSnapshot { time, x, z, psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal_basis::Stratification;

    fn basis(modes: &[u32]) -> ModeBasis {
        ModeBasis::constant_n(Stratification::new(1.23, 0.25).unwrap(), modes).unwrap()
    }

    #[test]
    fn separable_single_mode() {
        let b = basis(&[2]);
        let grid = Grid::new(0.0, 0.1, 8).unwrap();
        let s = ModeState::new(0.0, vec![2], vec![vec![1.0; 8]]).unwrap();
        let f = synthesize(&b, &s, &grid, 33).unwrap();
        let m = b.mode(2).unwrap();
        for (z, row) in f.z.iter().zip(&f.psi) {
            for v in row {
                assert_eq!(*v, m.value(*z));
            }
        }
        assert_eq!(f.wall_max(), 0.0);
        let cs = f.cross_section(0.33).unwrap();
        assert_eq!(cs.column, 3);
        assert_eq!(cs.x_used, grid.x(3));
        assert!(f.cross_section(5.0).is_err());
    }

    #[test]
    fn mismatched_modes_rejected() {
        let b = basis(&[2, 4]);
        let grid = Grid::new(0.0, 0.1, 8).unwrap();
        let s = ModeState::zeros(&[2], 8);
        assert!(matches!(synthesize(&b, &s, &grid, 9), Err(Error::ModeMismatch { .. })));
        let s = ModeState::zeros(&[2, 4], 8);
        assert!(synthesize(&b, &s, &grid, 1).is_err());
    }

    #[test]
    fn zero_field_column_text_has_four_rows() {
        let f = FieldSnapshot {
            time: 0.0,
            x: vec![0.0, 1.0],
            z: vec![0.0, 1.0],
            psi: vec![vec![0.0; 2]; 2],
        };
        let rows = f
            .column_text()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .count();
        assert_eq!(rows, 4);
    }

    #[test]
    fn upper_half_keeps_top_rows() {
        let b = basis(&[2, 4]);
        let grid = Grid::new(0.0, 0.1, 8).unwrap();
        let s = ModeState::new(0.0, vec![2, 4], vec![vec![1.0; 8], vec![0.5; 8]]).unwrap();
        let f = synthesize(&b, &s, &grid, 9).unwrap();
        let u = f.upper_half();
        assert_eq!(u.z.len(), 5);
        assert_eq!(u.z[0], 0.125);
        assert_eq!(*u.z.last().unwrap(), 0.25);
        assert_eq!(u.psi.last(), f.psi.last());
    }
}
