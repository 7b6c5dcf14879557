//! Soliton counts of a released pulse: predicted from the bound states of
//! the associated Schrödinger operator, detected from crests of a run.
//!
//! With `u = gθ/(6d)` the single-mode equation becomes the canonical
//! `u_s + 6uu_x + u_xxx = 0` (moving frame, `s = dt`). Each bound state
//! `−κ²` of `−ψ'' − u₀ψ` becomes a soliton of amplitude `2κ²` in `u`,
//! i.e. `12dκ²/g` in `θ`.

use crate::coeff_engine::CoefficientSet;
use crate::error::{Error, Result};
use crate::solver::{Grid, Integrator, ModeState, SchemeParams};

pub const MIN_ORACLE_POINTS: usize = 4096;
pub const MIN_ORACLE_WIDTHS: f64 = 20.0;

/// Number of eigenvalues of the symmetric tridiagonal matrix (`diag`,
/// `off`) below `sigma`, from the signs of the `LDLᵀ` pivots.
pub fn sturm_count(diag: &[f64], off: &[f64], sigma: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - sigma - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + sigma.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues below 0, ascending, each bisected to `tol`.
pub fn negative_eigenvalues(diag: &[f64], off: &[f64], tol: f64) -> Vec<f64> {
    let count = sturm_count(diag, off, 0.0);
    let lower = diag
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = off.get(i).map_or(0.0, |b| b.abs());
            a - left - right
        })
        .fold(0.0, f64::min);
    (0..count)
        .map(|k| {
            let (mut lo, mut hi) = (lower - 1.0, 0.0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if sturm_count(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Bound states of the scattering problem for one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSpectrum {
    /// Eigenvalues `−κ²` in units of `x` (ascending).
    pub eigenvalues: Vec<f64>,
    /// Soliton amplitudes `12dκ²/g`, largest first.
    pub amplitudes: Vec<f64>,
}

impl ScatteringSpectrum {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Bound states of `−ψ'' − (g/(6d)) θ₀(x) ψ` with `θ₀(x) = profile(x)`.
/// The operator is rescaled by `width` to canonical form and discretised on
/// `points` interior nodes over `widths` pulse widths centred at `center`,
/// with Dirichlet ends.
pub fn scattering_spectrum(
    profile: impl Fn(f64) -> f64,
    center: f64,
    width: f64,
    g: f64,
    d: f64,
    points: usize,
    widths: f64,
) -> Result<ScatteringSpectrum> {
    if points < MIN_ORACLE_POINTS || widths < MIN_ORACLE_WIDTHS {
        return Err(Error::Parameter(format!(
            "scattering oracle needs at least {MIN_ORACLE_POINTS} points over {MIN_ORACLE_WIDTHS} widths"
        )));
    }
    if !(width > 0.0 && d != 0.0) {
        return Err(Error::Parameter("pulse width and d must be nonzero".into()));
    }
    let step = widths / (points + 1) as f64;
    let scale = g / (6.0 * d) * width * width;
    let inv = 1.0 / (step * step);
    let diag: Vec<f64> = (1..=points)
        .map(|i| {
            let xi = -widths / 2.0 + i as f64 * step;
            2.0 * inv - scale * profile(center + width * xi)
        })
        .collect();
    let off = vec![-inv; points - 1];
    let canonical = negative_eigenvalues(&diag, &off, 1e-12);
    let eigenvalues: Vec<f64> = canonical.iter().map(|l| l / (width * width)).collect();
    let amplitudes = eigenvalues.iter().map(|l| 12.0 * d * (-l) / g).collect();
    Ok(ScatteringSpectrum {
        eigenvalues,
        amplitudes,
    })
}

/// Crest of a persistent, faster-than-linear wave at the last snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Crest {
    pub x: f64,
    pub amplitude: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrestDetector {
    /// Crest must exceed this fraction of the snapshot maximum.
    pub relative_threshold: f64,
    /// Number of trailing snapshots a crest must appear in.
    pub persistence: usize,
    /// Crests must move faster than this (the linear speed `c`).
    pub linear_speed: f64,
}

impl CrestDetector {
    pub fn new(linear_speed: f64) -> Self {
        CrestDetector {
            relative_threshold: 0.05,
            persistence: 3,
            linear_speed,
        }
    }

    /// Local maxima above the threshold, with parabolic sub-grid position.
    fn crests(&self, values: &[f64], grid: &Grid) -> Vec<(f64, f64)> {
        let n = values.len();
        let peak = values.iter().fold(0.0f64, |a, v| a.max(*v));
        if peak <= 0.0 {
            return Vec::new();
        }
        let floor = self.relative_threshold * peak;
        (0..n)
            .filter_map(|i| {
                let (l, c, r) = (values[(i + n - 1) % n], values[i], values[(i + 1) % n]);
                if c > floor && c > l && c >= r {
                    let curv = l - 2.0 * c + r;
                    let shift = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
                    Some((grid.x(i) + shift * grid.dx, c))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Crests of the last snapshot traced back through the previous
    /// `persistence − 1` snapshots by nearest periodic distance, kept if
    /// every leg moves faster than the linear speed. Largest first.
    pub fn detect(&self, snapshots: &[(f64, Vec<f64>)], grid: &Grid) -> Vec<Crest> {
        let k = self.persistence.max(1);
        if snapshots.len() < k {
            return Vec::new();
        }
        let tail = &snapshots[snapshots.len() - k..];
        let found: Vec<Vec<(f64, f64)>> = tail.iter().map(|(_, v)| self.crests(v, grid)).collect();
        let period = grid.length();
        let wrap = |dx: f64| dx - period * (dx / period).round();
        let mut out = Vec::new();
        'crest: for &(x_last, amp) in &found[k - 1] {
            let mut x = x_last;
            let mut speed = f64::INFINITY;
            for j in (0..k - 1).rev() {
                let dt = tail[j + 1].0 - tail[j].0;
                let prev = found[j]
                    .iter()
                    .min_by(|a, b| wrap(x - a.0).abs().total_cmp(&wrap(x - b.0).abs()));
                let Some(&(xp, _)) = prev else { continue 'crest };
                let v = wrap(x - xp) / dt;
                if !(v > self.linear_speed) {
                    continue 'crest;
                }
                speed = speed.min(v);
                x = xp;
            }
            out.push(Crest {
                x: x_last,
                amplitude: amp,
                speed: if k == 1 { f64::NAN } else { speed },
            });
        }
        out.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    /// `A sech(x/W)`.
    Sech,
    /// `A sech²(x/W)`.
    Sech2,
}

/// Released pulse and single-mode run settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FissionSetup {
    pub amplitude: f64,
    pub width: f64,
    pub shape: PulseShape,
    pub center: f64,
    pub c: f64,
    pub g: f64,
    pub d: f64,
    pub length: f64,
    pub h: f64,
    pub t_end: f64,
    /// Spacing of the trailing snapshots used by the detector.
    pub snapshot_spacing: f64,
    /// Target `ω_max τ`.
    pub courant: f64,
}

impl FissionSetup {
    /// `u₀ = strength · sech²(x)` in canonical units (`g = 6, d = 1`).
    /// Strength `N(N+1)` is reflectionless and yields exactly `N` solitons.
    pub fn canonical(strength: f64) -> Self {
        FissionSetup {
            amplitude: strength,
            width: 1.0,
            shape: PulseShape::Sech2,
            center: -25.0,
            c: 0.0,
            g: 6.0,
            d: 1.0,
            length: 80.0,
            h: 0.05,
            t_end: 2.0,
            snapshot_spacing: 0.1,
            courant: 0.1,
        }
    }

    pub fn profile(&self, x: f64) -> f64 {
        let s = 1.0 / ((x - self.center) / self.width).cosh();
        match self.shape {
            PulseShape::Sech => self.amplitude * s,
            PulseShape::Sech2 => self.amplitude * s * s,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::centered(self.length, (self.length / self.h).round() as usize)
    }

    fn tau(&self) -> f64 {
        let h = self.h;
        let omega = self.c.abs() / h + 2.6 * self.d.abs() / h.powi(3) + (self.g * self.amplitude).abs() * 2.0 / h;
        let raw = self.courant / omega;
        // Land exactly on the snapshot times.
        let per = (self.snapshot_spacing / raw).ceil();
        self.snapshot_spacing / per
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FissionReport {
    pub initial_amplitude: f64,
    pub initial_width: f64,
    pub spectrum: ScatteringSpectrum,
    pub detected: Vec<Crest>,
}

impl FissionReport {
    pub fn predicted(&self) -> usize {
        self.spectrum.count()
    }

    pub fn detected_count(&self) -> usize {
        self.detected.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# initial amplitude {:.16e}, width {:.16e}\n# predicted solitons: {}\n",
            self.initial_amplitude,
            self.initial_width,
            self.predicted()
        );
        for (l, a) in self.spectrum.eigenvalues.iter().zip(&self.spectrum.amplitudes) {
            out.push_str(&format!("predicted\teigenvalue\t{l:.16e}\tamplitude\t{a:.16e}\n"));
        }
        out.push_str(&format!("# detected solitons: {}\n", self.detected_count()));
        for c in &self.detected {
            out.push_str(&format!(
                "detected\tx\t{:.16e}\tamplitude\t{:.16e}\tspeed\t{:.16e}\n",
                c.x, c.amplitude, c.speed
            ));
        }
        out
    }
}

/// Predicts the soliton count from the scattering oracle and counts the
/// crests of a two-stage run.
pub fn fission_census(setup: &FissionSetup, detector: &CrestDetector) -> Result<FissionReport> {
    let spectrum = scattering_spectrum(|x| setup.profile(x), setup.center, setup.width, setup.g, setup.d, 8192, 40.0)?;
    let grid = setup.grid()?;
    let coeffs = CoefficientSet::single_mode(setup.c, setup.g, setup.d);
    let tau = setup.tau();
    let every = (setup.snapshot_spacing / tau).round() as u64;
    let init = ModeState::new(0.0, vec![1], vec![grid.sample(|x| setup.profile(x))])?;
    let params = SchemeParams::two_stage(tau).with_snapshots(every);
    let mut snaps: Vec<(f64, Vec<f64>)> = Vec::new();
    let keep = detector.persistence.max(1);
    let mut observer = |_: u64, s: &ModeState| {
        snaps.push((s.time, s.theta[0].clone()));
        if snaps.len() > keep {
            snaps.remove(0);
        }
    };
    Integrator::new(&coeffs, grid).advance(&init, &params, setup.t_end, &mut observer)?;
    Ok(FissionReport {
        initial_amplitude: setup.amplitude,
        initial_width: setup.width,
        spectrum,
        detected: detector.detect(&snaps, &grid),
    })
}
