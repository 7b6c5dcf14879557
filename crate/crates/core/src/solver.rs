//! Finite-difference integration of the coupled KdV system on a periodic
//! uniform grid.
//!
//! With `D₀u_i = (u_{i+1} − u_{i−1}) / 2h` and
//! `D₃u_i = (u_{i+2} − 2u_{i+1} + 2u_{i−1} − u_{i−2}) / 2h³`, the spatial
//! operator of mode `n` is
//!
//! ```text
//! Rⁿ(θ) = c_n D₀θⁿ + σ Σ_{m,k} gⁿ_{m,k} θᵐ D₀θᵏ + e_n D₃θⁿ
//! ```
//!
//! The two-stage scheme evaluates `θ^{j+½} = θ^j − (τ/2) R(θ^j)` and then
//! `θ^{j+1} = θ^j − τ R(θ^{j+½})`, with `e_n = β²d_n − c_n h²/6` in both
//! stages by default. The `−c_n h²/6` term cancels the leading truncation
//! error of the centred advection difference. The one-stage scheme is
//! `θ^{j+1} = θ^j − τ R(θ^j)` with `e_n = β²d_n`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coeff_engine::CoefficientSet;
use crate::error::{Error, Result};

/// Uniform periodic grid `x_i = x0 + i·dx`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dx: f64,
    pub n_points: usize,
    pub x0: f64,
}

pub const MIN_POINTS: usize = 8;

impl Grid {
    pub fn new(x0: f64, dx: f64, n_points: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Grid(format!("step must be positive, got {dx}")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::Grid(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        if !x0.is_finite() {
            return Err(Error::Grid("left edge must be finite".into()));
        }
        Ok(Grid { dx, n_points, x0 })
    }

    /// Grid on `[−length/2, length/2)`.
    pub fn centered(length: f64, n_points: usize) -> Result<Self> {
        Grid::new(-length / 2.0, length / n_points as f64, n_points)
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n_points as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_points).map(|i| f(self.x(i))).collect()
    }
}

/// Horizontal amplitudes `θⁿ(x_i)` of every mode at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub time: f64,
    pub modes: Vec<u32>,
    pub theta: Vec<Vec<f64>>,
}

impl ModeState {
    pub fn zeros(modes: &[u32], n_points: usize) -> Self {
        ModeState {
            time: 0.0,
            modes: modes.to_vec(),
            theta: vec![vec![0.0; n_points]; modes.len()],
        }
    }

    pub fn new(time: f64, modes: Vec<u32>, theta: Vec<Vec<f64>>) -> Result<Self> {
        if modes.len() != theta.len() {
            return Err(Error::Shape(format!(
                "{} modes but {} amplitude arrays",
                modes.len(),
                theta.len()
            )));
        }
        if let Some(first) = theta.first() {
            if theta.iter().any(|t| t.len() != first.len()) {
                return Err(Error::Shape("amplitude arrays differ in length".into()));
            }
        }
        Ok(ModeState { time, modes, theta })
    }

    pub fn n_points(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Periodic shift by `cells` grid points to the right.
    pub fn shifted(&self, cells: usize) -> Self {
        let mut out = self.clone();
        for t in &mut out.theta {
            let n = t.len();
            if n > 0 {
                t.rotate_right(cells % n);
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.theta.iter_mut().flatten().for_each(|v| *v *= factor);
        out
    }

    /// `Σ_i θⁿ_i h` per mode.
    pub fn mass(&self, grid: &Grid) -> Vec<f64> {
        self.theta.iter().map(|t| t.iter().sum::<f64>() * grid.dx).collect()
    }

    /// `Σ_i (θⁿ_i)² h` per mode.
    pub fn energy(&self, grid: &Grid) -> Vec<f64> {
        self.theta
            .iter()
            .map(|t| t.iter().map(|v| v * v).sum::<f64>() * grid.dx)
            .collect()
    }

    fn check_against(&self, coeffs: &CoefficientSet, grid: &Grid) -> Result<()> {
        if self.modes != coeffs.modes {
            return Err(Error::ModeMismatch {
                expected: coeffs.modes.clone(),
                found: self.modes.clone(),
            });
        }
        if self.theta.iter().any(|t| t.len() != grid.n_points) {
            return Err(Error::Shape(format!(
                "state arrays do not have the grid's {} points",
                grid.n_points
            )));
        }
        Ok(())
    }
}

/// `(Σ_n Σ_i (a − b)² h)^½`.
pub fn discrete_l2_norm(a: &ModeState, b: &ModeState, grid: &Grid) -> Result<f64> {
    if a.theta.len() != b.theta.len()
        || a.theta.iter().zip(&b.theta).any(|(x, y)| x.len() != y.len())
    {
        return Err(Error::Shape("states have different shapes".into()));
    }
    let sum: f64 = a
        .theta
        .iter()
        .zip(&b.theta)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)))
        .sum();
    Ok((sum * grid.dx).sqrt())
}

/// `(Σ_n Σ_i θ² h)^½`.
pub fn discrete_l2(a: &ModeState, grid: &Grid) -> f64 {
    (a.energy(grid).iter().sum::<f64>()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TwoStage,
    OneStage,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::TwoStage => "two-stage",
            Scheme::OneStage => "one-stage",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-stage" => Ok(Scheme::TwoStage),
            "one-stage" => Ok(Scheme::OneStage),
            other => Err(Error::Parameter(format!(
                "unknown scheme '{other}' (expected two-stage or one-stage)"
            ))),
        }
    }
}

/// Dispersion coefficient used by one stage of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageDispersion {
    /// `β²d_n − c_n h²/6`.
    Modified,
    /// `β²d_n`.
    Plain,
}

impl StageDispersion {
    #[inline]
    fn coefficient(self, coeffs: &CoefficientSet, mode: usize, dx: f64) -> f64 {
        let d = coeffs.beta2 * coeffs.d[mode];
        match self {
            StageDispersion::Modified => d - coeffs.phase_speeds[mode] * dx * dx / 6.0,
            StageDispersion::Plain => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub tau: f64,
    pub scheme: Scheme,
    /// Constant `b` of the step conditions `τ ≤ b h⁴` (two-stage) and
    /// `τ ≤ b h⁶` (one-stage). Exceeding it only produces a warning.
    pub stability_margin: f64,
    pub half_step_dispersion: StageDispersion,
    pub full_step_dispersion: StageDispersion,
    pub one_stage_dispersion: StageDispersion,
    /// Observer/report cadence in steps; 0 reports only the end points.
    pub snapshot_every: u64,
}

impl SchemeParams {
    pub fn new(tau: f64, scheme: Scheme) -> Self {
        SchemeParams {
            tau,
            scheme,
            stability_margin: 1.0,
            half_step_dispersion: StageDispersion::Modified,
            full_step_dispersion: StageDispersion::Modified,
            one_stage_dispersion: StageDispersion::Plain,
            snapshot_every: 0,
        }
    }

    pub fn two_stage(tau: f64) -> Self {
        SchemeParams::new(tau, Scheme::TwoStage)
    }

    pub fn one_stage(tau: f64) -> Self {
        SchemeParams::new(tau, Scheme::OneStage)
    }

    pub fn with_margin(mut self, b: f64) -> Self {
        self.stability_margin = b;
        self
    }

    pub fn with_snapshots(mut self, every: u64) -> Self {
        self.snapshot_every = every;
        self
    }

    /// Largest step the margin policy allows on `grid`.
    pub fn step_limit(&self, grid: &Grid) -> f64 {
        let power = match self.scheme {
            Scheme::TwoStage => 4,
            Scheme::OneStage => 6,
        };
        self.stability_margin * grid.dx.powi(power)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Parameter(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// `b·h⁴` for the two-stage scheme, `b·h⁶` for the one-stage scheme.
pub fn suggest_timestep(grid: &Grid, params: &SchemeParams) -> f64 {
    params.step_limit(grid)
}

/// Receives the state at the configured step cadence.
pub trait Observer {
    fn observe(&mut self, step: u64, state: &ModeState);
}

impl<F: FnMut(u64, &ModeState)> Observer for F {
    fn observe(&mut self, step: u64, state: &ModeState) {
        self(step, state)
    }
}

/// Discrete mass and energy of every mode at one reported step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservedSample {
    pub step: u64,
    pub time: f64,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_abs: f64,
}

impl ConservedSample {
    fn of(step: u64, state: &ModeState, grid: &Grid) -> Self {
        ConservedSample {
            step,
            time: state.time,
            mass: state.mass(grid),
            energy: state.energy(grid),
            max_abs: state.max_abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scheme: Scheme,
    pub tau: f64,
    pub steps: u64,
    pub start_time: f64,
    pub final_time: f64,
    pub samples: Vec<ConservedSample>,
    pub stability_warning: Option<String>,
    /// Seconds spent stepping; informational only.
    pub wall_time: f64,
}

/// Holds the coefficient set, grid and scratch buffers for repeated steps.
pub struct Integrator<'a> {
    coeffs: &'a CoefficientSet,
    grid: Grid,
    terms: Vec<(usize, usize, usize, f64)>,
    slopes: Vec<Vec<f64>>,
    rhs: Vec<Vec<f64>>,
    stage: Vec<Vec<f64>>,
}

impl<'a> Integrator<'a> {
    pub fn new(coeffs: &'a CoefficientSet, grid: Grid) -> Self {
        let l = coeffs.len();
        let n = grid.n_points;
        Integrator {
            coeffs,
            grid,
            terms: coeffs.nonzero_terms(),
            slopes: vec![vec![0.0; n]; l],
            rhs: vec![vec![0.0; n]; l],
            stage: vec![vec![0.0; n]; l],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Fills `self.rhs` with `R(theta)`.
    fn evaluate(&mut self, theta: &[Vec<f64>], dispersion: StageDispersion) {
        let n = self.grid.n_points;
        let dx = self.grid.dx;
        let inv2h = 1.0 / (2.0 * dx);
        let inv2h3 = 1.0 / (2.0 * dx * dx * dx);
        let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
        for (u, s) in theta.iter().zip(self.slopes.iter_mut()) {
            for (i, w) in u.windows(3).enumerate() {
                s[i + 1] = (w[2] - w[0]) * inv2h;
            }
            s[0] = (u[1] - u[n - 1]) * inv2h;
            s[n - 1] = (u[0] - u[n - 2]) * inv2h;
        }
        for (mode, (u, r)) in theta.iter().zip(self.rhs.iter_mut()).enumerate() {
            let c = self.coeffs.phase_speeds[mode];
            let e = dispersion.coefficient(self.coeffs, mode, dx) * inv2h3;
            let s = &self.slopes[mode];
            for (i, w) in u.windows(5).enumerate() {
                let d3 = w[4] - 2.0 * w[3] + 2.0 * w[1] - w[0];
                r[i + 2] = c * s[i + 2] + e * d3;
            }
            for i in [0, 1, n - 2, n - 1] {
                let at = |o: isize| u[wrap(i as isize + o)];
                let d3 = at(2) - 2.0 * at(1) + 2.0 * at(-1) - at(-2);
                r[i] = c * s[i] + e * d3;
            }
        }
        for &(nn, m, k, g) in &self.terms {
            let (um, sk) = (&theta[m], &self.slopes[k]);
            for ((r, a), b) in self.rhs[nn].iter_mut().zip(um).zip(sk) {
                *r += g * a * b;
            }
        }
    }

    /// `out = base − dt·R(eval)`; returns false if anything is non-finite.
    fn update(
        &mut self,
        base: &[Vec<f64>],
        eval: &[Vec<f64>],
        dt: f64,
        dispersion: StageDispersion,
        out: &mut [Vec<f64>],
    ) -> bool {
        self.evaluate(eval, dispersion);
        let mut finite = true;
        for ((o, b), r) in out.iter_mut().zip(base).zip(&self.rhs) {
            for ((o, b), r) in o.iter_mut().zip(b).zip(r) {
                *o = b - dt * r;
                finite &= o.is_finite();
            }
        }
        finite
    }

    fn checked(&self, state: &ModeState) -> Result<()> {
        state.check_against(self.coeffs, &self.grid)
    }

    fn non_finite(step: u64, last: &ModeState) -> Error {
        Error::NonFinite {
            step,
            time: last.time,
            last_finite: Box::new(last.clone()),
        }
    }

    /// First stage: `θ^{j+½} = θ^j − (τ/2) R(θ^j)`.
    pub fn half_step(&mut self, state: &ModeState, tau: f64, dispersion: StageDispersion) -> Result<ModeState> {
        self.checked(state)?;
        let mut out = state.clone();
        if !self.update(&state.theta, &state.theta, 0.5 * tau, dispersion, &mut out.theta) {
            return Err(Self::non_finite(0, state));
        }
        out.time = state.time + 0.5 * tau;
        Ok(out)
    }

    /// Second stage: `θ^{j+1} = θ^j − τ R(θ^{j+½})`.
    pub fn full_step(
        &mut self,
        state: &ModeState,
        half: &ModeState,
        tau: f64,
        dispersion: StageDispersion,
    ) -> Result<ModeState> {
        self.checked(state)?;
        self.checked(half)?;
        let mut out = state.clone();
        if !self.update(&state.theta, &half.theta, tau, dispersion, &mut out.theta) {
            return Err(Self::non_finite(0, state));
        }
        out.time = state.time + tau;
        Ok(out)
    }

    /// Forward step `θ^{j+1} = θ^j − τ R(θ^j)`.
    pub fn one_stage_step(&mut self, state: &ModeState, tau: f64, dispersion: StageDispersion) -> Result<ModeState> {
        self.checked(state)?;
        let mut out = state.clone();
        if !self.update(&state.theta, &state.theta, tau, dispersion, &mut out.theta) {
            return Err(Self::non_finite(0, state));
        }
        out.time = state.time + tau;
        Ok(out)
    }

    /// One full step of `params.scheme`, in place. Leaves `theta` untouched
    /// and returns false when the result is not finite.
    fn step_in_place(&mut self, theta: &mut Vec<Vec<f64>>, next: &mut Vec<Vec<f64>>, params: &SchemeParams) -> bool {
        let tau = params.tau;
        let ok = match params.scheme {
            Scheme::TwoStage => {
                let mut stage = std::mem::take(&mut self.stage);
                let ok = self.update(theta, theta, 0.5 * tau, params.half_step_dispersion, &mut stage)
                    && self.update(theta, &stage, tau, params.full_step_dispersion, next);
                self.stage = stage;
                ok
            }
            Scheme::OneStage => self.update(theta, theta, tau, params.one_stage_dispersion, next),
        };
        if ok {
            std::mem::swap(theta, next);
        }
        ok
    }

    /// Steps until `t_end`, reporting to `observer` at step 0, every
    /// `params.snapshot_every` steps, and at the final step.
    pub fn advance(
        &mut self,
        initial: &ModeState,
        params: &SchemeParams,
        t_end: f64,
        observer: &mut dyn Observer,
    ) -> Result<(ModeState, RunReport)> {
        self.checked(initial)?;
        params.validate()?;
        let t0 = initial.time;
        let span = t_end - t0;
        let steps = if span <= 0.0 {
            0
        } else {
            (span / params.tau - 1e-9).ceil().max(0.0) as u64
        };
        let stability_warning = (params.tau > params.step_limit(&self.grid)).then(|| {
            format!(
                "tau = {:e} exceeds the {} step limit {:e} (b = {})",
                params.tau,
                params.scheme,
                params.step_limit(&self.grid),
                params.stability_margin
            )
        });

        let started = Instant::now();
        let mut state = initial.clone();
        let mut next = state.theta.clone();
        let mut samples = vec![ConservedSample::of(0, &state, &self.grid)];
        observer.observe(0, &state);
        for step in 1..=steps {
            if !self.step_in_place(&mut state.theta, &mut next, params) {
                return Err(Self::non_finite(step, &state));
            }
            state.time = t0 + step as f64 * params.tau;
            let due = params.snapshot_every > 0 && step % params.snapshot_every == 0;
            if due || step == steps {
                samples.push(ConservedSample::of(step, &state, &self.grid));
                observer.observe(step, &state);
            }
        }
        let report = RunReport {
            scheme: params.scheme,
            tau: params.tau,
            steps,
            start_time: t0,
            final_time: state.time,
            samples,
            stability_warning,
            wall_time: started.elapsed().as_secs_f64(),
        };
        Ok((state, report))
    }

    /// [`Integrator::advance`] without an observer.
    pub fn run(&mut self, initial: &ModeState, params: &SchemeParams, t_end: f64) -> Result<(ModeState, RunReport)> {
        self.advance(initial, params, t_end, &mut |_: u64, _: &ModeState| {})
    }

    /// Exactly `steps` steps.
    pub fn run_steps(&mut self, initial: &ModeState, params: &SchemeParams, steps: u64) -> Result<(ModeState, RunReport)> {
        let t_end = initial.time + steps as f64 * params.tau;
        self.run(initial, params, t_end)
    }
}

/// Convenience wrapper around [`Integrator::advance`].
pub fn advance(
    state: &ModeState,
    coeffs: &CoefficientSet,
    grid: Grid,
    params: &SchemeParams,
    t_end: f64,
    observer: &mut dyn Observer,
) -> Result<(ModeState, RunReport)> {
    Integrator::new(coeffs, grid).advance(state, params, t_end, observer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid8() -> Grid {
        Grid::new(0.0, 0.5, 8).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 0.0, 16).is_err());
        assert!(Grid::new(0.0, 0.1, 7).is_err());
        let g = Grid::centered(2.0, 8).unwrap();
        assert_eq!(g.x(0), -1.0);
        assert!((g.length() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_state_stays_zero() {
        let coeffs = CoefficientSet::single_mode(1.0, 3.0, 0.5);
        let mut integ = Integrator::new(&coeffs, grid8());
        let z = ModeState::zeros(&[1], 8);
        let h = integ.half_step(&z, 0.01, StageDispersion::Modified).unwrap();
        assert!(h.theta[0].iter().all(|&v| v == 0.0));
        let f = integ.full_step(&z, &h, 0.01, StageDispersion::Modified).unwrap();
        assert!(f.theta[0].iter().all(|&v| v == 0.0));
        let o = integ.one_stage_step(&z, 0.01, StageDispersion::Plain).unwrap();
        assert!(o.theta[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_state_is_stationary() {
        let coeffs = CoefficientSet::single_mode(2.0, 0.0, 0.3);
        let mut integ = Integrator::new(&coeffs, grid8());
        let s = ModeState::new(0.0, vec![1], vec![vec![1.75; 8]]).unwrap();
        let h = integ.half_step(&s, 0.1, StageDispersion::Modified).unwrap();
        assert_eq!(h.theta, s.theta);
        let f = integ.full_step(&s, &h, 0.1, StageDispersion::Modified).unwrap();
        assert_eq!(f.theta, s.theta);
    }

    #[test]
    fn half_step_reduces_to_centred_advection() {
        // d chosen so that d − c h²/6 = 0 and only c D₀ survives.
        let (c, dx, tau) = (2.0, 0.5, 0.1);
        let coeffs = CoefficientSet::single_mode(c, 0.0, c * dx * dx / 6.0);
        let mut integ = Integrator::new(&coeffs, grid8());
        let u = vec![0.0, 1.0, 4.0, 9.0, 16.0, 9.0, 4.0, 1.0];
        let s = ModeState::new(0.0, vec![1], vec![u]).unwrap();
        let h = integ.half_step(&s, tau, StageDispersion::Modified).unwrap();
        // θ_i − (τ/2)·c·(θ_{i+1} − θ_{i−1})/(2h) = θ_i − 0.1·(θ_{i+1} − θ_{i−1})
        let expected = [
            0.0 - 0.1 * (1.0 - 1.0),
            1.0 - 0.1 * (4.0 - 0.0),
            4.0 - 0.1 * (9.0 - 1.0),
            9.0 - 0.1 * (16.0 - 4.0),
            16.0 - 0.1 * (9.0 - 9.0),
            9.0 - 0.1 * (4.0 - 16.0),
            4.0 - 0.1 * (1.0 - 9.0),
            1.0 - 0.1 * (0.0 - 4.0),
        ];
        for (a, b) in h.theta[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((h.time - 0.05).abs() < 1e-15);
    }

    #[test]
    fn one_stage_equals_uncorrected_half_step_at_half_tau() {
        let coeffs = CoefficientSet::single_mode(0.7, 2.5, 0.2);
        let grid = Grid::new(0.0, 0.3, 16).unwrap();
        let mut integ = Integrator::new(&coeffs, grid);
        let s = ModeState::new(0.0, vec![1], vec![grid.sample(|x| (x * 1.3).sin() + 0.2 * x)]).unwrap();
        let tau = 0.02;
        let h = integ.half_step(&s, tau, StageDispersion::Plain).unwrap();
        let o = integ.one_stage_step(&s, tau / 2.0, StageDispersion::Plain).unwrap();
        assert_eq!(h.theta, o.theta);
    }

    #[test]
    fn advance_to_start_is_identity() {
        let coeffs = CoefficientSet::single_mode(1.0, 1.0, 1.0);
        let grid = grid8();
        let s = ModeState::new(0.25, vec![1], vec![grid.sample(f64::cos)]).unwrap();
        let mut seen = 0;
        let (out, rep) = advance(&s, &coeffs, grid, &SchemeParams::two_stage(1e-3), 0.25, &mut |_: u64, _: &ModeState| seen += 1).unwrap();
        assert_eq!(out, s);
        assert_eq!(rep.steps, 0);
        assert_eq!(seen, 1);
    }

    #[test]
    fn l2_norm_examples() {
        let g = Grid::new(0.0, 0.01, 100).unwrap();
        let a = ModeState::new(0.0, vec![1], vec![vec![1.0; 100]]).unwrap();
        let b = ModeState::zeros(&[1], 100);
        assert_eq!(discrete_l2_norm(&a, &a, &g).unwrap(), 0.0);
        assert!((discrete_l2_norm(&a, &b, &g).unwrap() - 1.0).abs() < 1e-14);
        let g2 = Grid::new(0.0, 0.02, 100).unwrap();
        let ratio = discrete_l2_norm(&a, &b, &g2).unwrap() / discrete_l2_norm(&a, &b, &g).unwrap();
        assert!((ratio - 2f64.sqrt()).abs() < 1e-14);
        let c = ModeState::zeros(&[1, 2], 100);
        assert!(matches!(discrete_l2_norm(&a, &c, &g), Err(Error::Shape(_))));
    }

    #[test]
    fn timestep_suggestions() {
        let g = Grid::new(0.0, 0.01, 100).unwrap();
        let p = SchemeParams::two_stage(1.0);
        assert!((suggest_timestep(&g, &p) - 1e-8).abs() < 1e-22);
        let g2 = Grid::new(0.0, 0.005, 200).unwrap();
        assert!((suggest_timestep(&g, &p) / suggest_timestep(&g2, &p) - 16.0).abs() < 1e-9);
        let p1 = SchemeParams::one_stage(1.0).with_margin(2.0);
        assert!((suggest_timestep(&g, &p1) - 2e-12).abs() < 1e-26);
    }

    #[test]
    fn blow_up_reports_step_and_last_state() {
        let coeffs = CoefficientSet::single_mode(0.0, 0.0, 1.0);
        let grid = Grid::new(0.0, 0.1, 32).unwrap();
        let s = ModeState::new(0.0, vec![1], vec![grid.sample(|x| (x * 20.0).sin())]).unwrap();
        let params = SchemeParams::two_stage(1e-2);
        let err = Integrator::new(&coeffs, grid).run(&s, &params, 100.0).unwrap_err();
        match err {
            Error::NonFinite { step, last_finite, .. } => {
                assert!(step > 1);
                assert!(last_finite.is_finite());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let coeffs = CoefficientSet::single_mode(1.0, 1.0, 1.0);
        let mut integ = Integrator::new(&coeffs, grid8());
        let s = ModeState::zeros(&[2], 8);
        assert!(matches!(integ.half_step(&s, 0.1, StageDispersion::Modified), Err(Error::ModeMismatch { .. })));
    }
}
