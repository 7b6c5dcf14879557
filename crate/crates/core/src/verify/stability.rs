//! Step-size stability sweeps on a fixed benchmark.
//!
//! A run is unstable if it produces a non-finite value or its discrete
//! energy grows more than tenfold.

use crate::coeff_engine::CoefficientSet;
use crate::error::{Error, Result};
use crate::solver::{Grid, Integrator, ModeState, Scheme, SchemeParams};

pub const ENERGY_BLOWUP: f64 = 10.0;
/// Steps per probe run.
pub const PROBE_STEPS: u64 = 10_000;
pub const DEFAULT_B_VALUES: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Stable,
    NonFinite { step: u64 },
    EnergyBlowUp { ratio: f64 },
}

impl Outcome {
    pub fn is_stable(&self) -> bool {
        matches!(self, Outcome::Stable)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub b: f64,
    pub tau: f64,
    pub outcome: Outcome,
    /// `max E(t) / E(0)` over the run, NaN on blow-up.
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub scheme: Scheme,
    pub h: f64,
    pub steps: u64,
    pub probes: Vec<Probe>,
}

impl StabilityReport {
    pub fn max_stable_b(&self) -> Option<f64> {
        self.probes
            .iter()
            .filter(|p| p.outcome.is_stable())
            .map(|p| p.b)
            .fold(None, |a, b| Some(a.map_or(b, |a: f64| a.max(b))))
    }

    /// True if, sorted by `b`, no stable probe follows an unstable one.
    pub fn is_monotone(&self) -> bool {
        let mut sorted: Vec<&Probe> = self.probes.iter().collect();
        sorted.sort_by(|a, b| a.b.total_cmp(&b.b));
        let first_bad = sorted.iter().position(|p| !p.outcome.is_stable());
        first_bad.is_none_or(|i| sorted[i..].iter().all(|p| !p.outcome.is_stable()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# {} scheme, h = {:.16e}, {} steps per probe\n# b\ttau\tverdict\tenergy_ratio\n",
            self.scheme, self.h, self.steps
        );
        for p in &self.probes {
            let verdict = match &p.outcome {
                Outcome::Stable => "stable".to_string(),
                Outcome::NonFinite { step } => format!("unstable (non-finite at step {step})"),
                Outcome::EnergyBlowUp { ratio } => format!("unstable (energy x{ratio:.3e})"),
            };
            out.push_str(&format!("{:.16e}\t{:.16e}\t{verdict}\t{:.16e}\n", p.b, p.tau, p.energy_ratio));
        }
        match self.max_stable_b() {
            Some(b) => out.push_str(&format!("# largest stable b = {b}\n")),
            None => out.push_str("# no stable b in the sweep\n"),
        }
        out
    }
}

/// Runs `steps` steps with step `tau` and classifies the outcome.
pub fn probe_step(coeffs: &CoefficientSet, grid: Grid, initial: &ModeState, scheme: Scheme, tau: f64, steps: u64) -> Result<(Outcome, f64)> {
    let params = SchemeParams::new(tau, scheme).with_snapshots((steps / 100).max(1));
    let e0: f64 = initial.energy(&grid).iter().sum();
    match Integrator::new(coeffs, grid).run_steps(initial, &params, steps) {
        Ok((_, rep)) => {
            let peak = rep
                .samples
                .iter()
                .map(|s| s.energy.iter().sum::<f64>())
                .fold(0.0, f64::max);
            let ratio = if e0 > 0.0 { peak / e0 } else { 1.0 };
            let outcome = if ratio > ENERGY_BLOWUP {
                Outcome::EnergyBlowUp { ratio }
            } else {
                Outcome::Stable
            };
            Ok((outcome, ratio))
        }
        Err(Error::NonFinite { step, .. }) => Ok((Outcome::NonFinite { step }, f64::NAN)),
        Err(e) => Err(e),
    }
}

/// Sweeps `τ = b·h⁴` (two-stage) or `τ = b·h⁶` (one-stage) over `b_values`.
pub fn stability_probe(
    coeffs: &CoefficientSet,
    grid: Grid,
    initial: &ModeState,
    scheme: Scheme,
    b_values: &[f64],
    steps: u64,
) -> Result<StabilityReport> {
    let mut probes = Vec::with_capacity(b_values.len());
    for &b in b_values {
        let tau = SchemeParams::new(1.0, scheme).with_margin(b).step_limit(&grid);
        let (outcome, energy_ratio) = probe_step(coeffs, grid, initial, scheme, tau, steps)?;
        probes.push(Probe {
            b,
            tau,
            outcome,
            energy_ratio,
        });
    }
    Ok(StabilityReport {
        scheme,
        h: grid.dx,
        steps,
        probes,
    })
}

/// Largest stable step in `[lo, hi]` to relative precision `2^-iterations`,
/// by bisection in `log τ`. Requires `lo` stable and `hi` unstable.
#[allow(clippy::too_many_arguments)]
pub fn threshold_step(
    coeffs: &CoefficientSet,
    grid: Grid,
    initial: &ModeState,
    scheme: Scheme,
    steps: u64,
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
) -> Result<f64> {
    let stable = |tau: f64| probe_step(coeffs, grid, initial, scheme, tau, steps).map(|r| r.0.is_stable());
    if !stable(lo)? || stable(hi)? {
        return Err(Error::Parameter(format!(
            "threshold search needs a stable lower and an unstable upper step, got [{lo:e}, {hi:e}]"
        )));
    }
    for _ in 0..iterations {
        let mid = (lo * hi).sqrt();
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
