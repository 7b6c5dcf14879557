//! Drift of the discrete mass `Σθh` and energy `Σθ²h` along a run.

use crate::solver::ConservedSample;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftPoint {
    pub step: u64,
    pub time: f64,
    /// `M_n(t) − M_n(0)` per mode.
    pub mass_drift: Vec<f64>,
    /// `(E_n(t) − E_n(0)) / E_n(0)` per mode; absolute when `E_n(0) = 0`.
    pub energy_drift: Vec<f64>,
    pub total_mass_drift: f64,
    pub total_energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationAudit {
    pub points: Vec<DriftPoint>,
    /// `max |θ|` over every sample.
    pub max_abs: f64,
}

fn relative(now: f64, start: f64) -> f64 {
    if start == 0.0 {
        now
    } else {
        (now - start) / start
    }
}

pub fn conservation_audit(samples: &[ConservedSample]) -> ConservationAudit {
    let Some(first) = samples.first() else {
        return ConservationAudit {
            points: Vec::new(),
            max_abs: 0.0,
        };
    };
    let m0: f64 = first.mass.iter().sum();
    let e0: f64 = first.energy.iter().sum();
    let points = samples
        .iter()
        .map(|s| DriftPoint {
            step: s.step,
            time: s.time,
            mass_drift: s.mass.iter().zip(&first.mass).map(|(a, b)| a - b).collect(),
            energy_drift: s.energy.iter().zip(&first.energy).map(|(a, b)| relative(*a, *b)).collect(),
            total_mass_drift: s.mass.iter().sum::<f64>() - m0,
            total_energy_drift: relative(s.energy.iter().sum(), e0),
        })
        .collect();
    ConservationAudit {
        points,
        max_abs: samples.iter().map(|s| s.max_abs).fold(0.0, f64::max),
    }
}

impl ConservationAudit {
    pub fn max_mass_drift(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.mass_drift.iter())
            .fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.total_energy_drift.abs())
            .fold(0.0, f64::max)
    }

    pub fn final_energy_drift(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.total_energy_drift)
    }

    pub fn to_text(&self) -> String {
        let modes = self.points.first().map_or(0, |p| p.mass_drift.len());
        let mut out = String::from("# step\ttime\ttotal_mass_drift\ttotal_energy_drift");
        for n in 0..modes {
            out.push_str(&format!("\tmass_drift[{n}]\tenergy_drift[{n}]"));
        }
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{}\t{:.16e}\t{:.16e}\t{:.16e}",
                p.step, p.time, p.total_mass_drift, p.total_energy_drift
            ));
            for (m, e) in p.mass_drift.iter().zip(&p.energy_drift) {
                out.push_str(&format!("\t{m:.16e}\t{e:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff_engine::CoefficientSet;
    use crate::solver::{Grid, Integrator, ModeState, SchemeParams};

    #[test]
    fn zero_state_has_zero_drift() {
        let coeffs = CoefficientSet::single_mode(1.0, 6.0, 1.0);
        let grid = Grid::new(0.0, 0.5, 32).unwrap();
        let z = ModeState::zeros(&[1], 32);
        let (_, rep) = Integrator::new(&coeffs, grid)
            .run(&z, &SchemeParams::two_stage(1e-3).with_snapshots(10), 0.1)
            .unwrap();
        let a = conservation_audit(&rep.samples);
        assert_eq!(a.max_mass_drift(), 0.0);
        assert_eq!(a.max_energy_drift(), 0.0);
        assert_eq!(a.points.len(), 11);
    }

    #[test]
    fn empty_series() {
        let a = conservation_audit(&[]);
        assert!(a.points.is_empty());
        assert_eq!(a.max_mass_drift(), 0.0);
    }
}
