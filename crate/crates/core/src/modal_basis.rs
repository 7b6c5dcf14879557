//! Vertical waveguide modes of a constant-N stratified layer.
//!
//! For constant buoyancy frequency the Sturm-Liouville problem
//! `Z'' + (N²/c²) Z = 0`, `Z(0) = Z(h) = 0` has the eigenpairs
//! `Z^n = B sin(nπz/h)`, `c_n = N h / (nπ)`. Modes are normalised under
//! `(f, g) = ∫₀ʰ N² f g dz`, which gives `B = (2 / (N² h))^½` for every `n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Background stratification: buoyancy frequency (1/s) and depth (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    pub buoyancy_frequency: f64,
    pub depth: f64,
}

impl Stratification {
    pub fn new(buoyancy_frequency: f64, depth: f64) -> Result<Self> {
        let s = Stratification {
            buoyancy_frequency,
            depth,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.buoyancy_frequency.is_finite() && self.buoyancy_frequency > 0.0) {
            return Err(Error::Stratification(format!(
                "buoyancy frequency must be positive, got {}",
                self.buoyancy_frequency
            )));
        }
        if !(self.depth.is_finite() && self.depth > 0.0) {
            return Err(Error::Stratification(format!(
                "depth must be positive, got {}",
                self.depth
            )));
        }
        Ok(())
    }

    /// `N²`, the weight of the modal inner product.
    pub fn weight(&self) -> f64 {
        self.buoyancy_frequency * self.buoyancy_frequency
    }
}

/// One vertical mode `Z^n(z) = amplitude · sin(nπz/h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: u32,
    /// Linear long-wave speed `c_n`, m/s.
    pub phase_speed: f64,
    /// Normalisation amplitude `B_n`.
    pub amplitude: f64,
    depth: f64,
}

impl Mode {
    /// Vertical wavenumber `nπ/h`.
    pub fn wavenumber(&self) -> f64 {
        self.index as f64 * PI / self.depth
    }

    /// `Z^n(z)`. Exactly zero at (and outside) the walls.
    pub fn value(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= self.depth {
            return 0.0;
        }
        self.amplitude * (self.wavenumber() * z).sin()
    }

    /// `dZ^n/dz`.
    pub fn slope(&self, z: f64) -> f64 {
        self.amplitude * self.wavenumber() * (self.wavenumber() * z).cos()
    }

    /// `d²Z^n/dz²`.
    pub fn curvature(&self, z: f64) -> f64 {
        let q = self.wavenumber();
        -self.amplitude * q * q * (q * z).sin()
    }
}

/// Orthonormal vertical basis for a chosen list of mode indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    strat: Stratification,
    modes: Vec<Mode>,
}

/// Mode list used by the tank scenario: the first five modes that the
/// antisymmetric paddle profile excites.
pub const DEFAULT_MODES: [u32; 5] = [2, 4, 6, 8, 10];

pub(crate) fn check_mode_indices(indices: &[u32]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::ModeList("mode list is empty".into()));
    }
    for (pos, &n) in indices.iter().enumerate() {
        if n == 0 {
            return Err(Error::ModeList("mode indices must be >= 1".into()));
        }
        if indices[..pos].contains(&n) {
            return Err(Error::ModeList(format!("mode {n} listed twice")));
        }
    }
    Ok(())
}

impl ModeBasis {
    /// Closed-form basis for constant `N`.
    pub fn constant_n(strat: Stratification, mode_indices: &[u32]) -> Result<Self> {
        strat.validate()?;
        check_mode_indices(mode_indices)?;
        let amplitude = (2.0 / (strat.weight() * strat.depth)).sqrt();
        let modes = mode_indices
            .iter()
            .map(|&n| Mode {
                index: n,
                phase_speed: strat.buoyancy_frequency * strat.depth / (n as f64 * PI),
                amplitude,
                depth: strat.depth,
            })
            .collect();
        Ok(ModeBasis { strat, modes })
    }

    pub fn stratification(&self) -> Stratification {
        self.strat
    }

    pub fn depth(&self) -> f64 {
        self.strat.depth
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn indices(&self) -> Vec<u32> {
        self.modes.iter().map(|m| m.index).collect()
    }

    pub fn phase_speeds(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.phase_speed).collect()
    }

    pub fn mode(&self, index: u32) -> Option<&Mode> {
        self.modes.iter().find(|m| m.index == index)
    }

    /// `Σ_n coeffs[n] Z^n(z)`.
    pub fn synthesize_at(&self, coeffs: &[f64], z: f64) -> f64 {
        self.modes
            .iter()
            .zip(coeffs)
            .map(|(m, a)| a * m.value(z))
            .sum()
    }

    /// Rebuilds a depth profile from modal coefficients.
    pub fn synthesize<'a>(&'a self, coeffs: &'a [f64]) -> impl Fn(f64) -> f64 + 'a {
        move |z| self.synthesize_at(coeffs, z)
    }

    /// `G[j][n] = (Z^j, Z^n)` by quadrature.
    pub fn gram(&self, quad_points: usize) -> Vec<Vec<f64>> {
        self.modes
            .iter()
            .map(|a| {
                self.modes
                    .iter()
                    .map(|b| weighted_inner_product(|z| a.value(z), |z| b.value(z), &self.strat, quad_points))
                    .collect()
            })
            .collect()
    }

    /// `max |G − I|` over the Gram matrix.
    pub fn orthonormality_defect(&self, quad_points: usize) -> f64 {
        self.gram(quad_points)
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(n, v)| (v - if j == n { 1.0 } else { 0.0 }).abs()))
            .fold(0.0, f64::max)
    }

    /// Tab-separated `(n, c_n, B_n)` summary with 17 significant digits.
    pub fn summary_table(&self) -> String {
        let mut out = String::from("# n\tc_n [m/s]\tB_n\n");
        for m in &self.modes {
            out.push_str(&format!(
                "{}\t{:.16e}\t{:.16e}\n",
                m.index, m.phase_speed, m.amplitude
            ));
        }
        out
    }
}

/// `∫₀ʰ N² f(z) g(z) dz` by composite Simpson on `quad_points` nodes
/// (rounded up to an odd count, minimum 17).
pub fn weighted_inner_product<F, G>(f: F, g: G, strat: &Stratification, quad_points: usize) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let w = strat.weight();
    quadrature::simpson(|z| w * f(z) * g(z), 0.0, strat.depth, quad_points)
}

/// Modal coefficients of a depth profile plus the energy it leaves outside
/// the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub modes: Vec<u32>,
    pub coefficients: Vec<f64>,
    /// `(φ, φ)` under the weighted inner product.
    pub profile_energy: f64,
    /// `Σ coeff²`.
    pub captured_energy: f64,
}

impl Projection {
    /// `Σ coeff² / (φ, φ)`; at most 1 by Bessel's inequality.
    pub fn captured_fraction(&self) -> f64 {
        if self.profile_energy == 0.0 {
            1.0
        } else {
            self.captured_energy / self.profile_energy
        }
    }

    /// `1 − Σ coeff² / (φ, φ)`.
    pub fn residual_fraction(&self) -> f64 {
        1.0 - self.captured_fraction()
    }
}

/// Projects `profile` on every basis mode with the default quadrature.
pub fn project_profile<F: Fn(f64) -> f64>(profile: F, basis: &ModeBasis) -> Projection {
    project_profile_with(profile, basis, quadrature::DEFAULT_POINTS)
}

pub fn project_profile_with<F: Fn(f64) -> f64>(
    profile: F,
    basis: &ModeBasis,
    quad_points: usize,
) -> Projection {
    let strat = basis.stratification();
    let p = quadrature::simpson_nodes(quad_points);
    let dz = strat.depth / (p - 1) as f64;
    // Sample once, reuse for every mode.
    let samples: Vec<f64> = (0..p).map(|i| profile(i as f64 * dz)).collect();
    let w = quadrature::simpson_weights(p, strat.depth);
    let weight = strat.weight();
    let coefficients: Vec<f64> = basis
        .modes()
        .iter()
        .map(|m| {
            samples
                .iter()
                .zip(&w)
                .enumerate()
                .map(|(i, (f, wi))| wi * weight * m.value(i as f64 * dz) * f)
                .sum()
        })
        .collect();
    let profile_energy: f64 = samples
        .iter()
        .zip(&w)
        .map(|(f, wi)| wi * weight * f * f)
        .sum();
    let captured_energy = coefficients.iter().map(|c| c * c).sum();
    Projection {
        modes: basis.indices(),
        coefficients,
        profile_energy,
        captured_energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tank() -> Stratification {
        Stratification::new(1.23, 0.25).unwrap()
    }

    #[test]
    fn phase_speeds_and_amplitude() {
        let basis = ModeBasis::constant_n(tank(), &[2, 10]).unwrap();
        assert!((basis.modes()[0].phase_speed - 0.048940145000757815).abs() < 1e-15);
        assert!((basis.modes()[1].phase_speed - 0.009788029000151563).abs() < 1e-15);
        for m in basis.modes() {
            assert!((m.amplitude - 2.2995342477611302).abs() < 1e-14);
        }
    }

    #[test]
    fn amplitude_normalises_under_quadrature() {
        // Independent check of B_n: integrate (B sin)² N² with a fine rule.
        let s = tank();
        let basis = ModeBasis::constant_n(s, &[1, 2, 7]).unwrap();
        for m in basis.modes() {
            let v = quadrature::simpson(|z| (m.amplitude * (m.wavenumber() * z).sin()).powi(2) * s.weight(), 0.0, s.depth, 20001);
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn walls_are_exact_zeros() {
        let basis = ModeBasis::constant_n(Stratification::new(0.7, 3.0).unwrap(), &[1, 2, 3, 17]).unwrap();
        for m in basis.modes() {
            assert_eq!(m.value(0.0), 0.0);
            assert_eq!(m.value(3.0), 0.0);
        }
    }

    #[test]
    fn rejects_bad_mode_lists() {
        let s = tank();
        assert!(matches!(ModeBasis::constant_n(s, &[0, 2]), Err(Error::ModeList(_))));
        assert!(matches!(ModeBasis::constant_n(s, &[2, 4, 2]), Err(Error::ModeList(_))));
        assert!(matches!(ModeBasis::constant_n(s, &[]), Err(Error::ModeList(_))));
    }

    #[test]
    fn rejects_bad_stratification() {
        assert!(Stratification::new(0.0, 1.0).is_err());
        assert!(Stratification::new(1.0, -1.0).is_err());
        assert!(Stratification::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let s = tank();
        let basis = ModeBasis::constant_n(s, &[2, 3, 4]).unwrap();
        let z2 = basis.mode(2).unwrap();
        let z3 = basis.mode(3).unwrap();
        let z4 = basis.mode(4).unwrap();
        let one = weighted_inner_product(|z| z2.value(z), |z| z2.value(z), &s, 1025);
        assert!((one - 1.0).abs() < 1e-10);
        let zero = weighted_inner_product(|z| z2.value(z), |z| z4.value(z), &s, 1025);
        assert!(zero.abs() < 1e-10);
        let b = 40.0;
        let z0 = s.depth / 2.0;
        let paddle = |z: f64| (1.0 / (b * (z - z0)).cosh()) * (b * (z - z0)).tanh();
        let odd = weighted_inner_product(|z| z3.value(z), paddle, &s, 1025);
        assert!(odd.abs() < 1e-12, "{odd}");
    }

    #[test]
    fn projection_of_a_mode_is_a_unit_vector() {
        let basis = ModeBasis::constant_n(tank(), &DEFAULT_MODES).unwrap();
        let z2 = *basis.mode(2).unwrap();
        let p = project_profile(|z| z2.value(z), &basis);
        assert!((p.coefficients[0] - 1.0).abs() < 1e-10);
        for c in &p.coefficients[1..] {
            assert!(c.abs() < 1e-10);
        }
        assert!(p.residual_fraction().abs() < 1e-10);
    }

    #[test]
    fn eigen_residual_matches_closed_form() {
        let s = tank();
        let basis = ModeBasis::constant_n(s, &[1, 2, 5, 10]).unwrap();
        for m in basis.modes() {
            let k2 = s.weight() / (m.phase_speed * m.phase_speed);
            for i in 0..=200 {
                let z = s.depth * i as f64 / 200.0;
                let r = m.curvature(z) + k2 * m.amplitude * (m.wavenumber() * z).sin();
                assert!(r.abs() <= 1e-8, "analytic residual {r}");
            }
            // Finite-difference second derivative: error bounded by dz²/12·max|Z''''|.
            let dz = s.depth / 4000.0;
            let bound = dz * dz / 12.0 * m.amplitude * m.wavenumber().powi(4) * 1.01
                + 8.0 * f64::EPSILON * m.amplitude / (dz * dz);
            for i in 1..4000 {
                let z = i as f64 * dz;
                let fd = (m.value(z + dz) - 2.0 * m.value(z) + m.value(z - dz)) / (dz * dz);
                let r = fd + k2 * m.value(z);
                assert!(r.abs() <= bound, "fd residual {r} > {bound}");
            }
        }
    }
}
