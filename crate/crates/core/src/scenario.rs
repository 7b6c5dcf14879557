//! Tank scenario: a released paddle pulse `φ₁(x)·φ₂(z)` projected on the
//! vertical modes, plus the run configuration that goes with it.
//!
//! ```text
//! φ₁(x) = a / cosh(x / l)
//! φ₂(z) = B sech(b(z − z0)) tanh(b(z − z0)),   B = (2 / (N²h))^½
//! θⁿ(x, 0) = (Zⁿ, φ₂) φ₁(x)
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeff_engine::{CoefficientMethod, CoefficientSet};
use crate::error::{Error, Result};
use crate::modal_basis::{self, ModeBasis, Projection, Stratification, DEFAULT_MODES};
use crate::quadrature;
use crate::solver::{Grid, ModeState, Scheme, SchemeParams, StageDispersion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaddleProfile {
    /// Horizontal amplitude `a`.
    pub amplitude: f64,
    /// Horizontal width `l`, m.
    pub width: f64,
    /// Vertical steepness `b`, 1/m.
    pub steepness: f64,
    /// Paddle centre height `z0`, m.
    pub center: f64,
}

impl PaddleProfile {
    /// `φ₁(x) = a sech(x / l)`.
    pub fn horizontal(&self, x: f64) -> f64 {
        self.amplitude / (x / self.width).cosh()
    }

    /// `φ₂(z)` for the given stratification.
    pub fn vertical(&self, strat: &Stratification, z: f64) -> f64 {
        let norm = (2.0 / (strat.weight() * strat.depth)).sqrt();
        let s = self.steepness * (z - self.center);
        norm * s.tanh() / s.cosh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Physical tank length, m.
    pub tank_length: f64,
    /// Domain must span at least `padding` initial pulse widths (`2l`).
    pub padding: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: Scheme,
    pub dt: f64,
    pub stability_margin: f64,
    pub half_step_dispersion: StageDispersion,
    pub full_step_dispersion: StageDispersion,
    pub one_stage_dispersion: StageDispersion,
    /// Nonlinearity scale `σ`.
    pub sigma: f64,
    /// Dispersion scale `β²`.
    pub beta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub modes: Vec<u32>,
    pub t_end: f64,
    pub snapshot_every: u64,
    /// Depth samples of the reconstructed field.
    pub z_points: usize,
    /// Quadrature nodes for inner products and coefficients.
    pub quad_points: usize,
}

/// Complete, self-contained description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub stratification: Stratification,
    pub paddle: PaddleProfile,
    pub grid: GridConfig,
    pub scheme: SchemeConfig,
    pub run: RunConfig,
}

/// One broken rule, named by its dotted config key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Pulse must span this many grid steps.
pub const MIN_CELLS_PER_WIDTH: f64 = 10.0;

impl ScenarioConfig {
    /// Reference tank: `N = 1.23 s⁻¹`, depth 0.25 m, 0.5 m long, modes
    /// 2 to 10. The paddle constants `a`, `l`, `b` and the grid and time
    /// step are not measured values; they are chosen to resolve the pulse
    /// and keep `max|θ²| ≈ 1e-4`.
    pub fn reference_tank() -> Self {
        let depth = 0.25;
        ScenarioConfig {
            stratification: Stratification {
                buoyancy_frequency: 1.23,
                depth,
            },
            paddle: PaddleProfile {
                amplitude: 3.834e-4,
                width: 0.05,
                steepness: 40.0,
                center: depth / 2.0,
            },
            grid: GridConfig {
                tank_length: 0.5,
                padding: 8.0,
                dx: 0.0015625,
            },
            scheme: SchemeConfig {
                kind: Scheme::TwoStage,
                dt: 1e-5,
                stability_margin: 2e6,
                half_step_dispersion: StageDispersion::Modified,
                full_step_dispersion: StageDispersion::Modified,
                one_stage_dispersion: StageDispersion::Plain,
                sigma: 1.0,
                beta2: 1.0,
            },
            run: RunConfig {
                modes: DEFAULT_MODES.to_vec(),
                t_end: 0.02,
                snapshot_every: 200,
                z_points: 129,
                quad_points: quadrature::DEFAULT_POINTS,
            },
        }
    }

    /// `max(tank_length, padding · 2l)`.
    pub fn domain_length(&self) -> f64 {
        self.grid
            .tank_length
            .max(self.grid.padding * 2.0 * self.paddle.width)
    }

    /// Centred periodic grid whose length is the domain length rounded to a
    /// whole number of steps.
    pub fn build_grid(&self) -> Result<Grid> {
        let n = (self.domain_length() / self.grid.dx).round();
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::Grid("domain holds no grid steps".into()));
        }
        let n = n as usize;
        Grid::new(-(n as f64) * self.grid.dx / 2.0, self.grid.dx, n)
    }

    pub fn scheme_params(&self) -> SchemeParams {
        SchemeParams {
            tau: self.scheme.dt,
            scheme: self.scheme.kind,
            stability_margin: self.scheme.stability_margin,
            half_step_dispersion: self.scheme.half_step_dispersion,
            full_step_dispersion: self.scheme.full_step_dispersion,
            one_stage_dispersion: self.scheme.one_stage_dispersion,
            snapshot_every: self.run.snapshot_every,
        }
    }

    pub fn basis(&self) -> Result<ModeBasis> {
        ModeBasis::constant_n(self.stratification, &self.run.modes)
    }

    pub fn coefficients(&self, basis: &ModeBasis) -> CoefficientSet {
        CoefficientSet::from_basis(
            basis,
            CoefficientMethod::Quadrature {
                points: self.run.quad_points,
            },
        )
        .with_scales(self.scheme.sigma, self.scheme.beta2)
    }

    /// Every broken invariant; empty when the config is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &'static str, rule: String| {
            if !ok {
                out.push(Violation { field, rule });
            }
        };
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let s = &self.stratification;
        check(pos(s.buoyancy_frequency), "stratification.buoyancy_frequency", format!("must be positive, got {}", s.buoyancy_frequency));
        check(pos(s.depth), "stratification.depth", format!("must be positive, got {}", s.depth));

        let p = &self.paddle;
        check(p.amplitude.is_finite() && p.amplitude != 0.0, "paddle.amplitude", format!("must be finite and nonzero, got {}", p.amplitude));
        check(pos(p.width), "paddle.width", format!("must be positive, got {}", p.width));
        check(pos(p.steepness), "paddle.steepness", format!("must be positive, got {}", p.steepness));
        check(
            p.center.is_finite() && p.center > 0.0 && p.center < s.depth,
            "paddle.center",
            format!("must lie strictly inside (0, {}), got {}", s.depth, p.center),
        );

        let g = &self.grid;
        check(pos(g.tank_length), "grid.tank_length", format!("must be positive, got {}", g.tank_length));
        check(g.padding.is_finite() && g.padding >= 1.0, "grid.padding", format!("must be at least 1, got {}", g.padding));
        check(pos(g.dx), "grid.dx", format!("must be positive, got {}", g.dx));
        if pos(g.dx) && pos(p.width) {
            check(
                p.width >= MIN_CELLS_PER_WIDTH * g.dx,
                "paddle.width",
                format!(
                    "pulse width {} is under-resolved: need at least {} grid steps of {}",
                    p.width, MIN_CELLS_PER_WIDTH, g.dx
                ),
            );
        }
        if pos(g.dx) && pos(g.tank_length) {
            let n = (self.domain_length() / g.dx).round();
            check(
                n >= crate::solver::MIN_POINTS as f64,
                "grid.dx",
                format!("domain holds {n} points, need at least {}", crate::solver::MIN_POINTS),
            );
        }

        let sc = &self.scheme;
        check(pos(sc.dt), "scheme.dt", format!("must be positive, got {}", sc.dt));
        check(pos(sc.stability_margin), "scheme.stability_margin", format!("must be positive, got {}", sc.stability_margin));
        check(sc.sigma.is_finite(), "scheme.sigma", "must be finite".into());
        check(sc.beta2.is_finite(), "scheme.beta2", "must be finite".into());

        let r = &self.run;
        if let Err(e) = modal_basis::check_mode_indices(&r.modes) {
            check(false, "run.modes", e.to_string());
        }
        check(r.t_end.is_finite() && r.t_end >= 0.0, "run.t_end", format!("must be non-negative, got {}", r.t_end));
        check(r.z_points >= 2, "run.z_points", format!("need at least 2, got {}", r.z_points));
        check(
            r.quad_points >= quadrature::MIN_POINTS,
            "run.quad_points",
            format!("need at least {}, got {}", quadrature::MIN_POINTS, r.quad_points),
        );
        out
    }

    /// `Err(Config)` listing every violation.
    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            let list: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::Config(list.join("; ")))
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Initial modal state together with what the truncation left out.
#[derive(Debug, Clone)]
pub struct InitialCondition {
    pub state: ModeState,
    pub projection: Projection,
    /// `(θⁿ)²` share of each mode in the captured energy.
    pub energy_fractions: Vec<f64>,
    /// `max_z |φ₂(z) − Σ (Zⁿ, φ₂) Zⁿ(z)|` on the quadrature nodes.
    pub profile_residual: f64,
    /// Bound on `|ψ(z, x, 0) − φ₁(x)φ₂(z)|`: `max|φ₁| · profile_residual`.
    pub field_residual: f64,
}

/// `θⁿ(x_i, 0) = (Zⁿ, φ₂) φ₁(x_i)`.
pub fn build_initial_state(cfg: &ScenarioConfig, basis: &ModeBasis, grid: &Grid) -> Result<InitialCondition> {
    if basis.indices() != cfg.run.modes {
        return Err(Error::ModeMismatch {
            expected: cfg.run.modes.clone(),
            found: basis.indices(),
        });
    }
    if cfg.paddle.width < MIN_CELLS_PER_WIDTH * grid.dx {
        return Err(Error::Config(format!(
            "paddle.width: pulse width {} is under-resolved by grid step {}",
            cfg.paddle.width, grid.dx
        )));
    }
    let strat = basis.stratification();
    let paddle = cfg.paddle;
    let projection = modal_basis::project_profile_with(|z| paddle.vertical(&strat, z), basis, cfg.run.quad_points);

    let pulse = grid.sample(|x| paddle.horizontal(x));
    let theta = projection
        .coefficients
        .iter()
        .map(|c| pulse.iter().map(|p| c * p).collect())
        .collect();
    let state = ModeState::new(0.0, basis.indices(), theta)?;

    let total = projection.captured_energy;
    let energy_fractions = projection
        .coefficients
        .iter()
        .map(|c| if total > 0.0 { c * c / total } else { 0.0 })
        .collect();

    let nodes = quadrature::simpson_nodes(cfg.run.quad_points);
    let dz = strat.depth / (nodes - 1) as f64;
    let profile_residual = (0..nodes)
        .map(|i| {
            let z = i as f64 * dz;
            (paddle.vertical(&strat, z) - basis.synthesize_at(&projection.coefficients, z)).abs()
        })
        .fold(0.0, f64::max);
    let pulse_max = pulse.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    Ok(InitialCondition {
        state,
        projection,
        energy_fractions,
        profile_residual,
        field_residual: pulse_max * profile_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_the_reference_tank() {
        let cfg = ScenarioConfig::reference_tank();
        assert_eq!(cfg.stratification.buoyancy_frequency, 1.23);
        assert_eq!(cfg.stratification.depth, 0.25);
        assert_eq!(cfg.run.modes, vec![2, 4, 6, 8, 10]);
        assert_eq!(cfg.run.t_end, 0.02);
        assert_eq!(cfg.paddle.center, 0.125);
        assert_eq!(cfg.grid.tank_length, 0.5);
        assert!(cfg.domain_length() >= 0.5);
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
        let grid = cfg.build_grid().unwrap();
        assert_eq!(grid.n_points, 512);
        assert!((grid.length() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn violations_name_the_field() {
        let mut cfg = ScenarioConfig::reference_tank();
        cfg.paddle.width = cfg.grid.dx / 2.0;
        let v = cfg.validate();
        assert!(v.iter().any(|v| v.field == "paddle.width" && v.rule.contains("under-resolved")));

        let mut cfg = ScenarioConfig::reference_tank();
        cfg.paddle.center = -0.1;
        let v = cfg.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "paddle.center");

        let mut cfg = ScenarioConfig::reference_tank();
        cfg.run.modes.clear();
        assert!(cfg.validate().iter().any(|v| v.field == "run.modes"));
        assert!(matches!(cfg.validated(), Err(Error::Config(_))));
    }

    #[test]
    fn horizontal_pulse_peaks_at_a() {
        let p = ScenarioConfig::reference_tank().paddle;
        assert_eq!(p.horizontal(0.0), p.amplitude);
        assert!((p.horizontal(0.3) - p.horizontal(-0.3)).abs() == 0.0);
    }

    #[test]
    fn odd_modes_vanish_for_centred_paddle() {
        let mut cfg = ScenarioConfig::reference_tank();
        cfg.run.modes = (1..=10).collect();
        let basis = cfg.basis().unwrap();
        let grid = cfg.build_grid().unwrap();
        let ic = build_initial_state(&cfg, &basis, &grid).unwrap();
        for (n, c) in cfg.run.modes.iter().zip(&ic.projection.coefficients) {
            if n % 2 == 1 {
                assert!(c.abs() < 1e-12, "mode {n}: {c:e}");
            }
        }
    }

    #[test]
    fn initial_state_has_expected_projection() {
        let cfg = ScenarioConfig::reference_tank();
        let basis = cfg.basis().unwrap();
        let grid = cfg.build_grid().unwrap();
        let ic = build_initial_state(&cfg, &basis, &grid).unwrap();
        // Reference values from an independent 30-digit quadrature of φ₂.
        let expected = [
            -0.2608138525117149,
            0.21258070439702353,
            -0.12453924546247937,
            0.059068819791953728,
            -0.029948777456534406,
        ];
        for (c, e) in ic.projection.coefficients.iter().zip(expected) {
            assert!((c - e).abs() < 1e-9, "{c} vs {e}");
        }
        assert!((ic.projection.profile_energy - 0.13329701833581796).abs() < 1e-9);
        assert!((ic.projection.captured_fraction() - 0.998_600_730_975_904).abs() < 1e-9);
        let s: f64 = ic.energy_fractions.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        // θ is even in x around the centred grid.
        let t = &ic.state.theta[0];
        let n = t.len();
        for i in 1..n / 2 {
            assert!((t[i] - t[n - i]).abs() <= 1e-18);
        }
    }

    #[test]
    fn under_resolved_grid_rejected() {
        let mut cfg = ScenarioConfig::reference_tank();
        cfg.grid.dx = 0.01;
        let basis = cfg.basis().unwrap();
        let grid = cfg.build_grid().unwrap();
        assert!(matches!(build_initial_state(&cfg, &basis, &grid), Err(Error::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::reference_tank();
        let text = cfg.to_toml_string();
        for section in ["[stratification]", "[paddle]", "[grid]", "[scheme]", "[run]"] {
            assert!(text.contains(section), "{section} missing in\n{text}");
        }
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(ScenarioConfig::from_toml_str("[bogus]\nx = 1\n").is_err());
    }
}
