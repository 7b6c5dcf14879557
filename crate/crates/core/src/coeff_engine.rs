//! Coefficients of the coupled KdV system
//!
//! ```text
//! θⁿ_t + c_n θⁿ_x + σ Σ_{m,k} gⁿ_{m,k} θᵐ θᵏ_x + β² d_n θⁿ_xxx = 0
//! ```
//!
//! with
//!
//! ```text
//! gⁿ_{m,k} = (N² c_n² / 2) ∫₀ʰ [ (2/c_k² − 1/c_m²) Zᵏ Zᵐ_z − Zᵐ Zᵏ_z / (c_m c_k) ] Zⁿ dz
//! d_n      = c_n³ / (2N²)
//! ```
//!
//! The tensor is available by quadrature and in closed form (products of
//! three sines reduce to Kronecker deltas); [`cross_checked`] builds both and
//! fails if they disagree.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modal_basis::{self, ModeBasis};
use crate::quadrature;

/// Relative agreement required between the two tensor paths.
pub const PATH_AGREEMENT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMethod {
    /// Composite Simpson on the given number of depth nodes.
    Quadrature { points: usize },
    /// Triple-sine identities.
    ClosedForm,
}

impl Default for CoefficientMethod {
    fn default() -> Self {
        CoefficientMethod::Quadrature {
            points: quadrature::DEFAULT_POINTS,
        }
    }
}

/// Dense rank-3 tensor `g[n][m][k]` over positions in a mode list.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    len: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(len: usize) -> Self {
        Tensor3 {
            len,
            data: vec![0.0; len * len * len],
        }
    }

    pub fn from_fn(len: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(len);
        for n in 0..len {
            for m in 0..len {
                for k in 0..len {
                    t.set(n, m, k, f(n, m, k));
                }
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize, k: usize) -> f64 {
        self.data[(n * self.len + m) * self.len + k]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, k: usize, v: f64) {
        self.data[(n * self.len + m) * self.len + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

/// Everything the integrator needs to know about the modal system.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub modes: Vec<u32>,
    /// Linear speeds `c_n`.
    pub phase_speeds: Vec<f64>,
    /// Nonlinear tensor `gⁿ_{m,k}`.
    pub g: Tensor3,
    /// Dispersion coefficients `d_n`.
    pub d: Vec<f64>,
    /// Nonlinearity scale parameter, 1 in dimensional runs.
    pub sigma: f64,
    /// Dispersion scale parameter, 1 in dimensional runs.
    pub beta2: f64,
}

impl CoefficientSet {
    /// Physical coefficients of a basis with unit scale parameters.
    pub fn from_basis(basis: &ModeBasis, method: CoefficientMethod) -> Self {
        CoefficientSet {
            modes: basis.indices(),
            phase_speeds: basis.phase_speeds(),
            g: nonlinear_coeffs(basis, method),
            d: dispersion_coeffs(basis),
            sigma: 1.0,
            beta2: 1.0,
        }
    }

    /// Arbitrary coefficients, e.g. for synthetic single-mode benchmarks.
    pub fn custom(modes: Vec<u32>, phase_speeds: Vec<f64>, g: Tensor3, d: Vec<f64>) -> Result<Self> {
        modal_basis::check_mode_indices(&modes)?;
        let l = modes.len();
        if phase_speeds.len() != l || d.len() != l || g.len() != l {
            return Err(Error::Shape(format!(
                "{l} modes but {} speeds, {} dispersion coefficients, tensor of side {}",
                phase_speeds.len(),
                d.len(),
                g.len()
            )));
        }
        let finite = phase_speeds.iter().chain(&d).chain(&g.data).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("coefficients must be finite".into()));
        }
        Ok(CoefficientSet {
            modes,
            phase_speeds,
            g,
            d,
            sigma: 1.0,
            beta2: 1.0,
        })
    }

    /// One-mode set `θ_t + c θ_x + g θ θ_x + d θ_xxx = 0`.
    pub fn single_mode(c: f64, g: f64, d: f64) -> Self {
        let mut t = Tensor3::zeros(1);
        t.set(0, 0, 0, g);
        CoefficientSet::custom(vec![1], vec![c], t, vec![d]).expect("single mode set is well formed")
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn with_scales(mut self, sigma: f64, beta2: f64) -> Self {
        self.sigma = sigma;
        self.beta2 = beta2;
        self
    }

    /// Same set with every nonlinear coefficient zeroed (the linear problem).
    pub fn linearized(&self) -> Self {
        let mut out = self.clone();
        out.g = Tensor3::zeros(self.len());
        out
    }

    /// Time-reversed system: stepping it forward undoes a forward run.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.phase_speeds.iter_mut().for_each(|c| *c = -*c);
        out.d.iter_mut().for_each(|d| *d = -*d);
        out.g.scale(-1.0);
        out
    }

    /// Nonzero `(n, m, k, σ g)` entries in position space.
    pub fn nonzero_terms(&self) -> Vec<(usize, usize, usize, f64)> {
        let l = self.len();
        let mut out = Vec::new();
        for n in 0..l {
            for m in 0..l {
                for k in 0..l {
                    let v = self.g.get(n, m, k);
                    if v != 0.0 {
                        out.push((n, m, k, self.sigma * v));
                    }
                }
            }
        }
        out
    }

    /// `(n, c_n, d_n)` rows, tab separated.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# n\tc_n [m/s]\td_n [m^3/s]\n");
        for (i, n) in self.modes.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{:.16e}\t{:.16e}\n",
                n, self.phase_speeds[i], self.d[i]
            ));
        }
        out
    }

    /// `(n, m, k, g)` rows, tab separated.
    pub fn tensor_text(&self) -> String {
        let mut out = String::from("# n\tm\tk\tg\n");
        let l = self.len();
        for n in 0..l {
            for m in 0..l {
                for k in 0..l {
                    out.push_str(&format!(
                        "{}\t{}\t{}\t{:.16e}\n",
                        self.modes[n],
                        self.modes[m],
                        self.modes[k],
                        self.g.get(n, m, k)
                    ));
                }
            }
        }
        out
    }
}

/// `d_n = c_n³ / (2N²)` from the stored phase speeds.
pub fn dispersion_coeffs(basis: &ModeBasis) -> Vec<f64> {
    let w = basis.stratification().weight();
    basis
        .modes()
        .iter()
        .map(|m| m.phase_speed.powi(3) / (2.0 * w))
        .collect()
}

/// `∫₀ʰ sin(aπz/h) cos(bπz/h) sin(cπz/h) dz` for positive integers.
pub fn triple_sine_integral(a: u32, b: u32, c: u32, depth: f64) -> f64 {
    let hit = |x: u32, y: u32, z: u32| if x == y + z { 1.0 } else { 0.0 };
    depth / 4.0 * (hit(a, b, c) + hit(c, a, b) - hit(b, a, c))
}

/// Whether `gⁿ_{m,k}` can be nonzero at all: the sine-cosine-sine integrals
/// vanish unless one index is the sum of the other two.
pub fn selection_rule(n: u32, m: u32, k: u32) -> bool {
    n == m + k || m == n + k || k == n + m
}

pub fn nonlinear_coeffs(basis: &ModeBasis, method: CoefficientMethod) -> Tensor3 {
    let l = basis.len();
    let entries: Vec<f64> = (0..l * l * l)
        .into_par_iter()
        .map(|flat| {
            let (n, m, k) = (flat / (l * l), (flat / l) % l, flat % l);
            match method {
                CoefficientMethod::ClosedForm => closed_form_entry(basis, n, m, k),
                CoefficientMethod::Quadrature { points } => quadrature_entry(basis, n, m, k, points),
            }
        })
        .collect();
    Tensor3 { len: l, data: entries }
}

fn prefactor(basis: &ModeBasis, n: usize) -> f64 {
    let c = basis.modes()[n].phase_speed;
    basis.stratification().weight() * c * c / 2.0
}

fn closed_form_entry(basis: &ModeBasis, n: usize, m: usize, k: usize) -> f64 {
    let modes = basis.modes();
    let (zn, zm, zk) = (&modes[n], &modes[m], &modes[k]);
    let h = basis.depth();
    let b3 = zn.amplitude * zm.amplitude * zk.amplitude;
    let (cm, ck) = (zm.phase_speed, zk.phase_speed);
    // ∫ Zᵏ Zᵐ_z Zⁿ and ∫ Zᵐ Zᵏ_z Zⁿ
    let i1 = b3 * zm.wavenumber() * triple_sine_integral(zk.index, zm.index, zn.index, h);
    let i2 = b3 * zk.wavenumber() * triple_sine_integral(zm.index, zk.index, zn.index, h);
    prefactor(basis, n) * ((2.0 / (ck * ck) - 1.0 / (cm * cm)) * i1 - i2 / (cm * ck))
}

fn quadrature_entry(basis: &ModeBasis, n: usize, m: usize, k: usize, points: usize) -> f64 {
    let modes = basis.modes();
    let (zn, zm, zk) = (&modes[n], &modes[m], &modes[k]);
    let (cm, ck) = (zm.phase_speed, zk.phase_speed);
    let a = 2.0 / (ck * ck) - 1.0 / (cm * cm);
    let b = 1.0 / (cm * ck);
    let integral = quadrature::simpson(
        |z| (a * zk.value(z) * zm.slope(z) - b * zm.value(z) * zk.slope(z)) * zn.value(z),
        0.0,
        basis.depth(),
        points,
    );
    prefactor(basis, n) * integral
}

/// Builds the tensor both ways and returns the quadrature set, or the first
/// entry where the paths disagree by more than [`PATH_AGREEMENT`].
pub fn cross_checked(basis: &ModeBasis) -> Result<CoefficientSet> {
    let quad = CoefficientSet::from_basis(basis, CoefficientMethod::default());
    let closed = nonlinear_coeffs(basis, CoefficientMethod::ClosedForm);
    let l = basis.len();
    let idx = basis.indices();
    for n in 0..l {
        for m in 0..l {
            for k in 0..l {
                let (q, c) = (quad.g.get(n, m, k), closed.get(n, m, k));
                if (q - c).abs() > PATH_AGREEMENT * c.abs().max(1.0) {
                    return Err(Error::CoefficientInconsistency {
                        n: idx[n],
                        m: idx[m],
                        k: idx[k],
                        quadrature: q,
                        closed_form: c,
                    });
                }
            }
        }
    }
    Ok(quad)
}

// ---------------------------------------------------------------------------
// Reconciliation against the published tank tables.

/// Mode list of the published tables.
pub const TABLE_MODES: [u32; 5] = [2, 4, 6, 8, 10];

/// Published `gⁿ_{m,k}`, indexed `[n][m][k]` over [`TABLE_MODES`]
/// (rows m, columns k as printed).
pub const TABLE_G: [[[f64; 5]; 5]; 5] = [
    [
        [0.0, 72.3, 0.0, 0.0, 0.0],
        [28.9, 0.0, 202.4, 0.0, 0.0],
        [0.0, 130.0, 0.0, 390.1, 0.0],
        [0.0, 0.0, 289.0, 0.0, 635.7],
        [0.0, 0.0, 0.0, 505.7, 0.0],
    ],
    [
        [28.9, 0.0, 57.8, 0.0, 0.0],
        [0.0, 0.0, 0.0, 144.5, 0.0],
        [0.0, 0.0, 0.0, 0.0, 260.0],
        [0.0, 57.8, 0.0, 0.0, 0.0],
        [0.0, 0.0, 144.5, 0.0, 0.0],
    ],
    [
        [0.0, 33.7, 0.0, 53.0, 0.0],
        [48.2, 0.0, 0.0, 0.0, 125.2],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [-19.3, 0.0, 0.0, 0.0, 0.0],
        [0.0, 24.0, 0.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 36.1, 0.0, 50.6],
        [0.0, 57.8, 0.0, 0.0, 0.0],
        [65.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [-36.0, 0.0, 0.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 0.0, 37.6, 0.0],
        [0.0, 0.0, 63.6, 0.0, 0.0],
        [0.0, 78.0, 0.0, 0.0, 0.0],
        [80.9, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ],
];

/// Published `d_n` over [`TABLE_MODES`].
pub const TABLE_D: [f64; 5] = [0.00004, 0.000005, 0.000002, 0.000001, 0.0000003];

/// Published `c_n` over [`TABLE_MODES`].
pub const TABLE_C: [f64; 5] = [0.05, 0.025, 0.016, 0.012, 0.0098];

pub const G_TOLERANCE: f64 = 0.05;
pub const D_TOLERANCE: f64 = 0.10;
pub const C_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Confirmed,
    Discrepant,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "CONFIRMED",
            Verdict::Discrepant => "DISCREPANT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    PhaseSpeed { n: u32 },
    Dispersion { n: u32 },
    Nonlinear { n: u32, m: u32, k: u32 },
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::PhaseSpeed { n } => write!(f, "c\t{n}\t-\t-"),
            Quantity::Dispersion { n } => write!(f, "d\t{n}\t-\t-"),
            Quantity::Nonlinear { n, m, k } => write!(f, "g\t{n}\t{m}\t{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: Quantity,
    pub published: f64,
    pub computed: f64,
    /// `|computed − published| / |published|`; absolute difference scaled by
    /// the largest tensor entry when the published value is zero.
    pub relative_difference: f64,
    pub tolerance: f64,
    /// Computed value is zero relative to the largest entry of its kind.
    pub computed_is_zero: bool,
    pub verdict: Verdict,
}

/// One row per published number, never short-circuited.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscrepancyLog {
    pub entries: Vec<Comparison>,
}

impl DiscrepancyLog {
    pub fn of_kind(&self, pick: impl Fn(&Quantity) -> bool) -> impl Iterator<Item = &Comparison> {
        self.entries.iter().filter(move |c| pick(&c.quantity))
    }

    pub fn find(&self, q: Quantity) -> Option<&Comparison> {
        self.entries.iter().find(|c| c.quantity == q)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.entries.iter().filter(|c| c.verdict == verdict).count()
    }

    /// Positions where the published table and the computed tensor disagree
    /// about whether the entry is zero.
    pub fn mask_mismatches(&self) -> Vec<Quantity> {
        self.entries
            .iter()
            .filter_map(|c| match c.quantity {
                Quantity::Nonlinear { .. } => {
                    ((c.published == 0.0) != c.computed_is_zero).then_some(c.quantity)
                }
                _ => None,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "# quantity\tn\tm\tk\tpublished\tcomputed\trel_diff\ttolerance\tverdict\n",
        );
        for c in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{:.16e}\t{:.16e}\t{:.3}\t{}\n",
                c.quantity, c.published, c.computed, c.relative_difference, c.tolerance, c.verdict
            ));
        }
        out.push_str(&format!(
            "# confirmed {} discrepant {} zero-mask mismatches {}\n",
            self.count(Verdict::Confirmed),
            self.count(Verdict::Discrepant),
            self.mask_mismatches().len()
        ));
        out
    }
}

const ZERO_THRESHOLD: f64 = 1e-9;

fn compare(quantity: Quantity, published: f64, computed: f64, tolerance: f64, zero_scale: f64) -> Comparison {
    let relative_difference = if published != 0.0 {
        (computed - published).abs() / published.abs()
    } else {
        computed.abs() / zero_scale.max(f64::MIN_POSITIVE)
    };
    let ok = if published != 0.0 {
        relative_difference <= tolerance
    } else {
        relative_difference <= ZERO_THRESHOLD
    };
    Comparison {
        quantity,
        published,
        computed,
        relative_difference,
        tolerance,
        computed_is_zero: computed.abs() <= ZERO_THRESHOLD * zero_scale,
        verdict: if ok { Verdict::Confirmed } else { Verdict::Discrepant },
    }
}

/// Compares a coefficient set built on [`TABLE_MODES`] against the
/// published tables. Disagreements are recorded, not corrected.
pub fn reconcile_with_published_tables(coeffs: &CoefficientSet) -> Result<DiscrepancyLog> {
    if coeffs.modes != TABLE_MODES {
        return Err(Error::ModeMismatch {
            expected: TABLE_MODES.to_vec(),
            found: coeffs.modes.clone(),
        });
    }
    let mut log = DiscrepancyLog::default();
    for (i, &n) in TABLE_MODES.iter().enumerate() {
        log.entries.push(compare(
            Quantity::PhaseSpeed { n },
            TABLE_C[i],
            coeffs.phase_speeds[i],
            C_TOLERANCE,
            1.0,
        ));
    }
    for (i, &n) in TABLE_MODES.iter().enumerate() {
        log.entries.push(compare(
            Quantity::Dispersion { n },
            TABLE_D[i],
            coeffs.d[i],
            D_TOLERANCE,
            1.0,
        ));
    }
    let scale = coeffs.g.max_abs();
    for (ni, &n) in TABLE_MODES.iter().enumerate() {
        for (mi, &m) in TABLE_MODES.iter().enumerate() {
            for (ki, &k) in TABLE_MODES.iter().enumerate() {
                log.entries.push(compare(
                    Quantity::Nonlinear { n, m, k },
                    TABLE_G[ni][mi][ki],
                    coeffs.g.get(ni, mi, ki),
                    G_TOLERANCE,
                    scale,
                ));
            }
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal_basis::{Stratification, DEFAULT_MODES};

    fn tank_basis() -> ModeBasis {
        ModeBasis::constant_n(Stratification::new(1.23, 0.25).unwrap(), &DEFAULT_MODES).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        let d = dispersion_coeffs(&tank_basis());
        assert!((d[0] - 3.873963608675329e-05).abs() < 1e-18);
        assert!((d[4] - 3.0991708869402633e-07).abs() < 1e-20);
        let n3: Vec<f64> = DEFAULT_MODES.iter().zip(&d).map(|(n, d)| d * f64::from(n.pow(3))).collect();
        for v in &n3 {
            assert!((v - n3[0]).abs() <= 1e-12 * n3[0]);
        }
        assert!(d.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
    }

    #[test]
    fn triple_sine_matches_quadrature() {
        let h = 0.7;
        for a in 1..7 {
            for b in 1..7 {
                for c in 1..7 {
                    let q = quadrature::simpson(
                        |z| {
                            let s = std::f64::consts::PI * z / h;
                            (a as f64 * s).sin() * (b as f64 * s).cos() * (c as f64 * s).sin()
                        },
                        0.0,
                        h,
                        2049,
                    );
                    assert!((q - triple_sine_integral(a, b, c, h)).abs() < 1e-13, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn paths_agree_and_zero_pattern_follows_selection_rule() {
        let basis = ModeBasis::constant_n(Stratification::new(1.23, 0.25).unwrap(), &[1, 2, 3, 4, 5, 6]).unwrap();
        let set = cross_checked(&basis).unwrap();
        let idx = basis.indices();
        for n in 0..6 {
            for m in 0..6 {
                for k in 0..6 {
                    let v = set.g.get(n, m, k);
                    if !selection_rule(idx[n], idx[m], idx[k]) {
                        assert!(v.abs() < 1e-12, "({n},{m},{k}) = {v}");
                    }
                    if m == k {
                        // The two integrand terms cancel on the diagonal.
                        assert!(v.abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn spot_values() {
        let set = CoefficientSet::from_basis(&tank_basis(), CoefficientMethod::ClosedForm);
        // g²_{4,2} reproduces the printed 28.9; g²_{2,2} vanishes.
        assert!((set.g.get(0, 1, 0) - 28.897).abs() < 1e-3);
        assert_eq!(set.g.get(0, 0, 0), 0.0);
    }

    #[test]
    fn reconciliation_classifies_every_entry() {
        let set = cross_checked(&tank_basis()).unwrap();
        let log = reconcile_with_published_tables(&set).unwrap();
        assert_eq!(log.entries.len(), 5 + 5 + 125);
        let spot = log.find(Quantity::Nonlinear { n: 2, m: 4, k: 2 }).unwrap();
        assert_eq!(spot.verdict, Verdict::Confirmed);
        let text = log.to_text();
        assert_eq!(text.lines().count(), 137);
    }

    #[test]
    fn reconciliation_rejects_other_mode_lists() {
        let basis = ModeBasis::constant_n(Stratification::new(1.23, 0.25).unwrap(), &[1, 2]).unwrap();
        let set = CoefficientSet::from_basis(&basis, CoefficientMethod::ClosedForm);
        assert!(reconcile_with_published_tables(&set).is_err());
    }
}
