//! Two-mode coupled system with an exact travelling wave.
//!
//! With `θⁿ = αₙ sech²((x − vt)/Δ)` substituted in the coupled equations,
//! mode `n` balances exactly when
//!
//! ```text
//! v = c_n + 4d_n/Δ²,    Σ_{m,k} gⁿ_{m,k} α_m α_k = 12 αₙ d_n / Δ²
//! ```
//!
//! Given `α`, `d`, `Δ`, `v` and the off-diagonal couplings, these fix `c`
//! and the self-interaction `gⁿ_{n,n}`.

use crate::coeff_engine::{CoefficientSet, Tensor3};
use crate::error::{Error, Result};
use crate::solver::{discrete_l2, discrete_l2_norm, Grid, Integrator, ModeState, SchemeParams};
use crate::verify::convergence::{fit_order, OrderFit};
use crate::verify::oracle::{pde_residual, ORACLE_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingPair {
    pub coeffs: CoefficientSet,
    pub alpha: [f64; 2],
    pub width: f64,
    pub speed: f64,
    pub x0: f64,
}

impl TravelingPair {
    /// Solves the balance conditions for `c` and `gⁿ_{n,n}`. `cross[n]`
    /// holds `(gⁿ_{0,1}, gⁿ_{1,0}, gⁿ_{o,o})` with `o` the other mode.
    pub fn construct(alpha: [f64; 2], d: [f64; 2], width: f64, speed: f64, cross: [[f64; 3]; 2]) -> Result<Self> {
        if alpha.contains(&0.0) || !(width > 0.0) {
            return Err(Error::Parameter("travelling pair needs nonzero amplitudes and a positive width".into()));
        }
        let w2 = width * width;
        let mut g = Tensor3::zeros(2);
        let mut c = [0.0; 2];
        for n in 0..2 {
            let o = 1 - n;
            let [g01, g10, goo] = cross[n];
            g.set(n, 0, 1, g01);
            g.set(n, 1, 0, g10);
            g.set(n, o, o, goo);
            let known = (g01 + g10) * alpha[0] * alpha[1] + goo * alpha[o] * alpha[o];
            let gnn = (12.0 * alpha[n] * d[n] / w2 - known) / (alpha[n] * alpha[n]);
            g.set(n, n, n, gnn);
            c[n] = speed - 4.0 * d[n] / w2;
        }
        let coeffs = CoefficientSet::custom(vec![1, 2], c.to_vec(), g, d.to_vec())?;
        Ok(TravelingPair {
            coeffs,
            alpha,
            width,
            speed,
            x0: 0.0,
        })
    }

    /// `α = (1, ½)`, `d = (1, ½)`, `Δ = 1`, `v = 10`, with cross couplings
    /// `g¹₁₂ = g¹₂₁ = 1`, `g¹₂₂ = 0`, `g²₁₂ = g²₂₁ = ½`, `g²₁₁ = 1`.
    pub fn standard() -> Self {
        TravelingPair::construct([1.0, 0.5], [1.0, 0.5], 1.0, 10.0, [[1.0, 1.0, 0.0], [0.5, 0.5, 1.0]])
            .expect("standard pair is well formed")
    }

    /// Same amplitudes with every cross coupling removed.
    pub fn decoupled() -> Self {
        TravelingPair::construct([1.0, 0.5], [1.0, 0.5], 1.0, 10.0, [[0.0; 3]; 2]).expect("decoupled pair is well formed")
    }

    pub fn value(&self, mode: usize, x: f64, t: f64) -> f64 {
        let s = 1.0 / ((x - self.x0 - self.speed * t) / self.width).cosh();
        self.alpha[mode] * s * s
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> ModeState {
        let period = grid.length();
        let theta = (0..2)
            .map(|n| {
                grid.sample(|x| {
                    let xi = x - self.x0 - self.speed * t;
                    let w = xi - period * (xi / period).round();
                    self.value(n, w + self.x0, 0.0)
                })
            })
            .collect();
        ModeState::new(t, vec![1, 2], theta).expect("two modes, two arrays")
    }

    /// Largest relative residual over both modes, by independent
    /// finite-difference substitution.
    pub fn residual(&self) -> f64 {
        let cs = &self.coeffs;
        (0..2)
            .map(|n| {
                let ratio = self.alpha[1 - n] / self.alpha[n];
                let (a0, a1) = if n == 0 { (1.0, ratio) } else { (ratio, 1.0) };
                // Every mode is a multiple of mode n's profile.
                let coupling: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)]
                    .iter()
                    .map(|&(m, k)| cs.g.get(n, m, k) * [a0, a1][m] * [a0, a1][k])
                    .sum();
                let (c, d) = (cs.phase_speeds[n], cs.d[n]);
                pde_residual(
                    |x, t| self.value(n, x, t),
                    self.x0,
                    self.width,
                    self.speed,
                    2001,
                    |u, ux, uxxx| c * ux + coupling * u * ux + d * uxxx,
                )
            })
            .fold(0.0, f64::max)
    }

    pub fn verified(self) -> Result<Self> {
        let r = self.residual();
        if r <= ORACLE_TOLERANCE {
            Ok(self)
        } else {
            Err(Error::Parameter(format!("travelling-pair residual {r:e} above tolerance")))
        }
    }

    /// `ω_max` bound for the two-stage step choice.
    fn max_frequency(&self, h: f64) -> f64 {
        let cs = &self.coeffs;
        (0..2)
            .map(|n| {
                let e = cs.d[n].abs().max((cs.d[n] - cs.phase_speeds[n] * h * h / 6.0).abs());
                cs.phase_speeds[n].abs() / h + 2.6 * e / h.powi(3)
            })
            .fold(0.0, f64::max)
            + cs.g.max_abs() * self.alpha[0].abs().max(self.alpha[1].abs()) * 2.0 / h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairLevel {
    pub h: f64,
    pub tau: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub residual: f64,
    pub levels: Vec<PairLevel>,
    pub fit: Option<OrderFit>,
    /// Forward error at the finest level, relative.
    pub forward_error: f64,
    /// `‖θ(0) − reverse(forward(θ(0)))‖ / ‖θ(0)‖` at the finest level.
    pub reversal_error: f64,
}

impl PairReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("# travelling-pair oracle residual {:.3e}\n# h\ttau\trelative_error\n", self.residual);
        for l in &self.levels {
            out.push_str(&format!("{:.16e}\t{:.16e}\t{:.16e}\n", l.h, l.tau, l.relative_error));
        }
        if let Some(f) = &self.fit {
            out.push_str(&format!("# fitted order {:.6} (fit residual {:.3e})\n", f.order, f.residual));
        }
        out.push_str(&format!(
            "# forward error {:.6e}, reversal error {:.6e}\n",
            self.forward_error, self.reversal_error
        ));
        out
    }
}

/// Propagates the pair for `t_end` on a periodic domain of `length` at each
/// `h`, fits the spatial order and runs the finest level backwards with the
/// reversed coefficient set.
pub fn integrable_pair_check(pair: &TravelingPair, length: f64, t_end: f64, hs: &[f64], courant: f64) -> Result<PairReport> {
    let residual = pair.residual();
    if residual > ORACLE_TOLERANCE {
        return Err(Error::Parameter(format!("travelling-pair residual {residual:e} above tolerance")));
    }
    let mut levels = Vec::new();
    let mut forward_error = f64::NAN;
    let mut reversal_error = f64::NAN;
    for (i, &h) in hs.iter().enumerate() {
        let grid = Grid::centered(length, (length / h).round() as usize)?;
        let steps = (t_end * pair.max_frequency(h) / courant).ceil();
        let params = SchemeParams::two_stage(t_end / steps);
        let init = pair.sample(&grid, 0.0);
        let (out, _) = Integrator::new(&pair.coeffs, grid).run(&init, &params, t_end)?;
        let exact = pair.sample(&grid, t_end);
        let rel = discrete_l2_norm(&out, &exact, &grid)? / discrete_l2(&exact, &grid);
        levels.push(PairLevel {
            h,
            tau: params.tau,
            relative_error: rel,
        });
        if i + 1 == hs.len() {
            forward_error = rel;
            let reversed = pair.coeffs.reversed();
            let mut start = out;
            start.time = 0.0;
            let (back, _) = Integrator::new(&reversed, grid).run(&start, &params, t_end)?;
            reversal_error = discrete_l2_norm(&back, &init, &grid)? / discrete_l2(&init, &grid);
        }
    }
    let hs_ok: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let es: Vec<f64> = levels.iter().map(|l| l.relative_error).collect();
    Ok(PairReport {
        residual,
        fit: fit_order(&hs_ok, &es),
        levels,
        forward_error,
        reversal_error,
    })
}
