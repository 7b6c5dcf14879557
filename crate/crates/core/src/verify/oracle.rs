//! Exact travelling-wave solutions used to judge the integrator.
//!
//! For `θ_t + cθ_x + gθθ_x + dθ_xxx = 0` the solitary wave is
//! `θ = A sech²((x − x0 − vt)/Δ)` with `v = c + gA/3` and
//! `Δ = (12d / (gA))^½`.

use crate::error::{Error, Result};
use crate::solver::{Grid, ModeState};

/// Residual an oracle must reach before it is trusted.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvSoliton {
    pub c: f64,
    pub g: f64,
    pub d: f64,
    pub amplitude: f64,
    pub x0: f64,
    pub speed: f64,
    pub width: f64,
}

impl KdvSoliton {
    pub fn new(c: f64, g: f64, d: f64, amplitude: f64) -> Result<Self> {
        if g == 0.0 {
            return Err(Error::Parameter("soliton needs g != 0".into()));
        }
        if !(d > 0.0) {
            return Err(Error::Parameter(format!("soliton needs d > 0, got {d}")));
        }
        if !(amplitude * g > 0.0) {
            return Err(Error::Parameter(format!(
                "soliton needs A·g > 0, got A = {amplitude}, g = {g}"
            )));
        }
        Ok(KdvSoliton {
            c,
            g,
            d,
            amplitude,
            x0: 0.0,
            speed: c + g * amplitude / 3.0,
            width: (12.0 * d / (g * amplitude)).sqrt(),
        })
    }

    pub fn at(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    /// `θ(x, t)` on the whole line.
    pub fn value(&self, x: f64, t: f64) -> f64 {
        let s = 1.0 / ((x - self.x0 - self.speed * t) / self.width).cosh();
        self.amplitude * s * s
    }

    /// `θ(x, t)` on a periodic domain of length `period`: the nearest image.
    pub fn periodic_value(&self, x: f64, t: f64, period: f64) -> f64 {
        let xi = x - self.x0 - self.speed * t;
        let wrapped = xi - period * (xi / period).round();
        self.value(wrapped + self.x0, 0.0)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> ModeState {
        let theta = grid.sample(|x| self.periodic_value(x, t, grid.length()));
        ModeState::new(t, vec![1], vec![theta]).expect("one mode, one array")
    }

    /// Time the wave needs to move one width.
    pub fn transit_time(&self) -> f64 {
        self.width / self.speed.abs()
    }

    /// Largest relative residual of the PDE at `samples` points over
    /// `[x0 − 10Δ, x0 + 10Δ]`, with derivatives taken by nine-point central
    /// differences of step `0.01Δ`.
    pub fn residual(&self, samples: usize) -> f64 {
        let (c, g, d) = (self.c, self.g, self.d);
        pde_residual(
            |x, t| self.value(x, t),
            self.x0,
            self.width,
            self.speed,
            samples,
            |u, ux, uxxx| c * ux + g * u * ux + d * uxxx,
        )
    }

    /// The oracle itself, or `Err` if its residual misses [`ORACLE_TOLERANCE`].
    pub fn verified(self) -> Result<Self> {
        let r = self.residual(2001);
        if r <= ORACLE_TOLERANCE {
            Ok(self)
        } else {
            Err(Error::Parameter(format!("soliton oracle residual {r:e} above tolerance")))
        }
    }
}

/// Nine-point central weights at offsets `1..=4` for the first (eighth
/// order) and third (sixth order) derivative.
const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D3: [f64; 4] = [-488.0 / 240.0, 338.0 / 240.0, -72.0 / 240.0, 7.0 / 240.0];

pub(crate) fn central(f: impl Fn(f64) -> f64, x: f64, step: f64, weights: &[f64; 4], power: i32) -> f64 {
    let s: f64 = weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let o = (j + 1) as f64 * step;
            w * (f(x + o) - f(x - o))
        })
        .sum();
    s / step.powi(power)
}

/// `max |θ_t + F(θ, θ_x, θ_xxx)| / max(|θ_t|, |F terms|)` for a wave
/// travelling at `speed`, evaluated at `t = 0`. The time derivative is a
/// difference in `t`, independent of the spatial ones.
pub(crate) fn pde_residual(
    u: impl Fn(f64, f64) -> f64,
    center: f64,
    width: f64,
    speed: f64,
    samples: usize,
    flux: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let hx = 0.01 * width;
    let ht = if speed == 0.0 { hx } else { hx / speed.abs() };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for s in 0..samples {
        let x = center - 10.0 * width + 20.0 * width * s as f64 / (samples - 1) as f64;
        let ut = central(|t| u(x, t), 0.0, ht, &D1, 1);
        let ux = central(|y| u(y, 0.0), x, hx, &D1, 1);
        let uxxx = central(|y| u(y, 0.0), x, hx, &D3, 3);
        let f = flux(u(x, 0.0), ux, uxxx);
        worst = worst.max((ut + f).abs());
        scale = scale.max(ut.abs()).max(f.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}
