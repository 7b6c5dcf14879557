//! Composite Simpson quadrature on a uniform grid.
//!
//! Error is `O(Δz⁴)` for smooth integrands. For trigonometric products whose
//! frequencies stay below the grid Nyquist limit the rule is exact up to
//! round-off, which is what the orthonormality checks rely on.

/// Default number of nodes for depth integrals.
pub const DEFAULT_POINTS: usize = 1025;

/// Smallest node count accepted by the inner-product routines.
pub const MIN_POINTS: usize = 16;

/// Rounds `points` up to the nearest odd count (Simpson needs an even number
/// of intervals) and to at least [`MIN_POINTS`] + 1.
pub fn simpson_nodes(points: usize) -> usize {
    let p = points.max(MIN_POINTS + 1);
    if p.is_multiple_of(2) {
        p + 1
    } else {
        p
    }
}

/// Simpson weights for `points` nodes spanning an interval of length `span`.
/// `points` must be odd and at least 3.
pub fn simpson_weights(points: usize, span: f64) -> Vec<f64> {
    debug_assert!(points >= 3 && points % 2 == 1);
    let step = span / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let w = if i == 0 || i == points - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * step / 3.0
        })
        .collect()
}

/// `∫_a^b f(z) dz` with composite Simpson on (at least) `points` nodes.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize) -> f64 {
    let p = simpson_nodes(points);
    let step = (b - a) / (p - 1) as f64;
    let w = simpson_weights(p, b - a);
    w.iter()
        .enumerate()
        .map(|(i, wi)| wi * f(a + i as f64 * step))
        .sum()
}

/// Simpson sum of already-sampled values on a uniform grid of `values.len()`
/// (odd) nodes.
pub fn simpson_sampled(values: &[f64], span: f64) -> f64 {
    let w = simpson_weights(values.len(), span);
    values.iter().zip(&w).map(|(v, w)| v * w).sum()
}
