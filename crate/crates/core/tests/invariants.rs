//! Property tests over the basis, the integrator and field synthesis.

use approx::assert_relative_eq;
use proptest::prelude::*;

use ckdv_core::coeff_engine::{CoefficientSet, Tensor3};
use ckdv_core::field;
use ckdv_core::modal_basis::{project_profile, ModeBasis, Stratification};
use ckdv_core::solver::{discrete_l2, discrete_l2_norm, Grid, Integrator, ModeState, SchemeParams};

fn strat() -> Stratification {
    Stratification::new(1.23, 0.25).unwrap()
}

fn basis() -> ModeBasis {
    ModeBasis::constant_n(strat(), &[2, 4, 6, 8, 10]).unwrap()
}

fn two_mode_coeffs(g: f64) -> CoefficientSet {
    coupled(g, 0.5 * g)
}

fn coupled(g01: f64, g10: f64) -> CoefficientSet {
    let g = g01;
    let mut t = Tensor3::zeros(2);
    t.set(0, 0, 1, g01);
    t.set(0, 1, 0, g10);
    t.set(1, 0, 0, -g);
    t.set(1, 1, 1, 2.0 * g);
    CoefficientSet::custom(vec![1, 2], vec![1.0, -0.5], t, vec![0.02, 0.01]).unwrap()
}

/// Smooth periodic bumps with random amplitudes and centres.
fn bumps(grid: &Grid, amps: &[f64], centres: &[f64]) -> ModeState {
    let l = grid.length();
    let theta = amps
        .iter()
        .zip(centres)
        .map(|(a, c)| {
            grid.sample(|x| {
                let w = x - c - l * ((x - c) / l).round();
                a / (w / 1.5).cosh().powi(2)
            })
        })
        .collect();
    ModeState::new(0.0, vec![1, 2], theta).unwrap()
}

fn grid() -> Grid {
    Grid::centered(20.0, 100).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stepping_commutes_with_periodic_shift(
        a in -1.0f64..1.0, b in -1.0f64..1.0,
        c0 in -5.0f64..5.0, c1 in -5.0f64..5.0,
        shift in 0usize..100, steps in 1u64..40,
    ) {
        let g = grid();
        let coeffs = two_mode_coeffs(0.8);
        let u = bumps(&g, &[a, b], &[c0, c1]);
        let params = SchemeParams::two_stage(1e-3);
        let (direct, _) = Integrator::new(&coeffs, g).run_steps(&u.shifted(shift), &params, steps).unwrap();
        let (later, _) = Integrator::new(&coeffs, g).run_steps(&u, &params, steps).unwrap();
        prop_assert_eq!(direct.theta, later.shifted(shift).theta);
    }

    #[test]
    fn linear_system_superposes(
        a in -1.0f64..1.0, b in -1.0f64..1.0,
        p in -2.0f64..2.0, q in -2.0f64..2.0,
        one_stage in any::<bool>(),
    ) {
        let g = grid();
        let coeffs = two_mode_coeffs(0.8).linearized();
        let params = if one_stage { SchemeParams::one_stage(1e-4) } else { SchemeParams::two_stage(1e-3) };
        let u = bumps(&g, &[a, b], &[-3.0, 2.0]);
        let v = bumps(&g, &[b, a], &[4.0, -1.0]);
        let mix = ModeState::new(
            0.0,
            vec![1, 2],
            u.theta.iter().zip(&v.theta)
                .map(|(x, y)| x.iter().zip(y).map(|(x, y)| p * x + q * y).collect())
                .collect(),
        ).unwrap();
        let run = |s: &ModeState| Integrator::new(&coeffs, g).run_steps(s, &params, 50).unwrap().0;
        let (ru, rv, rm) = (run(&u), run(&v), run(&mix));
        for n in 0..2 {
            for i in 0..g.n_points {
                let expect = p * ru.theta[n][i] + q * rv.theta[n][i];
                prop_assert!((rm.theta[n][i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn discrete_mass_is_conserved(
        a in -1.0f64..1.0, b in -1.0f64..1.0,
        c0 in -5.0f64..5.0, steps in 1u64..200,
    ) {
        // Cross terms telescope only when gⁿ_{m,k} = gⁿ_{k,m}.
        let g = grid();
        let coeffs = coupled(1.5, 1.5);
        let u = bumps(&g, &[a, b], &[c0, -c0]);
        let (out, _) = Integrator::new(&coeffs, g).run_steps(&u, &SchemeParams::two_stage(1e-3), steps).unwrap();
        for (m0, m1) in u.mass(&g).iter().zip(out.mass(&g)) {
            prop_assert!((m0 - m1).abs() <= 1e-12 * steps as f64 * u.max_abs().max(1e-3));
        }
    }

    #[test]
    fn projection_obeys_bessel(b in 5.0f64..80.0, z0 in 0.02f64..0.23, p in 0.0f64..3.0) {
        let s = strat();
        let h = s.depth;
        let proj = project_profile(|z| (b * (z - z0)).tanh() + p * z * (h - z), &basis());
        prop_assert!(proj.captured_energy <= proj.profile_energy * (1.0 + 1e-12));
        prop_assert!(proj.captured_fraction() <= 1.0 + 1e-12);
    }

    #[test]
    fn synthesized_profiles_reproject(coeffs in prop::collection::vec(-1.0f64..1.0, 5)) {
        let basis = basis();
        let proj = project_profile(basis.synthesize(&coeffs), &basis);
        for (got, want) in proj.coefficients.iter().zip(&coeffs) {
            prop_assert!((got - want).abs() <= 1e-9);
        }
        // Parseval: a profile in the span is captured in full.
        if coeffs.iter().any(|c| c.abs() > 1e-3) {
            prop_assert!((proj.captured_fraction() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn field_is_linear_with_zero_walls(
        a in prop::collection::vec(-1.0f64..1.0, 5),
        s in -3.0f64..3.0,
    ) {
        let basis = basis();
        let g = Grid::centered(1.0, 16).unwrap();
        let u = ModeState::new(0.0, basis.indices(), a.iter().map(|&c| g.sample(|x| c * (1.0 + x))).collect()).unwrap();
        let v = ModeState::new(0.0, basis.indices(), (0..5).map(|n| g.sample(|x| (x * n as f64).cos())).collect()).unwrap();
        let sum = ModeState::new(
            0.0,
            basis.indices(),
            u.theta.iter().zip(&v.theta).map(|(x, y)| x.iter().zip(y).map(|(x, y)| x + s * y).collect()).collect(),
        ).unwrap();
        let (fu, fv, fs) = (
            field::synthesize(&basis, &u, &g, 33).unwrap(),
            field::synthesize(&basis, &v, &g, 33).unwrap(),
            field::synthesize(&basis, &sum, &g, 33).unwrap(),
        );
        prop_assert_eq!(fs.wall_max(), 0.0);
        for ((ru, rv), rs) in fu.psi.iter().zip(&fv.psi).zip(&fs.psi) {
            for ((x, y), z) in ru.iter().zip(rv).zip(rs) {
                prop_assert!((x + s * y - z).abs() <= 1e-12 * (1.0 + z.abs()));
            }
        }
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let g = grid();
    let coeffs = two_mode_coeffs(1.2);
    let u = bumps(&g, &[0.7, -0.4], &[1.0, -2.0]);
    let params = SchemeParams::two_stage(1e-3);
    let (a, _) = Integrator::new(&coeffs, g).run_steps(&u, &params, 500).unwrap();
    let (b, _) = Integrator::new(&coeffs, g).run_steps(&u, &params, 500).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pure_advection_returns_after_one_period() {
    // c = 1, g = d = 0: the modified coefficient cancels the leading
    // advection error, so the profile comes back close to where it began.
    let g = Grid::centered(20.0, 400).unwrap();
    let coeffs = CoefficientSet::single_mode(1.0, 0.0, 0.0);
    let u0 = ModeState::new(0.0, vec![1], vec![g.sample(|x| (-x * x / 2.0).exp())]).unwrap();
    let (u1, _) = Integrator::new(&coeffs, g).run(&u0, &SchemeParams::two_stage(2e-3), 20.0).unwrap();
    let rel = discrete_l2_norm(&u1, &u0, &g).unwrap() / discrete_l2(&u0, &g);
    assert!(rel < 1e-3, "{rel:e}");
    assert_relative_eq!(u1.mass(&g)[0], u0.mass(&g)[0], epsilon = 1e-12);
}

