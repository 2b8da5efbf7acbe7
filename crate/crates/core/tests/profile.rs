mod common;

use proptest::prelude::*;
use sirwave::dispersion::critical_speed;
use sirwave::profile::{boundary_gaps, residual, solve_profile, ProfileError};
use sirwave::{Incidence, ModelParams, SolverOptions, WaveProfile};

fn desk(opts: SolverOptions) -> WaveProfile {
    solve_profile(
        3.5,
        &ModelParams::reference(),
        &Incidence::bilinear(),
        &opts,
    )
    .unwrap()
}

#[test]
fn desk_profile_converges_to_both_equilibria() {
    let params = ModelParams::reference();
    let inc = Incidence::bilinear();
    let p = desk(SolverOptions::default());
    let eq = params.equilibria(&inc).unwrap();
    let (rs, ri) = p.sup_residual();
    assert!(rs < 1e-4 && ri < 1e-4, "residuals {rs:e} {ri:e}");
    assert_eq!((rs, ri), residual(&p, &params, &inc));
    assert!(p.sandwich_violation() <= 1e-8);
    assert!(!p.clamp_flagged(), "clamp {:e}", p.clamp_max);
    let (left, right) = boundary_gaps(&p, &eq);
    assert!(left < 1e-3, "left gap {left:e}");
    assert!(right.unwrap() < 0.05 * 1.0, "right gap {right:?}");
    assert_eq!(p.xi.len(), 2 * 40 * 20 + 1);
    assert_eq!(p.xi[20], -39.0);
}

#[test]
fn interior_points_are_strictly_inside() {
    let p = desk(SolverOptions::default());
    for j in 1..p.len() - 1 {
        assert!(p.s[j] > 0.0 && p.s[j] < 2.0, "S at {}", p.xi[j]);
        assert!(p.i[j] > 0.0, "I at {}", p.xi[j]);
    }
}

#[test]
fn left_tail_is_increasing() {
    let p = desk(SolverOptions::default());
    let eps0 = 0.01 * 0.5;
    let mut checked = 0;
    for j in 0..p.len() - 1 {
        if p.i[j] <= eps0 {
            assert!(p.i[j + 1] > p.i[j], "I not increasing at {}", p.xi[j]);
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn residual_is_second_order_in_grid_spacing() {
    let coarse = desk(SolverOptions::default()).sup_residual();
    let fine = desk(SolverOptions {
        m: 40,
        ..SolverOptions::default()
    })
    .sup_residual();
    for (c, f) in [(coarse.0, fine.0), (coarse.1, fine.1)] {
        let ratio = c / f;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }
}

#[test]
fn wider_window_shrinks_left_gap() {
    let eq = ModelParams::reference()
        .equilibria(&Incidence::bilinear())
        .unwrap();
    let gaps: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&x| {
            boundary_gaps(
                &desk(SolverOptions {
                    x_half: x,
                    ..SolverOptions::default()
                }),
                &eq,
            )
            .0
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn solves_are_bit_identical() {
    let a = desk(SolverOptions::default());
    let b = desk(SolverOptions::default());
    assert_eq!(a, b);
}

#[test]
fn damping_reaches_the_same_profile() {
    let a = desk(SolverOptions::default());
    let b = desk(SolverOptions {
        damping: 0.7,
        ..SolverOptions::default()
    });
    let diff =
        a.s.iter()
            .zip(&b.s)
            .chain(a.i.iter().zip(&b.i))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 1e-8, "{diff:e}");
}

#[test]
fn critical_speed_is_accepted_and_flagged() {
    let params = ModelParams::reference();
    let inc = Incidence::bilinear();
    let (c_star, _) = critical_speed(&params, &inc).unwrap();
    let p = solve_profile(c_star, &params, &inc, &SolverOptions::default()).unwrap();
    assert!(p.critical);
    assert!(p.iters > 5000, "{}", p.iters);
    let (rs, ri) = p.sup_residual();
    assert!(rs < 1e-4 && ri < 1e-4);
    assert!(p.sandwich_violation() <= 1e-8);
    let eq = params.equilibria(&inc).unwrap();
    assert!(boundary_gaps(&p, &eq).1.unwrap() < 0.05);
}

#[test]
fn slow_speed_is_rejected() {
    let params = ModelParams::reference();
    let inc = Incidence::bilinear();
    let (c_star, _) = critical_speed(&params, &inc).unwrap();
    let err = solve_profile(0.5 * c_star, &params, &inc, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, ProfileError::SpeedBelowCritical { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn converged_profiles_are_sandwiched(c in 3.2f64..5.0, beta in 1.8f64..2.6) {
        let params = ModelParams::reference().with_beta(beta).unwrap();
        let inc = Incidence::bilinear();
        let (c_star, _) = critical_speed(&params, &inc).unwrap();
        prop_assume!(c > 1.02 * c_star);
        let opts = SolverOptions { x_half: 30.0, ..SolverOptions::default() };
        let p = solve_profile(c, &params, &inc, &opts).unwrap();
        prop_assert!(p.sandwich_violation() <= 1e-8);
        for j in 1..p.len() - 1 {
            prop_assert!(p.s[j] > 0.0 && p.s[j] < params.disease_free() && p.i[j] > 0.0);
        }
    }
}
