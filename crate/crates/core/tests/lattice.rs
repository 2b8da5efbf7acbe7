mod common;

use common::HomogeneousOde;
use sirwave::dispersion::critical_speed;
use sirwave::lattice::{dt_max, estimate_speed, init_state, run, step_rk4, RunOptions, RunOutput};
use sirwave::profile::solve_profile;
use sirwave::{Incidence, LatticeState, ModelParams, SolverOptions};

fn spread(params: &ModelParams, t_end: f64) -> (LatticeState, RunOutput) {
    let inc = Incidence::bilinear();
    let i_star = params.endemic_equilibrium(&inc).unwrap().1;
    let mut state = init_state(params, &inc, 400, 3, 0.1, false).unwrap();
    let opts = RunOptions {
        t_end,
        dt: dt_max(params, &inc),
        frame_stride: 100,
        kappa: 0.5 * i_star,
    };
    let out = run(&mut state, params, &inc, &opts).unwrap();
    (state, out)
}

#[test]
fn homogeneous_lattice_follows_the_ode() {
    let params = ModelParams::reference();
    let inc = Incidence::bilinear();
    let dt = dt_max(&params, &inc);
    let mut state = LatticeState::homogeneous(50, 0.9 * 2.0, 1.1 * 0.5, false);
    let ode = HomogeneousOde {
        lambda: 2.0,
        beta: 2.0,
        mu1: 1.0,
        mu2: 2.0,
    };
    let mut y = (1.8, 0.55);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        step_rk4(&mut state, &params, &inc, dt).unwrap();
        for _ in 0..10 {
            y = ode.step(y, dt / 10.0);
        }
        for k in 0..state.sites() {
            worst = worst
                .max((state.s[k] - y.0).abs())
                .max((state.i[k] - y.1).abs());
        }
    }
    assert!((state.t - 10.0).abs() < 1e-9);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn infection_dies_out_below_threshold() {
    let params = ModelParams::reference().with_beta(0.8).unwrap();
    let inc = Incidence::bilinear();
    assert!((params.basic_reproduction_number(&inc) - 0.8).abs() < 1e-15);
    let mut state = init_state(&params, &inc, 400, 3, 0.1, false).unwrap();
    let opts = RunOptions {
        t_end: 200.0,
        dt: dt_max(&params, &inc),
        frame_stride: 1000,
        kappa: 0.05,
    };
    run(&mut state, &params, &inc, &opts).unwrap();
    let max_i = state.i.iter().cloned().fold(0.0, f64::max);
    assert!(max_i < 1e-6 * 0.1, "{max_i:e}");
}

#[test]
fn front_speed_matches_critical_speed() {
    let params = ModelParams::reference();
    let (state, out) = spread(&params, 100.0);
    let (c_star, _) = critical_speed(&params, &Incidence::bilinear()).unwrap();
    let (c_est, r2) = estimate_speed(&out.track, 0.2).unwrap();
    assert!(
        ((c_est - c_star) / c_star).abs() < 0.05,
        "c_est {c_est} c* {c_star}"
    );
    assert!(r2 > 0.999);
    assert!(!out.boundary_contact);

    // positivity and the susceptible ceiling
    assert!(state.min_before_clip >= -1e-12);
    assert!((state.clipped as f64) < 1e-3 * (state.sites() * out.steps) as f64);
    for f in &out.frames {
        assert!(f.s.iter().all(|&s| (0.0..=2.0 * (1.0 + 1e-9)).contains(&s)));
        assert!(f.i.iter().all(|&i| i >= 0.0));
    }

    let skip = out.track.positions.len() / 5;
    for w in out.track.positions[skip..].windows(2) {
        assert!(w[1] >= w[0], "front moved back: {w:?}");
    }
}

#[test]
fn front_speed_grows_with_transmission() {
    let base = ModelParams::reference();
    let (_, slow) = spread(&base, 60.0);
    let (_, fast) = spread(&base.with_beta(3.0).unwrap(), 60.0);
    let c1 = estimate_speed(&slow.track, 0.2).unwrap().0;
    let c2 = estimate_speed(&fast.track, 0.2).unwrap().0;
    assert!(c2 > c1, "{c1} vs {c2}");
    assert!(!fast.boundary_contact);
}

#[test]
fn late_front_matches_computed_profile() {
    let params = ModelParams::reference();
    let inc = Incidence::bilinear();
    let (state, out) = spread(&params, 100.0);
    let last = out.frames.last().unwrap();
    let sites: Vec<i64> = (0..state.sites()).map(|k| state.site(k)).collect();
    let p = solve_profile(3.5, &params, &inc, &SolverOptions::default()).unwrap();
    let d = common::front_profile_distance(&sites, &last.i, &p.xi, &p.i, 0.25, 39.0);
    assert!(d < 5e-2, "{d}");
}

#[test]
fn recovered_class_is_reconstructed() {
    let params = ModelParams::new(2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
    let inc = Incidence::bilinear();
    let mut state = init_state(&params, &inc, 100, 3, 0.1, true).unwrap();
    let opts = RunOptions {
        t_end: 10.0,
        dt: dt_max(&params, &inc),
        frame_stride: 100,
        kappa: 0.25,
    };
    let out = run(&mut state, &params, &inc, &opts).unwrap();
    let r = state.r.as_ref().unwrap();
    assert!(r.iter().all(|&v| v >= 0.0) && r.iter().cloned().fold(0.0, f64::max) > 0.0);
    assert!(out.frames.iter().all(|f| f.r.is_some()));
}
