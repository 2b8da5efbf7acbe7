//! Test-side oracles, written independently of the library's solvers.
#![allow(dead_code)]

use std::path::Path;

/// Plain bisection on a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if (f(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// For `d2 = 1`, `beta S0 f'(0) = 4`, `mu2 = 2` the tangency conditions reduce
/// to `coth(lambda) = lambda` and `c = 2 sinh(lambda)`.
pub fn reference_critical() -> (f64, f64) {
    let lambda = bisect(|l| 1.0 / l.tanh() - l, 0.5, 3.0);
    (2.0 * lambda.sinh(), lambda)
}

/// Endemic state for `f(I) = I / (1 + alpha I)`.
pub fn saturated_endemic(lambda: f64, beta: f64, mu1: f64, gamma: f64, alpha: f64) -> (f64, f64) {
    let mu2 = gamma + mu1;
    let s = (alpha * lambda + mu2) / (beta + alpha * mu1);
    let i = (lambda * beta - mu1 * mu2) / (mu2 * (beta + alpha * mu1));
    (s, i)
}

/// Endemic state for `f(I) = I`.
pub fn bilinear_endemic(lambda: f64, beta: f64, mu1: f64, gamma: f64) -> (f64, f64) {
    let s = (gamma + mu1) / beta;
    (s, (lambda - mu1 * s) / (beta * s))
}

/// RK4 for the spatially homogeneous system with bilinear incidence.
pub struct HomogeneousOde {
    pub lambda: f64,
    pub beta: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl HomogeneousOde {
    fn rhs(&self, s: f64, i: f64) -> (f64, f64) {
        let inf = self.beta * s * i;
        (self.lambda - inf - self.mu1 * s, inf - self.mu2 * i)
    }

    pub fn step(&self, (s, i): (f64, f64), h: f64) -> (f64, f64) {
        let k1 = self.rhs(s, i);
        let k2 = self.rhs(s + 0.5 * h * k1.0, i + 0.5 * h * k1.1);
        let k3 = self.rhs(s + 0.5 * h * k2.0, i + 0.5 * h * k2.1);
        let k4 = self.rhs(s + h * k3.0, i + h * k3.1);
        (
            s + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            i + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }
}

/// Sup distance between the lattice front and a profile after aligning the
/// `kappa` level crossings, over profile abscissas with `|xi| < window`.
///
/// The lattice front moving towards `-n` has the profile's orientation
/// (`I` rising with `xi`), so sites are read through `n -> -n`.
pub fn front_profile_distance(
    sites: &[i64],
    lattice_i: &[f64],
    xi: &[f64],
    profile_i: &[f64],
    kappa: f64,
    window: f64,
) -> f64 {
    let rising = |x: &[f64], y: &[f64]| {
        let j = y
            .iter()
            .position(|&v| v >= kappa)
            .expect("level is reached");
        x[j - 1] + (kappa - y[j - 1]) / (y[j] - y[j - 1])
    };
    let mut n: Vec<f64> = sites.iter().map(|&k| -(k as f64)).collect();
    let mut vals = lattice_i.to_vec();
    n.reverse();
    vals.reverse();
    let shift = rising(xi, profile_i) - rising(&n, &vals);
    let interp = |x: f64| {
        let h = xi[1] - xi[0];
        let t = (x - xi[0]) / h;
        let k = (t.floor() as usize).min(xi.len() - 2);
        let w = t - k as f64;
        (1.0 - w) * profile_i[k] + w * profile_i[k + 1]
    };
    n.iter()
        .zip(&vals)
        .map(|(&x, &v)| (x + shift, v))
        .filter(|(x, _)| x.abs() < window)
        .map(|(x, v)| (interp(x) - v).abs())
        .fold(0.0, f64::max)
}

/// Every file under `dir`, sorted, with contents.
pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

pub const DESK_CONFIG: &str = "\
model.lambda = 2
model.beta = 2
model.mu1 = 1
model.gamma = 1
model.d1 = 1
model.d2 = 1
model.d3 = 0
incidence.kind = bilinear
profile.c = 3.5
profile.X = 40
profile.m = 20
profile.tol = 1e-10
";
