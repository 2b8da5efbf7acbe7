//! Model parameters and the spatially homogeneous equilibria.

use thiserror::Error;

use crate::incidence::Incidence;
use crate::roots::{bisect, RootError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model parameter {name} = {value}: must satisfy {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("no endemic equilibrium: R0 = {r0} <= 1")]
    NoEndemicEquilibrium { r0: f64 },
    #[error(
        "endemic root bracket (0, {hi}] has {sign_changes} sign changes; expected exactly one"
    )]
    Bracketing { hi: f64, sign_changes: usize },
    #[error("endemic root finder failed: {0}")]
    Root(#[from] RootError),
}

/// Parameters of the lattice model. `mu2 = gamma + mu1` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    beta: f64,
    mu1: f64,
    gamma: f64,
    d1: f64,
    d2: f64,
    d3: f64,
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        beta: f64,
        mu1: f64,
        gamma: f64,
        d1: f64,
        d2: f64,
        d3: f64,
    ) -> Result<Self, ModelError> {
        let pos = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    value,
                    constraint: "value > 0",
                })
            }
        };
        let nonneg = |name, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    value,
                    constraint: "value >= 0",
                })
            }
        };
        pos("model.lambda", lambda)?;
        pos("model.beta", beta)?;
        pos("model.mu1", mu1)?;
        nonneg("model.gamma", gamma)?;
        pos("model.d1", d1)?;
        pos("model.d2", d2)?;
        nonneg("model.d3", d3)?;
        Ok(ModelParams {
            lambda,
            beta,
            mu1,
            gamma,
            d1,
            d2,
            d3,
        })
    }

    /// The reference parameter set `Lambda = 2, beta = 2, mu1 = 1, gamma = 1,
    /// d1 = d2 = 1, d3 = 0`.
    pub fn reference() -> Self {
        ModelParams::new(2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 0.0).expect("reference parameters are valid")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu1(&self) -> f64 {
        self.mu1
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn mu2(&self) -> f64 {
        self.gamma + self.mu1
    }
    pub fn d1(&self) -> f64 {
        self.d1
    }
    pub fn d2(&self) -> f64 {
        self.d2
    }
    pub fn d3(&self) -> f64 {
        self.d3
    }

    /// Copy with a different transmission coefficient.
    pub fn with_beta(&self, beta: f64) -> Result<Self, ModelError> {
        Self::new(
            self.lambda,
            beta,
            self.mu1,
            self.gamma,
            self.d1,
            self.d2,
            self.d3,
        )
    }

    /// Copy with a different infected migration coefficient.
    pub fn with_d2(&self, d2: f64) -> Result<Self, ModelError> {
        Self::new(
            self.lambda,
            self.beta,
            self.mu1,
            self.gamma,
            self.d1,
            d2,
            self.d3,
        )
    }

    /// `S0 = Lambda / mu1`.
    pub fn disease_free(&self) -> f64 {
        self.lambda / self.mu1
    }

    /// `R0 = beta S0 f'(0) / mu2`.
    pub fn basic_reproduction_number(&self, inc: &Incidence) -> f64 {
        self.beta * self.disease_free() * inc.f_prime_at_zero() / self.mu2()
    }

    /// Positive solution of the homogeneous equilibrium equations.
    ///
    /// Eliminates `S* = Lambda / (mu1 + beta f(I*))` and brackets the scalar
    /// equation on `(eps, Lambda / mu2]`.
    pub fn endemic_equilibrium(&self, inc: &Incidence) -> Result<(f64, f64), ModelError> {
        let r0 = self.basic_reproduction_number(inc);
        if r0 <= 1.0 {
            return Err(ModelError::NoEndemicEquilibrium { r0 });
        }
        let (lam, beta, mu1, mu2) = (self.lambda, self.beta, self.mu1, self.mu2());
        let g = |i: f64| {
            let bf = beta * inc.f_unchecked(i);
            lam * bf / (mu1 + bf) - mu2 * i
        };
        let lo = f64::EPSILON;
        let hi = lam / mu2;

        // Uniqueness is checked on a log-spaced scan rather than assumed.
        const SCAN: usize = 400;
        let mut sign_changes = 0;
        let mut prev = g(lo).signum();
        for k in 1..=SCAN {
            let x = lo * (hi / lo).powf(k as f64 / SCAN as f64);
            let s = g(x).signum();
            if s != 0.0 && prev != 0.0 && s != prev {
                sign_changes += 1;
            }
            if s != 0.0 {
                prev = s;
            }
        }
        if sign_changes != 1 {
            return Err(ModelError::Bracketing { hi, sign_changes });
        }

        let mut i_star = bisect(g, lo, hi, 1e-14 * hi.max(1.0))?;
        let bf = beta * inc.f_unchecked(i_star);
        let dg = lam * mu1 * beta * inc.f_prime_unchecked(i_star) / ((mu1 + bf) * (mu1 + bf)) - mu2;
        if dg != 0.0 {
            let polished = i_star - g(i_star) / dg;
            if polished > 0.0 && polished <= hi && g(polished).abs() <= g(i_star).abs() {
                i_star = polished;
            }
        }
        let s_star = lam / (mu1 + beta * inc.f_unchecked(i_star));
        Ok((s_star, i_star))
    }

    /// Disease-free level, `R0` and the endemic point when it exists.
    pub fn equilibria(&self, inc: &Incidence) -> Result<Equilibria, ModelError> {
        let r0 = self.basic_reproduction_number(inc);
        let endemic = if r0 > 1.0 {
            Some(self.endemic_equilibrium(inc)?)
        } else {
            None
        };
        Ok(Equilibria {
            s0: self.disease_free(),
            r0,
            endemic,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibria {
    pub s0: f64,
    pub r0: f64,
    /// `(S*, I*)`, present iff `R0 > 1`.
    pub endemic: Option<(f64, f64)>,
}

impl Equilibria {
    pub fn s_star(&self) -> Option<f64> {
        self.endemic.map(|e| e.0)
    }
    pub fn i_star(&self) -> Option<f64> {
        self.endemic.map(|e| e.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incidence::IncidenceKind;

    fn params(lambda: f64, beta: f64, mu1: f64, gamma: f64) -> ModelParams {
        ModelParams::new(lambda, beta, mu1, gamma, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn disease_free_level() {
        assert_eq!(params(2.0, 1.0, 1.0, 1.0).disease_free(), 2.0);
        assert_eq!(params(3.0, 1.0, 3.0, 1.0).disease_free(), 1.0);
        assert_eq!(params(1.0, 1.0, 4.0, 1.0).disease_free(), 0.25);
    }

    #[test]
    fn reproduction_number() {
        let bil = Incidence::bilinear();
        assert_eq!(
            params(2.0, 2.0, 1.0, 1.0).basic_reproduction_number(&bil),
            2.0
        );
        let r1 = params(2.0, 1.3, 1.0, 1.0).basic_reproduction_number(&bil);
        let r2 = params(2.0, 1.3 * 3.0, 1.0, 1.0).basic_reproduction_number(&bil);
        assert!((r2 - 3.0 * r1).abs() < 1e-14);
        let hm = Incidence::new(IncidenceKind::HeesterbeekMetz { k: 1.0 }).unwrap();
        assert_eq!(
            params(2.0, 1.0, 1.0, 1.0).basic_reproduction_number(&hm),
            0.5
        );
    }

    #[test]
    fn endemic_examples() {
        let p = params(2.0, 2.0, 1.0, 1.0);
        let (s, i) = p.endemic_equilibrium(&Incidence::bilinear()).unwrap();
        assert!((s - 1.0).abs() < 1e-12 && (i - 0.5).abs() < 1e-12);

        let sat = Incidence::new(IncidenceKind::Saturated { alpha: 1.0 }).unwrap();
        let (s, i) = p.endemic_equilibrium(&sat).unwrap();
        assert!((s - 4.0 / 3.0).abs() < 1e-12 && (i - 1.0 / 3.0).abs() < 1e-12);

        // beta = 0.9 gives R0 = 0.9
        let sub = params(2.0, 0.9, 1.0, 1.0);
        assert!(matches!(
            sub.endemic_equilibrium(&Incidence::bilinear()),
            Err(ModelError::NoEndemicEquilibrium { .. })
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        let err = ModelParams::new(1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(
            err,
            ModelError::InvalidParameter {
                name: "model.beta",
                ..
            }
        ));
        assert!(ModelParams::new(1.0, 1.0, 1.0, -0.5, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kinds() -> Vec<Incidence> {
            [
                IncidenceKind::Bilinear,
                IncidenceKind::Saturated { alpha: 0.8 },
                IncidenceKind::SaturatedPower { alpha: 0.5, p: 0.5 },
                IncidenceKind::HeesterbeekMetz { k: 0.3 },
                IncidenceKind::PowerSaturation {
                    eps: 0.7,
                    alpha_exp: 0.5,
                    gamma_exp: 0.8,
                },
                IncidenceKind::LogInsect {
                    nu: 1.5,
                    k_cap: 2.0,
                },
            ]
            .into_iter()
            .map(|k| Incidence::new(k).unwrap())
            .collect()
        }

        proptest! {
            #[test]
            fn endemic_point_balances(lam in 0.5f64..5.0, beta in 0.1f64..6.0,
                                      mu1 in 0.1f64..2.0, gamma in 0.0f64..2.0) {
                let p = ModelParams::new(lam, beta, mu1, gamma, 1.0, 1.0, 0.0).unwrap();
                for inc in kinds() {
                    if p.basic_reproduction_number(&inc) <= 1.0 + 1e-6 {
                        continue;
                    }
                    let (s, i) = p.endemic_equilibrium(&inc).unwrap();
                    let bsf = p.beta() * s * inc.f(i).unwrap();
                    prop_assert!(s > 0.0 && s < p.disease_free());
                    prop_assert!(i > 0.0);
                    prop_assert!((lam - bsf - mu1 * s).abs() < 1e-10);
                    prop_assert!((bsf - p.mu2() * i).abs() < 1e-10);
                    prop_assert!((lam - mu1 * s - p.mu2() * i).abs() < 1e-10);
                }
            }
        }
    }
}
