//! Parameter sets and family classification.

use crate::error::Error;
use crate::Result;

/// Parameters of the subordinated Poisson hierarchy `N(S_{α,μ}(Y_{β,ν}(t)))`.
///
/// * `lambda` — base Poisson rate, strictly positive;
/// * `alpha` — spatial stability index in `(0, 1]`; `alpha = 1` means no
///   outer (spatial) subordination;
/// * `beta` — time-fractional index in `(0, 1]`; `beta = 1` means no inverse
///   time subordinator;
/// * `mu` — spatial tempering rate, `≥ 0`;
/// * `nu` — temporal tempering rate, `≥ 0` (only relevant when `beta < 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
}

/// Which member of the hierarchy a [`ProcessParams`] describes, decided by
/// the non-degenerate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Poisson,
    Tfpp,
    Sfpp,
    Tsfpp,
    TemperedSfpp,
    TemperedTsfpp,
}

impl ProcessParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64, mu: f64, nu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be nonnegative, got {mu}")));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be nonnegative, got {nu}")));
        }
        Ok(ProcessParams {
            lambda,
            alpha,
            beta,
            mu,
            nu,
        })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0, 1.0, 0.0, 0.0)
    }

    pub fn tfpp(lambda: f64, beta: f64) -> Result<Self> {
        Self::new(lambda, 1.0, beta, 0.0, 0.0)
    }

    pub fn sfpp(lambda: f64, alpha: f64) -> Result<Self> {
        Self::new(lambda, alpha, 1.0, 0.0, 0.0)
    }

    pub fn tsfpp(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(lambda, alpha, beta, 0.0, 0.0)
    }

    pub fn tempered_sfpp(lambda: f64, alpha: f64, mu: f64) -> Result<Self> {
        Self::new(lambda, alpha, 1.0, mu, 0.0)
    }

    pub fn tempered_tsfpp(lambda: f64, alpha: f64, beta: f64, mu: f64, nu: f64) -> Result<Self> {
        Self::new(lambda, alpha, beta, mu, nu)
    }

    pub fn classify(&self) -> Family {
        // At alpha = 1 the spatial clock has Laplace exponent
        // (mu + s) - mu = s, the identity, so mu is inert; nu is inert the
        // same way when beta = 1.
        let mu = if self.alpha == 1.0 { 0.0 } else { self.mu };
        let nu = if self.beta == 1.0 { 0.0 } else { self.nu };
        match (self.alpha == 1.0, self.beta == 1.0, mu > 0.0, nu > 0.0) {
            (true, true, _, _) => Family::Poisson,
            (true, false, _, false) => Family::Tfpp,
            (false, true, false, _) => Family::Sfpp,
            (false, true, true, _) => Family::TemperedSfpp,
            (false, false, false, false) => Family::Tsfpp,
            (_, false, _, _) => Family::TemperedTsfpp,
        }
    }
}

/// Parameters of the Gegenbauer-type counting solutions driven by the
/// operator `(1 − 2uB + B²)^d` with optional fractional time index `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerParams {
    pub lambda: f64,
    pub d: f64,
    pub u: f64,
    pub beta: f64,
}

impl GegenbauerParams {
    pub fn new(lambda: f64, d: f64, u: f64, beta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(d > 0.0 && d <= 0.5) {
            return Err(Error::invalid(format!("d must lie in (0, 1/2], got {d}")));
        }
        if u.is_nan() || u.abs() > 1.0 {
            return Err(Error::invalid(format!("u must lie in [-1, 1], got {u}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(GegenbauerParams { lambda, d, u, beta })
    }
}

/// A fully-specified distribution family for table construction, transform
/// extraction and the command-line interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec {
    Process(ProcessParams),
    /// Gegenbauer solution in ordinary time (`beta` ignored).
    Gegenbauer(GegenbauerParams),
    /// Gegenbauer solution with Caputo time index `beta`.
    GegenbauerTs(GegenbauerParams),
    /// Solution of the two-exponent equation
    /// `dP/dt = -λ((1−B)^{α₁} + (1−B)^{α₂})P`.
    CompositeShift {
        lambda: f64,
        alpha1: f64,
        alpha2: f64,
    },
}

impl FamilySpec {
    pub fn composite_shift(lambda: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        for (name, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::invalid(format!(
                    "{name} must lie in (0, 1], got {a}"
                )));
            }
        }
        Ok(FamilySpec::CompositeShift {
            lambda,
            alpha1,
            alpha2,
        })
    }

    /// Stable identifier used in reports and file metadata.
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Process(p) => match p.classify() {
                Family::Poisson => "poisson",
                Family::Tfpp => "tfpp",
                Family::Sfpp => "sfpp",
                Family::Tsfpp => "tsfpp",
                Family::TemperedSfpp => "tempered-sfpp",
                Family::TemperedTsfpp => "tempered-tsfpp",
            },
            FamilySpec::Gegenbauer(_) => "gegenbauer",
            FamilySpec::GegenbauerTs(_) => "gegenbauer-ts",
            FamilySpec::CompositeShift { .. } => "composite-shift",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_out_of_domain() {
        assert!(ProcessParams::new(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ProcessParams::new(1.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ProcessParams::new(1.0, 1.1, 1.0, 0.0, 0.0).is_err());
        assert!(ProcessParams::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ProcessParams::new(1.0, 1.0, 1.0, -0.5, 0.0).is_err());
        assert!(GegenbauerParams::new(1.0, 0.6, 0.5, 1.0).is_err());
        assert!(GegenbauerParams::new(1.0, 0.25, 1.5, 1.0).is_err());
        assert!(FamilySpec::composite_shift(1.0, 0.3, 1.2).is_err());
    }

    #[test]
    fn classification_by_degenerate_parameters() {
        let f = |l, a, b, m, n| ProcessParams::new(l, a, b, m, n).unwrap().classify();
        assert_eq!(f(1.0, 1.0, 1.0, 0.0, 0.0), Family::Poisson);
        assert_eq!(f(1.0, 1.0, 0.5, 0.0, 0.0), Family::Tfpp);
        assert_eq!(f(1.0, 0.7, 1.0, 0.0, 0.0), Family::Sfpp);
        assert_eq!(f(1.0, 0.7, 0.5, 0.0, 0.0), Family::Tsfpp);
        assert_eq!(f(1.0, 0.7, 1.0, 0.5, 0.0), Family::TemperedSfpp);
        assert_eq!(f(1.0, 0.7, 0.5, 0.5, 0.5), Family::TemperedTsfpp);
        assert_eq!(f(1.0, 0.7, 0.5, 0.0, 0.5), Family::TemperedTsfpp);
        // nu is inert when beta = 1, mu inert when alpha = 1.
        assert_eq!(f(1.0, 0.7, 1.0, 0.0, 2.0), Family::Sfpp);
        assert_eq!(f(1.0, 1.0, 1.0, 2.0, 0.0), Family::Poisson);
        assert_eq!(f(1.0, 1.0, 0.5, 2.0, 0.0), Family::Tfpp);
        assert_eq!(f(1.0, 1.0, 0.5, 0.0, 0.5), Family::TemperedTsfpp);
    }
}
