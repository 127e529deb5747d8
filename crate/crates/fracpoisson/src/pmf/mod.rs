//! State probabilities of the fractional Poisson hierarchy.
//!
//! Every family is the law of a Poisson process watched through one or two
//! independent random clocks, and its probability mass function P(k,t) is a
//! power series in the backward-shift structure of the generating function.
//! The evaluators here sum those series directly:
//!
//! * Poisson: P(k,t) = e^{−λt}(λt)^k/k!;
//! * time-fractional (order β): P(k,t) = Σ_{s≥k} (−λt^β)^s (−1)^k C(s,k) / Γ(βs+1);
//! * space-fractional (order α) and its time-fractional composition:
//!   P(k,t) = (−1)^k Σ_r (−λ^α t^β)^r / Γ(βr+1) · C(αr,k), with β = 1 the
//!   purely spatial case;
//! * tempered space-fractional (tempering μ): generating function
//!   e^{−t((μ+λ(1−w))^α − μ^α)}, evaluated as the space-fractional column at
//!   rate λ+μ rescaled by e^{tμ^α} (λ/(λ+μ))^k;
//! * tempered time-space-fractional (temperings μ, ν): nested series over
//!   the tempered stable and inverse tempered stable clocks;
//! * Gegenbauer type: generating function e^{−λ^{2d}(1−2uw+w²)^d t} and its
//!   Mittag-Leffler time-fractional variant, via Gegenbauer-polynomial
//!   coefficient recurrences;
//! * composite two-exponent shift: e^{−λt[(1−w)^{α₁}+(1−w)^{α₂}]}.
//!
//! All series alternate with severe cancellation for large k or t, so the
//! backing engine ([`series`]) shadows every column with log-magnitude
//! tracking and transparently reruns unresolved columns in extended
//! precision. Scalar functions here return plain `f64` probabilities;
//! [`pmf_table`] evaluates whole (k,t) grids and records per-entry
//! truncation diagnostics.

pub mod params;
pub(crate) mod series;

pub use params::{Family, FamilySpec, GegenbauerParams, ProcessParams};

use crate::error::Error;
use crate::specfun::SeriesConfig;
use crate::Result;
use rayon::prelude::*;
use series::AccuracyTarget;

/// A grid of state probabilities P(k, t_i) for one family.
///
/// `values[i][k]` is the probability of state `k` at time `t[i]`;
/// `terms_used[i][k]` the number of outer series terms consumed there, with
/// 0 marking entries produced by a closed form rather than a truncated
/// series. Entries of the proper families (the [`FamilySpec::Process`]
/// variants) have negligible negative roundoff clamped to zero so the rows
/// are usable as distributions directly.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfTable {
    pub params: FamilySpec,
    pub t: Vec<f64>,
    pub k_max: u64,
    pub values: Vec<Vec<f64>>,
    pub terms_used: Vec<Vec<u32>>,
}

impl PmfTable {
    /// Probability of state `k` at grid time index `ti`.
    pub fn prob(&self, k: u64, ti: usize) -> f64 {
        self.values[ti][k as usize]
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "t must be nonnegative and finite, got {t}"
        )));
    }
    Ok(())
}

/// δ_{k,0} column shared by every family at t = 0.
fn delta_column(k_max: usize) -> Vec<f64> {
    let mut v = vec![0.0; k_max + 1];
    v[0] = 1.0;
    v
}

/// Poisson mass P(k,t) = e^{−λt}(λt)^k/k!, evaluated in log space.
///
/// At t = 0 the initial condition δ_{k,0} is returned exactly. Both
/// `lambda` and `t` must be finite with `lambda > 0` and `t ≥ 0`; this
/// closed form cannot otherwise fail, so it returns a bare probability.
pub fn poisson_pmf(lambda: f64, k: u64, t: f64) -> f64 {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "lambda must be positive, got {lambda}"
    );
    assert!(
        t >= 0.0 && t.is_finite(),
        "t must be nonnegative and finite, got {t}"
    );
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    let ln_rate = libm::log(lambda * t);
    libm::exp(kf * ln_rate - lambda * t - libm::lgamma(kf + 1.0))
}

/// Time-fractional mass of order β.
///
/// P(k,t) = (λt^β)^k/k! Σ_r (k+r)!/r! (−λt^β)^r / Γ(β(k+r)+1), summed as a
/// joint sweep over the diagonal index s = k + r so all states share the
/// reciprocal gamma evaluations. β = 1 recovers the Poisson law.
pub fn tfpp_pmf(lambda: f64, beta: f64, k: u64, t: f64) -> Result<f64> {
    let p = ProcessParams::tfpp(lambda, beta)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::tfpp_columns(
        p.lambda,
        p.beta,
        k as usize,
        t,
        &cfg,
        &AccuracyTarget::full(),
    )?;
    Ok(col.values[k as usize])
}

/// Space-fractional mass of order α.
///
/// P(k,t) = ((−1)^k/k!) Σ_r (−λ^α t)^r/r! · Γ(αr+1)/Γ(αr−k+1), with the
/// reciprocal gamma taken as zero at the poles of Γ. α = 1 recovers the
/// Poisson law.
pub fn sfpp_pmf(lambda: f64, alpha: f64, k: u64, t: f64) -> Result<f64> {
    let p = ProcessParams::sfpp(lambda, alpha)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::space_time_columns(
        p.lambda,
        p.alpha,
        1.0,
        k as usize,
        t,
        &cfg,
        &AccuracyTarget::full(),
    )?;
    Ok(col.values[k as usize])
}

/// Time-space-fractional mass of orders (α, β).
///
/// P(k,t) = ((−1)^k/k!) Σ_r (−λ^α)^r t^{rβ}/Γ(1+rβ) · Γ(αr+1)/Γ(αr−k+1);
/// β = 1 reduces to the space-fractional family and α = 1 to the
/// time-fractional one.
pub fn tsfpp_pmf(lambda: f64, alpha: f64, beta: f64, k: u64, t: f64) -> Result<f64> {
    let p = ProcessParams::tsfpp(lambda, alpha, beta)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::space_time_columns(
        p.lambda,
        p.alpha,
        p.beta,
        k as usize,
        t,
        &cfg,
        &AccuracyTarget::full(),
    )?;
    Ok(col.values[k as usize])
}

/// Tempered space-fractional mass with tempering μ.
///
/// The generating function e^{−t((μ+λ(1−w))^α − μ^α)} factors into
/// e^{tμ^α} · e^{−t(λ+μ)^α(1−ρw)^α} with ρ = λ/(λ+μ), so the mass is the
/// plain space-fractional column at rate λ+μ scaled by e^{tμ^α} ρ^k. μ = 0
/// recovers the space-fractional law exactly.
pub fn tempered_sfpp_pmf(lambda: f64, alpha: f64, mu: f64, k: u64, t: f64) -> Result<f64> {
    let p = ProcessParams::tempered_sfpp(lambda, alpha, mu)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::tempered_sfpp_columns(
        p.lambda,
        p.alpha,
        p.mu,
        k as usize,
        t,
        &cfg,
        &AccuracyTarget::full(),
    )?;
    Ok(col.values[k as usize])
}

/// Tempered time-space-fractional mass with temperings (μ, ν).
///
/// Requires 0 < β < 1; at β = 1 the time clock is the identity and the
/// evaluation is delegated to [`tempered_sfpp_pmf`]. The series couples the
/// tempered stable spatial clock with the inverse tempered stable time
/// clock; truncation failures name the series level that stalled. Setting
/// μ = ν = 0 recovers the time-space-fractional law.
pub fn tempered_tsfpp_pmf(
    lambda: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
    nu: f64,
    k: u64,
    t: f64,
) -> Result<f64> {
    let p = ProcessParams::tempered_tsfpp(lambda, alpha, beta, mu, nu)?;
    if p.beta == 1.0 {
        return tempered_sfpp_pmf(lambda, alpha, mu, k, t);
    }
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::tempered_tsfpp_columns(&p, k as usize, t, &cfg, &AccuracyTarget::full())?;
    Ok(col.values[k as usize])
}

/// Solution value of the Gegenbauer-type equation in ordinary time.
///
/// P(k,t) is the coefficient of w^k in e^{−λ^{2d}(1−2uw+w²)^d t}, computed
/// as Σ_r (−λ^{2d}t)^r/r! · C_k^{(−rd)}(u) with the Gegenbauer polynomial
/// three-term recurrence. The solution family is defective for u < 1:
/// values may be negative and the total mass is below one, so the result
/// is a real number rather than a probability. `params.beta` is ignored.
pub fn gegenbauer_pmf(params: &GegenbauerParams, k: u64, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let ordinary = GegenbauerParams {
        beta: 1.0,
        ..*params
    };
    let col = series::gegenbauer_columns(&ordinary, k as usize, t, &cfg, &AccuracyTarget::full())?;
    Ok(col.values[k as usize])
}

/// Solution value of the Gegenbauer-type equation in fractional time.
///
/// Same expansion as [`gegenbauer_pmf`] with the exponential time weights
/// t^r/r! replaced by t^{rβ}/Γ(1+rβ); β = 1 reduces to the ordinary-time
/// solution and u = 1 collapses the operator to the time-space-fractional
/// family with α = 2d.
pub fn gegenbauer_ts_pmf(params: &GegenbauerParams, k: u64, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::gegenbauer_columns(params, k as usize, t, &cfg, &AccuracyTarget::full())?;
    Ok(col.values[k as usize])
}

/// Solution value of the two-exponent shift equation
/// dP/dt = −λ((1−B)^{α₁} + (1−B)^{α₂})P.
///
/// P(k,t) = (−1)^k Σ_r (−λt)^r/r! Σ_m C(r,m) C(α₁m+α₂(r−m), k). The
/// solution need not be a probability distribution; values are real.
pub fn composite_shift_pmf(lambda: f64, alpha1: f64, alpha2: f64, k: u64, t: f64) -> Result<f64> {
    FamilySpec::composite_shift(lambda, alpha1, alpha2)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let cfg = SeriesConfig::default();
    let col = series::composite_columns(
        lambda,
        alpha1,
        alpha2,
        k as usize,
        t,
        &cfg,
        &AccuracyTarget::full(),
    )?;
    Ok(col.values[k as usize])
}

/// True when the family is a proper probability distribution for every
/// parameter choice (the subordinated Poisson hierarchy, as opposed to the
/// defective Gegenbauer and composite-shift solution families).
fn is_proper(spec: &FamilySpec) -> bool {
    matches!(spec, FamilySpec::Process(_))
}

fn family_column(
    spec: &FamilySpec,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<(Vec<f64>, Vec<u32>)> {
    if t == 0.0 {
        return Ok((delta_column(k_max), vec![0; k_max + 1]));
    }
    let col = match spec {
        FamilySpec::Process(p) => match p.classify() {
            Family::Poisson => {
                return Ok((
                    series::poisson_column(p.lambda, k_max, t),
                    vec![0; k_max + 1],
                ));
            }
            Family::Tfpp => series::tfpp_columns(p.lambda, p.beta, k_max, t, cfg, target)?,
            Family::Sfpp => {
                series::space_time_columns(p.lambda, p.alpha, 1.0, k_max, t, cfg, target)?
            }
            Family::Tsfpp => {
                series::space_time_columns(p.lambda, p.alpha, p.beta, k_max, t, cfg, target)?
            }
            Family::TemperedSfpp => {
                series::tempered_sfpp_columns(p.lambda, p.alpha, p.mu, k_max, t, cfg, target)?
            }
            Family::TemperedTsfpp => series::tempered_tsfpp_columns(p, k_max, t, cfg, target)?,
        },
        FamilySpec::Gegenbauer(g) => {
            let ordinary = GegenbauerParams { beta: 1.0, ..*g };
            series::gegenbauer_columns(&ordinary, k_max, t, cfg, target)?
        }
        FamilySpec::GegenbauerTs(g) => series::gegenbauer_columns(g, k_max, t, cfg, target)?,
        FamilySpec::CompositeShift {
            lambda,
            alpha1,
            alpha2,
        } => series::composite_columns(*lambda, *alpha1, *alpha2, k_max, t, cfg, target)?,
    };
    Ok((col.values, col.terms))
}

/// Evaluates P(k, t_i) for k = 0..=k_max over a time grid.
///
/// The grid must be strictly increasing and nonnegative. Rows are
/// independent and evaluated in parallel; every entry is produced by the
/// same per-column series drive regardless of thread schedule, so the
/// result is deterministic. Truncation failures are annotated with the
/// grid time at which they occurred.
pub fn pmf_table(
    spec: &FamilySpec,
    k_max: u64,
    t_grid: &[f64],
    config: &SeriesConfig,
) -> Result<PmfTable> {
    config.validate()?;
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid must be nonempty"));
    }
    for &t in t_grid {
        check_time(t)?;
    }
    for pair in t_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::invalid(format!(
                "t_grid must be strictly increasing, got {} before {}",
                pair[0], pair[1]
            )));
        }
    }

    let km = usize::try_from(k_max).map_err(|_| Error::invalid("k_max does not fit in memory"))?;
    let proper = is_proper(spec);
    let rows: Result<Vec<(Vec<f64>, Vec<u32>)>> = t_grid
        .par_iter()
        .map(|&t| {
            let (mut values, terms) = family_column(spec, km, t, config, &AccuracyTarget::full())
                .map_err(|e| match e {
                Error::NonConvergence {
                    context,
                    level,
                    terms,
                } => Error::NonConvergence {
                    context: format!("{context}, at grid time t={t}"),
                    level,
                    terms,
                },
                other => other,
            })?;
            if proper {
                for v in values.iter_mut() {
                    if *v < 0.0 && *v >= -1e-12 {
                        *v = 0.0;
                    }
                }
            }
            Ok((values, terms))
        })
        .collect();
    let rows = rows?;
    let mut values = Vec::with_capacity(rows.len());
    let mut terms_used = Vec::with_capacity(rows.len());
    for (v, n) in rows {
        values.push(v);
        terms_used.push(n);
    }
    Ok(PmfTable {
        params: *spec,
        t: t_grid.to_vec(),
        k_max,
        values,
        terms_used,
    })
}
