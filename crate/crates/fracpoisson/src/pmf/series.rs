//! Column evaluators for the state-probability series of every family.
//!
//! Each family's probabilities P(k,t), k = 0..=k_max, come from one shared
//! sweep over the outer series index, so a whole column costs little more
//! than its hardest entry. All series here are alternating with terms that
//! can dwarf the final probability (the time-fractional family reaches
//! e^178-sized terms for 1e-39-sized results inside the supported parameter
//! box), so every evaluator is generic over the internal real type: a first
//! pass runs in `f64` while tracking, per column, the accumulated absolute
//! mass and the largest term's log-magnitude; columns whose cancellation
//! exceeds what a double can resolve are rerun through the same code over
//! MPFR floats at a precision planned from those shadows.
//!
//! The planning loop targets an [`AccuracyTarget`]: full relative accuracy
//! for the public scalar operations, or a caller-chosen absolute floor for
//! bulk invariant scans where only "is it nonnegative to 1e-12" matters,
//! which keeps grid sweeps out of needlessly deep precision.

use crate::error::Error;
use crate::pmf::params::{GegenbauerParams, ProcessParams};
use crate::specfun::{f64_trusted, plan_bits, Kahan, SeriesConfig, Stagnation};
use crate::xreal::{GammaArg, Real, Xf};
use crate::Result;

/// Natural log of the unit roundoff for a given mantissa width.
fn ln_eps(bits: u32) -> f64 {
    -(bits as f64) * std::f64::consts::LN_2
}

/// (−1)^k as a working-precision constant.
fn parity_sign<R: Real>(prec: u32, k: usize) -> (R, f64) {
    let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    (R::of(prec, s), 0.0)
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Accuracy demanded of a finished column.
///
/// A value v is accepted once its absolute error bound drops below
/// `max(rel_floor * |v|, abs_floor)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AccuracyTarget {
    pub abs_floor: f64,
    pub rel_floor: f64,
}

impl AccuracyTarget {
    /// Full relative accuracy down to the bottom of the double range.
    pub fn full() -> Self {
        AccuracyTarget {
            abs_floor: 1e-315,
            rel_floor: 1e-12,
        }
    }

    /// Relative accuracy only above an absolute floor; values below the
    /// floor are resolved to within it but not beyond.
    pub fn absolute(abs_floor: f64) -> Self {
        AccuracyTarget {
            abs_floor,
            rel_floor: 1e-12,
        }
    }
}

/// A finished column of P(k,t) values with evaluation diagnostics.
#[derive(Clone, Debug)]
pub(crate) struct Column {
    pub values: Vec<f64>,
    pub terms: Vec<u32>,
    pub escalated: bool,
    pub bits: u32,
}

/// What one backend pass reports back to the planner.
struct PassData {
    values: Vec<f64>,
    ln_value: Vec<f64>,
    sum_abs: Vec<f64>,
    ln_top: Vec<f64>,
    terms: Vec<u32>,
}

/// Per-column accumulation state shared by the row-sweep evaluators.
///
/// Each outer-index step hands every still-open column one signed term plus
/// an analytic estimate of its log-magnitude (kept finite even where the
/// `f64` backend has overflowed). A column closes by the standard stagnation
/// rule once it has seen a nonzero term; before that it is granted
/// `k + window + 5` exact zeros, which covers series whose first nonzero
/// contribution arrives only at outer index ~k, and after which the column
/// is declared structurally zero.
struct ColumnAccum<R: Real> {
    sums: Vec<Kahan<R>>,
    sum_abs: Vec<f64>,
    ln_top: Vec<f64>,
    stag: Vec<Stagnation>,
    seen: Vec<bool>,
    zero_run: Vec<u32>,
    open: usize,
}

impl<R: Real> ColumnAccum<R> {
    fn new(prec: u32, k_max: usize) -> Self {
        let n = k_max + 1;
        ColumnAccum {
            sums: (0..n).map(|_| Kahan::new(prec)).collect(),
            sum_abs: vec![0.0; n],
            ln_top: vec![f64::NEG_INFINITY; n],
            stag: vec![Stagnation::new(); n],
            seen: vec![false; n],
            zero_run: vec![0; n],
            open: n,
        }
    }

    fn is_open(&self, k: usize) -> bool {
        !self.stag[k].done
    }

    fn all_done(&self) -> bool {
        self.open == 0
    }

    fn close(&mut self, k: usize) {
        if !self.stag[k].done {
            self.stag[k].done = true;
            self.open -= 1;
        }
    }

    fn add(&mut self, cfg: &SeriesConfig, k: usize, term: &R, ln_term: f64) {
        if self.stag[k].done {
            return;
        }
        self.sums[k].add(term);
        let ta = term.abs().to_f64();
        self.sum_abs[k] += ta;
        if ln_term > self.ln_top[k] {
            self.ln_top[k] = ln_term;
        }
        if ta == 0.0 && !self.seen[k] {
            self.stag[k].terms += 1;
            self.zero_run[k] += 1;
            if self.zero_run[k] > k as u32 + cfg.stagnation_window + 5 {
                self.close(k);
            }
            return;
        }
        self.seen[k] = true;
        let partial = self.sums[k].abs_f64();
        if !ta.is_finite() || !partial.is_finite() {
            // The f64 backend overflowed; the value is garbage and the
            // planner will rerun this column in extended precision, so
            // stop feeding it.
            self.stag[k].terms += 1;
            self.close(k);
            return;
        }
        self.stag[k].update(cfg, ta, partial);
        if self.stag[k].done {
            self.open -= 1;
        }
    }

    /// Packs up the pass, applying a per-k multiplier `scale(k)` (used for
    /// global prefactors such as (−1)^k or e^{tμ^α}(λ/(λ+μ))^k).
    fn finish(self, prec: u32, scale: impl Fn(usize) -> (R, f64)) -> PassData {
        let n = self.sums.len();
        let mut values = Vec::with_capacity(n);
        let mut ln_value = Vec::with_capacity(n);
        let mut sum_abs = Vec::with_capacity(n);
        let mut ln_top = Vec::with_capacity(n);
        let mut terms = Vec::with_capacity(n);
        for (k, acc) in self.sums.into_iter().enumerate() {
            let (mul, ln_mul) = scale(k);
            let v = acc.value().mul(&mul);
            values.push(v.to_f64());
            ln_value.push(v.ln_abs_f64());
            sum_abs.push(self.sum_abs[k] * mul.abs().to_f64());
            ln_top.push(self.ln_top[k] + ln_mul);
            terms.push(self.stag[k].terms);
        }
        let _ = prec;
        PassData {
            values,
            ln_value,
            sum_abs,
            ln_top,
            terms,
        }
    }
}

/// Plans precision and resolves columns until every entry meets the target.
///
/// `run(0)` must evaluate the column in plain doubles; `run(bits)` reruns it
/// over MPFR floats of the given width. Acceptance per column: either the
/// value sits at or below the absolute floor with the working precision
/// covering the spread from the largest term down to that floor, or the
/// precision covers the spread down to the value itself with ≥64 bits to
/// spare (the double pass instead uses the tracked `sum_abs` directly).
fn drive(
    name: &str,
    k_max: usize,
    target: &AccuracyTarget,
    run: impl Fn(u32) -> Result<PassData>,
) -> Result<Column> {
    let p0 = run(0)?;
    let mut values = p0.values;
    let mut terms = p0.terms;
    let n = k_max + 1;
    let ln_af = libm::log(target.abs_floor);

    let mut unresolved: Vec<usize> = (0..n)
        .filter(|&k| {
            !f64_trusted(
                p0.sum_abs[k],
                values[k].abs(),
                target.abs_floor,
                target.rel_floor,
            )
        })
        .collect();
    if unresolved.is_empty() {
        return Ok(Column {
            values,
            terms,
            escalated: false,
            bits: 0,
        });
    }

    let mut ln_top: Vec<f64> = p0.ln_top;
    let mut floors = vec![0.0f64; n];
    for &k in &unresolved {
        let v = values[k];
        floors[k] = if v.is_finite() && v != 0.0 {
            libm::log(v.abs()) - 40.0
        } else {
            -120.0
        };
        if !ln_top[k].is_finite() {
            ln_top[k] = 0.0;
        }
    }

    let mut bits = 0;
    for _ in 0..8 {
        bits = unresolved
            .iter()
            .map(|&k| plan_bits(ln_top[k].max(0.0), floors[k]))
            .max()
            .unwrap_or(192);
        let px = run(bits)?;
        let mut still = Vec::new();
        for &k in &unresolved {
            if px.ln_top[k].is_finite() && px.ln_top[k] > ln_top[k] {
                ln_top[k] = px.ln_top[k];
            }
            let lnv = px.ln_value[k];
            let top = ln_top[k].max(0.0);
            if lnv <= ln_af + 2.0 {
                // At or below the absolute floor; precision must span from
                // the largest term down to the floor itself.
                if bits + 32 >= plan_bits(top, ln_af) {
                    values[k] = px.values[k];
                    terms[k] = px.terms[k];
                } else {
                    floors[k] = floors[k].min(ln_af - 40.0);
                    still.push(k);
                }
            } else if lnv < floors[k] + 2.0 || bits + 32 < plan_bits(top, lnv) {
                // Value landed near (or below) the planning floor, or the
                // observed spread ate the margin: replan deeper.
                floors[k] = floors[k].min(lnv - 40.0);
                still.push(k);
            } else {
                values[k] = px.values[k];
                terms[k] = px.terms[k];
            }
        }
        unresolved = still;
        if unresolved.is_empty() {
            return Ok(Column {
                values,
                terms,
                escalated: true,
                bits,
            });
        }
    }
    Err(Error::NonConvergence {
        context: format!("{name}: precision escalation did not settle"),
        level: "precision",
        terms: bits,
    })
}

/// Poisson column P(k,t) = e^{−λt}(λt)^k/k!, in log space; exact at t = 0.
pub(crate) fn poisson_column(lambda: f64, k_max: usize, t: f64) -> Vec<f64> {
    if t == 0.0 {
        let mut v = vec![0.0; k_max + 1];
        v[0] = 1.0;
        return v;
    }
    let ln_rate = libm::log(lambda * t);
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            libm::exp(kf * ln_rate - lambda * t - libm::lgamma(kf + 1.0))
        })
        .collect()
}

/// Space/time-fractional column:
/// P(k,t) = (−1)^k Σ_r (−λ^α t^β)^r / Γ(βr+1) · C(αr, k).
///
/// β = 1 is the space-fractional family, α = 1 the Poisson reduction;
/// the generalized binomial over k is generated by the exact recurrence
/// C(γ,k+1) = C(γ,k)(γ−k)/(k+1) with γ = αr assembled exactly.
fn space_time_pass<R: Real>(
    prec: u32,
    lambda: f64,
    alpha: f64,
    beta: f64,
    t: f64,
    k_max: usize,
    cfg: &SeriesConfig,
) -> Result<PassData> {
    let ln_z = alpha * libm::log(lambda) + beta * libm::log(t);
    let z: R = R::powf_of(prec, lambda, alpha).mul(&R::powf_of(prec, t, beta));
    let neg_z = z.neg();
    let mut zpow = R::of(prec, 1.0);
    let mut acc: ColumnAccum<R> = ColumnAccum::new(prec, k_max);

    let mut r: u32 = 0;
    while r < cfg.max_terms && !acc.all_done() {
        let s = zpow.mul(&R::rgamma_affine(prec, GammaArg::new(beta, r as i64, 1.0)));
        let ln_s = r as f64 * ln_z - libm::lgamma(beta * r as f64 + 1.0);
        let mut c = R::of(prec, 1.0);
        let mut ln_c = 0.0f64;
        for k in 0..=k_max {
            if acc.is_open(k) {
                let term = s.mul(&c);
                acc.add(cfg, k, &term, ln_s + ln_c);
            }
            // C(αr, k+1) from C(αr, k); αr−k is formed exactly.
            let gmk = R::affine(prec, GammaArg::new(alpha, r as i64, -(k as f64)));
            c = c.mul(&gmk).div_f64(k as f64 + 1.0);
            ln_c += libm::log(libm::fabs(alpha * r as f64 - k as f64)) - libm::log(k as f64 + 1.0);
        }
        zpow = zpow.mul(&neg_z);
        r += 1;
    }
    if !acc.all_done() {
        return Err(Error::NonConvergence {
            context: format!(
                "state probability series (lambda={lambda}, alpha={alpha}, beta={beta}, t={t})"
            ),
            level: "r",
            terms: r,
        });
    }
    Ok(acc.finish(prec, |k| parity_sign::<R>(prec, k)))
}

pub(crate) fn space_time_columns(
    lambda: f64,
    alpha: f64,
    beta: f64,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<Column> {
    drive("space-time-fractional pmf", k_max, target, |bits| {
        if bits == 0 {
            space_time_pass::<f64>(0, lambda, alpha, beta, t, k_max, cfg)
        } else {
            space_time_pass::<Xf>(bits, lambda, alpha, beta, t, k_max, cfg)
        }
    })
}

/// Time-fractional column by a joint diagonal sweep:
/// P(k,t) = Σ_{s≥k} (−x)^s (−1)^k C(s,k) / Γ(βs+1), x = λt^β.
///
/// All k share the single reciprocal gamma of each diagonal s = k + r.
fn tfpp_pass<R: Real>(
    prec: u32,
    lambda: f64,
    beta: f64,
    t: f64,
    k_max: usize,
    cfg: &SeriesConfig,
) -> Result<PassData> {
    let ln_x = libm::log(lambda) + beta * libm::log(t);
    let x: R = R::powf_of(prec, t, beta).mul_f64(lambda);
    let neg_x = x.neg();
    let mut xpow = R::of(prec, 1.0); // (−x)^s
    let mut acc: ColumnAccum<R> = ColumnAccum::new(prec, k_max);

    let mut s: u32 = 0;
    loop {
        let base = xpow.mul(&R::rgamma_affine(prec, GammaArg::new(beta, s as i64, 1.0)));
        let ln_base = s as f64 * ln_x - libm::lgamma(beta * s as f64 + 1.0);
        let mut c = R::of(prec, 1.0); // C(s, k)
        let mut ln_c = 0.0f64;
        let top = (s as usize).min(k_max);
        for k in 0..=top {
            if acc.is_open(k) {
                let term = base.mul(&c);
                acc.add(cfg, k, &term, ln_base + ln_c);
            }
            let sf = s as f64;
            let kf = k as f64;
            c = c.mul_f64(sf - kf).div_f64(kf + 1.0);
            ln_c += libm::log(sf - kf) - libm::log(kf + 1.0);
        }
        s += 1;
        if acc.all_done() {
            break;
        }
        // Column k only starts receiving terms at s = k, so the sweep must
        // reach k_max before term counts bound anything.
        if s >= cfg.max_terms.saturating_add(k_max as u32) {
            return Err(Error::NonConvergence {
                context: format!(
                    "time-fractional pmf series (lambda={lambda}, beta={beta}, t={t})"
                ),
                level: "r",
                terms: s,
            });
        }
        xpow = xpow.mul(&neg_x);
    }
    Ok(acc.finish(prec, |k| parity_sign::<R>(prec, k)))
}

pub(crate) fn tfpp_columns(
    lambda: f64,
    beta: f64,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<Column> {
    drive("time-fractional pmf", k_max, target, |bits| {
        if bits == 0 {
            tfpp_pass::<f64>(0, lambda, beta, t, k_max, cfg)
        } else {
            tfpp_pass::<Xf>(bits, lambda, beta, t, k_max, cfg)
        }
    })
}

/// Tempered space-fractional column through the generating function
/// e^{−t((μ+λ(1−w))^α−μ^α)} = e^{tμ^α} · e^{−t(λ+μ)^α(1−ρw)^α}, ρ = λ/(λ+μ):
/// the column equals the plain space-fractional column at rate λ+μ scaled
/// entrywise by e^{tμ^α} ρ^k, which is the closed form of the stated
/// double series (the m-sum telescopes; the series itself converges only
/// for μ ≤ λ while this form is valid for all μ ≥ 0).
pub(crate) fn tempered_sfpp_columns(
    lambda: f64,
    alpha: f64,
    mu: f64,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<Column> {
    let ln_pref0 = t * libm::pow(mu, alpha);
    let inner = AccuracyTarget {
        abs_floor: libm::exp(libm::log(target.abs_floor) - ln_pref0.max(0.0)).max(1e-320),
        rel_floor: target.rel_floor,
    };
    let rho = lambda / (lambda + mu);
    let ln_rho = libm::log(rho);
    let mut col = drive("tempered space-fractional pmf", k_max, &inner, |bits| {
        if bits == 0 {
            space_time_pass::<f64>(0, lambda + mu, alpha, 1.0, t, k_max, cfg)
        } else {
            space_time_pass::<Xf>(bits, lambda + mu, alpha, 1.0, t, k_max, cfg)
        }
    })?;
    for (k, v) in col.values.iter_mut().enumerate() {
        *v *= libm::exp(ln_pref0 + k as f64 * ln_rho);
    }
    Ok(col)
}

/// Gegenbauer-type column:
/// P(k,t) = Σ_r s_r · c_k(rd, u), with c_k(rd,u) = [w^k](1−2uw+w²)^{rd},
/// s_r = (−λ^{2d})^r t^{βr}/Γ(βr+1) (β = 1 gives the plain exponential
/// weights t^r/r!).
///
/// The coefficients c_k are Gegenbauer polynomials C_k^{(γ)}(u) with index
/// γ = −rd, generated by the three-term recurrence
/// n C_n = 2(n+γ−1)u C_{n−1} − (n+2γ−2) C_{n−2}, whose index weights are
/// assembled exactly from (d, r, n).
fn gegenbauer_pass<R: Real>(
    prec: u32,
    g: &GegenbauerParams,
    t: f64,
    k_max: usize,
    cfg: &SeriesConfig,
) -> Result<PassData> {
    let GegenbauerParams { lambda, d, u, beta } = *g;
    let ln_z = 2.0 * d * libm::log(lambda) + beta * libm::log(t);
    let z: R = R::powf_of(prec, lambda, 2.0 * d).mul(&R::powf_of(prec, t, beta));
    let neg_z = z.neg();
    let mut zpow = R::of(prec, 1.0);
    let mut acc: ColumnAccum<R> = ColumnAccum::new(prec, k_max);

    let mut r: u32 = 0;
    while r < cfg.max_terms && !acc.all_done() {
        let s = zpow.mul(&R::rgamma_affine(prec, GammaArg::new(beta, r as i64, 1.0)));
        let ln_s = r as f64 * ln_z - libm::lgamma(beta * r as f64 + 1.0);
        // Row of Gegenbauer coefficients c_n, n = 0..=k_max, at γ = −rd.
        let mut c_nm2 = R::of(prec, 1.0);
        let gam2u = R::affine(prec, GammaArg::new(-d, r as i64, 0.0)).mul_f64(2.0 * u);
        let mut c_nm1 = gam2u;
        for k in 0..=k_max {
            let c_here = if k == 0 { &c_nm2 } else { &c_nm1 };
            if acc.is_open(k) {
                let term = s.mul(c_here);
                acc.add(cfg, k, &term, ln_s + c_here.ln_abs_f64());
            }
            if k >= 1 {
                let nf = (k + 1) as f64;
                let w1 = R::affine(prec, GammaArg::new(-d, r as i64, nf - 1.0)).mul_f64(2.0 * u);
                let w2 = R::affine(prec, GammaArg::new(-2.0 * d, r as i64, nf - 2.0));
                let c_n = w1.mul(&c_nm1).sub(&w2.mul(&c_nm2)).div_f64(nf);
                c_nm2 = c_nm1;
                c_nm1 = c_n;
            }
        }
        zpow = zpow.mul(&neg_z);
        r += 1;
    }
    if !acc.all_done() {
        return Err(Error::NonConvergence {
            context: format!(
                "gegenbauer pmf series (lambda={lambda}, d={d}, u={u}, beta={beta}, t={t})"
            ),
            level: "r",
            terms: r,
        });
    }
    Ok(acc.finish(prec, |_| (R::of(prec, 1.0), 0.0)))
}

pub(crate) fn gegenbauer_columns(
    g: &GegenbauerParams,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<Column> {
    drive("gegenbauer pmf", k_max, target, |bits| {
        if bits == 0 {
            gegenbauer_pass::<f64>(0, g, t, k_max, cfg)
        } else {
            gegenbauer_pass::<Xf>(bits, g, t, k_max, cfg)
        }
    })
}

/// Composite two-exponent shift column:
/// P(k,t) = (−1)^k Σ_r (−λt)^r/r! Σ_{m=0}^{r} C(r,m) C(α₁m+α₂(r−m), k).
///
/// The inner m-sum is finite; both binomial factors are generated by exact
/// recurrences and the row is assembled per r before the stagnation test.
fn composite_pass<R: Real>(
    prec: u32,
    lambda: f64,
    alpha1: f64,
    alpha2: f64,
    t: f64,
    k_max: usize,
    cfg: &SeriesConfig,
) -> Result<PassData> {
    let neg_z = R::of(prec, lambda * t).neg();
    let mut spow = R::of(prec, 1.0); // (−λt)^r / r!
    let mut acc: ColumnAccum<R> = ColumnAccum::new(prec, k_max);
    let mut row: Vec<Kahan<R>> = Vec::new();

    let mut r: u32 = 0;
    while r < cfg.max_terms && !acc.all_done() {
        row.clear();
        row.resize_with(k_max + 1, || Kahan::new(prec));
        let mut b = R::of(prec, 1.0); // C(r, m)
        for m in 0..=r {
            let gam = R::affine(prec, GammaArg::new(alpha1, m as i64, 0.0))
                .add(&R::affine(prec, GammaArg::new(alpha2, (r - m) as i64, 0.0)));
            let mut c = b.clone(); // C(r,m) · C(γ, k) via the k-recurrence
            for (k, slot) in row.iter_mut().enumerate() {
                if k > 0 {
                    let kf = k as f64;
                    c = c.mul(&gam.sub(&R::of(prec, kf - 1.0))).div_f64(kf);
                }
                slot.add(&c);
            }
            b = b.mul_f64((r - m) as f64).div_f64(m as f64 + 1.0);
        }
        for (k, slot) in row.iter().enumerate() {
            if acc.is_open(k) {
                let term = spow.mul(slot.value());
                let lt = term.ln_abs_f64();
                acc.add(cfg, k, &term, lt);
            }
        }
        spow = spow.mul(&neg_z).div_f64(r as f64 + 1.0);
        r += 1;
    }
    if !acc.all_done() {
        return Err(Error::NonConvergence {
            context: format!(
                "composite shift pmf series (lambda={lambda}, alpha1={alpha1}, alpha2={alpha2}, t={t})"
            ),
            level: "r",
            terms: r,
        });
    }
    Ok(acc.finish(prec, |k| parity_sign::<R>(prec, k)))
}

pub(crate) fn composite_columns(
    lambda: f64,
    alpha1: f64,
    alpha2: f64,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<Column> {
    drive("composite shift pmf", k_max, target, |bits| {
        if bits == 0 {
            composite_pass::<f64>(0, lambda, alpha1, alpha2, t, k_max, cfg)
        } else {
            composite_pass::<Xf>(bits, lambda, alpha1, alpha2, t, k_max, cfg)
        }
    })
}

/// Reciprocal-gamma table RGT[m][q] = 1/Γ(βq + m + 1).
///
/// Only row zero needs actual gamma evaluations; each next row divides by
/// the exactly assembled argument βq + (m+1), via Γ(x+1) = xΓ(x).
struct RgammaTable<R: Real> {
    prec: u32,
    beta: f64,
    rows: Vec<Vec<R>>,
    ln_rows: Vec<Vec<f64>>,
}

impl<R: Real> RgammaTable<R> {
    fn new(prec: u32, beta: f64) -> Self {
        RgammaTable {
            prec,
            beta,
            rows: Vec::new(),
            ln_rows: Vec::new(),
        }
    }

    fn ensure(&mut self, m: usize, q: usize) {
        while self.rows.len() <= m {
            self.rows.push(Vec::new());
            self.ln_rows.push(Vec::new());
        }
        for mi in 0..=m {
            // Row mi may need extension up to q even when a lower row
            // already has it, since each row extends independently.
            let start = self.rows[mi].len();
            for qi in start..=q {
                if mi == 0 {
                    let g = R::rgamma_affine(self.prec, GammaArg::new(self.beta, qi as i64, 1.0));
                    let ln = -libm::lgamma(self.beta * qi as f64 + 1.0);
                    self.rows[0].push(g);
                    self.ln_rows[0].push(ln);
                } else {
                    let arg = self.beta * qi as f64 + mi as f64;
                    let prev = self.rows[mi - 1][qi].div(&R::affine(
                        self.prec,
                        GammaArg::new(self.beta, qi as i64, mi as f64),
                    ));
                    let ln = self.ln_rows[mi - 1][qi] - libm::log(arg);
                    self.rows[mi].push(prev);
                    self.ln_rows[mi].push(ln);
                }
            }
        }
    }

    fn get(&mut self, m: usize, q: usize) -> (R, f64) {
        self.ensure(m, q);
        (self.rows[m][q].clone(), self.ln_rows[m][q])
    }
}

/// Tempered time-space-fractional column.
///
/// The quadruple series is organized as
/// P(k,t) = e^{−νt} (−1)^k ρ^k Σ_h (λ+μ)^{αh} C(αh,k) · D_h,
/// D_h = Σ_{r≥h} C(r,h)(−μ^α)^{r−h}(−t^β)^r B_r,
/// B_r = Σ_m (νt)^m Σ_j C(r+j−1,j) x^j / Γ(β(r+j)+m+1), x = (νt)^β,
/// with ρ = λ/(λ+μ). The j-sum is the Prabhakar kernel of the paper's
/// quadruple form; the innermost binomial level is collapsed analytically
/// (the binomial theorem in the shifted rate λ+μ), which equals its sum
/// wherever that sum converges and remains valid for μ > λ where the
/// term-by-term sum diverges. Each surviving level (j, m, r) owns its own
/// truncation state and is named in any NonConvergence error.
///
/// All loop control runs on finite log-magnitude shadows so the f64 pass
/// terminates sensibly even when its linear values overflow; terms stop
/// once their shadow falls below the arithmetic noise of the largest
/// magnitude seen.
fn tempered_tsfpp_pass<R: Real>(
    prec: u32,
    p: &ProcessParams,
    t: f64,
    k_max: usize,
    cfg: &SeriesConfig,
) -> Result<PassData> {
    let ProcessParams {
        lambda,
        alpha,
        beta,
        mu,
        nu,
    } = *p;
    let eff_bits = if prec == 0 { 53 } else { prec };
    let noise_gap = ln_eps(eff_bits) - 3.0;
    let base = lambda + mu;
    let rho = lambda / base;
    let nut = nu * t;
    let ctx = || {
        format!(
            "tempered time-space pmf series (lambda={lambda}, alpha={alpha}, beta={beta}, \
             mu={mu}, nu={nu}, t={t})"
        )
    };

    let x: R = R::powf_of(prec, nut, beta); // (νt)^β, 0 at ν = 0
    let ln_x = if nut > 0.0 {
        beta * libm::log(nut)
    } else {
        f64::NEG_INFINITY
    };
    let neg_mua = R::powf_of(prec, mu, alpha).neg();
    let ln_mua = if mu > 0.0 {
        alpha * libm::log(mu)
    } else {
        f64::NEG_INFINITY
    };
    let ln_tb = beta * libm::log(t);
    let neg_tb = R::powf_of(prec, t, beta).neg();
    let ln_ba = alpha * libm::log(base);

    let mut rgt: RgammaTable<R> = RgammaTable::new(prec, beta);

    // Per-h state. lnv_cache[h] = αh ln(λ+μ) + ln max_k |C(αh,k)| ρ^k, the
    // magnitude the assembly stage will later multiply into row h.
    let mut d_sums: Vec<Kahan<R>> = Vec::new();
    let mut d_ln_abs: Vec<f64> = Vec::new();
    let mut lnv_cache: Vec<f64> = Vec::new();
    let lnv_of = |h: usize| -> f64 {
        let gam = alpha * h as f64;
        let mut c: f64 = 1.0;
        let mut best = 0.0f64;
        let mut rp = 1.0f64;
        for k in 0..k_max {
            c = c * (gam - k as f64) / (k as f64 + 1.0);
            rp *= rho;
            let mag = libm::log(libm::fabs(c) * rp);
            if mag > best {
                best = mag;
            }
        }
        gam * libm::log(base) + best
    };

    let mut tbpow = R::of(prec, 1.0); // (−t^β)^r
    let mut scale = f64::NEG_INFINITY;
    let mut quiet: u32 = 0;
    let r_stop: u32;

    let mut r: u32 = 0;
    loop {
        if r >= cfg.max_terms {
            return Err(Error::NonConvergence {
                context: ctx(),
                level: "r",
                terms: r,
            });
        }
        // B_r with its own m and j truncation levels.
        let mut b_acc: Kahan<R> = Kahan::new(prec);
        let mut b_ln = f64::NEG_INFINITY;
        let mut m_quiet: u32 = 0;
        let mut mpow = R::of(prec, 1.0); // (νt)^m
        let mut ln_mpow = 0.0f64;
        let mut m: u32 = 0;
        loop {
            if m >= cfg.max_terms {
                return Err(Error::NonConvergence {
                    context: ctx(),
                    level: "m",
                    terms: m,
                });
            }
            let mut block_ln = f64::NEG_INFINITY;
            let mut j_quiet: u32 = 0;
            let mut cj = R::of(prec, 1.0); // C(r+j−1, j)
            let mut ln_cj = 0.0f64;
            let mut xpow = R::of(prec, 1.0);
            let mut ln_xpow = 0.0f64;
            let mut j: u32 = 0;
            loop {
                if j >= cfg.max_terms {
                    return Err(Error::NonConvergence {
                        context: ctx(),
                        level: "j",
                        terms: j,
                    });
                }
                let (g, ln_g) = rgt.get(m as usize, (r + j) as usize);
                let term = mpow.mul(&cj).mul(&xpow).mul(&g);
                let ln_term = ln_mpow + ln_cj + ln_xpow + ln_g;
                b_acc.add(&term);
                b_ln = logaddexp(b_ln, ln_term);
                block_ln = logaddexp(block_ln, ln_term);
                if ln_term <= b_ln + noise_gap || ln_term == f64::NEG_INFINITY {
                    j_quiet += 1;
                    if j_quiet >= cfg.stagnation_window {
                        break;
                    }
                } else {
                    j_quiet = 0;
                }
                // C(r+j, j+1) = C(r+j−1, j) (r+j)/(j+1); zero stays zero
                // at r = 0 as C(j−1,j) = 0 for j ≥ 1.
                let rj = (r + j) as f64;
                cj = cj.mul_f64(rj).div_f64(j as f64 + 1.0);
                ln_cj += libm::log(rj) - libm::log(j as f64 + 1.0);
                xpow = xpow.mul(&x);
                ln_xpow += ln_x;
                j += 1;
            }
            if block_ln <= b_ln + noise_gap || block_ln == f64::NEG_INFINITY {
                m_quiet += 1;
                if m_quiet >= cfg.stagnation_window {
                    break;
                }
            } else {
                m_quiet = 0;
            }
            mpow = mpow.mul_f64(nut);
            ln_mpow += if nut > 0.0 {
                libm::log(nut)
            } else {
                f64::NEG_INFINITY
            };
            m += 1;
        }

        // Fold B_r into every D_h, h = r down to 0, with
        // w_{h,r} = C(r,h)(−μ^α)^{r−h}(−t^β)^r updated by the exact
        // downdate w_{h−1} = w_h · (−μ^α) · h/(r−h+1).
        d_sums.push(Kahan::new(prec));
        d_ln_abs.push(f64::NEG_INFINITY);
        lnv_cache.push(lnv_of(r as usize));
        let mut w = tbpow.clone();
        let mut ln_w = r as f64 * ln_tb;
        let mut rowmax = f64::NEG_INFINITY;
        let mut h = r as usize;
        loop {
            let contrib = w.mul(b_acc.value());
            let ln_contrib = ln_w + b_ln;
            d_sums[h].add(&contrib);
            d_ln_abs[h] = logaddexp(d_ln_abs[h], ln_contrib);
            let mag = ln_contrib + lnv_cache[h];
            if mag > rowmax {
                rowmax = mag;
            }
            if h == 0 {
                break;
            }
            w = w
                .mul(&neg_mua)
                .mul_f64(h as f64)
                .div_f64((r as usize - h + 1) as f64);
            ln_w += ln_mua + libm::log(h as f64) - libm::log((r as usize - h + 1) as f64);
            h -= 1;
        }
        if rowmax > scale {
            scale = rowmax;
        }
        let cut = f64::max(scale + noise_gap, libm::log(cfg.abs_tol));
        if rowmax <= cut {
            quiet += 1;
            if quiet >= cfg.stagnation_window {
                r_stop = r;
                break;
            }
        } else {
            quiet = 0;
        }
        tbpow = tbpow.mul(&neg_tb);
        r += 1;
    }

    // Assembly: P_k = e^{−νt} (−ρ)^k Σ_h (λ+μ)^{αh} C(αh,k) D_h.
    let n = k_max + 1;
    let mut sums: Vec<Kahan<R>> = (0..n).map(|_| Kahan::new(prec)).collect();
    let mut ln_sum_abs = vec![f64::NEG_INFINITY; n];
    let bstep = R::powf_of(prec, base, alpha);
    let mut bpow = R::of(prec, 1.0); // (λ+μ)^{αh}
    let mut ln_bpow = 0.0f64;
    for h in 0..=r_stop as usize {
        let mut c = R::of(prec, 1.0); // C(αh, k)
        let mut ln_c = 0.0f64;
        let dh = d_sums[h].value().mul(&bpow);
        let ln_dh = d_ln_abs[h] + ln_bpow;
        for k in 0..n {
            sums[k].add(&dh.mul(&c));
            ln_sum_abs[k] = logaddexp(ln_sum_abs[k], ln_dh + ln_c);
            let gmk = R::affine(prec, GammaArg::new(alpha, h as i64, -(k as f64)));
            c = c.mul(&gmk).div_f64(k as f64 + 1.0);
            ln_c += libm::log(libm::fabs(alpha * h as f64 - k as f64)) - libm::log(k as f64 + 1.0);
        }
        bpow = bpow.mul(&bstep);
        ln_bpow += ln_ba;
    }

    let pref0 = R::of(prec, -nut).exp();
    let ln_rho = libm::log(rho);
    let mut values = Vec::with_capacity(n);
    let mut ln_value = Vec::with_capacity(n);
    let mut sum_abs = Vec::with_capacity(n);
    let mut ln_top = Vec::with_capacity(n);
    let mut rp = R::of(prec, 1.0);
    let mut ln_rp = 0.0f64;
    for (k, s) in sums.iter().enumerate() {
        let sgn = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let v = s.value().mul(&rp).mul(&pref0).mul_f64(sgn);
        values.push(v.to_f64());
        ln_value.push(v.ln_abs_f64());
        let ln_t = ln_sum_abs[k] + ln_rp - nut;
        ln_top.push(ln_t);
        sum_abs.push(libm::exp(ln_t));
        rp = rp.mul_f64(rho);
        ln_rp += ln_rho;
    }
    let terms = vec![r_stop + 1; n];
    Ok(PassData {
        values,
        ln_value,
        sum_abs,
        ln_top,
        terms,
    })
}

pub(crate) fn tempered_tsfpp_columns(
    p: &ProcessParams,
    k_max: usize,
    t: f64,
    cfg: &SeriesConfig,
    target: &AccuracyTarget,
) -> Result<Column> {
    drive(
        "tempered time-space-fractional pmf",
        k_max,
        target,
        |bits| {
            if bits == 0 {
                tempered_tsfpp_pass::<f64>(0, p, t, k_max, cfg)
            } else {
                tempered_tsfpp_pass::<Xf>(bits, p, t, k_max, cfg)
            }
        },
    )
}
