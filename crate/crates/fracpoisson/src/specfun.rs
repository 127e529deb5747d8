//! Special functions: generalized binomial coefficients, Pochhammer symbols,
//! and the two-parameter Mittag-Leffler and three-parameter Prabhakar
//! functions.
//!
//! The series evaluators follow a single truncation policy ([`SeriesConfig`])
//! and a reciprocal-gamma convention: a term whose gamma argument lands on a
//! pole of Γ contributes exactly zero. Alternating series whose terms exceed
//! what double precision can cancel are automatically re-evaluated in
//! extended internal precision; the escalation is planned from the term
//! magnitudes observed during the double-precision pass, so well-conditioned
//! arguments never pay for it.

use crate::error::Error;
use crate::xreal::{GammaArg, Real, Xf};
use crate::Result;

const F64_EPS: f64 = 2.220446049250313e-16;

/// Truncation policy for every infinite series in the crate.
///
/// A series stops once `stagnation_window` consecutive terms satisfy
/// `|term| < rel_tol * |partial_sum| + abs_tol`. Hitting `max_terms` first is
/// a [`Error::NonConvergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: u32,
    pub stagnation_window: u32,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_terms: 10_000,
            stagnation_window: 3,
        }
    }
}

impl SeriesConfig {
    /// Checks the configuration is usable.
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol must be positive and finite"));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid("abs_tol must be nonnegative and finite"));
        }
        if self.stagnation_window == 0 {
            return Err(Error::invalid("stagnation_window must be at least 1"));
        }
        if self.max_terms < self.stagnation_window {
            return Err(Error::invalid(
                "max_terms must be at least stagnation_window",
            ));
        }
        Ok(())
    }

    pub(crate) fn small(&self, term_abs: f64, partial_abs: f64) -> bool {
        term_abs < self.rel_tol * partial_abs + self.abs_tol
    }
}

/// Parameter bundle for the Mittag-Leffler family `E^c_{a,b}(z)` on the
/// real axis.
///
/// `a` is the inner order and must be positive; `b` may be any real;
/// `c` is the Prabhakar index, with `c = 1` recovering the two-parameter
/// function; `arg` is the argument `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub arg: f64,
}

impl MLParams {
    /// Validated constructor.
    pub fn new(a: f64, b: f64, c: f64, arg: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!(
                "MLParams: a must be positive, got {a}"
            )));
        }
        if !b.is_finite() || !c.is_finite() || !arg.is_finite() {
            return Err(Error::invalid("MLParams: b, c, and arg must be finite"));
        }
        Ok(MLParams { a, b, c, arg })
    }

    /// Evaluates `E^c_{a,b}(arg)` under the given truncation policy.
    pub fn eval(&self, cfg: &SeriesConfig) -> Result<f64> {
        if self.c == 1.0 {
            mittag_leffler(self.a, self.b, self.arg, cfg)
        } else {
            prabhakar_ml(self.a, self.b, self.c, self.arg, cfg)
        }
    }
}

/// Tracks the stagnation stopping rule for one series.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stagnation {
    hits: u32,
    pub done: bool,
    pub terms: u32,
}

impl Stagnation {
    pub fn new() -> Self {
        Stagnation {
            hits: 0,
            done: false,
            terms: 0,
        }
    }

    pub fn update(&mut self, cfg: &SeriesConfig, term_abs: f64, partial_abs: f64) {
        if self.done {
            return;
        }
        self.terms += 1;
        if cfg.small(term_abs, partial_abs) {
            self.hits += 1;
            if self.hits >= cfg.stagnation_window {
                self.done = true;
            }
        } else {
            self.hits = 0;
        }
    }
}

/// Decides whether a double-precision alternating sum can be trusted, given
/// the accumulated sum of absolute term values.
pub(crate) fn f64_trusted(sum_abs: f64, value_abs: f64, abs_floor: f64, rel_floor: f64) -> bool {
    sum_abs.is_finite()
        && value_abs.is_finite()
        && F64_EPS * sum_abs <= f64::max(rel_floor * value_abs, abs_floor)
}

/// Working precision in bits needed to resolve a value of log-magnitude
/// `ln_floor` out of terms of log-magnitude up to `ln_max`.
pub(crate) fn plan_bits(ln_max: f64, ln_floor: f64) -> u32 {
    let spread = (ln_max - ln_floor).max(0.0);
    let bits = spread * std::f64::consts::LOG2_E + 96.0;
    (bits.ceil() as u32).clamp(192, 1 << 20)
}

/// Generalized binomial coefficient `C(alpha, k) = Γ(α+1)/(Γ(k+1)Γ(α−k+1))`
/// through log-gamma with explicit sign tracking.
///
/// When `α − k + 1` is a non-positive integer the reciprocal-gamma
/// convention applies and the result is exactly 0, unless `α` is itself a
/// non-negative integer with `α ≥ k`, in which case the classical integer
/// binomial is returned.
pub fn gen_binomial(alpha: f64, k: u64) -> f64 {
    assert!(alpha.is_finite(), "alpha must be finite");
    let kf = k as f64;
    if alpha >= 0.0 && alpha == alpha.floor() {
        if kf > alpha {
            return 0.0;
        }
        // Classical integer binomial, multiplicative form.
        let mut c = 1.0;
        for j in 0..k {
            c = c * (alpha - j as f64) / (j as f64 + 1.0);
        }
        return c;
    }
    let tail = alpha - kf + 1.0;
    if tail <= 0.0 && tail == tail.floor() {
        return 0.0;
    }
    let (la, sa) = libm::lgamma_r(alpha + 1.0);
    let (lk, sk) = libm::lgamma_r(kf + 1.0);
    let (lt, st) = libm::lgamma_r(tail);
    (sa * sk * st) as f64 * libm::exp(la - lk - lt)
}

/// Pochhammer symbol `(λ)_k = λ(λ+1)⋯(λ+k−1)`.
///
/// Small orders and non-positive-integer bases use the direct product
/// (exact zeros included); larger orders go through the gamma ratio
/// `Γ(λ+k)/Γ(λ)` with sign tracking.
pub fn pochhammer(lam: f64, k: u64) -> f64 {
    assert!(lam.is_finite(), "lam must be finite");
    if k == 0 {
        return 1.0;
    }
    let nonpos_int = lam <= 0.0 && lam == lam.floor();
    if k <= 64 || nonpos_int {
        let mut p = 1.0;
        for j in 0..k {
            p *= lam + j as f64;
            if p == 0.0 {
                return 0.0;
            }
        }
        return p;
    }
    let (ln, sn) = libm::lgamma_r(lam + k as f64);
    let (ld, sd) = libm::lgamma_r(lam);
    (sn * sd) as f64 * libm::exp(ln - ld)
}

struct ScalarSeries<R: Real> {
    value: R,
    sum_abs: f64,
    ln_max: f64,
    stagnated: bool,
    terms: u32,
}

/// Kahan-compensated accumulator. The running compensation restores the
/// low-order bits a small term loses when added onto a large partial sum,
/// which matters most in the alternating cancellation regimes.
pub(crate) struct Kahan<R: Real> {
    sum: R,
    comp: R,
}

impl<R: Real> Kahan<R> {
    pub fn new(prec: u32) -> Self {
        Kahan {
            sum: R::of(prec, 0.0),
            comp: R::of(prec, 0.0),
        }
    }

    pub fn add(&mut self, q: &R) {
        let y = q.sub(&self.comp);
        let t = self.sum.add(&y);
        self.comp = t.sub(&self.sum).sub(&y);
        self.sum = t;
    }

    pub fn value(&self) -> &R {
        &self.sum
    }

    pub fn abs_f64(&self) -> f64 {
        self.sum.abs().to_f64()
    }
}

/// One pass of the Mittag-Leffler series Σ zⁿ/Γ(an+b) at a given backend,
/// accumulated with compensated (Kahan-style) summation.
///
/// For `z ≤ −1` and `a ≤ 1` adjacent terms are paired before both the
/// accumulation and the stopping test, which damps the alternation.
fn ml_pass<R: Real>(prec: u32, a: f64, b: f64, z: f64, cfg: &SeriesConfig) -> ScalarSeries<R> {
    let pairing = z <= -1.0 && a <= 1.0;
    let zr = R::of(prec, z);
    let mut zpow = R::of(prec, 1.0);
    let mut acc: Kahan<R> = Kahan::new(prec);
    let mut sum_abs = 0.0f64;
    let mut ln_max = f64::NEG_INFINITY;
    let mut stag = Stagnation::new();
    let ln_z = libm::log(z.abs());

    let mut n: u32 = 0;
    while n < cfg.max_terms && !stag.done {
        let mut quantum = term_at(prec, &zpow, a, n, b);
        let mut took = 1u32;
        track_ln(&mut ln_max, ln_z, a, n, b);
        zpow = zpow.mul(&zr);
        if pairing && n + 1 < cfg.max_terms {
            let second = term_at(prec, &zpow, a, n + 1, b);
            track_ln(&mut ln_max, ln_z, a, n + 1, b);
            zpow = zpow.mul(&zr);
            quantum = quantum.add(&second);
            took = 2;
        }
        acc.add(&quantum);
        let qa = quantum.abs().to_f64();
        sum_abs += qa;
        for _ in 0..took {
            stag.update(cfg, qa, acc.abs_f64());
        }
        n += took;
    }

    ScalarSeries {
        value: acc.sum,
        sum_abs,
        ln_max,
        stagnated: stag.done,
        terms: n,
    }
}

fn term_at<R: Real>(prec: u32, zpow: &R, a: f64, n: u32, b: f64) -> R {
    let rg = R::rgamma_affine(prec, GammaArg::new(a, n as i64, b));
    zpow.mul(&rg)
}

fn track_ln(ln_max: &mut f64, ln_z: f64, a: f64, n: u32, b: f64) {
    let arg = a * n as f64 + b;
    if arg <= 0.0 && arg == arg.floor() {
        return;
    }
    let lt = n as f64 * ln_z - libm::lgamma(arg);
    if lt > *ln_max {
        *ln_max = lt;
    }
}

/// Two-parameter Mittag-Leffler function `E_{a,b}(z) = Σ_{n≥0} zⁿ/Γ(an+b)`.
///
/// `a` must be positive. Terms whose gamma argument is a pole contribute 0.
/// Strongly alternating regimes are re-evaluated in extended internal
/// precision sized from the observed term magnitudes; the returned value is
/// always a double.
pub fn mittag_leffler(a: f64, b: f64, z: f64, cfg: &SeriesConfig) -> Result<f64> {
    cfg.validate()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!(
            "mittag_leffler: a must be positive, got {a}"
        )));
    }
    if !b.is_finite() || !z.is_finite() {
        return Err(Error::invalid("mittag_leffler: b and z must be finite"));
    }

    let pass: ScalarSeries<f64> = ml_pass(0, a, b, z, cfg);
    if pass.stagnated && f64_trusted(pass.sum_abs, pass.value.abs(), 1e-18, 1e-14) {
        return Ok(pass.value);
    }
    if !pass.stagnated && pass.sum_abs.is_finite() && pass.value.is_finite() {
        return Err(Error::non_convergence(
            format!("mittag_leffler(a={a}, b={b}, z={z})"),
            "n",
            pass.terms,
        ));
    }

    // Lower bound on the result's log-magnitude used to size the working
    // precision. For completely monotone regimes (z<0, a≤1) the value is
    // bounded below by exp(-|z|^(1/a)) up to algebraic factors.
    let mut ln_floor = if z < 0.0 {
        -libm::pow(z.abs(), 1.0 / a.min(1.0)) - 80.0
    } else {
        -80.0
    };
    let ln_max = pass.ln_max.max(0.0);
    for _ in 0..8 {
        let bits = plan_bits(ln_max, ln_floor);
        let xpass: ScalarSeries<Xf> = ml_pass(bits, a, b, z, cfg);
        if !xpass.stagnated {
            return Err(Error::non_convergence(
                format!("mittag_leffler(a={a}, b={b}, z={z})"),
                "n",
                xpass.terms,
            ));
        }
        let v = xpass.value.to_f64();
        let ln_v = libm::log(v.abs());
        if ln_v.is_finite() && ln_v < ln_floor + 2.0 {
            ln_floor = ln_v - 40.0;
            continue;
        }
        if !ln_v.is_finite() && ln_floor > -760.0 {
            // Result indistinguishable from zero at this floor; push the
            // floor to the double-precision underflow threshold once.
            ln_floor = -760.0;
            continue;
        }
        return Ok(v);
    }
    Err(Error::non_convergence(
        format!("mittag_leffler(a={a}, b={b}, z={z}): precision plan did not settle"),
        "precision",
        pass.terms,
    ))
}

/// One pass of the Prabhakar series Σ (c)_n zⁿ/(n! Γ(an+b)).
fn prabhakar_pass<R: Real>(
    prec: u32,
    a: f64,
    b: f64,
    c: f64,
    z: f64,
    cfg: &SeriesConfig,
) -> ScalarSeries<R> {
    let mut p = R::of(prec, 1.0); // (c)_n z^n / n!
    let mut ln_p = 0.0f64;
    let mut acc: Kahan<R> = Kahan::new(prec);
    let mut sum_abs = 0.0f64;
    let mut ln_max = f64::NEG_INFINITY;
    let mut stag = Stagnation::new();

    let mut n: u32 = 0;
    while n < cfg.max_terms && !stag.done {
        let rg = R::rgamma_affine(prec, GammaArg::new(a, n as i64, b));
        let term = p.mul(&rg);
        let arg = a * n as f64 + b;
        if !(arg <= 0.0 && arg == arg.floor()) && ln_p.is_finite() {
            let lt = ln_p - libm::lgamma(arg);
            if lt > ln_max {
                ln_max = lt;
            }
        }
        acc.add(&term);
        let ta = term.abs().to_f64();
        sum_abs += ta;
        stag.update(cfg, ta, acc.abs_f64());
        let step = z * (c + n as f64) / (n as f64 + 1.0);
        p = p.mul_f64(step);
        ln_p += libm::log(step.abs());
        n += 1;
    }

    ScalarSeries {
        value: acc.sum,
        sum_abs,
        ln_max,
        stagnated: stag.done,
        terms: n,
    }
}

/// Prabhakar (three-parameter Mittag-Leffler) function
/// `E^c_{a,b}(z) = Σ_{n≥0} (c)_n zⁿ/(n! Γ(an+b))`.
///
/// Reduces to [`mittag_leffler`] at `c = 1`. A non-positive integer `c`
/// truncates the series to a polynomial. The same reciprocal-gamma pole
/// convention and precision escalation as [`mittag_leffler`] apply.
pub fn prabhakar_ml(a: f64, b: f64, c: f64, z: f64, cfg: &SeriesConfig) -> Result<f64> {
    cfg.validate()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!(
            "prabhakar_ml: a must be positive, got {a}"
        )));
    }
    if !b.is_finite() || !c.is_finite() || !z.is_finite() {
        return Err(Error::invalid("prabhakar_ml: b, c and z must be finite"));
    }

    let pass: ScalarSeries<f64> = prabhakar_pass(0, a, b, c, z, cfg);
    if pass.stagnated && f64_trusted(pass.sum_abs, pass.value.abs(), 1e-18, 1e-14) {
        return Ok(pass.value);
    }
    if !pass.stagnated && pass.sum_abs.is_finite() && pass.value.is_finite() {
        return Err(Error::non_convergence(
            format!("prabhakar_ml(a={a}, b={b}, c={c}, z={z})"),
            "n",
            pass.terms,
        ));
    }

    let mut ln_floor = if z < 0.0 {
        -libm::pow(z.abs(), 1.0 / a.min(1.0)) - 80.0
    } else {
        -80.0
    };
    let ln_max = pass.ln_max.max(0.0);
    for _ in 0..8 {
        let bits = plan_bits(ln_max, ln_floor);
        let xpass: ScalarSeries<Xf> = prabhakar_pass(bits, a, b, c, z, cfg);
        if !xpass.stagnated {
            return Err(Error::non_convergence(
                format!("prabhakar_ml(a={a}, b={b}, c={c}, z={z})"),
                "n",
                xpass.terms,
            ));
        }
        let v = xpass.value.to_f64();
        let ln_v = libm::log(v.abs());
        if ln_v.is_finite() && ln_v < ln_floor + 2.0 {
            ln_floor = ln_v - 40.0;
            continue;
        }
        if !ln_v.is_finite() && ln_floor > -760.0 {
            ln_floor = -760.0;
            continue;
        }
        return Ok(v);
    }
    Err(Error::non_convergence(
        format!("prabhakar_ml(a={a}, b={b}, c={c}, z={z}): precision plan did not settle"),
        "precision",
        pass.terms,
    ))
}
