//! Numeric fractional-derivative and discrete-shift operators used to
//! check that evaluated state probabilities satisfy their governing
//! differential-difference equations.
//!
//! The time-fractional derivative is the regularized (Caputo-type) form
//! of order `beta` in (0,1]: the Riemann-Liouville derivative of
//! `f - f(0)`, approximated on a uniform grid by the Grünwald-Letnikov
//! sum
//!
//! ```text
//! D^beta f(t) ~ h^{-beta} sum_{j=0}^{t/h} w_j (f(t - jh) - f(0)),
//! w_0 = 1,  w_j = w_{j-1} (1 - (beta+1)/j),
//! ```
//!
//! which is first-order accurate in `h` away from `t = 0`. At `beta = 1`
//! it degenerates to the ordinary derivative and is replaced by
//! second-order central differences.
//!
//! The tempered variant of order `(beta, nu)` is
//!
//! ```text
//! e^{-nu t} D^beta[e^{nu t} f(t)] - nu^beta f(t)
//!   - f(0)/Gamma(1-beta) * int_t^inf e^{-nu r} beta r^{-beta-1} dr,
//! ```
//!
//! with the untempered `D^beta` applied to `e^{nu t} f(t)` by the same
//! Grünwald-Letnikov sum and the tail integral evaluated by adaptive
//! Simpson quadrature. At `nu = 0` the tail reduces to `t^{-beta}` and
//! the whole expression to the untempered derivative.
//!
//! The discrete operators act on a PMF column `P(0..=K)` in the state
//! index through the backward shift `B P(k) = P(k-1)`, `P(k) = 0` for
//! `k < 0`:
//!
//! * [`fractional_shift`] applies `(mu + lambda(1-B))^alpha - mu^alpha`
//!   through the factorization `(lambda+mu)^alpha (1 - rho B)^alpha`,
//!   `rho = lambda/(lambda+mu)`, whose binomial coefficients are finite
//!   for every `mu >= 0`; the sum per entry is exact in `k`.
//! * [`gegenbauer_shift`] applies `lambda^{2d} (1 - 2uB + B^2)^d`, whose
//!   `B^j` coefficient is the Gegenbauer polynomial `C_j^{(-d)}(u)`,
//!   computed by the double-binomial expansion of `(1 - (2u - B)B)^d`.
//!
//! Combining the two gives the residual checks: a family's column solves
//! `D_t P(k, ·) = -(shift P)(k)` with the time operator and shift that
//! match its parameters, and the tests here measure those residuals in
//! sup norm on a uniform grid.

use crate::error::Error;
use crate::Result;

/// Function samples on a uniform time grid `h, 2h, ..., nh`, together
/// with the value at `t = 0`.
///
/// The grid starts at `h` rather than 0 so that every Grünwald-Letnikov
/// history point `t - jh` lands on the grid or at the origin, where the
/// separately stored `f0` applies.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGridFn {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub f0: f64,
}

/// Relative slack allowed when validating grid uniformity.
const GRID_UNIFORMITY_TOL: f64 = 1e-9;

/// Minimum number of grid points for the derivative operators.
const MIN_GRID_POINTS: usize = 8;

impl TimeGridFn {
    /// Validates and wraps an existing grid.
    ///
    /// The grid must be `h, 2h, ..., nh` for some `h > 0` up to relative
    /// deviations of [`GRID_UNIFORMITY_TOL`], with one finite value per
    /// point and a finite `f0`.
    pub fn new(t_grid: Vec<f64>, values: Vec<f64>, f0: f64) -> Result<Self> {
        if t_grid.is_empty() {
            return Err(Error::invalid("time grid must be nonempty"));
        }
        if t_grid.len() != values.len() {
            return Err(Error::invalid(format!(
                "grid has {} points but {} values",
                t_grid.len(),
                values.len()
            )));
        }
        let h = t_grid[0];
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "grid step must be positive and finite, got {h}"
            )));
        }
        for (i, &t) in t_grid.iter().enumerate() {
            let want = h * (i + 1) as f64;
            if !(t.is_finite() && (t - want).abs() <= GRID_UNIFORMITY_TOL * want) {
                return Err(Error::invalid(format!(
                    "grid point {i} is {t}, expected uniform value {want}"
                )));
            }
        }
        if !f0.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid values must be finite"));
        }
        Ok(TimeGridFn { t_grid, values, f0 })
    }

    /// Samples `f` on the grid `h, 2h, ..., nh` with `f0 = f(0)`.
    pub fn sample(h: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "grid step must be positive and finite, got {h}"
            )));
        }
        let t_grid: Vec<f64> = (1..=n).map(|i| h * i as f64).collect();
        let values: Vec<f64> = t_grid.iter().map(|&t| f(t)).collect();
        TimeGridFn::new(t_grid, values, f(0.0))
    }

    /// Grid step `h`.
    pub fn step(&self) -> f64 {
        self.t_grid[0]
    }

    fn require_points(&self) -> Result<()> {
        if self.values.len() < MIN_GRID_POINTS {
            return Err(Error::GridTooCoarse {
                points: self.values.len(),
                required: MIN_GRID_POINTS,
            });
        }
        Ok(())
    }
}

/// Grünwald-Letnikov weights `w_j = (-1)^j C(beta, j)` for `j = 0..=n`.
fn gl_weights(beta: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * (1.0 - (beta + 1.0) / j as f64));
    }
    w
}

/// Second-order finite differences: central in the interior, one-sided
/// three-point stencils at both ends (the left end uses `f0`).
fn central_differences(f: &TimeGridFn) -> TimeGridFn {
    let n = f.values.len();
    let h = f.step();
    let v = &f.values;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { f.f0 } else { v[i - 1] };
        let d = if i + 1 < n {
            (v[i + 1] - left) / (2.0 * h)
        } else {
            (3.0 * v[i] - 4.0 * v[i - 1] + v[i - 2]) / (2.0 * h)
        };
        out.push(d);
    }
    let d0 = (-3.0 * f.f0 + 4.0 * v[0] - v[1]) / (2.0 * h);
    TimeGridFn {
        t_grid: f.t_grid.clone(),
        values: out,
        f0: d0,
    }
}

/// Time-fractional derivative of order `beta` in (0,1] on the grid.
///
/// For `beta < 1` this is the Grünwald-Letnikov approximation of the
/// Riemann-Liouville derivative of `f - f0`, first-order accurate in the
/// grid step away from `t = 0`; the returned `f0` is 0, the value the
/// regularized derivative assigns to a function that is differentiable
/// at the origin. For `beta = 1` it is the second-order difference
/// quotient of `f` itself.
///
/// The first few grid points carry the largest error when `f` behaves
/// like a fractional power of `t` at the origin; callers measuring
/// residual norms should start the norm window a few steps in.
pub fn caputo_derivative(f: &TimeGridFn, beta: f64) -> Result<TimeGridFn> {
    assert!(
        beta > 0.0 && beta <= 1.0,
        "derivative order must lie in (0,1], got {beta}"
    );
    f.require_points()?;
    if beta == 1.0 {
        return Ok(central_differences(f));
    }
    let n = f.values.len();
    let h = f.step();
    let w = gl_weights(beta, n);
    let scale = libm::pow(h, -beta);
    let values = (0..n)
        .map(|i| {
            let acc: f64 = w[..=i]
                .iter()
                .zip(f.values[..=i].iter().rev())
                .map(|(wj, v)| wj * (v - f.f0))
                .sum();
            scale * acc
        })
        .collect();
    Ok(TimeGridFn {
        t_grid: f.t_grid.clone(),
        values,
        f0: 0.0,
    })
}

/// Tempered time-fractional derivative of order `(beta, nu)` on the grid.
///
/// Computes `e^{-nu t} D^beta[e^{nu t} f](t) - nu^beta f(t)` with the
/// Grünwald-Letnikov sum for the unregularized `D^beta` (the `t = 0`
/// sample enters with weight `w_{t/h}`), minus the regularizing tail
/// term `f0/Gamma(1-beta) * int_t^inf e^{-nu r} beta r^{-beta-1} dr`
/// evaluated by adaptive Simpson quadrature. At `nu = 0` it agrees with
/// [`caputo_derivative`] to first order in the grid step.
///
/// The returned `f0` is 0 by the same convention as
/// [`caputo_derivative`]; the tail term diverges pointwise at `t = 0`,
/// so only grid values are meaningful.
pub fn caputo_tempered_derivative(f: &TimeGridFn, beta: f64, nu: f64) -> Result<TimeGridFn> {
    assert!(
        beta > 0.0 && beta < 1.0,
        "tempered derivative order must lie in (0,1), got {beta}"
    );
    assert!(
        nu >= 0.0 && nu.is_finite(),
        "tempering must be nonnegative, got {nu}"
    );
    f.require_points()?;
    let n = f.values.len();
    let h = f.step();
    let w = gl_weights(beta, n);
    let scale = libm::pow(h, -beta);
    let nu_beta = if nu == 0.0 { 0.0 } else { libm::pow(nu, beta) };
    let gamma_tail = libm::tgamma(1.0 - beta);
    let u: Vec<f64> = f
        .t_grid
        .iter()
        .zip(&f.values)
        .map(|(&t, &v)| libm::exp(nu * t) * v)
        .collect();
    let values = (0..n)
        .map(|i| {
            let t = f.t_grid[i];
            let gl: f64 = w[..=i]
                .iter()
                .zip(u[..=i].iter().rev())
                .map(|(wj, uj)| wj * uj)
                .sum();
            let acc = gl + w[i + 1] * f.f0;
            let rl = scale * acc * libm::exp(-nu * t);
            rl - nu_beta * f.values[i] - f.f0 * tempered_tail(t, beta, nu) / gamma_tail
        })
        .collect();
    Ok(TimeGridFn {
        t_grid: f.t_grid.clone(),
        values,
        f0: 0.0,
    })
}

/// Absolute tolerance for the tempered tail integral.
const TAIL_QUAD_TOL: f64 = 1e-13;

/// `int_t^inf e^{-nu r} beta r^{-beta-1} dr`, the tail of the kernel
/// whose `nu = 0` value is `t^{-beta}`.
fn tempered_tail(t: f64, beta: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        return libm::pow(t, -beta);
    }
    let g = |r: f64| beta * libm::pow(r, -beta - 1.0) * libm::exp(-nu * r);
    let mut upper = t + 1.0 / nu;
    while g(upper) / nu > 0.1 * TAIL_QUAD_TOL {
        upper *= 1.5;
    }
    adaptive_simpson(&g, t, upper, TAIL_QUAD_TOL)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, width: f64) -> f64 {
        width / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Applies `(mu + lambda(1-B))^alpha - mu^alpha` to a PMF column, where
/// `B` is the backward shift in the state index.
///
/// Through `(mu + lambda(1-B))^alpha = (lambda+mu)^alpha (1 - rho B)^alpha`
/// with `rho = lambda/(lambda+mu)`, entry `k` of the result is
///
/// ```text
/// (lambda+mu)^alpha sum_{j=0}^{k} C(alpha,j) (-rho)^j P(k-j)
///   - mu^alpha P(k),
/// ```
///
/// a finite sum, exact in `k` for every `mu >= 0`. At `mu = 0` the
/// operator is `lambda^alpha (1-B)^alpha`, and at `alpha = 1` it is the
/// plain difference `lambda (P(k) - P(k-1))`.
pub fn fractional_shift(column: &[f64], alpha: f64, mu: f64, lambda: f64) -> Vec<f64> {
    assert!(
        alpha > 0.0 && alpha <= 1.0,
        "shift order must lie in (0,1], got {alpha}"
    );
    assert!(
        mu >= 0.0 && mu.is_finite(),
        "tempering must be nonnegative, got {mu}"
    );
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "rate must be positive, got {lambda}"
    );
    let n = column.len();
    let base = lambda + mu;
    let rho = lambda / base;
    let scale = libm::pow(base, alpha);
    let mu_alpha = if mu == 0.0 { 0.0 } else { libm::pow(mu, alpha) };
    let mut coeff = Vec::with_capacity(n);
    let mut c = 1.0;
    coeff.push(c);
    for j in 1..n {
        c *= -rho * (alpha - j as f64 + 1.0) / j as f64;
        coeff.push(c);
    }
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += coeff[j] * column[k - j];
            }
            scale * acc - mu_alpha * column[k]
        })
        .collect()
}

/// Applies `lambda^{2d} (1 - 2uB + B^2)^d` to a PMF column.
///
/// The `B^j` coefficient of `(1 - 2uB + B^2)^d` is the Gegenbauer
/// polynomial `C_j^{(-d)}(u)`, computed here from the double-binomial
/// expansion of `(1 - (2u - B)B)^d`:
///
/// ```text
/// C_j^{(-d)}(u) = (-1)^j sum_{m=ceil(j/2)}^{j} C(d,m) C(m,j-m) (2u)^{2m-j},
/// ```
///
/// a finite sum, exact in `j`.
pub fn gegenbauer_shift(column: &[f64], d: f64, u: f64, lambda: f64) -> Vec<f64> {
    assert!(
        d > 0.0 && d <= 1.0,
        "shift order must lie in (0,1], got {d}"
    );
    assert!((-1.0..=1.0).contains(&u), "u must lie in [-1,1], got {u}");
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "rate must be positive, got {lambda}"
    );
    let n = column.len();
    let coeff = gegenbauer_coefficients(d, u, n);
    let scale = libm::pow(lambda, 2.0 * d);
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += coeff[j] * column[k - j];
            }
            scale * acc
        })
        .collect()
}

/// Coefficients `C_j^{(-d)}(u)` of `(1 - 2uB + B^2)^d` for `j < n`.
fn gegenbauer_coefficients(d: f64, u: f64, n: usize) -> Vec<f64> {
    let mut binom_d = Vec::with_capacity(n);
    let mut c = 1.0;
    binom_d.push(c);
    for m in 1..n {
        c *= (d - m as f64 + 1.0) / m as f64;
        binom_d.push(c);
    }
    let mut pascal = vec![vec![0.0; n]; n];
    pascal[0][0] = 1.0;
    for m in 1..n {
        pascal[m][0] = 1.0;
        for i in 1..=m {
            pascal[m][i] = pascal[m - 1][i - 1] + pascal[m - 1][i];
        }
    }
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for m in j.div_ceil(2)..=j {
                acc += binom_d[m] * pascal[m][j - m] * libm::pow(2.0 * u, (2 * m - j) as f64);
            }
            if j.is_multiple_of(2) {
                acc
            } else {
                -acc
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{pmf_table, FamilySpec, GegenbauerParams, ProcessParams};
    use crate::specfun::{mittag_leffler, SeriesConfig};

    /// Residual threshold for the governing-equation checks, sized for
    /// first-order Grünwald-Letnikov error at step 1/512.
    const RESIDUAL_TOL: f64 = 1e-2;

    /// Step used by all governing-equation grids.
    const H: f64 = 1.0 / 512.0;

    /// Number of grid points; the grid then covers (0, 2] and slightly
    /// beyond so central differences have a right neighbor at t = 2.
    const N_GRID: usize = 1025;

    /// Norm window [0.25, 2]: early grid points are excluded because the
    /// kernel sums converge slowest where the columns behave like
    /// fractional powers of t.
    fn in_window(t: f64) -> bool {
        (0.25..=2.0).contains(&t)
    }

    /// One PMF column per state k on the grid h, 2h, ..., nh.
    fn pmf_columns(spec: &FamilySpec, k_max: u64) -> Vec<TimeGridFn> {
        let t_grid: Vec<f64> = (1..=N_GRID).map(|i| H * i as f64).collect();
        let table = pmf_table(spec, k_max, &t_grid, &SeriesConfig::default()).unwrap();
        (0..=k_max as usize)
            .map(|k| {
                let values: Vec<f64> = table.values.iter().map(|row| row[k]).collect();
                let f0 = if k == 0 { 1.0 } else { 0.0 };
                TimeGridFn::new(t_grid.clone(), values, f0).unwrap()
            })
            .collect()
    }

    /// sup_k of sup-norm residual of `lhs[k] = -(shift columns)[k]`,
    /// relative to the sup norm of the right side, over the window.
    fn relative_residual(
        columns: &[TimeGridFn],
        lhs: &[TimeGridFn],
        shift: impl Fn(&[f64]) -> Vec<f64>,
    ) -> f64 {
        let n = columns[0].values.len();
        let k_count = columns.len();
        let mut residual = vec![0.0f64; k_count];
        let mut rhs_norm = vec![0.0f64; k_count];
        for ti in 0..n {
            let t = columns[0].t_grid[ti];
            if !in_window(t) {
                continue;
            }
            let state: Vec<f64> = columns.iter().map(|c| c.values[ti]).collect();
            let shifted = shift(&state);
            for (k, &s) in shifted.iter().enumerate() {
                let rhs = -s;
                residual[k] = residual[k].max((lhs[k].values[ti] - rhs).abs());
                rhs_norm[k] = rhs_norm[k].max(rhs.abs());
            }
        }
        let mut worst = 0.0f64;
        for (k, (&r, &m)) in residual.iter().zip(&rhs_norm).enumerate() {
            assert!(m > 0.0, "right side vanished for k={k}");
            worst = worst.max(r / m);
        }
        worst
    }

    #[test]
    fn caputo_annihilates_constants() {
        let f = TimeGridFn::sample(H, 64, |_| 0.7).unwrap();
        let d = caputo_derivative(&f, 0.5).unwrap();
        for v in d.values {
            assert!(v.abs() < 1e-12, "got {v}");
        }
    }

    #[test]
    fn caputo_of_linear_function_matches_power_law() {
        // The order-beta derivative of t is t^{1-beta} / Gamma(2-beta).
        let beta = 0.5;
        let f = TimeGridFn::sample(H, N_GRID, |t| t).unwrap();
        let d = caputo_derivative(&f, beta).unwrap();
        let scale = libm::tgamma(2.0 - beta).recip();
        let mut worst = 0.0f64;
        for (i, &t) in f.t_grid.iter().enumerate() {
            if !in_window(t) {
                continue;
            }
            let want = scale * libm::pow(t, 1.0 - beta);
            worst = worst.max((d.values[i] - want).abs() / want);
        }
        assert!(worst <= RESIDUAL_TOL, "relative error {worst}");
    }

    #[test]
    fn caputo_reproduces_mittag_leffler_eigenfunction() {
        // E_beta(-t^beta) solves D^beta f = -f.
        let beta = 0.5;
        let cfg = SeriesConfig::default();
        let f = TimeGridFn::sample(H, N_GRID, |t| {
            mittag_leffler(beta, 1.0, -libm::pow(t, beta), &cfg).unwrap()
        })
        .unwrap();
        let d = caputo_derivative(&f, beta).unwrap();
        let mut residual = 0.0f64;
        let mut norm = 0.0f64;
        for (i, &t) in f.t_grid.iter().enumerate() {
            if !(0.2..=2.0).contains(&t) {
                continue;
            }
            residual = residual.max((d.values[i] + f.values[i]).abs());
            norm = norm.max(f.values[i].abs());
        }
        assert!(
            residual <= RESIDUAL_TOL * norm,
            "residual {residual} vs norm {norm}"
        );
    }

    #[test]
    fn caputo_rejects_short_grids() {
        let f = TimeGridFn::sample(H, 7, |t| t).unwrap();
        let err = caputo_derivative(&f, 0.5).unwrap_err();
        assert!(matches!(
            err,
            Error::GridTooCoarse {
                points: 7,
                required: 8
            }
        ));
    }

    #[test]
    fn tempered_caputo_annihilates_constants_via_tail_quadrature() {
        let (beta, nu) = (0.5, 1.0);
        let c = 0.7;
        let f = TimeGridFn::sample(H, N_GRID, |_| c).unwrap();
        let d = caputo_tempered_derivative(&f, beta, nu).unwrap();
        let mut worst = 0.0f64;
        for (i, &t) in f.t_grid.iter().enumerate() {
            if !in_window(t) {
                continue;
            }
            worst = worst.max(d.values[i].abs());
        }
        assert!(worst <= RESIDUAL_TOL * c, "residual {worst}");
    }

    #[test]
    fn tempered_at_nu_zero_matches_untempered() {
        let beta = 0.5;
        let f = TimeGridFn::sample(H, N_GRID, |t| t + 0.3).unwrap();
        let tempered = caputo_tempered_derivative(&f, beta, 0.0).unwrap();
        let plain = caputo_derivative(&f, beta).unwrap();
        let mut worst = 0.0f64;
        for (i, &t) in f.t_grid.iter().enumerate() {
            if !in_window(t) {
                continue;
            }
            worst = worst.max((tempered.values[i] - plain.values[i]).abs());
        }
        assert!(worst <= 2.0 * H, "difference {worst}");
    }

    #[test]
    fn shift_at_integer_order_is_finite_difference() {
        let mut delta = vec![0.0; 6];
        delta[0] = 1.0;
        let out = fractional_shift(&delta, 1.0, 0.0, 1.0);
        let want = [1.0, -1.0, 0.0, 0.0, 0.0, 0.0];
        for (got, want) in out.iter().zip(want) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn shift_half_order_coefficients_match_exact_fractions() {
        // (1-B)^{1/2} delta has the binomial-series coefficients of
        // sqrt(1-x), which are exact dyadic rationals.
        let mut delta = vec![0.0; 8];
        delta[0] = 1.0;
        let out = fractional_shift(&delta, 0.5, 0.0, 1.0);
        let want = [
            1.0,
            -1.0 / 2.0,
            -1.0 / 8.0,
            -1.0 / 16.0,
            -5.0 / 128.0,
            -7.0 / 256.0,
            -21.0 / 1024.0,
            -33.0 / 2048.0,
        ];
        for (k, (&got, want)) in out.iter().zip(want).enumerate() {
            assert!((got - want).abs() <= 1e-15, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn gegenbauer_shift_coefficients_match_recurrence() {
        // C_j^{(a)}(u) with a = -d satisfies j C_j = 2u(j+a-1)C_{j-1}
        //   - (j+2a-2)C_{j-2}, an independent route to the expansion
        // coefficients used by the shift.
        for (d, u) in [(0.25, 0.5), (0.7, -0.3), (1.0, 0.9)] {
            let a = -d;
            let n = 13;
            let mut rec = vec![0.0; n];
            rec[0] = 1.0;
            rec[1] = 2.0 * a * u;
            for j in 2..n {
                let jf = j as f64;
                rec[j] = (2.0 * u * (jf + a - 1.0) * rec[j - 1]
                    - (jf + 2.0 * a - 2.0) * rec[j - 2])
                    / jf;
            }
            let mut delta = vec![0.0; n];
            delta[0] = 1.0;
            let out = gegenbauer_shift(&delta, d, u, 1.0);
            for j in 0..n {
                assert!(
                    (out[j] - rec[j]).abs() <= 1e-12 * rec[j].abs().max(1.0),
                    "d={d} u={u} j={j}: {} vs {}",
                    out[j],
                    rec[j]
                );
            }
        }
    }

    #[test]
    fn sfpp_column_satisfies_rate_equation() {
        let spec = FamilySpec::Process(ProcessParams::sfpp(1.0, 0.7).unwrap());
        let columns = pmf_columns(&spec, 8);
        let lhs: Vec<TimeGridFn> = columns
            .iter()
            .map(|c| caputo_derivative(c, 1.0).unwrap())
            .collect();
        let worst = relative_residual(&columns, &lhs, |col| fractional_shift(col, 0.7, 0.0, 1.0));
        assert!(worst <= RESIDUAL_TOL, "residual {worst}");
    }

    #[test]
    fn tsfpp_column_satisfies_fractional_equation() {
        let spec = FamilySpec::Process(ProcessParams::tsfpp(1.0, 0.7, 0.6).unwrap());
        let columns = pmf_columns(&spec, 8);
        let lhs: Vec<TimeGridFn> = columns
            .iter()
            .map(|c| caputo_derivative(c, 0.6).unwrap())
            .collect();
        let worst = relative_residual(&columns, &lhs, |col| fractional_shift(col, 0.7, 0.0, 1.0));
        assert!(worst <= RESIDUAL_TOL, "residual {worst}");
    }

    #[test]
    fn tfpp_column_satisfies_fractional_equation_with_ordinary_rate() {
        // The TFPP column solves the order-beta equation whose state
        // operator is the alpha = 1 slice, with rate coefficient lambda.
        let spec = FamilySpec::Process(ProcessParams::tfpp(1.0, 0.5).unwrap());
        let columns = pmf_columns(&spec, 8);
        let lhs: Vec<TimeGridFn> = columns
            .iter()
            .map(|c| caputo_derivative(c, 0.5).unwrap())
            .collect();
        let worst = relative_residual(&columns, &lhs, |col| fractional_shift(col, 1.0, 0.0, 1.0));
        assert!(worst <= RESIDUAL_TOL, "residual {worst}");
    }

    #[test]
    fn tempered_sfpp_column_satisfies_rate_equation() {
        let spec = FamilySpec::Process(ProcessParams::tempered_sfpp(1.0, 0.6, 0.5).unwrap());
        let columns = pmf_columns(&spec, 8);
        let lhs: Vec<TimeGridFn> = columns
            .iter()
            .map(|c| caputo_derivative(c, 1.0).unwrap())
            .collect();
        let worst = relative_residual(&columns, &lhs, |col| fractional_shift(col, 0.6, 0.5, 1.0));
        assert!(worst <= RESIDUAL_TOL, "residual {worst}");
    }

    #[test]
    fn tempered_tsfpp_column_satisfies_tempered_fractional_equation() {
        // The 1e-8 absolute floor keeps every grid point on the series
        // engine's f64 pass; the induced column error stays four orders
        // of magnitude below the residual gate.
        use crate::pmf::series::{tempered_tsfpp_columns, AccuracyTarget};
        let p = ProcessParams::tempered_tsfpp(1.0, 0.6, 0.5, 0.5, 0.5).unwrap();
        let cfg = SeriesConfig::default();
        let k_max = 8usize;
        let t_grid: Vec<f64> = (1..=N_GRID).map(|i| H * i as f64).collect();
        let rows: Vec<Vec<f64>> = t_grid
            .iter()
            .map(|&t| {
                tempered_tsfpp_columns(&p, k_max, t, &cfg, &AccuracyTarget::absolute(1e-8))
                    .unwrap()
                    .values
            })
            .collect();
        let columns: Vec<TimeGridFn> = (0..=k_max)
            .map(|k| {
                let values: Vec<f64> = rows.iter().map(|row| row[k]).collect();
                let f0 = if k == 0 { 1.0 } else { 0.0 };
                TimeGridFn::new(t_grid.clone(), values, f0).unwrap()
            })
            .collect();
        let lhs: Vec<TimeGridFn> = columns
            .iter()
            .map(|c| caputo_tempered_derivative(c, 0.5, 0.5).unwrap())
            .collect();
        let worst = relative_residual(&columns, &lhs, |col| fractional_shift(col, 0.6, 0.5, 1.0));
        assert!(worst <= RESIDUAL_TOL, "residual {worst}");
    }

    #[test]
    fn gegenbauer_column_satisfies_rate_equation() {
        let params = GegenbauerParams::new(1.0, 0.25, 0.5, 1.0).unwrap();
        let spec = FamilySpec::Gegenbauer(params);
        let columns = pmf_columns(&spec, 8);
        let lhs: Vec<TimeGridFn> = columns
            .iter()
            .map(|c| caputo_derivative(c, 1.0).unwrap())
            .collect();
        let worst = relative_residual(&columns, &lhs, |col| gegenbauer_shift(col, 0.25, 0.5, 1.0));
        assert!(worst <= RESIDUAL_TOL, "residual {worst}");
    }
}
