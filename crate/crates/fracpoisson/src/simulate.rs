//! Monte Carlo samplers for stable subordinators, their tempered and
//! inverse variants, and the subordinated counting processes.
//!
//! The counting processes are sampled through their subordination
//! representations: a Poisson count is drawn at a random clock produced
//! by composing at most two layers,
//!
//! ```text
//! N(t)                        Poisson
//! N(Y_beta(t))                time-fractional
//! N(S_alpha(t))               space-fractional
//! N(S_alpha(Y_beta(t)))       time-space-fractional
//! N(S_{alpha,mu}(t))          tempered space-fractional
//! N(S_{alpha,mu}(Y_{beta,nu}(t)))  tempered time-space-fractional
//! ```
//!
//! where `S_alpha` is the one-sided stable subordinator with Laplace
//! transform `E e^{-s S_alpha(t)} = e^{-t s^alpha}`, `S_{alpha,mu}` its
//! exponentially tempered version, and `Y_{beta,nu}` the first-passage
//! inverse `inf{y > 0 : S_{beta,nu}(y) > t}`.
//!
//! Sampling building blocks:
//!
//! * stable draws use the Kanter representation
//!   `S_alpha(1) = (a(U)/E)^{(1-alpha)/alpha}` with
//!   `a(u) = [sin(alpha pi u)/sin(pi u)]^{alpha/(1-alpha)} ·
//!   sin((1-alpha) pi u)/sin(pi u)`, `U` uniform on (0,1) and `E` unit
//!   exponential, scaled by `t^{1/alpha}`;
//! * tempered draws accept a stable draw `x` with probability `e^{-mu x}`,
//!   which tilts the density by `e^{-mu x + mu^alpha t}`; the horizon is
//!   split into `ceil(t mu^alpha / ln 2)` increments so each chunk accepts
//!   with probability at least 1/2;
//! * inverse draws walk the forward path in steps of `grid_dt` until it
//!   crosses the target level and return the midpoint of the bracketing
//!   step, so each draw carries a deterministic error of at most
//!   `grid_dt / 2` alongside the Monte Carlo error;
//! * renewal sampling of the time-fractional process uses the mixture
//!   representation of Mittag-Leffler waiting times,
//!   `T = lambda^{-1/beta} E^{1/beta} S_beta(1)`, whose survival function
//!   is `P(T > x) = E_beta(-lambda x^beta)`.
//!
//! Every sample set is reproducible: [`RngSpec`] pins a seed and a stream,
//! and each draw index owns a disjoint counter range of the underlying
//! ChaCha generator, so results are independent of thread scheduling.

use crate::error::Error;
use crate::pmf::params::ProcessParams;
use crate::Result;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp1, Poisson};
use rayon::prelude::*;

/// Rejection cap for one tempered-stable draw.
const REJECTION_CAP: u64 = 1_000_000;

/// Increment cap for one inverse-subordinator draw.
const STEP_CAP: u64 = 100_000_000;

/// Default first-passage step, as a fraction of the target level.
const INVERSE_GRID_FRACTION: f64 = 0.01;

/// Seed and substream index identifying a reproducible random sequence.
///
/// Identical `RngSpec` values reproduce identical output bit for bit on
/// the same build. Draw index `i` of a sample set reads from its own
/// 2^32-word counter range, so parallel sampling is schedule-independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    /// Generator positioned at the start of draw `index`'s counter range.
    fn draw_rng(&self, index: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(u128::from(index) << 32);
        rng
    }
}

/// Counts of one process sampled at a fixed time.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub params: ProcessParams,
    pub t: f64,
    pub counts: Vec<u64>,
    pub rng: RngSpec,
}

impl SampleSet {
    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.counts.iter().map(|&c| c as f64).sum();
        sum / self.counts.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.counts.len() as f64;
        let mean = self.mean();
        let ss: f64 = self
            .counts
            .iter()
            .map(|&c| {
                let d = c as f64 - mean;
                d * d
            })
            .sum();
        ss / (n - 1.0)
    }

    /// Relative frequencies of the states `0..=k_max`.
    pub fn empirical_pmf(&self, k_max: u64) -> Vec<f64> {
        let mut freq = vec![0.0; (k_max + 1) as usize];
        for &c in &self.counts {
            if c <= k_max {
                freq[c as usize] += 1.0;
            }
        }
        let n = self.counts.len() as f64;
        for f in &mut freq {
            *f /= n;
        }
        freq
    }
}

/// A subordinator trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// One draw of the stable subordinator `S_alpha(t)` with Laplace
/// transform `e^{-t s^alpha}`.
///
/// The Kanter factor is evaluated in log space so extreme uniforms close
/// to 1 produce large but finite draws instead of overflowing.
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, t: f64, rng: &mut R) -> f64 {
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "stable index must lie in (0,1), got {alpha}"
    );
    assert!(t > 0.0 && t.is_finite(), "time must be positive, got {t}");
    t.powf(1.0 / alpha) * standard_stable(alpha, rng)
}

/// Kanter draw of `S_alpha(1)`.
fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Exp1);
    let e = e.max(f64::MIN_POSITIVE);
    let pu = core::f64::consts::PI * u;
    let ln_sin = libm::log(libm::sin(pu));
    let ln_a = alpha / (1.0 - alpha) * (libm::log(libm::sin(alpha * pu)) - ln_sin)
        + libm::log(libm::sin((1.0 - alpha) * pu))
        - ln_sin;
    libm::exp((1.0 - alpha) / alpha * (ln_a - libm::log(e)))
}

/// One draw of the tempered stable subordinator `S_{alpha,mu}(t)` with
/// Laplace transform `e^{-t((s+mu)^alpha - mu^alpha)}`.
pub fn sample_tempered_stable<R: Rng + ?Sized>(
    alpha: f64,
    mu: f64,
    t: f64,
    rng: &mut R,
) -> Result<f64> {
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "stable index must lie in (0,1), got {alpha}"
    );
    assert!(
        mu >= 0.0 && mu.is_finite(),
        "tempering must be nonnegative, got {mu}"
    );
    assert!(t > 0.0 && t.is_finite(), "time must be positive, got {t}");
    if mu == 0.0 {
        return Ok(sample_stable(alpha, t, rng));
    }
    let chunks = libm::ceil(t * libm::pow(mu, alpha) / core::f64::consts::LN_2).max(1.0);
    let dt = t / chunks;
    let mut total = 0.0;
    let mut rejections = 0u64;
    for _ in 0..chunks as u64 {
        loop {
            let x = sample_stable(alpha, dt, rng);
            let gate: f64 = rng.sample(Exp1);
            if gate >= mu * x {
                total += x;
                break;
            }
            rejections += 1;
            if rejections >= REJECTION_CAP {
                return Err(Error::SamplingStall {
                    context: format!("tempered stable draw (alpha={alpha}, mu={mu}, t={t})"),
                    cap: REJECTION_CAP,
                });
            }
        }
    }
    Ok(total)
}

/// One draw of the inverse subordinator
/// `Y_{beta,nu}(t) = inf{y > 0 : S_{beta,nu}(y) > t}`.
///
/// The forward path is walked in increments of `grid_dt` until it would
/// cross `t`. The first passage then lies inside the bracketing step,
/// and the draw returns the bracket midpoint, so every draw differs
/// from an exact first-passage draw by at most `grid_dt / 2`. This
/// error is deterministic and does not shrink with the sample size; it
/// adds to the Monte Carlo error of any statistic built from the draws.
///
/// A draw costs about `t^beta / (Gamma(1+beta) grid_dt)` forward
/// increments, so halving the error bound doubles the work.
pub fn sample_inverse_subordinator<R: Rng + ?Sized>(
    beta: f64,
    nu: f64,
    t: f64,
    grid_dt: f64,
    rng: &mut R,
) -> Result<f64> {
    assert!(
        beta > 0.0 && beta < 1.0,
        "inverse subordinator index must lie in (0,1), got {beta}"
    );
    assert!(
        nu >= 0.0 && nu.is_finite(),
        "tempering must be nonnegative, got {nu}"
    );
    assert!(t > 0.0 && t.is_finite(), "level must be positive, got {t}");
    assert!(
        grid_dt > 0.0 && grid_dt.is_finite(),
        "step must be positive, got {grid_dt}"
    );
    let mut passage = 0.0;
    let mut level = 0.0;
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps >= STEP_CAP {
            return Err(Error::SamplingStall {
                context: format!(
                    "inverse subordinator first passage (beta={beta}, nu={nu}, t={t})"
                ),
                cap: STEP_CAP,
            });
        }
        let inc = sample_tempered_stable(beta, nu, grid_dt, rng)?;
        if level + inc > t {
            return Ok(passage + 0.5 * grid_dt);
        }
        level += inc;
        passage += grid_dt;
    }
}

/// Samples `n` independent counts of the process described by `params`
/// at time `t`, composing the subordination layers that the parameters
/// make non-degenerate.
pub fn sample_process(params: &ProcessParams, t: f64, n: u64, rng: &RngSpec) -> Result<SampleSet> {
    assert!(n >= 1, "sample size must be at least 1");
    assert!(
        t >= 0.0 && t.is_finite(),
        "time must be nonnegative, got {t}"
    );
    let counts = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.draw_rng(i);
            draw_count(params, t, &mut r)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(SampleSet {
        params: *params,
        t,
        counts,
        rng: *rng,
    })
}

/// One subordinated count: clock composition, then a Poisson draw.
fn draw_count<R: Rng + ?Sized>(p: &ProcessParams, t: f64, rng: &mut R) -> Result<u64> {
    if t == 0.0 {
        return Ok(0);
    }
    let mut clock = t;
    if p.beta < 1.0 {
        clock =
            sample_inverse_subordinator(p.beta, p.nu, clock, INVERSE_GRID_FRACTION * clock, rng)?;
    }
    if p.alpha < 1.0 {
        clock = sample_tempered_stable(p.alpha, p.mu, clock, rng)?;
    }
    let mean = p.lambda * clock;
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("count draw with mean {mean}: {e}")))?;
    let count: f64 = rng.sample(poisson);
    Ok(count as u64)
}

/// Samples `n` counts of the time-fractional process by its renewal
/// definition: arrivals separated by Mittag-Leffler waiting times with
/// survival function `E_beta(-lambda x^beta)`.
pub fn sample_tfpp_renewal(lambda: f64, beta: f64, t: f64, n: u64, rng: &RngSpec) -> SampleSet {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "rate must be positive, got {lambda}"
    );
    assert!(
        beta > 0.0 && beta <= 1.0,
        "waiting time index must lie in (0,1], got {beta}"
    );
    assert!(
        t >= 0.0 && t.is_finite(),
        "time must be nonnegative, got {t}"
    );
    assert!(n >= 1, "sample size must be at least 1");
    let counts: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.draw_rng(i);
            draw_renewal_count(lambda, beta, t, &mut r)
        })
        .collect();
    let params = ProcessParams::tfpp(lambda, beta).expect("validated above");
    SampleSet {
        params,
        t,
        counts,
        rng: *rng,
    }
}

fn draw_renewal_count<R: Rng + ?Sized>(lambda: f64, beta: f64, t: f64, rng: &mut R) -> u64 {
    let scale = libm::pow(lambda, -1.0 / beta);
    let mut arrival = 0.0;
    let mut count = 0u64;
    loop {
        let e: f64 = rng.sample(Exp1);
        let wait = if beta == 1.0 {
            e
        } else {
            libm::pow(e, 1.0 / beta) * standard_stable(beta, rng)
        };
        arrival += scale * wait;
        if arrival > t {
            return count;
        }
        count += 1;
    }
}

/// Samples a forward subordinator trajectory on `steps` uniform
/// increments covering `[0, t_max]`. `alpha = 1` degenerates to the
/// deterministic drift `S(t) = t`.
pub fn subordinator_path<R: Rng + ?Sized>(
    alpha: f64,
    mu: f64,
    t_max: f64,
    steps: usize,
    rng: &mut R,
) -> Result<PathGrid> {
    assert!(
        alpha > 0.0 && alpha <= 1.0,
        "stable index must lie in (0,1], got {alpha}"
    );
    assert!(
        t_max > 0.0 && t_max.is_finite(),
        "horizon must be positive, got {t_max}"
    );
    assert!(steps >= 1, "path needs at least one step");
    let dt = t_max / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    times.push(0.0);
    values.push(0.0);
    let mut level = 0.0;
    for i in 1..=steps {
        level += if alpha == 1.0 {
            dt
        } else {
            sample_tempered_stable(alpha, mu, dt, rng)?
        };
        times.push(i as f64 * dt);
        values.push(level);
    }
    Ok(PathGrid { times, values })
}
