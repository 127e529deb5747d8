//! State probabilities of fractional point processes, with three independent
//! routes to the same numbers.
//!
//! The processes handled here are time-changed Poisson processes `N(C(t))`
//! where the random clock `C` is built from one-sided stable subordinators,
//! their tempered variants and their inverses, together with two discrete
//! operator families (Gegenbauer and composite fractional shifts) that fall
//! outside the subordination picture. For each family the crate provides:
//!
//! * explicit probability mass series ([`pmf`]), evaluated with controlled
//!   truncation and automatic escalation to extended internal precision when
//!   floating-point cancellation would destroy the result,
//! * extraction of the same probabilities from the closed-form probability
//!   generating function, computed in extended-precision truncated power
//!   series arithmetic ([`ztrans`]), used as the in-repo oracle,
//! * exact-in-law Monte Carlo samplers ([`simulate`]),
//! * discrete fractional operators and governing-equation residual checks
//!   ([`fracderiv`]),
//! * a check harness ([`harness`]) that runs all cross-validation suites and
//!   emits machine-readable reports.
//!
//! Special functions needed throughout (two-parameter Mittag-Leffler,
//! Prabhakar function, generalized binomials, Pochhammer symbols) live in
//! [`specfun`].

pub mod error;
pub mod fracderiv;
pub mod harness;
pub mod pmf;
pub mod simulate;
pub mod specfun;
pub mod ztrans;

mod xreal;

pub use error::Error;
pub use pmf::{
    composite_shift_pmf, gegenbauer_pmf, gegenbauer_ts_pmf, pmf_table, poisson_pmf, sfpp_pmf,
    tempered_sfpp_pmf, tempered_tsfpp_pmf, tfpp_pmf, tsfpp_pmf, Family, FamilySpec,
    GegenbauerParams, PmfTable, ProcessParams,
};
pub use specfun::{MLParams, SeriesConfig};

/// Convenience alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;
