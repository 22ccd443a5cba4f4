//! Amplification of the shuffle Gaussian by subsampling.
//!
//! Two participation models are covered: a fixed-size subsample of `m` out
//! of `n` users per round, and shuffled check-in, where each user joins a
//! round independently with probability `γ` so the number of shuffled
//! reports is binomial.

use std::collections::HashMap;
use std::ops::RangeInclusive;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{ln_binomial, ln_one_plus_exp, log_add_exp, log_sum_exp};
use crate::rdp::{self, validate_order, validate_sigma, MechanismSpec, RdpCurve};

/// Largest population the direct check-in sum will evaluate.
pub const DIRECT_CHECKIN_LIMIT: u64 = 200;

/// Subsampling without replacement of `m` users per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsampleSpec {
    pub sigma: f64,
    pub m: u64,
    pub n_total: Option<u64>,
    pub gamma: f64,
}

impl SubsampleSpec {
    /// Rate derived from the population, `γ = m / n_total`.
    pub fn new(sigma: f64, m: u64, n_total: u64) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::invalid("n_total must be at least 1"));
        }
        let spec = Self {
            sigma,
            m,
            n_total: Some(n_total),
            gamma: m as f64 / n_total as f64,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Explicit rate with no population attached.
    pub fn with_rate(sigma: f64, m: u64, gamma: f64) -> Result<Self> {
        let spec = Self {
            sigma,
            m,
            n_total: None,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        validate_sigma(self.sigma)?;
        if self.m == 0 {
            return Err(Error::invalid("subsample size m must be at least 1"));
        }
        validate_rate(self.gamma)?;
        if let Some(n) = self.n_total {
            if self.m > n {
                return Err(Error::invalid(format!("m = {} exceeds n_total = {n}", self.m)));
            }
            if (self.gamma - self.m as f64 / n as f64).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "gamma = {} disagrees with m/n_total = {}/{n}",
                    self.gamma, self.m
                )));
            }
        }
        Ok(())
    }
}

fn validate_rate(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("rate gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// The default grid of Chernoff slack values, `0.05, 0.10, ..., 0.95`.
pub fn default_delta_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Shuffled check-in with participation probability `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckinSpec {
    pub sigma: f64,
    pub n_total: u64,
    pub gamma: f64,
    pub delta_grid: Vec<f64>,
}

impl CheckinSpec {
    pub fn new(sigma: f64, n_total: u64, gamma: f64) -> Result<Self> {
        Self::with_delta_grid(sigma, n_total, gamma, default_delta_grid())
    }

    pub fn with_delta_grid(sigma: f64, n_total: u64, gamma: f64, delta_grid: Vec<f64>) -> Result<Self> {
        let spec = Self {
            sigma,
            n_total,
            gamma,
            delta_grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        validate_sigma(self.sigma)?;
        if self.n_total == 0 {
            return Err(Error::invalid("n_total must be at least 1"));
        }
        validate_rate(self.gamma)?;
        if self.delta_grid.is_empty() {
            return Err(Error::invalid("delta grid must not be empty"));
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::invalid(format!("delta grid value {d} is not inside (0, 1)")));
        }
        Ok(())
    }
}

type SgKey = (u64, u64, u32);

/// Shuffle Gaussian RDP memoized by `(σ, m, j)`.
fn cached_sg(sigma: f64, m: u64, order: u32) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<SgKey, Arc<OnceLock<f64>>>>> = OnceLock::new();

    let spec = MechanismSpec::new(sigma, m)?;
    validate_order(order)?;
    let slot = {
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry((sigma.to_bits(), m, order)).or_default())
    };
    Ok(*slot.get_or_init(|| {
        rdp::shuffle_gaussian_rdp(&spec, order).expect("inputs validated above")
    }))
}

/// `ε^SSG_{γ,m}(λ)` for explicit `(σ, m, γ)`.
fn subsampled(sigma: f64, m: u64, gamma: f64, lambda: u32) -> Result<f64> {
    validate_order(lambda)?;
    let ln_gamma = gamma.ln();
    let eps2 = cached_sg(sigma, m, 2)?;
    let ln_pair = (4f64.ln() + crate::numerics::ln_expm1(eps2)).min(2f64.ln() + eps2);

    let mut terms = Vec::with_capacity(lambda as usize - 1);
    terms.push(2.0 * ln_gamma + ln_binomial(lambda as u64, 2) + ln_pair);
    for j in 3..=lambda {
        let eps_j = cached_sg(sigma, m, j)?;
        terms.push(
            2f64.ln()
                + j as f64 * ln_gamma
                + ln_binomial(lambda as u64, j as u64)
                + (j - 1) as f64 * eps_j,
        );
    }
    Ok(ln_one_plus_exp(log_sum_exp(&terms)) / (lambda as f64 - 1.0))
}

/// RDP of the subsampled shuffle Gaussian at order `lambda`.
pub fn subsampled_shuffle_rdp(s: &SubsampleSpec, lambda: u32) -> Result<f64> {
    s.validate()?;
    subsampled(s.sigma, s.m, s.gamma, lambda)
}

/// Shuffled check-in RDP by summing over every possible number of
/// participants `k = 1..=n`. The `k = 0` outcome is not part of the sum.
pub fn checkin_rdp_direct(c: &CheckinSpec, lambda: u32) -> Result<f64> {
    c.validate()?;
    validate_order(lambda)?;
    if c.n_total > DIRECT_CHECKIN_LIMIT {
        return Err(Error::limit(
            format!(
                "direct check-in sum over n = {} users; use checkin_rdp_fast instead",
                c.n_total
            ),
            DIRECT_CHECKIN_LIMIT,
        ));
    }
    let n = c.n_total;
    let ln_gamma = c.gamma.ln();
    let ln_stay = (-c.gamma).ln_1p();
    let scale = lambda as f64 - 1.0;
    let terms = (1..=n)
        .into_par_iter()
        .map(|k| {
            let ln_absent = if k == n { 0.0 } else { (n - k) as f64 * ln_stay };
            let eps = subsampled(c.sigma, k, c.gamma, lambda)?;
            Ok(ln_binomial(n, k) + k as f64 * ln_gamma + ln_absent + scale * eps)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((log_sum_exp(&terms) / scale).max(0.0))
}

/// Result of the Chernoff-split check-in bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckinBound {
    pub epsilon: f64,
    /// Chernoff slack `Δ` that attained the bound.
    pub delta: f64,
    /// Participant count used for the high-probability branch,
    /// `floor((1-Δ)nγ) + 1`.
    pub instances: u64,
}

/// The two-term check-in bound at a single slack `delta`. Returns `None` when
/// the implied participant count exceeds the population.
pub fn checkin_bound_at(c: &CheckinSpec, lambda: u32, delta: f64) -> Result<Option<CheckinBound>> {
    c.validate()?;
    validate_order(lambda)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("slack {delta} is not inside (0, 1)")));
    }
    let mean = c.n_total as f64 * c.gamma;
    // flooring can only shrink the count, which enlarges the bound
    let instances = ((1.0 - delta) * mean).floor() as u64 + 1;
    if instances > c.n_total {
        return Ok(None);
    }
    let scale = lambda as f64 - 1.0;
    let tail = scale * subsampled(c.sigma, 1, c.gamma, lambda)? - delta * delta * mean / 2.0;
    let bulk = scale * subsampled(c.sigma, instances, c.gamma, lambda)?;
    Ok(Some(CheckinBound {
        epsilon: log_add_exp(tail, bulk) / scale,
        delta,
        instances,
    }))
}

/// Shuffled check-in RDP via the Chernoff split, minimized over the spec's
/// slack grid. Relies on the shuffle Gaussian moment being non-increasing in
/// the number of reports (see [`monotonicity_scan`]).
pub fn checkin_rdp_fast(c: &CheckinSpec, lambda: u32) -> Result<CheckinBound> {
    let mut best: Option<CheckinBound> = None;
    for &delta in &c.delta_grid {
        if let Some(b) = checkin_bound_at(c, lambda, delta)? {
            if best.is_none_or(|cur| b.epsilon < cur.epsilon) {
                best = Some(b);
            }
        }
    }
    best.ok_or_else(|| {
        Error::invalid("every delta in the grid implies more participants than the population")
    })
}

/// Subsampled shuffle curve over `orders`.
pub fn subsampled_curve(s: &SubsampleSpec, orders: &[u32]) -> Result<RdpCurve> {
    s.validate()?;
    let points = orders
        .par_iter()
        .map(|&o| subsampled_shuffle_rdp(s, o).map(|e| (o, e)))
        .collect::<Result<Vec<_>>>()?;
    RdpCurve::from_pairs(
        points,
        format!("subsampled_shuffle(sigma={}, m={}, gamma={})", s.sigma, s.m, s.gamma),
    )
}

/// Check-in curve over `orders` using the fast bound. The per-order slack
/// choices are returned alongside.
pub fn checkin_curve(c: &CheckinSpec, orders: &[u32]) -> Result<(RdpCurve, Vec<(u32, CheckinBound)>)> {
    c.validate()?;
    let bounds = orders
        .par_iter()
        .map(|&o| checkin_rdp_fast(c, o).map(|b| (o, b)))
        .collect::<Result<Vec<_>>>()?;
    let curve = RdpCurve::from_pairs(
        bounds.iter().map(|(o, b)| (*o, b.epsilon)),
        format!("checkin_fast(sigma={}, n={}, gamma={})", c.sigma, c.n_total, c.gamma),
    )?;
    Ok((curve, bounds))
}

/// Check-in curve over `orders` using the direct sum.
pub fn checkin_curve_direct(c: &CheckinSpec, orders: &[u32]) -> Result<RdpCurve> {
    let points = orders
        .iter()
        .map(|&o| checkin_rdp_direct(c, o).map(|e| (o, e)))
        .collect::<Result<Vec<_>>>()?;
    RdpCurve::from_pairs(
        points,
        format!("checkin_direct(sigma={}, n={}, gamma={})", c.sigma, c.n_total, c.gamma),
    )
}

/// One row of a monotonicity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub n: u64,
    /// `ln` of the moment `E[(M(D')/M(D))^λ]`.
    pub log_moment: f64,
    /// The moment itself (may overflow to infinity for tiny σ).
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityScan {
    pub sigma: f64,
    pub lambda: u32,
    pub points: Vec<ScanPoint>,
    /// True iff the moment never grows by more than a `1e-12` relative slack
    /// from one `n` to the next.
    pub non_increasing: bool,
}

const SCAN_SLACK: f64 = 1e-12;

/// Evaluate the shuffle Gaussian moment across a range of database sizes and
/// check that it is non-increasing in `n`.
pub fn monotonicity_scan(sigma: f64, lambda: u32, n_range: RangeInclusive<u64>) -> Result<MonotonicityScan> {
    validate_sigma(sigma)?;
    validate_order(lambda)?;
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo == 0 || lo > hi {
        return Err(Error::invalid(format!("n range {lo}..{hi} must be non-empty and start at 1 or more")));
    }
    let points = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let log_moment = rdp::log_moment(&MechanismSpec { sigma, n }, lambda)?;
            Ok(ScanPoint {
                n,
                log_moment,
                moment: log_moment.exp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slack = SCAN_SLACK.ln_1p();
    let non_increasing = points
        .windows(2)
        .all(|w| w[1].log_moment <= w[0].log_moment + slack);
    Ok(MonotonicityScan {
        sigma,
        lambda,
        points,
        non_increasing,
    })
}
