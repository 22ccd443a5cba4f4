//! Exact Rényi-DP of the shuffle Gaussian mechanism.
//!
//! For `n` users each adding `N(0, σ²)` noise to a unit-sensitivity value
//! before a uniform shuffle, the order-`λ` Rényi divergence between adjacent
//! databases is
//!
//! ```text
//! ε(λ) = 1/(λ-1) · ln( e^{-λ/2σ²} / n^λ · Σ_{k_1+..+k_n=λ} C(λ; k_1..k_n) · e^{Σ k_i² / 2σ²} )
//! ```
//!
//! The sum runs over all `n`-tuples, but its summand only depends on the
//! partition of `λ` the tuple rearranges to, so it is evaluated as a sum over
//! partitions weighted by the number of tuples per partition.
//!
//! The weights `C(λ; k)·#perm / n^λ` form a probability distribution (they
//! are the multinomial probabilities of dropping `λ` balls into `n` bins), so
//! the inner expectation is `1 + Σ p_π · expm1((Σk² - λ)/2σ²)` with every
//! summand non-negative. Accumulating that excess in log space keeps full
//! relative precision even when `ε` is of order `1e-7`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_expm1, ln_factorial, ln_one_plus_exp, log_sum_exp};
use crate::partitions::{self, log_multinomial_coefficient, Partition};

/// A shuffle Gaussian mechanism instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    /// Noise standard deviation per unit of sensitivity.
    pub sigma: f64,
    /// Number of shuffled reports.
    pub n: u64,
}

impl MechanismSpec {
    pub fn new(sigma: f64, n: u64) -> Result<Self> {
        let spec = Self { sigma, n };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec for raw noise `sigma` applied to values of L2 sensitivity
    /// `sensitivity`. Only the ratio matters.
    pub fn with_sensitivity(sigma: f64, sensitivity: f64, n: u64) -> Result<Self> {
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::invalid(format!("sensitivity must be positive, got {sensitivity}")));
        }
        Self::new(sigma / sensitivity, n)
    }

    pub fn validate(&self) -> Result<()> {
        validate_sigma(self.sigma)?;
        if self.n == 0 {
            return Err(Error::invalid("database size n must be at least 1"));
        }
        Ok(())
    }
}

pub(crate) fn validate_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || sigma.is_nan() {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

pub(crate) fn validate_order(lambda: u32) -> Result<()> {
    if lambda < 2 {
        return Err(Error::invalid(format!("Renyi order must be an integer >= 2, got {lambda}")));
    }
    partitions::check_order(lambda)
}

/// An RDP curve: integer order to epsilon, with a tag describing its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct RdpCurve {
    points: BTreeMap<u32, f64>,
    provenance: String,
}

#[derive(Deserialize)]
struct RawCurve {
    points: BTreeMap<u32, f64>,
    #[serde(default)]
    provenance: String,
}

impl TryFrom<RawCurve> for RdpCurve {
    type Error = Error;

    fn try_from(raw: RawCurve) -> Result<Self> {
        RdpCurve::new(raw.points, raw.provenance)
    }
}

impl RdpCurve {
    pub fn new(points: BTreeMap<u32, f64>, provenance: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("an RDP curve needs at least one order"));
        }
        for (&order, &eps) in &points {
            if order < 2 {
                return Err(Error::invalid(format!("curve order {order} is below 2")));
            }
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::invalid(format!(
                    "curve epsilon at order {order} must be finite and non-negative, got {eps}"
                )));
            }
        }
        Ok(Self {
            points,
            provenance: provenance.into(),
        })
    }

    /// Build from `(order, epsilon)` pairs.
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (u32, f64)>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        Self::new(pairs.into_iter().collect(), provenance)
    }

    pub fn points(&self) -> &BTreeMap<u32, f64> {
        &self.points
    }

    pub fn get(&self, order: u32) -> Option<f64> {
        self.points.get(&order).copied()
    }

    pub fn orders(&self) -> impl Iterator<Item = u32> + '_ {
        self.points.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Every point multiplied by `count`, as after `count`-fold composition.
    pub fn scaled(&self, count: u64) -> RdpCurve {
        RdpCurve {
            points: self.points.iter().map(|(&o, &e)| (o, count as f64 * e)).collect(),
            provenance: format!("{} x{count}", self.provenance),
        }
    }
}

/// Per-partition quantities that depend only on `λ`.
struct PartitionTerm {
    len: usize,
    sum_sq: u64,
    /// `ln[λ!/Π k_i!] - Σ_v ln κ_v!`
    ln_weight: f64,
}

fn partition_terms(lambda: u32) -> Result<Arc<[PartitionTerm]>> {
    type Slot = Arc<OnceLock<Arc<[PartitionTerm]>>>;
    static CACHE: OnceLock<Mutex<HashMap<u32, Slot>>> = OnceLock::new();

    let parts = partitions::generate_partitions(lambda, lambda)?;
    let slot = {
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(lambda).or_default())
    };
    Ok(Arc::clone(slot.get_or_init(|| {
        parts.iter().map(term_for).collect()
    })))
}

fn term_for(p: &Partition) -> PartitionTerm {
    let mut ln_repeats = 0.0;
    let parts = p.parts();
    let mut i = 0;
    while i < parts.len() {
        let run = parts[i..].iter().take_while(|&&k| k == parts[i]).count();
        ln_repeats += ln_factorial(run as u64);
        i += run;
    }
    PartitionTerm {
        len: parts.len(),
        sum_sq: p.sum_of_squares(),
        ln_weight: log_multinomial_coefficient(p) - ln_repeats,
    }
}

/// `ln E[(M(D')/M(D))^λ]`, the log of the pre-log quantity of the exact
/// expression (equal to `(λ-1)·ε(λ)` before any clamping).
pub fn log_moment(spec: &MechanismSpec, lambda: u32) -> Result<f64> {
    spec.validate()?;
    validate_order(lambda)?;
    let terms = partition_terms(lambda)?;

    let n = spec.n;
    let max_len = (lambda as u64).min(n) as usize;
    // prefix[l] = ln(n!/(n-l)!)
    let mut prefix = Vec::with_capacity(max_len + 1);
    let mut acc = 0.0;
    prefix.push(acc);
    for i in 0..max_len as u64 {
        acc += ((n - i) as f64).ln();
        prefix.push(acc);
    }
    let ln_n_pow = lambda as f64 * (n as f64).ln();
    let two_var = 2.0 * spec.sigma * spec.sigma;

    let excess: Vec<f64> = terms
        .iter()
        .filter(|t| t.len <= max_len && t.sum_sq > lambda as u64)
        .map(|t| {
            let q = (t.sum_sq - lambda as u64) as f64 / two_var;
            t.ln_weight + prefix[t.len] - ln_n_pow + ln_expm1(q)
        })
        .collect();
    Ok(ln_one_plus_exp(log_sum_exp(&excess)))
}

/// Exact shuffle Gaussian RDP before the upper-bound clamp.
pub fn shuffle_gaussian_rdp_unclamped(spec: &MechanismSpec, lambda: u32) -> Result<f64> {
    Ok(log_moment(spec, lambda)? / (lambda as f64 - 1.0))
}

/// Exact shuffle Gaussian RDP at integer order `lambda`, reported as
/// `min(exact, λ/2σ²)` and never negative.
pub fn shuffle_gaussian_rdp(spec: &MechanismSpec, lambda: u32) -> Result<f64> {
    let exact = shuffle_gaussian_rdp_unclamped(spec, lambda)?;
    Ok(exact
        .min(shuffle_gaussian_upper_bound(spec.sigma, lambda))
        .max(0.0))
}

/// Gaussian RDP without shuffling, `λ/2σ²`, which dominates the shuffled value.
pub fn shuffle_gaussian_upper_bound(sigma: f64, lambda: u32) -> f64 {
    lambda as f64 / (2.0 * sigma * sigma)
}

/// Exact shuffle Gaussian curve over `orders`. Orders are evaluated in
/// parallel; each point is a pure function of its order.
pub fn rdp_curve(spec: &MechanismSpec, orders: &[u32]) -> Result<RdpCurve> {
    spec.validate()?;
    if orders.is_empty() {
        return Err(Error::invalid("at least one order is required"));
    }
    let points = orders
        .par_iter()
        .map(|&o| shuffle_gaussian_rdp(spec, o).map(|e| (o, e)))
        .collect::<Result<Vec<_>>>()?;
    RdpCurve::from_pairs(
        points,
        format!("shuffle_gaussian(sigma={}, n={})", spec.sigma, spec.n),
    )
}

/// The non-shuffled Gaussian line `λ/2σ²` over `orders`.
pub fn upper_bound_curve(sigma: f64, orders: &[u32]) -> Result<RdpCurve> {
    validate_sigma(sigma)?;
    for &o in orders {
        if o < 2 {
            return Err(Error::invalid(format!("Renyi order must be >= 2, got {o}")));
        }
    }
    RdpCurve::from_pairs(
        orders.iter().map(|&o| (o, shuffle_gaussian_upper_bound(sigma, o))),
        format!("gaussian_bound(sigma={sigma})"),
    )
}

/// Largest `n^λ` the brute-force evaluator accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Reference evaluation that enumerates every `n`-tuple summing to `λ`
/// directly, with exact integer multinomial coefficients. Test scale only.
pub fn brute_force_rdp(spec: &MechanismSpec, lambda: u32) -> Result<f64> {
    spec.validate()?;
    if lambda < 2 {
        return Err(Error::invalid(format!("Renyi order must be an integer >= 2, got {lambda}")));
    }
    let total = spec
        .n
        .checked_pow(lambda)
        .filter(|&t| t <= BRUTE_FORCE_LIMIT)
        .ok_or_else(|| Error::limit(format!("n^lambda = {}^{lambda}", spec.n), BRUTE_FORCE_LIMIT))?;

    let two_var = 2.0 * spec.sigma * spec.sigma;
    let mut tuple = vec![0u32; spec.n as usize];
    let mut sum = 0.0;
    enumerate_tuples(&mut tuple, 0, lambda, &mut |k| {
        let coef = multinomial_exact(lambda, k) as f64;
        let sq: u64 = k.iter().map(|&x| (x as u64) * (x as u64)).sum();
        sum += coef * ((sq as f64 - lambda as f64) / two_var).exp();
    });
    Ok((sum / total as f64).ln() / (lambda as f64 - 1.0))
}

fn enumerate_tuples(tuple: &mut [u32], idx: usize, remaining: u32, visit: &mut impl FnMut(&[u32])) {
    if idx + 1 == tuple.len() {
        tuple[idx] = remaining;
        visit(tuple);
        return;
    }
    for k in 0..=remaining {
        tuple[idx] = k;
        enumerate_tuples(tuple, idx + 1, remaining - k, visit);
    }
}

fn multinomial_exact(lambda: u32, ks: &[u32]) -> u128 {
    let mut left = lambda as u128;
    let mut out: u128 = 1;
    for &k in ks {
        out *= binomial_exact(left, k as u128);
        left -= k as u128;
    }
    out
}

fn binomial_exact(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}
