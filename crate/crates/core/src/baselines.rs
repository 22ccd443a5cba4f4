//! Approximate-DP baseline: classical Gaussian LDP calibration, the
//! "hiding among the clones" shuffle amplification bound, and the
//! Kairouz-Oh-Viswanath strong composition theorem.
//!
//! The Gaussian randomizer satisfies a whole family of `(ε₀, δ₀)` pairs, so
//! the baseline row scans `δ₀` to find the pair that minimizes the composed
//! `ε` subject to a final `δ` budget.

use serde::Serialize;

use crate::accountant::ApproxDp;
use crate::error::{Error, Result};
use crate::rdp::validate_sigma;

/// Sensitivity of unit-norm reports under replacement adjacency.
pub const DEFAULT_LDP_SENSITIVITY: f64 = 2.0;

/// A local `(ε₀, δ₀)` guarantee of a Gaussian randomizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpSpec {
    pub epsilon0: f64,
    pub delta0: f64,
    pub sensitivity: f64,
}

impl LdpSpec {
    /// Spec with the default sensitivity of 2. `epsilon0 = 0` is allowed and
    /// describes a randomizer that reveals nothing.
    pub fn new(epsilon0: f64, delta0: f64) -> Result<Self> {
        Self::with_sensitivity(epsilon0, delta0, DEFAULT_LDP_SENSITIVITY)
    }

    pub fn with_sensitivity(epsilon0: f64, delta0: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon0 >= 0.0 && epsilon0.is_finite()) {
            return Err(Error::invalid(format!("epsilon0 must be finite and non-negative, got {epsilon0}")));
        }
        check_open_unit(delta0, "delta0")?;
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::invalid(format!("sensitivity must be positive, got {sensitivity}")));
        }
        Ok(Self {
            epsilon0,
            delta0,
            sensitivity,
        })
    }
}

fn check_open_unit(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaCalibration {
    pub sigma: f64,
    /// The classical calibration is only proven for `ε₀ ≤ 1`.
    pub classical_regime: bool,
}

/// `σ = Δ·√(2 ln(1.25/δ₀)) / ε₀`.
pub fn calibrate_sigma(l: &LdpSpec) -> Result<SigmaCalibration> {
    if l.epsilon0 == 0.0 {
        return Err(Error::invalid("epsilon0 = 0 needs infinite noise"));
    }
    Ok(SigmaCalibration {
        sigma: l.sensitivity * (2.0 * (1.25 / l.delta0).ln()).sqrt() / l.epsilon0,
        classical_regime: l.epsilon0 <= 1.0,
    })
}

/// Inverse of [`calibrate_sigma`]: the `ε₀` a given `σ` buys at `δ₀`.
pub fn gaussian_ldp_epsilon(sigma: f64, delta0: f64, sensitivity: f64) -> Result<f64> {
    validate_sigma(sigma)?;
    check_open_unit(delta0, "delta0")?;
    if !(sensitivity > 0.0) {
        return Err(Error::invalid(format!("sensitivity must be positive, got {sensitivity}")));
    }
    Ok(sensitivity * (2.0 * (1.25 / delta0).ln()).sqrt() / sigma)
}

/// Largest `ε₀` for which the clones bound applies to `n` reports at `delta`:
/// `ln(n / (16 ln(2/δ)))`.
pub fn clones_applicability_limit(n: u64, delta: f64) -> f64 {
    (n as f64 / (16.0 * (2.0 / delta).ln())).ln()
}

/// Central `ε` of `n` shuffled `ε₀`-LDP reports at failure probability `delta`:
/// `ln(1 + (e^ε₀-1)/(e^ε₀+1) · (8√(e^ε₀ ln(4/δ))/√n + 8e^ε₀/n))`.
fn clones_epsilon(epsilon0: f64, n: u64, delta: f64) -> f64 {
    let e0 = epsilon0.exp();
    let n = n as f64;
    let ratio = epsilon0.exp_m1() / (e0 + 1.0);
    (ratio * (8.0 * (e0 * (4.0 / delta).ln()).sqrt() / n.sqrt() + 8.0 * e0 / n)).ln_1p()
}

/// Shuffle amplification of `n` reports from an `(ε₀, δ₀)`-LDP randomizer.
/// The output `δ` is `δ + (e^ε + 1)(1 + e^{-ε₀}/2)·n·δ₀`.
pub fn clones_shuffle_bound(l: &LdpSpec, n: u64, delta: f64) -> Result<ApproxDp> {
    check_open_unit(delta, "delta")?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let limit = clones_applicability_limit(n, delta);
    if !(l.epsilon0 <= limit) {
        return Err(Error::domain(format!(
            "clones bound needs epsilon0 <= ln(n / (16 ln(2/delta))) = {limit}, got {}",
            l.epsilon0
        )));
    }
    let epsilon = clones_epsilon(l.epsilon0, n, delta);
    let inflation = (epsilon.exp() + 1.0) * (1.0 + (-l.epsilon0).exp() / 2.0) * n as f64 * l.delta0;
    ApproxDp::new(epsilon, (delta + inflation).min(1.0))
}

/// `k`-fold composition of an `(ε, δ)` mechanism with slack `delta_slack`.
/// `ε'` is the smallest of `kε` and the two advanced expressions; `δ'` is
/// `kδ + δ_slack`.
pub fn strong_compose(epsilon: f64, delta: f64, k: u64, delta_slack: f64) -> Result<ApproxDp> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    check_open_unit(delta_slack, "delta_slack")?;

    let kf = k as f64;
    let basic = kf * epsilon;
    let drift = epsilon.exp_m1() * epsilon * kf / (epsilon.exp() + 1.0);
    let mid = drift
        + epsilon * (2.0 * kf * (std::f64::consts::E + (kf * epsilon * epsilon).sqrt() / delta_slack).ln()).sqrt();
    let tail = drift + epsilon * (2.0 * kf * (1.0 / delta_slack).ln()).sqrt();
    ApproxDp::new(basic.min(mid).min(tail), (kf * delta + delta_slack).min(1.0))
}

/// `δ₀` candidates: 200 log-spaced points per decade over `[1e-12, 1e-3]`.
pub fn delta0_grid() -> Vec<f64> {
    (0..=1800).map(|i| 10f64.powf(-12.0 + i as f64 / 200.0)).collect()
}

/// One entry of the baseline row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClonesPoint {
    /// Number of composed rounds.
    pub k: u64,
    /// Composed guarantee.
    pub dp: ApproxDp,
    /// Per-round guarantee after shuffling.
    pub round: ApproxDp,
    pub epsilon0: f64,
    pub delta0: f64,
}

/// Baseline row for `k = 1..=max_k` with final `δ ≤ 1/n`.
pub fn clones_table_row(sigma: f64, n: u64, max_k: u64) -> Result<Vec<ClonesPoint>> {
    clones_table_row_with(sigma, n, max_k, 1.0 / n as f64, DEFAULT_LDP_SENSITIVITY)
}

/// Baseline row with an explicit final `δ` budget and LDP sensitivity.
///
/// For each `k`, every grid `δ₀` sets the randomizer's `ε₀` and, with the
/// clones `δ` tied to `δ₀`, a per-round `(ε, δ_round)`. Whatever budget is
/// left after `k·δ_round` becomes the composition slack. The feasible point
/// with the smallest composed `ε` wins; ties go to the smaller `δ₀`.
pub fn clones_table_row_with(
    sigma: f64,
    n: u64,
    max_k: u64,
    target_delta: f64,
    sensitivity: f64,
) -> Result<Vec<ClonesPoint>> {
    validate_sigma(sigma)?;
    check_open_unit(target_delta, "target delta")?;
    if n == 0 || max_k == 0 {
        return Err(Error::invalid("n and max_k must be at least 1"));
    }

    let rounds: Vec<(f64, f64, ApproxDp)> = delta0_grid()
        .into_iter()
        .filter_map(|d0| {
            let e0 = gaussian_ldp_epsilon(sigma, d0, sensitivity).ok()?;
            let ldp = LdpSpec::with_sensitivity(e0, d0, sensitivity).ok()?;
            clones_shuffle_bound(&ldp, n, d0).ok().map(|r| (d0, e0, r))
        })
        .collect();

    (1..=max_k)
        .map(|k| {
            let mut best: Option<ClonesPoint> = None;
            let mut tightest = f64::INFINITY;
            for &(delta0, epsilon0, round) in &rounds {
                let spent = k as f64 * round.delta;
                tightest = tightest.min(spent);
                let slack = target_delta - spent;
                if !(slack > 0.0) {
                    continue;
                }
                let Ok(dp) = strong_compose(round.epsilon, round.delta, k, slack) else {
                    continue;
                };
                if best.is_none_or(|b| dp.epsilon < b.dp.epsilon) {
                    best = Some(ClonesPoint {
                        k,
                        dp,
                        round,
                        epsilon0,
                        delta0,
                    });
                }
            }
            best.ok_or_else(|| {
                Error::domain(format!(
                    "no delta0 on the grid reaches final delta <= {target_delta} at k = {k}; tightest found {tightest}"
                ))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_examples() {
        let l = LdpSpec::new(1.0, 1.0 / 60_000.0).unwrap();
        let c = calibrate_sigma(&l).unwrap();
        assert!((c.sigma - 9.476).abs() < 1e-3, "{}", c.sigma);
        assert!(c.classical_regime);

        let d0 = 1.25 / std::f64::consts::E.powi(2);
        let l = LdpSpec::with_sensitivity(1.0, d0, 1.0).unwrap();
        assert!((calibrate_sigma(&l).unwrap().sigma - 2.0).abs() < 1e-14);

        let a = calibrate_sigma(&LdpSpec::with_sensitivity(0.5, 1e-6, 1.0).unwrap()).unwrap();
        let b = calibrate_sigma(&LdpSpec::with_sensitivity(0.5, 1e-6, 2.0).unwrap()).unwrap();
        assert_eq!(b.sigma, 2.0 * a.sigma);

        let loose = calibrate_sigma(&LdpSpec::new(3.0, 1e-6).unwrap()).unwrap();
        assert!(!loose.classical_regime);
        assert!(calibrate_sigma(&LdpSpec::new(0.0, 1e-6).unwrap()).is_err());
    }

    #[test]
    fn inverse_calibration() {
        let e = gaussian_ldp_epsilon(9.475, 1.0 / 60_000.0, 2.0).unwrap();
        assert!((e - 1.0).abs() < 1e-3);
        assert!(gaussian_ldp_epsilon(1e300, 1e-5, 2.0).unwrap() < 1e-290);
    }

    #[test]
    fn clones_degenerate_randomizer() {
        let l = LdpSpec::new(0.0, 1e-9).unwrap();
        let dp = clones_shuffle_bound(&l, 10_000, 1e-6).unwrap();
        assert_eq!(dp.epsilon, 0.0);
    }

    #[test]
    fn clones_applicability() {
        let l = LdpSpec::new(5.0, 1e-9).unwrap();
        match clones_shuffle_bound(&l, 1000, 1e-6) {
            Err(Error::Domain(msg)) => assert!(msg.contains("epsilon0")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn strong_composition_single_round() {
        let dp = strong_compose(0.3, 1e-7, 1, 1e-6).unwrap();
        assert_eq!(dp.epsilon, 0.3);
        assert!((dp.delta - (1e-7 + 1e-6)).abs() < 1e-20);
    }

    #[test]
    fn strong_composition_branches() {
        // few rounds with a small slack: the basic sum wins
        let dp = strong_compose(0.2, 0.0, 2, 1e-6).unwrap();
        assert_eq!(dp.epsilon, 0.4);
        // a generous slack lets the advanced expression undercut it
        let dp = strong_compose(0.2, 0.0, 2, 0.5).unwrap();
        assert!(dp.epsilon < 0.4);
        // many small rounds: sublinear growth
        let dp = strong_compose(0.01, 0.0, 10_000, 1e-6).unwrap();
        assert!(dp.epsilon < 100.0 * 0.5);
        assert!(strong_compose(0.1, 0.0, 0, 0.1).is_err());
        assert!(strong_compose(0.1, 1.0, 1, 0.1).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = delta0_grid();
        assert_eq!(g.len(), 1801);
        assert!((g[0] - 1e-12).abs() < 1e-26);
        assert!((g[1800] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn single_column_row() {
        let row = clones_table_row(9.48, 60_000, 1).unwrap();
        assert_eq!(row.len(), 1);
        assert!(row[0].dp.delta <= 1.0 / 60_000.0 + 1e-18);
    }

    #[test]
    fn infeasible_row() {
        // tiny population: the n·δ₀ inflation can never fit the budget
        match clones_table_row_with(0.5, 20, 1, 1e-3, 2.0) {
            Err(Error::Domain(msg)) => assert!(msg.contains("tightest")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }
}
