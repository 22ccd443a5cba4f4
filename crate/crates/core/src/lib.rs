//! Rényi-DP accounting for the shuffle Gaussian mechanism.
//!
//! Each of `n` users perturbs a unit-sensitivity report with Gaussian noise
//! and a shuffler permutes the reports before release. This crate computes
//! the exact RDP curve of that mechanism, amplifies it by subsampling or
//! shuffled check-in, composes curves over training rounds, converts them
//! to `(ε, δ)`-DP, and reproduces an approximate-DP baseline for comparison.
//!
//! ```
//! use shuffle_rdp::{accountant, rdp::{rdp_curve, MechanismSpec}};
//!
//! let spec = MechanismSpec::new(9.48, 60_000).unwrap();
//! let curve = rdp_curve(&spec, &accountant::default_orders()).unwrap();
//! let dp = accountant::to_approx_dp(&curve, 1.0 / 60_000.0).unwrap();
//! assert!((dp.epsilon - 0.2282).abs() < 1e-3);
//! ```

pub mod accountant;
pub mod amplification;
pub mod baselines;
pub mod cli;
pub mod error;
pub mod io;
pub mod numerics;
pub mod partitions;
pub mod rdp;

pub use accountant::{compose, to_approx_dp, ApproxDp, Ledger};
pub use amplification::{CheckinSpec, SubsampleSpec};
pub use error::{Error, Result};
pub use rdp::{MechanismSpec, RdpCurve};
