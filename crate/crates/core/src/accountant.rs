//! Composition of RDP curves across rounds, conversion to `(ε, δ)`-DP, and a
//! persistent ledger of what has been spent.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::rdp::RdpCurve;

/// Orders searched by default, `2..=30`.
pub fn default_orders() -> Vec<u32> {
    (2..=30).collect()
}

/// The customary target `δ = 1/n`.
pub fn default_delta(n: u64) -> f64 {
    1.0 / n as f64
}

/// An approximate-DP guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxDp {
    pub epsilon: f64,
    pub delta: f64,
    /// Order that attained the minimum when converted from RDP.
    pub optimal_order: Option<u32>,
    /// Set when the raw conversion was negative and `epsilon` was raised to 0.
    #[serde(default)]
    pub clamped: bool,
}

impl ApproxDp {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::invalid(format!("epsilon must be non-negative, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(Self {
            epsilon,
            delta,
            optimal_order: None,
            clamped: false,
        })
    }
}

/// Pointwise `Σ count·ε(λ)` over the orders shared by every curve.
pub fn compose(curves: &[(&RdpCurve, u64)]) -> Result<RdpCurve> {
    let Some(((first, _), rest)) = curves.split_first() else {
        return Err(Error::invalid("nothing to compose"));
    };
    if let Some((_, c)) = curves.iter().find(|(_, c)| *c == 0) {
        return Err(Error::invalid(format!("composition count must be at least 1, got {c}")));
    }
    let shared: Vec<u32> = first
        .orders()
        .filter(|o| rest.iter().all(|(c, _)| c.get(*o).is_some()))
        .collect();
    if shared.is_empty() {
        let all: std::collections::BTreeSet<u32> = curves.iter().flat_map(|(c, _)| c.orders()).collect();
        return Err(Error::invalid(format!(
            "curves share no common order; orders present somewhere but not everywhere: {all:?}"
        )));
    }
    let points = shared.into_iter().map(|o| {
        let mut acc = 0.0;
        for (c, count) in curves {
            acc += *count as f64 * c.get(o).unwrap_or_default();
        }
        (o, acc)
    });
    let provenance = curves
        .iter()
        .map(|(c, n)| format!("{} x{n}", c.provenance()))
        .collect::<Vec<_>>()
        .join(" + ");
    RdpCurve::from_pairs(points, provenance)
}

/// The conversion objective at a single order.
pub fn conversion_at(epsilon: f64, order: u32, delta: f64) -> f64 {
    let l = order as f64;
    epsilon + ((1.0 / delta).ln() + (l - 1.0) * (-1.0 / l).ln_1p() - l.ln()) / (l - 1.0)
}

/// Convert an RDP curve to `(ε, δ)`-DP by minimizing over the curve's orders.
/// Ties go to the smaller order.
pub fn to_approx_dp(curve: &RdpCurve, delta: f64) -> Result<ApproxDp> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (order, raw) = curve
        .points()
        .iter()
        .map(|(&o, &e)| (o, conversion_at(e, o, delta)))
        .fold(None, |best: Option<(u32, f64)>, (o, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((o, v)),
        })
        .ok_or_else(|| Error::invalid("cannot convert an empty curve"))?;
    Ok(ApproxDp {
        epsilon: raw.max(0.0),
        delta,
        optimal_order: Some(order),
        clamped: raw < 0.0,
    })
}

/// Noise a central DP-SGD simulation must add to the batch sum to match
/// `batch` reports each carrying independent `N(0, σ²)` noise.
pub fn equivalent_central_noise(sigma: f64, batch: u64) -> f64 {
    sigma * (batch as f64).sqrt()
}

pub const LEDGER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub provenance: String,
    pub rounds: u64,
    pub points: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct ComposedPoints {
    points: BTreeMap<u32, f64>,
}

/// Ordered record of mechanisms applied, with the running composed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LedgerDoc", into = "LedgerDoc")]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
    composed: BTreeMap<u32, f64>,
}

#[derive(Serialize, Deserialize)]
struct LedgerDoc {
    version: u32,
    entries: Vec<LedgerEntry>,
    composed: ComposedPoints,
}

impl From<Ledger> for LedgerDoc {
    fn from(l: Ledger) -> Self {
        LedgerDoc {
            version: LEDGER_VERSION,
            entries: l.entries,
            composed: ComposedPoints { points: l.composed },
        }
    }
}

impl TryFrom<LedgerDoc> for Ledger {
    type Error = Error;

    fn try_from(doc: LedgerDoc) -> Result<Self> {
        if doc.version != LEDGER_VERSION {
            return Err(Error::invalid(format!(
                "unsupported ledger version {} (expected {LEDGER_VERSION})",
                doc.version
            )));
        }
        let mut ledger = Ledger::new();
        for e in doc.entries {
            let curve = RdpCurve::new(e.points, e.provenance)?;
            ledger.append(&curve, e.rounds)?;
        }
        if ledger.composed != doc.composed.points {
            return Err(Error::invalid("stored composed curve disagrees with the ledger entries"));
        }
        Ok(ledger)
    }
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new()
    }
}

impl Ledger {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            composed: BTreeMap::new(),
        }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Record `rounds` applications of `curve`. The ledger is left untouched
    /// on error.
    pub fn append(&mut self, curve: &RdpCurve, rounds: u64) -> Result<()> {
        if rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        let composed = if self.entries.is_empty() {
            curve.points().iter().map(|(&o, &e)| (o, 0.0 + rounds as f64 * e)).collect()
        } else {
            let next: BTreeMap<u32, f64> = self
                .composed
                .iter()
                .filter_map(|(&o, &acc)| curve.get(o).map(|e| (o, acc + rounds as f64 * e)))
                .collect();
            if next.is_empty() {
                return Err(Error::invalid(format!(
                    "curve orders {:?} share nothing with the ledger orders {:?}",
                    curve.orders().collect::<Vec<_>>(),
                    self.composed.keys().collect::<Vec<_>>()
                )));
            }
            next
        };
        self.composed = composed;
        self.entries.push(LedgerEntry {
            provenance: curve.provenance().to_string(),
            rounds,
            points: curve.points().clone(),
        });
        Ok(())
    }

    /// The running composed curve, `None` while empty.
    pub fn composed(&self) -> Option<RdpCurve> {
        if self.entries.is_empty() {
            return None;
        }
        RdpCurve::new(self.composed.clone(), "ledger").ok()
    }

    /// Composed curve rebuilt from the entries.
    pub fn recompute(&self) -> Result<RdpCurve> {
        let curves = self
            .entries
            .iter()
            .map(|e| RdpCurve::new(e.points.clone(), e.provenance.clone()))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(&RdpCurve, u64)> = curves.iter().zip(&self.entries).map(|(c, e)| (c, e.rounds)).collect();
        compose(&pairs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Load from `path`, or start empty if the file does not exist.
    pub fn load_or_new(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(s) => Self::from_json(&s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Write to `path` via a temporary file and rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

/// A ledger shared between one writer and many readers. Readers get an
/// immutable snapshot whose entries and composed curve always agree.
#[derive(Debug, Default, Clone)]
pub struct SharedLedger {
    inner: Arc<RwLock<Arc<Ledger>>>,
}

impl SharedLedger {
    pub fn new(ledger: Ledger) -> Self {
        Self {
            inner: Arc::new(RwLock::new(Arc::new(ledger))),
        }
    }

    pub fn snapshot(&self) -> Arc<Ledger> {
        Arc::clone(&self.inner.read().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn append(&self, curve: &RdpCurve, rounds: u64) -> Result<()> {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let mut next = Ledger::clone(&guard);
        next.append(curve, rounds)?;
        *guard = Arc::new(next);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(slope: f64, orders: std::ops::RangeInclusive<u32>) -> RdpCurve {
        RdpCurve::from_pairs(orders.map(|o| (o, slope * o as f64)), "line").unwrap()
    }

    #[test]
    fn compose_linear() {
        let c = line(0.1, 2..=10);
        let out = compose(&[(&c, 1), (&c, 1)]).unwrap();
        for (o, e) in out.points() {
            assert!((e - 0.2 * *o as f64).abs() < 1e-15);
        }
        let out = compose(&[(&c, 7)]).unwrap();
        for (o, e) in out.points() {
            assert_eq!(*e, 7.0 * c.get(*o).unwrap());
        }
    }

    #[test]
    fn compose_intersects_orders() {
        let a = line(0.1, 2..=10);
        let b = line(0.1, 5..=20);
        let out = compose(&[(&a, 1), (&b, 2)]).unwrap();
        assert_eq!(out.orders().collect::<Vec<_>>(), (5..=10).collect::<Vec<_>>());
        let c = line(0.1, 30..=31);
        let err = compose(&[(&a, 1), (&c, 1)]).unwrap_err();
        assert!(err.to_string().contains("30"), "{err}");
        assert!(compose(&[]).is_err());
        assert!(compose(&[(&a, 0)]).is_err());
    }

    #[test]
    fn gaussian_line_conversion() {
        let c = line(0.5, 2..=64);
        let dp = to_approx_dp(&c, 1e-5).unwrap();
        assert_eq!(dp.optimal_order, Some(5));
        assert!((dp.epsilon - 4.752_728_336_819_823).abs() < 1e-12);
        assert!(!dp.clamped);
    }

    #[test]
    fn zero_curve_clamps() {
        let c = RdpCurve::from_pairs((2..=10).map(|o| (o, 0.0)), "zero").unwrap();
        let dp = to_approx_dp(&c, 0.5).unwrap();
        let raw = (2..=10).map(|o| conversion_at(0.0, o, 0.5)).fold(f64::INFINITY, f64::min);
        assert!(raw < 0.0);
        assert_eq!(dp.epsilon, 0.0);
        assert!(dp.clamped);
    }

    #[test]
    fn conversion_rejects_bad_delta() {
        let c = line(0.5, 2..=4);
        for d in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(to_approx_dp(&c, d).is_err());
        }
    }

    #[test]
    fn central_noise() {
        assert_eq!(equivalent_central_noise(5.0, 100), 50.0);
        assert_eq!(equivalent_central_noise(3.3, 1), 3.3);
        let v = equivalent_central_noise(0.05 * 5.0, 1000);
        assert!((v - 0.25 * 1000f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ledger_basics() {
        let c = line(0.01, 2..=30);
        let mut l = Ledger::new();
        assert!(l.composed().is_none());
        l.append(&c, 1).unwrap();
        assert_eq!(l.composed().unwrap().points(), c.points());

        let mut twice = Ledger::new();
        twice.append(&c, 1).unwrap();
        twice.append(&c, 1).unwrap();
        let mut once = Ledger::new();
        once.append(&c, 2).unwrap();
        assert_eq!(twice.composed().unwrap().points(), once.composed().unwrap().points());

        assert!(l.append(&c, 0).is_err());
        let disjoint = line(0.01, 40..=41);
        let before = l.clone();
        assert!(l.append(&disjoint, 1).is_err());
        assert_eq!(l, before);
    }

    #[test]
    fn ledger_many_rounds() {
        let c = line(1e-4, 2..=30);
        let mut l = Ledger::new();
        l.append(&c, 5540).unwrap();
        for (o, e) in l.composed().unwrap().points() {
            assert_eq!(*e, 5540.0 * c.get(*o).unwrap());
        }
    }

    #[test]
    fn ledger_version_and_tamper_checks() {
        let mut l = Ledger::new();
        l.append(&line(0.3, 2..=4), 3).unwrap();
        let json = l.to_json().unwrap();
        assert_eq!(Ledger::from_json(&json).unwrap(), l);

        let bumped = json.replace("\"version\": 1", "\"version\": 2");
        assert!(Ledger::from_json(&bumped).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["composed"]["points"]["2"] = serde_json::json!(123.0);
        assert!(Ledger::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn shared_snapshots() {
        let shared = SharedLedger::new(Ledger::new());
        let before = shared.snapshot();
        shared.append(&line(0.1, 2..=5), 2).unwrap();
        assert!(before.is_empty());
        let after = shared.snapshot();
        assert_eq!(after.entries().len(), 1);
        assert_eq!(after.recompute().unwrap().points(), after.composed().unwrap().points());
    }
}
