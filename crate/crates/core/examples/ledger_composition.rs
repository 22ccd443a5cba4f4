// Persisting a privacy ledger across heterogeneous training phases.

use shuffle_rdp::accountant::{default_orders, to_approx_dp, Ledger};
use shuffle_rdp::amplification::{subsampled_curve, SubsampleSpec};
use shuffle_rdp::rdp::{rdp_curve, MechanismSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("ledger.json");
    let orders = default_orders();

    let mut ledger = Ledger::load_or_new(&path)?;
    let warmup = rdp_curve(&MechanismSpec::new(9.48, 60_000)?, &orders)?;
    ledger.append(&warmup, 3)?;
    ledger.save(&path)?;

    let mut ledger = Ledger::load(&path)?;
    let sampled = subsampled_curve(&SubsampleSpec::new(4.0, 600, 60_000)?, &orders)?;
    ledger.append(&sampled, 500)?;
    ledger.save(&path)?;

    let reloaded = Ledger::load(&path)?;
    for e in reloaded.entries() {
        println!("{} x{}", e.provenance, e.rounds);
    }
    let dp = to_approx_dp(&reloaded.composed().unwrap(), 1e-5)?;
    println!("total: eps {:.4} at delta 1e-5 (order {:?})", dp.epsilon, dp.optimal_order);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
