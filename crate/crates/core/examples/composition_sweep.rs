// Privacy loss against number of compositions, shuffled versus unshuffled.

use shuffle_rdp::accountant::to_approx_dp;
use shuffle_rdp::rdp::{rdp_curve, upper_bound_curve, MechanismSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = MechanismSpec::new(9.48, 60_000)?;
    let orders: Vec<u32> = (2..=64).collect();
    let shuffled = rdp_curve(&spec, &orders)?;
    let bound = upper_bound_curve(spec.sigma, &orders)?;
    let delta = 1.0 / spec.n as f64;
    println!("k      shuffled  unshuffled");
    for k in [1, 10, 100, 1_000, 10_000] {
        let a = to_approx_dp(&shuffled.scaled(k), delta)?;
        let b = to_approx_dp(&bound.scaled(k), delta)?;
        println!("{k:<6} {:<9.4} {:.4}", a.epsilon, b.epsilon);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
