// RDP curve of the shuffle Gaussian mechanism next to the unshuffled bound.

use shuffle_rdp::accountant::to_approx_dp;
use shuffle_rdp::rdp::{rdp_curve, upper_bound_curve, MechanismSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = MechanismSpec::new(9.48, 60_000)?;
    let orders: Vec<u32> = (2..=30).collect();
    let shuffled = rdp_curve(&spec, &orders)?;
    let bound = upper_bound_curve(spec.sigma, &orders)?;

    println!("order  shuffled         unshuffled");
    for o in [2, 4, 8, 16, 30] {
        println!("{o:>5}  {:<15.6e}  {:.6e}", shuffled.get(o).unwrap(), bound.get(o).unwrap());
    }

    let delta = 1.0 / spec.n as f64;
    let dp = to_approx_dp(&shuffled, delta)?;
    let base = to_approx_dp(&bound, delta)?;
    println!("(eps, delta={delta:.2e}): shuffled {:.5} at order {:?}, unshuffled {:.5}", dp.epsilon, dp.optimal_order, base.epsilon);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
