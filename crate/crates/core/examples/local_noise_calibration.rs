// Calibrating local Gaussian noise and the central noise it adds up to.

use shuffle_rdp::accountant::equivalent_central_noise;
use shuffle_rdp::baselines::{calibrate_sigma, clones_shuffle_bound, gaussian_ldp_epsilon, LdpSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = 9.48;
    let delta0 = 1e-8;
    let eps0 = gaussian_ldp_epsilon(sigma, delta0, 2.0)?;
    println!("sigma={sigma} is ({eps0:.4}, {delta0:e})-LDP");

    let spec = LdpSpec::new(eps0, delta0)?;
    let cal = calibrate_sigma(&spec)?;
    println!("calibrated back: sigma={:.4}, classical regime: {}", cal.sigma, cal.classical_regime);

    let n = 60_000;
    let amplified = clones_shuffle_bound(&spec, n, 1.0 / n as f64)?;
    println!("clones bound after shuffling {n}: ({:.4}, {:.3e})", amplified.epsilon, amplified.delta);

    for batch in [1, 100, 60_000] {
        println!("batch {batch}: summed noise std {:.2}", equivalent_central_noise(sigma, batch));
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
