// Poisson-subsampled shuffle Gaussian: how the curve grows with the sampling rate.

use shuffle_rdp::amplification::{subsampled_shuffle_rdp, SubsampleSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (sigma, m) = (2.0, 100);
    println!("gamma    eps(2)        eps(8)");
    for gamma in [0.001, 0.01, 0.1, 0.5, 1.0] {
        let spec = SubsampleSpec::with_rate(sigma, m, gamma)?;
        println!(
            "{gamma:<7}  {:.6e}  {:.6e}",
            subsampled_shuffle_rdp(&spec, 2)?,
            subsampled_shuffle_rdp(&spec, 8)?
        );
    }

    // Rate from a population size.
    let spec = SubsampleSpec::new(sigma, m, 10_000)?;
    println!("m={m} of 10000 -> gamma {}, eps(4) = {:.6e}", spec.gamma, subsampled_shuffle_rdp(&spec, 4)?);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
