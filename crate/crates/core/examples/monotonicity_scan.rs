// The shuffle Gaussian moment shrinks as the population grows.

use shuffle_rdp::amplification::monotonicity_scan;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (sigma, lambda) in [(1.0, 8), (9.48, 30)] {
        let scan = monotonicity_scan(sigma, lambda, 1..=200)?;
        let first = &scan.points[0];
        let last = scan.points.last().unwrap();
        println!(
            "sigma={sigma} order={lambda}: log moment {:.4} at n={} -> {:.4e} at n={}, non-increasing: {}",
            first.log_moment, first.n, last.log_moment, last.n, scan.non_increasing
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
