// Shuffled check-in: exact expectation for a small population, Chernoff bound for a large one.

use shuffle_rdp::accountant::{default_orders, to_approx_dp};
use shuffle_rdp::amplification::{checkin_curve, checkin_rdp_direct, checkin_rdp_fast, CheckinSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let small = CheckinSpec::new(1.0, 40, 0.5)?;
    for lambda in [2, 4, 8] {
        let fast = checkin_rdp_fast(&small, lambda)?;
        let direct = checkin_rdp_direct(&small, lambda)?;
        println!(
            "n=40 order {lambda}: direct {direct:.6e}, fast {:.6e} (slack {}, {} instances)",
            fast.epsilon, fast.delta, fast.instances
        );
    }

    let n = 60_000;
    let large = CheckinSpec::new(5.0, n, 0.1)?;
    let (curve, _) = checkin_curve(&large, &default_orders())?;
    for rounds in [1, 100, 1000, 5540] {
        let dp = to_approx_dp(&curve.scaled(rounds), 1.0 / n as f64)?;
        println!("n={n} gamma=0.1 sigma=5, {rounds:>4} rounds: eps {:.4}", dp.epsilon);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
