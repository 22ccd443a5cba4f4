// Exact shuffle accounting against the clones bound with strong composition.

use shuffle_rdp::cli::table2;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let orders: Vec<u32> = (2..=30).collect();
    let t = table2(9.48, 60_000, 7, &orders)?;
    println!("delta = {:.3e}", t.delta);
    println!("k  clones   exact");
    for (k, (c, o)) in t.clones.iter().zip(&t.ours).enumerate() {
        println!("{}  {:.5}  {:.5}", k + 1, c.epsilon, o.epsilon);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
