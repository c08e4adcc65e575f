//! Plain and weighted water-filling over a fixed set of mode gains.
//!
//! cargo run --example water_filling

use mimo_sic::linkmodel::mmse_allocation;
use mimo_sic::transceiver::waterfill;

fn main() -> mimo_sic::Result<()> {
    let gains = [8.0, 3.0, 1.0, 0.2];
    for budget in [0.5, 2.0, 10.0] {
        let plain = waterfill(&gains, budget, None)?;
        let weighted = waterfill(&gains, budget, Some(&[1.0, 1.0, 2.0, 4.0]))?;
        println!("budget {budget}");
        println!("  capacity  mu={:.4} active={} p={:.4?}", plain.water_level, plain.active_count, plain.powers);
        println!("  weighted  mu={:.4} active={} p={:.4?}", weighted.water_level, weighted.active_count, weighted.powers);
        println!("  min-MSE   p={:.4?}", mmse_allocation(&gains, budget));
    }
    Ok(())
}
