//! Sends 16-QAM through a designed THP link and compares simulated MSEs with
//! the design, then does the same for DFE with decision and genie feedback.
//!
//! cargo run --release --example thp_link

use mimo_sic::linkmodel::{rayleigh_channel, ConstellationSpec, Feedback, LinkRealization};
use mimo_sic::majorization::Objective;
use mimo_sic::transceiver::{design, Scheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mimo_sic::Result<()> {
    let spec = ConstellationSpec::new(16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dfe = rayleigh_channel(&mut rng, 4, 4, 1.0 / (4.0 * 10f64.powf(1.6)))?;
    let thp = dfe.with_scheme(Scheme::Thp, spec.sigma_v2())?;

    let runs = [
        (&thp, Feedback::Decisions, "thp"),
        (&dfe, Feedback::Decisions, "dfe"),
        (&dfe, Feedback::Genie, "dfe genie"),
    ];
    for (ch, feedback, name) in runs {
        let tx = design(ch, 1.0, &Objective::sum_mse())?;
        let stats = LinkRealization::new(ch, &tx, &spec)?.run(&mut rng, 200_000, feedback)?;
        println!("{name:<10} BER {:.3e}", stats.ber());
        println!("  analytic  {:.5?}", tx.stream_mses);
        println!("  simulated {:.5?}", stats.empirical_mse());
    }
    Ok(())
}
