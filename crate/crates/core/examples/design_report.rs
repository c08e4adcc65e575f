//! Designs every objective on one Rayleigh channel and prints the stream MSEs.
//!
//! cargo run --example design_report

use mimo_sic::linkmodel::{linear_maxinfo_baseline, linear_mmse_baseline, rayleigh_channel, ConstellationSpec};
use mimo_sic::majorization::Objective;
use mimo_sic::transceiver::{design, mutual_information, Scheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mimo_sic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dfe = rayleigh_channel(&mut rng, 4, 4, 0.02)?;
    let thp = dfe.with_scheme(Scheme::Thp, ConstellationSpec::new(16)?.sigma_v2())?;

    let objectives = [
        Objective::sum_mse(),
        Objective::max_mse(),
        Objective::min_sinr_max(),
        Objective::sum_ber(16)?,
        Objective::prod_mse(),
        Objective::weighted_geo_mean(vec![4.0, 3.0, 2.0, 1.0])?,
    ];
    let mut designs = Vec::new();
    for obj in &objectives {
        designs.push(design(&dfe, 1.0, obj)?);
        designs.push(design(&thp, 1.0, obj)?);
    }
    designs.push(linear_mmse_baseline(&dfe, 1.0)?);
    designs.push(linear_maxinfo_baseline(&dfe, 1.0)?);

    println!("{:<28} {:>9}  stream MSEs", "design", "MI/nats");
    for d in &designs {
        let ch = if d.scheme == Scheme::Thp { &thp } else { &dfe };
        let mses: Vec<String> = d.stream_mses.iter().map(|m| format!("{m:.5}")).collect();
        println!("{:<28} {:>9.4}  {}", d.label(), mutual_information(ch, &d.p)?, mses.join(" "));
    }
    Ok(())
}
