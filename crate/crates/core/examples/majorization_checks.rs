//! Majorization predicates and the empirical Schur-convexity verifier.
//!
//! cargo run --example majorization_checks

use mimo_sic::majorization::{
    additive_majorizes, mean_vector, multiplicative_majorizes, schur_verify, Objective,
};

fn main() -> mimo_sic::Result<()> {
    let a = [0.5, 0.3, 0.2];
    let b = [0.7, 0.2, 0.1];
    println!("{a:?} < {b:?}: {}", additive_majorizes(&a, &b)?);
    println!("{b:?} < {a:?}: {}", additive_majorizes(&b, &a)?);
    println!("mean vector < a: {}", additive_majorizes(&mean_vector(&a), &a)?);
    println!("[2, 2] <x [4, 1]: {}", multiplicative_majorizes(&[2.0, 2.0], &[4.0, 1.0])?);

    let catalog = [
        Objective::max_mse(),
        Objective::sum_mse(),
        Objective::min_sinr_max(),
        Objective::sum_ber(16)?,
        Objective::prod_mse(),
        Objective::weighted_geo_mean(vec![1.0, 2.0, 3.0, 4.0])?,
    ];
    for obj in &catalog {
        let r = schur_verify(obj, 1000, 3)?;
        println!(
            "{:<18} {:?}: {} violations, {} against the opposite class",
            obj.name(),
            r.declared,
            r.violations,
            r.opposite_violations
        );
    }
    Ok(())
}
