//! Equalizes the triangular diagonal of a random matrix with the GMD rotation.
//!
//! cargo run --example gmd_rotation

use mimo_sic::linkmodel::complex_gaussian;
use mimo_sic::matdecomp::{gmd_rotation, qr_positive, singular_values, CMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mimo_sic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng));
    let sv = singular_values(&a)?;
    let gm = sv.iter().product::<f64>().powf(0.25);

    let (_, r_plain) = qr_positive(&a)?;
    let (_, r_gmd) = qr_positive(&(&a * gmd_rotation(&a)?))?;
    let diag = |r: &CMatrix| (0..4).map(|i| r[(i, i)].re).collect::<Vec<_>>();
    println!("singular values   {sv:.6?}");
    println!("geometric mean    {gm:.6}");
    println!("diag R of A       {:.6?}", diag(&r_plain));
    println!("diag R of A V     {:.6?}", diag(&r_gmd));
    Ok(())
}
