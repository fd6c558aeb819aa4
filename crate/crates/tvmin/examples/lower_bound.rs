//! The adversarial witness behind the width lower bound: for each Gaussian
//! draw it builds a unit-norm, low-variation signal aligned with the draw
//! and reports the mean payoff next to the closed-form floor.

use rand_distr::Distribution;
use tvmin::width::{lower_bound_construction, width_lower_bound_1d};
use tvmin::SeedSpec;

fn main() -> tvmin::Result<()> {
    let (n, k, samples) = (256, 4, 200);
    let master = SeedSpec::new(77, 0);

    let mut mean = 0.0;
    let mut first = None;
    for i in 0..samples {
        let mut rng = master.derive(i as u64).rng();
        let g: Vec<f64> = (0..n)
            .map(|_| rand_distr::StandardNormal.sample(&mut rng))
            .collect();
        let c = lower_bound_construction(&g, n, k)?;
        mean += c.inner_product;
        first.get_or_insert((c.mu, c.nu, c.l_int, c.h_blocks, c.membership_margin()));
    }
    mean /= samples as f64;

    let (mu, nu, l_int, h_blocks, margin) = first.unwrap();
    println!("witness shape for n {n}, k {k}:");
    println!("  spike height mu {mu:.4}, block height nu {nu:.4}");
    println!("  {h_blocks} head blocks of length {l_int}");
    println!("  membership margin {margin:.4} (positive keeps it inside the body)");
    println!("mean payoff over {samples} draws: {mean:.4}");
    println!(
        "closed-form floor:               {:.4}",
        width_lower_bound_1d(n, k)
    );
    Ok(())
}
