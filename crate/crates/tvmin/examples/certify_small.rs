//! Exhaustive recovery certificate on a small seeded ensemble: checks the
//! null-space condition over every candidate gradient support, then the
//! strengthened variant with a balance margin.

use tvmin::certify::{balanced_condition, null_space_condition};
use tvmin::ensemble::gaussian_matrix;
use tvmin::SeedSpec;

fn main() -> tvmin::Result<()> {
    let (n, m, k) = (10, 6, 1);
    let a = gaussian_matrix(m, n, SeedSpec::new(5, 0))?;

    let plain = null_space_condition(&a, k)?;
    println!("null-space condition (n {n}, m {m}, k {k})");
    println!("  holds        {}", plain.holds);
    println!("  worst ratio  {:.4}", plain.worst_ratio);
    println!("  worst support {:?}", plain.worst_support.indices());
    println!("  lp solves    {}", plain.work);

    let strong = balanced_condition(&a, k, 0.8)?;
    println!("balanced variant (C = 0.8)");
    println!("  holds        {}", strong.holds);
    println!("  worst ratio  {:.4}", strong.worst_ratio);
    Ok(())
}
