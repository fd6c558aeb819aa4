//! Monte Carlo estimate of the mean width of the scaled-variation body,
//! sandwiched between its closed-form lower and upper brackets.

use tvmin::solver::SolverConfig;
use tvmin::width::{width_lower_bound_1d, width_mc, width_upper_bound_1d};
use tvmin::SeedSpec;

fn main() -> tvmin::Result<()> {
    let cfg = SolverConfig::default();
    for &(n, k) in &[(64usize, 2usize), (256, 4)] {
        let est = width_mc(n, k, 1, 100, SeedSpec::new(31, 0), &cfg)?;
        let lo = width_lower_bound_1d(n, k);
        let hi = width_upper_bound_1d(n, k)?;
        println!(
            "n {n:>4} k {k}: lower {lo:>8.3}  mc {:>8.3} ± {:.3}  upper {hi:>9.3}",
            est.mean, est.std_error
        );
    }
    Ok(())
}
