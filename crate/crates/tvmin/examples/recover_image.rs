//! Recovery of a piecewise-constant image: the grid program with the
//! concatenated per-axis difference operator.

use tvmin::ensemble::gaussian_matrix;
use tvmin::solver::{tv_min_eq_nd, SolverConfig};
use tvmin::{sparse_gradient_image, SeedSpec};

fn main() -> tvmin::Result<()> {
    let (side, k) = (16, 12);
    let total = side * side;
    let m = total / 2;

    let a = gaussian_matrix(m, total, SeedSpec::new(9, 0))?;
    let x = sparse_gradient_image(side, k, SeedSpec::new(9, 1), -10.0, 10.0)?;
    let y = a.apply(x.as_slice());

    let report = tv_min_eq_nd(&a, &y, side, 2, &SolverConfig::default())?;

    let mut diff2 = 0.0;
    for (s, t) in report.solution.as_slice().iter().zip(x.as_slice()) {
        diff2 += (s - t) * (s - t);
    }
    let rel = diff2.sqrt() / x.l2_norm();

    println!("recovered {side}x{side} image ({k} boundary jumps) from {m} measurements");
    println!("  relative error  {rel:.3e}");
    println!("  iterations      {}", report.iterations);
    println!("  converged       {}", report.converged);
    Ok(())
}
