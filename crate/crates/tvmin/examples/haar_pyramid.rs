//! Haar pyramid of a jumpy signal: per-level detail sums shrink along the
//! coarsening path, each level's detail sum is at most half the variation
//! of the level above, and energy is preserved exactly.

use tvmin::haar::{coarse_path_tv, haar_decompose_1d, haar_reconstruct_1d};
use tvmin::{sparse_gradient_signal, SeedSpec};

fn main() -> tvmin::Result<()> {
    let n = 64;
    let x = sparse_gradient_signal(n, 5, SeedSpec::new(23, 0), -10.0, 10.0)?;
    let pyramid = haar_decompose_1d(&x)?;

    println!("signal length {n}, {} levels", pyramid.num_levels());
    let tvs = coarse_path_tv(&x)?;
    for level in 1..=pyramid.num_levels() {
        let d = pyramid.detail(level);
        let l1: f64 = d.iter().map(|v| v.abs()).sum();
        println!(
            "level {level}: detail_l1 {l1:>10.4}  <= half of source tv {:>10.4}",
            tvs[level - 1]
        );
    }
    println!("coarse coefficient {:.4}", pyramid.coarse());

    let back = haar_reconstruct_1d(&pyramid);
    let mut diff2 = 0.0_f64;
    for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
        diff2 += (a - b) * (a - b);
    }
    println!("round-trip error {:.3e}", diff2.sqrt());
    println!(
        "energy: signal {:.6}  pyramid {:.6}",
        x.l2_norm().powi(2),
        pyramid.energy()
    );
    Ok(())
}
