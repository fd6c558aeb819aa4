//! Noisy recovery: solve the ball-constrained program at several noise
//! levels and compare the observed error against the robustness bound
//! built from the measured null-space constants.

use rand_distr::Distribution;
use tvmin::certify::almost_euclidean_beta;
use tvmin::ensemble::{gaussian_matrix, min_singular_value, null_space_basis};
use tvmin::solver::{stability_bound, tv_min_noise, SolverConfig, StabilityInputs};
use tvmin::{sparse_gradient_signal, SeedSpec};

fn main() -> tvmin::Result<()> {
    let (n, m, k) = (64, 40, 3);
    let a = gaussian_matrix(m, n, SeedSpec::new(17, 0))?;
    let x = sparse_gradient_signal(n, k, SeedSpec::new(17, 1), -10.0, 10.0)?;
    let clean = a.apply(x.as_slice());

    let basis = null_space_basis(&a)?;
    let beta = almost_euclidean_beta(&basis, 8, SeedSpec::new(17, 3))?;
    let sigma = min_singular_value(&a)?;
    println!("measured beta {beta:.4}, sigma_min {sigma:.4}");

    let cfg = SolverConfig::default();
    for &epsilon in &[0.05, 0.1, 0.2] {
        let mut rng = SeedSpec::new(17, 2).derive((epsilon * 1000.0) as u64).rng();
        let mut e: Vec<f64> = (0..m)
            .map(|_| rand_distr::StandardNormal.sample(&mut rng))
            .collect();
        let norm: f64 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut e {
            *v *= epsilon / norm;
        }
        let y: Vec<f64> = clean.iter().zip(&e).map(|(c, e)| c + e).collect();

        let report = tv_min_noise(&a, &y, epsilon, &cfg)?;
        let mut diff2 = 0.0;
        for (s, t) in report.solution.as_slice().iter().zip(x.as_slice()) {
            diff2 += (s - t) * (s - t);
        }
        let err = diff2.sqrt();

        // δ = k/n keeps exactly the true jumps, so only the noise term is left.
        let inputs = StabilityInputs {
            c_balance: 0.9,
            beta,
            delta: k as f64 / n as f64,
            epsilon,
        };
        let bound = stability_bound(&x, &inputs, m, sigma)?;
        println!(
            "epsilon {epsilon:.2}  error {err:.4e}  bound {bound:.4e}  within {}",
            err <= bound
        );
    }
    Ok(())
}
