//! Command-line front end: single recoveries, phase-transition grids,
//! threshold searches, width estimates, recovery certificates, and Haar
//! pyramid summaries. All numeric work lives in the library.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use tvmin::certify::{balanced_condition, null_space_condition};
use tvmin::ensemble::gaussian_matrix;
use tvmin::error::Error;
use tvmin::experiment::{export, find_m50, run_phase_transition, ExperimentConfig, ExportFormat};
use tvmin::haar::haar_decompose_1d;
use tvmin::solver::{tv_min_eq, tv_min_noise, SolverConfig};
use tvmin::width::{
    lower_bound_construction, width_lower_bound_1d, width_mc, width_upper_bound_1d,
    width_upper_bound_nd,
};
use tvmin::{sparse_gradient_signal, SeedSpec, Signal};

#[derive(Parser)]
#[command(name = "tvmin", about = "Total-variation recovery toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one seeded recovery instance and report the error.
    Recover {
        #[arg(long)]
        matrix_seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        /// Noise-ball radius; zero solves the equality program.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Run the phase-transition grid described by a JSON config.
    Phase {
        #[arg(long)]
        config: PathBuf,
    },
    /// Locate the 50%-success measurement threshold for one sparsity.
    M50 {
        #[arg(long)]
        config: PathBuf,
        /// Gradient sparsity; defaults to the first k_grid entry.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Monte Carlo mean-width estimate with closed-form brackets.
    Width {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive exact-recovery certificate for a seeded ensemble.
    Certify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        /// Strengthened threshold C in (0, 1); omit for the plain check.
        #[arg(long)]
        balance: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample the adversarial width witness and report its mean payoff.
    Lowerbound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decompose a whitespace-separated signal file into its pyramid.
    Haar {
        #[arg(long)]
        input: PathBuf,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidConfig(_)
        | Error::UnsupportedLength(_)
        | Error::SparsityTooLarge(_)
        | Error::OutOfRegime(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::CertificateScale(_) | Error::OracleScale(_) => 3,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn run(cmd: Command) -> tvmin::Result<()> {
    match cmd {
        Command::Recover {
            matrix_seed,
            n,
            m,
            k,
            epsilon,
        } => {
            let a = gaussian_matrix(m, n, SeedSpec::new(matrix_seed, 0))?;
            let x = sparse_gradient_signal(n, k, SeedSpec::new(matrix_seed, 1), -10.0, 10.0)?;
            let y = a.apply(x.as_slice());
            let cfg = SolverConfig::default();
            let rep = if epsilon > 0.0 {
                tv_min_noise(&a, &y, epsilon, &cfg)?
            } else {
                tv_min_eq(&a, &y, &cfg)?
            };
            let mut diff2 = 0.0;
            for (s, t) in rep.solution.as_slice().iter().zip(x.as_slice()) {
                diff2 += (s - t) * (s - t);
            }
            let rel = diff2.sqrt() / x.l2_norm();
            println!("n {n} m {m} k {k} seed {matrix_seed}");
            println!("objective {:.6e}", rep.objective);
            println!("rel_error {rel:.6e}");
            println!("iterations {}", rep.iterations);
            println!("converged {}", rep.converged);
            Ok(())
        }
        Command::Phase { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", config.display())))?;
            let cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let diagram = run_phase_transition(&cfg)?;
            for (&(m, k), cell) in &diagram.cells {
                println!(
                    "m {m:>5}  k {k:>4}  success {:>3}/{:<3}  mean_rel_error {:.3e}",
                    cell.success_count, cell.trials, cell.mean_rel_error
                );
            }
            if !cfg.output_path.is_empty() {
                let path = PathBuf::from(&cfg.output_path);
                let format = if cfg.output_path.ends_with(".csv") {
                    ExportFormat::Csv
                } else {
                    ExportFormat::Json
                };
                export(&diagram, format, &path)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::M50 { config, k } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", config.display())))?;
            let cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let k = match k {
                Some(k) => k,
                None => *cfg.k_grid.first().ok_or_else(|| {
                    Error::InvalidConfig("k_grid is empty and --k not given".into())
                })?,
            };
            let t = find_m50(cfg.n, k, cfg.d, &cfg)?;
            println!(
                "m50 {} success_rate {:.3} rate_ci [{:.3}, {:.3}]",
                t.m50, t.success_rate, t.rate_low, t.rate_high
            );
            Ok(())
        }
        Command::Width {
            n,
            k,
            d,
            samples,
            seed,
        } => {
            let est = width_mc(
                n,
                k,
                d,
                samples,
                SeedSpec::new(seed, 0),
                &SolverConfig::default(),
            )?;
            println!(
                "mean {:.6} std_error {:.6} samples {} rejected {}",
                est.mean, est.std_error, est.samples, est.rejected
            );
            if d == 1 {
                println!("lower_bound {:.6}", width_lower_bound_1d(n, k));
                if let Ok(up) = width_upper_bound_1d(n, k) {
                    println!("upper_bound {up:.6}");
                }
            } else if let Ok(up) = width_upper_bound_nd(n, k, d) {
                println!("upper_bound {up:.6}");
            }
            Ok(())
        }
        Command::Certify {
            n,
            m,
            k,
            balance,
            seed,
        } => {
            let a = gaussian_matrix(m, n, SeedSpec::new(seed, 0))?;
            let report = match balance {
                Some(c) => balanced_condition(&a, k, c)?,
                None => null_space_condition(&a, k)?,
            };
            println!("holds {}", report.holds);
            println!("worst_ratio {:.6e}", report.worst_ratio);
            println!("worst_support {:?}", report.worst_support.indices());
            println!("lp_solves {}", report.work);
            Ok(())
        }
        Command::Lowerbound {
            n,
            k,
            samples,
            seed,
        } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("need at least one sample".into()));
            }
            let rng_master = SeedSpec::new(seed, 0);
            let mut mean = 0.0;
            let mut shape = None;
            for i in 0..samples {
                let mut rng = rng_master.derive(i as u64).rng();
                let g: Vec<f64> = (0..n)
                    .map(|_| {
                        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
                    })
                    .collect();
                let c = lower_bound_construction(&g, n, k)?;
                mean += c.inner_product;
                shape.get_or_insert((c.l_int, c.h_blocks));
            }
            mean /= samples as f64;
            let (l_int, h_blocks) = shape.unwrap();
            println!("mean_payoff {mean:.6} samples {samples} l_int {l_int} h_blocks {h_blocks}");
            println!("closed_form_lower {:.6}", width_lower_bound_1d(n, k));
            Ok(())
        }
        Command::Haar { input } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", input.display())))?;
            let mut values = Vec::new();
            for tok in text.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::InvalidArgument(format!("bad value {tok:?}: {e}")))?,
                );
            }
            let x = Signal::from_vec(values)?;
            let p = haar_decompose_1d(&x)?;
            println!("n {} levels {}", p.n(), p.num_levels());
            for level in 1..=p.num_levels() {
                let d = p.detail(level);
                let l1: f64 = d.iter().map(|v| v.abs()).sum();
                println!("level {level} detail_l1 {l1:.6e} len {}", d.len());
            }
            println!("coarse {:.6e}", p.coarse());
            println!("energy {:.6e}", p.energy());
            Ok(())
        }
    }
}
