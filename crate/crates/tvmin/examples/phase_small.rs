//! A small phase-transition grid run end to end: build the config in code,
//! run every (measurements, sparsity) cell, print the success table, and
//! export it as CSV.

use tvmin::experiment::{export, find_m50, run_phase_transition, ExperimentConfig, ExportFormat};

fn main() -> tvmin::Result<()> {
    let cfg = ExperimentConfig {
        n: 32,
        d: 1,
        m_grid: vec![4, 8, 12, 16, 20, 24],
        k_grid: vec![1, 2, 4],
        trials_per_cell: 20,
        success_rel_tol: 1e-4,
        master_seed: 2024,
        solver: Default::default(),
        noise_epsilon: 0.0,
        output_path: String::new(),
        workers: 1,
    };

    let diagram = run_phase_transition(&cfg)?;
    println!(
        "success counts over {} trials per cell:",
        cfg.trials_per_cell
    );
    print!("{:>6}", "m\\k");
    for &k in &cfg.k_grid {
        print!("{k:>6}");
    }
    println!();
    for &m in &cfg.m_grid {
        print!("{m:>6}");
        for &k in &cfg.k_grid {
            print!("{:>6}", diagram.cells[&(m, k)].success_count);
        }
        println!();
    }

    for &k in &cfg.k_grid {
        let t = find_m50(cfg.n, k, cfg.d, &cfg)?;
        println!(
            "k {k}: half-success threshold m50 {} (rate {:.2}, ci [{:.2}, {:.2}])",
            t.m50, t.success_rate, t.rate_low, t.rate_high
        );
    }

    let out = std::env::temp_dir().join("phase_small.csv");
    export(&diagram, ExportFormat::Csv, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
