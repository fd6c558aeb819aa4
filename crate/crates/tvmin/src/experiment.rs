//! Seeded phase-transition experiments: recovery trials over a
//! (measurement count × gradient sparsity) grid, a bisection search for
//! the 50%-success measurement threshold, and CSV/JSON persistence.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::gaussian_matrix;
use crate::error::{Error, Result};
use crate::seed::{derive_chain, SeedSpec};
use crate::signal::{sparse_gradient_image, sparse_gradient_signal};
use crate::solver::{tv_min_eq, tv_min_eq_nd, tv_min_noise, tv_min_noise_nd, SolverConfig};

fn default_success_rel_tol() -> f64 {
    1e-4
}

fn default_workers() -> usize {
    1
}

/// Grid experiment description; deserializes from a JSON document using
/// the same field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Signal length for d = 1, grid side for d = 2.
    pub n: usize,
    pub d: usize,
    pub m_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub trials_per_cell: usize,
    #[serde(default = "default_success_rel_tol")]
    pub success_rel_tol: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub noise_epsilon: f64,
    #[serde(default)]
    pub output_path: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let total = self.total_unknowns()?;
        if self.m_grid.is_empty() || self.k_grid.is_empty() {
            return Err(Error::InvalidConfig(
                "m_grid and k_grid must be non-empty".into(),
            ));
        }
        for &m in &self.m_grid {
            if m < 1 || m > total {
                return Err(Error::InvalidConfig(format!(
                    "measurement count {m} outside [1, {total}]"
                )));
            }
        }
        for &k in &self.k_grid {
            self.check_sparsity(k)?;
        }
        if self.trials_per_cell < 1 {
            return Err(Error::InvalidConfig(
                "need at least one trial per cell".into(),
            ));
        }
        if !(self.success_rel_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "success tolerance must be positive, got {}",
                self.success_rel_tol
            )));
        }
        if !(self.noise_epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise level must be non-negative, got {}",
                self.noise_epsilon
            )));
        }
        if self.workers < 1 {
            return Err(Error::InvalidConfig("need at least one worker".into()));
        }
        self.solver.validate()
    }

    /// n for d = 1, n² for d = 2.
    pub fn total_unknowns(&self) -> Result<usize> {
        match self.d {
            1 => {
                if self.n < 2 {
                    return Err(Error::InvalidConfig(format!("need n >= 2, got {}", self.n)));
                }
                Ok(self.n)
            }
            2 => {
                if self.n < 4 {
                    return Err(Error::InvalidConfig(format!(
                        "image trials need side >= 4, got {}",
                        self.n
                    )));
                }
                Ok(self.n * self.n)
            }
            d => Err(Error::InvalidConfig(format!(
                "trials support d in {{1, 2}}, got {d}"
            ))),
        }
    }

    fn check_sparsity(&self, k: usize) -> Result<()> {
        match self.d {
            1 => {
                if k > self.n - 1 {
                    return Err(Error::InvalidConfig(format!(
                        "k = {k} jumps do not fit a length-{} signal",
                        self.n
                    )));
                }
            }
            _ => {
                let max_k = 4 * (self.n - 2);
                if k != 0 && (k % 2 != 0 || k < 4 || k > max_k) {
                    return Err(Error::InvalidConfig(format!(
                        "image sparsity k = {k} must be 0 or an even value in [4, {max_k}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Aggregate outcome of one (m, k) cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub success_count: usize,
    pub trials: usize,
    pub mean_rel_error: f64,
    /// Mean wall-clock seconds per solve; the only field that varies
    /// across reruns of the same config.
    pub mean_solve_time: f64,
}

/// Success counts over the (m, k) grid, keyed by (m, k).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagram {
    pub cells: BTreeMap<(usize, usize), CellStats>,
    pub config_echo: ExperimentConfig,
}

/// One recovery trial, reproducible in isolation from its child seed.
#[derive(Clone, Copy, Debug)]
pub struct TrialRecord {
    pub m: usize,
    pub k: usize,
    pub trial_index: usize,
    pub child_seed: u64,
    pub rel_error: f64,
    pub converged: bool,
    pub solve_time: f64,
}

impl TrialRecord {
    pub fn success(&self, rel_tol: f64) -> bool {
        self.converged && self.rel_error <= rel_tol
    }
}

fn noise_vector(m: usize, epsilon: f64, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    loop {
        let e: Vec<f64> = (0..m)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let norm = crate::linalg::norm2(&e);
        if norm > 1e-12 {
            return e.iter().map(|v| v * epsilon / norm).collect();
        }
    }
}

/// Runs a single seeded trial of the (m, k) cell. The child seed depends
/// only on (master_seed, m, k, trial_index); matrix, signal, and noise
/// each draw from their own stream of that seed.
pub fn run_trial(
    cfg: &ExperimentConfig,
    m: usize,
    k: usize,
    trial_index: usize,
) -> Result<TrialRecord> {
    let child_seed = derive_chain(cfg.master_seed, &[m as u64, k as u64, trial_index as u64]);
    let total = cfg.total_unknowns()?;
    let a = gaussian_matrix(m, total, SeedSpec::new(child_seed, 0))?;
    let eps = cfg.noise_epsilon;

    let (rel_error, converged, solve_time) = match cfg.d {
        1 => {
            let x = sparse_gradient_signal(cfg.n, k, SeedSpec::new(child_seed, 1), -10.0, 10.0)?;
            let mut y = a.apply(x.as_slice());
            if eps > 0.0 {
                for (yi, ei) in y
                    .iter_mut()
                    .zip(noise_vector(m, eps, SeedSpec::new(child_seed, 2)))
                {
                    *yi += ei;
                }
            }
            let rep = if eps > 0.0 {
                tv_min_noise(&a, &y, eps, &cfg.solver)?
            } else {
                tv_min_eq(&a, &y, &cfg.solver)?
            };
            let mut diff2 = 0.0;
            for (s, t) in rep.solution.as_slice().iter().zip(x.as_slice()) {
                diff2 += (s - t) * (s - t);
            }
            (diff2.sqrt() / x.l2_norm(), rep.converged, rep.wall_time)
        }
        _ => {
            let x = sparse_gradient_image(cfg.n, k, SeedSpec::new(child_seed, 1), -10.0, 10.0)?;
            let mut y = a.apply(x.as_slice());
            if eps > 0.0 {
                for (yi, ei) in y
                    .iter_mut()
                    .zip(noise_vector(m, eps, SeedSpec::new(child_seed, 2)))
                {
                    *yi += ei;
                }
            }
            let rep = if eps > 0.0 {
                tv_min_noise_nd(&a, &y, cfg.n, 2, eps, &cfg.solver)?
            } else {
                tv_min_eq_nd(&a, &y, cfg.n, 2, &cfg.solver)?
            };
            let mut diff2 = 0.0;
            for (s, t) in rep.solution.as_slice().iter().zip(x.as_slice()) {
                diff2 += (s - t) * (s - t);
            }
            (diff2.sqrt() / x.l2_norm(), rep.converged, rep.wall_time)
        }
    };
    Ok(TrialRecord {
        m,
        k,
        trial_index,
        child_seed,
        rel_error,
        converged,
        solve_time,
    })
}

fn aggregate(
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
) -> BTreeMap<(usize, usize), CellStats> {
    let mut acc: BTreeMap<(usize, usize), (usize, usize, f64, f64)> = BTreeMap::new();
    for rec in records {
        let slot = acc.entry((rec.m, rec.k)).or_insert((0, 0, 0.0, 0.0));
        if rec.success(cfg.success_rel_tol) {
            slot.0 += 1;
        }
        slot.1 += 1;
        slot.2 += rec.rel_error;
        slot.3 += rec.solve_time;
    }
    acc.into_iter()
        .map(|(key, (succ, trials, err_sum, time_sum))| {
            (
                key,
                CellStats {
                    success_count: succ,
                    trials,
                    mean_rel_error: err_sum / trials as f64,
                    mean_solve_time: time_sum / trials as f64,
                },
            )
        })
        .collect()
}

/// Runs every (m, k, trial) cell of the grid. Trials execute on a worker
/// pool of the configured size; records are folded in trial order, so the
/// resulting diagram is identical for any worker count and any rerun,
/// apart from the wall-clock timing fields.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<PhaseDiagram> {
    cfg.validate()?;
    let mut tasks = Vec::with_capacity(cfg.m_grid.len() * cfg.k_grid.len() * cfg.trials_per_cell);
    for &m in &cfg.m_grid {
        for &k in &cfg.k_grid {
            for t in 0..cfg.trials_per_cell {
                tasks.push((m, k, t));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let records: Result<Vec<TrialRecord>> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(m, k, t)| run_trial(cfg, m, k, t))
            .collect()
    });
    Ok(PhaseDiagram {
        cells: aggregate(cfg, &records?),
        config_echo: cfg.clone(),
    })
}

/// 50%-threshold estimate: the smallest measurement count whose
/// empirical success rate reaches 1/2, with a two-sided 95% binomial
/// interval for the rate observed there.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdEstimate {
    pub m50: usize,
    pub success_rate: f64,
    pub rate_low: f64,
    pub rate_high: f64,
}

fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let nf = trials as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Smallest m whose success rate over `trials_per_cell` seeded trials
/// reaches 1/2, located by bisection on [1, n^d] under the monotonicity
/// assumption. Evaluated rates are checked for monotonicity: a violation
/// beyond two combined binomial standard errors triggers a linear scan
/// from below instead. Saturation (never reaching 1/2) is an error.
pub fn find_m50(n: usize, k: usize, d: usize, cfg: &ExperimentConfig) -> Result<ThresholdEstimate> {
    let probe = ExperimentConfig {
        n,
        d,
        m_grid: vec![1],
        k_grid: vec![k],
        ..cfg.clone()
    };
    let total = probe.total_unknowns()?;
    probe.check_sparsity(k)?;
    if probe.trials_per_cell < 1 {
        return Err(Error::InvalidConfig(
            "need at least one trial per cell".into(),
        ));
    }
    probe.solver.validate()?;

    let mut rates: BTreeMap<usize, usize> = BTreeMap::new();
    let eval = |m: usize, rates: &mut BTreeMap<usize, usize>| -> Result<f64> {
        if let Some(&succ) = rates.get(&m) {
            return Ok(succ as f64 / probe.trials_per_cell as f64);
        }
        let mut succ = 0;
        for t in 0..probe.trials_per_cell {
            if run_trial(&probe, m, k, t)?.success(probe.success_rel_tol) {
                succ += 1;
            }
        }
        rates.insert(m, succ);
        Ok(succ as f64 / probe.trials_per_cell as f64)
    };

    if eval(total, &mut rates)? < 0.5 {
        return Err(Error::Saturation(format!(
            "success rate stays below 1/2 for every m up to {total}"
        )));
    }
    let mut lo = 1usize;
    let mut hi = total;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if eval(mid, &mut rates)? >= 0.5 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut m50 = lo;

    // the bisection trusts monotone rates; rescan linearly if the
    // evaluated points contradict that beyond statistical noise
    let trials = probe.trials_per_cell as f64;
    let evaluated: Vec<(usize, usize)> = rates.iter().map(|(&m, &s)| (m, s)).collect();
    let mut monotone = true;
    for pair in evaluated.windows(2) {
        let (m1, s1) = pair[0];
        let (m2, s2) = pair[1];
        debug_assert!(m1 < m2);
        let p1 = s1 as f64 / trials;
        let p2 = s2 as f64 / trials;
        let se1 = (p1 * (1.0 - p1) / trials).sqrt();
        let se2 = (p2 * (1.0 - p2) / trials).sqrt();
        if p1 > p2 + 2.0 * (se1 + se2) {
            monotone = false;
            break;
        }
    }
    if !monotone {
        m50 = total;
        for m in 1..=total {
            if eval(m, &mut rates)? >= 0.5 {
                m50 = m;
                break;
            }
        }
    }

    let succ = rates[&m50];
    let (rate_low, rate_high) = wilson_interval(succ, probe.trials_per_cell);
    Ok(ThresholdEstimate {
        m50,
        success_rate: succ as f64 / trials,
        rate_low,
        rate_high,
    })
}

/// Formats with 17 significant digits: enough to reproduce the exact
/// binary value on import.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn to_csv(diagram: &PhaseDiagram) -> String {
    let mut s =
        String::from("m,k,trials,successes,success_rate,mean_rel_error,mean_solve_time_s\n");
    for (&(m, k), cell) in &diagram.cells {
        s.push_str(&format!(
            "{m},{k},{},{},{},{},{}\n",
            cell.trials,
            cell.success_count,
            fmt_f64(cell.success_count as f64 / cell.trials as f64),
            fmt_f64(cell.mean_rel_error),
            fmt_f64(cell.mean_solve_time),
        ));
    }
    s
}

fn to_json(diagram: &PhaseDiagram) -> String {
    let cfg = &diagram.config_echo;
    let grid = |xs: &[usize]| {
        let body: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        format!("[{}]", body.join(", "))
    };
    let mut s = String::from("{\n  \"config\": {\n");
    s.push_str(&format!("    \"n\": {},\n", cfg.n));
    s.push_str(&format!("    \"d\": {},\n", cfg.d));
    s.push_str(&format!("    \"m_grid\": {},\n", grid(&cfg.m_grid)));
    s.push_str(&format!("    \"k_grid\": {},\n", grid(&cfg.k_grid)));
    s.push_str(&format!(
        "    \"trials_per_cell\": {},\n",
        cfg.trials_per_cell
    ));
    s.push_str(&format!(
        "    \"success_rel_tol\": {},\n",
        fmt_f64(cfg.success_rel_tol)
    ));
    s.push_str(&format!("    \"master_seed\": {},\n", cfg.master_seed));
    s.push_str("    \"solver\": {\n");
    s.push_str(&format!("      \"max_iters\": {},\n", cfg.solver.max_iters));
    s.push_str(&format!(
        "      \"primal_tol\": {},\n",
        fmt_f64(cfg.solver.primal_tol)
    ));
    s.push_str(&format!(
        "      \"dual_tol\": {},\n",
        fmt_f64(cfg.solver.dual_tol)
    ));
    s.push_str(&format!(
        "      \"penalty\": {},\n",
        fmt_f64(cfg.solver.penalty)
    ));
    s.push_str(&format!(
        "      \"over_relax\": {}\n",
        fmt_f64(cfg.solver.over_relax)
    ));
    s.push_str("    },\n");
    s.push_str(&format!(
        "    \"noise_epsilon\": {},\n",
        fmt_f64(cfg.noise_epsilon)
    ));
    s.push_str(&format!(
        "    \"output_path\": \"{}\",\n",
        json_escape(&cfg.output_path)
    ));
    s.push_str(&format!("    \"workers\": {}\n", cfg.workers));
    s.push_str("  },\n  \"cells\": [\n");
    let rows: Vec<String> = diagram
        .cells
        .iter()
        .map(|(&(m, k), cell)| {
            format!(
                "    {{\"m\": {m}, \"k\": {k}, \"success_count\": {}, \"trials\": {}, \"mean_rel_error\": {}, \"mean_solve_time\": {}}}",
                cell.success_count,
                cell.trials,
                fmt_f64(cell.mean_rel_error),
                fmt_f64(cell.mean_solve_time),
            )
        })
        .collect();
    s.push_str(&rows.join(",\n"));
    if !rows.is_empty() {
        s.push('\n');
    }
    s.push_str("  ]\n}\n");
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

fn io_with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Writes the diagram to `path`. CSV columns are
/// `m,k,trials,successes,success_rate,mean_rel_error,mean_solve_time_s`;
/// JSON mirrors the cell map plus the config echo. Both end with a
/// trailing newline and serialize floats with 17 significant digits.
pub fn export(diagram: &PhaseDiagram, format: ExportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ExportFormat::Csv => to_csv(diagram),
        ExportFormat::Json => to_json(diagram),
    };
    std::fs::write(path, body).map_err(|e| io_with_path(path, e))
}

#[derive(Deserialize)]
struct CellRow {
    m: usize,
    k: usize,
    success_count: usize,
    trials: usize,
    mean_rel_error: f64,
    mean_solve_time: f64,
}

#[derive(Deserialize)]
struct DiagramFile {
    config: ExperimentConfig,
    cells: Vec<CellRow>,
}

/// Reads a diagram previously written by `export` with the JSON format.
pub fn import_json(path: &Path) -> Result<PhaseDiagram> {
    let text = std::fs::read_to_string(path).map_err(|e| io_with_path(path, e))?;
    let file: DiagramFile = serde_json::from_str(&text)?;
    let mut cells = BTreeMap::new();
    for row in file.cells {
        cells.insert(
            (row.m, row.k),
            CellStats {
                success_count: row.success_count,
                trials: row.trials,
                mean_rel_error: row.mean_rel_error,
                mean_solve_time: row.mean_solve_time,
            },
        );
    }
    Ok(PhaseDiagram {
        cells,
        config_echo: file.config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(
        n: usize,
        m_grid: Vec<usize>,
        k_grid: Vec<usize>,
        trials: usize,
    ) -> ExperimentConfig {
        ExperimentConfig {
            n,
            d: 1,
            m_grid,
            k_grid,
            trials_per_cell: trials,
            success_rel_tol: 1e-4,
            master_seed: 91,
            solver: SolverConfig::default(),
            noise_epsilon: 0.0,
            output_path: String::new(),
            workers: 1,
        }
    }

    fn zero_times(d: &PhaseDiagram) -> PhaseDiagram {
        let mut out = d.clone();
        for cell in out.cells.values_mut() {
            cell.mean_solve_time = 0.0;
        }
        out
    }

    #[test]
    fn config_validation_guards() {
        let good = small_config(16, vec![8, 16], vec![0, 1], 2);
        assert!(good.validate().is_ok());
        let mut c = good.clone();
        c.m_grid.clear();
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = good.clone();
        c.m_grid = vec![17];
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.m_grid = vec![0];
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.k_grid = vec![16];
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.d = 3;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.trials_per_cell = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.workers = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.success_rel_tol = 0.0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.noise_epsilon = -0.1;
        assert!(c.validate().is_err());
        // d = 2 sparsity must be 0 or even in the rectangle-perimeter range
        let mut c = good.clone();
        c.d = 2;
        c.n = 8;
        c.m_grid = vec![32];
        c.k_grid = vec![6];
        assert!(c.validate().is_ok());
        c.k_grid = vec![5];
        assert!(c.validate().is_err());
        c.k_grid = vec![2];
        assert!(c.validate().is_err());
    }

    #[test]
    fn square_system_and_constant_signals_always_recover() {
        let cfg = small_config(12, vec![1, 12], vec![0], 4);
        let diagram = run_phase_transition(&cfg).unwrap();
        for (&(_, _), cell) in &diagram.cells {
            assert_eq!(
                cell.success_count, cell.trials,
                "constant cell must be exact"
            );
        }
        let cfg = small_config(12, vec![12], vec![2], 4);
        let diagram = run_phase_transition(&cfg).unwrap();
        let cell = diagram.cells[&(12, 2)];
        assert_eq!(cell.success_count, 4, "square system inverts exactly");
        assert!(cell.mean_rel_error < 1e-6);
    }

    #[test]
    fn diagram_is_deterministic_and_worker_independent() {
        let mut cfg = small_config(16, vec![8, 12], vec![1], 6);
        let one = run_phase_transition(&cfg).unwrap();
        let rerun = run_phase_transition(&cfg).unwrap();
        assert_eq!(zero_times(&one), zero_times(&rerun));
        cfg.workers = 4;
        let four = run_phase_transition(&cfg).unwrap();
        let mut four_echo_fixed = zero_times(&four);
        four_echo_fixed.config_echo.workers = 1;
        assert_eq!(zero_times(&one), four_echo_fixed);
        // cells rebuilt from isolated trial records agree
        let mut records = Vec::new();
        for &m in &cfg.m_grid {
            for t in 0..cfg.trials_per_cell {
                records.push(run_trial(&cfg, m, 1, t).unwrap());
            }
        }
        let rebuilt = aggregate(&cfg, &records);
        for (key, cell) in &one.cells {
            let b = rebuilt[key];
            assert_eq!(cell.success_count, b.success_count);
            assert_eq!(cell.mean_rel_error.to_bits(), b.mean_rel_error.to_bits());
        }
    }

    #[test]
    fn trial_records_reproduce_from_child_seed() {
        let cfg = small_config(16, vec![10], vec![1], 4);
        let rec = run_trial(&cfg, 10, 1, 3).unwrap();
        assert_eq!(rec.child_seed, derive_chain(91, &[10, 1, 3]));
        let again = run_trial(&cfg, 10, 1, 3).unwrap();
        assert_eq!(rec.rel_error.to_bits(), again.rel_error.to_bits());
        assert_eq!(rec.converged, again.converged);
    }

    #[test]
    fn noisy_trials_use_the_ball_constrained_program() {
        let mut cfg = small_config(16, vec![12], vec![1], 4);
        cfg.noise_epsilon = 0.05;
        cfg.success_rel_tol = 0.5;
        let diagram = run_phase_transition(&cfg).unwrap();
        let cell = diagram.cells[&(12, 1)];
        assert_eq!(cell.success_count, 4);
        // noise keeps the recovery away from exactness
        assert!(
            cell.mean_rel_error > 1e-6,
            "rel error {}",
            cell.mean_rel_error
        );
    }

    #[test]
    fn threshold_search_is_deterministic_and_handles_edges() {
        let mut cfg = small_config(16, vec![1], vec![0], 5);
        let t = find_m50(16, 0, 1, &cfg).unwrap();
        assert_eq!(t.m50, 1, "constant signals recover from one measurement");
        assert_eq!(t.success_rate, 1.0);
        assert!(t.rate_low < 1.0 && t.rate_high == 1.0);

        let a = find_m50(16, 2, 1, &cfg).unwrap();
        let b = find_m50(16, 2, 1, &cfg).unwrap();
        assert_eq!(a.m50, b.m50);
        assert!(a.m50 >= 2 && a.m50 <= 16, "threshold {}", a.m50);

        // an unreachable tolerance saturates the search
        cfg.success_rel_tol = 1e-300;
        assert!(matches!(
            find_m50(16, 2, 1, &cfg),
            Err(Error::Saturation(_))
        ));
    }

    #[test]
    fn rates_are_monotone_across_a_small_grid() {
        let cfg = small_config(24, vec![6, 12, 18], vec![1, 2], 12);
        let diagram = run_phase_transition(&cfg).unwrap();
        let rate = |m: usize, k: usize| {
            let c = diagram.cells[&(m, k)];
            let p = c.success_count as f64 / c.trials as f64;
            (p, (p * (1.0 - p) / c.trials as f64).sqrt())
        };
        for &k in &[1usize, 2] {
            for w in [6usize, 12].windows(2) {
                let (p1, s1) = rate(w[0], k);
                let (p2, s2) = rate(w[1], k);
                assert!(
                    p1 <= p2 + 2.0 * (s1 + s2),
                    "success must not drop with more rows"
                );
            }
        }
        for &m in &[6usize, 12, 18] {
            let (p1, s1) = rate(m, 1);
            let (p2, s2) = rate(m, 2);
            assert!(
                p2 <= p1 + 2.0 * (s1 + s2),
                "success must not rise with more jumps"
            );
        }
    }

    #[test]
    fn csv_export_shape_and_golden_bytes() {
        let cfg = small_config(8, vec![4, 8], vec![1], 4);
        let mut cells = BTreeMap::new();
        cells.insert(
            (4usize, 1usize),
            CellStats {
                success_count: 2,
                trials: 4,
                mean_rel_error: 0.125,
                mean_solve_time: 0.002,
            },
        );
        cells.insert(
            (8, 1),
            CellStats {
                success_count: 4,
                trials: 4,
                mean_rel_error: 1e-9,
                mean_solve_time: 0.5,
            },
        );
        let diagram = PhaseDiagram {
            cells,
            config_echo: cfg.clone(),
        };
        let csv = to_csv(&diagram);
        let expect = "m,k,trials,successes,success_rate,mean_rel_error,mean_solve_time_s\n\
                      4,1,4,2,5.0000000000000000e-1,1.2500000000000000e-1,2.0000000000000000e-3\n\
                      8,1,4,4,1.0000000000000000e0,1.0000000000000001e-9,5.0000000000000000e-1\n";
        assert_eq!(csv, expect);
        assert_eq!(csv.lines().count(), diagram.cells.len() + 1);
        let empty = PhaseDiagram {
            cells: BTreeMap::new(),
            config_echo: cfg,
        };
        assert_eq!(
            to_csv(&empty),
            "m,k,trials,successes,success_rate,mean_rel_error,mean_solve_time_s\n"
        );
    }

    #[test]
    fn json_round_trip_preserves_the_diagram() {
        let cfg = ExperimentConfig {
            output_path: "out \"dir\"/phase.json".into(),
            ..small_config(8, vec![4], vec![1], 3)
        };
        let mut cells = BTreeMap::new();
        cells.insert(
            (4usize, 1usize),
            CellStats {
                success_count: 1,
                trials: 3,
                mean_rel_error: 0.1 + 0.2, // deliberately non-representable
                mean_solve_time: 1.5e-3,
            },
        );
        let diagram = PhaseDiagram {
            cells,
            config_echo: cfg,
        };
        let path =
            std::env::temp_dir().join(format!("tvmin_roundtrip_{}.json", std::process::id()));
        export(&diagram, ExportFormat::Json, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        let back = import_json(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back, diagram);
    }

    #[test]
    fn image_cells_run_the_grid_program() {
        let cfg = ExperimentConfig {
            d: 2,
            ..small_config(4, vec![16], vec![4], 2)
        };
        let diagram = run_phase_transition(&cfg).unwrap();
        let cell = diagram.cells[&(16, 4)];
        assert_eq!(cell.trials, 2);
        assert_eq!(cell.success_count, 2, "square grid system inverts exactly");
    }
}
