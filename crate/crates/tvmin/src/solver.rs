//! TV-minimization programs.
//!
//! All programs minimize the total variation `tv_norm(diff(x))` subject to
//! a measurement constraint: `Ax = y` exactly, or `‖Ax − y‖₂ ≤ ε`. The
//! workhorse is an operator-splitting iteration with two auxiliary
//! variables, `u` for the gradient and `v` for the measurement residual:
//!
//!   x ← argmin ‖Dx − (u − p)‖² + ‖Ax − y − (v − q)‖²
//!   u ← soft-threshold of the relaxed gradient plus its dual
//!   v ← projection of the relaxed residual plus its dual onto the ε-ball
//!   p, q ← dual ascent
//!
//! The x-update system (DᵀD + AᵀA) does not depend on the penalty, so one
//! Cholesky factorization per instance survives every penalty rescaling.
//! A dense simplex oracle provides exact reference optima at small sizes.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::ensemble::MeasurementEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, mat_t_vec, mat_vec, norm2};
use crate::lp::{solve_eq_min, LpError};
use crate::operators::{ksum_largest, DiffOp};
use crate::signal::{MultiSignal, Signal};

/// Iteration controls for the splitting solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative tolerance on the primal splitting residuals.
    pub primal_tol: f64,
    /// Relative tolerance on the dual residual.
    pub dual_tol: f64,
    /// Initial coupling penalty; self-tuned by residual balancing.
    pub penalty: f64,
    /// Over-relaxation factor in [1, 1.9].
    pub over_relax: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            primal_tol: 1e-8,
            dual_tol: 1e-8,
            penalty: 1.0,
            over_relax: 1.6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.primal_tol > 0.0) || !(self.dual_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.penalty > 0.0) || !self.penalty.is_finite() {
            return Err(Error::InvalidConfig(
                "penalty must be positive and finite".into(),
            ));
        }
        if !(1.0..=1.9).contains(&self.over_relax) {
            return Err(Error::InvalidConfig(
                "over_relax must lie in [1, 1.9]".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one solve. `converged = false` is an honest answer, not an
/// error: the fields still describe the final iterate.
#[derive(Clone, Debug)]
pub struct SolveReport<S> {
    pub solution: S,
    /// TV of the solution.
    pub objective: f64,
    /// ‖A·solution − y‖₂ at the final iterate.
    pub primal_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds spent inside the iteration.
    pub wall_time: f64,
}

struct AdmmOut {
    x: Vec<f64>,
    objective: f64,
    primal_residual: f64,
    iterations: usize,
    converged: bool,
}

const FLOOR_TOL: f64 = 1e-10;
const BALANCE_PERIOD: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
const MAX_BALANCE_CHANGES: usize = 100;

fn soft(w: f64, t: f64) -> f64 {
    if w > t {
        w - t
    } else if w < -t {
        w + t
    } else {
        0.0
    }
}

/// Core splitting iteration on flat storage. `epsilon = 0` is the equality
/// program: the residual split variable stays pinned at zero and its dual
/// performs plain ascent on `Ax = y`.
fn admm_tv(
    a: &Array2<f64>,
    y: &[f64],
    diff: &DiffOp,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<AdmmOut> {
    cfg.validate()?;
    let m = a.nrows();
    let n = diff.domain();
    let r = diff.range();
    if a.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "measurement matrix has {} columns but the signal has {} entries",
            a.ncols(),
            n
        )));
    }
    if y.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} measurements given for a matrix with {} rows",
            y.len(),
            m
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("measurements must be finite".into()));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(
            "epsilon must be finite and nonnegative".into(),
        ));
    }

    // Penalty-independent normal matrix; factored exactly once.
    let mut gram = Array2::<f64>::zeros((n, n));
    crate::linalg::add_gram_at_a(a, &mut gram);
    diff.add_gram(&mut gram);
    let chol = cholesky(&gram).ok_or_else(|| {
        Error::DegenerateEnsemble(
            "normal matrix is singular: the measurement operator vanishes on constants".into(),
        )
    })?;
    drop(gram);

    let y_norm = norm2(y);
    let fit_tol = if epsilon > 0.0 {
        epsilon * (1.0 + cfg.primal_tol)
    } else {
        (cfg.primal_tol * y_norm).max(FLOOR_TOL)
    };
    let alpha = cfg.over_relax;
    let mut rho = cfg.penalty;
    let mut balance_changes = 0usize;

    let mut x = vec![0.0; n];
    let mut u = vec![0.0; r];
    let mut v = vec![0.0; m];
    let mut p = vec![0.0; r];
    let mut q = vec![0.0; m];
    let mut dx = vec![0.0; r];
    let mut ax = vec![0.0; m];
    let mut dxh = vec![0.0; r];
    let mut arh = vec![0.0; m];
    let mut du = vec![0.0; r];
    let mut dv = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut tn = vec![0.0; n];
    let mut tr = vec![0.0; r];
    let mut tm = vec![0.0; m];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        // x-update: (DᵀD + AᵀA) x = Dᵀ(u − p) + Aᵀ(y + v − q).
        for i in 0..r {
            tr[i] = u[i] - p[i];
        }
        diff.apply_transpose(&tr, &mut rhs);
        for i in 0..m {
            tm[i] = y[i] + v[i] - q[i];
        }
        mat_t_vec(a, &tm, &mut tn);
        for i in 0..n {
            rhs[i] += tn[i];
        }
        chol.solve_in_place(&mut rhs);
        x.copy_from_slice(&rhs);

        diff.apply(&x, &mut dx);
        mat_vec(a, &x, &mut ax);

        // Over-relaxed splitting points.
        for i in 0..r {
            dxh[i] = alpha * dx[i] + (1.0 - alpha) * u[i];
        }
        for i in 0..m {
            arh[i] = alpha * (ax[i] - y[i]) + (1.0 - alpha) * v[i];
        }

        // u-update (shrinkage) and v-update (ball projection), recording
        // the changes for the dual residual.
        let thr = 1.0 / rho;
        for i in 0..r {
            let next = soft(dxh[i] + p[i], thr);
            du[i] = next - u[i];
            u[i] = next;
        }
        if epsilon > 0.0 {
            for i in 0..m {
                tm[i] = arh[i] + q[i];
            }
            let w = norm2(&tm);
            let scale = if w > epsilon { epsilon / w } else { 1.0 };
            for i in 0..m {
                let next = scale * tm[i];
                dv[i] = next - v[i];
                v[i] = next;
            }
        } else {
            dv.iter_mut().for_each(|d| *d = 0.0);
        }

        for i in 0..r {
            p[i] += dxh[i] - u[i];
        }
        for i in 0..m {
            q[i] += arh[i] - v[i];
        }

        // True (non-relaxed) residuals.
        let mut split_sq = 0.0;
        let mut dx_sq = 0.0;
        let mut u_sq = 0.0;
        for i in 0..r {
            let e = dx[i] - u[i];
            split_sq += e * e;
            dx_sq += dx[i] * dx[i];
            u_sq += u[i] * u[i];
        }
        let split = split_sq.sqrt();
        let mut fit_sq = 0.0;
        for i in 0..m {
            let e = ax[i] - y[i] - v[i];
            fit_sq += e * e;
        }
        let fit = fit_sq.sqrt();
        let split_tol = (cfg.primal_tol * dx_sq.max(u_sq).sqrt()).max(FLOOR_TOL);

        // Dual residual ρ‖Dᵀ Δu + Aᵀ Δv‖ against ρ‖Dᵀp + Aᵀq‖.
        diff.apply_transpose(&du, &mut tn);
        mat_t_vec(a, &dv, &mut rhs);
        for i in 0..n {
            tn[i] += rhs[i];
        }
        let dual = rho * norm2(&tn);
        diff.apply_transpose(&p, &mut tn);
        mat_t_vec(a, &q, &mut rhs);
        for i in 0..n {
            tn[i] += rhs[i];
        }
        let dual_tol = (cfg.dual_tol * rho * norm2(&tn)).max(FLOOR_TOL);

        if fit <= fit_tol && split <= split_tol && dual <= dual_tol {
            converged = true;
            break;
        }

        if iterations % BALANCE_PERIOD == 0 && balance_changes < MAX_BALANCE_CHANGES {
            let primal = (split_sq + fit_sq).sqrt();
            if primal > BALANCE_RATIO * dual {
                rho *= 2.0;
                p.iter_mut().for_each(|z| *z *= 0.5);
                q.iter_mut().for_each(|z| *z *= 0.5);
                balance_changes += 1;
            } else if dual > BALANCE_RATIO * primal {
                rho *= 0.5;
                p.iter_mut().for_each(|z| *z *= 2.0);
                q.iter_mut().for_each(|z| *z *= 2.0);
                balance_changes += 1;
            }
        }
    }

    let objective = dx.iter().map(|v| v.abs()).sum();
    let mut res_sq = 0.0;
    for i in 0..m {
        let e = ax[i] - y[i];
        res_sq += e * e;
    }
    Ok(AdmmOut {
        x,
        objective,
        primal_residual: res_sq.sqrt(),
        iterations,
        converged,
    })
}

fn report_1d(out: AdmmOut, started: Instant) -> SolveReport<Signal> {
    SolveReport {
        solution: Signal::from_vec(out.x).expect("solver output has the input length"),
        objective: out.objective,
        primal_residual: out.primal_residual,
        iterations: out.iterations,
        converged: out.converged,
        wall_time: started.elapsed().as_secs_f64(),
    }
}

/// min tv(x)  s.t.  Ax = y.
pub fn tv_min_eq(
    a: &MeasurementEnsemble,
    y: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport<Signal>> {
    let started = Instant::now();
    let diff = DiffOp::OneD { n: a.n_cols() };
    let out = admm_tv(a.matrix(), y, &diff, 0.0, cfg)?;
    Ok(report_1d(out, started))
}

/// min tv(x)  s.t.  ‖Ax − y‖₂ ≤ ε. At ε = 0 this is the equality program.
pub fn tv_min_noise(
    a: &MeasurementEnsemble,
    y: &[f64],
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport<Signal>> {
    let started = Instant::now();
    let diff = DiffOp::OneD { n: a.n_cols() };
    let out = admm_tv(a.matrix(), y, &diff, epsilon, cfg)?;
    Ok(report_1d(out, started))
}

fn report_nd(out: AdmmOut, side: usize, dims: usize, started: Instant) -> SolveReport<MultiSignal> {
    SolveReport {
        solution: MultiSignal::from_flat(side, dims, out.x)
            .expect("solver output has the input shape"),
        objective: out.objective,
        primal_residual: out.primal_residual,
        iterations: out.iterations,
        converged: out.converged,
        wall_time: started.elapsed().as_secs_f64(),
    }
}

/// d-dimensional equality program on a cubic signal of the given shape.
pub fn tv_min_eq_nd(
    a: &MeasurementEnsemble,
    y: &[f64],
    side: usize,
    dims: usize,
    cfg: &SolverConfig,
) -> Result<SolveReport<MultiSignal>> {
    let started = Instant::now();
    let diff = shaped_diff(a, side, dims)?;
    let out = admm_tv(a.matrix(), y, &diff, 0.0, cfg)?;
    Ok(report_nd(out, side, dims, started))
}

/// d-dimensional noise-constrained program.
pub fn tv_min_noise_nd(
    a: &MeasurementEnsemble,
    y: &[f64],
    side: usize,
    dims: usize,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport<MultiSignal>> {
    let started = Instant::now();
    let diff = shaped_diff(a, side, dims)?;
    let out = admm_tv(a.matrix(), y, &diff, epsilon, cfg)?;
    Ok(report_nd(out, side, dims, started))
}

fn shaped_diff(a: &MeasurementEnsemble, side: usize, dims: usize) -> Result<DiffOp> {
    if side < 2 || dims < 1 {
        return Err(Error::InvalidArgument(
            "need side >= 2 and dims >= 1".into(),
        ));
    }
    let cells = side
        .checked_pow(u32::try_from(dims).map_err(|_| {
            Error::InvalidArgument("dimension count does not fit the shape arithmetic".into())
        })?)
        .ok_or_else(|| Error::InvalidArgument("side^dims overflows".into()))?;
    if a.n_cols() != cells {
        return Err(Error::InvalidArgument(format!(
            "matrix has {} columns but a side-{side} {dims}-D signal has {cells} cells",
            a.n_cols()
        )));
    }
    Ok(if dims == 1 {
        DiffOp::OneD { n: side }
    } else {
        DiffOp::MultiD { side, dims }
    })
}

/// Maximum signal length accepted by the exact simplex oracle.
pub const ORACLE_MAX_N: usize = 64;

/// Exact minimizer of the equality program via a dense simplex method,
/// for cross-checking the iterative solver at small sizes.
///
/// Standard-form reformulation: x = x⁺ − x⁻, gradient split into u⁺ − u⁻,
/// objective Σ(u⁺ + u⁻). Bland's rule guarantees termination; with
/// degenerate optima any optimal vertex may be returned.
pub fn lp_oracle_tv_min(a: &MeasurementEnsemble, y: &[f64]) -> Result<Signal> {
    let n = a.n_cols();
    let m = a.m_rows();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleScale(format!(
            "exact oracle accepts at most {ORACLE_MAX_N} unknowns, got {n}"
        )));
    }
    if y.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} measurements given for a matrix with {} rows",
            y.len(),
            m
        )));
    }
    let r = n - 1;
    let cols = 2 * n + 2 * r;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m + r);
    let mut rhs: Vec<f64> = Vec::with_capacity(m + r);
    for (i, row) in a.matrix().rows().into_iter().enumerate() {
        let mut lp_row = vec![0.0; cols];
        for (j, &v) in row.iter().enumerate() {
            lp_row[j] = v;
            lp_row[n + j] = -v;
        }
        rows.push(lp_row);
        rhs.push(y[i]);
    }
    for i in 0..r {
        let mut lp_row = vec![0.0; cols];
        lp_row[i + 1] = 1.0;
        lp_row[i] = -1.0;
        lp_row[n + i + 1] = -1.0;
        lp_row[n + i] = 1.0;
        lp_row[2 * n + i] = -1.0;
        lp_row[2 * n + r + i] = 1.0;
        rows.push(lp_row);
        rhs.push(0.0);
    }
    let mut c = vec![0.0; cols];
    for ci in c.iter_mut().skip(2 * n) {
        *ci = 1.0;
    }
    let sol = solve_eq_min(&rows, &rhs, &c).map_err(|e| match e {
        LpError::Infeasible => {
            Error::Infeasible("measurements are not in the range of the matrix".into())
        }
        other => Error::InvalidArgument(format!("simplex failed unexpectedly: {other:?}")),
    })?;
    let x: Vec<f64> = (0..n).map(|j| sol.x[j] - sol.x[n + j]).collect();
    Signal::from_vec(x)
}

/// Constants of the robustness guarantee.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StabilityInputs {
    /// Balance constant C in [0, 1).
    pub c_balance: f64,
    /// Almost-Euclidean constant β > 0 of the null space.
    pub beta: f64,
    /// Gradient-sparsity fraction δ in [0, 1); the best ⌊δN⌋ gradient
    /// entries are treated as the compressible part.
    pub delta: f64,
    /// Noise level ε ≥ 0.
    pub epsilon: f64,
}

impl StabilityInputs {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.c_balance) {
            return Err(Error::InvalidArgument(
                "c_balance must lie in [0, 1)".into(),
            ));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(
                "beta must be positive and finite".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidArgument("delta must lie in [0, 1)".into()));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(
                "epsilon must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Reconstruction-error bound for the noise-constrained program:
///
///   2(1+C)/(β(1−C)) · (tv(x) − best ⌊δN⌋-term gradient sum)/√N
///   + (2 + 4(1+C)/(β(1−C))) · ε/σ_min.
///
/// `m` is the measurement count the bound is quoted for; `sigma_min` is the
/// smallest singular value of the measurement matrix.
pub fn stability_bound(
    x: &Signal,
    inputs: &StabilityInputs,
    m: usize,
    sigma_min: f64,
) -> Result<f64> {
    inputs.validate()?;
    if !(sigma_min > 0.0) || !sigma_min.is_finite() {
        return Err(Error::InvalidArgument(
            "sigma_min must be positive and finite".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidArgument(
            "bound needs at least one measurement".into(),
        ));
    }
    let n = x.len() as f64;
    let keep = (inputs.delta * n).floor() as usize;
    let grad = crate::operators::diff_1d(x);
    let tv = crate::operators::tv_norm(&grad);
    let head = ksum_largest(&grad, keep.min(grad.len()))?;
    let factor = 2.0 * (1.0 + inputs.c_balance) / (inputs.beta * (1.0 - inputs.c_balance));
    Ok(factor * (tv - head) / n.sqrt() + (2.0 + 2.0 * factor) * inputs.epsilon / sigma_min)
}

/// Same bound with σ_min replaced by its Gaussian-ensemble scale √N − √M.
/// Requires m < N so the substitute scale is positive.
pub fn stability_bound_asymptotic(x: &Signal, inputs: &StabilityInputs, m: usize) -> Result<f64> {
    let n = x.len() as f64;
    let scale = n.sqrt() - (m as f64).sqrt();
    if scale <= 0.0 {
        return Err(Error::OutOfRegime(
            "asymptotic scale √N − √M requires fewer measurements than unknowns".into(),
        ));
    }
    stability_bound(x, inputs, m, scale)
}
