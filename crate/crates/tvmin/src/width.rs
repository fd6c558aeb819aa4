//! Gaussian mean-width machinery: Monte Carlo estimation over the
//! gradient-ℓ₁-ball relaxation, closed-form upper and lower bounds, the
//! adversarial block/alternating-tail construction, and the measurement
//! counts the bounds imply.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::operators::{diff_1d, restrict, DiffOp, SupportSet};
use crate::seed::SeedSpec;
use crate::signal::Signal;
use crate::solver::SolverConfig;

/// Monte Carlo estimate of the mean width of a relaxed gradient-sparse
/// set: mean and standard error of per-sample support-function values.
#[derive(Debug, Clone, Copy)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Accepted sample count contributing to the mean.
    pub samples: usize,
    /// Residual tolerance each accepted inner solve was certified at.
    pub per_sample_solver_tol: f64,
    /// Inner solves that failed to certify and were resampled.
    pub rejected: usize,
}

/// Lower bound on the number of measurements below which recovery fails
/// with the requested probability. `vacuous` marks arguments where the
/// subtracted deviation term swallows the leading term.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementBound {
    pub value: f64,
    pub vacuous: bool,
}

/// Adversarial width witness: a block-constant head whose signs chase a
/// Gaussian vector, and an alternating k-entry tail that concentrates the
/// gradient mass on a designated support.
#[derive(Debug, Clone)]
pub struct LowerBoundConstruction {
    /// Tail amplitude 1/√(2k).
    pub mu: f64,
    /// Head amplitude 1/√(2n).
    pub nu: f64,
    /// Real-valued block length balancing the two gradient masses.
    pub l_block: f64,
    /// Rounded block length used for the actual partition (≥ 1).
    pub l_int: usize,
    /// Number of full head blocks.
    pub h_blocks: usize,
    /// The unit-ball member realizing the inner product.
    pub witness: Signal,
    /// ⟨witness, g⟩ for the Gaussian vector the construction chased.
    pub inner_product: f64,
    k: usize,
}

impl LowerBoundConstruction {
    /// The designated k-element gradient support holding the tail jumps.
    pub fn support(&self) -> SupportSet {
        let n = self.witness.len();
        SupportSet::new(((n - self.k - 1)..(n - 1)).collect())
            .expect("construction support indices are in range")
    }

    /// On-support minus off-support gradient mass of the witness; a
    /// non-negative margin certifies membership in the target set.
    pub fn membership_margin(&self) -> f64 {
        let g = diff_1d(&self.witness);
        let (on, off) = restrict(&g, &self.support()).expect("support fits the gradient field");
        on - off
    }
}

/// Closed-form width upper bound for 1-d signals of length n with k
/// gradient jumps: (4√2+4)·(nk)^{1/4}·√(2 ln(e^{1/2} n)).
pub fn width_upper_bound_1d(n: usize, k: usize) -> Result<f64> {
    if n <= 1 || k <= 1 {
        return Err(Error::OutOfRegime(format!(
            "closed-form width bound needs n > 1 and k > 1, got n = {n}, k = {k}"
        )));
    }
    let nf = n as f64;
    let kf = k as f64;
    Ok((4.0 * 2f64.sqrt() + 4.0) * (nf * kf).powf(0.25) * (2.0 * (0.5 + nf.ln())).sqrt())
}

/// Leading-order width lower bound (√π/4)·(nk)^{1/4}; meaningful in the
/// large-(n·k) regime only.
pub fn width_lower_bound_1d(n: usize, k: usize) -> f64 {
    (std::f64::consts::PI.sqrt() / 4.0) * ((n as f64) * (k as f64)).powf(0.25)
}

/// Measurement count below which recovery fails with probability ≥ 1−eta:
/// π/16·√(nk) − 4·√(ln(4/eta))·√n, clamped at zero with a vacuity flag.
pub fn measurement_lower_bound(n: usize, k: usize, eta: f64) -> Result<MeasurementBound> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "failure probability must lie in (0, 1), got {eta}"
        )));
    }
    let nf = n as f64;
    let kf = k as f64;
    let raw =
        std::f64::consts::PI / 16.0 * (nf * kf).sqrt() - 4.0 * (4.0 / eta).ln().sqrt() * nf.sqrt();
    if raw > 0.0 {
        Ok(MeasurementBound {
            value: raw,
            vacuous: false,
        })
    } else {
        Ok(MeasurementBound {
            value: 0.0,
            vacuous: true,
        })
    }
}

/// Closed-form width upper bound for d-dimensional grids (d ≥ 2) with
/// side n = 2^L: the per-level term 8√d(2^d−1)√k·√(2 ln(e^{1/2} n^d))
/// times log₂ n levels for d = 2, or times the geometric-series constant
/// 2^{1−d/2}/(1−2^{1−d/2}) for d > 2, plus √3 for the mean component.
pub fn width_upper_bound_nd(n: usize, k: usize, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid bound needs d >= 2, got {d}; use the 1-d bound instead"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "gradient sparsity must be positive".into(),
        ));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::UnsupportedLength(format!(
            "grid side must be a power of two >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let kf = k as f64;
    let df = d as f64;
    let per_level = 8.0
        * df.sqrt()
        * (2f64.powi(d as i32) - 1.0)
        * kf.sqrt()
        * (2.0 * (0.5 + df * nf.ln())).sqrt();
    let levels = if d == 2 {
        n.trailing_zeros() as f64
    } else {
        let r = 2f64.powf(1.0 - df / 2.0);
        r / (1.0 - r)
    };
    Ok(per_level * levels + 3f64.sqrt())
}

/// Sufficient measurement count implied by squaring the corresponding
/// width upper bound (a mesh-escape count, not a sharp threshold).
pub fn required_measurements(n: usize, k: usize, d: usize) -> Result<f64> {
    let w = if d == 1 {
        width_upper_bound_1d(n, k)?
    } else {
        width_upper_bound_nd(n, k, d)?
    };
    Ok(w * w)
}

/// Builds the adversarial construction for a Gaussian vector `g` of
/// length n: head blocks of length `l_int` signed by their block sums,
/// then an alternating ±1 tail on the last k entries signed by its own
/// correlation, scaled by 1/√(2n) and 1/√(2k) respectively.
pub fn lower_bound_construction(g: &[f64], n: usize, k: usize) -> Result<LowerBoundConstruction> {
    if g.len() != n {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match n = {n}",
            g.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "tail sparsity must be positive".into(),
        ));
    }
    if 3 * (k + 1) > n {
        return Err(Error::OutOfRegime(format!(
            "construction needs k <= n/3 - 1, got n = {n}, k = {k}"
        )));
    }
    let nf = n as f64;
    let kf = k as f64;
    let mu = 1.0 / (2.0 * kf).sqrt();
    let nu = 1.0 / (2.0 * nf).sqrt();
    let l_block = (4.0 * nf * kf).sqrt() / (2.0 * kf - 1.0);
    let l_int = (l_block.round() as usize).max(1);
    let reserve = l_int.max(k + 1);
    let h_blocks = n.saturating_sub(reserve) / l_int;

    let mut x = vec![0.0f64; n];
    for b in 0..h_blocks {
        let lo = b * l_int;
        let hi = lo + l_int;
        let s: f64 = g[lo..hi].iter().sum();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        for slot in &mut x[lo..hi] {
            *slot = nu * sign;
        }
    }
    let mut corr = 0.0;
    let mut flip = 1.0;
    for j in 0..k {
        corr += flip * g[n - k + j];
        flip = -flip;
    }
    let tail_sign = if corr < 0.0 { -1.0 } else { 1.0 };
    let mut flip = 1.0;
    for slot in &mut x[n - k..] {
        *slot = mu * tail_sign * flip;
        flip = -flip;
    }
    let inner_product = dot(&x, g);
    Ok(LowerBoundConstruction {
        mu,
        nu,
        l_block,
        l_int,
        h_blocks,
        witness: Signal::from_vec(x)?,
        inner_product,
        k,
    })
}

enum GramFactor {
    Tri(crate::linalg::Tridiag),
    Dense(crate::linalg::Chol),
}

impl GramFactor {
    fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            GramFactor::Tri(t) => t.solve_in_place(b),
            GramFactor::Dense(c) => c.solve_in_place(b),
        }
    }
}

/// Factors I + DᵀD once per shape: tridiagonal for 1-d grids, dense
/// Cholesky otherwise.
fn factor_gram(diff: &DiffOp) -> Result<GramFactor> {
    match *diff {
        DiffOp::OneD { n } => {
            let mut diag = vec![3.0f64; n];
            diag[0] = 2.0;
            diag[n - 1] = 2.0;
            let off = vec![-1.0f64; n - 1];
            crate::linalg::tridiag_factor(&diag, &off)
                .map(GramFactor::Tri)
                .ok_or_else(|| Error::DegenerateEnsemble("width system lost positivity".into()))
        }
        DiffOp::MultiD { .. } => {
            let nt = diff.domain();
            let mut m = Array2::<f64>::eye(nt);
            diff.add_gram(&mut m);
            crate::linalg::cholesky(&m)
                .map(GramFactor::Dense)
                .ok_or_else(|| Error::DegenerateEnsemble("width system lost positivity".into()))
        }
    }
}

/// Euclidean projection onto {v : ‖v‖₁ <= r} by magnitude sorting.
fn project_l1_ball(v: &mut [f64], r: f64, mag: &mut Vec<f64>) {
    if r <= 0.0 {
        v.iter_mut().for_each(|a| *a = 0.0);
        return;
    }
    let l1: f64 = v.iter().map(|a| a.abs()).sum();
    if l1 <= r {
        return;
    }
    mag.clear();
    mag.extend(v.iter().map(|a| a.abs()));
    mag.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mag.iter().enumerate() {
        css += m;
        let cand = (css - r) / (j as f64 + 1.0);
        // the qualifying prefix is contiguous, so the first failure ends it
        if m > cand {
            theta = cand;
        } else {
            break;
        }
    }
    for a in v.iter_mut() {
        let s = a.abs() - theta;
        *a = if s > 0.0 { s * a.signum() } else { 0.0 };
    }
}

/// Maximizes ⟨g, x⟩ over the intersection of the unit ℓ₂ ball and the
/// radius-r gradient ℓ₁ ball by operator splitting with over-relaxation
/// and residual-balanced penalty. Returns the value of an exactly
/// feasible point (the iterate rescaled into both balls), or None when
/// the residual tolerances are not met within the iteration budget.
fn sup_over_relaxed_set(
    g: &[f64],
    diff: &DiffOp,
    factor: &GramFactor,
    radius: f64,
    cfg: &SolverConfig,
) -> Option<f64> {
    let n = diff.domain();
    let npos = diff.range();
    let alpha = cfg.over_relax;
    let rho0 = cfg.penalty;
    let mut rho = rho0;
    let g_norm = norm2(g);

    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let mut u = vec![0.0f64; npos];
    let mut p = vec![0.0f64; n];
    let mut q = vec![0.0f64; npos];
    let mut dx = vec![0.0f64; npos];
    let mut rhs = vec![0.0f64; n];
    let mut xh = vec![0.0f64; n];
    let mut dxh = vec![0.0f64; npos];
    let mut w_prev = vec![0.0f64; n];
    let mut u_prev = vec![0.0f64; npos];
    let mut scratch_n = vec![0.0f64; n];
    let mut scratch_p = vec![0.0f64; npos];
    let mut mag = Vec::with_capacity(npos);

    let mut converged = false;
    for iter in 1..=cfg.max_iters {
        // x-update: (I + DᵀD) x = g/ρ + (w − p) + Dᵀ(u − q)
        for i in 0..npos {
            scratch_p[i] = u[i] - q[i];
        }
        diff.apply_transpose(&scratch_p, &mut rhs);
        for i in 0..n {
            rhs[i] += g[i] / rho + w[i] - p[i];
        }
        factor.solve_in_place(&mut rhs);
        x.copy_from_slice(&rhs);
        diff.apply(&x, &mut dx);

        for i in 0..n {
            xh[i] = alpha * x[i] + (1.0 - alpha) * w[i];
        }
        for i in 0..npos {
            dxh[i] = alpha * dx[i] + (1.0 - alpha) * u[i];
        }

        w_prev.copy_from_slice(&w);
        for i in 0..n {
            w[i] = xh[i] + p[i];
        }
        let nw = norm2(&w);
        if nw > 1.0 {
            w.iter_mut().for_each(|v| *v /= nw);
        }
        u_prev.copy_from_slice(&u);
        for i in 0..npos {
            u[i] = dxh[i] + q[i];
        }
        project_l1_ball(&mut u, radius, &mut mag);

        for i in 0..n {
            p[i] += xh[i] - w[i];
        }
        for i in 0..npos {
            q[i] += dxh[i] - u[i];
        }

        let mut rx2 = 0.0;
        for i in 0..n {
            let d = x[i] - w[i];
            rx2 += d * d;
        }
        let mut ru2 = 0.0;
        for i in 0..npos {
            let d = dx[i] - u[i];
            ru2 += d * d;
        }
        for i in 0..npos {
            scratch_p[i] = u[i] - u_prev[i];
        }
        diff.apply_transpose(&scratch_p, &mut scratch_n);
        for i in 0..n {
            scratch_n[i] += w[i] - w_prev[i];
        }
        let dual = rho * norm2(&scratch_n);

        let scale_x = norm2(&x).max(1.0);
        let scale_u = norm2(&dx).max(norm2(&u)).max(1.0);
        let primal_ok = rx2.sqrt() <= 1e-10 + cfg.primal_tol * scale_x
            && ru2.sqrt() <= 1e-10 + cfg.primal_tol * scale_u;
        let dual_ok = dual <= 1e-10 + cfg.dual_tol * g_norm.max(1.0);
        if primal_ok && dual_ok {
            converged = true;
            break;
        }

        if iter % 10 == 0 {
            let rp = (rx2 + ru2).sqrt();
            if rp > 10.0 * dual && rho < 100.0 * rho0 {
                rho *= 2.0;
                p.iter_mut().for_each(|v| *v /= 2.0);
                q.iter_mut().for_each(|v| *v /= 2.0);
            } else if dual > 10.0 * rp && rho > rho0 / 100.0 {
                rho /= 2.0;
                p.iter_mut().for_each(|v| *v *= 2.0);
                q.iter_mut().for_each(|v| *v *= 2.0);
            }
        }
    }
    if !converged {
        return None;
    }
    let nx = norm2(&x);
    let tv: f64 = dx.iter().map(|v| v.abs()).sum();
    let mut t = 1.0f64;
    if nx > 0.0 {
        t = t.min(1.0 / nx);
    }
    if tv > 0.0 {
        t = t.min(radius / tv);
    }
    Some(t * dot(g, &x))
}

/// Monte Carlo mean-width estimate over the relaxed set
/// {‖x‖₂ <= 1, ‖Dx‖₁ <= 4√d·√k} on a length-n (d = 1) or side-n
/// d-dimensional grid. Each sample solves a support-function program for
/// an independent Gaussian direction drawn from a per-sample child seed;
/// uncertified solves are rejected and resampled, and more than 10%
/// rejections abort the estimate.
pub fn width_mc(
    n: usize,
    k: usize,
    d: usize,
    samples: usize,
    seed: SeedSpec,
    cfg: &SolverConfig,
) -> Result<WidthEstimate> {
    cfg.validate()?;
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two samples for a standard error, got {samples}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "gradient sparsity must be positive".into(),
        ));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need side length >= 2, got {n}"
        )));
    }
    if d > 1 {
        n.checked_pow(d as u32)
            .filter(|&nt| nt <= 1 << 22)
            .ok_or_else(|| Error::InvalidArgument(format!("grid {n}^{d} is too large")))?;
    }
    let diff = if d == 1 {
        DiffOp::OneD { n }
    } else {
        DiffOp::MultiD { side: n, dims: d }
    };
    let radius = 4.0 * ((d * k) as f64).sqrt();
    let factor = factor_gram(&diff)?;
    let nt = diff.domain();

    let mut g = vec![0.0f64; nt];
    let mut count = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut rejected = 0usize;
    for slot in 0..samples {
        let mut rng = seed.derive(slot as u64).rng();
        loop {
            for gi in g.iter_mut() {
                *gi = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            }
            match sup_over_relaxed_set(&g, &diff, &factor, radius, cfg) {
                Some(v) => {
                    count += 1;
                    let delta = v - mean;
                    mean += delta / count as f64;
                    m2 += delta * (v - mean);
                    break;
                }
                None => {
                    rejected += 1;
                    if rejected * 10 > samples {
                        return Err(Error::EstimatorUnstable(format!(
                            "rejected {rejected} solves against {samples} requested samples"
                        )));
                    }
                }
            }
        }
    }
    let var = m2 / (count as f64 - 1.0);
    Ok(WidthEstimate {
        mean,
        std_error: (var / count as f64).sqrt(),
        samples: count,
        per_sample_solver_tol: cfg.primal_tol,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_vec(n: usize, seed: SeedSpec) -> Vec<f64> {
        let mut rng = seed.rng();
        (0..n)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect()
    }

    #[test]
    fn closed_form_fixtures() {
        let up = width_upper_bound_1d(256, 4).unwrap();
        assert!((up - 189.9461).abs() < 1e-3, "upper fixture: {up}");
        // (√π/4)·1024^{1/4} collapses to √(2π)
        let low = width_lower_bound_1d(256, 4);
        assert!(
            (low - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12,
            "lower fixture: {low}"
        );
        assert!(low < up);

        let vac = measurement_lower_bound(1024, 16, 0.05).unwrap();
        assert!(vac.vacuous);
        assert_eq!(vac.value, 0.0);
        let live = measurement_lower_bound(1 << 20, 1 << 12, 0.05).unwrap();
        assert!(
            !live.vacuous && live.value > 4000.0,
            "live bound: {}",
            live.value
        );
        // difference across eta isolates the deviation term
        let a = measurement_lower_bound(1 << 20, 1 << 12, 0.5)
            .unwrap()
            .value;
        let expect = 4.0 * 1024.0 * ((4.0f64 / 0.05).ln().sqrt() - (4.0f64 / 0.5).ln().sqrt());
        assert!((a - live.value - expect).abs() < 1e-9);
        assert!(a > live.value);
        assert!(measurement_lower_bound(64, 4, 0.0).is_err());
        assert!(measurement_lower_bound(64, 4, 1.0).is_err());
    }

    #[test]
    fn upper_bound_scaling_and_guards() {
        let base = width_upper_bound_1d(256, 4).unwrap();
        let quad = width_upper_bound_1d(256, 16).unwrap();
        assert!((quad / base - 2f64.sqrt()).abs() < 1e-12);
        assert!(width_upper_bound_1d(512, 4).unwrap() > base);
        assert!(width_upper_bound_1d(256, 5).unwrap() > base);
        assert!(matches!(
            width_upper_bound_1d(256, 1),
            Err(Error::OutOfRegime(_))
        ));
        assert!(matches!(
            width_upper_bound_1d(1, 4),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn grid_bound_fixture_and_structure() {
        let v = width_upper_bound_nd(64, 4, 2).unwrap();
        assert!((v - 1712.148).abs() < 0.05, "grid fixture: {v}");
        let b2 = width_upper_bound_nd(64, 16, 2).unwrap();
        assert!(((b2 - 3f64.sqrt()) / (v - 3f64.sqrt()) - 2.0).abs() < 1e-12);
        // d > 2 keeps only the single √ln factor: the level sum is n-free
        let v8 = width_upper_bound_nd(8, 4, 3).unwrap();
        let v16 = width_upper_bound_nd(16, 4, 3).unwrap();
        let lnr = ((0.5 + 3.0 * 16f64.ln()) / (0.5 + 3.0 * 8f64.ln())).sqrt();
        assert!(((v16 - 3f64.sqrt()) / (v8 - 3f64.sqrt()) - lnr).abs() < 1e-12);
        assert!(matches!(
            width_upper_bound_nd(17, 4, 2),
            Err(Error::UnsupportedLength(_))
        ));
        assert!(matches!(
            width_upper_bound_nd(16, 4, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn required_measurements_track_the_squared_bound() {
        let w = width_upper_bound_1d(256, 4).unwrap();
        let m = required_measurements(256, 4, 1).unwrap();
        assert_eq!(m, w * w);
        assert!(m > 256.0, "bound is loose at desk scale: {m}");
        let ratio = required_measurements(1024, 4, 1).unwrap() / m;
        let expect = 2.0 * (0.5 + 1024f64.ln()) / (0.5 + 256f64.ln());
        assert!((ratio - expect).abs() < 1e-12, "ratio {ratio} vs {expect}");
        let w2 = width_upper_bound_nd(32, 4, 2).unwrap();
        assert_eq!(required_measurements(32, 4, 2).unwrap(), w2 * w2);
    }

    #[test]
    fn construction_fixture_and_membership() {
        let g = gauss_vec(64, SeedSpec::new(71, 0));
        let c = lower_bound_construction(&g, 64, 4).unwrap();
        assert!((c.mu - 0.125f64.sqrt()).abs() < 1e-15);
        assert!((c.nu - (1.0 / 128f64).sqrt()).abs() < 1e-15);
        assert!((c.l_block - 32.0 / 7.0).abs() < 1e-12);
        assert_eq!(c.l_int, 5);
        assert_eq!(c.h_blocks, 11);
        assert!((c.nu * c.nu * 64.0 + c.mu * c.mu * 4.0 - 1.0).abs() < 1e-14);
        // the two gradient masses are balanced through the real-valued block length
        assert!((7.0 * c.mu - 2.0 * c.nu * 64.0 / c.l_block).abs() < 1e-12);
        assert!(c.witness.l2_norm() <= 1.0 + 1e-12);
        assert!(c.membership_margin() >= 0.0);
        let grad = diff_1d(&c.witness);
        let (on, off) = restrict(&grad, &c.support()).unwrap();
        assert!((on - 7.0 * c.mu).abs() < 1e-12, "tail mass {on}");
        assert!(off <= on);
        let manual = dot(c.witness.as_slice(), &g);
        assert!((c.inner_product - manual).abs() < 1e-12);
        assert!(c.inner_product > 0.0);

        assert!(matches!(
            lower_bound_construction(&g, 64, 21),
            Err(Error::OutOfRegime(_))
        ));
        assert!(matches!(
            lower_bound_construction(&g, 32, 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn construction_mean_matches_analytic_oracle() {
        // E|N(0,l)| = √(2l/π) per head block, plus the tail correlation
        let samples = 300;
        let mut acc = 0.0;
        let mut c0 = None;
        for i in 0..samples {
            let g = gauss_vec(64, SeedSpec::new(72, i));
            let c = lower_bound_construction(&g, 64, 4).unwrap();
            acc += c.inner_product;
            c0.get_or_insert(c);
        }
        let c = c0.unwrap();
        let mean = acc / samples as f64;
        let analytic =
            c.h_blocks as f64 * c.nu * (2.0 * c.l_int as f64 / std::f64::consts::PI).sqrt()
                + c.mu * (2.0 * 4.0 / std::f64::consts::PI).sqrt();
        assert!(
            (mean - analytic).abs() < 0.2,
            "construction mean {mean} vs analytic {analytic}"
        );
        assert!(mean >= 0.4 * (64.0f64 * 4.0).powf(0.25));
    }

    #[test]
    fn support_function_fixtures_two_dim() {
        let cfg = SolverConfig::default();
        // inactive gradient constraint: plain unit-ball support function
        let diff = DiffOp::OneD { n: 2 };
        let factor = factor_gram(&diff).unwrap();
        let v = sup_over_relaxed_set(&[3.0, 4.0], &diff, &factor, 4.0, &cfg).unwrap();
        assert!((v - 5.0).abs() < 1e-6, "ball support function: {v}");
        // active gradient constraint caps the antisymmetric payoff at r
        let v = sup_over_relaxed_set(&[-1.0, 1.0], &diff, &factor, 0.2, &cfg).unwrap();
        assert!((v - 0.2).abs() < 1e-6, "capped payoff: {v}");
    }

    #[test]
    fn mc_reproduces_chi_mean_when_constraint_inactive() {
        // 4√k >= 2√(n−1) makes the gradient ball a superset of the image
        // of the unit ball, so each sample value is ‖g‖₂
        let cfg = SolverConfig::default();
        let est = width_mc(16, 4, 1, 300, SeedSpec::new(73, 0), &cfg).unwrap();
        let chi = 16f64.sqrt() - 1.0 / (4.0 * 16f64.sqrt());
        assert!(
            (est.mean - chi).abs() < 3.0 * est.std_error + 0.02,
            "mean {} vs chi {chi} (se {})",
            est.mean,
            est.std_error
        );
        assert_eq!(est.samples, 300);
        assert_eq!(est.rejected, 0);
        assert_eq!(est.per_sample_solver_tol, cfg.primal_tol);
        let rerun = width_mc(16, 4, 1, 300, SeedSpec::new(73, 0), &cfg).unwrap();
        assert_eq!(est.mean.to_bits(), rerun.mean.to_bits());
    }

    #[test]
    fn mc_sandwich_at_desk_scale() {
        let cfg = SolverConfig {
            primal_tol: 1e-7,
            dual_tol: 1e-7,
            ..SolverConfig::default()
        };
        let est = width_mc(64, 2, 1, 100, SeedSpec::new(74, 0), &cfg).unwrap();
        let low = width_lower_bound_1d(64, 2);
        let up = width_upper_bound_1d(64, 2).unwrap();
        assert!(
            low <= est.mean + 2.0 * est.std_error,
            "lower {low} vs {}",
            est.mean
        );
        assert!(
            est.mean + 2.0 * est.std_error <= up,
            "upper {up} vs {}",
            est.mean
        );
        // a binding gradient ball stays below the unconstrained ball value
        let chi = 64f64.sqrt();
        assert!(est.mean < chi);
    }

    #[test]
    fn grid_estimate_respects_grid_bound() {
        let cfg = SolverConfig {
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            ..SolverConfig::default()
        };
        let est = width_mc(16, 2, 2, 60, SeedSpec::new(75, 0), &cfg).unwrap();
        let up = width_upper_bound_nd(16, 2, 2).unwrap();
        assert!(est.mean + 2.0 * est.std_error <= up, "{} vs {up}", est.mean);
        assert!(est.mean > 0.0);
    }

    #[test]
    fn rejection_and_argument_guards() {
        let starved = SolverConfig {
            max_iters: 1,
            ..SolverConfig::default()
        };
        assert!(matches!(
            width_mc(32, 2, 1, 20, SeedSpec::new(76, 0), &starved),
            Err(Error::EstimatorUnstable(_))
        ));
        let cfg = SolverConfig::default();
        assert!(width_mc(32, 2, 1, 1, SeedSpec::new(76, 1), &cfg).is_err());
        assert!(width_mc(32, 0, 1, 10, SeedSpec::new(76, 2), &cfg).is_err());
        assert!(width_mc(32, 2, 0, 10, SeedSpec::new(76, 3), &cfg).is_err());
        assert!(width_mc(1, 2, 1, 10, SeedSpec::new(76, 4), &cfg).is_err());
    }

    #[test]
    fn l1_projection_matches_direct_search() {
        let mut rng = SeedSpec::new(77, 0).rng();
        let mut mag = Vec::new();
        for trial in 0..200 {
            let n = 1 + (trial % 7);
            let mut v: Vec<f64> = (0..n)
                .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
                .collect();
            let r = 0.1 + (trial % 11) as f64 * 0.3;
            let orig = v.clone();
            project_l1_ball(&mut v, r, &mut mag);
            let l1: f64 = v.iter().map(|a| a.abs()).sum();
            assert!(l1 <= r + 1e-9, "projection violates the ball: {l1} vs {r}");
            // optimality: no feasible perturbation along any signed
            // coordinate pair moves closer to the original point
            let dist: f64 = v.iter().zip(&orig).map(|(a, b)| (a - b) * (a - b)).sum();
            for i in 0..n {
                for s in [-1e-6f64, 1e-6] {
                    let mut w = v.clone();
                    w[i] += s;
                    let wl1: f64 = w.iter().map(|a| a.abs()).sum();
                    if wl1 <= r {
                        let d2: f64 = w.iter().zip(&orig).map(|(a, b)| (a - b) * (a - b)).sum();
                        assert!(d2 >= dist - 1e-12, "projection not optimal at {i}");
                    }
                }
            }
        }
    }
}
