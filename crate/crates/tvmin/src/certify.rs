//! Recovery certificates and statistical condition estimates.
//!
//! The exact certificates decide, for one measurement matrix, whether
//! every signal with at most k gradient jumps is the unique TV minimizer
//! consistent with its measurements. The decision reduces to a finite
//! family of linear programs over the null space: for each jump support
//! and sign pattern, maximize the signed on-support gradient mass while
//! the off-support mass is held at 1. The condition holds iff every
//! optimum stays below the threshold (1 for plain recovery, C < 1 for the
//! balanced variant used by the noise-robustness bound).
//!
//! The statistical estimators bracket the subspace constants that enter
//! the robustness story: a minimization for the almost-Euclidean constant
//! β (upper estimate) and an ascent for the on-support gradient supremum
//! (lower estimate), plus a Monte-Carlo probe of how rarely a Gaussian
//! vector has small TV.

use ndarray::Array2;

use crate::ensemble::{null_space_basis, MeasurementEnsemble, NullBasis};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::lp::{solve_leq_min, LpError};
use crate::operators::{DiffOp, SupportSet};
use crate::seed::SeedSpec;

/// Verdict of an exhaustive support/sign certificate.
#[derive(Clone, Debug)]
pub struct CertReport {
    pub holds: bool,
    /// Support attaining the worst ratio (empty when no LP ran).
    pub worst_support: SupportSet,
    /// Largest on-support/off-support gradient mass ratio over the null
    /// space; infinite when some null direction has no off-support mass.
    pub worst_ratio: f64,
    /// Number of linear programs solved.
    pub work: usize,
}

/// Largest guarded signal length for exhaustive certification.
pub const CERT_MAX_N: usize = 14;
/// Largest guarded support size for exhaustive certification.
pub const CERT_MAX_K: usize = 3;

/// Exhaustive recovery certificate: holds iff every signal with at most
/// k gradient jumps is the unique minimizer for its own measurements.
pub fn null_space_condition(a: &MeasurementEnsemble, k: usize) -> Result<CertReport> {
    let (ratio, support, work) = worst_support_ratio(a, k)?;
    Ok(CertReport {
        holds: ratio < 1.0,
        worst_support: support,
        worst_ratio: ratio,
        work,
    })
}

/// Strengthened certificate with margin c in (0, 1); holding at c implies
/// the stability guarantees with balance constant c.
pub fn balanced_condition(a: &MeasurementEnsemble, k: usize, c: f64) -> Result<CertReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(
            "balance constant must lie in (0, 1)".into(),
        ));
    }
    let (ratio, support, work) = worst_support_ratio(a, k)?;
    Ok(CertReport {
        holds: ratio < c,
        worst_support: support,
        worst_ratio: ratio,
        work,
    })
}

fn worst_support_ratio(a: &MeasurementEnsemble, k: usize) -> Result<(f64, SupportSet, usize)> {
    let n = a.n_cols();
    if n > CERT_MAX_N || k > CERT_MAX_K {
        return Err(Error::CertificateScale(format!(
            "exhaustive certificate accepts n <= {CERT_MAX_N} and k <= {CERT_MAX_K}, \
             got n = {n}, k = {k}"
        )));
    }
    // A constant direction in the null space defeats every support: both
    // mass terms vanish and the strict inequality cannot hold.
    let ones = vec![1.0; n];
    let a1 = a.apply(&ones);
    let scale = a.matrix().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm2(&a1) <= 1e-10 * (1.0 + scale) * (n as f64).sqrt() {
        return Ok((f64::INFINITY, SupportSet::empty(), 0));
    }
    let basis = null_space_basis(a)?;
    let h = basis.dim();
    if h == 0 {
        // Trivial null space: the condition is vacuous.
        return Ok((0.0, SupportSet::empty(), 0));
    }
    // Gradient images of the basis vectors: g[i][l] = (D b_l)_i.
    let diff = DiffOp::OneD { n };
    let npos = diff.range();
    let mut g = vec![vec![0.0; h]; npos];
    let mut col = vec![0.0; n];
    let mut dcol = vec![0.0; npos];
    for l in 0..h {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = basis.basis()[(i, l)];
        }
        diff.apply(&col, &mut dcol);
        for i in 0..npos {
            g[i][l] = dcol[i];
        }
    }

    let mut worst = 0.0f64;
    let mut worst_support = SupportSet::empty();
    let mut work = 0usize;
    let mut support = Vec::new();
    for j in 1..=k.min(npos) {
        support.clear();
        support.extend(0..j);
        loop {
            // Sign patterns with the first sign pinned positive; the
            // negation of a null direction covers the other half.
            for pattern in 0..(1usize << (j - 1)) {
                let value = support_lp(&g, &support, pattern, h)?;
                work += 1;
                if value > worst {
                    worst = value;
                    worst_support = SupportSet::new(support.clone())?;
                }
                if value.is_infinite() {
                    return Ok((worst, worst_support, work));
                }
            }
            // Next lexicographic combination of size j out of npos.
            let mut advanced = false;
            for idx in (0..j).rev() {
                if support[idx] < npos - j + idx {
                    support[idx] += 1;
                    for t in idx + 1..j {
                        support[t] = support[t - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    Ok((worst, worst_support, work))
}

/// max Σ_{i in support} s_i (Dz)_i over null-space coordinates, subject to
/// Σ_{i off support} |(Dz)_i| <= 1. Returns +inf when unbounded.
fn support_lp(g: &[Vec<f64>], support: &[usize], pattern: usize, h: usize) -> Result<f64> {
    let npos = g.len();
    let j = support.len();
    let off: Vec<usize> = (0..npos).filter(|i| !support.contains(i)).collect();
    // Columns: w+ (h), w- (h), t (off.len()).
    let cols = 2 * h + off.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * off.len() + 1);
    let mut rhs: Vec<f64> = Vec::with_capacity(2 * off.len() + 1);
    for (ci, &i) in off.iter().enumerate() {
        let mut up = vec![0.0; cols];
        let mut dn = vec![0.0; cols];
        for l in 0..h {
            up[l] = g[i][l];
            up[h + l] = -g[i][l];
            dn[l] = -g[i][l];
            dn[h + l] = g[i][l];
        }
        up[2 * h + ci] = -1.0;
        dn[2 * h + ci] = -1.0;
        rows.push(up);
        rhs.push(0.0);
        rows.push(dn);
        rhs.push(0.0);
    }
    let mut cap = vec![0.0; cols];
    for slot in cap.iter_mut().skip(2 * h) {
        *slot = 1.0;
    }
    rows.push(cap);
    rhs.push(1.0);

    let mut c = vec![0.0; cols];
    for (pos, &i) in support.iter().enumerate() {
        let sign = if pos == 0 || (pattern >> (pos - 1)) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        for l in 0..h {
            c[l] -= sign * g[i][l];
            c[h + l] += sign * g[i][l];
        }
    }
    debug_assert_eq!(j, support.len());
    match solve_leq_min(&rows, &rhs, &c) {
        Ok(sol) => Ok(-sol.objective),
        Err(LpError::Unbounded) => Ok(f64::INFINITY),
        Err(e) => Err(Error::InvalidArgument(format!(
            "certificate LP failed: {e:?}"
        ))),
    }
}

const BETA_ITERS: usize = 500;
const ASCENT_ITERS: usize = 300;

/// Explicit projector B Bᵀ. The search iterations below apply this single
/// matrix instead of projecting through the basis so that any orthonormal
/// basis of the same subspace produces the same trajectory to rounding.
fn subspace_projector(basis: &NullBasis) -> Array2<f64> {
    let n = basis.n();
    let h = basis.dim();
    let b = basis.basis();
    let mut p = Array2::<f64>::zeros((n, n));
    for l in 0..h {
        for i in 0..n {
            let bi = b[(i, l)];
            if bi == 0.0 {
                continue;
            }
            for j in 0..n {
                p[(i, j)] += bi * b[(j, l)];
            }
        }
    }
    p
}

/// Upper estimate of the almost-Euclidean constant of a null space: the
/// smallest TV-to-norm ratio ‖Dx‖₁/(√n ‖x‖₂) found over unit vectors of
/// the subspace. Each of `restarts` projected-subgradient descents
/// locates a basin; its exact local minimum is then evaluated on the line
/// pinned by the active gradient set, so the returned value depends on
/// the subspace itself and not on the basis parametrization or the float
/// noise of the search path. Non-increasing in `restarts` for a fixed
/// seed. An empty subspace returns +inf (the bound is vacuous).
pub fn almost_euclidean_beta(basis: &NullBasis, restarts: usize, seed: SeedSpec) -> Result<f64> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let n = basis.n();
    if basis.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    let diff = DiffOp::OneD { n };
    let npos = diff.range();
    let proj_mat = subspace_projector(basis);
    let grad_rows = gradient_rows(basis, &diff);
    let sqrt_n = (n as f64).sqrt();
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    let mut dx = vec![0.0; npos];
    let mut sg = vec![0.0; npos];
    let mut grad = vec![0.0; n];
    let mut proj = vec![0.0; n];
    let mut best_x = vec![0.0; n];
    for restart in 0..restarts {
        let mut rng = seed.derive(restart as u64).rng();
        // Start from a projected full-space Gaussian so the trajectory
        // depends on the subspace itself, not its basis parametrization.
        loop {
            for slot in grad.iter_mut() {
                *slot = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            }
            crate::linalg::mat_vec(&proj_mat, &grad, &mut x);
            let nx = norm2(&x);
            if nx > 1e-12 {
                x.iter_mut().for_each(|v| *v /= nx);
                break;
            }
        }
        let mut local_best = f64::INFINITY;
        for iter in 1..=BETA_ITERS {
            diff.apply(&x, &mut dx);
            let val = dx.iter().map(|v| v.abs()).sum::<f64>() / sqrt_n;
            if val < local_best {
                local_best = val;
                best_x.copy_from_slice(&x);
            }
            for (s, &d) in sg.iter_mut().zip(dx.iter()) {
                *s = if d > 1e-14 {
                    1.0
                } else if d < -1e-14 {
                    -1.0
                } else {
                    0.0
                };
            }
            diff.apply_transpose(&sg, &mut grad);
            crate::linalg::mat_vec(&proj_mat, &grad, &mut proj);
            let step = 1.0 / (sqrt_n * (iter as f64).sqrt());
            for (xi, pi) in x.iter_mut().zip(proj.iter()) {
                *xi -= step * pi;
            }
            let nx = norm2(&x);
            if nx <= 1e-12 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= nx);
        }
        let candidate = match pinned_line_value(basis, &diff, &grad_rows, &best_x) {
            Some(v) if v <= local_best => v,
            _ => local_best,
        };
        if candidate < best {
            best = candidate;
        }
    }
    Ok(best)
}

/// Gradient images of the basis columns: row i holds (D b_l)_i over l.
fn gradient_rows(basis: &NullBasis, diff: &DiffOp) -> Vec<Vec<f64>> {
    let n = basis.n();
    let h = basis.dim();
    let npos = diff.range();
    let mut rows = vec![vec![0.0; h]; npos];
    let mut col = vec![0.0; n];
    let mut dcol = vec![0.0; npos];
    for l in 0..h {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = basis.basis()[(i, l)];
        }
        diff.apply(&col, &mut dcol);
        for i in 0..npos {
            rows[i][l] = dcol[i];
        }
    }
    rows
}

/// Exact objective value on the line a descent basin pins down: zeroing
/// the h−1 smallest gradient magnitudes of the iterate generically leaves
/// a single direction inside the subspace; evaluate the ratio there.
/// Returns None when the active rows fail to pin a line.
fn pinned_line_value(
    basis: &NullBasis,
    diff: &DiffOp,
    grad_rows: &[Vec<f64>],
    x: &[f64],
) -> Option<f64> {
    let h = basis.dim();
    let n = basis.n();
    let npos = diff.range();
    let mut dx = vec![0.0; npos];
    diff.apply(x, &mut dx);
    let mut order: Vec<usize> = (0..npos).collect();
    order.sort_unstable_by(|&a, &b| dx[a].abs().partial_cmp(&dx[b].abs()).unwrap());

    // Orthonormalize active rows (in subspace coordinates) until they cut
    // the subspace down to one dimension.
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for &i in &order {
        if ortho.len() + 1 >= h {
            break;
        }
        let mut r = grad_rows[i].clone();
        let scale = norm2(&r);
        if scale <= 1e-13 {
            continue;
        }
        for o in &ortho {
            let c: f64 = r.iter().zip(o).map(|(a, b)| a * b).sum();
            for (ri, oi) in r.iter_mut().zip(o) {
                *ri -= c * oi;
            }
        }
        let nr = norm2(&r);
        if nr > 1e-8 * scale {
            r.iter_mut().for_each(|v| *v /= nr);
            ortho.push(r);
        }
    }
    if ortho.len() + 1 != h {
        return None;
    }
    let mut w = vec![0.0; h];
    crate::linalg::mat_t_vec(basis.basis(), x, &mut w);
    for o in &ortho {
        let c: f64 = w.iter().zip(o).map(|(a, b)| a * b).sum();
        for (wi, oi) in w.iter_mut().zip(o) {
            *wi -= c * oi;
        }
    }
    let nw = norm2(&w);
    if nw <= 1e-10 {
        return None;
    }
    w.iter_mut().for_each(|v| *v /= nw);
    let mut line = vec![0.0; n];
    basis.lift(&w, &mut line);
    let nl = norm2(&line);
    if nl <= 1e-10 {
        return None;
    }
    diff.apply(&line, &mut dx);
    Some(dx.iter().map(|v| v.abs()).sum::<f64>() / (nl * (n as f64).sqrt()))
}

/// Lower estimate of the largest on-support gradient mass over unit
/// vectors of the subspace: sup ksum_largest(Dz, k), by projected
/// supergradient ascent; the inner support maximization is exact per
/// iterate.
pub fn partial_tv_sup(basis: &NullBasis, k: usize, trials: usize, seed: SeedSpec) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let n = basis.n();
    if basis.dim() == 0 || k == 0 {
        return Ok(0.0);
    }
    let diff = DiffOp::OneD { n };
    let npos = diff.range();
    let k = k.min(npos);
    let proj_mat = subspace_projector(basis);
    let sqrt_n = (n as f64).sqrt();
    let mut best = 0.0f64;
    let mut x = vec![0.0; n];
    let mut dx = vec![0.0; npos];
    let mut sg = vec![0.0; npos];
    let mut grad = vec![0.0; n];
    let mut proj = vec![0.0; n];
    let mut order: Vec<usize> = (0..npos).collect();
    for trial in 0..trials {
        let mut rng = seed.derive(trial as u64).rng();
        loop {
            for slot in grad.iter_mut() {
                *slot = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            }
            crate::linalg::mat_vec(&proj_mat, &grad, &mut x);
            let nx = norm2(&x);
            if nx > 1e-12 {
                x.iter_mut().for_each(|v| *v /= nx);
                break;
            }
        }
        for iter in 1..=ASCENT_ITERS {
            diff.apply(&x, &mut dx);
            // Exact inner maximization: the k largest magnitudes.
            order.sort_unstable_by(|&a, &b| {
                dx[b]
                    .abs()
                    .partial_cmp(&dx[a].abs())
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let val: f64 = order[..k].iter().map(|&i| dx[i].abs()).sum();
            if val > best {
                best = val;
            }
            sg.iter_mut().for_each(|s| *s = 0.0);
            for &i in &order[..k] {
                sg[i] = if dx[i] >= 0.0 { 1.0 } else { -1.0 };
            }
            diff.apply_transpose(&sg, &mut grad);
            crate::linalg::mat_vec(&proj_mat, &grad, &mut proj);
            let step = 1.0 / (sqrt_n * (iter as f64).sqrt());
            for (xi, pi) in x.iter_mut().zip(proj.iter()) {
                *xi += step * pi;
            }
            let nx = norm2(&x);
            if nx <= 1e-12 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= nx);
        }
    }
    Ok(best)
}

/// Monte-Carlo estimate of how often an i.i.d. standard Gaussian vector
/// has TV at most γ·n, with the matching analytic decay exponent.
#[derive(Clone, Debug)]
pub struct DeviationEstimate {
    pub gamma: f64,
    pub n: usize,
    /// Raw hit fraction in [0, 1].
    pub empirical_prob: f64,
    /// ln(p̂)/n with p̂ clamped to 3/samples when no hit occurred.
    pub empirical_log_prob_per_n: f64,
    /// Best (largest) analytic decay exponent: the probability is
    /// asymptotically at most exp(−n · bound_exponent).
    pub bound_exponent: f64,
    pub samples: usize,
}

/// Decay exponent −[H(1/t) + (1 − 1/t)·ln(t·γ/√(2π))] for one block
/// length t, with H the binary entropy in nats. Infinite at γ = 0.
pub fn deviation_exponent(t: usize, gamma: f64) -> f64 {
    assert!(t >= 2, "block length must be at least 2");
    if gamma <= 0.0 {
        return f64::INFINITY;
    }
    let q = 1.0 / t as f64;
    let entropy = -q * q.ln() - (1.0 - q) * (1.0 - q).ln();
    -(entropy + (1.0 - q) * (t as f64 * gamma / (2.0 * std::f64::consts::PI).sqrt()).ln())
}

/// Largest decay exponent over block lengths t in 2..=64.
pub fn deviation_bound_exponent(gamma: f64) -> f64 {
    (2..=64)
        .map(|t| deviation_exponent(t, gamma))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Empirical probability that a standard Gaussian n-vector has TV ≤ γ·n,
/// over `samples` draws, next to the analytic exponent.
pub fn tv_small_prob(
    n: usize,
    gamma: f64,
    samples: usize,
    seed: SeedSpec,
) -> Result<DeviationEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "need a signal length of at least 2".into(),
        ));
    }
    if samples < 1000 {
        return Err(Error::InvalidArgument("need at least 1000 samples".into()));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(
            "gamma must be finite and nonnegative".into(),
        ));
    }
    let mut rng = seed.rng();
    let threshold = gamma * n as f64;
    let mut hits = 0usize;
    let mut x: Vec<f64> = vec![0.0; n];
    for _ in 0..samples {
        for slot in x.iter_mut() {
            *slot = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
        }
        let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        if tv <= threshold {
            hits += 1;
        }
    }
    let empirical_prob = hits as f64 / samples as f64;
    let clamped = if hits == 0 {
        3.0 / samples as f64
    } else {
        empirical_prob
    };
    Ok(DeviationEstimate {
        gamma,
        n,
        empirical_prob,
        empirical_log_prob_per_n: clamped.ln() / n as f64,
        bound_exponent: deviation_bound_exponent(gamma),
        samples,
    })
}

/// Orthogonal re-parametrization helper used by tests and examples: the
/// orthogonal factor of a random square Gaussian matrix.
pub fn random_orthogonal(dim: usize, seed: SeedSpec) -> Array2<f64> {
    let mut rng = seed.rng();
    let m = Array2::from_shape_fn((dim, dim), |_| {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
    });
    let qr = crate::linalg::householder_qr(&m);
    qr.q_full()
}
