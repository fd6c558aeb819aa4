//! Dense two-phase simplex, used as an exact reference solver.
//!
//! Small instances only: the callers cap problem sizes before building a
//! tableau. Bland's rule everywhere, so the iteration is finite even on
//! degenerate vertices.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
    /// Iteration cap hit; should not happen with Bland's rule.
    Stalled,
}

#[derive(Clone, Debug)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// A ray whose descent rate is below this is treated as a zero-cost ray
/// (rounding noise), not genuine unboundedness. Splits like x = x⁺ − x⁻
/// carry exact zero-cost rays whose reduced costs drift off zero after
/// many pivots.
const RAY_COST_TOL: f64 = 1e-6;
const PHASE1_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    rows: usize,
    cols: usize,
    /// (rows + 1) x (cols + 1); last row is the cost row, last column the rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn pivot(&mut self, r: usize, jc: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + jc];
        let inv = 1.0 / p;
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v *= inv;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + jc];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.t[i * w + j] -= f * self.t[r * w + j];
            }
            self.t[i * w + jc] = 0.0;
        }
        self.basis[r] = jc;
    }

    /// Dantzig pricing with a Bland fallback: most negative reduced cost
    /// normally, switching to lowest-eligible-index after a long run of
    /// degenerate pivots (and back once the objective strictly improves),
    /// so the iteration cannot cycle. The leaving row breaks ratio ties by
    /// the lowest basis index.
    ///
    /// A column demanding an unbounded ray at a sub-noise descent rate is
    /// banned for the current pricing pass instead of reported: splits like
    /// x = x⁺ − x⁻ carry exact zero-cost rays whose reduced costs drift
    /// off zero after many pivots. Bans reset on every pivot.
    fn run(&mut self, enter_limit: usize) -> Result<(), LpError> {
        let cost_row = self.rows;
        let mut banned = vec![false; enter_limit];
        let mut bland = false;
        let mut degenerate_run = 0usize;
        for _ in 0..MAX_PIVOTS {
            let mut enter = None;
            if bland {
                for j in 0..enter_limit {
                    if !banned[j] && self.at(cost_row, j) < -COST_TOL {
                        enter = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -COST_TOL;
                for j in 0..enter_limit {
                    let cj = self.at(cost_row, j);
                    if !banned[j] && cj < best {
                        best = cj;
                        enter = Some(j);
                    }
                }
            }
            let Some(jc) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, jc);
                if a > PIVOT_TOL {
                    let ratio = self.at(i, self.cols) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, theta)) = leave else {
                if self.at(cost_row, jc) >= -RAY_COST_TOL {
                    banned[jc] = true;
                    continue;
                }
                return Err(LpError::Unbounded);
            };
            let drop = theta * -self.at(cost_row, jc);
            self.pivot(r, jc);
            for b in &mut banned {
                *b = false;
            }
            if drop > 1e-12 {
                degenerate_run = 0;
                bland = false;
            } else {
                degenerate_run += 1;
                if degenerate_run >= 64 {
                    bland = true;
                }
            }
        }
        Err(LpError::Stalled)
    }

    fn extract(&self, n_struct: usize, c: &[f64]) -> LpSolution {
        let mut x = vec![0.0; n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n_struct {
                x[b] = self.at(i, self.cols);
            }
        }
        let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        LpSolution { x, objective }
    }
}

/// min c.x  s.t.  a x = b, x >= 0.
pub(crate) fn solve_eq_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution, LpError> {
    let m = a.len();
    let n = c.len();
    debug_assert_eq!(b.len(), m);
    if m == 0 {
        if c.iter().any(|&ci| ci < -COST_TOL) {
            return Err(LpError::Unbounded);
        }
        return Ok(LpSolution {
            x: vec![0.0; n],
            objective: 0.0,
        });
    }
    // Structural columns then one artificial per row.
    let cols = n + m;
    let w = cols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            t[i * w + j] = flip * v;
        }
        t[i * w + n + i] = 1.0;
        t[i * w + cols] = flip * b[i];
    }
    // Phase-1 cost row, reduced against the artificial basis.
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..m {
            s += t[i * w + j];
        }
        t[m * w + j] = -s;
    }
    let mut rhs1 = 0.0;
    for i in 0..m {
        rhs1 += t[i * w + cols];
    }
    t[m * w + cols] = -rhs1;
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis: (n..n + m).collect(),
    };
    tab.run(cols)?;
    if -tab.at(m, cols) > PHASE1_TOL {
        return Err(LpError::Infeasible);
    }
    // Drive leftover basic artificials out with degenerate pivots so phase
    // 2 cannot move them off zero. A row with no structural entry left is
    // redundant; its artificial stays basic but the all-zero row can never
    // be chosen by the ratio test again.
    for r in 0..m {
        if tab.basis[r] < n {
            continue;
        }
        if let Some(j) = (0..n).find(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
            tab.pivot(r, j);
        }
    }
    // Phase-2 cost row against the current basis; artificials stay priced
    // out by limiting the entering scan to structural columns.
    for j in 0..cols {
        let mut z = if j < n { c[j] } else { 0.0 };
        for i in 0..m {
            let cb = tab.basis[i];
            if cb < n {
                z -= c[cb] * tab.at(i, j);
            }
        }
        tab.t[m * w + j] = z;
    }
    let mut rhs2 = 0.0;
    for i in 0..m {
        let cb = tab.basis[i];
        if cb < n {
            rhs2 += c[cb] * tab.at(i, cols);
        }
    }
    tab.t[m * w + cols] = -rhs2;
    tab.run(n)?;
    Ok(tab.extract(n, c))
}

/// min c.x  s.t.  a x <= b with every b_i >= 0, x >= 0.
/// The slack basis is feasible, so no phase 1 is needed.
pub(crate) fn solve_leq_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution, LpError> {
    let m = a.len();
    let n = c.len();
    debug_assert_eq!(b.len(), m);
    debug_assert!(
        b.iter().all(|&v| v >= 0.0),
        "slack basis needs nonnegative rhs"
    );
    if m == 0 {
        if c.iter().any(|&ci| ci < -COST_TOL) {
            return Err(LpError::Unbounded);
        }
        return Ok(LpSolution {
            x: vec![0.0; n],
            objective: 0.0,
        });
    }
    let cols = n + m;
    let w = cols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        for (j, &v) in row.iter().enumerate() {
            t[i * w + j] = v;
        }
        t[i * w + n + i] = 1.0;
        t[i * w + cols] = b[i];
    }
    for (j, &cj) in c.iter().enumerate() {
        t[m * w + j] = cj;
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis: (n..n + m).collect(),
    };
    tab.run(cols)?;
    Ok(tab.extract(n, c))
}
