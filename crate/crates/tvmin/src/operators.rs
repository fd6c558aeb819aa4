//! Discrete gradient operators, partial TV norms, and the relaxed
//! support/buffer index sets used by the recovery conditions.

use crate::error::{Error, Result};
use crate::signal::{MultiSignal, Signal};
use ndarray::Array1;

/// Shape tag for a gradient field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradLayout {
    OneD { n: usize },
    MultiD { side: usize, dims: usize },
}

/// Flattened difference field. For d >= 2 the entries come in `dims`
/// blocks: block a holds the axis-a differences, lane by lane in row-major
/// order, each lane contributing side - 1 consecutive entries. Axis 1 is
/// the fastest-varying (within-row) direction.
#[derive(Clone, Debug, PartialEq)]
pub struct GradField {
    values: Array1<f64>,
    layout: GradLayout,
}

impl GradField {
    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("gradient storage is contiguous")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layout(&self) -> GradLayout {
        self.layout
    }

    /// Axis block (1-based axis index) of a multi-dimensional field.
    pub fn axis_block(&self, axis: usize) -> Result<&[f64]> {
        match self.layout {
            GradLayout::OneD { .. } => Err(Error::InvalidArgument(
                "axis blocks exist only for multi-dimensional fields".into(),
            )),
            GradLayout::MultiD { side, dims } => {
                if axis < 1 || axis > dims {
                    return Err(Error::InvalidArgument(format!(
                        "axis {axis} out of range 1..={dims}"
                    )));
                }
                let block = (side - 1) * side.pow((dims - 1) as u32);
                let s = self.as_slice();
                Ok(&s[(axis - 1) * block..axis * block])
            }
        }
    }
}

/// Forward difference operator on flat storage, shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum DiffOp {
    OneD { n: usize },
    MultiD { side: usize, dims: usize },
}

impl DiffOp {
    pub(crate) fn domain(&self) -> usize {
        match *self {
            DiffOp::OneD { n } => n,
            DiffOp::MultiD { side, dims } => side.pow(dims as u32),
        }
    }

    pub(crate) fn range(&self) -> usize {
        match *self {
            DiffOp::OneD { n } => n - 1,
            DiffOp::MultiD { side, dims } => dims * (side - 1) * side.pow((dims - 1) as u32),
        }
    }

    pub(crate) fn layout(&self) -> GradLayout {
        match *self {
            DiffOp::OneD { n } => GradLayout::OneD { n },
            DiffOp::MultiD { side, dims } => GradLayout::MultiD { side, dims },
        }
    }

    /// out = D x.
    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.domain());
        debug_assert_eq!(out.len(), self.range());
        match *self {
            DiffOp::OneD { n } => {
                for i in 0..n - 1 {
                    out[i] = x[i + 1] - x[i];
                }
            }
            DiffOp::MultiD { side, dims } => {
                let mut pos = 0usize;
                for axis in 1..=dims {
                    let stride = side.pow((axis - 1) as u32);
                    let lanes_outer = side.pow((dims - axis) as u32);
                    for o in 0..lanes_outer {
                        let line_base = o * stride * side;
                        for i in 0..stride {
                            let base = line_base + i;
                            for t in 0..side - 1 {
                                out[pos] = x[base + (t + 1) * stride] - x[base + t * stride];
                                pos += 1;
                            }
                        }
                    }
                }
                debug_assert_eq!(pos, self.range());
            }
        }
    }

    /// out = D^T g.
    pub(crate) fn apply_transpose(&self, g: &[f64], out: &mut [f64]) {
        debug_assert_eq!(g.len(), self.range());
        debug_assert_eq!(out.len(), self.domain());
        out.fill(0.0);
        match *self {
            DiffOp::OneD { n } => {
                for i in 0..n - 1 {
                    out[i] -= g[i];
                    out[i + 1] += g[i];
                }
            }
            DiffOp::MultiD { side, dims } => {
                let mut pos = 0usize;
                for axis in 1..=dims {
                    let stride = side.pow((axis - 1) as u32);
                    let lanes_outer = side.pow((dims - axis) as u32);
                    for o in 0..lanes_outer {
                        let line_base = o * stride * side;
                        for i in 0..stride {
                            let base = line_base + i;
                            for t in 0..side - 1 {
                                let v = g[pos];
                                out[base + t * stride] -= v;
                                out[base + (t + 1) * stride] += v;
                                pos += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    /// c += D^T D (dense accumulation).
    pub(crate) fn add_gram(&self, c: &mut ndarray::Array2<f64>) {
        let n = self.domain();
        debug_assert_eq!(c.nrows(), n);
        match *self {
            DiffOp::OneD { n } => {
                for i in 0..n - 1 {
                    c[[i, i]] += 1.0;
                    c[[i + 1, i + 1]] += 1.0;
                    c[[i, i + 1]] -= 1.0;
                    c[[i + 1, i]] -= 1.0;
                }
            }
            DiffOp::MultiD { side, dims } => {
                for axis in 1..=dims {
                    let stride = side.pow((axis - 1) as u32);
                    let lanes_outer = side.pow((dims - axis) as u32);
                    for o in 0..lanes_outer {
                        let line_base = o * stride * side;
                        for i in 0..stride {
                            let base = line_base + i;
                            for t in 0..side - 1 {
                                let p = base + t * stride;
                                let q = base + (t + 1) * stride;
                                c[[p, p]] += 1.0;
                                c[[q, q]] += 1.0;
                                c[[p, q]] -= 1.0;
                                c[[q, p]] -= 1.0;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Forward differences of a 1-D signal: g[i] = x[i+1] - x[i].
pub fn diff_1d(x: &Signal) -> GradField {
    let op = DiffOp::OneD { n: x.len() };
    let mut out = vec![0.0; op.range()];
    op.apply(x.as_slice(), &mut out);
    GradField {
        values: Array1::from_vec(out),
        layout: op.layout(),
    }
}

/// Concatenated per-axis forward differences of a d-dimensional signal.
pub fn diff_nd(x: &MultiSignal) -> GradField {
    let op = DiffOp::MultiD {
        side: x.side(),
        dims: x.dims(),
    };
    let mut out = vec![0.0; op.range()];
    op.apply(x.as_slice(), &mut out);
    GradField {
        values: Array1::from_vec(out),
        layout: op.layout(),
    }
}

/// Anisotropic total variation: the l1 norm of the gradient field.
pub fn tv_norm(g: &GradField) -> f64 {
    g.as_slice().iter().map(|v| v.abs()).sum()
}

/// Sum of the k largest magnitudes. Ties resolve to the lower index first;
/// the value does not depend on the tie order.
pub fn ksum_largest(g: &GradField, k: usize) -> Result<f64> {
    if k > g.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds field length {}",
            g.len()
        )));
    }
    let mut idx: Vec<usize> = (0..g.len()).collect();
    let s = g.as_slice();
    idx.sort_by(|&a, &b| s[b].abs().total_cmp(&s[a].abs()).then(a.cmp(&b)));
    Ok(idx[..k].iter().map(|&i| s[i].abs()).sum())
}

/// Strictly increasing set of gradient indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "support indices must be strictly increasing".into(),
            ));
        }
        Ok(SupportSet { indices })
    }

    pub fn empty() -> Self {
        SupportSet {
            indices: Vec::new(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Splits the l1 mass of a field into (on-support, off-support).
pub fn restrict(g: &GradField, support: &SupportSet) -> Result<(f64, f64)> {
    if let Some(&last) = support.indices().last() {
        if last >= g.len() {
            return Err(Error::InvalidArgument(format!(
                "support index {last} out of range for field length {}",
                g.len()
            )));
        }
    }
    let s = g.as_slice();
    let mut on = 0.0;
    let mut off = 0.0;
    let mut cursor = support.indices().iter().peekable();
    for (i, v) in s.iter().enumerate() {
        if cursor.peek() == Some(&&i) {
            on += v.abs();
            cursor.next();
        } else {
            off += v.abs();
        }
    }
    Ok((on, off))
}

/// Signal indices touched by a gradient support, and a disjoint buffer of
/// gradient indices clear of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelaxedNullSets {
    /// Signal indices adjacent to the support differences (|dk| <= 2|K|).
    pub dk: Vec<usize>,
    /// Gradient indices whose two endpoints avoid dk and each other.
    pub kb: Vec<usize>,
}

/// Builds the touched-index set dk and the buffer set kb for a gradient
/// support on a length-n signal.
///
/// kb is chosen greedily, lowest gradient index first, among differences
/// touching neither dk nor the signal indices of previously chosen kb
/// entries; this yields at least ceil((n - 1 - 3|K|) / 2) entries.
pub fn relaxed_null_sets(n: usize, support: &SupportSet) -> Result<RelaxedNullSets> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let k = support.len();
    if let Some(&last) = support.indices().last() {
        if last >= n - 1 {
            return Err(Error::InvalidArgument(format!(
                "support index {last} out of range for {} differences",
                n - 1
            )));
        }
    }
    if n - 1 < 3 * k {
        return Err(Error::SparsityTooLarge(format!(
            "need n - 1 >= 3|K|; got n - 1 = {}, |K| = {k}",
            n - 1
        )));
    }
    let mut touched = vec![false; n];
    let mut dk = Vec::with_capacity(2 * k);
    for &i in support.indices() {
        for s in [i, i + 1] {
            if !touched[s] {
                touched[s] = true;
                dk.push(s);
            }
        }
    }
    dk.sort_unstable();

    let mut used = touched;
    let mut kb = Vec::new();
    for j in 0..n - 1 {
        if !used[j] && !used[j + 1] {
            used[j] = true;
            used[j + 1] = true;
            kb.push(j);
        }
    }
    let floor = (n - 1 - 3 * k).div_ceil(2);
    debug_assert!(
        kb.len() >= floor,
        "buffer too small: {} < {floor}",
        kb.len()
    );
    Ok(RelaxedNullSets { dk, kb })
}

/// Buffer slack of the relaxed condition:
/// sum over kb of |x[i+1] - x[i]| minus twice the l1 mass of x on dk.
pub fn relaxed_null_margin(x: &Signal, support: &SupportSet) -> Result<f64> {
    let sets = relaxed_null_sets(x.len(), support)?;
    let v = x.as_slice();
    let buffer: f64 = sets.kb.iter().map(|&i| (v[i + 1] - v[i]).abs()).sum();
    let touched: f64 = sets.dk.iter().map(|&i| v[i].abs()).sum();
    Ok(buffer - 2.0 * touched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedSpec;
    use rand::Rng;

    fn field_1d(v: Vec<f64>) -> GradField {
        let n = v.len();
        let mut x = vec![0.0; n + 1];
        for i in 0..n {
            x[i + 1] = x[i] + v[i];
        }
        let sig = Signal::from_vec(x).unwrap();
        let g = diff_1d(&sig);
        assert_eq!(g.len(), n);
        g
    }

    #[test]
    fn diff_1d_matches_definition() {
        let x = Signal::from_vec(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let g = diff_1d(&x);
        assert_eq!(g.as_slice(), &[-2.0, 1.0, 0.0]);
        assert_eq!(tv_norm(&g), 3.0);
    }

    #[test]
    fn diff_nd_2x2_blocks_and_tv() {
        let img = MultiSignal::from_flat(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = diff_nd(&img);
        assert_eq!(g.as_slice(), &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(g.axis_block(1).unwrap(), &[1.0, 1.0]);
        assert_eq!(g.axis_block(2).unwrap(), &[2.0, 2.0]);
        assert_eq!(tv_norm(&g), 6.0);
    }

    #[test]
    fn diff_transpose_is_adjoint() {
        let mut rng = SeedSpec::new(8, 0).rng();
        for &(side, dims) in &[(5usize, 2usize), (4, 3), (3, 4)] {
            let op = DiffOp::MultiD { side, dims };
            let x: Vec<f64> = (0..op.domain()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..op.range()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut dx = vec![0.0; op.range()];
            let mut dtg = vec![0.0; op.domain()];
            op.apply(&x, &mut dx);
            op.apply_transpose(&g, &mut dtg);
            let lhs = crate::linalg::dot(&dx, &g);
            let rhs = crate::linalg::dot(&x, &dtg);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn gram_matches_operator_composition() {
        let op = DiffOp::MultiD { side: 3, dims: 2 };
        let n = op.domain();
        let mut gram = ndarray::Array2::zeros((n, n));
        op.add_gram(&mut gram);
        let mut rng = SeedSpec::new(9, 0).rng();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut dx = vec![0.0; op.range()];
        let mut dtdx = vec![0.0; n];
        op.apply(&x, &mut dx);
        op.apply_transpose(&dx, &mut dtdx);
        let mut by_gram = vec![0.0; n];
        crate::linalg::mat_vec(&gram, &x, &mut by_gram);
        for i in 0..n {
            assert!((by_gram[i] - dtdx[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_norm_bound_by_power_iteration() {
        // 200 power iterations estimate ||D||, which must stay below
        // 2 sqrt(d) with a 1e-6 margin.
        for &(side, dims) in &[(64usize, 1usize), (16, 2), (8, 3)] {
            let op = if dims == 1 {
                DiffOp::OneD { n: side }
            } else {
                DiffOp::MultiD { side, dims }
            };
            let mut rng = SeedSpec::new(123, dims as u64).rng();
            let mut v: Vec<f64> = (0..op.domain()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut g = vec![0.0; op.range()];
            let mut w = vec![0.0; op.domain()];
            let mut lambda = 0.0;
            for _ in 0..200 {
                op.apply(&v, &mut g);
                op.apply_transpose(&g, &mut w);
                lambda = crate::linalg::norm2(&w);
                for i in 0..v.len() {
                    v[i] = w[i] / lambda;
                }
            }
            let op_norm = lambda.sqrt();
            assert!(
                op_norm <= 2.0 * (dims as f64).sqrt() + 1e-6,
                "norm {op_norm}"
            );
        }
    }

    #[test]
    fn ksum_takes_largest_magnitudes() {
        let g = field_1d(vec![1.0, -3.0, 2.0, -2.0]);
        assert_eq!(ksum_largest(&g, 0).unwrap(), 0.0);
        assert_eq!(ksum_largest(&g, 1).unwrap(), 3.0);
        assert_eq!(ksum_largest(&g, 2).unwrap(), 5.0);
        assert_eq!(ksum_largest(&g, 4).unwrap(), 8.0);
        assert!(ksum_largest(&g, 5).is_err());
    }

    #[test]
    fn restrict_partitions_l1_mass() {
        let mut rng = SeedSpec::new(77, 0).rng();
        for trial in 0..1000 {
            let n = 2 + trial % 40;
            let x: Vec<f64> = (0..n + 1).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let sig = Signal::from_vec(x).unwrap();
            let g = diff_1d(&sig);
            let picks: Vec<usize> = (0..g.len()).filter(|_| rng.gen_bool(0.3)).collect();
            let support = SupportSet::new(picks).unwrap();
            let (on, off) = restrict(&g, &support).unwrap();
            let total = tv_norm(&g);
            assert!((on + off - total).abs() <= 1e-12 * total.max(1.0));
        }
    }

    #[test]
    fn relaxed_sets_hand_cases() {
        // No support: every other difference is eligible.
        let s = relaxed_null_sets(8, &SupportSet::empty()).unwrap();
        assert!(s.dk.is_empty());
        assert_eq!(s.kb, vec![0, 2, 4, 6]);

        // One difference at 4 touches signals {4, 5}; the greedy sweep
        // then picks 0, 2, 6, 8.
        let s = relaxed_null_sets(10, &SupportSet::new(vec![4]).unwrap()).unwrap();
        assert_eq!(s.dk, vec![4, 5]);
        assert_eq!(s.kb, vec![0, 2, 6, 8]);
        assert!(s.kb.len() >= (10 - 1 - 3) / 2);

        // n - 1 = 3|K| boundary: allowed, buffer floor is zero.
        let s = relaxed_null_sets(7, &SupportSet::new(vec![0, 2]).unwrap()).unwrap();
        assert_eq!(s.dk, vec![0, 1, 2, 3]);
        assert_eq!(s.kb, vec![4]);

        assert!(matches!(
            relaxed_null_sets(6, &SupportSet::new(vec![0, 2]).unwrap()),
            Err(Error::SparsityTooLarge(_))
        ));
    }

    #[test]
    fn relaxed_sets_bounds_hold_randomly() {
        let mut rng = SeedSpec::new(78, 0).rng();
        for _ in 0..500 {
            let n = 4 + rng.gen_range(0..60) as usize;
            let k_max = (n - 1) / 3;
            let k = rng.gen_range(0..=k_max);
            let mut picks: Vec<usize> = (0..n - 1).collect();
            for i in (1..picks.len()).rev() {
                let j = rng.gen_range(0..=i);
                picks.swap(i, j);
            }
            let mut sel: Vec<usize> = picks[..k].to_vec();
            sel.sort_unstable();
            let support = SupportSet::new(sel).unwrap();
            let sets = relaxed_null_sets(n, &support).unwrap();
            assert!(sets.dk.len() <= 2 * k);
            assert!(sets.kb.len() >= (n - 1 - 3 * k).div_ceil(2));
            // kb differences touch neither dk nor each other.
            let dk: std::collections::HashSet<_> = sets.dk.iter().copied().collect();
            let mut seen = std::collections::HashSet::new();
            for &j in &sets.kb {
                for s in [j, j + 1] {
                    assert!(!dk.contains(&s));
                    assert!(seen.insert(s));
                }
            }
        }
    }

    #[test]
    fn relaxed_margin_signs() {
        // Large buffer jumps, zero signal mass near the support.
        let x = Signal::from_vec(vec![0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let support = SupportSet::new(vec![4]).unwrap();
        // dk = {4, 5}; x is zero there; kb includes the jumps around 5.0.
        let margin = relaxed_null_margin(&x, &support).unwrap();
        assert!(margin > 0.0, "margin = {margin}");

        // All mass on dk, flat elsewhere: margin goes negative.
        let x = Signal::from_vec(vec![0.0, 0.0, 0.0, 0.0, 7.0, 7.0, 0.0]).unwrap();
        let margin = relaxed_null_margin(&x, &support).unwrap();
        assert!(margin < 0.0, "margin = {margin}");
    }
}
