//! Signal containers and piecewise-constant test signal generators.

use crate::error::{Error, Result};
use crate::seed::SeedSpec;
use ndarray::{Array1, ArrayD};
use rand::Rng;

/// One-dimensional signal with finite entries and length >= 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: Array1<f64>,
}

impl Signal {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "signal length must be >= 2, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "signal entries must be finite".into(),
            ));
        }
        Ok(Signal { values })
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Signal::new(Array1::from_vec(values))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("signal storage is contiguous")
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// d-dimensional signal on a cubic grid: side^dims entries, dims >= 2.
///
/// Values are stored in row-major order; axis 1 is the fastest-varying
/// (within-row) direction and axis `dims` the slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSignal {
    values: ArrayD<f64>,
    side: usize,
    dims: usize,
}

impl MultiSignal {
    pub fn new(values: ArrayD<f64>) -> Result<Self> {
        let dims = values.ndim();
        if dims < 2 {
            return Err(Error::InvalidArgument(format!(
                "multi signal needs dims >= 2, got {dims}"
            )));
        }
        let side = values.shape()[0];
        if side < 2 {
            return Err(Error::InvalidArgument(format!(
                "multi signal side must be >= 2, got {side}"
            )));
        }
        if values.shape().iter().any(|&s| s != side) {
            return Err(Error::InvalidArgument(format!(
                "multi signal must be cubic, got shape {:?}",
                values.shape()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "signal entries must be finite".into(),
            ));
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().to_owned()
        };
        Ok(MultiSignal { values, side, dims })
    }

    pub fn from_flat(side: usize, dims: usize, flat: Vec<f64>) -> Result<Self> {
        let total = side.checked_pow(dims as u32).ok_or_else(|| {
            Error::InvalidArgument(format!("side {side} ^ dims {dims} overflows"))
        })?;
        if flat.len() != total {
            return Err(Error::InvalidArgument(format!(
                "expected {total} entries for side {side}, dims {dims}, got {}",
                flat.len()
            )));
        }
        let shape = vec![side; dims];
        let values = ArrayD::from_shape_vec(shape, flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        MultiSignal::new(values)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn total_len(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("multi signal storage is standard layout")
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

const LEVEL_COLLISION_TOL: f64 = 1e-9;

/// Piecewise-constant signal with exactly `k` jumps.
///
/// Jump positions are drawn uniformly without replacement among the n-1
/// difference slots; piece levels are i.i.d. uniform on [lo, hi], with a
/// level resampled whenever it lands within 1e-9 of its left neighbor, so
/// the gradient support size is exactly `k`.
pub fn sparse_gradient_signal(
    n: usize,
    k: usize,
    seed: SeedSpec,
    lo: f64,
    hi: f64,
) -> Result<Signal> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "need lo < hi, got [{lo}, {hi}]"
        )));
    }
    if k > n - 1 {
        return Err(Error::SparsityTooLarge(format!(
            "k = {k} jumps do not fit in {} difference slots",
            n - 1
        )));
    }
    let mut rng = seed.rng();

    // Floyd's sampling: k distinct difference indices in 0..n-1.
    let mut jumps: Vec<usize> = Vec::with_capacity(k);
    for j in (n - 1 - k)..(n - 1) {
        let t = rng.gen_range(0..=j);
        if jumps.contains(&t) {
            jumps.push(j);
        } else {
            jumps.push(t);
        }
    }
    jumps.sort_unstable();

    let mut levels = Vec::with_capacity(k + 1);
    for i in 0..=k {
        loop {
            let level: f64 = rng.gen_range(lo..hi);
            if i == 0 || (level - levels[i - 1] as f64).abs() >= LEVEL_COLLISION_TOL {
                levels.push(level);
                break;
            }
        }
    }

    let mut values = Vec::with_capacity(n);
    let mut piece = 0usize;
    for i in 0..n {
        values.push(levels[piece]);
        if piece < k && jumps[piece] == i {
            piece += 1;
        }
    }
    Signal::from_vec(values)
}

/// Piecewise-constant image with exactly `k` nonzero gradient entries.
///
/// For k = 0 the image is constant. Otherwise `k` must be even with
/// 4 <= k <= 4 (side - 2): the generator places one strictly interior
/// axis-aligned rectangle whose jump perimeter is exactly `k`.
pub fn sparse_gradient_image(
    side: usize,
    k: usize,
    seed: SeedSpec,
    lo: f64,
    hi: f64,
) -> Result<MultiSignal> {
    if side < 4 {
        return Err(Error::InvalidArgument(format!(
            "need side >= 4, got {side}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "need lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut rng = seed.rng();
    let background: f64 = rng.gen_range(lo..hi);
    let mut flat = vec![background; side * side];
    if k == 0 {
        return MultiSignal::from_flat(side, 2, flat);
    }
    let max_k = 4 * (side - 2);
    if k % 2 != 0 || k < 4 || k > max_k {
        return Err(Error::SparsityTooLarge(format!(
            "image sparsity k = {k} is not an even value in [4, {max_k}] for side {side}"
        )));
    }
    // Interior w x h rectangle contributes 2(w + h) jumps.
    let half = k / 2;
    let w_min = half.saturating_sub(side - 2).max(1);
    let w_max = (half - 1).min(side - 2);
    let w = rng.gen_range(w_min..=w_max);
    let h = half - w;
    let row = rng.gen_range(1..=(side - 1 - h));
    let col = rng.gen_range(1..=(side - 1 - w));
    let patch = loop {
        let level: f64 = rng.gen_range(lo..hi);
        if (level - background).abs() >= LEVEL_COLLISION_TOL {
            break level;
        }
    };
    for r in row..row + h {
        for c in col..col + w {
            flat[r * side + c] = patch;
        }
    }
    MultiSignal::from_flat(side, 2, flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump_count(x: &Signal) -> usize {
        let v = x.as_slice();
        (1..v.len()).filter(|&i| v[i] != v[i - 1]).count()
    }

    #[test]
    fn exact_gradient_sparsity() {
        for trial in 0..200 {
            let seed = SeedSpec::new(100, trial);
            let n = 2 + (trial as usize % 60);
            let k = trial as usize % n;
            let x = sparse_gradient_signal(n, k, seed, -10.0, 10.0).unwrap();
            assert_eq!(jump_count(&x), k, "n = {n}, k = {k}");
        }
    }

    #[test]
    fn sparsity_too_large_rejected() {
        let seed = SeedSpec::new(0, 0);
        assert!(matches!(
            sparse_gradient_signal(8, 8, seed, 0.0, 1.0),
            Err(Error::SparsityTooLarge(_))
        ));
        assert!(sparse_gradient_signal(8, 7, seed, 0.0, 1.0).is_ok());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = sparse_gradient_signal(64, 5, SeedSpec::new(7, 3), -10.0, 10.0).unwrap();
        let b = sparse_gradient_signal(64, 5, SeedSpec::new(7, 3), -10.0, 10.0).unwrap();
        assert_eq!(a, b);
        let c = sparse_gradient_signal(64, 5, SeedSpec::new(7, 4), -10.0, 10.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn image_gradient_sparsity_is_exact() {
        for trial in 0..100 {
            let side = 8 + (trial as usize % 4) * 8;
            let k_max = 4 * (side - 2);
            let k = 4 + 2 * (trial as usize % ((k_max - 4) / 2 + 1)).min((k_max - 4) / 2);
            let img =
                sparse_gradient_image(side, k, SeedSpec::new(55, trial), -10.0, 10.0).unwrap();
            let v = img.values();
            let mut jumps = 0usize;
            for r in 0..side {
                for c in 0..side - 1 {
                    if v[[r, c + 1]] != v[[r, c]] {
                        jumps += 1;
                    }
                }
            }
            for c in 0..side {
                for r in 0..side - 1 {
                    if v[[r + 1, c]] != v[[r, c]] {
                        jumps += 1;
                    }
                }
            }
            assert_eq!(jumps, k, "side = {side}, k = {k}");
        }
    }

    #[test]
    fn image_rejects_odd_or_oversized_k() {
        let seed = SeedSpec::new(1, 1);
        assert!(matches!(
            sparse_gradient_image(8, 5, seed, 0.0, 1.0),
            Err(Error::SparsityTooLarge(_))
        ));
        assert!(matches!(
            sparse_gradient_image(8, 2, seed, 0.0, 1.0),
            Err(Error::SparsityTooLarge(_))
        ));
        assert!(matches!(
            sparse_gradient_image(8, 4 * 6 + 2, seed, 0.0, 1.0),
            Err(Error::SparsityTooLarge(_))
        ));
        assert!(sparse_gradient_image(8, 0, seed, 0.0, 1.0).is_ok());
    }

    #[test]
    fn containers_validate_shape() {
        assert!(Signal::from_vec(vec![1.0]).is_err());
        assert!(Signal::from_vec(vec![1.0, f64::NAN]).is_err());
        assert!(MultiSignal::from_flat(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        let ms = MultiSignal::from_flat(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(ms.total_len(), 4);
        assert_eq!(ms.values()[[1, 0]], 3.0);
    }
}
