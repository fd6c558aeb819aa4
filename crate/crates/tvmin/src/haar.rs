//! Dyadic averaging pyramids.
//!
//! Each level splits the running smooth part into a coarser average and a
//! detail band. The decomposition satisfies three identities used
//! throughout the width machinery: a weighted energy identity, an l1 bound
//! on each detail band by half the TV of the previous smooth part, and
//! monotonicity of the smooth-part TV along the pyramid.

use crate::error::{Error, Result};
use crate::operators::DiffOp;
use crate::signal::{MultiSignal, Signal};

/// 1-D pyramid: detail bands z^(l) for l = 1..=L and the final average.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarPyramid {
    n: usize,
    details: Vec<Vec<f64>>,
    coarse: f64,
}

impl HaarPyramid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_levels(&self) -> usize {
        self.details.len()
    }

    /// Detail band at level `level` (1-based), length n / 2^level.
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }

    pub fn coarse(&self) -> f64 {
        self.coarse
    }

    /// Weighted coefficient energy: sum_l 2^l ||z^(l)||_2^2 + 2^L y_L^2.
    /// Equals ||x||_2^2 for the decomposed signal.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for (i, z) in self.details.iter().enumerate() {
            let w = (1u64 << (i + 1)) as f64;
            e += w * z.iter().map(|v| v * v).sum::<f64>();
        }
        let wl = (1u64 << self.details.len()) as f64;
        e + wl * self.coarse * self.coarse
    }
}

fn require_dyadic(n: usize) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::UnsupportedLength(format!(
            "pyramid needs a power-of-two length >= 2, got {n}"
        )));
    }
    Ok(n.trailing_zeros())
}

/// Full pyramid of a power-of-two length signal.
pub fn haar_decompose_1d(x: &Signal) -> Result<HaarPyramid> {
    let n = x.len();
    let levels = require_dyadic(n)?;
    let mut cur: Vec<f64> = x.as_slice().to_vec();
    let mut details = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        let half = cur.len() / 2;
        let mut avg = vec![0.0; half];
        let mut det = vec![0.0; half];
        for i in 0..half {
            avg[i] = (cur[2 * i] + cur[2 * i + 1]) / 2.0;
            det[i] = (cur[2 * i] - cur[2 * i + 1]) / 2.0;
        }
        details.push(det);
        cur = avg;
    }
    Ok(HaarPyramid {
        n,
        details,
        coarse: cur[0],
    })
}

/// Exact inverse of [`haar_decompose_1d`].
pub fn haar_reconstruct_1d(p: &HaarPyramid) -> Signal {
    let mut cur = vec![p.coarse];
    for level in (1..=p.num_levels()).rev() {
        let det = p.detail(level);
        let mut next = vec![0.0; cur.len() * 2];
        for i in 0..cur.len() {
            next[2 * i] = cur[i] + det[i];
            next[2 * i + 1] = cur[i] - det[i];
        }
        cur = next;
    }
    Signal::from_vec(cur).expect("reconstruction length matches input")
}

/// TV of the smooth part at every level, from the signal itself (level 0)
/// down to the final average (TV zero). Non-increasing along the pyramid.
pub fn coarse_path_tv(x: &Signal) -> Result<Vec<f64>> {
    let levels = require_dyadic(x.len())?;
    let mut cur: Vec<f64> = x.as_slice().to_vec();
    let mut path = Vec::with_capacity(levels as usize + 1);
    path.push(tv_of(&cur));
    for _ in 0..levels {
        let half = cur.len() / 2;
        let mut avg = vec![0.0; half];
        for i in 0..half {
            avg[i] = (cur[2 * i] + cur[2 * i + 1]) / 2.0;
        }
        path.push(tv_of(&avg));
        cur = avg;
    }
    Ok(path)
}

fn tv_of(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// d-dimensional pyramid: per level, one detail array per orientation.
///
/// Orientations are the nonzero 0/1 vectors (i_1, ..., i_d); entry i_a = 1
/// means the band differences along axis a. They are stored in
/// lexicographic order of the tuple, with axis 1 the fastest-varying
/// (within-row) direction of the underlying signal.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarPyramidND {
    side: usize,
    dims: usize,
    details: Vec<Vec<Vec<f64>>>,
    coarse: f64,
}

impl HaarPyramidND {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_levels(&self) -> usize {
        self.details.len()
    }

    pub fn num_orientations(&self) -> usize {
        (1 << self.dims) - 1
    }

    /// Detail array for `level` (1-based) and orientation index `o`
    /// (lexicographic), flat row-major with side side / 2^level.
    pub fn detail(&self, level: usize, o: usize) -> &[f64] {
        &self.details[level - 1][o]
    }

    pub fn coarse(&self) -> f64 {
        self.coarse
    }

    /// Weighted coefficient energy:
    /// sum_l 2^(d l) sum_i ||Z^(l,i)||_2^2 + 2^(d L) Y_L^2.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for (i, bands) in self.details.iter().enumerate() {
            let w = 2f64.powi((self.dims * (i + 1)) as i32);
            for z in bands {
                e += w * z.iter().map(|v| v * v).sum::<f64>();
            }
        }
        let wl = 2f64.powi((self.dims * self.details.len()) as i32);
        e + wl * self.coarse * self.coarse
    }
}

/// Orientation tuple (i_1, ..., i_d) for lexicographic index `o`.
pub fn orientation_tuple(dims: usize, o: usize) -> Vec<u8> {
    let t = o + 1;
    (1..=dims).map(|a| ((t >> (dims - a)) & 1) as u8).collect()
}

/// Full pyramid of a cubic signal with power-of-two side.
pub fn haar_decompose_nd(x: &MultiSignal) -> Result<HaarPyramidND> {
    let side = x.side();
    let dims = x.dims();
    let levels = require_dyadic(side)?;
    let fan = 1usize << dims;
    let mut cur: Vec<f64> = x.as_slice().to_vec();
    let mut cur_side = side;
    let mut details = Vec::with_capacity(levels as usize);
    // Strides of axis a in the flat layout: side^(a-1), axis 1 fastest.
    while cur_side > 1 {
        let half = cur_side / 2;
        let cells = half.pow(dims as u32);
        let mut avg = vec![0.0; cells];
        let mut bands = vec![vec![0.0; cells]; fan - 1];
        let inv = 1.0 / fan as f64;
        let mut child_strides = vec![0usize; dims];
        let mut vals = vec![0.0f64; fan];
        for cell in 0..cells {
            // Decode coarse coords, axis 1 fastest.
            let mut rem = cell;
            let mut base = 0usize;
            let mut stride = 1usize;
            for cs in child_strides.iter_mut() {
                let coord = rem % half;
                rem /= half;
                base += 2 * coord * stride;
                *cs = stride;
                stride *= cur_side;
            }
            for (j, slot) in vals.iter_mut().enumerate() {
                let mut idx = base;
                for (a, cs) in child_strides.iter().enumerate() {
                    // Axis a+1 (one-based) sits at bit position dims - 1 - a.
                    if (j >> (dims - 1 - a)) & 1 == 1 {
                        idx += cs;
                    }
                }
                *slot = cur[idx];
            }
            let mut y = 0.0;
            for &v in &vals {
                y += v;
            }
            avg[cell] = y * inv;
            for t in 1..fan {
                let mut z = 0.0;
                for (j, &v) in vals.iter().enumerate() {
                    if (t & j).count_ones() % 2 == 0 {
                        z += v;
                    } else {
                        z -= v;
                    }
                }
                bands[t - 1][cell] = z * inv;
            }
        }
        details.push(bands);
        cur = avg;
        cur_side = half;
    }
    Ok(HaarPyramidND {
        side,
        dims,
        details,
        coarse: cur[0],
    })
}

/// Exact inverse of [`haar_decompose_nd`].
pub fn haar_reconstruct_nd(p: &HaarPyramidND) -> MultiSignal {
    let mut cur = vec![p.coarse];
    let mut cur_side = 1usize;
    let dims = p.dims;
    let fan = 1usize << dims;
    for level in (1..=p.num_levels()).rev() {
        let next_side = cur_side * 2;
        let cells = cur_side.pow(dims as u32);
        let mut next = vec![0.0; next_side.pow(dims as u32)];
        let mut child_strides = vec![0usize; dims];
        for cell in 0..cells {
            let mut rem = cell;
            let mut base = 0usize;
            let mut stride = 1usize;
            for cs in child_strides.iter_mut() {
                let coord = rem % cur_side;
                rem /= cur_side.max(1);
                base += 2 * coord * stride;
                *cs = stride;
                stride *= next_side;
            }
            for j in 0..fan {
                let mut idx = base;
                for (a, cs) in child_strides.iter().enumerate() {
                    if (j >> (dims - 1 - a)) & 1 == 1 {
                        idx += cs;
                    }
                }
                let mut v = cur[cell];
                for t in 1..fan {
                    let z = p.details[level - 1][t - 1][cell];
                    if (t & j).count_ones() % 2 == 0 {
                        v += z;
                    } else {
                        v -= z;
                    }
                }
                next[idx] = v;
            }
        }
        cur = next;
        cur_side = next_side;
    }
    MultiSignal::from_flat(p.side, dims, cur).expect("reconstruction matches input shape")
}

/// Per-axis TV of the block-upsampled smooth part at every level.
///
/// Entry [l][a-1] is the axis-a TV of the smooth part of level l expanded
/// back to full size by block repetition. Each axis sequence is
/// non-increasing in l.
pub fn coarse_path_tv_nd(x: &MultiSignal) -> Result<Vec<Vec<f64>>> {
    let side = x.side();
    let dims = x.dims();
    let levels = require_dyadic(side)?;
    let full = DiffOp::MultiD { side, dims };
    let mut grad = vec![0.0; full.range()];
    let block = (side - 1) * side.pow((dims - 1) as u32);

    let mut path = Vec::with_capacity(levels as usize + 1);
    let mut cur: Vec<f64> = x.as_slice().to_vec();
    let mut cur_side = side;
    loop {
        // Upsample the current smooth part to full size by block repetition.
        let factor = side / cur_side;
        let mut up = vec![0.0; side.pow(dims as u32)];
        for (flat, slot) in up.iter_mut().enumerate() {
            let mut rem = flat;
            let mut coarse_idx = 0usize;
            let mut stride = 1usize;
            for _ in 0..dims {
                let coord = rem % side;
                rem /= side;
                coarse_idx += (coord / factor) * stride;
                stride *= cur_side;
            }
            *slot = cur[coarse_idx];
        }
        full.apply(&up, &mut grad);
        let per_axis: Vec<f64> = (0..dims)
            .map(|a| {
                grad[a * block..(a + 1) * block]
                    .iter()
                    .map(|v| v.abs())
                    .sum()
            })
            .collect();
        path.push(per_axis);
        if cur_side == 1 {
            break;
        }
        // One averaging step.
        let half = cur_side / 2;
        let cells = half.pow(dims as u32);
        let fan = 1usize << dims;
        let inv = 1.0 / fan as f64;
        let mut avg = vec![0.0; cells];
        let mut child_strides = vec![0usize; dims];
        for cell in 0..cells {
            let mut rem = cell;
            let mut base = 0usize;
            let mut stride = 1usize;
            for cs in child_strides.iter_mut() {
                let coord = rem % half;
                rem /= half;
                base += 2 * coord * stride;
                *cs = stride;
                stride *= cur_side;
            }
            let mut y = 0.0;
            for j in 0..fan {
                let mut idx = base;
                for (a, cs) in child_strides.iter().enumerate() {
                    if (j >> (dims - 1 - a)) & 1 == 1 {
                        idx += cs;
                    }
                }
                y += cur[idx];
            }
            avg[cell] = y * inv;
        }
        cur = avg;
        cur_side = half;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{diff_1d, tv_norm};
    use crate::seed::SeedSpec;
    use rand::Rng;

    #[test]
    fn worked_example_3122() {
        let x = Signal::from_vec(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let p = haar_decompose_1d(&x).unwrap();
        assert_eq!(p.detail(1), &[1.0, 0.0]);
        assert_eq!(p.detail(2), &[0.0]);
        assert_eq!(p.coarse(), 2.0);
        assert!((p.energy() - 18.0).abs() < 1e-14);
        let back = haar_reconstruct_1d(&p);
        assert_eq!(back.as_slice(), x.as_slice());
        assert_eq!(coarse_path_tv(&x).unwrap(), vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn alternating_signal_detail() {
        let x = Signal::from_vec(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let p = haar_decompose_1d(&x).unwrap();
        assert_eq!(p.detail(1), &[1.0, 1.0]);
        assert_eq!(p.detail(2), &[0.0]);
        assert_eq!(p.coarse(), 0.0);
    }

    #[test]
    fn non_dyadic_lengths_rejected() {
        for n in [3usize, 6, 12, 100] {
            let x = Signal::from_vec(vec![0.5; n]).unwrap();
            assert!(matches!(
                haar_decompose_1d(&x),
                Err(Error::UnsupportedLength(_))
            ));
        }
    }

    #[test]
    fn pyramid_identities_random_1d() {
        let mut rng = SeedSpec::new(21, 0).rng();
        for n in [8usize, 64] {
            for _ in 0..50 {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let x = Signal::from_vec(v).unwrap();
                let p = haar_decompose_1d(&x).unwrap();
                let norm2: f64 = x.as_slice().iter().map(|v| v * v).sum();
                assert!((p.energy() - norm2).abs() <= 1e-10 * norm2.max(1.0));
                let back = haar_reconstruct_1d(&p);
                let err: f64 = back
                    .as_slice()
                    .iter()
                    .zip(x.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(err <= 1e-10 * norm2.sqrt().max(1.0));

                // Detail l1 is at most half the TV of the previous smooth part,
                // and the detail l2 embeds into l1 with the length factor.
                let path = coarse_path_tv(&x).unwrap();
                for level in 1..=p.num_levels() {
                    let z = p.detail(level);
                    let l1: f64 = z.iter().map(|v| v.abs()).sum();
                    assert!(l1 <= path[level - 1] / 2.0 + 1e-12);
                    let l2: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!(l1 <= (z.len() as f64).sqrt() * l2 + 1e-12);
                }
                for w in path.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn detail_l1_bounded_for_sparse_gradients() {
        // K jumps of height <= 2 give ||z^(l)||_1 <= 2 sqrt(K) after
        // normalizing the signal to unit norm... kept in raw form here:
        // the detail l1 is at most half the signal TV at every level.
        let mut rng = SeedSpec::new(22, 0).rng();
        for _ in 0..50 {
            let k = 1 + rng.gen_range(0..6) as usize;
            let x = crate::signal::sparse_gradient_signal(
                64,
                k,
                SeedSpec::new(23, rng.gen()),
                -2.0,
                2.0,
            )
            .unwrap();
            let tv = tv_norm(&diff_1d(&x));
            let p = haar_decompose_1d(&x).unwrap();
            for level in 1..=p.num_levels() {
                let l1: f64 = p.detail(level).iter().map(|v| v.abs()).sum();
                assert!(l1 <= tv / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn worked_example_2x2() {
        let img = MultiSignal::from_flat(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = haar_decompose_nd(&img).unwrap();
        assert_eq!(p.num_levels(), 1);
        assert_eq!(p.num_orientations(), 3);
        assert_eq!(orientation_tuple(2, 0), vec![0, 1]);
        assert_eq!(orientation_tuple(2, 1), vec![1, 0]);
        assert_eq!(orientation_tuple(2, 2), vec![1, 1]);
        // (0,1) differences along axis 2 (across rows), (1,0) along axis 1.
        assert_eq!(p.detail(1, 1), &[-0.5]);
        assert_eq!(p.detail(1, 0), &[-1.0]);
        assert_eq!(p.detail(1, 2), &[0.0]);
        assert_eq!(p.coarse(), 2.5);
        let norm2 = 1.0 + 4.0 + 9.0 + 16.0;
        assert!((p.energy() - norm2).abs() < 1e-14);
        let back = haar_reconstruct_nd(&p);
        assert_eq!(back.as_slice(), img.as_slice());
    }

    #[test]
    fn pyramid_identities_random_nd() {
        let mut rng = SeedSpec::new(24, 0).rng();
        for &(side, dims) in &[(8usize, 2usize), (4, 3)] {
            for _ in 0..30 {
                let total = side.pow(dims as u32);
                let v: Vec<f64> = (0..total).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let img = MultiSignal::from_flat(side, dims, v).unwrap();
                let p = haar_decompose_nd(&img).unwrap();
                let norm2: f64 = img.as_slice().iter().map(|v| v * v).sum();
                assert!((p.energy() - norm2).abs() <= 1e-10 * norm2.max(1.0));
                let back = haar_reconstruct_nd(&p);
                let err: f64 = back
                    .as_slice()
                    .iter()
                    .zip(img.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(err <= 1e-10 * norm2.sqrt().max(1.0));

                let path = coarse_path_tv_nd(&img).unwrap();
                assert_eq!(path.len(), p.num_levels() + 1);
                for a in 0..dims {
                    for l in 1..path.len() {
                        assert!(
                            path[l][a] <= path[l - 1][a] + 1e-10,
                            "axis {a} level {l}: {} > {}",
                            path[l][a],
                            path[l - 1][a]
                        );
                    }
                }
            }
        }
    }
}
