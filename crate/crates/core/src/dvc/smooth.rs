use super::field::DisplacementField;
use crate::error::{Error, Result};

/// Index into `[0, n)` under half-sample symmetric reflection (`-1 → 0`, `n → n - 1`).
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Normalized Gaussian weights for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> =
        (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Value at lattice index `i`, continued past either end by point reflection
/// about the end node (`v(-i) = 2 v(0) - v(i)`), which extends linear
/// fields exactly.
fn odd_extension(i: isize, n: usize, value: &impl Fn(usize) -> [f64; 3]) -> [f64; 3] {
    let last = n as isize - 1;
    let (pivot, mirror) = if i < 0 {
        (0, -i)
    } else if i > last {
        (last, 2 * last - i)
    } else {
        return value(i as usize);
    };
    let (p, m) = (value(pivot as usize), value(mirror.clamp(0, last) as usize));
    [2.0 * p[0] - m[0], 2.0 * p[1] - m[1], 2.0 * p[2] - m[2]]
}

/// Separable Gaussian smoothing of each displacement component over the node
/// lattice (sigma in nodes), with point-reflected ends so that affine
/// displacement fields pass through unchanged. Confidence is left untouched.
pub fn smooth_displacement(field: &DisplacementField, sigma: f64) -> Result<DisplacementField> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("smoothing sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let grid = field.grid;
    let mut data = field.vectors.clone();
    for axis in 0..3 {
        let n = grid.dims[axis];
        let mut out = vec![[0.0; 3]; data.len()];
        for (index, slot) in out.iter_mut().enumerate() {
            let c = grid.coords(index);
            let mut acc = [0.0; 3];
            let value = |i: usize| {
                let mut at = c;
                at[axis] = i;
                data[grid.index(at[0], at[1], at[2])]
            };
            for (t, w) in kernel.iter().enumerate() {
                let v = odd_extension(c[axis] as isize + t as isize - radius, n, &value);
                for k in 0..3 {
                    acc[k] += w * v[k];
                }
            }
            *slot = acc;
        }
        data = out;
    }
    DisplacementField::new(grid, data, field.confidence.clone())
}

/// Replaces vectors at nodes with confidence below `min_confidence` by the mean
/// of their already-valid face neighbours, sweeping outward until every node
/// reachable from a confident one is filled. Each sweep reads only values from
/// the previous sweep, so the result does not depend on traversal order.
pub fn fill_low_confidence(field: &DisplacementField, min_confidence: f64) -> DisplacementField {
    let grid = field.grid;
    let mut valid: Vec<bool> = field.confidence.iter().map(|&c| c >= min_confidence).collect();
    let mut vectors = field.vectors.clone();
    for i in 0..vectors.len() {
        if !valid[i] {
            vectors[i] = [0.0; 3];
        }
    }
    if !valid.iter().any(|&v| v) {
        return DisplacementField { grid, vectors, confidence: field.confidence.clone() };
    }
    loop {
        let mut updates = Vec::new();
        for index in 0..vectors.len() {
            if valid[index] {
                continue;
            }
            let c = grid.coords(index);
            let mut acc = [0.0; 3];
            let mut count = 0usize;
            for axis in 0..3 {
                for step in [-1isize, 1] {
                    let pos = c[axis] as isize + step;
                    if pos < 0 || pos as usize >= grid.dims[axis] {
                        continue;
                    }
                    let mut at = c;
                    at[axis] = pos as usize;
                    let j = grid.index(at[0], at[1], at[2]);
                    if valid[j] {
                        for k in 0..3 {
                            acc[k] += vectors[j][k];
                        }
                        count += 1;
                    }
                }
            }
            if count > 0 {
                updates.push((index, acc.map(|a| a / count as f64)));
            }
        }
        if updates.is_empty() {
            break;
        }
        for (index, v) in updates {
            vectors[index] = v;
            valid[index] = true;
        }
    }
    DisplacementField { grid, vectors, confidence: field.confidence.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvc::field::NodeGrid;

    fn grid(dims: [usize; 3]) -> NodeGrid {
        NodeGrid { dims, origin: [0.0; 3], stride: [1; 3] }
    }

    #[test]
    fn reflection() {
        let got: Vec<usize> = (-4..9).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0]);
    }

    #[test]
    fn sigma_zero_is_identity() {
        let f = DisplacementField::from_fn(grid([4, 3, 5]), |p| [p[0] * p[1], p[2], -p[0]]).unwrap();
        assert_eq!(smooth_displacement(&f, 0.0).unwrap(), f);
        assert!(smooth_displacement(&f, -1.0).is_err());
    }

    #[test]
    fn constant_field_unchanged() {
        let f = DisplacementField::from_fn(grid([5, 6, 7]), |_| [0.3, -1.2, 2.5]).unwrap();
        let s = smooth_displacement(&f, 1.3).unwrap();
        for v in &s.vectors {
            assert!((v[0] - 0.3).abs() < 1e-12 && (v[1] + 1.2).abs() < 1e-12 && (v[2] - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn spike_matches_dense_convolution() {
        let g = grid([7, 6, 5]);
        let mut f = DisplacementField::from_fn(g, |_| [0.0; 3]).unwrap();
        let spike = g.index(1, 3, 2);
        f.vectors[spike] = [1.0, -2.0, 0.5];
        let sigma = 1.0;
        let smoothed = smooth_displacement(&f, sigma).unwrap();

        // dense 3D sum over the full kernel cube, each axis extended by
        // point reflection independently
        fn ext(i: isize, n: usize, v: &dyn Fn(usize) -> f64) -> f64 {
            let last = n as isize - 1;
            if i < 0 {
                2.0 * v(0) - v((-i).min(last) as usize)
            } else if i > last {
                2.0 * v(last as usize) - v((2 * last - i).max(0) as usize)
            } else {
                v(i as usize)
            }
        }
        let w = gaussian_kernel(sigma);
        let r = (w.len() / 2) as isize;
        for index in 0..g.len() {
            let c = g.coords(index);
            for m in 0..3 {
                let mut acc = 0.0;
                for a in -r..=r {
                    for b in -r..=r {
                        for d in -r..=r {
                            let weight = w[(a + r) as usize] * w[(b + r) as usize] * w[(d + r) as usize];
                            let value = ext(c[0] as isize + a, 7, &|i| {
                                ext(c[1] as isize + b, 6, &|j| {
                                    ext(c[2] as isize + d, 5, &|k| f.vectors[g.index(i, j, k)][m])
                                })
                            });
                            acc += weight * value;
                        }
                    }
                }
                assert!((acc - smoothed.vectors[index][m]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_field_unchanged() {
        let u = |p: [f64; 3]| [0.1 * p[0] - 0.02 * p[2] + 0.3, 0.05 * p[1], -0.04 * p[0] + 1.0];
        let f = DisplacementField::from_fn(grid([6, 5, 4]), u).unwrap();
        let s = smooth_displacement(&f, 1.0).unwrap();
        for (a, b) in s.vectors.iter().zip(&f.vectors) {
            for m in 0..3 {
                assert!((a[m] - b[m]).abs() < 1e-12, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn fill_interpolates_across_holes() {
        let g = grid([5, 1, 1]);
        let f = DisplacementField::new(
            g,
            vec![[1.0; 3], [9.0; 3], [3.0; 3], [9.0; 3], [9.0; 3]],
            vec![1.0, 0.1, 1.0, 0.0, 0.2],
        )
        .unwrap();
        let filled = fill_low_confidence(&f, 0.3);
        assert_eq!(filled.vectors[1], [2.0; 3]);
        assert_eq!(filled.vectors[3], [3.0; 3]);
        assert_eq!(filled.vectors[4], [3.0; 3]);
        assert_eq!(filled.confidence, f.confidence);
    }
}
