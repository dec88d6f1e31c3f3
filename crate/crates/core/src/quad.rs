//! One-dimensional quadrature rules and summation helpers.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Simpson weights (without the `dt` factor) for `len` equispaced samples.
///
/// For an even number of intervals this is the classic 1-4-2-…-4-1 pattern / 3.
/// With an odd number of intervals the last three intervals use the 3/8 rule.
pub fn simpson_weights(len: usize) -> Vec<f64> {
    let mut w = vec![0.0; len];
    match len {
        0 => return w,
        1 => return w,
        2 => {
            w[0] = 0.5;
            w[1] = 0.5;
            return w;
        }
        3 => {
            w[0] = 1.0 / 3.0;
            w[1] = 4.0 / 3.0;
            w[2] = 1.0 / 3.0;
            return w;
        }
        _ => {}
    }
    let intervals = len - 1;
    let simpson_end = if intervals % 2 == 0 { len - 1 } else { len - 4 };
    for (i, wi) in w.iter_mut().enumerate().take(simpson_end + 1) {
        *wi = if i == 0 || i == simpson_end {
            1.0 / 3.0
        } else if i % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        };
    }
    if simpson_end < len - 1 {
        let s = simpson_end;
        w[s] += 3.0 / 8.0;
        w[s + 1] += 9.0 / 8.0;
        w[s + 2] += 9.0 / 8.0;
        w[s + 3] += 3.0 / 8.0;
    }
    w
}

/// Pairwise (cascade) summation; result is independent of thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Chebyshev points of the first kind mapped onto (a, b), ascending.
pub fn chebyshev_points(count: usize, a: f64, b: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..count)
        .map(|k| {
            let theta = PI * (2.0 * k as f64 + 1.0) / (2.0 * count as f64);
            0.5 * (a + b) - 0.5 * (b - a) * theta.cos()
        })
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts
}
