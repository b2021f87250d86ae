//! Small dense kernels over row-major slices.
//!
//! Everything here uses a fixed summation order, so results are identical
//! across runs, platforms, and thread counts. The dot kernel keeps four
//! independent accumulators to break the add latency chain without
//! reassociating sums between runs.

/// y += W x, W row-major (rows x cols).
pub fn matvec_add(w: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for i in 0..rows {
        y[i] += dot(&w[i * cols..(i + 1) * cols], x);
    }
}

/// y += W^T v, W row-major (rows x cols), v of length rows, y of length cols.
pub fn matvec_transpose_add(w: &[f64], rows: usize, cols: usize, v: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(v.len(), rows);
    debug_assert_eq!(y.len(), cols);
    for i in 0..rows {
        axpy(v[i], &w[i * cols..(i + 1) * cols], y);
    }
}

/// W += v x^T (outer product), W row-major (v.len() x x.len()).
pub fn outer_add(w: &mut [f64], v: &[f64], x: &[f64]) {
    debug_assert_eq!(w.len(), v.len() * x.len());
    let cols = x.len();
    for (i, &vi) in v.iter().enumerate() {
        axpy(vi, x, &mut w[i * cols..(i + 1) * cols]);
    }
}

/// y += a * x.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut j = 0;
    while j < chunks {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
        j += 4;
    }
    let mut s = (s0 + s1) + (s2 + s3);
    while j < n {
        s += a[j] * b[j];
        j += 1;
    }
    s
}
