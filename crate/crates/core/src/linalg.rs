//! Small dense vector kernels shared by the census, the predicates and the correctors.
//!
//! Every inner product in the crate goes through [`dot`] so that a value computed
//! while building a predicate (a threshold) is bit-identical to the value computed
//! when that predicate is later evaluated on the same vector.

/// Inner product with four fixed accumulators. The summation order depends only on
/// the length, so `dot(a, b) == dot(b, a)` and repeated calls are bit-identical.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Column means of a row-major `rows x cols` buffer.
pub fn column_means(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut mean = vec![0.0; cols];
    for row in data.chunks_exact(cols) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let inv = 1.0 / rows as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    mean
}

/// Sample covariance (divisor `rows - 1`) of a row-major buffer about `mean`.
/// A single row yields the zero matrix.
pub fn covariance(data: &[f64], rows: usize, cols: usize, mean: &[f64]) -> nalgebra::DMatrix<f64> {
    if rows < 2 {
        return nalgebra::DMatrix::zeros(cols, cols);
    }
    let centered = nalgebra::DMatrix::from_row_iterator(
        rows,
        cols,
        data.chunks_exact(cols)
            .flat_map(|row| row.iter().zip(mean).map(|(v, m)| v - m)),
    );
    let mut cov = centered.tr_mul(&centered);
    let inv = 1.0 / (rows as f64 - 1.0);
    for i in 0..cols {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]) * inv;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] *= inv;
    }
    cov
}
