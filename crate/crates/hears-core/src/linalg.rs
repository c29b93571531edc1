//! Tiny dense helpers for the low-dimensional matrices used across the crate.

/// Smallest eigenvalue of a small symmetric matrix via shifted power iteration.
pub fn min_eigenvalue_symmetric(m: &[f64], d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    if d == 1 {
        return m[0];
    }
    let mut shift: f64 = 0.0;
    for i in 0..d {
        let row_sum: f64 = (0..d).map(|j| m[i * d + j].abs()).sum();
        shift = shift.max(row_sum);
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    // deterministic tie-breaker so the iteration cannot start orthogonal
    v[0] += 1e-3;
    let mut eig = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0; d];
        for i in 0..d {
            let mut acc = shift * v[i];
            for j in 0..d {
                acc -= m[i * d + j] * v[j];
            }
            w[i] = acc;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return shift;
        }
        for i in 0..d {
            v[i] = w[i] / norm;
        }
        eig = norm;
    }
    shift - eig
}

/// Dense matrix-vector product for row-major `m` of shape `rows x cols`.
pub fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..rows {
        let mut acc = 0.0;
        for j in 0..cols {
            acc += m[i * cols + j] * x[j];
        }
        out[i] = acc;
    }
}

/// Spectral radius of a 2x2 matrix (exact eigenvalues).
pub fn spectral_radius_2x2(m: &[f64; 4]) -> f64 {
    let tr = m[0] + m[3];
    let det = m[0] * m[3] - m[1] * m[2];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        (tr / 2.0 + root).abs().max((tr / 2.0 - root).abs())
    } else {
        // complex pair: |lambda| = sqrt(det)
        det.abs().sqrt()
    }
}

/// Matrix exponential of a small row-major `d x d` matrix by scaling and
/// squaring with a truncated Taylor series.
pub fn expm(a: &[f64], d: usize) -> Vec<f64> {
    let norm: f64 = a.iter().map(|x| x.abs()).sum();
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scale = 0.5f64.powi(squarings as i32);
    let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();

    let mut result = identity(d);
    let mut term = identity(d);
    for k in 1..=16 {
        term = matmul(&term, &scaled, d);
        for t in term.iter_mut() {
            *t /= k as f64;
        }
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, d);
    }
    result
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

pub fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

/// General row-major product: `a` is `n x m`, `b` is `m x k`.
pub fn matmul_general(a: &[f64], b: &[f64], n: usize, m: usize, k: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * k];
    for i in 0..n {
        for l in 0..m {
            let ail = a[i * m + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..k {
                c[i * k + j] += ail * b[l * k + j];
            }
        }
    }
    c
}

/// Solves `a x = b` in place for a small dense system (partial pivoting).
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[pivot * n + col].abs() {
                pivot = r;
            }
        }
        if a[pivot * n + col].abs() < 1e-14 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / diag;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }
    Some(x)
}
