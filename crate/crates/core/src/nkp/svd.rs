//! One-sided Jacobi SVD for small dense matrices.

/// Thin SVD `A = U diag(s) Vᵀ` of a `rows × cols` column-major matrix.
/// `u` is `rows × k`, `v` is `cols × k` (both column-major), `k = min(rows, cols)`,
/// and `s` is sorted in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub rows: usize,
    pub cols: usize,
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn left(&self, i: usize) -> &[f64] {
        &self.u[i * self.rows..(i + 1) * self.rows]
    }

    pub fn right(&self, i: usize) -> &[f64] {
        &self.v[i * self.cols..(i + 1) * self.cols]
    }
}

const MAX_SWEEPS: usize = 100;

/// Hestenes one-sided Jacobi: orthogonalize the columns of the tall
/// orientation of `a`, reading singular values off the column norms.
pub fn svd(a: &[f64], rows: usize, cols: usize) -> Svd {
    assert_eq!(a.len(), rows * cols);
    if rows >= cols {
        tall_svd(a.to_vec(), rows, cols)
    } else {
        // Work on Aᵀ, then swap the roles of U and V.
        let mut t = vec![0.0; rows * cols];
        for c in 0..cols {
            for r in 0..rows {
                t[r * cols + c] = a[c * rows + r];
            }
        }
        let s = tall_svd(t, cols, rows);
        Svd {
            rows,
            cols,
            u: s.v,
            s: s.s,
            v: s.u,
        }
    }
}

fn tall_svd(mut w: Vec<f64>, rows: usize, cols: usize) -> Svd {
    let mut v = vec![0.0; cols * cols];
    for i in 0..cols {
        v[i * cols + i] = 1.0;
    }
    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let x = w[p * rows + r];
                    let y = w[q * rows + r];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                // signum(0.0) == 1.0, so zeta == 0 gives a 45° rotation.
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let x = w[p * rows + r];
                    let y = w[q * rows + r];
                    w[p * rows + r] = c * x - s * y;
                    w[q * rows + r] = s * x + c * y;
                }
                for r in 0..cols {
                    let x = v[p * cols + r];
                    let y = v[q * cols + r];
                    v[p * cols + r] = c * x - s * y;
                    v[q * cols + r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols)
        .map(|i| w[i * rows..(i + 1) * rows].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    // Stable sort keeps the algorithm's order for ties.
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = Vec::with_capacity(rows * cols);
    let mut vv = Vec::with_capacity(cols * cols);
    let mut s = Vec::with_capacity(cols);
    for &i in &order {
        let sigma = norms[i];
        let col = &w[i * rows..(i + 1) * rows];
        if sigma > 0.0 {
            u.extend(col.iter().map(|x| x / sigma));
        } else {
            u.extend(std::iter::repeat_n(0.0, rows));
        }
        vv.extend_from_slice(&v[i * cols..(i + 1) * cols]);
        s.push(sigma);
    }
    Svd {
        rows,
        cols,
        u,
        s,
        v: vv,
    }
}
