//! Dense symmetric linear algebra for the statistical tests: Cholesky
//! factorization with ridge escalation, diagonally pivoted low-rank Cholesky,
//! a cyclic Jacobi eigensolver for small normal matrices, and kernel-matrix
//! helpers (pairwise distances, RBF/polynomial grams, double centering).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Pairwise squared Euclidean distances between rows of `x`.
pub(crate) fn sq_dist_matrix(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let g = x.dot(&x.t());
    let n = x.nrows();
    let mut d2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0);
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    d2
}

/// RBF bandwidth from the median of the off-diagonal squared distances:
/// `gamma = 1 / (2 * median)`. Zero-heavy samples fall back to the smallest
/// positive distance; all-identical samples are degenerate.
pub(crate) fn median_heuristic_gamma(d2: &Array2<f64>) -> Result<f64> {
    let n = d2.nrows();
    let mut off: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            off.push(d2[(i, j)]);
        }
    }
    if off.is_empty() {
        return Err(Error::InvalidParameter("need at least two samples for a bandwidth".into()));
    }
    off.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let mut median = off[off.len() / 2];
    if median <= 0.0 {
        match off.iter().copied().find(|&v| v > 0.0) {
            Some(v) => median = v,
            None => {
                return Err(Error::DegenerateData(
                    "all samples identical; kernel bandwidth undefined".into(),
                ))
            }
        }
    }
    Ok(1.0 / (2.0 * median))
}

pub(crate) fn rbf_kernel(d2: &Array2<f64>, gamma: f64) -> Array2<f64> {
    d2.mapv(|v| (-gamma * v).exp())
}

/// `(scale * <u, v> + coef0)^degree` over rows of `x`.
pub(crate) fn polynomial_kernel(
    x: ArrayView2<'_, f64>,
    degree: u32,
    coef0: f64,
    scale: f64,
) -> Array2<f64> {
    let mut k = x.dot(&x.t());
    k.mapv_inplace(|v| (scale * v + coef0).powi(degree as i32));
    k
}

/// Double centering `H K H` with `H = I - 11'/n`, in place.
pub(crate) fn center_gram(k: &mut Array2<f64>) {
    let n = k.nrows() as f64;
    let row_means: Array1<f64> = k.mean_axis(Axis(1)).expect("non-empty");
    let col_means: Array1<f64> = k.mean_axis(Axis(0)).expect("non-empty");
    let total = row_means.sum() / n;
    for ((i, j), v) in k.indexed_iter_mut() {
        *v += total - row_means[i] - col_means[j];
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite (pivot {diag:.3e} at column {j})"
            )));
        }
        let d = diag.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(l)
}

/// Solves `L L' X = B` for every column of `B` given the lower factor `L`.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for mut col in x.columns_mut() {
        // Forward: L w = b.
        for i in 0..n {
            let mut v = col[i];
            for k in 0..i {
                v -= l[(i, k)] * col[k];
            }
            col[i] = v / l[(i, i)];
        }
        // Backward: L' x = w.
        for i in (0..n).rev() {
            let mut v = col[i];
            for k in (i + 1)..n {
                v -= l[(k, i)] * col[k];
            }
            col[i] = v / l[(i, i)];
        }
    }
    x
}

/// Cholesky of `A + ridge I`, escalating the ridge tenfold up to
/// `max_escalations` extra attempts before giving up.
pub(crate) fn cholesky_with_ridge(
    a: &Array2<f64>,
    ridge: f64,
    max_escalations: usize,
) -> Result<(Array2<f64>, f64)> {
    let mut lambda = ridge;
    for attempt in 0..=max_escalations {
        let mut shifted = a.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += lambda;
        }
        match cholesky(&shifted) {
            Ok(l) => return Ok((l, lambda)),
            Err(_) if attempt < max_escalations => lambda *= 10.0,
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on the final attempt")
}

/// Diagonally pivoted incomplete Cholesky of a PSD matrix: returns `L`
/// (`n x r`) with `L L' ~ A`, stopping once the residual trace drops below
/// `tol_rel` of the original or the rank hits `max_rank`.
pub(crate) fn pivoted_cholesky(a: &Array2<f64>, tol_rel: f64, max_rank: usize) -> Array2<f64> {
    let n = a.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let trace0: f64 = diag.iter().sum();
    let mut perm: Vec<usize> = (0..n).collect();
    let max_rank = max_rank.min(n);
    let mut l = Array2::zeros((n, max_rank));
    let mut rank = 0;

    while rank < max_rank {
        let (offset, &best) = perm[rank..]
            .iter()
            .enumerate()
            .max_by(|a, b| diag[*a.1].partial_cmp(&diag[*b.1]).expect("finite diagonal"))
            .expect("pivot candidates remain");
        if diag[best] <= tol_rel * trace0 || diag[best] <= 0.0 {
            break;
        }
        perm.swap(rank, rank + offset);
        let p = perm[rank];
        let root = diag[p].sqrt();
        l[(p, rank)] = root;
        for &q in &perm[rank + 1..] {
            let mut v = a[(q, p)];
            for k in 0..rank {
                v -= l[(q, k)] * l[(p, k)];
            }
            let v = v / root;
            l[(q, rank)] = v;
            diag[q] -= v * v;
        }
        rank += 1;
    }
    l.slice_axis(Axis(1), ndarray::Slice::from(0..rank)).to_owned()
}

/// Eigenvalues and orthonormal eigenvectors (columns) of a small symmetric
/// matrix via cyclic Jacobi rotations.
pub(crate) fn jacobi_eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::eye(n);
    if n <= 1 {
        return Ok((m.diag().to_owned(), v));
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * norm;
    for _sweep in 0..64 {
        let off = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)] * m[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            return Ok((m.diag().to_owned(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numerical("eigendecomposition did not converge".into()))
}

/// Column z-scoring in place; errors on a constant column.
pub(crate) fn zscore_columns(x: &mut Array2<f64>) -> Result<()> {
    let n = x.nrows() as f64;
    for mut col in x.columns_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var <= f64::EPSILON * f64::EPSILON || !var.is_finite() {
            return Err(Error::DegenerateData("constant column in test input".into()));
        }
        let sd = var.sqrt();
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(())
}

pub(crate) fn as_column(x: ArrayView1<'_, f64>) -> Array2<f64> {
    x.to_owned().insert_axis(Axis(1))
}
