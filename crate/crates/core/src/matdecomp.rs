//! Dense complex factorizations used by the design pipeline.
//!
//! Everything here operates on [`CMatrix`] (a dynamically sized
//! `nalgebra` matrix of `Complex64`). Hermitian routines symmetrize
//! their input first so round-off from upstream products is absorbed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Inputs further than this from Hermitian (relative Frobenius) are rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative pivot / singular-value floor for definiteness and rank checks.
pub const RANK_FLOOR: f64 = 1e-12;

/// Spectral decomposition `A = U diag(λ) U^H`, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigResult {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let lambda = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        &self.eigenvectors * lambda * self.eigenvectors.adjoint()
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn check_finite(a: &CMatrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn require_square(a: &CMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

fn symmetrized(a: &CMatrix, what: &str) -> Result<CMatrix> {
    require_square(a, what)?;
    check_finite(a)?;
    let h = hermitian_part(a);
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    let skew = frobenius(&(a - &h));
    if skew > HERMITIAN_TOL * scale {
        return Err(Error::Domain(format!(
            "{what} input is not Hermitian (skew part {skew:e})"
        )));
    }
    Ok(h)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// descending; ties keep their original index order.
pub fn hermitian_eig(a: &CMatrix) -> Result<EigResult> {
    let h = symmetrized(a, "hermitian_eig")?;
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Lower Cholesky factor `A = L L^H` with a real positive diagonal.
///
/// Fails with the 1-based index of the first leading minor whose pivot
/// drops below `RANK_FLOOR` times the largest diagonal entry.
pub fn cholesky_lower(a: &CMatrix) -> Result<CMatrix> {
    let h = symmetrized(a, "cholesky_lower")?;
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].re.abs()).fold(0.0, f64::max);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = h[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > RANK_FLOOR * scale) {
            return Err(Error::NotPositiveDefinite {
                minor: j + 1,
                pivot,
            });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = c(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Thin Householder QR with the phases of `R`'s diagonal moved into `Q`
/// so that `R_ii > 0`.
pub fn qr_positive(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::Dimension(format!(
            "qr_positive needs rows >= cols, got {m}x{n}"
        )));
    }
    let mut r = a.clone();
    let mut q_full = identity(m);
    for k in 0..n {
        let norm_x = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { c(1.0, 0.0) };
        let alpha = -phase * norm_x;
        let mut v: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- (I - 2 v v^H / v^H v) R on rows k.., Q <- Q (I - 2 v v^H / v^H v)
        for j in k..n {
            let dot: Complex64 = (k..m).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            let f = dot * (2.0 / vnorm2);
            for i in k..m {
                r[(i, j)] -= v[i - k] * f;
            }
        }
        for i in 0..m {
            let dot: Complex64 = (k..m).map(|t| q_full[(i, t)] * v[t - k]).sum();
            let f = dot * (2.0 / vnorm2);
            for t in k..m {
                q_full[(i, t)] -= f * v[t - k].conj();
            }
        }
        for i in (k + 1)..m {
            r[(i, k)] = c(0.0, 0.0);
        }
    }
    let mut q = q_full.columns(0, n).into_owned();
    let mut r = r.rows(0, n).into_owned();
    let dmax = (0..n).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let dmin = (0..n).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if n > 0 && !(dmin > RANK_FLOOR * dmax) {
        return Err(Error::RankDeficient {
            ratio: if dmax > 0.0 { dmin / dmax } else { 0.0 },
        });
    }
    for i in 0..n {
        let d = r[(i, i)];
        let ph = d / d.norm();
        for j in i..n {
            r[(i, j)] *= ph.conj();
        }
        for row in 0..m {
            q[(row, i)] *= ph;
        }
        r[(i, i)] = c(r[(i, i)].re, 0.0);
    }
    Ok((q, r))
}

/// Singular value decomposition `A = U diag(s) W^H` with `s` descending.
/// Returns `(U, s, W)`.
pub fn svd_sorted(a: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    check_finite(a)?;
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let w = svd.v_t.expect("right singular vectors requested").adjoint();
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = CMatrix::from_fn(u.nrows(), k, |r, col| u[(r, order[col])]);
    let w = CMatrix::from_fn(w.nrows(), k, |r, col| w[(r, order[col])]);
    Ok((u, s, w))
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    svd_sorted(a).map(|(_, s, _)| s)
}

/// Unitary `V` such that the positive-diagonal QR factor of `A V` has
/// every diagonal entry equal to `|det A|^{1/K}`.
///
/// Starts from the SVD `A = U Σ W^H` and walks the diagonal once: at step
/// `k` one singular value above the geometric mean is paired with one
/// below it and a 2x2 rotation on the right (plus one on the left, which
/// is absorbed into `Q`) sets the leading entry to the geometric mean.
pub fn gmd_rotation(a: &CMatrix) -> Result<CMatrix> {
    require_square(a, "gmd_rotation")?;
    let n = a.nrows();
    let (_, sigma, w) = svd_sorted(a)?;
    if n == 0 {
        return Ok(identity(0));
    }
    if !(sigma[n - 1] > RANK_FLOOR * sigma[0]) {
        return Err(Error::RankDeficient {
            ratio: if sigma[0] > 0.0 { sigma[n - 1] / sigma[0] } else { 0.0 },
        });
    }
    let target = (sigma.iter().map(|s| s.ln()).sum::<f64>() / n as f64).exp();

    let mut r = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(sigma));
    let mut v = w;

    for k in 0..n.saturating_sub(1) {
        let dk = r[(k, k)];
        let partner = if dk >= target {
            (k + 1..n).find(|&p| r[(p, p)] <= target)
        } else {
            (k + 1..n).find(|&p| r[(p, p)] >= target)
        };
        // Round-off can leave every remaining entry on one side of the mean;
        // then the closest one is the right partner.
        let p = partner.unwrap_or_else(|| {
            (k + 1..n)
                .min_by(|&i, &j| {
                    (r[(i, i)] - target)
                        .abs()
                        .total_cmp(&(r[(j, j)] - target).abs())
                })
                .expect("k + 1 < n")
        });
        if p != k + 1 {
            r.swap_columns(k + 1, p);
            r.swap_rows(k + 1, p);
            v.swap_columns(k + 1, p);
        }

        let d1 = r[(k, k)];
        let d2 = r[(k + 1, k + 1)];
        let denom = d1 * d1 - d2 * d2;
        let cos = if denom.abs() <= f64::EPSILON * d1 * d1 {
            1.0
        } else {
            ((target * target - d2 * d2) / denom).clamp(0.0, 1.0).sqrt()
        };
        let sin = (1.0 - cos * cos).max(0.0).sqrt();

        for i in 0..n {
            let x = r[(i, k)];
            let y = r[(i, k + 1)];
            r[(i, k)] = cos * x + sin * y;
            r[(i, k + 1)] = -sin * x + cos * y;
        }
        for i in 0..n {
            let x = v[(i, k)];
            let y = v[(i, k + 1)];
            v[(i, k)] = x * cos + y * sin;
            v[(i, k + 1)] = -x * sin + y * cos;
        }

        let ga = r[(k, k)];
        let gb = r[(k + 1, k)];
        let rho = ga.hypot(gb);
        if rho > 0.0 {
            for j in 0..n {
                let x = r[(k, j)];
                let y = r[(k + 1, j)];
                r[(k, j)] = (ga * x + gb * y) / rho;
                r[(k + 1, j)] = (-gb * x + ga * y) / rho;
            }
            r[(k + 1, k)] = 0.0;
        }
    }
    Ok(v)
}

/// Inverse of a square matrix via LU.
pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    require_square(a, "inverse")?;
    a.clone()
        .try_inverse()
        .ok_or(Error::RankDeficient { ratio: 0.0 })
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn lower_triangular_inverse(l: &CMatrix) -> Result<CMatrix> {
    require_square(l, "lower_triangular_inverse")?;
    let n = l.nrows();
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { c(1.0, 0.0) } else { c(0.0, 0.0) };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            let d = l[(i, i)];
            if d.norm() == 0.0 {
                return Err(Error::RankDeficient { ratio: 0.0 });
            }
            inv[(i, col)] = s / d;
        }
    }
    Ok(inv)
}

/// `ln det` of a Hermitian positive-definite matrix through its Cholesky factor.
pub fn ln_det_hpd(a: &CMatrix) -> Result<f64> {
    let l = cholesky_lower(a)?;
    Ok((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}
