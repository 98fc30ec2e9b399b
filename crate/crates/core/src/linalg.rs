//! Dense complex linear algebra used by the precoder and beamformer construction.
//!
//! Everything rank-related (rank, null space, right inverse, conditioning) goes
//! through a one-sided Jacobi SVD. Square inversion uses LU with partial
//! pivoting after the conditioning guard has passed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest 2-norm condition number accepted by [`inverse`].
pub const MAX_CONDITION: f64 = 1e12;
/// Default relative tolerance for [`numerical_rank`].
pub const RANK_TOL: f64 = 1e-8;
/// Smallest admissible ratio of extreme singular values for full-rank checks.
pub const FULL_RANK_TOL: f64 = 1e-10;

/// Matrix with i.i.d. CN(0, 1) entries: real and imaginary parts are N(0, 1/2).
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // Column-major fill keeps the draw order tied to nalgebra's storage.
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Identity of size `n`.
pub fn eye(n: usize) -> ComplexMatrix {
    DMatrix::identity(n, n)
}

fn ensure_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Thin singular value decomposition `a = U diag(s) V^H`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    /// rows x min(rows, cols)
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    /// cols x min(rows, cols)
    pub v: ComplexMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi: applies unitary plane rotations from the right
/// until the columns of `work` are mutually orthogonal. Returns the rotated
/// matrix `a V` and the accumulated unitary `V`.
fn jacobi_orthogonalize(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = a.shape();
    let mut work = a.clone();
    let mut v = eye(n);
    let tol = f64::EPSILON * (m.max(1) as f64);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = work.column(p).norm_squared();
                let beta = work.column(q).norm_squared();
                let gamma = work.column(p).dotc(&work.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() || g < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                // Phase-align column q so the off-diagonal Gram entry is real.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let conj_phase = phase.conj();
                for target in [&mut work, &mut v] {
                    for row in 0..target.nrows() {
                        let xp = target[(row, p)];
                        let xq = target[(row, q)] * conj_phase;
                        target[(row, p)] = xp * c - xq * s;
                        target[(row, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (work, v)
}

/// Column indices of `work` ordered by decreasing norm, with the norms.
fn sorted_columns(work: &ComplexMatrix) -> Vec<(usize, f64)> {
    let mut cols: Vec<(usize, f64)> = work
        .column_iter()
        .enumerate()
        .map(|(j, c)| (j, c.norm()))
        .collect();
    cols.sort_by(|x, y| y.1.total_cmp(&x.1));
    cols
}

fn svd_tall(a: &ComplexMatrix) -> Svd {
    let (m, n) = a.shape();
    let (work, v_acc) = jacobi_orthogonalize(a);
    let order = sorted_columns(&work);
    let mut u = ComplexMatrix::zeros(m, n);
    let mut v = ComplexMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &(src, sigma)) in order.iter().enumerate() {
        singular_values.push(sigma);
        v.column_mut(dst).copy_from(&v_acc.column(src));
        if sigma > 0.0 {
            u.column_mut(dst).copy_from(&(work.column(src) / Complex64::from(sigma)));
        }
    }
    Svd {
        u,
        singular_values,
        v,
    }
}

/// Thin SVD by one-sided Jacobi rotations.
pub fn svd(a: &ComplexMatrix) -> Svd {
    if a.nrows() >= a.ncols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.adjoint());
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let work = if a.nrows() >= a.ncols() {
        jacobi_orthogonalize(a).0
    } else {
        jacobi_orthogonalize(&a.adjoint()).0
    };
    sorted_columns(&work).into_iter().map(|(_, s)| s).collect()
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(a: &ComplexMatrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Inverse of a square matrix whose condition number is at most [`MAX_CONDITION`].
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::SizeMismatch(format!(
            "inverse needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a)?;
    let cond = condition_number(a);
    let near_singular = Error::NearSingular {
        cond,
        limit: MAX_CONDITION,
    };
    if !(cond <= MAX_CONDITION) {
        return Err(near_singular);
    }
    let x = a.clone().lu().try_inverse().ok_or(near_singular.clone())?;
    if fro(&(a * &x - eye(a.nrows()))) > 1e-8 * fro(a) {
        return Err(near_singular);
    }
    Ok(x)
}

/// Minimum-norm right inverse `X` (cols x rows) with `a X = I` for a wide or square
/// matrix of full row rank.
pub fn right_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (r, c) = a.shape();
    if r == 0 || r > c {
        return Err(Error::SizeMismatch(format!(
            "right inverse needs rows <= cols, got {r}x{c}"
        )));
    }
    ensure_finite(a)?;
    let Svd {
        u,
        singular_values: sv,
        v,
    } = svd(a);
    let hi = sv[0];
    let lo = sv[r - 1];
    if hi == 0.0 || lo <= FULL_RANK_TOL * hi {
        return Err(Error::RankDeficient(format!(
            "smallest singular value {lo:.3e} vs largest {hi:.3e}"
        )));
    }
    // X = V diag(1/s) U^H
    let mut scaled = v;
    for (j, s) in sv.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    Ok(scaled * u.adjoint())
}

/// Orthonormal basis of the left null space of a tall full-column-rank `b` (M x n):
/// an (M - n) x M matrix `A` with `A b = 0` and `A A^H = I`.
pub fn left_null_space_basis(b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (m, n) = b.shape();
    if n == 0 || n >= m {
        return Err(Error::SizeMismatch(format!(
            "left null space needs an M x n matrix with 0 < n < M, got {m}x{n}"
        )));
    }
    ensure_finite(b)?;
    // Rotating the M columns of b^H drives M - n of them to zero; the matching
    // columns of the accumulated unitary span null(b^H).
    let (work, v) = jacobi_orthogonalize(&b.adjoint());
    let order = sorted_columns(&work);
    let hi = order[0].1;
    if hi == 0.0 || order[n - 1].1 <= FULL_RANK_TOL * hi {
        return Err(Error::RankDeficient(format!(
            "column rank below {n} (singular values {:?})",
            order.iter().map(|o| o.1).collect::<Vec<_>>()
        )));
    }
    let mut basis = ComplexMatrix::zeros(m - n, m);
    for (row, &(col, _)) in order[n..].iter().enumerate() {
        basis.row_mut(row).copy_from(&v.column(col).adjoint());
    }
    Ok(basis)
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(a: &ComplexMatrix, tol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        Some(&hi) if hi > 0.0 => sv.iter().filter(|&&s| s > tol * hi).count(),
        _ => 0,
    }
}

/// Matrix with orthonormal columns spanning the range of a Gaussian draw, via thin QR.
pub fn random_orthonormal_columns<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix {
    debug_assert!(cols <= rows);
    gaussian_matrix(rows, cols, rng).qr().q()
}

/// Frobenius norm.
pub fn fro(a: &ComplexMatrix) -> f64 {
    a.norm()
}
