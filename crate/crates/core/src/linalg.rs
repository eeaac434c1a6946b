//! Small dense linear-algebra helpers shared by the solver stages.
//!
//! Matrices here are tiny (state dimension times two at most), so explicit
//! inverses are cheaper and clearer than factor-and-solve plumbing.  The
//! guarded inverse reports the time node it failed at; the regularized
//! inverse implements the Tikhonov guard used where a window transform
//! vanishes by construction and the multiplying factors vanish with it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative Tikhonov weight for window-degenerate inversions.
pub const REGULARIZATION: f64 = 1e-10;

/// Default cap on the 1-norm condition estimate of guarded inversions.
pub const CONDITION_CAP: f64 = 1e12;

fn norm_1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum())
        .fold(0.0f64, f64::max)
}

/// Inverse with a 1-norm condition estimate; fails with node context when
/// the matrix is singular or the estimate exceeds `cond_cap`.
pub fn inv_guarded(
    m: &DMatrix<f64>,
    what: &str,
    t: f64,
    cond_cap: f64,
) -> Result<DMatrix<f64>> {
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Singular {
        what: what.into(),
        t,
        cond: f64::INFINITY,
    })?;
    let cond = norm_1(m) * norm_1(&inv);
    if !cond.is_finite() || cond > cond_cap {
        return Err(Error::Singular {
            what: what.into(),
            t,
            cond,
        });
    }
    Ok(inv)
}

/// `(m + lambda I)^-1` with `lambda = REGULARIZATION * (1 + max|m|)`.
///
/// Used only for inverses of window transforms, which vanish at the
/// degenerate end of their window while every factor multiplying them
/// vanishes at the same rate; the guard keeps the product finite without
/// biasing it away from zero.
pub fn inv_regularized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut lambda = REGULARIZATION * (1.0 + m.amax());
    for _ in 0..8 {
        let shifted = m + DMatrix::identity(n, n) * lambda;
        if let Some(inv) = shifted.try_inverse() {
            return inv;
        }
        lambda *= 10.0;
    }
    // Unreachable for any finite input in practice; keep the fallback total.
    DMatrix::zeros(n, n)
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Symmetrizes in place: `m <- (m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn guarded_inverse_rejects_singular() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = inv_guarded(&singular, "test", 0.5, CONDITION_CAP).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t = 0.5"), "{msg}");
    }

    #[test]
    fn guarded_inverse_round_trips() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, -0.1, 1.5]);
        let inv = inv_guarded(&m, "test", 0.0, CONDITION_CAP).unwrap();
        let id = &m * &inv;
        assert_relative_eq!(id[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(id[(1, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn regularized_inverse_of_zero_is_large_but_finite() {
        let z = DMatrix::zeros(1, 1);
        let inv = inv_regularized(&z);
        assert!(inv[(0, 0)].is_finite());
        assert_relative_eq!(inv[(0, 0)], 1.0 / REGULARIZATION, max_relative = 1e-10);
    }

    #[test]
    fn min_eig_of_indefinite_matrix_is_negative() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        assert_relative_eq!(min_eig_sym(&m), -2.0, max_relative = 1e-12);
    }
}
