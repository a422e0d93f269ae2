//! Small dense helpers for the 2×2 and 3×3 matrices that appear in the
//! kinematic models.

use nalgebra::{DMatrix, Matrix2, Matrix3};

/// Relative determinant threshold below which a matrix is treated as singular.
pub const SINGULAR_DET_RTOL: f64 = 1e-12;

/// Ratio `sigma_min / sigma_max` below which a Jacobian counts as rank deficient.
pub const RANK_RTOL: f64 = 1e-12;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn det2(m: &DMatrix<f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

fn det3(m: &DMatrix<f64>) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

pub fn determinant(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        2 => det2(m),
        3 => det3(m),
        _ => m.determinant(),
    }
}

/// Closed-form adjugate inverse for 2×2 and 3×3 matrices.
///
/// Returns `None` when `|det| < SINGULAR_DET_RTOL * max|m_ij|^n`.
pub fn invert_small(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let scale = max_abs(m);
    if scale == 0.0 {
        return None;
    }
    let det = determinant(m);
    if !det.is_finite() || det.abs() < SINGULAR_DET_RTOL * scale.powi(n as i32) {
        return None;
    }
    let inv = match n {
        2 => DMatrix::from_row_slice(
            2,
            2,
            &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]],
        ) / det,
        3 => {
            let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
                m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
            };
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    c(1, 2, 1, 2),
                    -c(0, 2, 1, 2),
                    c(0, 1, 1, 2),
                    -c(1, 2, 0, 2),
                    c(0, 2, 0, 2),
                    -c(0, 1, 0, 2),
                    c(1, 2, 0, 1),
                    -c(0, 2, 0, 1),
                    c(0, 1, 0, 1),
                ],
            ) / det
        }
        _ => return m.clone().try_inverse(),
    };
    Some(inv)
}

/// Singular values sorted in descending order.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    // Stack-allocated decompositions for the common square sizes; the sweeps
    // spend most of their time here.
    let mut s: Vec<f64> = match (m.nrows(), m.ncols()) {
        (2, 2) => Matrix2::from_iterator(m.iter().copied()).singular_values().iter().copied().collect(),
        (3, 3) => Matrix3::from_iterator(m.iter().copied()).singular_values().iter().copied().collect(),
        _ => m.clone().svd(false, false).singular_values.iter().copied().collect(),
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}
