//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

const RANK_TOL: f64 = 1e-10;

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(m: &Matrix) -> Matrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Matrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (RANK_TOL * smax.max(1.0)).max(f64::EPSILON);
    svd.pseudo_inverse(eps).expect("svd computed with both factors")
}

/// Orthonormal rows spanning the null space of `c` (a `k x d` matrix).
///
/// Rows come out of modified Gram–Schmidt applied to the null-space
/// projections of `e_1, ..., e_d`, so the basis is deterministic.
pub fn null_space_rows(c: &Matrix, d: usize) -> Matrix {
    let proj = if c.nrows() == 0 {
        Matrix::identity(d, d)
    } else {
        Matrix::identity(d, d) - pinv(c) * c
    };
    let cols: Vec<Vector> = (0..d).map(|i| proj.column(i).into_owned()).collect();
    orthonormal_rows(&cols, d)
}

/// Gram–Schmidt over `vectors`, dropping directions below the rank tolerance.
pub fn orthonormal_rows(vectors: &[Vector], d: usize) -> Matrix {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // two passes keep the rows orthonormal to ~1e-15
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            basis.push(w / n);
        }
    }
    let mut m = Matrix::zeros(basis.len(), d);
    for (i, b) in basis.iter().enumerate() {
        m.set_row(i, &b.transpose());
    }
    m
}

pub fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().min()
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Matrix {
    Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}
