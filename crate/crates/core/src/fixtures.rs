//! Operators behind the bundled scenarios, available in code for tests and
//! benchmarks.

use crate::linalg::{Matrix, Vector};
use crate::operator::{ErrorBound, OperatorSpec, Plq1d};

/// `A(x) = x` on the line (gradient of `x^2 / 2`).
pub fn identity() -> OperatorSpec {
    OperatorSpec::identity(1).expect("valid")
}

/// Non-symmetric, 1-strongly monotone affine map on the plane.
pub fn strongly_monotone_linear() -> OperatorSpec {
    OperatorSpec::linear(
        Matrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 1.0]),
        Vector::from_vec(vec![-1.0, 1.0]),
    )
    .expect("valid")
}

/// Rotation generator `[[0, -1], [1, 0]]`.
pub fn skew_rotation() -> OperatorSpec {
    OperatorSpec::linear(
        Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        Vector::zeros(2),
    )
    .expect("valid")
}

/// Subdifferential of `|x|`.
pub fn abs_value() -> OperatorSpec {
    OperatorSpec::separable_plq(vec![Plq1d::abs(1.0).expect("valid")]).expect("valid")
}

/// Subdifferential of `max(|x| - 1, 0)`; zero set `[-1, 1]`.
pub fn hinge() -> OperatorSpec {
    OperatorSpec::separable_plq(vec![Plq1d::hinge(1.0).expect("valid")])
        .and_then(|op| {
            op.with_error_bound(ErrorBound {
                p: 1.0,
                gamma: 1.0,
                level: 1.0,
            })
        })
        .expect("valid")
}

/// `x^2 / 2` on the line `y = 0` of the plane.
pub fn line_restricted() -> OperatorSpec {
    OperatorSpec::line_restricted_example()
}

/// `x + N_C(x)` with `C = {x_1 + x_2 = 1}`.
pub fn affine_cone() -> OperatorSpec {
    OperatorSpec::sum(
        Matrix::identity(2, 2),
        Vector::zeros(2),
        Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
        Vector::from_vec(vec![1.0]),
    )
    .expect("valid")
}

/// Every bundled operator with its scenario name.
pub fn all() -> Vec<(&'static str, OperatorSpec)> {
    vec![
        ("identity", identity()),
        ("strongly_monotone_linear", strongly_monotone_linear()),
        ("skew_rotation", skew_rotation()),
        ("abs_value", abs_value()),
        ("hinge", hinge()),
        ("line_restricted", line_restricted()),
        ("affine_cone", affine_cone()),
    ]
}
