//! Affine hull of `dom A` and the reduced operator `T(z) = P* A(u0 + P z)`.
//!
//! `P` embeds coordinates `z` of `L = span(dom A - dom A)` into the ambient
//! space through an orthonormal basis; `P*` is its adjoint. The reduced
//! operator acts on `R^{dim L}` and has a domain with nonempty interior.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operator::{OperatorKind, OperatorSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceInfo {
    anchor: Vector,
    basis: Matrix,
    projector: Matrix,
}

impl SubspaceInfo {
    pub fn new(anchor: Vector, basis: Matrix) -> Self {
        let projector = basis.transpose() * &basis;
        SubspaceInfo {
            anchor,
            basis,
            projector,
        }
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    /// Orthonormal rows spanning `L`.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim_l(&self) -> usize {
        self.basis.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.anchor.len()
    }

    /// `Π = basis^T basis`, the orthogonal projector onto `L`.
    pub fn projector(&self) -> &Matrix {
        &self.projector
    }

    pub fn is_full(&self) -> bool {
        self.dim_l() == self.ambient_dim()
    }

    pub fn tangent(&self, v: &Vector) -> Vector {
        &self.projector * v
    }

    pub fn normal(&self, v: &Vector) -> Vector {
        v - &self.projector * v
    }

    /// `u0 + P z`.
    pub fn lift(&self, z: &Vector) -> Vector {
        &self.anchor + self.basis.transpose() * z
    }

    /// `P* (x - u0)`.
    pub fn coordinates(&self, x: &Vector) -> Vector {
        &self.basis * (x - &self.anchor)
    }
}

/// Anchor and basis of `span(dom A - dom A)` from the declared domain geometry.
pub fn domain_subspace(op: &OperatorSpec) -> SubspaceInfo {
    let (anchor, basis) = op.domain_geometry();
    SubspaceInfo::new(anchor, basis)
}

/// The reduced operator on `R^{dim L}`, anchored at `info.anchor()`.
pub fn reduce_operator(op: &OperatorSpec, info: &SubspaceInfo) -> Result<OperatorSpec> {
    let own = domain_subspace(op);
    if own.ambient_dim() != info.ambient_dim()
        || own.dim_l() != info.dim_l()
        || (own.anchor() - info.anchor()).amax() > 1e-12
        || (own.basis() - info.basis()).amax() > 1e-12
    {
        return Err(Error::ReductionUnsupported(
            "subspace data was not produced from this operator".into(),
        ));
    }
    if info.dim_l() == 0 {
        return Err(Error::ReductionUnsupported(
            "domain is a single point; the reduced space is trivial".into(),
        ));
    }
    reduce_at(op, info.anchor(), info.basis())
}

fn reduce_at(op: &OperatorSpec, anchor: &Vector, basis: &Matrix) -> Result<OperatorSpec> {
    let affine = |q: &Matrix, b: &Vector| {
        OperatorSpec::linear(basis * q * basis.transpose(), basis * (q * anchor + b))
    };
    match op.kind() {
        OperatorKind::Linear { q, b } => affine(q, b),
        OperatorKind::SeparablePlq { coords } => {
            let reduced = (0..basis.nrows())
                .map(|r| {
                    let i = (0..basis.ncols())
                        .find(|&j| basis[(r, j)] == 1.0)
                        .ok_or_else(|| Error::ReductionUnsupported("PLQ basis must be coordinate axes".into()))?;
                    Ok(coords[i].shifted(anchor[i]))
                })
                .collect::<Result<Vec<_>>>()?;
            OperatorSpec::separable_plq(reduced)
        }
        OperatorKind::AffineNormalCone { .. } => {
            let k = basis.nrows();
            OperatorSpec::linear(Matrix::zeros(k, k), Vector::zeros(k))
        }
        OperatorKind::RestrictedQuadratic { h, g, .. } => affine(h, g),
        OperatorKind::Sum { q, b, slice } => {
            if slice.violation(anchor) > 1e-9 {
                return Err(Error::ReductionUnsupported(
                    "anchor violates the affine constraint of the sum".into(),
                ));
            }
            affine(q, b)
        }
        OperatorKind::Shifted { inner, shift } => reduce_at(inner, &(anchor - shift), basis),
        OperatorKind::Scaled { inner, factor } => OperatorSpec::scaled(reduce_at(inner, anchor, basis)?, *factor),
    }
}
