//! Jump and average operators on mesh faces.
//!
//! On an internal face with normals n+ = -n- the operators are
//!   scalar:  [[q]] = q+ n+ + q- n-,          {q}   = (q+ + q-)/2,
//!   vector:  [[v]] = v+ (x) n+ + v- (x) n-,  {v}   = (v+ + v-)/2,
//!   tensor:  [[tau]] = tau+ n+ + tau- n-,    {tau} = (tau+ + tau-)/2,
//! where v (x) n denotes the symmetric outer product (v n^T + n v^T)/2.
//! On a Dirichlet boundary face the same formulas apply with the exterior
//! trace dropped: [[q]] = q n, {q} = q, and likewise for vectors and tensors.
//! On an interface face, scalar and tensor averages are single-sided from the
//! poroelastic element, and vector fields from the two sides pair into
//!   [[w, v]]   = w (x) n_el + v (x) n_f,
//!   [[w, v]]_t = v_t - w_t   (tangential components),
//! with n_f = -n_el.
//!
//! The assembly kernels use the typed helpers directly; [`jump_avg`] is the
//! face-kind-checked entry point that rejects combinations the scheme never
//! produces (for example a two-sided trace on a boundary face).

use crate::geometry::{scale, sub, sym_outer, tangential};
use crate::mesh::FaceKind;
use thiserror::Error;

/// Field trace on one side of a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trace<const D: usize> {
    Scalar(f64),
    Vector([f64; D]),
    Tensor([[f64; D]; D]),
}

/// Traces supplied for a face, matching how many sides it has.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceTraces<const D: usize> {
    /// Internal face: traces from the owner-0 (plus) and owner-1 (minus)
    /// sides.
    Internal { plus: Trace<D>, minus: Trace<D> },
    /// Boundary face: the single interior trace.
    Boundary { value: Trace<D> },
    /// Interface face: the poroelastic-side trace and the fluid-side trace.
    /// For the scalar/tensor averages only the poroelastic side is used.
    Interface { el: Trace<D>, f: Trace<D> },
}

/// Result of applying the jump/average operators on a face with unit normal
/// `n` (outward of the plus/el side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpAvg<const D: usize> {
    Scalar { jump: [f64; D], average: f64 },
    Vector { jump: [[f64; D]; D], average: [f64; D] },
    Tensor { jump: [f64; D], average: [[f64; D]; D] },
    /// Interface scalar: single-sided average from the poroelastic element.
    InterfaceScalar { average: f64 },
    /// Interface tensor: single-sided average from the poroelastic element.
    InterfaceTensor { average: [[f64; D]; D] },
    /// Interface vector pair: symmetric-outer-product jump and tangential
    /// jump of (poroelastic, fluid) vector traces.
    InterfaceVector { jump: [[f64; D]; D], tangential_jump: [f64; D] },
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("face kind {kind:?} does not accept {got} traces")]
    SideMismatch { kind: FaceKind, got: &'static str },
    #[error("traces on the two sides have different ranks")]
    RankMismatch,
    #[error("jump/average operators are not defined on {0:?} faces")]
    Unsupported(FaceKind),
}

/// Scalar jump `q+ n+ + q- n-` on an internal face.
pub fn scalar_jump<const D: usize>(qp: f64, qm: f64, n: [f64; D]) -> [f64; D] {
    scale(n, qp - qm)
}

/// Scalar jump `q n` on a boundary face.
pub fn scalar_jump_boundary<const D: usize>(q: f64, n: [f64; D]) -> [f64; D] {
    scale(n, q)
}

/// Vector jump `v+ (x) n+ + v- (x) n-` on an internal face.
pub fn vector_jump<const D: usize>(vp: [f64; D], vm: [f64; D], n: [f64; D]) -> [[f64; D]; D] {
    sym_outer(sub(vp, vm), n)
}

/// Vector jump `v (x) n` on a boundary face.
pub fn vector_jump_boundary<const D: usize>(v: [f64; D], n: [f64; D]) -> [[f64; D]; D] {
    sym_outer(v, n)
}

/// Tensor jump `tau+ n+ + tau- n-` on an internal face.
pub fn tensor_jump<const D: usize>(
    tp: [[f64; D]; D],
    tm: [[f64; D]; D],
    n: [f64; D],
) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        for j in 0..D {
            out[i] += (tp[i][j] - tm[i][j]) * n[j];
        }
    }
    out
}

/// Two-sided average `(a+ + a-)/2` for scalars.
pub fn scalar_avg(qp: f64, qm: f64) -> f64 {
    0.5 * (qp + qm)
}

pub fn vector_avg<const D: usize>(vp: [f64; D], vm: [f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = 0.5 * (vp[i] + vm[i]);
    }
    out
}

pub fn tensor_avg<const D: usize>(tp: [[f64; D]; D], tm: [[f64; D]; D]) -> [[f64; D]; D] {
    let mut out = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            out[i][j] = 0.5 * (tp[i][j] + tm[i][j]);
        }
    }
    out
}

/// Interface vector-pair jump `w (x) n_el + v (x) n_f` with `n_f = -n_el`.
pub fn interface_vector_jump<const D: usize>(
    w_el: [f64; D],
    v_f: [f64; D],
    n_el: [f64; D],
) -> [[f64; D]; D] {
    sym_outer(sub(w_el, v_f), n_el)
}

/// Interface tangential jump `(v)_t - (w)_t`; the projector is the same for
/// either unit normal.
pub fn interface_tangential_jump<const D: usize>(
    w_el: [f64; D],
    v_f: [f64; D],
    n: [f64; D],
) -> [f64; D] {
    tangential(sub(v_f, w_el), n)
}

/// Apply the jump and average operators appropriate to a face kind.
///
/// `n` is the face's stored unit normal: outward of owner 0 on internal and
/// boundary faces, and equal to `n_el` on interface faces.
pub fn jump_avg<const D: usize>(
    kind: FaceKind,
    n: [f64; D],
    traces: FaceTraces<D>,
) -> Result<JumpAvg<D>, TraceError> {
    match (kind, traces) {
        (FaceKind::InternalEl | FaceKind::InternalF, FaceTraces::Internal { plus, minus }) => {
            match (plus, minus) {
                (Trace::Scalar(qp), Trace::Scalar(qm)) => Ok(JumpAvg::Scalar {
                    jump: scalar_jump(qp, qm, n),
                    average: scalar_avg(qp, qm),
                }),
                (Trace::Vector(vp), Trace::Vector(vm)) => Ok(JumpAvg::Vector {
                    jump: vector_jump(vp, vm, n),
                    average: vector_avg(vp, vm),
                }),
                (Trace::Tensor(tp), Trace::Tensor(tm)) => Ok(JumpAvg::Tensor {
                    jump: tensor_jump(tp, tm, n),
                    average: tensor_avg(tp, tm),
                }),
                _ => Err(TraceError::RankMismatch),
            }
        }
        (FaceKind::DirichletEl | FaceKind::WallF, FaceTraces::Boundary { value }) => match value {
            Trace::Scalar(q) => Ok(JumpAvg::Scalar {
                jump: scalar_jump_boundary(q, n),
                average: q,
            }),
            Trace::Vector(v) => Ok(JumpAvg::Vector {
                jump: vector_jump_boundary(v, n),
                average: v,
            }),
            Trace::Tensor(t) => Ok(JumpAvg::Tensor {
                jump: tensor_jump(t, [[0.0; D]; D], n),
                average: t,
            }),
        },
        (FaceKind::Interface, FaceTraces::Interface { el, f }) => match (el, f) {
            (Trace::Scalar(q), _) => Ok(JumpAvg::InterfaceScalar { average: q }),
            (Trace::Tensor(t), _) => Ok(JumpAvg::InterfaceTensor { average: t }),
            (Trace::Vector(w), Trace::Vector(v)) => Ok(JumpAvg::InterfaceVector {
                jump: interface_vector_jump(w, v, n),
                tangential_jump: interface_tangential_jump(w, v, n),
            }),
            _ => Err(TraceError::RankMismatch),
        },
        (FaceKind::NeumannEl | FaceKind::OutletF, _) => Err(TraceError::Unsupported(kind)),
        (k, FaceTraces::Internal { .. }) => Err(TraceError::SideMismatch {
            kind: k,
            got: "two-sided",
        }),
        (k, FaceTraces::Boundary { .. }) => Err(TraceError::SideMismatch {
            kind: k,
            got: "single-sided",
        }),
        (k, FaceTraces::Interface { .. }) => Err(TraceError::SideMismatch {
            kind: k,
            got: "interface",
        }),
    }
}
