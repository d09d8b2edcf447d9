//! Broken polynomial spaces on polytopal meshes.
//!
//! Each element carries total-degree-m polynomials, dim = C(m+d, d), in a
//! basis of bounding-box-scaled monomials orthonormalized against the
//! element's own quadrature (modified Gram-Schmidt with a second pass). The
//! resulting per-element mass matrix is the identity, which makes L^2
//! projections and time-derivative terms trivial and keeps conditioning
//! independent of element shape.
//!
//! Degrees of freedom are blocked per element: scalar fields store the `nb`
//! modal coefficients of element `e` at `e * nb ..`, vector fields store the
//! two components consecutively at `e * 2 * nb ..`.

use crate::mesh::{PolyMesh, Subdomain};
use crate::quad::{segment_rule, triangle_rule, QuadratureRule};
use thiserror::Error;

/// Exponent pairs `(a, b)` for monomials `x^a y^b` of total degree <= m,
/// graded lexicographic: degree-major, then descending x-exponent.
pub fn multi_indices(m: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::with_capacity((m + 1) * (m + 2) / 2);
    for deg in 0..=m {
        for a in (0..=deg).rev() {
            out.push([a, deg - a]);
        }
    }
    out
}

/// Polynomial space dimension C(m+2, 2) in two dimensions.
pub fn space_dim(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Orthonormal modal basis of one element, stored as a change of basis from
/// bounding-box-scaled monomials: column `j` of `coeff` holds the monomial
/// coefficients of basis function `j`.
#[derive(Debug, Clone)]
pub struct ElemBasis {
    /// Bounding-box center.
    pub center: [f64; 2],
    /// Bounding-box half-widths; scaled coordinates live in [-1, 1].
    pub scale: [f64; 2],
    /// Column-major `nb x nb` change-of-basis matrix, lower triangular in the
    /// graded-lex monomial order.
    pub coeff: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("element {element}: basis function {index} degenerated during orthonormalization (norm ratio {ratio:.3e})")]
    DegenerateBasis { element: usize, index: usize, ratio: f64 },
    #[error("subdomain has no elements")]
    EmptySubdomain,
}

/// Broken polynomial space over the elements of one subdomain.
#[derive(Debug, Clone)]
pub struct DGSpace {
    pub subdomain: Subdomain,
    pub degree: usize,
    /// Basis size per element.
    pub nb: usize,
    /// Global element ids covered by this space, ascending.
    pub elem_ids: Vec<usize>,
    /// Map from global element id to local index.
    local_of: Vec<Option<usize>>,
    /// Per-element orthonormal bases, parallel to `elem_ids`.
    pub bases: Vec<ElemBasis>,
    exponents: Vec<[usize; 2]>,
}

impl DGSpace {
    /// Build the degree-`m` broken space over one subdomain of `mesh`,
    /// orthonormalizing each element's basis under its quadrature of order
    /// `2m + 2`.
    pub fn new(mesh: &PolyMesh, subdomain: Subdomain, m: usize) -> Result<Self, SpaceError> {
        let elem_ids = mesh.subdomain_elements(subdomain);
        if elem_ids.is_empty() {
            return Err(SpaceError::EmptySubdomain);
        }
        let exponents = multi_indices(m);
        let nb = exponents.len();
        let mut local_of = vec![None; mesh.elements.len()];
        for (l, &e) in elem_ids.iter().enumerate() {
            local_of[e] = Some(l);
        }
        let mut bases = Vec::with_capacity(elem_ids.len());
        for &e in &elem_ids {
            bases.push(orthonormal_basis(mesh, e, &exponents, 2 * m + 2)?);
        }
        Ok(DGSpace {
            subdomain,
            degree: m,
            nb,
            elem_ids,
            local_of,
            bases,
            exponents,
        })
    }

    /// Local element index of a global element id, if the element belongs to
    /// this space.
    pub fn local(&self, elem: usize) -> Option<usize> {
        self.local_of[elem]
    }

    pub fn n_elems(&self) -> usize {
        self.elem_ids.len()
    }

    /// Scalar-field degrees of freedom.
    pub fn n_scalar_dofs(&self) -> usize {
        self.n_elems() * self.nb
    }

    /// Vector-field degrees of freedom (two components per basis function).
    pub fn n_vector_dofs(&self) -> usize {
        2 * self.n_scalar_dofs()
    }

    /// Default quadrature order for bilinear-form assembly.
    pub fn assembly_order(&self) -> usize {
        2 * self.degree + 2
    }

    /// First scalar dof of local element `l`.
    pub fn scalar_offset(&self, l: usize) -> usize {
        l * self.nb
    }

    /// First dof of component `comp` of local element `l` in a vector field.
    pub fn vector_offset(&self, l: usize, comp: usize) -> usize {
        debug_assert!(comp < 2);
        (2 * l + comp) * self.nb
    }

    /// Evaluate all basis functions of local element `l` at a physical point:
    /// values and gradients.
    pub fn eval_basis(&self, l: usize, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let basis = &self.bases[l];
        let (mono, dmono) = scaled_monomials(&self.exponents, basis, x);
        let nb = self.nb;
        let mut vals = vec![0.0; nb];
        let mut grads = vec![[0.0; 2]; nb];
        for j in 0..nb {
            let col = &basis.coeff[j * nb..(j + 1) * nb];
            let mut v = 0.0;
            let mut g = [0.0, 0.0];
            for (k, &c) in col.iter().enumerate() {
                if c != 0.0 {
                    v += c * mono[k];
                    g[0] += c * dmono[k][0];
                    g[1] += c * dmono[k][1];
                }
            }
            vals[j] = v;
            grads[j] = g;
        }
        (vals, grads)
    }

    /// Value of a scalar field at `x` inside local element `l`, given the
    /// element's modal coefficients.
    pub fn eval_scalar(&self, l: usize, coeffs: &[f64], x: [f64; 2]) -> f64 {
        let (vals, _) = self.eval_basis(l, x);
        vals.iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }

    /// Quadrature rule over an element's sub-simplices at the given order.
    pub fn element_quadrature(mesh: &PolyMesh, elem: usize, order: usize) -> QuadratureRule<2> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for t in &mesh.elements[elem].tris {
            let r = triangle_rule(
                mesh.vertices[t[0]],
                mesh.vertices[t[1]],
                mesh.vertices[t[2]],
                order,
            );
            points.extend(r.points);
            weights.extend(r.weights);
        }
        QuadratureRule { points, weights }
    }

    /// Quadrature rule over a face segment at the given order.
    pub fn face_quadrature(mesh: &PolyMesh, face: usize, order: usize) -> QuadratureRule<2> {
        let [a, b] = mesh.faces[face].verts;
        segment_rule(mesh.vertices[a], mesh.vertices[b], order)
    }

    /// L^2 projection of a scalar function onto the space, as the full modal
    /// coefficient vector. Exact for polynomials of degree <= m when
    /// `order >= 2m`.
    pub fn project(
        &self,
        mesh: &PolyMesh,
        order: usize,
        f: impl Fn([f64; 2]) -> f64,
    ) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_scalar_dofs()];
        for (l, &e) in self.elem_ids.iter().enumerate() {
            let rule = Self::element_quadrature(mesh, e, order);
            let out = &mut coeffs[l * self.nb..(l + 1) * self.nb];
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let (vals, _) = self.eval_basis(l, x);
                let fx = f(x);
                for (o, v) in out.iter_mut().zip(&vals) {
                    *o += w * fx * v;
                }
            }
        }
        coeffs
    }

    /// L^2 projection of a vector function, blocked per the vector dof
    /// layout.
    pub fn project_vector(
        &self,
        mesh: &PolyMesh,
        order: usize,
        f: impl Fn([f64; 2]) -> [f64; 2],
    ) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_vector_dofs()];
        for (l, &e) in self.elem_ids.iter().enumerate() {
            let rule = Self::element_quadrature(mesh, e, order);
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let (vals, _) = self.eval_basis(l, x);
                let fx = f(x);
                for comp in 0..2 {
                    let off = self.vector_offset(l, comp);
                    for (j, v) in vals.iter().enumerate() {
                        coeffs[off + j] += w * fx[comp] * v;
                    }
                }
            }
        }
        coeffs
    }
}

/// The four broken spaces of the coupled system: displacement (vector, el),
/// compartment pressures (scalar, el), fluid velocity (vector, f), fluid
/// pressure (scalar, f), all of the same degree.
#[derive(Debug, Clone)]
pub struct SpaceSet {
    pub el: DGSpace,
    pub p: DGSpace,
    pub v: DGSpace,
    pub q: DGSpace,
}

impl SpaceSet {
    pub fn new(mesh: &PolyMesh, degree: usize) -> Result<Self, SpaceError> {
        Ok(SpaceSet {
            el: DGSpace::new(mesh, Subdomain::El, degree)?,
            p: DGSpace::new(mesh, Subdomain::El, degree)?,
            v: DGSpace::new(mesh, Subdomain::F, degree)?,
            q: DGSpace::new(mesh, Subdomain::F, degree)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.el.degree
    }
}

/// Scaled monomial values and gradients at a physical point.
fn scaled_monomials(
    exponents: &[[usize; 2]],
    basis: &ElemBasis,
    x: [f64; 2],
) -> (Vec<f64>, Vec<[f64; 2]>) {
    let sx = (x[0] - basis.center[0]) / basis.scale[0];
    let sy = (x[1] - basis.center[1]) / basis.scale[1];
    let max_deg = exponents.last().map_or(0, |e| e[0] + e[1]);
    // power tables up to the maximum degree
    let mut px = vec![1.0; max_deg + 1];
    let mut py = vec![1.0; max_deg + 1];
    for k in 1..=max_deg {
        px[k] = px[k - 1] * sx;
        py[k] = py[k - 1] * sy;
    }
    let mut vals = Vec::with_capacity(exponents.len());
    let mut grads = Vec::with_capacity(exponents.len());
    for &[a, b] in exponents {
        vals.push(px[a] * py[b]);
        let gx = if a == 0 { 0.0 } else { a as f64 * px[a - 1] * py[b] / basis.scale[0] };
        let gy = if b == 0 { 0.0 } else { b as f64 * px[a] * py[b - 1] / basis.scale[1] };
        grads.push([gx, gy]);
    }
    (vals, grads)
}

/// Orthonormalize the scaled monomials of one element against its quadrature
/// (modified Gram-Schmidt, two passes for numerical orthogonality).
fn orthonormal_basis(
    mesh: &PolyMesh,
    elem: usize,
    exponents: &[[usize; 2]],
    order: usize,
) -> Result<ElemBasis, SpaceError> {
    let e = &mesh.elements[elem];
    let center = [
        0.5 * (e.bbox.0[0] + e.bbox.1[0]),
        0.5 * (e.bbox.0[1] + e.bbox.1[1]),
    ];
    let scale = [
        0.5 * (e.bbox.1[0] - e.bbox.0[0]).max(f64::MIN_POSITIVE),
        0.5 * (e.bbox.1[1] - e.bbox.0[1]).max(f64::MIN_POSITIVE),
    ];
    let nb = exponents.len();
    let rule = DGSpace::element_quadrature(mesh, elem, order);
    let nq = rule.len();
    let probe = ElemBasis {
        center,
        scale,
        coeff: Vec::new(),
    };
    // monomial values at quadrature points, column-major (nq x nb)
    let mut mono = vec![0.0; nq * nb];
    for (q, &x) in rule.points.iter().enumerate() {
        let (vals, _) = scaled_monomials(exponents, &probe, x);
        for (k, v) in vals.into_iter().enumerate() {
            mono[k * nq + q] = v;
        }
    }
    let wdot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&rule.weights)
            .map(|((&x, &y), &w)| w * x * y)
            .sum()
    };
    let mut coeff = vec![0.0; nb * nb];
    for j in 0..nb {
        coeff[j * nb + j] = 1.0;
    }
    // basis values at quadrature points, built as columns are finished
    let mut phi = vec![0.0; nq * nb];
    for j in 0..nb {
        let mut v: Vec<f64> = mono[j * nq..(j + 1) * nq].to_vec();
        let scale0 = wdot(&v, &v).sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let r = wdot(&v, &phi[i * nq..(i + 1) * nq]);
                for (vq, pq) in v.iter_mut().zip(&phi[i * nq..(i + 1) * nq]) {
                    *vq -= r * pq;
                }
                let (ci, cj) = coeff.split_at_mut(j * nb);
                for (cjk, cik) in cj[..nb].iter_mut().zip(&ci[i * nb..(i + 1) * nb]) {
                    *cjk -= r * cik;
                }
            }
        }
        let nrm = wdot(&v, &v).sqrt();
        if !(nrm > 1e-10 * scale0) {
            return Err(SpaceError::DegenerateBasis {
                element: elem,
                index: j,
                ratio: nrm / scale0,
            });
        }
        for vq in &mut v {
            *vq /= nrm;
        }
        for c in &mut coeff[j * nb..(j + 1) * nb] {
            *c /= nrm;
        }
        phi[j * nq..(j + 1) * nq].copy_from_slice(&v);
    }
    Ok(ElemBasis { center, scale, coeff })
}
