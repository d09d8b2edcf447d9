//! Polytopal meshes of two-subdomain geometries with classified faces.
//!
//! Elements are polytopes stored as lists of sub-simplices (triangles); faces
//! are straight segments carrying a kind tag, owner elements, and a unit
//! normal. Meshes are built on structured quadrilateral grids and optionally
//! coarsened by agglomeration, which merges face-connected cells into
//! polytopal elements while keeping the fine sub-simplices for quadrature.
//!
//! Meshes are immutable after construction and safe to share across threads.

use crate::geometry::{norm, sub, triangle_area};
use thiserror::Error;

/// Physical subdomain of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    /// Poroelastic region.
    El,
    /// Free-fluid region.
    F,
}

/// Classification of a mesh face.
///
/// Boundary faces carry exactly one owner; internal and interface faces carry
/// two. The tags partition the face set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    /// Internal face between two poroelastic elements.
    InternalEl,
    /// Internal face between two fluid elements.
    InternalF,
    /// Dirichlet boundary of the poroelastic region (displacement and
    /// compartment pressures prescribed).
    DirichletEl,
    /// Neumann boundary of the poroelastic region (traction- and flux-free).
    NeumannEl,
    /// Fluid wall: Dirichlet velocity.
    WallF,
    /// Fluid outlet: prescribed normal stress.
    OutletF,
    /// Interface between the poroelastic and fluid regions.
    Interface,
}

impl FaceKind {
    pub fn is_boundary(self) -> bool {
        matches!(
            self,
            FaceKind::DirichletEl | FaceKind::NeumannEl | FaceKind::WallF | FaceKind::OutletF
        )
    }

    pub fn is_internal(self) -> bool {
        matches!(self, FaceKind::InternalEl | FaceKind::InternalF)
    }
}

/// Polytopal element: a union of sub-simplices with cached geometry.
#[derive(Debug, Clone)]
pub struct Element {
    pub subdomain: Subdomain,
    /// Sub-simplices (triangles) covering the polytope, as vertex indices.
    pub tris: Vec<[usize; 3]>,
    /// Axis-aligned bounding box `(lo, hi)`.
    pub bbox: ([f64; 2], [f64; 2]),
    /// Polytope measure (sum of sub-simplex areas at construction).
    pub measure: f64,
    /// Maximum pairwise vertex distance.
    pub diameter: f64,
    /// Adjacent face indices, ascending.
    pub faces: Vec<usize>,
}

/// A straight face segment.
#[derive(Debug, Clone)]
pub struct Face {
    pub kind: FaceKind,
    /// Endpoint vertex indices, ordered so that the stored normal equals the
    /// right-hand normal of the direction `verts[1] - verts[0]`.
    pub verts: [usize; 2],
    /// Owner elements. `owners[0]` always exists and the normal points out of
    /// it; interface faces store the poroelastic owner first, so the normal
    /// is `n_el` and `n_f = -normal`.
    pub owners: [Option<usize>; 2],
    /// Unit normal, outward of `owners[0]`.
    pub normal: [f64; 2],
    /// Segment length.
    pub measure: f64,
}

/// Polytopal mesh of (up to) two subdomains with a matched interface.
#[derive(Debug, Clone)]
pub struct PolyMesh {
    pub vertices: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    /// Matched interface face pairs `(el-side record, f-side record)`. The
    /// interface is mesh-conforming and each physical interface segment is
    /// stored as a single face owning both elements, so both entries of a
    /// pair name the same face record and the pairing is the identity
    /// involution.
    pub interface_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("grid sizes incompatible with geometry: {0}")]
    IncompatibleGrid(String),
    #[error("agglomeration request invalid: {0}")]
    BadAgglomeration(String),
    #[error("mesh invariant violated: {0}")]
    InvariantViolated(String),
}

/// Built-in two-subdomain geometries on structured grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoDomainSpec {
    /// Omega_el = (0,1)^2 stacked on Omega_f = (0,1)x(-1,0), interface at
    /// y = 0. All outer poroelastic faces are Dirichlet, all outer fluid
    /// faces are walls. `nx, ny` count cells per subdomain.
    Stack,
    /// Unit square of tissue with a fluid pocket (1/4,3/4)x(0,1/2). The
    /// pocket's bottom edge is the outlet, its other sides the interface;
    /// the tissue strips on y = 0 are clamped (Dirichlet) and the remaining
    /// outer tissue boundary is Neumann. Requires `nx % 4 == 0` and
    /// `ny % 2 == 0`.
    Pocket,
    /// Single-subdomain unit square. Poroelastic squares get Dirichlet
    /// boundaries, fluid squares get walls.
    Square(Subdomain),
}

impl PolyMesh {
    /// Number of elements in a subdomain.
    pub fn subdomain_count(&self, s: Subdomain) -> usize {
        self.elements.iter().filter(|e| e.subdomain == s).count()
    }

    /// Indices of elements in a subdomain, ascending.
    pub fn subdomain_elements(&self, s: Subdomain) -> Vec<usize> {
        (0..self.elements.len())
            .filter(|&e| self.elements[e].subdomain == s)
            .collect()
    }

    /// Total measure of a subdomain.
    pub fn subdomain_measure(&self, s: Subdomain) -> f64 {
        self.elements
            .iter()
            .filter(|e| e.subdomain == s)
            .map(|e| e.measure)
            .sum()
    }

    /// Face indices of a given kind.
    pub fn faces_of_kind(&self, kind: FaceKind) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.faces[f].kind == kind)
            .collect()
    }

    /// Harmonic average of the owner diameters: `2 h+ h- / (h+ + h-)` on
    /// two-owner faces, `h_K` on single-owner faces.
    pub fn harmonic_h(&self, face: usize) -> f64 {
        let f = &self.faces[face];
        let hp = self.elements[f.owners[0].expect("face must have an owner")].diameter;
        match f.owners[1] {
            Some(o1) => {
                let hm = self.elements[o1].diameter;
                2.0 * hp * hm / (hp + hm)
            }
            None => hp,
        }
    }

    /// Diameter of one element (largest vertex-to-vertex distance).
    pub fn element_diameter(&self, elem: usize) -> f64 {
        self.elements[elem].diameter
    }

    /// Maximum element diameter (the mesh size h).
    pub fn mesh_size(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.diameter)
            .fold(0.0, f64::max)
    }

    /// Area-weighted centroid of an element.
    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let el = &self.elements[e];
        let mut c = [0.0, 0.0];
        for t in &el.tris {
            let (a, b, d) = (
                self.vertices[t[0]],
                self.vertices[t[1]],
                self.vertices[t[2]],
            );
            let area = triangle_area(a, b, d);
            c[0] += area * (a[0] + b[0] + d[0]) / 3.0;
            c[1] += area * (a[1] + b[1] + d[1]) / 3.0;
        }
        [c[0] / el.measure, c[1] / el.measure]
    }

    /// Whether a point lies in (or on) one of the element's triangles.
    pub fn point_in_element(&self, e: usize, x: [f64; 2]) -> bool {
        let tol = 1e-12 * self.elements[e].diameter.powi(2);
        self.elements[e].tris.iter().any(|t| {
            let (a, b, c) = (
                self.vertices[t[0]],
                self.vertices[t[1]],
                self.vertices[t[2]],
            );
            // the signed sub-areas of x against each edge share the
            // triangle's orientation sign exactly when x is inside
            let s0 = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
            let s1 = (c[0] - b[0]) * (x[1] - b[1]) - (c[1] - b[1]) * (x[0] - b[0]);
            let s2 = (a[0] - c[0]) * (x[1] - c[1]) - (a[1] - c[1]) * (x[0] - c[0]);
            (s0 >= -tol && s1 >= -tol && s2 >= -tol)
                || (s0 <= tol && s1 <= tol && s2 <= tol)
        })
    }

    /// Midpoint of a face.
    pub fn face_midpoint(&self, f: usize) -> [f64; 2] {
        let [a, b] = self.faces[f].verts;
        let (a, b) = (self.vertices[a], self.vertices[b]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Boundary measure of an element, computed independently of the face
    /// list: sub-simplex edges that appear exactly once within the element
    /// form its boundary.
    pub fn element_boundary_measure(&self, e: usize) -> f64 {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for t in &self.elements[e].tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        let mut total = 0.0;
        let mut i = 0;
        while i < edges.len() {
            let j = edges[i..].iter().take_while(|&&x| x == edges[i]).count();
            if j == 1 {
                let (a, b) = edges[i];
                total += norm(sub(self.vertices[b], self.vertices[a]));
            }
            i += j;
        }
        total
    }

    /// Check every structural invariant of the mesh; used by tests and after
    /// construction in debug builds.
    pub fn validate(&self) -> Result<(), MeshError> {
        let viol = |s: String| Err(MeshError::InvariantViolated(s));
        for (ei, e) in self.elements.iter().enumerate() {
            let sum: f64 = e
                .tris
                .iter()
                .map(|t| {
                    triangle_area(
                        self.vertices[t[0]],
                        self.vertices[t[1]],
                        self.vertices[t[2]],
                    )
                })
                .sum();
            if (sum - e.measure).abs() > 1e-12 * e.measure {
                return viol(format!(
                    "element {ei}: sub-simplex areas {sum} != measure {}",
                    e.measure
                ));
            }
            let face_sum: f64 = e.faces.iter().map(|&f| self.faces[f].measure).sum();
            let bnd = self.element_boundary_measure(ei);
            if (face_sum - bnd).abs() > 1e-12 * bnd {
                return viol(format!(
                    "element {ei}: face measures {face_sum} != boundary measure {bnd}"
                ));
            }
        }
        for (fi, f) in self.faces.iter().enumerate() {
            let o0 = match f.owners[0] {
                Some(o) => o,
                None => return viol(format!("face {fi}: missing first owner")),
            };
            let (a, b) = (self.vertices[f.verts[0]], self.vertices[f.verts[1]]);
            let t = sub(b, a);
            let len = norm(t);
            if (len - f.measure).abs() > 1e-12 * len {
                return viol(format!("face {fi}: length {len} != measure {}", f.measure));
            }
            let n = [t[1] / len, -t[0] / len];
            if (n[0] - f.normal[0]).abs() + (n[1] - f.normal[1]).abs() > 1e-12 {
                return viol(format!("face {fi}: stored normal inconsistent with vertices"));
            }
            // Normal points out of owner 0 (and into owner 1): probe a point
            // just off the face midpoint on each side. A centroid test would
            // reject valid non-convex agglomerated elements.
            let mid = self.face_midpoint(fi);
            let delta = 1e-6 * self.elements[o0].diameter;
            let inside = [mid[0] - delta * n[0], mid[1] - delta * n[1]];
            if !self.point_in_element(o0, inside) {
                return viol(format!("face {fi}: normal does not point out of owner 0"));
            }
            match (f.kind.is_boundary(), f.owners[1]) {
                (true, Some(_)) => {
                    return viol(format!("face {fi}: boundary face with two owners"))
                }
                (false, None) => {
                    return viol(format!("face {fi}: internal/interface face with one owner"))
                }
                (false, Some(o1)) => {
                    let outside = [mid[0] + delta * n[0], mid[1] + delta * n[1]];
                    if !self.point_in_element(o1, outside) {
                        return viol(format!("face {fi}: normal does not point into owner 1"));
                    }
                    let (s0, s1) = (self.elements[o0].subdomain, self.elements[o1].subdomain);
                    match f.kind {
                        FaceKind::InternalEl if s0 == Subdomain::El && s1 == Subdomain::El => {}
                        FaceKind::InternalF if s0 == Subdomain::F && s1 == Subdomain::F => {}
                        FaceKind::Interface if s0 == Subdomain::El && s1 == Subdomain::F => {}
                        _ => {
                            return viol(format!(
                                "face {fi}: kind {:?} inconsistent with owner subdomains",
                                f.kind
                            ))
                        }
                    }
                }
                (true, None) => {}
            }
            for o in f.owners.into_iter().flatten() {
                if !self.elements[o].faces.contains(&fi) {
                    return viol(format!("face {fi} not listed in owner {o}'s face list"));
                }
            }
        }
        for &(a, b) in &self.interface_pairs {
            if a != b || self.faces[a].kind != FaceKind::Interface {
                return viol(format!("interface pair ({a},{b}) malformed"));
            }
        }
        let n_pairs = self.faces.iter().filter(|f| f.kind == FaceKind::Interface).count();
        if n_pairs != self.interface_pairs.len() {
            return viol("interface pair list incomplete".into());
        }
        Ok(())
    }
}

/// Maximum pairwise distance among a set of vertex indices.
fn diameter_of(vertices: &[[f64; 2]], ids: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            d = d.max(norm(sub(vertices[a], vertices[b])));
        }
    }
    d
}

fn unique_vertices(tris: &[[usize; 3]]) -> Vec<usize> {
    let mut v: Vec<usize> = tris.iter().flatten().copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn bbox_of(vertices: &[[f64; 2]], ids: &[usize]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &i in ids {
        for k in 0..2 {
            lo[k] = lo[k].min(vertices[i][k]);
            hi[k] = hi[k].max(vertices[i][k]);
        }
    }
    (lo, hi)
}

/// Fill cached element geometry (bbox, diameter, face lists) from the raw
/// vertex/tri/face tables.
fn finalize_mesh(mut mesh: PolyMesh) -> PolyMesh {
    for e in &mut mesh.elements {
        let ids = unique_vertices(&e.tris);
        e.bbox = bbox_of(&mesh.vertices, &ids);
        e.diameter = diameter_of(&mesh.vertices, &ids);
        e.faces.clear();
    }
    for (fi, f) in mesh.faces.iter().enumerate() {
        for o in f.owners.into_iter().flatten() {
            mesh.elements[o].faces.push(fi);
        }
    }
    for e in &mut mesh.elements {
        e.faces.sort_unstable();
    }
    mesh.interface_pairs = (0..mesh.faces.len())
        .filter(|&f| mesh.faces[f].kind == FaceKind::Interface)
        .map(|f| (f, f))
        .collect();
    debug_assert!(mesh.validate().is_ok(), "{:?}", mesh.validate().err());
    mesh
}

/// Internal structured-grid builder: a `nx` x `nrows` grid of rectangular
/// cells starting at `(x0, y0)` with spacing `(dx, dy)`. `classify` maps a
/// cell `(ix, iy)` to its subdomain, or `None` to omit it (holes). `tag`
/// classifies a boundary face from its midpoint, outward normal, and owner
/// subdomain.
fn grid_mesh(
    nx: usize,
    nrows: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    classify: impl Fn(usize, usize) -> Option<Subdomain>,
    tag: impl Fn([f64; 2], [f64; 2], Subdomain) -> FaceKind,
) -> Result<PolyMesh, MeshError> {
    if nx == 0 || nrows == 0 {
        return Err(MeshError::DegenerateGeometry("empty grid".into()));
    }
    let vid = |ix: usize, iy: usize| iy * (nx + 1) + ix;
    let mut vertices = Vec::with_capacity((nx + 1) * (nrows + 1));
    for iy in 0..=nrows {
        for ix in 0..=nx {
            vertices.push([x0 + ix as f64 * dx, y0 + iy as f64 * dy]);
        }
    }
    // cell id map: None for holes
    let mut cell_eid = vec![None; nx * nrows];
    let mut elements = Vec::new();
    for iy in 0..nrows {
        for ix in 0..nx {
            if let Some(sd) = classify(ix, iy) {
                let (a, b, c, d) = (vid(ix, iy), vid(ix + 1, iy), vid(ix + 1, iy + 1), vid(ix, iy + 1));
                cell_eid[iy * nx + ix] = Some(elements.len());
                elements.push(Element {
                    subdomain: sd,
                    tris: vec![[a, b, c], [a, c, d]],
                    bbox: ([0.0; 2], [0.0; 2]),
                    measure: dx * dy,
                    diameter: 0.0,
                    faces: Vec::new(),
                });
            }
        }
    }
    if elements.is_empty() {
        return Err(MeshError::DegenerateGeometry("all cells omitted".into()));
    }
    let at = |ix: i64, iy: i64| -> Option<usize> {
        if ix < 0 || iy < 0 || ix >= nx as i64 || iy >= nrows as i64 {
            None
        } else {
            cell_eid[iy as usize * nx + ix as usize]
        }
    };
    let mut faces = Vec::new();
    let mut push_face = |va: usize, vb: usize, o0: usize, o1: Option<usize>, normal: [f64; 2], measure: f64, kind: FaceKind| {
        faces.push(Face {
            kind,
            verts: [va, vb],
            owners: [Some(o0), o1],
            normal,
            measure,
        });
    };
    for iy in 0..nrows {
        for ix in 0..nx {
            let me = match at(ix as i64, iy as i64) {
                Some(e) => e,
                None => continue,
            };
            let sd = elements[me].subdomain;
            // Four sides: (neighbor offset, normal, face endpoints ordered so
            // the right-hand normal of (vb - va) is the outward normal).
            let sides: [((i64, i64), [f64; 2], (usize, usize)); 4] = [
                ((1, 0), [1.0, 0.0], (vid(ix + 1, iy), vid(ix + 1, iy + 1))),
                ((0, 1), [0.0, 1.0], (vid(ix + 1, iy + 1), vid(ix, iy + 1))),
                ((-1, 0), [-1.0, 0.0], (vid(ix, iy + 1), vid(ix, iy))),
                ((0, -1), [0.0, -1.0], (vid(ix, iy), vid(ix + 1, iy))),
            ];
            for ((ox, oy), n, (va, vb)) in sides {
                let measure = if ox != 0 { dy } else { dx };
                match at(ix as i64 + ox, iy as i64 + oy) {
                    None => {
                        // boundary or hole face
                        let mid = [
                            0.5 * (vertices[va][0] + vertices[vb][0]),
                            0.5 * (vertices[va][1] + vertices[vb][1]),
                        ];
                        push_face(va, vb, me, None, n, measure, tag(mid, n, sd));
                    }
                    Some(nb) => {
                        let nsd = elements[nb].subdomain;
                        if nsd == sd {
                            // internal face, created once from the low side
                            if (ox, oy) == (1, 0) || (ox, oy) == (0, 1) {
                                let kind = match sd {
                                    Subdomain::El => FaceKind::InternalEl,
                                    Subdomain::F => FaceKind::InternalF,
                                };
                                push_face(va, vb, me, Some(nb), n, measure, kind);
                            }
                        } else if sd == Subdomain::El {
                            // interface face, created once from the el side so
                            // the stored normal is n_el
                            push_face(va, vb, me, Some(nb), n, measure, FaceKind::Interface);
                        }
                    }
                }
            }
        }
    }
    Ok(finalize_mesh(PolyMesh {
        vertices,
        elements,
        faces,
        interface_pairs: Vec::new(),
    }))
}

/// Build a conforming structured mesh of one of the built-in two-subdomain
/// geometries. `nx, ny` are cell counts (per subdomain for [`TwoDomainSpec::Stack`]).
pub fn build_structured_mesh(
    nx: usize,
    ny: usize,
    geometry: TwoDomainSpec,
) -> Result<PolyMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::DegenerateGeometry(
            "grid must have at least one cell per direction".into(),
        ));
    }
    match geometry {
        TwoDomainSpec::Stack => grid_mesh(
            nx,
            2 * ny,
            0.0,
            -1.0,
            1.0 / nx as f64,
            1.0 / ny as f64,
            |_, iy| Some(if iy < ny { Subdomain::F } else { Subdomain::El }),
            |_, _, sd| match sd {
                Subdomain::El => FaceKind::DirichletEl,
                Subdomain::F => FaceKind::WallF,
            },
        ),
        TwoDomainSpec::Pocket => {
            if nx % 4 != 0 || ny % 2 != 0 {
                return Err(MeshError::IncompatibleGrid(
                    "pocket geometry needs nx divisible by 4 and ny divisible by 2".into(),
                ));
            }
            let (dx, dy) = (1.0 / nx as f64, 1.0 / ny as f64);
            grid_mesh(
                nx,
                ny,
                0.0,
                0.0,
                dx,
                dy,
                |ix, iy| {
                    let in_pocket = ix >= nx / 4 && ix < 3 * nx / 4 && iy < ny / 2;
                    Some(if in_pocket { Subdomain::F } else { Subdomain::El })
                },
                |mid, _, sd| match sd {
                    Subdomain::F => FaceKind::OutletF, // only the pocket bottom reaches the boundary
                    Subdomain::El => {
                        if mid[1] < 0.5 * dy {
                            FaceKind::DirichletEl // clamped strips on y = 0
                        } else {
                            FaceKind::NeumannEl
                        }
                    }
                },
            )
        }
        TwoDomainSpec::Square(sd) => grid_mesh(
            nx,
            ny,
            0.0,
            0.0,
            1.0 / nx as f64,
            1.0 / ny as f64,
            |_, _| Some(sd),
            |_, _, sd| match sd {
                Subdomain::El => FaceKind::DirichletEl,
                Subdomain::F => FaceKind::WallF,
            },
        ),
    }
}

/// Deterministic 64-bit mixer (splitmix64), used for reproducible inclusion
/// placement without pulling in an RNG dependency.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Sample `n_disks` non-overlapping disk inclusions of diameter `eps` in
/// `(0.1, 0.9)^2`, deterministically from `seed`.
pub fn sample_inclusions(n_disks: usize, eps: f64, seed: u64) -> Vec<([f64; 2], f64)> {
    let mut state = seed ^ 0x5851f42d4c957f2d;
    let mut disks: Vec<([f64; 2], f64)> = Vec::new();
    let mut attempts = 0;
    while disks.len() < n_disks && attempts < 10_000 {
        attempts += 1;
        let c = [0.1 + 0.8 * unit_f64(&mut state), 0.1 + 0.8 * unit_f64(&mut state)];
        if disks
            .iter()
            .all(|&(d, _)| norm(sub(c, d)) > 0.1 + eps)
        {
            disks.push((c, eps / 2.0));
        }
    }
    assert_eq!(disks.len(), n_disks, "inclusion sampling failed to place all disks");
    disks
}

/// Unit-square mesh with disk inclusions removed: cells whose center falls
/// inside a disk are omitted and their exposed faces tagged Dirichlet (the
/// boundary data is prescribed on hole boundaries too). Returns the mesh and
/// the sampled disks.
pub fn build_inclusion_mesh(
    n: usize,
    n_disks: usize,
    eps: f64,
    seed: u64,
) -> Result<(PolyMesh, Vec<([f64; 2], f64)>), MeshError> {
    let disks = sample_inclusions(n_disks, eps, seed);
    let h = 1.0 / n as f64;
    let mesh = grid_mesh(
        n,
        n,
        0.0,
        0.0,
        h,
        h,
        |ix, iy| {
            let c = [(ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h];
            let inside_hole = disks.iter().any(|&(d, r)| norm(sub(c, d)) < r);
            (!inside_hole).then_some(Subdomain::El)
        },
        |_, _, _| FaceKind::DirichletEl,
    )?;
    Ok((mesh, disks))
}

/// Element adjacency graph restricted to same-subdomain internal faces, as
/// sorted neighbor lists.
fn adjacency(mesh: &PolyMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.elements.len()];
    for f in &mesh.faces {
        if f.kind.is_internal() {
            let (a, b) = (f.owners[0].unwrap(), f.owners[1].unwrap());
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    adj
}

/// Partition the elements of one subdomain into `k` face-connected parts by
/// greedy region growing from farthest-point seeds. Returns the part id per
/// element (indices into the subdomain's own part numbering).
fn grow_regions(mesh: &PolyMesh, adj: &[Vec<usize>], ids: &[usize], k: usize) -> Vec<Vec<usize>> {
    assert!(k >= 1 && k <= ids.len());
    let centroids: Vec<[f64; 2]> = ids.iter().map(|&e| mesh.centroid(e)).collect();
    // farthest-point seeding; first seed = lexicographically lowest centroid
    let mut seeds = vec![
        (0..ids.len())
            .min_by(|&a, &b| {
                (centroids[a][1], centroids[a][0])
                    .partial_cmp(&(centroids[b][1], centroids[b][0]))
                    .unwrap()
            })
            .unwrap(),
    ];
    while seeds.len() < k {
        let next = (0..ids.len())
            .filter(|i| !seeds.contains(i))
            .max_by(|&a, &b| {
                let da = seeds
                    .iter()
                    .map(|&s| norm(sub(centroids[a], centroids[s])))
                    .fold(f64::INFINITY, f64::min);
                let db = seeds
                    .iter()
                    .map(|&s| norm(sub(centroids[b], centroids[s])))
                    .fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        seeds.push(next);
    }
    // multi-source BFS growth, round-robin so parts stay balanced
    let local: std::collections::HashMap<usize, usize> =
        ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut part = vec![usize::MAX; ids.len()];
    let mut frontier: Vec<std::collections::VecDeque<usize>> = vec![Default::default(); k];
    for (p, &s) in seeds.iter().enumerate() {
        part[s] = p;
        frontier[p].push_back(s);
    }
    let mut remaining = ids.len() - k;
    while remaining > 0 {
        let mut progressed = false;
        for p in 0..k {
            // claim one unassigned neighbor of this part's frontier
            'claim: while let Some(&head) = frontier[p].front() {
                for &nb in &adj[ids[head]] {
                    if let Some(&nl) = local.get(&nb) {
                        if part[nl] == usize::MAX {
                            part[nl] = p;
                            frontier[p].push_back(nl);
                            remaining -= 1;
                            progressed = true;
                            break 'claim;
                        }
                    }
                }
                frontier[p].pop_front();
            }
        }
        assert!(
            progressed || remaining == 0,
            "region growing stalled: subdomain not face-connected"
        );
    }
    let mut parts = vec![Vec::new(); k];
    for (i, &p) in part.iter().enumerate() {
        parts[p].push(ids[i]);
    }
    parts
}

/// Split a part into face-connected components (BFS); identity for connected
/// parts.
fn connected_components(adj: &[Vec<usize>], members: &[usize]) -> Vec<Vec<usize>> {
    let set: std::collections::HashSet<usize> = members.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut comps = Vec::new();
    for &start in members {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        seen.insert(start);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(e) = queue.pop_front() {
            for &nb in &adj[e] {
                if set.contains(&nb) && seen.insert(nb) {
                    comp.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Agglomerate a mesh into `n_parts_per_subdomain` polytopal elements per
/// subdomain by greedy region growing over the element adjacency graph.
///
/// Agglomeration never merges across the interface or subdomain boundaries.
/// Disconnected parts (which greedy growing does not produce, but a caller-
/// supplied partition might) are split into connected components, so the
/// delivered part count may exceed the request. With `n_parts` equal to the
/// element count the output is identical to the input.
pub fn agglomerate(mesh: &PolyMesh, n_parts_per_subdomain: usize) -> Result<PolyMesh, MeshError> {
    let adj = adjacency(mesh);
    let mut parts: Vec<Vec<usize>> = Vec::new();
    for sd in [Subdomain::El, Subdomain::F] {
        let ids = mesh.subdomain_elements(sd);
        if ids.is_empty() {
            continue;
        }
        if n_parts_per_subdomain == 0 || n_parts_per_subdomain > ids.len() {
            return Err(MeshError::BadAgglomeration(format!(
                "requested {n_parts_per_subdomain} parts for a subdomain of {} elements",
                ids.len()
            )));
        }
        for part in grow_regions(mesh, &adj, &ids, n_parts_per_subdomain) {
            for comp in connected_components(&adj, &part) {
                parts.push(comp);
            }
        }
    }
    // stable ordering: by lowest member element id (makes identity
    // agglomeration reproduce the input ordering exactly)
    parts.sort_by_key(|p| p[0]);
    let mut part_of = vec![usize::MAX; mesh.elements.len()];
    for (pi, p) in parts.iter().enumerate() {
        for &e in p {
            part_of[e] = pi;
        }
    }
    let elements: Vec<Element> = parts
        .iter()
        .map(|p| Element {
            subdomain: mesh.elements[p[0]].subdomain,
            tris: p.iter().flat_map(|&e| mesh.elements[e].tris.clone()).collect(),
            bbox: ([0.0; 2], [0.0; 2]),
            measure: p.iter().map(|&e| mesh.elements[e].measure).sum(),
            diameter: 0.0,
            faces: Vec::new(),
        })
        .collect();
    let faces: Vec<Face> = mesh
        .faces
        .iter()
        .filter_map(|f| {
            let o0 = part_of[f.owners[0].unwrap()];
            let o1 = f.owners[1].map(|o| part_of[o]);
            if f.kind.is_internal() && o1 == Some(o0) {
                return None; // absorbed into the agglomerate
            }
            Some(Face {
                kind: f.kind,
                verts: f.verts,
                owners: [Some(o0), o1],
                normal: f.normal,
                measure: f.measure,
            })
        })
        .collect();
    Ok(finalize_mesh(PolyMesh {
        vertices: mesh.vertices.clone(),
        elements,
        faces,
        interface_pairs: Vec::new(),
    }))
}
