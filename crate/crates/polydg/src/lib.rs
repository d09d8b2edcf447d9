//! Polytopal discontinuous Galerkin (PolyDG) kernels and solvers for a coupled
//! multiple-network poroelasticity / (Navier-)Stokes system with
//! Beavers-Joseph-Saffman (BJS) interface coupling.
//!
//! The crate provides:
//!
//! * polytopal meshes of two-subdomain geometries with classified faces and
//!   mesh agglomeration ([`mesh`]),
//! * broken modal polynomial spaces with quadrature by sub-tessellation
//!   ([`quad`], [`space`]) and the DG trace operators ([`trace`]),
//! * assembly of every bilinear/trilinear form of the coupled system,
//!   including symmetric interior penalties, interface coupling, semi-implicit
//!   advection, and outlet backflow stabilization ([`forms`]),
//! * the fully discrete Newmark-beta / Crank-Nicolson stepping scheme with
//!   derived flowrate/pressure observables ([`system`]),
//! * broken DG norms and trajectory energy norms ([`norms`]),
//! * manufactured solutions, source generation, and convergence studies
//!   ([`mms`]),
//! * an interior-penalty Poisson solver and the agglomerated-vs-standard mesh
//!   benchmark ([`poisson`]),
//! * plain-text export/import of meshes, fields, matrices, and time series
//!   ([`io`]).
//!
//! All geometry handling is two-dimensional; the quadrature, multi-index, and
//! small tensor kernels are dimension-generic and unit-tested at d = 3 as
//! well.

pub mod forms;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod mms;
pub mod norms;
pub mod params;
pub mod poisson;
pub mod quad;
pub mod space;
pub mod sparse;
pub mod system;
pub mod trace;

pub use mesh::{FaceKind, PolyMesh, Subdomain};
pub use params::{MaterialParams, PenaltyConfig};
pub use space::DGSpace;
pub use system::{FluidMode, SystemState, TimeScheme};
