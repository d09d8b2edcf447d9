//! Broken DG norms and the trajectory energy norm.
//!
//! Each broken norm is a volume part plus a penalty-weighted jump part over
//! the same faces and with the same penalty coefficients as the assembled
//! operators. The energy norm combines instantaneous kinetic/elastic/storage
//! terms with trapezoidal time integrals of the dissipative terms
//! (compartment Darcy norms, viscous and pressure norms, interface friction).
//!
//! Every function can evaluate either a plain field (its norm, with
//! single-sided boundary jumps measured against zero data) or an error field
//! (discrete minus exact closure, with Dirichlet jumps measured against the
//! exact trace). Reference magnitudes of an exact solution use the volume
//! parts only: a smooth field has no jumps, so its penalty terms are zero by
//! definition rather than by cancellation.

use crate::geometry::{ddot, dot, isotropic_stress, sub, sym_outer, tangential};
use crate::mesh::{FaceKind, PolyMesh};
use crate::params::{penalty_coefficients, MaterialParams, PenaltyConfig};
use crate::space::{DGSpace, SpaceSet};

/// A vector-valued exact field with its gradient (rows = components).
pub struct ExactVector<'a> {
    pub value: &'a dyn Fn([f64; 2]) -> [f64; 2],
    pub grad: &'a dyn Fn([f64; 2]) -> [[f64; 2]; 2],
}

/// A scalar exact field with its gradient.
pub struct ExactScalar<'a> {
    pub value: &'a dyn Fn([f64; 2]) -> f64,
    pub grad: &'a dyn Fn([f64; 2]) -> [f64; 2],
}

/// Exact fields of the full coupled state at one time instant.
pub struct ExactFields<'a> {
    pub d: ExactVector<'a>,
    /// Time derivative of the displacement.
    pub z: ExactVector<'a>,
    pub p: Vec<ExactScalar<'a>>,
    pub u: ExactVector<'a>,
    pub q: ExactScalar<'a>,
}

/// Dof slices of the coupled state at one time instant.
pub struct StateSlices<'a> {
    pub d: &'a [f64],
    pub z: &'a [f64],
    pub p: Vec<&'a [f64]>,
    pub u: &'a [f64],
    pub q: &'a [f64],
}

/// One squared broken norm split into its volume and jump parts.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrokenNorm {
    pub volume: f64,
    pub jumps: f64,
}

impl BrokenNorm {
    pub fn total(&self) -> f64 {
        self.volume + self.jumps
    }
}

/// All squared norm contributions of one state (optionally relative to exact
/// fields).
#[derive(Debug, Clone, Default)]
pub struct InstantNorms {
    /// rho_el ||z||^2 over the poroelastic domain.
    pub kinetic_el: f64,
    /// Elastic broken norm of d.
    pub elastic: BrokenNorm,
    /// c_j ||p_j||^2 per compartment.
    pub storage: Vec<f64>,
    /// rho_f ||u||^2 over the fluid domain.
    pub kinetic_f: f64,
    /// Darcy broken norm of p_j per compartment.
    pub darcy: Vec<BrokenNorm>,
    /// beta_j^e ||p_j||^2 per compartment.
    pub external: Vec<f64>,
    /// Viscous broken norm of u (jumps on internal fluid faces only).
    pub viscous: BrokenNorm,
    /// Fluid pressure norm (L^2 + jumps on internal and wall faces).
    pub pressure: BrokenNorm,
    /// Interface friction quadratic form of the slip u - z.
    pub friction: f64,
}

impl InstantNorms {
    /// Squared instantaneous energy: kinetic + elastic + storage terms.
    pub fn instant_squared(&self, with_jumps: bool) -> f64 {
        let elastic = if with_jumps {
            self.elastic.total()
        } else {
            self.elastic.volume
        };
        self.kinetic_el + elastic + self.storage.iter().sum::<f64>() + self.kinetic_f
    }

    /// Squared dissipation rate: the integrand of the energy norm's time
    /// integrals.
    pub fn dissipation_rate(&self, with_jumps: bool) -> f64 {
        let part = |n: &BrokenNorm| if with_jumps { n.total() } else { n.volume };
        self.darcy.iter().map(part).sum::<f64>()
            + self.external.iter().sum::<f64>()
            + part(&self.viscous)
            + if with_jumps {
                self.pressure.total()
            } else {
                self.pressure.volume
            }
            + self.friction
    }
}

fn eval_vector(space: &DGSpace, coeffs: &[f64], local: usize, x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (v, g) = space.eval_basis(local, x);
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for comp in 0..2 {
        let off = space.vector_offset(local, comp);
        for k in 0..space.nb {
            let c = coeffs[off + k];
            val[comp] += c * v[k];
            grad[comp][0] += c * g[k][0];
            grad[comp][1] += c * g[k][1];
        }
    }
    (val, grad)
}

fn eval_scalar_grad(space: &DGSpace, coeffs: &[f64], local: usize, x: [f64; 2]) -> (f64, [f64; 2]) {
    let (v, g) = space.eval_basis(local, x);
    let off = space.scalar_offset(local);
    let mut val = 0.0;
    let mut grad = [0.0; 2];
    for k in 0..space.nb {
        let c = coeffs[off + k];
        val += c * v[k];
        grad[0] += c * g[k][0];
        grad[1] += c * g[k][1];
    }
    (val, grad)
}

/// Quadrature order used for norm evaluation: two above assembly, so that
/// the error of smooth exact fields is dominated by discretization rather
/// than by integration.
pub fn norm_order(degree: usize) -> usize {
    2 * degree + 4
}

/// Compute all squared broken-norm contributions of a state. With `exact`
/// present, every field is replaced by (discrete - exact) and Dirichlet-face
/// jumps are measured against the exact trace.
pub fn broken_norms(
    mesh: &PolyMesh,
    spaces: &SpaceSet,
    params: &MaterialParams,
    config: &PenaltyConfig,
    state: &StateSlices,
    exact: Option<&ExactFields>,
) -> InstantNorms {
    let nj = params.n_compartments();
    assert_eq!(state.p.len(), nj);
    if let Some(e) = exact {
        assert_eq!(e.p.len(), nj);
    }
    let order = norm_order(spaces.degree());
    let mut out = InstantNorms {
        storage: vec![0.0; nj],
        darcy: vec![BrokenNorm::default(); nj],
        external: vec![0.0; nj],
        ..Default::default()
    };
    // poroelastic volume terms
    for (l, &e) in spaces.el.elem_ids.iter().enumerate() {
        let lp = spaces.p.local(e).unwrap();
        let rule = DGSpace::element_quadrature(mesh, e, order);
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let (mut zv, _) = eval_vector(&spaces.el, state.z, l, x);
            let (mut dv, mut dg) = eval_vector(&spaces.el, state.d, l, x);
            if let Some(ex) = exact {
                zv = sub(zv, (ex.z.value)(x));
                dv = sub(dv, (ex.d.value)(x));
                let eg = (ex.d.grad)(x);
                for r in 0..2 {
                    for c in 0..2 {
                        dg[r][c] -= eg[r][c];
                    }
                }
            }
            let _ = dv;
            out.kinetic_el += w * params.rho_el * dot(zv, zv);
            let eps = [
                [dg[0][0], 0.5 * (dg[0][1] + dg[1][0])],
                [0.5 * (dg[0][1] + dg[1][0]), dg[1][1]],
            ];
            let stress = isotropic_stress(eps, params.mu_el, params.lambda);
            out.elastic.volume += w * ddot(stress, eps);
            for j in 0..nj {
                let (mut pv, mut pg) = eval_scalar_grad(&spaces.p, state.p[j], lp, x);
                if let Some(ex) = exact {
                    pv -= (ex.p[j].value)(x);
                    pg = sub(pg, (ex.p[j].grad)(x));
                }
                let comp = &params.compartments[j];
                out.storage[j] += w * comp.c * pv * pv;
                out.external[j] += w * comp.beta_e * pv * pv;
                out.darcy[j].volume += w * comp.k / comp.mu * dot(pg, pg);
            }
        }
    }
    // fluid volume terms
    for (l, &e) in spaces.v.elem_ids.iter().enumerate() {
        let lq = spaces.q.local(e).unwrap();
        let rule = DGSpace::element_quadrature(mesh, e, order);
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let (mut uv, mut ug) = eval_vector(&spaces.v, state.u, l, x);
            let (mut qv, _) = eval_scalar_grad(&spaces.q, state.q, lq, x);
            if let Some(ex) = exact {
                uv = sub(uv, (ex.u.value)(x));
                let eg = (ex.u.grad)(x);
                for r in 0..2 {
                    for c in 0..2 {
                        ug[r][c] -= eg[r][c];
                    }
                }
                qv -= (ex.q.value)(x);
            }
            out.kinetic_f += w * params.rho_f * dot(uv, uv);
            let eps = [
                [ug[0][0], 0.5 * (ug[0][1] + ug[1][0])],
                [0.5 * (ug[0][1] + ug[1][0]), ug[1][1]],
            ];
            out.viscous.volume += w * 2.0 * params.mu_f * ddot(eps, eps);
            out.pressure.volume += w * qv * qv;
        }
    }
    // face jump terms
    let friction = params.gamma * params.mu_f / params.interface().k.sqrt();
    for (fi, f) in mesh.faces.iter().enumerate() {
        let rule = DGSpace::face_quadrature(mesh, fi, order);
        match f.kind {
            FaceKind::InternalEl => {
                let (eta, zeta, _, _) = penalty_coefficients(mesh, fi, params, config).unwrap();
                let (o0, o1) = (f.owners[0].unwrap(), f.owners[1].unwrap());
                let (l0, l1) = (spaces.el.local(o0).unwrap(), spaces.el.local(o1).unwrap());
                let (lp0, lp1) = (spaces.p.local(o0).unwrap(), spaces.p.local(o1).unwrap());
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    // exact fields are single-valued: they drop out of
                    // internal jumps
                    let (d0, _) = eval_vector(&spaces.el, state.d, l0, x);
                    let (d1, _) = eval_vector(&spaces.el, state.d, l1, x);
                    let jump = sym_outer(sub(d0, d1), f.normal);
                    out.elastic.jumps += w * eta * ddot(jump, jump);
                    for j in 0..nj {
                        let (p0, _) = eval_scalar_grad(&spaces.p, state.p[j], lp0, x);
                        let (p1, _) = eval_scalar_grad(&spaces.p, state.p[j], lp1, x);
                        out.darcy[j].jumps += w * zeta[j] * (p0 - p1) * (p0 - p1);
                    }
                }
            }
            FaceKind::DirichletEl => {
                let (eta, zeta, _, _) = penalty_coefficients(mesh, fi, params, config).unwrap();
                let l = spaces.el.local(f.owners[0].unwrap()).unwrap();
                let lp = spaces.p.local(f.owners[0].unwrap()).unwrap();
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let (mut d0, _) = eval_vector(&spaces.el, state.d, l, x);
                    if let Some(ex) = exact {
                        d0 = sub(d0, (ex.d.value)(x));
                    }
                    let jump = sym_outer(d0, f.normal);
                    out.elastic.jumps += w * eta * ddot(jump, jump);
                    for j in 0..nj {
                        let (mut p0, _) = eval_scalar_grad(&spaces.p, state.p[j], lp, x);
                        if let Some(ex) = exact {
                            p0 -= (ex.p[j].value)(x);
                        }
                        out.darcy[j].jumps += w * zeta[j] * p0 * p0;
                    }
                }
            }
            FaceKind::InternalF => {
                let (_, _, gamma_v, gamma_p) =
                    penalty_coefficients(mesh, fi, params, config).unwrap();
                let (o0, o1) = (f.owners[0].unwrap(), f.owners[1].unwrap());
                let (l0, l1) = (spaces.v.local(o0).unwrap(), spaces.v.local(o1).unwrap());
                let (lq0, lq1) = (spaces.q.local(o0).unwrap(), spaces.q.local(o1).unwrap());
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let (u0, _) = eval_vector(&spaces.v, state.u, l0, x);
                    let (u1, _) = eval_vector(&spaces.v, state.u, l1, x);
                    let jump = sym_outer(sub(u0, u1), f.normal);
                    out.viscous.jumps += w * gamma_v * ddot(jump, jump);
                    let (q0, _) = eval_scalar_grad(&spaces.q, state.q, lq0, x);
                    let (q1, _) = eval_scalar_grad(&spaces.q, state.q, lq1, x);
                    out.pressure.jumps += w * gamma_p * (q0 - q1) * (q0 - q1);
                }
            }
            FaceKind::WallF => {
                // the velocity norm has no wall jumps; the pressure norm does
                let (_, _, _, gamma_p) = penalty_coefficients(mesh, fi, params, config).unwrap();
                let lq = spaces.q.local(f.owners[0].unwrap()).unwrap();
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let (mut q0, _) = eval_scalar_grad(&spaces.q, state.q, lq, x);
                    if let Some(ex) = exact {
                        q0 -= (ex.q.value)(x);
                    }
                    out.pressure.jumps += w * gamma_p * q0 * q0;
                }
            }
            FaceKind::Interface => {
                if friction == 0.0 {
                    continue;
                }
                let (o_el, o_f) = (f.owners[0].unwrap(), f.owners[1].unwrap());
                let l_el = spaces.el.local(o_el).unwrap();
                let l_f = spaces.v.local(o_f).unwrap();
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let (mut zv, _) = eval_vector(&spaces.el, state.z, l_el, x);
                    let (mut uv, _) = eval_vector(&spaces.v, state.u, l_f, x);
                    if let Some(ex) = exact {
                        zv = sub(zv, (ex.z.value)(x));
                        uv = sub(uv, (ex.u.value)(x));
                    }
                    let slip = tangential(sub(uv, zv), f.normal);
                    out.friction += w * friction * dot(slip, slip);
                }
            }
            FaceKind::NeumannEl | FaceKind::OutletF => {}
        }
    }
    out
}

/// Running energy norm of a trajectory: instantaneous part of the latest
/// state plus trapezoidal time integrals of the dissipation terms over all
/// pushed states.
pub struct EnergyAccumulator {
    with_jumps: bool,
    integral: f64,
    last_rate: Option<f64>,
    instant: f64,
}

impl EnergyAccumulator {
    pub fn new(with_jumps: bool) -> Self {
        EnergyAccumulator {
            with_jumps,
            integral: 0.0,
            last_rate: None,
            instant: 0.0,
        }
    }

    /// Push the state at the next time level (`dt` since the previous one;
    /// ignored on the first push) and return the current energy norm.
    pub fn push(&mut self, dt: f64, norms: &InstantNorms) -> f64 {
        let rate = norms.dissipation_rate(self.with_jumps);
        if let Some(prev) = self.last_rate {
            self.integral += 0.5 * dt * (prev + rate);
        }
        self.last_rate = Some(rate);
        self.instant = norms.instant_squared(self.with_jumps);
        self.energy()
    }

    /// Current energy norm (sqrt of instantaneous + integral parts).
    pub fn energy(&self) -> f64 {
        (self.instant + self.integral).sqrt()
    }

    /// Accumulated time integral of the dissipation terms.
    pub fn integral(&self) -> f64 {
        self.integral
    }
}

/// Relative energy error with a zero-denominator guard.
pub fn relative_energy_error(error_norm: f64, reference_norm: f64) -> f64 {
    if reference_norm == 0.0 {
        if error_norm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        error_norm / reference_norm
    }
}

/// Least-squares slope of log(err) against log(h).
pub fn fit_slope(h: &[f64], err: &[f64]) -> f64 {
    assert_eq!(h.len(), err.len());
    assert!(h.len() >= 2, "slope needs at least two points");
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{assemble_interface, assemble_norm_matrices, scalar_mass, vector_mass};
    use crate::mesh::{build_structured_mesh, TwoDomainSpec};

    fn setup(n: usize, m: usize) -> (PolyMesh, SpaceSet, MaterialParams, PenaltyConfig) {
        let mesh = build_structured_mesh(n, n, TwoDomainSpec::Stack).unwrap();
        let spaces = SpaceSet::new(&mesh, m).unwrap();
        (mesh, spaces, MaterialParams::unit(), PenaltyConfig::default())
    }

    fn zero_state(spaces: &SpaceSet) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            vec![0.0; spaces.el.n_vector_dofs()],
            vec![0.0; spaces.el.n_vector_dofs()],
            vec![0.0; spaces.p.n_scalar_dofs()],
            vec![0.0; spaces.v.n_vector_dofs()],
            vec![0.0; spaces.q.n_scalar_dofs()],
        )
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let (mesh, spaces, params, config) = setup(2, 1);
        let (d, z, p, u, q) = zero_state(&spaces);
        let state = StateSlices {
            d: &d,
            z: &z,
            p: vec![&p],
            u: &u,
            q: &q,
        };
        let norms = broken_norms(&mesh, &spaces, &params, &config, &state, None);
        assert_eq!(norms.instant_squared(true), 0.0);
        assert_eq!(norms.dissipation_rate(true), 0.0);
    }

    #[test]
    fn constant_fluid_pressure_norm_is_scaled_measure() {
        // constant q has no jumps on internal faces; wall jumps are
        // single-sided and nonzero, so compare the volume part: |c| sqrt(|O_f|)
        let (mesh, spaces, params, config) = setup(3, 2);
        let (d, z, p, u, _) = zero_state(&spaces);
        let c = -2.25;
        let q = spaces.q.project(&mesh, 4, |_| c);
        let state = StateSlices {
            d: &d,
            z: &z,
            p: vec![&p],
            u: &u,
            q: &q,
        };
        let norms = broken_norms(&mesh, &spaces, &params, &config, &state, None);
        let expect = c * c * 1.0; // |Omega_f| = 1
        assert!((norms.pressure.volume - expect).abs() < 1e-12);
    }

    #[test]
    fn norm_matrix_duality() {
        let (mesh, spaces, params, config) = setup(2, 2);
        let mats = assemble_norm_matrices(&mesh, &spaces, &params, &config);
        let mut seed = 7u64;
        let mut rand = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let d: Vec<f64> = (0..spaces.el.n_vector_dofs()).map(|_| rand()).collect();
        let z: Vec<f64> = (0..spaces.el.n_vector_dofs()).map(|_| rand()).collect();
        let p: Vec<f64> = (0..spaces.p.n_scalar_dofs()).map(|_| rand()).collect();
        let u: Vec<f64> = (0..spaces.v.n_vector_dofs()).map(|_| rand()).collect();
        let q: Vec<f64> = (0..spaces.q.n_scalar_dofs()).map(|_| rand()).collect();
        let state = StateSlices {
            d: &d,
            z: &z,
            p: vec![&p],
            u: &u,
            q: &q,
        };
        let norms = broken_norms(&mesh, &spaces, &params, &config, &state, None);
        let dual = |m: &crate::sparse::Csr, v: &[f64]| -> f64 {
            m.matvec(v).iter().zip(v).map(|(a, b)| a * b).sum()
        };
        let checks = [
            (norms.elastic.total(), dual(&mats.d, &d)),
            (norms.darcy[0].total(), dual(&mats.p[0], &p)),
            (norms.viscous.total(), dual(&mats.u, &u)),
            (norms.pressure.total(), dual(&mats.q, &q)),
        ];
        for (by_quad, by_matrix) in checks {
            assert!(
                (by_quad - by_matrix).abs() <= 1e-11 * by_quad.abs().max(1e-30),
                "norm {by_quad} vs matrix form {by_matrix}"
            );
        }
        // mass-matrix counterparts of the L^2 terms
        let m_el = vector_mass(&mesh, &spaces.el).scale(params.rho_el);
        assert!((norms.kinetic_el - dual(&m_el, &z)).abs() < 1e-11 * norms.kinetic_el);
        let m_q = scalar_mass(&mesh, &spaces.q);
        assert!((norms.pressure.volume - dual(&m_q, &q)).abs() < 1e-11 * norms.pressure.volume);
        // friction quadratic form against the assembled G blocks
        let blocks = assemble_interface(&mesh, &spaces.el, &spaces.p, &spaces.v, &params);
        let mut form = dual(&blocks.g_elel, &z) + dual(&blocks.g_ff, &u);
        form -= 2.0 * blocks.g_fel.matvec(&z).iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        assert!(
            (norms.friction - form).abs() <= 1e-11 * norms.friction.abs().max(1e-30),
            "friction {} vs G form {form}",
            norms.friction
        );
    }

    #[test]
    fn reproduction_error_is_zero() {
        // degree-2 exact fields, degree-2 space: the projection reproduces
        // them and the error norm must vanish
        let (mesh, spaces, params, config) = setup(2, 2);
        let dex = |x: [f64; 2]| [x[0] * x[1], x[1] * x[1]];
        let dgrad = |x: [f64; 2]| [[x[1], x[0]], [0.0, 2.0 * x[1]]];
        let pex = |x: [f64; 2]| x[0] + 2.0 * x[1] * x[1];
        let pgrad = |x: [f64; 2]| [1.0, 4.0 * x[1]];
        let zex = |_x: [f64; 2]| [0.0, 0.0];
        let zgrad = |_x: [f64; 2]| [[0.0, 0.0], [0.0, 0.0]];
        let d = spaces.el.project_vector(&mesh, 8, dex);
        let z = vec![0.0; spaces.el.n_vector_dofs()];
        let p = spaces.p.project(&mesh, 8, pex);
        let u = spaces.v.project_vector(&mesh, 8, dex);
        let q = spaces.q.project(&mesh, 8, pex);
        let state = StateSlices {
            d: &d,
            z: &z,
            p: vec![&p],
            u: &u,
            q: &q,
        };
        let exact = ExactFields {
            d: ExactVector { value: &dex, grad: &dgrad },
            z: ExactVector { value: &zex, grad: &zgrad },
            p: vec![ExactScalar { value: &pex, grad: &pgrad }],
            u: ExactVector { value: &dex, grad: &dgrad },
            q: ExactScalar { value: &pex, grad: &pgrad },
        };
        let norms = broken_norms(&mesh, &spaces, &params, &config, &state, Some(&exact));
        let total = norms.instant_squared(true) + norms.dissipation_rate(true);
        assert!(total < 1e-20, "reproduction residual {total}");
    }

    #[test]
    fn accumulator_matches_hand_trapezoid() {
        let mut acc = EnergyAccumulator::new(true);
        let mut n0 = InstantNorms::default();
        n0.kinetic_el = 4.0;
        n0.friction = 2.0;
        let e0 = acc.push(0.1, &n0);
        assert!((e0 - 2.0).abs() < 1e-15); // sqrt(4), integral empty
        let mut n1 = InstantNorms::default();
        n1.kinetic_el = 1.0;
        n1.friction = 6.0;
        let e1 = acc.push(0.1, &n1);
        // integral = 0.5 * 0.1 * (2 + 6) = 0.4; instant = 1
        assert!((e1 - (1.0f64 + 0.4).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_kills_friction_component() {
        let (mesh, spaces, mut params, config) = setup(2, 1);
        params.gamma = 0.0;
        let u = spaces.v.project_vector(&mesh, 4, |_| [3.0, 0.0]);
        let (d, z, p, _, q) = zero_state(&spaces);
        let state = StateSlices {
            d: &d,
            z: &z,
            p: vec![&p],
            u: &u,
            q: &q,
        };
        let norms = broken_norms(&mesh, &spaces, &params, &config, &state, None);
        assert_eq!(norms.friction, 0.0);
        params.gamma = 1.0;
        let norms = broken_norms(&mesh, &spaces, &params, &config, &state, None);
        // slip = tangential component 3 along the unit-measure interface
        assert!((norms.friction - 9.0).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_exact_power() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let err: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v * v).collect();
        assert!((fit_slope(&h, &err) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relative_error_guards_zero_denominator() {
        assert_eq!(relative_energy_error(0.0, 0.0), 0.0);
        assert!(relative_energy_error(1.0, 0.0).is_infinite());
        assert!((relative_energy_error(1.0, 4.0) - 0.25).abs() < 1e-15);
    }
}
