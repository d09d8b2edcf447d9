//! Fully discrete coupled scheme.
//!
//! The semi-discrete blocks are advanced with Newmark's beta-method for the
//! elastic momentum balance and the theta-method (Crank-Nicolson by default)
//! for the compartment mass balances, the fluid momentum balance, and the
//! continuity equation. Each step solves
//!
//! ```text
//!   A1(u^n, u^{n-1}) X^{n+1} = A2 X^n + F^{n+1},
//! ```
//!
//! over the stacked unknown `X = [D; Z; A; P_0; ...; P_{J-1}; U; P]`, where
//! `Z` and `A` are the auxiliary Newmark velocity and acceleration of the
//! displacement `D`. The advection operator (linearized at the extrapolated
//! velocity `u* = 3/2 u^n - 1/2 u^{n-1}`) and the outlet backflow
//! stabilization enter `A1` only, so `A2` is constant; in Stokes mode `A1`
//! is constant as well and its factorization is cached across steps.

use crate::forms::{
    advection_wall_correction, assemble_advection, assemble_backflow, assemble_fluid,
    assemble_interface, assemble_loads, assemble_poroelastic, FluidBlocks, InterfaceBlocks,
    LoadData, Loads, PoroelasticBlocks,
};
use crate::mesh::{FaceKind, PolyMesh, Subdomain};
use crate::norms::{broken_norms, norm_order, EnergyAccumulator, StateSlices};
use crate::params::{MaterialParams, ParamError, PenaltyConfig};
use crate::space::{DGSpace, SpaceError, SpaceSet};
use crate::sparse::{Coo, Csr, Factorized, SolveError};
use std::ops::Range;
use thiserror::Error;

/// Treatment of the free-fluid momentum balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluidMode {
    /// Linear viscous flow: no advection, no backflow stabilization.
    Stokes,
    /// Semi-implicit advection plus backflow stabilization on outlets.
    NavierStokes,
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("invalid time scheme: {0}")]
    Scheme(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Time discretization parameters: step size, Newmark pair (beta_N, gamma_N)
/// for the elastic momentum balance, and theta for all other equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScheme {
    pub dt: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl TimeScheme {
    /// Second-order defaults: Newmark (1/4, 1/2) with Crank-Nicolson
    /// (theta = 1/2).
    pub fn new(dt: f64) -> Result<Self, SystemError> {
        Self::with_parameters(dt, 0.25, 0.5, 0.5)
    }

    pub fn with_parameters(dt: f64, beta: f64, gamma: f64, theta: f64) -> Result<Self, SystemError> {
        let mut bad = Vec::new();
        if !(dt > 0.0 && dt.is_finite()) {
            bad.push(format!("dt must be a positive finite number (got {dt})"));
        }
        if !(beta > 0.0 && beta <= 0.5) {
            bad.push(format!("beta must lie in (0, 1/2] (got {beta})"));
        }
        if !(0.5..=1.0).contains(&gamma) {
            bad.push(format!("gamma must lie in [1/2, 1] (got {gamma})"));
        }
        if !(0.5..=1.0).contains(&theta) {
            bad.push(format!("theta must lie in [1/2, 1] (got {theta})"));
        }
        if bad.is_empty() {
            Ok(TimeScheme { dt, beta, gamma, theta })
        } else {
            Err(SystemError::Scheme(bad.join("; ")))
        }
    }
}

/// Dof ranges of the stacked coupled vector
/// `X = [D; Z; A; P_0; ...; P_{J-1}; U; P]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    /// Vector dofs of the displacement space (shared by D, Z, A).
    pub n_d: usize,
    /// Scalar dofs of one compartment pressure.
    pub n_s: usize,
    /// Number of compartments J.
    pub n_j: usize,
    /// Vector dofs of the fluid velocity space.
    pub n_u: usize,
    /// Scalar dofs of the fluid pressure space.
    pub n_q: usize,
}

impl Layout {
    pub fn d(&self) -> Range<usize> {
        0..self.n_d
    }

    pub fn z(&self) -> Range<usize> {
        self.n_d..2 * self.n_d
    }

    pub fn a(&self) -> Range<usize> {
        2 * self.n_d..3 * self.n_d
    }

    pub fn p(&self, j: usize) -> Range<usize> {
        assert!(j < self.n_j, "compartment index out of range");
        let start = 3 * self.n_d + j * self.n_s;
        start..start + self.n_s
    }

    pub fn u(&self) -> Range<usize> {
        let start = 3 * self.n_d + self.n_j * self.n_s;
        start..start + self.n_u
    }

    pub fn q(&self) -> Range<usize> {
        let start = 3 * self.n_d + self.n_j * self.n_s + self.n_u;
        start..start + self.n_q
    }

    pub fn total(&self) -> usize {
        3 * self.n_d + self.n_j * self.n_s + self.n_u + self.n_q
    }
}

/// Coupled state at one time level.
#[derive(Debug, Clone)]
pub struct SystemState {
    /// Time index n.
    pub n: usize,
    /// Time t^n.
    pub time: f64,
    /// Stacked coefficient vector X^n.
    pub x: Vec<f64>,
    /// Fluid velocity at the previous level (u^{n-1}), kept for the
    /// advecting-velocity extrapolation. Equals u^0 at the first step.
    pub u_prev: Vec<f64>,
}

impl SystemState {
    pub fn d<'a>(&'a self, l: &Layout) -> &'a [f64] {
        &self.x[l.d()]
    }

    pub fn z<'a>(&'a self, l: &Layout) -> &'a [f64] {
        &self.x[l.z()]
    }

    pub fn a<'a>(&'a self, l: &Layout) -> &'a [f64] {
        &self.x[l.a()]
    }

    pub fn p<'a>(&'a self, l: &Layout, j: usize) -> &'a [f64] {
        &self.x[l.p(j)]
    }

    pub fn u<'a>(&'a self, l: &Layout) -> &'a [f64] {
        &self.x[l.u()]
    }

    pub fn q<'a>(&'a self, l: &Layout) -> &'a [f64] {
        &self.x[l.q()]
    }

    /// Field slices in the shape the norm evaluators expect.
    pub fn slices<'a>(&'a self, l: &Layout) -> StateSlices<'a> {
        StateSlices {
            d: self.d(l),
            z: self.z(l),
            p: (0..l.n_j).map(|j| self.p(l, j)).collect(),
            u: self.u(l),
            q: self.q(l),
        }
    }
}

/// Problem data as functions of space and time. Every method defaults to
/// zero so implementations only state the nonzero pieces.
pub trait TimeData {
    /// Poroelastic body force.
    fn f_el(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Mass source of compartment j.
    fn source(&self, _j: usize, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }

    /// Fluid body force.
    fn f_f(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Dirichlet displacement datum.
    fn d_bc(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Time derivative of the Dirichlet displacement datum.
    fn d_bc_dt(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Dirichlet datum of compartment pressure j.
    fn p_bc(&self, _j: usize, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }

    /// Wall velocity datum.
    fn u_bc(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Outlet normal stress datum.
    fn p_out(&self, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }

    /// Initial displacement.
    fn d0(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Initial displacement rate.
    fn z0(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Initial compartment pressure j.
    fn p0(&self, _j: usize, _x: [f64; 2]) -> f64 {
        0.0
    }

    /// Initial fluid velocity.
    fn u0(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Initial fluid pressure.
    fn q0(&self, _x: [f64; 2]) -> f64 {
        0.0
    }
}

/// All-zero problem data.
pub struct ZeroData;

impl TimeData for ZeroData {}

/// Second-order extrapolation of the advecting velocity to the midpoint of
/// the upcoming step: `u* = 3/2 u^n - 1/2 u^{n-1}`.
pub fn extrapolate_velocity(u_n: &[f64], u_nm1: &[f64]) -> Vec<f64> {
    assert_eq!(u_n.len(), u_nm1.len(), "velocity levels must match");
    u_n.iter()
        .zip(u_nm1)
        .map(|(&a, &b)| 1.5 * a - 0.5 * b)
        .collect()
}

/// Derived scalar observables of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// Net outlet flow rate `Q_out = sum over outlets of int u_h . n`.
    pub q_out: f64,
    /// Interface flow rate `Q_Sigma = int over Sigma of u_h . n_el`, with
    /// the fluid-side velocity trace.
    pub q_sigma: f64,
    /// Mean interface fluid pressure `P_Sigma = (1/|Sigma|) int p_h`.
    pub p_sigma: f64,
}

/// Time series of the derived observables plus the accumulated energy norm.
#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub time: Vec<f64>,
    pub q_out: Vec<f64>,
    pub q_sigma: Vec<f64>,
    pub p_sigma: Vec<f64>,
    pub energy: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Result of a full simulation: the observable series, optional state
/// snapshots `(index, state)`, and the final state.
pub struct Trajectory {
    pub series: TimeSeries,
    pub snapshots: Vec<(usize, SystemState)>,
    pub final_state: SystemState,
}

/// Assembled coupled problem with its time-stepping operators.
pub struct CoupledSystem {
    pub mesh: PolyMesh,
    pub spaces: SpaceSet,
    pub params: MaterialParams,
    pub config: PenaltyConfig,
    pub scheme: TimeScheme,
    pub mode: FluidMode,
    pub poro: PoroelasticBlocks,
    pub fluid: FluidBlocks,
    pub iface: InterfaceBlocks,
    pub layout: Layout,
    /// A1 without the velocity-dependent advection/backflow blocks.
    a1_base: Csr,
    /// A2 (constant across steps).
    a2: Csr,
    /// Cached factorization of `a1_base` (Stokes mode only).
    cached: Option<Factorized>,
}

impl CoupledSystem {
    pub fn new(
        mesh: PolyMesh,
        degree: usize,
        params: MaterialParams,
        config: PenaltyConfig,
        scheme: TimeScheme,
        mode: FluidMode,
    ) -> Result<Self, SystemError> {
        params.validate()?;
        config.validate()?;
        let spaces = SpaceSet::new(&mesh, degree)?;
        let poro = assemble_poroelastic(&mesh, &spaces.el, &spaces.p, &params, &config);
        let fluid = assemble_fluid(&mesh, &spaces.v, &spaces.q, &params, &config);
        let iface = assemble_interface(&mesh, &spaces.el, &spaces.p, &spaces.v, &params);
        let layout = Layout {
            n_d: spaces.el.n_vector_dofs(),
            n_s: spaces.p.n_scalar_dofs(),
            n_j: params.n_compartments(),
            n_u: spaces.v.n_vector_dofs(),
            n_q: spaces.q.n_scalar_dofs(),
        };
        let mut sys = CoupledSystem {
            mesh,
            spaces,
            params,
            config,
            scheme,
            mode,
            poro,
            fluid,
            iface,
            layout,
            a1_base: Csr::zeros(0, 0),
            a2: Csr::zeros(0, 0),
            cached: None,
        };
        sys.refresh_operators();
        Ok(sys)
    }

    /// Rebuild the constant step matrices from the current blocks and drop
    /// any cached factorization.
    fn refresh_operators(&mut self) {
        let (a1, a2) = self.constant_operators();
        self.a1_base = a1;
        self.a2 = a2;
        self.cached = None;
    }

    /// Diagnostic submode: zero every block coupling the elastic motion,
    /// the compartment pressures, and the free fluid to each other, leaving
    /// three independent problems. Used to isolate the elastic Newmark
    /// integrator (e.g. for energy-conservation checks).
    pub fn zero_couplings(&mut self) {
        let l = &self.layout;
        for b in &mut self.poro.b {
            *b = Csr::zeros(l.n_d, l.n_s);
        }
        self.iface.j_el = Csr::zeros(l.n_d, l.n_q);
        self.iface.j_f = Csr::zeros(l.n_u, l.n_q);
        self.iface.g_elel = Csr::zeros(l.n_d, l.n_d);
        self.iface.g_elf = Csr::zeros(l.n_d, l.n_u);
        self.iface.g_fel = Csr::zeros(l.n_u, l.n_d);
        self.iface.g_ff = Csr::zeros(l.n_u, l.n_u);
        self.refresh_operators();
    }

    /// Build (A1_base, A2): every block except the velocity-dependent
    /// advection and backflow operators, which are added per step in
    /// Navier-Stokes mode.
    fn constant_operators(&self) -> (Csr, Csr) {
        let l = &self.layout;
        let n = l.total();
        let dt = self.scheme.dt;
        let th = self.scheme.theta;
        let e = self.params.interface_compartment;
        let mut a1 = Coo::new(n, n);
        let mut a2 = Coo::new(n, n);
        let id = Csr::identity(l.n_d);

        // Kinematic rows: D^{n+1} = D^n + dt Z^n + dt^2 [(1/2 - beta) A^n
        // + beta A^{n+1}], Z^{n+1} = Z^n + dt [(1 - gamma) A^n + gamma A^{n+1}].
        let rd = l.d().start;
        a1.push_block(rd, l.d().start, 1.0, &id);
        a1.push_block(rd, l.a().start, -dt * dt * self.scheme.beta, &id);
        a2.push_block(rd, l.d().start, 1.0, &id);
        a2.push_block(rd, l.z().start, dt, &id);
        a2.push_block(rd, l.a().start, dt * dt * (0.5 - self.scheme.beta), &id);
        let rz = l.z().start;
        a1.push_block(rz, l.z().start, 1.0, &id);
        a1.push_block(rz, l.a().start, -dt * self.scheme.gamma, &id);
        a2.push_block(rz, l.z().start, 1.0, &id);
        a2.push_block(rz, l.a().start, dt * (1.0 - self.scheme.gamma), &id);

        // Elastic momentum balance, collocated at t^{n+1}.  Together with
        // the average-acceleration Newmark updates above (beta = 1/4,
        // gamma = 1/2) and a consistent initial acceleration, this
        // produces exactly the same trajectory as theta-averaging the row
        // between t^n and t^{n+1} (the averaged residual vanishes at every
        // step by induction from the consistent start), so the trapezoidal
        // energy balance applies to the computed states.  Collocation is
        // preferred because it determines the acceleration directly from
        // the current state and therefore carries no undamped parasitic
        // acceleration mode.
        let re = l.a().start;
        a1.push_block(re, l.d().start, 1.0, &self.poro.a_el);
        a1.push_block(re, l.z().start, 1.0, &self.iface.g_elel);
        a1.push_block(re, l.a().start, 1.0, &self.poro.m_el);
        for j in 0..l.n_j {
            a1.push_block(re, l.p(j).start, 1.0, &self.poro.b[j]);
        }
        a1.push_block(re, l.p(e).start, 1.0, &self.iface.j_el);
        a1.push_block(re, l.u().start, -1.0, &self.iface.g_elf);

        // Compartment mass balances, theta-averaged.
        for j in 0..l.n_j {
            let r = l.p(j).start;
            a1.push_block(r, r, 1.0 / dt, &self.poro.m_p[j]);
            a1.push_block(r, r, th, &self.poro.a_p[j]);
            a2.push_block(r, r, 1.0 / dt, &self.poro.m_p[j]);
            a2.push_block(r, r, -(1.0 - th), &self.poro.a_p[j]);
            let bt = self.poro.b[j].transpose();
            a1.push_block(r, l.z().start, -th, &bt);
            a2.push_block(r, l.z().start, 1.0 - th, &bt);
        }
        let r0 = l.p(0).start;
        a1.push_block(r0, r0, th, &self.poro.c);
        a2.push_block(r0, r0, -(1.0 - th), &self.poro.c);
        let jel_t = self.iface.j_el.transpose();
        let jf_t = self.iface.j_f.transpose();
        let re_mass = l.p(e).start;
        a1.push_block(re_mass, l.z().start, -th, &jel_t);
        a1.push_block(re_mass, l.u().start, -th, &jf_t);
        a2.push_block(re_mass, l.z().start, 1.0 - th, &jel_t);
        a2.push_block(re_mass, l.u().start, 1.0 - th, &jf_t);

        // Fluid momentum balance, theta-averaged.
        let ru = l.u().start;
        a1.push_block(ru, ru, 1.0 / dt, &self.fluid.m_f);
        a1.push_block(ru, ru, th, &self.fluid.a_f);
        a1.push_block(ru, ru, th, &self.iface.g_ff);
        a1.push_block(ru, l.z().start, -th, &self.iface.g_fel);
        a1.push_block(ru, l.q().start, th, &self.fluid.b_f);
        a1.push_block(ru, l.p(e).start, th, &self.iface.j_f);
        a2.push_block(ru, ru, 1.0 / dt, &self.fluid.m_f);
        a2.push_block(ru, ru, -(1.0 - th), &self.fluid.a_f);
        a2.push_block(ru, ru, -(1.0 - th), &self.iface.g_ff);
        a2.push_block(ru, l.z().start, 1.0 - th, &self.iface.g_fel);
        a2.push_block(ru, l.q().start, -(1.0 - th), &self.fluid.b_f);
        a2.push_block(ru, l.p(e).start, -(1.0 - th), &self.iface.j_f);

        // Continuity equation, theta-averaged.
        let rq = l.q().start;
        let bft = self.fluid.b_f.transpose();
        a1.push_block(rq, l.u().start, -th, &bft);
        a1.push_block(rq, rq, th, &self.fluid.s);
        a2.push_block(rq, l.u().start, 1.0 - th, &bft);
        a2.push_block(rq, rq, -(1.0 - th), &self.fluid.s);

        (a1.to_csr(), a2.to_csr())
    }

    /// Step matrices for the advecting state `(u^n, u^{n-1})`. In Stokes
    /// mode both are constant; in Navier-Stokes mode A1 additionally carries
    /// the advection operator at the extrapolated velocity and the backflow
    /// stabilization at `u^n`.
    pub fn step_operators(&self, u_n: &[f64], u_nm1: &[f64]) -> Result<(Csr, Csr), SystemError> {
        match self.mode {
            FluidMode::Stokes => Ok((self.a1_base.clone(), self.a2.clone())),
            FluidMode::NavierStokes => {
                Ok((self.advected_a1(u_n, u_nm1)?, self.a2.clone()))
            }
        }
    }

    /// Advection operator at the extrapolated velocity and backflow
    /// stabilization at `u^n`, for one Navier-Stokes step.
    fn advection_operators(&self, u_n: &[f64], u_nm1: &[f64]) -> Result<(Csr, Csr), SystemError> {
        let l = &self.layout;
        if u_n.len() != l.n_u || u_nm1.len() != l.n_u {
            return Err(SystemError::Dimension(format!(
                "velocity levels must have {} dofs (got {} and {})",
                l.n_u,
                u_n.len(),
                u_nm1.len()
            )));
        }
        let u_star = extrapolate_velocity(u_n, u_nm1);
        let advection = assemble_advection(&self.mesh, &self.spaces.v, &self.params, &u_star);
        let backflow = assemble_backflow(&self.mesh, &self.spaces.v, &self.params, u_n);
        Ok((advection, backflow))
    }

    /// A1 with the advection average's implicit part (theta-weighted, the
    /// explicit part moves to the right-hand side) and the fully implicit
    /// backflow stabilization.
    fn advected_a1_from(&self, advection: &Csr, backflow: &Csr) -> Csr {
        let l = &self.layout;
        let n = l.total();
        let mut coo = Coo::new(n, n);
        coo.push_block(0, 0, 1.0, &self.a1_base);
        let ru = l.u().start;
        coo.push_block(ru, ru, self.scheme.theta, advection);
        coo.push_block(ru, ru, -1.0, backflow);
        coo.to_csr()
    }

    fn advected_a1(&self, u_n: &[f64], u_nm1: &[f64]) -> Result<Csr, SystemError> {
        let (advection, backflow) = self.advection_operators(u_n, u_nm1)?;
        Ok(self.advected_a1_from(&advection, &backflow))
    }

    /// Assemble the load functionals at one time instant.
    pub fn loads_at(&self, data: &dyn TimeData, t: f64) -> Loads {
        let nj = self.layout.n_j;
        let f_el = move |x: [f64; 2]| data.f_el(x, t);
        let f_f = move |x: [f64; 2]| data.f_f(x, t);
        let d_bc = move |x: [f64; 2]| data.d_bc(x, t);
        let d_bc_dt = move |x: [f64; 2]| data.d_bc_dt(x, t);
        let u_bc = move |x: [f64; 2]| data.u_bc(x, t);
        let p_out = move |x: [f64; 2]| data.p_out(x, t);
        let g_own: Vec<Box<dyn Fn([f64; 2]) -> f64>> = (0..nj)
            .map(|j| Box::new(move |x: [f64; 2]| data.source(j, x, t)) as Box<dyn Fn([f64; 2]) -> f64>)
            .collect();
        let p_own: Vec<Box<dyn Fn([f64; 2]) -> f64>> = (0..nj)
            .map(|j| Box::new(move |x: [f64; 2]| data.p_bc(j, x, t)) as Box<dyn Fn([f64; 2]) -> f64>)
            .collect();
        let ld = LoadData {
            f_el: &f_el,
            g: g_own.iter().map(|b| b.as_ref() as &dyn Fn([f64; 2]) -> f64).collect(),
            f_f: &f_f,
            d_bc: &d_bc,
            d_bc_dt: &d_bc_dt,
            p_bc: p_own.iter().map(|b| b.as_ref() as &dyn Fn([f64; 2]) -> f64).collect(),
            u_bc: &u_bc,
            p_out: &p_out,
        };
        assemble_loads(
            &self.mesh,
            &self.spaces.el,
            &self.spaces.p,
            &self.spaces.v,
            &self.spaces.q,
            &self.params,
            &self.config,
            &ld,
        )
    }

    /// Map per-instant load functionals to the stacked right-hand-side
    /// contribution F^{n+1}: the elastic row is collocated at the new time
    /// level (matching the collocated momentum row), the theta-weighted rows
    /// average the two instants, and `advection_data` (Navier-Stokes
    /// advecting-flux data correction, already weighted by the caller) is
    /// added to the fluid row.
    pub fn stacked_loads(
        &self,
        loads_np1: &Loads,
        loads_n: &Loads,
        advection_data: Option<&[f64]>,
    ) -> Vec<f64> {
        let l = &self.layout;
        let th = self.scheme.theta;
        let mut f = vec![0.0; l.total()];
        f[l.a()].copy_from_slice(&loads_np1.f_el);
        for j in 0..l.n_j {
            for (o, (&a, &b)) in f[l.p(j)]
                .iter_mut()
                .zip(loads_np1.f_p[j].iter().zip(&loads_n.f_p[j]))
            {
                *o = th * a + (1.0 - th) * b;
            }
        }
        for (o, (&a, &b)) in f[l.u()]
            .iter_mut()
            .zip(loads_np1.f_f.iter().zip(&loads_n.f_f))
        {
            *o = th * a + (1.0 - th) * b;
        }
        if let Some(corr) = advection_data {
            for (o, &c) in f[l.u()].iter_mut().zip(corr) {
                *o += c;
            }
        }
        for (o, (&a, &b)) in f[l.q()]
            .iter_mut()
            .zip(loads_np1.f_q.iter().zip(&loads_n.f_q))
        {
            *o = th * a + (1.0 - th) * b;
        }
        f
    }

    /// All-zero state at t = 0.
    pub fn zero_state(&self) -> SystemState {
        SystemState {
            n: 0,
            time: 0.0,
            x: vec![0.0; self.layout.total()],
            u_prev: vec![0.0; self.layout.n_u],
        }
    }

    /// Initial state: L^2 projections of the initial fields, with the
    /// initial acceleration solved from the elastic momentum balance at
    /// t = 0.
    pub fn initial_state(&self, data: &dyn TimeData) -> Result<SystemState, SystemError> {
        let l = &self.layout;
        let order = norm_order(self.spaces.degree());
        let mut x = vec![0.0; l.total()];
        let d0 = self.spaces.el.project_vector(&self.mesh, order, |p| data.d0(p));
        let z0 = self.spaces.el.project_vector(&self.mesh, order, |p| data.z0(p));
        let u0 = self.spaces.v.project_vector(&self.mesh, order, |p| data.u0(p));
        let q0 = self.spaces.q.project(&self.mesh, order, |p| data.q0(p));
        x[l.d()].copy_from_slice(&d0);
        x[l.z()].copy_from_slice(&z0);
        x[l.u()].copy_from_slice(&u0);
        x[l.q()].copy_from_slice(&q0);
        for j in 0..l.n_j {
            let p0 = self.spaces.p.project(&self.mesh, order, |p| data.p0(j, p));
            x[l.p(j)].copy_from_slice(&p0);
        }

        // rho_el M A^0 = F_el(0) - A_el D^0 - G_elel Z^0 + G_elf U^0
        //                - sum_j B_j P_j^0 - J_el P_E^0.
        let loads0 = self.loads_at(data, 0.0);
        let mut r = loads0.f_el;
        self.poro.a_el.matvec_add(&x[l.d()], -1.0, &mut r);
        self.iface.g_elel.matvec_add(&x[l.z()], -1.0, &mut r);
        self.iface.g_elf.matvec_add(&x[l.u()], 1.0, &mut r);
        for j in 0..l.n_j {
            self.poro.b[j].matvec_add(&x[l.p(j)], -1.0, &mut r);
        }
        let e = self.params.interface_compartment;
        self.iface.j_el.matvec_add(&x[l.p(e)], -1.0, &mut r);
        let a0 = Factorized::new(self.poro.m_el.clone())?.solve(&r)?;
        x[l.a()].copy_from_slice(&a0);

        let u_prev = x[l.u()].to_vec();
        Ok(SystemState { n: 0, time: 0.0, x, u_prev })
    }

    /// Advance one step: solve A1 X^{n+1} = A2 X^n + F^{n+1}.
    pub fn advance(
        &mut self,
        state: &SystemState,
        data: &dyn TimeData,
    ) -> Result<SystemState, SystemError> {
        let l = self.layout.clone();
        if state.x.len() != l.total() {
            return Err(SystemError::Dimension(format!(
                "state has {} dofs, system expects {}",
                state.x.len(),
                l.total()
            )));
        }
        let t_np1 = state.time + self.scheme.dt;
        let loads_n = self.loads_at(data, state.time);
        let loads_np1 = self.loads_at(data, t_np1);

        let mut rhs = self.a2.matvec(&state.x);
        let x = match self.mode {
            FluidMode::Stokes => {
                let f = self.stacked_loads(&loads_np1, &loads_n, None);
                for (r, v) in rhs.iter_mut().zip(&f) {
                    *r += v;
                }
                if self.cached.is_none() {
                    self.cached = Some(Factorized::new(self.a1_base.clone())?);
                }
                self.cached.as_ref().unwrap().solve(&rhs)?
            }
            FluidMode::NavierStokes => {
                let th = self.scheme.theta;
                let u_star = extrapolate_velocity(state.u(&l), &state.u_prev);
                let corr_np1 = advection_wall_correction(
                    &self.mesh,
                    &self.spaces.v,
                    &self.params,
                    &u_star,
                    &|p| data.u_bc(p, t_np1),
                );
                let corr_n = advection_wall_correction(
                    &self.mesh,
                    &self.spaces.v,
                    &self.params,
                    &u_star,
                    &|p| data.u_bc(p, state.time),
                );
                let corr: Vec<f64> = corr_np1
                    .iter()
                    .zip(&corr_n)
                    .map(|(a, b)| th * a + (1.0 - th) * b)
                    .collect();
                let f = self.stacked_loads(&loads_np1, &loads_n, Some(&corr));
                for (r, v) in rhs.iter_mut().zip(&f) {
                    *r += v;
                }
                let (advection, backflow) =
                    self.advection_operators(state.u(&l), &state.u_prev)?;
                // Explicit half of the advection average acts on the known
                // velocity level and moves to the right-hand side.
                let nu_n = advection.matvec(state.u(&l));
                for (o, v) in rhs[l.u()].iter_mut().zip(&nu_n) {
                    *o -= (1.0 - th) * v;
                }
                let a1 = self.advected_a1_from(&advection, &backflow);
                Factorized::new(a1)?.solve(&rhs)?
            }
        };
        Ok(SystemState {
            n: state.n + 1,
            time: t_np1,
            u_prev: state.u(&l).to_vec(),
            x,
        })
    }

    /// Derived observables of a state.
    pub fn observables(&self, state: &SystemState) -> Observables {
        let l = &self.layout;
        let order = self.spaces.v.assembly_order();
        let u = state.u(l);
        let q = state.q(l);
        let mut q_out = 0.0;
        let mut q_sigma = 0.0;
        let mut p_int = 0.0;
        let mut sigma_measure = 0.0;
        for (fi, face) in self.mesh.faces.iter().enumerate() {
            match face.kind {
                FaceKind::OutletF => {
                    let lv = self.spaces.v.local(face.owners[0].unwrap()).unwrap();
                    let rule = DGSpace::face_quadrature(&self.mesh, fi, order);
                    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                        let (vals, _) = self.spaces.v.eval_basis(lv, x);
                        let mut un = 0.0;
                        for comp in 0..2 {
                            let off = self.spaces.v.vector_offset(lv, comp);
                            let mut c = 0.0;
                            for (k, v) in vals.iter().enumerate() {
                                c += u[off + k] * v;
                            }
                            un += c * face.normal[comp];
                        }
                        q_out += w * un;
                    }
                }
                FaceKind::Interface => {
                    // owners[0] is poroelastic, owners[1] the fluid element;
                    // the stored normal is n_el.
                    let ef = face.owners[1].unwrap();
                    let lv = self.spaces.v.local(ef).unwrap();
                    let lq = self.spaces.q.local(ef).unwrap();
                    let rule = DGSpace::face_quadrature(&self.mesh, fi, order);
                    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                        let (vals, _) = self.spaces.v.eval_basis(lv, x);
                        let mut un = 0.0;
                        for comp in 0..2 {
                            let off = self.spaces.v.vector_offset(lv, comp);
                            let mut c = 0.0;
                            for (k, v) in vals.iter().enumerate() {
                                c += u[off + k] * v;
                            }
                            un += c * face.normal[comp];
                        }
                        q_sigma += w * un;
                        p_int += w * self.spaces.q.eval_scalar(lq, q, x);
                    }
                    sigma_measure += face.measure;
                }
                _ => {}
            }
        }
        let p_sigma = if sigma_measure > 0.0 { p_int / sigma_measure } else { 0.0 };
        Observables { q_out, q_sigma, p_sigma }
    }

    /// Run `n_steps` from the initial state of `data`, recording observables
    /// and the accumulated energy norm at every level. Snapshots of the full
    /// state are kept every `snapshot_every` steps (always including the
    /// final one) when requested.
    pub fn run_simulation(
        &mut self,
        data: &dyn TimeData,
        n_steps: usize,
        snapshot_every: Option<usize>,
    ) -> Result<Trajectory, SystemError> {
        self.run_with_snapshots(data, n_steps, &|step| match snapshot_every {
            Some(every) => step == 0 || (every > 0 && (step % every == 0 || step == n_steps)),
            None => false,
        })
    }

    /// As [`Self::run_simulation`], with an arbitrary per-step snapshot
    /// predicate.
    pub fn run_with_snapshots(
        &mut self,
        data: &dyn TimeData,
        n_steps: usize,
        snapshot_at: &dyn Fn(usize) -> bool,
    ) -> Result<Trajectory, SystemError> {
        let mut state = self.initial_state(data)?;
        let mut series = TimeSeries::default();
        let mut acc = EnergyAccumulator::new(true);
        let mut snapshots = Vec::new();
        self.record(&state, &mut series, &mut acc);
        if snapshot_at(0) {
            snapshots.push((0, state.clone()));
        }
        for step in 1..=n_steps {
            state = self.advance(&state, data)?;
            self.record(&state, &mut series, &mut acc);
            if snapshot_at(step) {
                snapshots.push((step, state.clone()));
            }
        }
        Ok(Trajectory { series, snapshots, final_state: state })
    }

    fn record(&self, state: &SystemState, series: &mut TimeSeries, acc: &mut EnergyAccumulator) {
        let obs = self.observables(state);
        let norms = broken_norms(
            &self.mesh,
            &self.spaces,
            &self.params,
            &self.config,
            &state.slices(&self.layout),
            None,
        );
        let energy = acc.push(self.scheme.dt, &norms);
        series.time.push(state.time);
        series.q_out.push(obs.q_out);
        series.q_sigma.push(obs.q_sigma);
        series.p_sigma.push(obs.p_sigma);
        series.energy.push(energy);
    }

    /// Inflow rate of the spatially uniform compartment source:
    /// `Q_in(t) = |Omega_el| g(t)` for `source(j, x, t) = g(t)`.
    pub fn inflow_rate(&self, g_of_t: f64) -> f64 {
        self.mesh.subdomain_measure(Subdomain::El) * g_of_t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, TwoDomainSpec};
    use crate::sparse::solve_linear;

    fn stack_system(
        n: usize,
        degree: usize,
        mode: FluidMode,
        dt: f64,
        params: MaterialParams,
    ) -> CoupledSystem {
        let mesh = build_structured_mesh(n, n, TwoDomainSpec::Stack).unwrap();
        CoupledSystem::new(
            mesh,
            degree,
            params,
            PenaltyConfig::default(),
            TimeScheme::new(dt).unwrap(),
            mode,
        )
        .unwrap()
    }

    #[test]
    fn scheme_validation_rejects_out_of_range_parameters() {
        assert!(TimeScheme::new(1e-3).is_ok());
        assert!(TimeScheme::new(0.0).is_err());
        assert!(TimeScheme::new(-1.0).is_err());
        assert!(TimeScheme::new(f64::NAN).is_err());
        assert!(TimeScheme::with_parameters(0.1, 0.0, 0.5, 0.5).is_err());
        assert!(TimeScheme::with_parameters(0.1, 0.6, 0.5, 0.5).is_err());
        assert!(TimeScheme::with_parameters(0.1, 0.25, 0.4, 0.5).is_err());
        assert!(TimeScheme::with_parameters(0.1, 0.25, 1.1, 0.5).is_err());
        assert!(TimeScheme::with_parameters(0.1, 0.25, 0.5, 0.4).is_err());
        assert!(TimeScheme::with_parameters(0.1, 0.25, 0.5, 1.1).is_err());
        let s = TimeScheme::new(0.5).unwrap();
        assert_eq!((s.beta, s.gamma, s.theta), (0.25, 0.5, 0.5));
    }

    #[test]
    fn extrapolation_reproduces_constants_and_formula() {
        let c = vec![1.25, -3.0, 0.5];
        assert_eq!(extrapolate_velocity(&c, &c), c);
        let two_c: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let expect: Vec<f64> = c.iter().map(|v| 2.5 * v).collect();
        let got = extrapolate_velocity(&two_c, &c);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn extrapolation_is_exact_on_linear_in_time_fields() {
        // u(t) = a + b t sampled at t^n and t^{n-1} extrapolates exactly to
        // t^{n+1/2}.
        let a = [0.3, -1.0, 2.0];
        let b = [1.5, 0.25, -0.75];
        let dt = 0.2;
        let tn = 0.9;
        let sample = |t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(&a, &b)| a + b * t).collect() };
        let got = extrapolate_velocity(&sample(tn), &sample(tn - dt));
        let want = sample(tn + 0.5 * dt);
        for (g, e) in got.iter().zip(&want) {
            assert!((g - e).abs() < 1e-13, "{g} vs {e}");
        }
    }

    #[test]
    fn layout_ranges_partition_the_vector() {
        let l = Layout { n_d: 6, n_s: 3, n_j: 2, n_u: 8, n_q: 4 };
        assert_eq!(l.d(), 0..6);
        assert_eq!(l.z(), 6..12);
        assert_eq!(l.a(), 12..18);
        assert_eq!(l.p(0), 18..21);
        assert_eq!(l.p(1), 21..24);
        assert_eq!(l.u(), 24..32);
        assert_eq!(l.q(), 32..36);
        assert_eq!(l.total(), 36);
    }

    #[test]
    fn zero_data_stays_zero_in_both_modes() {
        for mode in [FluidMode::Stokes, FluidMode::NavierStokes] {
            let mut sys = stack_system(2, 1, mode, 0.1, MaterialParams::unit());
            let mut state = sys.initial_state(&ZeroData).unwrap();
            assert!(state.x.iter().all(|&v| v == 0.0));
            for _ in 0..3 {
                state = sys.advance(&state, &ZeroData).unwrap();
                let max = state.x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                assert!(max < 1e-13, "mode {mode:?}: |X| = {max}");
            }
        }
    }

    struct StationaryData;

    impl TimeData for StationaryData {
        fn f_el(&self, x: [f64; 2], _t: f64) -> [f64; 2] {
            [1.0 + 0.2 * x[1], 0.5 - 0.1 * x[0]]
        }

        fn source(&self, _j: usize, x: [f64; 2], _t: f64) -> f64 {
            1.0 + x[0]
        }

        fn f_f(&self, x: [f64; 2], _t: f64) -> [f64; 2] {
            [0.2 * x[1], -0.3]
        }

        fn p_bc(&self, _j: usize, _x: [f64; 2], _t: f64) -> f64 {
            0.3
        }

        fn p_out(&self, _x: [f64; 2], _t: f64) -> f64 {
            0.2
        }
    }

    #[test]
    fn stationary_solution_is_a_fixed_point_of_the_step() {
        let mut sys = stack_system(3, 1, FluidMode::Stokes, 0.05, MaterialParams::unit());
        let l = sys.layout.clone();
        let e = sys.params.interface_compartment;

        // Stationary block system for (D, P_j, U, P) with Z = A = 0:
        //   A_el D + sum_j B_j P_j + J_el P_E - G_elf U            = F_el
        //   A_j P_j + [C P]_j - delta_{jE} J_f^T U                 = F_j
        //   (A_f + G_ff) U + B_f P + J_f P_E                       = F_f
        //   -B_f^T U + S P                                         = F_q
        let ns = l.n_s * l.n_j;
        let ntot = l.n_d + ns + l.n_u + l.n_q;
        let off_p = |j: usize| l.n_d + j * l.n_s;
        let off_u = l.n_d + ns;
        let off_q = off_u + l.n_u;
        let mut coo = Coo::new(ntot, ntot);
        coo.push_block(0, 0, 1.0, &sys.poro.a_el);
        for j in 0..l.n_j {
            coo.push_block(0, off_p(j), 1.0, &sys.poro.b[j]);
            coo.push_block(off_p(j), off_p(j), 1.0, &sys.poro.a_p[j]);
            coo.push_block(off_p(j), 0, 0.0, &sys.poro.b[j].transpose());
        }
        coo.push_block(0, off_p(e), 1.0, &sys.iface.j_el);
        coo.push_block(0, off_u, -1.0, &sys.iface.g_elf);
        coo.push_block(off_p(0), off_p(0), 1.0, &sys.poro.c);
        coo.push_block(off_p(e), off_u, -1.0, &sys.iface.j_f.transpose());
        coo.push_block(off_u, off_u, 1.0, &sys.fluid.a_f);
        coo.push_block(off_u, off_u, 1.0, &sys.iface.g_ff);
        coo.push_block(off_u, off_q, 1.0, &sys.fluid.b_f);
        coo.push_block(off_u, off_p(e), 1.0, &sys.iface.j_f);
        coo.push_block(off_q, off_u, -1.0, &sys.fluid.b_f.transpose());
        coo.push_block(off_q, off_q, 1.0, &sys.fluid.s);
        let a = coo.to_csr();

        let loads = sys.loads_at(&StationaryData, 0.0);
        let mut b = vec![0.0; ntot];
        b[..l.n_d].copy_from_slice(&loads.f_el);
        for j in 0..l.n_j {
            b[off_p(j)..off_p(j) + l.n_s].copy_from_slice(&loads.f_p[j]);
        }
        b[off_u..off_u + l.n_u].copy_from_slice(&loads.f_f);
        b[off_q..].copy_from_slice(&loads.f_q);
        let sol = solve_linear(&a, &b).unwrap();

        let mut state = sys.zero_state();
        state.x[l.d()].copy_from_slice(&sol[..l.n_d]);
        for j in 0..l.n_j {
            state.x[l.p(j)].copy_from_slice(&sol[off_p(j)..off_p(j) + l.n_s]);
        }
        state.x[l.u()].copy_from_slice(&sol[off_u..off_u + l.n_u]);
        state.x[l.q()].copy_from_slice(&sol[off_q..]);
        state.u_prev = state.x[l.u()].to_vec();

        let next = sys.advance(&state, &StationaryData).unwrap();
        let scale = state.x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let diff = next
            .x
            .iter()
            .zip(&state.x)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
        assert!(scale > 0.1, "stationary solution should be nontrivial");
        assert!(diff / scale < 1e-8, "fixed-point drift {diff} at scale {scale}");
    }

    #[test]
    fn decoupled_newmark_conserves_elastic_energy() {
        let mut sys = stack_system(3, 2, FluidMode::Stokes, 0.05, MaterialParams::unit());
        sys.zero_couplings();
        let l = sys.layout.clone();

        struct Pluck;
        impl TimeData for Pluck {
            fn d0(&self, x: [f64; 2]) -> [f64; 2] {
                let s = (std::f64::consts::PI * x[0]).sin();
                [0.01 * s * x[1] * (1.0 - x[1]), -0.02 * s * x[1]]
            }
        }

        let mut state = sys.initial_state(&Pluck).unwrap();
        let m_el = sys.poro.m_el.clone();
        let a_el = sys.poro.a_el.clone();
        let energy = move |st: &SystemState| {
            let z = st.z(&l);
            let d = st.d(&l);
            let mz = m_el.matvec(z);
            let kd = a_el.matvec(d);
            z.iter().zip(&mz).map(|(a, b)| a * b).sum::<f64>()
                + d.iter().zip(&kd).map(|(a, b)| a * b).sum::<f64>()
        };
        let e0 = energy(&state);
        assert!(e0 > 0.0);
        let mut prev = e0;
        for _ in 0..40 {
            state = sys.advance(&state, &ZeroData).unwrap();
            let e = energy(&state);
            assert!(
                (e - prev).abs() <= 1e-10 * prev,
                "energy drift per step: {} -> {}",
                prev,
                e
            );
            prev = e;
        }
    }

    #[test]
    fn friction_blocks_vanish_from_a1_when_gamma_is_zero() {
        let mut params = MaterialParams::unit();
        params.gamma = 0.0;
        let sys = stack_system(2, 1, FluidMode::Stokes, 0.1, params.clone());
        let mut stripped = stack_system(2, 1, FluidMode::Stokes, 0.1, params);
        let l = stripped.layout.clone();
        stripped.iface.g_elel = Csr::zeros(l.n_d, l.n_d);
        stripped.iface.g_elf = Csr::zeros(l.n_d, l.n_u);
        stripped.iface.g_fel = Csr::zeros(l.n_u, l.n_d);
        stripped.iface.g_ff = Csr::zeros(l.n_u, l.n_u);
        stripped.refresh_operators();
        let diff = sys.a1_base.add_scaled(1.0, &stripped.a1_base, -1.0).max_abs();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn stokes_step_matrix_ignores_the_velocity_levels() {
        let sys = stack_system(2, 1, FluidMode::Stokes, 0.1, MaterialParams::unit());
        let n = sys.layout.n_u;
        let u1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let u2: Vec<f64> = (0..n).map(|i| (i as f64 * 1.91).cos()).collect();
        let (a1_a, _) = sys.step_operators(&u1, &u1).unwrap();
        let (a1_b, _) = sys.step_operators(&u2, &u2).unwrap();
        assert_eq!(a1_a.add_scaled(1.0, &a1_b, -1.0).max_abs(), 0.0);
    }

    #[test]
    fn navier_stokes_step_matrix_tracks_the_velocity_levels() {
        let sys = stack_system(2, 1, FluidMode::NavierStokes, 0.1, MaterialParams::unit());
        let n = sys.layout.n_u;
        let zero = vec![0.0; n];
        let u: Vec<f64> = (0..n).map(|i| 0.1 + (i as f64 * 0.37).sin()).collect();
        let (a1_zero, _) = sys.step_operators(&zero, &zero).unwrap();
        let (a1_u, _) = sys.step_operators(&u, &u).unwrap();
        assert_eq!(a1_zero.add_scaled(1.0, &sys.a1_base, -1.0).max_abs(), 0.0);
        assert!(a1_u.add_scaled(1.0, &sys.a1_base, -1.0).max_abs() > 0.0);
    }

    #[test]
    fn advance_satisfies_the_newmark_update_relations() {
        let mut sys = stack_system(2, 1, FluidMode::Stokes, 0.02, MaterialParams::unit());
        let l = sys.layout.clone();
        let state = sys.zero_state();
        let next = sys.advance(&state, &StationaryData).unwrap();
        let TimeScheme { dt, beta, gamma, .. } = sys.scheme;
        let a_scale = next.a(&l).iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..l.n_d {
            let (d0, z0, a0) = (state.d(&l)[i], state.z(&l)[i], state.a(&l)[i]);
            let z1 = z0 + dt * ((1.0 - gamma) * a0 + gamma * next.a(&l)[i]);
            let d1 = d0 + dt * z0 + dt * dt * ((0.5 - beta) * a0 + beta * next.a(&l)[i]);
            assert!((next.z(&l)[i] - z1).abs() < 1e-9 * a_scale.max(1.0));
            assert!((next.d(&l)[i] - d1).abs() < 1e-9 * a_scale.max(1.0));
        }
        assert!(a_scale > 1e-3, "step should produce a nontrivial acceleration");
    }

    #[test]
    fn initial_acceleration_balances_the_body_force() {
        // With zero initial fields and f_el = (2, -1), the initial
        // acceleration is the L^2 projection of f_el / rho_el.
        struct Push;
        impl TimeData for Push {
            fn f_el(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
                [2.0, -1.0]
            }
        }
        let mut params = MaterialParams::unit();
        params.rho_el = 4.0;
        let sys = stack_system(2, 1, FluidMode::Stokes, 0.1, params);
        let l = &sys.layout;
        let state = sys.initial_state(&Push).unwrap();
        let a = state.a(l);
        for (le, _) in sys.spaces.el.elem_ids.iter().enumerate() {
            let c = sys.mesh.centroid(sys.spaces.el.elem_ids[le]);
            let (vals, _) = sys.spaces.el.eval_basis(le, c);
            for (comp, expect) in [(0, 0.5), (1, -0.25)] {
                let off = sys.spaces.el.vector_offset(le, comp);
                let got: f64 = vals.iter().enumerate().map(|(k, v)| a[off + k] * v).sum();
                assert!((got - expect).abs() < 1e-11, "comp {comp}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn uniform_source_load_integrates_to_domain_measure_times_rate() {
        // Q_in(t) = |Omega_el| g(t): the discrete source functional applied
        // to the constant test function recovers the inflow law.
        struct Pulse;
        impl TimeData for Pulse {
            fn source(&self, _j: usize, _x: [f64; 2], t: f64) -> f64 {
                0.2 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).sin()
            }
        }
        let sys = stack_system(3, 2, FluidMode::Stokes, 0.1, MaterialParams::unit());
        let ones = sys.spaces.p.project(&sys.mesh, 6, |_| 1.0);
        for &t in &[0.13, 0.31, 0.77] {
            let g = 0.2 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).sin();
            let loads = sys.loads_at(&Pulse, t);
            let got: f64 = loads.f_p[0].iter().zip(&ones).map(|(a, b)| a * b).sum();
            let want = sys.inflow_rate(g);
            assert!((got - want).abs() < 1e-12, "t = {t}: {got} vs {want}");
            assert!(want.abs() > 0.1);
        }
    }

    #[test]
    fn run_simulation_reports_flat_series_for_zero_data() {
        let mut sys = stack_system(2, 1, FluidMode::Stokes, 0.1, MaterialParams::unit());
        let traj = sys.run_simulation(&ZeroData, 4, Some(2)).unwrap();
        assert_eq!(traj.series.len(), 5);
        assert_eq!(traj.snapshots.len(), 3);
        assert_eq!(traj.snapshots[0].0, 0);
        assert_eq!(traj.snapshots[1].0, 2);
        assert_eq!(traj.snapshots[2].0, 4);
        for k in 0..traj.series.len() {
            assert!((traj.series.time[k] - 0.1 * k as f64).abs() < 1e-14);
            assert_eq!(traj.series.q_out[k], 0.0);
            assert_eq!(traj.series.q_sigma[k], 0.0);
            assert_eq!(traj.series.p_sigma[k], 0.0);
            assert_eq!(traj.series.energy[k], 0.0);
        }
        assert!(traj.final_state.x.iter().all(|&v| v == 0.0));
    }
}
