//! Temporary diagnostics (not part of the shipped suite).

use polydg::mesh::{build_structured_mesh, TwoDomainSpec};
use polydg::mms::ManufacturedCase;
use polydg::norms::broken_norms;
use polydg::params::{MaterialParams, PenaltyConfig};
use polydg::system::{CoupledSystem, FluidMode, TimeData, TimeScheme};

struct SeededPressure;

impl TimeData for SeededPressure {
    fn p0(&self, _j: usize, x: [f64; 2]) -> f64 {
        (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
    }
}

fn report(sys: &CoupledSystem, state: &polydg::system::SystemState, tag: &str) {
    let n = broken_norms(
        &sys.mesh,
        &sys.spaces,
        &sys.params,
        &sys.config,
        &state.slices(&sys.layout),
        None,
    );
    println!(
        "{tag} step {:4} kin_el {:10.3e} elast {:10.3e} stor {:10.3e} kin_f {:10.3e} \
         visc {:10.3e} press {:10.3e} darcy {:10.3e} fric {:10.3e}",
        state.n,
        n.kinetic_el,
        n.elastic.total(),
        n.storage[0],
        n.kinetic_f,
        n.viscous.total(),
        n.pressure.total(),
        n.darcy[0].total(),
        n.friction,
    );
}

#[test]
fn blowup_trace() {
    let case = ManufacturedCase::with_exponent(2);
    let mesh = build_structured_mesh(8, 8, TwoDomainSpec::Stack).unwrap();
    let mut sys = CoupledSystem::new(
        mesh,
        2,
        case.params.clone(),
        PenaltyConfig::default().for_degree(2),
        TimeScheme::new(0.05).unwrap(),
        case.mode,
    )
    .unwrap();
    let mut state = sys.initial_state(&case).unwrap();
    report(&sys, &state, "mms");
    for _ in 0..20 {
        state = sys.advance(&state, &case).unwrap();
        report(&sys, &state, "mms");
    }
}

fn spectral_probe(sys: &CoupledSystem, label: &str) {
    let l = &sys.layout;
    let zero_u = vec![0.0; l.n_u];
    let (a1, a2) = sys.step_operators(&zero_u, &zero_u).unwrap();
    let fact = polydg::sparse::Factorized::new(a1).unwrap();
    let n = l.total();
    let mut x: Vec<f64> = (0..n).map(|i| ((i * 2654435761 + 1) % 1000) as f64 / 1000.0 - 0.5).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let s = norm(&x);
    for v in x.iter_mut() {
        *v /= s;
    }
    let mut lambda = 0.0;
    for _ in 0..400 {
        let y = fact.solve(&a2.matvec(&x)).unwrap();
        lambda = norm(&y);
        x = y;
        for v in x.iter_mut() {
            *v /= lambda;
        }
    }
    let block = |r: std::ops::Range<usize>| norm(&x[r]);
    println!(
        "{label}: |lambda| ~ {lambda:.6}  blocks d {:.2e} z {:.2e} a {:.2e} p {:.2e} u {:.2e} q {:.2e}",
        block(l.d()),
        block(l.z()),
        block(l.a()),
        block(l.p(0)),
        block(l.u()),
        block(l.q()),
    );
}

#[test]
fn form_definiteness() {
    use polydg::forms::{assemble_fluid, assemble_poroelastic};
    use polydg::space::SpaceSet;
    use polydg::sparse::smallest_eigenvalue;
    for &nx in &[4usize, 8] {
        for m in 1..=3usize {
            let mesh = build_structured_mesh(nx, nx, TwoDomainSpec::Stack).unwrap();
            let params = MaterialParams::unit();
            let config = PenaltyConfig::default().for_degree(m);
            let spaces = SpaceSet::new(&mesh, m).unwrap();
            let poro = assemble_poroelastic(&mesh, &spaces.el, &spaces.p, &params, &config);
            let fluid = assemble_fluid(&mesh, &spaces.v, &spaces.q, &params, &config);
            let lam_f = smallest_eigenvalue(&fluid.a_f);
            let lam_el = smallest_eigenvalue(&poro.a_el);
            let lam_p = smallest_eigenvalue(&poro.a_p[0]);
            println!("nx={nx} m={m}: min eig a_f {lam_f:.3e} a_el {lam_el:.3e} a_p {lam_p:.3e}");
        }
    }
}

#[test]
fn spectra() {
    for &(nx, m, dt) in &[(4usize, 2usize, 0.05f64), (8, 2, 0.05), (8, 2, 0.025), (4, 1, 0.01), (4, 2, 0.1)] {
        let mesh = build_structured_mesh(nx, nx, TwoDomainSpec::Stack).unwrap();
        let params = MaterialParams::unit();
        let sys = CoupledSystem::new(
            mesh,
            m,
            params,
            PenaltyConfig::default().for_degree(m),
            TimeScheme::new(dt).unwrap(),
            FluidMode::Stokes,
        )
        .unwrap();
        spectral_probe(&sys, &format!("coupled nx={nx} m={m} dt={dt}"));
    }
    let mesh = build_structured_mesh(8, 8, TwoDomainSpec::Stack).unwrap();
    let mut sys = CoupledSystem::new(
        mesh,
        2,
        MaterialParams::unit(),
        PenaltyConfig::default().for_degree(2),
        TimeScheme::new(0.05).unwrap(),
        FluidMode::Stokes,
    )
    .unwrap();
    sys.zero_couplings();
    spectral_probe(&sys, "decoupled nx=8 m=2 dt=0.05");
}

#[test]
fn decay_trace() {
    let mesh = build_structured_mesh(4, 4, TwoDomainSpec::Stack).unwrap();
    let params = MaterialParams::unit();
    let mut sys = CoupledSystem::new(
        mesh,
        1,
        params,
        PenaltyConfig::default(),
        TimeScheme::new(0.01).unwrap(),
        FluidMode::Stokes,
    )
    .unwrap();
    let mut state = sys.initial_state(&SeededPressure).unwrap();
    report(&sys, &state, "dec");
    for _ in 0..40 {
        state = sys.advance(&state, &SeededPressure).unwrap();
        report(&sys, &state, "dec");
    }
}
