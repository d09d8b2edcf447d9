//! Interior-penalty DG Poisson solver and the agglomerated-versus-standard
//! mesh accuracy/cost benchmark.
//!
//! The bilinear form is the symmetric interior penalty discretization
//!
//! ```text
//!   (grad u, grad v)_Omega
//!     - sum_F ( {grad u}.[v] + [u].{grad v} - (eta_bar/h_H) [u].[v] )
//! ```
//!
//! over all faces, with Dirichlet data imposed weakly on every boundary face
//! (`h_H` is the harmonic average of the adjacent element diameters, equal
//! to the single diameter on the boundary). The benchmark solves
//! `-lap u = f` with `u_ex = sin(pi x) sin(pi y)` on a unit square with
//! small disk inclusions removed, comparing a fine structured mesh against
//! coarse agglomerated polytopal meshes built from it.

use std::time::Instant;

use crate::mesh::PolyMesh;
use crate::norms::norm_order;
use crate::space::DGSpace;
use crate::sparse::{solve_linear, Coo, Csr, SolveError};

/// Assembled SIP Poisson system: one scalar DG unknown over the whole mesh.
pub struct PoissonSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
}

/// Assemble the SIP system for `-lap u = f` with Dirichlet data `g` weakly
/// imposed on all boundary faces.
pub fn assemble_poisson(
    mesh: &PolyMesh,
    space: &DGSpace,
    eta_bar: f64,
    f: &dyn Fn([f64; 2]) -> f64,
    g: &dyn Fn([f64; 2]) -> f64,
) -> PoissonSystem {
    let n = space.n_scalar_dofs();
    let nb = space.nb;
    let order = space.assembly_order();
    let mut coo = Coo::new(n, n);
    let mut rhs = vec![0.0; n];

    // Volume terms: stiffness and load.
    for (l, &e) in space.elem_ids.iter().enumerate() {
        let rule = DGSpace::element_quadrature(mesh, e, order);
        let off = space.scalar_offset(l);
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let (vals, grads) = space.eval_basis(l, x);
            for i in 0..nb {
                for j in 0..nb {
                    coo.push(
                        off + i,
                        off + j,
                        w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]),
                    );
                }
                rhs[off + i] += w * f(x) * vals[i];
            }
        }
    }

    // Face terms.
    for (fi, face) in mesh.faces.iter().enumerate() {
        let eta = eta_bar / mesh.harmonic_h(fi);
        let nrm = face.normal;
        let rule = DGSpace::face_quadrature(mesh, fi, order);
        match face.owners[1] {
            Some(e1) => {
                let e0 = face.owners[0].unwrap();
                let (l0, l1) = match (space.local(e0), space.local(e1)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => continue,
                };
                // Side data: (local element, jump sign of the outward trace).
                let sides = [(l0, 1.0), (l1, -1.0)];
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let basis: Vec<(Vec<f64>, Vec<[f64; 2]>)> =
                        sides.iter().map(|&(l, _)| space.eval_basis(l, x)).collect();
                    for (a, &(la, sa)) in sides.iter().enumerate() {
                        let off_a = space.scalar_offset(la);
                        for (b, &(lb, sb)) in sides.iter().enumerate() {
                            let off_b = space.scalar_offset(lb);
                            for i in 0..nb {
                                let (vi, gi) = (basis[a].0[i], basis[a].1[i]);
                                let gi_n = gi[0] * nrm[0] + gi[1] * nrm[1];
                                for j in 0..nb {
                                    let (vj, gj) = (basis[b].0[j], basis[b].1[j]);
                                    let gj_n = gj[0] * nrm[0] + gj[1] * nrm[1];
                                    // Test function from side a, trial from b.
                                    let consistency = -0.5 * gj_n * sa * vi;
                                    let symmetry = -0.5 * gi_n * sb * vj;
                                    let penalty = eta * sa * vi * sb * vj;
                                    coo.push(
                                        off_a + i,
                                        off_b + j,
                                        w * (consistency + symmetry + penalty),
                                    );
                                }
                            }
                        }
                    }
                }
            }
            None => {
                let e0 = face.owners[0].unwrap();
                let l0 = match space.local(e0) {
                    Some(l) => l,
                    None => continue,
                };
                let off = space.scalar_offset(l0);
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let (vals, grads) = space.eval_basis(l0, x);
                    let gx = g(x);
                    for i in 0..nb {
                        let gi_n = grads[i][0] * nrm[0] + grads[i][1] * nrm[1];
                        for j in 0..nb {
                            let gj_n = grads[j][0] * nrm[0] + grads[j][1] * nrm[1];
                            coo.push(
                                off + i,
                                off + j,
                                w * (-gj_n * vals[i] - gi_n * vals[j] + eta * vals[i] * vals[j]),
                            );
                        }
                        rhs[off + i] += w * gx * (eta * vals[i] - gi_n);
                    }
                }
            }
        }
    }

    PoissonSystem { matrix: coo.to_csr(), rhs }
}

/// Solve the assembled system.
pub fn solve_poisson(system: &PoissonSystem) -> Result<Vec<f64>, SolveError> {
    solve_linear(&system.matrix, &system.rhs)
}

/// L2 and broken-H1 errors of a discrete solution against an exact field.
pub fn poisson_errors(
    mesh: &PolyMesh,
    space: &DGSpace,
    u: &[f64],
    u_ex: &dyn Fn([f64; 2]) -> f64,
    grad_ex: &dyn Fn([f64; 2]) -> [f64; 2],
) -> (f64, f64) {
    let order = norm_order(space.degree);
    let nb = space.nb;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (l, &e) in space.elem_ids.iter().enumerate() {
        let rule = DGSpace::element_quadrature(mesh, e, order);
        let off = space.scalar_offset(l);
        let coeffs = &u[off..off + nb];
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let (vals, grads) = space.eval_basis(l, x);
            let mut uh = 0.0;
            let mut gh = [0.0, 0.0];
            for (k, &c) in coeffs.iter().enumerate() {
                uh += c * vals[k];
                gh[0] += c * grads[k][0];
                gh[1] += c * grads[k][1];
            }
            let ge = grad_ex(x);
            l2 += w * (u_ex(x) - uh) * (u_ex(x) - uh);
            h1 += w * ((ge[0] - gh[0]).powi(2) + (ge[1] - gh[1]).powi(2));
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub mesh_id: String,
    /// Element count of the mesh.
    pub elements: usize,
    pub degree: usize,
    /// Scalar dof count, equal to elements * (m+1)(m+2)/2.
    pub dofs: usize,
    pub e_l2: f64,
    pub e_h1: f64,
    /// Median assembly wall time over the repetitions, in seconds.
    pub assembly_s: f64,
    /// Median solve wall time over the repetitions, in seconds.
    pub solve_s: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

/// The smooth benchmark solution and its data.
pub fn benchmark_exact() -> (
    impl Fn([f64; 2]) -> f64,
    impl Fn([f64; 2]) -> [f64; 2],
    impl Fn([f64; 2]) -> f64,
) {
    let pi = std::f64::consts::PI;
    let u = move |x: [f64; 2]| (pi * x[0]).sin() * (pi * x[1]).sin();
    let grad = move |x: [f64; 2]| {
        [
            pi * (pi * x[0]).cos() * (pi * x[1]).sin(),
            pi * (pi * x[0]).sin() * (pi * x[1]).cos(),
        ]
    };
    let f = move |x: [f64; 2]| 2.0 * pi * pi * (pi * x[0]).sin() * (pi * x[1]).sin();
    (u, grad, f)
}

/// Solve the smooth benchmark on one mesh at one degree and record errors
/// and the median assembly/solve wall times over `repeats` repetitions.
///
/// `eta_bar` is the degree-1 baseline penalty constant; it is scaled by the
/// square of the degree so the interior-penalty form stays coercive over a
/// p-refinement sweep.
pub fn bench_case(
    mesh: &PolyMesh,
    mesh_id: &str,
    degree: usize,
    eta_bar: f64,
    repeats: usize,
) -> Result<BenchRecord, SolveError> {
    let subdomain = mesh.elements[0].subdomain;
    let space = DGSpace::new(mesh, subdomain, degree).expect("benchmark mesh is non-empty");
    let eta_eff = eta_bar * (degree.max(1) * degree.max(1)) as f64;
    let (u_ex, grad_ex, f) = benchmark_exact();
    let mut assembly_times = Vec::new();
    let mut solve_times = Vec::new();
    let mut solution = Vec::new();
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        let system = assemble_poisson(mesh, &space, eta_eff, &f, &u_ex);
        assembly_times.push(t0.elapsed().as_secs_f64());
        let t1 = Instant::now();
        solution = solve_poisson(&system)?;
        solve_times.push(t1.elapsed().as_secs_f64());
    }
    let (e_l2, e_h1) = poisson_errors(mesh, &space, &solution, &u_ex, &grad_ex);
    Ok(BenchRecord {
        mesh_id: mesh_id.to_string(),
        elements: space.elem_ids.len(),
        degree,
        dofs: space.n_scalar_dofs(),
        e_l2,
        e_h1,
        assembly_s: median(assembly_times),
        solve_s: median(solve_times),
    })
}

/// Run the benchmark over a set of meshes and degrees.
pub fn run_bench(
    meshes: &[(String, &PolyMesh)],
    degrees: &[usize],
    eta_bar: f64,
    repeats: usize,
) -> Result<Vec<BenchRecord>, SolveError> {
    let mut out = Vec::new();
    for (id, mesh) in meshes {
        for &m in degrees {
            out.push(bench_case(mesh, id, m, eta_bar, repeats)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{agglomerate, build_structured_mesh, Subdomain, TwoDomainSpec};
    use crate::sparse::smallest_eigenvalue;

    fn square(n: usize) -> PolyMesh {
        build_structured_mesh(n, n, TwoDomainSpec::Square(Subdomain::El)).unwrap()
    }

    #[test]
    fn constant_solution_is_reproduced() {
        let mesh = square(3);
        let space = DGSpace::new(&mesh, Subdomain::El, 2).unwrap();
        let system = assemble_poisson(&mesh, &space, 10.0, &|_| 0.0, &|_| 4.25);
        let u = solve_poisson(&system).unwrap();
        let (l2, h1) = poisson_errors(&mesh, &space, &u, &|_| 4.25, &|_| [0.0, 0.0]);
        assert!(l2 < 1e-11, "constant reproduction L2 error {l2}");
        assert!(h1 < 1e-10);
    }

    #[test]
    fn linear_solution_is_reproduced() {
        let mesh = square(3);
        for m in 1..=3 {
            let space = DGSpace::new(&mesh, Subdomain::El, m).unwrap();
            let exact = |x: [f64; 2]| 1.0 + 2.0 * x[0] - 3.0 * x[1];
            let system = assemble_poisson(&mesh, &space, 10.0, &|_| 0.0, &exact);
            let u = solve_poisson(&system).unwrap();
            let (l2, _) = poisson_errors(&mesh, &space, &u, &exact, &|_| [2.0, -3.0]);
            assert!(l2 < 1e-10, "linear reproduction at m={m}: {l2}");
        }
    }

    #[test]
    fn matrix_is_symmetric_and_positive_definite() {
        let mesh = square(3);
        let space = DGSpace::new(&mesh, Subdomain::El, 1).unwrap();
        let system = assemble_poisson(&mesh, &space, 10.0, &|_| 1.0, &|_| 0.0);
        let a = &system.matrix;
        assert!(a.asymmetry() < 1e-12 * a.max_abs(), "asymmetry {}", a.asymmetry());
        let lam = smallest_eigenvalue(a);
        assert!(lam > 0.0, "smallest eigenvalue {lam}");
    }

    #[test]
    fn p_refinement_decreases_the_error_monotonically() {
        let mesh = square(4);
        let mut prev = f64::INFINITY;
        for m in 1..=4 {
            let r = bench_case(&mesh, "square4", m, 10.0, 1).unwrap();
            assert!(r.e_l2 < prev, "E_L2 not decreasing at m={m}: {} vs {prev}", r.e_l2);
            assert_eq!(r.dofs, r.elements * (m + 1) * (m + 2) / 2);
            prev = r.e_l2;
        }
    }

    #[test]
    fn h_refinement_decreases_both_errors() {
        let coarse = bench_case(&square(4), "s4", 2, 10.0, 1).unwrap();
        let fine = bench_case(&square(8), "s8", 2, 10.0, 1).unwrap();
        assert!(fine.e_l2 < coarse.e_l2);
        assert!(fine.e_h1 < coarse.e_h1);
        // Third-order L2 convergence at m = 2: the ratio should be near 8.
        let ratio = coarse.e_l2 / fine.e_l2;
        assert!(ratio > 5.0, "L2 ratio {ratio}");
    }

    #[test]
    fn agglomerated_mesh_solves_the_benchmark() {
        let fine = square(8);
        let agg = agglomerate(&fine, 6).unwrap();
        assert_eq!(agg.elements.len(), 6);
        let r = bench_case(&agg, "agg6", 3, 10.0, 1).unwrap();
        assert!(r.e_l2.is_finite() && r.e_l2 < 0.05, "agglomerate E_L2 {}", r.e_l2);
        // p-refinement on the agglomerated mesh also converges.
        let r4 = bench_case(&agg, "agg6", 4, 10.0, 1).unwrap();
        assert!(r4.e_l2 < r.e_l2);
    }

    #[test]
    fn run_bench_covers_the_full_matrix() {
        let fine = square(4);
        let agg = agglomerate(&fine, 3).unwrap();
        let meshes = vec![("fine".to_string(), &fine), ("agg".to_string(), &agg)];
        let records = run_bench(&meshes, &[1, 2], 10.0, 1).unwrap();
        assert_eq!(records.len(), 4);
        assert!(records.iter().all(|r| r.e_l2 > 0.0 && r.assembly_s >= 0.0));
    }
}
