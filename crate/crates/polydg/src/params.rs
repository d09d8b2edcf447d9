//! Physical parameters and penalty constants.

use crate::mesh::{FaceKind, PolyMesh};
use thiserror::Error;

/// One fluid network (compartment) of the poroelastic medium.
#[derive(Debug, Clone, PartialEq)]
pub struct Compartment {
    /// Biot-Willis coefficient alpha_j, in (0, 1].
    pub alpha: f64,
    /// Storage coefficient c_j (m^2/N), >= 0.
    pub c: f64,
    /// Isotropic permeability scalar k~_j (m^2): k_j = k~_j I.
    pub k: f64,
    /// Fluid viscosity mu_j (Pa s).
    pub mu: f64,
    /// External exchange coefficient beta_j^e (m^2/(N s)), >= 0.
    pub beta_e: f64,
}

/// Material parameters of the coupled poroelasticity/fluid model.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Solid density rho_el (kg/m^3).
    pub rho_el: f64,
    /// Fluid density rho_f (kg/m^3).
    pub rho_f: f64,
    /// Solid shear modulus mu_el (Pa).
    pub mu_el: f64,
    /// Solid second Lame parameter lambda (Pa).
    pub lambda: f64,
    /// Free-fluid viscosity mu_f (Pa s).
    pub mu_f: f64,
    /// Dimensionless interface slip rate coefficient gamma, >= 0.
    pub gamma: f64,
    pub compartments: Vec<Compartment>,
    /// Inter-compartment exchange coefficients beta_jk (m^2/(N s)),
    /// row-major J x J, symmetric with zero diagonal.
    pub exchange: Vec<f64>,
    /// Index of the compartment exchanging mass with the free fluid across
    /// the interface (the paper's "E").
    pub interface_compartment: usize,
}

#[derive(Debug, Error)]
#[error("invalid parameters:\n{}", list.join("\n"))]
pub struct ParamError {
    pub list: Vec<String>,
}

impl MaterialParams {
    /// Number of compartments J.
    pub fn n_compartments(&self) -> usize {
        self.compartments.len()
    }

    /// Exchange coefficient beta_jk.
    pub fn beta(&self, j: usize, k: usize) -> f64 {
        self.exchange[j * self.n_compartments() + k]
    }

    /// The interface compartment E.
    pub fn interface(&self) -> &Compartment {
        &self.compartments[self.interface_compartment]
    }

    /// All-ones single-compartment parameters (alpha = 0.5), convenient for
    /// manufactured-solution studies.
    pub fn unit() -> Self {
        MaterialParams {
            rho_el: 1.0,
            rho_f: 1.0,
            mu_el: 1.0,
            lambda: 1.0,
            mu_f: 1.0,
            gamma: 1.0,
            compartments: vec![Compartment {
                alpha: 0.5,
                c: 1.0,
                k: 1.0,
                mu: 1.0,
                beta_e: 1.0,
            }],
            exchange: vec![0.0],
            interface_compartment: 0,
        }
    }

    /// Physiological single-compartment (CSF) parameter set.
    pub fn physiological() -> Self {
        MaterialParams {
            rho_el: 1000.0,
            rho_f: 1000.0,
            mu_el: 216.0,
            lambda: 11567.0,
            mu_f: 3.5e-3,
            gamma: 1.0,
            compartments: vec![Compartment {
                alpha: 0.49,
                c: 1e-6,
                k: 1e-16,
                mu: 3.5e-3,
                beta_e: 0.0,
            }],
            exchange: vec![0.0],
            interface_compartment: 0,
        }
    }

    /// Validate every field, returning the complete list of violations.
    pub fn validate(&self) -> Result<(), ParamError> {
        let mut list = Vec::new();
        let pos = |list: &mut Vec<String>, name: &str, v: f64| {
            if !(v > 0.0) {
                list.push(format!("{name} must be > 0 (got {v})"));
            }
        };
        pos(&mut list, "rho_el", self.rho_el);
        pos(&mut list, "rho_f", self.rho_f);
        pos(&mut list, "mu_el", self.mu_el);
        pos(&mut list, "mu_f", self.mu_f);
        if !(self.lambda >= 0.0) {
            list.push(format!("lambda must be >= 0 (got {})", self.lambda));
        }
        if !(self.gamma >= 0.0) {
            list.push(format!("slip rate must be >= 0 (got gamma = {})", self.gamma));
        }
        let nj = self.n_compartments();
        if nj == 0 {
            list.push("at least one compartment is required".into());
        }
        for (j, c) in self.compartments.iter().enumerate() {
            if !(c.alpha > 0.0 && c.alpha <= 1.0) {
                list.push(format!("alpha[{j}] must be in (0, 1] (got {})", c.alpha));
            }
            if !(c.c >= 0.0) {
                list.push(format!("c[{j}] must be >= 0 (got {})", c.c));
            }
            pos(&mut list, &format!("k[{j}]"), c.k);
            pos(&mut list, &format!("mu[{j}]"), c.mu);
            if !(c.beta_e >= 0.0) {
                list.push(format!("beta_e[{j}] must be >= 0 (got {})", c.beta_e));
            }
        }
        if self.exchange.len() != nj * nj {
            list.push(format!(
                "exchange matrix must be {nj} x {nj} (got {} entries)",
                self.exchange.len()
            ));
        } else {
            for j in 0..nj {
                if self.beta(j, j) != 0.0 {
                    list.push(format!("exchange diagonal beta[{j}][{j}] must be 0"));
                }
                for k in 0..nj {
                    if !(self.beta(j, k) >= 0.0) {
                        list.push(format!("beta[{j}][{k}] must be >= 0"));
                    }
                    if self.beta(j, k) != self.beta(k, j) {
                        list.push(format!("exchange matrix must be symmetric at ({j},{k})"));
                    }
                }
            }
        }
        if nj > 0 && self.interface_compartment >= nj {
            list.push(format!(
                "interface compartment index {} out of range (J = {nj})",
                self.interface_compartment
            ));
        }
        if list.is_empty() {
            Ok(())
        } else {
            Err(ParamError { list })
        }
    }
}

/// Dimensionless penalty constants of the interior-penalty discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    /// Elasticity penalty constant (eta bar).
    pub eta_bar: f64,
    /// Compartment pressure penalty constant (zeta bar), shared by all
    /// compartments.
    pub zeta_bar: f64,
    /// Fluid velocity penalty constant (gamma_v bar).
    pub gamma_v_bar: f64,
    /// Fluid pressure jump stabilization constant (gamma_p bar).
    pub gamma_p_bar: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            eta_bar: 10.0,
            zeta_bar: 10.0,
            gamma_v_bar: 10.0,
            gamma_p_bar: 10.0,
        }
    }
}

impl PenaltyConfig {
    /// Scales the coercivity penalty constants for a given polynomial
    /// degree.
    ///
    /// The face penalty formulas carry the mesh-size dependence but leave
    /// the constants free, and a constant that keeps the interior-penalty
    /// forms coercive for linears is too small at higher degree: the
    /// inverse-trace constant of the consistency terms grows like the
    /// square of the degree.  This method applies the standard quadratic
    /// degree scaling to the three coercivity constants (`eta_bar`,
    /// `zeta_bar`, `gamma_v_bar`), treating the stored values as the
    /// degree-1 baseline.  The pressure-jump stabilization constant
    /// `gamma_p_bar` is left unscaled: that term is positive
    /// semidefinite on its own and plays no role in coercivity.
    pub fn for_degree(&self, degree: usize) -> PenaltyConfig {
        let factor = (degree.max(1) * degree.max(1)) as f64;
        PenaltyConfig {
            eta_bar: self.eta_bar * factor,
            zeta_bar: self.zeta_bar * factor,
            gamma_v_bar: self.gamma_v_bar * factor,
            gamma_p_bar: self.gamma_p_bar,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let mut list = Vec::new();
        for (name, v) in [
            ("eta_bar", self.eta_bar),
            ("zeta_bar", self.zeta_bar),
            ("gamma_v_bar", self.gamma_v_bar),
            ("gamma_p_bar", self.gamma_p_bar),
        ] {
            if !(v > 0.0) {
                list.push(format!("penalty constant {name} must be > 0 (got {v})"));
            }
        }
        if list.is_empty() {
            Ok(())
        } else {
            Err(ParamError { list })
        }
    }
}

#[derive(Debug, Error)]
pub enum PenaltyError {
    #[error("penalty coefficients are not defined on interface faces (face {0})")]
    InterfaceFace(usize),
}

/// Face penalty coefficients of the scheme, with the mesh-size dependence
/// through the harmonic average {h}_H of the owner diameters:
///   eta     = eta_bar (2 mu_el + d lambda) / {h}_H     (displacement),
///   zeta_j  = zeta_bar k~_j / (sqrt(mu_j) {h}_H)       (compartment pressures),
///   gamma_v = gamma_v_bar mu_f / {h}_H                 (fluid velocity),
///   gamma_p = gamma_p_bar {h}_H                        (fluid pressure jumps).
///
/// Interface faces carry no penalties and are rejected.
pub fn penalty_coefficients(
    mesh: &PolyMesh,
    face: usize,
    params: &MaterialParams,
    config: &PenaltyConfig,
) -> Result<(f64, Vec<f64>, f64, f64), PenaltyError> {
    if mesh.faces[face].kind == FaceKind::Interface {
        return Err(PenaltyError::InterfaceFace(face));
    }
    Ok(penalty_values(mesh.harmonic_h(face), params, config))
}

/// Penalty coefficients for a given harmonic mesh size {h}_H; see
/// [`penalty_coefficients`].
pub fn penalty_values(
    h: f64,
    params: &MaterialParams,
    config: &PenaltyConfig,
) -> (f64, Vec<f64>, f64, f64) {
    let d = 2.0;
    let eta = config.eta_bar * (2.0 * params.mu_el + d * params.lambda) / h;
    let zeta = params
        .compartments
        .iter()
        .map(|c| config.zeta_bar * c.k / (c.mu.sqrt() * h))
        .collect();
    let gamma_v = config.gamma_v_bar * params.mu_f / h;
    let gamma_p = config.gamma_p_bar * h;
    (eta, zeta, gamma_v, gamma_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn physiological_values_are_valid() {
        MaterialParams::physiological().validate().unwrap();
        MaterialParams::unit().validate().unwrap();
        PenaltyConfig::default().validate().unwrap();
    }

    #[test]
    fn negative_slip_rate_is_reported() {
        let mut p = MaterialParams::unit();
        p.gamma = -1.0;
        let err = p.validate().unwrap_err();
        assert!(err.list.iter().any(|m| m.contains("slip rate must be >= 0")));
    }

    #[test]
    fn every_violation_is_listed() {
        let mut p = MaterialParams::physiological();
        p.rho_f = 0.0;
        p.compartments[0].alpha = 1.5;
        p.gamma = -2.0;
        let err = p.validate().unwrap_err();
        assert_eq!(err.list.len(), 3);
    }

    #[test]
    fn penalty_formulas_at_physiological_values() {
        let p = MaterialParams::physiological();
        let cfg = PenaltyConfig::default();
        // displacement penalty at {h}_H = 0.1
        let (eta, _, _, _) = penalty_values(0.1, &p, &cfg);
        assert_eq!(eta, 10.0 * (2.0 * 216.0 + 2.0 * 11567.0) / 0.1);
        assert_eq!(eta, 2_356_600.0);
        // compartment pressure penalty at {h}_H = 0.01
        let (_, zeta, _, _) = penalty_values(0.01, &p, &cfg);
        assert!((zeta[0] - 1.690e-12).abs() < 1e-15, "zeta_E = {}", zeta[0]);
        // fluid pressure stabilization at {h}_H = 0.5
        let (_, _, _, gamma_p) = penalty_values(0.5, &p, &cfg);
        assert_eq!(gamma_p, 5.0);
    }
}
