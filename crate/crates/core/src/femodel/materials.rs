use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Float;

/// Isotropic passive layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Substrate {
    /// `E` [Pa]
    pub youngs_modulus: f64,
    /// `nu`
    pub poisson_ratio: f64,
    /// `rho_s` [kg/m^3]
    pub density: f64,
}

/// Transversely isotropic piezoceramic layer, stress-charge form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piezo {
    /// `c11^E` [Pa]
    pub c11_e: f64,
    /// `c22^E` [Pa]
    pub c22_e: f64,
    /// `c12^E` [Pa]
    pub c12_e: f64,
    /// `c66^E` [Pa]
    pub c66_e: f64,
    /// `e31` [C/m^2]
    pub e31: f64,
    /// `e32` [C/m^2]
    pub e32: f64,
    /// `eps33^S` [F/m]
    pub permittivity: f64,
    /// `rho_p` [kg/m^3]
    pub density: f64,
    /// `nu_p`
    pub poisson_ratio: f64,
}

/// Rayleigh coefficients, `C = alpha M + beta K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub alpha: f64,
    pub beta: f64,
}

/// Materials and damping of a bimorph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSet {
    pub substrate: Substrate,
    pub piezo: Piezo,
    pub damping: Damping,
}

impl Default for MaterialSet {
    fn default() -> Self {
        Self::bronze_pzt5a()
    }
}

impl MaterialSet {
    /// Bronze substrate with PZT-5A layers.
    pub fn bronze_pzt5a() -> Self {
        Self {
            substrate: Substrate {
                youngs_modulus: 105e9,
                poisson_ratio: 0.30,
                density: 9000.0,
            },
            piezo: Piezo {
                c11_e: 69.5e9,
                c22_e: 69.5e9,
                c12_e: 24.3e9,
                c66_e: 22.6e9,
                e31: -16.0,
                e32: -16.0,
                permittivity: 9.57e-9,
                density: 7800.0,
                poisson_ratio: 0.30,
            },
            damping: Damping { alpha: 14.65, beta: 1e-5 },
        }
    }

    /// Piezo layers replaced by an uncoupled copy of the substrate, giving a
    /// homogeneous plate of the full thickness.
    pub fn homogeneous(substrate: Substrate, damping: Damping) -> Self {
        let e = substrate.youngs_modulus;
        let nu = substrate.poisson_ratio;
        let d = e / (1.0 - nu * nu);
        Self {
            substrate,
            piezo: Piezo {
                c11_e: d,
                c22_e: d,
                c12_e: nu * d,
                c66_e: e / (2.0 * (1.0 + nu)),
                e31: 0.0,
                e32: 0.0,
                permittivity: 1e-9,
                density: substrate.density,
                poisson_ratio: nu,
            },
            damping,
        }
    }

    /// Multiplies every elastic constant by `factor`.
    pub fn scale_stiffness(mut self, factor: f64) -> Self {
        self.substrate.youngs_modulus *= factor;
        self.piezo.c11_e *= factor;
        self.piezo.c22_e *= factor;
        self.piezo.c12_e *= factor;
        self.piezo.c66_e *= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.substrate;
        let p = &self.piezo;
        let positive = [
            ("E", s.youngs_modulus),
            ("rho_s", s.density),
            ("c11E", p.c11_e),
            ("c22E", p.c22_e),
            ("c66E", p.c66_e),
            ("eps33S", p.permittivity),
            ("rho_p", p.density),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("material constant {name} = {v} must be positive")));
            }
        }
        for (name, nu) in [("nu", s.poisson_ratio), ("nu_p", p.poisson_ratio)] {
            if !(nu > 0.0 && nu < 0.5) {
                return Err(Error::Validation(format!("{name} = {nu} outside (0, 0.5)")));
            }
        }
        if p.c11_e * p.c22_e <= p.c12_e * p.c12_e {
            return Err(Error::Validation("piezo elastic matrix is not positive definite".into()));
        }
        let d = &self.damping;
        if !(d.alpha >= 0.0 && d.beta >= 0.0 && d.alpha.is_finite() && d.beta.is_finite()) {
            return Err(Error::Validation("Rayleigh coefficients must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Plane-stress stiffness of the substrate.
    pub fn substrate_matrix<T: Float>(&self) -> Matrix3<T> {
        let e = self.substrate.youngs_modulus;
        let nu = self.substrate.poisson_ratio;
        let d = e / (1.0 - nu * nu);
        Matrix3::new(d, nu * d, 0.0, nu * d, d, 0.0, 0.0, 0.0, d * (1.0 - nu) / 2.0).map(T::lit)
    }

    /// In-plane piezo stiffness at constant field.
    pub fn piezo_matrix<T: Float>(&self) -> Matrix3<T> {
        let p = &self.piezo;
        Matrix3::new(p.c11_e, p.c12_e, 0.0, p.c12_e, p.c22_e, 0.0, 0.0, 0.0, p.c66_e).map(T::lit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trips_through_json() {
        let m = MaterialSet::bronze_pzt5a();
        let s = serde_json::to_string_pretty(&m).unwrap();
        assert_eq!(MaterialSet::from_json_str(&s).unwrap(), m);
    }

    #[test]
    fn substrate_matrix_is_spd() {
        let c = MaterialSet::default().substrate_matrix::<f64>();
        assert_eq!(c, c.transpose());
        assert!(c.cholesky().is_some());
    }

    #[test]
    fn rejects_bad_poisson() {
        let mut m = MaterialSet::default();
        m.substrate.poisson_ratio = 0.5;
        assert!(m.validate().is_err());
    }
}
