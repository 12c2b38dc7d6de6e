use crate::error::{Error, Result};

/// Mass unit of the consistent mm–N–s system (tonne = N·s²/mm) per kilogram.
pub const MASS_UNIT_PER_KG: f64 = 1e-3;

/// Isotropic linear-elastic material.
///
/// Young's modulus in MPa, density in kg/mm³. Mass matrices are assembled in the
/// consistent unit `N·s²/mm`, i.e. density times [`MASS_UNIT_PER_KG`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

impl Material {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, density: f64) -> Result<Self> {
        let m = Self {
            youngs_modulus,
            poisson_ratio,
            density,
        };
        m.validate()?;
        Ok(m)
    }

    /// Structural steel: E = 207 GPa, ν = 0.288, ρ = 7829 kg/m³.
    pub fn steel() -> Self {
        Self {
            youngs_modulus: 207_000.0,
            poisson_ratio: 0.288,
            density: 7.829e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0) {
            return Err(Error::Material(format!(
                "Young's modulus must be positive, got {}",
                self.youngs_modulus
            )));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::Material(format!(
                "Poisson ratio must lie in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.density > 0.0) {
            return Err(Error::Material(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        Ok(())
    }

    /// Lamé parameters `(λ, μ)` in MPa.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        (lambda, mu)
    }

    /// Density in consistent mass units per mm³.
    pub fn mass_density(&self) -> f64 {
        self.density * MASS_UNIT_PER_KG
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Material::new(0.0, 0.3, 1e-6).is_err());
        assert!(Material::new(1.0, 0.5, 1e-6).is_err());
        assert!(Material::new(1.0, 0.3, 0.0).is_err());
        assert!(Material::new(1.0, 0.0, 1.0).is_ok());
    }
}
