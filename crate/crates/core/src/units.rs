//! Laboratory units and the dimensionless scaling `Ẽ = 2E/ħω`,
//! `𝓔̃ = e𝓔/√(m* ħ ω³)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C (CODATA 2018).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Electron mass, kg (CODATA 2018).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Joules per meV.
pub const JOULE_PER_MEV: f64 = 1e-3 * ELEMENTARY_CHARGE;

/// Effective-mass material description; all other constants are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    effective_mass_ratio: f64,
}

impl MaterialParams {
    pub fn new(effective_mass_ratio: f64) -> Result<Self> {
        if !(effective_mass_ratio > 0.0) || !effective_mass_ratio.is_finite() {
            return Err(ZrpError::Domain(format!(
                "effective mass ratio must be positive, got {effective_mass_ratio}"
            )));
        }
        Ok(MaterialParams {
            effective_mass_ratio,
        })
    }

    /// GaAs conduction band, m* = 0.067 m_e.
    pub fn gaas() -> Self {
        MaterialParams {
            effective_mass_ratio: 0.067,
        }
    }

    pub fn effective_mass_ratio(&self) -> f64 {
        self.effective_mass_ratio
    }

    /// m* in kg.
    pub fn effective_mass(&self) -> f64 {
        self.effective_mass_ratio * ELECTRON_MASS
    }

    /// Field scale `√(m* ħ ω³)/e` in V/m that corresponds to `𝓔̃ = 1`.
    fn field_unit(&self, omega: f64) -> f64 {
        (self.effective_mass() * HBAR * omega.powi(3)).sqrt() / ELEMENTARY_CHARGE
    }
}

/// A solution of `D̃ = 0` in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPoint {
    pub e_tilde: Complex64,
    pub eb_tilde: f64,
    pub f_tilde: f64,
}

impl ScaledPoint {
    pub fn new(e_tilde: Complex64, eb_tilde: f64, f_tilde: f64) -> Result<Self> {
        if !(eb_tilde < 0.0) {
            return Err(ZrpError::Domain(format!(
                "impurity must be attractive (Ẽ_B < 0), got {eb_tilde}"
            )));
        }
        if !(f_tilde >= 0.0) {
            return Err(ZrpError::Domain(format!("scaled field must be >= 0, got {f_tilde}")));
        }
        Ok(ScaledPoint {
            e_tilde,
            eb_tilde,
            f_tilde,
        })
    }
}

/// Laboratory realization of a [`ScaledPoint`] for one material binding
/// energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScenario {
    /// |E_B| in meV.
    pub binding_energy: f64,
    /// Tesla.
    pub magnetic_field: f64,
    /// V/m.
    pub electric_field: f64,
    /// ħω in meV.
    pub cyclotron_quantum: f64,
    /// Seconds.
    pub lifetime: f64,
}

/// Cyclotron frequency `ω = eB/m*` in rad/s.
pub fn cyclotron_frequency(b_tesla: f64, mat: &MaterialParams) -> Result<f64> {
    if !(b_tesla > 0.0) || !b_tesla.is_finite() {
        return Err(ZrpError::Domain(format!("magnetic field must be positive, got {b_tesla}")));
    }
    Ok(ELEMENTARY_CHARGE * b_tesla / mat.effective_mass())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ZrpError::Domain(format!("cyclotron frequency must be positive, got {omega}")));
    }
    Ok(())
}

/// Lab energy (J) and electric field (V/m) to `(Ẽ, 𝓔̃)`.
pub fn to_scaled(
    energy_j: f64,
    field_v_per_m: f64,
    omega: f64,
    mat: &MaterialParams,
) -> Result<(f64, f64)> {
    check_omega(omega)?;
    Ok((
        2.0 * energy_j / (HBAR * omega),
        field_v_per_m / mat.field_unit(omega),
    ))
}

/// Inverse of [`to_scaled`].
pub fn from_scaled(
    e_tilde: f64,
    f_tilde: f64,
    omega: f64,
    mat: &MaterialParams,
) -> Result<(f64, f64)> {
    check_omega(omega)?;
    Ok((
        0.5 * e_tilde * HBAR * omega,
        f_tilde * mat.field_unit(omega),
    ))
}

/// Fix the cyclotron frequency from the material binding energy and map the
/// scaled solution to tesla, V/m and seconds. The lifetime is the
/// probability-decay time `τ = ħ/(2|Im E|) = 1/(ω|Im Ẽ|)`.
pub fn realize_scenario(
    binding_mev: f64,
    mat: &MaterialParams,
    point: &ScaledPoint,
) -> Result<PhysicalScenario> {
    if !(binding_mev > 0.0) || !binding_mev.is_finite() {
        return Err(ZrpError::Domain(format!(
            "binding energy magnitude must be positive, got {binding_mev}"
        )));
    }
    if !(point.eb_tilde < 0.0) {
        return Err(ZrpError::Domain(format!("Ẽ_B must be negative, got {}", point.eb_tilde)));
    }
    if point.e_tilde.im >= 0.0 {
        return Err(ZrpError::InfiniteLifetime);
    }
    let omega = 2.0 * binding_mev * JOULE_PER_MEV / (HBAR * point.eb_tilde.abs());
    Ok(PhysicalScenario {
        binding_energy: binding_mev,
        magnetic_field: mat.effective_mass() * omega / ELEMENTARY_CHARGE,
        electric_field: point.f_tilde * mat.field_unit(omega),
        cyclotron_quantum: HBAR * omega / JOULE_PER_MEV,
        lifetime: 1.0 / (omega * point.e_tilde.im.abs()),
    })
}
