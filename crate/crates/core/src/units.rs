//! Unit conventions and physical constants.
//!
//! Internally: time in fs, angular frequency in rad/fs, wavelength in nm,
//! electric field in V/m, dipole moment in C·m, energy in J. These are the
//! natural desk scales for femtosecond pulses near optical resonances and
//! keep all quantities within comfortable f64 (and mostly f32) range.

use crate::num::{r, Real};

/// Speed of light, nm/fs (= m/s × 1e-6).
pub const C_NM_PER_FS: f64 = 299.792458;

/// Speed of light, m/s.
pub const C_M_PER_S: f64 = 2.99792458e8;

/// Reduced Planck constant, J·s.
pub const HBAR_JS: f64 = 1.054571817e-34;

/// Vacuum permittivity, F/m.
pub const EPS0_F_PER_M: f64 = 8.8541878128e-12;

/// Angular frequency (rad/fs) of light with vacuum wavelength `lambda_nm`.
#[inline]
pub fn omega_from_nm<R: Real>(lambda_nm: R) -> R {
    R::TAU() * r::<R>(C_NM_PER_FS) / lambda_nm
}

/// Vacuum wavelength (nm) for angular frequency `omega` in rad/fs.
#[inline]
pub fn nm_from_omega<R: Real>(omega: R) -> R {
    R::TAU() * r::<R>(C_NM_PER_FS) / omega
}

/// Ordinary frequency in THz for an angular frequency in rad/fs.
/// 1 rad/fs = 1000/(2π) THz.
#[inline]
pub fn thz_from_angular<R: Real>(omega: R) -> R {
    omega / R::TAU() * r(1e3)
}

/// Angular-frequency FWHM (rad/fs) of a spectral feature given its
/// wavelength FWHM, linearized at the feature's center wavelength.
#[inline]
pub fn angular_fwhm_from_nm<R: Real>(center_nm: R, fwhm_nm: R) -> R {
    R::TAU() * r::<R>(C_NM_PER_FS) * fwhm_nm / (center_nm * center_nm)
}

/// Rabi frequency in rad/fs for a dipole (C·m) in a field (V/m).
/// μE/ħ is rad/s; the 1e-15 converts to rad/fs.
#[inline]
pub fn rabi_rad_per_fs<R: Real>(dipole_cm: R, field_v_per_m: R) -> R {
    dipole_cm * field_v_per_m / r::<R>(HBAR_JS) * r(1e-15)
}

/// Peak electric field (V/m) of a traveling wave with intensity I (W/m²):
/// E = √(2I/(cε₀)).
#[inline]
pub fn field_from_intensity<R: Real>(intensity_w_per_m2: R) -> R {
    (r::<R>(2.0) * intensity_w_per_m2 / r::<R>(C_M_PER_S * EPS0_F_PER_M)).sqrt()
}

/// cε₀/2 in SI, the factor converting |E|² (V²/m²) to intensity (W/m²).
#[inline]
pub fn intensity_factor<R: Real>() -> R {
    r(0.5 * C_M_PER_S * EPS0_F_PER_M)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavelength_omega_round_trip() {
        for nm in [766.5, 769.9, 794.75, 800.0] {
            let w: f64 = omega_from_nm(nm);
            assert_relative_eq!(nm_from_omega(w), nm, max_relative = 1e-12);
        }
    }

    #[test]
    fn rb_d1_angular_frequency() {
        let w: f64 = omega_from_nm(794.75);
        assert_relative_eq!(w, 2.370, max_relative = 1e-3);
    }

    #[test]
    fn intensity_to_field() {
        // 2.1e9 W/cm² = 2.1e13 W/m²
        let e: f64 = field_from_intensity(2.1e13);
        assert_relative_eq!(e, 1.2575e8, max_relative = 1e-3);
    }
}
