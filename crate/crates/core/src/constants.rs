//! Physical constants (CODATA 2018, SI units).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Atomic mass of ¹⁷¹Yb, u.
pub const YB171_MASS_U: f64 = 170.936_325_8;

/// `q² / (4π ε0)` for two particles of charge `q`, in J m.
pub fn coulomb_constant(charge: f64) -> f64 {
    charge * charge / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY)
}

/// Converts an ordinary frequency (Hz) to an angular one (rad/s).
pub fn hz_to_angular(hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * hz
}

/// Converts an angular frequency (rad/s) to an ordinary one (Hz).
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}
