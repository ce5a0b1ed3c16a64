//! Unit conversions and small numeric helpers.
//!
//! Internal conventions: wavelengths in µm at API boundaries, angular
//! frequencies in rad/s, propagation constants in rad/m, transverse grids
//! in µm.

/// Speed of light (m/s).
pub const C_M_PER_S: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of a vacuum wavelength in µm.
pub fn omega_from_lambda_um(lambda_um: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_M_PER_S / (lambda_um * 1e-6)
}

/// Vacuum wavelength in µm of an angular frequency in rad/s.
pub fn lambda_um_from_omega(omega_rad_s: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_M_PER_S / omega_rad_s * 1e6
}

/// sin of an angle in degrees, exact at multiples of 90°.
pub fn sind(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 || r == 180.0 {
        0.0
    } else if r == 90.0 {
        1.0
    } else if r == 270.0 {
        -1.0
    } else {
        deg.to_radians().sin()
    }
}

/// cos of an angle in degrees, exact at multiples of 90°.
pub fn cosd(deg: f64) -> f64 {
    sind(deg + 90.0)
}

/// Unnormalized sinc: sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambda_omega_roundtrip() {
        let lam = 0.741;
        assert_relative_eq!(
            lambda_um_from_omega(omega_from_lambda_um(lam)),
            lam,
            max_relative = 1e-14
        );
    }

    #[test]
    fn degree_trig_exact_at_axes() {
        assert_eq!(sind(0.0), 0.0);
        assert_eq!(sind(180.0), 0.0);
        assert_eq!(cosd(90.0), 0.0);
        assert_eq!(cosd(270.0), 0.0);
        assert_eq!(cosd(0.0), 1.0);
        assert_eq!(sind(90.0), 1.0);
        assert_relative_eq!(sind(45.0), cosd(45.0), max_relative = 1e-15);
    }

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert_relative_eq!(sinc(std::f64::consts::PI), 0.0, epsilon = 1e-15);
        assert_relative_eq!(sinc(1.0), 1.0_f64.sin(), max_relative = 1e-14);
    }
}
