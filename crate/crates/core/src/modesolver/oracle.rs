//! Analytic LP01 effective index of a circular step-index fiber, by
//! bracketed bisection on the characteristic equation
//! u J₁(u)/J₀(u) = w K₁(w)/K₀(w), u² + w² = V².

use super::bessel::{bessel_j0, bessel_j1, bessel_k0, bessel_k1};
use crate::error::{Error, Result};

/// Fundamental-mode effective index. `core_radius` and `lambda` in µm.
pub fn step_index_oracle(core_radius_um: f64, n_core: f64, n_clad: f64, lambda_um: f64) -> Result<f64> {
    if !(n_core > n_clad) || n_clad <= 0.0 || core_radius_um <= 0.0 || lambda_um <= 0.0 {
        return Err(Error::config(format!(
            "step-index oracle: need n_core > n_clad > 0, r > 0; got r={core_radius_um} n_core={n_core} n_clad={n_clad}"
        )));
    }
    let k0 = 2.0 * std::f64::consts::PI / lambda_um;
    let f = |n_eff: f64| -> f64 {
        let u = core_radius_um * k0 * (n_core * n_core - n_eff * n_eff).max(0.0).sqrt();
        let w = core_radius_um * k0 * (n_eff * n_eff - n_clad * n_clad).max(0.0).sqrt();
        if w <= 0.0 {
            return f64::INFINITY;
        }
        u * bessel_j1(u) / bessel_j0(u) - w * bessel_k1(w) / bessel_k0(w)
    };

    // dense scan for sign changes, then bisection to 1e-10
    let n_scan = 4000;
    let lo = n_clad + 1e-12;
    let hi = n_core - 1e-12;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n_scan {
        let x = lo + (hi - lo) * i as f64 / n_scan as f64;
        let v = f(x);
        if let Some((px, pv)) = prev {
            // skip intervals containing a J0 pole (f jumps through ±∞)
            if pv.is_finite() && v.is_finite() && pv * v < 0.0 && (pv - v).abs() < 1e6 {
                let (mut a, mut b) = (px, x);
                let mut fa = pv;
                for _ in 0..200 {
                    if b - a < 1e-10 {
                        break;
                    }
                    let m = 0.5 * (a + b);
                    let fm = f(m);
                    if fa * fm <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        prev = Some((x, v));
    }
    roots
        .into_iter()
        .fold(None, |acc: Option<f64>, r| {
            Some(match acc {
                Some(a) if a > r => a,
                _ => r,
            })
        })
        .ok_or_else(|| {
            Error::physics(format!(
                "no guided LP01 root in ({n_clad}, {n_core}) at lambda = {lambda_um} um"
            ))
        })
}
