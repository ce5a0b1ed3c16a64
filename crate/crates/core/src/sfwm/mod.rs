//! The six SFWM polarization processes, phase mismatch evaluation, and
//! phase-matching contour tracing.

mod contour;

pub use contour::{
    branches_to_csv, branches_to_json, idler_roots_at_pump, trace_contours, BranchEnd,
    ContourOptions, PhasematchBranch, TracedPoint,
};

use crate::error::{Error, Result};
use crate::modesolver::DispersionPair;
use crate::units::omega_from_lambda_um;
use serde::{Deserialize, Serialize};

/// Principal-axis tag. `X` is the horizontal axis carrying the enlarged
/// hole pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    X,
    Y,
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarization::X => write!(f, "x"),
            Polarization::Y => write!(f, "y"),
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Polarization::X),
            "y" => Ok(Polarization::Y),
            other => Err(Error::config(format!("unknown polarization '{other}'"))),
        }
    }
}

/// One of the six SFWM polarization combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ProcessId {
    pub const ALL: [ProcessId; 6] = [
        ProcessId::A,
        ProcessId::B,
        ProcessId::C,
        ProcessId::D,
        ProcessId::E,
        ProcessId::F,
    ];

    pub fn index(self) -> usize {
        match self {
            ProcessId::A => 0,
            ProcessId::B => 1,
            ProcessId::C => 2,
            ProcessId::D => 3,
            ProcessId::E => 4,
            ProcessId::F => 5,
        }
    }

    pub fn label(self) -> char {
        ['a', 'b', 'c', 'd', 'e', 'f'][self.index()]
    }

    /// Pump, signal, and idler polarizations plus the Hamiltonian weight.
    pub fn info(self) -> ProcessInfo {
        use Polarization::{X, Y};
        match self {
            ProcessId::A => ProcessInfo::new(self, X, X, X, X, 3),
            ProcessId::B => ProcessInfo::new(self, Y, Y, Y, Y, 3),
            ProcessId::C => ProcessInfo::new(self, X, Y, X, Y, 2),
            ProcessId::D => ProcessInfo::new(self, X, Y, Y, X, 2),
            ProcessId::E => ProcessInfo::new(self, X, X, Y, Y, 1),
            ProcessId::F => ProcessInfo::new(self, Y, Y, X, X, 1),
        }
    }
}

impl std::fmt::Display for ProcessId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl std::str::FromStr for ProcessId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(ProcessId::A),
            "b" => Ok(ProcessId::B),
            "c" => Ok(ProcessId::C),
            "d" => Ok(ProcessId::D),
            "e" => Ok(ProcessId::E),
            "f" => Ok(ProcessId::F),
            other => Err(Error::config(format!("unknown process '{other}'"))),
        }
    }
}

/// Polarization row of one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProcessInfo {
    pub id: ProcessId,
    pub pump1_pol: Polarization,
    pub pump2_pol: Polarization,
    pub signal_pol: Polarization,
    pub idler_pol: Polarization,
    /// Hamiltonian weight η ∈ {3, 3, 2, 2, 1, 1}
    pub eta: u32,
}

impl ProcessInfo {
    fn new(
        id: ProcessId,
        p1: Polarization,
        p2: Polarization,
        s: Polarization,
        i: Polarization,
        eta: u32,
    ) -> ProcessInfo {
        ProcessInfo {
            id,
            pump1_pol: p1,
            pump2_pol: p2,
            signal_pol: s,
            idler_pol: i,
            eta,
        }
    }

    /// (signal, idler) polarization outcome channel; amplitudes interfere
    /// coherently only within a channel.
    pub fn channel(&self) -> (Polarization, Polarization) {
        (self.signal_pol, self.idler_pol)
    }
}

/// All six process rows.
pub fn process_table() -> [ProcessInfo; 6] {
    [
        ProcessId::A.info(),
        ProcessId::B.info(),
        ProcessId::C.info(),
        ProcessId::D.info(),
        ProcessId::E.info(),
        ProcessId::F.info(),
    ]
}

/// Nonlinear phase context: per-process γ, axis-resolved pump peak powers,
/// and the φ_NL enable switch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonlinearContext {
    /// γ per process (1/W/m), indexed by ProcessId::index()
    pub gamma_w_m: [f64; 6],
    /// peak pump power on the x axis (W)
    pub pump_power_x_w: f64,
    /// peak pump power on the y axis (W)
    pub pump_power_y_w: f64,
    pub phi_nl_enabled: bool,
}

impl NonlinearContext {
    /// A context with φ_NL disabled and zero powers.
    pub fn disabled() -> NonlinearContext {
        NonlinearContext {
            gamma_w_m: [0.0; 6],
            pump_power_x_w: 0.0,
            pump_power_y_w: 0.0,
            phi_nl_enabled: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pump_power_x_w < 0.0 || self.pump_power_y_w < 0.0 {
            return Err(Error::config("pump powers must be non-negative"));
        }
        if self.phi_nl_enabled && self.gamma_w_m.iter().any(|&g| g < 0.0) {
            return Err(Error::config("gamma must be non-negative"));
        }
        Ok(())
    }

    fn power_for(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::X => self.pump_power_x_w,
            Polarization::Y => self.pump_power_y_w,
        }
    }

    /// Per-process pump peak powers (p₁, p₂) in W.
    pub fn pump_powers(&self, process: ProcessId) -> (f64, f64) {
        let info = process.info();
        (
            self.power_for(info.pump1_pol),
            self.power_for(info.pump2_pol),
        )
    }
}

/// φ_NL = γ_j (p₁ + p₂) when enabled, 0 otherwise (rad/m).
pub fn nonlinear_phase(ctx: &NonlinearContext, process: ProcessId) -> f64 {
    if !ctx.phi_nl_enabled {
        return 0.0;
    }
    let (p1, p2) = ctx.pump_powers(process);
    ctx.gamma_w_m[process.index()] * (p1 + p2)
}

/// SFWM nonlinearity coefficient γ = 2π n₂ / (λ_p A_eff) in 1/W/m, with
/// the pump-mode effective area at ω_p (averaged over the two pump
/// polarizations for cross-polarized processes).
pub fn gamma_coefficient(
    process: ProcessId,
    tables: &DispersionPair,
    omega_p_rad_s: f64,
    n2_m2_w: f64,
) -> Result<f64> {
    let info = process.info();
    let a1 = tables.get(info.pump1_pol).interp_aeff(omega_p_rad_s)?;
    let a_eff_um2 = if info.pump1_pol == info.pump2_pol {
        a1
    } else {
        0.5 * (a1 + tables.get(info.pump2_pol).interp_aeff(omega_p_rad_s)?)
    };
    let lambda_p_m = crate::units::lambda_um_from_omega(omega_p_rad_s) * 1e-6;
    let a_eff_m2 = a_eff_um2 * 1e-12;
    Ok(2.0 * std::f64::consts::PI * n2_m2_w / (lambda_p_m * a_eff_m2))
}

/// Phase mismatch of Eq.-6 form (rad/m):
/// Δk = k_{p1}(ω) + k_{p2}(ω_i + ω_s − ω) − k_s(ω_s) − k_i(ω_i) − φ_NL,
/// each k drawn from the dispersion table matching that wave's
/// polarization in the process row.
pub fn delta_k(
    process: ProcessId,
    omega_pump_rad_s: f64,
    omega_s_rad_s: f64,
    omega_i_rad_s: f64,
    tables: &DispersionPair,
    ctx: &NonlinearContext,
) -> Result<f64> {
    let info = process.info();
    let omega_conj = omega_i_rad_s + omega_s_rad_s - omega_pump_rad_s;
    let named = |what: &str, r: Result<f64>| -> Result<f64> {
        r.map_err(|e| match e {
            Error::OutOfRange {
                value, min, max, ..
            } => Error::OutOfRange {
                what: format!("{what} frequency"),
                value,
                min,
                max,
            },
            other => other,
        })
    };
    let k1 = named("pump1", tables.get(info.pump1_pol).interp_k(omega_pump_rad_s))?;
    let k2 = named("pump2", tables.get(info.pump2_pol).interp_k(omega_conj))?;
    let ks = named("signal", tables.get(info.signal_pol).interp_k(omega_s_rad_s))?;
    let ki = named("idler", tables.get(info.idler_pol).interp_k(omega_i_rad_s))?;
    Ok(k1 + k2 - ks - ki - nonlinear_phase(ctx, process))
}

/// Δk under the monochromatic-pump contour condition ω_s = 2ω_p − ω_i,
/// with pump wavelength and idler wavelength in µm.
pub fn delta_k_contour(
    process: ProcessId,
    lambda_p_um: f64,
    lambda_i_um: f64,
    tables: &DispersionPair,
    ctx: &NonlinearContext,
) -> Result<f64> {
    let omega_p = omega_from_lambda_um(lambda_p_um);
    let omega_i = omega_from_lambda_um(lambda_i_um);
    let omega_s = 2.0 * omega_p - omega_i;
    delta_k(process, omega_p, omega_s, omega_i, tables, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modesolver::DispersionTable;

    #[test]
    fn table_matches_the_six_rows() {
        use Polarization::{X, Y};
        let t = process_table();
        let expect = [
            ('a', X, X, X, X, 3),
            ('b', Y, Y, Y, Y, 3),
            ('c', X, Y, X, Y, 2),
            ('d', X, Y, Y, X, 2),
            ('e', X, X, Y, Y, 1),
            ('f', Y, Y, X, X, 1),
        ];
        for (row, &(label, p1, p2, s, i, eta)) in t.iter().zip(&expect) {
            assert_eq!(row.id.label(), label);
            assert_eq!(row.pump1_pol, p1);
            assert_eq!(row.pump2_pol, p2);
            assert_eq!(row.signal_pol, s);
            assert_eq!(row.idler_pol, i);
            assert_eq!(row.eta, eta);
        }
    }

    #[test]
    fn eta_weights() {
        let etas: Vec<u32> = process_table().iter().map(|p| p.eta).collect();
        assert_eq!(etas, vec![3, 3, 2, 2, 1, 1]);
    }

    /// Artificial table with k(ω) = c₀·ω (identical both axes).
    pub(crate) fn linear_pair(c0: f64) -> DispersionPair {
        let omegas: Vec<f64> = (0..32)
            .map(|i| 1.0e15 + i as f64 * 0.1e15)
            .collect();
        let mk = |pol| {
            DispersionTable::from_columns(
                pol,
                omegas.clone(),
                omegas.iter().map(|&w| c0 * w).collect(),
                omegas.iter().map(|_| 1.4).collect(),
                omegas.iter().map(|_| 1.0 / c0).collect(),
                omegas.iter().map(|_| 2.0).collect(),
            )
            .unwrap()
        };
        DispersionPair {
            x: mk(Polarization::X),
            y: mk(Polarization::Y),
        }
    }

    #[test]
    fn linear_dispersion_cancels_exactly() {
        let pair = linear_pair(4.8e-9);
        let ctx = NonlinearContext::disabled();
        let op = 2.4e15;
        for ps in [ProcessId::A, ProcessId::C, ProcessId::F] {
            for (ws, wi) in [(2.0e15, 2.8e15), (2.2e15, 2.6e15), (1.9e15, 2.9e15)] {
                let dk = delta_k(ps, op, ws, wi, &pair, &ctx).unwrap();
                assert!(dk.abs() < 1e-6, "dk = {dk}");
            }
        }
    }

    #[test]
    fn copolarized_signal_idler_swap_symmetry() {
        // a degenerate-pump evaluation of process a is symmetric in s↔i
        let pair = linear_pair(4.8e-9);
        let ctx = NonlinearContext::disabled();
        let op = 2.4e15;
        // use a curved artificial table to make the check non-trivial
        let omegas: Vec<f64> = (0..32).map(|i| 1.0e15 + i as f64 * 0.1e15).collect();
        let mk = |pol| {
            DispersionTable::from_columns(
                pol,
                omegas.clone(),
                omegas.iter().map(|&w| 4.8e-9 * w + 1e-22 * w * w).collect(),
                omegas.iter().map(|_| 1.4).collect(),
                omegas.iter().map(|_| 2.08e8).collect(),
                omegas.iter().map(|_| 2.0).collect(),
            )
            .unwrap()
        };
        let pair2 = DispersionPair {
            x: mk(Polarization::X),
            y: mk(Polarization::Y),
        };
        let _ = pair;
        let (ws, wi) = (2.1e15, 2.7e15);
        let d1 = delta_k(ProcessId::A, op, ws, wi, &pair2, &ctx).unwrap();
        let d2 = delta_k(ProcessId::A, op, wi, ws, &pair2, &ctx).unwrap();
        assert!((d1 - d2).abs() < 1e-9 * d1.abs().max(1.0));
    }

    #[test]
    fn nonlinear_phase_examples() {
        let mut ctx = NonlinearContext::disabled();
        assert_eq!(nonlinear_phase(&ctx, ProcessId::A), 0.0);
        ctx.phi_nl_enabled = true;
        ctx.gamma_w_m = [0.07; 6]; // 70 / W / km
        ctx.pump_power_x_w = 1.0;
        ctx.pump_power_y_w = 1.0;
        let phi = nonlinear_phase(&ctx, ProcessId::A);
        assert!((phi - 0.14).abs() < 1e-12, "phi = {phi}");
        // zero power → zero phase
        ctx.pump_power_x_w = 0.0;
        ctx.pump_power_y_w = 0.0;
        assert_eq!(nonlinear_phase(&ctx, ProcessId::C), 0.0);
    }

    #[test]
    fn out_of_range_error_names_the_wave() {
        let pair = linear_pair(4.8e-9);
        let ctx = NonlinearContext::disabled();
        // only the signal frequency lies outside the table range
        let err = delta_k(ProcessId::A, 1.4e15, 4.2e15, 1.2e15, &pair, &ctx).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("signal"), "message was: {msg}");
    }
}
