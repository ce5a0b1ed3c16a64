//! Two-photon state assembly: pump envelope, per-process joint spectral
//! amplitudes, marginal spectra, total JSI, and the polarization-projected
//! joint probability P(θ, ω_i).

use crate::error::{Error, Result};
use crate::modesolver::DispersionPair;
use crate::sfwm::{
    gamma_coefficient, nonlinear_phase, NonlinearContext, Polarization, ProcessId,
};
use crate::units::{cosd, omega_from_lambda_um, sind, C_M_PER_S};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Pump laser configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PumpConfig {
    /// center wavelength (µm)
    pub lambda_p_um: f64,
    /// intensity-FWHM bandwidth (nm)
    pub fwhm_nm: f64,
    /// average power (W)
    pub avg_power_w: f64,
    /// repetition rate (Hz)
    pub rep_rate_hz: f64,
    /// polarization angle from the x axis (degrees)
    pub theta_p_deg: f64,
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_nm > 0.0) {
            return Err(Error::config("pump bandwidth must be positive"));
        }
        if !(0.0..=90.0).contains(&self.theta_p_deg) {
            return Err(Error::config(format!(
                "pump angle {} outside [0, 90] degrees",
                self.theta_p_deg
            )));
        }
        if self.avg_power_w < 0.0 || self.rep_rate_hz <= 0.0 {
            return Err(Error::config("pump power/repetition rate invalid"));
        }
        Ok(())
    }

    pub fn omega_p(&self) -> f64 {
        omega_from_lambda_um(self.lambda_p_um)
    }

    /// Pump-envelope standard deviation in amplitude, rad/s.
    pub fn sigma_omega(&self) -> f64 {
        let lam_m = self.lambda_p_um * 1e-6;
        let dlam_m = self.fwhm_nm * 1e-9;
        let domega = 2.0 * std::f64::consts::PI * C_M_PER_S * dlam_m / (lam_m * lam_m);
        domega / (2.0 * (2.0_f64.ln()).sqrt())
    }
}

/// Transform-limited Gaussian pump envelope, peak amplitude 1.
pub fn pump_alpha(cfg: &PumpConfig, omega: f64) -> Complex64 {
    let s = cfg.sigma_omega();
    let d = omega - cfg.omega_p();
    Complex64::new((-d * d / (2.0 * s * s)).exp(), 0.0)
}

/// Axis-resolved pump peak powers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PumpSplit {
    pub peak_power_w: f64,
    pub p_x_w: f64,
    pub p_y_w: f64,
    pub tau_fwhm_s: f64,
}

/// Splits the average power into per-axis peak powers assuming
/// transform-limited Gaussian pulses:
/// τ = 0.441 λ²/(c Δλ), P_peak = P_avg / (f_rep · τ · 1.0645).
pub fn pump_power_split(cfg: &PumpConfig) -> Result<PumpSplit> {
    cfg.validate()?;
    let lam_m = cfg.lambda_p_um * 1e-6;
    let dlam_m = cfg.fwhm_nm * 1e-9;
    let tau = 0.441 * lam_m * lam_m / (C_M_PER_S * dlam_m);
    let peak = cfg.avg_power_w / (cfg.rep_rate_hz * tau * 1.0645);
    let c = cosd(cfg.theta_p_deg);
    let s = sind(cfg.theta_p_deg);
    Ok(PumpSplit {
        peak_power_w: peak,
        p_x_w: peak * c * c,
        p_y_w: peak * s * s,
        tau_fwhm_s: tau,
    })
}

/// Builds the nonlinear context for a pump setting: per-process γ at ω_p
/// and the axis peak powers.
pub fn nonlinear_context(
    cfg: &PumpConfig,
    tables: &DispersionPair,
    n2_m2_w: f64,
    phi_nl_enabled: bool,
) -> Result<NonlinearContext> {
    let split = pump_power_split(cfg)?;
    let mut gamma = [0.0; 6];
    for p in ProcessId::ALL {
        gamma[p.index()] = gamma_coefficient(p, tables, cfg.omega_p(), n2_m2_w)?;
    }
    Ok(NonlinearContext {
        gamma_w_m: gamma,
        pump_power_x_w: split.p_x_w,
        pump_power_y_w: split.p_y_w,
        phi_nl_enabled,
    })
}

/// Rectangular (ω_s, ω_i) evaluation grid with uniform steps.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
}

impl GridSpec {
    pub fn new(omega_s: Vec<f64>, omega_i: Vec<f64>) -> Result<GridSpec> {
        for g in [&omega_s, &omega_i] {
            if g.len() < 2 {
                return Err(Error::config("grid needs at least 2 samples per axis"));
            }
            let step = g[1] - g[0];
            if step <= 0.0 {
                return Err(Error::config("grid must ascend"));
            }
            for w in g.windows(2) {
                if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
                    return Err(Error::config("grid must be uniform"));
                }
            }
        }
        Ok(GridSpec { omega_s, omega_i })
    }

    /// Energy-conserving mirrored grid: the signal window is the image of
    /// the idler window under ω_s = 2ω_p − ω_i, sampled with the same
    /// step, so antidiagonals have constant ω_s + ω_i.
    pub fn mirrored(
        omega_p: f64,
        lambda_i_lo_um: f64,
        lambda_i_hi_um: f64,
        n: usize,
    ) -> Result<GridSpec> {
        if n < 2 {
            return Err(Error::config("grid needs at least 2 samples per axis"));
        }
        let wi_hi = omega_from_lambda_um(lambda_i_lo_um);
        let wi_lo = omega_from_lambda_um(lambda_i_hi_um);
        let omega_i: Vec<f64> = (0..n)
            .map(|j| wi_lo + (wi_hi - wi_lo) * j as f64 / (n - 1) as f64)
            .collect();
        let omega_s: Vec<f64> = (0..n)
            .map(|i| 2.0 * omega_p - omega_i[n - 1 - i])
            .collect();
        GridSpec::new(omega_s, omega_i)
    }

    pub fn step_s(&self) -> f64 {
        self.omega_s[1] - self.omega_s[0]
    }

    pub fn step_i(&self) -> f64 {
        self.omega_i[1] - self.omega_i[0]
    }
}

/// Complex joint spectral amplitude of one process on a grid.
#[derive(Debug, Clone)]
pub struct JointSpectrum {
    pub process: ProcessId,
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
    /// amplitude[i][j] at (ω_s[i], ω_i[j])
    pub amplitude: Array2<Complex64>,
    /// whether the ℓ(ω_s)ℓ(ω_i) prefactors are applied
    pub g_scaled: bool,
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p0 / dp;
            if (z - z1).abs() < 1e-15 {
                let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                x[i] = -z;
                x[n - 1 - i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                w[n - 1 - i] = w[i];
                break;
            }
        }
    }
    (x, w)
}

/// Options for the pump-convolution quadrature.
#[derive(Debug, Clone, Copy)]
pub struct JsaOptions {
    /// Gauss–Legendre node count over the pump envelope
    pub quad_nodes: usize,
    /// integration half-width in pump σ
    pub sigma_span: f64,
    /// apply ℓ(ω_s)ℓ(ω_i) prefactors
    pub g_scaled: bool,
}

impl Default for JsaOptions {
    fn default() -> Self {
        JsaOptions {
            quad_nodes: 129,
            sigma_span: 4.0,
            g_scaled: true,
        }
    }
}

/// Numerically integrates the pump convolution
/// F(ω_s, ω_i) = ∫ dω α(ω) α(ω_i + ω_s − ω) sinc(L Δk / 2) e^{i L Δk / 2}
/// over a grid, quadrature centered on the envelope-product peak
/// ω = (ω_s + ω_i)/2.
pub fn jsa(
    process: ProcessId,
    cfg: &PumpConfig,
    geometry_length_m: f64,
    tables: &DispersionPair,
    ctx: &NonlinearContext,
    grid: &GridSpec,
    opts: &JsaOptions,
) -> Result<JointSpectrum> {
    cfg.validate()?;
    ctx.validate()?;
    let info = process.info();
    let l_half = 0.5 * geometry_length_m;
    let sigma = cfg.sigma_omega();
    let (nodes, weights) = gauss_legendre(opts.quad_nodes);
    let halfspan = opts.sigma_span * sigma;

    let ns = grid.omega_s.len();
    let ni = grid.omega_i.len();
    // per-axis k interpolants for the signal/idler waves
    let ks: Vec<f64> = grid
        .omega_s
        .iter()
        .map(|&w| tables.get(info.signal_pol).interp_k(w))
        .collect::<Result<_>>()?;
    let ki: Vec<f64> = grid
        .omega_i
        .iter()
        .map(|&w| tables.get(info.idler_pol).interp_k(w))
        .collect::<Result<_>>()?;
    let phi_nl = nonlinear_phase(ctx, process);

    let mut amp = Array2::<Complex64>::zeros((ns, ni));
    let p1 = tables.get(info.pump1_pol);
    let p2 = tables.get(info.pump2_pol);

    let uniform = (grid.step_s() - grid.step_i()).abs() < 1e-9 * grid.step_i();
    if uniform {
        // ω_s + ω_i is constant on antidiagonals: share the pump part
        let step = grid.step_i();
        let base_sum = grid.omega_s[0] + grid.omega_i[0];
        let n_diag = ns + ni - 1;
        let mut pump_k = vec![0.0; opts.quad_nodes];
        let mut pump_a = vec![0.0; opts.quad_nodes];
        for d in 0..n_diag {
            let omega_sum = base_sum + step * d as f64;
            let center = 0.5 * omega_sum;
            for (t, (&u, &wt)) in nodes.iter().zip(weights.iter()).enumerate() {
                let omega = center + u * halfspan;
                let conj = omega_sum - omega;
                pump_k[t] = p1.interp_k(omega)? + p2.interp_k(conj)?;
                pump_a[t] = wt
                    * pump_alpha(cfg, omega).re
                    * pump_alpha(cfg, conj).re;
            }
            // cells on this antidiagonal: i + j = d with flipped signal axis?
            // ω_s[i] + ω_i[j] = base_sum + step (i + j)
            let i_lo = d.saturating_sub(ni - 1);
            let i_hi = d.min(ns - 1);
            for i in i_lo..=i_hi {
                let j = d - i;
                let ksum = ks[i] + ki[j] + phi_nl;
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..opts.quad_nodes {
                    let dk = pump_k[t] - ksum;
                    let ph = l_half * dk;
                    acc += pump_a[t] * crate::units::sinc(ph) * Complex64::new(ph.cos(), ph.sin());
                }
                amp[[i, j]] = acc * halfspan;
            }
        }
    } else {
        for i in 0..ns {
            for j in 0..ni {
                let omega_sum = grid.omega_s[i] + grid.omega_i[j];
                let center = 0.5 * omega_sum;
                let kside = ks[i] + ki[j] + phi_nl;
                let mut acc = Complex64::new(0.0, 0.0);
                for (&u, &wt) in nodes.iter().zip(weights.iter()) {
                    let omega = center + u * halfspan;
                    let conj = omega_sum - omega;
                    let a = wt * pump_alpha(cfg, omega).re * pump_alpha(cfg, conj).re;
                    let dk = p1.interp_k(omega)? + p2.interp_k(conj)? - kside;
                    let ph = l_half * dk;
                    acc += a * crate::units::sinc(ph) * Complex64::new(ph.cos(), ph.sin());
                }
                amp[[i, j]] = acc * halfspan;
            }
        }
    }

    if opts.g_scaled {
        let ell = |table: &crate::modesolver::DispersionTable, w: f64| -> Result<f64> {
            let n = table.interp_n(w)?;
            let vg = table.interp_vg(w)?;
            if vg <= 0.0 {
                return Err(Error::numeric("non-positive group velocity in ell factor"));
            }
            Ok(w.sqrt() / (n * vg.sqrt()))
        };
        let ls: Vec<f64> = grid
            .omega_s
            .iter()
            .map(|&w| ell(tables.get(info.signal_pol), w))
            .collect::<Result<_>>()?;
        let li: Vec<f64> = grid
            .omega_i
            .iter()
            .map(|&w| ell(tables.get(info.idler_pol), w))
            .collect::<Result<_>>()?;
        for i in 0..ns {
            for j in 0..ni {
                amp[[i, j]] *= ls[i] * li[j];
            }
        }
    }

    Ok(JointSpectrum {
        process,
        omega_s: grid.omega_s.clone(),
        omega_i: grid.omega_i.clone(),
        amplitude: amp,
        g_scaled: opts.g_scaled,
    })
}

impl JointSpectrum {
    /// |amplitude|² matrix.
    pub fn intensity(&self) -> Array2<f64> {
        self.amplitude.mapv(|z| z.norm_sqr())
    }

    /// Marginal idler spectrum I(ω_i) = ∫ |F|² dω_s (trapezoid).
    pub fn marginal_idler(&self, normalize_peak: bool) -> Vec<f64> {
        marginal(&self.amplitude, self.omega_s.len(), self.omega_i.len(), true, self.omega_s[1] - self.omega_s[0], normalize_peak)
    }

    /// Marginal signal spectrum I(ω_s) = ∫ |F|² dω_i (trapezoid).
    pub fn marginal_signal(&self, normalize_peak: bool) -> Vec<f64> {
        marginal(&self.amplitude, self.omega_s.len(), self.omega_i.len(), false, self.omega_i[1] - self.omega_i[0], normalize_peak)
    }
}

fn marginal(
    amp: &Array2<Complex64>,
    ns: usize,
    ni: usize,
    over_signal: bool,
    step: f64,
    normalize_peak: bool,
) -> Vec<f64> {
    let len = if over_signal { ni } else { ns };
    let n_int = if over_signal { ns } else { ni };
    let mut out = vec![0.0; len];
    for (o, item) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for t in 0..n_int {
            let v = if over_signal {
                amp[[t, o]].norm_sqr()
            } else {
                amp[[o, t]].norm_sqr()
            };
            let w = if t == 0 || t == n_int - 1 { 0.5 } else { 1.0 };
            acc += w * v;
        }
        *item = acc * step;
    }
    if normalize_peak {
        let m = out.iter().cloned().fold(0.0_f64, f64::max);
        if m > 0.0 {
            out.iter_mut().for_each(|v| *v /= m);
        }
    }
    out
}

/// The assembled two-photon state: per-process sheets and weights.
#[derive(Debug, Clone)]
pub struct TwoPhotonState {
    pub sheets: [Option<JointSpectrum>; 6],
    /// w_j = η_j γ_j √(p_j1 p_j2)
    pub weights: [f64; 6],
    pub gamma_w_m: [f64; 6],
    pub pump: PumpConfig,
}

/// Computes all six sheets (on a common grid) and weights; zero-weight
/// processes get no sheet.
pub fn assemble_state(
    cfg: &PumpConfig,
    length_m: f64,
    tables: &DispersionPair,
    n2_m2_w: f64,
    phi_nl_enabled: bool,
    grid: &GridSpec,
    opts: &JsaOptions,
) -> Result<TwoPhotonState> {
    let ctx = nonlinear_context(cfg, tables, n2_m2_w, phi_nl_enabled)?;
    let mut weights = [0.0; 6];
    let mut sheets: [Option<JointSpectrum>; 6] = Default::default();
    for p in ProcessId::ALL {
        let info = p.info();
        let (p1, p2) = ctx.pump_powers(p);
        let w = info.eta as f64 * ctx.gamma_w_m[p.index()] * (p1 * p2).sqrt();
        weights[p.index()] = w;
        if w > 0.0 {
            sheets[p.index()] = Some(jsa(p, cfg, length_m, tables, &ctx, grid, opts)?);
        }
    }
    Ok(TwoPhotonState {
        sheets,
        weights,
        gamma_w_m: ctx.gamma_w_m,
        pump: *cfg,
    })
}

/// Total joint spectral intensity: coherent within
/// (signal-pol, idler-pol) outcome channels, incoherent across channels,
/// normalized to unit maximum.
pub fn jsi_total(state: &TwoPhotonState) -> Result<Array2<f64>> {
    let mut shape: Option<(usize, usize)> = None;
    for s in state.sheets.iter().flatten() {
        let sh = (s.omega_s.len(), s.omega_i.len());
        match shape {
            None => shape = Some(sh),
            Some(prev) if prev == sh => {}
            _ => return Err(Error::config("jsi_total needs sheets on a common grid")),
        }
    }
    let (ns, ni) = shape.ok_or_else(|| Error::config("no active sheets"))?;

    let channels: [(Polarization, Polarization); 4] = [
        (Polarization::X, Polarization::X),
        (Polarization::Y, Polarization::Y),
        (Polarization::X, Polarization::Y),
        (Polarization::Y, Polarization::X),
    ];
    let mut total = Array2::<f64>::zeros((ns, ni));
    for ch in channels {
        let members: Vec<usize> = ProcessId::ALL
            .iter()
            .filter(|p| p.info().channel() == ch)
            .map(|p| p.index())
            .filter(|&i| state.sheets[i].is_some() && state.weights[i] > 0.0)
            .collect();
        if members.is_empty() {
            continue;
        }
        for i in 0..ns {
            for j in 0..ni {
                let mut z = Complex64::new(0.0, 0.0);
                for &m in &members {
                    z += state.weights[m] * state.sheets[m].as_ref().unwrap().amplitude[[i, j]];
                }
                total[[i, j]] += z.norm_sqr();
            }
        }
    }
    let max = total.iter().cloned().fold(0.0_f64, f64::max);
    if max > 0.0 {
        total.mapv_inplace(|v| v / max);
    }
    Ok(total)
}

/// Which arm the polarizer angle applies to in [`joint_prob`].
///
/// `Idler` reproduces the same-arm measurement of the joint probability
/// map (polarizer and spectrometer both on the idler path); `Signal`
/// projects the signal arm instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionArm {
    Idler,
    Signal,
}

/// Joint probability P(θ, ω_i): project one arm's polarization at angle θ
/// (degrees from x), trace the other arm's polarization, integrate over
/// ω_s. Normalized to unit maximum. Returns a (θ × ω_i) matrix.
pub fn joint_prob(
    state: &TwoPhotonState,
    thetas_deg: &[f64],
    arm: ProjectionArm,
) -> Result<Array2<f64>> {
    // consistency of idler grids across active sheets
    let mut gi: Option<&[f64]> = None;
    let mut ns_step: Option<f64> = None;
    for s in state.sheets.iter().flatten() {
        match gi {
            None => {
                gi = Some(&s.omega_i);
                ns_step = Some(s.omega_s[1] - s.omega_s[0]);
            }
            Some(prev) => {
                if prev.len() != s.omega_i.len() {
                    return Err(Error::config("joint_prob needs sheets on a common grid"));
                }
            }
        }
    }
    let omega_i = gi.ok_or_else(|| Error::config("no active sheets"))?;
    let ni = omega_i.len();
    let step_s = ns_step.unwrap();

    // R[j][j'][ω_i] = Re ∫ F_j F_j'^* dω_s for same-channel pairs
    let active: Vec<usize> = (0..6)
        .filter(|&i| state.sheets[i].is_some() && state.weights[i] > 0.0)
        .collect();
    // trace channel: the polarization of the *other* arm
    let other_pol = |idx: usize| -> Polarization {
        let info = ProcessId::ALL[idx].info();
        match arm {
            ProjectionArm::Idler => info.signal_pol,
            ProjectionArm::Signal => info.idler_pol,
        }
    };
    let proj_pol = |idx: usize| -> Polarization {
        let info = ProcessId::ALL[idx].info();
        match arm {
            ProjectionArm::Idler => info.idler_pol,
            ProjectionArm::Signal => info.signal_pol,
        }
    };

    let mut pairs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for (ai, &a) in active.iter().enumerate() {
        for &b in active.iter().skip(ai) {
            if other_pol(a) != other_pol(b) {
                continue;
            }
            let sa = state.sheets[a].as_ref().unwrap();
            let sb = state.sheets[b].as_ref().unwrap();
            let ns = sa.omega_s.len();
            let mut r = vec![0.0; ni];
            for (j, item) in r.iter_mut().enumerate() {
                let mut acc = 0.0;
                for t in 0..ns {
                    let w = if t == 0 || t == ns - 1 { 0.5 } else { 1.0 };
                    acc += w * (sa.amplitude[[t, j]] * sb.amplitude[[t, j]].conj()).re;
                }
                *item = acc * step_s;
            }
            pairs.push((a, b, r));
        }
    }

    let mut out = Array2::<f64>::zeros((thetas_deg.len(), ni));
    for (ti, &th) in thetas_deg.iter().enumerate() {
        let c_of = |idx: usize| -> f64 {
            match proj_pol(idx) {
                Polarization::X => cosd(th),
                Polarization::Y => sind(th),
            }
        };
        for (a, b, r) in &pairs {
            let factor = state.weights[*a] * state.weights[*b] * c_of(*a) * c_of(*b)
                * if a == b { 1.0 } else { 2.0 };
            if factor == 0.0 {
                continue;
            }
            for j in 0..ni {
                out[[ti, j]] += factor * r[j];
            }
        }
    }
    let max = out.iter().cloned().fold(0.0_f64, f64::max);
    if max > 0.0 {
        out.mapv_inplace(|v| v / max);
    }
    Ok(out)
}

/// Converts a normalized linear matrix to dB with a floor.
pub fn to_db(matrix: &Array2<f64>, floor_db: f64) -> Array2<f64> {
    matrix.mapv(|v| {
        if v <= 0.0 {
            floor_db
        } else {
            (10.0 * v.log10()).max(floor_db)
        }
    })
}

/// Orientation (degrees in the (ω_s, ω_i) plane, range (−90, 90]) of the
/// intensity ridge from the principal eigenvector of the
/// intensity-weighted second-moment matrix.
pub fn jsi_orientation(sheet: &JointSpectrum) -> Result<f64> {
    let comps = jsi_zone_orientations(sheet)?;
    let significant: Vec<_> = comps.iter().filter(|c| c.mass_fraction > 0.05).collect();
    match significant.len() {
        0 => Err(Error::numeric("no significant intensity component")),
        1 => Ok(significant[0].theta_si_deg),
        n => Err(Error::numeric(format!(
            "sheet has {n} spectral zones; analyze per zone"
        ))),
    }
}

/// One connected spectral zone of a sheet.
#[derive(Debug, Clone, Copy)]
pub struct ZoneOrientation {
    pub mass_fraction: f64,
    pub theta_si_deg: f64,
    /// intensity-weighted centroid
    pub centroid: (f64, f64),
}

/// Splits the thresholded intensity (10⁻³ of max) into connected
/// components and measures each zone's ridge orientation.
pub fn jsi_zone_orientations(sheet: &JointSpectrum) -> Result<Vec<ZoneOrientation>> {
    let intensity = sheet.intensity();
    let ns = sheet.omega_s.len();
    let ni = sheet.omega_i.len();
    let max = intensity.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::numeric("empty sheet"));
    }
    let thr = 1e-3 * max;
    let mut label = vec![usize::MAX; ns * ni];
    let mut zones: Vec<Vec<(usize, usize)>> = Vec::new();
    for i in 0..ns {
        for j in 0..ni {
            if intensity[[i, j]] < thr || label[i * ni + j] != usize::MAX {
                continue;
            }
            // BFS flood fill, 4-connectivity
            let id = zones.len();
            let mut queue = vec![(i, j)];
            let mut members = Vec::new();
            label[i * ni + j] = id;
            while let Some((a, b)) = queue.pop() {
                members.push((a, b));
                let push = |x: usize, y: usize, label: &mut Vec<usize>, queue: &mut Vec<(usize, usize)>| {
                    if intensity[[x, y]] >= thr && label[x * ni + y] == usize::MAX {
                        label[x * ni + y] = id;
                        queue.push((x, y));
                    }
                };
                if a > 0 {
                    push(a - 1, b, &mut label, &mut queue);
                }
                if a + 1 < ns {
                    push(a + 1, b, &mut label, &mut queue);
                }
                if b > 0 {
                    push(a, b - 1, &mut label, &mut queue);
                }
                if b + 1 < ni {
                    push(a, b + 1, &mut label, &mut queue);
                }
            }
            zones.push(members);
        }
    }

    let total_mass: f64 = intensity.iter().filter(|&&v| v >= thr).sum();
    let mut out = Vec::new();
    for members in zones {
        let mut mass = 0.0;
        let mut cs = 0.0;
        let mut ci = 0.0;
        for &(i, j) in &members {
            let v = intensity[[i, j]];
            mass += v;
            cs += v * sheet.omega_s[i];
            ci += v * sheet.omega_i[j];
        }
        cs /= mass;
        ci /= mass;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &(i, j) in &members {
            let v = intensity[[i, j]];
            let dx = sheet.omega_s[i] - cs;
            let dy = sheet.omega_i[j] - ci;
            sxx += v * dx * dx;
            sxy += v * dx * dy;
            syy += v * dy * dy;
        }
        sxx /= mass;
        sxy /= mass;
        syy /= mass;
        let aniso = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
        if aniso < 1e-9 * (sxx + syy) {
            return Err(Error::numeric(
                "isotropic second moment: ridge orientation undefined",
            ));
        }
        let mut theta = 0.5 * (2.0 * sxy).atan2(sxx - syy).to_degrees();
        if theta <= -90.0 {
            theta += 180.0;
        } else if theta > 90.0 {
            theta -= 180.0;
        }
        out.push(ZoneOrientation {
            mass_fraction: mass / total_mass,
            theta_si_deg: theta,
            centroid: (cs, ci),
        });
    }
    out.sort_by(|a, b| b.mass_fraction.partial_cmp(&a.mass_fraction).unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pump() -> PumpConfig {
        PumpConfig {
            lambda_p_um: 0.741,
            fwhm_nm: 0.4,
            avg_power_w: 0.020,
            rep_rate_hz: 76e6,
            theta_p_deg: 45.0,
        }
    }

    #[test]
    fn alpha_peak_and_half_intensity() {
        let cfg = pump();
        assert_relative_eq!(pump_alpha(&cfg, cfg.omega_p()).re, 1.0, epsilon = 1e-15);
        // half-intensity offset: |alpha|² = 1/2 ⇒ amplitude 1/sqrt(2)
        let lam_m = cfg.lambda_p_um * 1e-6;
        let domega = 2.0 * std::f64::consts::PI * C_M_PER_S * (cfg.fwhm_nm * 1e-9) / (lam_m * lam_m);
        let a = pump_alpha(&cfg, cfg.omega_p() + 0.5 * domega).re;
        assert_relative_eq!(a, 1.0 / 2.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn alpha_integral_matches_closed_form() {
        // ∫|alpha|² dω = σ√π for amplitude std σ
        let cfg = pump();
        let s = cfg.sigma_omega();
        let n = 20001;
        let lo = cfg.omega_p() - 8.0 * s;
        let hi = cfg.omega_p() + 8.0 * s;
        let h = (hi - lo) / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let w = lo + i as f64 * h;
            let v = pump_alpha(&cfg, w).norm_sqr();
            acc += if i == 0 || i == n - 1 { 0.5 * v } else { v };
        }
        acc *= h;
        assert_relative_eq!(
            acc,
            s * std::f64::consts::PI.sqrt(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn power_split_angles() {
        let mut cfg = pump();
        cfg.theta_p_deg = 0.0;
        let s = pump_power_split(&cfg).unwrap();
        assert_eq!(s.p_y_w, 0.0);
        assert!(s.p_x_w > 0.0);
        cfg.theta_p_deg = 90.0;
        let s = pump_power_split(&cfg).unwrap();
        assert_eq!(s.p_x_w, 0.0);
        cfg.theta_p_deg = 45.0;
        let s = pump_power_split(&cfg).unwrap();
        assert_relative_eq!(s.p_x_w, s.p_y_w, max_relative = 1e-12);
        assert_relative_eq!(s.p_x_w, 0.5 * s.peak_power_w, max_relative = 1e-12);
    }

    #[test]
    fn peak_power_magnitude() {
        // 20 mW average, 76 MHz, 0.4 nm at 741 nm → ~122 W peak
        let s = pump_power_split(&pump()).unwrap();
        assert!((s.tau_fwhm_s - 2.02e-12).abs() < 0.05e-12, "tau = {}", s.tau_fwhm_s);
        assert!((s.peak_power_w - 122.0).abs() < 5.0, "peak = {}", s.peak_power_w);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(129);
        // exact for polynomials up to degree 257
        let int: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(6)).sum();
        assert_relative_eq!(int, 2.0 / 7.0, max_relative = 1e-12);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn orientation_of_synthetic_ridges() {
        // Gaussian ridge along ω_i = −ω_s + const → θ = −45°
        let n = 128;
        let omega: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.01).collect();
        let c = omega[0] + omega[n - 1];
        let mut amp = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let along = (omega[i] - omega[j] + 0.0) / 0.6; // spread along the ridge
                let across = (omega[i] + omega[j] - c) / 0.01;
                amp[[i, j]] = Complex64::new((-across * across - along * along).exp(), 0.0);
            }
        }
        let sheet = JointSpectrum {
            process: ProcessId::A,
            omega_s: omega.clone(),
            omega_i: omega.clone(),
            amplitude: amp,
            g_scaled: false,
        };
        let th = jsi_orientation(&sheet).unwrap();
        assert!((th - (-45.0)).abs() < 1.0, "theta = {th}");

        // correlated ridge along ω_i = ω_s + const → θ = +45°
        let mut amp2 = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let across = (omega[i] - omega[j]) / 0.01;
                let along = (omega[i] + omega[j] - c) / 0.6;
                amp2[[i, j]] = Complex64::new((-across * across - along * along).exp(), 0.0);
            }
        }
        let sheet2 = JointSpectrum {
            omega_s: omega.clone(),
            omega_i: omega,
            amplitude: amp2,
            ..sheet
        };
        let th2 = jsi_orientation(&sheet2).unwrap();
        assert!((th2 - 45.0).abs() < 1.0, "theta = {th2}");
    }

    #[test]
    fn orientation_degenerate_is_error() {
        let n = 64;
        let omega: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.01).collect();
        let mid = 0.5 * (omega[0] + omega[n - 1]);
        let mut amp = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let r2 = ((omega[i] - mid).powi(2) + (omega[j] - mid).powi(2)) / 0.01;
                amp[[i, j]] = Complex64::new((-r2).exp(), 0.0);
            }
        }
        let sheet = JointSpectrum {
            process: ProcessId::A,
            omega_s: omega.clone(),
            omega_i: omega,
            amplitude: amp,
            g_scaled: false,
        };
        assert!(jsi_orientation(&sheet).is_err());
    }

    #[test]
    fn marginal_of_separable_sheet_is_conjugate_intensity() {
        let n = 96;
        let omega: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.013).collect();
        let f = |w: f64| (-(w - 1.3) * (w - 1.3) / 0.02).exp();
        let g = |w: f64| (-(w - 1.7) * (w - 1.7) / 0.005).exp() + 0.3;
        let mut amp = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                amp[[i, j]] = Complex64::new(f(omega[i]) * g(omega[j]), 0.0);
            }
        }
        let sheet = JointSpectrum {
            process: ProcessId::B,
            omega_s: omega.clone(),
            omega_i: omega.clone(),
            amplitude: amp,
            g_scaled: false,
        };
        let m = sheet.marginal_idler(true);
        // marginal ∝ |g|² exactly
        let gmax = omega.iter().map(|&w| g(w) * g(w)).fold(0.0_f64, f64::max);
        for j in 0..n {
            let expect = g(omega[j]) * g(omega[j]) / gmax;
            assert_relative_eq!(m[j], expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn to_db_floors() {
        let m = ndarray::array![[1.0, 1e-9], [0.0, 0.001]];
        let db = to_db(&m, -60.0);
        assert_eq!(db[[0, 0]], 0.0);
        assert_eq!(db[[0, 1]], -60.0);
        assert_eq!(db[[1, 0]], -60.0);
        assert_relative_eq!(db[[1, 1]], -30.0, max_relative = 1e-12);
    }
}
