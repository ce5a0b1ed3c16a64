//! Subcommand implementations.

use crate::config::RunConfig;
use crate::manifest::{sha256_hex, CacheStats, Manifest, RunWriter};
use sfwm_core::cache::{scan_key, DispersionCache};
use sfwm_core::geomfit::{
    brute_force_fit, observations_from_csv, run_ga, FitProblem, PeakObservation,
};
use sfwm_core::modesolver::{
    dispersion_scan_pair, DispersionPair, ScanConfig, SolverOptions,
};
use sfwm_core::sfwm::{
    branches_to_csv, branches_to_json, idler_roots_at_pump, trace_contours, ContourOptions,
    NonlinearContext, Polarization, ProcessId,
};
use sfwm_core::twophoton::{
    assemble_state, jsi_total, joint_prob, to_db, GridSpec, JsaOptions, TwoPhotonState,
};
use sfwm_core::units::lambda_um_from_omega;
use sfwm_core::{Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub cache: DispersionCache,
    pub quiet: bool,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub input_hashes: BTreeMap<String, String>,
    pub observations_path: Option<PathBuf>,
    pub oracle: bool,
}

impl Ctx {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("[sfwm] {msg}");
        }
    }

    fn scan_config(&self) -> ScanConfig {
        let s = &self.config.solver;
        let mut scan = ScanConfig::from_lambda_range_um(
            s.lambda_min_um,
            s.lambda_max_um,
            s.n_samples,
            s.resolution_per_um,
        );
        scan.half_extent_um = s.window_half_um;
        scan
    }

    /// Cache-aware dispersion tables for the configured geometry.
    fn tables(&self) -> Result<DispersionPair> {
        let g = &self.config.geometry;
        let scan = self.scan_config();
        let opts = SolverOptions::default();
        let material = &self.config.material;
        let pair = std::sync::Mutex::new(None::<(
            sfwm_core::modesolver::DispersionTable,
            sfwm_core::modesolver::DispersionTable,
        )>);
        let compute = |pol: Polarization| -> Result<sfwm_core::modesolver::DispersionTable> {
            let mut guard = pair.lock().unwrap();
            if guard.is_none() {
                self.progress("solving dispersion (both polarizations)...");
                *guard = Some(dispersion_scan_pair(g, &scan, material, &opts)?);
            }
            let (tx, ty) = guard.as_ref().unwrap();
            Ok(match pol {
                Polarization::X => tx.clone(),
                Polarization::Y => ty.clone(),
            })
        };
        let key_x = scan_key(g, material, &scan, opts.eigen.tolerance, Polarization::X);
        let key_y = scan_key(g, material, &scan, opts.eigen.tolerance, Polarization::Y);
        let x = self
            .cache
            .get_or_compute(&key_x, Polarization::X, || compute(Polarization::X))?;
        let y = self
            .cache
            .get_or_compute(&key_y, Polarization::Y, || compute(Polarization::Y))?;
        Ok(DispersionPair {
            x: (*x).clone(),
            y: (*y).clone(),
        })
    }

    fn finish(
        &self,
        writer: RunWriter,
        subcommand: &str,
        started: std::time::Instant,
    ) -> Result<Manifest> {
        let (hits, misses) = self.cache.counters();
        writer.finish(
            subcommand,
            &self.config,
            self.input_hashes.clone(),
            self.seed,
            self.workers,
            CacheStats { hits, misses },
            started.elapsed().as_secs_f64(),
        )
    }
}

/// `modes`: dispersion tables for both polarizations as CSV.
pub fn cmd_modes(ctx: &Ctx) -> Result<()> {
    let t0 = std::time::Instant::now();
    let tables = ctx.tables()?;
    let mut w = RunWriter::new(&ctx.out_dir)?;
    w.write("dispersion_x.csv", tables.x.to_csv()?.as_bytes())?;
    w.write("dispersion_y.csv", tables.y.to_csv()?.as_bytes())?;
    ctx.finish(w, "modes", t0)?;
    ctx.progress("modes: wrote dispersion_x.csv, dispersion_y.csv");
    Ok(())
}

/// `contours`: phase-matching branches as JSON + CSV.
pub fn cmd_contours(ctx: &Ctx) -> Result<()> {
    let t0 = std::time::Instant::now();
    let section = &ctx.config.contours;
    let processes = section.process_ids()?;
    let tables = ctx.tables()?;
    let nl = nonlinear_ctx(ctx, &tables)?;
    let opts = ContourOptions {
        lambda_p_um: (section.lambda_p_min_um, section.lambda_p_max_um),
        lambda_i_um: (section.lambda_i_min_um, section.lambda_i_max_um),
        n_pump: section.n_pump,
        n_idler: section.n_idler,
        ..ContourOptions::default()
    };
    let mut branches = Vec::new();
    for p in processes {
        ctx.progress(&format!("tracing process {p}..."));
        branches.extend(trace_contours(p, &tables, &nl, &opts)?);
    }
    let mut w = RunWriter::new(&ctx.out_dir)?;
    w.write("contours.json", branches_to_json(&branches)?.as_bytes())?;
    w.write("contours.csv", branches_to_csv(&branches)?.as_bytes())?;
    ctx.finish(w, "contours", t0)?;
    ctx.progress(&format!("contours: {} branches", branches.len()));
    Ok(())
}

fn nonlinear_ctx(ctx: &Ctx, tables: &DispersionPair) -> Result<NonlinearContext> {
    let pump = ctx.config.pump.to_pump_config();
    sfwm_core::twophoton::nonlinear_context(
        &pump,
        tables,
        ctx.config.nonlinear.n2_m2_w,
        ctx.config.nonlinear.phi_nl,
    )
}

/// Builds the state on a common mirrored grid spanning the phase-matched
/// idler bands of the active processes.
fn assemble_common_state(
    ctx: &Ctx,
    tables: &DispersionPair,
    window_override: Option<(f64, f64)>,
    n_grid: usize,
) -> Result<(TwoPhotonState, Vec<(ProcessId, Vec<f64>)>)> {
    let pump = ctx.config.pump.to_pump_config();
    let nl = nonlinear_ctx(ctx, tables)?;
    let contours = &ctx.config.contours;
    let copts = ContourOptions {
        lambda_p_um: (contours.lambda_p_min_um, contours.lambda_p_max_um),
        lambda_i_um: (contours.lambda_i_min_um, contours.lambda_i_max_um),
        n_idler: contours.n_idler.max(800),
        ..ContourOptions::default()
    };
    let mut roots_per_process = Vec::new();
    let mut all_roots: Vec<f64> = Vec::new();
    for p in ProcessId::ALL {
        let (p1, p2) = nl.pump_powers(p);
        if p1 * p2 <= 0.0 {
            continue;
        }
        let roots = idler_roots_at_pump(p, pump.lambda_p_um, tables, &nl, &copts)?;
        if !roots.is_empty() {
            all_roots.extend(&roots);
            roots_per_process.push((p, roots));
        }
    }
    if all_roots.is_empty() {
        return Err(Error::physics(format!(
            "no phase matching for any active process at the pump {} um",
            pump.lambda_p_um
        )));
    }
    let margin = ctx.config.spectra.window_margin_nm * 1e-3;
    let window = window_override.unwrap_or_else(|| {
        let lo = all_roots.iter().cloned().fold(f64::INFINITY, f64::min) - margin;
        let hi = all_roots.iter().cloned().fold(0.0_f64, f64::max) + margin;
        (lo, hi)
    });
    let grid = GridSpec::mirrored(pump.omega_p(), window.0, window.1, n_grid)?;
    let state = assemble_state(
        &pump,
        ctx.config.geometry.length_m,
        tables,
        ctx.config.nonlinear.n2_m2_w,
        ctx.config.nonlinear.phi_nl,
        &grid,
        &JsaOptions::default(),
    )?;
    Ok((state, roots_per_process))
}

/// `spectra`: per-process marginal spectra and the total JSI matrix.
pub fn cmd_spectra(ctx: &Ctx) -> Result<()> {
    let t0 = std::time::Instant::now();
    let tables = ctx.tables()?;
    let n_grid = ctx.config.spectra.grid_n.max(64);
    let (state, roots) = assemble_common_state(ctx, &tables, None, n_grid)?;
    let normalize = ctx.config.spectra.normalize;
    let requested: Option<Vec<ProcessId>> = if ctx.config.spectra.processes.is_empty() {
        None
    } else {
        Some(
            ctx.config
                .spectra
                .processes
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?,
        )
    };

    let mut w = RunWriter::new(&ctx.out_dir)?;
    let mut written = Vec::new();
    for (p, _) in &roots {
        if let Some(req) = &requested {
            if !req.contains(p) {
                continue;
            }
        }
        let sheet = state.sheets[p.index()].as_ref().expect("active sheet");
        let idler = sheet.marginal_idler(normalize);
        let signal = sheet.marginal_signal(normalize);
        let n = sheet.omega_i.len();
        let mut csv = String::from(
            "omega_i_rad_s,lambda_i_um,idler_intensity,signal_intensity_mapped\n",
        );
        for j in 0..n {
            // the signal marginal maps onto the idler axis through
            // ω_s = 2ω_p − ω_i (mirrored grids reverse the index)
            csv.push_str(&format!(
                "{},{},{},{}\n",
                sheet.omega_i[j],
                lambda_um_from_omega(sheet.omega_i[j]),
                idler[j],
                signal[n - 1 - j]
            ));
        }
        w.write(&format!("marginal_{p}.csv"), csv.as_bytes())?;
        written.push(p.to_string());
    }

    let jsi = jsi_total(&state)?;
    let mut jsi_csv = String::new();
    for i in 0..jsi.nrows() {
        let row: Vec<String> = (0..jsi.ncols()).map(|j| jsi[[i, j]].to_string()).collect();
        jsi_csv.push_str(&row.join(","));
        jsi_csv.push('\n');
    }
    w.write("jsi_total.csv", jsi_csv.as_bytes())?;
    let some_sheet = roots
        .first()
        .and_then(|(p, _)| state.sheets[p.index()].as_ref())
        .expect("at least one active sheet");
    let axes = serde_json::json!({
        "omega_s_rad_s": some_sheet.omega_s,
        "omega_i_rad_s": some_sheet.omega_i,
        "rows": "omega_s",
        "cols": "omega_i",
        "normalized": true,
        "weights": state.weights,
        "processes_written": written,
    });
    w.write("jsi_axes.json", serde_json::to_string_pretty(&axes)?.as_bytes())?;
    ctx.finish(w, "spectra", t0)?;
    ctx.progress(&format!("spectra: marginals for {}", written.join(", ")));
    Ok(())
}

/// `jointprob`: P(θ, ω_i) matrix, linear and in dB.
pub fn cmd_jointprob(ctx: &Ctx) -> Result<()> {
    let t0 = std::time::Instant::now();
    let tables = ctx.tables()?;
    let section = &ctx.config.jointprob;
    let window = (section.lambda_i_min_um, section.lambda_i_max_um);
    let (state, _) = assemble_common_state(ctx, &tables, Some(window), section.n_omega_i)?;
    let n_theta = (180.0 / section.theta_step_deg).round() as usize;
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| i as f64 * section.theta_step_deg)
        .collect();
    ctx.progress("projecting joint probability...");
    let p = joint_prob(&state, &thetas, section.arm)?;
    let db = to_db(&p, section.db_floor);

    let write_matrix = |m: &ndarray::Array2<f64>| {
        let mut text = String::new();
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| m[[i, j]].to_string()).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        text
    };
    let mut w = RunWriter::new(&ctx.out_dir)?;
    w.write("jointprob_linear.csv", write_matrix(&p).as_bytes())?;
    w.write("jointprob_db.csv", write_matrix(&db).as_bytes())?;
    let omega_i = state
        .sheets
        .iter()
        .flatten()
        .next()
        .map(|s| s.omega_i.clone())
        .unwrap_or_default();
    let axes = serde_json::json!({
        "theta_deg": thetas,
        "omega_i_rad_s": omega_i,
        "rows": "theta",
        "cols": "omega_i",
        "arm": section.arm,
        "db_floor": section.db_floor,
    });
    w.write("jointprob_axes.json", serde_json::to_string_pretty(&axes)?.as_bytes())?;
    ctx.finish(w, "jointprob", t0)?;
    Ok(())
}

/// `fit`: run the GA against observations, optionally with the
/// brute-force oracle comparison.
pub fn cmd_fit(ctx: &Ctx) -> Result<()> {
    let t0 = std::time::Instant::now();
    let path = ctx
        .observations_path
        .clone()
        .or_else(|| ctx.config.fit.observations.clone().map(PathBuf::from))
        .ok_or_else(|| Error::config("fit: no observations file given"))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::config(format!("cannot read observations {}: {e}", path.display())))?;
    let observations = observations_from_csv(&text)?;
    if observations.len() < 3 {
        return Err(Error::config(format!(
            "fit needs at least 3 observations, got {}",
            observations.len()
        )));
    }
    let mut problem = FitProblem::new(observations, ctx.config.material.clone(), ctx.cache.clone())?;
    if let (Some(lo), Some(hi)) = (ctx.config.fit.lambda_min_um, ctx.config.fit.lambda_max_um) {
        problem.lambda_range_um = (lo, hi);
    }
    problem.phi_nl_enabled = ctx.config.fit.phi_nl;
    let mut config = ctx.config.fit.to_fit_config();
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    ctx.progress(&format!(
        "fitting {} observations (population {}, seed {})...",
        problem.observations.len(),
        config.population,
        config.seed
    ));
    let result = run_ga(&config, &problem)?;
    ctx.progress(&format!(
        "best ({:.4}, {:.4}, {:.4}) um, fitness {:.3e}, {} generations",
        result.best.d_um, result.best.big_d_um, result.best.pitch_um,
        result.fitness_rad2_m2, result.generations_run
    ));
    let oracle = if ctx.oracle {
        ctx.progress("running brute-force oracle...");
        let (geom, fit) = brute_force_fit(
            &config.bounds,
            ctx.config.fit.oracle_density,
            &problem,
            &config.ga_tier,
        )?;
        Some(serde_json::json!({
            "grid_density": ctx.config.fit.oracle_density,
            "best": geom,
            "fitness_rad2_m2": fit,
            "ga_not_worse": result.fitness_rad2_m2 <= fit,
        }))
    } else {
        None
    };
    let mut doc = serde_json::to_value(&result)?;
    if let Some(o) = oracle {
        doc.as_object_mut()
            .expect("fit result is an object")
            .insert("oracle".into(), o);
    }
    let mut w = RunWriter::new(&ctx.out_dir)?;
    w.write("fit_result.json", serde_json::to_string_pretty(&doc)?.as_bytes())?;
    ctx.finish(w, "fit", t0)?;
    Ok(())
}

/// Synthesizes observations from the configured geometry (used by tests
/// and for generating round-trip datasets from the CLI).
pub fn synthesize_observations(
    ctx: &Ctx,
    pumps_um: &[f64],
    theta_p_deg: f64,
) -> Result<Vec<PeakObservation>> {
    let tables = ctx.tables()?;
    let nl = NonlinearContext::disabled();
    let contours = &ctx.config.contours;
    let copts = ContourOptions {
        lambda_p_um: (contours.lambda_p_min_um, contours.lambda_p_max_um),
        lambda_i_um: (contours.lambda_i_min_um, contours.lambda_i_max_um),
        n_idler: contours.n_idler.max(800),
        ..ContourOptions::default()
    };
    let px = sfwm_core::units::cosd(theta_p_deg).powi(2);
    let py = sfwm_core::units::sind(theta_p_deg).powi(2);
    let mut out = Vec::new();
    for &lp in pumps_um {
        for p in ProcessId::ALL {
            let info = p.info();
            let powered = |pol: Polarization| match pol {
                Polarization::X => px > 0.0,
                Polarization::Y => py > 0.0,
            };
            if !powered(info.pump1_pol) || !powered(info.pump2_pol) {
                continue;
            }
            for r in idler_roots_at_pump(p, lp, &tables, &nl, &copts)? {
                out.push(PeakObservation {
                    lambda_p_um: lp,
                    lambda_i_um: r,
                    bandwidth_nm: 2.0,
                    idler_pol: info.idler_pol,
                    theta_p_deg,
                    process_hint: None,
                });
            }
        }
    }
    Ok(out)
}

/// `replay`: re-run a manifest and optionally verify byte-identical
/// outputs.
pub fn cmd_replay(manifest_path: &std::path::Path, out_dir: &std::path::Path, verify: bool,
                  cache: DispersionCache, quiet: bool) -> Result<()> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::config(format!("cannot read manifest: {e}")))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::config(format!("manifest parse: {e}")))?;
    let mut hashes = BTreeMap::new();
    hashes.insert("manifest".to_string(), sha256_hex(text.as_bytes()));
    let ctx = Ctx {
        config: manifest.resolved_config.clone(),
        out_dir: out_dir.to_path_buf(),
        cache,
        quiet,
        seed: manifest.seed,
        workers: manifest.workers,
        input_hashes: hashes,
        observations_path: None,
        oracle: false,
    };
    match manifest.subcommand.as_str() {
        "modes" => cmd_modes(&ctx)?,
        "contours" => cmd_contours(&ctx)?,
        "spectra" => cmd_spectra(&ctx)?,
        "jointprob" => cmd_jointprob(&ctx)?,
        other => {
            return Err(Error::config(format!(
                "replay of subcommand '{other}' is not supported (fit replays via its own config + seed)"
            )))
        }
    }
    if verify {
        for rec in &manifest.outputs {
            let path = out_dir.join(&rec.name);
            let got = crate::manifest::sha256_file(&path)?;
            if got != rec.sha256 {
                return Err(Error::numeric(format!(
                    "replay mismatch for {}: {} != {}",
                    rec.name, got, rec.sha256
                )));
            }
        }
        if !quiet {
            eprintln!("[sfwm] replay verified: all outputs byte-identical");
        }
    }
    Ok(())
}
