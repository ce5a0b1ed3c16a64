//! Inverse solver: fit the fiber cross-section to measured emission peaks
//! by minimizing the summed squared phase mismatch with a real-coded
//! genetic algorithm, with a brute-force grid oracle for validation.

use crate::cache::{scan_key, DispersionCache};
use crate::error::{Error, Result};
use crate::fibermodel::{FiberGeometry, MaterialModel};
use crate::modesolver::{dispersion_scan_pair, DispersionPair, DispersionTable, ScanConfig, SolverOptions};
use crate::sfwm::{delta_k, NonlinearContext, Polarization, ProcessId};
use crate::units::{cosd, omega_from_lambda_um, sind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One measured idler emission peak.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeakObservation {
    pub lambda_p_um: f64,
    pub lambda_i_um: f64,
    pub bandwidth_nm: f64,
    pub idler_pol: Polarization,
    pub theta_p_deg: f64,
    #[serde(default)]
    pub process_hint: Option<ProcessId>,
}

impl PeakObservation {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_i_um < self.lambda_p_um) {
            return Err(Error::config(format!(
                "idler wavelength {} must be below the pump {}",
                self.lambda_i_um, self.lambda_p_um
            )));
        }
        if !(self.bandwidth_nm > 0.0) {
            return Err(Error::config("observation bandwidth must be positive"));
        }
        if !(0.0..=90.0).contains(&self.theta_p_deg) {
            return Err(Error::config("pump angle outside [0, 90] degrees"));
        }
        Ok(())
    }
}

/// Processes consistent with an observation: pump polarizations powered at
/// the observation's θ_p and idler polarization matching the measurement.
pub fn compatible_processes(obs: &PeakObservation) -> Result<Vec<ProcessId>> {
    obs.validate()?;
    let px = cosd(obs.theta_p_deg).powi(2);
    let py = sind(obs.theta_p_deg).powi(2);
    let powered = |pol: Polarization| match pol {
        Polarization::X => px > 0.0,
        Polarization::Y => py > 0.0,
    };
    let mut out = Vec::new();
    for p in ProcessId::ALL {
        let info = p.info();
        if !powered(info.pump1_pol) || !powered(info.pump2_pol) {
            continue;
        }
        if info.idler_pol != obs.idler_pol {
            continue;
        }
        if let Some(hint) = obs.process_hint {
            if hint != p {
                continue;
            }
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::config(format!(
            "observation (theta_p = {}, idler {}) is compatible with no process",
            obs.theta_p_deg, obs.idler_pol
        )));
    }
    Ok(out)
}

/// Reads observations from CSV with columns
/// lambda_p_um, lambda_i_um, bandwidth_nm, idler_pol, theta_p_deg, process_hint.
pub fn observations_from_csv(text: &str) -> Result<Vec<PeakObservation>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let head = rdr.headers()?.clone();
    let expect = [
        "lambda_p_um",
        "lambda_i_um",
        "bandwidth_nm",
        "idler_pol",
        "theta_p_deg",
        "process_hint",
    ];
    if head.iter().collect::<Vec<_>>() != expect {
        return Err(Error::config(format!(
            "observation CSV header {head:?} != {expect:?}"
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::config(format!("bad float '{}': {e}", &rec[i])))
        };
        let hint = match rec[5].trim() {
            "" => None,
            s => Some(s.parse::<ProcessId>()?),
        };
        let obs = PeakObservation {
            lambda_p_um: f(0)?,
            lambda_i_um: f(1)?,
            bandwidth_nm: f(2)?,
            idler_pol: rec[3].parse()?,
            theta_p_deg: f(4)?,
            process_hint: hint,
        };
        obs.validate()?;
        out.push(obs);
    }
    Ok(out)
}

pub fn observations_to_csv(observations: &[PeakObservation]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "lambda_p_um",
        "lambda_i_um",
        "bandwidth_nm",
        "idler_pol",
        "theta_p_deg",
        "process_hint",
    ])?;
    for o in observations {
        w.write_record([
            o.lambda_p_um.to_string(),
            o.lambda_i_um.to_string(),
            o.bandwidth_nm.to_string(),
            o.idler_pol.to_string(),
            o.theta_p_deg.to_string(),
            o.process_hint.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::numeric(e.to_string()))?)
        .map_err(|e| Error::numeric(e.to_string()))
}

/// Reduced-fidelity solver tier used per GA candidate, and the final
/// re-evaluation tier.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitSolverTier {
    pub resolution_per_um: f64,
    pub n_samples: usize,
    pub n_rings: u32,
    /// window margin beyond the outermost ring, in pitches
    pub margin_pitches: f64,
    /// eigensolver residual tolerance for this tier
    pub eigen_tolerance: f64,
}

impl FitSolverTier {
    /// The in-loop GA tier. The loose eigen tolerance is consistent
    /// between synthesis and fitting (both interrogate the same splined
    /// tables), so the self-consistency floor is set by root bisection,
    /// not by the eigensolver.
    pub fn ga_default() -> FitSolverTier {
        FitSolverTier {
            resolution_per_um: 20.0,
            n_samples: 16,
            n_rings: 3,
            margin_pitches: 1.0,
            eigen_tolerance: 1e-7,
        }
    }

    /// The final re-evaluation tier.
    pub fn final_default() -> FitSolverTier {
        FitSolverTier {
            resolution_per_um: 30.0,
            n_samples: 24,
            n_rings: 4,
            margin_pitches: 2.0,
            eigen_tolerance: 1e-10,
        }
    }
}

/// Everything fixed across candidate evaluations.
pub struct FitProblem {
    pub observations: Vec<PeakObservation>,
    pub material: MaterialModel,
    pub cache: DispersionCache,
    /// λ range the dispersion tables must cover (µm)
    pub lambda_range_um: (f64, f64),
    pub phi_nl_enabled: bool,
    pub n2_m2_w: f64,
    pub solver: SolverOptions,
}

impl FitProblem {
    /// Builds a problem from observations, deriving the table range from
    /// the pump/idler/signal wavelengths they imply (3% margin).
    pub fn new(
        observations: Vec<PeakObservation>,
        material: MaterialModel,
        cache: DispersionCache,
    ) -> Result<FitProblem> {
        if observations.is_empty() {
            return Err(Error::config("no observations"));
        }
        let mut lam_min = f64::INFINITY;
        let mut lam_max = 0.0_f64;
        for o in &observations {
            o.validate()?;
            compatible_processes(o)?;
            let lam_s = 1.0 / (2.0 / o.lambda_p_um - 1.0 / o.lambda_i_um);
            if lam_s <= 0.0 {
                return Err(Error::config(format!(
                    "observation implies an unphysical signal wavelength (pump {}, idler {})",
                    o.lambda_p_um, o.lambda_i_um
                )));
            }
            lam_min = lam_min.min(o.lambda_i_um);
            lam_max = lam_max.max(lam_s).max(o.lambda_p_um);
        }
        let range = (
            (lam_min * 0.97).max(material.valid_um.0),
            (lam_max * 1.03).min(material.valid_um.1),
        );
        Ok(FitProblem {
            observations,
            material,
            cache,
            lambda_range_um: range,
            phi_nl_enabled: false,
            n2_m2_w: 2.6e-20,
            solver: SolverOptions::default(),
        })
    }

    fn scan_config(&self, tier: &FitSolverTier, geometry: &FiberGeometry) -> ScanConfig {
        let mut cfg = ScanConfig::from_lambda_range_um(
            self.lambda_range_um.0,
            self.lambda_range_um.1,
            tier.n_samples,
            tier.resolution_per_um,
        );
        cfg.half_extent_um = Some(
            (tier.n_rings as f64 + tier.margin_pitches) * geometry.pitch_um
                + 0.5 * geometry.d_um,
        );
        cfg
    }

    /// Dispersion tables for one candidate at one tier (cache-aware);
    /// the two polarizations are solved in one shared-profile pass on a
    /// cache miss.
    pub fn tables(&self, geometry: &FiberGeometry, tier: &FitSolverTier) -> Result<DispersionPair> {
        let mut g = *geometry;
        g.n_rings = tier.n_rings;
        let scan = self.scan_config(tier, &g);
        let mut solver = self.solver;
        solver.eigen.tolerance = tier.eigen_tolerance;
        let key_x = scan_key(&g, &self.material, &scan, solver.eigen.tolerance, Polarization::X);
        let key_y = scan_key(&g, &self.material, &scan, solver.eigen.tolerance, Polarization::Y);
        let pair = std::sync::Mutex::new(None::<(DispersionTable, DispersionTable)>);
        let compute = |pol: Polarization| -> Result<DispersionTable> {
            let mut guard = pair.lock().unwrap();
            if guard.is_none() {
                *guard = Some(dispersion_scan_pair(&g, &scan, &self.material, &solver)?);
            }
            let (tx, ty) = guard.as_ref().unwrap();
            Ok(match pol {
                Polarization::X => tx.clone(),
                Polarization::Y => ty.clone(),
            })
        };
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
}

/// Per-observation assignment in a fitness evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Assignment {
    pub lambda_p_um: f64,
    pub lambda_i_um: f64,
    pub process: ProcessId,
    pub delta_k_rad_m: f64,
}

/// Fitness Δk_T = Σ over observations of min over compatible processes of
/// Δk², evaluated at ω_s = 2ω_p − ω_i.
#[derive(Debug, Clone, Serialize)]
pub struct FitnessReport {
    pub total_rad2_m2: f64,
    pub assignments: Vec<Assignment>,
}

pub fn fitness(
    geometry: &FiberGeometry,
    problem: &FitProblem,
    tier: &FitSolverTier,
) -> Result<FitnessReport> {
    let tables = problem.tables(geometry, tier)?;
    fitness_with_tables(geometry, problem, &tables)
}

/// Fitness evaluation against prebuilt tables.
pub fn fitness_with_tables(
    _geometry: &FiberGeometry,
    problem: &FitProblem,
    tables: &DispersionPair,
) -> Result<FitnessReport> {
    let mut assignments = Vec::with_capacity(problem.observations.len());
    let mut squares = Vec::with_capacity(problem.observations.len());
    for obs in &problem.observations {
        let omega_p = omega_from_lambda_um(obs.lambda_p_um);
        let omega_i = omega_from_lambda_um(obs.lambda_i_um);
        let omega_s = 2.0 * omega_p - omega_i;
        let ctx = if problem.phi_nl_enabled {
            let mut pump_cfg = crate::twophoton::PumpConfig {
                lambda_p_um: obs.lambda_p_um,
                fwhm_nm: 0.4,
                avg_power_w: 0.0,
                rep_rate_hz: 76e6,
                theta_p_deg: obs.theta_p_deg,
            };
            pump_cfg.avg_power_w = 0.020;
            crate::twophoton::nonlinear_context(&pump_cfg, tables, problem.n2_m2_w, true)?
        } else {
            NonlinearContext::disabled()
        };
        let mut best: Option<(ProcessId, f64)> = None;
        for p in compatible_processes(obs)? {
            let dk = delta_k(p, omega_p, omega_s, omega_i, tables, &ctx)?;
            if best.map_or(true, |(_, b)| dk.abs() < b.abs()) {
                best = Some((p, dk));
            }
        }
        let (process, dk) = best.expect("compatible_processes is non-empty");
        assignments.push(Assignment {
            lambda_p_um: obs.lambda_p_um,
            lambda_i_um: obs.lambda_i_um,
            process,
            delta_k_rad_m: dk,
        });
        squares.push(dk * dk);
    }
    // order-independent summation: sort the squared residuals first
    squares.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(FitnessReport {
        total_rad2_m2: squares.iter().sum(),
        assignments,
    })
}

/// Per-parameter search bounds (µm).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitBounds {
    pub d_um: (f64, f64),
    pub big_d_um: (f64, f64),
    pub pitch_um: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            d_um: (0.4, 1.1),
            big_d_um: (0.5, 1.3),
            pitch_um: (0.8, 1.6),
        }
    }
}

/// GA hyperparameters; defaults tuned for the round-trip protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub bounds: FitBounds,
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub blend_alpha: f64,
    /// per-parameter mutation σ as a fraction of the bound span
    pub mutation_sigma_frac: f64,
    pub elites: usize,
    pub seed: u64,
    pub stall_generations: usize,
    pub stall_rel_improvement: f64,
    pub ga_tier: FitSolverTier,
    pub final_tier: FitSolverTier,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            bounds: FitBounds::default(),
            population: 48,
            generations: 120,
            tournament: 3,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_sigma_frac: 0.01,
            elites: 2,
            seed: 1,
            stall_generations: 30,
            stall_rel_improvement: 1e-4,
            ga_tier: FitSolverTier::ga_default(),
            final_tier: FitSolverTier::final_default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        for (lo, hi) in [b.d_um, b.big_d_um, b.pitch_um] {
            if !(lo < hi && lo > 0.0) {
                return Err(Error::config("fit bounds must satisfy 0 < lower < upper"));
            }
        }
        if self.population < 8 {
            return Err(Error::config("population must be at least 8"));
        }
        if self.elites >= self.population {
            return Err(Error::config("elite count must be below the population"));
        }
        if self.tournament < 1 || self.crossover_rate < 0.0 || self.crossover_rate > 1.0 {
            return Err(Error::config("invalid GA operator settings"));
        }
        Ok(())
    }
}

/// Candidate point in the search space.
type Genome = [f64; 3]; // d, D, pitch (µm)

/// Geometry ordering margin (µm); keeps d < D < Λ strict after repair.
const ORDER_MARGIN_UM: f64 = 1e-4;

fn genome_to_geometry(g: &Genome, n_rings: u32) -> FiberGeometry {
    FiberGeometry {
        d_um: g[0],
        big_d_um: g[1],
        pitch_um: g[2],
        length_m: 0.94,
        n_rings,
    }
}

/// Projects a genome onto the feasible set: box bounds plus the ordering
/// d ≤ D − δ ≤ Λ − 2δ, by alternating pairwise projections.
fn repair(g: &mut Genome, bounds: &FitBounds) {
    let clamp = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi);
    for _ in 0..16 {
        g[0] = clamp(g[0], bounds.d_um);
        g[1] = clamp(g[1], bounds.big_d_um);
        g[2] = clamp(g[2], bounds.pitch_um);
        let mut dirty = false;
        if g[0] > g[1] - ORDER_MARGIN_UM {
            let mid = 0.5 * (g[0] + g[1]);
            g[0] = mid - 0.5 * ORDER_MARGIN_UM;
            g[1] = mid + 0.5 * ORDER_MARGIN_UM;
            dirty = true;
        }
        if g[1] > g[2] - ORDER_MARGIN_UM {
            let mid = 0.5 * (g[1] + g[2]);
            g[1] = mid - 0.5 * ORDER_MARGIN_UM;
            g[2] = mid + 0.5 * ORDER_MARGIN_UM;
            dirty = true;
        }
        if !dirty {
            let in_box = g[0] >= bounds.d_um.0
                && g[0] <= bounds.d_um.1
                && g[1] >= bounds.big_d_um.0
                && g[1] <= bounds.big_d_um.1
                && g[2] >= bounds.pitch_um.0
                && g[2] <= bounds.pitch_um.1;
            if in_box {
                return;
            }
        }
    }
    // fallback: force a strictly ordered feasible point
    g[0] = clamp(g[0], bounds.d_um);
    g[1] = clamp(g[0] + ORDER_MARGIN_UM, bounds.big_d_um);
    g[2] = clamp(g[1] + ORDER_MARGIN_UM, bounds.pitch_um);
}

/// Deterministic per-(seed, generation, index) RNG stream, so parallel and
/// serial evaluation orders produce identical populations.
fn stream(seed: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut z = seed
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(generation.wrapping_mul(0xBF58476D1CE4E5B9))
        .wrapping_add(index.wrapping_mul(0x94D049BB133111EB));
    // splitmix finalizer
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58476D1CE4E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Outcome of a GA run.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub best: FitGeometry,
    pub fitness_rad2_m2: f64,
    /// final high-tier re-evaluation of the best candidate
    pub final_fitness_rad2_m2: f64,
    pub assignments: Vec<Assignment>,
    /// best fitness per generation
    pub trace: Vec<f64>,
    pub generations_run: usize,
    pub evaluations: usize,
    pub solver_failures: usize,
    pub seed: u64,
}

/// The fitted parameters, serialized with the config-file key names.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitGeometry {
    pub d_um: f64,
    #[serde(rename = "D_um")]
    pub big_d_um: f64,
    pub pitch_um: f64,
}

struct Evaluated {
    genome: Genome,
    fitness: f64,
    report: Option<FitnessReport>,
}

fn evaluate_population(
    genomes: &[Genome],
    problem: &FitProblem,
    tier: &FitSolverTier,
    failures: &mut usize,
) -> Vec<Evaluated> {
    let results: Vec<(f64, Option<FitnessReport>)> = genomes
        .par_iter()
        .map(|g| {
            let geom = genome_to_geometry(g, tier.n_rings);
            match fitness(&geom, problem, tier) {
                Ok(rep) => (rep.total_rad2_m2, Some(rep)),
                Err(_) => (f64::INFINITY, None),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(genomes.len());
    for (g, (f, rep)) in genomes.iter().zip(results) {
        if rep.is_none() {
            *failures += 1;
        }
        out.push(Evaluated {
            genome: *g,
            fitness: f,
            report: rep,
        });
    }
    out
}

/// Runs the real-coded GA: tournament selection, blend crossover,
/// Gaussian mutation, constraint repair, elitism. Deterministic under a
/// fixed seed regardless of worker count.
pub fn run_ga(config: &FitConfig, problem: &FitProblem) -> Result<FitResult> {
    config.validate()?;
    let bounds = &config.bounds;
    let spans = [
        bounds.d_um.1 - bounds.d_um.0,
        bounds.big_d_um.1 - bounds.big_d_um.0,
        bounds.pitch_um.1 - bounds.pitch_um.0,
    ];

    // initial population
    let mut population: Vec<Genome> = (0..config.population)
        .map(|i| {
            let mut rng = stream(config.seed, 0, i as u64);
            let mut g = [
                bounds.d_um.0 + rng.random::<f64>() * spans[0],
                bounds.big_d_um.0 + rng.random::<f64>() * spans[1],
                bounds.pitch_um.0 + rng.random::<f64>() * spans[2],
            ];
            repair(&mut g, bounds);
            g
        })
        .collect();

    let mut failures = 0usize;
    let mut evaluations = 0usize;
    let mut evaluated = evaluate_population(&population, problem, &config.ga_tier, &mut failures);
    evaluations += evaluated.len();
    if evaluated.iter().all(|e| !e.fitness.is_finite()) {
        return Err(Error::config(
            "every initial candidate failed to evaluate; check bounds and solver tier",
        ));
    }

    let sort_indices = |ev: &[Evaluated]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..ev.len()).collect();
        idx.sort_by(|&a, &b| {
            ev[a]
                .fitness
                .total_cmp(&ev[b].fitness)
                .then(a.cmp(&b))
        });
        idx
    };

    let mut trace: Vec<f64> = Vec::new();
    let mut stall = 0usize;
    let mut best_overall: Option<Evaluated> = None;
    let mut generations_run = 0usize;

    for generation in 0..config.generations {
        generations_run = generation + 1;
        let order = sort_indices(&evaluated);
        let gen_best = &evaluated[order[0]];
        let prev_best = best_overall.as_ref().map(|b: &Evaluated| b.fitness);
        if best_overall
            .as_ref()
            .map_or(true, |b| gen_best.fitness < b.fitness)
        {
            best_overall = Some(Evaluated {
                genome: gen_best.genome,
                fitness: gen_best.fitness,
                report: gen_best.report.clone(),
            });
        }
        let best_now = best_overall.as_ref().unwrap().fitness;
        trace.push(best_now);

        if let Some(prev) = prev_best {
            let rel = (prev - best_now) / prev.abs().max(1e-300);
            if rel < config.stall_rel_improvement {
                stall += 1;
            } else {
                stall = 0;
            }
            if stall >= config.stall_generations {
                break;
            }
        }
        if generation + 1 == config.generations {
            break;
        }

        // next generation: elites then offspring
        let mut next: Vec<Genome> = Vec::with_capacity(config.population);
        for &ei in order.iter().take(config.elites) {
            next.push(evaluated[ei].genome);
        }
        let gen_u = (generation + 1) as u64;
        while next.len() < config.population {
            let child_index = next.len() as u64;
            let mut rng = stream(config.seed, gen_u, child_index);
            let pick = |rng: &mut ChaCha8Rng| -> usize {
                let mut best = rng.random_range(0..evaluated.len());
                for _ in 1..config.tournament {
                    let c = rng.random_range(0..evaluated.len());
                    if evaluated[c].fitness < evaluated[best].fitness {
                        best = c;
                    }
                }
                best
            };
            let pa = evaluated[pick(&mut rng)].genome;
            let pb = evaluated[pick(&mut rng)].genome;
            let mut child = if rng.random::<f64>() < config.crossover_rate {
                // blend crossover: uniform on the α-extended interval
                let mut c = [0.0; 3];
                for k in 0..3 {
                    let lo = pa[k].min(pb[k]);
                    let hi = pa[k].max(pb[k]);
                    let span = hi - lo;
                    let a = lo - config.blend_alpha * span;
                    let b = hi + config.blend_alpha * span;
                    c[k] = a + rng.random::<f64>() * (b - a);
                }
                c
            } else {
                pa
            };
            // Gaussian mutation, Box-Muller from the same stream
            for (k, item) in child.iter_mut().enumerate() {
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                let normal =
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                *item += normal * config.mutation_sigma_frac * spans[k];
            }
            repair(&mut child, bounds);
            next.push(child);
        }
        population = next;
        evaluated = evaluate_population(&population, problem, &config.ga_tier, &mut failures);
        evaluations += evaluated.len();
    }

    let best = best_overall.expect("at least one generation ran");
    if !best.fitness.is_finite() {
        return Err(Error::numeric("GA found no evaluable candidate"));
    }

    // final high-tier re-evaluation of the winner
    let final_geom = genome_to_geometry(&best.genome, config.final_tier.n_rings);
    let final_rep = fitness(&final_geom, problem, &config.final_tier)?;

    Ok(FitResult {
        best: FitGeometry {
            d_um: best.genome[0],
            big_d_um: best.genome[1],
            pitch_um: best.genome[2],
        },
        fitness_rad2_m2: best.fitness,
        final_fitness_rad2_m2: final_rep.total_rad2_m2,
        assignments: final_rep.assignments,
        trace,
        generations_run,
        evaluations,
        solver_failures: failures,
        seed: config.seed,
    })
}

/// Exhaustive fitness evaluation on a feasible lattice; the argmin ties
/// break toward the lexicographically first lattice point.
pub fn brute_force_fit(
    bounds: &FitBounds,
    grid_density: usize,
    problem: &FitProblem,
    tier: &FitSolverTier,
) -> Result<(FitGeometry, f64)> {
    if grid_density < 8 {
        return Err(Error::config("brute-force grid density must be >= 8"));
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..grid_density)
            .map(|i| lo + (hi - lo) * i as f64 / (grid_density - 1) as f64)
            .collect()
    };
    let ds = axis(bounds.d_um);
    let bigs = axis(bounds.big_d_um);
    let pitches = axis(bounds.pitch_um);
    let mut points = Vec::new();
    for &d in &ds {
        for &big in &bigs {
            for &pitch in &pitches {
                if d < big - ORDER_MARGIN_UM && big < pitch - ORDER_MARGIN_UM {
                    points.push([d, big, pitch]);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::config("no feasible lattice points within bounds"));
    }
    let scores: Vec<f64> = points
        .par_iter()
        .map(|g| {
            let geom = genome_to_geometry(g, tier.n_rings);
            fitness(&geom, problem, tier)
                .map(|r| r.total_rad2_m2)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let mut best = 0usize;
    for i in 1..points.len() {
        if scores[i] < scores[best] {
            best = i;
        }
    }
    Ok((
        FitGeometry {
            d_um: points[best][0],
            big_d_um: points[best][1],
            pitch_um: points[best][2],
        },
        scores[best],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(theta: f64, pol: Polarization) -> PeakObservation {
        PeakObservation {
            lambda_p_um: 0.741,
            lambda_i_um: 0.55,
            bandwidth_nm: 2.0,
            idler_pol: pol,
            theta_p_deg: theta,
            process_hint: None,
        }
    }

    #[test]
    fn compatible_process_examples() {
        let got = compatible_processes(&obs(0.0, Polarization::X)).unwrap();
        assert_eq!(got, vec![ProcessId::A]);
        let got = compatible_processes(&obs(0.0, Polarization::Y)).unwrap();
        assert_eq!(got, vec![ProcessId::E]);
        let got = compatible_processes(&obs(45.0, Polarization::X)).unwrap();
        assert_eq!(got, vec![ProcessId::A, ProcessId::D, ProcessId::F]);
        let got = compatible_processes(&obs(90.0, Polarization::X)).unwrap();
        assert_eq!(got, vec![ProcessId::F]);
        let got = compatible_processes(&obs(45.0, Polarization::Y)).unwrap();
        assert_eq!(got, vec![ProcessId::B, ProcessId::C, ProcessId::E]);
    }

    #[test]
    fn hint_narrows_assignment() {
        let mut o = obs(45.0, Polarization::X);
        o.process_hint = Some(ProcessId::D);
        assert_eq!(compatible_processes(&o).unwrap(), vec![ProcessId::D]);
    }

    #[test]
    fn invalid_observation_is_rejected() {
        let mut o = obs(45.0, Polarization::X);
        o.lambda_i_um = 0.8; // idler above the pump
        assert!(o.validate().is_err());
    }

    #[test]
    fn observations_csv_roundtrip() {
        let mut o1 = obs(45.0, Polarization::X);
        o1.process_hint = Some(ProcessId::A);
        let o2 = obs(0.0, Polarization::Y);
        let csv = observations_to_csv(&[o1, o2]).unwrap();
        let back = observations_from_csv(&csv).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].process_hint, Some(ProcessId::A));
        assert_eq!(back[1].process_hint, None);
        assert_eq!(back[0].lambda_p_um, o1.lambda_p_um);
        assert_eq!(back[1].idler_pol, Polarization::Y);
    }

    #[test]
    fn repair_enforces_ordering_and_bounds() {
        let bounds = FitBounds::default();
        let cases = [
            [1.05, 0.6, 0.9],
            [0.4, 1.3, 0.8],
            [1.1, 1.3, 1.6],
            [-1.0, 5.0, 0.0],
            [0.9, 0.9, 0.9],
        ];
        for mut g in cases {
            repair(&mut g, &bounds);
            assert!(g[0] >= bounds.d_um.0 - 1e-12 && g[0] <= bounds.d_um.1 + 1e-12);
            assert!(g[1] >= bounds.big_d_um.0 - 1e-12 && g[1] <= bounds.big_d_um.1 + 1e-12);
            assert!(g[2] >= bounds.pitch_um.0 - 1e-12 && g[2] <= bounds.pitch_um.1 + 1e-12);
            assert!(g[0] < g[1] && g[1] < g[2], "ordering violated: {g:?}");
        }
    }

    #[test]
    fn rng_streams_are_stable() {
        let mut a = stream(7, 3, 5);
        let mut b = stream(7, 3, 5);
        let mut c = stream(7, 3, 6);
        let va: f64 = a.random();
        let vb: f64 = b.random();
        let vc: f64 = c.random();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }
}
