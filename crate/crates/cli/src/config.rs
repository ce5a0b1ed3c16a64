//! Run configuration: one structured TOML file with sections per module;
//! command-line flags override file values.

use serde::{Deserialize, Serialize};
use sfwm_core::fibermodel::{FiberGeometry, MaterialModel};
use sfwm_core::geomfit::{FitBounds, FitSolverTier};
use sfwm_core::sfwm::ProcessId;
use sfwm_core::twophoton::ProjectionArm;
use sfwm_core::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: FiberGeometry,
    pub material: MaterialModel,
    pub solver: SolverSection,
    pub pump: PumpSection,
    pub nonlinear: NonlinearSection,
    pub contours: ContoursSection,
    pub spectra: SpectraSection,
    pub jointprob: JointProbSection,
    pub fit: FitSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: FiberGeometry::fitted(),
            material: MaterialModel::default(),
            solver: SolverSection::default(),
            pump: PumpSection::default(),
            nonlinear: NonlinearSection::default(),
            contours: ContoursSection::default(),
            spectra: SpectraSection::default(),
            jointprob: JointProbSection::default(),
            fit: FitSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub resolution_per_um: f64,
    pub n_samples: usize,
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    /// optional window half-extent override (µm)
    pub window_half_um: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            resolution_per_um: 40.0,
            n_samples: 48,
            lambda_min_um: 0.44,
            lambda_max_um: 1.85,
            window_half_um: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub lambda_p_um: f64,
    pub fwhm_nm: f64,
    pub avg_power_w: f64,
    pub rep_rate_hz: f64,
    pub theta_p_deg: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection {
            lambda_p_um: 0.741,
            fwhm_nm: 0.4,
            avg_power_w: 0.020,
            rep_rate_hz: 76e6,
            theta_p_deg: 45.0,
        }
    }
}

impl PumpSection {
    pub fn to_pump_config(&self) -> sfwm_core::twophoton::PumpConfig {
        sfwm_core::twophoton::PumpConfig {
            lambda_p_um: self.lambda_p_um,
            fwhm_nm: self.fwhm_nm,
            avg_power_w: self.avg_power_w,
            rep_rate_hz: self.rep_rate_hz,
            theta_p_deg: self.theta_p_deg,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearSection {
    pub n2_m2_w: f64,
    pub phi_nl: bool,
}

impl Default for NonlinearSection {
    fn default() -> Self {
        NonlinearSection {
            n2_m2_w: 2.6e-20,
            phi_nl: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContoursSection {
    pub processes: Vec<String>,
    pub lambda_p_min_um: f64,
    pub lambda_p_max_um: f64,
    pub lambda_i_min_um: f64,
    pub lambda_i_max_um: f64,
    pub n_pump: usize,
    pub n_idler: usize,
}

impl Default for ContoursSection {
    fn default() -> Self {
        ContoursSection {
            processes: vec!["a", "b", "c", "d", "e", "f"]
                .into_iter()
                .map(String::from)
                .collect(),
            lambda_p_min_um: 0.70,
            lambda_p_max_um: 0.90,
            lambda_i_min_um: 0.45,
            lambda_i_max_um: 0.74,
            n_pump: 400,
            n_idler: 600,
        }
    }
}

impl ContoursSection {
    pub fn process_ids(&self) -> Result<Vec<ProcessId>> {
        if self.processes.is_empty() {
            return Err(Error::config("contours: empty process list"));
        }
        self.processes.iter().map(|s| s.parse()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectraSection {
    /// processes to simulate; empty = all with nonzero weight
    pub processes: Vec<String>,
    pub grid_n: usize,
    /// window padding around the phase-matched peaks (nm)
    pub window_margin_nm: f64,
    pub normalize: bool,
}

impl Default for SpectraSection {
    fn default() -> Self {
        SpectraSection {
            processes: Vec::new(),
            grid_n: 512,
            window_margin_nm: 8.0,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JointProbSection {
    pub theta_step_deg: f64,
    pub lambda_i_min_um: f64,
    pub lambda_i_max_um: f64,
    pub n_omega_i: usize,
    pub arm: ProjectionArm,
    pub db_floor: f64,
}

impl Default for JointProbSection {
    fn default() -> Self {
        JointProbSection {
            theta_step_deg: 1.0,
            lambda_i_min_um: 0.46,
            lambda_i_max_um: 0.70,
            n_omega_i: 4096,
            arm: ProjectionArm::Idler,
            db_floor: -60.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// observations CSV path (overridable by --observations)
    pub observations: Option<String>,
    pub bounds: FitBounds,
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub blend_alpha: f64,
    pub mutation_sigma_frac: f64,
    pub elites: usize,
    pub seed: u64,
    pub stall_generations: usize,
    pub stall_rel_improvement: f64,
    pub ga_tier: FitSolverTier,
    pub final_tier: FitSolverTier,
    /// pin the dispersion-table range (µm); None derives it from data
    pub lambda_min_um: Option<f64>,
    pub lambda_max_um: Option<f64>,
    pub phi_nl: bool,
    /// brute-force oracle lattice density for --oracle
    pub oracle_density: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = sfwm_core::geomfit::FitConfig::default();
        FitSection {
            observations: None,
            bounds: d.bounds,
            population: d.population,
            generations: d.generations,
            tournament: d.tournament,
            crossover_rate: d.crossover_rate,
            blend_alpha: d.blend_alpha,
            mutation_sigma_frac: d.mutation_sigma_frac,
            elites: d.elites,
            seed: d.seed,
            stall_generations: d.stall_generations,
            stall_rel_improvement: d.stall_rel_improvement,
            ga_tier: d.ga_tier,
            final_tier: d.final_tier,
            lambda_min_um: None,
            lambda_max_um: None,
            phi_nl: false,
            oracle_density: 12,
        }
    }
}

impl FitSection {
    pub fn to_fit_config(&self) -> sfwm_core::geomfit::FitConfig {
        sfwm_core::geomfit::FitConfig {
            bounds: self.bounds,
            population: self.population,
            generations: self.generations,
            tournament: self.tournament,
            crossover_rate: self.crossover_rate,
            blend_alpha: self.blend_alpha,
            mutation_sigma_frac: self.mutation_sigma_frac,
            elites: self.elites,
            seed: self.seed,
            stall_generations: self.stall_generations,
            stall_rel_improvement: self.stall_rel_improvement,
            ga_tier: self.ga_tier,
            final_tier: self.final_tier,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub quiet: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            quiet: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::config(format!("config parse: {e}")))?;
        cfg.geometry.validate()?;
        Ok(cfg)
    }
}
