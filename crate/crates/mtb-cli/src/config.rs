//! Declarative run configuration: strict JSON (unknown keys rejected) with
//! fibre-community units on the wire, converted to SI on ingest.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use mtb_core::optimizer::DesignProblem;
use mtb_core::{FiberParams, SsfmConfig, TimeGrid};

use crate::error::CliError;

/// Channel parameters in the units fibre data sheets use.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSection {
    /// Kerr coefficient in 1/W/km.
    pub gamma_per_w_km: f64,
    /// Group-velocity dispersion in ps²/km.
    pub beta2_ps2_per_km: f64,
    /// Attenuation in dB/km.
    pub alpha_db_per_km: f64,
    /// Span length in km.
    pub length_km: f64,
}

/// Explicit simulation grid, overriding the automatically sized one.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Number of samples (a power of two keeps the transforms fast).
    pub n_samples: usize,
    /// Sample spacing in ps.
    pub dt_ps: f64,
}

/// Split-step controls; omitted fields keep their defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsfmSection {
    /// Upper bound on the step size in km.
    #[serde(default)]
    pub max_dz_km: Option<f64>,
    /// Upper bound on the Kerr phase per step in radians.
    #[serde(default)]
    pub max_nonlinear_phase_per_step: Option<f64>,
    /// Relative output change accepted by the step-halving verification.
    #[serde(default)]
    pub convergence_tol: Option<f64>,
}

/// Optimiser controls for `mtb-design` and the `mtb` pulse type; omitted
/// fields keep their defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    /// Base seed of the deterministic multi-start perturbations.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Number of exploration starts.
    #[serde(default)]
    pub n_starts: Option<usize>,
    /// Gradient iterations per exploration start.
    #[serde(default)]
    pub explore_iters: Option<usize>,
    /// Gradient iterations polishing the best start.
    #[serde(default)]
    pub polish_iters: Option<usize>,
    /// Basis size override.
    #[serde(default)]
    pub n_funcs: Option<usize>,
}

/// Which pulse family an energy-modulated link uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseType {
    /// Truncated solitons with closed-form transmit durations.
    Soliton,
    /// Minimum-time-broadening designs, one fixed point per level.
    Mtb,
}

/// One run's declarative inputs. Physical fields use the units their names
/// carry; everything is converted to SI before touching the numerics.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The channel.
    pub fiber: FiberSection,
    /// Energy fraction tolerance ε shared by duration, bandwidth, and band
    /// occupancy measures.
    pub eps: f64,
    /// Half-bandwidth of the occupancy band in GHz.
    pub w_max_ghz: f64,
    /// Where outputs go when `--out` is not given (default ".").
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Explicit simulation grid for pulse design.
    #[serde(default)]
    pub grid: Option<GridSection>,
    /// Split-step overrides.
    #[serde(default)]
    pub ssfm: Option<SsfmSection>,
    /// Pulse energies in pJ (`soliton-sweep`, `mtb-design`).
    #[serde(default)]
    pub energies_pj: Option<Vec<f64>>,
    /// Number of modulation levels (`em-evaluate`).
    #[serde(default)]
    pub m_levels: Option<usize>,
    /// Pulse family (`em-evaluate`).
    #[serde(default)]
    pub pulse_type: Option<PulseType>,
    /// Top level energy in pJ; omitting it sweeps for the rate-maximising
    /// top level (`em-evaluate`, solitons only).
    #[serde(default)]
    pub e_max_pj: Option<f64>,
    /// Number of random symbols in the loopback train (default 256).
    #[serde(default)]
    pub n_messages: Option<usize>,
    /// Seed of the random message sequence (default 0; `--seed` overrides).
    #[serde(default)]
    pub message_seed: Option<u64>,
    /// Optimiser controls.
    #[serde(default)]
    pub design: Option<DesignSection>,
    /// Number of equally spaced z positions captured by `propagate`
    /// (default 17, including both ends).
    #[serde(default)]
    pub n_snapshots: Option<usize>,
}

impl RunConfig {
    /// Reads and parses a config file; parse errors carry the path and the
    /// line/column serde_json reports.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The configured channel in SI units.
    pub fn fiber(&self) -> Result<FiberParams, CliError> {
        Ok(FiberParams::new(
            self.fiber.alpha_db_per_km,
            self.fiber.beta2_ps2_per_km,
            self.fiber.gamma_per_w_km,
            self.fiber.length_km,
        )?)
    }

    /// The configured channel with its attenuation removed.
    pub fn lossless_fiber(&self) -> Result<FiberParams, CliError> {
        Ok(FiberParams::new(
            0.0,
            self.fiber.beta2_ps2_per_km,
            self.fiber.gamma_per_w_km,
            self.fiber.length_km,
        )?)
    }

    /// Split-step configuration with any overrides applied.
    pub fn ssfm(&self) -> Result<SsfmConfig, CliError> {
        let mut cfg = SsfmConfig::default();
        if let Some(s) = &self.ssfm {
            if let Some(dz) = s.max_dz_km {
                cfg.max_dz_km = dz;
            }
            if let Some(phi) = s.max_nonlinear_phase_per_step {
                cfg.max_nonlinear_phase_per_step = phi;
            }
            if let Some(tol) = s.convergence_tol {
                cfg.convergence_tol = tol;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Band half-width in Hz.
    pub fn w_max_hz(&self) -> f64 {
        self.w_max_ghz * 1e9
    }

    /// Energy list in joules (empty when the config omits it).
    pub fn energies_si(&self) -> Vec<f64> {
        self.energies_pj
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|e| e * 1e-12)
            .collect()
    }

    /// Top level energy in joules, when fixed by the config.
    pub fn e_max_si(&self) -> Option<f64> {
        self.e_max_pj.map(|e| e * 1e-12)
    }

    /// Explicit simulation grid, when configured.
    pub fn time_grid(&self) -> Result<Option<TimeGrid>, CliError> {
        match self.grid {
            Some(g) => Ok(Some(TimeGrid::new(g.n_samples, g.dt_ps * 1e-12)?)),
            None => Ok(None),
        }
    }

    /// Applies the grid and optimiser overrides to a design problem.
    pub fn apply_design_overrides(&self, problem: &mut DesignProblem) -> Result<(), CliError> {
        problem.grid = self.time_grid()?;
        if let Some(d) = &self.design {
            if let Some(seed) = d.seed {
                problem.seed = seed;
            }
            if let Some(n) = d.n_starts {
                problem.n_starts = n;
            }
            if let Some(n) = d.explore_iters {
                problem.explore_iters = n;
            }
            if let Some(n) = d.polish_iters {
                problem.polish_iters = n;
            }
            if d.n_funcs.is_some() {
                problem.n_funcs = d.n_funcs;
            }
        }
        Ok(())
    }
}
