//! Run configuration: JSON file, command-line overrides and validation.
//!
//! Precedence is defaults < config file < flags. Only `params.n` and
//! `params.s` have no default; every other key is optional.

use fraclab::FracParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Problem parameters as written in a config file (unset = default).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub n: Option<usize>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
}

/// Discretization of the radial axis, the half-strip and the half-sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Radial grid for forms and sampled profiles.
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
    /// Radial part of the half-strip (extension fields).
    pub strip_r_min: f64,
    pub strip_r_max: f64,
    pub strip_per_decade: usize,
    /// Geometric heights t_min … t_max.
    pub t_min: f64,
    pub t_max: f64,
    pub t_nodes: usize,
    /// Cells of the angular mesh on the half-sphere.
    pub angular_cells: usize,
    /// Grading exponent of the angular mesh (default clamp(1/s, 1.5, 4)).
    pub angular_grading: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_min: 1e-4,
            r_max: 1e4,
            per_decade: 40,
            strip_r_min: 1e-3,
            strip_r_max: 20.0,
            strip_per_decade: 20,
            t_min: 1e-4,
            t_max: 20.0,
            t_nodes: 40,
            angular_cells: 2000,
            angular_grading: None,
        }
    }
}

/// Solver tolerances and iteration limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    /// Relative tolerance of the adaptive quadratures.
    pub quad_tol: f64,
    pub max_iter: usize,
    /// Initial step (relaxation) of the ground-state descent.
    pub relaxation: f64,
    /// Relative quotient change at which the descent stops.
    pub tol: f64,
    /// Dilation-free stationarity at which the descent stops.
    pub grad_tol: f64,
    pub rearrange_every: usize,
    /// Tolerance of the sampled comparison checks (relative to max u).
    pub check_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            quad_tol: 1e-10,
            max_iter: 2000,
            relaxation: 0.5,
            tol: 1e-9,
            grad_tol: 1e-4,
            rearrange_every: 25,
            check_tol: 1e-2,
        }
    }
}

/// Settings of the randomized Kelvin checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KelvinSpec {
    pub samples_per_region: usize,
    pub sphere_pairs: usize,
}

impl Default for KelvinSpec {
    fn default() -> Self {
        KelvinSpec { samples_per_region: 10_000, sphere_pairs: 5 }
    }
}

/// Settings of the Pohozaev experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PohozaevSpec {
    pub radii: Vec<f64>,
    /// Largest relative residual accepted.
    pub tolerance: f64,
}

impl Default for PohozaevSpec {
    fn default() -> Self {
        PohozaevSpec { radii: vec![2.0, 4.0, 8.0], tolerance: 5e-2 }
    }
}

/// Settings of the λ-sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// λ values as fractions of the Hardy constant.
    pub lambda_fractions: Vec<f64>,
    pub workers: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { lambda_fractions: vec![0.0, 0.2, 0.4, 0.6, 0.8], workers: 4 }
    }
}

/// A config file as written by the user.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub kelvin: KelvinSpec,
    pub pohozaev: PohozaevSpec,
    pub sweep: SweepSpec,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Fully resolved configuration; serialized into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub params: FracParams,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub kelvin: KelvinSpec,
    pub pohozaev: PohozaevSpec,
    pub sweep: SweepSpec,
    pub out: PathBuf,
    pub seed: u64,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
}

/// Default output directory.
pub const DEFAULT_OUT: &str = "fraclab-out";

pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig, String> {
    let file: ConfigFile = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("malformed config {}: {e}", p.display()))?
        }
        None => ConfigFile::default(),
    };
    resolve(file, ov)
}

pub fn resolve(file: ConfigFile, ov: &Overrides) -> Result<RunConfig, String> {
    let n = ov.n.or(file.params.n);
    let s = ov.s.or(file.params.s);
    let mut missing = Vec::new();
    if n.is_none() {
        missing.push("params.n");
    }
    if s.is_none() {
        missing.push("params.s");
    }
    if !missing.is_empty() {
        return Err(format!("missing config keys: {} (set them in the config file or with --n/--s)", missing.join(", ")));
    }
    let (n, s) = (n.unwrap(), s.unwrap());
    let lambda = ov.lambda.or(file.params.lambda).unwrap_or(0.0);
    let alpha = ov.alpha.or(file.params.alpha).unwrap_or(2.0 * s);
    let p = match ov.p.or(file.params.p) {
        Some(p) => p,
        None => FracParams::critical(n, s, lambda).map_err(|e| e.to_string())?.p,
    };
    let params = FracParams::new(n, s, lambda, alpha, p).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        params,
        grid: file.grid,
        solver: file.solver,
        kelvin: file.kelvin,
        pohozaev: file.pohozaev,
        sweep: file.sweep,
        out: ov.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        seed: ov.seed.or(file.seed).unwrap_or(0),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Positivity and ordering of every tolerance and grid extent.
    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grid;
        let positive = [
            ("grid.r_min", g.r_min),
            ("grid.strip_r_min", g.strip_r_min),
            ("grid.t_min", g.t_min),
            ("solver.quad_tol", self.solver.quad_tol),
            ("solver.relaxation", self.solver.relaxation),
            ("solver.tol", self.solver.tol),
            ("solver.grad_tol", self.solver.grad_tol),
            ("solver.check_tol", self.solver.check_tol),
            ("pohozaev.tolerance", self.pohozaev.tolerance),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{key} must be positive and finite, got {v}"));
            }
        }
        let ordered = [
            ("grid.r_min < grid.r_max", g.r_min < g.r_max),
            ("grid.strip_r_min < grid.strip_r_max", g.strip_r_min < g.strip_r_max),
            ("grid.t_min < grid.t_max", g.t_min < g.t_max),
        ];
        for (what, ok) in ordered {
            if !ok {
                return Err(format!("grid extents violate {what}"));
            }
        }
        let counts = [
            ("grid.per_decade", g.per_decade),
            ("grid.strip_per_decade", g.strip_per_decade),
            ("grid.t_nodes", g.t_nodes),
            ("grid.angular_cells", g.angular_cells),
            ("solver.max_iter", self.solver.max_iter),
            ("kelvin.samples_per_region", self.kelvin.samples_per_region),
            ("kelvin.sphere_pairs", self.kelvin.sphere_pairs),
            ("sweep.workers", self.sweep.workers),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(format!("{key} must be at least 1"));
            }
        }
        if let Some(q) = g.angular_grading {
            if !(q >= 1.0) {
                return Err(format!("grid.angular_grading must be >= 1, got {q}"));
            }
        }
        if self.pohozaev.radii.iter().any(|&r| !(r > 0.0)) {
            return Err("pohozaev.radii must be positive".into());
        }
        if self.sweep.lambda_fractions.is_empty() {
            return Err("sweep.lambda_fractions must not be empty".into());
        }
        if let Some(f) = self.sweep.lambda_fractions.iter().find(|f| !(f.is_finite() && **f < 1.0)) {
            return Err(format!("sweep.lambda_fractions must be finite and below 1 (minimizers exist only for lambda < Lambda), got {f}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_keys_are_listed() {
        let err = resolve(ConfigFile::default(), &Overrides::default()).unwrap_err();
        assert!(err.contains("params.n") && err.contains("params.s"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let mut file = ConfigFile::default();
        file.params.n = Some(4);
        file.params.s = Some(0.3);
        let ov = Overrides { s: Some(0.5), ..Default::default() };
        let cfg = resolve(file, &ov).unwrap();
        assert_eq!(cfg.params.n, 4);
        assert_eq!(cfg.params.s, 0.5);
        assert_eq!(cfg.params.alpha, 1.0);
        assert!((cfg.params.p - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<ConfigFile, _> = serde_json::from_str(r#"{"params": {"n": 3, "s": 0.5, "lamda": 1}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let mut file = ConfigFile::default();
        file.params.n = Some(3);
        file.params.s = Some(0.5);
        file.solver.tol = 0.0;
        assert!(resolve(file, &Overrides::default()).unwrap_err().contains("solver.tol"));
    }
}
