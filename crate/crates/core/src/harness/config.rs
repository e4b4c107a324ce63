//! Run configuration: a TOML file whose sections mirror the solver parameter
//! structs. Every field has a default, so an empty file is a valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineParams;
use crate::datagen::NoiseShape;
use crate::error::{FaError, Result};
use crate::ipm::{IpmParams, RecoveryThresholds};
use crate::newton::{Merit, NewtonParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub p: usize,
    pub r: usize,
    pub n: usize,
    pub snr: f64,
    /// Seed for the ground truth; samples use `seed + 1`.
    pub seed: u64,
    pub density: f64,
    pub offdiag_min: f64,
    pub offdiag_max: f64,
    pub diag_margin: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        let shape = NoiseShape::default();
        Self {
            p: 40,
            r: 5,
            n: 1200,
            snr: 1.0,
            seed: 42,
            density: shape.density,
            offdiag_min: shape.offdiag_min,
            offdiag_max: shape.offdiag_max,
            diag_margin: shape.diag_margin,
        }
    }
}

impl DataConfig {
    pub fn noise_shape(&self) -> NoiseShape {
        NoiseShape {
            density: self.density,
            offdiag_min: self.offdiag_min,
            offdiag_max: self.offdiag_max,
            diag_margin: self.diag_margin,
        }
    }

    pub fn sample_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub mu: f64,
}

/// Defaults are the cross-validated choice on the default instance.
impl Default for ProblemConfig {
    fn default() -> Self {
        Self { c: 0.02, mu: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IpmConfig {
    pub tau0: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub rank_threshold: f64,
    pub support_threshold: f64,
}

impl Default for IpmConfig {
    fn default() -> Self {
        let p = IpmParams::default();
        Self {
            tau0: p.tau0,
            theta: p.theta,
            epsilon: p.epsilon,
            rank_threshold: p.thresholds.rank,
            support_threshold: p.thresholds.support,
        }
    }
}

/// Proximal stepsize found by trial on the default instance.
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub gamma: f64,
    pub delta: f64,
    pub sigma: f64,
    pub beta: f64,
    pub residual_tol: f64,
    pub max_inner_iters: usize,
    pub max_backtracks: usize,
    pub merit: Merit,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        let p = NewtonParams::default();
        Self {
            gamma: DEFAULT_GAMMA,
            delta: p.delta,
            sigma: p.sigma,
            beta: p.beta,
            residual_tol: p.residual_tol,
            max_inner_iters: p.max_inner_iters,
            max_backtracks: p.max_backtracks,
            merit: p.merit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Defaults to the Newton `gamma` so both solvers report the same residual.
    pub gamma: Option<f64>,
    pub step_ell: f64,
    pub sigma: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let p = BaselineParams::default();
        Self {
            gamma: None,
            step_ell: p.step_ell,
            sigma: p.sigma,
            residual_tol: p.residual_tol,
            max_iters: p.max_iters,
            max_backtracks: p.max_backtracks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    #[serde(rename = "C_grid")]
    pub c_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    /// Empty means "use the Newton gamma only".
    pub gamma_grid: Vec<f64>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 3,
            seed: 7,
            c_grid: vec![0.02, 0.1, 0.5],
            mu_grid: vec![5.0, 10.0, 20.0, 50.0],
            gamma_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Observations, one sample per row.
    pub samples: Option<PathBuf>,
    /// A precomputed sample covariance; takes precedence over `samples`.
    pub covariance: Option<PathBuf>,
    /// Output directory; overridden by the `L0FA_RUN_DIR` environment variable.
    pub out_dir: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub problem: ProblemConfig,
    pub ipm: IpmConfig,
    pub newton: NewtonConfig,
    pub baseline: BaselineConfig,
    pub cv: CvConfig,
    pub paths: PathsConfig,
}

/// Environment variable that sets the output directory.
pub const RUN_DIR_ENV: &str = "L0FA_RUN_DIR";

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| FaError::InvalidConfig {
            field: "<file>".into(),
            reason: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FaError::io(path, e))?;
        toml::from_str(&text).map_err(|e| FaError::InvalidConfig {
            field: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Output directory: the environment variable, then `paths.out_dir`,
    /// then the working directory.
    pub fn run_dir(&self) -> PathBuf {
        std::env::var_os(RUN_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.paths.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn newton_params(&self) -> NewtonParams {
        let n = &self.newton;
        NewtonParams {
            gamma: n.gamma,
            delta: n.delta,
            sigma: n.sigma,
            beta: n.beta,
            residual_tol: n.residual_tol,
            max_inner_iters: n.max_inner_iters,
            max_backtracks: n.max_backtracks,
            merit: n.merit,
        }
    }

    pub fn ipm_params(&self) -> IpmParams {
        IpmParams {
            tau0: self.ipm.tau0,
            theta: self.ipm.theta,
            epsilon: self.ipm.epsilon,
            newton: self.newton_params(),
            thresholds: RecoveryThresholds {
                rank: self.ipm.rank_threshold,
                support: self.ipm.support_threshold,
            },
        }
    }

    pub fn baseline_params(&self) -> BaselineParams {
        let b = &self.baseline;
        BaselineParams {
            gamma: b.gamma.unwrap_or(self.newton.gamma),
            step_ell: b.step_ell,
            sigma: b.sigma,
            residual_tol: b.residual_tol,
            max_iters: b.max_iters,
            max_backtracks: b.max_backtracks,
        }
    }

    /// Checks every field against its module's range, naming the first
    /// offending field as `section.field`.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.p < 2 {
            return Err(FaError::config("data.p", format!("need p >= 2, got {}", d.p)));
        }
        if d.r == 0 || d.r >= d.p {
            return Err(FaError::config(
                "data.r",
                format!("need 1 <= r < p, got r = {}, p = {}", d.r, d.p),
            ));
        }
        if d.n == 0 {
            return Err(FaError::config("data.n", "number of samples must be at least 1"));
        }
        positive("data.snr", d.snr)?;
        if !(d.density > 0.0 && d.density <= 1.0) {
            return Err(FaError::config("data.density", format!("must lie in (0, 1], got {}", d.density)));
        }
        positive("data.offdiag_min", d.offdiag_min)?;
        if d.offdiag_max < d.offdiag_min || !d.offdiag_max.is_finite() {
            return Err(FaError::config("data.offdiag_max", "must be finite and at least offdiag_min"));
        }
        positive("data.diag_margin", d.diag_margin)?;

        positive("problem.C", self.problem.c)?;
        positive("problem.mu", self.problem.mu)?;

        let i = &self.ipm;
        positive("ipm.tau0", i.tau0)?;
        positive("ipm.epsilon", i.epsilon)?;
        open_unit("ipm.theta", i.theta)?;
        nonnegative("ipm.rank_threshold", i.rank_threshold)?;
        nonnegative("ipm.support_threshold", i.support_threshold)?;

        let n = &self.newton;
        positive("newton.gamma", n.gamma)?;
        positive("newton.delta", n.delta)?;
        positive("newton.residual_tol", n.residual_tol)?;
        if !(n.sigma > 0.0 && n.sigma < 0.5) {
            return Err(FaError::config("newton.sigma", format!("must lie in (0, 1/2), got {}", n.sigma)));
        }
        open_unit("newton.beta", n.beta)?;

        let b = &self.baseline;
        if let Some(g) = b.gamma {
            positive("baseline.gamma", g)?;
        }
        positive("baseline.step_ell", b.step_ell)?;
        positive("baseline.residual_tol", b.residual_tol)?;
        open_unit("baseline.sigma", b.sigma)?;

        let cv = &self.cv;
        if cv.folds < 2 {
            return Err(FaError::config("cv.folds", format!("need at least 2 folds, got {}", cv.folds)));
        }
        if cv.c_grid.is_empty() {
            return Err(FaError::config("cv.C_grid", "grid must not be empty"));
        }
        if cv.mu_grid.is_empty() {
            return Err(FaError::config("cv.mu_grid", "grid must not be empty"));
        }
        for &v in &cv.c_grid {
            positive("cv.C_grid", v)?;
        }
        for &v in &cv.mu_grid {
            positive("cv.mu_grid", v)?;
        }
        for &v in &cv.gamma_grid {
            positive("cv.gamma_grid", v)?;
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FaError::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FaError::config(field, format!("must be nonnegative and finite, got {v}")))
    }
}

fn open_unit(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(FaError::config(field, format!("must lie in (0, 1), got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
        let p = cfg.ipm_params();
        assert_eq!((p.tau0, p.theta, p.epsilon), (0.5, 0.5, 1e-6));
        assert_eq!((p.newton.delta, p.newton.sigma, p.newton.beta), (1e-4, 5e-5, 0.5));
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.problem.c = 3.5;
        cfg.cv.gamma_grid = vec![0.1, 0.2];
        cfg.paths.samples = Some("x.csv".into());
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sections_override_fields() {
        let cfg = RunConfig::from_toml_str(
            "[problem]\nC = 2.0\nmu = 10.0\n[ipm]\ntheta = 0.8\n[baseline]\ngamma = 0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.problem.c, 2.0);
        assert_eq!(cfg.ipm_params().theta, 0.8);
        assert_eq!(cfg.baseline_params().gamma, 0.3);
        let default_gamma = RunConfig::default();
        assert_eq!(default_gamma.baseline_params().gamma, default_gamma.newton.gamma);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::from_toml_str("[problem]\nlambda = 1.0\n").is_err());
    }

    fn field_of(cfg: &RunConfig) -> String {
        match cfg.validate() {
            Err(FaError::InvalidConfig { field, .. }) => field,
            other => panic!("expected invalid config, got {other:?}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        type Mutation = Box<dyn Fn(&mut RunConfig)>;
        let cases: Vec<(&str, Mutation)> = vec![
            ("data.n", Box::new(|c| c.data.n = 0)),
            ("data.r", Box::new(|c| c.data.r = 40)),
            ("data.snr", Box::new(|c| c.data.snr = -1.0)),
            ("data.density", Box::new(|c| c.data.density = 0.0)),
            ("problem.C", Box::new(|c| c.problem.c = 0.0)),
            ("problem.mu", Box::new(|c| c.problem.mu = f64::NAN)),
            ("ipm.theta", Box::new(|c| c.ipm.theta = 1.0)),
            ("ipm.epsilon", Box::new(|c| c.ipm.epsilon = 0.0)),
            ("newton.gamma", Box::new(|c| c.newton.gamma = -0.1)),
            ("newton.sigma", Box::new(|c| c.newton.sigma = 0.5)),
            ("newton.beta", Box::new(|c| c.newton.beta = 1.5)),
            ("baseline.gamma", Box::new(|c| c.baseline.gamma = Some(0.0))),
            ("cv.folds", Box::new(|c| c.cv.folds = 1)),
            ("cv.C_grid", Box::new(|c| c.cv.c_grid.clear())),
            ("cv.mu_grid", Box::new(|c| c.cv.mu_grid = vec![1.0, -1.0])),
        ];
        for (field, mutate) in cases {
            let mut cfg = RunConfig::default();
            mutate(&mut cfg);
            assert_eq!(field_of(&cfg), field);
        }
    }
}
