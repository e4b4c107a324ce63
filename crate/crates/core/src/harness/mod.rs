//! File-level commands behind the `l0fa` binary: `generate`, `solve`,
//! `compare` and `cv`. Each takes a validated [`RunConfig`] and an output
//! directory and returns a report; the binary only parses flags and prints.

pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baseline::{bcd_solve, BaselineRun};
use crate::datagen::{generate_ground_truth, sample_observations, GroundTruth};
use crate::error::{FaError, Result};
use crate::ipm::{default_init, ipm_solve, IpmStatus, Solution};
use crate::linalg::{trace_product, SpdFactor};
use crate::objective::{sample_covariance_rows, BarrierObjective, Iterate, ProblemData};
use crate::prox::{check_gamma_stationary, stationarity_residual};

pub use config::RunConfig;

/// Where the problem's sample covariance comes from.
#[derive(Debug, Clone)]
pub enum Input {
    Covariance(DMatrix<f64>),
    Samples(DMatrix<f64>),
}

impl Input {
    /// Reads `paths.covariance` or `paths.samples`; with neither set, draws
    /// the instance described by the `data` section.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        if let Some(path) = &cfg.paths.covariance {
            return Ok(Input::Covariance(io::read_matrix_csv(path)?));
        }
        if let Some(path) = &cfg.paths.samples {
            return Ok(Input::Samples(io::read_matrix_csv(path)?));
        }
        let (_, samples) = draw_instance(cfg)?;
        Ok(Input::Samples(samples))
    }

    pub fn sample_covariance(&self) -> Result<DMatrix<f64>> {
        match self {
            Input::Covariance(c) => Ok(c.clone()),
            Input::Samples(y) => {
                if y.nrows() < y.ncols() {
                    return Err(FaError::InfeasibleData(format!(
                        "{} samples in dimension {} give a singular sample covariance",
                        y.nrows(),
                        y.ncols()
                    )));
                }
                sample_covariance_rows(y)
            }
        }
    }
}

/// The ground truth and samples described by the `data` section.
pub fn draw_instance(cfg: &RunConfig) -> Result<(GroundTruth, DMatrix<f64>)> {
    let d = &cfg.data;
    let truth = generate_ground_truth(d.p, d.r, &d.noise_shape(), d.snr, d.seed)?;
    let samples = sample_observations(&truth, d.n, d.sample_seed())?;
    Ok((truth, samples))
}

pub fn problem_from_config(cfg: &RunConfig, input: &Input) -> Result<ProblemData> {
    ProblemData::new(input.sample_covariance()?, cfg.problem.c, cfg.problem.mu)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateReport {
    pub p: usize,
    pub r: usize,
    pub n: usize,
    pub snr: f64,
    pub seed: u64,
    pub offdiag_support: Vec<(usize, usize)>,
    pub files: Vec<PathBuf>,
}

pub fn cli_generate(cfg: &RunConfig, out: &Path) -> Result<GenerateReport> {
    cfg.validate()?;
    let (truth, samples) = draw_instance(cfg)?;
    let files = vec![
        out.join("samples.csv"),
        out.join("loading.csv"),
        out.join("l_hat.csv"),
        out.join("s_hat.csv"),
        out.join("sigma_hat.csv"),
        out.join("truth.json"),
    ];
    io::write_matrix_csv(&files[0], &samples)?;
    io::write_matrix_csv(&files[1], &truth.loading)?;
    io::write_matrix_csv(&files[2], &truth.l_hat)?;
    io::write_matrix_csv(&files[3], &truth.s_hat)?;
    io::write_matrix_csv(&files[4], &truth.sigma_hat)?;
    let report = GenerateReport {
        p: truth.p(),
        r: truth.r,
        n: samples.nrows(),
        snr: truth.snr(),
        seed: cfg.data.seed,
        offdiag_support: truth.offdiag_support(),
        files: files.clone(),
    };
    io::write_json(&files[5], &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub status: String,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    pub final_tau: Option<f64>,
    pub final_residual: f64,
    pub gamma_stationary: bool,
    pub rank_estimate: usize,
    pub support_size: usize,
    pub offdiag_support_size: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub mu: f64,
    pub gamma: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Solution,
    pub summary: SolveSummary,
    pub files: Vec<PathBuf>,
}

impl SolveReport {
    /// 0 on convergence, 4 when the run stopped on a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.solution.status {
            IpmStatus::Converged => 0,
            _ => 4,
        }
    }
}

/// Tolerance of the stationarity certificate in run summaries.
pub const CERTIFICATE_TOL: f64 = 1e-3;

fn summarize(cfg: &RunConfig, problem: &ProblemData, sol: &Solution) -> Result<SolveSummary> {
    let tau = sol.final_tau.unwrap_or(cfg.ipm.tau0);
    let barrier = BarrierObjective::new(problem.clone(), tau)?;
    let gamma = cfg.newton.gamma;
    let residual = stationarity_residual(&sol.final_iterate, &barrier, gamma)?;
    let report = check_gamma_stationary(&sol.final_iterate, &barrier, gamma, CERTIFICATE_TOL)?;
    Ok(SolveSummary {
        status: sol.status.as_str().into(),
        outer_iterations: sol.outer_iterations(),
        total_inner_iterations: sol.total_inner_iterations(),
        final_tau: sol.final_tau,
        final_residual: residual.normalized(),
        gamma_stationary: report.is_stationary,
        rank_estimate: sol.rank_estimate,
        support_size: sol.support.len(),
        offdiag_support_size: sol.offdiag_support().len(),
        c: problem.c(),
        mu: problem.mu(),
        gamma,
        theta: cfg.ipm.theta,
    })
}

pub fn cli_solve(cfg: &RunConfig, out: &Path) -> Result<SolveReport> {
    cfg.validate()?;
    let input = Input::from_config(cfg)?;
    let problem = problem_from_config(cfg, &input)?;
    let (l0, s0) = default_init(&problem);
    let solution = ipm_solve(&problem, (&l0, &s0), &cfg.ipm_params())?;
    let summary = summarize(cfg, &problem, &solution)?;

    let trace_path = cfg
        .paths
        .trace_out
        .clone()
        .unwrap_or_else(|| out.join("trace.csv"));
    let files = vec![
        out.join("l_star.csv"),
        out.join("s_star.csv"),
        trace_path,
        out.join("solution.json"),
    ];
    io::write_matrix_csv(&files[0], &solution.l_star)?;
    io::write_matrix_csv(&files[1], &solution.s_star)?;
    io::write_trace_csv(&files[2], &solution.traces)?;
    io::write_json(&files[3], &summary)?;
    Ok(SolveReport {
        solution,
        summary,
        files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub status: String,
    /// Steps taken until the residual first reached the tolerance, if ever.
    pub iterations_to_tol: Option<usize>,
    pub iterations_total: usize,
    pub final_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub residual_tol: f64,
    pub baseline_tau: f64,
    pub note: &'static str,
    pub ipm: SolverSummary,
    pub bcd: SolverSummary,
    /// `bcd.iterations_to_tol / ipm.iterations_to_tol`, using the baseline's
    /// iteration cap when it never reached the tolerance.
    pub speedup_lower_bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub ipm: Solution,
    pub bcd: BaselineRun,
    pub summary: CompareSummary,
    pub files: Vec<PathBuf>,
}

pub const COMPARE_NOTE: &str =
    "the baseline minimizes the barrier problem with tau fixed to the IPM's final tau, from the same initial point";

pub fn cli_compare(cfg: &RunConfig, out: &Path) -> Result<CompareReport> {
    cfg.validate()?;
    let input = Input::from_config(cfg)?;
    let problem = problem_from_config(cfg, &input)?;
    let (l0, s0) = default_init(&problem);
    let ipm = ipm_solve(&problem, (&l0, &s0), &cfg.ipm_params())?;
    let tau = ipm.final_tau.unwrap_or(cfg.ipm.tau0);
    let barrier = BarrierObjective::new(problem.clone(), tau)?;
    let init = Iterate::from_matrices(problem.basis(), &l0, &s0)?;
    let params = cfg.baseline_params();
    let bcd = bcd_solve(init, &barrier, &params)?;

    let tol = cfg.newton.residual_tol;
    let ipm_converged = ipm.status == IpmStatus::Converged;
    let ipm_summary = SolverSummary {
        status: ipm.status.as_str().into(),
        iterations_to_tol: ipm_converged.then(|| ipm.total_inner_iterations()),
        iterations_total: ipm.total_inner_iterations(),
        final_residual: ipm.traces.last_residual().unwrap_or(f64::NAN),
    };
    let bcd_summary = SolverSummary {
        status: bcd.status.as_str().into(),
        iterations_to_tol: bcd.trace.steps_to_residual(params.residual_tol),
        iterations_total: bcd.iterations(),
        final_residual: bcd.residual.normalized(),
    };
    let speedup = ipm_summary.iterations_to_tol.map(|n| {
        let b = bcd_summary.iterations_to_tol.unwrap_or(params.max_iters);
        b as f64 / n.max(1) as f64
    });
    let summary = CompareSummary {
        residual_tol: tol,
        baseline_tau: tau,
        note: COMPARE_NOTE,
        ipm: ipm_summary,
        bcd: bcd_summary,
        speedup_lower_bound: speedup,
    };
    let files = vec![
        out.join("ipm_trace.csv"),
        out.join("bcd_trace.csv"),
        out.join("summary.json"),
    ];
    io::write_trace_csv(&files[0], &ipm.traces)?;
    io::write_trace_csv(&files[1], &bcd.trace)?;
    io::write_json(&files[2], &summary)?;
    Ok(CompareReport {
        ipm,
        bcd,
        summary,
        files,
    })
}

/// Held-out Gaussian negative log-likelihood per sample, without constants:
/// `(log det sigma + tr(sigma^{-1} sigma_val)) / 2`.
pub fn heldout_nll(sigma: &DMatrix<f64>, sigma_val: &DMatrix<f64>) -> Result<f64> {
    let f = SpdFactor::new(sigma)
        .ok_or_else(|| FaError::InfeasiblePoint("fitted covariance is not positive definite".into()))?;
    Ok(0.5 * (f.log_det() + trace_product(f.inverse(), sigma_val)))
}

/// Splits `0..n` into `k` shuffled folds of near-equal size.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

fn select_rows(y: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), y.ncols(), |i, j| y[(rows[i], j)])
}

#[derive(Debug, Clone, Serialize)]
pub struct CvRow {
    #[serde(rename = "C")]
    pub c: f64,
    pub mu: f64,
    pub gamma: f64,
    /// Mean held-out score; `+inf` if any fold failed.
    pub score: f64,
    pub fold_scores: Vec<f64>,
    pub statuses: Vec<String>,
}

impl CvRow {
    pub fn all_converged(&self) -> bool {
        self.statuses.iter().all(|s| s == IpmStatus::Converged.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub best: CvRow,
    pub table: Vec<CvRow>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

pub fn cli_cv(cfg: &RunConfig, out: &Path) -> Result<CvReport> {
    cfg.validate()?;
    let samples = match Input::from_config(cfg)? {
        Input::Samples(y) => y,
        Input::Covariance(_) => {
            return Err(FaError::config(
                "paths.samples",
                "cross-validation needs samples, not a covariance",
            ))
        }
    };
    let p = samples.ncols();
    let k = cfg.cv.folds;
    if samples.nrows() < k {
        return Err(FaError::config(
            "cv.folds",
            format!("{k} folds need at least {k} samples, got {}", samples.nrows()),
        ));
    }
    let folds = fold_indices(samples.nrows(), k, cfg.cv.seed);
    let mut warnings = Vec::new();
    if folds.iter().any(|f| f.len() < p) {
        warnings.push(format!(
            "a validation fold has fewer than p = {p} samples; its sample covariance is singular but scoring only factors the fitted model"
        ));
    }

    let mut splits = Vec::with_capacity(k);
    for (v, val) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != v)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train_y = select_rows(&samples, &train);
        if train_y.nrows() < p {
            return Err(FaError::InfeasibleData(format!(
                "training folds hold {} samples, fewer than p = {p}",
                train_y.nrows()
            )));
        }
        splits.push((
            sample_covariance_rows(&train_y)?,
            sample_covariance_rows(&select_rows(&samples, val))?,
        ));
    }

    let gammas = if cfg.cv.gamma_grid.is_empty() {
        vec![cfg.newton.gamma]
    } else {
        cfg.cv.gamma_grid.clone()
    };
    let mut table = Vec::new();
    for &c in &cfg.cv.c_grid {
        for &mu in &cfg.cv.mu_grid {
            for &gamma in &gammas {
                let mut params = cfg.ipm_params();
                params.newton.gamma = gamma;
                let mut fold_scores = Vec::with_capacity(k);
                let mut statuses = Vec::with_capacity(k);
                for (train, val) in &splits {
                    let problem = ProblemData::new(train.clone(), c, mu)?;
                    let (l0, s0) = default_init(&problem);
                    match ipm_solve(&problem, (&l0, &s0), &params) {
                        Ok(sol) => {
                            statuses.push(sol.status.as_str().to_string());
                            let sigma = &sol.l_star + &sol.s_star;
                            fold_scores.push(heldout_nll(&sigma, val).unwrap_or(f64::INFINITY));
                        }
                        Err(e) => {
                            statuses.push(format!("error: {e}"));
                            fold_scores.push(f64::INFINITY);
                        }
                    }
                }
                let score = fold_scores.iter().sum::<f64>() / k as f64;
                table.push(CvRow {
                    c,
                    mu,
                    gamma,
                    score,
                    fold_scores,
                    statuses,
                });
            }
        }
    }
    // Grid points whose folds all converged rank ahead of the rest.
    let best = table
        .iter()
        .filter(|r| r.score.is_finite())
        .min_by(|a, b| {
            b.all_converged()
                .cmp(&a.all_converged())
                .then(a.score.total_cmp(&b.score))
        })
        .or_else(|| table.first())
        .cloned()
        .expect("grid is nonempty");

    let files = vec![out.join("cv_scores.csv"), out.join("cv.json")];
    write_cv_table(&files[0], &table)?;
    let report = CvReport {
        best,
        table,
        warnings,
        files: files.clone(),
    };
    io::write_json(&files[1], &report)?;
    Ok(report)
}

fn write_cv_table(path: &Path, table: &[CvRow]) -> Result<()> {
    let mut text = String::from("C,mu,gamma,score\n");
    for r in table {
        text.push_str(&format!(
            "{},{},{},{}\n",
            io::format_f64(r.c),
            io::format_f64(r.mu),
            io::format_f64(r.gamma),
            io::format_f64(r.score)
        ));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| FaError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| FaError::io(path, e))
}
