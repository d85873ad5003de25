use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::models::build_model;
use super::random::{initial_state_for, random_pure_state, sample_rng};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::matrix::{min_eigenvalue, trace_norm, CMatrix};
use crate::model::LindbladModel;
use crate::oracle::ExactPropagator;
use crate::scalar::tol;
use crate::schemes::{error_constant, SchemeId, Stepper};
use crate::unraveling::{kraus_decompose, monte_carlo_density, MonteCarloEstimate};

type M = CMatrix<f64>;

/// Errors inside `[lo, hi]` enter the slope fit: above the oracle noise floor
/// and below the pre-asymptotic regime.
pub const FIT_WINDOW: (f64, f64) = (100.0 * tol::EXPM, 0.5);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub scheme: SchemeId,
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub dt: f64,
    pub mean_error: f64,
    pub stderr: f64,
    /// Smallest raw eigenvalue seen over all steps and samples.
    pub min_eig: f64,
}

/// Least-squares fit of `log error = slope · log N + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub scheme: SchemeId,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    pub n_lo: usize,
    pub n_hi: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Vec<SlopeFit>,
}

impl ConvergenceReport {
    pub fn slope(&self, scheme: SchemeId) -> Option<f64> {
        self.slopes.iter().find(|f| f.scheme == scheme).map(|f| f.slope)
    }

    pub fn row(&self, scheme: SchemeId, n_steps: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.n_steps == n_steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub scheme: SchemeId,
    pub abs_sx: f64,
    pub abs_sy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub scheme: SchemeId,
    #[serde(rename = "N")]
    pub n_steps: usize,
    /// Largest terminal error over the samples.
    pub measured_error: f64,
    pub global_bound: f64,
    pub n_min: f64,
    pub within_regime: bool,
}

impl AuditRow {
    pub fn violated(&self) -> bool {
        self.within_regime && !(self.measured_error <= self.global_bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationRow {
    pub scheme: SchemeId,
    pub step: usize,
    pub t: f64,
    pub raw_trace: f64,
    pub min_eig_raw: f64,
    /// Trace-norm distance to the exact solution at `t`.
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct UnravelReport {
    pub scheme: SchemeId,
    pub dt: f64,
    pub n_steps: usize,
    pub estimate: MonteCarloEstimate,
    /// Deterministic unnormalized propagation of `|ψ₀⟩⟨ψ₀|`.
    pub reference: M,
    pub max_z_score: f64,
}

fn initial_states(cfg: &ExperimentConfig) -> Result<Vec<M>> {
    if let Some(m) = cfg.initial_matrix()? {
        return Ok(vec![DensityMatrix::new(m)?.into_matrix()]);
    }
    if cfg.n_samples == 0 {
        return Err(Error::BadParameter("n_samples must be at least 1".into()));
    }
    Ok((0..cfg.n_samples).map(|k| initial_state_for(&cfg.model, cfg.seed, k as u64).into_matrix()).collect())
}

/// Runs `n_steps` steps and returns the final state with the smallest raw
/// eigenvalue encountered.
fn run_tracking(stepper: &Stepper<'_, f64>, n_steps: usize, rho0: &M) -> Result<(M, f64)> {
    let mut current = rho0.clone();
    let mut min_eig = f64::INFINITY;
    for k in 0..n_steps {
        let out = stepper.step(&current).map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
        min_eig = min_eig.min(out.min_eig_raw);
        current = out.state;
    }
    Ok((current, min_eig))
}

struct ErrorSamples {
    scheme: SchemeId,
    n_steps: usize,
    errors: Vec<f64>,
    min_eig: f64,
}

fn terminal_errors(cfg: &ExperimentConfig, model: &LindbladModel<f64>) -> Result<Vec<ErrorSamples>> {
    if cfg.n_values.is_empty() {
        return Err(Error::BadParameter("N_values must not be empty".into()));
    }
    let states = initial_states(cfg)?;
    let exact = ExactPropagator::new(model, cfg.t_final, tol::EXPM)?;
    let refs = states.par_iter().map(|r| exact.apply(r)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(SchemeId, usize)> =
        cfg.schemes.iter().flat_map(|&s| cfg.n_values.iter().map(move |&n| (s, n))).collect();
    jobs.par_iter()
        .map(|&(scheme, n)| {
            let stepper = Stepper::new(scheme, model, cfg.t_final / n as f64)
                .map_err(|e| e.context(format!("scheme {scheme}, N = {n}")))?;
            let runs = states
                .par_iter()
                .zip(&refs)
                .enumerate()
                .map(|(k, (rho0, reference))| {
                    let (last, min_eig) = run_tracking(&stepper, n, rho0)
                        .map_err(|e| e.context(format!("scheme {scheme}, N = {n}, sample {k}")))?;
                    Ok((trace_norm(&(&last - reference)), min_eig))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ErrorSamples {
                scheme,
                n_steps: n,
                errors: runs.iter().map(|r| r.0).collect(),
                min_eig: runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

/// Slope of `log error` against `log N` over the points inside [`FIT_WINDOW`]
/// whose `N` lies within a factor 10 of the largest such `N`.
/// `None` when fewer than two points qualify.
pub fn fit_slope(points: &[(usize, f64)]) -> Option<(f64, f64, usize, usize, usize)> {
    let in_window: Vec<(usize, f64)> =
        points.iter().copied().filter(|&(_, e)| e >= FIT_WINDOW.0 && e <= FIT_WINDOW.1).collect();
    let top = in_window.iter().map(|p| p.0).max()? as f64;
    let used: Vec<(usize, f64)> = in_window.into_iter().filter(|&(n, _)| 10.0 * n as f64 >= top).collect();
    if used.len() < 2 {
        return None;
    }
    let xy: Vec<(f64, f64)> = used.iter().map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let n_lo = used.iter().map(|p| p.0).min()?;
    let n_hi = used.iter().map(|p| p.0).max()?;
    Some((slope, my - slope * mx, used.len(), n_lo, n_hi))
}

/// Mean terminal trace-norm error against the exact solution for every
/// scheme and step count, with fitted convergence slopes.
pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let model = build_model(&cfg.model)?;
    let samples = terminal_errors(cfg, &model)?;
    let rows: Vec<ConvergenceRow> = samples
        .iter()
        .map(|s| {
            let n = s.errors.len() as f64;
            let mean = s.errors.iter().sum::<f64>() / n;
            let stderr = if s.errors.len() > 1 {
                (s.errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            ConvergenceRow {
                scheme: s.scheme,
                n_steps: s.n_steps,
                dt: cfg.t_final / s.n_steps as f64,
                mean_error: mean,
                stderr,
                min_eig: s.min_eig,
            }
        })
        .collect();
    let slopes = cfg
        .schemes
        .iter()
        .filter_map(|&scheme| {
            let pts: Vec<(usize, f64)> =
                rows.iter().filter(|r| r.scheme == scheme).map(|r| (r.n_steps, r.mean_error)).collect();
            match fit_slope(&pts) {
                Some((slope, intercept, points, n_lo, n_hi)) => {
                    Some(SlopeFit { scheme, slope, intercept, points, n_lo, n_hi })
                }
                None => {
                    log::warn!("{scheme}: fewer than two errors inside the fit window {FIT_WINDOW:?}");
                    None
                }
            }
        })
        .collect();
    Ok(ConvergenceReport { rows, slopes })
}

/// The initial state used for observable decay runs:
/// `½(I + σ_X/√6 + σ_Y/√3 + σ_Z/√2)`.
pub(crate) fn decay_initial_state() -> M {
    M::bloch(1.0 / 6f64.sqrt(), 1.0 / 3f64.sqrt(), 1.0 / 2f64.sqrt())
}

/// `|⟨σ_X⟩|` and `|⟨σ_Y⟩|` at every step for each scheme at fixed `Δt`.
pub fn observable_decay_experiment(cfg: &ExperimentConfig) -> Result<Vec<DecayRow>> {
    cfg.validate()?;
    let model = build_model(&cfg.model)?;
    if model.dim() != 2 {
        return Err(Error::DimMismatch { expected: 2, found: model.dim() });
    }
    let (dt, n) = cfg.fixed_step()?;
    let rho0 = match cfg.initial_matrix()? {
        Some(m) => DensityMatrix::new(m)?.into_matrix(),
        None => decay_initial_state(),
    };
    let (sx, sy) = (M::sigma_x(), M::sigma_y());
    let per_scheme = cfg
        .schemes
        .par_iter()
        .map(|&scheme| {
            let stepper = Stepper::new(scheme, &model, dt)?;
            let mut rows = Vec::with_capacity(n + 1);
            let mut rho = rho0.clone();
            for k in 0..=n {
                if k > 0 {
                    rho = stepper
                        .step(&rho)
                        .map_err(|e| Error::StepFailed { step: k - 1, source: Box::new(e) })
                        .map_err(|e| e.context(format!("scheme {scheme}")))?
                        .state;
                }
                rows.push(DecayRow {
                    t: k as f64 * dt,
                    scheme,
                    abs_sx: rho.trace_product(&sx).re.abs(),
                    abs_sy: rho.trace_product(&sy).re.abs(),
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_scheme.into_iter().flatten().collect())
}

/// Worst terminal error per `(scheme, N)` next to the global error bound.
pub fn audit_rows(cfg: &ExperimentConfig) -> Result<Vec<AuditRow>> {
    cfg.validate()?;
    let model = build_model(&cfg.model)?;
    let constants =
        cfg.schemes.iter().map(|&s| error_constant::<f64>(s, &model).map(|c| (s, c))).collect::<Result<Vec<_>>>()?;
    let samples = terminal_errors(cfg, &model)?;
    Ok(samples
        .iter()
        .map(|s| {
            let c = constants.iter().find(|(id, _)| *id == s.scheme).expect("constant for every scheme").1;
            let n_min = c.min_steps(cfg.t_final);
            AuditRow {
                scheme: s.scheme,
                n_steps: s.n_steps,
                measured_error: s.errors.iter().copied().fold(0.0, f64::max),
                global_bound: c.global_bound(cfg.t_final, s.n_steps),
                n_min,
                within_regime: s.n_steps as f64 >= n_min,
            }
        })
        .collect())
}

/// [`audit_rows`], failing with `BoundViolation` if any row inside the
/// admissible regime exceeds its bound.
pub fn bound_audit(cfg: &ExperimentConfig) -> Result<Vec<AuditRow>> {
    let rows = audit_rows(cfg)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.violated())
        .map(|r| format!("{} N={} error {:e} > bound {:e}", r.scheme, r.n_steps, r.measured_error, r.global_bound))
        .collect();
    if bad.is_empty() {
        Ok(rows)
    } else {
        Err(Error::BoundViolation(bad.join("; ")))
    }
}

/// Step-by-step diagnostics of each scheme against the exact solution.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<SimulationRow>> {
    cfg.validate()?;
    let model = build_model(&cfg.model)?;
    let (dt, n) = cfg.fixed_step()?;
    let rho0 = initial_states(cfg)?.swap_remove(0);
    let exact_step = ExactPropagator::new(&model, dt, tol::EXPM)?;
    let mut exact = Vec::with_capacity(n + 1);
    exact.push(rho0.clone());
    for k in 0..n {
        let next = exact_step.apply(&exact[k])?;
        exact.push(next);
    }
    let per_scheme = cfg
        .schemes
        .par_iter()
        .map(|&scheme| {
            let stepper = Stepper::new(scheme, &model, dt)?;
            let mut rows = Vec::with_capacity(n + 1);
            rows.push(SimulationRow {
                scheme,
                step: 0,
                t: 0.0,
                raw_trace: rho0.trace().re,
                min_eig_raw: min_eigenvalue(&rho0)?,
                error: 0.0,
            });
            let mut rho = rho0.clone();
            for k in 1..=n {
                let out = stepper
                    .step(&rho)
                    .map_err(|e| Error::StepFailed { step: k - 1, source: Box::new(e) })
                    .map_err(|e| e.context(format!("scheme {scheme}")))?;
                rows.push(SimulationRow {
                    scheme,
                    step: k,
                    t: k as f64 * dt,
                    raw_trace: out.raw_trace,
                    min_eig_raw: out.min_eig_raw,
                    error: trace_norm(&(&out.state - &exact[k])),
                });
                rho = out.state;
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_scheme.into_iter().flatten().collect())
}

/// Monte Carlo unraveling of the first scheme in `cfg` at fixed `Δt`,
/// compared with the deterministic unnormalized iteration.
pub fn unravel_experiment(cfg: &ExperimentConfig) -> Result<UnravelReport> {
    cfg.validate()?;
    let model = build_model(&cfg.model)?;
    let scheme = cfg.schemes[0];
    let (dt, n) = cfg.fixed_step()?;
    let psi0: Vec<Complex64> = match &cfg.psi0 {
        Some(v) => v.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        None => random_pure_state(model.dim(), &mut sample_rng(!cfg.seed, 0)),
    };
    let dec = kraus_decompose(scheme, &model, dt)?;
    let estimate = monte_carlo_density(&dec, &psi0, n, cfg.n_traj, cfg.seed)?;
    let norm_sq: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    let mut reference = M::outer(&psi0).scale_re(1.0 / norm_sq);
    for _ in 0..n {
        reference = dec.apply(&reference)?;
    }
    let max_z_score = estimate.max_z_score(&reference, 1e-12 * reference.max_abs().max(1.0));
    Ok(UnravelReport { scheme, dt, n_steps: n, estimate, reference, max_z_score })
}
