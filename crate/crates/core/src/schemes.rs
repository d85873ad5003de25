//! One-step integrators and fixed-step propagation.
//!
//! The structure-preserving schemes are sums of Kraus maps built from the
//! truncated propagators `P_α(τ) = Σ_{k≤α} (Jτ)^k / k!` and the jump map
//! `ℒ_L`, so their unnormalized output is positive semidefinite for any step.
//! The Taylor/RK baselines apply the full generator and are not.

use std::fmt;
use std::str::FromStr;

use crate::density::DensityMatrix;
use crate::eigen::hermitian_eigs_unchecked;
use crate::error::{Error, Result};
use crate::matrix::{kraus_apply, truncated_exp_poly, CMatrix};
use crate::model::LindbladModel;
use crate::scalar::{tol, Real};

/// Default upper bound on the number of quadrature tuples in one SPM step.
pub const DEFAULT_TERM_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    /// First-order Kraus scheme.
    Sp1,
    /// Second order, trapezoidal quadrature of the single jump integral.
    Sp2Tr,
    /// Second order, midpoint quadrature of the single jump integral.
    Sp2Mp,
    /// Arbitrary order `M ≥ 3` with nested midpoint grids.
    Spm(usize),
    /// `M`-term Taylor expansion of `e^{ℒΔt}`.
    Rk(usize),
}

impl SchemeId {
    pub fn order(self) -> usize {
        match self {
            SchemeId::Sp1 => 1,
            SchemeId::Sp2Tr | SchemeId::Sp2Mp => 2,
            SchemeId::Spm(m) | SchemeId::Rk(m) => m,
        }
    }

    /// Whether the scheme is a sum of Kraus maps and is renormalized after each step.
    pub fn is_structure_preserving(self) -> bool {
        !matches!(self, SchemeId::Rk(_))
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            SchemeId::Spm(m) if m < 3 => Err(Error::BadScheme(format!("spm:{m} (order must be at least 3)"))),
            SchemeId::Rk(0) => Err(Error::BadScheme("rk:0 (order must be at least 1)".into())),
            s => Ok(s),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::Sp1 => write!(f, "sp1"),
            SchemeId::Sp2Tr => write!(f, "sp2tr"),
            SchemeId::Sp2Mp => write!(f, "sp2mp"),
            SchemeId::Spm(m) => write!(f, "spm:{m}"),
            SchemeId::Rk(m) => write!(f, "rk:{m}"),
        }
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parsed = match lower.as_str() {
            "sp1" => SchemeId::Sp1,
            "sp2tr" => SchemeId::Sp2Tr,
            "sp2mp" => SchemeId::Sp2Mp,
            other => {
                let (kind, order) = other.split_once(':').ok_or_else(|| Error::BadScheme(s.into()))?;
                let order: usize = order.parse().map_err(|_| Error::BadScheme(s.into()))?;
                match kind {
                    "spm" => SchemeId::Spm(order),
                    "rk" => SchemeId::Rk(order),
                    _ => return Err(Error::BadScheme(s.into())),
                }
            }
        };
        parsed.validate()
    }
}

impl serde::Serialize for SchemeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SchemeId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Result of one (possibly normalized) step.
#[derive(Clone, Debug)]
pub struct StepOutcome<T: Real> {
    /// Normalized state for Kraus schemes, raw output for RK.
    pub state: CMatrix<T>,
    /// Trace of the unnormalized output.
    pub raw_trace: T,
    /// Smallest eigenvalue of the unnormalized output.
    pub min_eig_raw: T,
}

impl<T: Real> StepOutcome<T> {
    /// Validates the state as a density matrix.
    pub fn density(&self) -> Result<DensityMatrix<T>> {
        DensityMatrix::new(self.state.clone())
    }
}

/// Midpoints `r_j = (j - ½) Δt / N` of one level of the nested quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid<T: Real> {
    pub level: usize,
    pub n_points: usize,
    pub midpoints: Vec<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn new(level: usize, n_points: usize, dt: T) -> Self {
        let h = dt / T::lit(n_points as f64);
        let midpoints = (0..n_points).map(|j| (T::lit(j as f64) + T::lit(0.5)) * h).collect();
        Self { level, n_points, midpoints }
    }

    /// `N_m = ⌈Δt^{m-M}⌉`
    pub fn auto(level: usize, order: usize, dt: T) -> Self {
        Self::new(level, auto_grid_size(level, order, dt.as_f64()), dt)
    }
}

fn auto_grid_size(level: usize, order: usize, dt: f64) -> usize {
    let n = dt.powi(level as i32 - order as i32).ceil();
    if n.is_finite() && n >= 1.0 {
        n.min(usize::MAX as f64) as usize
    } else {
        1
    }
}

/// Tuning knobs for the arbitrary-order scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct SpmOptions {
    /// Grid sizes for levels `1..M-1`; `None` uses `⌈Δt^{m-M}⌉`.
    pub grid_points: Option<Vec<usize>>,
    pub term_cap: u128,
}

impl Default for SpmOptions {
    fn default() -> Self {
        Self { grid_points: None, term_cap: DEFAULT_TERM_CAP }
    }
}

impl SpmOptions {
    /// Grid size per level `m = 1..M-1`, after checking the term cap.
    pub fn grid_sizes(&self, order: usize, dt: f64) -> Result<Vec<usize>> {
        if order < 2 {
            return Err(Error::BadScheme(format!("spm:{order}")));
        }
        let sizes = match &self.grid_points {
            Some(v) => {
                if v.len() != order - 1 || v.iter().any(|&n| n == 0) {
                    return Err(Error::BadParameter(format!("expected {} positive grid sizes, got {v:?}", order - 1)));
                }
                v.clone()
            }
            None => (1..order).map(|m| auto_grid_size(m, order, dt)).collect(),
        };
        let count = spm_term_count(&sizes);
        if count > self.term_cap {
            return Err(Error::TermExplosion { count, cap: self.term_cap });
        }
        Ok(sizes)
    }
}

/// Number of non-decreasing index tuples over all levels:
/// `Σ_m C(N_m + m - 1, m)`, saturating at `u128::MAX`.
pub fn spm_term_count(sizes: &[usize]) -> u128 {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| multiset_count(n as u128, i as u128 + 1))
        .fold(0u128, |a, b| a.saturating_add(b))
}

fn multiset_count(n: u128, m: u128) -> u128 {
    // C(n + m - 1, m) built incrementally; each partial product is an integer.
    let mut c: u128 = 1;
    for k in 1..=m {
        c = match c.checked_mul(n + k - 1) {
            Some(v) => v / k,
            None => return u128::MAX,
        };
    }
    c
}

/// One quadrature node of the nested midpoint rule.
#[derive(Clone, Debug, PartialEq)]
pub struct SpmTerm {
    pub level: usize,
    pub weight: f64,
    /// `r_{j_1} ≤ … ≤ r_{j_m}`
    pub times: Vec<f64>,
}

/// Lists every `(weight, times)` node for levels `1..M-1`.
///
/// A non-decreasing tuple `j_1 ≤ … ≤ j_m` carries weight
/// `(Δt/N_m)^m / Π_g c_g!` with `c_g` the multiplicities of repeated indices.
pub fn enumerate_spm_terms(order: usize, dt: f64, options: &SpmOptions) -> Result<Vec<SpmTerm>> {
    if order < 3 {
        return Err(Error::BadScheme(format!("spm:{order}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStepSize(dt));
    }
    let sizes = options.grid_sizes(order, dt)?;
    let mut out = Vec::new();
    for (idx, &n) in sizes.iter().enumerate() {
        let m = idx + 1;
        let grid = QuadratureGrid::<f64>::new(m, n, dt);
        let cell = (dt / n as f64).powi(m as i32);
        let mut tuple = vec![0usize; m];
        loop {
            let mut denom = 1.0;
            let mut run = 1.0;
            for k in 1..m {
                if tuple[k] == tuple[k - 1] {
                    run += 1.0;
                    denom *= run;
                } else {
                    run = 1.0;
                }
            }
            out.push(SpmTerm {
                level: m,
                weight: cell / denom,
                times: tuple.iter().map(|&j| grid.midpoints[j]).collect(),
            });
            // next non-decreasing tuple
            let mut pos = m;
            while pos > 0 && tuple[pos - 1] == n - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            tuple[pos - 1] += 1;
            let v = tuple[pos - 1];
            for t in tuple.iter_mut().skip(pos) {
                *t = v;
            }
        }
    }
    Ok(out)
}

/// Precomputed polynomials for one level of the nested quadrature.
#[derive(Clone, Debug)]
struct SpmLevel<T: Real> {
    m: usize,
    n: usize,
    h: T,
    /// `P_{M-m}((k + ½) h)`, `k = 0..n`
    half_steps: Vec<CMatrix<T>>,
    /// `P_{M-m}(k h)`, `k = 0..n`; only needed when `m ≥ 2`
    whole_steps: Vec<CMatrix<T>>,
}

#[derive(Clone, Debug)]
enum Plan<T: Real> {
    Sp1 { p1: CMatrix<T> },
    Sp2Tr { p2: CMatrix<T>, p1: CMatrix<T> },
    Sp2Mp { p2: CMatrix<T>, mid: CMatrix<T> },
    Spm { top: CMatrix<T>, levels: Vec<SpmLevel<T>>, order: usize },
    Rk { order: usize },
}

/// A scheme bound to a model and a step size, with its polynomials cached.
#[derive(Clone, Debug)]
pub struct Stepper<'a, T: Real> {
    scheme: SchemeId,
    model: &'a LindbladModel<T>,
    dt: T,
    plan: Plan<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(scheme: SchemeId, model: &'a LindbladModel<T>, dt: T) -> Result<Self> {
        Self::with_options(scheme, model, dt, &SpmOptions::default())
    }

    pub fn with_options(scheme: SchemeId, model: &'a LindbladModel<T>, dt: T, options: &SpmOptions) -> Result<Self> {
        let scheme = scheme.validate()?;
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidStepSize(dt.as_f64()));
        }
        let j = model.j_matrix();
        let plan = match scheme {
            SchemeId::Sp1 => Plan::Sp1 { p1: truncated_exp_poly(&j, dt, 1) },
            SchemeId::Sp2Tr => Plan::Sp2Tr { p2: truncated_exp_poly(&j, dt, 2), p1: truncated_exp_poly(&j, dt, 1) },
            SchemeId::Sp2Mp => {
                Plan::Sp2Mp { p2: truncated_exp_poly(&j, dt, 2), mid: truncated_exp_poly(&j, dt * T::lit(0.5), 1) }
            }
            SchemeId::Spm(order) => spm_plan(&j, order, dt, options)?,
            SchemeId::Rk(order) => Plan::Rk { order },
        };
        Ok(Self { scheme, model, dt, plan })
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// The scheme's linear map before any normalization.
    pub fn apply_unnormalized(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        rho.check_dim(self.model.dim())?;
        let model = self.model;
        let dt = self.dt;
        let half = T::lit(0.5);
        let out = match &self.plan {
            Plan::Sp1 { p1 } => {
                let mut out = kraus_apply(p1, rho)?;
                out.axpy(dt, &model.ll_apply(rho)?);
                out
            }
            Plan::Sp2Tr { p2, p1 } => {
                let l_rho = model.ll_apply(rho)?;
                let mut out = kraus_apply(p2, rho)?;
                out.axpy(dt * half, &kraus_apply(p1, &l_rho)?);
                out.axpy(dt * half, &model.ll_apply(&kraus_apply(p1, rho)?)?);
                out.axpy(dt * dt * half, &model.ll_apply(&l_rho)?);
                out
            }
            Plan::Sp2Mp { p2, mid } => {
                let mut out = kraus_apply(p2, rho)?;
                out.axpy(dt, &kraus_apply(mid, &model.ll_apply(&kraus_apply(mid, rho)?)?)?);
                out.axpy(dt * dt * half, &model.ll_apply(&model.ll_apply(rho)?)?);
                out
            }
            Plan::Spm { top, levels, order } => {
                let mut out = kraus_apply(top, rho)?;
                for level in levels {
                    out += &spm_level_sum(model, level, rho)?;
                }
                let mut jumps = rho.clone();
                for _ in 0..*order {
                    jumps = model.ll_apply(&jumps)?;
                }
                out.axpy(dt.powi(*order as i32) / factorial::<T>(*order), &jumps);
                out
            }
            Plan::Rk { order } => {
                let mut out = rho.clone();
                let mut term = rho.clone();
                for m in 1..=*order {
                    term = model.lindbladian_apply(&term)?.scale_re(dt / T::lit(m as f64));
                    out += &term;
                }
                out
            }
        };
        Ok(out)
    }

    /// One step; Kraus schemes are renormalized, RK output passes through.
    pub fn step(&self, rho: &CMatrix<T>) -> Result<StepOutcome<T>> {
        let raw = self.apply_unnormalized(rho)?;
        if !raw.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.scheme.is_structure_preserving() {
            normalize(&raw)
        } else {
            let min_eig_raw = min_eig_hermitized(&raw);
            if min_eig_raw < -T::tol(tol::RK_INDEFINITE) {
                log::warn!("{} produced an indefinite state (min eigenvalue {min_eig_raw:e})", self.scheme);
            }
            Ok(StepOutcome { raw_trace: raw.trace().re, min_eig_raw, state: raw })
        }
    }
}

fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

fn spm_plan<T: Real>(j: &CMatrix<T>, order: usize, dt: T, options: &SpmOptions) -> Result<Plan<T>> {
    let sizes = options.grid_sizes(order, dt.as_f64())?;
    let levels = sizes
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let m = idx + 1;
            let alpha = order - m;
            let h = dt / T::lit(n as f64);
            let half_steps =
                (0..n).map(|k| truncated_exp_poly(j, (T::lit(k as f64) + T::lit(0.5)) * h, alpha)).collect();
            let whole_steps = if m >= 2 {
                (0..n).map(|k| truncated_exp_poly(j, T::lit(k as f64) * h, alpha)).collect()
            } else {
                Vec::new()
            };
            SpmLevel { m, n, h, half_steps, whole_steps }
        })
        .collect();
    Ok(Plan::Spm { top: truncated_exp_poly(j, dt, order), levels, order })
}

/// `Σ_{j_1 ≤ … ≤ j_m} w_j ℱ_m^M(r_{j_m}, …, r_{j_1})(ρ)`, walking the tuples
/// depth-first so that every shared prefix is evaluated once.
fn spm_level_sum<T: Real>(model: &LindbladModel<T>, level: &SpmLevel<T>, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
    let mut acc = CMatrix::zeros(rho.dim());
    let cell = level.h.powi(level.m as i32);
    for j in 0..level.n {
        let x = kraus_apply(&level.half_steps[j], rho)?;
        extend(model, level, 1, j, 1, T::one(), &x, cell, &mut acc)?;
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn extend<T: Real>(
    model: &LindbladModel<T>,
    level: &SpmLevel<T>,
    depth: usize,
    last: usize,
    run: usize,
    weight: T,
    x: &CMatrix<T>,
    cell: T,
    acc: &mut CMatrix<T>,
) -> Result<()> {
    let y = model.ll_apply(x)?;
    if depth == level.m {
        let tail = kraus_apply(&level.half_steps[level.n - 1 - last], &y)?;
        acc.axpy(weight * cell, &tail);
        return Ok(());
    }
    for j in last..level.n {
        let next_run = if j == last { run + 1 } else { 1 };
        let next_weight = weight / T::lit(next_run as f64);
        let x_next = kraus_apply(&level.whole_steps[j - last], &y)?;
        extend(model, level, depth + 1, j, next_run, next_weight, &x_next, cell, acc)?;
    }
    Ok(())
}

fn min_eig_hermitized<T: Real>(m: &CMatrix<T>) -> T {
    hermitian_eigs_unchecked(&m.hermitize()).first().copied().unwrap_or(T::nan())
}

/// Unnormalized output of one step.
pub fn step_unnormalized<T: Real>(
    scheme: SchemeId,
    model: &LindbladModel<T>,
    dt: T,
    rho: &CMatrix<T>,
) -> Result<CMatrix<T>> {
    Stepper::new(scheme, model, dt)?.apply_unnormalized(rho)
}

/// `σ / Tr σ`, keeping the raw trace and smallest raw eigenvalue.
pub fn normalize<T: Real>(sigma: &CMatrix<T>) -> Result<StepOutcome<T>> {
    let raw_trace = sigma.trace().re;
    if !(raw_trace > T::tol(tol::TRACE_FLOOR)) {
        return Err(Error::NonPositiveTrace(raw_trace.as_f64()));
    }
    let herm = sigma.hermitize();
    let min_eig_raw = hermitian_eigs_unchecked(&herm).first().copied().unwrap_or(T::nan());
    Ok(StepOutcome { state: herm.scale_re(T::one() / raw_trace), raw_trace, min_eig_raw })
}

/// One step of `scheme`.
pub fn step<T: Real>(scheme: SchemeId, model: &LindbladModel<T>, dt: T, rho: &CMatrix<T>) -> Result<StepOutcome<T>> {
    Stepper::new(scheme, model, dt)?.step(rho)
}

/// Final state of a fixed-step run, and optionally every state along the way.
#[derive(Clone, Debug)]
pub struct Propagation<T: Real> {
    pub last: StepOutcome<T>,
    /// `ρ_0, ρ_1, …, ρ_N` when recording was requested.
    pub trajectory: Option<Vec<CMatrix<T>>>,
}

/// Applies `N` steps of size `T / N`.
pub fn propagate<T: Real>(
    scheme: SchemeId,
    model: &LindbladModel<T>,
    t_final: T,
    n_steps: usize,
    rho0: &CMatrix<T>,
    record: bool,
) -> Result<Propagation<T>> {
    propagate_with(&Stepper::new(scheme, model, t_final / T::lit(n_steps.max(1) as f64))?, n_steps, rho0, record)
}

/// [`propagate`] with a prepared stepper.
pub fn propagate_with<T: Real>(
    stepper: &Stepper<'_, T>,
    n_steps: usize,
    rho0: &CMatrix<T>,
    record: bool,
) -> Result<Propagation<T>> {
    if n_steps == 0 {
        return Err(Error::BadParameter("number of steps must be at least 1".into()));
    }
    let mut trajectory = record.then(|| {
        let mut v = Vec::with_capacity(n_steps + 1);
        v.push(rho0.clone());
        v
    });
    let mut current = rho0.clone();
    let mut last = None;
    for k in 0..n_steps {
        let outcome = stepper.step(&current).map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
        current = outcome.state.clone();
        if let Some(t) = trajectory.as_mut() {
            t.push(current.clone());
        }
        last = Some(outcome);
    }
    Ok(Propagation { last: last.expect("at least one step"), trajectory })
}

/// Global error constant `c` and the step-count factor above which the bound
/// `‖ρ_T - (𝒜_{T/N})^N ρ_0‖₁ ≤ 4 c T^{M+1} N^{-M}` is guaranteed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorConstant<T: Real> {
    pub order: usize,
    pub c: T,
    /// `max{1, ‖J‖₁, (2c)^{1/(M+1)}}`
    pub n_min_factor: T,
}

impl<T: Real> ErrorConstant<T> {
    /// Smallest admissible step count for horizon `t_final`.
    pub fn min_steps(&self, t_final: T) -> T {
        t_final * self.n_min_factor
    }

    /// `4 c T^{M+1} N^{-M}`
    pub fn global_bound(&self, t_final: T, n_steps: usize) -> T {
        let m = self.order as i32;
        T::lit(4.0) * self.c * t_final.powi(m + 1) / T::lit(n_steps as f64).powi(m)
    }

    /// `c Δt^{M+1}`, the local defect bound.
    pub fn local_bound(&self, dt: T) -> T {
        self.c * dt.powi(self.order as i32 + 1)
    }
}

pub fn error_constant<T: Real>(scheme: SchemeId, model: &LindbladModel<T>) -> Result<ErrorConstant<T>> {
    let gen = model.effective_generator();
    let (l, j) = (gen.ll_norm, gen.j_trace_norm);
    let one = T::one();
    let c = match scheme.validate()? {
        SchemeId::Sp1 => T::lit(12.0) * (one + l).powi(2),
        SchemeId::Sp2Tr => T::lit(4.0) * (one + l).powi(3) + T::lit(3.0) * l * j * j,
        SchemeId::Sp2Mp => T::lit(4.0) * (one + l).powi(3) + T::lit(2.0) * l * j * j,
        SchemeId::Spm(m) => {
            let e = T::E();
            let head = T::lit(3.0) * e * e * (one + l).powi(m as i32 + 1) / factorial::<T>(m + 1);
            let tail = (1..m)
                .fold(T::zero(), |s, k| s + T::lit(4.0) * e.powi(8) * l.powi(k as i32) * j / factorial::<T>(k - 1));
            head + tail
        }
        s @ SchemeId::Rk(_) => {
            return Err(Error::UnsupportedScheme { scheme: s.to_string(), operation: "error_constant" })
        }
    };
    let order = scheme.order();
    let root = (T::lit(2.0) * c).powf(one / T::lit(order as f64 + 1.0));
    Ok(ErrorConstant { order, c, n_min_factor: one.max(j).max(root) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use approx::assert_abs_diff_eq;

    type M = CMatrix<f64>;

    fn dephasing(a: f64, b: f64) -> LindbladModel<f64> {
        LindbladModel::new(M::sigma_z().scale_re(b / 2.0), vec![M::sigma_z().scale_re((a / 2.0).sqrt())]).unwrap()
    }

    fn plus_x() -> M {
        M::bloch(1.0, 0.0, 0.0)
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in ["sp1", "sp2tr", "sp2mp", "spm:3", "spm:5", "rk:1", "rk:4"] {
            assert_eq!(s.parse::<SchemeId>().unwrap().to_string(), s);
        }
        assert!("spm:2".parse::<SchemeId>().is_err());
        assert!("rk:0".parse::<SchemeId>().is_err());
        assert!("euler".parse::<SchemeId>().is_err());
        assert_eq!("SP2MP".parse::<SchemeId>().unwrap(), SchemeId::Sp2Mp);
    }

    #[test]
    fn sp1_on_dephasing() {
        let model = dephasing(1.0, 0.0);
        let raw = step_unnormalized(SchemeId::Sp1, &model, 1.0, &plus_x()).unwrap();
        let expected = (&M::identity(2).scale_re(17.0 / 16.0) + &M::sigma_x().scale_re(1.0 / 16.0)).scale_re(0.5);
        assert!((&raw - &expected).max_abs() < 1e-15);
        let out = step(SchemeId::Sp1, &model, 1.0, &plus_x()).unwrap();
        assert_abs_diff_eq!(out.raw_trace, 17.0 / 16.0, epsilon = 1e-15);
        assert!((&out.state - &M::bloch(1.0 / 17.0, 0.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn trivial_model_is_identity() {
        let model = LindbladModel::unitary(M::zeros(2)).unwrap();
        let rho = M::bloch(0.2, -0.4, 0.1);
        for s in [SchemeId::Sp1, SchemeId::Sp2Tr, SchemeId::Sp2Mp, SchemeId::Spm(3), SchemeId::Rk(2)] {
            let out = step(s, &model, 0.3, &rho).unwrap();
            assert!((&out.state - &rho).max_abs() < 1e-15, "{s}");
        }
    }

    #[test]
    fn rk_matches_taylor_terms() {
        let model = dephasing(0.8, 0.5);
        let rho = M::bloch(0.3, 0.1, -0.2);
        let dt = 0.2;
        let out = step(SchemeId::Rk(1), &model, dt, &rho).unwrap();
        let mut expected = rho.clone();
        expected.axpy(dt, &model.lindbladian_apply(&rho).unwrap());
        assert!((&out.state - &expected).max_abs() < 1e-15);
        let rk2 = step(SchemeId::Rk(2), &dephasing(1.0, 0.0), 1.0, &plus_x()).unwrap();
        assert_abs_diff_eq!(rk2.state.trace_product(&M::sigma_x()).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn sp2mp_without_jumps_is_conjugation() {
        let h = M::from_rows(vec![vec![cx(0.3, 0.0), cx(0.1, -0.2)], vec![cx(0.1, 0.2), cx(-0.5, 0.0)]]).unwrap();
        let model = LindbladModel::unitary(h.clone()).unwrap();
        let dt = 0.37;
        let rho = M::bloch(0.1, 0.5, 0.2);
        let p = &(&M::identity(2) - &h.scale(cx(0.0, dt))) - &h.matmul(&h).scale_re(dt * dt / 2.0);
        let raw = step_unnormalized(SchemeId::Sp2Mp, &model, dt, &rho).unwrap();
        assert!((&raw - &kraus_apply(&p, &rho).unwrap()).max_abs() < 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let rho = M::bloch(0.2, 0.3, 0.4);
        let out = normalize(&rho.scale_re(2.0)).unwrap();
        assert!((&out.state - &rho).max_abs() < 1e-16);
        assert!(matches!(normalize(&M::zeros(2)), Err(Error::NonPositiveTrace(_))));
    }

    #[test]
    fn invalid_step_size() {
        let model = dephasing(1.0, 0.0);
        assert!(matches!(step(SchemeId::Sp1, &model, 0.0, &plus_x()), Err(Error::InvalidStepSize(_))));
        assert!(matches!(step(SchemeId::Sp1, &model, -1.0, &plus_x()), Err(Error::InvalidStepSize(_))));
    }

    #[test]
    fn term_weights_small_example() {
        let opts = SpmOptions { grid_points: Some(vec![1, 2]), term_cap: DEFAULT_TERM_CAP };
        let terms = enumerate_spm_terms(3, 0.6, &opts).unwrap();
        let level2: Vec<_> = terms.iter().filter(|t| t.level == 2).collect();
        assert_eq!(level2.len(), 3);
        let cell = 0.3f64.powi(2);
        let weights: Vec<f64> = level2.iter().map(|t| t.weight).collect();
        for (w, e) in weights.iter().zip([cell / 2.0, cell, cell / 2.0]) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-16);
        }
        assert_abs_diff_eq!(level2[1].times[0], 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(level2[1].times[1], 0.45, epsilon = 1e-15);
        let level1: Vec<_> = terms.iter().filter(|t| t.level == 1).collect();
        assert_eq!(level1.len(), 1);
        assert_abs_diff_eq!(level1[0].weight, 0.6, epsilon = 1e-16);
    }

    #[test]
    fn auto_grid_sizes() {
        let sizes = SpmOptions::default().grid_sizes(3, 0.1).unwrap();
        assert_eq!(sizes, vec![100, 10]);
        let err = SpmOptions::default().grid_sizes(4, 0.01).unwrap_err();
        assert!(matches!(err, Error::TermExplosion { .. }));
    }

    #[test]
    fn term_count_matches_enumeration() {
        let opts = SpmOptions { grid_points: Some(vec![7, 5, 3]), term_cap: DEFAULT_TERM_CAP };
        let terms = enumerate_spm_terms(4, 0.5, &opts).unwrap();
        assert_eq!(terms.len() as u128, spm_term_count(&[7, 5, 3]));
        assert_eq!(spm_term_count(&[7, 5, 3]), 7 + 15 + 10);
    }

    #[test]
    fn spm_step_matches_brute_force_sum() {
        let model = LindbladModel::new(
            M::from_rows(vec![vec![cx(0.4, 0.0), cx(0.2, 0.3)], vec![cx(0.2, -0.3), cx(-0.1, 0.0)]]).unwrap(),
            vec![M::sigma_minus().scale_re(0.9), M::sigma_z().scale_re(0.4)],
        )
        .unwrap();
        let rho = M::bloch(0.3, -0.5, 0.6);
        let dt = 0.3;
        for (order, grid) in [(3, vec![4, 3]), (4, vec![3, 2, 2])] {
            let opts = SpmOptions { grid_points: Some(grid), term_cap: DEFAULT_TERM_CAP };
            let fast = Stepper::with_options(SchemeId::Spm(order), &model, dt, &opts)
                .unwrap()
                .apply_unnormalized(&rho)
                .unwrap();
            let mut slow = model.truncated_propagator_apply(order, dt, 0.0, &rho).unwrap();
            for term in enumerate_spm_terms(order, dt, &opts).unwrap() {
                slow.axpy(term.weight, &model.f_operator_apply(order, &term.times, dt, &rho).unwrap());
            }
            let mut jumps = rho.clone();
            for _ in 0..order {
                jumps = model.ll_apply(&jumps).unwrap();
            }
            slow.axpy(dt.powi(order as i32) / factorial::<f64>(order), &jumps);
            assert!((&fast - &slow).max_abs() < 1e-14, "order {order}");
        }
    }

    #[test]
    fn propagate_records_and_reports_failures() {
        let model = dephasing(1.0, 0.0);
        let run = propagate(SchemeId::Sp1, &model, 1.0, 4, &plus_x(), true).unwrap();
        assert_eq!(run.trajectory.as_ref().unwrap().len(), 5);
        let single = propagate(SchemeId::Sp1, &model, 1.0, 1, &plus_x(), false).unwrap();
        let direct = step(SchemeId::Sp1, &model, 1.0, &plus_x()).unwrap();
        assert_eq!(single.last.state, direct.state);
        let err = propagate(SchemeId::Sp1, &model, 1.0, 3, &M::zeros(2), false).unwrap_err();
        assert!(matches!(err, Error::StepFailed { step: 0, .. }));
    }

    #[test]
    fn error_constants() {
        let trivial = LindbladModel::unitary(M::sigma_z()).unwrap();
        assert_abs_diff_eq!(error_constant(SchemeId::Sp1, &trivial).unwrap().c, 12.0, epsilon = 1e-14);
        let model = dephasing(1.0, 0.0);
        assert_abs_diff_eq!(error_constant(SchemeId::Sp1, &model).unwrap().c, 27.0, epsilon = 1e-13);
        assert_abs_diff_eq!(error_constant(SchemeId::Sp2Tr, &model).unwrap().c, 13.875, epsilon = 1e-13);
        assert_abs_diff_eq!(error_constant(SchemeId::Sp2Mp, &model).unwrap().c, 13.75, epsilon = 1e-13);
        let ec = error_constant(SchemeId::Sp1, &model).unwrap();
        assert_abs_diff_eq!(ec.n_min_factor, 54f64.sqrt(), epsilon = 1e-12);
        assert!(matches!(error_constant(SchemeId::Rk(2), &model), Err(Error::UnsupportedScheme { .. })));
    }
}
