//! Absolute stability on the dephasing test model.
//!
//! With `H = (b/2) σ_Z`, `L = √(a/2) σ_Z` and `Δt = 1` every supported scheme
//! acts on the Bloch vector as `r_X' = α r_X + β r_Y`, `r_Y' = -β r_X + α r_Y`,
//! `r_Z' = r_Z`, where `(α, β)` depend only on `z = a + ib`. The scheme damps
//! coherences iff `α² + β² < 1`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::model::LindbladModel;
use crate::scalar::tol;
use crate::schemes::{SchemeId, Stepper};

type M = CMatrix<f64>;

/// Allowed disagreement between the two one-sided estimates of each entry of `E`.
pub const LINEARITY_TOL: f64 = 1e-10;

/// Number of steps used by the empirical decay check.
pub const EMPIRICAL_STEPS: usize = 1000;

/// Threshold below which the iterated coherence counts as decayed.
pub const EMPIRICAL_DECAY: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn from_radius_sq(rho_sq: f64) -> Self {
        if (rho_sq - 1.0).abs() <= tol::MARGINAL {
            Verdict::Marginal
        } else if rho_sq < 1.0 {
            Verdict::Stable
        } else {
            Verdict::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

/// Outcome of iterating the actual step many times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmpiricalVerdict {
    /// The transverse Bloch component fell below the decay threshold.
    Decayed,
    /// The transverse component ended larger than it started.
    Grew,
    /// Neither, typically because the contraction is too slow to resolve.
    Inconclusive,
}

impl EmpiricalVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            EmpiricalVerdict::Decayed => "decayed",
            EmpiricalVerdict::Grew => "grew",
            EmpiricalVerdict::Inconclusive => "inconclusive",
        }
    }

    /// Whether the iteration is compatible with the analytic spectral radius.
    ///
    /// A stable point whose `(α²+β²)^{n/2}` is far below the decay threshold must
    /// have decayed, and no stable point may grow. An unstable point must not decay.
    pub fn consistent_with(self, rho_sq: f64, steps: usize) -> bool {
        match Verdict::from_radius_sq(rho_sq) {
            Verdict::Stable => {
                let predicted = rho_sq.powf(steps as f64 / 2.0);
                self != EmpiricalVerdict::Grew
                    && (predicted > 1e-2 * EMPIRICAL_DECAY || self == EmpiricalVerdict::Decayed)
            }
            Verdict::Unstable => self != EmpiricalVerdict::Decayed,
            Verdict::Marginal => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct StabilityPoint {
    pub re_z: f64,
    pub im_z: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `α² + β²`
    pub spectral_radius_sq: f64,
    /// `α² + β² < 1`
    pub stable: bool,
    pub verdict: Verdict,
    pub empirical: Option<EmpiricalVerdict>,
}

impl StabilityPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re_z, self.im_z)
    }
}

fn check_half_plane(z: Complex64) -> Result<()> {
    if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::NonPositiveRealPart(z.re));
    }
    Ok(())
}

/// The dephasing model with coherence decay rate `λ = a + ib`.
pub fn dephasing_model(a: f64, b: f64) -> Result<LindbladModel<f64>> {
    if !(a >= 0.0) {
        return Err(Error::BadParameter(format!("dephasing rate must be nonnegative, got {a}")));
    }
    LindbladModel::new(M::sigma_z().scale_re(b / 2.0), vec![M::sigma_z().scale_re((a / 2.0).sqrt())])
}

fn bloch_xyz(rho: &M) -> [f64; 3] {
    [rho.trace_product(&M::sigma_x()).re, rho.trace_product(&M::sigma_y()).re, rho.trace_product(&M::sigma_z()).re]
}

/// Extracts `(α, β)` from one step of `scheme` at `z` with `Δt = 1`.
///
/// Steps `(I ± σ_X)/2` and `(I ± σ_Y)/2`; the opposite inputs must give
/// opposite transverse outputs, the two inputs must agree on `α` and `β`,
/// and `r_Z` must stay zero.
pub fn bloch_e_matrix(scheme: SchemeId, z: Complex64) -> Result<(f64, f64)> {
    check_half_plane(z)?;
    let model = dephasing_model(z.re, z.im)?;
    let stepper = Stepper::new(scheme, &model, 1.0)?;
    let image = |rx: f64, ry: f64| -> Result<[f64; 3]> { Ok(bloch_xyz(&stepper.step(&M::bloch(rx, ry, 0.0))?.state)) };
    let (xp, xm, yp, ym) = (image(1.0, 0.0)?, image(-1.0, 0.0)?, image(0.0, 1.0)?, image(0.0, -1.0)?);
    // x input: r' = (α, -β); y input: r' = (β, α)
    let alpha_x = 0.5 * (xp[0] - xm[0]);
    let beta_x = -0.5 * (xp[1] - xm[1]);
    let alpha_y = 0.5 * (yp[1] - ym[1]);
    let beta_y = 0.5 * (yp[0] - ym[0]);
    let scale = 1.0f64.max(alpha_x.abs()).max(beta_x.abs());
    let mismatch = [
        (xp[0] + xm[0]).abs(),
        (xp[1] + xm[1]).abs(),
        (yp[0] + ym[0]).abs(),
        (yp[1] + ym[1]).abs(),
        (alpha_x - alpha_y).abs(),
        (beta_x - beta_y).abs(),
        xp[2].abs(),
        xm[2].abs(),
        yp[2].abs(),
        ym[2].abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if mismatch > LINEARITY_TOL * scale {
        return Err(Error::NonlinearMap { re: z.re, im: z.im, mismatch });
    }
    Ok((0.5 * (alpha_x + alpha_y), 0.5 * (beta_x + beta_y)))
}

fn unsupported(scheme: SchemeId, operation: &'static str) -> Error {
    Error::UnsupportedScheme { scheme: scheme.to_string(), operation }
}

/// Closed-form rational expressions for `(α, β)` at `z = a + ib` (`Δt = 1`).
pub fn closed_form_e(scheme: SchemeId, z: Complex64) -> Result<(f64, f64)> {
    check_half_plane(z)?;
    let (a, b) = (z.re, z.im);
    let (a2, b2) = (a * a, b * b);
    let out = match scheme {
        SchemeId::Rk(1) => (1.0 - a, -b),
        SchemeId::Rk(2) => (0.5 * (2.0 - 2.0 * a + a2 - b2), b * (a - 1.0)),
        SchemeId::Sp1 => {
            let den = 16.0 + a2 + 4.0 * b2;
            ((16.0 - 16.0 * a + a2 - 4.0 * b2) / den, 4.0 * b * (a - 4.0) / den)
        }
        SchemeId::Sp2Tr => {
            let den = a2 * a2 + 16.0 * a2 * a + 8.0 * a2 * b2 + 64.0 * a * b2 + 16.0 * (b2 * b2 + 64.0);
            let num_a = a2 * a2 - 48.0 * a2 * a - 8.0 * a2 * (3.0 * b2 - 64.0)
                + 64.0 * a * (5.0 * b2 - 16.0)
                + 16.0 * (b2 * b2 - 32.0 * b2 + 64.0);
            let num_b = 8.0 * b * (a - 4.0) * (a2 - 24.0 * a - 4.0 * b2 + 32.0);
            (num_a / den, num_b / den)
        }
        SchemeId::Sp2Mp => {
            let a3 = a2 * a;
            let den = a3 * a2 - 24.0 * a2 * a2 + 8.0 * a3 * (b2 + 32.0) - 64.0 * a2 * b2
                + 16.0 * a * b2 * b2
                + 128.0 * (b2 * b2 + 64.0);
            if !(den > 0.0) {
                return Err(Error::BadParameter(format!("non-positive trace factor {den} at z = {z}")));
            }
            let num_a = -a3 * a2 + 40.0 * a2 * a2 + 8.0 * a3 * (3.0 * b2 - 64.0)
                - 64.0 * a2 * (9.0 * b2 - 64.0)
                - 16.0 * a * (b2 * b2 - 192.0 * b2 + 512.0)
                + 128.0 * (b2 * b2 - 32.0 * b2 + 64.0);
            let num_b =
                -8.0 * b * (a2 * a2 - 32.0 * a3 - 4.0 * a2 * (b2 - 72.0) + 64.0 * a * (b2 - 16.0) - 128.0 * (b2 - 8.0));
            (num_a / den, num_b / den)
        }
        s => return Err(unsupported(s, "closed_form_e")),
    };
    Ok(out)
}

/// The stability region predicted analytically for each supported scheme.
pub fn analytic_region_contains(scheme: SchemeId, z: Complex64) -> Result<bool> {
    check_half_plane(z)?;
    let one = Complex64::new(1.0, 0.0);
    Ok(match scheme {
        SchemeId::Sp1 | SchemeId::Sp2Tr => z.re != 4.0,
        SchemeId::Sp2Mp => {
            let excluded = [Complex64::new(4.0, 2.0), Complex64::new(4.0, -2.0), Complex64::new(8.0, 0.0)];
            !excluded.contains(&z)
        }
        SchemeId::Rk(1) => (z - one).norm() < 1.0,
        SchemeId::Rk(2) => (z * z * 0.5 - z + one).norm() < 1.0,
        s => return Err(unsupported(s, "analytic_region_contains")),
    })
}

/// Distance from `z` to the boundary of the analytic region, used to skip
/// points too close to call.
pub fn distance_to_region_boundary(scheme: SchemeId, z: Complex64) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    Ok(match scheme {
        SchemeId::Sp1 | SchemeId::Sp2Tr => (z.re - 4.0).abs(),
        SchemeId::Sp2Mp => [Complex64::new(4.0, 2.0), Complex64::new(4.0, -2.0), Complex64::new(8.0, 0.0)]
            .iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min),
        SchemeId::Rk(1) => ((z - one).norm() - 1.0).abs(),
        SchemeId::Rk(2) => {
            // |q(z)| - 1 with q(z) = z²/2 - z + 1, q'(z) = z - 1; first-order distance estimate
            let q = z * z * 0.5 - z + one;
            let dq = (z - one).norm().max(1e-12);
            (q.norm() - 1.0).abs() / dq
        }
        s => return Err(unsupported(s, "distance_to_region_boundary")),
    })
}

/// `(coefficient, power of a, power of b)` for the expanded polynomial `G`.
const G_TERMS: [(f64, i32, i32); 25] = [
    (1.0, 8, 0),
    (-48.0, 7, 0),
    (16.0, 6, 2),
    (1152.0, 6, 0),
    (-576.0, 5, 2),
    (-16896.0, 5, 0),
    (96.0, 4, 4),
    (7424.0, 4, 2),
    (152576.0, 4, 0),
    (-2304.0, 3, 4),
    (-32768.0, 3, 2),
    (-819200.0, 3, 0),
    (256.0, 2, 6),
    (20480.0, 2, 4),
    (90112.0, 2, 2),
    (2490368.0, 2, 0),
    (-3072.0, 1, 6),
    (-57344.0, 1, 4),
    (-393216.0, 1, 2),
    (-4194304.0, 1, 0),
    (256.0, 0, 8),
    (4096.0, 0, 6),
    (81920.0, 0, 4),
    (524288.0, 0, 2),
    (4194304.0, 0, 0),
];

/// The degree-8 polynomial whose positivity is equivalent to `α² + β² < 1`
/// for the midpoint second-order scheme, written in nested form.
pub fn g_polynomial(z: Complex64) -> f64 {
    let (a, b) = (z.re, z.im);
    let (b2, b4, b6) = (b * b, b.powi(4), b.powi(6));
    let q = b4 + 8.0 * b2 + 128.0;
    a.powi(8) - 48.0 * a.powi(7) + 16.0 * a.powi(6) * (b2 + 72.0) - 192.0 * a.powi(5) * (3.0 * b2 + 88.0)
        + 32.0 * a.powi(4) * (3.0 * b4 + 232.0 * b2 + 4768.0)
        - 256.0 * a.powi(3) * (9.0 * b4 + 128.0 * b2 + 3200.0)
        + 256.0 * a * a * (b6 + 80.0 * b4 + 352.0 * b2 + 9728.0)
        - 1024.0 * a * (3.0 * b6 + 56.0 * b4 + 384.0 * b2 + 4096.0)
        + 256.0 * q * q
}

/// `G` summed monomial by monomial from its expanded coefficients.
pub fn g_polynomial_expanded(z: Complex64) -> f64 {
    G_TERMS.iter().map(|&(c, pa, pb)| c * z.re.powi(pa) * z.im.powi(pb)).sum()
}

/// `Σ |c a^p b^q|` over the monomials of `G`; the natural scale for
/// judging whether `G(z)` vanishes.
pub fn g_monomial_scale(z: Complex64) -> f64 {
    G_TERMS.iter().map(|&(c, pa, pb)| (c * z.re.powi(pa) * z.im.powi(pb)).abs()).sum()
}

/// Evenly spaced samples `start, start + step, …` up to `end` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::BadParameter(format!("bad axis {start}:{end}:{step}")));
        }
        Ok(Self { start, end, step })
    }

    /// Parses `start:end:step`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::BadParameter(format!("axis `{s}` is not start:end:step")))?;
        match parts.as_slice() {
            [start, end, step] => Self::new(*start, *end, *step),
            _ => Err(Error::BadParameter(format!("axis `{s}` is not start:end:step"))),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Iterates the normalized step from `r = (1, 0, 0)` and classifies the
/// transverse magnitude after `steps` steps.
pub fn empirical_verdict(scheme: SchemeId, z: Complex64, steps: usize) -> Result<EmpiricalVerdict> {
    check_half_plane(z)?;
    let model = dephasing_model(z.re, z.im)?;
    let stepper = Stepper::new(scheme, &model, 1.0)?;
    let mut rho = M::bloch(1.0, 0.0, 0.0);
    for _ in 0..steps {
        rho = stepper.step(&rho)?.state;
        if !rho.is_finite() || rho.max_abs() > 1e100 {
            return Ok(EmpiricalVerdict::Grew);
        }
    }
    let r = bloch_xyz(&rho);
    let transverse = r[0].hypot(r[1]);
    Ok(if transverse < EMPIRICAL_DECAY {
        EmpiricalVerdict::Decayed
    } else if transverse > 1.0 + 1e-9 {
        EmpiricalVerdict::Grew
    } else {
        EmpiricalVerdict::Inconclusive
    })
}

/// Evaluates the numeric `(α, β)` and verdicts over a rectangular grid of `z`.
///
/// Rows are ordered by real part, then imaginary part. With `empirical`
/// each point is also iterated [`EMPIRICAL_STEPS`] times.
pub fn region_scan(scheme: SchemeId, re_axis: &Axis, im_axis: &Axis, empirical: bool) -> Result<Vec<StabilityPoint>> {
    if !(re_axis.start > 0.0) {
        return Err(Error::NonPositiveRealPart(re_axis.start));
    }
    let grid: Vec<Complex64> = re_axis
        .points()
        .into_iter()
        .flat_map(|a| im_axis.points().into_iter().map(move |b| Complex64::new(a, b)))
        .collect();
    grid.par_iter()
        .map(|&z| {
            let (alpha, beta) = bloch_e_matrix(scheme, z)?;
            let rho_sq = alpha * alpha + beta * beta;
            let empirical = if empirical { Some(empirical_verdict(scheme, z, EMPIRICAL_STEPS)?) } else { None };
            Ok(StabilityPoint {
                re_z: z.re,
                im_z: z.im,
                alpha,
                beta,
                spectral_radius_sq: rho_sq,
                stable: rho_sq < 1.0,
                verdict: Verdict::from_radius_sq(rho_sq),
                empirical,
            })
        })
        .collect()
}
