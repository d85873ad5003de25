use std::io::Write;

use super::experiments::{AuditRow, ConvergenceRow, DecayRow, SimulationRow, SlopeFit, UnravelReport};
use crate::error::Result;
use crate::stability::StabilityPoint;

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_all<W: Write>(out: W, header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<()> {
    write_all(
        out,
        &["scheme", "N", "dt", "mean_error", "stderr"],
        rows.iter().map(|r| {
            vec![
                r.scheme.to_string(),
                r.n_steps.to_string(),
                fmt_float(r.dt),
                fmt_float(r.mean_error),
                fmt_float(r.stderr),
            ]
        }),
    )
}

pub fn write_slopes_csv<W: Write>(out: W, fits: &[SlopeFit]) -> Result<()> {
    write_all(
        out,
        &["scheme", "slope", "intercept", "points", "N_lo", "N_hi"],
        fits.iter().map(|f| {
            vec![
                f.scheme.to_string(),
                fmt_float(f.slope),
                fmt_float(f.intercept),
                f.points.to_string(),
                f.n_lo.to_string(),
                f.n_hi.to_string(),
            ]
        }),
    )
}

pub fn write_decay_csv<W: Write>(out: W, rows: &[DecayRow]) -> Result<()> {
    write_all(
        out,
        &["t", "scheme", "abs_sx", "abs_sy"],
        rows.iter().map(|r| vec![fmt_float(r.t), r.scheme.to_string(), fmt_float(r.abs_sx), fmt_float(r.abs_sy)]),
    )
}

pub fn write_audit_csv<W: Write>(out: W, rows: &[AuditRow]) -> Result<()> {
    write_all(
        out,
        &["scheme", "N", "measured_error", "global_bound", "n_min", "within_regime"],
        rows.iter().map(|r| {
            vec![
                r.scheme.to_string(),
                r.n_steps.to_string(),
                fmt_float(r.measured_error),
                fmt_float(r.global_bound),
                fmt_float(r.n_min),
                r.within_regime.to_string(),
            ]
        }),
    )
}

pub fn write_simulation_csv<W: Write>(out: W, rows: &[SimulationRow]) -> Result<()> {
    write_all(
        out,
        &["scheme", "step", "t", "raw_trace", "min_eig_raw", "error"],
        rows.iter().map(|r| {
            vec![
                r.scheme.to_string(),
                r.step.to_string(),
                fmt_float(r.t),
                fmt_float(r.raw_trace),
                fmt_float(r.min_eig_raw),
                fmt_float(r.error),
            ]
        }),
    )
}

/// Adds an `empirical` column when any point carries an empirical verdict.
pub fn write_stability_csv<W: Write>(out: W, points: &[StabilityPoint]) -> Result<()> {
    let with_empirical = points.iter().any(|p| p.empirical.is_some());
    let mut header = vec!["re_z", "im_z", "alpha", "beta", "rho_sq", "verdict"];
    if with_empirical {
        header.push("empirical");
    }
    write_all(
        out,
        &header,
        points.iter().map(|p| {
            let mut r = vec![
                fmt_float(p.re_z),
                fmt_float(p.im_z),
                fmt_float(p.alpha),
                fmt_float(p.beta),
                fmt_float(p.spectral_radius_sq),
                p.verdict.as_str().to_string(),
            ];
            if with_empirical {
                r.push(p.empirical.map_or("", |e| e.as_str()).to_string());
            }
            r
        }),
    )
}

pub fn write_unravel_csv<W: Write>(out: W, report: &UnravelReport) -> Result<()> {
    let d = report.estimate.mean.dim();
    write_all(
        out,
        &["i", "j", "re", "im", "std_err", "reference_re", "reference_im"],
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| {
            let m = report.estimate.mean[(i, j)];
            let r = report.reference[(i, j)];
            vec![
                i.to_string(),
                j.to_string(),
                fmt_float(m.re),
                fmt_float(m.im),
                fmt_float(report.estimate.std_err_at(i, j)),
                fmt_float(r.re),
                fmt_float(r.im),
            ]
        }),
    )
}
