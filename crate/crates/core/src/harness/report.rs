//! CSV report emission. Formatting is fixed-precision and locale-free so
//! identical configurations produce byte-identical files.

use crate::embedding::SweepPoint;

use super::pipeline::ExperimentReport;

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6}")
    }
}

/// Aggregate report: one row per experiment.
pub const REPORT_HEADER: &str = "method,difficulty,M,d,dcr,dcr_ci_lo,dcr_ci_hi,arl0,arl0_ci_lo,arl0_ci_hi,arl1,arl1_ci_lo,arl1_ci_hi";

pub fn report_csv(reports: &[&ExperimentReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let a = &r.aggregate;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.config.method.as_str(),
            r.config.difficulty,
            r.config.prototypes,
            r.config.dim,
            fmt(a.dcr),
            fmt(a.dcr_ci.0),
            fmt(a.dcr_ci.1),
            fmt(a.arl0),
            fmt(a.arl0_ci.0),
            fmt(a.arl0_ci.1),
            fmt(a.arl1),
            fmt(a.arl1_ci.0),
            fmt(a.arl1_ci.1),
        ));
    }
    out
}

/// Per-sequence rows of one experiment.
pub const RUNS_HEADER: &str =
    "method,difficulty,M,d,seq,dcr_contribution,arl0,arl1,kappa,distortion";

pub fn runs_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for o in &report.sequences {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            report.config.method.as_str(),
            report.config.difficulty,
            report.config.prototypes,
            report.config.dim,
            o.seq,
            if o.metrics.detected { 1 } else { 0 },
            fmt(o.metrics.arl0),
            fmt(o.metrics.arl1),
            fmt(o.kappa),
            fmt(o.distortion),
        ));
    }
    out
}

/// Distortion-sweep curve rows.
pub const SWEEP_HEADER: &str = "kappa,distortion,log10_distortion";

pub fn sweep_csv(curve: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in curve {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(p.kappa),
            fmt(p.distortion),
            fmt(p.distortion.log10()),
        ));
    }
    out
}
