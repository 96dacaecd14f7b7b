//! File emitters for scores and comparison reports. All writers produce
//! stable row order and fixed six-decimal float formatting so reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::indicators::InstitutionFieldScore;
use crate::rankings::{ComparisonReport, UdaAggregate};

fn real(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn out_of(count: usize, total: usize) -> String {
    format!("{count} (out of {total})")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `scores.csv`: one row per scored (university, SDS), sorted.
pub fn write_scores_csv(scores: &[InstitutionFieldScore], path: &Path) -> Result<()> {
    let mut text = String::from("university_id,sds_code,rs,n_pubs,h,g,p_h,p_g,p_fss\n");
    let mut sorted: Vec<&InstitutionFieldScore> = scores.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.university_id, &a.sds_code).cmp(&(&b.university_id, &b.sds_code))
    });
    for s in sorted {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            s.university_id,
            s.sds_code,
            real(s.rs),
            s.n_pubs,
            s.h,
            s.g,
            real(s.p_h),
            real(s.p_g),
            real(s.p_fss)
        );
    }
    write_text(path, &text)
}

/// Reads `scores.csv` back into score records.
pub fn read_scores_csv(path: &Path) -> Result<Vec<InstitutionFieldScore>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "university_id,sds_code,rs,n_pubs,h,g,p_h,p_g,p_fss" {
        return Err(Error::BadInput {
            path: path.to_path_buf(),
            reason: format!("unexpected scores header \"{header}\""),
        });
    }
    let mut scores = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::BadInput {
                path: path.to_path_buf(),
                reason: format!("line {}: expected 9 fields, got {}", i + 2, fields.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::BadInput {
                path: path.to_path_buf(),
                reason: format!("line {}: bad number \"{s}\"", i + 2),
            })
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::BadInput {
                path: path.to_path_buf(),
                reason: format!("line {}: bad integer \"{s}\"", i + 2),
            })
        };
        scores.push(InstitutionFieldScore {
            university_id: fields[0].to_string(),
            sds_code: fields[1].to_string(),
            rs: parse_f(fields[2])?,
            n_pubs: parse_u(fields[3])? as usize,
            h: parse_u(fields[4])? as u32,
            g: parse_u(fields[5])? as u32,
            p_h: parse_f(fields[6])?,
            p_g: parse_f(fields[7])?,
            p_fss: parse_f(fields[8])?,
        });
    }
    Ok(scores)
}

fn correlation_row(agg: &UdaAggregate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        agg.uda_code,
        out_of(agg.corr_fss_h.n_meaningful, agg.corr_fss_h.n_total),
        opt_real(agg.corr_fss_h.mean_rho),
        opt_real(agg.corr_fss_h.weighted_mean_rho),
        out_of(agg.corr_fss_g.n_meaningful, agg.corr_fss_g.n_total),
        opt_real(agg.corr_fss_g.mean_rho),
        opt_real(agg.corr_fss_g.weighted_mean_rho),
        out_of(agg.corr_h_g.n_meaningful, agg.corr_h_g.n_total),
        opt_real(agg.corr_h_g.mean_rho),
        opt_real(agg.corr_h_g.weighted_mean_rho),
    )
}

fn shifts_uda_row(agg: &UdaAggregate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        agg.uda_code,
        agg.n_sds,
        agg.n_observations,
        real(agg.shifts_fss_h.pct_changed),
        real(agg.shifts_fss_g.pct_changed),
        real(agg.shifts_fss_h.mean_shift),
        real(agg.shifts_fss_g.mean_shift),
        agg.shifts_fss_h.max_shift,
        agg.shifts_fss_g.max_shift,
        format_args!(
            "{},{}",
            real(agg.shifts_fss_h.pct_shift_ge2),
            real(agg.shifts_fss_g.pct_shift_ge2)
        ),
    )
}

fn crossover_row(agg: &UdaAggregate) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        agg.uda_code,
        agg.crossovers_fss_h,
        agg.crossovers_fss_g,
        agg.n_observations,
        out_of(agg.crossovers_fss_h, agg.n_observations),
        out_of(agg.crossovers_fss_g, agg.n_observations),
    )
}

fn top_quartile_row(agg: &UdaAggregate) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        agg.uda_code,
        real(agg.top_loss_pct_fss_h),
        real(agg.top_loss_pct_fss_g),
        agg.top_lost_fss_h,
        agg.top_lost_fss_g,
        agg.q1_size,
    )
}

/// Writes the five table-family CSVs plus the per-SDS correlation
/// distribution, returning the created paths.
pub fn write_report_csvs(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    // UDA-level correlation averages with pass counts, both conventions.
    let mut text = String::from(
        "uda,sds_meaningful_fss_h,rho_fss_h_mean,rho_fss_h_weighted,\
sds_meaningful_fss_g,rho_fss_g_mean,rho_fss_g_weighted,\
sds_meaningful_h_g,rho_h_g_mean,rho_h_g_weighted\n",
    );
    for agg in &report.per_uda {
        text.push_str(&correlation_row(agg));
    }
    text.push_str(&correlation_row(&report.totals));
    let path = dir.join("correlations.csv");
    write_text(&path, &text)?;
    written.push(path);

    // Raw per-SDS correlations (the distribution behind the averages).
    let mut text = String::from(
        "sds,uda,n_universities,rho_fss_h,p_fss_h,rho_fss_g,p_fss_g,rho_h_g,p_h_g\n",
    );
    for c in &report.per_sds {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            c.sds_code,
            c.uda_code,
            c.n_universities,
            real(c.rho_fss_h),
            real(c.p_fss_h),
            real(c.rho_fss_g),
            real(c.p_fss_g),
            real(c.rho_h_g),
            real(c.p_h_g)
        );
    }
    let path = dir.join("rho_by_sds.csv");
    write_text(&path, &text)?;
    written.push(path);

    // Per-SDS quartile shifts.
    let mut text = String::from(
        "uda,sds,n_universities,pct_changed_fss_h,pct_changed_fss_g,\
mean_shift_fss_h,mean_shift_fss_g,max_shift_fss_h,max_shift_fss_g,\
pct_ge2_fss_h,pct_ge2_fss_g\n",
    );
    for c in &report.per_sds {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.uda_code,
            c.sds_code,
            c.n_universities,
            real(c.shifts_fss_h.pct_changed),
            real(c.shifts_fss_g.pct_changed),
            real(c.shifts_fss_h.mean_shift),
            real(c.shifts_fss_g.mean_shift),
            c.shifts_fss_h.max_shift,
            c.shifts_fss_g.max_shift,
            real(c.shifts_fss_h.pct_shift_ge2),
            real(c.shifts_fss_g.pct_shift_ge2)
        );
    }
    let path = dir.join("shifts_by_sds.csv");
    write_text(&path, &text)?;
    written.push(path);

    // UDA-pooled quartile shifts.
    let mut text = String::from(
        "uda,n_sds,n_observations,pct_changed_fss_h,pct_changed_fss_g,\
mean_shift_fss_h,mean_shift_fss_g,max_shift_fss_h,max_shift_fss_g,\
pct_ge2_fss_h,pct_ge2_fss_g\n",
    );
    for agg in &report.per_uda {
        text.push_str(&shifts_uda_row(agg));
    }
    text.push_str(&shifts_uda_row(&report.totals));
    let path = dir.join("shifts_by_uda.csv");
    write_text(&path, &text)?;
    written.push(path);

    // National-median crossovers.
    let mut text = String::from(
        "uda,crossed_fss_h,crossed_fss_g,n_observations,fss_h_out_of,fss_g_out_of\n",
    );
    for agg in &report.per_uda {
        text.push_str(&crossover_row(agg));
    }
    text.push_str(&crossover_row(&report.totals));
    let path = dir.join("median_crossovers.csv");
    write_text(&path, &text)?;
    written.push(path);

    // Top-quartile losses.
    let mut text = String::from(
        "uda,pct_top_loss_fss_h,pct_top_loss_fss_g,lost_fss_h,lost_fss_g,q1_size\n",
    );
    for agg in &report.per_uda {
        text.push_str(&top_quartile_row(agg));
    }
    text.push_str(&top_quartile_row(&report.totals));
    let path = dir.join("top_quartile.csv");
    write_text(&path, &text)?;
    written.push(path);

    Ok(written)
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    config: &'a RunConfig,
    report: &'a ComparisonReport,
}

/// Writes the whole report as a single JSON document with the config echo.
pub fn write_report_json(
    report: &ComparisonReport,
    config: &RunConfig,
    path: &Path,
) -> Result<()> {
    let doc = ReportDocument { config, report };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| Error::io(path, e.into()))?;
    write_text(path, &format!("{json}\n"))
}

/// One-screen comparison summary for the terminal.
pub fn render_summary(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let t = &report.tallies;
    let _ = writeln!(
        out,
        "SDSs analyzed: {} of {} with scores ({} below {} universities)",
        t.sds_analyzed,
        t.sds_with_scores,
        t.sds_excluded_small.len(),
        t.min_universities
    );
    let totals = &report.totals;
    let _ = writeln!(
        out,
        "mean rho (p < {}): FSS~h {} [{}], FSS~g {} [{}], h~g {} [{}]",
        t.p_value_threshold,
        opt_real(totals.corr_fss_h.mean_rho),
        out_of(totals.corr_fss_h.n_meaningful, totals.corr_fss_h.n_total),
        opt_real(totals.corr_fss_g.mean_rho),
        out_of(totals.corr_fss_g.n_meaningful, totals.corr_fss_g.n_total),
        opt_real(totals.corr_h_g.mean_rho),
        out_of(totals.corr_h_g.n_meaningful, totals.corr_h_g.n_total),
    );
    let _ = writeln!(
        out,
        "quartile shifts vs FSS: h {}% changed (mean {:.2}), g {}% changed (mean {:.2})",
        real(totals.shifts_fss_h.pct_changed),
        totals.shifts_fss_h.mean_shift,
        real(totals.shifts_fss_g.pct_changed),
        totals.shifts_fss_g.mean_shift,
    );
    let _ = writeln!(
        out,
        "median crossovers: h {}, g {}; top-quartile loss: h {}%, g {}%",
        out_of(totals.crossovers_fss_h, totals.n_observations),
        out_of(totals.crossovers_fss_g, totals.n_observations),
        real(totals.top_loss_pct_fss_h),
        real(totals.top_loss_pct_fss_g),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_score(u: &str, sds: &str, v: f64) -> InstitutionFieldScore {
        InstitutionFieldScore {
            university_id: u.to_string(),
            sds_code: sds.to_string(),
            rs: 2.0,
            n_pubs: 3,
            h: 2,
            g: 3,
            p_h: v,
            p_g: v + 0.5,
            p_fss: v * 2.0,
        }
    }

    #[test]
    fn scores_csv_round_trips_and_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let scores = vec![
            sample_score("U2", "FIS/01", 1.0),
            sample_score("U1", "FIS/01", 0.25),
        ];
        write_scores_csv(&scores, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("U1,"));
        assert!(lines[2].starts_with("U2,"));
        assert!(lines[1].contains("0.250000"));

        let read = read_scores_csv(&path).unwrap();
        assert_eq!(read.len(), 2);
        assert_eq!(read[0].university_id, "U1");
        assert!((read[1].p_h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn read_scores_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        std::fs::write(&path, "a,b,c\n").unwrap();
        assert!(read_scores_csv(&path).is_err());
    }
}
