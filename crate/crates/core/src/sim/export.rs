use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::run::ResultSet;
use crate::error::{invalid, Error, Result};
use crate::metrics::MetricsReport;

/// Plot-data products of a result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    GmiVsPower,
    MdlVsPower,
    XtMatrix,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmi_vs_power" => Ok(Figure::GmiVsPower),
            "mdl_vs_power" => Ok(Figure::MdlVsPower),
            "xt_matrix" => Ok(Figure::XtMatrix),
            other => Err(invalid(format!(
                "unknown figure '{other}' (expected gmi_vs_power, mdl_vs_power or xt_matrix)"
            ))),
        }
    }
}

/// One tidy row: `(mode, metric, value)`.
type Row = (String, &'static str, f64);

fn report_rows(r: &MetricsReport, modes: &[String]) -> Vec<Row> {
    let mut rows: Vec<Row> = r
        .gmi_per_mode
        .iter()
        .enumerate()
        .map(|(i, &g)| (modes[i].clone(), "gmi", g))
        .collect();
    rows.push(("all".into(), "gmi_mean", r.mean_gmi()));
    rows.push(("all".into(), "ngmi", r.ngmi));
    rows.push(("all".into(), "line_rate_gbps", r.line_rate_gbps));
    rows.push(("all".into(), "net_rate_gbps", r.net_rate_gbps));
    if let Some(m) = r.mdl_db {
        rows.push(("all".into(), "mdl_db", m));
    }
    rows
}

/// Write tidy rows (`power_dbm,mode,k_rx,capture,metric,value,seed`) for
/// every per-capture and averaged report whose metric passes `keep`.
pub(crate) fn write_tidy(rs: &ResultSet, path: &Path, keep: impl Fn(&str) -> bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["power_dbm", "mode", "k_rx", "capture", "metric", "value", "seed"])?;
    let seed = rs.spec.seed.to_string();
    for &power in &rs.spec.sweep {
        for k in rs.spec.subsets() {
            for p in rs.points.iter().filter(|p| p.power_dbm == power && p.k_rx == k) {
                if let Some(r) = &p.report {
                    for (mode, metric, value) in report_rows(r, &rs.mode_names) {
                        if keep(metric) {
                            w.write_record([
                                power.to_string(),
                                mode,
                                k.to_string(),
                                p.capture.to_string(),
                                metric.to_string(),
                                value.to_string(),
                                p.seed.to_string(),
                            ])?;
                        }
                    }
                }
            }
            if let Some(r) = rs.average(power, k) {
                for (mode, metric, value) in report_rows(r, &rs.mode_names) {
                    if keep(metric) {
                        w.write_record([
                            power.to_string(),
                            mode,
                            k.to_string(),
                            "avg".to_string(),
                            metric.to_string(),
                            value.to_string(),
                            seed.clone(),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_grid(path: &Path, rows: &[String], cols: &[String], values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["rx\\tx".to_string()];
    header.extend(cols.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in rows.iter().zip(values) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| format!("{v:.3}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Launch power with the highest capture-averaged mean GMI for `k`.
fn best_power(rs: &ResultSet, k: usize) -> Option<f64> {
    rs.spec
        .sweep
        .iter()
        .filter_map(|&p| rs.average(p, k).map(|r| (p, r.mean_gmi())))
        .fold(None, |best: Option<(f64, f64)>, (p, g)| match best {
            Some((_, bg)) if bg >= g => best,
            _ => Some((p, g)),
        })
        .map(|(p, _)| p)
}

/// Write the CSV files behind `figure` into `dir` and return their paths.
/// Crosstalk grids are taken at the best launch power of each subset.
pub fn export_plotdata(rs: &ResultSet, figure: Figure, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    match figure {
        Figure::GmiVsPower => {
            let p = dir.join("gmi_vs_power.csv");
            write_tidy(rs, &p, |m| m == "gmi")?;
            Ok(vec![p])
        }
        Figure::MdlVsPower => {
            let p = dir.join("mdl_vs_power.csv");
            write_tidy(rs, &p, |m| m == "mdl_db")?;
            Ok(vec![p])
        }
        Figure::XtMatrix => {
            let mut out = Vec::new();
            for k in rs.spec.subsets() {
                let Some(power) = best_power(rs, k) else { continue };
                let Some(xt) = rs.average(power, k).and_then(|r| r.crosstalk.as_ref()) else {
                    continue;
                };
                let spatial = xt.spatial_db();
                let rx: Vec<String> = rs.mode_names[..spatial.len()].to_vec();
                let tx: Vec<String> = rs.mode_names[..spatial[0].len()].to_vec();
                let p = dir.join(format!("xt_spatial_k{k}.csv"));
                write_grid(&p, &rx, &tx, &spatial)?;
                out.push(p);
                let label = |g: &usize| format!("MG{}", g + 1);
                let p = dir.join(format!("xt_group_k{k}.csv"));
                write_grid(
                    &p,
                    &xt.rx_groups.iter().map(label).collect::<Vec<_>>(),
                    &xt.tx_groups.iter().map(label).collect::<Vec<_>>(),
                    &xt.group_db(),
                )?;
                out.push(p);
            }
            if out.is_empty() {
                return Err(invalid("no successful points with crosstalk data to export"));
            }
            Ok(out)
        }
    }
}
