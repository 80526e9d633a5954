use std::path::{Path, PathBuf};

use super::run::{write_file, ExperimentManifest, RunEntry, RunStatus, MANIFEST_FILE};
use crate::degree::DegreeReport;
use crate::metrics::sig6;
use crate::unlearn::OutcomeRecord;
use crate::{Error, Result};

/// Per-run training curve: one row per epoch.
pub const CURVE_HEADER: &str = "epoch,ce,js,acc_re,acc_ul";
pub const ACCELERATION_HEADER: &str =
    "ratio,seed,strategy,unlearn_time_s,retrain_time_s,acceleration,epochs_run";
pub const RANDOM_TOPK_HEADER: &str =
    "ratio,seed,strategy,k_or_k,perturbed_count,acc_ul,acc_re,fr,mrr,similarity";
pub const DEGREE_HEADER: &str =
    "ratio,seed,strategy,degree,acc_m_on_dp,acc_m_on_dul,acc_mul_on_dp,acc_mul_on_dre,constraint_satisfied";

pub const CURVES_DIR: &str = "curves";
pub const ACCELERATION_FILE: &str = "acceleration.csv";
pub const RANDOM_TOPK_FILE: &str = "random_topk.csv";
pub const DEGREE_FILE: &str = "degree.csv";
pub const GAPS_FILE: &str = "gaps.txt";

/// Files written by [`emit_plot_data`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotFiles {
    pub curves: Vec<PathBuf>,
    pub acceleration: Option<PathBuf>,
    pub random_topk: Option<PathBuf>,
    pub degree: Option<PathBuf>,
    /// Written only when something was missing.
    pub gaps_file: Option<PathBuf>,
    pub gaps: Vec<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn run_label(r: &RunEntry) -> String {
    format!("ratio {} seed {} ({}) {}", r.ratio, r.seed, r.seed_index, r.tag)
}

fn write_table(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    write_file(path, s)
}

/// Reads the manifest in `run_dir` and writes plot-ready CSVs into `out`:
/// a training curve per run, acceleration bars, the Random-k / Top-K
/// comparison and degree bars. Anything missing is listed in `gaps.txt`
/// and the remaining files are still written.
pub fn emit_plot_data(run_dir: &Path, out: &Path) -> Result<PlotFiles> {
    let manifest = ExperimentManifest::load(&run_dir.join(MANIFEST_FILE))?;
    let mut files = PlotFiles::default();
    if manifest.status == RunStatus::Failed {
        let stage = manifest.failure.as_ref().map_or("unknown", |f| f.stage.as_str());
        files.gaps.push(format!("experiment incomplete: failed at stage {stage}"));
    }
    let (mut accel, mut compare, mut degree) = (Vec::new(), Vec::new(), Vec::new());
    for r in &manifest.runs {
        let outcome: OutcomeRecord = match read_json(&run_dir.join(&r.outcome)) {
            Ok(o) => o,
            Err(e) => {
                files.gaps.push(format!("{}: outcome unreadable: {e}", run_label(r)));
                continue;
            }
        };
        let name = format!(
            "ratio-{}_seed-{}-{}_{}.csv",
            r.ratio, r.seed_index, r.seed, r.tag
        );
        let curve: Vec<String> = outcome
            .loss_trace
            .iter()
            .map(|e| {
                let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
                format!(
                    "{},{},{},{},{}",
                    e.epoch,
                    sig6(e.ce),
                    opt(e.js),
                    sig6(e.acc_re),
                    opt(e.acc_ul)
                )
            })
            .collect();
        let path = out.join(CURVES_DIR).join(name);
        write_table(&path, CURVE_HEADER, &curve)?;
        files.curves.push(path);

        let m = &r.metrics;
        match (m.retrain_time_s, m.acceleration_ratio) {
            (Some(rt), Some(a)) => accel.push(format!(
                "{},{},{},{},{},{},{}",
                sig6(r.ratio),
                r.seed,
                r.tag,
                sig6(m.unlearn_time_s),
                sig6(rt),
                sig6(a),
                outcome.epochs_run
            )),
            _ => files
                .gaps
                .push(format!("{}: no retrain reference for acceleration", run_label(r))),
        }
        if r.strategy.is_perturbation() {
            compare.push(format!(
                "{},{},{},{},{},{},{},{},{},{}",
                sig6(r.ratio),
                r.seed,
                r.tag,
                k_or_k_cell(&outcome.k_or_k),
                outcome.perturbed_count,
                sig6(m.acc_ul_after),
                sig6(m.acc_re_after),
                sig6(m.forgetting_rate),
                sig6(m.memory_retention_rate),
                sig6(m.similarity)
            ));
        }
        if let Some(p) = &r.degree {
            match read_json::<DegreeReport>(&run_dir.join(p)) {
                Ok(d) => degree.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    sig6(r.ratio),
                    r.seed,
                    r.tag,
                    sig6(d.degree),
                    sig6(d.acc_m_on_dp),
                    sig6(d.acc_m_on_dul),
                    sig6(d.acc_mul_on_dp),
                    sig6(d.acc_mul_on_dre),
                    d.constraint_satisfied
                )),
                Err(e) => files.gaps.push(format!("{}: degree report unreadable: {e}", run_label(r))),
            }
        }
    }
    if manifest.runs.is_empty() {
        files.gaps.push("manifest lists no runs".into());
    }
    let mut family = |rows: &[String], file: &str, header: &str, missing: &str| -> Result<Option<PathBuf>> {
        if rows.is_empty() {
            files.gaps.push(missing.into());
            return Ok(None);
        }
        let path = out.join(file);
        write_table(&path, header, rows)?;
        Ok(Some(path))
    };
    let acceleration = family(&accel, ACCELERATION_FILE, ACCELERATION_HEADER, "no runs with a retrain reference: acceleration.csv not written")?;
    let random_topk = family(&compare, RANDOM_TOPK_FILE, RANDOM_TOPK_HEADER, "no Top-K / Random-k runs: random_topk.csv not written")?;
    let degree = family(&degree, DEGREE_FILE, DEGREE_HEADER, "no degree runs: degree.csv not written")?;
    files.acceleration = acceleration;
    files.random_topk = random_topk;
    files.degree = degree;
    let gaps_path = out.join(GAPS_FILE);
    if files.gaps.is_empty() {
        if gaps_path.exists() {
            std::fs::remove_file(&gaps_path).map_err(|e| Error::io(&gaps_path, e))?;
        }
    } else {
        write_file(&gaps_path, files.gaps.join("\n") + "\n")?;
        files.gaps_file = Some(gaps_path);
    }
    Ok(files)
}

fn k_or_k_cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Array(items) => items
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join("/"),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}
