use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::data::{split, Dataset, Partition};
use crate::degree::{perturb_data, run_degree, write_sample_dump, DegreeConfig};
use crate::metrics::{MetricReport, METRICS_CSV_HEADER};
use crate::nn::checkpoint;
use crate::nn::train::{fit, TrainConfig};
use crate::nn::Network;
use crate::unlearn::{gradient_norm_gap, run_strategy, Strategy, UnlearnOutcome};
use crate::{Error, Result};

pub const MANIFEST_FORMAT: &str = "unlearn-lab/manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub seed_index: usize,
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub train_accuracy: f64,
    pub train_time_s: f64,
}

/// One strategy run inside a (ratio, seed) cell. Paths are relative to the
/// experiment's output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub ratio: f64,
    pub seed_index: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub tag: String,
    pub checkpoint: PathBuf,
    pub outcome: PathBuf,
    pub degree: Option<PathBuf>,
    pub degree_samples: Option<PathBuf>,
    pub metrics: MetricReport,
    pub gradient_norm_gap_before: f64,
    pub gradient_norm_gap_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub status: RunStatus,
    pub failure: Option<StageFailure>,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
    pub metrics_csv: Option<PathBuf>,
    pub sources: Vec<SourceEntry>,
    pub runs: Vec<RunEntry>,
}

impl ExperimentManifest {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            config_hash: config.hash(),
            config: config.clone(),
            status: RunStatus::Failed,
            failure: None,
            started_at: unix_now(),
            finished_at: 0,
            metrics_csv: None,
            sources: Vec::new(),
            runs: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }

    /// Every artifact path listed, relative to the output directory.
    pub fn artifact_paths(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = self.sources.iter().map(|s| s.checkpoint.as_path()).collect();
        out.extend(self.metrics_csv.as_deref());
        for r in &self.runs {
            out.push(&r.checkpoint);
            out.push(&r.outcome);
            out.extend(r.degree.as_deref());
            out.extend(r.degree_samples.as_deref());
        }
        out
    }
}

/// The error and all its causes, joined with ": ".
fn chain_message(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut cur = std::error::Error::source(e);
    while let Some(c) = cur {
        msg.push_str(": ");
        msg.push_str(&c.to_string());
        cur = c.source();
    }
    msg
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Directory name fragment for a cell. The seed index keeps repeated seeds
/// apart.
pub fn cell_dir(ratio: f64, seed_index: usize, seed: u64) -> PathBuf {
    PathBuf::from(format!("ratio-{ratio}")).join(format!("seed-{seed_index}-{seed}"))
}

fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    write_file(path, checkpoint::to_json(net)?)
}

type Staged<T> = std::result::Result<T, (String, Error)>;

fn stage<T>(name: impl Into<String>, r: Result<T>) -> Staged<T> {
    r.map_err(|e| (name.into(), e))
}

/// Trains a source model per seed, then runs every strategy on every
/// (ratio, seed) cell, writing checkpoints, outcome JSONs, metric rows and
/// degree reports under `config.out_dir`. A manifest is written even when
/// a stage fails; it then records the failing stage and the runs completed
/// so far.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentManifest> {
    config.validate()?;
    let root = &config.out_dir;
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut manifest = ExperimentManifest::new(config);
    let result = run_cells(config, &mut manifest);
    manifest.finished_at = unix_now();
    let failure = match result {
        Ok(()) => {
            manifest.status = RunStatus::Complete;
            None
        }
        Err((stage, e)) => {
            log::error!("stage {stage} failed: {e}");
            manifest.failure = Some(StageFailure {
                stage: stage.clone(),
                message: chain_message(&e),
            });
            Some((stage, e))
        }
    };
    write_file(&root.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    match failure {
        None => Ok(manifest),
        Some((stage, source)) => Err(Error::Stage {
            stage,
            source: Box::new(source),
        }),
    }
}

/// Trains a source model on the full dataset.
pub fn train_source(config: &ExperimentConfig, ds: &Dataset, seed: u64) -> Result<Network> {
    let shape = config.model.shape(ds.dims(), ds.class_count());
    let mut net = Network::init_random(shape, seed)?;
    let train = TrainConfig {
        seed,
        ..config.training
    };
    fit(&mut net, ds.features(), ds.labels(), &train)?;
    Ok(net)
}

fn run_cells(config: &ExperimentConfig, manifest: &mut ExperimentManifest) -> Staged<()> {
    let root = config.out_dir.as_path();
    let ds = stage("load-dataset", config.dataset.load())?;
    log::info!("dataset: {} samples, {} dims, {} classes", ds.len(), ds.dims(), ds.class_count());

    let mut sources = Vec::with_capacity(config.seeds.len());
    for (si, &seed) in config.seeds.iter().enumerate() {
        let name = format!("train-source:seed-{si}-{seed}");
        let t0 = Instant::now();
        let net = stage(&name, train_source(config, &ds, seed))?;
        let train_time_s = t0.elapsed().as_secs_f64();
        let train_accuracy = stage(&name, crate::metrics::accuracy(&net, &ds))?;
        let rel = PathBuf::from("sources").join(format!("seed-{si}-{seed}.json"));
        stage(&name, save_checkpoint(&net, &root.join(&rel)))?;
        log::info!("source seed {seed}: train accuracy {train_accuracy:.4}");
        manifest.sources.push(SourceEntry {
            seed_index: si,
            seed,
            checkpoint: rel,
            train_accuracy,
            train_time_s,
        });
        sources.push(net);
    }

    let pool = stage(
        "thread-pool",
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}"))),
    )?;
    let mut rows = Vec::new();
    for &ratio in &config.ratios {
        for (si, &seed) in config.seeds.iter().enumerate() {
            let cell = cell_dir(ratio, si, seed);
            let cell_name = cell.display().to_string();
            let sp = stage(format!("split:{cell_name}"), split(ds.len(), ratio, seed))?;
            let part = stage(format!("split:{cell_name}"), Partition::new(&ds, &sp))?;
            let source = &sources[si];
            let gap_before = stage(format!("diagnostics:{cell_name}"), gradient_norm_gap(source, &part))?;

            let run_one = |s: &Strategy, guide: Option<&Network>| -> Staged<UnlearnOutcome> {
                let cfg = config.unlearn_config(s, seed);
                stage(
                    format!("unlearn:{cell_name}/{}", s.tag()),
                    run_strategy(*s, source, &ds, &part, &cfg, guide),
                )
            };
            let retrain = match config.strategies.iter().find(|s| **s == Strategy::Retrain) {
                Some(s) => Some(run_one(s, None)?),
                None => None,
            };
            let guide = retrain.as_ref().map(|o| &o.model);
            let others: Vec<&Strategy> = config
                .strategies
                .iter()
                .filter(|s| **s != Strategy::Retrain)
                .collect();
            let outcomes: Vec<Staged<UnlearnOutcome>> = if config.jobs > 1 {
                pool.install(|| others.par_iter().map(|s| run_one(s, guide)).collect())
            } else {
                others.iter().map(|s| run_one(s, guide)).collect()
            };
            let mut outcomes = outcomes.into_iter();
            for s in &config.strategies {
                let outcome = match (s, &retrain) {
                    (Strategy::Retrain, Some(r)) => r.clone(),
                    _ => outcomes.next().expect("one outcome per strategy")?,
                };
                let entry = write_run(
                    config, root, &cell, ratio, si, seed, source, &part, &outcome,
                    retrain.as_ref(), gap_before,
                )?;
                rows.push(entry.metrics.csv_row());
                manifest.runs.push(entry);
            }
            let mut csv = String::from(METRICS_CSV_HEADER);
            csv.push('\n');
            for r in &rows {
                csv.push_str(r);
                csv.push('\n');
            }
            stage("write-metrics", write_file(&root.join(METRICS_FILE), csv))?;
            manifest.metrics_csv = Some(PathBuf::from(METRICS_FILE));
            log::info!("finished cell {cell_name}");
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_run(
    config: &ExperimentConfig,
    root: &Path,
    cell: &Path,
    ratio: f64,
    seed_index: usize,
    seed: u64,
    source: &Network,
    part: &Partition,
    outcome: &UnlearnOutcome,
    retrain: Option<&UnlearnOutcome>,
    gap_before: f64,
) -> Staged<RunEntry> {
    let tag = outcome.strategy.tag();
    let dir = cell.join(&tag);
    let name = dir.display().to_string();
    let metrics = stage(
        format!("metrics:{name}"),
        MetricReport::compute(source, outcome, retrain, &part.unlearn, &part.remain, ratio),
    )?;
    let gap_after = stage(format!("diagnostics:{name}"), gradient_norm_gap(&outcome.model, part))?;
    let checkpoint_rel = dir.join("model.json");
    let outcome_rel = dir.join("outcome.json");
    stage(format!("write:{name}"), save_checkpoint(&outcome.model, &root.join(&checkpoint_rel)))?;
    stage(
        format!("write:{name}"),
        outcome
            .to_json()
            .map_err(Error::from)
            .and_then(|j| write_file(&root.join(&outcome_rel), j)),
    )?;
    let (mut degree, mut degree_samples) = (None, None);
    if config.evaluate_degree {
        let dname = format!("degree:{name}");
        let dcfg = DegreeConfig {
            seed,
            ..config.degree
        };
        let (gen, report) = stage(
            &dname,
            run_degree(source, &outcome.model, &part.unlearn, &part.remain, &dcfg),
        )?;
        let report_rel = dir.join("degree.json");
        let samples_rel = dir.join("degree_samples.csv");
        let json = stage(&dname, report.to_json().map_err(Error::from))?;
        stage(&dname, write_file(&root.join(&report_rel), json))?;
        let before = part.unlearn.features();
        let after = stage(&dname, perturb_data(&gen, before, part.unlearn.scaling()))?;
        stage(&dname, write_sample_dump(&root.join(&samples_rel), before, &after))?;
        degree = Some(report_rel);
        degree_samples = Some(samples_rel);
    }
    Ok(RunEntry {
        ratio,
        seed_index,
        seed,
        strategy: outcome.strategy,
        tag,
        checkpoint: checkpoint_rel,
        outcome: outcome_rel,
        degree,
        degree_samples,
        metrics,
        gradient_norm_gap_before: gap_before,
        gradient_norm_gap_after: gap_after,
    })
}
