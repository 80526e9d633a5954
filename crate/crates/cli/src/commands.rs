use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use unlearn_core::data::{split, Dataset, Partition};
use unlearn_core::degree::{perturb_data, run_degree, write_sample_dump, DegreeConfig};
use unlearn_core::experiment::{
    emit_plot_data, run_experiment, train_source, ExperimentConfig, MANIFEST_FILE,
};
use unlearn_core::metrics::{accuracy, MetricReport, METRICS_CSV_HEADER};
use unlearn_core::nn::{checkpoint, Network};
use unlearn_core::unlearn::{run_strategy, OutcomeRecord, Strategy, UnlearnOutcome};

use crate::Common;

/// A problem with the config file or flags (exit status 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(String);

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Built-in defaults, overlaid by the config file, overlaid by flags.
fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(ratio) = common.ratio {
        cfg.ratios = vec![ratio];
    }
    if !common.strategy.is_empty() {
        cfg.strategies = common
            .strategy
            .iter()
            .map(|s| Strategy::parse(s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single<T: Copy>(items: &[T], what: &str) -> Result<T> {
    match items {
        [x] => Ok(*x),
        _ => Err(config_err(format!(
            "this command needs exactly one {what}; pass --{what}"
        ))),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<Network> {
    checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn load_run(dir: &Path) -> Result<UnlearnOutcome> {
    let path = dir.join("outcome.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let record: OutcomeRecord = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let model = load_model(&dir.join("model.json"))?;
    Ok(UnlearnOutcome::from_record(record, model)?)
}

/// Dataset and the (unlearn, remain) partition for the single configured
/// ratio and seed.
fn partition(cfg: &ExperimentConfig) -> Result<(Dataset, Partition, f64, u64)> {
    let ratio = single(&cfg.ratios, "ratio")?;
    let seed = single(&cfg.seeds, "seed")?;
    let ds = cfg.dataset.load().context("loading dataset")?;
    let sp = split(ds.len(), ratio, seed)?;
    let part = Partition::new(&ds, &sp)?;
    Ok((ds, part, ratio, seed))
}

pub fn train(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let seed = single(&cfg.seeds, "seed")?;
    let ds = cfg.dataset.load().context("loading dataset")?;
    let net = train_source(&cfg, &ds, seed)?;
    let path = cfg.out_dir.join("source.json");
    write(&path, checkpoint::to_json(&net)?)?;
    let acc = accuracy(&net, &ds)?;
    log::info!("source model: train accuracy {acc:.4}");
    println!("{}", path.display());
    Ok(())
}

pub fn unlearn(common: &Common, model: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    let strategy = single(&cfg.strategies, "strategy")?;
    let (ds, part, _, seed) = partition(&cfg)?;
    let source = match model {
        Some(p) => load_model(p)?,
        None => train_source(&cfg, &ds, seed)?,
    };
    let ucfg = cfg.unlearn_config(&strategy, seed);
    let guide = match ucfg.guidance {
        unlearn_core::unlearn::Guidance::Retrained if strategy.is_perturbation() => {
            let rcfg = cfg.unlearn_config(&Strategy::Retrain, seed);
            Some(run_strategy(Strategy::Retrain, &source, &ds, &part, &rcfg, None)?.model)
        }
        _ => None,
    };
    let outcome = run_strategy(strategy, &source, &ds, &part, &ucfg, guide.as_ref())?;
    write(&cfg.out_dir.join("model.json"), checkpoint::to_json(&outcome.model)?)?;
    write(&cfg.out_dir.join("outcome.json"), outcome.to_json()?)?;
    log::info!(
        "{}: {} epochs, acc_ul {:.4}, acc_re {:.4}",
        strategy.tag(),
        outcome.epochs_run,
        outcome.acc_ul,
        outcome.acc_re
    );
    println!("{}", cfg.out_dir.display());
    Ok(())
}

pub fn metrics(common: &Common, model: &Path, run: &Path, retrain: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    let (_, part, ratio, _) = partition(&cfg)?;
    let source = load_model(model)?;
    let outcome = load_run(run)?;
    let retrain = retrain.map(load_run).transpose()?;
    let report = MetricReport::compute(
        &source,
        &outcome,
        retrain.as_ref(),
        &part.unlearn,
        &part.remain,
        ratio,
    )?;
    let csv = format!("{METRICS_CSV_HEADER}\n{}\n", report.csv_row());
    if let Some(out) = &common.out {
        write(&out.join("metrics.csv"), &csv)?;
        write(&out.join("metrics.json"), serde_json::to_string_pretty(&report)?)?;
    }
    print!("{csv}");
    Ok(())
}

pub fn degree(common: &Common, model: &Path, run: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let (_, part, _, seed) = partition(&cfg)?;
    let source = load_model(model)?;
    let unlearned = load_model(&run.join("model.json"))?;
    let dcfg = DegreeConfig { seed, ..cfg.degree };
    let (gen, report) = run_degree(&source, &unlearned, &part.unlearn, &part.remain, &dcfg)?;
    let out: PathBuf = common.out.clone().unwrap_or_else(|| run.to_path_buf());
    write(&out.join("degree.json"), report.to_json()?)?;
    let after = perturb_data(&gen, part.unlearn.features(), part.unlearn.scaling())?;
    write_sample_dump(&out.join("degree_samples.csv"), part.unlearn.features(), &after)?;
    if let Some(w) = &report.warning {
        log::warn!("{w}");
    }
    println!(
        "degree {:.6} (constraint {})",
        report.degree,
        if report.constraint_satisfied { "satisfied" } else { "violated" }
    );
    Ok(())
}

pub fn experiment(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    log::info!("config hash {}", cfg.hash());
    let manifest = run_experiment(&cfg)?;
    log::info!("{} runs written to {}", manifest.runs.len(), cfg.out_dir.display());
    println!("{}", cfg.out_dir.join(MANIFEST_FILE).display());
    Ok(())
}

pub fn emit_plots(common: &Common, run: Option<&Path>) -> Result<()> {
    let run_dir = match run {
        Some(r) => r.to_path_buf(),
        None => load_config(common)?.out_dir,
    };
    let out = match (run, &common.out) {
        (Some(_), Some(o)) => o.clone(),
        _ => run_dir.join("plots"),
    };
    let files = emit_plot_data(&run_dir, &out)?;
    for g in &files.gaps {
        log::warn!("gap: {g}");
    }
    log::info!("{} curve files written to {}", files.curves.len(), out.display());
    println!("{}", out.display());
    Ok(())
}
