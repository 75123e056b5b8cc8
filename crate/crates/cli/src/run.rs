//! One training run: data, epochs, metrics CSV, checkpoints and manifest.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;

use scheda_core::composite::{composite_epoch, CompositeParams};
use scheda_core::dae::{sgd_epoch, DaeParams, TrainConfig, TrainStreams};
use scheda_core::eval::{evaluate_representation, extract, EvalReport, LabeledDataset, Part};
use scheda_core::schedule::sampled_epoch;

use crate::checkpoint::Model;
use crate::config::{EvalSection, ExperimentConfig, ModelKind};
use crate::data::load_dataset;

pub const METRICS_HEADER: &str = "epoch,noise_level,recon_error,valid_error,test_error";
pub const MANIFEST: &str = "manifest.toml";
pub const METRICS: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "model.bin";

/// File name of the checkpoint taken when the level `level` finishes.
pub fn level_checkpoint_name(level: f64) -> String {
    format!("model-nu{level:.2}.bin")
}

/// Outcome of a finished run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub model: Model,
    pub epochs: usize,
    pub final_recon: Option<f64>,
    pub report: Option<EvalReport>,
    pub out: PathBuf,
}

/// Metrics CSV with validation and test errors filled in on a cadence.
struct MetricsLog<'a> {
    file: BufWriter<File>,
    data: &'a LabeledDataset,
    eval: &'a EvalSection,
}

impl<'a> MetricsLog<'a> {
    fn create(path: &Path, data: &'a LabeledDataset, eval: &'a EvalSection) -> anyhow::Result<Self> {
        let mut file = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(file, "{METRICS_HEADER}")?;
        Ok(Self { file, data, eval })
    }

    /// Whether errors are due after global `epoch`, the `in_level`-th
    /// epoch at the current noise level (both one-based).
    fn due(&self, epoch: usize, in_level: usize) -> bool {
        if self.data.split.valid.is_empty() {
            return false;
        }
        if self.eval.dense_early {
            matches!(in_level, 1 | 3 | 5) || in_level.is_multiple_of(10)
        } else {
            self.eval.metrics_every > 0 && epoch.is_multiple_of(self.eval.metrics_every)
        }
    }

    fn row(
        &mut self,
        epoch: usize,
        in_level: usize,
        level: Option<f64>,
        recon: f64,
        model: impl FnOnce() -> Model,
    ) -> anyhow::Result<()> {
        let (valid, test) = if self.due(epoch, in_level) {
            let r = evaluate(&model(), self.data, &self.eval.lambdas)?;
            info!("epoch {epoch}: validation error {:.4}", r.selection.valid_error);
            (Some(r.selection.valid_error), r.test_error)
        } else {
            (None, None)
        };
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(self.file, "{epoch},{},{recon},{},{}", cell(level), cell(valid), cell(test))?;
        Ok(())
    }

    fn finish(mut self) -> anyhow::Result<()> {
        self.file.flush()?;
        Ok(())
    }
}

/// Logistic regression on the clean representation, λ chosen on validation.
pub fn evaluate(model: &Model, data: &LabeledDataset, lambdas: &[f64]) -> scheda_core::Result<EvalReport> {
    let rep = extract(model.encoder(), &data.features)?;
    evaluate_representation(&rep, data, lambdas)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs a resolved configuration, writing everything under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<RunSummary> {
    let mut manifest = cfg.clone();
    manifest.out = Some(out.to_path_buf());
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_text(&out.join(MANIFEST), &manifest.to_toml())?;

    let data = load_dataset(&cfg.data)?;
    let train_x = data.features_of(Part::Train);
    let train_cfg = cfg.training_config()?;
    let arch = cfg.architecture()?;
    let kind = cfg.model_kind()?;
    let seed = cfg.seed;
    info!(
        "{} run, seed {seed}: {} training / {} validation / {} test examples of width {}",
        kind.name(),
        data.split.train.len(),
        data.split.valid.len(),
        data.split.test.len(),
        data.dim()
    );

    let mut metrics = MetricsLog::create(&out.join(METRICS), &data, &cfg.eval)?;
    let mut streams = TrainStreams::new(seed);
    let mut epoch = 0;
    let mut last_loss = None;

    let model = match &kind {
        ModelKind::Da | ModelKind::Scheda { .. } | ModelKind::Sampled(_) => {
            let mut p = DaeParams::init(train_x.cols(), arch, &mut TrainStreams::init_rng(seed));
            match &kind {
                ModelKind::Sampled(spec) => {
                    let mut drawn = Vec::new();
                    for k in 1..=train_cfg.epochs {
                        let loss = sampled_epoch(&mut p, &train_x, spec, &train_cfg, &mut streams, &mut drawn)?;
                        epoch += 1;
                        last_loss = Some(loss);
                        metrics.row(epoch, k, None, loss, || Model::Dae(p.clone()))?;
                    }
                }
                _ => {
                    let mut phase = |p: &mut DaeParams, cfg: &TrainConfig, epochs: usize| -> anyhow::Result<()> {
                        let level = cfg.corruption.level();
                        for k in 1..=epochs {
                            let loss = sgd_epoch(p, &train_x, cfg, &mut streams)?;
                            epoch += 1;
                            last_loss = Some(loss);
                            metrics.row(epoch, k, Some(level), loss, || Model::Dae(p.clone()))?;
                        }
                        Ok(())
                    };
                    phase(&mut p, &train_cfg, train_cfg.epochs)?;
                    if let ModelKind::Scheda { schedule, learning_rate } = &kind {
                        let levels = schedule.levels()?;
                        p.save(out.join(level_checkpoint_name(levels[0])))?;
                        for &level in &levels[1..] {
                            let level_cfg = TrainConfig {
                                learning_rate: *learning_rate,
                                ..train_cfg.with_level(level)
                            };
                            phase(&mut p, &level_cfg, schedule.epochs_per_level)?;
                            info!("finished noise level {level}");
                            p.save(out.join(level_checkpoint_name(level)))?;
                        }
                        write_text(&out.join("schedule.txt"), &schedule.manifest(seed))?;
                    }
                }
            }
            Model::Dae(p)
        }
        ModelKind::Composite { partitions, mode } => {
            let mut p = CompositeParams::init(
                train_x.cols(),
                partitions,
                arch.encoder,
                arch.decoder,
                &mut TrainStreams::init_rng(seed),
            )?;
            for e in 0..train_cfg.epochs {
                let loss = composite_epoch(&mut p, &train_x, &train_cfg, *mode, e, &mut streams)?;
                epoch += 1;
                last_loss = Some(loss);
                metrics.row(epoch, epoch, None, loss, || Model::Composite(p.clone()))?;
            }
            Model::Composite(p)
        }
    };
    metrics.finish()?;
    model.save(out.join(FINAL_CHECKPOINT))?;

    let report = if data.split.valid.is_empty() {
        None
    } else {
        let r = evaluate(&model, &data, &cfg.eval.lambdas)?;
        write_text(&out.join("eval.txt"), &eval_text(&r))?;
        Some(r)
    };
    Ok(RunSummary {
        model,
        epochs: epoch,
        final_recon: last_loss,
        report,
        out: out.to_path_buf(),
    })
}

/// `key=value` lines describing a λ selection.
pub fn eval_text(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lambda={}", r.selection.lambda);
    let _ = writeln!(s, "valid_error={}", r.selection.valid_error);
    if let Some(t) = r.test_error {
        let _ = writeln!(s, "test_error={t}");
    }
    for (lambda, err) in &r.selection.table {
        let _ = writeln!(s, "valid_error[{lambda}]={err}");
    }
    s
}
