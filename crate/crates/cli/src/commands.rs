//! Subcommands other than `train` and `grid`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use scheda_core::analysis::{match_counts, match_counts_csv, render_filters, ActivationSet, Channels, Grid};
use scheda_core::eval::{
    concat, evaluate_representation, extract, finetune, select_model, FinetuneConfig, LabeledDataset, Part,
};
use scheda_core::Error;

use crate::checkpoint::Model;
use crate::config::ExperimentConfig;
use crate::data::load_dataset;
use crate::run::eval_text;

fn dataset(cfg: &ExperimentConfig) -> anyhow::Result<LabeledDataset> {
    Ok(load_dataset(&cfg.data)?)
}

/// Validation-selected error of a checkpoint's representation, or of the
/// raw input features when no checkpoint is given.
pub fn eval(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> anyhow::Result<String> {
    let data = dataset(cfg)?;
    let rep = match checkpoint {
        Some(path) => extract(Model::load(path)?.encoder(), &data.features)?,
        None => data.features.clone(),
    };
    let report = evaluate_representation(&rep, &data, &cfg.eval.lambdas)?;
    Ok(format!("width={}\n{}", rep.cols(), eval_text(&report)))
}

/// Two checkpoints' representations side by side, scored alone and joined.
pub fn concat_eval(cfg: &ExperimentConfig, first: &Path, second: &Path) -> anyhow::Result<String> {
    let data = dataset(cfg)?;
    let a = extract(Model::load(first)?.encoder(), &data.features)?;
    let b = extract(Model::load(second)?.encoder(), &data.features)?;
    let lambdas = &cfg.eval.lambdas;
    let ra = evaluate_representation(&a, &data, lambdas)?;
    let rb = evaluate_representation(&b, &data, lambdas)?;
    let joined = concat(&a, &b)?;
    let rj = evaluate_representation(&joined, &data, lambdas)?;
    let mut s = format!("width={}\n", joined.cols());
    let _ = writeln!(s, "first_valid_error={}", ra.selection.valid_error);
    let _ = writeln!(s, "second_valid_error={}", rb.selection.valid_error);
    s.push_str(&eval_text(&rj));
    Ok(s)
}

/// `reference_tag,count` table of where each target feature finds its
/// most similar reference feature, over the training examples.
pub fn analyze(cfg: &ExperimentConfig, target: &Path, references: &[(String, PathBuf)]) -> anyhow::Result<String> {
    if references.is_empty() {
        return Err(Error::Config("analyze needs at least one --reference TAG=PATH".into()).into());
    }
    let data = dataset(cfg)?;
    let x = data.features_of(Part::Train);
    let acts = |path: &Path, tag: &str| -> anyhow::Result<ActivationSet> {
        Ok(ActivationSet {
            acts: extract(Model::load(path)?.encoder(), &x)?.transpose(),
            tag: tag.to_string(),
        })
    };
    let t = acts(target, "target")?;
    let refs = references
        .iter()
        .map(|(tag, path)| acts(path, tag))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let counts = match_counts(&t, &refs)?;
    Ok(match_counts_csv(&refs, &counts))
}

/// Supervised fine-tuning at every configured rate; the rate with the
/// lowest validation error wins and its test error is reported.
pub fn finetune_cmd(cfg: &ExperimentConfig, checkpoint: &Path) -> anyhow::Result<String> {
    let p = match Model::load(checkpoint)? {
        Model::Dae(p) => p,
        Model::Composite(_) => {
            return Err(Error::Config("fine-tuning needs a plain autoencoder checkpoint".into()).into())
        }
    };
    let data = dataset(cfg)?;
    if data.split.valid.is_empty() {
        return Err(Error::Config("fine-tuning selects on validation; data.valid must be > 0".into()).into());
    }
    let section = cfg.finetune_section();
    let mut runs = Vec::new();
    for &rate in &section.learning_rates {
        let ft = FinetuneConfig {
            learning_rate: rate,
            epochs: section.epochs,
            batch_size: section.batch_size,
            seed: cfg.seed,
            freeze_hidden: section.freeze_hidden,
            output_init_scale: section.output_init_scale,
        };
        let out = finetune(&p, &data, &ft)?;
        let err = out.best.error_rate(&data.features_of(Part::Valid), &data.labels_of(Part::Valid))?;
        log::info!("rate {rate}: best validation error {err:.4} at epoch {}", out.best_epoch);
        runs.push(((rate, out), err));
    }
    let best = select_model(&runs)?;
    let mut s = String::new();
    for ((rate, out), err) in &runs {
        let _ = writeln!(s, "valid_error[{rate}]={err} (epoch {})", out.best_epoch);
    }
    let ((rate, out), err) = &runs[best];
    let _ = writeln!(s, "learning_rate={rate}");
    let _ = writeln!(s, "best_epoch={}", out.best_epoch);
    let _ = writeln!(s, "valid_error={err}");
    if !data.split.test.is_empty() {
        let test = out.best.error_rate(&data.features_of(Part::Test), &data.labels_of(Part::Test))?;
        let _ = writeln!(s, "test_error={test}");
    }
    Ok(s)
}

/// Filter image options; unset values are derived from the checkpoint.
#[derive(Clone, Debug, Default)]
pub struct VizOptions {
    pub count: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub channels: Option<Channels>,
}

pub fn viz(checkpoint: &Path, out: &Path, opts: &VizOptions) -> anyhow::Result<String> {
    let w = Model::load(checkpoint)?.filters();
    let count = opts.count.unwrap_or(w.rows().min(100));
    if count == 0 {
        bail!(Error::Config("nothing to draw: --count is 0".into()));
    }
    let (rows, cols) = match (opts.rows, opts.cols) {
        (Some(r), Some(c)) => (r, c),
        (Some(r), None) => (r, count.div_ceil(r)),
        (None, Some(c)) => (count.div_ceil(c), c),
        (None, None) => {
            let c = (count as f64).sqrt().ceil() as usize;
            (count.div_ceil(c), c)
        }
    };
    let channels = opts.channels.unwrap_or(if w.cols() == 3 * 32 * 32 {
        Channels::RgbPlanar
    } else {
        Channels::Gray
    });
    let img = render_filters(&w, count, Grid { rows, cols }, channels)?;
    std::fs::write(out, img.to_ppm()).with_context(|| format!("writing {}", out.display()))?;
    Ok(format!("{}x{} image with {count} filters written to {}\n", img.width, img.height, out.display()))
}
