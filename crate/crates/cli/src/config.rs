//! Experiment configuration: a TOML file with one section per concern.
//!
//! Exactly one of `[da]`, `[scheda]`, `[composite]` and `[sampled]`
//! selects the model kind; with none present a plain fixed-level run is
//! assumed. [`ExperimentConfig::resolve`] fills every default and
//! normalizes names, and the resolved form is what gets written to a
//! run's manifest, so a manifest replays the run exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scheda_core::composite::{UpdateMode, DEFAULT_PHASE_EPOCHS};
use scheda_core::corruption::CorruptionKind;
use scheda_core::dae::{Architecture, Loss, TrainConfig, DEFAULT_BATCH_SIZE};
use scheda_core::eval::{default_finetune_rates, default_lambda_grid, FinetuneConfig};
use scheda_core::numerics::Transfer;
use scheda_core::schedule::{Direction, NoiseSchedule, SampledNoiseSpec, SCHEDULED_LEARNING_RATE};
use scheda_core::{Error, Result};

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Cifar10,
    Bow,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Bars,
    Bow,
}

/// Where examples come from and how they are split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    /// CIFAR-10: the `cifar-10-batches-bin` directory. Bag-of-words: the
    /// training document file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<f64>,
    pub train: usize,
    pub valid: usize,
    /// Test examples: a prefix of the CIFAR test batch, or the number of
    /// synthetic test examples to generate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<usize>,
    #[serde(default)]
    pub split_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: String,
    pub noise: String,
    pub level: f64,
    pub hidden: usize,
    pub encoder: String,
    pub decoder: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: DEFAULT_BATCH_SIZE,
            loss: "cross-entropy".into(),
            noise: "masking".into(),
            level: 0.3,
            hidden: 100,
            encoder: "sigmoid".into(),
            decoder: "sigmoid".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaSection {}

/// The schedule starts at `train.level` after `train.epochs` epochs there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedaSection {
    pub step: f64,
    pub switches: usize,
    pub epochs_per_level: usize,
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default = "default_scheduled_rate")]
    pub learning_rate: f64,
}

fn default_direction() -> String {
    "decreasing".into()
}

fn default_scheduled_rate() -> f64 {
    SCHEDULED_LEARNING_RATE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSection {
    pub widths: Vec<usize>,
    pub levels: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_phase")]
    pub epochs_per_phase: usize,
}

fn default_mode() -> String {
    "joint".into()
}

fn default_phase() -> usize {
    DEFAULT_PHASE_EPOCHS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledSection {
    pub distribution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub lambdas: Vec<f64>,
    /// Validation and test errors are filled in every this many epochs;
    /// zero leaves those metric cells empty.
    pub metrics_every: usize,
    /// Evaluate after the 1st, 3rd and 5th epoch at each level, then
    /// every 10th, instead of on the fixed cadence.
    pub dense_early: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            lambdas: default_lambda_grid(),
            metrics_every: 0,
            dense_early: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneSection {
    pub learning_rates: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub freeze_hidden: bool,
    pub output_init_scale: f64,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        let d = FinetuneConfig::default();
        Self {
            learning_rates: default_finetune_rates(),
            epochs: d.epochs,
            batch_size: d.batch_size,
            freeze_hidden: d.freeze_hidden,
            output_init_scale: d.output_init_scale,
        }
    }
}

/// Values swept by `grid`; an omitted axis stays at the `[train]` value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub da: Option<DaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheda: Option<SchedaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<CompositeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledSection>,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finetune: Option<FinetuneSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

/// The model to train, with every parameter checked.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Da,
    Scheda { schedule: NoiseSchedule, learning_rate: f64 },
    Composite { partitions: Vec<(usize, f64)>, mode: UpdateMode },
    Sampled(SampledNoiseSpec),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Da => "da",
            ModelKind::Scheda { .. } => "scheda",
            ModelKind::Composite { .. } => "composite",
            ModelKind::Sampled(_) => "sampled",
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// Checks every field and returns the canonical form: defaults made
    /// explicit, names normalized, exactly one model section present.
    pub fn resolve(&self) -> Result<Self> {
        let mut c = self.clone();
        let sections = [
            ("da", c.da.is_some()),
            ("scheda", c.scheda.is_some()),
            ("composite", c.composite.is_some()),
            ("sampled", c.sampled.is_some()),
        ];
        let present: Vec<&str> = sections.iter().filter(|s| s.1).map(|s| s.0).collect();
        if present.len() > 1 {
            return Err(Error::Config(format!(
                "model sections [{}] are mutually exclusive",
                present.join("], [")
            )));
        }
        if present.is_empty() {
            c.da = Some(DaSection {});
        }

        let t = &mut c.train;
        t.loss = t.loss.parse::<Loss>().map_err(|e| config_err("train.loss", e))?.name().into();
        t.encoder = parse_transfer(&t.encoder, "train.encoder")?.name().into();
        t.decoder = parse_transfer(&t.decoder, "train.decoder")?.name().into();
        t.noise = noise_family(&t.noise)?.into();
        if let Some(comp) = &c.composite {
            t.hidden = comp.widths.iter().sum();
        }
        if let Some(s) = &mut c.scheda {
            s.direction = match parse_direction(&s.direction)? {
                Direction::Decreasing => "decreasing".into(),
                Direction::Increasing => "increasing".into(),
            };
        }
        if let Some(comp) = &mut c.composite {
            comp.mode = comp.mode.to_ascii_lowercase();
        }
        if let Some(s) = &mut c.sampled {
            s.distribution = s.distribution.to_ascii_lowercase();
        }
        resolve_data(&mut c.data)?;
        c.training_config()?;
        c.architecture()?;
        c.model_kind()?;
        if c.eval.lambdas.is_empty() || c.eval.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(config_err("eval.lambdas", "must be a nonempty list of positive values"));
        }
        if let Some(f) = &c.finetune {
            if f.learning_rates.is_empty() || f.learning_rates.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
                return Err(config_err("finetune.learning_rates", "must be a nonempty list of rates >= 0"));
            }
            if f.batch_size == 0 {
                return Err(config_err("finetune.batch_size", "must be at least 1"));
            }
        }
        if let Some(g) = &c.grid {
            if g.levels.is_some() && (c.composite.is_some() || c.sampled.is_some()) {
                return Err(config_err(
                    "grid.levels",
                    "composite and sampled models take their levels from their own section",
                ));
            }
            for (name, empty) in [
                ("grid.levels", g.levels.as_ref().is_some_and(Vec::is_empty)),
                ("grid.learning_rates", g.learning_rates.as_ref().is_some_and(Vec::is_empty)),
                ("grid.epochs", g.epochs.as_ref().is_some_and(Vec::is_empty)),
            ] {
                if empty {
                    return Err(config_err(name, "must not be empty"));
                }
            }
        }
        Ok(c)
    }

    pub fn loss(&self) -> Result<Loss> {
        self.train.loss.parse().map_err(|e| config_err("train.loss", e))
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let arch = Architecture {
            hidden: self.train.hidden,
            encoder: parse_transfer(&self.train.encoder, "train.encoder")?,
            decoder: parse_transfer(&self.train.decoder, "train.decoder")?,
        };
        if arch.hidden == 0 {
            return Err(config_err("train.hidden", "must be at least 1"));
        }
        self.loss()?
            .check_decoder(arch.decoder)
            .map_err(|e| config_err("train.decoder", e))?;
        Ok(arch)
    }

    /// Fixed-level training settings from `[train]` and the run seed.
    pub fn training_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let corruption = match noise_family(&t.noise)? {
            "masking" => CorruptionKind::Masking(t.level),
            _ => CorruptionKind::Gaussian(t.level),
        };
        let cfg = TrainConfig {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            loss: self.loss()?,
            corruption,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| config_err("train", e))?;
        Ok(cfg)
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        if let Some(s) = &self.scheda {
            let schedule = NoiseSchedule {
                start: self.train.level,
                step: s.step,
                switches: s.switches,
                epochs_per_level: s.epochs_per_level,
                initial_epochs: self.train.epochs,
                direction: parse_direction(&s.direction)?,
            };
            schedule.validate().map_err(|e| config_err("scheda", e))?;
            if !(s.learning_rate >= 0.0 && s.learning_rate.is_finite()) {
                return Err(config_err("scheda.learning_rate", "must be finite and >= 0"));
            }
            return Ok(ModelKind::Scheda {
                schedule,
                learning_rate: s.learning_rate,
            });
        }
        if let Some(c) = &self.composite {
            if c.widths.is_empty() || c.widths.len() != c.levels.len() {
                return Err(config_err(
                    "composite",
                    "widths and levels must be nonempty lists of equal length",
                ));
            }
            if c.widths.contains(&0) {
                return Err(config_err("composite.widths", "every partition needs at least one unit"));
            }
            if let Some(bad) = c.levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                return Err(config_err("composite.levels", format!("{bad} is outside [0, 1]")));
            }
            let mode = match c.mode.as_str() {
                "joint" => UpdateMode::Joint,
                "alternating" if c.epochs_per_phase > 0 => UpdateMode::Alternating {
                    epochs_per_phase: c.epochs_per_phase,
                },
                "alternating" => return Err(config_err("composite.epochs_per_phase", "must be at least 1")),
                other => return Err(config_err("composite.mode", format!("unknown mode `{other}`"))),
            };
            let partitions = c.widths.iter().copied().zip(c.levels.iter().copied()).collect();
            return Ok(ModelKind::Composite { partitions, mode });
        }
        if let Some(s) = &self.sampled {
            let spec = match s.distribution.as_str() {
                "continuous" => match (s.lo, s.hi, &s.levels) {
                    (Some(lo), Some(hi), None) => SampledNoiseSpec::ContinuousUniform { lo, hi },
                    _ => return Err(config_err("sampled", "continuous sampling takes `lo` and `hi` only")),
                },
                "discrete" => match (s.lo, s.hi, &s.levels) {
                    (None, None, Some(levels)) => SampledNoiseSpec::DiscreteUniform(levels.clone()),
                    _ => return Err(config_err("sampled", "discrete sampling takes `levels` only")),
                },
                other => {
                    return Err(config_err(
                        "sampled.distribution",
                        format!("`{other}` is neither continuous nor discrete"),
                    ))
                }
            };
            spec.validate().map_err(|e| config_err("sampled", e))?;
            return Ok(ModelKind::Sampled(spec));
        }
        Ok(ModelKind::Da)
    }

    pub fn finetune_section(&self) -> FinetuneSection {
        self.finetune.clone().unwrap_or_default()
    }
}

fn parse_transfer(s: &str, field: &str) -> Result<Transfer> {
    s.parse().map_err(|e| config_err(field, e))
}

fn parse_direction(s: &str) -> Result<Direction> {
    s.parse().map_err(|e| config_err("scheda.direction", e))
}

fn noise_family(s: &str) -> Result<&'static str> {
    match s {
        "masking" | "mask" => Ok("masking"),
        "gaussian" => Ok("gaussian"),
        other => Err(config_err("train.noise", format!("unknown noise `{other}`"))),
    }
}

fn resolve_data(d: &mut DataConfig) -> Result<()> {
    let unused = |name: &str, set: bool, kind: &str| {
        if set {
            Err(config_err(&format!("data.{name}"), format!("not used by kind {kind}")))
        } else {
            Ok(())
        }
    };
    let synthetic_fields = d.generator.is_some()
        || d.side.is_some()
        || d.flip.is_some()
        || d.base.is_some()
        || d.planted.is_some();
    match d.kind {
        DataKind::Cifar10 => {
            let dir = d.path.as_ref().ok_or_else(|| config_err("data.path", "required for cifar10"))?;
            if !dir.is_dir() {
                return Err(config_err("data.path", format!("{} is not a directory", dir.display())));
            }
            unused("test_path", d.test_path.is_some(), "cifar10")?;
            unused("vocab", d.vocab.is_some(), "cifar10")?;
            unused("top_k", d.top_k.is_some(), "cifar10")?;
            unused("generator", synthetic_fields, "cifar10")?;
        }
        DataKind::Bow => {
            for p in d.path.iter().chain(&d.test_path) {
                if !p.is_file() {
                    return Err(config_err("data", format!("{} does not exist", p.display())));
                }
            }
            if d.path.is_none() {
                return Err(config_err("data.path", "required for bow"));
            }
            if d.vocab.is_none_or(|v| v == 0) {
                return Err(config_err("data.vocab", "a positive vocabulary size is required for bow"));
            }
            unused("test", d.test.is_some(), "bow (use test_path)")?;
            unused("generator", synthetic_fields, "bow")?;
        }
        DataKind::Synthetic => {
            unused("path", d.path.is_some(), "synthetic")?;
            unused("test_path", d.test_path.is_some(), "synthetic")?;
            unused("top_k", d.top_k.is_some(), "synthetic")?;
            let generator = *d.generator.get_or_insert(Generator::Bars);
            match generator {
                Generator::Bars => {
                    unused("vocab", d.vocab.is_some(), "synthetic bars")?;
                    unused("base", d.base.is_some() || d.planted.is_some(), "synthetic bars")?;
                    if *d.side.get_or_insert(4) < 2 {
                        return Err(config_err("data.side", "must be at least 2"));
                    }
                    let flip = *d.flip.get_or_insert(0.05);
                    if !(0.0..=1.0).contains(&flip) {
                        return Err(config_err("data.flip", "must lie in [0, 1]"));
                    }
                }
                Generator::Bow => {
                    unused("side", d.side.is_some() || d.flip.is_some(), "synthetic bow")?;
                    if *d.vocab.get_or_insert(100) == 0 {
                        return Err(config_err("data.vocab", "must be at least 1"));
                    }
                    for (name, v) in [
                        ("base", *d.base.get_or_insert(0.05)),
                        ("planted", *d.planted.get_or_insert(0.3)),
                    ] {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(config_err(&format!("data.{name}"), "must lie in [0, 1]"));
                        }
                    }
                }
            }
            d.test.get_or_insert(0);
        }
    }
    if d.train == 0 {
        return Err(config_err("data.train", "at least one training example is needed"));
    }
    Ok(())
}
