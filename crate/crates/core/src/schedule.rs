//! Scheduled noise levels: train at a starting level, then step the level
//! down (or up, as a control) and continue for a fixed number of epochs per
//! level. Also per-minibatch sampled noise levels.

use std::fmt::Write as _;

use crate::dae::{
    continue_da, epoch_with_levels, sgd_epoch, Architecture, DaeParams, TrainConfig, TrainStreams,
};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Learning rate used after the first level switch unless overridden.
pub const SCHEDULED_LEARNING_RATE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Decreasing,
    Increasing,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decreasing" | "down" => Ok(Direction::Decreasing),
            "increasing" | "up" => Ok(Direction::Increasing),
            other => Err(Error::Config(format!("unknown schedule direction `{other}`"))),
        }
    }
}

/// Levels are handled as integer hundredths so that e.g. 0.7 - 6 × 0.1
/// lands exactly on 0.1.
fn hundredths(v: f64, what: &str) -> Result<i64> {
    let scaled = v * 100.0;
    let r = scaled.round();
    if !v.is_finite() || (scaled - r).abs() > 1e-6 {
        return Err(Error::Argument(format!(
            "{what} = {v} is not a multiple of 0.01"
        )));
    }
    Ok(r as i64)
}

/// Levels `[ν0, ν0 ∓ Δν, …]`, `switches + 1` of them.
pub fn build_schedule(start: f64, step: f64, switches: usize, direction: Direction) -> Result<Vec<f64>> {
    let s0 = hundredths(start, "initial noise level")?;
    let ds = hundredths(step, "noise step")?;
    if ds <= 0 {
        return Err(Error::Argument(format!("noise step must be > 0, got {step}")));
    }
    if !(0..=100).contains(&s0) {
        return Err(Error::Argument(format!(
            "initial noise level must lie in [0, 1], got {start}"
        )));
    }
    let sign = match direction {
        Direction::Decreasing => -1,
        Direction::Increasing => 1,
    };
    let last = s0 + sign * ds * switches as i64;
    if !(0..=100).contains(&last) {
        return Err(Error::Argument(format!(
            "schedule from {start} with step {step} over {switches} switches leaves [0, 1] (ends at {})",
            last as f64 / 100.0
        )));
    }
    Ok((0..=switches as i64)
        .map(|t| (s0 + sign * ds * t) as f64 / 100.0)
        .collect())
}

/// A full noise schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    /// ν0.
    pub start: f64,
    /// Δν.
    pub step: f64,
    /// T, the number of level switches.
    pub switches: usize,
    /// K, epochs at each level after the first switch.
    pub epochs_per_level: usize,
    /// Epochs at ν0.
    pub initial_epochs: usize,
    pub direction: Direction,
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_level == 0 {
            return Err(Error::Argument("epochs per level must be at least 1".into()));
        }
        build_schedule(self.start, self.step, self.switches, self.direction).map(drop)
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        self.validate()?;
        build_schedule(self.start, self.step, self.switches, self.direction)
    }

    pub fn total_epochs(&self) -> usize {
        self.initial_epochs + self.switches * self.epochs_per_level
    }

    /// Level in force during zero-based global epoch `epoch`, or `None`
    /// past the end of the schedule.
    pub fn level_at_epoch(&self, epoch: usize) -> Option<f64> {
        let levels = self.levels().ok()?;
        if epoch < self.initial_epochs {
            return Some(levels[0]);
        }
        let t = 1 + (epoch - self.initial_epochs) / self.epochs_per_level;
        levels.get(t).copied()
    }

    /// Plain-text `key=value` manifest.
    pub fn manifest(&self, seed: u64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nu0={}", self.start);
        let _ = writeln!(s, "delta_nu={}", self.step);
        let _ = writeln!(s, "T={}", self.switches);
        let _ = writeln!(s, "K={}", self.epochs_per_level);
        let _ = writeln!(s, "initial_epochs={}", self.initial_epochs);
        let _ = writeln!(
            s,
            "direction={}",
            match self.direction {
                Direction::Decreasing => "decreasing",
                Direction::Increasing => "increasing",
            }
        );
        let _ = writeln!(s, "seed={seed}");
        s
    }
}

/// Loss of one epoch, tagged with its one-based global index and level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub level: f64,
    pub loss: f64,
}

/// Parameters at the end of one noise level.
#[derive(Clone, Debug)]
pub struct LevelCheckpoint {
    pub level: f64,
    pub params: DaeParams,
}

#[derive(Clone, Debug)]
pub struct ScheduleOutcome {
    pub params: DaeParams,
    /// One per level after ν0, taken after its last epoch.
    pub checkpoints: Vec<LevelCheckpoint>,
    pub trace: Vec<EpochRecord>,
}

/// Continues `base` (already trained at ν0) through levels ν1..νT, `K`
/// epochs each, with fresh generators seeded from `cfg.seed`.
///
/// `cfg.corruption` supplies the noise family; its level is ignored.
pub fn train_scheda(
    data: &Matrix,
    base: DaeParams,
    sched: &NoiseSchedule,
    cfg: &TrainConfig,
) -> Result<ScheduleOutcome> {
    train_scheda_with_streams(data, base, sched, cfg, &mut TrainStreams::new(cfg.seed))
}

/// As [`train_scheda`], drawing from caller-owned generators.
pub fn train_scheda_with_streams(
    data: &Matrix,
    base: DaeParams,
    sched: &NoiseSchedule,
    cfg: &TrainConfig,
    streams: &mut TrainStreams,
) -> Result<ScheduleOutcome> {
    let levels = sched.levels()?;
    cfg.validate()?;
    cfg.loss.check_decoder(base.decoder)?;
    let mut params = base;
    let mut checkpoints = Vec::with_capacity(sched.switches);
    let mut trace = Vec::with_capacity(sched.switches * sched.epochs_per_level);
    let mut epoch = sched.initial_epochs;
    for &level in &levels[1..] {
        let level_cfg = cfg.with_level(level);
        for _ in 0..sched.epochs_per_level {
            let loss = sgd_epoch(&mut params, data, &level_cfg, streams)?;
            epoch += 1;
            trace.push(EpochRecord { epoch, level, loss });
        }
        log::debug!("finished level {level} at epoch {epoch}");
        checkpoints.push(LevelCheckpoint {
            level,
            params: params.clone(),
        });
    }
    Ok(ScheduleOutcome {
        params,
        checkpoints,
        trace,
    })
}

/// Full run from initialization: `initial_epochs` at ν0 with
/// `initial_cfg`, then the scheduled levels with `scheduled_cfg`, all on
/// one set of generators seeded from `initial_cfg.seed`.
pub fn train_scheda_from_scratch(
    data: &Matrix,
    arch: Architecture,
    sched: &NoiseSchedule,
    initial_cfg: &TrainConfig,
    scheduled_cfg: &TrainConfig,
) -> Result<ScheduleOutcome> {
    let levels = sched.levels()?;
    let seed = initial_cfg.seed;
    let mut streams = TrainStreams::new(seed);
    let init = DaeParams::init(data.cols(), arch, &mut TrainStreams::init_rng(seed));
    let first = TrainConfig {
        epochs: sched.initial_epochs,
        ..initial_cfg.with_level(levels[0])
    };
    let warm = continue_da(data, init, &first, &mut streams)?;
    let mut out = train_scheda_with_streams(data, warm.params, sched, scheduled_cfg, &mut streams)?;
    let mut trace: Vec<EpochRecord> = warm
        .trace
        .iter()
        .enumerate()
        .map(|(i, &loss)| EpochRecord {
            epoch: i + 1,
            level: levels[0],
            loss,
        })
        .collect();
    trace.append(&mut out.trace);
    out.trace = trace;
    Ok(out)
}

/// How a noise level is drawn for each minibatch.
#[derive(Clone, Debug, PartialEq)]
pub enum SampledNoiseSpec {
    ContinuousUniform { lo: f64, hi: f64 },
    DiscreteUniform(Vec<f64>),
}

impl SampledNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SampledNoiseSpec::ContinuousUniform { lo, hi } => {
                if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                    return Err(Error::Argument(format!(
                        "sampling interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
                    )));
                }
            }
            SampledNoiseSpec::DiscreteUniform(levels) => {
                if levels.is_empty() {
                    return Err(Error::Argument("empty set of noise levels".into()));
                }
                if let Some(bad) = levels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::Argument(format!("noise level {bad} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut Rng) -> Result<f64> {
        match self {
            SampledNoiseSpec::ContinuousUniform { lo, hi } => rng.uniform_one(*lo, *hi),
            SampledNoiseSpec::DiscreteUniform(levels) => Ok(levels[rng.below(levels.len())]),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SampledOutcome {
    pub params: DaeParams,
    pub trace: Vec<f64>,
    /// Level drawn for every minibatch, in training order.
    pub levels: Vec<f64>,
}

/// One epoch with a fresh level drawn from `spec` for every minibatch.
/// Drawn levels are appended to `levels`.
pub fn sampled_epoch(
    p: &mut DaeParams,
    data: &Matrix,
    spec: &SampledNoiseSpec,
    cfg: &TrainConfig,
    streams: &mut TrainStreams,
    levels: &mut Vec<f64>,
) -> Result<f64> {
    epoch_with_levels(p, data, cfg, streams, |rng| {
        let level = spec.draw(rng)?;
        levels.push(level);
        Ok(cfg.corruption.with_level(level))
    })
}

/// Like [`crate::dae::train_da`], but the noise level is redrawn from
/// `spec` for every minibatch. Level draws use their own substream, so a
/// degenerate interval reproduces fixed-level training exactly.
pub fn train_sampled(
    data: &Matrix,
    arch: Architecture,
    spec: &SampledNoiseSpec,
    cfg: &TrainConfig,
) -> Result<SampledOutcome> {
    spec.validate()?;
    cfg.validate()?;
    cfg.loss.check_decoder(arch.decoder)?;
    let mut params = DaeParams::init(data.cols(), arch, &mut TrainStreams::init_rng(cfg.seed));
    let mut streams = TrainStreams::new(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut levels = Vec::new();
    for _ in 0..cfg.epochs {
        trace.push(sampled_epoch(&mut params, data, spec, cfg, &mut streams, &mut levels)?);
    }
    Ok(SampledOutcome {
        params,
        trace,
        levels,
    })
}
