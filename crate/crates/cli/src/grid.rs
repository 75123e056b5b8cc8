//! Hyperparameter grids: canonical enumeration, concurrent runs, and
//! selection on validation error.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use scheda_core::eval::select_model;
use scheda_core::numerics::derive_seed;
use scheda_core::Error;

use crate::config::ExperimentConfig;
use crate::run::run_experiment;

/// One grid cell: its position in canonical order and the overrides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub level: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    pub valid_error: f64,
    pub test_error: Option<f64>,
}

pub const GRID_HEADER: &str = "index,noise_level,learning_rate,epochs,seed,valid_error,test_error";

fn sorted_unique(mut v: Vec<f64>, descending: bool) -> Vec<f64> {
    v.sort_by(|a, b| if descending { b.total_cmp(a) } else { a.total_cmp(b) });
    v.dedup();
    v
}

/// Cells ordered by noise level (descending), then learning rate and
/// epochs (ascending). Each cell's seed is derived from the master seed
/// and its index, so results do not depend on execution order.
pub fn enumerate(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let g = cfg.grid.clone().unwrap_or_default();
    let levels = sorted_unique(g.levels.unwrap_or_else(|| vec![cfg.train.level]), true);
    let rates = sorted_unique(g.learning_rates.unwrap_or_else(|| vec![cfg.train.learning_rate]), false);
    let mut epochs = g.epochs.unwrap_or_else(|| vec![cfg.train.epochs]);
    epochs.sort_unstable();
    epochs.dedup();
    let mut out = Vec::new();
    for &level in &levels {
        for &learning_rate in &rates {
            for &e in &epochs {
                let index = out.len();
                out.push(GridPoint {
                    index,
                    level,
                    learning_rate,
                    epochs: e,
                    seed: derive_seed(cfg.seed, index as u64),
                });
            }
        }
    }
    out
}

/// The configuration of one cell, checked again after the overrides.
pub fn cell_config(cfg: &ExperimentConfig, p: &GridPoint) -> scheda_core::Result<ExperimentConfig> {
    let mut c = cfg.clone();
    c.grid = None;
    c.seed = p.seed;
    c.train.level = p.level;
    c.train.learning_rate = p.learning_rate;
    c.train.epochs = p.epochs;
    c.resolve()
}

/// Runs every cell under `out/run-NNN`, at most `jobs` at a time, and
/// returns the rows in canonical order with the selected index.
pub fn run_grid(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> anyhow::Result<(Vec<GridRow>, usize)> {
    if cfg.data.valid == 0 {
        return Err(Error::Config("grid selection needs validation examples (data.valid > 0)".into()).into());
    }
    let points = enumerate(cfg);
    let configs = points
        .iter()
        .map(|p| cell_config(cfg, p))
        .collect::<scheda_core::Result<Vec<_>>>()?;
    std::fs::create_dir_all(out)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<anyhow::Result<GridRow>>>> =
        Mutex::new((0..points.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, points.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let p = points[i];
                log::info!(
                    "grid cell {i}: level {}, learning rate {}, {} epochs",
                    p.level,
                    p.learning_rate,
                    p.epochs
                );
                let row = run_experiment(&configs[i], &out.join(format!("run-{i:03}"))).map(|s| {
                    let r = s.report.expect("validation split is nonempty");
                    GridRow {
                        point: p,
                        valid_error: r.selection.valid_error,
                        test_error: r.test_error,
                    }
                });
                results.lock().unwrap()[i] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let best = select_model(&rows.iter().map(|r| (r.point.index, r.valid_error)).collect::<Vec<_>>())?;
    std::fs::write(out.join("grid.csv"), grid_csv(&rows))?;
    std::fs::write(out.join("selection.txt"), selection_text(&rows[best]))?;
    Ok((rows, best))
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut s = format!("{GRID_HEADER}\n");
    for r in rows {
        let p = &r.point;
        let test = r.test_error.map(|t| t.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{test}",
            p.index, p.level, p.learning_rate, p.epochs, p.seed, r.valid_error
        );
    }
    s
}

pub fn selection_text(r: &GridRow) -> String {
    let p = &r.point;
    let mut s = String::new();
    let _ = writeln!(s, "index={}", p.index);
    let _ = writeln!(s, "noise_level={}", p.level);
    let _ = writeln!(s, "learning_rate={}", p.learning_rate);
    let _ = writeln!(s, "epochs={}", p.epochs);
    let _ = writeln!(s, "seed={}", p.seed);
    let _ = writeln!(s, "valid_error={}", r.valid_error);
    if let Some(t) = r.test_error {
        let _ = writeln!(s, "test_error={t}");
    }
    let _ = writeln!(s, "run=run-{:03}", p.index);
    s
}
