#![allow(dead_code)]

use scheda_core::composite::{composite_grad, composite_loss, CompositeParams};
use scheda_core::dae::{grad, reconstruction_loss, DaeParams, Loss};
use scheda_core::eval::{finetune_grad, FinetuneNetwork};
use scheda_core::numerics::{Matrix, Rng, Transfer};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;
/// Components whose analytic and numeric values are both below this are
/// compared in absolute terms; central differences at step 1e-5 carry
/// ~1e-11 of roundoff, which is meaningless relative to a ~0 gradient.
pub const FD_FLOOR: f64 = 1e-4;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::new(rows, cols, rng.uniform(lo, hi, rows * cols).unwrap()).unwrap()
}

/// Central difference of `f` with respect to every entry of `slot(params)`.
fn central_differences<P: Clone>(
    params: &P,
    len: usize,
    slot: impl Fn(&mut P) -> &mut [f64],
    f: &impl Fn(&P) -> f64,
) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let mut plus = params.clone();
            slot(&mut plus)[i] += FD_STEP;
            let mut minus = params.clone();
            slot(&mut minus)[i] -= FD_STEP;
            (f(&plus) - f(&minus)) / (2.0 * FD_STEP)
        })
        .collect()
}

fn max_rel(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max)
}

/// Worst relative error of [`grad`] against central differences.
pub fn dae_fd_error(p: &DaeParams, x: &Matrix, x_tilde: &Matrix, loss: Loss) -> f64 {
    let (g, _) = grad(p, x, x_tilde, loss).unwrap();
    let f = |q: &DaeParams| reconstruction_loss(q, x, x_tilde, loss).unwrap();
    let nw = central_differences(p, p.w.as_slice().len(), |q| q.w.as_mut_slice(), &f);
    let nb = central_differences(p, p.b.len(), |q| &mut q.b, &f);
    let nbp = central_differences(p, p.b_prime.len(), |q| &mut q.b_prime, &f);
    max_rel(g.w.as_slice(), &nw)
        .max(max_rel(&g.b, &nb))
        .max(max_rel(&g.b_prime, &nbp))
}

pub fn composite_fd_error(p: &CompositeParams, x: &Matrix, views: &[Matrix], loss: Loss) -> f64 {
    let (g, _) = composite_grad(p, x, views, loss).unwrap();
    let f = |q: &CompositeParams| composite_loss(q, x, views, loss).unwrap();
    let mut worst = max_rel(
        &g.b_prime,
        &central_differences(p, p.b_prime.len(), |q| &mut q.b_prime, &f),
    );
    for s in 0..p.partitions.len() {
        let (gw, gb) = &g.partitions[s];
        let nw = central_differences(p, gw.as_slice().len(), |q| q.partitions[s].w.as_mut_slice(), &f);
        let nb = central_differences(p, gb.len(), |q| &mut q.partitions[s].b, &f);
        worst = worst.max(max_rel(gw.as_slice(), &nw)).max(max_rel(gb, &nb));
    }
    worst
}

pub fn finetune_fd_error(net: &FinetuneNetwork, x: &Matrix, labels: &[usize]) -> f64 {
    let (g, _) = finetune_grad(net, x, labels).unwrap();
    let f = |q: &FinetuneNetwork| finetune_grad(q, x, labels).unwrap().1;
    max_rel(g.w.as_slice(), &central_differences(net, net.w.as_slice().len(), |q| q.w.as_mut_slice(), &f))
        .max(max_rel(&g.b, &central_differences(net, net.b.len(), |q| &mut q.b, &f)))
        .max(max_rel(
            g.out_w.as_slice(),
            &central_differences(net, net.out_w.as_slice().len(), |q| q.out_w.as_mut_slice(), &f),
        ))
        .max(max_rel(&g.out_b, &central_differences(net, net.out_b.len(), |q| &mut q.out_b, &f)))
}

/// Random autoencoder with parameters of moderate size and nonzero biases.
pub fn random_dae(rng: &mut Rng, d: usize, h: usize, enc: Transfer, dec: Transfer) -> DaeParams {
    DaeParams::new(
        random_matrix(rng, h, d, -1.0, 1.0),
        rng.uniform(-0.5, 0.5, h).unwrap(),
        rng.uniform(-0.5, 0.5, d).unwrap(),
        enc,
        dec,
    )
    .unwrap()
}

/// The 50-example, 16-pixel bars dataset used by the training checks.
pub fn bars50() -> Matrix {
    scheda_core::data::synthetic::bars(50, 4, 0.0, 2024).features
}

/// Every (loss, encoder, decoder) triple the gradient code accepts.
pub fn supported_pairings() -> Vec<(Loss, Transfer, Transfer)> {
    let transfers = [Transfer::Sigmoid, Transfer::Relu, Transfer::Linear];
    let mut out = Vec::new();
    for enc in transfers {
        out.push((Loss::CrossEntropy, enc, Transfer::Sigmoid));
        for dec in transfers {
            out.push((Loss::SquaredError, enc, dec));
        }
    }
    out
}
