mod common;

use common::*;
use scheda_core::composite::CompositeParams;
use scheda_core::corruption::mask_corrupt;
use scheda_core::dae::Loss;
use scheda_core::eval::FinetuneNetwork;
use scheda_core::numerics::{Rng, Transfer};

#[test]
fn reference_instance_d6_h4_n3() {
    let mut rng = Rng::new(606);
    let p = random_dae(&mut rng, 6, 4, Transfer::Sigmoid, Transfer::Sigmoid);
    let x = random_matrix(&mut rng, 3, 6, 0.0, 1.0);
    let xt = mask_corrupt(&x, 0.3, &mut rng).unwrap();
    let err = dae_fd_error(&p, &x, &xt, Loss::CrossEntropy);
    assert!(err < FD_TOL, "max relative error {err:e}");
}

#[test]
fn every_pairing_on_twenty_instances() {
    for (loss, enc, dec) in supported_pairings() {
        let mut rng = Rng::new(17);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let d = 2 + rng.below(7);
            let h = 1 + rng.below(6);
            let n = 1 + rng.below(4);
            let p = random_dae(&mut rng, d, h, enc, dec);
            let x = random_matrix(&mut rng, n, d, 0.0, 1.0);
            let xt = mask_corrupt(&x, 0.25, &mut rng).unwrap();
            worst = worst.max(dae_fd_error(&p, &x, &xt, loss));
        }
        assert!(
            worst < FD_TOL,
            "{} / {} / {}: max relative error {worst:e}",
            loss.name(),
            enc.name(),
            dec.name()
        );
    }
}

#[test]
fn composite_two_partitions_of_three() {
    let mut rng = Rng::new(33);
    for _ in 0..20 {
        let mut p = CompositeParams::init(
            6,
            &[(3, 0.2), (3, 0.4)],
            Transfer::Sigmoid,
            Transfer::Sigmoid,
            &mut rng,
        )
        .unwrap();
        p.b_prime = rng.uniform(-0.5, 0.5, 6).unwrap();
        let x = random_matrix(&mut rng, 4, 6, 0.0, 1.0);
        let views = vec![
            mask_corrupt(&x, 0.2, &mut rng).unwrap(),
            mask_corrupt(&x, 0.4, &mut rng).unwrap(),
        ];
        let err = composite_fd_error(&p, &x, &views, Loss::CrossEntropy);
        assert!(err < FD_TOL, "max relative error {err:e}");
    }
}

#[test]
fn finetune_network_d6_h4_c3() {
    let mut rng = Rng::new(44);
    for _ in 0..20 {
        let p = random_dae(&mut rng, 6, 4, Transfer::Sigmoid, Transfer::Sigmoid);
        let mut net = FinetuneNetwork::from_encoder(&p, 3, 0.5, &mut rng).unwrap();
        net.out_b = rng.uniform(-0.5, 0.5, 3).unwrap();
        let x = random_matrix(&mut rng, 4, 6, 0.0, 1.0);
        let labels: Vec<usize> = (0..4).map(|_| rng.below(3)).collect();
        let err = finetune_fd_error(&net, &x, &labels);
        assert!(err < FD_TOL, "max relative error {err:e}");
    }
}
