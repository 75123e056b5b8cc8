use proptest::prelude::*;
use scheda_core::analysis::{
    activation_vectors, cosine, export_filters, match_counts, match_counts_csv, render_filters,
    ActivationSet, Channels, Grid,
};
use scheda_core::dae::{Architecture, DaeParams};
use scheda_core::numerics::{Matrix, Rng};

fn random_set(rng: &mut Rng, features: usize, points: usize, tag: &str) -> ActivationSet {
    ActivationSet {
        acts: Matrix::new(features, points, rng.uniform(0.01, 1.0, features * points).unwrap()).unwrap(),
        tag: tag.into(),
    }
}

/// Straight double loop over features with strict improvement, so the
/// first reference reaching the maximum keeps it.
fn brute_force(target: &ActivationSet, refs: &[ActivationSet]) -> Vec<usize> {
    let mut counts = vec![0; refs.len()];
    for i in 0..target.acts.rows() {
        let mut best = (f64::NEG_INFINITY, 0);
        for (r, set) in refs.iter().enumerate() {
            for j in 0..set.acts.rows() {
                let c = cosine(target.acts.row(i), set.acts.row(j)).unwrap();
                if c > best.0 {
                    best = (c, r);
                }
            }
        }
        counts[best.1] += 1;
    }
    counts
}

#[test]
fn five_features_three_references_match_enumeration() {
    for seed in 0..50 {
        let mut rng = Rng::new(seed);
        let target = random_set(&mut rng, 5, 10, "target");
        let refs: Vec<_> = ["0.1", "0.3", "0.5"]
            .iter()
            .map(|t| random_set(&mut rng, 5, 10, t))
            .collect();
        assert_eq!(match_counts(&target, &refs).unwrap(), brute_force(&target, &refs));
    }
}

#[test]
fn ties_go_to_the_earliest_reference() {
    let mut rng = Rng::new(3);
    let target = random_set(&mut rng, 4, 6, "t");
    let copy = ActivationSet { tag: "b".into(), ..target.clone() };
    let first = ActivationSet { tag: "a".into(), ..target.clone() };
    assert_eq!(match_counts(&target, &[first, copy]).unwrap(), vec![4, 0]);
}

#[test]
fn published_row_covers_every_feature() {
    // Seven reference levels, 2000 target features.
    let row = [374, 550, 444, 299, 169, 92, 72];
    assert_eq!(row.iter().sum::<usize>(), 2000);
}

#[test]
fn counts_from_trained_encoders_cover_the_target() {
    let mut rng = Rng::new(8);
    let data = Matrix::new(30, 9, rng.uniform(0.0, 1.0, 270).unwrap()).unwrap();
    let model = |rng: &mut Rng, tag: &str| {
        activation_vectors(&DaeParams::init(9, Architecture::sigmoid(7), rng), &data, tag).unwrap()
    };
    let target = model(&mut rng, "scheda");
    let refs: Vec<_> = ["0.1", "0.2", "0.3"].iter().map(|t| model(&mut rng, t)).collect();
    let counts = match_counts(&target, &refs).unwrap();
    assert_eq!(counts.iter().sum::<usize>(), 7);
    let csv = match_counts_csv(&refs, &counts);
    assert!(csv.starts_with("reference_tag,count\n0.1,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn cosine_closed_forms() {
    assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert!(cosine(&[0.0, 0.0], &[1.0, 1.0]).is_err());
}

#[test]
fn four_rgb_filters_in_a_two_by_two_grid() {
    let mut rng = Rng::new(1);
    let w = Matrix::new(4, 3072, rng.uniform(-1.0, 1.0, 4 * 3072).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("filters.ppm");
    let img = export_filters(&w, 4, Grid { rows: 2, cols: 2 }, Channels::RgbPlanar, &path).unwrap();
    assert_eq!((img.width, img.height), (65, 65));
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P6\n65 65\n255\n"));
    assert_eq!(bytes.len(), b"P6\n65 65\n255\n".len() + 65 * 65 * 3);
    // Separator row and column are black.
    for k in 0..65 {
        assert_eq!(img.pixel(32, k), [0, 0, 0]);
        assert_eq!(img.pixel(k, 32), [0, 0, 0]);
    }
}

#[test]
fn too_many_filters_for_the_grid() {
    let w = Matrix::zeros(5, 16);
    assert!(render_filters(&w, 5, Grid { rows: 2, cols: 2 }, Channels::Gray).is_err());
    assert!(render_filters(&w, 4, Grid { rows: 2, cols: 2 }, Channels::RgbPlanar).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_ignore_feature_order_within_a_reference(seed in any::<u64>(), which in 0usize..3) {
        let mut rng = Rng::new(seed);
        let target = random_set(&mut rng, 6, 8, "t");
        let mut refs: Vec<_> = (0..3).map(|k| random_set(&mut rng, 4, 8, &k.to_string())).collect();
        let before = match_counts(&target, &refs).unwrap();
        let perm = rng.permutation(4);
        refs[which].acts = refs[which].acts.select_rows(&perm);
        prop_assert_eq!(match_counts(&target, &refs).unwrap(), before.clone());
        prop_assert_eq!(before.iter().sum::<usize>(), 6);
    }

    #[test]
    fn tile_arithmetic(side in 1usize..6, rows in 1usize..4, cols in 1usize..4) {
        let count = rows * cols;
        let w = Matrix::filled(count, side * side, 0.5);
        let img = render_filters(&w, count, Grid { rows, cols }, Channels::Gray).unwrap();
        prop_assert_eq!(img.width, cols * (side + 1) - 1);
        prop_assert_eq!(img.height, rows * (side + 1) - 1);
        // Constant filters land mid-gray.
        prop_assert_eq!(img.pixel(0, 0), [127, 127, 127]);
    }
}
