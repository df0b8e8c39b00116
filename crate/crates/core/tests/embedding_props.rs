use tgi_core::embedding::*;
use tgi_core::geometry::{render_tolerance, DefectParams, Family, WorkpieceSpec};
use tgi_core::rng;
use rand::seq::SliceRandom;

fn full_error(model: &Autoencoder, ds: &AeDataset) -> ReconstructionError {
    let maps: Vec<_> = ds.items.iter().map(|(_, m)| m).collect();
    reconstruction_error(model, &maps).unwrap()
}

#[test]
fn identical_maps_are_learned_almost_exactly() {
    let spec = WorkpieceSpec::socket_2xn(2);
    let map = render_tolerance(&spec, &DefectParams::nominal(&spec), 1.0).unwrap();
    let ds = AeDataset { family: Family::Circle, items: vec![(spec, map); 20] };
    let out = train_autoencoder(&ds, &AeConfig { epochs: 300, batch_size: 6, seed: 3, ..Default::default() }).unwrap();
    assert!(out.heldout.rms < 1e-3, "held-out rms {}", out.heldout.rms);
}

#[test]
fn dataset_order_barely_matters() {
    let ds = generate_dataset(Family::Circle, 120, 5).unwrap();
    let mut shuffled = ds.clone();
    shuffled.items.shuffle(&mut rng::from_seed(17));
    let cfg = AeConfig { epochs: 40, seed: 2, ..Default::default() };
    let a = full_error(&train_autoencoder(&ds, &cfg).unwrap().model, &ds);
    let b = full_error(&train_autoencoder(&shuffled, &cfg).unwrap().model, &ds);
    let rel = (a.mae - b.mae).abs() / a.mae.max(b.mae);
    assert!(rel < 0.10, "mae {} vs {}", a.mae, b.mae);
}

#[test]
fn embeddings_factor_through_the_map() {
    let ds = generate_dataset(Family::Circle, 40, 9).unwrap();
    let model = train_autoencoder(&ds, &AeConfig { epochs: 10, seed: 1, ..Default::default() }).unwrap().model;
    // A single column makes the column interval irrelevant to the geometry.
    let a = WorkpieceSpec::circle_grid(2, 1, 0.3, 0.5, 7.62, 2.54);
    let b = WorkpieceSpec::circle_grid(2, 1, 0.3, 0.5, 7.62, 9.0);
    assert_eq!(encode(&model, &a).unwrap(), encode(&model, &b).unwrap());
    assert_eq!(encode(&model, &a).unwrap(), encode(&model, &a).unwrap());
    let (p, q) = (encode(&model, &WorkpieceSpec::socket_2xn(2)).unwrap(), encode(&model, &WorkpieceSpec::socket_2xn(8)).unwrap());
    assert!(p.iter().zip(&q).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() > 0.0);
    let psis: Vec<[f64; 5]> = ds.items.iter().map(|(_, m)| model.encode_map(m).unwrap()).collect();
    assert!(psis.iter().flatten().all(|v| v.is_finite()));
    let var: f64 = (0..5)
        .map(|k| {
            let m = psis.iter().map(|p| p[k]).sum::<f64>() / psis.len() as f64;
            psis.iter().map(|p| (p[k] - m).powi(2)).sum::<f64>()
        })
        .sum();
    assert!(var > 0.0);
}

#[test]
fn dataset_is_seeded_and_maps_are_valid() {
    assert_eq!(generate_dataset(Family::Polygon, 1, 4).unwrap(), generate_dataset(Family::Polygon, 1, 4).unwrap());
    for family in [Family::Circle, Family::Polygon] {
        for (_, m) in &generate_dataset(family, 30, 6).unwrap().items {
            assert!(m.max_value() > 0.0);
            assert!((0..28).all(|i| (0..28).all(|j| m.get(i, j) >= 0.0)));
        }
    }
}
