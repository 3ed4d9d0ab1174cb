//! The shipped head-model fixture must stay in sync with the generator.

use shr_core::geometry::{make_synthetic_head, Model3D};

const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/head_model.json"
);

#[test]
fn fixture_matches_generator() {
    let text = std::fs::read_to_string(FIXTURE).expect("fixture model present in repo");
    let fixture = Model3D::from_json(&text).unwrap();
    let generated = make_synthetic_head(2000, 42);
    assert_eq!(fixture, generated, "fixtures/head_model.json drifted; regenerate with `shr make-model`");
}

#[test]
fn fixture_satisfies_invariants() {
    let text = std::fs::read_to_string(FIXTURE).unwrap();
    let model = Model3D::from_json(&text).unwrap();
    model.validate().unwrap();
    assert_eq!(model.points.len(), 2000);
    assert_eq!(model.eval_landmark_indices().len(), 38);
    // Landmarks centered: the centroid of the full cloud is the origin.
    let centroid = model
        .points
        .iter()
        .fold(nalgebra::Vector3::zeros(), |a, p| a + p.coords)
        / model.points.len() as f64;
    assert!(centroid.norm() < 1e-9, "centroid {centroid:?}");
}
