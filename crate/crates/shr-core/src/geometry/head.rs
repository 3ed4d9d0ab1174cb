//! Deterministic synthetic head model.
//!
//! A half-ellipsoid point cloud with 19 fiducial points, 21 non-fiducial
//! points (17 facial-contour + 4 nose-ridge), outward normals, and the two
//! polyline orders. Landmark semantics: 6 brow, 6 eye, 3 nose, 3 mouth, 1
//! chin FPs; nose tip and chin center are shared with the NFP tables.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Model3D, NUM_FP};

/// Ellipsoid semi-axes in model units (x: half width, y: half height,
/// z: depth).
const RX: f64 = 65.0;
const RY: f64 = 85.0;
const RZ: f64 = 60.0;

/// Fiducial point slots, in table order.
pub const FP_BROW_L_OUTER: usize = 0;
pub const FP_BROW_R_OUTER: usize = 5;
pub const FP_NOSE_TIP: usize = 13;
pub const FP_MOUTH_CENTER: usize = 16;
pub const FP_CHIN_CENTER: usize = 18;

/// (x, y) of the 19 FPs; +y points down, so brows are negative.
const FP_XY: [(f64, f64); NUM_FP] = [
    (-38.0, -30.0), // brow left outer
    (-26.0, -33.0), // brow left center
    (-14.0, -30.0), // brow left inner
    (14.0, -30.0),  // brow right inner
    (26.0, -33.0),  // brow right center
    (38.0, -30.0),  // brow right outer
    (-33.0, -15.0), // eye left outer
    (-24.0, -14.0), // eye left center
    (-15.0, -15.0), // eye left inner
    (15.0, -15.0),  // eye right inner
    (24.0, -14.0),  // eye right center
    (33.0, -15.0),  // eye right outer
    (-12.0, 14.0),  // nose left
    (0.0, 10.0),    // nose tip (raised off the ellipsoid)
    (12.0, 14.0),   // nose right
    (-22.0, 40.0),  // mouth left
    (0.0, 46.0),    // mouth center
    (22.0, 40.0),   // mouth right
    (0.0, 78.0),    // chin center
];

const NOSE_TIP_Z: f64 = 76.0;

/// Nose ridge (x, y, z), bridge to tip; the tip entry reuses the FP point.
const NOSE_RIDGE: [(f64, f64, f64); 3] =
    [(0.0, -18.0, 56.0), (0.0, -8.0, 62.0), (0.0, 1.0, 69.0)];

fn surface_point(x: f64, y: f64) -> Point3<f64> {
    let r2 = (x / RX).powi(2) + (y / RY).powi(2);
    let z = RZ * (1.0 - r2).max(0.0).sqrt();
    Point3::new(x, y, z)
}

fn ellipsoid_normal(p: &Point3<f64>) -> Vector3<f64> {
    Vector3::new(p.x / (RX * RX), p.y / (RY * RY), p.z / (RZ * RZ)).normalize()
}

/// Builds the synthetic head. Identical output for identical inputs.
///
/// Layout: the 38 unique landmarks occupy indices 0..38 (19 FPs, then the
/// non-shared NFPs: contour without the chin, nose ridge without the tip);
/// seeded filler points cover the front of the ellipsoid up to `n_points`.
pub fn make_synthetic_head(n_points: usize, seed: u64) -> Model3D {
    assert!(n_points >= 500, "need at least 500 points, got {n_points}");

    let mut points = Vec::with_capacity(n_points);
    let mut normals = Vec::with_capacity(n_points);

    // Fiducial points.
    for (slot, &(x, y)) in FP_XY.iter().enumerate() {
        if slot == FP_NOSE_TIP {
            points.push(Point3::new(x, y, NOSE_TIP_Z));
            normals.push(Vector3::new(0.0, -0.15, 1.0).normalize());
        } else {
            let p = surface_point(x, y);
            normals.push(ellipsoid_normal(&p));
            points.push(p);
        }
    }
    let fp_indices: Vec<usize> = (0..NUM_FP).collect();

    // Facial contour: 17 points swept temple-to-temple through the chin on an
    // ellipse slightly inside the head outline. Index 8 (the middle) is the
    // chin and reuses the FP point.
    let chin_idx = fp_indices[FP_CHIN_CENTER];
    let mut contour_order = Vec::with_capacity(17);
    for i in 0..17 {
        if i == 8 {
            contour_order.push(chin_idx);
            continue;
        }
        let psi = (110.0 - i as f64 * (220.0 / 16.0)).to_radians();
        let p = surface_point(-64.0 * psi.sin(), 78.0 * psi.cos());
        let n = if p.z > 1e-9 {
            ellipsoid_normal(&p)
        } else {
            // On the silhouette rim the ellipsoid normal is in-plane; nudge it
            // slightly forward so it is never exactly tangent.
            Vector3::new(p.x / (RX * RX), p.y / (RY * RY), 0.02 / RZ).normalize()
        };
        contour_order.push(points.len());
        points.push(p);
        normals.push(n);
    }

    // Nose ridge: bridge points down to the tip (shared with the FP).
    let mut nose_order = Vec::with_capacity(4);
    for &(x, y, z) in &NOSE_RIDGE {
        nose_order.push(points.len());
        points.push(Point3::new(x, y, z));
        normals.push(Vector3::new(0.0, -0.35, 0.94).normalize());
    }
    nose_order.push(fp_indices[FP_NOSE_TIP]);

    let mut nfp_indices = contour_order.clone();
    nfp_indices.extend(&nose_order);

    // Dense filler across the front hemisphere.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < n_points {
        let azimuth: f64 = rng.random_range(-1.45..1.45);
        let elevation: f64 = rng.random_range(-1.45..1.45);
        let dir = Vector3::new(
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
            elevation.cos() * azimuth.cos(),
        );
        let t = 1.0
            / ((dir.x / RX).powi(2) + (dir.y / RY).powi(2) + (dir.z / RZ).powi(2)).sqrt();
        let p = Point3::from(dir * t);
        normals.push(ellipsoid_normal(&p));
        points.push(p);
    }

    // Center the cloud at its centroid. Normals are unaffected.
    let centroid = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords)
        / points.len() as f64;
    for p in &mut points {
        p.coords -= centroid;
    }

    let model = Model3D {
        points,
        normals,
        fp_indices,
        nfp_indices,
        sp_indices: vec![FP_BROW_L_OUTER, FP_BROW_R_OUTER, FP_CHIN_CENTER],
        contour_order,
        nose_order,
    };
    debug_assert!(model.validate().is_ok());
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{yaw_matrix, NUM_NFP, NUM_SP};

    #[test]
    fn deterministic_per_seed() {
        let a = make_synthetic_head(600, 7);
        let b = make_synthetic_head(600, 7);
        assert_eq!(a, b);
        let c = make_synthetic_head(600, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn invariants_hold() {
        let m = make_synthetic_head(800, 3);
        m.validate().unwrap();
        assert_eq!(m.points.len(), 800);
        assert_eq!(m.fp_indices.len(), NUM_FP);
        assert_eq!(m.nfp_indices.len(), NUM_NFP);
        assert_eq!(m.sp_indices.len(), NUM_SP);
        assert_eq!(m.eval_landmark_indices().len(), 38);
    }

    #[test]
    fn nose_tip_faces_camera() {
        let m = make_synthetic_head(500, 1);
        let n = m.normals[m.fp_indices[FP_NOSE_TIP]];
        assert!(n.z > 0.9);
    }

    #[test]
    fn all_fp_normals_visible_at_frontal() {
        let m = make_synthetic_head(500, 1);
        for &i in &m.fp_indices {
            assert!(m.normals[i].z > 0.0, "FP {i} normal {:?}", m.normals[i]);
        }
    }

    #[test]
    fn far_side_fps_turn_away_at_yaw_60() {
        // Rotated-normal oracle: under +60 degrees of yaw at least one
        // far-side FP normal must point away from the camera, and the
        // near-side outer brow must still face it.
        let m = make_synthetic_head(500, 1);
        let r = yaw_matrix(60f64.to_radians());
        let nz = |slot: usize| (r * m.normals[m.fp_indices[slot]]).z;
        assert!(nz(FP_BROW_R_OUTER) <= 0.0);
        assert!(nz(FP_BROW_L_OUTER) > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let m = make_synthetic_head(520, 12);
        let back = Model3D::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }
}
