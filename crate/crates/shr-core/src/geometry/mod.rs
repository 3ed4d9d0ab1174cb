//! 3D head model, weak-perspective projection, pose solving from 2D-3D
//! correspondences, and registration error metrics.
//!
//! Conventions (fixed once, used everywhere): the model frame is right-handed
//! with +x to the image right, +y down (image convention), and +z toward the
//! camera. Yaw rotates about +y, so for a pure yaw `theta` a model point maps
//! to `x' = x*cos(theta) + z*sin(theta)`.

mod head;

pub use head::{
    make_synthetic_head, FP_BROW_L_OUTER, FP_BROW_R_OUTER, FP_CHIN_CENTER, FP_MOUTH_CENTER,
    FP_NOSE_TIP,
};

use nalgebra::{Matrix2x3, Matrix3, Point2, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fiducial points (landmarks with fixed semantics).
pub const NUM_FP: usize = 19;
/// Number of non-fiducial points (contour + nose ridge).
pub const NUM_NFP: usize = 21;
/// Number of SensiblePoints.
pub const NUM_SP: usize = 3;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("need at least 4 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("3D points are collinear or coincident; pose is undetermined")]
    DegenerateConfiguration,
    #[error("landmark set is empty")]
    EmptyLandmarkSet,
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Dense 3D head point set with landmark index tables.
///
/// `points` are centered at the centroid of the full set. The 19 fiducial
/// points (FPs) carry semantics (eye corners, nose tip, ...); the 21
/// non-fiducial points (NFPs) trace the facial contour and the nose ridge and
/// are only sampled for scoring. Exactly two points (nose tip, chin center)
/// appear in both tables. The three SensiblePoints are bound to
/// occlusion-prone FPs.
#[derive(Debug, Clone, PartialEq)]
pub struct Model3D {
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub fp_indices: Vec<usize>,
    pub nfp_indices: Vec<usize>,
    pub sp_indices: Vec<usize>,
    /// NFP point indices ordered along the facial contour polyline.
    pub contour_order: Vec<usize>,
    /// NFP point indices ordered along the nose ridge polyline.
    pub nose_order: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Model3DJson {
    points: Vec<[f64; 3]>,
    normals: Vec<[f64; 3]>,
    fp_indices: Vec<usize>,
    nfp_indices: Vec<usize>,
    sp_indices: Vec<usize>,
    contour_order: Vec<usize>,
    nose_order: Vec<usize>,
}

impl Model3D {
    /// Checks the structural invariants of the landmark tables.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.points.len();
        if self.normals.len() != n {
            return Err(GeometryError::InvalidModel(format!(
                "{} normals for {} points",
                self.normals.len(),
                n
            )));
        }
        if self.fp_indices.len() != NUM_FP {
            return Err(GeometryError::InvalidModel(format!(
                "expected {NUM_FP} fp_indices, got {}",
                self.fp_indices.len()
            )));
        }
        if self.nfp_indices.len() != NUM_NFP {
            return Err(GeometryError::InvalidModel(format!(
                "expected {NUM_NFP} nfp_indices, got {}",
                self.nfp_indices.len()
            )));
        }
        if self.sp_indices.len() != NUM_SP {
            return Err(GeometryError::InvalidModel(format!(
                "expected {NUM_SP} sp_indices, got {}",
                self.sp_indices.len()
            )));
        }
        for &i in self
            .fp_indices
            .iter()
            .chain(&self.nfp_indices)
            .chain(&self.sp_indices)
            .chain(&self.contour_order)
            .chain(&self.nose_order)
        {
            if i >= n {
                return Err(GeometryError::InvalidModel(format!(
                    "landmark index {i} out of range ({n} points)"
                )));
            }
        }
        if !self.sp_indices.iter().all(|i| self.fp_indices.contains(i)) {
            return Err(GeometryError::InvalidModel(
                "every SP index must also be an FP index".into(),
            ));
        }
        let shared = self
            .fp_indices
            .iter()
            .filter(|i| self.nfp_indices.contains(i))
            .count();
        if shared != 2 {
            return Err(GeometryError::InvalidModel(format!(
                "expected exactly 2 indices shared between FPs and NFPs, got {shared}"
            )));
        }
        let mut order: Vec<usize> = self
            .contour_order
            .iter()
            .chain(&self.nose_order)
            .copied()
            .collect();
        order.sort_unstable();
        let mut nfp = self.nfp_indices.clone();
        nfp.sort_unstable();
        if order != nfp {
            return Err(GeometryError::InvalidModel(
                "contour_order + nose_order must cover nfp_indices exactly".into(),
            ));
        }
        for nrm in &self.normals {
            if (nrm.norm() - 1.0).abs() > 1e-9 {
                return Err(GeometryError::InvalidModel("non-unit normal".into()));
            }
        }
        Ok(())
    }

    pub fn fp_point(&self, fp: usize) -> Point3<f64> {
        self.points[self.fp_indices[fp]]
    }

    pub fn nfp_point(&self, nfp: usize) -> Point3<f64> {
        self.points[self.nfp_indices[nfp]]
    }

    pub fn sp_point(&self, sp: usize) -> Point3<f64> {
        self.points[self.sp_indices[sp]]
    }

    /// Position of SensiblePoint `sp` within the FP table.
    pub fn sp_fp_slot(&self, sp: usize) -> usize {
        let idx = self.sp_indices[sp];
        self.fp_indices
            .iter()
            .position(|&i| i == idx)
            .expect("sp_indices is a subset of fp_indices")
    }

    /// The 38 unique evaluation landmarks: all FPs followed by the NFPs that
    /// are not already FPs, in table order.
    pub fn eval_landmark_indices(&self) -> Vec<usize> {
        let mut out = self.fp_indices.clone();
        out.extend(
            self.nfp_indices
                .iter()
                .copied()
                .filter(|i| !self.fp_indices.contains(i)),
        );
        out
    }

    pub fn to_json(&self) -> String {
        let raw = Model3DJson {
            points: self.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            normals: self.normals.iter().map(|v| [v.x, v.y, v.z]).collect(),
            fp_indices: self.fp_indices.clone(),
            nfp_indices: self.nfp_indices.clone(),
            sp_indices: self.sp_indices.clone(),
            contour_order: self.contour_order.clone(),
            nose_order: self.nose_order.clone(),
        };
        serde_json::to_string(&raw).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let raw: Model3DJson = serde_json::from_str(text)
            .map_err(|e| GeometryError::InvalidModel(format!("bad model JSON: {e}")))?;
        let model = Model3D {
            points: raw.points.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect(),
            normals: raw.normals.iter().map(|v| Vector3::new(v[0], v[1], v[2])).collect(),
            fp_indices: raw.fp_indices,
            nfp_indices: raw.nfp_indices,
            sp_indices: raw.sp_indices,
            contour_order: raw.contour_order,
            nose_order: raw.nose_order,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Weak-perspective camera: uniform scale times the top two rotation rows plus
/// a 2D translation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseHypothesis {
    scale: f64,
    rotation: Matrix3<f64>,
    translation: Vector2<f64>,
}

/// Serialized form of [`PoseHypothesis`] (row-major rotation).
#[derive(Debug, Serialize, Deserialize)]
pub struct PoseJson {
    pub scale: f64,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 2],
}

impl PoseHypothesis {
    pub fn new(
        scale: f64,
        rotation: Matrix3<f64>,
        translation: Vector2<f64>,
    ) -> Result<Self, GeometryError> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(GeometryError::InvalidPose(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let ortho = (rotation * rotation.transpose() - Matrix3::identity()).norm();
        if ortho > 1e-9 {
            return Err(GeometryError::InvalidPose(format!(
                "rotation is not orthonormal (|R R^T - I| = {ortho:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidPose(format!(
                "rotation determinant must be +1, got {det}"
            )));
        }
        Ok(PoseHypothesis { scale, rotation, translation })
    }

    pub fn identity() -> Self {
        PoseHypothesis {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector2::zeros(),
        }
    }

    /// Pure yaw rotation (degrees) about the model's vertical axis.
    pub fn from_yaw_deg(scale: f64, yaw_deg: f64, translation: Vector2<f64>) -> Self {
        let r = yaw_matrix(yaw_deg.to_radians());
        PoseHypothesis { scale, rotation: r, translation }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vector2<f64> {
        self.translation
    }

    pub fn with_translation(&self, t: Vector2<f64>) -> Self {
        PoseHypothesis { translation: t, ..self.clone() }
    }

    pub fn to_json(&self) -> PoseJson {
        let r = &self.rotation;
        PoseJson {
            scale: self.scale,
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [self.translation.x, self.translation.y],
        }
    }

    pub fn from_json(raw: &PoseJson) -> Result<Self, GeometryError> {
        let r = Matrix3::from_fn(|i, j| raw.rotation[i][j]);
        PoseHypothesis::new(raw.scale, r, Vector2::new(raw.translation[0], raw.translation[1]))
    }
}

/// Rotation about +y by `theta` radians: `x' = x cos + z sin`.
pub fn yaw_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Paired 2D detections and 3D model coordinates.
#[derive(Debug, Clone, Default)]
pub struct Correspondences {
    pub points2d: Vec<Point2<f64>>,
    pub points3d: Vec<Point3<f64>>,
}

impl Correspondences {
    pub fn push(&mut self, p2: Point2<f64>, p3: Point3<f64>) {
        self.points2d.push(p2);
        self.points3d.push(p3);
    }

    pub fn len(&self) -> usize {
        debug_assert_eq!(self.points2d.len(), self.points3d.len());
        self.points2d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points2d.is_empty()
    }
}

/// Projects 3D points to the image: `x = s * R[0..2] * X + t`.
pub fn project(pose: &PoseHypothesis, pts: &[Point3<f64>]) -> Vec<Point2<f64>> {
    let rows = pose.rotation.fixed_view::<2, 3>(0, 0);
    pts.iter()
        .map(|p| {
            let v = pose.scale * (rows * p.coords) + pose.translation;
            Point2::new(v.x, v.y)
        })
        .collect()
}

/// Projects a single 3D point.
pub fn project_point(pose: &PoseHypothesis, p: Point3<f64>) -> Point2<f64> {
    let rows = pose.rotation.fixed_view::<2, 3>(0, 0);
    let v = pose.scale * (rows * p.coords) + pose.translation;
    Point2::new(v.x, v.y)
}

/// Least-squares weak-perspective pose from 2D-3D correspondences.
///
/// Both point sets are centered, an unconstrained 2x3 linear map is fit, its
/// rows are completed to a 3x3 matrix via their cross product, and the result
/// is projected to the nearest proper rotation by SVD. The scale is the mean
/// row norm of the linear map.
pub fn estimate_weak_perspective(c: &Correspondences) -> Result<PoseHypothesis, GeometryError> {
    let n = c.len();
    if n < 4 {
        return Err(GeometryError::TooFewCorrespondences(n));
    }

    let mean3 = c.points3d.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n as f64;
    let mean2 = c.points2d.iter().fold(Vector2::zeros(), |a, p| a + p.coords) / n as f64;

    // Scatter matrices of the centered sets.
    let mut sxx = Matrix3::zeros();
    let mut sux = Matrix2x3::zeros();
    for (p2, p3) in c.points2d.iter().zip(&c.points3d) {
        let x = p3.coords - mean3;
        let u = p2.coords - mean2;
        sxx += x * x.transpose();
        sux += u * x.transpose();
    }

    // Pseudo-inverse of the 3D scatter. Rank 2 (planar point sets) is fine;
    // rank < 2 leaves the pose undetermined.
    let eig = sxx.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let tol = 1e-12 * max_ev.max(1.0);
    let rank = eig.eigenvalues.iter().filter(|&&v| v.abs() > tol).count();
    if rank < 2 {
        return Err(GeometryError::DegenerateConfiguration);
    }
    let mut inv_diag = Matrix3::zeros();
    for i in 0..3 {
        let v = eig.eigenvalues[i];
        if v.abs() > tol {
            inv_diag[(i, i)] = 1.0 / v;
        }
    }
    let sxx_pinv = eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();

    let a = sux * sxx_pinv;
    let a1 = a.row(0).transpose();
    let a2 = a.row(1).transpose();
    let scale = 0.5 * (a1.norm() + a2.norm());
    if !scale.is_finite() || scale <= 1e-12 {
        return Err(GeometryError::DegenerateConfiguration);
    }

    let b1 = a1 / scale;
    let b2 = a2 / scale;
    let b3 = b1.cross(&b2);
    let m = Matrix3::from_rows(&[b1.transpose(), b2.transpose(), b3.transpose()]);
    let rotation = nearest_rotation(&m)?;

    let rows = rotation.fixed_view::<2, 3>(0, 0);
    let translation = mean2 - scale * (rows * mean3);

    PoseHypothesis::new(scale, rotation, translation)
}

/// Nearest proper rotation (Frobenius) to `m` via SVD, sign resolved so that
/// det(R) = +1.
fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>, GeometryError> {
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(GeometryError::DegenerateConfiguration),
    };
    let d = (u * v_t).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    Ok(u * fix * v_t)
}

/// Yaw of the pose in degrees, range (-180, 180].
///
/// Defined as the azimuth of the rotated forward (+z) axis about the vertical,
/// which equals the generator angle for pure yaw rotations.
pub fn yaw_of(pose: &PoseHypothesis) -> f64 {
    let fwd = pose.rotation * Vector3::z();
    fwd.x.atan2(fwd.z).to_degrees()
}

/// Normalized re-projection mean error: mean 2D re-projection error of the
/// projected 3D landmarks divided by `omega` (the square root of the ROI
/// area).
pub fn nrme(
    pose: &PoseHypothesis,
    landmarks3d: &[Point3<f64>],
    gt2d: &[Point2<f64>],
    omega: f64,
) -> Result<f64, GeometryError> {
    if landmarks3d.is_empty() {
        return Err(GeometryError::EmptyLandmarkSet);
    }
    debug_assert_eq!(landmarks3d.len(), gt2d.len());
    debug_assert!(omega > 0.0);
    let total: f64 = landmarks3d
        .iter()
        .zip(gt2d)
        .map(|(y, x)| (project_point(pose, *y) - x).norm())
        .sum();
    Ok(total / (landmarks3d.len() as f64 * omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> PoseHypothesis {
        let scale = rng.random_range(0.5..2.0);
        // Random rotation from three random axis angles.
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let r = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            angle,
        );
        let t = Vector2::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
        PoseHypothesis::new(scale, *r.matrix(), t).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3<f64>> {
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                )
            })
            .collect()
    }

    #[test]
    fn project_translation_only() {
        let pose = PoseHypothesis::new(1.0, Matrix3::identity(), Vector2::new(5.0, 7.0)).unwrap();
        let out = project(&pose, &[Point3::origin()]);
        assert_eq!(out[0], Point2::new(5.0, 7.0));
    }

    #[test]
    fn project_drops_z() {
        let pose = PoseHypothesis::identity();
        let out = project(&pose, &[Point3::new(1.0, 2.0, 3.0)]);
        assert_eq!(out[0], Point2::new(1.0, 2.0));
    }

    #[test]
    fn project_yaw_90_maps_z_to_x() {
        let pose = PoseHypothesis::from_yaw_deg(1.0, 90.0, Vector2::zeros());
        let out = project(&pose, &[Point3::new(0.0, 0.0, 1.0)]);
        assert!((out[0].x - 1.0).abs() < 1e-12);
        assert!(out[0].y.abs() < 1e-12);
    }

    #[test]
    fn project_affine_in_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pose = random_pose(&mut rng);
        let delta = Vector2::new(3.5, -2.25);
        let shifted = pose.with_translation(pose.translation() + delta);
        for p in random_cloud(&mut rng, 10) {
            let a = project_point(&pose, p) + delta;
            let b = project_point(&shifted, p);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_identity_on_planar_square() {
        let mut c = Correspondences::default();
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            c.push(Point2::new(x, y), Point3::new(x, y, 0.0));
        }
        let pose = estimate_weak_perspective(&c).unwrap();
        assert!((pose.scale() - 1.0).abs() < 1e-9);
        assert!((pose.rotation() - Matrix3::identity()).norm() < 1e-9);
        assert!(pose.translation().norm() < 1e-9);
    }

    #[test]
    fn solve_scale_and_shift() {
        let mut c = Correspondences::default();
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            c.push(Point2::new(2.0 * x + 3.0, 2.0 * y + 4.0), Point3::new(x, y, 0.0));
        }
        let pose = estimate_weak_perspective(&c).unwrap();
        assert!((pose.scale() - 2.0).abs() < 1e-9);
        assert!((pose.translation() - Vector2::new(3.0, 4.0)).norm() < 1e-9);
    }

    #[test]
    fn solve_recovers_random_poses() {
        // Generator-as-oracle: project noiseless points under a known pose and
        // require near-exact re-projection agreement from the recovered pose.
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..100 {
            let pose = random_pose(&mut rng);
            let pts = random_cloud(&mut rng, 10);
            let mut c = Correspondences::default();
            for p in &pts {
                c.push(project_point(&pose, *p), *p);
            }
            let est = estimate_weak_perspective(&c).unwrap();
            for p in &pts {
                let err = (project_point(&pose, *p) - project_point(&est, *p)).norm();
                assert!(err < 1e-9, "re-projection error {err}");
            }
        }
    }

    #[test]
    fn solve_rejects_too_few() {
        let mut c = Correspondences::default();
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
            c.push(Point2::new(x, y), Point3::new(x, y, 0.0));
        }
        assert!(matches!(
            estimate_weak_perspective(&c),
            Err(GeometryError::TooFewCorrespondences(3))
        ));
    }

    #[test]
    fn solve_rejects_collinear() {
        let mut c = Correspondences::default();
        for i in 0..5 {
            let t = i as f64;
            c.push(Point2::new(t, t), Point3::new(t, 2.0 * t, -t));
        }
        assert!(matches!(
            estimate_weak_perspective(&c),
            Err(GeometryError::DegenerateConfiguration)
        ));
    }

    #[test]
    fn yaw_of_identity_and_known_angles() {
        assert_eq!(yaw_of(&PoseHypothesis::identity()), 0.0);
        let pose = PoseHypothesis::from_yaw_deg(1.0, 45.0, Vector2::zeros());
        assert!((yaw_of(&pose) - 45.0).abs() < 1e-12);
    }

    #[test]
    fn yaw_round_trips_through_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = random_cloud(&mut rng, 12);
        for &deg in &[30.0, -30.0, 60.0, 95.0, -140.0] {
            let pose = PoseHypothesis::from_yaw_deg(1.3, deg, Vector2::new(10.0, -4.0));
            let mut c = Correspondences::default();
            for p in &pts {
                c.push(project_point(&pose, *p), *p);
            }
            let est = estimate_weak_perspective(&c).unwrap();
            assert!((yaw_of(&est) - deg).abs() < 1e-6, "yaw {deg}");
        }
    }

    #[test]
    fn nrme_perfect_alignment_is_zero() {
        let pose = PoseHypothesis::identity();
        let pts = vec![Point3::new(1.0, 2.0, 0.5), Point3::new(-3.0, 0.0, 1.0)];
        let gt = project(&pose, &pts);
        assert_eq!(nrme(&pose, &pts, &gt, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn nrme_direct_formula() {
        // Residuals (3,4) and (0,0) at omega=100: (5 + 0) / (2 * 100).
        let pose = PoseHypothesis::identity();
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 0.0)];
        let gt = vec![Point2::new(3.0, 4.0), Point2::new(1.0, 1.0)];
        let v = nrme(&pose, &pts, &gt, 100.0).unwrap();
        assert!((v - 0.025).abs() < 1e-15);
    }

    #[test]
    fn nrme_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let pose = random_pose(&mut rng);
            let pts = random_cloud(&mut rng, 8);
            let gt: Vec<Point2<f64>> = (0..8)
                .map(|_| Point2::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)))
                .collect();
            let omega = rng.random_range(40.0..200.0);
            // Independent evaluation of the definition.
            let mut acc = 0.0;
            for (y, x) in pts.iter().zip(&gt) {
                let proj = project_point(&pose, *y);
                acc += ((proj.x - x.x).powi(2) + (proj.y - x.y).powi(2)).sqrt();
            }
            let expect = acc / (pts.len() as f64 * omega);
            let got = nrme(&pose, &pts, &gt, omega).unwrap();
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn nrme_empty_errors() {
        let pose = PoseHypothesis::identity();
        assert!(matches!(
            nrme(&pose, &[], &[], 1.0),
            Err(GeometryError::EmptyLandmarkSet)
        ));
    }

    #[test]
    fn pose_json_round_trip() {
        let pose = PoseHypothesis::from_yaw_deg(1.7, 25.0, Vector2::new(3.0, -9.0));
        let text = serde_json::to_string(&pose.to_json()).unwrap();
        let raw: PoseJson = serde_json::from_str(&text).unwrap();
        let back = PoseHypothesis::from_json(&raw).unwrap();
        assert!((back.scale() - pose.scale()).abs() < 1e-15);
        assert!((back.rotation() - pose.rotation()).norm() < 1e-15);
        assert!((back.translation() - pose.translation()).norm() < 1e-15);
    }
}
