//! SensiblePoint initialization.
//!
//! Near-frontal poses solve a coarse projection from the visible FPs and
//! re-project the SP model points. Past 30 degrees of yaw that solve is
//! unreliable, so a context feature built from confidence-map patches
//! retrieves similar reference shapes instead; each retrieved shape is
//! similarity-aligned onto the visible FPs and the SPs are read from the
//! median shape.

use nalgebra::{Point2, Vector2};
use thiserror::Error;

use crate::confmap::{ConfidenceStack, Roi};
use crate::geometry::{
    estimate_weak_perspective, project, yaw_of, Correspondences, GeometryError, Model3D,
    FP_CHIN_CENTER, FP_MOUTH_CENTER, FP_NOSE_TIP, NUM_SP,
};

/// Patch side cropped around each anchor; covers 1/16 of the map area.
pub const CONTEXT_PATCH: usize = 20;
/// FP slots used as context anchors, all close to the facial symmetry axis:
/// inner brows, nose tip, mouth center, chin center.
pub const CONTEXT_ANCHOR_SLOTS: [usize; 5] =
    [2, 3, FP_NOSE_TIP, FP_MOUTH_CENTER, FP_CHIN_CENTER];
/// Number of shapes retrieved per query.
pub const RETRIEVE_K: usize = 5;
/// Yaw magnitude (degrees) beyond which the profile branch takes over.
pub const FRONTAL_YAW_LIMIT_DEG: f64 = 30.0;

#[derive(Debug, Error)]
pub enum SpInitError {
    #[error("query feature length {query} does not match database feature length {db}")]
    DimensionMismatch { query: usize, db: usize },
    #[error("need at least 2 distinct point pairs for a similarity fit")]
    TooFewPoints,
    #[error("source points are coincident; similarity is undetermined")]
    DegenerateSource,
    #[error("no shapes to take a median of")]
    EmptyInput,
    #[error("too few visible FPs ({0}) to initialize SensiblePoints")]
    TooFewVisible(usize),
    #[error("reference database is empty")]
    EmptyDatabase,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One reference scene: its context feature and its 19 ground-truth FP
/// coordinates (stored in the reference scene's own map frame).
#[derive(Debug, Clone)]
pub struct ReferenceEntry {
    pub feature: Vec<f32>,
    pub shape: Vec<Point2<f64>>,
}

/// 4-DOF similarity transform (scale, rotation, translation).
#[derive(Debug, Clone, Copy)]
pub struct Similarity2D {
    pub scale: f64,
    pub angle: f64,
    pub translation: Vector2<f64>,
}

impl Similarity2D {
    pub fn apply(&self, p: Point2<f64>) -> Point2<f64> {
        let (s, c) = self.angle.sin_cos();
        Point2::new(
            self.scale * (c * p.x - s * p.y) + self.translation.x,
            self.scale * (s * p.x + c * p.y) + self.translation.y,
        )
    }
}

/// Crops a `CONTEXT_PATCH`-square window (zero-padded at borders) from each
/// anchor's FP map and concatenates them row-major into one vector.
pub fn build_context_feature(
    stack: &ConfidenceStack,
    anchors: &[(usize, (f64, f64))],
) -> Vec<f32> {
    assert!(!anchors.is_empty());
    let half = CONTEXT_PATCH as isize / 2;
    let mut feature = Vec::with_capacity(anchors.len() * CONTEXT_PATCH * CONTEXT_PATCH);
    for &(fp_slot, (ax, ay)) in anchors {
        let map = &stack.maps_a[fp_slot];
        let cx = ax.round() as isize;
        let cy = ay.round() as isize;
        for dy in -half..half {
            for dx in -half..half {
                let x = cx + dx;
                let y = cy + dy;
                let inside = (0..crate::confmap::MAP_SIZE as isize).contains(&x)
                    && (0..crate::confmap::MAP_SIZE as isize).contains(&y);
                feature.push(if inside { map.value(x as usize, y as usize) } else { 0.0 });
            }
        }
    }
    feature
}

/// Anchor list for a stack: detected peak locations of the symmetric-axis FP
/// maps, paired with their FP slots.
pub fn context_anchors(stack: &ConfidenceStack) -> Vec<(usize, (f64, f64))> {
    CONTEXT_ANCHOR_SLOTS
        .iter()
        .map(|&slot| (slot, crate::confmap::peak_location(&stack.maps_a[slot])))
        .collect()
}

/// The `k` database shapes nearest to `query` in Euclidean feature distance,
/// nearest first; ties resolve to the lower index. Returns all entries when
/// the database is smaller than `k`.
pub fn retrieve<'a>(
    db: &'a [ReferenceEntry],
    query: &[f32],
    k: usize,
) -> Result<Vec<&'a ReferenceEntry>, SpInitError> {
    if db.is_empty() {
        return Err(SpInitError::EmptyDatabase);
    }
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(db.len());
    for (i, entry) in db.iter().enumerate() {
        if entry.feature.len() != query.len() {
            return Err(SpInitError::DimensionMismatch {
                query: query.len(),
                db: entry.feature.len(),
            });
        }
        let d2: f64 = entry
            .feature
            .iter()
            .zip(query)
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum();
        ranked.push((d2, i));
    }
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(ranked.iter().take(k).map(|&(_, i)| &db[i]).collect())
}

/// Closed-form least-squares similarity mapping `src` onto `dst`.
pub fn estimate_similarity_2d(
    src: &[Point2<f64>],
    dst: &[Point2<f64>],
) -> Result<Similarity2D, SpInitError> {
    if src.len() < 2 || src.len() != dst.len() {
        return Err(SpInitError::TooFewPoints);
    }
    let n = src.len() as f64;
    let src_mean = src.iter().fold(Vector2::zeros(), |a, p| a + p.coords) / n;
    let dst_mean = dst.iter().fold(Vector2::zeros(), |a, p| a + p.coords) / n;
    let mut dot = 0.0;
    let mut cross = 0.0;
    let mut src_norm2 = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let sc = s.coords - src_mean;
        let dc = d.coords - dst_mean;
        dot += sc.dot(&dc);
        cross += sc.x * dc.y - sc.y * dc.x;
        src_norm2 += sc.norm_squared();
    }
    if src_norm2 < 1e-12 {
        return Err(SpInitError::DegenerateSource);
    }
    let scale = (dot * dot + cross * cross).sqrt() / src_norm2;
    let angle = cross.atan2(dot);
    let (sa, ca) = angle.sin_cos();
    let rotated = Vector2::new(
        ca * src_mean.x - sa * src_mean.y,
        sa * src_mean.x + ca * src_mean.y,
    );
    let translation = dst_mean - scale * rotated;
    Ok(Similarity2D { scale, angle, translation })
}

/// Coordinate-wise median across shapes; an even count averages the two
/// middle values.
pub fn median_shape(shapes: &[Vec<Point2<f64>>]) -> Result<Vec<Point2<f64>>, SpInitError> {
    let Some(first) = shapes.first() else {
        return Err(SpInitError::EmptyInput);
    };
    let len = first.len();
    debug_assert!(shapes.iter().all(|s| s.len() == len));
    let median_of = |mut values: Vec<f64>| -> f64 {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len();
        if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        }
    };
    Ok((0..len)
        .map(|i| {
            let xs = shapes.iter().map(|s| s[i].x).collect();
            let ys = shapes.iter().map(|s| s[i].y).collect();
            Point2::new(median_of(xs), median_of(ys))
        })
        .collect())
}

/// Initial SensiblePoint locations in image pixels.
///
/// `x_v` carries the visible detections paired with their FP slots. With four
/// or more visible FPs a coarse pose decides the branch; otherwise retrieval
/// is forced. Fewer than two visible FPs degrade to the database median shape
/// scaled onto the ROI.
pub fn init_sensiblepoints(
    model: &Model3D,
    x_v: &[(usize, Point2<f64>)],
    db: &[ReferenceEntry],
    stack: &ConfidenceStack,
    roi: &Roi,
) -> Result<[Point2<f64>; NUM_SP], SpInitError> {
    if x_v.len() >= 4 {
        let mut c = Correspondences::default();
        for &(slot, p) in x_v {
            c.push(p, model.fp_point(slot));
        }
        match estimate_weak_perspective(&c) {
            Ok(pose) if yaw_of(&pose).abs() <= FRONTAL_YAW_LIMIT_DEG => {
                let sp3d: Vec<_> = (0..NUM_SP).map(|j| model.sp_point(j)).collect();
                let projected = project(&pose, &sp3d);
                return Ok([projected[0], projected[1], projected[2]]);
            }
            Ok(_) => {} // profile branch below
            Err(GeometryError::DegenerateConfiguration) => {} // retrieval can still help
            Err(e) => return Err(e.into()),
        }
    }
    profile_init(model, x_v, db, stack, roi)
}

fn profile_init(
    model: &Model3D,
    x_v: &[(usize, Point2<f64>)],
    db: &[ReferenceEntry],
    stack: &ConfidenceStack,
    roi: &Roi,
) -> Result<[Point2<f64>; NUM_SP], SpInitError> {
    if db.is_empty() {
        // Without a database the frontal solve was the only option.
        if x_v.len() < 4 {
            return Err(SpInitError::TooFewVisible(x_v.len()));
        }
        return Err(SpInitError::EmptyDatabase);
    }
    let query = build_context_feature(stack, &context_anchors(stack));
    let retrieved = retrieve(db, &query, RETRIEVE_K)?;

    let transformed: Vec<Vec<Point2<f64>>> = if x_v.len() >= 2 {
        retrieved
            .iter()
            .map(|entry| {
                let src: Vec<Point2<f64>> = x_v.iter().map(|&(slot, _)| entry.shape[slot]).collect();
                let dst: Vec<Point2<f64>> = x_v.iter().map(|&(_, p)| p).collect();
                let sim = estimate_similarity_2d(&src, &dst)?;
                Ok(entry.shape.iter().map(|&p| sim.apply(p)).collect())
            })
            .collect::<Result<_, SpInitError>>()?
    } else {
        // Degraded initialization: not enough visible FPs to anchor the
        // retrieved shapes, so center the raw map-frame shapes on the ROI.
        retrieved
            .iter()
            .map(|entry| {
                entry
                    .shape
                    .iter()
                    .map(|p| {
                        let img = roi.to_image((p.x, p.y));
                        Point2::new(img.0, img.1)
                    })
                    .collect()
            })
            .collect()
    };

    let median = median_shape(&transformed)?;
    let mut out = [Point2::origin(); NUM_SP];
    for j in 0..NUM_SP {
        out[j] = median[model.sp_fp_slot(j)];
    }
    Ok(out)
}
