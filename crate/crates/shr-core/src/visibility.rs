//! Visible/occluded classification of fiducial points from their confidence
//! maps.
//!
//! A visible landmark produces a small, high-contrast response; an occluded
//! one produces a broad low-contrast response with a long-tail histogram. Two
//! scalar features capture this, a per-class 2D Gaussian model classifies
//! them, and a per-landmark likelihood-ratio margin `zeta` shifts the decision
//! toward whatever split actually separates low from high localization error.

use nalgebra::{Matrix2, Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confmap::{ConfidenceMap, ConfidenceStack, MAP_SIZE};
use crate::geometry::NUM_FP;

#[derive(Debug, Error)]
pub enum VisibilityError {
    #[error("confidence map is all zero")]
    AllZeroMap,
    #[error("need at least {need} samples per class, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("class covariance is singular even after regularization")]
    DegenerateCovariance,
}

/// The two confidence-map statistics driving the classifier.
///
/// `f1`: fraction of pixels above the relative threshold `eps1 * max`.
/// `f2`: share of the total mass carried by pixels above the absolute
/// threshold `t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityFeatures {
    pub f1: f64,
    pub f2: f64,
}

pub fn extract_features(
    map: &ConfidenceMap,
    eps1: f64,
    t2: f64,
) -> Result<VisibilityFeatures, VisibilityError> {
    debug_assert!(eps1 > 0.0 && eps1 < 1.0);
    debug_assert!(t2 > 0.0 && t2 < 1.0);
    let theta = map.max_value() as f64;
    let t1 = eps1 * theta;
    let mut above_t1 = 0usize;
    let mut u1 = 0.0f64;
    let mut u2 = 0.0f64;
    for &v in map.grid().values() {
        let v = v as f64;
        if v > t1 {
            above_t1 += 1;
        }
        if v > t2 {
            u1 += v;
        }
        u2 += v;
    }
    if u2 == 0.0 {
        return Err(VisibilityError::AllZeroMap);
    }
    Ok(VisibilityFeatures {
        f1: above_t1 as f64 / (MAP_SIZE * MAP_SIZE) as f64,
        f2: u1 / u2,
    })
}

/// One 2D Gaussian per class (visible, occluded) with class priors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianPairClassifier {
    pub visible: ClassGaussian,
    pub occluded: ClassGaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: [f64; 2],
    /// Row-major 2x2 covariance.
    pub cov: [[f64; 2]; 2],
    pub prior: f64,
}

impl ClassGaussian {
    fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.cov[0][0], self.cov[0][1], self.cov[1][0], self.cov[1][1])
    }

    /// Prior-weighted Gaussian density at the feature point.
    pub fn weighted_density(&self, f: &VisibilityFeatures) -> f64 {
        self.log_weighted_density(f).exp()
    }

    /// Log of the prior-weighted density; decisions compare in log space so
    /// widely separated classes cannot underflow to a 0/0 ratio.
    pub fn log_weighted_density(&self, f: &VisibilityFeatures) -> f64 {
        let cov = self.matrix();
        let det = cov.determinant();
        let inv = cov.try_inverse().expect("covariance validated SPD at fit time");
        let d = Vector2::new(f.f1 - self.mean[0], f.f2 - self.mean[1]);
        let maha = (d.transpose() * inv * d)[(0, 0)];
        self.prior.ln() - (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * maha
    }
}

const COV_REGULARIZATION: f64 = 1e-6;

fn fit_class(samples: &[VisibilityFeatures], prior: f64) -> Result<ClassGaussian, VisibilityError> {
    let n = samples.len() as f64;
    let mean = samples
        .iter()
        .fold([0.0; 2], |a, s| [a[0] + s.f1, a[1] + s.f2])
        .map(|v| v / n);
    let mut cov = [[0.0f64; 2]; 2];
    for s in samples {
        let d = [s.f1 - mean[0], s.f2 - mean[1]];
        for (i, di) in d.iter().enumerate() {
            for (j, dj) in d.iter().enumerate() {
                cov[i][j] += di * dj;
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    cov[0][0] += COV_REGULARIZATION;
    cov[1][1] += COV_REGULARIZATION;
    let g = ClassGaussian { mean, cov, prior };
    let m = g.matrix();
    if m.determinant() <= 0.0 || m.cholesky().is_none() {
        return Err(VisibilityError::DegenerateCovariance);
    }
    Ok(g)
}

/// Per-class maximum-likelihood Gaussian fit; priors come from the class
/// frequencies. Requires at least 3 samples per class.
pub fn fit_classifier(
    samples: &[(VisibilityFeatures, bool)],
) -> Result<GaussianPairClassifier, VisibilityError> {
    let visible: Vec<VisibilityFeatures> =
        samples.iter().filter(|(_, vis)| *vis).map(|(f, _)| *f).collect();
    let occluded: Vec<VisibilityFeatures> =
        samples.iter().filter(|(_, vis)| !*vis).map(|(f, _)| *f).collect();
    let min = visible.len().min(occluded.len());
    if min < 3 {
        return Err(VisibilityError::InsufficientSamples { need: 3, got: min });
    }
    let total = samples.len() as f64;
    Ok(GaussianPairClassifier {
        visible: fit_class(&visible, visible.len() as f64 / total)?,
        occluded: fit_class(&occluded, occluded.len() as f64 / total)?,
    })
}

/// Fitted visibility model: classifier, thresholds, and the per-landmark
/// decision margins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityModel {
    pub classifier: GaussianPairClassifier,
    pub eps1: f64,
    pub t2: f64,
    pub zeta: Vec<f64>,
}

impl VisibilityModel {
    pub fn validate(&self) -> bool {
        self.t2 > 0.0
            && self.t2 < 1.0
            && self.zeta.len() == NUM_FP
            && self.zeta.iter().all(|&z| z > 0.0)
    }
}

/// A landmark is occluded only when the occluded-class weighted density
/// exceeds `zeta` times the visible-class one. Returns true when visible.
pub fn classify(model: &VisibilityModel, features: &VisibilityFeatures, landmark: usize) -> bool {
    let log_vis = model.classifier.visible.log_weighted_density(features);
    let log_occ = model.classifier.occluded.log_weighted_density(features);
    // Ties stay visible: occluded requires strictly exceeding the margin.
    log_occ <= model.zeta[landmark].ln() + log_vis
}

/// One training observation for the zeta line search: the two class densities
/// for a landmark's features plus the detector's localization error.
#[derive(Debug, Clone, Copy)]
pub struct ZetaSample {
    pub density_visible: f64,
    pub density_occluded: f64,
    pub nme: f64,
}

/// Default zeta line-search grid: 30 log-spaced candidates in [0.1, 10],
/// plus the neutral value 1 so the searched margin can never do worse than
/// the plain maximum-likelihood decision.
pub fn default_zeta_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..30)
        .map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 29.0))
        .collect();
    grid.push(1.0);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

/// Per-landmark line search for the margin maximizing the gap between the
/// mean error of predicted-occluded and predicted-visible samples. Degenerate
/// landmarks (one class always empty) fall back to 1.
pub fn learn_zeta(per_landmark: &[Vec<ZetaSample>], grid: &[f64]) -> Vec<f64> {
    per_landmark
        .iter()
        .map(|samples| {
            let mut best: Option<(f64, f64)> = None; // (objective, zeta)
            for &zeta in grid {
                let mut vis = (0.0f64, 0usize);
                let mut occ = (0.0f64, 0usize);
                for s in samples {
                    if s.density_occluded > zeta * s.density_visible {
                        occ = (occ.0 + s.nme, occ.1 + 1);
                    } else {
                        vis = (vis.0 + s.nme, vis.1 + 1);
                    }
                }
                if vis.1 == 0 || occ.1 == 0 {
                    continue;
                }
                let objective = occ.0 / occ.1 as f64 - vis.0 / vis.1 as f64;
                let better = match best {
                    None => true,
                    // Strict improvement only: ties keep the smallest zeta.
                    Some((obj, _)) => objective > obj + 1e-15,
                };
                if better {
                    best = Some((objective, zeta));
                }
            }
            best.map(|(_, z)| z).unwrap_or(1.0)
        })
        .collect()
}

/// Default absolute-threshold grid 0.05..=0.95 step 0.05.
pub fn default_t2_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Line search for `t2`: refit the classifier per candidate and keep the
/// threshold with the best training accuracy (ties to the smallest value).
pub fn learn_t2(labeled: &[(&ConfidenceMap, bool)], eps1: f64, grid: &[f64]) -> f64 {
    assert!(!labeled.is_empty());
    assert!(!grid.is_empty());
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &t2 in grid {
        let mut samples = Vec::with_capacity(labeled.len());
        for (map, vis) in labeled {
            match extract_features(map, eps1, t2) {
                Ok(f) => samples.push((f, *vis)),
                // All-zero maps are occluded by definition; they carry no
                // feature information for the fit.
                Err(VisibilityError::AllZeroMap) => continue,
                Err(_) => unreachable!(),
            }
        }
        let Ok(classifier) = fit_classifier(&samples) else {
            continue;
        };
        let correct = samples
            .iter()
            .filter(|(f, vis)| {
                let log_vis = classifier.visible.log_weighted_density(f);
                let log_occ = classifier.occluded.log_weighted_density(f);
                (log_occ <= log_vis) == *vis
            })
            .count();
        let acc = correct as f64 / samples.len() as f64;
        if acc > best.0 + 1e-15 {
            best = (acc, t2);
        }
    }
    best.1
}

/// Applies the model to the 19 FP maps: returns the coordinates classified
/// visible and the full mask. All-zero maps count as occluded.
pub fn select_visible(
    model: &VisibilityModel,
    stack: &ConfidenceStack,
    x_a: &[Point2<f64>],
) -> (Vec<Point2<f64>>, Vec<bool>) {
    debug_assert_eq!(x_a.len(), stack.maps_a.len());
    let mut mask = Vec::with_capacity(x_a.len());
    for (i, map) in stack.maps_a.iter().enumerate() {
        let visible = match extract_features(map, model.eps1, model.t2) {
            Ok(f) => classify(model, &f, i),
            Err(VisibilityError::AllZeroMap) => false,
            Err(_) => unreachable!(),
        };
        mask.push(visible);
    }
    let x_v = x_a
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .collect();
    (x_v, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confmap::{render_blob, render_occluded, Grid};

    fn delta_map() -> ConfidenceMap {
        let mut g = Grid::zeros();
        g.set(17, 31, 1.0);
        ConfidenceMap::from_grid_clamped(g)
    }

    #[test]
    fn features_of_delta_map() {
        let f = extract_features(&delta_map(), 0.1, 0.2).unwrap();
        assert!((f.f1 - 1.0 / 6400.0).abs() < 1e-15);
        assert!((f.f2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn features_of_uniform_map() {
        let m = ConfidenceMap::from_grid_clamped(Grid::from_fn(|_, _| 0.5));
        let f = extract_features(&m, 0.1, 0.2).unwrap();
        assert_eq!(f.f1, 1.0);
        assert_eq!(f.f2, 1.0);
    }

    #[test]
    fn features_match_enumeration_oracle() {
        let m = render_blob((40.0, 40.0), 2.0, 1.0);
        let f = extract_features(&m, 0.1, 0.2).unwrap();
        // Brute-force enumeration straight from the definitions.
        let theta = m.grid().values().iter().cloned().fold(0.0f32, f32::max) as f64;
        let mut count = 0usize;
        let mut u1 = 0.0;
        let mut u2 = 0.0;
        for &v in m.grid().values() {
            let v = v as f64;
            if v > 0.1 * theta {
                count += 1;
            }
            if v > 0.2 {
                u1 += v;
            }
            u2 += v;
        }
        assert_eq!(f.f1, count as f64 / 6400.0);
        assert_eq!(f.f2, u1 / u2);
    }

    #[test]
    fn occluded_map_has_larger_f1_than_sharp_blob() {
        let occ = render_occluded((40.0, 40.0), 3);
        let vis = render_blob((40.0, 40.0), 2.0, 1.0);
        let f_occ = extract_features(&occ, 0.1, 0.2).unwrap();
        let f_vis = extract_features(&vis, 0.1, 0.2).unwrap();
        assert!(f_occ.f1 > f_vis.f1);
    }

    #[test]
    fn all_zero_map_is_an_error() {
        let err = extract_features(&ConfidenceMap::zeros(), 0.1, 0.2);
        assert!(matches!(err, Err(VisibilityError::AllZeroMap)));
    }

    #[test]
    fn features_are_scale_invariant() {
        // Halving every value (exact in f32) leaves f1 unchanged thanks to
        // the relative threshold, and f2 unchanged when t2 scales along.
        let m = render_blob((33.0, 50.0), 3.0, 0.9);
        let half = ConfidenceMap::from_grid_clamped(Grid::from_fn(|x, y| 0.5 * m.value(x, y)));
        let f = extract_features(&m, 0.1, 0.2).unwrap();
        let g = extract_features(&half, 0.1, 0.1).unwrap();
        assert_eq!(f.f1, g.f1);
        assert!((f.f2 - g.f2).abs() < 1e-12);
        // f1 alone is invariant even without touching t2.
        let g2 = extract_features(&half, 0.1, 0.2).unwrap();
        assert_eq!(f.f1, g2.f1);
    }

    // Wide enough that cross-cluster likelihood ratios stay below 1e9, so the
    // zeta limit case stays meaningful.
    fn cluster(center: (f64, f64), n: usize, vis: bool) -> Vec<(VisibilityFeatures, bool)> {
        (0..n)
            .map(|i| {
                let eps = 0.1 * ((i % 5) as f64 - 2.0) / 2.0;
                (VisibilityFeatures { f1: center.0 + eps, f2: center.1 - eps }, vis)
            })
            .collect()
    }

    #[test]
    fn classifier_separates_clusters() {
        let mut samples = cluster((0.1, 0.9), 20, true);
        samples.extend(cluster((0.9, 0.1), 20, false));
        let classifier = fit_classifier(&samples).unwrap();
        let model = VisibilityModel { classifier, eps1: 0.1, t2: 0.2, zeta: vec![1.0; NUM_FP] };
        for (f, vis) in &samples {
            assert_eq!(classify(&model, f, 0), *vis);
        }
    }

    #[test]
    fn identical_classes_have_unit_likelihood_ratio_at_mean() {
        let mut samples = cluster((0.5, 0.5), 20, true);
        samples.extend(cluster((0.5, 0.5), 20, false));
        let c = fit_classifier(&samples).unwrap();
        let at_mean = VisibilityFeatures { f1: 0.5, f2: 0.5 };
        let ratio = c.occluded.weighted_density(&at_mean) / c.visible.weighted_density(&at_mean);
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn insufficient_samples_error() {
        let mut samples = cluster((0.1, 0.9), 2, true);
        samples.extend(cluster((0.9, 0.1), 20, false));
        assert!(matches!(
            fit_classifier(&samples),
            Err(VisibilityError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn classifier_on_oracle_maps_is_accurate() {
        // 500+500 rendered maps, split for a held-out check.
        let mut samples = Vec::new();
        for i in 0..500u64 {
            let c = (10.0 + (i % 60) as f64, 10.0 + (i / 9 % 60) as f64);
            let vis = render_blob(c, 2.0, 0.85 + 0.14 * ((i % 10) as f64 / 10.0));
            let occ = render_occluded(c, 1000 + i);
            samples.push((extract_features(&vis, 0.1, 0.2).unwrap(), true));
            samples.push((extract_features(&occ, 0.1, 0.2).unwrap(), false));
        }
        let (train, held) = samples.split_at(600);
        let classifier = fit_classifier(train).unwrap();
        let model = VisibilityModel { classifier, eps1: 0.1, t2: 0.2, zeta: vec![1.0; NUM_FP] };
        let correct = held.iter().filter(|(f, vis)| classify(&model, f, 0) == *vis).count();
        let acc = correct as f64 / held.len() as f64;
        assert!(acc >= 0.9, "held-out accuracy {acc}");
    }

    #[test]
    fn classify_zeta_limits_and_monotonicity() {
        // Overlapping clusters keep the likelihood ratio at the occluded
        // center a few orders of magnitude, well under the 1e9 limit margin.
        let mut samples = cluster((0.35, 0.65), 20, true);
        samples.extend(cluster((0.65, 0.35), 20, false));
        let classifier = fit_classifier(&samples).unwrap();
        let occluded_ish = VisibilityFeatures { f1: 0.65, f2: 0.35 };
        let mut model =
            VisibilityModel { classifier, eps1: 0.1, t2: 0.2, zeta: vec![1.0; NUM_FP] };
        assert!(!classify(&model, &occluded_ish, 0));
        model.zeta = vec![1e9; NUM_FP];
        assert!(classify(&model, &occluded_ish, 0));
        // Monotone: raising zeta never flips visible -> occluded.
        let mut last = false;
        for &z in &[0.01, 0.1, 1.0, 10.0, 1e4, 1e9] {
            model.zeta = vec![z; NUM_FP];
            let now = classify(&model, &occluded_ish, 0);
            assert!(now || !last, "visible flipped back to occluded at zeta={z}");
            last = now;
        }
    }

    #[test]
    fn classify_threshold_against_direct_density_ratio() {
        let mut samples = cluster((0.2, 0.8), 30, true);
        samples.extend(cluster((0.8, 0.2), 30, false));
        let classifier = fit_classifier(&samples).unwrap();
        // Find a feature point whose weighted density ratio is ~2, then check
        // the decision flips between zeta = 1.5 and zeta = 3.
        let mut probe = VisibilityFeatures { f1: 0.5, f2: 0.5 };
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            probe = VisibilityFeatures { f1: mid, f2: 1.0 - mid };
            let ratio = classifier.occluded.weighted_density(&probe)
                / classifier.visible.weighted_density(&probe);
            if ratio < 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ratio = classifier.occluded.weighted_density(&probe)
            / classifier.visible.weighted_density(&probe);
        assert!((ratio - 2.0).abs() < 1e-6);
        let mut model =
            VisibilityModel { classifier, eps1: 0.1, t2: 0.2, zeta: vec![1.5; NUM_FP] };
        assert!(!classify(&model, &probe, 0), "ratio 2 > zeta 1.5 must be occluded");
        model.zeta = vec![3.0; NUM_FP];
        assert!(classify(&model, &probe, 0), "ratio 2 < zeta 3 must be visible");
    }

    #[test]
    fn zeta_flat_objective_ties_to_smallest() {
        // Errors independent of the split: the objective is identical wherever
        // both classes are non-empty, so the smallest grid value wins.
        let samples: Vec<ZetaSample> = (0..40)
            .map(|i| ZetaSample {
                density_visible: 1.0,
                density_occluded: if i % 2 == 0 { 0.05 } else { 20.0 },
                nme: 0.05,
            })
            .collect();
        let grid = default_zeta_grid();
        let zeta = learn_zeta(&[samples], &grid);
        assert_eq!(zeta[0], grid[0]);
    }

    #[test]
    fn zeta_recovers_separating_ratio() {
        // Low error below likelihood ratio 2, high error above: the returned
        // zeta must agree with an exhaustive grid evaluation and isolate the
        // high-error tail.
        let mut samples = Vec::new();
        for i in 0..30 {
            let ratio = 0.3 + 0.05 * i as f64; // 0.3 .. 1.75
            samples.push(ZetaSample { density_visible: 1.0, density_occluded: ratio, nme: 0.01 });
        }
        for i in 0..30 {
            let ratio = 2.3 + 0.1 * i as f64;
            samples.push(ZetaSample { density_visible: 1.0, density_occluded: ratio, nme: 0.30 });
        }
        let grid = default_zeta_grid();
        let zeta = learn_zeta(&[samples.clone()], &grid)[0];
        let mut best = (f64::NEG_INFINITY, 1.0);
        for &z in &grid {
            let occ: Vec<_> = samples.iter().filter(|s| s.density_occluded > z).collect();
            let vis: Vec<_> = samples.iter().filter(|s| s.density_occluded <= z).collect();
            if occ.is_empty() || vis.is_empty() {
                continue;
            }
            let obj = occ.iter().map(|s| s.nme).sum::<f64>() / occ.len() as f64
                - vis.iter().map(|s| s.nme).sum::<f64>() / vis.len() as f64;
            if obj > best.0 + 1e-15 {
                best = (obj, z);
            }
        }
        assert_eq!(zeta, best.1);
        assert!(zeta > 1.75 && zeta < 2.3, "zeta {zeta} should isolate the high-error tail");
    }

    #[test]
    fn zeta_degenerate_split_falls_back_to_one() {
        let samples: Vec<ZetaSample> = (0..10)
            .map(|_| ZetaSample { density_visible: 1.0, density_occluded: 0.0, nme: 0.1 })
            .collect();
        let zeta = learn_zeta(&[samples], &default_zeta_grid());
        assert_eq!(zeta[0], 1.0);
    }

    #[test]
    fn t2_single_candidate_and_ties() {
        let maps: Vec<ConfidenceMap> = (0..12)
            .map(|i| {
                if i % 2 == 0 {
                    render_blob((40.0, 40.0), 2.0, 1.0)
                } else {
                    render_occluded((40.0, 40.0), i)
                }
            })
            .collect();
        let labeled: Vec<(&ConfidenceMap, bool)> =
            maps.iter().enumerate().map(|(i, m)| (m, i % 2 == 0)).collect();
        assert_eq!(learn_t2(&labeled, 0.1, &[0.4]), 0.4);
        // Perfectly separable data ties on every candidate; smallest wins.
        let grid = default_t2_grid();
        assert_eq!(learn_t2(&labeled, 0.1, &grid), grid[0]);
    }

    #[test]
    fn t2_picks_the_strictly_best_candidate() {
        // Both classes place the same total mass on the same cells, so f1 and
        // the f2 values at thresholds 0.05 (everything counted) and 0.6 (only
        // the shared peak) are identical. Only t2 = 0.2 separates: the visible
        // class stores part of its mass at 0.4, the occluded class at 0.2.
        let mut labeled_maps = Vec::new();
        for i in 0..12u64 {
            let vis = i % 2 == 0;
            let mut g = Grid::zeros();
            g.set(10, 10, 0.9);
            let cells: Vec<(usize, usize)> = (0..MAP_SIZE * MAP_SIZE)
                .map(|k| (k % MAP_SIZE, k / MAP_SIZE))
                .filter(|&(x, y)| (x, y) != (10, 10))
                .take(3000)
                .collect();
            for (j, &(x, y)) in cells.iter().enumerate() {
                let v = if vis {
                    // 300 cells at 0.4 carry +90 extra mass...
                    if j < 300 { 0.4 } else { 0.1 }
                } else {
                    // ...matched by 900 cells at 0.2 here.
                    if j < 900 { 0.2 } else { 0.1 }
                };
                g.set(x, y, v);
            }
            labeled_maps.push((ConfidenceMap::from_grid_clamped(g), vis));
        }
        let labeled: Vec<(&ConfidenceMap, bool)> =
            labeled_maps.iter().map(|(m, v)| (m, *v)).collect();
        let t2 = learn_t2(&labeled, 0.1, &[0.05, 0.2, 0.6]);
        assert_eq!(t2, 0.2);
    }

    #[test]
    fn select_visible_masks_all_zero_maps() {
        let mut samples = cluster((0.002, 0.95), 20, true);
        samples.extend(cluster((0.3, 0.4), 20, false));
        let classifier = fit_classifier(&samples).unwrap();
        let model = VisibilityModel { classifier, eps1: 0.1, t2: 0.2, zeta: vec![1.0; NUM_FP] };
        let zero_stack = ConfidenceStack::new(
            (0..NUM_FP).map(|_| ConfidenceMap::zeros()).collect(),
            vec![],
        );
        let x_a: Vec<Point2<f64>> = (0..NUM_FP).map(|i| Point2::new(i as f64, 0.0)).collect();
        let (x_v, mask) = select_visible(&model, &zero_stack, &x_a);
        assert!(x_v.is_empty());
        assert!(mask.iter().all(|&m| !m));
    }

    #[test]
    fn select_visible_keeps_sharp_blobs() {
        // Model fitted on oracle maps so blob features land in the visible
        // class.
        let mut samples = Vec::new();
        for i in 0..50u64 {
            let vis = render_blob((30.0 + i as f64 % 20.0, 40.0), 2.0, 0.9);
            let occ = render_occluded((40.0, 40.0), 900 + i);
            samples.push((extract_features(&vis, 0.1, 0.2).unwrap(), true));
            samples.push((extract_features(&occ, 0.1, 0.2).unwrap(), false));
        }
        let classifier = fit_classifier(&samples).unwrap();
        let model = VisibilityModel { classifier, eps1: 0.1, t2: 0.2, zeta: vec![1.0; NUM_FP] };
        let blob_stack = ConfidenceStack::new(
            (0..NUM_FP).map(|_| render_blob((40.0, 40.0), 2.0, 1.0)).collect(),
            vec![],
        );
        let x_a: Vec<Point2<f64>> = (0..NUM_FP).map(|i| Point2::new(i as f64, 0.0)).collect();
        let (x_v, mask) = select_visible(&model, &blob_stack, &x_a);
        assert_eq!(x_v.len(), mask.iter().filter(|&&m| m).count());
        assert!(mask.iter().all(|&m| m), "sharp blobs must classify visible");
        assert_eq!(x_v, x_a);
    }
}
