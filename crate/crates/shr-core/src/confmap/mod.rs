//! Confidence-map grids: rendering, blurring, sub-pixel sampling, and peak
//! extraction, plus the synthetic scene generator in [`scene`].

mod scene;

pub use scene::{synth_scene, synth_scene_with, Scene, SceneError, OCCLUSION_LEVELS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Confidence maps are square grids of this side length.
pub const MAP_SIZE: usize = 80;
const MAP_LEN: usize = MAP_SIZE * MAP_SIZE;

/// Row-major square grid of f32 values. The raw storage type: values are
/// unconstrained (the NFP sum map exceeds 1 before normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    data: Vec<f32>,
}

impl Grid {
    pub fn zeros() -> Self {
        Grid { data: vec![0.0; MAP_LEN] }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(MAP_LEN);
        for y in 0..MAP_SIZE {
            for x in 0..MAP_SIZE {
                data.push(f(x, y));
            }
        }
        Grid { data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * MAP_SIZE + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * MAP_SIZE + x] = v;
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().fold(0.0f32, |a, &v| a.max(v))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Bilinear interpolation at continuous map coordinates; anything outside
    /// `[0, MAP_SIZE-1]^2` reads as zero (off-map means no evidence).
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max = (MAP_SIZE - 1) as f64;
        if !(0.0..=max).contains(&x) || !(0.0..=max).contains(&y) {
            return 0.0;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(MAP_SIZE - 1);
        let y1 = (y0 + 1).min(MAP_SIZE - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(x0, y0) as f64;
        let v10 = self.get(x1, y0) as f64;
        let v01 = self.get(x0, y1) as f64;
        let v11 = self.get(x1, y1) as f64;
        v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy
    }

    /// Divides by the grid maximum, mapping into [0, 1]. An all-zero grid
    /// stays zero.
    pub fn max_normalized(&self) -> Grid {
        let m = self.max_value();
        if m <= 0.0 {
            return self.clone();
        }
        Grid { data: self.data.iter().map(|&v| v / m).collect() }
    }
}

/// Per-landmark confidence map with all values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    grid: Grid,
}

impl ConfidenceMap {
    pub fn zeros() -> Self {
        ConfidenceMap { grid: Grid::zeros() }
    }

    /// Wraps a grid, clamping values into [0, 1].
    pub fn from_grid_clamped(mut grid: Grid) -> Self {
        for v in &mut grid.data {
            *v = v.clamp(0.0, 1.0);
        }
        ConfidenceMap { grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f32 {
        self.grid.get(x, y)
    }

    pub fn max_value(&self) -> f32 {
        self.grid.max_value()
    }

    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        self.grid.sample_bilinear(x, y)
    }
}

/// The full per-scene map stack: 19 FP maps, 21 NFP maps, and the elementwise
/// NFP sum kept unnormalized.
#[derive(Debug, Clone)]
pub struct ConfidenceStack {
    pub maps_a: Vec<ConfidenceMap>,
    pub maps_b: Vec<ConfidenceMap>,
    sum_b: Grid,
}

impl ConfidenceStack {
    pub fn new(maps_a: Vec<ConfidenceMap>, maps_b: Vec<ConfidenceMap>) -> Self {
        let sum_b = sum_maps(&maps_b);
        ConfidenceStack { maps_a, maps_b, sum_b }
    }

    pub fn sum_b(&self) -> &Grid {
        &self.sum_b
    }
}

fn sum_maps(maps: &[ConfidenceMap]) -> Grid {
    let mut out = Grid::zeros();
    for m in maps {
        for (dst, &src) in out.data.iter_mut().zip(&m.grid.data) {
            *dst += src;
        }
    }
    out
}

/// Isotropic Gaussian blob: `amplitude * exp(-|p - center|^2 / (2 sigma^2))`.
pub fn render_blob(center: (f64, f64), sigma: f64, amplitude: f64) -> ConfidenceMap {
    assert!(sigma > 0.0);
    assert!(amplitude > 0.0 && amplitude <= 1.0);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let grid = Grid::from_fn(|x, y| {
        let dx = x as f64 - center.0;
        let dy = y as f64 - center.1;
        (amplitude * (-(dx * dx + dy * dy) * inv).exp()) as f32
    });
    ConfidenceMap::from_grid_clamped(grid)
}

/// Low-contrast response of an occluded landmark: a broad weak blob over a
/// smooth seeded noise floor, giving the characteristic long-tail histogram.
pub fn render_occluded(center: (f64, f64), seed: u64) -> ConfidenceMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma: f64 = rng.random_range(9.0..14.0);
    let peak: f64 = rng.random_range(0.25..0.35);
    // Coarse noise lattice, bilinearly upsampled for spatial smoothness.
    const COARSE: usize = 9;
    let mut lattice = [[0.0f64; COARSE]; COARSE];
    for row in lattice.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.random_range(0.0..0.15);
        }
    }
    let step = (MAP_SIZE - 1) as f64 / (COARSE - 1) as f64;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let grid = Grid::from_fn(|x, y| {
        let dx = x as f64 - center.0;
        let dy = y as f64 - center.1;
        let blob = peak * (-(dx * dx + dy * dy) * inv).exp();
        let gx = (x as f64 / step).min((COARSE - 2) as f64);
        let gy = (y as f64 / step).min((COARSE - 2) as f64);
        let ix = gx.floor() as usize;
        let iy = gy.floor() as usize;
        let fx = gx - ix as f64;
        let fy = gy - iy as f64;
        let noise = lattice[iy][ix] * (1.0 - fx) * (1.0 - fy)
            + lattice[iy][ix + 1] * fx * (1.0 - fy)
            + lattice[iy + 1][ix] * (1.0 - fx) * fy
            + lattice[iy + 1][ix + 1] * fx * fy;
        (blob + noise) as f32
    });
    ConfidenceMap::from_grid_clamped(grid)
}

/// Gaussian convolution with reflect padding; no value clamping.
pub fn gaussian_blur_grid(grid: &Grid, sigma: f64) -> Grid {
    assert!(sigma > 0.0);
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for k in -radius..=radius {
        kernel.push((-(k * k) as f64 * inv).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= norm;
    }

    let reflect = |i: isize| -> usize {
        let n = MAP_SIZE as isize;
        let mut i = i;
        if i < 0 {
            i = -i - 1;
        }
        if i >= n {
            i = 2 * n - i - 1;
        }
        i as usize
    };

    // Horizontal pass.
    let mut tmp = vec![0.0f64; MAP_LEN];
    for y in 0..MAP_SIZE {
        for x in 0..MAP_SIZE {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let sx = reflect(x as isize + ki as isize - radius);
                acc += w * grid.get(sx, y) as f64;
            }
            tmp[y * MAP_SIZE + x] = acc;
        }
    }
    // Vertical pass.
    let mut out = Grid::zeros();
    for y in 0..MAP_SIZE {
        for x in 0..MAP_SIZE {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let sy = reflect(y as isize + ki as isize - radius);
                acc += w * tmp[sy * MAP_SIZE + x];
            }
            out.set(x, y, acc as f32);
        }
    }
    out
}

/// Gaussian blur of a confidence map, clamped back to [0, 1].
pub fn blur(map: &ConfidenceMap, sigma: f64) -> ConfidenceMap {
    ConfidenceMap::from_grid_clamped(gaussian_blur_grid(&map.grid, sigma))
}

/// Location of the map maximum with per-axis quadratic sub-pixel refinement.
pub fn peak_location(map: &ConfidenceMap) -> (f64, f64) {
    let mut best = (0usize, 0usize);
    let mut best_v = f32::MIN;
    for y in 0..MAP_SIZE {
        for x in 0..MAP_SIZE {
            let v = map.value(x, y);
            if v > best_v {
                best_v = v;
                best = (x, y);
            }
        }
    }
    let (bx, by) = best;
    let refine = |m1: f32, c: f32, p1: f32| -> f64 {
        let denom = (m1 - 2.0 * c + p1) as f64;
        if denom.abs() < 1e-12 {
            return 0.0;
        }
        (0.5 * (m1 - p1) as f64 / denom).clamp(-0.5, 0.5)
    };
    let dx = if bx > 0 && bx < MAP_SIZE - 1 {
        refine(map.value(bx - 1, by), best_v, map.value(bx + 1, by))
    } else {
        0.0
    };
    let dy = if by > 0 && by < MAP_SIZE - 1 {
        refine(map.value(bx, by - 1), best_v, map.value(bx, by + 1))
    } else {
        0.0
    };
    (bx as f64 + dx, by as f64 + dy)
}

/// Square region of interest in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub origin: [f64; 2],
    pub side: f64,
}

impl Roi {
    /// Image pixels per map pixel.
    pub fn q(&self) -> f64 {
        self.side / MAP_SIZE as f64
    }

    /// Square root of the ROI area.
    pub fn omega(&self) -> f64 {
        self.side
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.origin[0]
            && p.0 <= self.origin[0] + self.side
            && p.1 >= self.origin[1]
            && p.1 <= self.origin[1] + self.side
    }

    /// Image pixels -> map coordinates.
    pub fn to_map(&self, p: (f64, f64)) -> (f64, f64) {
        let q = self.q();
        ((p.0 - self.origin[0]) / q, (p.1 - self.origin[1]) / q)
    }

    /// Map coordinates -> image pixels.
    pub fn to_image(&self, p: (f64, f64)) -> (f64, f64) {
        let q = self.q();
        (self.origin[0] + p.0 * q, self.origin[1] + p.1 * q)
    }

    pub fn clamp_point(&self, p: (f64, f64)) -> (f64, f64) {
        (
            p.0.clamp(self.origin[0], self.origin[0] + self.side),
            p.1.clamp(self.origin[1], self.origin[1] + self.side),
        )
    }
}

/// Axis-aligned rectangle in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPx {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl RectPx {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.x && p.0 <= self.x + self.w && p.1 >= self.y && p.1 <= self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}
