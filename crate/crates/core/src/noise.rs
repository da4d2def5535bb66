//! State-preparation noise and the four-stage measurement-image pipeline.
//!
//! Pipeline order: Gaussian convolution, affine jitter, additive Gaussian,
//! salt-and-pepper. Stage `i` draws from the substream `(cfg.seed, i)`.

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::Grid;
use crate::quantum::DensityMatrix;
use crate::rng::{rng_from_seed, substream_seed};
use crate::states::random_dm;

/// Real-valued raster over a phase-space grid. Row `i` is `pgrid[i]`, column
/// `j` is `xgrid[j]`; pixels are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    grid: Grid,
}

impl PhaseSpaceImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>, grid: Grid) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::LengthMismatch { expected: height * width, got: pixels.len() });
        }
        if grid.pgrid.len() != height || grid.xgrid.len() != width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} image on a {}x{} grid",
                grid.pgrid.len(),
                grid.xgrid.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("image pixels must be finite".into()));
        }
        Ok(Self { height, width, pixels, grid })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// (row, col) of the largest pixel.
    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .pixels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
            .0;
        (k / self.width, k % self.width)
    }

    pub fn transpose(&self) -> Self {
        let pixels = (0..self.width * self.height)
            .map(|k| {
                let (i, j) = (k / self.height, k % self.height);
                self.pixels[j * self.width + i]
            })
            .collect();
        let grid = Grid { xgrid: self.grid.pgrid.clone(), pgrid: self.grid.xgrid.clone() };
        Self { height: self.width, width: self.height, pixels, grid }
    }

    fn with_pixels(&self, pixels: Vec<f64>) -> Self {
        Self { pixels, ..self.clone() }
    }
}

/// Noise strengths. Serialized with the parameter names of the default-noise
/// table as keys; the JSON shipped in `data/noise_defaults.json` holds the
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Mixed-state weight ζ.
    #[serde(rename = "zeta")]
    pub zeta: f64,
    /// Gaussian convolution occupancy n_th.
    #[serde(rename = "n_th")]
    pub nth_conv: f64,
    /// Affine rotation bound θ in degrees.
    #[serde(rename = "rotation_theta_deg")]
    pub rotation_deg: f64,
    /// Affine translation bounds (x, y) as fractions of the image extent.
    #[serde(rename = "translation_xy")]
    pub translate_xy: (f64, f64),
    /// Additive Gaussian standard deviation.
    #[serde(rename = "std_deviation")]
    pub additive_sigma: f64,
    #[serde(rename = "salt_proportion")]
    pub salt_prop: f64,
    #[serde(rename = "pepper_proportion")]
    pub pepper_prop: f64,
    #[serde(default)]
    pub seed: u64,
}

const DEFAULT_NOISE_JSON: &str = include_str!("../data/noise_defaults.json");

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            zeta: 0.2,
            nth_conv: 2.0,
            rotation_deg: 20.0,
            translate_xy: (0.1, 0.1),
            additive_sigma: 0.01,
            salt_prop: 0.0,
            pepper_prop: 0.1,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    /// Every strength zero.
    pub fn zero() -> Self {
        Self {
            zeta: 0.0,
            nth_conv: 0.0,
            rotation_deg: 0.0,
            translate_xy: (0.0, 0.0),
            additive_sigma: 0.0,
            salt_prop: 0.0,
            pepper_prop: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The shipped defaults file contents.
    pub fn defaults_json() -> &'static str {
        DEFAULT_NOISE_JSON
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(Error::BadZeta(self.zeta));
        }
        if !(self.nth_conv >= 0.0) {
            return Err(Error::NegativeParameter { name: "n_th", value: self.nth_conv });
        }
        if !self.rotation_deg.is_finite() {
            return Err(Error::InvalidParameter("rotation must be finite".into()));
        }
        for t in [self.translate_xy.0, self.translate_xy.1] {
            if !(t.abs() <= 1.0) {
                return Err(Error::BadFraction(t));
            }
        }
        if !(self.additive_sigma >= 0.0) {
            return Err(Error::NegativeParameter { name: "std_deviation", value: self.additive_sigma });
        }
        check_proportions(self.salt_prop, self.pepper_prop)
    }
}

fn check_proportions(salt: f64, pepper: f64) -> Result<()> {
    let ok = (0.0..=1.0).contains(&salt) && (0.0..=1.0).contains(&pepper) && salt + pepper <= 1.0;
    if ok {
        Ok(())
    } else {
        Err(Error::BadProportion { salt, pepper })
    }
}

/// ρ_mix = (1 − ζ)ρ + ζ ρ_rand with ρ_rand a full-rank Ginibre state drawn
/// from `seed`.
pub fn mix_with_random(rho: &DensityMatrix, zeta: f64, seed: u64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::BadZeta(zeta));
    }
    if zeta == 0.0 {
        return Ok(rho.clone());
    }
    let random = random_dm(rho.dim(), rho.dim(), seed)?;
    if zeta == 1.0 {
        return Ok(random);
    }
    rho.mix(&random, zeta)
}

/// Index reflection about the edges (`d c b a | a b c d | d c b a`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn gaussian_kernel(sigma_px: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_px).ceil().max(1.0) as isize;
    let raw: Vec<f64> = (-radius..=radius).map(|k| (-(k * k) as f64 / (2.0 * sigma_px * sigma_px)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Spreads each pixel along one axis with `kernel`, folding mass that leaves
/// the frame back in by reflection.
fn spread_axis(pixels: &[f64], height: usize, width: usize, kernel: &[f64], along_rows: bool) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; pixels.len()];
    for i in 0..height {
        for j in 0..width {
            let v = pixels[i * width + j];
            if v == 0.0 {
                continue;
            }
            for (t, w) in kernel.iter().enumerate() {
                let off = t as isize - radius;
                let (ti, tj) = if along_rows {
                    (reflect(i as isize + off, height), j)
                } else {
                    (i, reflect(j as isize + off, width))
                };
                out[ti * width + tj] += w * v;
            }
        }
    }
    out
}

/// Convolution with a normalized isotropic Gaussian of phase-space variance
/// n_th/2, converted to pixels through the grid spacing. Mass reaching the
/// border is reflected back, so the pixel sum is preserved.
pub fn gaussian_convolution(img: &PhaseSpaceImage, nth: f64) -> Result<PhaseSpaceImage> {
    if !(nth >= 0.0) {
        return Err(Error::NegativeParameter { name: "n_th", value: nth });
    }
    if nth == 0.0 {
        return Ok(img.clone());
    }
    let sigma = (nth / 2.0).sqrt();
    let kx = gaussian_kernel(sigma / img.grid.dx());
    let kp = gaussian_kernel(sigma / img.grid.dp());
    let along_x = spread_axis(&img.pixels, img.height, img.width, &kx, false);
    let both = spread_axis(&along_x, img.height, img.width, &kp, true);
    Ok(img.with_pixels(both))
}

/// Rotates by `angle_deg` about the image centre (counter-clockwise in the
/// (x, p) plane) and shifts by the given fractions of the width and height.
/// Each source pixel's value is splatted bilinearly onto the four
/// destination pixels around its image; mass landing outside the frame is
/// dropped and unreached pixels stay 0.
pub fn affine_apply(img: &PhaseSpaceImage, angle_deg: f64, shift_x: f64, shift_y: f64) -> PhaseSpaceImage {
    if angle_deg == 0.0 && shift_x == 0.0 && shift_y == 0.0 {
        return img.clone();
    }
    let (h, w) = (img.height, img.width);
    let (cu, cv) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (tu, tv) = (shift_x * w as f64, shift_y * h as f64);
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let v = img.pixels[i * w + j];
            if v == 0.0 {
                continue;
            }
            let (du, dv) = (j as f64 - cu, i as f64 - cv);
            let u = cos * du - sin * dv + cu + tu;
            let r = sin * du + cos * dv + cv + tv;
            let (u0, r0) = (u.floor(), r.floor());
            let (fu, fr) = (u - u0, r - r0);
            for (di, wr) in [(0, 1.0 - fr), (1, fr)] {
                for (dj, wu) in [(0, 1.0 - fu), (1, fu)] {
                    let weight = wr * wu;
                    if weight == 0.0 {
                        continue;
                    }
                    let (ti, tj) = (r0 as isize + di, u0 as isize + dj);
                    if (0..h as isize).contains(&ti) && (0..w as isize).contains(&tj) {
                        out[ti as usize * w + tj as usize] += weight * v;
                    }
                }
            }
        }
    }
    img.with_pixels(out)
}

/// Random affine jitter: angle uniform in ±`rotation_deg`, shifts uniform in
/// ±`tx` × ±`ty` (fractions of the image extent), drawn from `seed`.
pub fn affine_transform(img: &PhaseSpaceImage, rotation_deg: f64, tx: f64, ty: f64, seed: u64) -> Result<PhaseSpaceImage> {
    for t in [tx, ty] {
        if !(t.abs() <= 1.0) {
            return Err(Error::BadFraction(t));
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut symmetric = |bound: f64| {
        let b = bound.abs();
        if b == 0.0 {
            0.0
        } else {
            rng.random_range(-b..=b)
        }
    };
    let angle = symmetric(rotation_deg);
    let sx = symmetric(tx);
    let sy = symmetric(ty);
    Ok(affine_apply(img, angle, sx, sy))
}

/// Adds i.i.d. N(0, σ²) per pixel, then clamps at 0 from below.
pub fn additive_gaussian(img: &PhaseSpaceImage, sigma: f64, seed: u64) -> Result<PhaseSpaceImage> {
    if !(sigma >= 0.0) {
        return Err(Error::NegativeParameter { name: "std_deviation", value: sigma });
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let pixels = img.pixels.iter().map(|&p| (p + normal.sample(&mut rng)).max(0.0)).collect();
    Ok(img.with_pixels(pixels))
}

/// round(salt·N) pixels set to the image maximum and a disjoint round(pepper·N)
/// set to zero, chosen uniformly without replacement.
pub fn salt_pepper(img: &PhaseSpaceImage, salt_prop: f64, pepper_prop: f64, seed: u64) -> Result<PhaseSpaceImage> {
    check_proportions(salt_prop, pepper_prop)?;
    let n = img.pixels.len();
    let n_salt = (salt_prop * n as f64).round() as usize;
    let n_pepper = ((pepper_prop * n as f64).round() as usize).min(n - n_salt);
    if n_salt + n_pepper == 0 {
        return Ok(img.clone());
    }
    let peak = img.max();
    let mut rng = rng_from_seed(seed);
    let chosen = sample_indices(&mut rng, n, n_salt + n_pepper);
    let mut pixels = img.pixels.clone();
    for (rank, k) in chosen.into_iter().enumerate() {
        pixels[k] = if rank < n_salt { peak } else { 0.0 };
    }
    Ok(img.with_pixels(pixels))
}

/// Substream index of each pipeline stage.
pub mod stage {
    pub const CONVOLUTION: u64 = 0;
    pub const AFFINE: u64 = 1;
    pub const ADDITIVE: u64 = 2;
    pub const SALT_PEPPER: u64 = 3;
    /// Mixed-state noise, for callers that apply it with the same seed.
    pub const MIXING: u64 = 4;
}

/// Convolution, affine jitter, additive noise, salt-and-pepper, in that order.
pub fn apply_pipeline(img: &PhaseSpaceImage, cfg: &NoiseConfig) -> Result<PhaseSpaceImage> {
    cfg.validate()?;
    let out = gaussian_convolution(img, cfg.nth_conv)?;
    let out = affine_transform(
        &out,
        cfg.rotation_deg,
        cfg.translate_xy.0,
        cfg.translate_xy.1,
        substream_seed(cfg.seed, stage::AFFINE),
    )?;
    let out = additive_gaussian(&out, cfg.additive_sigma, substream_seed(cfg.seed, stage::ADDITIVE))?;
    salt_pepper(&out, cfg.salt_prop, cfg.pepper_prop, substream_seed(cfg.seed, stage::SALT_PEPPER))
}
