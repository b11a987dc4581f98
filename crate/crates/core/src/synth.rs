//! Synthetic terrain scenes: DEM generation, the topographic interferogram
//! with coherence noise, and ground-truth aspect / slope grids.
//!
//! Aspect labels follow the ascent direction: elevation increasing eastward
//! (`Δew > 0`) is East, decreasing is West; increasing southward (down the
//! rows, `Δns > 0`) is South, decreasing is North. The same rule is used by
//! the neighbor-difference baseline, so comparisons do not depend on it.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::raster::{Aspect, ComplexRaster, LabelMap, Rect, TeacherArea};
use crate::seed;

const DEM_MAGIC: &[u8; 4] = b"DEM1";

/// Row-major grid of reals with ground spacing in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    /// (range / east-west, azimuth / north-south), meters per pixel.
    pub spacing: (f64, f64),
}

/// Elevation model, meters.
pub type Dem = Grid;

impl Grid {
    pub fn new(width: usize, height: usize, values: Vec<f64>, spacing: (f64, f64)) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::dim("Grid::new", format!("{} values for {width}x{height}", values.len())));
        }
        if !(spacing.0 > 0.0 && spacing.1 > 0.0) {
            return Err(Error::invalid(format!("pixel spacing must be positive, got {spacing:?}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid contains non-finite values"));
        }
        Ok(Self { width, height, values, spacing })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Forward difference to the east; the last column repeats.
    #[inline]
    pub fn diff_ew(&self, row: usize, col: usize) -> f64 {
        if self.width < 2 {
            return 0.0;
        }
        let c = col.min(self.width - 2);
        self.get(row, c + 1) - self.get(row, c)
    }

    /// Forward difference to the south; the last row repeats.
    #[inline]
    pub fn diff_ns(&self, row: usize, col: usize) -> f64 {
        if self.height < 2 {
            return 0.0;
        }
        let r = row.min(self.height - 2);
        self.get(r + 1, col) - self.get(r, col)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// `DEM1`: magic, `u32` width and height, `f32` spacing pair, then
    /// `f32` values row-major, all little-endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(20 + 4 * self.values.len());
        buf.extend_from_slice(DEM_MAGIC);
        buf.extend_from_slice(&(self.width as u32).to_le_bytes());
        buf.extend_from_slice(&(self.height as u32).to_le_bytes());
        buf.extend_from_slice(&(self.spacing.0 as f32).to_le_bytes());
        buf.extend_from_slice(&(self.spacing.1 as f32).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[..4] != DEM_MAGIC {
            return Err(Error::format("DEM1", "bad magic"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap()) as usize;
        let f32_at = |i: usize| f32::from_le_bytes(head[i..i + 4].try_into().unwrap()) as f64;
        let (width, height) = (u32_at(4), u32_at(8));
        let spacing = (f32_at(12), f32_at(16));
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != width * height * 4 {
            return Err(Error::format(
                "DEM1",
                format!("expected {} payload bytes, found {}", width * height * 4, body.len()),
            ));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Self::new(width, height, values, spacing)
    }
}

/// Cone with a straight radial flank, in pixel geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub center: (f64, f64),
    pub base_radius: f64,
    pub peak_height: f64,
}

/// Dome roughened by fractal value noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughMountain {
    pub center: (f64, f64),
    pub radius: f64,
    pub height: f64,
    pub octaves: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lake {
    pub center: (f64, f64),
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub spacing: (f64, f64),
    pub flat_height: f64,
    pub cone: Option<Cone>,
    pub rough_mountain: Option<RoughMountain>,
    pub lake: Option<Lake>,
    /// Elevation change per 2π of interferometric phase, meters.
    pub height_ambiguity: f64,
    pub coherence: f64,
    /// Radius around the cone apex with low, random-phase returns, pixels.
    pub summit_scree_radius: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    /// The 400×400 reference scene: a large cone, a rough mountain, a lake
    /// and an open plain, at coherence 0.7.
    fn default() -> Self {
        Self {
            width: 400,
            height: 400,
            spacing: (30.0, 50.0),
            flat_height: 100.0,
            cone: Some(Cone {
                center: (160.0, 150.0),
                base_radius: 130.0,
                peak_height: 1500.0,
            }),
            rough_mountain: Some(RoughMountain {
                center: (300.0, 320.0),
                radius: 85.0,
                height: 700.0,
                octaves: 5,
            }),
            lake: Some(Lake {
                center: (70.0, 330.0),
                radius: 45.0,
            }),
            height_ambiguity: 72.0,
            coherence: 0.7,
            summit_scree_radius: 6.0,
            seed: 1,
        }
    }
}

/// Amplitude of water returns.
pub const WATER_AMPLITUDE: f64 = 0.1;
/// Amplitude of scree returns near the summit.
pub const SCREE_AMPLITUDE: f64 = 0.05;
/// Slope (degrees) at which the clean amplitude halves.
pub const AMPLITUDE_SLOPE_SCALE_DEG: f64 = 20.0;

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::invalid("scene must be at least 2x2"));
        }
        if !(self.spacing.0 > 0.0 && self.spacing.1 > 0.0) {
            return Err(Error::invalid("pixel spacing must be positive"));
        }
        if !(0.0..=1.0).contains(&self.coherence) {
            return Err(Error::invalid(format!("coherence {} outside [0, 1]", self.coherence)));
        }
        if !(self.height_ambiguity > 0.0) {
            return Err(Error::invalid("height ambiguity must be positive"));
        }
        if !self.flat_height.is_finite() || !(self.summit_scree_radius >= 0.0) {
            return Err(Error::invalid("flat height must be finite and scree radius non-negative"));
        }
        if let Some(c) = &self.cone {
            if !(c.base_radius > 0.0) || !c.peak_height.is_finite() {
                return Err(Error::invalid("cone needs a positive radius and finite height"));
            }
        }
        if let Some(m) = &self.rough_mountain {
            if !(m.radius > 0.0) || !m.height.is_finite() {
                return Err(Error::invalid("rough mountain needs a positive radius and finite height"));
            }
        }
        if let (Some(l), Some(c)) = (&self.lake, &self.cone) {
            if dist(l.center, c.center) <= l.radius {
                return Err(Error::invalid("lake covers the cone peak"));
            }
        }
        Ok(())
    }

    pub fn is_water(&self, row: usize, col: usize) -> bool {
        self.lake
            .as_ref()
            .is_some_and(|l| dist((row as f64, col as f64), l.center) < l.radius)
    }

    fn is_scree(&self, row: usize, col: usize) -> bool {
        self.cone.as_ref().is_some_and(|c| {
            self.summit_scree_radius > 0.0 && dist((row as f64, col as f64), c.center) < self.summit_scree_radius
        })
    }

    pub fn water_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.width * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                mask.push(self.is_water(r, c));
            }
        }
        mask
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn lattice_hash(seed: u64, octave: u32, x: i64, y: i64) -> f64 {
    let mut h = seed ^ (u64::from(octave)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= (x as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = h.rotate_left(31) ^ (y as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^= h >> 31;
    // Uniform in [-1, 1].
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn value_noise(seed: u64, octave: u32, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let v00 = lattice_hash(seed, octave, ix, iy);
    let v10 = lattice_hash(seed, octave, ix + 1, iy);
    let v01 = lattice_hash(seed, octave, ix, iy + 1);
    let v11 = lattice_hash(seed, octave, ix + 1, iy + 1);
    let a = v00 + (v10 - v00) * sx;
    let b = v01 + (v11 - v01) * sx;
    a + (b - a) * sy
}

/// Fractal value noise in roughly [-1, 1].
pub fn fbm(seed: u64, octaves: u32, x: f64, y: f64) -> f64 {
    let (mut sum, mut amp, mut freq, mut norm) = (0.0, 1.0, 1.0, 0.0);
    for o in 0..octaves {
        sum += amp * value_noise(seed, o, x * freq, y * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    if norm > 0.0 {
        sum / norm
    } else {
        0.0
    }
}

/// Fraction of the rough mountain's height carried by the noise term.
const ROUGHNESS: f64 = 0.35;
/// Wavelength of the coarsest noise octave, pixels.
const ROUGH_WAVELENGTH: f64 = 32.0;

/// Plain + cone + rough mountain, with the lake disk flattened to the plain.
pub fn generate_dem(spec: &SceneSpec) -> Result<Dem> {
    spec.validate()?;
    let noise_seed = seed::derive(spec.seed, "rough-mountain");
    let mut values = Vec::with_capacity(spec.width * spec.height);
    for r in 0..spec.height {
        for c in 0..spec.width {
            let p = (r as f64, c as f64);
            let mut h = spec.flat_height;
            if let Some(cone) = &spec.cone {
                let d = dist(p, cone.center);
                if d < cone.base_radius {
                    h += cone.peak_height * (1.0 - d / cone.base_radius);
                }
            }
            if let Some(m) = &spec.rough_mountain {
                let d = dist(p, m.center);
                if d < m.radius {
                    let bump = (0.5 * PI * d / m.radius).cos().powi(2);
                    let n = fbm(noise_seed, m.octaves, p.1 / ROUGH_WAVELENGTH, p.0 / ROUGH_WAVELENGTH);
                    h += m.height * bump * (1.0 + ROUGHNESS * n);
                }
            }
            if spec.is_water(r, c) {
                h = spec.flat_height;
            }
            values.push(h);
        }
    }
    Grid::new(spec.width, spec.height, values, spec.spacing)
}

/// Principal value of an angle, in (-π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Local slope magnitude in degrees from both forward differences.
fn slope_magnitude_deg(dem: &Dem, r: usize, c: usize) -> f64 {
    let gx = dem.diff_ew(r, c) / dem.spacing.0;
    let gy = dem.diff_ns(r, c) / dem.spacing.1;
    gx.hypot(gy).atan().to_degrees()
}

/// Topographic interferogram of a DEM.
///
/// Clean signal: phase `wrap(2π h / h_amb)`, amplitude `1 / (1 + s/20°)`
/// for slope magnitude `s`; scree around the cone apex and water get a low
/// amplitude with uniform random phase. Then `z = γ s + sqrt(1-γ²) n` with
/// `n` circular complex Gaussian of unit variance.
pub fn dem_to_interferogram(dem: &Dem, spec: &SceneSpec) -> Result<ComplexRaster> {
    if !(spec.height_ambiguity > 0.0) {
        return Err(Error::invalid("height ambiguity must be positive"));
    }
    if !(0.0..=1.0).contains(&spec.coherence) {
        return Err(Error::invalid(format!("coherence {} outside [0, 1]", spec.coherence)));
    }
    if dem.width != spec.width || dem.height != spec.height {
        return Err(Error::dim(
            "dem_to_interferogram",
            format!("DEM is {}x{}, scene is {}x{}", dem.width, dem.height, spec.width, spec.height),
        ));
    }
    let mut random_phase = seed::rng(seed::derive(spec.seed, "scatter-phase"));
    let mut speckle = seed::rng(seed::derive(spec.seed, "speckle"));
    let g = spec.coherence;
    let s_noise = (1.0 - g * g).max(0.0).sqrt();
    let component = std::f64::consts::FRAC_1_SQRT_2;

    ComplexRaster::from_fn(dem.width, dem.height, |r, c| {
        let scatter_phase: f64 = random_phase.random_range(-PI..PI);
        let clean = if spec.is_water(r, c) {
            Complex64::from_polar(WATER_AMPLITUDE, scatter_phase)
        } else if spec.is_scree(r, c) {
            Complex64::from_polar(SCREE_AMPLITUDE, scatter_phase)
        } else {
            let amp = 1.0 / (1.0 + slope_magnitude_deg(dem, r, c) / AMPLITUDE_SLOPE_SCALE_DEG);
            Complex64::from_polar(amp, wrap_phase(TAU * dem.get(r, c) / spec.height_ambiguity))
        };
        let nr: f64 = StandardNormal.sample(&mut speckle);
        let ni: f64 = StandardNormal.sample(&mut speckle);
        let noise = Complex64::new(nr * component, ni * component);
        if g == 1.0 {
            clean
        } else {
            clean * g + noise * s_noise
        }
    })
}

/// Decision shared by the ground truth and the neighbor-difference
/// baseline: flat if both magnitudes are under `tau`, otherwise the sign of
/// the dominant direction (east-west on ties).
pub fn aspect_rule(d_ew: f64, d_ns: f64, tau: f64) -> Aspect {
    let (a, b) = (d_ew.abs(), d_ns.abs());
    if a < tau && b < tau {
        Aspect::Flat
    } else if a >= b {
        if d_ew > 0.0 {
            Aspect::East
        } else {
            Aspect::West
        }
    } else if d_ns > 0.0 {
        Aspect::South
    } else {
        Aspect::North
    }
}

/// Flat/slope threshold: midpoint between the mean dominant difference
/// magnitude over the slope teacher areas and over the flat teacher area.
pub fn teacher_threshold(
    areas: &[TeacherArea],
    width: usize,
    height: usize,
    magnitude: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    for class in Aspect::ALL {
        if !areas.iter().any(|a| a.class == class) {
            return Err(Error::invalid(format!("no teacher area for class {}", class.name())));
        }
    }
    let (mut slope_sum, mut slope_n, mut flat_sum, mut flat_n) = (0.0, 0usize, 0.0, 0usize);
    for a in areas {
        if !a.rect.fits_in(width, height) {
            return Err(Error::invalid(format!("teacher area {:?} outside the grid", a.rect)));
        }
        for r in a.rect.row..a.rect.row + a.rect.rows {
            for c in a.rect.col..a.rect.col + a.rect.cols {
                let m = magnitude(r, c);
                if a.class == Aspect::Flat {
                    flat_sum += m;
                    flat_n += 1;
                } else {
                    slope_sum += m;
                    slope_n += 1;
                }
            }
        }
    }
    let slope_mean = slope_sum / slope_n as f64;
    let flat_mean = flat_sum / flat_n as f64;
    if !(slope_mean > flat_mean) {
        return Err(Error::invalid(format!(
            "degenerate flat/slope threshold: slope-area mean {slope_mean} <= flat-area mean {flat_mean}"
        )));
    }
    Ok(0.5 * (slope_mean + flat_mean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub aspect: LabelMap,
    /// Signed east-west slope, degrees (positive ascends eastward).
    pub slope_ew: Grid,
    pub water_mask: Vec<bool>,
    /// Elevation threshold used for the flat class, meters.
    pub tau: f64,
}

/// Aspect labels from adjacent-pixel elevation differences.
pub fn ground_truth_aspect(dem: &Dem, teacher_areas: &[TeacherArea], water_mask: &[bool]) -> Result<GroundTruth> {
    if water_mask.len() != dem.width * dem.height {
        return Err(Error::dim("ground_truth_aspect", "water mask does not match the DEM"));
    }
    let tau = teacher_threshold(teacher_areas, dem.width, dem.height, |r, c| {
        dem.diff_ew(r, c).abs().max(dem.diff_ns(r, c).abs())
    })?;
    let mut aspect = LabelMap::filled(dem.width, dem.height, LabelMap::MISSING);
    for r in 0..dem.height {
        for c in 0..dem.width {
            let v = if water_mask[r * dem.width + c] {
                LabelMap::MASKED
            } else {
                aspect_rule(dem.diff_ew(r, c), dem.diff_ns(r, c), tau) as u8
            };
            aspect.set(r, c, v);
        }
    }
    Ok(GroundTruth {
        aspect,
        slope_ew: ground_truth_slope(dem),
        water_mask: water_mask.to_vec(),
        tau,
    })
}

/// Signed east-west slope angle, `atan(Δh_ew / range_spacing)` in degrees.
pub fn ground_truth_slope(dem: &Dem) -> Grid {
    let mut values = Vec::with_capacity(dem.values.len());
    for r in 0..dem.height {
        for c in 0..dem.width {
            values.push((dem.diff_ew(r, c) / dem.spacing.0).atan().to_degrees());
        }
    }
    Grid {
        width: dem.width,
        height: dem.height,
        values,
        spacing: dem.spacing,
    }
}

/// Everything derived from one [`SceneSpec`].
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub dem: Dem,
    pub interferogram: ComplexRaster,
    pub truth: GroundTruth,
}

impl SyntheticScene {
    pub fn generate(spec: &SceneSpec, teacher_areas: &[TeacherArea]) -> Result<Self> {
        let dem = generate_dem(spec)?;
        let interferogram = dem_to_interferogram(&dem, spec)?;
        let truth = ground_truth_aspect(&dem, teacher_areas, &spec.water_mask())?;
        Ok(Self {
            spec: spec.clone(),
            dem,
            interferogram,
            truth,
        })
    }
}

/// Teacher rectangles for the reference scene: one per cone flank and one
/// on the plain, each 60×60 so that 50×50 frames still fit. Labels follow
/// the ascent direction, so the flank north of the apex is South.
pub fn reference_teacher_areas() -> Vec<TeacherArea> {
    vec![
        TeacherArea { rect: Rect::new(215, 120, 60, 60), class: Aspect::North },
        TeacherArea { rect: Rect::new(130, 35, 60, 60), class: Aspect::East },
        TeacherArea { rect: Rect::new(45, 120, 60, 60), class: Aspect::South },
        TeacherArea { rect: Rect::new(130, 205, 60, 60), class: Aspect::West },
        TeacherArea { rect: Rect::new(320, 40, 60, 60), class: Aspect::Flat },
    ]
}

/// Named evaluation regions of the reference scene.
pub fn reference_regions() -> Vec<(String, Rect)> {
    vec![
        ("flat".to_string(), Rect::new(305, 5, 90, 220)),
        ("lake_shore".to_string(), Rect::new(15, 265, 110, 130)),
        ("rough_mountain".to_string(), Rect::new(220, 240, 160, 155)),
        ("cone".to_string(), Rect::new(30, 20, 260, 260)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_spec(w: usize, h: usize) -> SceneSpec {
        SceneSpec {
            width: w,
            height: h,
            cone: None,
            rough_mountain: None,
            lake: None,
            summit_scree_radius: 0.0,
            coherence: 1.0,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn flat_scene_is_flat() {
        let dem = generate_dem(&flat_spec(20, 10)).unwrap();
        assert!(dem.values.iter().all(|&v| v == 100.0));
        assert!(ground_truth_slope(&dem).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cone_geometry() {
        let spec = SceneSpec {
            cone: Some(Cone { center: (50.0, 50.0), base_radius: 40.0, peak_height: 1000.0 }),
            ..flat_spec(101, 101)
        };
        let dem = generate_dem(&spec).unwrap();
        assert_eq!(dem.get(50, 50), 1100.0);
        assert_eq!(dem.get(50, 90), 100.0);
        assert_eq!(dem.get(10, 50), 100.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SceneSpec { width: 120, height: 90, cone: None, lake: None, ..SceneSpec::default() };
        let spec = SceneSpec {
            rough_mountain: Some(RoughMountain { center: (45.0, 60.0), radius: 40.0, height: 500.0, octaves: 4 }),
            ..spec
        };
        assert_eq!(generate_dem(&spec).unwrap(), generate_dem(&spec).unwrap());
        let dem = generate_dem(&spec).unwrap();
        assert_eq!(dem_to_interferogram(&dem, &spec).unwrap(), dem_to_interferogram(&dem, &spec).unwrap());
    }

    #[test]
    fn lake_on_cone_peak_rejected() {
        let spec = SceneSpec {
            lake: Some(Lake { center: (160.0, 150.0), radius: 20.0 }),
            ..SceneSpec::default()
        };
        assert!(generate_dem(&spec).is_err());
    }

    #[test]
    fn clean_interferogram_phase() {
        let spec = flat_spec(8, 4);
        let zero = Grid::new(8, 4, vec![0.0; 32], spec.spacing).unwrap();
        let ifg = dem_to_interferogram(&zero, &spec).unwrap();
        assert!(ifg.pixels().iter().all(|p| p.arg() == 0.0 && (p.norm() - 1.0).abs() < 1e-15));

        let half = zero.map(|_| spec.height_ambiguity / 2.0);
        let ifg = dem_to_interferogram(&half, &spec).unwrap();
        assert!(ifg.pixels().iter().all(|p| (p.arg() - PI).abs() < 1e-12));
    }

    #[test]
    fn wrap_phase_principal_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_phase(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unit_coherence_ignores_noise_path() {
        let spec = SceneSpec { width: 60, height: 60, flat_height: 0.0, rough_mountain: None, lake: None, cone: None, ..SceneSpec::default() };
        let clean_spec = SceneSpec { coherence: 1.0, ..spec.clone() };
        let dem = generate_dem(&spec).unwrap();
        let a = dem_to_interferogram(&dem, &clean_spec).unwrap();
        assert!(a.pixels().iter().all(|p| *p == Complex64::new(1.0, 0.0)));
        let noisy = dem_to_interferogram(&dem, &spec).unwrap();
        assert_ne!(a, noisy);
    }

    #[test]
    fn aspect_rule_convention() {
        assert_eq!(aspect_rule(0.0, 0.0, 1.0), Aspect::Flat);
        assert_eq!(aspect_rule(2.0, 0.5, 1.0), Aspect::East);
        assert_eq!(aspect_rule(-2.0, 0.5, 1.0), Aspect::West);
        assert_eq!(aspect_rule(0.5, 2.0, 1.0), Aspect::South);
        assert_eq!(aspect_rule(0.5, -2.0, 1.0), Aspect::North);
        // Tie goes to east-west.
        assert_eq!(aspect_rule(-2.0, 2.0, 1.0), Aspect::West);
    }

    fn ramp_areas() -> Vec<TeacherArea> {
        // Areas on a flat DEM except that "slope" areas sit on a ramp region.
        Aspect::ALL
            .iter()
            .enumerate()
            .map(|(k, &class)| TeacherArea { rect: Rect::new(k * 4, 0, 4, 4), class })
            .collect()
    }

    #[test]
    fn east_ramp_is_all_east() {
        let dem = Grid::new(20, 20, (0..400).map(|i| 5.0 * (i % 20) as f64).collect(), (30.0, 50.0)).unwrap();
        // Use a synthetic magnitude where the flat area reads zero.
        let tau = teacher_threshold(&ramp_areas(), 20, 20, |r, _| if r >= 16 { 0.0 } else { 5.0 }).unwrap();
        assert_eq!(tau, 2.5);
        for r in 0..20 {
            for c in 0..20 {
                assert_eq!(aspect_rule(dem.diff_ew(r, c), dem.diff_ns(r, c), tau), Aspect::East);
            }
        }
    }

    #[test]
    fn degenerate_threshold_rejected() {
        let dem = Grid::new(20, 20, vec![3.0; 400], (30.0, 50.0)).unwrap();
        let err = ground_truth_aspect(&dem, &ramp_areas(), &vec![false; 400]).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
        let missing: Vec<_> = ramp_areas().into_iter().filter(|a| a.class != Aspect::Flat).collect();
        assert!(ground_truth_aspect(&dem, &missing, &vec![false; 400]).is_err());
    }

    #[test]
    fn slope_of_known_step() {
        let dem = Grid::new(3, 1, vec![0.0, 30.0, 60.0], (30.0, 50.0)).unwrap();
        let s = ground_truth_slope(&dem);
        assert!(s.values.iter().all(|&v| (v - 45.0).abs() < 1e-12));
        let down = Grid::new(2, 1, vec![30.0, 0.0], (30.0, 50.0)).unwrap();
        assert!((ground_truth_slope(&down).values[0] + 45.0).abs() < 1e-12);
    }

    #[test]
    fn dem_file_round_trip() {
        let dem = Grid::new(3, 2, vec![1.0, 2.5, -3.0, 100.0, 0.0, 7.25], (30.0, 50.0)).unwrap();
        let mut buf = Vec::new();
        dem.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"DEM1");
        assert_eq!(Grid::read_from(buf.as_slice()).unwrap(), dem);
    }

    #[test]
    fn reference_areas_fit_and_are_labeled_correctly() {
        let spec = SceneSpec { coherence: 1.0, ..SceneSpec::default() };
        let scene = SyntheticScene::generate(&spec, &reference_teacher_areas()).unwrap();
        for area in reference_teacher_areas() {
            let rect = area.rect;
            let mut agree = 0;
            for r in rect.row..rect.row + rect.rows {
                for c in rect.col..rect.col + rect.cols {
                    agree += usize::from(scene.truth.aspect.get(r, c) == area.class as u8);
                }
            }
            assert!(agree as f64 >= 0.99 * (rect.rows * rect.cols) as f64, "{:?}: {agree}", area.class);
        }
    }

    #[test]
    fn reference_scene_does_not_alias() {
        let spec = SceneSpec::default();
        let dem = generate_dem(&spec).unwrap();
        let limit = spec.height_ambiguity / 2.0;
        for r in 0..dem.height {
            for c in 0..dem.width {
                assert!(dem.diff_ew(r, c).abs() < limit && dem.diff_ns(r, c).abs() < limit, "({r},{c})");
            }
        }
    }
}
