//! Two-network aspect classification: one reservoir per scan direction,
//! outputs averaged per pixel.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::SliceRandom;

use crate::cxnum::ZERO;
use crate::error::{Error, Result};
use crate::raster::{self, Aspect, ComplexRaster, Direction, LabelMap, TeacherArea};
use crate::readout::{self, ReadoutModel};
use crate::reservoir::{self, ReservoirConfig, ReservoirState, ReservoirWeights, Stepper, ValueDomain};
use crate::seed;
use crate::synth;

/// Frame geometry, frames per teacher area and ridge strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspectHyper {
    pub n_w: usize,
    pub n_t: usize,
    pub per_area: usize,
    pub lambda: f64,
}

impl Default for AspectHyper {
    fn default() -> Self {
        Self {
            n_w: 5,
            n_t: 5,
            per_area: 1000,
            lambda: 1e-12,
        }
    }
}

/// One trained direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalNet {
    pub direction: Direction,
    pub config: ReservoirConfig,
    pub weights: ReservoirWeights,
    pub readout: ReadoutModel,
    /// Mean per-frame RMSE of the readout on its own training frames.
    pub fit_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct AspectRun {
    pub ew: DirectionalNet,
    pub ns: DirectionalNet,
    pub hyper: AspectHyper,
    pub learn_time: Duration,
}

impl AspectRun {
    pub fn net(&self, direction: Direction) -> &DirectionalNet {
        match direction {
            Direction::EastWest => &self.ew,
            Direction::NorthSouth => &self.ns,
        }
    }
}

/// Per-direction reservoir config: `n_in` follows the window width and the
/// seed is split off the run seed.
pub fn direction_config(base: &ReservoirConfig, n_w: usize, run_seed: u64, direction: Direction) -> ReservoirConfig {
    ReservoirConfig {
        n_in: n_w,
        seed: seed::derive(run_seed, &format!("reservoir/{}", direction.name())),
        ..base.clone()
    }
}

/// Writes `u` into `buf` in the encoding the reservoir consumes.
fn encode_into(domain: ValueDomain, u: &[Complex64], buf: &mut [Complex64]) {
    match domain {
        ValueDomain::Complex => buf.copy_from_slice(u),
        ValueDomain::RealPair => {
            let n = u.len();
            for (k, v) in u.iter().enumerate() {
                buf[k] = Complex64::new(v.re, 0.0);
                buf[n + k] = Complex64::new(v.im, 0.0);
            }
        }
    }
}

fn train_direction(
    diff: &ComplexRaster,
    areas: &[TeacherArea],
    hyper: &AspectHyper,
    base: &ReservoirConfig,
    run_seed: u64,
    direction: Direction,
) -> Result<DirectionalNet> {
    let config = direction_config(base, hyper.n_w, run_seed, direction);
    let weights = reservoir::init_weights(&config)?;
    let mut frames = raster::sample_frames(
        diff,
        areas,
        hyper.per_area,
        hyper.n_w,
        hyper.n_t,
        direction,
        seed::derive(run_seed, &format!("frames/{}", direction.name())),
    )?;
    frames.shuffle(&mut seed::rng(seed::derive(run_seed, &format!("frame-order/{}", direction.name()))));
    if frames.is_empty() {
        return Err(Error::invalid("no training frames (per_area is 0 or no teacher areas)"));
    }

    let mut stepper = Stepper::new(&weights, &config)?;
    let mut state = ReservoirState::zeros(config.n_res);
    let mut buf = vec![ZERO; config.input_width()];
    let mut states = Vec::with_capacity(frames.len());
    let mut labels = Vec::with_capacity(frames.len());
    for (frame, class) in &frames {
        for u in raster::frame_to_sequence(diff, frame)? {
            encode_into(config.value_domain, u.as_slice(), &mut buf);
            stepper.advance(&mut state, &buf)?;
        }
        states.push(state.x.clone());
        labels.push(class.index());
    }

    let x = readout::assemble_design(&states)?;
    let d = readout::build_teacher(&labels, Aspect::COUNT)?;
    let model = readout::train_design(&x, &d, hyper.lambda, config.value_domain)?;

    let mut y = vec![ZERO; Aspect::COUNT];
    let mut total = 0.0;
    for (s, &l) in states.iter().zip(&labels) {
        readout::forward_into(&model, s.as_slice(), &mut y);
        let err: f64 = y
            .iter()
            .enumerate()
            .map(|(k, v)| (v - Complex64::new(if k == l { 1.0 } else { -1.0 }, 0.0)).norm_sqr())
            .sum();
        total += (err / Aspect::COUNT as f64).sqrt();
    }
    Ok(DirectionalNet {
        direction,
        config,
        weights,
        readout: model,
        fit_rmse: total / states.len() as f64,
    })
}

/// Trains the east-west and north-south networks (concurrently).
///
/// Each network sees `per_area` frames per teacher area, shuffled across
/// areas and concatenated into one sequence without state resets; the
/// state after the last step of each frame is that frame's design row.
pub fn train_aspect(
    diff_ew: &ComplexRaster,
    diff_ns: &ComplexRaster,
    areas: &[TeacherArea],
    hyper: &AspectHyper,
    base: &ReservoirConfig,
    run_seed: u64,
) -> Result<AspectRun> {
    check_same_dims(diff_ew, diff_ns)?;
    let start = Instant::now();
    let (ew, ns) = std::thread::scope(|s| {
        let ew = s.spawn(|| train_direction(diff_ew, areas, hyper, base, run_seed, Direction::EastWest));
        let ns = train_direction(diff_ns, areas, hyper, base, run_seed, Direction::NorthSouth);
        (ew.join().expect("east-west training thread panicked"), ns)
    });
    Ok(AspectRun {
        ew: ew?,
        ns: ns?,
        hyper: *hyper,
        learn_time: start.elapsed(),
    })
}

fn check_same_dims(a: &ComplexRaster, b: &ComplexRaster) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dim(
            "aspect",
            format!("rasters are {}x{} and {}x{}", a.width(), a.height(), b.width(), b.height()),
        ));
    }
    Ok(())
}

/// Dense per-pixel outputs of one or both networks.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputField {
    pub width: usize,
    pub height: usize,
    pub n_out: usize,
    values: Vec<Complex64>,
    covered: Vec<bool>,
}

impl OutputField {
    pub fn get(&self, row: usize, col: usize) -> Option<&[Complex64]> {
        let p = row * self.width + col;
        self.covered[p].then(|| &self.values[p * self.n_out..(p + 1) * self.n_out])
    }
}

/// Scans a whole raster with one network.
pub fn scan_outputs(net: &DirectionalNet, diff: &ComplexRaster) -> Result<OutputField> {
    let (w, h) = (diff.width(), diff.height());
    let n_out = net.readout.n_out();
    let mut values = vec![ZERO; w * h * n_out];
    let mut covered = vec![false; w * h];
    let mut stepper = Stepper::new(&net.weights, &net.config)?;
    let mut state = ReservoirState::zeros(net.config.n_res);
    let mut buf = vec![ZERO; net.config.input_width()];
    let domain = net.config.value_domain;
    raster::scan_windows(diff, net.direction, net.config.n_in, |(r, c), window| {
        encode_into(domain, window, &mut buf);
        stepper.advance(&mut state, &buf)?;
        let p = r * w + c;
        readout::forward_into(&net.readout, state.x.as_slice(), &mut values[p * n_out..(p + 1) * n_out]);
        covered[p] = true;
        Ok(())
    })?;
    Ok(OutputField {
        width: w,
        height: h,
        n_out,
        values,
        covered,
    })
}

/// Runs both scans (concurrently) and averages the two complex output
/// vectors per pixel. Pixels reached by only one scan are left uncovered.
pub fn aspect_outputs(run: &AspectRun, diff_ew: &ComplexRaster, diff_ns: &ComplexRaster) -> Result<OutputField> {
    check_same_dims(diff_ew, diff_ns)?;
    let (ew, ns) = std::thread::scope(|s| {
        let ew = s.spawn(|| scan_outputs(&run.ew, diff_ew));
        let ns = scan_outputs(&run.ns, diff_ns);
        (ew.join().expect("east-west scan thread panicked"), ns)
    });
    let (mut ew, ns) = (ew?, ns?);
    for (p, cov) in ew.covered.iter_mut().enumerate() {
        *cov = *cov && ns.covered[p];
    }
    for (a, b) in ew.values.iter_mut().zip(&ns.values) {
        *a = (*a + *b) * 0.5;
    }
    Ok(ew)
}

/// Index of the output closest to `1 + 0j`; the real-valued baseline
/// compares real parts only. Ties go to the lower index.
pub fn closest_to_unity(y: &[Complex64], domain: ValueDomain) -> usize {
    let dist = |v: &Complex64| match domain {
        ValueDomain::Complex => (v - Complex64::new(1.0, 0.0)).norm(),
        ValueDomain::RealPair => (v.re - 1.0).abs(),
    };
    let mut best = 0;
    for k in 1..y.len() {
        if dist(&y[k]) < dist(&y[best]) {
            best = k;
        }
    }
    best
}

pub fn labels_from_outputs(field: &OutputField, domain: ValueDomain) -> LabelMap {
    let mut map = LabelMap::filled(field.width, field.height, LabelMap::MISSING);
    for r in 0..field.height {
        for c in 0..field.width {
            if let Some(y) = field.get(r, c) {
                map.set(r, c, closest_to_unity(y, domain) as u8);
            }
        }
    }
    map
}

/// Label map from both networks; pixels missing either output are MISSING.
pub fn classify_aspect(run: &AspectRun, diff_ew: &ComplexRaster, diff_ns: &ComplexRaster) -> Result<LabelMap> {
    let field = aspect_outputs(run, diff_ew, diff_ns)?;
    Ok(labels_from_outputs(&field, run.ew.config.value_domain))
}

/// Flat/slope threshold on phase differences, from the teacher areas.
pub fn neighbor_tau(diff_ew: &ComplexRaster, diff_ns: &ComplexRaster, areas: &[TeacherArea]) -> Result<f64> {
    check_same_dims(diff_ew, diff_ns)?;
    synth::teacher_threshold(areas, diff_ew.width(), diff_ew.height(), |r, c| {
        diff_ew.get(r, c).arg().abs().max(diff_ns.get(r, c).arg().abs())
    })
}

/// Classifies every pixel directly from its two phase differences.
pub fn neighbor_difference_classify(diff_ew: &ComplexRaster, diff_ns: &ComplexRaster, tau: f64) -> Result<LabelMap> {
    check_same_dims(diff_ew, diff_ns)?;
    let mut map = LabelMap::filled(diff_ew.width(), diff_ew.height(), LabelMap::MISSING);
    for r in 0..diff_ew.height() {
        for c in 0..diff_ew.width() {
            let a = synth::aspect_rule(diff_ew.get(r, c).arg(), diff_ns.get(r, c).arg(), tau);
            map.set(r, c, a as u8);
        }
    }
    Ok(map)
}

/// Copies `mask`ed pixels into `map` as MASKED.
pub fn apply_mask(map: &mut LabelMap, mask: &[bool]) -> Result<()> {
    if mask.len() != map.width() * map.height() {
        return Err(Error::dim("apply_mask", "mask does not match the label map"));
    }
    for r in 0..map.height() {
        for c in 0..map.width() {
            if mask[r * map.width() + c] {
                map.set(r, c, LabelMap::MASKED);
            }
        }
    }
    Ok(())
}
