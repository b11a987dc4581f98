//! East-west slope-angle regression with a delayed teacher.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::cxnum::{CMatrix, CVector, ZERO};
use crate::error::{Error, Result};
use crate::raster::ComplexRaster;
use crate::readout::{self, ReadoutModel};
use crate::reservoir::{self, ReservoirConfig, ReservoirState, ReservoirWeights, Stepper};
use crate::seed;
use crate::synth::Grid;

/// Which rows and columns to train and evaluate on.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSpec {
    /// Window height is `config.n_in`.
    pub config: ReservoirConfig,
    /// Teacher delay `d`, pixels.
    pub delay: usize,
    pub lambda: f64,
    pub train_rows: Vec<usize>,
    pub eval_rows: Vec<usize>,
    /// Half-open column range scanned on every row.
    pub col_range: (usize, usize),
}

impl Default for SlopeSpec {
    fn default() -> Self {
        Self {
            config: ReservoirConfig::slope_default(),
            delay: 5,
            lambda: 1e-12,
            train_rows: vec![100, 160, 220, 280, 300, 340],
            eval_rows: vec![300, 250],
            col_range: (10, 390),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlopeRun {
    pub config: ReservoirConfig,
    pub weights: ReservoirWeights,
    pub readout: ReadoutModel,
    pub delay: usize,
    pub train_rows: Vec<usize>,
    pub eval_rows: Vec<usize>,
    pub col_range: (usize, usize),
    pub learn_time: Duration,
}

fn check_rows(diff: &ComplexRaster, n_w: usize, rows: &[usize], col_range: (usize, usize), delay: usize) -> Result<()> {
    let (c0, c1) = col_range;
    if c0 >= c1 || c1 > diff.width() {
        return Err(Error::invalid(format!(
            "column range {c0}..{c1} invalid for width {}",
            diff.width()
        )));
    }
    if delay >= c1 - c0 {
        return Err(Error::invalid(format!(
            "delay {delay} leaves no usable steps in a row of length {}",
            c1 - c0
        )));
    }
    if n_w == 0 || n_w > diff.height() {
        return Err(Error::invalid(format!("window height {n_w} does not fit height {}", diff.height())));
    }
    let half = n_w / 2;
    for &r in rows {
        if r < half || r - half + n_w > diff.height() {
            return Err(Error::invalid(format!(
                "row {r} is outside the rows a {n_w}-pixel window can be centered on (height {})",
                diff.height()
            )));
        }
    }
    Ok(())
}

/// Drives a fresh reservoir along `row` and hands each step's state to
/// `visit` with the step index.
fn drive_row(
    stepper: &mut Stepper<'_>,
    config: &ReservoirConfig,
    diff: &ComplexRaster,
    row: usize,
    col_range: (usize, usize),
    mut visit: impl FnMut(usize, &[Complex64]) -> Result<()>,
) -> Result<()> {
    let n_w = config.n_in;
    let band = row - n_w / 2;
    let mut state = ReservoirState::zeros(config.n_res);
    let mut window = vec![ZERO; n_w];
    for (t, col) in (col_range.0..col_range.1).enumerate() {
        for (k, v) in window.iter_mut().enumerate() {
            *v = diff.get(band + k, col);
        }
        let u = config.encode_input(&CVector::from_vec(window.clone())?);
        stepper.advance(&mut state, u.as_slice())?;
        visit(t, state.x.as_slice())?;
    }
    Ok(())
}

/// Trains a one-output readout. Each training row starts from a zero state;
/// step `t` (column `c0 + t`) is paired with the true angle at column
/// `c0 + t − d`, so the first `d` steps of a row carry no teacher.
pub fn train_slope(diff_ew: &ComplexRaster, truth: &Grid, spec: &SlopeSpec, run_seed: u64) -> Result<SlopeRun> {
    if truth.width != diff_ew.width() || truth.height != diff_ew.height() {
        return Err(Error::dim("train_slope", "slope truth does not match the raster"));
    }
    if spec.train_rows.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    check_rows(diff_ew, spec.config.n_in, &spec.train_rows, spec.col_range, spec.delay)?;
    check_rows(diff_ew, spec.config.n_in, &spec.eval_rows, spec.col_range, spec.delay)?;

    let start = Instant::now();
    let config = ReservoirConfig {
        seed: seed::derive(run_seed, "reservoir/slope"),
        ..spec.config.clone()
    };
    let weights = reservoir::init_weights(&config)?;
    let mut stepper = Stepper::new(&weights, &config)?;
    let (c0, c1) = spec.col_range;
    let per_row = c1 - c0 - spec.delay;
    let n = per_row * spec.train_rows.len();
    let p = config.n_res + 1;
    let mut x = Vec::with_capacity(n * p);
    let mut d = Vec::with_capacity(n);
    for &row in &spec.train_rows {
        drive_row(&mut stepper, &config, diff_ew, row, spec.col_range, |t, state| {
            if t >= spec.delay {
                x.extend_from_slice(state);
                x.push(Complex64::new(1.0, 0.0));
                d.push(Complex64::new(truth.get(row, c0 + t - spec.delay), 0.0));
            }
            Ok(())
        })?;
    }
    let x = CMatrix::from_vec(n, p, x)?;
    let d = CMatrix::from_vec(n, 1, d)?;
    let model = readout::train_design(&x, &d, spec.lambda, config.value_domain)?;
    Ok(SlopeRun {
        config,
        weights,
        readout: model,
        delay: spec.delay,
        train_rows: spec.train_rows.clone(),
        eval_rows: spec.eval_rows.clone(),
        col_range: spec.col_range,
        learn_time: start.elapsed(),
    })
}

/// `(column, predicted degrees)` along a row; the estimate made at step `t`
/// is reported at column `c0 + t − d`.
pub fn estimate_slope(run: &SlopeRun, diff_ew: &ComplexRaster, row: usize) -> Result<Vec<(usize, f64)>> {
    check_rows(diff_ew, run.config.n_in, &[row], run.col_range, run.delay)?;
    let mut stepper = Stepper::new(&run.weights, &run.config)?;
    let mut out = Vec::with_capacity(run.col_range.1 - run.col_range.0 - run.delay);
    let mut y = [ZERO];
    drive_row(&mut stepper, &run.config, diff_ew, row, run.col_range, |t, state| {
        if t >= run.delay {
            readout::forward_into(&run.readout, state, &mut y);
            out.push((run.col_range.0 + t - run.delay, y[0].re));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Slope implied directly by the east-west phase difference of one pixel.
pub fn neighbor_slope_deg(diff_ew: &ComplexRaster, row: usize, col: usize, height_ambiguity: f64, range_spacing: f64) -> f64 {
    let dh = diff_ew.get(row, col).arg() * height_ambiguity / TAU;
    (dh / range_spacing).atan().to_degrees()
}

/// Per-column comparison of both estimators on one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEval {
    pub row: usize,
    pub seen: bool,
    /// `(col, truth, cvrc, neighbor)` in degrees.
    pub columns: Vec<(usize, f64, f64, f64)>,
}

impl SlopeEval {
    pub fn mean_abs_error(&self) -> (f64, f64) {
        let n = self.columns.len() as f64;
        let (a, b) = self
            .columns
            .iter()
            .fold((0.0, 0.0), |(a, b), &(_, t, c, nb)| (a + (c - t).abs(), b + (nb - t).abs()));
        (a / n, b / n)
    }

    pub fn rmse(&self) -> (f64, f64) {
        let n = self.columns.len() as f64;
        let (a, b) = self
            .columns
            .iter()
            .fold((0.0, 0.0), |(a, b), &(_, t, c, nb)| (a + (c - t).powi(2), b + (nb - t).powi(2)));
        ((a / n).sqrt(), (b / n).sqrt())
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("col,truth_deg,cvrc_deg,neighbor_deg,err_cvrc,err_neighbor\n");
        for &(c, t, v, nb) in &self.columns {
            out.push_str(&format!(
                "{c},{t:.6},{v:.6},{nb:.6},{:.6},{:.6}\n",
                (v - t).abs(),
                (nb - t).abs()
            ));
        }
        out
    }
}

pub fn evaluate_slope_row(
    run: &SlopeRun,
    diff_ew: &ComplexRaster,
    truth: &Grid,
    row: usize,
    height_ambiguity: f64,
) -> Result<SlopeEval> {
    let est = estimate_slope(run, diff_ew, row)?;
    let columns = est
        .into_iter()
        .map(|(c, v)| {
            (
                c,
                truth.get(row, c),
                v,
                neighbor_slope_deg(diff_ew, row, c, height_ambiguity, truth.spacing.0),
            )
        })
        .collect();
    Ok(SlopeEval {
        row,
        seen: run.train_rows.contains(&row),
        columns,
    })
}
