//! Per-step reservoir traces along a single scan line.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::cxnum::{CVector, ZERO};
use crate::error::{Error, Result};
use crate::experiments::aspect::{AspectRun, DirectionalNet};
use crate::experiments::metrics::{sample_rmse, teacher_vector};
use crate::raster::{ComplexRaster, Direction, LabelMap};
use crate::readout;
use crate::reservoir::{ReservoirState, Stepper};

/// A scan line: a fixed row traversed by the east-west network, or a fixed
/// column traversed by the north-south network, over an optional range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSpec {
    Row { row: usize, cols: Option<(usize, usize)> },
    Col { col: usize, rows: Option<(usize, usize)> },
}

impl LineSpec {
    /// Parses `i=ROW[,j=A-B]` or `j=COL[,i=A-B]`; ranges are inclusive.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("trace spec {s:?}: expected i=ROW[,j=A-B] or j=COL[,i=A-B]"));
        let mut parts = s.split(',').map(str::trim);
        let (k0, v0) = parts.next().and_then(|p| p.split_once('=')).ok_or_else(bad)?;
        let fixed: usize = v0.trim().parse().map_err(|_| bad())?;
        let range = match parts.next() {
            None => None,
            Some(p) => {
                let (k1, v1) = p.split_once('=').ok_or_else(bad)?;
                if k1.trim() == k0.trim() {
                    return Err(bad());
                }
                let (a, b) = v1.split_once('-').ok_or_else(bad)?;
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                Some((a, b + 1))
            }
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        match k0.trim() {
            "i" => Ok(Self::Row { row: fixed, cols: range }),
            "j" => Ok(Self::Col { col: fixed, rows: range }),
            _ => Err(bad()),
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Self::Row { .. } => Direction::EastWest,
            Self::Col { .. } => Direction::NorthSouth,
        }
    }
}

/// State and output of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub row: usize,
    pub col: usize,
    pub state: Vec<Complex64>,
    pub output: Vec<Complex64>,
    /// RMSE of the output against the ±1 teacher of the pixel's label;
    /// `None` where the label is not a class.
    pub rmse: Option<f64>,
}

/// Drives the matching directional network along `line` from a zero state.
pub fn trace_reservoir(
    run: &AspectRun,
    diff_ew: &ComplexRaster,
    diff_ns: &ComplexRaster,
    labels: &LabelMap,
    line: LineSpec,
) -> Result<Vec<TraceStep>> {
    let net = run.net(line.direction());
    let diff = match line.direction() {
        Direction::EastWest => diff_ew,
        Direction::NorthSouth => diff_ns,
    };
    if labels.width() != diff.width() || labels.height() != diff.height() {
        return Err(Error::dim("trace_reservoir", "labels do not match the raster"));
    }
    trace_line(net, diff, labels, line)
}

fn trace_line(net: &DirectionalNet, diff: &ComplexRaster, labels: &LabelMap, line: LineSpec) -> Result<Vec<TraceStep>> {
    let n_w = net.config.n_in;
    let half = n_w / 2;
    let (w, h) = (diff.width(), diff.height());
    let (fixed, extent, other, range) = match line {
        LineSpec::Row { row, cols } => (row, h, w, cols),
        LineSpec::Col { col, rows } => (col, w, h, rows),
    };
    if fixed < half || fixed - half + n_w > extent {
        return Err(Error::invalid(format!(
            "line {fixed} cannot center a {n_w}-pixel window within extent {extent}"
        )));
    }
    let (a, b) = range.unwrap_or((0, other));
    if a >= b || b > other {
        return Err(Error::invalid(format!("line range {a}..{b} outside 0..{other}")));
    }
    let band = fixed - half;

    let mut stepper = Stepper::new(&net.weights, &net.config)?;
    let mut state = ReservoirState::zeros(net.config.n_res);
    let mut window = vec![ZERO; n_w];
    let mut enc = vec![ZERO; net.config.input_width()];
    let mut out = Vec::with_capacity(b - a);
    for s in a..b {
        let (row, col) = match line {
            LineSpec::Row { .. } => (fixed, s),
            LineSpec::Col { .. } => (s, fixed),
        };
        for (k, v) in window.iter_mut().enumerate() {
            *v = match line {
                LineSpec::Row { .. } => diff.get(band + k, s),
                LineSpec::Col { .. } => diff.get(s, band + k),
            };
        }
        let u = net.config.encode_input(&CVector::from_vec(window.clone())?);
        enc.copy_from_slice(u.as_slice());
        stepper.advance(&mut state, &enc)?;
        let mut y = vec![ZERO; net.readout.n_out()];
        readout::forward_into(&net.readout, state.x.as_slice(), &mut y);
        let rmse = labels.class_at(row, col).map(|c| sample_rmse(&y, &teacher_vector(c)));
        out.push(TraceStep {
            row,
            col,
            state: state.x.as_slice().to_vec(),
            output: y,
            rmse,
        });
    }
    Ok(out)
}

/// `step,row,col,rmse,abs_x0..,arg_x0..` with one line per step.
pub fn trace_csv(steps: &[TraceStep]) -> String {
    let n = steps.first().map_or(0, |s| s.state.len());
    let mut out = String::from("step,row,col,rmse");
    for i in 0..n {
        let _ = write!(out, ",abs_x{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",arg_x{i}");
    }
    out.push('\n');
    for (t, s) in steps.iter().enumerate() {
        let _ = write!(out, "{t},{},{},", s.row, s.col);
        if let Some(r) = s.rmse {
            let _ = write!(out, "{r:.6}");
        }
        for x in &s.state {
            let _ = write!(out, ",{:.6}", x.norm());
        }
        for x in &s.state {
            let _ = write!(out, ",{:.6}", x.arg());
        }
        out.push('\n');
    }
    out
}
