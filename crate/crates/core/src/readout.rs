//! Linear readout trained in closed form with Tikhonov regularization.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::cxnum::{self, CMatrix, CVector, ONE};
use crate::error::{Error, Result};
use crate::reservoir::ValueDomain;

const MODEL_MAGIC: &[u8; 4] = b"CVM1";

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    w_out: CMatrix,
    b_out: CVector,
    value_domain: ValueDomain,
}

impl ReadoutModel {
    pub fn new(w_out: CMatrix, b_out: CVector, value_domain: ValueDomain) -> Result<Self> {
        if w_out.rows() != b_out.len() {
            return Err(Error::dim(
                "ReadoutModel::new",
                format!("{} output rows but bias of length {}", w_out.rows(), b_out.len()),
            ));
        }
        Ok(Self {
            w_out,
            b_out,
            value_domain,
        })
    }

    pub fn w_out(&self) -> &CMatrix {
        &self.w_out
    }

    pub fn b_out(&self) -> &CVector {
        &self.b_out
    }

    pub fn value_domain(&self) -> ValueDomain {
        self.value_domain
    }

    pub fn n_out(&self) -> usize {
        self.w_out.rows()
    }

    pub fn n_res(&self) -> usize {
        self.w_out.cols()
    }

    /// Writes the model in the `CVM1` layout: magic, domain byte, `u32`
    /// output and reservoir sizes, then `W_out` and `b_out` as
    /// little-endian `f64` (re, im) pairs, row-major.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(13 + 16 * (self.w_out.as_slice().len() + self.b_out.len()));
        buf.extend_from_slice(MODEL_MAGIC);
        buf.push(self.value_domain.as_byte());
        buf.extend_from_slice(&(self.n_out() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.n_res() as u32).to_le_bytes());
        for v in self.w_out.as_slice().iter().chain(self.b_out.iter()) {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 13];
        r.read_exact(&mut head)?;
        if &head[..4] != MODEL_MAGIC {
            return Err(Error::format("CVM1", "bad magic"));
        }
        let domain = ValueDomain::from_byte(head[4])
            .ok_or_else(|| Error::format("CVM1", format!("unknown value domain {}", head[4])))?;
        let n_out = u32::from_le_bytes(head[5..9].try_into().unwrap()) as usize;
        let n_res = u32::from_le_bytes(head[9..13].try_into().unwrap()) as usize;
        if n_out == 0 || n_res == 0 {
            return Err(Error::format("CVM1", "zero dimension"));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let count = n_out * n_res + n_out;
        if body.len() != count * 16 {
            return Err(Error::format(
                "CVM1",
                format!("expected {} payload bytes, found {}", count * 16, body.len()),
            ));
        }
        let values: Vec<Complex64> = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let (w, b) = values.split_at(n_out * n_res);
        Self::new(
            CMatrix::from_vec(n_out, n_res, w.to_vec())?,
            CVector::from_vec(b.to_vec())?,
            domain,
        )
    }
}

/// Reservoir states paired with their desired outputs.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub states: Vec<CVector>,
    pub targets: Vec<CVector>,
    pub lambda: f64,
}

/// Stacks states as rows and appends the constant bias column.
pub fn assemble_design(states: &[CVector]) -> Result<CMatrix> {
    let width = states
        .first()
        .ok_or_else(|| Error::invalid("no states to assemble"))?
        .len();
    let mut data = Vec::with_capacity(states.len() * (width + 1));
    for (i, s) in states.iter().enumerate() {
        if s.len() != width {
            return Err(Error::dim(
                "assemble_design",
                format!("state {i} has length {}, expected {width}", s.len()),
            ));
        }
        data.extend_from_slice(s.as_slice());
        data.push(ONE);
    }
    CMatrix::from_vec(states.len(), width + 1, data)
}

/// ±1 teacher rows: `+1` at the label, `-1` elsewhere. One row per sample.
pub fn build_teacher(labels: &[usize], n_classes: usize) -> Result<CMatrix> {
    if labels.is_empty() || n_classes == 0 {
        return Err(Error::invalid("teacher needs at least one label and one class"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::invalid(format!("label {bad} out of range for {n_classes} classes")));
    }
    Ok(CMatrix::from_fn(labels.len(), n_classes, |i, k| {
        Complex64::new(if labels[i] == k { 1.0 } else { -1.0 }, 0.0)
    }))
}

fn stack_targets(targets: &[CVector]) -> Result<CMatrix> {
    let width = targets
        .first()
        .ok_or_else(|| Error::invalid("no targets"))?
        .len();
    let rows: Vec<Vec<Complex64>> = targets.iter().map(|t| t.as_slice().to_vec()).collect();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::dim("train", "targets have differing lengths"));
    }
    CMatrix::from_rows(&rows)
}

/// Closed-form ridge fit of `W_out` and `b_out`.
pub fn train(batch: &TrainingBatch, value_domain: ValueDomain) -> Result<ReadoutModel> {
    if batch.states.len() != batch.targets.len() {
        return Err(Error::dim(
            "train",
            format!("{} states but {} targets", batch.states.len(), batch.targets.len()),
        ));
    }
    let x = assemble_design(&batch.states)?;
    let d = stack_targets(&batch.targets)?;
    train_design(&x, &d, batch.lambda, value_domain)
}

/// As [`train`], on an already assembled design matrix (bias column last).
pub fn train_design(x: &CMatrix, d: &CMatrix, lambda: f64, value_domain: ValueDomain) -> Result<ReadoutModel> {
    let params = cxnum::solve_regularized(x, d, lambda)?;
    let n_out = params.rows();
    let n_res = params.cols() - 1;
    if n_res == 0 {
        return Err(Error::invalid("design matrix has only the bias column"));
    }
    let mut w = Vec::with_capacity(n_out * n_res);
    let mut b = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let row = params.row(k);
        w.extend_from_slice(&row[..n_res]);
        b.push(row[n_res]);
    }
    ReadoutModel::new(CMatrix::from_vec(n_out, n_res, w)?, CVector::from_vec(b)?, value_domain)
}

/// `y = W_out x + b_out`.
pub fn forward(model: &ReadoutModel, x: &CVector) -> Result<CVector> {
    let mut y = model.w_out.mul_vec(x)?;
    for (o, b) in y.as_mut_slice().iter_mut().zip(model.b_out.iter()) {
        *o += b;
    }
    Ok(y)
}

/// Allocation-free [`forward`] for hot loops; `out` has length `n_out`.
pub fn forward_into(model: &ReadoutModel, x: &[Complex64], out: &mut [Complex64]) {
    model.w_out.mul_vec_into(x, out);
    for (o, b) in out.iter_mut().zip(model.b_out.iter()) {
        *o += b;
    }
}
