//! Accuracy, confusion, RMSE and label-noise counts.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::raster::{Aspect, LabelMap, Rect};

const N: usize = Aspect::COUNT;

/// Agreement between a predicted and a true label map.
#[derive(Debug, Clone, PartialEq)]
pub struct Accuracy {
    /// `100 · trace / total`.
    pub percent: f64,
    /// `confusion[truth][pred]`.
    pub confusion: [[u64; N]; N],
    pub evaluated: u64,
}

impl Accuracy {
    pub fn correct(&self) -> u64 {
        (0..N).map(|k| self.confusion[k][k]).sum()
    }
}

/// Percent agreement over pixels where the truth is a class and the
/// prediction is a class, optionally restricted to `region`.
pub fn accuracy(pred: &LabelMap, truth: &LabelMap, region: Option<Rect>) -> Result<Accuracy> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(Error::dim(
            "accuracy",
            format!(
                "prediction {}x{} vs truth {}x{}",
                pred.width(),
                pred.height(),
                truth.width(),
                truth.height()
            ),
        ));
    }
    let rect = region.unwrap_or(Rect::new(0, 0, truth.height(), truth.width()));
    if !rect.fits_in(truth.width(), truth.height()) {
        return Err(Error::invalid(format!("region {rect:?} outside the label map")));
    }
    let mut confusion = [[0u64; N]; N];
    for r in rect.row..rect.row + rect.rows {
        for c in rect.col..rect.col + rect.cols {
            if let (Some(t), Some(p)) = (truth.class_at(r, c), pred.class_at(r, c)) {
                confusion[t.index()][p.index()] += 1;
            }
        }
    }
    let evaluated: u64 = confusion.iter().flatten().sum();
    if evaluated == 0 {
        return Err(Error::invalid("no evaluable pixels (all masked or missing)"));
    }
    let correct: u64 = (0..N).map(|k| confusion[k][k]).sum();
    Ok(Accuracy {
        percent: 100.0 * correct as f64 / evaluated as f64,
        confusion,
        evaluated,
    })
}

/// Pixels whose four neighbors are all in bounds, all carry a class, and
/// none share the pixel's own class.
pub fn isolated_flips(map: &LabelMap, region: Option<Rect>) -> usize {
    let (w, h) = (map.width(), map.height());
    let rect = region.unwrap_or(Rect::new(0, 0, h, w));
    let mut count = 0;
    for r in rect.row.max(1)..(rect.row + rect.rows).min(h.saturating_sub(1)) {
        for c in rect.col.max(1)..(rect.col + rect.cols).min(w.saturating_sub(1)) {
            let Some(me) = map.class_at(r, c) else { continue };
            let neighbors = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)];
            let isolated = neighbors.iter().all(|&(i, j)| map.class_at(i, j).is_some_and(|n| n != me));
            count += usize::from(isolated);
        }
    }
    count
}

/// Per-sample `sqrt((1/K) Σ |y_k − d_k|²)` and their mean.
pub fn rmse(outputs: &[Vec<Complex64>], targets: &[Vec<Complex64>]) -> Result<(Vec<f64>, f64)> {
    if outputs.len() != targets.len() {
        return Err(Error::dim(
            "rmse",
            format!("{} outputs for {} targets", outputs.len(), targets.len()),
        ));
    }
    if outputs.is_empty() {
        return Err(Error::invalid("rmse of an empty set"));
    }
    let mut per = Vec::with_capacity(outputs.len());
    for (i, (y, d)) in outputs.iter().zip(targets).enumerate() {
        if y.len() != d.len() {
            return Err(Error::dim("rmse", format!("sample {i}: width {} vs {}", y.len(), d.len())));
        }
        if y.is_empty() {
            return Err(Error::invalid("rmse with K = 0"));
        }
        per.push(sample_rmse(y, d));
    }
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    Ok((per, mean))
}

pub(crate) fn sample_rmse(y: &[Complex64], d: &[Complex64]) -> f64 {
    let s: f64 = y.iter().zip(d).map(|(a, b)| (a - b).norm_sqr()).sum();
    (s / y.len() as f64).sqrt()
}

/// `±1` teacher vector for a class.
pub fn teacher_vector(class: Aspect) -> Vec<Complex64> {
    (0..N)
        .map(|k| Complex64::new(if k == class.index() { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

/// Accuracy figures and timings for one classifier on one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub method: String,
    pub overall: Accuracy,
    pub regions: Vec<(String, Accuracy)>,
    pub learn_time_s: f64,
    pub classify_time_s: f64,
}

impl Metrics {
    pub fn csv_header() -> &'static str {
        "method,region,accuracy_pct,evaluated,learn_time_s,classify_time_s"
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        let rows = std::iter::once(("overall", &self.overall)).chain(self.regions.iter().map(|(n, a)| (n.as_str(), a)));
        for (name, acc) in rows {
            let _ = writeln!(
                out,
                "{},{},{:.4},{},{:.6},{:.6}",
                self.method, name, acc.percent, acc.evaluated, self.learn_time_s, self.classify_time_s
            );
        }
        out
    }

    /// Plain-text report with the overall confusion matrix.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "overall accuracy: {:.2}% ({} pixels)", self.overall.percent, self.overall.evaluated);
        for (name, acc) in &self.regions {
            let _ = writeln!(out, "  {name}: {:.2}% ({} pixels)", acc.percent, acc.evaluated);
        }
        let _ = writeln!(out, "learning time: {:.3} s", self.learn_time_s);
        let _ = writeln!(out, "classification time: {:.3} s", self.classify_time_s);
        let _ = writeln!(out, "confusion (rows = truth, columns = prediction):");
        let _ = write!(out, "{:>8}", "");
        for a in Aspect::ALL {
            let _ = write!(out, "{:>8}", a.name());
        }
        let _ = writeln!(out);
        for t in Aspect::ALL {
            let _ = write!(out, "{:>8}", t.name());
            for p in Aspect::ALL {
                let _ = write!(out, "{:>8}", self.overall.confusion[t.index()][p.index()]);
            }
            let _ = writeln!(out);
        }
        out
    }
}
